//! Run configuration, presets, config files and output writers behind the
//! `gfem` binary.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

use std::path::PathBuf;

use crate::basis::EnrichmentFamily;
use crate::mesh::{BoundaryTag, Mesh};
use crate::problem::{Domain, ProblemSpec};
use crate::solve_bc::BcMode;
use crate::{GfemError, Result};

pub use config::{load_config, parse_config, render_config};
pub use presets::{preset, PRESET_NAMES};
pub use run::{execute, render_outputs, run, Overrides, RunOutcome};

/// Enrichment family named in a config; the global-local family is filled in
/// with the previous solution at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyName {
    None,
    Ha,
    Hb,
    Hc,
    Hb2,
    GlobalLocal,
}

impl FamilyName {
    pub const ALL: [FamilyName; 6] = [
        FamilyName::None,
        FamilyName::Ha,
        FamilyName::Hb,
        FamilyName::Hc,
        FamilyName::Hb2,
        FamilyName::GlobalLocal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyName::None => "none",
            FamilyName::Ha => "ha",
            FamilyName::Hb => "hb",
            FamilyName::Hc => "hc",
            FamilyName::Hb2 => "hb2",
            FamilyName::GlobalLocal => "global-local",
        }
    }

    /// Family for a fixed-enrichment run.
    pub fn fixed_family(self) -> Option<EnrichmentFamily> {
        match self {
            FamilyName::None => Some(EnrichmentFamily::None),
            FamilyName::Ha => Some(EnrichmentFamily::Ha),
            FamilyName::Hb => Some(EnrichmentFamily::Hb),
            FamilyName::Hc => Some(EnrichmentFamily::Hc),
            FamilyName::Hb2 => Some(EnrichmentFamily::Hb2),
            FamilyName::GlobalLocal => None,
        }
    }
}

impl std::str::FromStr for FamilyName {
    type Err = GfemError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        FamilyName::ALL
            .into_iter()
            .find(|f| f.as_str() == lower || (lower == "global_local" && *f == FamilyName::GlobalLocal))
            .ok_or_else(|| {
                GfemError::invalid(format!(
                    "unknown enrichment `{s}`; expected one of none, ha, hb, hc, hb2, global-local"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Strong,
    Weak,
}

impl std::str::FromStr for BcKind {
    type Err = GfemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "strong" => Ok(BcKind::Strong),
            "weak" | "penalty" => Ok(BcKind::Weak),
            _ => Err(GfemError::invalid(format!("unknown bc mode `{s}`; expected strong or weak"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnrichmentConfig {
    pub family: FamilyName,
    /// Boundaries whose adjacent elements have all their nodes enriched.
    pub tags: Vec<BoundaryTag>,
    /// `None` means `max |alpha| / kappa`.
    pub gamma: Option<f64>,
    /// Drop nodes whose enrichment is numerically constant over their support.
    pub prune_flat: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationConfig {
    pub pe_start: f64,
    pub pe_end: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub emit_tau: bool,
    /// Heights of horizontal cut lines sampled in 2D.
    pub cut_lines: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub problem: ProblemSpec,
    pub nx: usize,
    pub ny: usize,
    pub enrichment: EnrichmentConfig,
    pub bc: BcKind,
    pub lambda: f64,
    pub continuation: Option<ContinuationConfig>,
    pub output: OutputConfig,
}

/// Default penalty weight for weak boundary conditions.
pub const DEFAULT_LAMBDA: f64 = 1e6;

/// Default number of continuation steps.
pub const DEFAULT_STEPS: usize = 8;

/// Points written per profile.
pub const PROFILE_POINTS: usize = 200;

impl RunConfig {
    pub fn build_mesh(&self) -> Result<Mesh> {
        match self.problem.domain {
            Domain::Interval { length } => Mesh::build_interval(length, self.nx),
            Domain::Rectangle { lx, ly } => Mesh::build_quad(lx, ly, self.nx, self.ny),
        }
    }

    pub fn bc_mode(&self) -> BcMode {
        match self.bc {
            BcKind::Strong => BcMode::Strong,
            BcKind::Weak => BcMode::WeakPenalty(self.lambda),
        }
    }

    /// `max_i |alpha_i| / kappa` unless set explicitly. Hb, Hc and each
    /// factor of Hb2 vary along one axis, so the exponent is taken per axis.
    pub fn gamma(&self) -> f64 {
        self.enrichment
            .gamma
            .unwrap_or_else(|| self.problem.max_axis_speed() / self.problem.kappa)
    }

    /// Checks everything that can be checked without solving, including the
    /// strong-condition / `Ha` conflict.
    pub fn validate(&self) -> Result<()> {
        let schema = |key: &str, e: GfemError| GfemError::ConfigSchema {
            key: key.into(),
            message: match e {
                GfemError::InvalidArgument(m) => m,
                other => other.to_string(),
            },
        };
        if !(self.problem.kappa > 0.0) {
            return Err(schema("problem.kappa", GfemError::invalid("kappa must be positive")));
        }
        self.problem.validate().map_err(|e| schema("problem", e))?;
        if self.nx == 0 || (self.problem.domain.dim() == 2 && self.ny == 0) {
            return Err(schema("mesh", GfemError::invalid("mesh divisions must be positive")));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(schema("bc.lambda", GfemError::invalid("penalty weight must be positive")));
        }
        let dim = self.problem.domain.dim();
        if let Some(t) = self.enrichment.tags.iter().find(|t| dim == 1 && !t.is_1d()) {
            return Err(schema("enrichment.tags", GfemError::invalid(format!("tag `{t}` does not exist in 1D"))));
        }
        if self.enrichment.family == FamilyName::Hb2 && dim != 2 {
            return Err(schema("enrichment.family", GfemError::invalid("hb2 needs a 2D domain")));
        }
        match (&self.continuation, self.enrichment.family) {
            (None, FamilyName::GlobalLocal) => {
                return Err(schema(
                    "continuation",
                    GfemError::invalid("global-local enrichment needs a continuation section"),
                ))
            }
            (Some(_), f) if f != FamilyName::GlobalLocal => {
                return Err(schema(
                    "enrichment.family",
                    GfemError::invalid("continuation runs use the global-local family"),
                ))
            }
            (Some(c), _) => {
                crate::continuation::ContinuationPlan::new(c.pe_start, c.pe_end, c.steps, Default::default())
                    .map_err(|e| schema("continuation", e))?;
            }
            _ => {}
        }
        if let Some(family) = self.enrichment.family.fixed_family() {
            if family.is_ha() && self.bc == BcKind::Strong {
                let mesh = self.build_mesh()?;
                let j = mesh.select_enriched_nodes(&self.enrichment.tags)?;
                let spec = crate::basis::EnrichmentSpec {
                    family,
                    gamma: self.gamma(),
                    enriched_nodes: j,
                };
                crate::solve_bc::check_mode(&mesh, &self.problem, &spec, self.bc_mode())?;
            }
        }
        Ok(())
    }
}
