//! Built-in runs: the 1D layer problem, the unit-square layer problem, their
//! global-local variants and the Couette thermal boundary layer.

use std::path::PathBuf;

use super::{BcKind, ContinuationConfig, EnrichmentConfig, FamilyName, OutputConfig, RunConfig, DEFAULT_STEPS};
use crate::mesh::BoundaryTag;
use crate::problem::{Advection, Domain, ProblemSpec};
use crate::{GfemError, Result};

pub const PRESET_NAMES: [&str; 5] = ["ad1d", "ad2d_square", "ad1d_gl", "ad2d_gl", "thermal_bl"];

/// Diffusivity of the `ad1d` preset (`Pe^h = 16.67` on six elements).
pub const AD1D_KAPPA: f64 = 0.005;

pub fn preset(name: &str) -> Result<RunConfig> {
    match name {
        "ad1d" => Ok(ad1d()),
        "ad2d_square" => Ok(ad2d_square()),
        "ad1d_gl" => Ok(ad1d_gl()),
        "ad2d_gl" => Ok(ad2d_gl()),
        "thermal_bl" => Ok(thermal_bl()),
        _ => Err(GfemError::invalid(format!(
            "unknown preset `{name}`; valid presets: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

fn output(name: &str, cut_lines: Vec<f64>) -> OutputConfig {
    OutputConfig {
        dir: PathBuf::from("out").join(name),
        emit_tau: false,
        cut_lines,
    }
}

fn unit_interval(kappa: f64) -> ProblemSpec {
    ProblemSpec {
        domain: Domain::Interval { length: 1.0 },
        alpha: Advection::Constant([1.0, 0.0]),
        kappa,
        source: 1.0,
        dirichlet: vec![(BoundaryTag::Left, 0.0), (BoundaryTag::Right, 0.0)],
        neumann: vec![],
    }
}

/// Unit square, unit source, `u = 0` on every edge, flow along the diagonal.
fn unit_square(kappa: f64) -> ProblemSpec {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    ProblemSpec {
        domain: Domain::Rectangle { lx: 1.0, ly: 1.0 },
        alpha: Advection::Constant([c, c]),
        kappa,
        source: 1.0,
        dirichlet: BoundaryTag::ALL.iter().map(|&t| (t, 0.0)).collect(),
        neumann: vec![],
    }
}

fn ad1d() -> RunConfig {
    RunConfig {
        name: "ad1d".into(),
        problem: unit_interval(AD1D_KAPPA),
        nx: 6,
        ny: 1,
        enrichment: EnrichmentConfig {
            family: FamilyName::Hb,
            tags: vec![BoundaryTag::Right],
            gamma: None,
            prune_flat: false,
        },
        bc: BcKind::Strong,
        lambda: super::DEFAULT_LAMBDA,
        continuation: None,
        output: output("ad1d", vec![]),
    }
}

/// `Pe^h = 35` on a 10 x 10 mesh with unit speed.
fn ad2d_square() -> RunConfig {
    RunConfig {
        name: "ad2d_square".into(),
        problem: unit_square(1.0 / 700.0),
        nx: 10,
        ny: 10,
        enrichment: EnrichmentConfig {
            family: FamilyName::Hb2,
            tags: vec![BoundaryTag::Right, BoundaryTag::Top],
            gamma: None,
            prune_flat: false,
        },
        bc: BcKind::Strong,
        lambda: super::DEFAULT_LAMBDA,
        continuation: None,
        output: output("ad2d_square", vec![0.5]),
    }
}

fn ad1d_gl() -> RunConfig {
    RunConfig {
        name: "ad1d_gl".into(),
        // the diffusivity at the final Peclet number; each step sets its own
        problem: unit_interval(1.0 / 36.0),
        nx: 6,
        ny: 1,
        enrichment: EnrichmentConfig {
            family: FamilyName::GlobalLocal,
            tags: vec![BoundaryTag::Right],
            gamma: None,
            prune_flat: false,
        },
        bc: BcKind::Strong,
        lambda: super::DEFAULT_LAMBDA,
        continuation: Some(ContinuationConfig {
            pe_start: 1.0,
            pe_end: 3.0,
            steps: DEFAULT_STEPS,
        }),
        output: output("ad1d_gl", vec![]),
    }
}

fn ad2d_gl() -> RunConfig {
    RunConfig {
        name: "ad2d_gl".into(),
        problem: unit_square(1.0 / 140.0),
        nx: 10,
        ny: 10,
        enrichment: EnrichmentConfig {
            family: FamilyName::GlobalLocal,
            tags: vec![BoundaryTag::Right, BoundaryTag::Top],
            gamma: None,
            prune_flat: false,
        },
        bc: BcKind::Weak,
        lambda: 1e6,
        continuation: Some(ContinuationConfig {
            pe_start: 1.0,
            pe_end: 7.0,
            steps: DEFAULT_STEPS,
        }),
        output: output("ad2d_gl", vec![0.5]),
    }
}

/// Couette flow between plates, hot moving top plate. `kappa = 1/700` gives
/// `Pe^h = 25` in the top row of a 14 x 14 mesh.
fn thermal_bl() -> RunConfig {
    RunConfig {
        name: "thermal_bl".into(),
        problem: ProblemSpec {
            domain: Domain::Rectangle { lx: 1.0, ly: 1.0 },
            alpha: Advection::Couette,
            kappa: 1.0 / 700.0,
            source: 0.0,
            // corners shared with the top plate take its value
            dirichlet: vec![
                (BoundaryTag::Left, 0.0),
                (BoundaryTag::Right, 0.0),
                (BoundaryTag::Bottom, 0.0),
                (BoundaryTag::Top, 1.0),
            ],
            neumann: vec![],
        },
        nx: 14,
        ny: 14,
        enrichment: EnrichmentConfig {
            family: FamilyName::Hc,
            tags: vec![BoundaryTag::Right],
            gamma: None,
            prune_flat: false,
        },
        bc: BcKind::Weak,
        lambda: 1e10,
        continuation: None,
        output: output("thermal_bl", vec![0.75]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::element_peclet;

    #[test]
    fn every_preset_validates() {
        for name in PRESET_NAMES {
            let c = preset(name).unwrap();
            c.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(c.name, name);
        }
    }

    #[test]
    fn unknown_preset_lists_names() {
        let err = preset("nope").unwrap_err().to_string();
        for name in PRESET_NAMES {
            assert!(err.contains(name));
        }
    }

    #[test]
    fn ad1d_peclet() {
        let c = preset("ad1d").unwrap();
        let pe = element_peclet([1.0, 0.0], 1.0 / 6.0, c.problem.kappa).unwrap();
        assert!((pe - 16.67).abs() < 5e-3);
    }

    #[test]
    fn thermal_top_row_peclet() {
        let c = preset("thermal_bl").unwrap();
        let pe = element_peclet(c.problem.alpha.at([0.5, 1.0]), 1.0 / 14.0, c.problem.kappa).unwrap();
        assert!((pe - 25.0).abs() < 1e-12);
    }

    #[test]
    fn square_peclet_and_penalty() {
        let c = preset("ad2d_square").unwrap();
        let pe = element_peclet(c.problem.alpha.at([0.0, 0.0]), 0.1, c.problem.kappa).unwrap();
        assert!((pe - 35.0).abs() < 1e-10);
        assert_eq!(preset("ad2d_gl").unwrap().lambda, 1e6);
    }
}
