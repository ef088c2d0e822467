//! Turns a [`RunConfig`] into a solve (or continuation) and output files.

use std::path::PathBuf;
use std::sync::Arc;

use super::output::{error_csv, history_csv, profile_csv, solution_csv, tau_csv, vtk, write_all};
use super::{BcKind, ContinuationConfig, FamilyName, RunConfig, DEFAULT_STEPS, PROFILE_POINTS};
use crate::basis::EnrichmentSpec;
use crate::continuation::{run_continuation, ContinuationPlan, ContinuationResult};
use crate::diagnostics::{error_report, exact_1d, tau_table, ErrorReport, TauEntry};
use crate::mesh::{BoundaryTag, Mesh};
use crate::problem::{Advection, Domain, ProblemSpec};
use crate::solve_bc::{check_mode, solve_gfem_shared, SolutionField};
use crate::{GfemError, Point, Result};

/// Command-line adjustments applied on top of a preset or config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub kappa: Option<f64>,
    /// Element Peclet number: sets kappa, or the end of a continuation.
    pub pe_target: Option<f64>,
    /// Also switches to weak conditions unless `bc` is given.
    pub lambda: Option<f64>,
    pub bc: Option<BcKind>,
    pub enrichment: Option<FamilyName>,
    pub out: Option<PathBuf>,
    pub emit_tau: bool,
}

impl Overrides {
    pub fn apply(&self, mut c: RunConfig) -> Result<RunConfig> {
        let h = c.build_mesh()?.h_max();
        let speed = c.problem.max_speed();
        if let Some(k) = self.kappa {
            c.problem.kappa = k;
        }
        if let Some(family) = self.enrichment {
            c.enrichment.family = family;
            if family != FamilyName::None && c.enrichment.tags.is_empty() {
                c.enrichment.tags = vec![BoundaryTag::Right];
            }
            match (family, &c.continuation) {
                (FamilyName::GlobalLocal, None) => {
                    let pe = speed * h / (2.0 * c.problem.kappa);
                    c.continuation = Some(ContinuationConfig {
                        pe_start: pe.min(1.0),
                        pe_end: pe,
                        steps: DEFAULT_STEPS,
                    });
                }
                (FamilyName::GlobalLocal, Some(_)) => {}
                (_, Some(_)) => c.continuation = None,
                _ => {}
            }
        }
        if let Some(pe) = self.pe_target {
            if !(pe > 0.0) || !pe.is_finite() {
                return Err(GfemError::invalid("--pe-target must be positive"));
            }
            match &mut c.continuation {
                Some(cont) => cont.pe_end = pe,
                None => c.problem.kappa = speed * h / (2.0 * pe),
            }
        }
        if let Some(cont) = &c.continuation {
            // the reported problem carries the final diffusivity
            c.problem.kappa = speed * h / (2.0 * cont.pe_end);
        }
        if let Some(l) = self.lambda {
            c.lambda = l;
            if self.bc.is_none() {
                c.bc = BcKind::Weak;
            }
        }
        if let Some(bc) = self.bc {
            c.bc = bc;
        }
        if let Some(dir) = &self.out {
            c.output.dir = dir.clone();
        }
        c.output.emit_tau |= self.emit_tau;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: RunConfig,
    /// The problem of the final solve.
    pub problem: ProblemSpec,
    pub mesh: Arc<Mesh>,
    pub field: SolutionField,
    pub history: Option<ContinuationResult>,
    pub report: Option<ErrorReport>,
    pub tau: Vec<TauEntry>,
    pub files: Vec<PathBuf>,
}

/// The closed-form solution applies to the unit interval with a constant
/// velocity, constant source and homogeneous conditions at both ends.
pub fn exact_solution(problem: &ProblemSpec) -> Option<impl Fn(Point) -> f64 + Clone> {
    let Domain::Interval { length } = problem.domain else {
        return None;
    };
    let Advection::Constant(a) = problem.alpha else {
        return None;
    };
    let homogeneous = problem.dirichlet_value(BoundaryTag::Left) == Some(0.0)
        && problem.dirichlet_value(BoundaryTag::Right) == Some(0.0)
        && problem.neumann.is_empty();
    if length != 1.0 || !homogeneous {
        return None;
    }
    let (alpha, kappa, f) = (a[0], problem.kappa, problem.source);
    Some(move |x: Point| f * exact_1d(alpha, kappa, x[0].clamp(0.0, 1.0)).unwrap_or(f64::NAN))
}

/// Solves without touching the file system.
pub fn execute(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let mesh = Arc::new(config.build_mesh()?);
    let j = mesh.select_enriched_nodes(&config.enrichment.tags)?;
    let bc = config.bc_mode();
    let (problem, field, history) = match &config.continuation {
        Some(c) => {
            let plan = ContinuationPlan::new(c.pe_start, c.pe_end, c.steps, j)?;
            let result = run_continuation(&config.problem, &mesh, &plan, bc)?;
            let problem = result.final_problem(&config.problem);
            (problem, result.final_field().clone(), Some(result))
        }
        None => {
            let family = config
                .enrichment
                .family
                .fixed_family()
                .expect("validated: fixed runs have a fixed family");
            let nodes = if matches!(family, crate::basis::EnrichmentFamily::None) { Default::default() } else { j };
            let mut spec = EnrichmentSpec::new(family, config.gamma(), nodes)?;
            if config.enrichment.prune_flat {
                spec = spec.without_flat_nodes(&mesh, 1e-12)?;
            }
            check_mode(&mesh, &config.problem, &spec, bc)?;
            let field = solve_gfem_shared(&config.problem, Arc::clone(&mesh), &spec, bc)?;
            (config.problem.clone(), field, None)
        }
    };
    let report = match exact_solution(&problem) {
        Some(exact) => {
            let line: Vec<usize> = (0..mesh.n_nodes()).collect();
            Some(error_report(&field, &exact, &line)?)
        }
        None => None,
    };
    let tau = if config.output.emit_tau && !field.spec().is_galerkin() {
        tau_table(&problem, &mesh, field.spec())?
    } else {
        Vec::new()
    };
    Ok(RunOutcome {
        config: config.clone(),
        problem,
        mesh,
        field,
        history,
        report,
        tau,
        files: Vec::new(),
    })
}

/// Renders every output file of `outcome` as `(file name, contents)`.
pub fn render_outputs(outcome: &RunOutcome) -> Result<Vec<(String, String)>> {
    let field = &outcome.field;
    let mut files = vec![("solution.csv".to_string(), solution_csv(field)?)];
    let exact = exact_solution(&outcome.problem);
    let exact_ref = exact.as_ref().map(|f| f as &dyn Fn(Point) -> f64);
    files.push((
        "profile.csv".into(),
        profile_csv(field, &outcome.config.output.cut_lines, PROFILE_POINTS, exact_ref)?,
    ));
    if outcome.mesh.dim() == 2 {
        files.push(("field.vtk".into(), vtk(field)?));
    }
    if let Some(r) = &outcome.report {
        files.push(("error.csv".into(), error_csv(r)));
    }
    if outcome.config.output.emit_tau {
        files.push(("tau.csv".into(), tau_csv(&outcome.tau)));
    }
    if let Some(h) = &outcome.history {
        let base = outcome.problem.clone();
        let l2 = move |kappa: f64, f: &SolutionField| -> Result<f64> {
            let exact = exact_solution(&base.with_kappa(kappa)).expect("checked below");
            let line: Vec<usize> = (0..f.mesh().n_nodes()).collect();
            Ok(error_report(f, &exact, &line)?.l2_rel)
        };
        let csv = if exact.is_some() {
            history_csv(h, Some(&l2))?
        } else {
            history_csv(h, None)?
        };
        files.push(("history.csv".into(), csv));
    }
    Ok(files)
}

/// Solves and writes all outputs into `config.output.dir`.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let mut outcome = execute(config)?;
    let files = render_outputs(&outcome)?;
    outcome.files = write_all(&config.output.dir, &files)?;
    Ok(outcome)
}
