//! Global-local march in element Peclet number: start from a Galerkin solve
//! at a low Peclet number and enrich every later solve with the previous
//! solution.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::basis::{EnrichmentFamily, EnrichmentSpec};
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;
use crate::solve_bc::{solve_gfem_shared, BcMode, SolutionField};
use crate::{GfemError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationPlan {
    pub pe_start: f64,
    pub pe_end: f64,
    pub n_steps: usize,
    /// Nodes enriched with the previous solution in steps `1..=n_steps`.
    pub enriched_nodes: BTreeSet<usize>,
}

impl ContinuationPlan {
    pub fn new(pe_start: f64, pe_end: f64, n_steps: usize, enriched_nodes: BTreeSet<usize>) -> Result<Self> {
        let plan = ContinuationPlan {
            pe_start,
            pe_end,
            n_steps,
            enriched_nodes,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pe_start > 0.0) || !self.pe_start.is_finite() || !self.pe_end.is_finite() {
            return Err(GfemError::invalid("continuation Peclet numbers must be positive and finite"));
        }
        if self.pe_end < self.pe_start {
            return Err(GfemError::invalid(format!(
                "continuation must not decrease the Peclet number ({} -> {})",
                self.pe_start, self.pe_end
            )));
        }
        if self.n_steps == 0 {
            return Err(GfemError::invalid("continuation needs at least one step"));
        }
        Ok(())
    }

    /// `Pe_i = pe_start + (pe_end - pe_start) i / N` for `i = 0..=N`.
    pub fn peclet_numbers(&self) -> Vec<f64> {
        let n = self.n_steps as f64;
        (0..=self.n_steps)
            .map(|i| self.pe_start + (self.pe_end - self.pe_start) * i as f64 / n)
            .collect()
    }
}

/// Diffusivity giving element Peclet number `pe` with velocity and mesh fixed.
pub fn kappa_for_peclet(problem: &ProblemSpec, mesh: &Mesh, pe: f64) -> Result<f64> {
    let speed = problem.max_speed();
    if !(speed > 0.0) {
        return Err(GfemError::invalid("continuation needs a non-zero advection velocity"));
    }
    Ok(speed * mesh.h_max() / (2.0 * pe))
}

#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub peclet: f64,
    pub kappa: f64,
    pub field: Arc<SolutionField>,
}

#[derive(Debug, Clone)]
pub struct ContinuationResult {
    pub steps: Vec<StepRecord>,
}

impl ContinuationResult {
    pub fn final_step(&self) -> &StepRecord {
        self.steps.last().expect("a run has at least the initial step")
    }

    pub fn final_field(&self) -> &SolutionField {
        &self.final_step().field
    }

    /// Problem solved by the last step.
    pub fn final_problem(&self, problem: &ProblemSpec) -> ProblemSpec {
        problem.with_kappa(self.final_step().kappa)
    }
}

/// Sample density used to check that every intermediate field is finite.
const FINITE_CHECK_SAMPLES: usize = 20;

pub fn run_continuation(
    problem: &ProblemSpec,
    mesh: &Mesh,
    plan: &ContinuationPlan,
    bc: BcMode,
) -> Result<ContinuationResult> {
    plan.validate()?;
    problem.validate()?;
    let mesh = Arc::new(mesh.clone());
    let mut steps: Vec<StepRecord> = Vec::with_capacity(plan.n_steps + 1);
    for (i, pe) in plan.peclet_numbers().into_iter().enumerate() {
        let wrap = |source: GfemError| GfemError::Continuation {
            step: i,
            source: Box::new(source),
        };
        let kappa = kappa_for_peclet(problem, &mesh, pe).map_err(wrap)?;
        let spec = match steps.last() {
            None => EnrichmentSpec::none(),
            Some(prev) => EnrichmentSpec {
                family: EnrichmentFamily::GlobalLocal(Arc::clone(&prev.field)),
                gamma: 0.0,
                enriched_nodes: plan.enriched_nodes.clone(),
            },
        };
        let field = solve_gfem_shared(&problem.with_kappa(kappa), Arc::clone(&mesh), &spec, bc)
            .map_err(wrap)?;
        let samples = field.sample(FINITE_CHECK_SAMPLES).map_err(wrap)?;
        if let Some((x, _)) = samples.iter().find(|s| !s.1.is_finite()) {
            return Err(wrap(GfemError::DegenerateEnrichment {
                element: mesh.locate(*x).unwrap_or(usize::MAX),
                reason: "solution is not finite".into(),
            }));
        }
        steps.push(StepRecord {
            step: i,
            peclet: pe,
            kappa,
            field: Arc::new(field),
        });
    }
    Ok(ContinuationResult { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{error_report, exact_1d};
    use crate::mesh::BoundaryTag;
    use crate::problem::{Advection, Domain};
    use crate::solve_bc::solve_gfem;
    use proptest::prelude::*;

    fn problem() -> ProblemSpec {
        ProblemSpec {
            domain: Domain::Interval { length: 1.0 },
            alpha: Advection::Constant([1.0, 0.0]),
            kappa: 1.0,
            source: 1.0,
            dirichlet: vec![(BoundaryTag::Left, 0.0), (BoundaryTag::Right, 0.0)],
            neumann: vec![],
        }
    }

    fn right_nodes(m: &Mesh) -> BTreeSet<usize> {
        m.select_enriched_nodes(&[BoundaryTag::Right]).unwrap()
    }

    #[test]
    fn history_has_initial_galerkin_step() {
        let m = Mesh::build_interval(1.0, 6).unwrap();
        let plan = ContinuationPlan::new(1.0, 3.0, 4, right_nodes(&m)).unwrap();
        let r = run_continuation(&problem(), &m, &plan, BcMode::Strong).unwrap();
        assert_eq!(r.steps.len(), 5);
        assert!(r.steps[0].field.spec().is_galerkin());
        assert!(matches!(r.steps[1].field.spec().family, EnrichmentFamily::GlobalLocal(_)));
        let g = solve_gfem(&problem().with_kappa(r.steps[0].kappa), &m, &EnrichmentSpec::none(), BcMode::Strong).unwrap();
        assert_eq!(g.coefficients(), r.steps[0].field.coefficients());
    }

    #[test]
    fn reaches_peclet_three_accurately() {
        let m = Mesh::build_interval(1.0, 6).unwrap();
        let plan = ContinuationPlan::new(1.0, 3.0, 4, right_nodes(&m)).unwrap();
        let r = run_continuation(&problem(), &m, &plan, BcMode::Strong).unwrap();
        let kappa = r.final_step().kappa;
        assert!((kappa - 1.0 / 36.0).abs() < 1e-15);
        let line: Vec<usize> = (0..7).collect();
        let rep = error_report(r.final_field(), &|x| exact_1d(1.0, kappa, x[0]).unwrap(), &line).unwrap();
        assert!(rep.l2_rel <= 0.05, "{}", rep.l2_rel);
    }

    #[test]
    fn constant_peclet_step_does_not_degrade() {
        // self-enrichment at a fixed Peclet number can only enlarge the space
        let m = Mesh::build_interval(1.0, 6).unwrap();
        let plan = ContinuationPlan::new(1.0, 1.0, 1, right_nodes(&m)).unwrap();
        let r = run_continuation(&problem(), &m, &plan, BcMode::Strong).unwrap();
        let kappa = r.final_step().kappa;
        let exact = |x: crate::Point| exact_1d(1.0, kappa, x[0]).unwrap();
        let line: Vec<usize> = (0..7).collect();
        let e0 = error_report(&r.steps[0].field, &exact, &line).unwrap();
        let e1 = error_report(&r.steps[1].field, &exact, &line).unwrap();
        assert!(e1.l2_rel <= e0.l2_rel * (1.0 + 1e-8));
    }

    #[test]
    fn invalid_plans() {
        assert!(ContinuationPlan::new(3.0, 1.0, 4, BTreeSet::new()).is_err());
        assert!(ContinuationPlan::new(1.0, 3.0, 0, BTreeSet::new()).is_err());
        assert!(ContinuationPlan::new(0.0, 3.0, 2, BTreeSet::new()).is_err());
    }

    #[test]
    fn failure_reports_step() {
        let m = Mesh::build_interval(1.0, 6).unwrap();
        // Ha-like clash is impossible here; a zero velocity makes every step fail
        let mut p = problem();
        p.alpha = Advection::Constant([0.0, 0.0]);
        let plan = ContinuationPlan::new(1.0, 2.0, 2, right_nodes(&m)).unwrap();
        let err = run_continuation(&p, &m, &plan, BcMode::Strong).unwrap_err();
        assert!(matches!(err, GfemError::Continuation { step: 0, .. }));
    }

    proptest! {
        #[test]
        fn peclet_sequence_is_uniform(start in 0.5f64..5.0, span in 0.1f64..20.0, n in 1usize..40) {
            let plan = ContinuationPlan::new(start, start + span, n, BTreeSet::new()).unwrap();
            let pe = plan.peclet_numbers();
            prop_assert_eq!(pe.len(), n + 1);
            let step = span / n as f64;
            for w in pe.windows(2) {
                prop_assert!(w[1] > w[0]);
                prop_assert!((w[1] - w[0] - step).abs() <= 1e-14 * (start + span));
            }
            prop_assert!((pe[n] - (start + span)).abs() <= 1e-14 * (start + span));
        }
    }
}
