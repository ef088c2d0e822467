//! Dirichlet conditions (strong or penalty), the linear solve and the
//! resulting solution field.

use std::collections::BTreeMap;
use std::sync::Arc;

pub use crate::assembly::dirichlet_nodes;
use crate::assembly::{add_penalty_terms, assemble, DofMap, GlobalSystem};
use crate::basis::{element_basis, eval_enrichment, EnrichmentFamily, EnrichmentSpec};
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;
use crate::sparse::{equilibrate, solve_direct, CsrMatrix};
use crate::{GfemError, Point, Result};

/// Pivot threshold relative to the largest equilibrated entry.
pub const PIVOT_REL: f64 = 1e-14;

/// Bound on `|R (K u - f)| / (1 + |R f|)` with `R` the row equilibration.
pub const RESIDUAL_REL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcMode {
    Strong,
    WeakPenalty(f64),
}

impl BcMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BcMode::WeakPenalty(l) if !(l > 0.0) || !l.is_finite() => Err(GfemError::invalid(
                format!("penalty weight must be positive, got {l}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Coefficients `ubar` (one per node) and `u'` (one per enriched node, in DOF
/// order) together with the space they live in.
#[derive(Debug, Clone)]
pub struct SolutionField {
    mesh: Arc<Mesh>,
    spec: EnrichmentSpec,
    dofs: DofMap,
    coefficients: Vec<f64>,
}

impl SolutionField {
    pub fn new(mesh: Arc<Mesh>, spec: EnrichmentSpec, coefficients: Vec<f64>) -> Result<Self> {
        let dofs = DofMap::new(mesh.n_nodes(), &spec.enriched_nodes);
        if coefficients.len() != dofs.total() {
            return Err(GfemError::invalid(format!(
                "expected {} coefficients, got {}",
                dofs.total(),
                coefficients.len()
            )));
        }
        if let Some(i) = coefficients.iter().position(|v| !v.is_finite()) {
            return Err(GfemError::invalid(format!("coefficient {i} is not finite")));
        }
        Ok(SolutionField {
            mesh,
            spec,
            dofs,
            coefficients,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    pub fn spec(&self) -> &EnrichmentSpec {
        &self.spec
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn ubar(&self) -> &[f64] {
        &self.coefficients[..self.dofs.n_nodes()]
    }

    pub fn uprime(&self) -> &[f64] {
        &self.coefficients[self.dofs.n_nodes()..]
    }

    /// `u'` of node `i`, zero for unenriched nodes.
    pub fn uprime_at(&self, node: usize) -> f64 {
        self.dofs
            .enriched(node)
            .map_or(0.0, |d| self.coefficients[d])
    }

    pub fn eval(&self, x: Point) -> Result<f64> {
        Ok(self.eval_with_gradient(x)?.0)
    }

    pub fn eval_with_gradient(&self, x: Point) -> Result<(f64, Point)> {
        let e = self.mesh.locate(x).ok_or_else(|| GfemError::OutOfDomain {
            x: x[0],
            y: x[1],
            what: "solution field".into(),
        })?;
        let b = element_basis(&self.mesh, &self.spec, &self.dofs, e, x)?;
        let mut u = 0.0;
        let mut g = [0.0, 0.0];
        for ((d, v), gr) in b.dofs.iter().zip(&b.values).zip(&b.gradients) {
            let c = self.coefficients[*d];
            u += c * v;
            g[0] += c * gr[0];
            g[1] += c * gr[1];
        }
        Ok((u, g))
    }

    /// `u` at every node: `ubar_i + u'_i H(x_i)`.
    pub fn nodal_values(&self) -> Result<Vec<f64>> {
        (0..self.mesh.n_nodes())
            .map(|i| match self.dofs.enriched(i) {
                None => Ok(self.coefficients[i]),
                Some(d) => {
                    let h = eval_enrichment(&self.spec, self.mesh.node(i))?.0;
                    Ok(self.coefficients[i] + self.coefficients[d] * h)
                }
            })
            .collect()
    }

    /// Values at `per_element` equally spaced reference points per axis in
    /// every element, as `(x, u)` pairs.
    pub fn sample(&self, per_element: usize) -> Result<Vec<(Point, f64)>> {
        let k = per_element.max(2);
        let ticks: Vec<f64> = (0..k).map(|i| -1.0 + 2.0 * i as f64 / (k - 1) as f64).collect();
        let mut out = Vec::new();
        for e in 0..self.mesh.n_elements() {
            let pts: Vec<Point> = match self.mesh.dim() {
                1 => ticks.iter().map(|&a| [a, 0.0]).collect(),
                _ => ticks
                    .iter()
                    .flat_map(|&b| ticks.iter().map(move |&a| [a, b]))
                    .collect(),
            };
            for xi in pts {
                let (x, b, _) = crate::basis::element_basis_natural(
                    &self.mesh, &self.spec, &self.dofs, e, xi,
                )?;
                let u: f64 = b
                    .dofs
                    .iter()
                    .zip(&b.values)
                    .map(|(d, v)| self.coefficients[*d] * v)
                    .sum();
                out.push((x, u));
            }
        }
        Ok(out)
    }
}

/// Imposes `u(x_b) = u_p` at every Dirichlet node.
///
/// Where the enrichment vanishes at `x_b` the standard row is replaced by the
/// identity and the column moved to the right-hand side. Where it does not,
/// the row becomes the constraint `ubar_b + H(x_b) u'_b = u_p` and the enriched
/// test function is combined with the standard one so that it vanishes at
/// `x_b`. `Ha` never vanishes on the boundary and is rejected.
pub fn apply_strong_bc(
    system: GlobalSystem,
    mesh: &Mesh,
    problem: &ProblemSpec,
    spec: &EnrichmentSpec,
) -> Result<GlobalSystem> {
    let fixed = dirichlet_nodes(mesh, problem)?;
    if fixed.is_empty() {
        return Ok(system);
    }
    let dofs = &system.dofs;
    if spec.family.is_ha() {
        if let Some(n) = fixed.keys().find(|&&n| dofs.enriched(n).is_some()) {
            return Err(GfemError::ModeConflict(format!(
                "strong boundary conditions need an enrichment that vanishes on the \
                 Dirichlet boundary, but Ha enriches boundary node {n}; use bc weak"
            )));
        }
    }
    let n = dofs.total();
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for (i, j, v) in system.k.triplets() {
        rows[i].insert(j, v);
    }
    let mut f = system.f.clone();

    let mut plain = Vec::new();
    for (&b, &u) in &fixed {
        let h = match dofs.enriched(b) {
            Some(e) => Some((e, eval_enrichment(spec, mesh.node(b))?.0)),
            None => None,
        };
        match h {
            Some((e, h)) if h != 0.0 => {
                let orig = std::mem::take(&mut rows[b]);
                for (&j, &v) in &orig {
                    *rows[e].entry(j).or_insert(0.0) -= h * v;
                }
                f[e] -= h * f[b];
                rows[b] = BTreeMap::from([(b, 1.0), (e, h)]);
                f[b] = u;
            }
            _ => plain.push((b, u)),
        }
    }
    let plain_set: BTreeMap<usize, f64> = plain.iter().copied().collect();
    for (i, row) in rows.iter_mut().enumerate() {
        if plain_set.contains_key(&i) {
            continue;
        }
        for (&b, &u) in &plain_set {
            if let Some(v) = row.remove(&b) {
                f[i] -= v * u;
            }
        }
    }
    for &(b, u) in &plain {
        rows[b] = BTreeMap::from([(b, 1.0)]);
        f[b] = u;
    }
    let triplets = rows
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.iter().map(move |(&j, &v)| (i, j, v)));
    Ok(GlobalSystem {
        k: CsrMatrix::from_triplets(n, n, triplets),
        f,
        dofs: system.dofs,
    })
}

/// `|R (K u - f)|_2 / (1 + |R f|_2)` with `R` the row scaling used by the
/// solver. Penalty and exponential enrichments produce entries many orders of
/// magnitude apart, so the unscaled residual is not a meaningful measure.
pub fn scaled_residual(k: &CsrMatrix, f: &[f64], u: &[f64]) -> Result<f64> {
    let (r, _) = equilibrate(k)?;
    let ku = k.mul_vec(u);
    let res: f64 = ku
        .iter()
        .zip(f)
        .zip(&r)
        .map(|((a, b), s)| (s * (a - b)).powi(2))
        .sum::<f64>()
        .sqrt();
    let fn2: f64 = f.iter().zip(&r).map(|(b, s)| (s * b).powi(2)).sum::<f64>().sqrt();
    Ok(res / (1.0 + fn2))
}

/// Solves `K u = f`.
pub fn solve_linear(system: &GlobalSystem) -> Result<Vec<f64>> {
    solve_direct(&system.k, &system.f, PIVOT_REL)
}

pub fn solve(system: &GlobalSystem, mesh: Arc<Mesh>, spec: &EnrichmentSpec) -> Result<SolutionField> {
    let u = solve_linear(system)?;
    SolutionField::new(mesh, spec.clone(), u)
}

/// Assemble, impose boundary conditions and solve.
pub fn solve_gfem(
    problem: &ProblemSpec,
    mesh: &Mesh,
    spec: &EnrichmentSpec,
    bc: BcMode,
) -> Result<SolutionField> {
    solve_gfem_shared(problem, Arc::new(mesh.clone()), spec, bc)
}

pub fn solve_gfem_shared(
    problem: &ProblemSpec,
    mesh: Arc<Mesh>,
    spec: &EnrichmentSpec,
    bc: BcMode,
) -> Result<SolutionField> {
    bc.validate()?;
    let system = assemble(problem, &mesh, spec)?;
    let system = match bc {
        BcMode::Strong => apply_strong_bc(system, &mesh, problem, spec)?,
        BcMode::WeakPenalty(lambda) => add_penalty_terms(system, problem, &mesh, spec, lambda)?,
    };
    solve(&system, mesh, spec)
}

/// Rejects strong conditions combined with `Ha` on Dirichlet nodes before any
/// assembly work is done.
pub fn check_mode(mesh: &Mesh, problem: &ProblemSpec, spec: &EnrichmentSpec, bc: BcMode) -> Result<()> {
    bc.validate()?;
    if bc == BcMode::Strong && matches!(spec.family, EnrichmentFamily::Ha) {
        let fixed = dirichlet_nodes(mesh, problem)?;
        if let Some(n) = fixed.keys().find(|n| spec.is_enriched(**n)) {
            return Err(GfemError::ModeConflict(format!(
                "Ha does not vanish on the Dirichlet boundary (node {n}); use bc weak"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{exact_1d, sign_changes};
    use crate::mesh::BoundaryTag;
    use crate::problem::{Advection, Domain};

    fn problem_1d(kappa: f64) -> ProblemSpec {
        ProblemSpec {
            domain: Domain::Interval { length: 1.0 },
            alpha: Advection::Constant([1.0, 0.0]),
            kappa,
            source: 1.0,
            dirichlet: vec![(BoundaryTag::Left, 0.0), (BoundaryTag::Right, 0.0)],
            neumann: vec![],
        }
    }

    fn mesh6() -> Mesh {
        Mesh::build_interval(1.0, 6).unwrap()
    }

    fn hb_spec(gamma: f64, nodes: &[usize]) -> EnrichmentSpec {
        EnrichmentSpec::new(EnrichmentFamily::Hb, gamma, nodes.iter().copied().collect()).unwrap()
    }

    fn samples(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn galerkin_has_exact_boundary_zeros() {
        let u = solve_gfem(&problem_1d(0.1), &mesh6(), &EnrichmentSpec::none(), BcMode::Strong).unwrap();
        assert_eq!(u.ubar()[0], 0.0);
        assert_eq!(u.ubar()[6], 0.0);
    }

    #[test]
    fn pure_diffusion_is_nodally_exact() {
        let mut p = problem_1d(1.0);
        p.alpha = Advection::Constant([0.0, 0.0]);
        let u = solve_gfem(&p, &mesh6(), &EnrichmentSpec::none(), BcMode::Strong).unwrap();
        for (i, v) in u.ubar().iter().enumerate() {
            let x = i as f64 / 6.0;
            assert!((v - x * (1.0 - x) / 2.0).abs() < 1e-14, "node {i}");
        }
    }

    #[test]
    fn no_dirichlet_tags_leave_system_unchanged() {
        let mut p = problem_1d(0.1);
        p.dirichlet.clear();
        let m = mesh6();
        let s = EnrichmentSpec::none();
        let sys = assemble(&p, &m, &s).unwrap();
        let after = apply_strong_bc(sys.clone(), &m, &p, &s).unwrap();
        assert_eq!(after, sys);
    }

    #[test]
    fn identity_system() {
        let dofs = DofMap::new(5, &Default::default());
        let mut f = vec![0.0; 5];
        f[3] = 1.0;
        let sys = GlobalSystem {
            k: CsrMatrix::identity(5),
            f: f.clone(),
            dofs,
        };
        assert_eq!(solve_linear(&sys).unwrap(), f);
    }

    #[test]
    fn galerkin_low_peclet_matches_exact() {
        let u = solve_gfem(&problem_1d(0.5), &mesh6(), &EnrichmentSpec::none(), BcMode::Strong).unwrap();
        for (i, v) in u.ubar().iter().enumerate() {
            let x = i as f64 / 6.0;
            assert!((v - exact_1d(1.0, 0.5, x).unwrap()).abs() < 1e-2);
        }
    }

    #[test]
    fn galerkin_high_peclet_oscillates() {
        let u = solve_gfem(&problem_1d(0.005), &mesh6(), &EnrichmentSpec::none(), BcMode::Strong).unwrap();
        assert!(sign_changes(u.ubar()) >= 3);
    }

    #[test]
    fn two_enriched_nodes_capture_the_layer() {
        let p = problem_1d(0.005);
        let u = solve_gfem(&p, &mesh6(), &hb_spec(200.0, &[5, 6]), BcMode::Strong).unwrap();
        for (i, v) in u.nodal_values().unwrap().iter().enumerate() {
            let x = i as f64 / 6.0;
            assert!((v - exact_1d(1.0, 0.005, x).unwrap()).abs() <= 1e-3, "node {i}");
        }
        for x in samples(200) {
            let err = (u.eval([x, 0.0]).unwrap() - exact_1d(1.0, 0.005, x).unwrap()).abs();
            assert!(err <= 1e-3, "x = {x}: {err}");
        }
    }

    #[test]
    fn full_enrichment_reproduces_exact_solution() {
        let m = mesh6();
        let spec = hb_spec(200.0, &[0, 1, 2, 3, 4, 5, 6]).without_flat_nodes(&m, 1e-12).unwrap();
        let u = solve_gfem(&problem_1d(0.005), &m, &spec, BcMode::Strong).unwrap();
        for x in samples(200) {
            let err = (u.eval([x, 0.0]).unwrap() - exact_1d(1.0, 0.005, x).unwrap()).abs();
            assert!(err <= 1e-8, "x = {x}: {err}");
        }
    }

    #[test]
    fn full_enrichment_without_pruning_is_singular() {
        let spec = hb_spec(200.0, &[0, 1, 2, 3, 4, 5, 6]);
        let err = solve_gfem(&problem_1d(0.005), &mesh6(), &spec, BcMode::Strong).unwrap_err();
        assert!(matches!(err, GfemError::SingularSystem { .. }), "{err}");
    }

    #[test]
    fn hc_weak_matches_hb_strong() {
        // Pe^h = 5 on six elements
        let kappa = 1.0 / 60.0;
        let p = problem_1d(kappa);
        let m = mesh6();
        let hb = solve_gfem(&p, &m, &hb_spec(60.0, &[5, 6]), BcMode::Strong).unwrap();
        let hc_spec = EnrichmentSpec::new(EnrichmentFamily::Hc, 60.0, [5, 6].into_iter().collect()).unwrap();
        let hc = solve_gfem(&p, &m, &hc_spec, BcMode::WeakPenalty(1e10)).unwrap();
        let xs = samples(200);
        let exact: Vec<f64> = xs.iter().map(|&x| exact_1d(1.0, kappa, x).unwrap()).collect();
        let range = exact.iter().cloned().fold(f64::MIN, f64::max) - exact.iter().cloned().fold(f64::MAX, f64::min);
        for &x in &xs {
            let d = (hb.eval([x, 0.0]).unwrap() - hc.eval([x, 0.0]).unwrap()).abs();
            assert!(d <= 0.05 * range);
        }
    }

    #[test]
    fn ha_strong_is_a_mode_conflict() {
        let spec = EnrichmentSpec::new(EnrichmentFamily::Ha, 60.0, [5, 6].into_iter().collect()).unwrap();
        let err = solve_gfem(&problem_1d(1.0 / 60.0), &mesh6(), &spec, BcMode::Strong).unwrap_err();
        assert!(matches!(err, GfemError::ModeConflict(_)));
        assert!(check_mode(&mesh6(), &problem_1d(0.1), &spec, BcMode::Strong).is_err());
    }

    #[test]
    fn penalty_mismatch_shrinks_with_lambda() {
        let spec = EnrichmentSpec::new(EnrichmentFamily::Ha, 60.0, [5, 6].into_iter().collect()).unwrap();
        let p = problem_1d(1.0 / 60.0);
        let mismatch: Vec<f64> = [1e4, 1e6, 1e8]
            .iter()
            .map(|&l| {
                let u = solve_gfem(&p, &mesh6(), &spec, BcMode::WeakPenalty(l)).unwrap();
                u.eval([1.0, 0.0]).unwrap().abs()
            })
            .collect();
        assert!(mismatch[1] <= mismatch[0] / 10.0, "{mismatch:?}");
        assert!(mismatch[2] <= mismatch[1] / 10.0, "{mismatch:?}");
    }

    #[test]
    fn strong_and_weak_agree_for_vanishing_enrichment() {
        let p = problem_1d(1.0 / 60.0);
        let s = hb_spec(60.0, &[5, 6]);
        let a = solve_gfem(&p, &mesh6(), &s, BcMode::Strong).unwrap();
        let b = solve_gfem(&p, &mesh6(), &s, BcMode::WeakPenalty(1e10)).unwrap();
        let va: Vec<f64> = samples(200).iter().map(|&x| a.eval([x, 0.0]).unwrap()).collect();
        let vb: Vec<f64> = samples(200).iter().map(|&x| b.eval([x, 0.0]).unwrap()).collect();
        let range = va.iter().cloned().fold(f64::MIN, f64::max) - va.iter().cloned().fold(f64::MAX, f64::min);
        for (x, y) in va.iter().zip(&vb) {
            assert!((x - y).abs() <= 1e-4 * range);
        }
    }

    #[test]
    fn constraint_rows_handle_nonvanishing_enrichment() {
        // Hc(0) = 1, so the inflow node is constrained through both DOFs
        let m = mesh6();
        let spec = EnrichmentSpec::new(EnrichmentFamily::Hc, 2.0, (0..7).collect()).unwrap();
        let mut p = problem_1d(1.0);
        p.dirichlet = vec![(BoundaryTag::Left, 0.25), (BoundaryTag::Right, -0.5)];
        let u = solve_gfem(&p, &m, &spec, BcMode::Strong).unwrap();
        assert!((u.eval([0.0, 0.0]).unwrap() - 0.25).abs() < 1e-12);
        assert!((u.eval([1.0, 0.0]).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn residual_is_small_for_penalised_ha() {
        let spec = EnrichmentSpec::new(EnrichmentFamily::Ha, 60.0, [5, 6].into_iter().collect()).unwrap();
        let p = problem_1d(1.0 / 60.0);
        let m = mesh6();
        let sys = add_penalty_terms(assemble(&p, &m, &spec).unwrap(), &p, &m, &spec, 1e10).unwrap();
        let u = solve_linear(&sys).unwrap();
        assert!(scaled_residual(&sys.k, &sys.f, &u).unwrap() <= RESIDUAL_REL);
    }

    #[test]
    fn field_rejects_bad_coefficients() {
        let m = Arc::new(mesh6());
        assert!(SolutionField::new(Arc::clone(&m), EnrichmentSpec::none(), vec![0.0; 6]).is_err());
        let mut c = vec![0.0; 7];
        c[2] = f64::NAN;
        assert!(SolutionField::new(m, EnrichmentSpec::none(), c).is_err());
    }
}
