//! Exact 1D solution, element Peclet numbers, error and oscillation metrics,
//! and the stabilization parameter tau implied by the enrichment.

use nalgebra::{DMatrix, DVector};

use crate::assembly::DofMap;
use crate::basis::{element_basis, element_basis_natural, hb_1d, EnrichmentSpec};
use crate::mesh::Mesh;
use crate::problem::{norm, ProblemSpec};
use crate::quadrature::QuadratureChoice;
use crate::solve_bc::SolutionField;
use crate::{GfemError, Point, Result};

/// Solution of `alpha u' - kappa u'' = 1` on `[0, 1]` with `u(0) = u(1) = 0`.
pub fn exact_1d(alpha: f64, kappa: f64, x: f64) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(GfemError::invalid("kappa must be positive"));
    }
    if !(-1e-12..=1.0 + 1e-12).contains(&x) {
        return Err(GfemError::OutOfDomain {
            x,
            y: 0.0,
            what: "unit interval".into(),
        });
    }
    let g = alpha / kappa;
    if g == 0.0 {
        return Ok(x * (1.0 - x) / (2.0 * kappa));
    }
    let ratio = if g > 0.0 {
        // (1 - e^(g x)) / (1 - e^g) = 1 - Hb(x)
        1.0 - hb_1d(g, x).0
    } else {
        (g * x).exp_m1() / g.exp_m1()
    };
    Ok((x - ratio) / alpha)
}

/// `|alpha| h / (2 kappa)`.
pub fn element_peclet(alpha: Point, h: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(GfemError::invalid("kappa must be positive"));
    }
    if !(h > 0.0) {
        return Err(GfemError::invalid("element size must be positive"));
    }
    Ok(norm(alpha) * h / (2.0 * kappa))
}

/// Differences whose magnitude is below this fraction of the data range are
/// treated as flat when counting sign changes.
pub const FLAT_DIFF_REL: f64 = 1e-12;

/// Sign alternations in successive differences of `values`.
pub fn sign_changes(values: &[f64]) -> usize {
    let (lo, hi) = min_max(values);
    let tol = FLAT_DIFF_REL * (hi - lo);
    let mut last = 0.0f64;
    let mut count = 0;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= tol {
            continue;
        }
        if last != 0.0 && d.signum() != last {
            count += 1;
        }
        last = d.signum();
    }
    count
}

pub fn total_variation(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

pub fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub l2_rel: f64,
    pub linf_nodal: f64,
    pub overshoot: f64,
    pub sign_changes: usize,
}

/// Compares `field` with `exact`. `line` lists nodes along which sign changes
/// of successive nodal differences are counted.
pub fn error_report(
    field: &SolutionField,
    exact: &dyn Fn(Point) -> f64,
    line: &[usize],
) -> Result<ErrorReport> {
    if line.is_empty() {
        return Err(GfemError::invalid("error report needs a non-empty node line"));
    }
    let mesh = field.mesh();
    let nodal = field.nodal_values()?;

    let rule = QuadratureChoice::default().rule(mesh.dim(), true)?;
    let (mut num, mut den) = (0.0, 0.0);
    for e in 0..mesh.n_elements() {
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let (x, b, det) = element_basis_natural(mesh, field.spec(), field.dofs(), e, *xi)?;
            let u: f64 = b.dofs.iter().zip(&b.values).map(|(d, v)| field.coefficients()[*d] * v).sum();
            let ue = exact(x);
            num += w * det * (u - ue).powi(2);
            den += w * det * ue * ue;
        }
    }
    let l2_rel = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };

    let linf_nodal = (0..mesh.n_nodes())
        .map(|i| (nodal[i] - exact(mesh.node(i))).abs())
        .fold(0.0, f64::max);

    let samples = field.sample(10)?;
    let u_vals: Vec<f64> = samples.iter().map(|s| s.1).chain(nodal.iter().copied()).collect();
    let ue_vals: Vec<f64> = samples
        .iter()
        .map(|s| exact(s.0))
        .chain((0..mesh.n_nodes()).map(|i| exact(mesh.node(i))))
        .collect();
    let (ulo, uhi) = min_max(&u_vals);
    let (elo, ehi) = min_max(&ue_vals);
    let overshoot = 0.0f64.max(uhi - ehi).max(elo - ulo);

    let line_vals: Vec<f64> = line
        .iter()
        .map(|&n| nodal.get(n).copied().ok_or_else(|| GfemError::invalid(format!("node {n} outside the mesh"))))
        .collect::<Result<_>>()?;
    Ok(ErrorReport {
        l2_rel,
        linf_nodal,
        overshoot,
        sign_changes: sign_changes(&line_vals),
    })
}

/// Per-element tau built from the element's enrichment functions
/// `N'_k = N_k H`: `tau(x) = N'(x) . D^-1 m` with `m_k = int N'_k` and
/// `D_kl = int N'_k alpha . grad N'_l + kappa grad N'_k . grad N'_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct TauEntry {
    pub element: usize,
    /// Factor applied to `H`; tau does not depend on it.
    pub scale: f64,
    pub m: Vec<f64>,
    pub d: Vec<Vec<f64>>,
    /// `D^-1 m`; NaN when `D` is numerically singular.
    pub coefficients: Vec<f64>,
    /// Numerical rank of `D`.
    pub rank: usize,
    /// Element average of tau.
    pub mean: f64,
}

impl TauEntry {
    pub fn n_enriched(&self) -> usize {
        self.m.len()
    }

    pub fn eval(&self, mesh: &Mesh, spec: &EnrichmentSpec, x: Point) -> Result<f64> {
        let dofs = DofMap::new(mesh.n_nodes(), &spec.enriched_nodes);
        let b = element_basis(mesh, spec, &dofs, self.element, x)?;
        let n = mesh.element(self.element).len();
        Ok(b.values[n..]
            .iter()
            .zip(&self.coefficients)
            .map(|(v, c)| self.scale * v * c)
            .sum())
    }

    /// `N'(x) m / D`, the single-function quotient; only defined for one
    /// enriched node on the element.
    pub fn eval_scalar(&self, mesh: &Mesh, spec: &EnrichmentSpec, x: Point) -> Result<f64> {
        if self.n_enriched() != 1 {
            return Err(GfemError::invalid("scalar tau needs exactly one enriched node"));
        }
        let dofs = DofMap::new(mesh.n_nodes(), &spec.enriched_nodes);
        let b = element_basis(mesh, spec, &dofs, self.element, x)?;
        let n = mesh.element(self.element).len();
        Ok(self.scale * b.values[n] * self.m[0] / self.d[0][0])
    }
}

/// `D` counts as singular when a singular value falls below this fraction of
/// the largest.
pub const TAU_RANK_REL: f64 = 1e-10;

pub fn compute_tau(
    problem: &ProblemSpec,
    mesh: &Mesh,
    spec: &EnrichmentSpec,
    e: usize,
) -> Result<TauEntry> {
    compute_tau_scaled(problem, mesh, spec, e, 1.0)
}

/// As [`compute_tau`] with `H` replaced by `scale * H`.
pub fn compute_tau_scaled(
    problem: &ProblemSpec,
    mesh: &Mesh,
    spec: &EnrichmentSpec,
    e: usize,
    scale: f64,
) -> Result<TauEntry> {
    let dofs = DofMap::new(mesh.n_nodes(), &spec.enriched_nodes);
    let n = mesh.element(e).len();
    let ne = mesh.element(e).iter().filter(|&&j| spec.is_enriched(j)).count();
    if ne == 0 {
        return Err(GfemError::invalid(format!("element {e} has no enriched node")));
    }
    let rule = QuadratureChoice::default().rule(mesh.dim(), true)?;
    let mut m = DVector::<f64>::zeros(ne);
    let mut d = DMatrix::<f64>::zeros(ne, ne);
    for (xi, w) in rule.points.iter().zip(&rule.weights) {
        let (x, b, det) = element_basis_natural(mesh, spec, &dofs, e, *xi)?;
        let wd = w * det;
        let a = problem.alpha.at(x);
        for k in 0..ne {
            let vk = scale * b.values[n + k];
            let gk = b.gradients[n + k];
            m[k] += wd * vk;
            for l in 0..ne {
                let gl = b.gradients[n + l];
                let adv = vk * scale * (a[0] * gl[0] + a[1] * gl[1]);
                let dif = problem.kappa * scale * scale * (gk[0] * gl[0] + gk[1] * gl[1]);
                d[(k, l)] += wd * (adv + dif);
            }
        }
    }
    let degenerate = |reason: String| GfemError::DegenerateEnrichment { element: e, reason };
    // D is singular when the element's enrichment functions combine into a
    // solution of the homogeneous equation; tau is then undefined (NaN).
    let svd = d.clone().svd(false, false);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) || !smax.is_finite() {
        return Err(degenerate("enrichment matrix D is zero or not finite".into()));
    }
    let rank = svd.rank(TAU_RANK_REL * smax);
    let c = match d.clone().lu().solve(&m) {
        Some(c) if rank == ne && c.iter().all(|v| v.is_finite()) => c,
        _ => DVector::from_element(ne, f64::NAN),
    };
    let mean = m.dot(&c) / mesh.element_measure(e);
    Ok(TauEntry {
        element: e,
        scale,
        m: m.iter().copied().collect(),
        d: (0..ne).map(|k| d.row(k).iter().copied().collect()).collect(),
        coefficients: c.iter().copied().collect(),
        rank,
        mean,
    })
}

/// Tau for every element that has at least one enriched node.
pub fn tau_table(problem: &ProblemSpec, mesh: &Mesh, spec: &EnrichmentSpec) -> Result<Vec<TauEntry>> {
    (0..mesh.n_elements())
        .filter(|&e| mesh.element(e).iter().any(|&j| spec.is_enriched(j)))
        .map(|e| compute_tau(problem, mesh, spec, e))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::EnrichmentFamily;
    use crate::mesh::BoundaryTag;
    use crate::problem::{Advection, Domain};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn exact_boundary_values() {
        for &k in &[0.5, 0.05, 0.005, 0.001] {
            assert!(exact_1d(1.0, k, 0.0).unwrap().abs() < 1e-15);
            assert!(exact_1d(1.0, k, 1.0).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn exact_moderate_peclet_value() {
        let e = std::f64::consts::E;
        let want = 0.5 - (1.0 - e) / (1.0 - e * e);
        let got = exact_1d(1.0, 0.5, 0.5).unwrap();
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.231059).abs() < 1e-6);
    }

    #[test]
    fn exact_thin_layer_interior() {
        let got = exact_1d(1.0, 0.005, 0.5).unwrap();
        assert!((got - 0.5).abs() < 1e-40);
        assert!(exact_1d(1.0, 1e-4, 0.99).unwrap().is_finite());
    }

    #[test]
    fn exact_rejects_bad_input() {
        assert!(exact_1d(1.0, 0.0, 0.5).is_err());
        assert!(exact_1d(1.0, 0.1, 1.5).is_err());
    }

    #[test]
    fn exact_other_signs() {
        // pure diffusion and reversed flow reduce to closed forms
        assert!((exact_1d(0.0, 0.5, 0.5).unwrap() - 0.25).abs() < 1e-15);
        let mirrored = exact_1d(-1.0, 0.1, 0.3).unwrap();
        // reversing the flow mirrors the solution in x
        assert!((mirrored - exact_1d(1.0, 0.1, 0.7).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn exact_satisfies_the_ode() {
        for &g in &[1.0, 5.0, 20.0, 60.0] {
            let kappa = 1.0 / g;
            let step = 1e-5;
            for i in 1..=20 {
                let x = i as f64 / 21.0;
                let u = |t: f64| exact_1d(1.0, kappa, t).unwrap();
                let d1 = (u(x + step) - u(x - step)) / (2.0 * step);
                let d2 = (u(x + step) - 2.0 * u(x) + u(x - step)) / (step * step);
                assert!((d1 - kappa * d2 - 1.0).abs() < 1e-3, "g={g} x={x}");
            }
        }
    }

    #[test]
    fn peclet_examples() {
        let p = element_peclet([1.0, 0.0], 1.0 / 6.0, 0.5).unwrap();
        assert!((p - 1.0 / 6.0).abs() < 1e-15);
        let p = element_peclet([1.0, 0.0], 1.0 / 6.0, 0.001).unwrap();
        assert!((p - 83.333333333).abs() < 1e-6);
        assert_eq!(element_peclet([0.0, 0.0], 0.1, 0.1).unwrap(), 0.0);
        assert!(element_peclet([1.0, 0.0], 0.1, 0.0).is_err());
    }

    #[test]
    fn sign_change_counting() {
        assert_eq!(sign_changes(&[0.0, 1.0, 2.0, 3.0]), 0);
        assert_eq!(sign_changes(&[0.0, 1.0, 0.5, 2.0, 1.0]), 3);
        // flat steps do not break or create alternations
        assert_eq!(sign_changes(&[0.0, 1.0, 1.0, 2.0]), 0);
        assert!((total_variation(&[0.0, 1.0, 0.5]) - 1.5).abs() < 1e-15);
    }

    fn problem(kappa: f64) -> ProblemSpec {
        ProblemSpec {
            domain: Domain::Interval { length: 1.0 },
            alpha: Advection::Constant([1.0, 0.0]),
            kappa,
            source: 1.0,
            dirichlet: vec![(BoundaryTag::Left, 0.0), (BoundaryTag::Right, 0.0)],
            neumann: vec![],
        }
    }

    #[test]
    fn interpolant_report_is_clean() {
        use crate::solve_bc::SolutionField;
        use std::sync::Arc;
        // a linear exact field lies in the Galerkin space
        let m = Arc::new(Mesh::build_interval(1.0, 6).unwrap());
        let c: Vec<f64> = (0..7).map(|i| 2.0 * i as f64 / 6.0 + 1.0).collect();
        let f = SolutionField::new(Arc::clone(&m), EnrichmentSpec::none(), c).unwrap();
        let line: Vec<usize> = (0..7).collect();
        let r = error_report(&f, &|x| 2.0 * x[0] + 1.0, &line).unwrap();
        assert!(r.l2_rel <= 1e-12);
        assert_eq!(r.sign_changes, 0);
        assert_eq!(r.overshoot, 0.0);
        assert!(error_report(&f, &|x| x[0], &[]).is_err());
    }

    #[test]
    fn single_enriched_node_tau() {
        // one enriched node on [0, 1]: the bubble x Hb(x)
        let m = Mesh::build_interval(1.0, 1).unwrap();
        let s = EnrichmentSpec::new(EnrichmentFamily::Hb, 20.0, [1].into_iter().collect()).unwrap();
        let t = compute_tau(&problem(0.05), &m, &s, 0).unwrap();
        assert!(t.mean > 0.0);
        for &x in &[0.1, 0.5, 0.9] {
            let a = t.eval(&m, &s, [x, 0.0]).unwrap();
            let b = t.eval_scalar(&m, &s, [x, 0.0]).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn homogeneous_enrichment_makes_d_singular() {
        // N_5 H + N_6 H = H solves alpha u' - kappa u'' = 0 on the last element
        let m = Mesh::build_interval(1.0, 6).unwrap();
        let j: BTreeSet<usize> = [5, 6].into_iter().collect();
        let s = EnrichmentSpec::new(EnrichmentFamily::Hb, 200.0, j.clone()).unwrap();
        let t = compute_tau(&problem(0.005), &m, &s, 5).unwrap();
        assert_eq!((t.n_enriched(), t.rank), (2, 1));
        assert!(t.mean.is_nan());
        // a mismatched exponent keeps the two functions independent
        let s = EnrichmentSpec::new(EnrichmentFamily::Hb, 5.0, j).unwrap();
        let t = compute_tau(&problem(0.005), &m, &s, 5).unwrap();
        assert_eq!(t.rank, 2);
        assert!(t.mean.is_finite());
    }

    #[test]
    fn unenriched_element_has_no_tau() {
        let m = Mesh::build_interval(1.0, 6).unwrap();
        let s = EnrichmentSpec::new(EnrichmentFamily::Hb, 20.0, [5, 6].into_iter().collect()).unwrap();
        assert!(compute_tau(&problem(0.05), &m, &s, 0).is_err());
        assert_eq!(tau_table(&problem(0.05), &m, &s).unwrap().len(), 2);
    }

    proptest! {
        #[test]
        fn tau_is_scale_invariant(c in prop_oneof![Just(0.1f64), Just(10.0), 0.01f64..100.0], x in 0.67f64..0.99) {
            let m = Mesh::build_interval(1.0, 6).unwrap();
            let s = EnrichmentSpec::new(EnrichmentFamily::Hb, 20.0, [5, 6].into_iter().collect()).unwrap();
            let p = problem(0.05);
            for e in [4, 5] {
                if !(m.node(m.element(e)[0])[0] <= x && x <= m.node(m.element(e)[1])[0]) {
                    continue;
                }
                let t1 = compute_tau(&p, &m, &s, e).unwrap();
                let tc = compute_tau_scaled(&p, &m, &s, e, c).unwrap();
                let a = t1.eval(&m, &s, [x, 0.0]).unwrap();
                let b = tc.eval(&m, &s, [x, 0.0]).unwrap();
                prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300));
            }
        }

        #[test]
        fn peclet_is_homogeneous(a in 0.01f64..10.0, k in 0.001f64..1.0, h in 0.01f64..1.0) {
            let p1 = element_peclet([a, 0.0], h, k).unwrap();
            let p2 = element_peclet([2.0 * a, 0.0], h, 2.0 * k).unwrap();
            prop_assert_eq!(p1, p2);
        }
    }
}
