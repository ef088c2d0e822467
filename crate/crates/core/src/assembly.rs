//! DOF numbering, element matrices and global assembly of
//! `K u = f` for the (enriched) Galerkin form
//! `(w, alpha . grad u) + (grad w, kappa grad u) = (w, f) + (w, t)_Gamma_t`.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::basis::{element_basis, element_basis_natural, EnrichmentSpec};
use crate::mesh::{Face, Mesh};
use crate::problem::ProblemSpec;
use crate::quadrature::{cached_gauss_rule, trapezoid_boundary_rule, QuadratureChoice};
use crate::sparse::CsrMatrix;
use crate::{GfemError, Point, Result};

/// Global numbering: node `i` owns standard DOF `i`; enriched nodes own the
/// DOFs after the last node, in increasing node order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    n_nodes: usize,
    enriched: Vec<Option<usize>>,
    enriched_nodes: Vec<usize>,
}

impl DofMap {
    pub fn new(n_nodes: usize, enriched_nodes: &BTreeSet<usize>) -> Self {
        let mut enriched = vec![None; n_nodes];
        let mut list = Vec::with_capacity(enriched_nodes.len());
        for (k, &n) in enriched_nodes.iter().enumerate() {
            assert!(n < n_nodes, "enriched node {n} outside the mesh");
            enriched[n] = Some(n_nodes + k);
            list.push(n);
        }
        DofMap {
            n_nodes,
            enriched,
            enriched_nodes: list,
        }
    }

    pub fn standard(&self, node: usize) -> usize {
        node
    }

    pub fn enriched(&self, node: usize) -> Option<usize> {
        self.enriched[node]
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_enriched(&self) -> usize {
        self.enriched_nodes.len()
    }

    pub fn total(&self) -> usize {
        self.n_nodes + self.enriched_nodes.len()
    }

    /// Enriched nodes in DOF order.
    pub fn enriched_nodes(&self) -> &[usize] {
        &self.enriched_nodes
    }
}

/// Dense element contribution in basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementSystem {
    pub dofs: Vec<usize>,
    /// Row-major `n x n`.
    pub k: Vec<f64>,
    pub f: Vec<f64>,
}

impl ElementSystem {
    pub fn n(&self) -> usize {
        self.dofs.len()
    }

    pub fn k_at(&self, p: usize, q: usize) -> f64 {
        self.k[p * self.n() + q]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSystem {
    pub k: CsrMatrix,
    pub f: Vec<f64>,
    pub dofs: DofMap,
}

fn element_is_enriched(mesh: &Mesh, dofs: &DofMap, e: usize) -> bool {
    mesh.element(e).iter().any(|&n| dofs.enriched(n).is_some())
}

/// Element stiffness and load with the default quadrature selection.
pub fn element_matrices(
    problem: &ProblemSpec,
    mesh: &Mesh,
    spec: &EnrichmentSpec,
    dofs: &DofMap,
    e: usize,
) -> Result<ElementSystem> {
    element_matrices_with(problem, mesh, spec, dofs, e, QuadratureChoice::default())
}

pub fn element_matrices_with(
    problem: &ProblemSpec,
    mesh: &Mesh,
    spec: &EnrichmentSpec,
    dofs: &DofMap,
    e: usize,
    choice: QuadratureChoice,
) -> Result<ElementSystem> {
    if e >= mesh.n_elements() {
        return Err(GfemError::invalid(format!("element {e} does not exist")));
    }
    let rule = choice.rule(mesh.dim(), element_is_enriched(mesh, dofs, e))?;
    let kappa = problem.kappa;
    let mut out: Option<ElementSystem> = None;
    for (xi, w) in rule.points.iter().zip(&rule.weights) {
        let (x, b, det_j) = element_basis_natural(mesh, spec, dofs, e, *xi)?;
        let n = b.values.len();
        let sys = out.get_or_insert_with(|| ElementSystem {
            dofs: b.dofs.clone(),
            k: vec![0.0; n * n],
            f: vec![0.0; n],
        });
        let wd = w * det_j;
        let a = problem.alpha.at(x);
        for p in 0..n {
            let bp = b.values[p];
            let gp = b.gradients[p];
            let row = &mut sys.k[p * n..(p + 1) * n];
            for (q, gq) in b.gradients.iter().enumerate() {
                let adv = bp * (a[0] * gq[0] + a[1] * gq[1]);
                let dif = kappa * (gp[0] * gq[0] + gp[1] * gq[1]);
                row[q] += wd * (adv + dif);
            }
            sys.f[p] += wd * bp * problem.source;
        }
    }
    let mut sys = out.expect("quadrature rules are never empty");
    for (tag, t) in &problem.neumann {
        if *t == 0.0 {
            continue;
        }
        for face in mesh.boundary_faces(*tag)?.iter().filter(|f| f.element == e) {
            for (x, w) in neumann_points(mesh, face)? {
                let b = element_basis(mesh, spec, dofs, e, x)?;
                for (p, v) in b.values.iter().enumerate() {
                    sys.f[p] += w * v * t;
                }
            }
        }
    }
    if sys.k.iter().chain(&sys.f).any(|v| !v.is_finite()) {
        return Err(GfemError::Assembly {
            element: e,
            reason: "non-finite entry in the element matrix".into(),
        });
    }
    Ok(sys)
}

/// Two-point Gauss rule on an edge, or the single boundary point in 1D.
fn neumann_points(mesh: &Mesh, face: &Face) -> Result<Vec<(Point, f64)>> {
    if face.nodes.len() == 1 {
        return Ok(vec![(mesh.node(face.nodes[0]), 1.0)]);
    }
    let (a, b) = (mesh.node(face.nodes[0]), mesh.node(face.nodes[1]));
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let rule = cached_gauss_rule(2, 1)?;
    Ok(rule
        .points
        .iter()
        .zip(&rule.weights)
        .map(|(p, w)| {
            let s = 0.5 * (p[0] + 1.0);
            ([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])], 0.5 * len * w)
        })
        .collect())
}

pub fn assemble(problem: &ProblemSpec, mesh: &Mesh, spec: &EnrichmentSpec) -> Result<GlobalSystem> {
    assemble_with(problem, mesh, spec, QuadratureChoice::default())
}

/// Element matrices are computed in parallel and summed in element order, so
/// the result does not depend on scheduling.
pub fn assemble_with(
    problem: &ProblemSpec,
    mesh: &Mesh,
    spec: &EnrichmentSpec,
    choice: QuadratureChoice,
) -> Result<GlobalSystem> {
    problem.validate()?;
    spec.validate()?;
    if let Some(&bad) = spec.enriched_nodes.iter().find(|&&n| n >= mesh.n_nodes()) {
        return Err(GfemError::invalid(format!("enriched node {bad} outside the mesh")));
    }
    let dofs = DofMap::new(mesh.n_nodes(), &spec.enriched_nodes);
    let locals: Vec<ElementSystem> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| element_matrices_with(problem, mesh, spec, &dofs, e, choice))
        .collect::<Result<_>>()?;
    let total = dofs.total();
    let mut f = vec![0.0; total];
    let mut triplets = Vec::with_capacity(locals.iter().map(|s| s.n() * s.n()).sum());
    for sys in &locals {
        let n = sys.n();
        for p in 0..n {
            f[sys.dofs[p]] += sys.f[p];
            for q in 0..n {
                triplets.push((sys.dofs[p], sys.dofs[q], sys.k[p * n + q]));
            }
        }
    }
    Ok(GlobalSystem {
        k: CsrMatrix::from_triplets(total, total, triplets),
        f,
        dofs,
    })
}

/// Dirichlet node values; a node on several tagged boundaries keeps the value
/// of the last matching entry.
pub fn dirichlet_nodes(mesh: &Mesh, problem: &ProblemSpec) -> Result<BTreeMap<usize, f64>> {
    let mut out = BTreeMap::new();
    for (tag, v) in &problem.dirichlet {
        for &n in mesh.boundary_nodes(*tag)? {
            out.insert(n, *v);
        }
    }
    Ok(out)
}

/// Adds `lambda (w, u - u_0)` on every Dirichlet face, integrated with the
/// trapezoidal rule in 2D and by point evaluation in 1D. `u_0` is taken from
/// the nodal values of [`dirichlet_nodes`], so corners shared by two tags get
/// the same value as under strong conditions.
pub fn add_penalty_terms(
    system: GlobalSystem,
    problem: &ProblemSpec,
    mesh: &Mesh,
    spec: &EnrichmentSpec,
    lambda: f64,
) -> Result<GlobalSystem> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(GfemError::invalid(format!(
            "penalty weight must be positive, got {lambda}"
        )));
    }
    let dofs = &system.dofs;
    let nodal = dirichlet_nodes(mesh, problem)?;
    let mut f = system.f.clone();
    let mut extra = Vec::new();
    let tags: BTreeSet<_> = problem.dirichlet.iter().map(|(t, _)| *t).collect();
    for tag in tags {
        for face in mesh.boundary_faces(tag)? {
            // trapezoid points are the face's end nodes, in order
            let points: Vec<(Point, f64, usize)> = match face.nodes.len() {
                1 => vec![(mesh.node(face.nodes[0]), 1.0, face.nodes[0])],
                _ => {
                    let r = trapezoid_boundary_rule(
                        mesh.node(face.nodes[0]),
                        mesh.node(face.nodes[1]),
                    )?;
                    r.points
                        .into_iter()
                        .zip(r.weights)
                        .zip(&face.nodes)
                        .map(|((x, w), &n)| (x, w, n))
                        .collect()
                }
            };
            for (x, w, node) in points {
                let u0 = nodal[&node];
                let b = element_basis(mesh, spec, dofs, face.element, x)?;
                for (p, bp) in b.values.iter().enumerate() {
                    if *bp == 0.0 {
                        continue;
                    }
                    f[b.dofs[p]] += lambda * w * bp * u0;
                    for (q, bq) in b.values.iter().enumerate() {
                        if *bq != 0.0 {
                            extra.push((b.dofs[p], b.dofs[q], lambda * w * bp * bq));
                        }
                    }
                }
            }
        }
    }
    Ok(GlobalSystem {
        k: system.k.with_added(extra),
        f,
        dofs: system.dofs,
    })
}
