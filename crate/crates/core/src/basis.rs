//! Linear shape functions, enrichment functions and the enriched element
//! basis `[N_1..N_n, H N_j (j in J)]`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::assembly::DofMap;
use crate::mesh::Mesh;
use crate::quadrature::QuadratureChoice;
use crate::solve_bc::SolutionField;
use crate::{GfemError, Point, Result};

/// Largest exponent accepted before an exponential is considered overflowing.
pub const EXP_ARG_LIMIT: f64 = 700.0;

/// Slack on the reference element when deciding that a point is inside.
const NATURAL_TOL: f64 = 1e-9;

/// Standard shape functions of one element at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeEval {
    pub values: Vec<f64>,
    pub gradients: Vec<Point>,
    /// Determinant of the reference-to-physical Jacobian.
    pub det_j: f64,
}

fn segment_at(a: f64, b: f64, xi: f64) -> (f64, ShapeEval) {
    let h = b - a;
    let x = a + 0.5 * (xi + 1.0) * h;
    (
        x,
        ShapeEval {
            values: vec![0.5 * (1.0 - xi), 0.5 * (1.0 + xi)],
            gradients: vec![[-1.0 / h, 0.0], [1.0 / h, 0.0]],
            det_j: 0.5 * h,
        },
    )
}

const QUAD_CORNERS: [Point; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

fn quad_at(v: &[Point], xi: Point) -> (Point, ShapeEval) {
    let mut values = Vec::with_capacity(4);
    let mut dnat = [[0.0; 2]; 4];
    let mut x = [0.0; 2];
    let mut jac = [[0.0; 2]; 2]; // jac[i][j] = d x_i / d xi_j
    for (k, c) in QUAD_CORNERS.iter().enumerate() {
        let n = 0.25 * (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]);
        dnat[k] = [
            0.25 * c[0] * (1.0 + c[1] * xi[1]),
            0.25 * c[1] * (1.0 + c[0] * xi[0]),
        ];
        values.push(n);
        for i in 0..2 {
            x[i] += n * v[k][i];
            for j in 0..2 {
                jac[i][j] += v[k][i] * dnat[k][j];
            }
        }
    }
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    // grad N = J^{-T} dN/dxi
    let inv = [
        [jac[1][1] / det, -jac[0][1] / det],
        [-jac[1][0] / det, jac[0][0] / det],
    ];
    let gradients = dnat
        .iter()
        .map(|d| {
            [
                inv[0][0] * d[0] + inv[1][0] * d[1],
                inv[0][1] * d[0] + inv[1][1] * d[1],
            ]
        })
        .collect();
    (
        x,
        ShapeEval {
            values,
            gradients,
            det_j: det,
        },
    )
}

/// Physical point and shape functions at reference coordinates `xi`.
pub fn shape_at_natural(mesh: &Mesh, e: usize, xi: Point) -> Result<(Point, ShapeEval)> {
    let v = mesh.element_vertices(e);
    let (x, s) = match mesh.dim() {
        1 => {
            let (x, s) = segment_at(v[0][0], v[1][0], xi[0]);
            ([x, 0.0], s)
        }
        _ => quad_at(&v, xi),
    };
    if !(s.det_j > 0.0) || !s.det_j.is_finite() {
        return Err(GfemError::Assembly {
            element: e,
            reason: format!("non-positive Jacobian determinant {}", s.det_j),
        });
    }
    Ok((x, s))
}

/// Reference coordinates of physical point `x` in element `e`.
pub fn natural_coordinates(mesh: &Mesh, e: usize, x: Point) -> Result<Point> {
    let v = mesh.element_vertices(e);
    let xi = match mesh.dim() {
        1 => [2.0 * (x[0] - v[0][0]) / (v[1][0] - v[0][0]) - 1.0, 0.0],
        _ => {
            let mut xi = [0.0, 0.0];
            for _ in 0..30 {
                let (p, s) = quad_at(&v, xi);
                let r = [x[0] - p[0], x[1] - p[1]];
                // recover J from the physical gradients: dxi = J^{-1} r
                let mut jac = [[0.0; 2]; 2];
                for (k, c) in QUAD_CORNERS.iter().enumerate() {
                    let d = [
                        0.25 * c[0] * (1.0 + c[1] * xi[1]),
                        0.25 * c[1] * (1.0 + c[0] * xi[0]),
                    ];
                    for i in 0..2 {
                        for j in 0..2 {
                            jac[i][j] += v[k][i] * d[j];
                        }
                    }
                }
                let det = s.det_j;
                let dxi = [
                    (jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
                    (-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
                ];
                xi[0] += dxi[0];
                xi[1] += dxi[1];
                if dxi[0].abs().max(dxi[1].abs()) < 1e-15 {
                    break;
                }
            }
            xi
        }
    };
    let outside = xi.iter().take(mesh.dim()).any(|c| c.abs() > 1.0 + NATURAL_TOL);
    if outside || !xi[0].is_finite() || !xi[1].is_finite() {
        return Err(GfemError::OutOfDomain {
            x: x[0],
            y: x[1],
            what: format!("element {e}"),
        });
    }
    Ok([xi[0].clamp(-1.0, 1.0), xi[1].clamp(-1.0, 1.0)])
}

/// Standard linear (1D) or bilinear (2D) shape functions of element `e` at
/// physical point `x`.
pub fn shape_values(mesh: &Mesh, e: usize, x: Point) -> Result<ShapeEval> {
    let xi = natural_coordinates(mesh, e, x)?;
    Ok(shape_at_natural(mesh, e, xi)?.1)
}

/// Which enrichment function multiplies the shape functions of enriched nodes.
#[derive(Clone)]
pub enum EnrichmentFamily {
    /// No enrichment: the plain Galerkin space.
    None,
    /// `e^(gamma x)`.
    Ha,
    /// `1 - (1 - e^(gamma x)) / (1 - e^gamma)`, vanishing at `x = 1`.
    Hb,
    /// `1 - x^gamma`.
    Hc,
    /// `Hb(x) Hb(y)`.
    Hb2,
    /// A previously computed solution field.
    GlobalLocal(Arc<SolutionField>),
}

impl EnrichmentFamily {
    pub fn name(&self) -> &'static str {
        match self {
            EnrichmentFamily::None => "none",
            EnrichmentFamily::Ha => "ha",
            EnrichmentFamily::Hb => "hb",
            EnrichmentFamily::Hc => "hc",
            EnrichmentFamily::Hb2 => "hb2",
            EnrichmentFamily::GlobalLocal(_) => "global-local",
        }
    }

    /// True when the function is zero wherever it is used on `x = 1` (and
    /// `y = 1` for `Hb2`), so nodal Dirichlet values there are unaffected.
    pub fn is_ha(&self) -> bool {
        matches!(self, EnrichmentFamily::Ha)
    }
}

impl fmt::Debug for EnrichmentFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct EnrichmentSpec {
    pub family: EnrichmentFamily,
    /// `alpha / kappa`; unused by `None` and `GlobalLocal`.
    pub gamma: f64,
    pub enriched_nodes: BTreeSet<usize>,
}

impl EnrichmentSpec {
    pub fn none() -> Self {
        EnrichmentSpec {
            family: EnrichmentFamily::None,
            gamma: 0.0,
            enriched_nodes: BTreeSet::new(),
        }
    }

    pub fn new(
        family: EnrichmentFamily,
        gamma: f64,
        enriched_nodes: BTreeSet<usize>,
    ) -> Result<Self> {
        let spec = EnrichmentSpec {
            family,
            gamma,
            enriched_nodes,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.gamma;
        match self.family {
            EnrichmentFamily::None if !self.enriched_nodes.is_empty() => {
                Err(GfemError::invalid("enriched nodes given without an enrichment family"))
            }
            EnrichmentFamily::Ha if !g.is_finite() => {
                Err(GfemError::OverflowGuard(format!("gamma = {g} is not finite")))
            }
            EnrichmentFamily::Hb | EnrichmentFamily::Hb2 if !(g > 0.0) || !g.is_finite() => {
                Err(GfemError::OverflowGuard(format!(
                    "Hb is undefined for gamma = {g}; use Hc, which stays defined in the \
                     pure-diffusion limit"
                )))
            }
            EnrichmentFamily::Hc if !(g > 0.0) || !g.is_finite() => {
                Err(GfemError::invalid(format!("Hc needs a positive gamma, got {g}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_enriched(&self, node: usize) -> bool {
        self.enriched_nodes.contains(&node)
    }

    pub fn is_galerkin(&self) -> bool {
        self.enriched_nodes.is_empty()
    }

    /// Enrichment value and gradient at `x`.
    pub fn eval(&self, x: Point) -> Result<(f64, Point)> {
        eval_enrichment(self, x)
    }

    /// Copy of this spec without the nodes over whose support the enrichment
    /// is numerically flat (`|grad H| < tol` at every dense quadrature point).
    /// Flat enrichments reproduce the standard shape function and make the
    /// system singular.
    pub fn without_flat_nodes(&self, mesh: &Mesh, tol: f64) -> Result<Self> {
        let supports = mesh.node_supports();
        let rule = QuadratureChoice::default().rule(mesh.dim(), true)?;
        let mut kept = BTreeSet::new();
        for &j in &self.enriched_nodes {
            let mut max_grad = 0.0f64;
            for &e in &supports[j].elements {
                for xi in &rule.points {
                    let (x, _) = shape_at_natural(mesh, e, *xi)?;
                    let (_, g) = self.eval(x)?;
                    max_grad = max_grad.max(g[0].hypot(g[1]));
                }
            }
            if max_grad >= tol {
                kept.insert(j);
            }
        }
        Ok(EnrichmentSpec {
            family: self.family.clone(),
            gamma: self.gamma,
            enriched_nodes: kept,
        })
    }
}

/// `Hb(t)` and `dHb/dt`, written as `expm1(g (t - 1)) / expm1(-g)` so that no
/// intermediate overflows for large `g`.
pub fn hb_1d(gamma: f64, t: f64) -> (f64, f64) {
    let denom = (-gamma).exp_m1();
    let arg = gamma * (t - 1.0);
    (arg.exp_m1() / denom, gamma * arg.exp() / denom)
}

fn hc_1d(gamma: f64, t: f64) -> Result<(f64, f64)> {
    if t > 0.0 {
        let p = (gamma * t.ln()).exp();
        return Ok((1.0 - p, -gamma * p / t));
    }
    if t == 0.0 {
        return match gamma {
            g if g > 1.0 => Ok((1.0, 0.0)),
            g if g == 1.0 => Ok((1.0, -1.0)),
            _ => Err(GfemError::EnrichmentDomain(format!(
                "Hc gradient is unbounded at x = 0 for gamma = {gamma}"
            ))),
        };
    }
    if gamma.fract() == 0.0 && gamma.abs() < i32::MAX as f64 {
        let k = gamma as i32;
        let p = t.powi(k);
        return Ok((1.0 - p, -gamma * t.powi(k - 1)));
    }
    Err(GfemError::EnrichmentDomain(format!(
        "Hc with non-integer gamma = {gamma} is undefined at x = {t}"
    )))
}

pub fn eval_enrichment(spec: &EnrichmentSpec, x: Point) -> Result<(f64, Point)> {
    let g = spec.gamma;
    match &spec.family {
        EnrichmentFamily::None => Ok((0.0, [0.0, 0.0])),
        EnrichmentFamily::Ha => {
            if g * x[0] > EXP_ARG_LIMIT || !g.is_finite() {
                return Err(GfemError::OverflowGuard(format!(
                    "e^(gamma x) with gamma x = {} exceeds e^{EXP_ARG_LIMIT}; use Hb or Hc",
                    g * x[0]
                )));
            }
            let h = (g * x[0]).exp();
            Ok((h, [g * h, 0.0]))
        }
        EnrichmentFamily::Hb => {
            spec.validate()?;
            let (h, d) = hb_1d(g, x[0]);
            Ok((h, [d, 0.0]))
        }
        EnrichmentFamily::Hc => {
            spec.validate()?;
            let (h, d) = hc_1d(g, x[0])?;
            Ok((h, [d, 0.0]))
        }
        EnrichmentFamily::Hb2 => {
            spec.validate()?;
            let (hx, dx) = hb_1d(g, x[0]);
            let (hy, dy) = hb_1d(g, x[1]);
            Ok((hx * hy, [dx * hy, hx * dy]))
        }
        EnrichmentFamily::GlobalLocal(field) => {
            let (u, grad) = field.eval_with_gradient(x)?;
            if !u.is_finite() || !grad[0].is_finite() || !grad[1].is_finite() {
                return Err(GfemError::DegenerateEnrichment {
                    element: field.mesh().locate(x).unwrap_or(usize::MAX),
                    reason: format!("carrier field is not finite at ({}, {})", x[0], x[1]),
                });
            }
            Ok((u, grad))
        }
    }
}

/// Combined basis of one element at one point: standard entries for every
/// element node followed by `H N_j` for the element's enriched nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementBasis {
    pub values: Vec<f64>,
    pub gradients: Vec<Point>,
    pub dofs: Vec<usize>,
}

/// Element DOFs in basis order.
pub fn element_dofs(mesh: &Mesh, dofs: &DofMap, e: usize) -> Vec<usize> {
    let conn = mesh.element(e);
    let mut out: Vec<usize> = conn.iter().map(|&n| dofs.standard(n)).collect();
    out.extend(conn.iter().filter_map(|&n| dofs.enriched(n)));
    out
}

/// Enriched basis at reference coordinates; also returns the physical point
/// and the Jacobian determinant for quadrature.
pub fn element_basis_natural(
    mesh: &Mesh,
    spec: &EnrichmentSpec,
    dofs: &DofMap,
    e: usize,
    xi: Point,
) -> Result<(Point, ElementBasis, f64)> {
    let (x, s) = shape_at_natural(mesh, e, xi)?;
    let conn = mesh.element(e);
    let mut values = s.values.clone();
    let mut gradients = s.gradients.clone();
    let mut dof_list: Vec<usize> = conn.iter().map(|&n| dofs.standard(n)).collect();
    if conn.iter().any(|&n| dofs.enriched(n).is_some()) {
        let (h, dh) = eval_enrichment(spec, x)?;
        for (k, &n) in conn.iter().enumerate() {
            if let Some(d) = dofs.enriched(n) {
                let (nv, ng) = (s.values[k], s.gradients[k]);
                values.push(nv * h);
                gradients.push([ng[0] * h + nv * dh[0], ng[1] * h + nv * dh[1]]);
                dof_list.push(d);
            }
        }
    }
    Ok((
        x,
        ElementBasis {
            values,
            gradients,
            dofs: dof_list,
        },
        s.det_j,
    ))
}

pub fn element_basis(
    mesh: &Mesh,
    spec: &EnrichmentSpec,
    dofs: &DofMap,
    e: usize,
    x: Point,
) -> Result<ElementBasis> {
    let xi = natural_coordinates(mesh, e, x)?;
    Ok(element_basis_natural(mesh, spec, dofs, e, xi)?.1)
}

/// `u(x) = sum ubar_i N_i(x) + sum u'_j N_j(x) H(x)`.
pub fn evaluate_solution(field: &SolutionField, x: Point) -> Result<f64> {
    field.eval(x)
}
