//! Generalized finite elements for the steady advection-diffusion equation.
//!
//! The standard piecewise-linear basis is enriched, node by node, with a
//! function that carries the exponential character of an outflow boundary
//! layer. The enriched solution stays smooth at element Peclet numbers where
//! the plain Galerkin method oscillates.
//!
//! Module map:
//!
//! - [`mesh`]: structured interval and quadrilateral meshes, boundary tags,
//!   node supports and enriched-node selection.
//! - [`quadrature`]: Gauss-Legendre rules and the trapezoidal boundary rule.
//! - [`basis`]: shape functions, enrichment functions and the combined
//!   element basis; evaluation of solution fields.
//! - [`assembly`]: DOF numbering, element matrices, global assembly and
//!   penalty boundary terms.
//! - [`solve_bc`]: strong Dirichlet conditions, the direct solve and the
//!   composed GFEM driver.
//! - [`continuation`]: the global-local march in element Peclet number.
//! - [`diagnostics`]: exact 1D solution, Peclet numbers, error metrics and
//!   the stabilization parameter tau.
//! - [`cli`]: presets, config files, run orchestration and output writers.

pub mod assembly;
pub mod basis;
pub mod cli;
pub mod continuation;
pub mod diagnostics;
mod error;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod solve_bc;
pub mod sparse;

pub use error::{GfemError, Result};

/// A point in physical space. One-dimensional problems leave `y` at zero.
pub type Point = [f64; 2];

pub mod prelude {
    pub use crate::assembly::{add_penalty_terms, assemble, element_matrices, DofMap, GlobalSystem};
    pub use crate::basis::{
        element_basis, eval_enrichment, evaluate_solution, shape_values, EnrichmentFamily,
        EnrichmentSpec,
    };
    pub use crate::continuation::{run_continuation, ContinuationPlan};
    pub use crate::diagnostics::{compute_tau, element_peclet, error_report, exact_1d};
    pub use crate::mesh::{BoundaryTag, Mesh};
    pub use crate::problem::{Advection, Domain, ProblemSpec};
    pub use crate::quadrature::{gauss_rule, trapezoid_boundary_rule, QuadratureRule};
    pub use crate::solve_bc::{apply_strong_bc, solve, solve_gfem, BcMode, SolutionField};
    pub use crate::{GfemError, Point, Result};
}
