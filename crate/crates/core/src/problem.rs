//! Problem data for `alpha . grad u - div(kappa grad u) = f` with Dirichlet
//! and Neumann parts of the boundary.

use crate::mesh::BoundaryTag;
use crate::{GfemError, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { length: f64 },
    Rectangle { lx: f64, ly: f64 },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }
}

/// Advection velocity field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Advection {
    Constant(Point),
    /// Fully developed flow between plates with the top plate moving at unit
    /// speed: `alpha(x, y) = (y, 0)`.
    Couette,
}

impl Advection {
    pub fn at(&self, x: Point) -> Point {
        match *self {
            Advection::Constant(a) => a,
            Advection::Couette => [x[1], 0.0],
        }
    }

    /// Analytic velocity gradient `d alpha_i / d x_j`.
    pub fn jacobian(&self, _x: Point) -> [[f64; 2]; 2] {
        match *self {
            Advection::Constant(_) => [[0.0; 2]; 2],
            // d(y)/dx = 0, d(y)/dy = 1, second component identically zero
            Advection::Couette => [[0.0, 1.0], [0.0, 0.0]],
        }
    }

    pub fn divergence(&self, x: Point) -> f64 {
        let j = self.jacobian(x);
        j[0][0] + j[1][1]
    }

    /// Largest speed over the domain.
    pub fn max_speed(&self, domain: &Domain) -> f64 {
        match (*self, domain) {
            (Advection::Constant(a), _) => norm(a),
            (Advection::Couette, Domain::Rectangle { ly, .. }) => ly.abs(),
            (Advection::Couette, Domain::Interval { .. }) => 0.0,
        }
    }

    /// Largest single velocity component over the domain; the exponent of a
    /// layer along one axis.
    pub fn max_axis_speed(&self, domain: &Domain) -> f64 {
        match (*self, domain) {
            (Advection::Constant(a), _) => a[0].abs().max(a[1].abs()),
            (Advection::Couette, _) => self.max_speed(domain),
        }
    }
}

pub(crate) fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub domain: Domain,
    pub alpha: Advection,
    /// Isotropic diffusivity.
    pub kappa: f64,
    /// Constant volumetric source.
    pub source: f64,
    /// Prescribed values `u = u_p`. A node shared by two tags takes the value
    /// of the later entry.
    pub dirichlet: Vec<(BoundaryTag, f64)>,
    /// Prescribed diffusive fluxes `kappa grad u . n = t_p`.
    pub neumann: Vec<(BoundaryTag, f64)>,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(GfemError::invalid("kappa must be positive"));
        }
        if !self.source.is_finite() {
            return Err(GfemError::invalid("source must be finite"));
        }
        match self.domain {
            Domain::Interval { length } if !(length > 0.0) => {
                return Err(GfemError::invalid("interval length must be positive"))
            }
            Domain::Rectangle { lx, ly } if !(lx > 0.0 && ly > 0.0) => {
                return Err(GfemError::invalid("rectangle sides must be positive"))
            }
            _ => {}
        }
        if let Advection::Constant(a) = self.alpha {
            if !a[0].is_finite() || !a[1].is_finite() {
                return Err(GfemError::invalid("advection velocity must be finite"));
            }
            if self.domain.dim() == 1 && a[1] != 0.0 {
                return Err(GfemError::invalid("1D advection must have a zero y component"));
            }
        }
        if self.alpha == Advection::Couette && self.domain.dim() != 2 {
            return Err(GfemError::invalid("couette profile needs a rectangular domain"));
        }
        for (tag, _) in &self.dirichlet {
            if self.neumann.iter().any(|(t, _)| t == tag) {
                return Err(GfemError::invalid(format!(
                    "boundary `{tag}` is both Dirichlet and Neumann"
                )));
            }
        }
        for (tag, _) in self.dirichlet.iter().chain(&self.neumann) {
            if self.domain.dim() == 1 && !tag.is_1d() {
                return Err(GfemError::invalid(format!("tag `{tag}` does not exist in 1D")));
            }
        }
        // constant fields are trivially incompressible; named profiles are
        // checked through their analytic gradient
        let probe = [0.5, 0.5];
        if self.alpha.divergence(probe).abs() > 0.0 {
            return Err(GfemError::invalid("advection field must be divergence-free"));
        }
        Ok(())
    }

    pub fn max_speed(&self) -> f64 {
        self.alpha.max_speed(&self.domain)
    }

    pub fn max_axis_speed(&self) -> f64 {
        self.alpha.max_axis_speed(&self.domain)
    }

    /// Same problem with a different diffusivity.
    pub fn with_kappa(&self, kappa: f64) -> Self {
        ProblemSpec {
            kappa,
            ..self.clone()
        }
    }

    /// Dirichlet value for a tag, if prescribed.
    pub fn dirichlet_value(&self, tag: BoundaryTag) -> Option<f64> {
        self.dirichlet.iter().rev().find(|(t, _)| *t == tag).map(|(_, v)| *v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_1d() -> ProblemSpec {
        ProblemSpec {
            domain: Domain::Interval { length: 1.0 },
            alpha: Advection::Constant([1.0, 0.0]),
            kappa: 0.1,
            source: 1.0,
            dirichlet: vec![(BoundaryTag::Left, 0.0), (BoundaryTag::Right, 0.0)],
            neumann: vec![],
        }
    }

    #[test]
    fn rejects_non_positive_kappa() {
        let p = unit_1d().with_kappa(-1.0);
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("kappa must be positive"), "{err}");
    }

    #[test]
    fn rejects_overlapping_boundary_parts() {
        let mut p = unit_1d();
        p.neumann.push((BoundaryTag::Right, 0.0));
        assert!(p.validate().is_err());
    }

    #[test]
    fn couette_is_divergence_free() {
        let c = Advection::Couette;
        for &x in &[[0.0, 0.0], [0.3, 0.9], [1.0, 1.0]] {
            assert_eq!(c.divergence(x), 0.0);
        }
        assert_eq!(c.at([0.2, 0.7]), [0.7, 0.0]);
    }
}
