//! Gauss-Legendre rules on the reference segment `[-1, 1]` and the reference
//! square `[-1, 1]^2`, plus the two-point trapezoidal rule used for penalty
//! boundary integrals.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::{GfemError, Point, Result};

pub const MAX_GAUSS_POINTS: usize = 100;

/// Point counts per element class. Elements with at least one enriched node
/// use the dense rule; 2D counts are per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureChoice {
    pub enriched_1d: usize,
    pub enriched_2d_per_axis: usize,
    pub standard_per_axis: usize,
}

impl Default for QuadratureChoice {
    fn default() -> Self {
        QuadratureChoice {
            enriched_1d: 100,
            enriched_2d_per_axis: 30,
            standard_per_axis: 2,
        }
    }
}

impl QuadratureChoice {
    pub fn per_axis(&self, dim: usize, enriched: bool) -> usize {
        match (dim, enriched) {
            (_, false) => self.standard_per_axis,
            (1, true) => self.enriched_1d,
            (_, true) => self.enriched_2d_per_axis,
        }
    }

    pub fn rule(&self, dim: usize, enriched: bool) -> Result<Arc<QuadratureRule>> {
        cached_gauss_rule(self.per_axis(dim, enriched), dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Reference coordinates for Gauss rules, physical coordinates for the
    /// trapezoidal boundary rule. 1D rules leave the second entry at zero.
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrate over `[a, b]` with a 1D reference rule.
    pub fn integrate_interval(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        half * self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(mid + half * p[0]))
            .sum::<f64>()
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// sorted ascending. Roots come from Newton iteration on the three-term
/// recurrence, started from Chebyshev-like guesses.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || n > MAX_GAUSS_POINTS {
        return Err(GfemError::invalid(format!(
            "gauss rule needs 1..={MAX_GAUSS_POINTS} points, got {n}"
        )));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for k in 0..m {
        let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = -x;
        nodes[n - 1 - k] = x;
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// `P_n(x)` and `P_n'(x)`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `n`-point rule in 1D, `n x n` tensor rule in 2D.
pub fn gauss_rule(n: usize, dim: usize) -> Result<QuadratureRule> {
    let (x, w) = gauss_legendre(n)?;
    match dim {
        1 => Ok(QuadratureRule {
            points: x.iter().map(|&p| [p, 0.0]).collect(),
            weights: w,
        }),
        2 => {
            let mut points = Vec::with_capacity(n * n);
            let mut weights = Vec::with_capacity(n * n);
            for (&y, &wy) in x.iter().zip(&w) {
                for (&xi, &wx) in x.iter().zip(&w) {
                    points.push([xi, y]);
                    weights.push(wx * wy);
                }
            }
            Ok(QuadratureRule { points, weights })
        }
        _ => Err(GfemError::invalid(format!("dimension must be 1 or 2, got {dim}"))),
    }
}

/// Shared, lazily built copy of `gauss_rule(n, dim)`.
pub fn cached_gauss_rule(n: usize, dim: usize) -> Result<Arc<QuadratureRule>> {
    static CACHE: OnceLock<Mutex<BTreeMap<(usize, usize), Arc<QuadratureRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(rule) = cache.lock().expect("quadrature cache poisoned").get(&(n, dim)) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(gauss_rule(n, dim)?);
    cache
        .lock()
        .expect("quadrature cache poisoned")
        .insert((n, dim), Arc::clone(&rule));
    Ok(rule)
}

/// Two-point trapezoidal rule on the segment `a -> b`: the endpoints, each
/// weighted by half the segment length.
pub fn trapezoid_boundary_rule(a: Point, b: Point) -> Result<QuadratureRule> {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    if !(len > 0.0) {
        return Err(GfemError::invalid("degenerate boundary segment"));
    }
    Ok(QuadratureRule {
        points: vec![a, b],
        weights: vec![0.5 * len, 0.5 * len],
    })
}
