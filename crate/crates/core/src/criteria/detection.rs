//! Recovering a symmetric 2-tensor from its action on concentrated
//! Hamiltonian fields.
//!
//! The test field is `Z_ε = ♯_ω dλ_ε` for the anisotropic bump
//! `λ_ε(x, y) = b((x − x₀)/ε) b(y − y₀)`. As `ε → 0`, `ε ∫ T(Z_ε, Z_ε) μ`
//! converges to a one-dimensional integral of `T₂₂` along `x = x₀`, with an
//! `O(ε²)` error.

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::fields::MetricField;
use crate::geometry::SymTensorField;

/// Minimum bump width in grid spacings.
pub const MIN_WIDTH_CELLS: f64 = 8.0;

/// Smooth bump supported in `(−½, ½)` with `b(0) = 1`.
pub fn bump(t: f64) -> f64 {
    let s = 1.0 - 4.0 * t * t;
    if s <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / s).exp()
    }
}

pub fn bump_derivative(t: f64) -> f64 {
    let s = 1.0 - 4.0 * t * t;
    if s <= 0.0 {
        0.0
    } else {
        bump(t) * (-8.0 * t / (s * s))
    }
}

/// Bump centred on grid node `center = (i, j)` with horizontal width `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: (usize, usize),
    pub eps: f64,
}

impl BumpSpec {
    fn validate(&self, g: &MetricField) -> Result<(f64, f64)> {
        let grid = g.grid();
        let min = MIN_WIDTH_CELLS * grid.spacing();
        if !(self.eps >= min) {
            return Err(GeoError::EpsTooSmall { eps: self.eps, min });
        }
        if self.eps > 1.0 {
            return Err(GeoError::Config(format!("bump width {} exceeds 1", self.eps)));
        }
        if self.center.0 >= grid.n() || self.center.1 >= grid.n() {
            return Err(GeoError::Config(format!("bump centre {:?} outside the grid", self.center)));
        }
        Ok((grid.coord(self.center.0), grid.coord(self.center.1)))
    }
}

/// Quadrature nodes per unit of bump coordinate. The bump is flat to all
/// orders at the edge of its support, so the trapezoid rule converges
/// quickly, but a coarse grid column through a narrow bump would not
/// resolve it; sampling happens on these nodes instead.
pub const QUADRATURE_NODES: usize = 256;

/// Interior trapezoid nodes on `(−½, ½)`; the endpoint samples vanish.
fn bump_nodes() -> Vec<f64> {
    (1..QUADRATURE_NODES).map(|m| -0.5 + m as f64 / QUADRATURE_NODES as f64).collect()
}

/// `ε ∫ T(Z_ε, Z_ε) μ` with `Z_ε = ♯_ω dλ_ε`.
///
/// `dλ_ε` is evaluated in closed form and `T`, `g` are extended off the
/// grid by trigonometric interpolation, so the integral is resolved even
/// when the bump spans only a few cells.
pub fn detection_integral(t: &SymTensorField, spec: &BumpSpec, g: &MetricField) -> Result<f64> {
    if t.grid() != g.grid() {
        return Err(GeoError::GridMismatch { left: t.grid().n(), right: g.grid().n() });
    }
    let (x0, y0) = spec.validate(g)?;
    let grid = g.grid();
    let eps = spec.eps;
    let nodes = bump_nodes();
    let xs: Vec<f64> = nodes.iter().map(|u| x0 + eps * u).collect();
    let ys: Vec<f64> = nodes.iter().map(|v| y0 + v).collect();
    let at = |values: &[f64]| grid.interpolate(values, &xs, &ys);
    let (t11, t12, t22) = (at(t.t11()), at(t.t12()), at(t.t22()));
    let (g11, g12, g22) = (at(g.g11()), at(g.g12()), at(g.g22()));
    let m = nodes.len();
    let mut sum = 0.0;
    for (q, &v) in nodes.iter().enumerate() {
        let (bv, dbv) = (bump(v), bump_derivative(v));
        for (p, &u) in nodes.iter().enumerate() {
            let k = q * m + p;
            let lx = bump_derivative(u) * bv / eps;
            let ly = bump(u) * dbv;
            let det = g11[k] * g22[k] - g12[k] * g12[k];
            if !(det > 0.0) {
                return Err(GeoError::NotPositiveDefinite { i: spec.center.0, j: spec.center.1 });
            }
            // ♯_ω dλ = (λ_y, −λ_x)/√g and μ = √g dx dy.
            sum += (t11[k] * ly * ly - 2.0 * t12[k] * lx * ly + t22[k] * lx * lx) / det.sqrt();
        }
    }
    let cell = (eps / QUADRATURE_NODES as f64) * (1.0 / QUADRATURE_NODES as f64);
    Ok(eps * sum * cell)
}

/// Number of intervals in the 1D quadrature of `∫ b′²`.
const FINE_INTERVALS: usize = 20_000;

/// `∫ b′(u)² du`, by a fine trapezoid rule.
pub fn bump_derivative_energy() -> f64 {
    let h = 1.0 / FINE_INTERVALS as f64;
    (1..FINE_INTERVALS).map(|k| bump_derivative(-0.5 + k as f64 * h).powi(2)).sum::<f64>() * h
}

/// `∫ b(u)² du`, same rule as [`bump_derivative_energy`].
pub fn bump_energy() -> f64 {
    let h = 1.0 / FINE_INTERVALS as f64;
    (1..FINE_INTERVALS).map(|k| bump(-0.5 + k as f64 * h).powi(2)).sum::<f64>() * h
}

/// Limit of [`detection_integral`] as `ε → 0`:
/// `∫ b′(u)² du · ∫ b(v − y₀)² T₂₂(x₀, v) / √g(x₀, v) dv`.
pub fn limit_target(t: &SymTensorField, spec: &BumpSpec, g: &MetricField) -> Result<f64> {
    let (x0, y0) = spec.validate(g)?;
    let grid = g.grid();
    let h = 1.0 / FINE_INTERVALS as f64;
    let vs: Vec<f64> = (1..FINE_INTERVALS).map(|k| -0.5 + k as f64 * h).collect();
    let ys: Vec<f64> = vs.iter().map(|v| y0 + v).collect();
    let at = |values: &[f64]| grid.interpolate(values, &[x0], &ys);
    let (t22, g11, g12, g22) = (at(t.t22()), at(g.g11()), at(g.g12()), at(g.g22()));
    let column: f64 = vs
        .iter()
        .enumerate()
        .map(|(k, &v)| bump(v).powi(2) * t22[k] / (g11[k] * g22[k] - g12[k] * g12[k]).sqrt())
        .sum::<f64>()
        * h;
    Ok(bump_derivative_energy() * column)
}
