//! Exterior calculus on the periodic grid.
//!
//! `d` uses the grid's partial derivatives directly. The codifferentials
//! are the exact adjoints of the discrete `d` for the quadrature inner
//! products, so `⟨d f, φ⟩ = ⟨f, δ φ⟩` holds to round-off for any metric.
//! Both discrete partials are skew-symmetric matrices, which is what makes
//! the adjoint take the familiar divergence form below.

use crate::error::{GeoError, Result};
use crate::fields::{Components, MetricField, OneFormField, ScalarField, TwoFormField, VectorField};
use crate::grid::GridSpec;

/// Exterior derivative of a function, `d f = ∂_x f dx + ∂_y f dy`.
pub fn d0(f: &ScalarField) -> OneFormField {
    let grid = *f.grid();
    OneFormField::from_vecs(grid, grid.diff_x(f.values()), grid.diff_y(f.values()))
}

/// Exterior derivative of a 1-form, `d φ = (∂_x φ₂ − ∂_y φ₁) dx∧dy`.
pub fn d1(phi: &OneFormField) -> TwoFormField {
    let grid = *phi.grid();
    let a = grid.diff_x(phi.comp_y());
    let b = grid.diff_y(phi.comp_x());
    TwoFormField::from_vec(grid, a.iter().zip(&b).map(|(p, q)| p - q).collect())
}

pub fn star0(f: &ScalarField, g: &MetricField) -> TwoFormField {
    g.check_grid(f.grid());
    TwoFormField::from_vec(*f.grid(), f.weighted(g.sqrt_det()).into_values())
}

/// Hodge star on 1-forms, defined by `β ∧ ∗η = g(β, η) μ`.
pub fn star1(phi: &OneFormField, g: &MetricField) -> OneFormField {
    g.check_grid(phi.grid());
    let (up1, up2) = raise(phi, g);
    let s = g.sqrt_det();
    let x = (0..s.len()).map(|k| -s[k] * up2[k]).collect();
    let y = (0..s.len()).map(|k| s[k] * up1[k]).collect();
    OneFormField::from_vecs(*phi.grid(), x, y)
}

pub fn star2(alpha: &TwoFormField, g: &MetricField) -> ScalarField {
    g.check_grid(alpha.grid());
    let v = alpha.density().iter().zip(g.sqrt_det()).map(|(a, s)| a / s).collect();
    ScalarField::from_vec(*alpha.grid(), v)
}

fn raise(phi: &OneFormField, g: &MetricField) -> (Vec<f64>, Vec<f64>) {
    let (p, q) = (phi.comp_x(), phi.comp_y());
    let (a, b, c) = (g.inv11(), g.inv12(), g.inv22());
    let up1 = (0..p.len()).map(|k| a[k] * p[k] + b[k] * q[k]).collect();
    let up2 = (0..p.len()).map(|k| b[k] * p[k] + c[k] * q[k]).collect();
    (up1, up2)
}

fn lower(v: &VectorField, g: &MetricField) -> (Vec<f64>, Vec<f64>) {
    let (p, q) = (v.comp_x(), v.comp_y());
    let (a, b, c) = (g.g11(), g.g12(), g.g22());
    let lo1 = (0..p.len()).map(|k| a[k] * p[k] + b[k] * q[k]).collect();
    let lo2 = (0..p.len()).map(|k| b[k] * p[k] + c[k] * q[k]).collect();
    (lo1, lo2)
}

/// Codifferential on 1-forms: `δφ = −(1/√g) ∂_i(√g g^{ij} φ_j)`.
pub fn delta1(phi: &OneFormField, g: &MetricField) -> ScalarField {
    g.check_grid(phi.grid());
    let grid = *phi.grid();
    let (up1, up2) = raise(phi, g);
    let s = g.sqrt_det();
    let f1: Vec<f64> = (0..s.len()).map(|k| s[k] * up1[k]).collect();
    let f2: Vec<f64> = (0..s.len()).map(|k| s[k] * up2[k]).collect();
    let a = grid.diff_x(&f1);
    let b = grid.diff_y(&f2);
    ScalarField::from_vec(grid, (0..s.len()).map(|k| -(a[k] + b[k]) / s[k]).collect())
}

/// Codifferential on 2-forms: with `s = ∗α`, `δα = ♭(∂_y s ∂_x − ∂_x s ∂_y) / √g`.
pub fn delta2(alpha: &TwoFormField, g: &MetricField) -> OneFormField {
    g.check_grid(alpha.grid());
    let grid = *alpha.grid();
    let s = star2(alpha, g);
    let v1 = grid.diff_y(s.values());
    let v2: Vec<f64> = grid.diff_x(s.values()).into_iter().map(|v| -v).collect();
    let rot = VectorField::from_vecs(grid, v1, v2);
    let (lo1, lo2) = lower(&rot, g);
    let sd = g.sqrt_det();
    OneFormField::from_vecs(
        grid,
        (0..sd.len()).map(|k| lo1[k] / sd[k]).collect(),
        (0..sd.len()).map(|k| lo2[k] / sd[k]).collect(),
    )
}

/// `Δ₀ = δd`, positive semi-definite.
pub fn laplacian0(f: &ScalarField, g: &MetricField) -> ScalarField {
    delta1(&d0(f), g)
}

/// `Δ₁ = dδ + δd`.
pub fn laplacian1(phi: &OneFormField, g: &MetricField) -> OneFormField {
    &d0(&delta1(phi, g)) + &delta2(&d1(phi), g)
}

/// Metric lift `(♯φ)^i = g^{ij} φ_j`.
pub fn sharp_g(phi: &OneFormField, g: &MetricField) -> VectorField {
    g.check_grid(phi.grid());
    let (a, b) = raise(phi, g);
    VectorField::from_vecs(*phi.grid(), a, b)
}

pub fn flat_g(v: &VectorField, g: &MetricField) -> OneFormField {
    g.check_grid(v.grid());
    let (a, b) = lower(v, g);
    OneFormField::from_vecs(*v.grid(), a, b)
}

/// Symplectic lift with `ω = μ`: `i_{♯_ω φ} ω = φ`, i.e. `♯_ω φ = (φ₂, −φ₁)/√g`.
/// Equals `−J ♯_g φ`; on the flat torus `♯_ω dx = −∂_y`.
pub fn sharp_omega(phi: &OneFormField, g: &MetricField) -> VectorField {
    g.check_grid(phi.grid());
    let s = g.sqrt_det();
    let (p, q) = (phi.comp_x(), phi.comp_y());
    VectorField::from_vecs(
        *phi.grid(),
        (0..s.len()).map(|k| q[k] / s[k]).collect(),
        (0..s.len()).map(|k| -p[k] / s[k]).collect(),
    )
}

/// `♭_ω X = i_X ω`, inverse of [`sharp_omega`].
pub fn flat_omega(v: &VectorField, g: &MetricField) -> OneFormField {
    g.check_grid(v.grid());
    let s = g.sqrt_det();
    let (a, b) = (v.comp_x(), v.comp_y());
    OneFormField::from_vecs(
        *v.grid(),
        (0..s.len()).map(|k| -s[k] * b[k]).collect(),
        (0..s.len()).map(|k| s[k] * a[k]).collect(),
    )
}

/// The metric rotation `J`, characterized by `g(X, Y) = ω(X, JY)`.
pub fn rotate_j(v: &VectorField, g: &MetricField) -> VectorField {
    sharp_g(&flat_omega(v, g), g)
}

/// Hamiltonian vector field `♯_ω d f`.
pub fn hamiltonian(f: &ScalarField, g: &MetricField) -> VectorField {
    sharp_omega(&d0(f), g)
}

/// `div X = −δ(♭X) = (1/√g) ∂_i(√g X^i)`.
pub fn div(v: &VectorField, g: &MetricField) -> ScalarField {
    delta1(&flat_g(v, g), g).scale(-1.0)
}

/// `grad f = ♯_g d f`.
pub fn grad(f: &ScalarField, g: &MetricField) -> VectorField {
    sharp_g(&d0(f), g)
}

/// Lie bracket `[X, Y]^k = X^i ∂_i Y^k − Y^i ∂_i X^k`.
pub fn lie_bracket(a: &VectorField, b: &VectorField) -> VectorField {
    assert_eq!(a.grid(), b.grid(), "grid mismatch");
    let grid = *a.grid();
    let comp = |c: usize| {
        let (ac, bc) = if c == 0 { (a.x_field(), b.x_field()) } else { (a.y_field(), b.y_field()) };
        let lhs = a.derivative_of(&bc);
        let rhs = b.derivative_of(&ac);
        (&lhs - &rhs).into_values()
    };
    VectorField::from_vecs(grid, comp(0), comp(1))
}

/// Lie derivative of a 1-form, `(L_Y φ)_i = Y^j ∂_j φ_i + φ_j ∂_i Y^j`.
pub fn lie_derivative_form(y: &VectorField, phi: &OneFormField) -> OneFormField {
    assert_eq!(y.grid(), phi.grid(), "grid mismatch");
    let grid = *y.grid();
    let (y1, y2) = (y.comp_x(), y.comp_y());
    let (p1, p2) = (phi.comp_x(), phi.comp_y());
    let a1 = y.derivative_of(&phi.x_field());
    let a2 = y.derivative_of(&phi.y_field());
    let (d1x, d1y) = (grid.diff_x(y1), grid.diff_y(y1));
    let (d2x, d2y) = (grid.diff_x(y2), grid.diff_y(y2));
    let len = grid.len();
    let c1 = (0..len).map(|k| a1.values()[k] + p1[k] * d1x[k] + p2[k] * d2x[k]).collect();
    let c2 = (0..len).map(|k| a2.values()[k] + p1[k] * d1y[k] + p2[k] * d2y[k]).collect();
    OneFormField::from_vecs(grid, c1, c2)
}

/// Pointwise `g(X, Y)`.
pub fn metric_pairing(a: &VectorField, b: &VectorField, g: &MetricField) -> ScalarField {
    let (lo1, lo2) = lower(a, g);
    let (p, q) = (b.comp_x(), b.comp_y());
    ScalarField::from_vec(*a.grid(), (0..p.len()).map(|k| lo1[k] * p[k] + lo2[k] * q[k]).collect())
}

/// `∫ f μ` by the nodal (trapezoidal) rule, summed in index order.
pub fn integrate(f: &ScalarField, g: &MetricField) -> f64 {
    g.check_grid(f.grid());
    let s = g.sqrt_det();
    f.values().iter().zip(s).map(|(v, w)| v * w).sum::<f64>() * f.grid().cell_area()
}

/// Fields with an `L²(g)` inner product `⟨a, b⟩ = ∫ g(a, b) μ`.
pub trait L2Field: Components {
    /// Pointwise metric pairing `g(a, b)` at every node.
    fn pointwise(&self, other: &Self, g: &MetricField) -> Vec<f64>;
}

impl L2Field for ScalarField {
    fn pointwise(&self, other: &Self, _g: &MetricField) -> Vec<f64> {
        self.values().iter().zip(other.values()).map(|(a, b)| a * b).collect()
    }
}

impl L2Field for OneFormField {
    fn pointwise(&self, other: &Self, g: &MetricField) -> Vec<f64> {
        let (u1, u2) = raise(self, g);
        (0..u1.len()).map(|k| u1[k] * other.comp_x()[k] + u2[k] * other.comp_y()[k]).collect()
    }
}

impl L2Field for TwoFormField {
    fn pointwise(&self, other: &Self, g: &MetricField) -> Vec<f64> {
        (0..g.det().len()).map(|k| self.density()[k] * other.density()[k] / g.det()[k]).collect()
    }
}

impl L2Field for VectorField {
    fn pointwise(&self, other: &Self, g: &MetricField) -> Vec<f64> {
        metric_pairing(self, other, g).into_values()
    }
}

fn same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a != b {
        return Err(GeoError::GridMismatch { left: a.n(), right: b.n() });
    }
    Ok(())
}

/// `⟨a, b⟩ = ∫ g(a, b) μ`; the form degree is carried by the field type.
pub fn inner_product<F: L2Field>(a: &F, b: &F, g: &MetricField) -> Result<f64> {
    same_grid(a.grid(), b.grid())?;
    same_grid(a.grid(), g.grid())?;
    let p = a.pointwise(b, g);
    Ok(p.iter().zip(g.sqrt_det()).map(|(v, w)| v * w).sum::<f64>() * g.grid().cell_area())
}

/// `L²(g)` norm. Panics on grid mismatch.
pub fn norm<F: L2Field>(a: &F, g: &MetricField) -> f64 {
    inner_product(a, a, g).expect("grid mismatch").max(0.0).sqrt()
}
