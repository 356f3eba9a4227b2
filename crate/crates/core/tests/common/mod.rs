#![allow(dead_code)]

use geoflow_core::{GridSpec, MetricField, OneFormField, ScalarField, VectorField};

pub fn grid(n: usize) -> GridSpec {
    GridSpec::spectral(n).unwrap()
}

pub fn flat(n: usize) -> MetricField {
    MetricField::flat(grid(n))
}

/// `e^{2a cos x}(dx² + dy²)`.
pub fn conformal(n: usize, a: f64) -> MetricField {
    MetricField::conformal(&ScalarField::from_fn(grid(n), |x, _| a * x.cos())).unwrap()
}

/// A fixed SPD metric depending on both coordinates, with `g12 ≠ 0`.
pub fn general(n: usize) -> MetricField {
    let gr = grid(n);
    MetricField::from_components(
        &ScalarField::from_fn(gr, |x, y| 1.5 + 0.3 * x.cos() * y.sin()),
        &ScalarField::from_fn(gr, |x, y| 0.3 * (x + y).sin()),
        &ScalarField::from_fn(gr, |x, y| 1.2 + 0.25 * (x - 2.0 * y).cos()),
    )
    .unwrap()
}

pub fn product_g11(y: f64) -> f64 {
    1.5 + 0.3 * y.sin()
}
pub fn product_g12(y: f64) -> f64 {
    0.4 * y.cos()
}
pub fn product_g22(y: f64) -> f64 {
    1.0 + 0.2 * (2.0 * y).cos()
}

/// Metric depending on `y` only, so `∂_x` is Killing.
pub fn product(n: usize) -> MetricField {
    let gr = grid(n);
    MetricField::from_components(
        &ScalarField::from_fn(gr, |_, y| product_g11(y)),
        &ScalarField::from_fn(gr, |_, y| product_g12(y)),
        &ScalarField::from_fn(gr, |_, y| product_g22(y)),
    )
    .unwrap()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Low-degree trig battery, indexed deterministically.
pub fn trig_scalar(n: usize, k: usize) -> ScalarField {
    let c = [0.7, -0.4, 0.3, 0.5, -0.6, 0.2];
    let k = k as f64;
    ScalarField::from_fn(grid(n), move |x, y| {
        c[0] * (x + 0.3 * k).sin()
            + c[1] * (2.0 * y - k).cos()
            + c[2] * (x + y + 0.5 * k).sin()
            + c[3] * ((k % 3.0 + 1.0) * x).cos() * y.sin()
            + c[4] * (x - 2.0 * y + k).cos()
            + c[5] * (3.0 * x).sin() * (k * 0.7 + y).cos()
    })
}

pub fn trig_form(n: usize, k: usize) -> OneFormField {
    OneFormField::from_scalars(&trig_scalar(n, 2 * k + 1), &trig_scalar(n, 2 * k + 7))
}

pub fn trig_vector(n: usize, k: usize) -> VectorField {
    vector_from(&trig_scalar(n, 3 * k + 2), &trig_scalar(n, 3 * k + 5))
}

pub fn vector_from(a: &ScalarField, b: &ScalarField) -> VectorField {
    VectorField::new(*a.grid(), a.values().to_vec(), b.values().to_vec()).unwrap()
}

/// Trig polynomial with six free coefficients (the last one is a constant).
pub fn trig_from_coeffs(c: &[f64], gr: GridSpec) -> ScalarField {
    let c = c.to_vec();
    ScalarField::from_fn(gr, move |x, y| {
        c[0] * x.sin() + c[1] * (2.0 * y).cos() + c[2] * (x + y).sin() + c[3] * (3.0 * x - y).cos() + c[4] * (x * 2.0).sin() * y.cos() + c[5]
    })
}
