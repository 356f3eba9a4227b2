//! Sampled fields on the periodic grid: functions, 1-forms, 2-form densities,
//! vector fields and the Riemannian metric.

use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{GeoError, Result};
use crate::grid::GridSpec;

fn check_samples(grid: &GridSpec, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(GeoError::ShapeMismatch { expected: grid.len(), got: values.len() });
    }
    if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
        let (i, j) = grid.node(idx);
        return Err(GeoError::NonFinite { i, j });
    }
    Ok(())
}

pub(crate) fn sample(grid: &GridSpec, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    (0..grid.len())
        .map(|idx| {
            let (x, y) = grid.position(idx);
            f(x, y)
        })
        .collect()
}

/// Access to the raw component arrays of a field, in a fixed order.
pub trait Components {
    fn grid(&self) -> &GridSpec;
    fn components(&self) -> Vec<&[f64]>;
    fn components_mut(&mut self) -> Vec<&mut [f64]>;

    /// Largest absolute sample over all components.
    fn max_abs(&self) -> f64 {
        self.components()
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.iter().all(|v| v.is_finite()))
    }
}

macro_rules! field_ops {
    ($ty:ident { $($comp:ident),+ }) => {
        impl Components for $ty {
            fn grid(&self) -> &GridSpec {
                &self.grid
            }
            fn components(&self) -> Vec<&[f64]> {
                vec![$(&self.$comp[..]),+]
            }
            fn components_mut(&mut self) -> Vec<&mut [f64]> {
                vec![$(&mut self.$comp[..]),+]
            }
        }

        impl $ty {
            pub fn zeros(grid: GridSpec) -> Self {
                $ty { grid, $($comp: vec![0.0; grid.len()]),+ }
            }

            pub fn scale(&self, c: f64) -> Self {
                $ty { grid: self.grid, $($comp: self.$comp.iter().map(|v| c * v).collect()),+ }
            }

            /// `self + c * other`.
            pub fn axpy(&self, c: f64, other: &Self) -> Self {
                assert_eq!(self.grid, other.grid, "grid mismatch");
                $ty {
                    grid: self.grid,
                    $($comp: self.$comp.iter().zip(&other.$comp).map(|(a, b)| a + c * b).collect()),+
                }
            }

            /// Multiplies every component pointwise by `w`.
            pub fn weighted(&self, w: &[f64]) -> Self {
                $ty {
                    grid: self.grid,
                    $($comp: self.$comp.iter().zip(w).map(|(a, b)| a * b).collect()),+
                }
            }
        }

        impl Add for &$ty {
            type Output = $ty;
            fn add(self, rhs: &$ty) -> $ty {
                self.axpy(1.0, rhs)
            }
        }

        impl Sub for &$ty {
            type Output = $ty;
            fn sub(self, rhs: &$ty) -> $ty {
                self.axpy(-1.0, rhs)
            }
        }

        impl Mul<f64> for &$ty {
            type Output = $ty;
            fn mul(self, c: f64) -> $ty {
                self.scale(c)
            }
        }

        impl Neg for &$ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                self.scale(-1.0)
            }
        }
    };
}

/// A function `f(x, y)` sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

field_ops!(ScalarField { values });

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        check_samples(&grid, &values)?;
        Ok(ScalarField { grid, values })
    }

    pub(crate) fn from_vec(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        ScalarField { grid, values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        ScalarField { grid, values: sample(&grid, f) }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i as isize, j as isize)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ScalarField) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        self.weighted(&other.values)
    }

    /// Writes the samples as `n` comma-separated rows; row `j` holds
    /// `f(x_0..x_{n-1}, y_j)`.
    pub fn to_csv(&self, component: &str) -> String {
        write_csv(&self.grid, component, &self.values)
    }

    pub fn from_csv(text: &str, mode: crate::grid::DiffMode) -> Result<(String, Self)> {
        let (n, name, values) = read_csv(text)?;
        let grid = GridSpec::new(n, mode)?;
        Ok((name, ScalarField::new(grid, values)?))
    }
}

/// `φ = φ₁ dx + φ₂ dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormField {
    grid: GridSpec,
    x: Vec<f64>,
    y: Vec<f64>,
}

field_ops!(OneFormField { x, y });

impl OneFormField {
    pub fn new(grid: GridSpec, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_samples(&grid, &x)?;
        check_samples(&grid, &y)?;
        Ok(OneFormField { grid, x, y })
    }

    pub(crate) fn from_vecs(grid: GridSpec, x: Vec<f64>, y: Vec<f64>) -> Self {
        OneFormField { grid, x, y }
    }

    pub fn from_fn(grid: GridSpec, fx: impl Fn(f64, f64) -> f64, fy: impl Fn(f64, f64) -> f64) -> Self {
        OneFormField { grid, x: sample(&grid, fx), y: sample(&grid, fy) }
    }

    pub fn from_scalars(x: &ScalarField, y: &ScalarField) -> Self {
        assert_eq!(x.grid, y.grid, "grid mismatch");
        OneFormField { grid: x.grid, x: x.values.clone(), y: y.values.clone() }
    }

    /// Constant form `a dx + b dy`.
    pub fn constant(grid: GridSpec, a: f64, b: f64) -> Self {
        OneFormField { grid, x: vec![a; grid.len()], y: vec![b; grid.len()] }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn comp_x(&self) -> &[f64] {
        &self.x
    }

    pub fn comp_y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_field(&self) -> ScalarField {
        ScalarField::from_vec(self.grid, self.x.clone())
    }

    pub fn y_field(&self) -> ScalarField {
        ScalarField::from_vec(self.grid, self.y.clone())
    }

    /// Evaluates the form on a vector field, `φ(X)`.
    pub fn apply(&self, v: &VectorField) -> ScalarField {
        assert_eq!(self.grid, v.grid, "grid mismatch");
        let values = (0..self.grid.len()).map(|k| self.x[k] * v.x[k] + self.y[k] * v.y[k]).collect();
        ScalarField::from_vec(self.grid, values)
    }

    /// `f φ` for a function `f`.
    pub fn times(&self, f: &ScalarField) -> Self {
        assert_eq!(self.grid, f.grid, "grid mismatch");
        self.weighted(&f.values)
    }

    /// Exterior product `φ ∧ ψ` as a 2-form density.
    pub fn wedge(&self, other: &OneFormField) -> TwoFormField {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let density = (0..self.grid.len())
            .map(|k| self.x[k] * other.y[k] - self.y[k] * other.x[k])
            .collect();
        TwoFormField { grid: self.grid, density }
    }
}

/// `α = a dx∧dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoFormField {
    grid: GridSpec,
    density: Vec<f64>,
}

field_ops!(TwoFormField { density });

impl TwoFormField {
    pub fn new(grid: GridSpec, density: Vec<f64>) -> Result<Self> {
        check_samples(&grid, &density)?;
        Ok(TwoFormField { grid, density })
    }

    pub(crate) fn from_vec(grid: GridSpec, density: Vec<f64>) -> Self {
        TwoFormField { grid, density }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        TwoFormField { grid, density: sample(&grid, f) }
    }

    pub fn from_density(a: &ScalarField) -> Self {
        TwoFormField { grid: a.grid, density: a.values.clone() }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn density_field(&self) -> ScalarField {
        ScalarField::from_vec(self.grid, self.density.clone())
    }
}

/// `X = X¹ ∂_x + X² ∂_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    x: Vec<f64>,
    y: Vec<f64>,
}

field_ops!(VectorField { x, y });

impl VectorField {
    pub fn new(grid: GridSpec, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_samples(&grid, &x)?;
        check_samples(&grid, &y)?;
        Ok(VectorField { grid, x, y })
    }

    pub(crate) fn from_vecs(grid: GridSpec, x: Vec<f64>, y: Vec<f64>) -> Self {
        VectorField { grid, x, y }
    }

    pub fn from_fn(grid: GridSpec, fx: impl Fn(f64, f64) -> f64, fy: impl Fn(f64, f64) -> f64) -> Self {
        VectorField { grid, x: sample(&grid, fx), y: sample(&grid, fy) }
    }

    pub fn constant(grid: GridSpec, a: f64, b: f64) -> Self {
        VectorField { grid, x: vec![a; grid.len()], y: vec![b; grid.len()] }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn comp_x(&self) -> &[f64] {
        &self.x
    }

    pub fn comp_y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_field(&self) -> ScalarField {
        ScalarField::from_vec(self.grid, self.x.clone())
    }

    pub fn y_field(&self) -> ScalarField {
        ScalarField::from_vec(self.grid, self.y.clone())
    }

    /// `f X` for a function `f`.
    pub fn times(&self, f: &ScalarField) -> Self {
        assert_eq!(self.grid, f.grid, "grid mismatch");
        self.weighted(&f.values)
    }

    /// Largest Euclidean coordinate speed `max √((X¹)² + (X²)²)`.
    pub fn max_speed(&self) -> f64 {
        self.x.iter().zip(&self.y).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max)
    }

    /// Derivative of `f` along the field, `X(f) = X^i ∂_i f`.
    pub fn derivative_of(&self, f: &ScalarField) -> ScalarField {
        let fx = self.grid.diff_x(f.values());
        let fy = self.grid.diff_y(f.values());
        let values = (0..self.grid.len()).map(|k| self.x[k] * fx[k] + self.y[k] * fy[k]).collect();
        ScalarField::from_vec(self.grid, values)
    }
}

/// Pointwise symmetric positive definite metric `g_ij` with its derived data.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    grid: GridSpec,
    g11: Vec<f64>,
    g12: Vec<f64>,
    g22: Vec<f64>,
    det: Vec<f64>,
    sqrt_det: Vec<f64>,
    inv11: Vec<f64>,
    inv12: Vec<f64>,
    inv22: Vec<f64>,
}

impl MetricField {
    pub fn flat(grid: GridSpec) -> Self {
        let one = ScalarField::constant(grid, 1.0);
        let zero = ScalarField::zeros(grid);
        Self::from_components(&one, &zero, &one).expect("identity metric is SPD")
    }

    /// `g = e^{2φ}(dx² + dy²)`.
    pub fn conformal(phi: &ScalarField) -> Result<Self> {
        let factor = phi.map(|p| (2.0 * p).exp());
        Self::from_components(&factor, &ScalarField::zeros(phi.grid), &factor)
    }

    pub fn from_components(g11: &ScalarField, g12: &ScalarField, g22: &ScalarField) -> Result<Self> {
        let grid = g11.grid;
        for f in [g12, g22] {
            if f.grid.n() != grid.n() {
                return Err(GeoError::GridMismatch { left: grid.n(), right: f.grid.n() });
            }
        }
        for f in [g11, g12, g22] {
            check_samples(&grid, &f.values)?;
        }
        let len = grid.len();
        let mut m = MetricField {
            grid,
            g11: g11.values.clone(),
            g12: g12.values.clone(),
            g22: g22.values.clone(),
            det: vec![0.0; len],
            sqrt_det: vec![0.0; len],
            inv11: vec![0.0; len],
            inv12: vec![0.0; len],
            inv22: vec![0.0; len],
        };
        for k in 0..len {
            let det = m.g11[k] * m.g22[k] - m.g12[k] * m.g12[k];
            if !(m.g11[k] > 0.0 && det > 0.0) {
                let (i, j) = grid.node(k);
                return Err(GeoError::NotPositiveDefinite { i, j });
            }
            m.det[k] = det;
            m.sqrt_det[k] = det.sqrt();
            m.inv11[k] = m.g22[k] / det;
            m.inv12[k] = -m.g12[k] / det;
            m.inv22[k] = m.g11[k] / det;
        }
        Ok(m)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn g11(&self) -> &[f64] {
        &self.g11
    }

    pub fn g12(&self) -> &[f64] {
        &self.g12
    }

    pub fn g22(&self) -> &[f64] {
        &self.g22
    }

    pub fn det(&self) -> &[f64] {
        &self.det
    }

    pub fn sqrt_det(&self) -> &[f64] {
        &self.sqrt_det
    }

    pub fn inv11(&self) -> &[f64] {
        &self.inv11
    }

    pub fn inv12(&self) -> &[f64] {
        &self.inv12
    }

    pub fn inv22(&self) -> &[f64] {
        &self.inv22
    }

    /// Lower-index component `g_ab` (indices 0 or 1).
    pub fn lower(&self, a: usize, b: usize) -> &[f64] {
        match (a, b) {
            (0, 0) => &self.g11,
            (1, 1) => &self.g22,
            _ => &self.g12,
        }
    }

    /// Upper-index component `g^ab` (indices 0 or 1).
    pub fn upper(&self, a: usize, b: usize) -> &[f64] {
        match (a, b) {
            (0, 0) => &self.inv11,
            (1, 1) => &self.inv22,
            _ => &self.inv12,
        }
    }

    /// Riemannian volume form `μ = √det g dx∧dy`, which is also the symplectic form.
    pub fn volume_form(&self) -> TwoFormField {
        TwoFormField { grid: self.grid, density: self.sqrt_det.clone() }
    }

    /// Total area `∫ μ`.
    pub fn area(&self) -> f64 {
        self.sqrt_det.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// True when every component is constant (all Christoffel symbols vanish).
    pub fn is_constant(&self) -> bool {
        [&self.g11, &self.g12, &self.g22]
            .iter()
            .all(|c| c.iter().all(|v| *v == c[0]))
    }

    /// Quadrature weights `√det g · h²` per node.
    pub(crate) fn weights(&self) -> Vec<f64> {
        let a = self.grid.cell_area();
        self.sqrt_det.iter().map(|s| s * a).collect()
    }

    pub(crate) fn check_grid(&self, grid: &GridSpec) {
        assert_eq!(self.grid, *grid, "field and metric live on different grids");
    }
}

pub(crate) fn write_csv(grid: &GridSpec, component: &str, values: &[f64]) -> String {
    let n = grid.n();
    let mut out = String::with_capacity(values.len() * 24);
    let _ = writeln!(out, "# n={n}, component={component}");
    for row in values.chunks_exact(n) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub(crate) fn read_csv(text: &str) -> Result<(usize, String, Vec<f64>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| GeoError::Io("empty field file".into()))?;
    let header = header
        .strip_prefix("# n=")
        .ok_or_else(|| GeoError::Io(format!("bad field header '{header}'")))?;
    let (n_str, rest) = header
        .split_once(", component=")
        .ok_or_else(|| GeoError::Io("field header lacks component".into()))?;
    let n: usize = n_str.trim().parse().map_err(|_| GeoError::Io(format!("bad n '{n_str}'")))?;
    let mut values = Vec::with_capacity(n * n);
    for line in lines.filter(|l| !l.trim().is_empty()) {
        for tok in line.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| GeoError::Io(format!("bad sample '{tok}'")))?;
            values.push(v);
        }
    }
    if values.len() != n * n {
        return Err(GeoError::ShapeMismatch { expected: n * n, got: values.len() });
    }
    Ok((n, rest.trim().to_string(), values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::spectral(16).unwrap()
    }

    #[test]
    fn metric_rejects_indefinite_samples() {
        let g = grid();
        let one = ScalarField::constant(g, 1.0);
        let big = ScalarField::constant(g, 2.0);
        let err = MetricField::from_components(&one, &big, &one).unwrap_err();
        assert_eq!(err, GeoError::NotPositiveDefinite { i: 0, j: 0 });
    }

    #[test]
    fn metric_inverse_is_inverse() {
        let g = grid();
        let g11 = ScalarField::from_fn(g, |x, _| 2.0 + x.cos());
        let g12 = ScalarField::from_fn(g, |x, y| 0.3 * (x + y).sin());
        let g22 = ScalarField::from_fn(g, |_, y| 1.5 + 0.5 * y.sin());
        let m = MetricField::from_components(&g11, &g12, &g22).unwrap();
        for k in 0..g.len() {
            let a = m.g11()[k] * m.inv11()[k] + m.g12()[k] * m.inv12()[k];
            let b = m.g11()[k] * m.inv12()[k] + m.g12()[k] * m.inv22()[k];
            assert!((a - 1.0).abs() < 1e-14 && b.abs() < 1e-14);
        }
    }

    #[test]
    fn nonfinite_samples_are_rejected() {
        let g = grid();
        let mut v = vec![0.0; g.len()];
        v[g.index(3, 2)] = f64::NAN;
        assert_eq!(ScalarField::new(g, v).unwrap_err(), GeoError::NonFinite { i: 3, j: 2 });
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let f = ScalarField::from_fn(grid(), |x, y| (x * 1.7).sin() * y.exp());
        let text = f.to_csv("f");
        assert!(text.starts_with("# n=16, component=f\n"));
        let (name, back) = ScalarField::from_csv(&text, crate::grid::DiffMode::Spectral).unwrap();
        assert_eq!(name, "f");
        assert_eq!(back, f);
    }

    #[test]
    fn wedge_is_antisymmetric() {
        let g = grid();
        let a = OneFormField::from_fn(g, |x, _| x.sin(), |_, y| y.cos());
        let b = OneFormField::from_fn(g, |x, y| (x + y).cos(), |x, _| x.cos());
        let ab = a.wedge(&b);
        let ba = b.wedge(&a);
        assert!((&ab + &ba).max_abs() < 1e-15);
    }
}
