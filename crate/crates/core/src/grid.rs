//! Periodic grid over `[0, 2π)²` and the one-dimensional differentiation
//! kernels every other operator is built from.
//!
//! Samples are stored row-major with `x` running fastest: node `(i, j)`
//! lives at `j * n + i` and sits at `(i h, j h)` with `h = 2π / n`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// How partial derivatives are taken on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DiffMode {
    /// Fourier pseudo-spectral, exact for trigonometric polynomials of degree < n/2.
    #[default]
    Spectral,
    /// Fourth-order central differences.
    Fd4,
}

impl fmt::Display for DiffMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffMode::Spectral => write!(f, "spectral"),
            DiffMode::Fd4 => write!(f, "fd4"),
        }
    }
}

impl std::str::FromStr for DiffMode {
    type Err = GeoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(DiffMode::Spectral),
            "fd4" => Ok(DiffMode::Fd4),
            other => Err(GeoError::Config(format!("unknown differentiation mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    mode: DiffMode,
}

impl GridSpec {
    pub const MIN_POINTS: usize = 16;

    pub fn new(n: usize, mode: DiffMode) -> Result<Self> {
        if n < Self::MIN_POINTS {
            return Err(GeoError::InvalidGrid(format!(
                "need at least {} points per axis, got {n}",
                Self::MIN_POINTS
            )));
        }
        if n % 2 != 0 {
            return Err(GeoError::InvalidGrid(format!("points per axis must be even, got {n}")));
        }
        Ok(GridSpec { n, mode })
    }

    pub fn spectral(n: usize) -> Result<Self> {
        Self::new(n, DiffMode::Spectral)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> DiffMode {
        self.mode
    }

    /// Number of nodes, `n²`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Area element of one cell, `h²`.
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Flat index of node `(i, j)`, wrapping both indices periodically.
    pub fn index(&self, i: isize, j: isize) -> usize {
        let n = self.n as isize;
        (j.rem_euclid(n) * n + i.rem_euclid(n)) as usize
    }

    /// Inverse of [`GridSpec::index`] for in-range flat indices.
    pub fn node(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    /// Coordinates `(x, y)` of a flat index.
    pub fn position(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.node(idx);
        (self.coord(i), self.coord(j))
    }

    /// Signed wavenumber for FFT bin `b`; the Nyquist bin maps to `n/2`.
    pub fn wavenumber(&self, b: usize) -> i64 {
        let n = self.n as i64;
        let b = b as i64;
        if b <= n / 2 {
            b
        } else {
            b - n
        }
    }

    /// Real symbol `κ` of the first-derivative operator: `D e^{ikx} = iκ e^{ikx}`.
    /// Vanishes on the constant and the Nyquist mode in both modes.
    pub fn derivative_symbol(&self, b: usize) -> f64 {
        let k = self.wavenumber(b);
        match self.mode {
            DiffMode::Spectral => {
                if 2 * k.unsigned_abs() as usize == self.n {
                    0.0
                } else {
                    k as f64
                }
            }
            DiffMode::Fd4 => {
                let h = self.spacing();
                let t = k as f64 * h;
                (8.0 * t.sin() - (2.0 * t).sin()) / (6.0 * h)
            }
        }
    }

    /// First partial derivative of sampled data along `axis`.
    pub fn diff(&self, values: &[f64], axis: Axis) -> Vec<f64> {
        debug_assert_eq!(values.len(), self.len());
        match self.mode {
            DiffMode::Spectral => self.apply_axis_multiplier(values, axis, |b| {
                Complex64::new(0.0, self.derivative_symbol(b))
            }),
            DiffMode::Fd4 => self.fd4(values, axis),
        }
    }

    pub fn diff_x(&self, values: &[f64]) -> Vec<f64> {
        self.diff(values, Axis::X)
    }

    pub fn diff_y(&self, values: &[f64]) -> Vec<f64> {
        self.diff(values, Axis::Y)
    }

    fn fd4(&self, values: &[f64], axis: Axis) -> Vec<f64> {
        let n = self.n as isize;
        let inv = 1.0 / (12.0 * self.spacing());
        let mut out = vec![0.0; self.len()];
        for j in 0..n {
            for i in 0..n {
                let at = |d: isize| match axis {
                    Axis::X => values[self.index(i + d, j)],
                    Axis::Y => values[self.index(i, j + d)],
                };
                out[(j * n + i) as usize] = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) * inv;
            }
        }
        out
    }

    /// Applies a Fourier multiplier along one axis; the imaginary part of
    /// the result is discarded.
    pub(crate) fn apply_axis_multiplier(
        &self,
        values: &[f64],
        axis: Axis,
        mult: impl Fn(usize) -> Complex64,
    ) -> Vec<f64> {
        let n = self.n;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        if axis == Axis::Y {
            transpose(&mut buf, n);
        }
        let (fwd, inv) = plans(n);
        let table: Vec<Complex64> = (0..n).map(|b| mult(b) / n as f64).collect();
        for row in buf.chunks_exact_mut(n) {
            fwd.process(row);
            for (c, m) in row.iter_mut().zip(&table) {
                *c *= m;
            }
            inv.process(row);
        }
        if axis == Axis::Y {
            transpose(&mut buf, n);
        }
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Applies a two-dimensional Fourier multiplier `m(bx, by)`.
    pub(crate) fn apply_multiplier(
        &self,
        values: &[f64],
        mult: impl Fn(usize, usize) -> Complex64,
    ) -> Vec<f64> {
        let n = self.n;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let (fwd, inv) = plans(n);
        for row in buf.chunks_exact_mut(n) {
            fwd.process(row);
        }
        transpose(&mut buf, n);
        for row in buf.chunks_exact_mut(n) {
            fwd.process(row);
        }
        // buf is now indexed [bx * n + by]
        let scale = 1.0 / (n * n) as f64;
        for bx in 0..n {
            for by in 0..n {
                buf[bx * n + by] *= mult(bx, by) * scale;
            }
        }
        for row in buf.chunks_exact_mut(n) {
            inv.process(row);
        }
        transpose(&mut buf, n);
        for row in buf.chunks_exact_mut(n) {
            inv.process(row);
        }
        buf.into_iter().map(|c| c.re).collect()
    }

    /// 2/3-rule truncation in spectral mode; identity in fd4 mode.
    pub fn dealias(&self, values: &mut [f64]) {
        if self.mode != DiffMode::Spectral {
            return;
        }
        let cutoff = self.n as i64 / 3;
        let keep = |b: usize| self.wavenumber(b).abs() <= cutoff;
        let filtered = self.apply_multiplier(values, |bx, by| {
            if keep(bx) && keep(by) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        values.copy_from_slice(&filtered);
    }

    /// The four grid functions annihilated by both discrete partials:
    /// the constant and the three checkerboard (Nyquist) modes.
    pub(crate) fn null_modes(&self) -> [Vec<f64>; 4] {
        let n = self.n;
        let sign = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
        let make = |f: &dyn Fn(usize, usize) -> f64| {
            (0..n * n).map(|idx| f(idx % n, idx / n)).collect::<Vec<f64>>()
        };
        [
            make(&|_, _| 1.0),
            make(&|i, _| sign(i)),
            make(&|_, j| sign(j)),
            make(&|i, j| sign(i) * sign(j)),
        ]
    }
}

/// Evaluates the real trigonometric interpolant of one periodic line of
/// samples (given by its DFT `coef`) at the phases `table[p] = e^{i x_p k}`.
fn eval_line(coef: &[Complex64], table: &[Vec<Complex64>], out: &mut [f64]) {
    let n = coef.len();
    let half = n / 2;
    for (p, phases) in table.iter().enumerate() {
        let mut acc = coef[0].re;
        for k in 1..half {
            acc += 2.0 * (coef[k] * phases[k]).re;
        }
        if n % 2 == 0 {
            acc += coef[half].re * phases[half].re;
        } else {
            acc += 2.0 * (coef[half] * phases[half]).re;
        }
        out[p] = acc / n as f64;
    }
}

fn phase_table(n: usize, points: &[f64]) -> Vec<Vec<Complex64>> {
    points
        .iter()
        .map(|&x| (0..=n / 2).map(|k| Complex64::from_polar(1.0, k as f64 * x)).collect())
        .collect()
}

impl GridSpec {
    /// Trigonometric interpolation of `values` at the tensor-product points
    /// `xs × ys`; the result is indexed `q * xs.len() + p` for `(xs[p], ys[q])`.
    /// Exact for trigonometric polynomials of degree below `n / 2`.
    pub fn interpolate(&self, values: &[f64], xs: &[f64], ys: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.len(), "field size mismatch");
        let n = self.n;
        let (fwd, _) = plans(n);
        let xt = phase_table(n, xs);
        let yt = phase_table(n, ys);
        // Rows first: rows[j][p] is row j interpolated at xs[p].
        let mut rows = vec![0.0; n * xs.len()];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                buf[i] = Complex64::new(values[j * n + i], 0.0);
            }
            fwd.process(&mut buf);
            eval_line(&buf, &xt, &mut rows[j * xs.len()..(j + 1) * xs.len()]);
        }
        let mut out = vec![0.0; xs.len() * ys.len()];
        let mut col = vec![0.0; ys.len()];
        for p in 0..xs.len() {
            for j in 0..n {
                buf[j] = Complex64::new(rows[j * xs.len() + p], 0.0);
            }
            fwd.process(&mut buf);
            eval_line(&buf, &yt, &mut col);
            for (q, v) in col.iter().enumerate() {
                out[q * xs.len() + p] = *v;
            }
        }
        out
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{} ({})", self.n, self.n, self.mode)
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            buf.swap(r * n + c, c * n + r);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_exact_on_trig_polynomials() {
        let g = GridSpec::spectral(16).unwrap();
        let f = |x: f64, y: f64| (3.0 * x).sin() * (2.0 * y).cos() + x.cos() - (7.0 * y).sin() + (8.0 * x).cos();
        let values: Vec<f64> = (0..g.len()).map(|k| { let (x, y) = g.position(k); f(x, y) }).collect();
        let xs = [0.1, 1.7, 5.9];
        let ys = [0.33, 4.2];
        let out = g.interpolate(&values, &xs, &ys);
        for (q, &y) in ys.iter().enumerate() {
            for (p, &x) in xs.iter().enumerate() {
                let want = (3.0 * x).sin() * (2.0 * y).cos() + x.cos() - (7.0 * y).sin();
                // the Nyquist mode cos 8x interpolates to its cosine part exactly
                assert!((out[q * 3 + p] - want - (8.0 * x).cos()).abs() < 1e-12);
            }
        }
    }

    fn sample(grid: &GridSpec, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..grid.len())
            .map(|idx| {
                let (x, y) = grid.position(idx);
                f(x, y)
            })
            .collect()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn rejects_small_or_odd_grids() {
        assert!(GridSpec::spectral(8).is_err());
        assert!(GridSpec::spectral(33).is_err());
        assert!(GridSpec::spectral(16).is_ok());
    }

    #[test]
    fn spectral_derivative_is_exact_on_trig_polynomials() {
        let g = GridSpec::spectral(32).unwrap();
        let f = sample(&g, |x, y| (3.0 * x).sin() * (2.0 * y).cos() + (x + 5.0 * y).cos());
        let fx = sample(&g, |x, y| 3.0 * (3.0 * x).cos() * (2.0 * y).cos() - (x + 5.0 * y).sin());
        let fy = sample(&g, |x, y| -2.0 * (3.0 * x).sin() * (2.0 * y).sin() - 5.0 * (x + 5.0 * y).sin());
        assert!(max_diff(&g.diff_x(&f), &fx) < 1e-12);
        assert!(max_diff(&g.diff_y(&f), &fy) < 1e-12);
    }

    #[test]
    fn fd4_converges_at_fourth_order() {
        let err = |n| {
            let g = GridSpec::new(n, DiffMode::Fd4).unwrap();
            let f = sample(&g, |x, y| (x + y.sin()).sin());
            let fx = sample(&g, |x, y| (x + y.sin()).cos());
            max_diff(&g.diff_x(&f), &fx)
        };
        let ratio = err(32) / err(64);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn derivative_kills_checkerboard_modes() {
        for mode in [DiffMode::Spectral, DiffMode::Fd4] {
            let g = GridSpec::new(16, mode).unwrap();
            for m in g.null_modes() {
                assert!(g.diff_x(&m).iter().all(|v| v.abs() < 1e-12));
                assert!(g.diff_y(&m).iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn dealias_keeps_low_modes_and_drops_high_ones() {
        let g = GridSpec::spectral(48).unwrap();
        let low = sample(&g, |x, y| (16.0 * x).cos() + y.sin());
        let mut v = low.clone();
        g.dealias(&mut v);
        assert!(max_diff(&v, &low) < 1e-12);
        let mut high = sample(&g, |x, _| (17.0 * x).cos());
        g.dealias(&mut high);
        assert!(high.iter().all(|v| v.abs() < 1e-12));
    }
}
