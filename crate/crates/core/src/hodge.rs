//! Poisson solves, the orthogonal Hodge splitting of 1-forms, and the
//! harmonic basis of the torus.
//!
//! The scalar Laplacian is solved in its symmetric form
//! `K f = W rhs` with `K = h² Σ Dᵢᵀ (√g g^{ij}) D_j` and `W = h² √g`,
//! by conjugate gradients preconditioned with the Fourier inverse of the
//! same operator with averaged coefficients. `K` annihilates the constant
//! and the three checkerboard modes (both discrete partials vanish there),
//! so right-hand sides are projected off that kernel before iterating.

use num_complex::Complex64;

use crate::calculus::{d0, d1, delta1, delta2, flat_g, inner_product, norm, sharp_g, sharp_omega, flat_omega};
use crate::error::{GeoError, Result};
use crate::fields::{Components, MetricField, OneFormField, ScalarField, TwoFormField, VectorField};
use crate::grid::GridSpec;

/// Stopping rule for the Poisson solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative residual of the symmetric system.
    pub tol: f64,
    /// Iteration cap; `None` means `10 n²`.
    pub max_iter: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-12, max_iter: None }
    }
}

/// Relative size of `∫ rhs μ` above which a right-hand side is rejected.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

struct Poisson<'a> {
    g: &'a MetricField,
    grid: GridSpec,
    // √g g^{ij}
    a11: Vec<f64>,
    a12: Vec<f64>,
    a22: Vec<f64>,
    mean: [f64; 3],
}

impl<'a> Poisson<'a> {
    fn new(g: &'a MetricField) -> Self {
        let grid = *g.grid();
        let s = g.sqrt_det();
        let m = |v: &[f64]| v.iter().zip(s).map(|(a, b)| a * b).collect::<Vec<f64>>();
        let (a11, a12, a22) = (m(g.inv11()), m(g.inv12()), m(g.inv22()));
        let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let mean = [avg(&a11), avg(&a12), avg(&a22)];
        Poisson { g, grid, a11, a12, a22, mean }
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        let fx = grid.diff_x(f);
        let fy = grid.diff_y(f);
        let len = f.len();
        let mut q1 = vec![0.0; len];
        let mut q2 = vec![0.0; len];
        for k in 0..len {
            q1[k] = self.a11[k] * fx[k] + self.a12[k] * fy[k];
            q2[k] = self.a12[k] * fx[k] + self.a22[k] * fy[k];
        }
        let a = grid.diff_x(&q1);
        let b = grid.diff_y(&q2);
        let h2 = grid.cell_area();
        (0..len).map(|k| -h2 * (a[k] + b[k])).collect()
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        let h2 = grid.cell_area();
        let [m11, m12, m22] = self.mean;
        grid.apply_multiplier(r, |bx, by| {
            let (kx, ky) = (grid.derivative_symbol(bx), grid.derivative_symbol(by));
            let sym = h2 * (m11 * kx * kx + 2.0 * m12 * kx * ky + m22 * ky * ky);
            if kx == 0.0 && ky == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0 / sym, 0.0)
            }
        })
    }

    fn project_kernel(&self, v: &mut [f64]) {
        let len = v.len() as f64;
        for mode in self.grid.null_modes() {
            let c = dot(v, &mode) / len;
            for (a, m) in v.iter_mut().zip(&mode) {
                *a -= c * m;
            }
        }
    }

    fn check_compatible(&self, rhs: &ScalarField) -> Result<()> {
        let w = self.g.weights();
        let abs_int: f64 = rhs.values().iter().zip(&w).map(|(r, w)| r.abs() * w).sum();
        let int: f64 = rhs.values().iter().zip(&w).map(|(r, w)| r * w).sum();
        if abs_int > 0.0 && int.abs() > COMPATIBILITY_TOL * abs_int {
            return Err(GeoError::IncompatibleRhs { relative: int.abs() / abs_int });
        }
        Ok(())
    }

    /// Solves after removing the kernel component of `W rhs`; callers that
    /// pass a codifferential need no compatibility check.
    fn solve(&self, rhs: &ScalarField, cfg: &SolverConfig) -> Result<ScalarField> {
        let w = self.g.weights();
        let mut b: Vec<f64> = rhs.values().iter().zip(&w).map(|(r, w)| r * w).collect();
        self.project_kernel(&mut b);
        let len = b.len();
        let bnorm = dot(&b, &b).sqrt();
        if bnorm == 0.0 {
            return Ok(ScalarField::zeros(self.grid));
        }
        let cap = cfg.max_iter.unwrap_or(10 * self.grid.n() * self.grid.n());
        let mut x = vec![0.0; len];
        let mut r = b;
        let mut z = self.precondition(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut res = 1.0;
        for _ in 0..cap {
            let kp = self.apply(&p);
            let alpha = rz / dot(&p, &kp);
            for k in 0..len {
                x[k] += alpha * p[k];
                r[k] -= alpha * kp[k];
            }
            res = dot(&r, &r).sqrt() / bnorm;
            if res <= cfg.tol {
                return Ok(self.finish(x));
            }
            z = self.precondition(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..len {
                p[k] = z[k] + beta * p[k];
            }
        }
        Err(GeoError::NoConvergence { iterations: cap, residual: res })
    }

    fn finish(&self, x: Vec<f64>) -> ScalarField {
        let w = self.g.weights();
        let mean = dot(&x, &w) / w.iter().sum::<f64>();
        ScalarField::from_vec(self.grid, x.into_iter().map(|v| v - mean).collect())
    }
}

/// Mean-zero solution of `Δ₀ f = rhs`.
pub fn poisson_solve(rhs: &ScalarField, g: &MetricField) -> Result<ScalarField> {
    poisson_solve_with(rhs, g, &SolverConfig::default())
}

pub fn poisson_solve_with(rhs: &ScalarField, g: &MetricField, cfg: &SolverConfig) -> Result<ScalarField> {
    if g.grid() != rhs.grid() {
        return Err(GeoError::GridMismatch { left: rhs.grid().n(), right: g.grid().n() });
    }
    let p = Poisson::new(g);
    p.check_compatible(rhs)?;
    p.solve(rhs, cfg)
}

/// Solve for a right-hand side that is a codifferential (hence compatible).
pub(crate) fn solve_range(rhs: &ScalarField, g: &MetricField) -> Result<ScalarField> {
    g.check_grid(rhs.grid());
    Poisson::new(g).solve(rhs, &SolverConfig::default())
}

/// L²-orthonormal pair of harmonic 1-forms, `β₁` built from `dx` first.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub beta: [OneFormField; 2],
    /// `⟨β_i, β_j⟩`, the identity up to round-off.
    pub gram: [[f64; 2]; 2],
}

impl HarmonicBasis {
    /// Period matrix `∮_{c_j} β_i` over the x- and y-cycles.
    pub fn periods(&self) -> [[f64; 2]; 2] {
        let p = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64 * std::f64::consts::TAU;
        [
            [p(self.beta[0].comp_x()), p(self.beta[0].comp_y())],
            [p(self.beta[1].comp_x()), p(self.beta[1].comp_y())],
        ]
    }

    /// `Σ ⟨φ, β_i⟩ β_i`.
    pub fn project(&self, phi: &OneFormField, g: &MetricField) -> Result<OneFormField> {
        let mut out = OneFormField::zeros(*phi.grid());
        for b in &self.beta {
            out = out.axpy(inner_product(phi, b, g)?, b);
        }
        Ok(out)
    }
}

/// Harmonic representatives of `[dx]`, `[dy]`, orthonormalized.
pub fn harmonic_basis(g: &MetricField) -> Result<HarmonicBasis> {
    let grid = *g.grid();
    let raw = [OneFormField::constant(grid, 1.0, 0.0), OneFormField::constant(grid, 0.0, 1.0)];
    let mut harm = Vec::with_capacity(2);
    for e in &raw {
        let f = solve_range(&delta1(e, g).scale(-1.0), g)?;
        harm.push(e + &d0(&f));
    }
    let b1 = harm[0].scale(1.0 / norm(&harm[0], g));
    let r = harm[1].axpy(-inner_product(&harm[1], &b1, g)?, &b1);
    let b2 = r.scale(1.0 / norm(&r, g));
    let ip = |a: &OneFormField, b: &OneFormField| inner_product(a, b, g);
    let gram = [[ip(&b1, &b1)?, ip(&b1, &b2)?], [ip(&b2, &b1)?, ip(&b2, &b2)?]];
    Ok(HarmonicBasis { beta: [b1, b2], gram })
}

/// `φ = d f + δ a + h`.
#[derive(Debug, Clone)]
pub struct HodgeSplit {
    pub exact: OneFormField,
    pub coexact: OneFormField,
    pub harmonic: OneFormField,
    /// Mean-zero potential of the exact part.
    pub f: ScalarField,
    /// 2-form potential with `δ a ≈ coexact`.
    pub a: TwoFormField,
}

impl HodgeSplit {
    /// Pairwise inner products of (exact, coexact, harmonic).
    pub fn orthogonality(&self, g: &MetricField) -> Result<[[f64; 3]; 3]> {
        let parts = [&self.exact, &self.coexact, &self.harmonic];
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = inner_product(parts[i], parts[j], g)?;
            }
        }
        Ok(m)
    }

    /// Largest `|⟨p_i, p_j⟩| / ‖φ‖²` over distinct parts.
    pub fn orthogonality_defect(&self, g: &MetricField) -> Result<f64> {
        let m = self.orthogonality(g)?;
        let total = m[0][0] + m[1][1] + m[2][2];
        if total == 0.0 {
            return Ok(0.0);
        }
        Ok([m[0][1], m[0][2], m[1][2]].iter().fold(0.0_f64, |a, v| a.max(v.abs())) / total)
    }

    /// `‖exact + coexact + harmonic − φ‖ / ‖φ‖`.
    pub fn reconstruction_defect(&self, phi: &OneFormField, g: &MetricField) -> f64 {
        let sum = &(&self.exact + &self.coexact) + &self.harmonic;
        let n = norm(phi, g);
        if n == 0.0 {
            return norm(&sum, g);
        }
        norm(&(&sum - phi), g) / n
    }
}

fn exact_potential(phi: &OneFormField, g: &MetricField) -> Result<ScalarField> {
    solve_range(&delta1(phi, g), g)
}

/// 2-form `a` with `d δ a = d φ`; uses `d δ (√g s) = √g Δ₀ s`.
fn coexact_potential(phi: &OneFormField, g: &MetricField) -> Result<TwoFormField> {
    let grid = *phi.grid();
    let dphi = d1(phi);
    let rhs: Vec<f64> = dphi.density().iter().zip(g.sqrt_det()).map(|(a, s)| a / s).collect();
    let s = solve_range(&ScalarField::from_vec(grid, rhs), g)?;
    Ok(TwoFormField::from_vec(grid, s.values().iter().zip(g.sqrt_det()).map(|(v, w)| v * w).collect()))
}

pub fn hodge_decompose(phi: &OneFormField, g: &MetricField) -> Result<HodgeSplit> {
    let basis = harmonic_basis(g)?;
    hodge_decompose_with(phi, g, &basis)
}

pub fn hodge_decompose_with(phi: &OneFormField, g: &MetricField, basis: &HarmonicBasis) -> Result<HodgeSplit> {
    g.check_grid(phi.grid());
    let f = exact_potential(phi, g)?;
    let exact = d0(&f);
    let harmonic = basis.project(phi, g)?;
    let coexact = &(phi - &exact) - &harmonic;
    let a = coexact_potential(phi, g)?;
    Ok(HodgeSplit { exact, coexact, harmonic, f, a })
}

/// Component of `φ` that is harmonic by an independent construction
/// (`φ − d f − δ a` with both potentials solved for) but lies outside the
/// span of the basis, relative to `‖φ‖`. Zero when the harmonic space is
/// two-dimensional.
pub fn extra_harmonic_residual(phi: &OneFormField, g: &MetricField, basis: &HarmonicBasis) -> Result<f64> {
    let exact = d0(&exact_potential(phi, g)?);
    let coexact = delta2(&coexact_potential(phi, g)?, g);
    let h = &(phi - &exact) - &coexact;
    let outside = &h - &basis.project(&h, g)?;
    Ok(norm(&outside, g) / norm(phi, g))
}

/// Projection onto closed forms, `d f + Σ⟨φ,β_i⟩β_i`.
pub fn project_closed(phi: &OneFormField, g: &MetricField, basis: &HarmonicBasis) -> Result<OneFormField> {
    let exact = d0(&exact_potential(phi, g)?);
    Ok(&exact + &basis.project(phi, g)?)
}

/// Leray projection `W − grad q` with `Δ₀ q = δ ♭W`.
pub fn project_divfree(w: &VectorField, g: &MetricField) -> Result<VectorField> {
    g.check_grid(w.grid());
    let q = solve_range(&delta1(&flat_g(w, g), g), g)?;
    Ok(w - &sharp_g(&d0(&q), g))
}

/// Projection onto symplectic fields, `♯_ω P_closed ♭_ω`.
pub fn project_symplectic(w: &VectorField, g: &MetricField, basis: &HarmonicBasis) -> Result<VectorField> {
    Ok(sharp_omega(&project_closed(&flat_omega(w, g), g, basis)?, g))
}

/// `c_i = ⟨♭X, β_i⟩`.
pub fn harmonic_coefficients(x: &VectorField, basis: &HarmonicBasis, g: &MetricField) -> Result<[f64; 2]> {
    let fx = flat_g(x, g);
    Ok([inner_product(&fx, &basis.beta[0], g)?, inner_product(&fx, &basis.beta[1], g)?])
}

/// Max-norm of `d β` and `δ β` for a candidate harmonic form.
pub fn harmonic_defect(beta: &OneFormField, g: &MetricField) -> f64 {
    d1(beta).max_abs().max(delta1(beta, g).max_abs())
}
