//! Levi-Civita connection of a grid metric and the tensors built from it.
//!
//! Curvature follows `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]} Z` with
//! `ric(Y,Z) = tr(X ↦ R(X,Y)Z)`, so a round sphere has positive Ricci
//! curvature and `ric = K g` in two dimensions.

use crate::calculus::{div, flat_g, integrate, laplacian1, sharp_g};
use crate::fields::{Components, MetricField, OneFormField, ScalarField, VectorField};
use crate::grid::{Axis, GridSpec};

const AXES: [Axis; 2] = [Axis::X, Axis::Y];

/// Christoffel symbols `Γ^k_{ij}`, symmetric in the lower pair.
#[derive(Debug, Clone)]
pub struct ChristoffelField {
    grid: GridSpec,
    // [k][ij] with ij = 0 → (1,1), 1 → (1,2), 2 → (2,2)
    gamma: [[Vec<f64>; 3]; 2],
}

fn pair(i: usize, j: usize) -> usize {
    i + j
}

impl ChristoffelField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `Γ^k_{ij}` with zero-based indices.
    pub fn get(&self, k: usize, i: usize, j: usize) -> &[f64] {
        &self.gamma[k][pair(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.gamma
            .iter()
            .flatten()
            .flat_map(|v| v.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})`.
pub fn christoffels(g: &MetricField) -> ChristoffelField {
    let grid = *g.grid();
    let len = grid.len();
    // dg[m][ab] = ∂_m g_ab
    let dg: Vec<[Vec<f64>; 3]> = AXES
        .iter()
        .map(|&ax| [grid.diff(g.g11(), ax), grid.diff(g.g12(), ax), grid.diff(g.g22(), ax)])
        .collect();
    let d = |m: usize, a: usize, b: usize| &dg[m][pair(a, b)];
    let mut gamma: [[Vec<f64>; 3]; 2] = Default::default();
    for k in 0..2 {
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let mut out = vec![0.0; len];
            for l in 0..2 {
                let (a, b, c) = (d(i, j, l), d(j, i, l), d(l, i, j));
                let up = g.upper(k, l);
                for p in 0..len {
                    out[p] += 0.5 * up[p] * (a[p] + b[p] - c[p]);
                }
            }
            gamma[k][pair(i, j)] = out;
        }
    }
    ChristoffelField { grid, gamma }
}

/// Symmetric (0,2)-tensor `T = T11 dx² + 2 T12 dx dy + T22 dy²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    grid: GridSpec,
    t11: Vec<f64>,
    t12: Vec<f64>,
    t22: Vec<f64>,
}

impl Components for SymTensorField {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }
    fn components(&self) -> Vec<&[f64]> {
        vec![&self.t11, &self.t12, &self.t22]
    }
    fn components_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.t11, &mut self.t12, &mut self.t22]
    }
}

impl SymTensorField {
    pub fn new(t11: &ScalarField, t12: &ScalarField, t22: &ScalarField) -> Self {
        assert!(t11.grid() == t12.grid() && t12.grid() == t22.grid(), "grid mismatch");
        SymTensorField {
            grid: *t11.grid(),
            t11: t11.values().to_vec(),
            t12: t12.values().to_vec(),
            t22: t22.values().to_vec(),
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        SymTensorField { grid, t11: vec![0.0; grid.len()], t12: vec![0.0; grid.len()], t22: vec![0.0; grid.len()] }
    }

    /// The metric itself viewed as a tensor.
    pub fn from_metric(g: &MetricField) -> Self {
        SymTensorField { grid: *g.grid(), t11: g.g11().to_vec(), t12: g.g12().to_vec(), t22: g.g22().to_vec() }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn t11(&self) -> &[f64] {
        &self.t11
    }

    pub fn t12(&self) -> &[f64] {
        &self.t12
    }

    pub fn t22(&self) -> &[f64] {
        &self.t22
    }

    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        match pair(i, j) {
            0 => &self.t11,
            1 => &self.t12,
            _ => &self.t22,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|a| c * a).collect();
        SymTensorField { grid: self.grid, t11: s(&self.t11), t12: s(&self.t12), t22: s(&self.t22) }
    }

    /// `self + f · other` with a pointwise coefficient.
    pub fn add_scaled(&self, f: &[f64], other: &SymTensorField) -> Self {
        let s = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).zip(f).map(|((p, q), w)| p + w * q).collect();
        SymTensorField {
            grid: self.grid,
            t11: s(&self.t11, &other.t11),
            t12: s(&self.t12, &other.t12),
            t22: s(&self.t22, &other.t22),
        }
    }

    /// Pointwise `T(X, Y)`.
    pub fn eval(&self, a: &VectorField, b: &VectorField) -> ScalarField {
        let (ax, ay, bx, by) = (a.comp_x(), a.comp_y(), b.comp_x(), b.comp_y());
        let v = (0..self.grid.len())
            .map(|k| {
                self.t11[k] * ax[k] * bx[k]
                    + self.t12[k] * (ax[k] * by[k] + ay[k] * bx[k])
                    + self.t22[k] * ay[k] * by[k]
            })
            .collect();
        ScalarField::from_vec(self.grid, v)
    }

    /// Pointwise `tr_g T = g^{ij} T_ij`.
    pub fn trace(&self, g: &MetricField) -> ScalarField {
        let v = (0..self.grid.len())
            .map(|k| g.inv11()[k] * self.t11[k] + 2.0 * g.inv12()[k] * self.t12[k] + g.inv22()[k] * self.t22[k])
            .collect();
        ScalarField::from_vec(self.grid, v)
    }

    /// Pointwise `|T|²_g = g^{ik} g^{jl} T_ij T_kl`.
    pub fn norm2(&self, g: &MetricField) -> ScalarField {
        tensor_norm2(g, |i, j, k| self.get(i, j)[k])
    }

    /// `‖T‖_{L²(g)}`.
    pub fn l2_norm(&self, g: &MetricField) -> f64 {
        integrate(&self.norm2(g), g).max(0.0).sqrt()
    }
}

fn tensor_norm2(g: &MetricField, t: impl Fn(usize, usize, usize) -> f64) -> ScalarField {
    let grid = *g.grid();
    let v = (0..grid.len())
        .map(|p| {
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            s += g.upper(i, k)[p] * g.upper(j, l)[p] * t(i, j, p) * t(k, l, p);
                        }
                    }
                }
            }
            s
        })
        .collect();
    ScalarField::from_vec(grid, v)
}

/// `(∇_X Y)^k = X^i ∂_i Y^k + Γ^k_{ij} X^i Y^j`.
pub fn cov_deriv_vec(x: &VectorField, y: &VectorField, gamma: &ChristoffelField) -> VectorField {
    let grid = *x.grid();
    let xs = [x.comp_x(), x.comp_y()];
    let ys = [y.comp_x(), y.comp_y()];
    let mut out = [x.derivative_of(&y.x_field()).into_values(), x.derivative_of(&y.y_field()).into_values()];
    for (k, o) in out.iter_mut().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                let c = gamma.get(k, i, j);
                for p in 0..grid.len() {
                    o[p] += c[p] * xs[i][p] * ys[j][p];
                }
            }
        }
    }
    let [a, b] = out;
    VectorField::from_vecs(grid, a, b)
}

/// Full covariant derivative of a 1-form, `(∇φ)_{ij} = ∂_i φ_j − Γ^k_{ij} φ_k`,
/// returned as `[[∇_1φ_1, ∇_1φ_2], [∇_2φ_1, ∇_2φ_2]]`.
pub fn nabla_form(phi: &OneFormField, gamma: &ChristoffelField) -> [[Vec<f64>; 2]; 2] {
    let grid = *phi.grid();
    let comps = [phi.comp_x(), phi.comp_y()];
    let mut out: [[Vec<f64>; 2]; 2] = Default::default();
    for (i, &ax) in AXES.iter().enumerate() {
        for j in 0..2 {
            let mut v = grid.diff(comps[j], ax);
            for k in 0..2 {
                let c = gamma.get(k, i, j);
                for p in 0..grid.len() {
                    v[p] -= c[p] * comps[k][p];
                }
            }
            out[i][j] = v;
        }
    }
    out
}

/// `(∇φ)^sym(X, Y) = (∇_X φ)(Y) + (∇_Y φ)(X)`.
pub fn nabla_sym(phi: &OneFormField, gamma: &ChristoffelField) -> SymTensorField {
    let n = nabla_form(phi, gamma);
    let add = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(p, q)| p + q).collect();
    SymTensorField { grid: *phi.grid(), t11: add(&n[0][0], &n[0][0]), t12: add(&n[0][1], &n[1][0]), t22: add(&n[1][1], &n[1][1]) }
}

/// `‖∇φ‖²` with the full tensor norm.
pub fn nabla_norm2(phi: &OneFormField, g: &MetricField, gamma: &ChristoffelField) -> f64 {
    let n = nabla_form(phi, gamma);
    integrate(&tensor_norm2(g, |i, j, p| n[i][j][p]), g)
}

/// `‖(∇♭Y)^sym‖_{L²}`; zero exactly for Killing fields.
pub fn killing_defect(y: &VectorField, g: &MetricField, gamma: &ChristoffelField) -> f64 {
    nabla_sym(&flat_g(y, g), gamma).l2_norm(g)
}

/// The tensor `(∇♭Y)^sym + (div Y) g`; integrated against `X ⊗ X` it gives `2⟨adᵀ X, Y⟩`.
pub fn killing_plus_div(y: &VectorField, g: &MetricField, gamma: &ChristoffelField) -> SymTensorField {
    let t = nabla_sym(&flat_g(y, g), gamma);
    let dv = div(y, g);
    t.add_scaled(dv.values(), &SymTensorField::from_metric(g))
}

/// Max-norm of `tr_g[(∇♭Y)^sym + (div Y) g] − (n + 2) div Y` with `n = 2`.
pub fn trace_identity_residual(y: &VectorField, g: &MetricField, gamma: &ChristoffelField) -> f64 {
    let tr = killing_plus_div(y, g, gamma).trace(g);
    let dv = div(y, g);
    tr.values().iter().zip(dv.values()).map(|(t, d)| (t - 4.0 * d).abs()).fold(0.0, f64::max)
}

/// Riemann tensor `R^l_{ijk}` with `R(∂_i, ∂_j)∂_k = R^l_{ijk} ∂_l`, indexed `[l][i][j][k]`.
fn riemann(gamma: &ChristoffelField) -> Vec<Vec<f64>> {
    let grid = *gamma.grid();
    let len = grid.len();
    // dgam[m][k][i][j] = ∂_m Γ^k_{ij}
    let dgam: Vec<Vec<Vec<f64>>> = AXES
        .iter()
        .map(|&ax| {
            (0..2)
                .flat_map(|k| (0..3).map(move |ij| (k, ij)))
                .map(|(k, ij)| grid.diff(&gamma.gamma[k][ij], ax))
                .collect()
        })
        .collect();
    let dg = |m: usize, k: usize, i: usize, j: usize| &dgam[m][k * 3 + pair(i, j)];
    let mut r = vec![vec![0.0; len]; 16];
    for l in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let out = &mut r[((l * 2 + i) * 2 + j) * 2 + k];
                    let (a, b) = (dg(i, l, j, k), dg(j, l, i, k));
                    for p in 0..len {
                        out[p] = a[p] - b[p];
                    }
                    for m in 0..2 {
                        let (g1, g2) = (gamma.get(l, i, m), gamma.get(m, j, k));
                        let (g3, g4) = (gamma.get(l, j, m), gamma.get(m, i, k));
                        for p in 0..len {
                            out[p] += g1[p] * g2[p] - g3[p] * g4[p];
                        }
                    }
                }
            }
        }
    }
    r
}

/// Ricci tensor `ric_{jk} = R^i_{ijk}`.
pub fn ricci(_g: &MetricField, gamma: &ChristoffelField) -> SymTensorField {
    let r = riemann(gamma);
    let idx = |l: usize, i: usize, j: usize, k: usize| ((l * 2 + i) * 2 + j) * 2 + k;
    let comp = |j: usize, k: usize| {
        let (a, b) = (&r[idx(0, 0, j, k)], &r[idx(1, 1, j, k)]);
        a.iter().zip(b).map(|(p, q)| p + q).collect::<Vec<f64>>()
    };
    SymTensorField { grid: *gamma.grid(), t11: comp(0, 0), t12: comp(0, 1), t22: comp(1, 1) }
}

/// Gauss curvature `K = ½ tr_g ric`.
pub fn gauss_curvature(g: &MetricField, gamma: &ChristoffelField) -> ScalarField {
    ricci(g, gamma).trace(g).scale(0.5)
}

/// Max-norm of `ric − K g`, which vanishes identically on surfaces.
pub fn ricci_minus_kg(g: &MetricField, gamma: &ChristoffelField) -> f64 {
    let ric = ricci(g, gamma);
    let k = ric.trace(g).scale(-0.5);
    ric.add_scaled(k.values(), &SymTensorField::from_metric(g)).max_abs()
}

/// Pointwise `ric(♯a, ♯b)`.
pub fn ricci_form_pairing(a: &OneFormField, b: &OneFormField, g: &MetricField, gamma: &ChristoffelField) -> ScalarField {
    ricci(g, gamma).eval(&sharp_g(a, g), &sharp_g(b, g))
}

/// Relative defect of the integrated Bochner identity
/// `⟨Δφ, φ⟩ = ‖∇φ‖² + ∫ ric(φ, φ) μ`, normalized by `‖φ‖²`.
pub fn bochner_residual(phi: &OneFormField, g: &MetricField, gamma: &ChristoffelField) -> f64 {
    let lap = laplacian1(phi, g);
    let lhs = crate::calculus::inner_product(&lap, phi, g).expect("grid mismatch");
    let grad2 = nabla_norm2(phi, g, gamma);
    let ric = integrate(&ricci_form_pairing(phi, phi, g, gamma), g);
    let n2 = crate::calculus::norm(phi, g).powi(2);
    (lhs - grad2 - ric).abs() / n2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_metric_has_vanishing_connection_and_curvature() {
        let grid = GridSpec::spectral(16).unwrap();
        let g = MetricField::flat(grid);
        let gam = christoffels(&g);
        assert_eq!(gam.max_abs(), 0.0);
        assert_eq!(ricci(&g, &gam).max_abs(), 0.0);
    }

    #[test]
    fn christoffels_are_symmetric_by_construction() {
        let grid = GridSpec::spectral(16).unwrap();
        let g11 = ScalarField::from_fn(grid, |x, y| 1.5 + 0.3 * (x + y).cos());
        let g12 = ScalarField::from_fn(grid, |x, _| 0.2 * x.sin());
        let g22 = ScalarField::from_fn(grid, |_, y| 1.0 + 0.2 * y.sin());
        let g = MetricField::from_components(&g11, &g12, &g22).unwrap();
        let gam = christoffels(&g);
        for k in 0..2 {
            assert_eq!(gam.get(k, 0, 1), gam.get(k, 1, 0));
        }
    }
}
