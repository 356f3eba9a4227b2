mod common;

use std::f64::consts::{PI, TAU};

use common::*;
use geoflow_core::calculus::{d0, d1, delta1, grad, inner_product, norm, div, sharp_g};
use geoflow_core::geometry::{christoffels, nabla_norm2};
use geoflow_core::hodge::*;
use geoflow_core::{Components, GeoError, MetricField, OneFormField, ScalarField, VectorField};

#[test]
fn flat_poisson_examples() {
    let g = flat(64);
    let gr = *g.grid();
    let s = ScalarField::from_fn(gr, |x, _| x.sin());
    assert!(max_diff(poisson_solve(&s, &g).unwrap().values(), s.values()) < 1e-12);
    let c = ScalarField::from_fn(gr, |x, y| x.cos() * y.cos());
    assert!(max_diff(poisson_solve(&c.scale(2.0), &g).unwrap().values(), c.values()) < 1e-12);
    assert!(matches!(
        poisson_solve(&ScalarField::constant(gr, 1.0), &g),
        Err(GeoError::IncompatibleRhs { .. })
    ));
}

#[test]
fn poisson_residual_is_small_on_every_metric() {
    for g in [flat(64), conformal(64, 0.2), general(64), product(64)] {
        let rhs = geoflow_core::calculus::laplacian0(&trig_scalar(64, 2), &g);
        let f = poisson_solve(&rhs, &g).unwrap();
        let res = norm(&(&geoflow_core::calculus::laplacian0(&f, &g) - &rhs), &g) / norm(&rhs, &g);
        assert!(res <= 1e-10, "{res}");
        assert!(geoflow_core::calculus::integrate(&f, &g).abs() <= 1e-10);
    }
}

#[test]
fn flat_basis_is_normalized_coordinate_forms() {
    let b = harmonic_basis(&flat(64)).unwrap();
    let c = 1.0 / TAU;
    assert!(b.beta[0].comp_x().iter().all(|v| (v - c).abs() < 1e-14));
    assert!(b.beta[0].comp_y().iter().all(|v| v.abs() < 1e-14));
    assert!(b.beta[1].comp_y().iter().all(|v| (v - c).abs() < 1e-14));
}

/// On a surface the Hodge star on 1-forms depends only on the conformal
/// class, so the flat harmonic forms stay harmonic for `e^{2φ}δ` and the
/// normalization `∫ g^{11} √g = 4π²` is unchanged.
#[test]
fn conformal_basis_coincides_with_flat_one() {
    let g = conformal(64, 0.2);
    let b = harmonic_basis(&g).unwrap();
    let c = 1.0 / TAU;
    assert!(b.beta[0].comp_x().iter().all(|v| (v - c).abs() < 1e-12));
    for beta in &b.beta {
        assert!(harmonic_defect(beta, &g) <= 1e-10);
        // but they are not parallel for the curved metric
        assert!(nabla_norm2(beta, &g, &christoffels(&g)).sqrt() > 1e-2);
    }
}

/// Harmonic representatives for `g = g(y)` from the 1D reduction:
/// `δ(dx + f'(y) dy) = 0` gives `f' = (C√g + g₁₂)/g₁₁` with `C` fixed by `∮ f' = 0`,
/// and `δ(dy + f' dy) = 0` gives `dy`-coefficient `C'√g/g₁₁` with `∮ = 2π`.
fn product_oracle(n: usize) -> [(Vec<f64>, Vec<f64>); 2] {
    let ys: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
    let sq: Vec<f64> = ys.iter().map(|&y| (product_g11(y) * product_g22(y) - product_g12(y).powi(2)).sqrt()).collect();
    let mean = |v: &dyn Fn(usize) -> f64| (0..n).map(v).sum::<f64>() / n as f64;
    let c = -mean(&|j| product_g12(ys[j]) / product_g11(ys[j])) / mean(&|j| sq[j] / product_g11(ys[j]));
    let c2 = 1.0 / mean(&|j| sq[j] / product_g11(ys[j]));
    let first: Vec<f64> = (0..n).map(|j| (c * sq[j] + product_g12(ys[j])) / product_g11(ys[j])).collect();
    let second: Vec<f64> = (0..n).map(|j| c2 * sq[j] / product_g11(ys[j])).collect();
    let expand = |col: &[f64]| (0..n * n).map(|idx| col[idx / n]).collect::<Vec<f64>>();
    [(vec![1.0; n * n], expand(&first)), (vec![0.0; n * n], expand(&second))]
}

#[test]
fn product_metric_basis_matches_ode_reduction() {
    let n = 64;
    let g = product(n);
    let gr = *g.grid();
    let [(a1, a2), (b1, b2)] = product_oracle(n);
    let r1 = OneFormField::new(gr, a1, a2).unwrap();
    let r2 = OneFormField::new(gr, b1, b2).unwrap();
    let e1 = r1.scale(1.0 / norm(&r1, &g));
    let t = r2.axpy(-inner_product(&r2, &e1, &g).unwrap(), &e1);
    let e2 = t.scale(1.0 / norm(&t, &g));
    let b = harmonic_basis(&g).unwrap();
    assert!((&b.beta[0] - &e1).max_abs() <= 1e-10);
    assert!((&b.beta[1] - &e2).max_abs() <= 1e-10);
    for beta in &b.beta {
        assert!(harmonic_defect(beta, &g) <= 1e-10);
    }
    // nonconstant components
    assert!(b.beta[0].comp_y().iter().fold(0.0_f64, |m, v| m.max((v - b.beta[0].comp_y()[0]).abs())) > 1e-2);
}

#[test]
fn basis_invariants_on_every_metric() {
    for g in [flat(64), conformal(64, 0.2), general(64), product(64)] {
        let b = harmonic_basis(&g).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((b.gram[i][j] - want).abs() <= 1e-10);
            }
            assert!(d1(&b.beta[i]).max_abs() <= 1e-10);
            assert!(delta1(&b.beta[i], &g).max_abs() <= 1e-10);
        }
        let p = b.periods();
        assert!((p[0][0] * p[1][1] - p[0][1] * p[1][0]).abs() > 1e-3);
    }
}

#[test]
fn basis_converges_under_refinement() {
    let coarse = harmonic_basis(&general(64)).unwrap();
    let fine = harmonic_basis(&general(128)).unwrap();
    for k in 0..2 {
        let mut worst: f64 = 0.0;
        for j in 0..64 {
            for i in 0..64 {
                let c = j * 64 + i;
                let f = 2 * j * 128 + 2 * i;
                worst = worst.max((coarse.beta[k].comp_x()[c] - fine.beta[k].comp_x()[f]).abs());
                worst = worst.max((coarse.beta[k].comp_y()[c] - fine.beta[k].comp_y()[f]).abs());
            }
        }
        assert!(worst <= 1e-6, "{worst}");
    }
}

#[test]
fn flat_decomposition_examples() {
    let g = flat(64);
    let gr = *g.grid();
    let exact_in = OneFormField::from_fn(gr, |x, _| x.cos(), |_, _| 0.0);
    let co_in = OneFormField::from_fn(gr, |_, y| y.sin(), |_, _| 0.0);
    let harm_in = OneFormField::constant(gr, 1.0, 0.0);

    let s = hodge_decompose(&exact_in, &g).unwrap();
    assert!((&s.exact - &exact_in).max_abs() < 1e-12);
    assert!(s.coexact.max_abs() < 1e-12 && s.harmonic.max_abs() < 1e-12);
    assert!(max_diff(s.f.values(), ScalarField::from_fn(gr, |x, _| x.sin()).values()) < 1e-12);

    let s = hodge_decompose(&co_in, &g).unwrap();
    assert!(s.exact.max_abs() < 1e-12 && s.harmonic.max_abs() < 1e-12);
    assert!((&s.coexact - &co_in).max_abs() < 1e-12);

    let sum = &(&exact_in + &co_in) + &harm_in;
    let s = hodge_decompose(&sum, &g).unwrap();
    assert!((&s.exact - &exact_in).max_abs() < 1e-12);
    assert!((&s.coexact - &co_in).max_abs() < 1e-12);
    assert!((&s.harmonic - &harm_in).max_abs() < 1e-12);
    assert!(s.orthogonality_defect(&g).unwrap() < 1e-12);
}

#[test]
fn decomposition_of_twenty_forms_on_three_metrics() {
    for g in [flat(64), conformal(64, 0.2), general(64)] {
        let basis = harmonic_basis(&g).unwrap();
        for k in 0..20 {
            let mut phi = trig_form(64, k);
            // give every form a cohomology class
            phi = phi.axpy(0.3 + 0.1 * k as f64, &OneFormField::constant(*g.grid(), 1.0, -0.5));
            let s = hodge_decompose_with(&phi, &g, &basis).unwrap();
            assert!(s.reconstruction_defect(&phi, &g) <= 1e-10);
            assert!(s.orthogonality_defect(&g).unwrap() <= 1e-10, "{}", s.orthogonality_defect(&g).unwrap());
            assert!(geoflow_core::hodge::harmonic_defect(&s.harmonic, &g) <= 1e-10);
            // coexact potential reproduces the coexact part
            let back = geoflow_core::calculus::delta2(&s.a, &g);
            assert!((&back - &s.coexact).max_abs() <= 1e-8 * phi.max_abs());
            // nothing harmonic outside the basis
            if k < 4 {
                assert!(extra_harmonic_residual(&phi, &g, &basis).unwrap() < 1e-8);
            }
        }
    }
}

#[test]
fn harmonic_part_preserves_cohomology_class() {
    let per = |f: &OneFormField| {
        let m = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64 * TAU;
        (m(f.comp_x()), m(f.comp_y()))
    };
    for g in [flat(64), conformal(64, 0.2), general(64)] {
        let basis = harmonic_basis(&g).unwrap();
        for k in 0..5 {
            let closed = &d0(&trig_scalar(64, k)) + &OneFormField::constant(*g.grid(), 0.4 - 0.1 * k as f64, 0.3);
            let s = hodge_decompose_with(&closed, &g, &basis).unwrap();
            let (p, q) = (per(&closed), per(&s.harmonic));
            assert!((p.0 - q.0).abs() <= 1e-8 && (p.1 - q.1).abs() <= 1e-8);
            assert!(s.coexact.max_abs() <= 1e-10);
        }
    }
}

#[test]
fn divergence_free_projection() {
    let g = flat(64);
    let gr = *g.grid();
    let w = grad(&ScalarField::from_fn(gr, |x, _| x.sin()), &g);
    assert!(project_divfree(&w, &g).unwrap().max_abs() < 1e-12);
    let shear = VectorField::from_fn(gr, |_, y| y.sin(), |_, _| 0.0);
    assert!((&project_divfree(&shear, &g).unwrap() - &shear).max_abs() < 1e-13);

    for g in [flat(64), conformal(64, 0.2), general(64)] {
        let w = trig_vector(64, 3);
        let p = project_divfree(&w, &g).unwrap();
        assert!(div(&p, &g).max_abs() <= 1e-10);
        let pp = project_divfree(&p, &g).unwrap();
        assert!(norm(&(&pp - &p), &g) <= 1e-10 * norm(&p, &g));
        let o = inner_product(&(&w - &p), &p, &g).unwrap();
        assert!(o.abs() <= 1e-10 * norm(&w, &g).powi(2));
    }
}

#[test]
fn coefficients_of_constant_flow() {
    let g = flat(64);
    let b = harmonic_basis(&g).unwrap();
    let c = harmonic_coefficients(&VectorField::constant(*g.grid(), 1.0, 0.0), &b, &g).unwrap();
    assert!((c[0] - TAU).abs() < 1e-12 && c[1].abs() < 1e-12);
    assert!((TAU - 2.0 * PI).abs() == 0.0);
}

#[test]
fn closed_projection_keeps_closed_forms() {
    for g in [conformal(64, 0.2), general(64)] {
        let b = harmonic_basis(&g).unwrap();
        let closed = &d0(&trig_scalar(64, 1)) + &OneFormField::constant(*g.grid(), 0.7, -0.2);
        let p = project_closed(&closed, &g, &b).unwrap();
        assert!((&p - &closed).max_abs() <= 1e-10);
        let any = trig_form(64, 2);
        let p = project_closed(&any, &g, &b).unwrap();
        assert!(d1(&p).max_abs() <= 1e-10);
        let w = trig_vector(64, 1);
        let ps = project_symplectic(&w, &g, &b).unwrap();
        assert!(div(&ps, &g).max_abs() <= 1e-10);
        let _ = sharp_g(&p, &g);
    }
}

#[test]
fn metric_mismatch_is_rejected() {
    let g: MetricField = flat(32);
    let f = trig_scalar(64, 0);
    assert!(matches!(poisson_solve(&f, &g), Err(GeoError::GridMismatch { left: 64, right: 32 })));
}
