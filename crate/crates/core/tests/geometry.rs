mod common;

use std::f64::consts::PI;

use common::*;
use geoflow_core::calculus::{d1, integrate, lie_bracket, sharp_g};
use geoflow_core::geometry::*;
use geoflow_core::hodge::harmonic_basis;
use geoflow_core::{Axis, Components, MetricField, OneFormField, ScalarField, VectorField};

#[test]
fn conformal_christoffels_match_closed_form() {
    let n = 64;
    let gr = grid(n);
    let phi = |x: f64, y: f64| 0.2 * x.cos() + 0.1 * y.sin();
    let px = ScalarField::from_fn(gr, |x, _| -0.2 * x.sin());
    let py = ScalarField::from_fn(gr, |_, y| 0.1 * y.cos());
    let g = MetricField::conformal(&ScalarField::from_fn(gr, phi)).unwrap();
    let gam = christoffels(&g);
    let neg = |f: &ScalarField| f.scale(-1.0);
    let cases = [
        (0, 0, 0, px.clone()),
        (0, 1, 1, neg(&px)),
        (0, 0, 1, py.clone()),
        (1, 1, 1, py.clone()),
        (1, 0, 0, neg(&py)),
        (1, 0, 1, px.clone()),
    ];
    for (k, i, j, want) in cases {
        let r = max_diff(gam.get(k, i, j), want.values());
        assert!(r < 1e-10, "Γ^{k}_{i}{j}: {r}");
    }
}

#[test]
fn connection_is_metric_compatible() {
    for g in [conformal(64, 0.2), general(64)] {
        let gr = *g.grid();
        let gam = christoffels(&g);
        let mut worst: f64 = 0.0;
        for (k, ax) in [(0, Axis::X), (1, Axis::Y)] {
            for i in 0..2 {
                for j in 0..2 {
                    let dg = gr.diff(g.lower(i, j), ax);
                    for p in 0..gr.len() {
                        let mut v = dg[p];
                        for l in 0..2 {
                            v -= gam.get(l, k, i)[p] * g.lower(l, j)[p] + gam.get(l, k, j)[p] * g.lower(i, l)[p];
                        }
                        worst = worst.max(v.abs());
                    }
                }
            }
        }
        assert!(worst <= 1e-8, "{worst}");
    }
}

#[test]
fn covariant_derivative_examples() {
    let g = flat(64);
    let gr = *g.grid();
    let gam = christoffels(&g);
    let r = cov_deriv_vec(&VectorField::constant(gr, 1.0, 0.0), &VectorField::from_fn(gr, |_, _| 0.0, |x, _| x.sin()), &gam);
    assert!((&r - &VectorField::from_fn(gr, |_, _| 0.0, |x, _| x.cos())).max_abs() < 1e-13);
    let shear = VectorField::from_fn(gr, |_, y| y.sin(), |_, _| 0.0);
    assert!(cov_deriv_vec(&shear, &shear, &gam).max_abs() < 1e-14);
}

#[test]
fn connection_is_torsion_free() {
    for g in [flat(64), conformal(64, 0.2), general(64)] {
        let gam = christoffels(&g);
        for k in 0..3 {
            let (x, y) = (trig_vector(64, k), trig_vector(64, k + 3));
            let t = &(&cov_deriv_vec(&x, &y, &gam) - &cov_deriv_vec(&y, &x, &gam)) - &lie_bracket(&x, &y);
            assert!(t.max_abs() <= 1e-10, "{}", t.max_abs());
        }
    }
}

#[test]
fn symmetrized_derivative_examples() {
    let g = flat(64);
    let gr = *g.grid();
    let gam = christoffels(&g);
    assert_eq!(nabla_sym(&OneFormField::constant(gr, 1.0, 0.0), &gam).max_abs(), 0.0);
    let t = nabla_sym(&OneFormField::from_fn(gr, |_, y| y.sin(), |_, _| 0.0), &gam);
    assert!(max_diff(t.t12(), ScalarField::from_fn(gr, |_, y| y.cos()).values()) < 1e-13);
    assert!(t.t11().iter().chain(t.t22()).all(|v| v.abs() < 1e-13));
}

#[test]
fn antisymmetric_part_is_exterior_derivative() {
    for g in [flat(64), conformal(64, 0.2), general(64)] {
        let gam = christoffels(&g);
        let phi = trig_form(64, 3);
        let nab = nabla_form(&phi, &gam);
        let anti: Vec<f64> = nab[0][1].iter().zip(&nab[1][0]).map(|(a, b)| a - b).collect();
        assert!(max_diff(&anti, d1(&phi).density()) <= 1e-10);
    }
}

#[test]
fn killing_defect_examples() {
    let g = flat(64);
    let gr = *g.grid();
    let gam = christoffels(&g);
    assert!(killing_defect(&VectorField::constant(gr, 1.0, 0.0), &g, &gam) <= 1e-12);
    // (∇♭Y)^sym has T12 = T21 = cos y, so |T|² = 2cos²y; quadrature of that closed form:
    let oracle = integrate(&ScalarField::from_fn(gr, |_, y| 2.0 * y.cos().powi(2)), &g).sqrt();
    let val = killing_defect(&VectorField::from_fn(gr, |_, y| y.sin(), |_, _| 0.0), &g, &gam);
    assert!((val - oracle).abs() < 1e-12 && (val - 2.0 * PI).abs() < 1e-12, "{val}");
}

#[test]
fn harmonic_fields_of_curved_metrics_are_not_killing() {
    let vals: Vec<f64> = [64, 128]
        .iter()
        .map(|&n| {
            let g = conformal(n, 0.2);
            let b = harmonic_basis(&g).unwrap();
            killing_defect(&sharp_g(&b.beta[0], &g), &g, &christoffels(&g))
        })
        .collect();
    assert!(vals[0] > 1e-2, "{vals:?}");
    assert!((vals[0] - vals[1]).abs() <= 1e-6, "{vals:?}");
}

#[test]
fn translation_along_symmetry_is_killing() {
    let g = product(64);
    let gam = christoffels(&g);
    let v = killing_defect(&VectorField::constant(*g.grid(), 1.0, 0.0), &g, &gam);
    assert!(v <= 1e-10, "{v}");
}

#[test]
fn trace_identity_holds() {
    for (g, tol) in [(flat(64), 1e-10), (conformal(64, 0.2), 1e-8), (general(64), 1e-8)] {
        let gam = christoffels(&g);
        assert_eq!(trace_identity_residual(&VectorField::zeros(*g.grid()), &g, &gam), 0.0);
        for k in 0..4 {
            let r = trace_identity_residual(&trig_vector(64, k), &g, &gam);
            assert!(r <= tol, "{r}");
        }
    }
}

#[test]
fn flat_curvature_vanishes() {
    let g = flat(64);
    let gam = christoffels(&g);
    assert_eq!(gauss_curvature(&g, &gam).max_abs(), 0.0);
    assert_eq!(ricci(&g, &gam).max_abs(), 0.0);
}

#[test]
fn conformal_curvature_matches_closed_form() {
    let a = 0.2;
    let g = conformal(64, a);
    let gam = christoffels(&g);
    let k = gauss_curvature(&g, &gam);
    // K = −e^{−2φ} Δ_flat φ with φ = a cos x
    let want = ScalarField::from_fn(*g.grid(), |x, _| a * x.cos() * (-2.0 * a * x.cos()).exp());
    assert!(max_diff(k.values(), want.values()) <= 1e-8);
    assert!(k.values()[0] > 0.0);
    assert!(ricci_minus_kg(&g, &gam) <= 1e-8);
    assert!(ricci_minus_kg(&general(64), &christoffels(&general(64))) <= 1e-8);
}

#[test]
fn total_curvature_of_a_torus_vanishes() {
    // Gauss–Bonnet
    let g = product(64);
    let k = gauss_curvature(&g, &christoffels(&g));
    assert!(integrate(&k, &g).abs() <= 1e-10);
    assert!(k.max_abs() > 1e-2);
}

#[test]
fn bochner_flat() {
    let g = flat(64);
    let gr = *g.grid();
    let gam = christoffels(&g);
    assert!(bochner_residual(&OneFormField::constant(gr, 1.0, 0.0), &g, &gam) <= 1e-10);
    let r = bochner_residual(&OneFormField::from_fn(gr, |x, _| x.sin(), |_, _| 0.0), &g, &gam);
    assert!(r <= 1e-10, "{r}");
}

#[test]
fn bochner_curved_improves_with_resolution() {
    let r: Vec<f64> = [64, 128]
        .iter()
        .map(|&n| {
            let g = conformal(n, 0.2);
            let b = harmonic_basis(&g).unwrap();
            bochner_residual(&b.beta[0], &g, &christoffels(&g))
        })
        .collect();
    assert!(r[0] <= 1e-4 && r[1] <= 1e-6, "{r:?}");
    for g in [general(64), product(64)] {
        let b = harmonic_basis(&g).unwrap();
        let gam = christoffels(&g);
        for beta in &b.beta {
            assert!(bochner_residual(beta, &g, &gam) <= 1e-4);
        }
    }
}
