mod common;

use common::*;
use geoflow_core::calculus::{div, hamiltonian, norm};
use geoflow_core::euler_arnold::*;
use geoflow_core::fieldexpr::eval_expression;
use geoflow_core::hodge::{harmonic_coefficients, project_divfree};
use geoflow_core::{Components, GeoError, MetricField, VectorField};

/// Initial stream function with no point-reflection symmetry; the
/// symmetric choice `cos x cos y` has identically vanishing drift on
/// metrics that depend on `x` through `cos x` only.
const ASYMMETRIC_F0: &str = "(cos(x) + sin(x))*cos(y)";

fn ham(src: &str, g: &MetricField) -> VectorField {
    hamiltonian(&eval_expression(src, g.grid()).unwrap(), g)
}

#[test]
fn full_adjoint_examples() {
    let g = flat(64);
    let gr = *g.grid();
    let ctx = FlowContext::new(g.clone()).unwrap();
    assert_eq!(adt_full(&VectorField::constant(gr, 1.0, 0.0), &g, &ctx.gamma).max_abs(), 0.0);
    let r = adt_full(&VectorField::from_fn(gr, |_, y| y.sin(), |_, _| 0.0), &g, &ctx.gamma);
    let want = VectorField::from_fn(gr, |_, _| 0.0, |_, y| -y.sin() * y.cos());
    assert!((&r - &want).max_abs() < 1e-13);
}

#[test]
fn volume_adjoint_examples() {
    let g = flat(64);
    let gr = *g.grid();
    let ctx = FlowContext::new(g.clone()).unwrap();
    let shear = VectorField::from_fn(gr, |_, y| y.sin(), |_, _| 0.0);
    assert!(adt_vol(&shear, &g, &ctx.gamma).unwrap().max_abs() < 1e-13);
    let cell = VectorField::from_fn(gr, |_, y| y.sin(), |x, _| x.sin());
    assert!(adt_vol(&cell, &g, &ctx.gamma).unwrap().max_abs() <= 1e-12);
    let compressible = VectorField::from_fn(gr, |x, _| x.sin(), |_, _| 0.0);
    assert!(matches!(adt_vol(&compressible, &g, &ctx.gamma), Err(GeoError::NotDivergenceFree(_))));
}

#[test]
fn projected_full_adjoint_is_volume_adjoint() {
    for g in [conformal(64, 0.2), general(64)] {
        let ctx = FlowContext::new(g.clone()).unwrap();
        for k in 0..3 {
            let x = project_divfree(&trig_vector(64, k), &g).unwrap();
            let a = adt_vol(&x, &g, &ctx.gamma).unwrap();
            let b = project_divfree(&adt_full(&x, &g, &ctx.gamma), &g).unwrap();
            assert!((&a - &b).max_abs() <= 1e-8 * a.max_abs().max(1.0), "{}", (&a - &b).max_abs());
        }
    }
}

#[test]
fn symplectic_adjoint_examples() {
    let g = flat(64);
    let ctx = FlowContext::new(g.clone()).unwrap();
    let x = ham("sin(x)", &g);
    assert!(adt_sym(&x, &g, &ctx.gamma, &ctx.basis).unwrap().max_abs() <= 1e-8);
    for src in ["sin(x)*cos(y)", ASYMMETRIC_F0, "cos(x)*cos(y) + 0.5*cos(2*x)"] {
        let r = adt_sym(&ham(src, &g), &g, &ctx.gamma, &ctx.basis).unwrap();
        let c = harmonic_coefficients(&r, &ctx.basis, &g).unwrap();
        assert!(c[0].abs() <= 1e-8 && c[1].abs() <= 1e-8);
    }
    let compressible = VectorField::from_fn(*g.grid(), |x, _| x.sin(), |_, _| 0.0);
    assert!(matches!(adt_sym(&compressible, &g, &ctx.gamma, &ctx.basis), Err(GeoError::NotSymplectic(_))));
}

#[test]
fn symplectic_and_volume_adjoints_coincide_on_surfaces() {
    for g in [flat(64), conformal(64, 0.2), general(64)] {
        let ctx = FlowContext::new(g.clone()).unwrap();
        let x = &ham(ASYMMETRIC_F0, &g) + &VectorField::constant(*g.grid(), 0.3, 0.0);
        let x = project_divfree(&x, &g).unwrap();
        let a = adt_sym(&x, &g, &ctx.gamma, &ctx.basis).unwrap();
        let b = adt_vol(&x, &g, &ctx.gamma).unwrap();
        assert!((&a - &b).max_abs() <= 1e-8, "{}", (&a - &b).max_abs());
    }
}

#[test]
fn steady_shear_is_steady() {
    let g = flat(64);
    let ctx = FlowContext::new(g.clone()).unwrap();
    let x0 = VectorField::from_fn(*g.grid(), |_, y| y.sin(), |_, _| 0.0);
    for group in [Group::Vol, Group::Sym] {
        let cfg = IntegratorConfig { dt: 1e-2, t_end: 1.0, group, ..Default::default() };
        let tr = evolve(&x0, &cfg, &ctx).unwrap();
        assert!((&tr.final_state.x - &x0).max_abs() <= 1e-12);
        assert!(tr.energy_drift() <= 1e-10);
    }
}

#[test]
fn eigenfunction_stream_function_is_steady() {
    let g = flat(64);
    let ctx = FlowContext::new(g.clone()).unwrap();
    let x0 = ham("sin(x)", &g);
    let cfg = IntegratorConfig { dt: 1e-2, t_end: 1.0, ..Default::default() };
    let tr = evolve(&x0, &cfg, &ctx).unwrap();
    assert!((&tr.final_state.x - &x0).max_abs() <= 1e-8);
}

#[test]
fn flat_hamiltonian_flow_stays_hamiltonian() {
    let g = flat(64);
    let ctx = FlowContext::new(g.clone()).unwrap();
    for src in ["sin(x)*cos(y)", "cos(x)*cos(y) + 0.5*cos(2*x)"] {
        let cfg = IntegratorConfig { dt: 1e-3, t_end: 1.0, ..Default::default() };
        let tr = evolve(&ham(src, &g), &cfg, &ctx).unwrap();
        assert!(tr.max_abs_coeff() <= 1e-8, "{src}: {}", tr.max_abs_coeff());
        assert!(tr.energy_drift() <= 1e-6);
        assert!(tr.max_div_norm() <= 1e-6);
    }
}

fn drift_slope(n: usize) -> ([f64; 2], [f64; 2], [f64; 2], [f64; 2]) {
    let g = conformal(n, 0.2);
    let ctx = FlowContext::new(g.clone()).unwrap();
    let x0 = ham(ASYMMETRIC_F0, &g);
    let dt = 1e-3;
    let mut x = x0.clone();
    for _ in 0..10 {
        x = rk4_step(&x, dt, &ctx, Group::Sym).unwrap();
    }
    let t = 10.0 * dt;
    let (c0, c1) = (harmonic_coefficients(&x0, &ctx.basis, &g).unwrap(), harmonic_coefficients(&x, &ctx.basis, &g).unwrap());
    let (s0, s1) = (symplectic_coefficients(&x0, &ctx.basis, &g).unwrap(), symplectic_coefficients(&x, &ctx.basis, &g).unwrap());
    let (gs, ws) = harmonic_fields(&ctx);
    (
        [(c1[0] - c0[0]) / t, (c1[1] - c0[1]) / t],
        [drift_rate(&x0, &gs[0], &g), drift_rate(&x0, &gs[1], &g)],
        [(s1[0] - s0[0]) / t, (s1[1] - s0[1]) / t],
        [drift_rate(&x0, &ws[0], &g), drift_rate(&x0, &ws[1], &g)],
    )
}

#[test]
fn conformal_drift_rate_matches_bracket_pairing() {
    let (slope_c, rate_c, slope_s, rate_s) = drift_slope(64);
    for (slope, rate) in [(slope_c, rate_c), (slope_s, rate_s)] {
        let big = if rate[0].abs() > rate[1].abs() { 0 } else { 1 };
        assert!(rate[big].abs() > 1e-4);
        assert!((slope[big] - rate[big]).abs() <= 0.02 * rate[big].abs(), "{slope:?} vs {rate:?}");
        assert!((slope[1 - big] - rate[1 - big]).abs() <= 0.02 * rate[big].abs());
    }
    let (_, fine, _, _) = drift_slope(128);
    assert!((fine[0] - rate_c[0]).abs() <= 1e-6 && (fine[1] - rate_c[1]).abs() <= 1e-6);
}

#[test]
fn conformal_flow_leaves_the_hamiltonian_subgroup() {
    let g = conformal(64, 0.2);
    let ctx = FlowContext::new(g.clone()).unwrap();
    let cfg = IntegratorConfig { dt: 1e-3, t_end: 0.5, ..Default::default() };
    let tr = evolve(&ham(ASYMMETRIC_F0, &g), &cfg, &ctx).unwrap();
    assert!(tr.max_abs_coeff() >= 1e-4, "{}", tr.max_abs_coeff());
    assert!(tr.energy_drift() <= 1e-6, "{}", tr.energy_drift());
    assert!(tr.max_div_norm() <= 1e-6);
}

fn terminal(dt: f64, ctx: &FlowContext, x0: &VectorField, group: Group) -> VectorField {
    let cfg = IntegratorConfig { dt, t_end: 1.0, group, ..Default::default() };
    evolve(x0, &cfg, ctx).unwrap().final_state.x
}

#[test]
fn integrator_is_fourth_order() {
    let g = flat(32);
    let ctx = FlowContext::new(g.clone()).unwrap();
    let x0 = ham("cos(x)*cos(y) + 0.5*cos(2*x)", &g);
    let dt = 0.04;
    let reference = terminal(dt / 8.0, &ctx, &x0, Group::Vol);
    let e1 = norm(&(&terminal(dt, &ctx, &x0, Group::Vol) - &reference), &g);
    let e2 = norm(&(&terminal(dt / 2.0, &ctx, &x0, Group::Vol) - &reference), &g);
    assert!(e1 / e2 >= 8.0, "{e1:e} {e2:e}");
}

#[test]
fn snapshots_and_csv() {
    let g = flat(16);
    let ctx = FlowContext::new(g.clone()).unwrap();
    let cfg = IntegratorConfig { dt: 0.05, t_end: 0.2, record_every: 2, snapshots: true, ..Default::default() };
    let tr = evolve(&ham("sin(x)*cos(y)", &g), &cfg, &ctx).unwrap();
    assert_eq!(tr.records.len(), 3);
    assert_eq!(tr.snapshots.len(), 3);
    let csv = tr.to_csv();
    assert!(csv.starts_with("t,energy,div_norm,c1,c2\n"));
    assert_eq!(csv.lines().count(), 4);
    assert!(div(&tr.final_state.x, &g).max_abs() < 1e-12);
}
