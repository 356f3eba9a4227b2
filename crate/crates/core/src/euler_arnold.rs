//! Transposed adjoints `ad(X)ᵀX` for the full, volume-preserving and
//! symplectic groups, and the Euler–Arnold flow `d/dt X = ad(X)ᵀX`.
//!
//! The pairing convention is `⟨ad(X)ᵀX, Y⟩ = ⟨X, [X, Y]⟩` with the vector
//! field bracket, which is what makes the volume-preserving case the
//! incompressible Euler equation `Ẋ = −∇_X X − grad p`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calculus::{d1, div, flat_omega, grad, inner_product, metric_pairing, norm, sharp_g, sharp_omega};
use crate::error::{GeoError, Result};
use crate::fields::{Components, MetricField, VectorField};
use crate::geometry::{christoffels, cov_deriv_vec, ChristoffelField};
use crate::hodge::{harmonic_basis, harmonic_coefficients, project_closed, project_divfree, project_symplectic, solve_range, HarmonicBasis};

/// Relative tolerance for the algebra-membership preconditions.
pub const CONSTRAINT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Full,
    Vol,
    #[default]
    Sym,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Full => "full",
            Group::Vol => "vol",
            Group::Sym => "sym",
        })
    }
}

impl FromStr for Group {
    type Err = GeoError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Group::Full),
            "vol" => Ok(Group::Vol),
            "sym" => Ok(Group::Sym),
            other => Err(GeoError::Config(format!("unknown group {other:?}"))),
        }
    }
}

/// Metric data shared by every right-hand-side evaluation.
#[derive(Debug, Clone)]
pub struct FlowContext {
    pub metric: MetricField,
    pub gamma: ChristoffelField,
    pub basis: HarmonicBasis,
}

impl FlowContext {
    pub fn new(metric: MetricField) -> Result<Self> {
        let gamma = christoffels(&metric);
        let basis = harmonic_basis(&metric)?;
        Ok(FlowContext { metric, gamma, basis })
    }
}

fn scale_of(x: &VectorField) -> f64 {
    x.max_abs().max(1.0)
}

/// `−∇_X X − (div X) X − ½ grad g(X, X)`.
pub fn adt_full(x: &VectorField, g: &MetricField, gamma: &ChristoffelField) -> VectorField {
    let nab = cov_deriv_vec(x, x, gamma);
    let dv = div(x, g);
    let e = grad(&metric_pairing(x, x, g), g);
    let mut out = nab.scale(-1.0);
    out = out.axpy(-1.0, &x.times(&dv));
    out.axpy(-0.5, &e)
}

/// `−∇_X X − grad p` with `Δp = div(∇_X X)`; requires `div X ≈ 0`.
pub fn adt_vol(x: &VectorField, g: &MetricField, gamma: &ChristoffelField) -> Result<VectorField> {
    let d = div(x, g).max_abs() / scale_of(x);
    if d > CONSTRAINT_TOL {
        return Err(GeoError::NotDivergenceFree(d));
    }
    adt_vol_unchecked(x, g, gamma)
}

pub(crate) fn adt_vol_unchecked(x: &VectorField, g: &MetricField, gamma: &ChristoffelField) -> Result<VectorField> {
    let nab = cov_deriv_vec(x, x, gamma);
    let p = solve_range(&div(&nab, g), g)?;
    Ok(&nab.scale(-1.0) - &grad(&p, g))
}

/// `−♯_ω P_closed ♭_ω (∇_X X + ½ grad g(X, X))`; requires `♭_ω X` closed.
pub fn adt_sym(x: &VectorField, g: &MetricField, gamma: &ChristoffelField, basis: &HarmonicBasis) -> Result<VectorField> {
    let d = d1(&flat_omega(x, g)).max_abs() / scale_of(x);
    if d > CONSTRAINT_TOL {
        return Err(GeoError::NotSymplectic(d));
    }
    adt_sym_unchecked(x, g, gamma, basis)
}

pub(crate) fn adt_sym_unchecked(
    x: &VectorField,
    g: &MetricField,
    gamma: &ChristoffelField,
    basis: &HarmonicBasis,
) -> Result<VectorField> {
    let w = cov_deriv_vec(x, x, gamma).axpy(0.5, &grad(&metric_pairing(x, x, g), g));
    let closed = project_closed(&flat_omega(&w, g), g, basis)?;
    Ok(sharp_omega(&closed, g).scale(-1.0))
}

/// Transposed adjoint for `group`, without membership checks.
pub fn adt(x: &VectorField, ctx: &FlowContext, group: Group) -> Result<VectorField> {
    match group {
        Group::Full => Ok(adt_full(x, &ctx.metric, &ctx.gamma)),
        Group::Vol => adt_vol_unchecked(x, &ctx.metric, &ctx.gamma),
        Group::Sym => adt_sym_unchecked(x, &ctx.metric, &ctx.gamma, &ctx.basis),
    }
}

/// `d/dt X`, with 2/3-rule dealiasing in spectral mode.
pub fn geodesic_rhs(x: &VectorField, ctx: &FlowContext, group: Group) -> Result<VectorField> {
    let mut r = adt(x, ctx, group)?;
    dealias(&mut r);
    Ok(r)
}

fn dealias(v: &mut VectorField) {
    let grid = *v.grid();
    for c in v.components_mut() {
        grid.dealias(c);
    }
}

/// `c_i = ⟨X, ♯_ω β_i⟩`, the harmonic coefficients of `♭_ω X`.
pub fn symplectic_coefficients(x: &VectorField, basis: &HarmonicBasis, g: &MetricField) -> Result<[f64; 2]> {
    let fo = flat_omega(x, g);
    Ok([inner_product(&fo, &basis.beta[0], g)?, inner_product(&fo, &basis.beta[1], g)?])
}

/// Time-stepping parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub group: Group,
    pub reproject_every: usize,
    pub record_every: usize,
    /// Keep a copy of the velocity at every record point.
    #[serde(default)]
    pub snapshots: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { dt: 1e-3, t_end: 1.0, group: Group::Sym, reproject_every: 10, record_every: 10, snapshots: false }
    }
}

impl IntegratorConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(GeoError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(GeoError::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(GeoError::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps and the effective step that lands exactly on `t_end`.
    pub fn schedule(&self) -> (usize, f64) {
        let steps = (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize;
        if steps == 0 {
            (0, 0.0)
        } else {
            (steps, self.t_end / steps as f64)
        }
    }
}

/// Velocity at time `t` with its diagnostics.
#[derive(Debug, Clone)]
pub struct GeodesicState {
    pub t: f64,
    pub x: VectorField,
    /// `½ ⟨♭X, ♭X⟩`.
    pub energy: f64,
    /// `‖div X‖_{L²}`.
    pub div_norm: f64,
    /// `⟨♭X, β_i⟩`.
    pub harmonic_coeffs: [f64; 2],
}

impl GeodesicState {
    pub fn new(t: f64, x: VectorField, ctx: &FlowContext) -> Result<Self> {
        let g = &ctx.metric;
        let energy = 0.5 * norm(&x, g).powi(2);
        let div_norm = norm(&div(&x, g), g);
        let harmonic_coeffs = harmonic_coefficients(&x, &ctx.basis, g)?;
        Ok(GeodesicState { t, x, energy, div_norm, harmonic_coeffs })
    }
}

/// One diagnostic row of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Record {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    pub div_norm: f64,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub snapshots: Vec<(f64, VectorField)>,
    pub final_state: GeodesicState,
    /// Largest `‖div X‖` seen just before a re-projection.
    pub max_constraint_drift: f64,
    pub dt: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,energy,div_norm,c1,c2\n");
        for r in &self.records {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n", r.t, r.energy, r.div_norm, r.c1, r.c2));
        }
        s
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.records.iter().fold(0.0, |m, r| m.max(r.c1.abs()).max(r.c2.abs()))
    }

    pub fn max_div_norm(&self) -> f64 {
        self.records.iter().fold(self.max_constraint_drift, |m, r| m.max(r.div_norm))
    }

    /// `max |E(t) − E(0)| / E(0)`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = match self.records.first() {
            Some(r) if r.energy > 0.0 => r.energy,
            _ => return 0.0,
        };
        self.records.iter().fold(0.0, |m, r| m.max((r.energy - e0).abs() / e0))
    }
}

fn check_cfl(x: &VectorField, dt: f64, step: usize) -> Result<()> {
    let limit = 0.5 * x.grid().spacing();
    let courant = dt * x.max_speed();
    if courant > limit {
        return Err(GeoError::CflViolation { step, courant, limit });
    }
    Ok(())
}

fn reproject(x: &VectorField, ctx: &FlowContext, group: Group) -> Result<VectorField> {
    match group {
        Group::Full => Ok(x.clone()),
        Group::Vol => project_divfree(x, &ctx.metric),
        Group::Sym => project_symplectic(x, &ctx.metric, &ctx.basis),
    }
}

/// Classical RK4 step of size `dt`.
pub fn rk4_step(x: &VectorField, dt: f64, ctx: &FlowContext, group: Group) -> Result<VectorField> {
    let k1 = geodesic_rhs(x, ctx, group)?;
    let k2 = geodesic_rhs(&x.axpy(0.5 * dt, &k1), ctx, group)?;
    let k3 = geodesic_rhs(&x.axpy(0.5 * dt, &k2), ctx, group)?;
    let k4 = geodesic_rhs(&x.axpy(dt, &k3), ctx, group)?;
    let incr = &(&k1 + &k4) + &(&k2 + &k3).scale(2.0);
    Ok(x.axpy(dt / 6.0, &incr))
}

/// Advances `state` by one step of `cfg.dt` (no re-projection).
pub fn step(state: &GeodesicState, cfg: &IntegratorConfig, ctx: &FlowContext) -> Result<GeodesicState> {
    check_cfl(&state.x, cfg.dt, 0)?;
    let x = rk4_step(&state.x, cfg.dt, ctx, cfg.group)?;
    if !x.is_finite() {
        return Err(GeoError::NanDetected { step: 1 });
    }
    GeodesicState::new(state.t + cfg.dt, x, ctx)
}

/// Integrates the geodesic equation from `x0`.
pub fn evolve(x0: &VectorField, cfg: &IntegratorConfig, ctx: &FlowContext) -> Result<Trajectory> {
    cfg.validate()?;
    let group = cfg.group;
    let (steps, dt) = cfg.schedule();
    check_cfl(x0, cfg.dt, 0)?;
    let mut x = x0.clone();
    dealias(&mut x);
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut max_drift: f64 = 0.0;
    let record = |k: usize, t: f64, x: &VectorField, records: &mut Vec<Record>, snaps: &mut Vec<(f64, VectorField)>| -> Result<()> {
        let s = GeodesicState::new(t, x.clone(), ctx)?;
        records.push(Record { step: k, t, energy: s.energy, div_norm: s.div_norm, c1: s.harmonic_coeffs[0], c2: s.harmonic_coeffs[1] });
        if cfg.snapshots {
            snaps.push((t, x.clone()));
        }
        Ok(())
    };
    record(0, 0.0, &x, &mut records, &mut snapshots)?;
    for k in 1..=steps {
        x = rk4_step(&x, dt, ctx, group)?;
        if !x.is_finite() {
            return Err(GeoError::NanDetected { step: k });
        }
        check_cfl(&x, dt, k)?;
        if group != Group::Full && cfg.reproject_every > 0 && k % cfg.reproject_every == 0 {
            max_drift = max_drift.max(norm(&div(&x, &ctx.metric), &ctx.metric));
            x = reproject(&x, ctx, group)?;
        }
        if k % cfg.record_every == 0 || k == steps {
            record(k, k as f64 * dt, &x, &mut records, &mut snapshots)?;
        }
    }
    let final_state = GeodesicState::new(steps as f64 * dt, x, ctx)?;
    Ok(Trajectory { records, snapshots, final_state, max_constraint_drift: max_drift, dt, steps })
}

/// `⟨X, [X, Y]⟩`, the predicted rate of change of `⟨X, Y⟩` along the flow
/// when `Y` lies in the group's algebra.
pub fn drift_rate(x: &VectorField, y: &VectorField, g: &MetricField) -> f64 {
    inner_product(x, &crate::calculus::lie_bracket(x, y), g).expect("grid mismatch")
}

/// Fields `♯_g β_i` and `♯_ω β_i` dual to the two coefficient families.
pub fn harmonic_fields(ctx: &FlowContext) -> ([VectorField; 2], [VectorField; 2]) {
    let g = &ctx.metric;
    let b = &ctx.basis.beta;
    ([sharp_g(&b[0], g), sharp_g(&b[1], g)], [sharp_omega(&b[0], g), sharp_omega(&b[1], g)])
}

/// Relative distance of `X` from the divergence-free fields.
pub fn divergence_defect(x: &VectorField, g: &MetricField) -> f64 {
    div(x, g).max_abs() / scale_of(x)
}
