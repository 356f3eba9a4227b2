//! Residual evaluators for the flatness criteria on a metric torus, and a
//! deterministic suite that runs them all against one metric.
//!
//! Every evaluator returns a non-negative residual that vanishes on the flat
//! metric. Verdicts use two thresholds: residuals below [`PASS_TOL`] pass,
//! those above [`FAIL_TOL`] fail, and anything in between is reported as
//! indeterminate rather than forced either way.

pub mod detection;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{
    d0, d1, delta1, delta2, flat_g, inner_product, laplacian0, lie_bracket, lie_derivative_form, norm,
    sharp_g, sharp_omega,
};
use crate::euler_arnold::{adt_full, adt_sym, drift_rate};
use crate::error::{GeoError, Result};
use crate::fields::{Components, MetricField, OneFormField, ScalarField, TwoFormField, VectorField};
use crate::geometry::{christoffels, killing_defect, killing_plus_div, nabla_norm2, nabla_sym, ricci_form_pairing, ChristoffelField};
use crate::hodge::{harmonic_basis, harmonic_coefficients, harmonic_defect, HarmonicBasis};

pub const PASS_TOL: f64 = 1e-6;
pub const FAIL_TOL: f64 = 1e-4;
/// Relative tolerance for input preconditions (harmonic, closed) and for
/// the internal consistency of derivation chains.
pub const PRECONDITION_TOL: f64 = 1e-8;
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl Verdict {
    pub fn classify(residual: f64, tol: &Tolerances) -> Verdict {
        if !residual.is_finite() || residual >= tol.fail {
            Verdict::Fail
        } else if residual <= tol.pass {
            Verdict::Pass
        } else {
            Verdict::Indeterminate
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub pass: f64,
    pub fail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { pass: PASS_TOL, fail: FAIL_TOL }
    }
}

fn scale_of<F: Components>(f: &F) -> f64 {
    f.max_abs().max(1.0)
}

fn require_harmonic(beta: &OneFormField, g: &MetricField) -> Result<()> {
    let rel = harmonic_defect(beta, g) / scale_of(beta);
    if rel > PRECONDITION_TOL {
        return Err(GeoError::NotHarmonic(rel));
    }
    Ok(())
}

fn require_closed(beta: &OneFormField) -> Result<()> {
    let rel = d1(beta).max_abs() / scale_of(beta);
    if rel > PRECONDITION_TOL {
        return Err(GeoError::NotClosed(rel));
    }
    Ok(())
}

/// `‖∇β‖` and `‖(∇β)^sym‖` for a harmonic form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParallelDefect {
    pub full: f64,
    pub sym: f64,
}

pub fn parallel_defect(beta: &OneFormField, g: &MetricField, gamma: &ChristoffelField) -> Result<ParallelDefect> {
    require_harmonic(beta, g)?;
    Ok(ParallelDefect {
        full: nabla_norm2(beta, g, gamma).max(0.0).sqrt(),
        sym: nabla_sym(beta, gamma).l2_norm(g),
    })
}

/// Pointwise maximum of `|ric(♯β₁, ♯β₂)|`.
pub fn ricci_pairing(b1: &OneFormField, b2: &OneFormField, g: &MetricField, gamma: &ChristoffelField) -> Result<f64> {
    require_harmonic(b1, g)?;
    require_harmonic(b2, g)?;
    Ok(ricci_form_pairing(b1, b2, g, gamma).max_abs())
}

/// `|∫ ric(♯β₁, ♯β₂) μ|`; weaker than the pointwise version.
pub fn ricci_pairing_integrated(
    b1: &OneFormField,
    b2: &OneFormField,
    g: &MetricField,
    gamma: &ChristoffelField,
) -> Result<f64> {
    require_harmonic(b1, g)?;
    require_harmonic(b2, g)?;
    Ok(crate::calculus::integrate(&ricci_form_pairing(b1, b2, g, gamma), g).abs())
}

/// Value of a pairing integral together with the consistency residual of
/// the chain of identities that links it to the Euler–Arnold adjoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainValue {
    pub value: f64,
    pub chain_residual: f64,
}

/// `∫ g(dδα, δα ∧ β) μ` for a 2-form `α` and harmonic `β`.
///
/// The chain check compares `⟨adᵀ X, Y⟩`, `⟨X, [X, Y]⟩` and `−value` for
/// `X = ♯δα`, `Y = ♯β`, relative to `‖X‖²‖Y‖`.
pub fn vol_condition_v(alpha: &TwoFormField, beta: &OneFormField, g: &MetricField, gamma: &ChristoffelField) -> Result<ChainValue> {
    require_harmonic(beta, g)?;
    let phi = delta2(alpha, g);
    let value = inner_product(&d1(&phi), &phi.wedge(beta), g)?;
    let x = sharp_g(&phi, g);
    let y = sharp_g(beta, g);
    let via_adjoint = inner_product(&adt_full(&x, g, gamma), &y, g)?;
    let via_bracket = drift_rate(&x, &y, g);
    let scale = (norm(&x, g).powi(2) * norm(&y, g)).max(f64::MIN_POSITIVE);
    let chain_residual = (via_adjoint - via_bracket).abs().max((via_bracket + value).abs()) / scale;
    Ok(ChainValue { value, chain_residual })
}

/// `∫ (Δf) (df ∧ β)` for a function `f` and closed `β`, the 2-form
/// integrated over the coordinate cell.
///
/// The chain check compares `⟨X, [X, ♯_ω β]⟩` with `−value` and with the
/// Lie-derivative route `−∫ (Δf) df(♯_ω β) μ` for `X = ♯_ω df`.
pub fn sym_condition_v(f: &ScalarField, beta: &OneFormField, g: &MetricField) -> Result<ChainValue> {
    require_closed(beta)?;
    let df = d0(f);
    let lap = laplacian0(f, g);
    let wedge = df.wedge(beta);
    let value = lap.values().iter().zip(wedge.density()).map(|(a, b)| a * b).sum::<f64>() * g.grid().cell_area();
    let x = sharp_omega(&df, g);
    let y = sharp_omega(beta, g);
    let via_bracket = drift_rate(&x, &y, g);
    let via_lie = -inner_product(&lap, &df.apply(&y), g)?;
    let scale = (norm(&x, g).powi(2) * norm(&y, g)).max(f64::MIN_POSITIVE);
    let chain_residual = (via_bracket + value).abs().max((via_lie + value).abs()) / scale;
    Ok(ChainValue { value, chain_residual })
}

/// `|∫ g([X, Y], X) μ|`.
pub fn tg_bracket_criterion(x: &VectorField, y: &VectorField, g: &MetricField) -> Result<f64> {
    Ok(inner_product(&lie_bracket(x, y), x, g)?.abs())
}

/// Both sides of `2⟨adᵀ X, Y⟩ = ∫ ((∇♭Y)^sym + (div Y) g)(X, X) μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointIdentity {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs| / (‖X‖² ‖Y‖)`.
    pub residual: f64,
}

pub fn adjoint_identity(x: &VectorField, y: &VectorField, g: &MetricField, gamma: &ChristoffelField) -> Result<AdjointIdentity> {
    let lhs = 2.0 * inner_product(&adt_full(x, g, gamma), y, g)?;
    let rhs = crate::calculus::integrate(&killing_plus_div(y, g, gamma).eval(x, x), g);
    let scale = (norm(x, g).powi(2) * norm(y, g)).max(f64::MIN_POSITIVE);
    Ok(AdjointIdentity { lhs, rhs, residual: (lhs - rhs).abs() / scale })
}

/// Relative max-norm residual of
/// `δ(φ₁∧φ₂) − (δφ₁)φ₂ + (δφ₂)φ₁ + ♭[♯φ₁, ♯φ₂] = 0`.
pub fn bracket_identity_metric(p1: &OneFormField, p2: &OneFormField, g: &MetricField) -> f64 {
    let lhs = delta2(&p1.wedge(p2), g)
        .axpy(-1.0, &p2.times(&delta1(p1, g)))
        .axpy(1.0, &p1.times(&delta1(p2, g)))
        .axpy(1.0, &flat_g(&lie_bracket(&sharp_g(p1, g), &sharp_g(p2, g)), g));
    lhs.max_abs() / (scale_of(p1) * scale_of(p2))
}

/// Relative max-norm residual of `[♯_ω φ₁, ♯_ω φ₂] + ♯_ω(L_{♯_ω φ₂} φ₁) = 0`
/// for closed `φ₁`.
pub fn bracket_identity_symplectic(p1: &OneFormField, p2: &OneFormField, g: &MetricField) -> Result<f64> {
    require_closed(p1)?;
    let (x1, x2) = (sharp_omega(p1, g), sharp_omega(p2, g));
    let lhs = lie_bracket(&x1, &x2).axpy(1.0, &sharp_omega(&lie_derivative_form(&x2, p1), g));
    Ok(lhs.max_abs() / (scale_of(&x1) * scale_of(&x2)))
}

/// Result of testing whether `f` is a steady stream function, i.e. whether
/// `Δf = h(f)` for some function `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyCheck {
    /// Max-norm of the symplectic adjoint at `♯_ω df`.
    pub adjoint_norm: f64,
    /// `‖Δf − h∘f‖ / ‖Δf‖` for the least-squares polynomial `h`.
    pub profile_defect: f64,
    /// Coefficients of `h` in powers of `(f − mid)/half_range`.
    pub coefficients: Vec<f64>,
}

pub const STEADY_FIT_DEGREE: usize = 5;

pub fn steady_solution_check(f: &ScalarField, g: &MetricField, gamma: &ChristoffelField, basis: &HarmonicBasis) -> Result<SteadyCheck> {
    let x = sharp_omega(&d0(f), g);
    let adjoint_norm = adt_sym(&x, g, gamma, basis)?.max_abs();
    let lap = laplacian0(f, g);
    let v = f.values();
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    let mid = 0.5 * (lo + hi);
    let half = (0.5 * (hi - lo)).max(f64::MIN_POSITIVE);
    let cols = STEADY_FIT_DEGREE + 1;
    let a = DMatrix::from_fn(v.len(), cols, |r, c| ((v[r] - mid) / half).powi(c as i32));
    let b = DVector::from_column_slice(lap.values());
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-13)
        .map_err(|e| GeoError::Config(format!("profile fit failed: {e}")))?;
    let fitted = &a * &coef;
    let resid = ScalarField::from_vec(*g.grid(), (0..v.len()).map(|k| lap.values()[k] - fitted[k]).collect());
    let denom = norm(&lap, g).max(f64::MIN_POSITIVE);
    Ok(SteadyCheck { adjoint_norm, profile_defect: norm(&resid, g) / denom, coefficients: coef.iter().copied().collect() })
}

/// Trigonometric test functions used by the suite. None of them is
/// invariant under `(x, y) ↦ (−x, −y)`, which would make the pairings
/// vanish by symmetry on metrics even in `x`.
pub const BATTERY: [&str; 3] = [
    "(cos(x) + sin(x))*cos(y)",
    "sin(x + y) + 0.5*cos(2*x - y)",
    "cos(x)*sin(2*y) + 0.3*sin(x)",
];

fn battery(g: &MetricField) -> Result<Vec<ScalarField>> {
    BATTERY.iter().map(|src| crate::fieldexpr::eval_expression(src, g.grid())).collect()
}

/// One line of the suite report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub name: String,
    pub residual: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub n: usize,
    pub mode: String,
}

/// Deterministic output of [`run_criteria_suite`]; contains no timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub schema_version: u32,
    pub metric_id: String,
    pub grid: GridInfo,
    pub tolerances: Tolerances,
    pub conditions: Vec<ConditionResult>,
    /// All conditions agree (all pass or all fail).
    pub theorem_consistency: bool,
    pub verdict: Verdict,
    pub diagnostics: BTreeMap<String, f64>,
}

impl CriteriaReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const CONDITIONS: [&str; 6] = [
    "parallel_harmonic",
    "ricci_pairing",
    "killing_complement",
    "vol_condition_v",
    "sym_condition_v",
    "geodesic_drift",
];

struct SuiteData<'a> {
    g: &'a MetricField,
    gamma: ChristoffelField,
    basis: HarmonicBasis,
    battery: Vec<ScalarField>,
}

type Evaluated = (f64, Vec<(String, f64)>);

impl SuiteData<'_> {
    fn evaluate(&self, name: &str) -> Result<Evaluated> {
        let (g, gamma, beta) = (self.g, &self.gamma, &self.basis.beta);
        let mut diag = Vec::new();
        let residual = match name {
            "parallel_harmonic" => {
                let mut worst: f64 = 0.0;
                for (i, b) in beta.iter().enumerate() {
                    let p = parallel_defect(b, g, gamma)?;
                    diag.push((format!("parallel_sym_{}", i + 1), p.sym));
                    worst = worst.max(p.full);
                }
                worst
            }
            "ricci_pairing" => {
                let mut worst: f64 = 0.0;
                for i in 0..2 {
                    for j in i..2 {
                        worst = worst.max(ricci_pairing(&beta[i], &beta[j], g, gamma)?);
                        diag.push((
                            format!("ricci_integrated_{}{}", i + 1, j + 1),
                            ricci_pairing_integrated(&beta[i], &beta[j], g, gamma)?,
                        ));
                    }
                }
                worst
            }
            "killing_complement" => {
                let mut worst: f64 = 0.0;
                for (i, b) in beta.iter().enumerate() {
                    let kg = killing_defect(&sharp_g(b, g), g, gamma);
                    let kw = killing_defect(&sharp_omega(b, g), g, gamma);
                    diag.push((format!("killing_metric_{}", i + 1), kg));
                    diag.push((format!("killing_symplectic_{}", i + 1), kw));
                    worst = worst.max(kg).max(kw);
                }
                worst
            }
            "vol_condition_v" => {
                let mut worst: f64 = 0.0;
                let mut chain: f64 = 0.0;
                for f in &self.battery {
                    let alpha = TwoFormField::from_density(f);
                    for b in beta {
                        let v = vol_condition_v(&alpha, b, g, gamma)?;
                        worst = worst.max(v.value.abs());
                        chain = chain.max(v.chain_residual);
                    }
                }
                diag.push(("vol_chain_residual".into(), chain));
                worst
            }
            "sym_condition_v" => {
                let mut worst: f64 = 0.0;
                let mut chain: f64 = 0.0;
                for f in &self.battery {
                    for b in beta {
                        let v = sym_condition_v(f, b, g)?;
                        worst = worst.max(v.value.abs());
                        chain = chain.max(v.chain_residual);
                    }
                }
                diag.push(("sym_chain_residual".into(), chain));
                worst
            }
            "geodesic_drift" => {
                // Instantaneous rate at which a Hamiltonian field acquires
                // harmonic (non-Hamiltonian) components along the flow.
                let mut worst: f64 = 0.0;
                for f in &self.battery {
                    let x = sharp_omega(&d0(f), g);
                    let rate = harmonic_coefficients(&adt_sym(&x, g, gamma, &self.basis)?, &self.basis, g)?;
                    worst = worst.max(rate[0].abs()).max(rate[1].abs());
                }
                worst
            }
            other => return Err(GeoError::Config(format!("unknown condition {other:?}"))),
        };
        Ok((residual, diag))
    }
}

/// Options for [`run_criteria_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub metric_id: String,
    pub tolerances: Tolerances,
    pub parallel: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { metric_id: "custom".into(), tolerances: Tolerances::default(), parallel: true }
    }
}

/// Evaluates every condition on `g`. The result does not depend on
/// `opts.parallel` or on the thread count.
pub fn run_criteria_suite(g: &MetricField, opts: &SuiteOptions) -> Result<CriteriaReport> {
    let data = SuiteData { g, gamma: christoffels(g), basis: harmonic_basis(g)?, battery: battery(g)? };
    let results: Vec<Result<Evaluated>> = if opts.parallel {
        CONDITIONS.par_iter().map(|name| data.evaluate(name)).collect()
    } else {
        CONDITIONS.iter().map(|name| data.evaluate(name)).collect()
    };
    let mut conditions = Vec::with_capacity(CONDITIONS.len());
    let mut diagnostics = BTreeMap::new();
    for (name, r) in CONDITIONS.iter().zip(results) {
        let (residual, diag) = r?;
        diagnostics.extend(diag);
        conditions.push(ConditionResult {
            name: (*name).to_string(),
            residual,
            verdict: Verdict::classify(residual, &opts.tolerances),
        });
    }
    let all = |v: Verdict| conditions.iter().all(|c| c.verdict == v);
    let theorem_consistency = all(Verdict::Pass) || all(Verdict::Fail);
    let verdict = if all(Verdict::Pass) {
        Verdict::Pass
    } else if all(Verdict::Fail) {
        Verdict::Fail
    } else {
        Verdict::Indeterminate
    };
    Ok(CriteriaReport {
        schema_version: SCHEMA_VERSION,
        metric_id: opts.metric_id.clone(),
        grid: GridInfo { n: g.grid().n(), mode: g.grid().mode().to_string() },
        tolerances: opts.tolerances,
        conditions,
        theorem_consistency,
        verdict,
        diagnostics,
    })
}

/// Expressions for the identity battery; consecutive pairs form vector
/// fields and single entries form functions and exact 1-forms.
pub const IDENTITY_FIELDS: [&str; 5] = [
    "sin(x) + 0.5*cos(2*y)",
    "cos(x + y) - 0.3*sin(x)*sin(y)",
    "(cos(x) + sin(x))*cos(y)",
    "0.7*sin(2*x - y) + 0.2*cos(y)",
    "cos(x)*sin(2*y) + 0.3*sin(x)",
];

/// Default tolerance for every entry of [`identity_battery`].
pub const IDENTITY_TOL: f64 = 1e-6;

/// One residual of the identity battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Runs every structural identity of the calculus and the flow on `g`:
/// adjointness of `d` and `δ`, `d∘d = 0`, `∗∗ = −1` on 1-forms, the
/// Bochner formula, the adjoint and trace identities for the Killing
/// operator, and the two bracket identities. Each residual is relative.
pub fn identity_battery(g: &MetricField, tolerance: f64) -> Result<Vec<IdentityResidual>> {
    let gr = *g.grid();
    let gamma = christoffels(g);
    let basis = harmonic_basis(g)?;
    let fs: Vec<ScalarField> = IDENTITY_FIELDS.iter().map(|e| crate::fieldexpr::eval_expression(e, &gr)).collect::<Result<_>>()?;
    let m = fs.len();
    let forms: Vec<OneFormField> = (0..m).map(|k| OneFormField::from_scalars(&fs[k], &fs[(k + 1) % m])).collect();
    let vectors: Vec<VectorField> = forms.iter().map(|f| sharp_g(f, g)).collect();
    let closed: Vec<OneFormField> = (0..m)
        .map(|k| d0(&fs[k]).axpy(0.5, &basis.beta[k % 2]).axpy(-0.25, &basis.beta[(k + 1) % 2]))
        .collect();
    let rel = |num: f64, den: f64| num.abs() / den.max(f64::MIN_POSITIVE);

    let mut out: Vec<(&str, f64)> = Vec::new();
    let worst = |v: &mut f64, x: f64| *v = v.max(x);

    let (mut adj0, mut adj1, mut dd, mut ss) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..m {
        let (f, phi) = (&fs[k], &forms[(k + 2) % m]);
        let df = d0(f);
        worst(&mut adj0, rel(inner_product(&df, phi, g)? - inner_product(f, &delta1(phi, g), g)?, norm(&df, g) * norm(phi, g)));
        let alpha = TwoFormField::from_density(&fs[(k + 1) % m]);
        let dphi = d1(phi);
        worst(&mut adj1, rel(inner_product(&dphi, &alpha, g)? - inner_product(phi, &delta2(&alpha, g), g)?, norm(&dphi, g) * norm(&alpha, g)));
        worst(&mut dd, rel(d1(&df).max_abs(), df.max_abs()));
        let s = crate::calculus::star1(&crate::calculus::star1(phi, g), g);
        worst(&mut ss, rel((&s + phi).max_abs(), phi.max_abs()));
    }
    out.push(("adjoint_d0", adj0));
    out.push(("adjoint_d1", adj1));
    out.push(("d_squared", dd));
    out.push(("star_squared", ss));

    let mut boch: f64 = 0.0;
    for b in &basis.beta {
        boch = boch.max(crate::geometry::bochner_residual(b, g, &gamma));
    }
    out.push(("bochner", boch));

    let (mut adj, mut trace) = (0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                worst(&mut adj, adjoint_identity(&vectors[i], &vectors[j], g, &gamma)?.residual);
            }
        }
        worst(&mut trace, rel(crate::geometry::trace_identity_residual(&vectors[i], g, &gamma), vectors[i].max_abs()));
    }
    out.push(("adjoint_identity", adj));
    out.push(("trace_identity", trace));

    let (mut bm, mut bs) = (0.0, 0.0);
    for i in 0..m {
        let j = (i + 1) % m;
        worst(&mut bm, bracket_identity_metric(&closed[i], &closed[j], g));
        worst(&mut bs, bracket_identity_symplectic(&closed[i], &closed[j], g)?);
    }
    out.push(("bracket_metric", bm));
    out.push(("bracket_symplectic", bs));

    Ok(out
        .into_iter()
        .map(|(name, residual)| IdentityResidual {
            name: name.to_string(),
            residual,
            tolerance,
            pass: residual.is_finite() && residual <= tolerance,
        })
        .collect())
}
