//! Scalar comparison ODEs `u″ = G·u` and the oracles built on them:
//! the model solution `h`, the limit of `h′`, Sturm comparison, the
//! Wronskian pair `h₁, h₂`, and the shift/scale limits of `h`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::profile::CurvatureProfile;
use crate::radial::RadialFunction;

/// Largest default step.
pub const MAX_STEP: f64 = 1e-3;
/// Certification gives up once the step would drop below this.
pub const STEP_FLOOR: f64 = 1e-6;
/// Node budget for the initial step on long horizons.
const NODE_BUDGET: f64 = 1e6;
/// Denominators below this are reported as singular in ratio checks.
pub const SINGULAR_DENOMINATOR: f64 = 1e-10;
/// Horizon cap for limits grown by doubling.
pub const LIMIT_HORIZON_CAP: f64 = 1e4;

/// Outcome of a nodewise comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonDiagnostics {
    /// Largest violation found, 0 when there is none.
    pub max_violation: f64,
    pub violation_location: Option<f64>,
    pub checked_points: usize,
    /// Nodes skipped because a denominator was below [`SINGULAR_DENOMINATOR`].
    pub singular_points: usize,
}

impl ComparisonDiagnostics {
    pub fn new() -> Self {
        Self { max_violation: 0.0, violation_location: None, checked_points: 0, singular_points: 0 }
    }

    pub fn is_clean(&self) -> bool {
        self.violation_location.is_none()
    }

    /// Records `excess` at `t`; positive values are violations.
    pub fn record(&mut self, t: f64, excess: f64) {
        if excess > 0.0 && (self.violation_location.is_none() || excess > self.max_violation) {
            self.max_violation = excess;
            self.violation_location = Some(t);
        }
    }

    pub fn merge(&mut self, other: &ComparisonDiagnostics) {
        if let Some(t) = other.violation_location {
            self.record(t, other.max_violation);
        }
        self.checked_points += other.checked_points;
        self.singular_points += other.singular_points;
    }
}

impl Default for ComparisonDiagnostics {
    fn default() -> Self {
        Self::new()
    }
}

/// Fixed-step RK4 for `u″ = g(t)u` on `[0, t_end]`; returns node values
/// and derivatives.
pub fn rk4_linear<G>(g: G, u0: f64, du0: f64, t_end: f64, n_steps: usize) -> (Vec<f64>, Vec<f64>)
where
    G: Fn(f64) -> f64,
{
    let dt = t_end / n_steps as f64;
    let mut u = Vec::with_capacity(n_steps + 1);
    let mut du = Vec::with_capacity(n_steps + 1);
    let (mut x, mut v) = (u0, du0);
    u.push(x);
    du.push(v);
    let mut g_left = g(0.0);
    for i in 0..n_steps {
        let t = i as f64 * dt;
        let g_mid = g(t + 0.5 * dt);
        let g_right = g(t + dt);
        let (k1x, k1v) = (v, g_left * x);
        let (k2x, k2v) = (v + 0.5 * dt * k1v, g_mid * (x + 0.5 * dt * k1x));
        let (k3x, k3v) = (v + 0.5 * dt * k2v, g_mid * (x + 0.5 * dt * k2x));
        let (k4x, k4v) = (v + dt * k3v, g_right * (x + dt * k3x));
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        u.push(x);
        du.push(v);
        g_left = g_right;
    }
    (u, du)
}

/// Default initial step for `tol` on `[0, t_end]`.
pub fn default_step(tol: f64, t_end: f64) -> f64 {
    MAX_STEP.min(tol.powf(0.25)).max(t_end / NODE_BUDGET)
}

/// Solves `u″ = G·u`, `u(0) = u0`, `u′(0) = du0` on `[0, t_end]`.
///
/// Each attempt is compared against a run with half the step; the
/// Richardson estimate `|u_{Δt/2} − u_{Δt}|/15` must stay below
/// `tol·(1 + max|u|)` at every node. The finer run is returned, sampled on
/// the coarser grid.
pub fn solve_linear_ivp<G>(g: G, u0: f64, du0: f64, t_end: f64, tol: f64) -> Result<GridFunction>
where
    G: Fn(f64) -> f64,
{
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon {t_end} must be positive")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("ODE tolerance {tol} must be > 0")));
    }
    let mut n = (t_end / default_step(tol, t_end)).ceil().max(1.0) as usize;
    let (mut u, mut du) = rk4_linear(&g, u0, du0, t_end, n);
    loop {
        let (fu, fdu) = rk4_linear(&g, u0, du0, t_end, 2 * n);
        let scale = 1.0 + fu.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let err = u
            .iter()
            .zip(&du)
            .enumerate()
            .map(|(i, (x, v))| (x - fu[2 * i]).abs().max((v - fdu[2 * i]).abs()) / 15.0)
            .fold(0.0f64, f64::max);
        let step = t_end / (2 * n) as f64;
        if !err.is_finite() {
            return Err(Error::Domain(format!("non-finite solution on [0, {t_end}]")));
        }
        if err <= tol * scale {
            let values = fu.iter().step_by(2).copied().collect();
            let derivs = fdu.iter().step_by(2).copied().collect();
            return GridFunction::new(t_end / n as f64, values, derivs);
        }
        if step / 2.0 < STEP_FLOOR {
            return Err(Error::ToleranceUnreachable { tol, achieved: err / scale, step });
        }
        n *= 2;
        u = fu;
        du = fdu;
    }
}

/// Solves the model equation `h″ = λh`, `h(0) = 0`, `h′(0) = 1` on `[0, t_end]`.
pub fn solve_model(profile: &CurvatureProfile, t_end: f64, tol: f64) -> Result<GridFunction> {
    solve_linear_ivp(|t| profile.eval(t).unwrap_or(0.0), 0.0, 1.0, t_end, tol)
}

/// Limit of `h′` with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeLimit {
    pub value: f64,
    pub uncertainty: f64,
}

/// Estimates `lim h′ = h′(T) + ∫_T^∞ λh`.
///
/// Past `T`, `h(s)` lies between `h(T) + h′(T)(s − T)` and
/// `h(T) + h′_∞(s − T)`, which brackets the tail. For `h′_∞` inside the
/// upper bracket we use the smaller of `1 + b₀e^{b₀}` and the self-consistent
/// bound `(h′(T) + h(T)∫_T^∞λ)/(1 − ∫_T^∞(s − T)λ)`.
pub fn hprime_limit_with_uncertainty(h: &GridFunction, profile: &CurvatureProfile, tol: f64) -> Result<SlopeLimit> {
    let t = h.end();
    let (hv, hd) = (h.last_value(), h.last_deriv());
    let tail = profile.tail_moments(t);
    let b0 = profile.b0() + profile.tail_error();
    let mut ceiling = 1.0 + b0 * b0.exp();
    if tail.shifted < 1.0 {
        ceiling = ceiling.min((hd + hv * tail.mass) / (1.0 - tail.shifted));
    }
    let exact_tail = !matches!(profile.kind(), crate::profile::ProfileKind::Tabulated { .. })
        || profile.support_end().is_some_and(|e| e <= t);
    let (lower, upper) = if exact_tail {
        (hd + hv * tail.mass + hd * tail.shifted, hd + hv * tail.mass + ceiling.max(hd) * tail.shifted)
    } else {
        (hd, hd + hv * tail.mass + ceiling.max(hd) * tail.shifted)
    };
    let uncertainty = 0.5 * (upper - lower);
    if uncertainty > tol {
        return Err(Error::TailNotConverged { horizon: t, residual: uncertainty, tol });
    }
    Ok(SlopeLimit { value: 0.5 * (upper + lower), uncertainty })
}

/// `lim_{t→∞} h′(t)` for `h` solving the model equation out to `h.end()`.
pub fn hprime_limit(h: &GridFunction, profile: &CurvatureProfile, tol: f64) -> Result<f64> {
    let limit = hprime_limit_with_uncertainty(h, profile, tol)?;
    let b0 = profile.b0();
    let slack = 10.0 * tol + limit.uncertainty + profile.tail_error() * (1.0 + b0).exp();
    if limit.value < 1.0 + b0 - slack || limit.value > 1.0 + b0 * b0.exp() + slack {
        return Err(Error::BoundViolated(format!(
            "h′ limit {} outside [{}, {}]",
            limit.value,
            1.0 + b0,
            1.0 + b0 * b0.exp()
        )));
    }
    Ok(limit.value)
}

/// The model solution `h` on `[0, ∞)`: solved on `[0, T]` with `T` doubled
/// until the tail bracket for the `h′` limit is narrower than `tol` or two
/// successive estimates agree within `tol`, then continued affinely with the
/// limit slope.
#[derive(Debug, Clone)]
pub struct ModelSolution {
    h: RadialFunction,
    limit: SlopeLimit,
}

impl ModelSolution {
    pub fn solve(profile: &CurvatureProfile, tol: f64) -> Result<Self> {
        let mut t = profile.horizon().max(1.0);
        let mut previous: Option<(GridFunction, f64)> = None;
        loop {
            let h = solve_model(profile, t, tol)?;
            match hprime_limit_with_uncertainty(&h, profile, tol) {
                Ok(limit) => {
                    let settled = previous.as_ref().is_some_and(|(_, prev)| (limit.value - prev).abs() < tol);
                    if settled || limit.uncertainty <= 0.5 * tol {
                        return Ok(Self { h: RadialFunction::new(h, limit.value), limit });
                    }
                    previous = Some((h, limit.value));
                }
                Err(Error::TailNotConverged { residual, .. }) if 2.0 * t > LIMIT_HORIZON_CAP => {
                    return Err(Error::TailNotConverged { horizon: t, residual, tol });
                }
                Err(Error::TailNotConverged { .. }) => {}
                Err(e) => return Err(e),
            }
            if 2.0 * t > LIMIT_HORIZON_CAP {
                let (last, prev) = match &previous {
                    Some((_, p)) => (*p, f64::NAN),
                    None => (f64::NAN, f64::NAN),
                };
                return Err(Error::NonConvergence { radius: t, last, previous: prev });
            }
            t *= 2.0;
        }
    }

    pub fn h(&self) -> &RadialFunction {
        &self.h
    }

    pub fn slope_limit(&self) -> f64 {
        self.limit.value
    }

    pub fn slope_uncertainty(&self) -> f64 {
        self.limit.uncertainty
    }
}

/// Nodewise check of `t ≤ h ≤ e^{b₀}t`, `h′` nondecreasing and
/// `h′ ≤ 1 + b₀e^{b₀}`; `tol` is relative to `1 + |h|`.
pub fn model_bounds_check(h: &GridFunction, profile: &CurvatureProfile, tol: f64) -> ComparisonDiagnostics {
    let b0 = profile.b0() + profile.tail_error();
    let grow = b0.exp();
    let ceiling = 1.0 + b0 * grow;
    let mut diag = ComparisonDiagnostics::new();
    let mut prev_deriv = f64::NEG_INFINITY;
    for (i, t) in h.nodes().enumerate() {
        let (v, d) = (h.values()[i], h.derivs()[i]);
        let slack = tol * (1.0 + v.abs());
        diag.record(t, t - v - slack);
        diag.record(t, v - grow * t - slack);
        diag.record(t, d - ceiling - slack);
        diag.record(t, prev_deriv - d - slack);
        prev_deriv = d;
        diag.checked_points += 1;
    }
    diag
}

/// Lemma-style Sturm comparison: checks `ψ ≥ φ` and `φ′/φ ≤ ψ′/ψ` at the
/// nodes of `phi` in `(0, t_end]`, with `psi` interpolated onto them.
pub fn sturm_compare(phi: &GridFunction, psi: &GridFunction, t_end: f64, tol: f64) -> Result<ComparisonDiagnostics> {
    if t_end > phi.end() * (1.0 + 1e-12) || t_end > psi.end() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("comparison horizon {t_end} beyond the grids")));
    }
    let mut diag = ComparisonDiagnostics::new();
    let last = ((t_end / phi.step()) + 1e-9).floor() as usize;
    for i in 1..=last.min(phi.len() - 1) {
        let t = phi.node(i);
        let (p, dp) = (phi.values()[i], phi.derivs()[i]);
        let interior = t < t_end * (1.0 - 1e-12);
        if p <= 0.0 && interior {
            return Err(Error::Precondition(format!("φ = {p} ≤ 0 at interior node t = {t}")));
        }
        let (q, dq) = (psi.value_at(t)?, psi.deriv_at(t)?);
        diag.checked_points += 1;
        diag.record(t, p - q - tol);
        if p.abs() <= SINGULAR_DENOMINATOR || q.abs() <= SINGULAR_DENOMINATOR {
            diag.singular_points += 1;
            continue;
        }
        diag.record(t, dp / p - dq / q - tol);
    }
    Ok(diag)
}

/// Output of [`wronskian_limit`].
#[derive(Debug, Clone, Serialize)]
pub struct WronskianLimit {
    /// `h₂(T)/h₁(T)`.
    pub ratio_h2_h1: f64,
    /// `h₂′(T)/h₁′(T)`.
    pub ratio_dh2_dh1: f64,
    /// `∫₀^∞ G`.
    pub bound: f64,
    /// `max |h₂h₁′ − h₁h₂′ − 1|` over the grid.
    pub wronskian_drift: f64,
    /// `|h₂/h₁ − h₂′/h₁′ − 1/(h₁h₁′)|` at `T`.
    pub identity_residual: f64,
    /// `h₂/h₁` was nonincreasing on the interior nodes.
    pub ratio_nonincreasing: bool,
    pub within_bound: bool,
}

/// Solves `h₁` (data `0, 1`) and `h₂` (data `1, 0`) for `u″ = G·u` on
/// `[0, T]` and reports the two ratios whose common limit is bounded by `∫G`.
pub fn wronskian_limit<G>(g: G, integral: f64, t_end: f64, tol: f64) -> Result<WronskianLimit>
where
    G: Fn(f64) -> f64,
{
    let h1 = solve_linear_ivp(&g, 0.0, 1.0, t_end, tol)?;
    let h2 = solve_linear_ivp(&g, 1.0, 0.0, t_end, tol)?;
    let mut drift = 0.0f64;
    let mut monotone = true;
    let mut prev = f64::INFINITY;
    for i in 0..h1.len() {
        let (a, da, b, db) = (h1.values()[i], h1.derivs()[i], h2.values()[i], h2.derivs()[i]);
        drift = drift.max((b * da - a * db - 1.0).abs());
        if i > 0 {
            let ratio = b / a;
            if ratio > prev * (1.0 + 1e-14) + tol {
                monotone = false;
            }
            prev = ratio;
        }
    }
    let limit = 100.0 * tol;
    if drift > limit {
        return Err(Error::WronskianDrift { drift, limit });
    }
    let (a, da, b, db) = (h1.last_value(), h1.last_deriv(), h2.last_value(), h2.last_deriv());
    let ratio_h2_h1 = b / a;
    let ratio_dh2_dh1 = db / da;
    let identity_residual = (ratio_h2_h1 - ratio_dh2_dh1 - 1.0 / (a * da)).abs();
    let cap = integral + 1.0 / t_end + tol;
    Ok(WronskianLimit {
        ratio_h2_h1,
        ratio_dh2_dh1,
        bound: integral,
        wronskian_drift: drift,
        identity_residual,
        ratio_nonincreasing: monotone,
        within_bound: ratio_h2_h1 <= cap && ratio_dh2_dh1 <= cap,
    })
}

/// `(h(T − C)/h(T), h(TC)/h(T))`.
pub fn shift_scale_limits(h: &GridFunction, c: f64, t: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("C = {c} must be positive")));
    }
    if t <= c {
        return Err(Error::Domain(format!("shift ratio needs T > C, got T = {t}, C = {c}")));
    }
    if t * c.max(1.0) > h.end() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("T·max(1, C) = {} beyond grid end {}", t * c.max(1.0), h.end())));
    }
    let ht = h.value_at(t)?;
    Ok((h.value_at(t - c)? / ht, h.value_at(t * c)? / ht))
}
