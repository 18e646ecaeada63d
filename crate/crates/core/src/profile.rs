//! Curvature decay profiles λ and their moments.
//!
//! A profile is a nonnegative, nonincreasing function on `[0, ∞)` with
//! finite first moment `b₀ = ∫ s λ(s) ds`; the zeroth moment is
//! `b₁ = ∫ λ(s) ds`. Both are cached at construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, integrate_from_zero};

/// Tolerance used for the moments cached at construction.
pub const DEFAULT_MOMENT_TOL: f64 = 1e-11;

/// Absolute slack allowed when checking monotonicity.
pub const MONOTONICITY_TOL: f64 = 1e-12;

const POWER_DECAY_TRUNCATION: f64 = 100.0;

/// The closed-form or tabulated shape of λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum ProfileKind {
    Zero,
    /// `c·e^{−a s}`.
    ExpDecay { rate: f64, amplitude: f64 },
    /// `c·(1 − s/s₀)⁺`.
    LinearCutoff { amplitude: f64, cutoff: f64 },
    /// `c/(1 + s)^q`, `q > 2`.
    PowerDecay { amplitude: f64, exponent: f64 },
    /// Piecewise-linear samples on the nodes `i·step`.
    Tabulated { step: f64, values: Vec<f64> },
}

/// Moments of a profile together with a bound on their truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub b0: f64,
    pub b1: f64,
    pub tail_error: f64,
}

/// Upper bounds for the tail integrals beyond a horizon `T`:
/// `mass ≥ ∫_T^∞ λ` and `shifted ≥ ∫_T^∞ (s − T) λ(s) ds`.
/// Exact for the closed-form kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailMoments {
    pub mass: f64,
    pub shifted: f64,
}

impl TailMoments {
    /// Bound on `∫_T^∞ s λ(s) ds`.
    pub fn first(&self, horizon: f64) -> f64 {
        self.shifted + horizon * self.mass
    }
}

/// A problem found by [`CurvatureProfile::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ProfileDiagnostic {
    Negative { index: usize, s: f64, value: f64 },
    MonotonicityViolation { index: usize, s: f64, increase: f64 },
    NonFiniteMoment { b0: f64, b1: f64 },
    UnboundedTail { last_value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ProfileSpec {
    #[serde(flatten)]
    kind: ProfileKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail_bound: Option<f64>,
}

/// An admissible curvature decay function with cached moments.
///
/// Serializes as `{kind, params, tail_bound?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileSpec", into = "ProfileSpec")]
pub struct CurvatureProfile {
    kind: ProfileKind,
    tail_bound: Option<f64>,
    moments: Moments,
}

impl TryFrom<ProfileSpec> for CurvatureProfile {
    type Error = Error;

    fn try_from(spec: ProfileSpec) -> Result<Self> {
        Self::with_tail_bound(spec.kind, spec.tail_bound)
    }
}

impl From<CurvatureProfile> for ProfileSpec {
    fn from(p: CurvatureProfile) -> Self {
        ProfileSpec { kind: p.kind, tail_bound: p.tail_bound }
    }
}

impl CurvatureProfile {
    pub fn new(kind: ProfileKind) -> Result<Self> {
        Self::with_tail_bound(kind, None)
    }

    /// Builds a profile; `tail_bound` bounds both tail moments of a
    /// tabulated profile beyond its last node and is ignored otherwise.
    pub fn with_tail_bound(kind: ProfileKind, tail_bound: Option<f64>) -> Result<Self> {
        kind.check_parameters()?;
        if let Some(bound) = tail_bound {
            if !(bound >= 0.0 && bound.is_finite()) {
                return Err(Error::InvalidParameter(format!("tail bound {bound} must be finite and ≥ 0")));
            }
        }
        let tail_bound = match kind {
            ProfileKind::Tabulated { .. } => tail_bound,
            _ => None,
        };
        let moments = kind.moments(tail_bound, DEFAULT_MOMENT_TOL)?;
        Ok(Self { kind, tail_bound, moments })
    }

    pub fn zero() -> Self {
        Self {
            kind: ProfileKind::Zero,
            tail_bound: None,
            moments: Moments { b0: 0.0, b1: 0.0, tail_error: 0.0 },
        }
    }

    pub fn exp_decay(rate: f64, amplitude: f64) -> Result<Self> {
        Self::new(ProfileKind::ExpDecay { rate, amplitude })
    }

    pub fn linear_cutoff(amplitude: f64, cutoff: f64) -> Result<Self> {
        Self::new(ProfileKind::LinearCutoff { amplitude, cutoff })
    }

    pub fn power_decay(amplitude: f64, exponent: f64) -> Result<Self> {
        Self::new(ProfileKind::PowerDecay { amplitude, exponent })
    }

    pub fn tabulated(step: f64, values: Vec<f64>, tail_bound: Option<f64>) -> Result<Self> {
        Self::with_tail_bound(ProfileKind::Tabulated { step, values }, tail_bound)
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn tail_bound(&self) -> Option<f64> {
        self.tail_bound
    }

    pub fn b0(&self) -> f64 {
        self.moments.b0
    }

    pub fn b1(&self) -> f64 {
        self.moments.b1
    }

    pub fn tail_error(&self) -> f64 {
        self.moments.tail_error
    }

    pub fn moments(&self) -> Moments {
        self.moments
    }

    /// True when λ vanishes identically.
    pub fn is_zero(&self) -> bool {
        match &self.kind {
            ProfileKind::Zero => true,
            ProfileKind::ExpDecay { amplitude, .. }
            | ProfileKind::LinearCutoff { amplitude, .. }
            | ProfileKind::PowerDecay { amplitude, .. } => *amplitude == 0.0,
            ProfileKind::Tabulated { values, .. } => values.iter().all(|&v| v == 0.0),
        }
    }

    /// λ(s). Tabulated profiles interpolate linearly and, past the last
    /// node, return the last sample (a monotone upper bound for λ there).
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("λ evaluated at s = {s} < 0")));
        }
        Ok(self.kind.eval_unchecked(s))
    }

    /// Recomputes `(b₀, b₁, tail_error)` to absolute tolerance `tol`.
    pub fn compute_moments(&self, tol: f64) -> Result<Moments> {
        self.kind.moments(self.tail_bound, tol)
    }

    /// `s` beyond which λ vanishes identically, if known.
    pub fn support_end(&self) -> Option<f64> {
        match &self.kind {
            ProfileKind::Zero => Some(0.0),
            _ if self.is_zero() => Some(0.0),
            ProfileKind::LinearCutoff { cutoff, .. } => Some(*cutoff),
            ProfileKind::Tabulated { step, values } => {
                if *values.last().unwrap_or(&0.0) > 0.0 {
                    None
                } else {
                    let last_nonzero = values.iter().rposition(|&v| v != 0.0).unwrap_or(0);
                    Some((last_nonzero + 1) as f64 * step)
                }
            }
            _ => None,
        }
    }

    /// A radius past which the profile's interesting structure is over;
    /// used for validation sweeps and as the initial horizon of limits.
    pub fn horizon(&self) -> f64 {
        match &self.kind {
            ProfileKind::Zero => 1.0,
            ProfileKind::ExpDecay { rate, .. } => 40.0 / rate,
            ProfileKind::LinearCutoff { cutoff, .. } => 2.0 * cutoff,
            ProfileKind::PowerDecay { .. } => POWER_DECAY_TRUNCATION,
            ProfileKind::Tabulated { step, values } => (values.len() - 1) as f64 * step,
        }
        .max(self.support_end().unwrap_or(0.0))
    }

    /// Tail integrals beyond `horizon`.
    pub fn tail_moments(&self, horizon: f64) -> TailMoments {
        let t = horizon.max(0.0);
        match &self.kind {
            ProfileKind::Zero => TailMoments { mass: 0.0, shifted: 0.0 },
            ProfileKind::ExpDecay { rate, amplitude } => {
                let mass = amplitude * (-rate * t).exp() / rate;
                TailMoments { mass, shifted: mass / rate }
            }
            ProfileKind::LinearCutoff { amplitude, cutoff } => {
                if t >= *cutoff {
                    TailMoments { mass: 0.0, shifted: 0.0 }
                } else {
                    // λ restricted to [t, s₀] is linear from c(1 − t/s₀) down to 0.
                    let len = cutoff - t;
                    let top = amplitude * len / cutoff;
                    TailMoments { mass: 0.5 * top * len, shifted: top * len * len / 6.0 }
                }
            }
            ProfileKind::PowerDecay { amplitude, exponent } => {
                let q = *exponent;
                let base = 1.0 + t;
                let mass = amplitude * base.powf(1.0 - q) / (q - 1.0);
                let shifted = amplitude * base.powf(2.0 - q) / ((q - 1.0) * (q - 2.0));
                TailMoments { mass, shifted }
            }
            ProfileKind::Tabulated { step, values } => {
                let bound = self.tail_bound.unwrap_or(0.0);
                let end = (values.len() - 1) as f64 * step;
                if t >= end {
                    return TailMoments { mass: bound, shifted: bound };
                }
                let (mut mass, mut shifted) = (0.0, 0.0);
                let start = (t / step).floor() as usize;
                for i in start..values.len() - 1 {
                    let a = (i as f64 * step).max(t);
                    let b = (i + 1) as f64 * step;
                    if b <= a {
                        continue;
                    }
                    let (la, lb) = (self.kind.eval_unchecked(a), values[i + 1]);
                    mass += 0.5 * (b - a) * (la + lb);
                    shifted += linear_first_moment(a - t, b - t, la, lb);
                }
                TailMoments { mass: mass + bound, shifted: shifted + bound + (end - t) * bound }
            }
        }
    }

    /// `(∫₀^d λ, ∫₀^d s λ)` to absolute tolerance `tol`.
    pub fn partial_moments(&self, d: f64, tol: f64) -> Result<(f64, f64)> {
        if !(d >= 0.0) {
            return Err(Error::Domain(format!("partial moment up to d = {d}")));
        }
        if d == 0.0 || self.is_zero() {
            return Ok((0.0, 0.0));
        }
        match &self.kind {
            ProfileKind::Tabulated { step, values } => {
                let end = (values.len() - 1) as f64 * step;
                let (mut m0, mut m1) = (0.0, 0.0);
                let last = ((d.min(end) / step).ceil() as usize).min(values.len() - 1);
                for i in 0..last {
                    let a = i as f64 * step;
                    let b = ((i + 1) as f64 * step).min(d);
                    let (la, lb) = (values[i], self.kind.eval_unchecked(b));
                    m0 += 0.5 * (b - a) * (la + lb);
                    m1 += linear_first_moment(a, b, la, lb);
                }
                if d > end {
                    let tail = *values.last().unwrap();
                    m0 += tail * (d - end);
                    m1 += 0.5 * tail * (d * d - end * end);
                }
                Ok((m0, m1))
            }
            _ => {
                let kind = &self.kind;
                let m0 = integrate_from_zero(|s| kind.eval_unchecked(s), d, 0.5 * tol)?;
                let m1 = integrate_from_zero(|s| s * kind.eval_unchecked(s), d, 0.5 * tol)?;
                Ok((m0.value, m1.value))
            }
        }
    }

    /// Checks nonnegativity, monotonicity and finite moments on
    /// `grid_points` nodes over `[0, horizon]`. Tabulated profiles are also
    /// checked sample by sample, reporting sample indices.
    pub fn validate(&self, grid_points: usize) -> Vec<ProfileDiagnostic> {
        let mut out = Vec::new();
        if let ProfileKind::Tabulated { step, values } = &self.kind {
            check_sequence(values.iter().enumerate().map(|(i, &v)| (i, i as f64 * step, v)), &mut out);
            let last = *values.last().unwrap_or(&0.0);
            if last > 0.0 && self.tail_bound.is_none() {
                out.push(ProfileDiagnostic::UnboundedTail { last_value: last });
            }
        } else {
            let n = grid_points.max(2);
            let h = self.horizon() / (n - 1) as f64;
            check_sequence((0..n).map(|i| (i, i as f64 * h, self.kind.eval_unchecked(i as f64 * h))), &mut out);
        }
        let Moments { b0, b1, .. } = self.moments;
        if !(b0.is_finite() && b1.is_finite()) || b0 < 0.0 || b1 < 0.0 {
            out.push(ProfileDiagnostic::NonFiniteMoment { b0, b1 });
        }
        out
    }

    /// Node samples of the profile: the table itself for tabulated kinds.
    pub fn samples(&self) -> Option<(f64, &[f64])> {
        match &self.kind {
            ProfileKind::Tabulated { step, values } => Some((*step, values)),
            _ => None,
        }
    }
}

fn check_sequence<I>(samples: I, out: &mut Vec<ProfileDiagnostic>)
where
    I: Iterator<Item = (usize, f64, f64)>,
{
    let mut prev: Option<f64> = None;
    for (index, s, value) in samples {
        if value < 0.0 || !value.is_finite() {
            out.push(ProfileDiagnostic::Negative { index, s, value });
        }
        if let Some(p) = prev {
            if value > p + MONOTONICITY_TOL {
                out.push(ProfileDiagnostic::MonotonicityViolation { index, s, increase: value - p });
            }
        }
        prev = Some(value);
    }
}

/// `∫_a^b s·ℓ(s) ds` for ℓ linear with `ℓ(a) = la`, `ℓ(b) = lb`.
fn linear_first_moment(a: f64, b: f64, la: f64, lb: f64) -> f64 {
    (b - a) * (la * (2.0 * a + b) + lb * (a + 2.0 * b)) / 6.0
}

impl ProfileKind {
    fn check_parameters(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            ProfileKind::Zero => Ok(()),
            ProfileKind::ExpDecay { rate, amplitude } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return bad(format!("ExpDecay rate {rate} must be > 0"));
                }
                check_amplitude(*amplitude)
            }
            ProfileKind::LinearCutoff { amplitude, cutoff } => {
                if !(*cutoff > 0.0 && cutoff.is_finite()) {
                    return bad(format!("LinearCutoff cutoff {cutoff} must be > 0"));
                }
                check_amplitude(*amplitude)
            }
            ProfileKind::PowerDecay { amplitude, exponent } => {
                if !(*exponent > 2.0 && exponent.is_finite()) {
                    return bad(format!("PowerDecay exponent {exponent} must be > 2"));
                }
                check_amplitude(*amplitude)
            }
            ProfileKind::Tabulated { step, values } => {
                if !(*step > 0.0 && step.is_finite()) {
                    return bad(format!("Tabulated step {step} must be > 0"));
                }
                if values.len() < 2 {
                    return bad("Tabulated profile needs at least two samples".into());
                }
                if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                    return bad(format!("Tabulated sample {v} is not finite"));
                }
                Ok(())
            }
        }
    }

    fn eval_unchecked(&self, s: f64) -> f64 {
        match self {
            ProfileKind::Zero => 0.0,
            ProfileKind::ExpDecay { rate, amplitude } => amplitude * (-rate * s).exp(),
            ProfileKind::LinearCutoff { amplitude, cutoff } => amplitude * (1.0 - s / cutoff).max(0.0),
            ProfileKind::PowerDecay { amplitude, exponent } => amplitude * (1.0 + s).powf(-exponent),
            ProfileKind::Tabulated { step, values } => {
                let x = s / step;
                let last = values.len() - 1;
                if x >= last as f64 {
                    return values[last];
                }
                let i = x.floor() as usize;
                let frac = x - i as f64;
                values[i] + frac * (values[i + 1] - values[i])
            }
        }
    }

    /// Moments to tolerance `tol`; `tail_bound` applies to tabulated kinds.
    pub fn moments(&self, tail_bound: Option<f64>, tol: f64) -> Result<Moments> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("moment tolerance {tol} must be > 0")));
        }
        let lambda = |s: f64| self.eval_unchecked(s);
        match self {
            ProfileKind::Zero => Ok(Moments { b0: 0.0, b1: 0.0, tail_error: 0.0 }),
            ProfileKind::ExpDecay { rate: a, amplitude: c } => {
                if *c == 0.0 {
                    return Ok(Moments { b0: 0.0, b1: 0.0, tail_error: 0.0 });
                }
                let first_tail = |t: f64| c * (-a * t).exp() * (t + 1.0 / a) / a;
                let mut t = 1.0 / a;
                while first_tail(t) > 0.5 * tol || c * (-a * t).exp() / a > 0.5 * tol {
                    t *= 1.25;
                }
                let q0 = integrate_from_zero(|s| s * lambda(s), t, 0.5 * tol)?;
                let q1 = integrate_from_zero(lambda, t, 0.5 * tol)?;
                let tail_error = (first_tail(t) + q0.error).max(c * (-a * t).exp() / a + q1.error);
                Ok(Moments { b0: q0.value, b1: q1.value, tail_error })
            }
            ProfileKind::LinearCutoff { cutoff, .. } => {
                let q0 = adaptive_simpson(|s| s * lambda(s), 0.0, *cutoff, 0.5 * tol)?;
                let q1 = adaptive_simpson(lambda, 0.0, *cutoff, 0.5 * tol)?;
                Ok(Moments { b0: q0.value, b1: q1.value, tail_error: 0.0 })
            }
            ProfileKind::PowerDecay { amplitude: c, exponent: q } => {
                let t = POWER_DECAY_TRUNCATION;
                let q0 = integrate_from_zero(|s| s * lambda(s), t, 0.5 * tol)?;
                let q1 = integrate_from_zero(lambda, t, 0.5 * tol)?;
                // Closed-form tails: ∫_T^∞ c(1+s)^{-q} and ∫_T^∞ c·s(1+s)^{-q}.
                let base = 1.0 + t;
                let tail1 = c * base.powf(1.0 - q) / (q - 1.0);
                let tail0 = c * (base.powf(2.0 - q) / (q - 2.0) - base.powf(1.0 - q) / (q - 1.0));
                Ok(Moments {
                    b0: q0.value + tail0,
                    b1: q1.value + tail1,
                    tail_error: q0.error.max(q1.error),
                })
            }
            ProfileKind::Tabulated { step, values } => {
                let last = *values.last().unwrap();
                let tail_error = if last == 0.0 {
                    0.0
                } else {
                    tail_bound.ok_or(Error::UnboundedTail { last_value: last })?
                };
                let (mut b0, mut b1) = (0.0, 0.0);
                for (i, pair) in values.windows(2).enumerate() {
                    let a = i as f64 * step;
                    b1 += 0.5 * step * (pair[0] + pair[1]);
                    b0 += linear_first_moment(a, a + step, pair[0], pair[1]);
                }
                Ok(Moments { b0, b1, tail_error })
            }
        }
    }
}

fn check_amplitude(c: f64) -> Result<()> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("amplitude {c} must be finite and ≥ 0")))
    }
}

/// Smallest nonincreasing, nonnegative table dominating `values`
/// (running maximum from the right of `max(v, 0)`).
///
/// An all-zero input yields the Zero profile. A positive last sample needs
/// a `tail_bound`, otherwise the tail is treated as non-integrable.
pub fn monotone_envelope(step: f64, values: &[f64], tail_bound: Option<f64>) -> Result<CurvatureProfile> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("sample {v} is not finite")));
    }
    let mut envelope = vec![0.0; values.len()];
    let mut running: f64 = 0.0;
    for (slot, &v) in envelope.iter_mut().zip(values).rev() {
        running = running.max(v);
        *slot = running;
    }
    if envelope.iter().all(|&v| v == 0.0) {
        return Ok(CurvatureProfile::zero());
    }
    let last = *envelope.last().unwrap();
    if last > 0.0 && tail_bound.is_none() {
        return Err(Error::NonIntegrableTail(format!(
            "last sample {last} is positive and no tail bound was supplied"
        )));
    }
    CurvatureProfile::tabulated(step, envelope, tail_bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eval_examples() {
        assert_eq!(CurvatureProfile::zero().eval(5.0).unwrap(), 0.0);
        assert_eq!(CurvatureProfile::exp_decay(1.0, 1.0).unwrap().eval(0.0).unwrap(), 1.0);
        let lin = CurvatureProfile::linear_cutoff(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(lin.eval(0.5).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(lin.eval(3.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_argument_is_domain_error() {
        let p = CurvatureProfile::exp_decay(1.0, 1.0).unwrap();
        assert!(matches!(p.eval(-1e-9), Err(Error::Domain(_))));
        assert!(p.eval(f64::NAN).is_err());
    }

    #[test]
    fn zero_profile_moments_are_exact() {
        let m = CurvatureProfile::zero().compute_moments(1e-12).unwrap();
        assert_eq!((m.b0, m.b1, m.tail_error), (0.0, 0.0, 0.0));
    }

    #[test]
    fn exp_decay_moments() {
        let m = CurvatureProfile::exp_decay(1.0, 1.0).unwrap().compute_moments(1e-10).unwrap();
        assert_abs_diff_eq!(m.b0, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.b1, 1.0, epsilon = 1e-10);
        assert!(m.tail_error <= 1e-10);
    }

    #[test]
    fn linear_cutoff_moments_exact() {
        let m = CurvatureProfile::linear_cutoff(1.0, 1.0).unwrap().compute_moments(1e-12).unwrap();
        assert_abs_diff_eq!(m.b0, 1.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.b1, 0.5, epsilon = 1e-14);
        assert_eq!(m.tail_error, 0.0);
    }

    #[test]
    fn power_decay_moments_match_closed_form() {
        let p = CurvatureProfile::power_decay(2.0, 3.5).unwrap();
        assert_abs_diff_eq!(p.b1(), 2.0 / 2.5, epsilon = 1e-10);
        assert_abs_diff_eq!(p.b0(), 2.0 / (2.5 * 1.5), epsilon = 1e-10);
    }

    #[test]
    fn tabulated_without_tail_bound_is_unbounded() {
        let kind = ProfileKind::Tabulated { step: 0.5, values: vec![1.0, 0.5, 0.25] };
        assert_eq!(kind.moments(None, 1e-9), Err(Error::UnboundedTail { last_value: 0.25 }));
        assert!(CurvatureProfile::new(kind.clone()).is_err());
        let p = CurvatureProfile::with_tail_bound(kind, Some(1e-3)).unwrap();
        assert_eq!(p.tail_error(), 1e-3);
    }

    #[test]
    fn tabulated_moments_are_exact_for_linear_pieces() {
        // Samples of (1 − s)⁺ on step 0.25 reproduce LinearCutoff(1, 1) exactly.
        let p = CurvatureProfile::tabulated(0.25, vec![1.0, 0.75, 0.5, 0.25, 0.0, 0.0], None).unwrap();
        assert_abs_diff_eq!(p.b0(), 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.b1(), 0.5, epsilon = 1e-15);
        assert_eq!(p.support_end(), Some(1.0));
    }

    #[test]
    fn validate_examples() {
        assert!(CurvatureProfile::zero().validate(100).is_empty());
        assert!(CurvatureProfile::exp_decay(1.0, 1.0).unwrap().validate(1000).is_empty());
        let bumpy = CurvatureProfile::tabulated(0.1, vec![1.0, 0.5, 0.7, 0.0], None).unwrap();
        let diags = bumpy.validate(10);
        assert_eq!(diags.len(), 1);
        assert!(matches!(diags[0], ProfileDiagnostic::MonotonicityViolation { index: 2, .. }));
    }

    #[test]
    fn validate_flags_negative_samples() {
        let p = CurvatureProfile::tabulated(0.1, vec![0.0, -0.5, -0.5, 0.0], None).unwrap();
        let diags = p.validate(4);
        assert!(diags.iter().any(|d| matches!(d, ProfileDiagnostic::Negative { index: 1, .. })));
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(monotone_envelope(1.0, &[0.0; 6], None).unwrap(), CurvatureProfile::zero());
        let mono = [3.0, 2.0, 2.0, 0.5, 0.0];
        let env = monotone_envelope(0.5, &mono, None).unwrap();
        assert_eq!(env.samples().unwrap().1, &mono);
        let env = monotone_envelope(1.0, &[0.0, 1.0, 0.0, 0.5, 0.0, 0.0], None).unwrap();
        assert_eq!(env.samples().unwrap().1, &[1.0, 1.0, 0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn envelope_rejects_unbounded_tail() {
        assert!(matches!(monotone_envelope(1.0, &[1.0, 1.0], None), Err(Error::NonIntegrableTail(_))));
        assert!(monotone_envelope(1.0, &[1.0, 1.0], Some(0.1)).is_ok());
        assert!(monotone_envelope(1.0, &[1.0, f64::INFINITY], None).is_err());
    }

    #[test]
    fn tail_moments_closed_forms() {
        let p = CurvatureProfile::exp_decay(2.0, 3.0).unwrap();
        let t = p.tail_moments(1.0);
        assert_abs_diff_eq!(t.mass, 1.5 * (-2.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(t.first(1.0), 3.0 * (-2.0f64).exp() * 1.5 / 2.0, epsilon = 1e-14);
        let lin = CurvatureProfile::linear_cutoff(1.0, 1.0).unwrap();
        let t = lin.tail_moments(0.0);
        assert_abs_diff_eq!(t.mass, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.first(0.0), 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn tabulated_tail_moments_match_full_moments_at_zero() {
        let p = CurvatureProfile::tabulated(0.1, vec![2.0, 1.5, 1.0, 0.4, 0.1, 0.0], None).unwrap();
        let t = p.tail_moments(0.0);
        assert_abs_diff_eq!(t.mass, p.b1(), epsilon = 1e-14);
        assert_abs_diff_eq!(t.first(0.0), p.b0(), epsilon = 1e-14);
        let mid = p.tail_moments(0.25);
        let (m0, m1) = p.partial_moments(0.25, 1e-12).unwrap();
        assert_abs_diff_eq!(mid.mass + m0, p.b1(), epsilon = 1e-14);
        assert_abs_diff_eq!(mid.first(0.25) + m1, p.b0(), epsilon = 1e-14);
    }

    #[test]
    fn json_shape_is_kind_params_tail_bound() {
        let p = CurvatureProfile::exp_decay(1.0, 2.0).unwrap();
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v, serde_json::json!({"kind": "ExpDecay", "params": {"rate": 1.0, "amplitude": 2.0}}));
        let tab: CurvatureProfile = serde_json::from_value(serde_json::json!({
            "kind": "Tabulated", "params": {"step": 0.5, "values": [1.0, 0.5]}, "tail_bound": 0.01
        }))
        .unwrap();
        assert_eq!(tab.tail_bound(), Some(0.01));
        let zero: CurvatureProfile = serde_json::from_str(r#"{"kind":"Zero"}"#).unwrap();
        assert!(zero.is_zero());
        let bad = serde_json::from_str::<CurvatureProfile>(r#"{"kind":"ExpDecay","params":{"rate":-1,"amplitude":1}}"#);
        assert!(bad.is_err());
    }
}
