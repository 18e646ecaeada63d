//! Sobolev and isoperimetric inequalities for closed-form submanifolds of
//! Euclidean space with constant densities.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::manifold::{unit_ball_volume, unit_sphere_area};
use crate::ode::ComparisonDiagnostics;
use crate::profile::CurvatureProfile;
use crate::quadrature::adaptive_simpson;
use crate::report::{terms, InequalityReport, Theorem, Tolerances};
use crate::sobolev::correction_base;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecimenKind {
    /// Flat `n`-ball of radius `ρ` in `ℝ^{n+p}`.
    FlatBall,
    /// Round `Sⁿ(ρ) ⊂ ℝ^{n+1} ⊂ ℝ^{n+p}`.
    RoundSphere,
    /// Geodesic cap of polar angle `α` on `Sⁿ(ρ)`.
    SphericalCap,
}

/// Specimen JSON: `{n, p, kind, rho, alpha?}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecimenSpec {
    pub n: usize,
    pub p: usize,
    pub kind: SpecimenKind,
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

/// A specimen with its closed-form measures, centered at the base point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Submanifold {
    pub spec: SpecimenSpec,
    /// `|Σ|`.
    pub volume: f64,
    /// `|∂Σ|`, 0 for closed specimens.
    pub boundary_volume: f64,
    /// `|H|`, constant on every specimen.
    pub mean_curvature_norm: f64,
    /// `max d(o, x)` over `Σ`.
    pub r0: f64,
}

impl Submanifold {
    pub fn flat_ball(n: usize, p: usize, rho: f64) -> Result<Self> {
        Self::new(SpecimenSpec { n, p, kind: SpecimenKind::FlatBall, rho, alpha: None })
    }

    pub fn round_sphere(n: usize, p: usize, rho: f64) -> Result<Self> {
        Self::new(SpecimenSpec { n, p, kind: SpecimenKind::RoundSphere, rho, alpha: None })
    }

    pub fn spherical_cap(n: usize, p: usize, rho: f64, alpha: f64) -> Result<Self> {
        Self::new(SpecimenSpec { n, p, kind: SpecimenKind::SphericalCap, rho, alpha: Some(alpha) })
    }

    pub fn new(spec: SpecimenSpec) -> Result<Self> {
        let SpecimenSpec { n, p, kind, rho, alpha } = spec;
        if n < 2 {
            return Err(Error::InvalidParameter(format!("intrinsic dimension {n} must be ≥ 2")));
        }
        if p < 1 {
            return Err(Error::InvalidParameter("codimension must be ≥ 1".into()));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("ρ = {rho} must be positive")));
        }
        let nf = n as f64;
        let sphere = unit_sphere_area(n)?;
        let (volume, boundary_volume, mean_curvature_norm) = match kind {
            SpecimenKind::FlatBall => {
                let omega = unit_ball_volume(n)?;
                (omega * rho.powi(n as i32), nf * omega * rho.powi(n as i32 - 1), 0.0)
            }
            SpecimenKind::RoundSphere => (unit_sphere_area(n + 1)? * rho.powi(n as i32), 0.0, nf / rho),
            SpecimenKind::SphericalCap => {
                let a = alpha.ok_or_else(|| Error::InvalidParameter("SphericalCap needs alpha".into()))?;
                if !(a > 0.0 && a < std::f64::consts::PI) {
                    return Err(Error::InvalidParameter(format!("cap angle {a} must lie in (0, π)")));
                }
                let k = n as i32 - 1;
                let q = adaptive_simpson(|phi: f64| phi.sin().powi(k), 0.0, a, 1e-14)?.value;
                (sphere * rho.powi(n as i32) * q, sphere * (rho * a.sin()).powi(k), nf / rho)
            }
        };
        Ok(Self { spec, volume, boundary_volume, mean_curvature_norm, r0: rho })
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn p(&self) -> usize {
        self.spec.p
    }

    pub fn is_minimal(&self) -> bool {
        self.mean_curvature_norm == 0.0
    }
}

/// `((n+p)|B^{n+p}|/(p|B^p|))^{1/n}`.
pub fn codimension_constant(n: usize, p: usize) -> Result<f64> {
    let ratio = (n + p) as f64 * unit_ball_volume(n + p)? / (p as f64 * unit_ball_volume(p)?);
    Ok(ratio.powf(1.0 / n as f64))
}

/// Theorems are asserted only with certified inputs: Euclidean ambient
/// (profile zero and θ = 1).
fn certified(profile: &CurvatureProfile, theta: f64) -> bool {
    profile.is_zero() && theta == 1.0
}

fn inputs(s: &Submanifold, f: Option<f64>, profile: &CurvatureProfile, theta: f64) -> serde_json::Value {
    json!({"specimen": s.spec, "f": f, "profile": profile, "theta": theta})
}

fn check_density(f: f64) -> Result<()> {
    if f > 0.0 && f.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("density {f} must be positive")))
    }
}

fn sobolev_report(
    theorem: Theorem,
    s: &Submanifold,
    f: f64,
    profile: &CurvatureProfile,
    theta: f64,
    tol: &Tolerances,
    constant: f64,
    exponent: f64,
) -> Result<InequalityReport> {
    check_density(f)?;
    let nf = s.n() as f64;
    let boundary_term = f * s.boundary_volume;
    let curvature_term = f * s.mean_curvature_norm * s.volume;
    let b1_term = 2.0 * nf * profile.b1() * f * s.volume;
    let theta_factor = theta.max(0.0).powf(1.0 / nf);
    let correction_factor = correction_base(profile, s.r0).powf(exponent);
    let norm = (f.powf(nf / (nf - 1.0)) * s.volume).powf((nf - 1.0) / nf);
    let full_constant = nf * constant * theta_factor * correction_factor;
    let t = terms([
        ("boundary_term", boundary_term),
        ("curvature_term", curvature_term),
        ("b1_term", b1_term),
        ("theta_factor", theta_factor),
        ("correction_factor", correction_factor),
        ("constant", full_constant),
        ("density_norm", norm),
    ]);
    Ok(InequalityReport::new(
        theorem,
        boundary_term + curvature_term + b1_term,
        full_constant * norm,
        t,
        3.0 * tol.quad_tol,
        inputs(s, Some(f), profile, theta),
        certified(profile, theta),
    ))
}

/// Sobolev inequality in codimension `p ≥ 2` for constant `f`.
pub fn theorem14_report(
    s: &Submanifold,
    f: f64,
    profile: &CurvatureProfile,
    theta: f64,
    tol: &Tolerances,
) -> Result<InequalityReport> {
    let (n, p) = (s.n(), s.p());
    if p < 2 {
        return Err(Error::Precondition(format!("codimension p = {p} < 2")));
    }
    let exponent = (n + p - 1) as f64 / n as f64;
    sobolev_report(Theorem::Thm14, s, f, profile, theta, tol, codimension_constant(n, p)?, exponent)
}

/// Codimension-two form with constant `n|Bⁿ|^{1/n}`.
pub fn corollary15_report(
    s: &Submanifold,
    f: f64,
    profile: &CurvatureProfile,
    theta: f64,
    tol: &Tolerances,
) -> Result<InequalityReport> {
    let n = s.n();
    if s.p() != 2 {
        return Err(Error::Precondition(format!("codimension p = {} ≠ 2", s.p())));
    }
    let constant = unit_ball_volume(n)?.powf(1.0 / n as f64);
    sobolev_report(Theorem::Cor15, s, f, profile, theta, tol, constant, (n + 1) as f64 / n as f64)
}

/// `|∂Σ| ≥ n(|Bⁿ|^{1/n}θ^{1/n}c^{(n+1)/n} − 2b₁|Σ|^{1/n})|Σ|^{(n−1)/n}` for
/// minimal `Σ` in codimension two.
pub fn minimal_isoperimetric_report(
    s: &Submanifold,
    profile: &CurvatureProfile,
    theta: f64,
    tol: &Tolerances,
) -> Result<InequalityReport> {
    if !s.is_minimal() {
        return Err(Error::Precondition(format!("|H| = {} ≠ 0: specimen is not minimal", s.mean_curvature_norm)));
    }
    if s.p() != 2 {
        return Err(Error::Precondition(format!("codimension p = {} ≠ 2", s.p())));
    }
    let n = s.n();
    let nf = n as f64;
    let leading = unit_ball_volume(n)?.powf(1.0 / nf)
        * theta.max(0.0).powf(1.0 / nf)
        * correction_base(profile, s.r0).powf((nf + 1.0) / nf);
    let b1_term = 2.0 * profile.b1() * s.volume.powf(1.0 / nf);
    let volume_factor = s.volume.powf((nf - 1.0) / nf);
    let rhs = nf * (leading - b1_term) * volume_factor;
    let t = terms([
        ("boundary_term", s.boundary_volume),
        ("leading", leading),
        ("b1_term", b1_term),
        ("volume_factor", volume_factor),
    ]);
    Ok(InequalityReport::new(
        Theorem::Cor17,
        s.boundary_volume,
        rhs,
        t,
        3.0 * tol.quad_tol,
        inputs(s, None, profile, theta),
        certified(profile, theta),
    ))
}

/// Pointwise bound `(Δ_Σu − ⟨H, y⟩)/n ≤ f^{1/(n−1)} − 2b₁` for constant `f`,
/// where `Δ_Σu = n f^{1/(n−1)} − 2nb₁ − |H|`. Each pair
/// `(|D^Σu|, |y|)` inside the unit disc is checked with `⟨H, y⟩` sampled on
/// `[−|H||y|, |H||y|]`.
pub fn lemma31_bound_check(
    n: usize,
    f: f64,
    b1: f64,
    mean_curvature_norm: f64,
    test_pairs: &[(f64, f64)],
    tol: f64,
) -> Result<ComparisonDiagnostics> {
    check_density(f)?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("dimension {n} must be ≥ 2")));
    }
    let nf = n as f64;
    let root = f.powf(1.0 / (nf - 1.0));
    let laplacian = nf * root - 2.0 * nf * b1 - mean_curvature_norm;
    let bound = root - 2.0 * b1;
    let mut diag = ComparisonDiagnostics::new();
    for &(grad, y) in test_pairs {
        if !(grad >= 0.0 && y >= 0.0 && grad * grad + y * y < 1.0) {
            return Err(Error::Precondition(format!("pair ({grad}, {y}) outside the open unit disc")));
        }
        const SAMPLES: usize = 64;
        for k in 0..=SAMPLES {
            let hy = mean_curvature_norm * y * (2.0 * k as f64 / SAMPLES as f64 - 1.0);
            diag.checked_points += 1;
            diag.record(y, (laplacian - hy) / nf - bound - tol);
        }
    }
    Ok(diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Status;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    fn zero() -> CurvatureProfile {
        CurvatureProfile::zero()
    }

    #[test]
    fn flat_ball_equality() {
        let tol = Tolerances::default();
        let s = Submanifold::flat_ball(2, 2, 1.5).unwrap();
        let r = theorem14_report(&s, 1.0, &zero(), 1.0, &tol).unwrap();
        assert_relative_eq!(r.lhs, 2.0 * PI * 1.5, max_relative = 1e-15);
        assert_abs_diff_eq!(r.ratio.unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(r.status, Status::Equality);
    }

    #[test]
    fn round_sphere_ratio_two() {
        let s = Submanifold::round_sphere(2, 2, 0.7).unwrap();
        let r = theorem14_report(&s, 1.0, &zero(), 1.0, &Tolerances::default()).unwrap();
        assert_relative_eq!(r.lhs, 8.0 * PI * 0.7, max_relative = 1e-14);
        assert_relative_eq!(r.rhs, 4.0 * PI * 0.7, max_relative = 1e-14);
    }

    #[test]
    fn constant_density_scaling_invariance() {
        let s = Submanifold::round_sphere(3, 2, 1.0).unwrap();
        let tol = Tolerances::default();
        let a = theorem14_report(&s, 1.0, &zero(), 1.0, &tol).unwrap().ratio.unwrap();
        let b = theorem14_report(&s, 2.0, &zero(), 1.0, &tol).unwrap().ratio.unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-14);
    }

    #[test]
    fn codimension_two_constant_agrees_with_general() {
        let tol = Tolerances::default();
        for s in [Submanifold::flat_ball(3, 2, 1.0).unwrap(), Submanifold::round_sphere(3, 2, 1.0).unwrap()] {
            let a = theorem14_report(&s, 1.0, &zero(), 1.0, &tol).unwrap();
            let b = corollary15_report(&s, 1.0, &zero(), 1.0, &tol).unwrap();
            assert_relative_eq!(a.rhs, b.rhs, max_relative = 1e-12);
        }
        let s = Submanifold::round_sphere(3, 2, 1.0).unwrap();
        let r = corollary15_report(&s, 1.0, &zero(), 1.0, &tol).unwrap();
        let s3 = 2.0 * PI * PI;
        assert_relative_eq!(r.lhs, 3.0 * s3, max_relative = 1e-14);
        assert_relative_eq!(r.rhs, 3.0 * (4.0 * PI / 3.0f64).powf(1.0 / 3.0) * s3.powf(2.0 / 3.0), max_relative = 1e-13);
        assert!(r.ratio.unwrap() > 1.0);
    }

    #[test]
    fn preconditions() {
        let tol = Tolerances::default();
        let s1 = Submanifold::flat_ball(2, 1, 1.0).unwrap();
        assert!(matches!(theorem14_report(&s1, 1.0, &zero(), 1.0, &tol), Err(Error::Precondition(_))));
        let s3 = Submanifold::flat_ball(2, 3, 1.0).unwrap();
        assert!(corollary15_report(&s3, 1.0, &zero(), 1.0, &tol).is_err());
        let sphere = Submanifold::round_sphere(2, 2, 1.0).unwrap();
        assert!(minimal_isoperimetric_report(&sphere, &zero(), 1.0, &tol).is_err());
    }

    #[test]
    fn minimal_examples() {
        let tol = Tolerances::default();
        let s = Submanifold::flat_ball(3, 2, 2.0).unwrap();
        let r = minimal_isoperimetric_report(&s, &zero(), 1.0, &tol).unwrap();
        assert_eq!(r.status, Status::Equality);
        let big = CurvatureProfile::linear_cutoff(10.0, 1.0).unwrap();
        assert_eq!(minimal_isoperimetric_report(&s, &big, 1.0, &tol).unwrap().status, Status::Trivial);
        let small = CurvatureProfile::exp_decay(5.0, 0.01).unwrap();
        let r = minimal_isoperimetric_report(&s, &small, 0.9, &tol).unwrap();
        assert_eq!(r.status, Status::EvaluationOnly);
    }

    #[test]
    fn spherical_cap_measures() {
        let half = Submanifold::spherical_cap(2, 2, 1.0, PI / 2.0).unwrap();
        assert_relative_eq!(half.volume, 2.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(half.boundary_volume, 2.0 * PI, max_relative = 1e-13);
        let r = theorem14_report(&half, 1.0, &zero(), 1.0, &Tolerances::default()).unwrap();
        assert!(r.ratio.unwrap() > 1.0);
    }

    #[test]
    fn pointwise_laplacian_bound_examples() {
        let pairs = [(0.0, 0.0), (0.3, 0.5), (0.1, 0.99), (0.7, 0.7)];
        let d = lemma31_bound_check(3, 1.0, 0.1, 0.0, &pairs, 1e-14).unwrap();
        assert!(d.is_clean());
        let d = lemma31_bound_check(2, 1.0, 0.0, 2.0, &pairs, 0.0).unwrap();
        assert!(d.is_clean());
        assert!(lemma31_bound_check(2, 1.0, 0.0, 2.0, &[(0.8, 0.8)], 0.0).is_err());
    }
}
