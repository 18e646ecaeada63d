//! Rotationally symmetric model manifolds `dr² + w(r)²g_{S^{n−1}}`.
//!
//! Curvatures, the minimal admissible decay profile, ball volumes, the
//! comparison with the model solution `h`, and the asymptotic volume ratio.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::ode::ModelSolution;
use crate::profile::{monotone_envelope, CurvatureProfile};
use crate::quadrature::adaptive_simpson;
use crate::radial::{PowerIntegral, RadialFunction};

/// Step of the table handed to [`monotone_envelope`].
pub const PROFILE_STEP: f64 = 1e-3;
/// Samples of curvature negativity below this are treated as round-off.
pub const CURVATURE_NOISE: f64 = 1e-12;
/// Relative slack for the monotonicity of the volume ratio.
pub const RATIO_MONOTONICITY_TOL: f64 = 1e-9;
/// Radius cap for the asymptotic volume ratio.
pub const THETA_RADIUS_CAP: f64 = 1e5;

/// `|Bᵐ|`, the volume of the unit ball in `ℝᵐ`.
pub fn unit_ball_volume(m: usize) -> Result<f64> {
    if m < 1 {
        return Err(Error::Domain(format!("unit ball in dimension {m}")));
    }
    let (mut even, mut odd) = (1.0, 2.0);
    let mut k = if m % 2 == 0 { 0 } else { 1 };
    while k < m {
        k += 2;
        if k % 2 == 0 {
            even *= 2.0 * PI / k as f64;
        } else {
            odd *= 2.0 * PI / k as f64;
        }
    }
    Ok(if m % 2 == 0 { even } else { odd })
}

/// `|Sᵐ⁻¹| = m|Bᵐ|`.
pub fn unit_sphere_area(m: usize) -> Result<f64> {
    Ok(m as f64 * unit_ball_volume(m)?)
}

/// A compact bump `κ(τ) = A sin²(π(τ − start)/(end − start))` added to `w″`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub amplitude: f64,
    pub start: f64,
    pub end: f64,
}

impl Bump {
    fn len(&self) -> f64 {
        self.end - self.start
    }

    fn kappa(&self, r: f64) -> f64 {
        if r <= self.start || r >= self.end {
            return 0.0;
        }
        let s = (PI * (r - self.start) / self.len()).sin();
        self.amplitude * s * s
    }

    /// `∫_start^r κ`.
    fn slope_gain(&self, r: f64) -> f64 {
        let l = self.len();
        let x = (r - self.start).clamp(0.0, l);
        0.5 * self.amplitude * (x - l / (2.0 * PI) * (2.0 * PI * x / l).sin())
    }

    /// `∫_start^r ∫_start^s κ`.
    fn value_gain(&self, r: f64) -> f64 {
        let l = self.len();
        let x = (r - self.start).clamp(0.0, l);
        let c = l / (2.0 * PI);
        let inner = 0.5 * self.amplitude * (0.5 * x * x + c * c * ((2.0 * PI * x / l).cos() - 1.0));
        inner + self.slope_gain(r) * (r - self.start - x)
    }
}

/// Warp families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum WarpKind {
    /// `w = r`.
    Euclidean,
    /// `w = sinh r`.
    Hyperbolic,
    /// `w = r + ∫₀^r∫₀^s Σκᵢ`, affine with slope `α = 1 + Σ Aᵢ Lᵢ/2` past the bumps.
    Capped { bumps: Vec<Bump> },
    /// Tabulated `w` (CSV `t,value,deriv`), optionally continued affinely.
    Custom {
        #[serde(skip)]
        grid: Option<GridFunction>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_slope: Option<f64>,
    },
}

/// Manifold JSON: `{n, kind, params | warp_csv_path}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub n: usize,
    #[serde(flatten)]
    pub kind: WarpKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warp_csv_path: Option<String>,
}

/// A rotationally symmetric manifold with pole `o` at `r = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelManifold {
    n: usize,
    kind: WarpKind,
    warp_csv_path: Option<String>,
}

impl ModelManifold {
    pub fn euclidean(n: usize) -> Result<Self> {
        Self::new(n, WarpKind::Euclidean)
    }

    pub fn hyperbolic(n: usize) -> Result<Self> {
        Self::new(n, WarpKind::Hyperbolic)
    }

    pub fn capped(n: usize, bumps: Vec<Bump>) -> Result<Self> {
        Self::new(n, WarpKind::Capped { bumps })
    }

    pub fn custom(n: usize, grid: GridFunction, tail_slope: Option<f64>) -> Result<Self> {
        Self::new(n, WarpKind::Custom { grid: Some(grid), tail_slope })
    }

    pub fn new(n: usize, kind: WarpKind) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("dimension {n} must be ≥ 2")));
        }
        let m = Self { n, kind, warp_csv_path: None };
        m.check_warp()?;
        Ok(m)
    }

    /// Builds from a spec, reading `warp_csv_path` relative to `base_dir`.
    pub fn from_spec(spec: &ManifoldSpec, base_dir: &Path) -> Result<Self> {
        let kind = match (&spec.kind, &spec.warp_csv_path) {
            (WarpKind::Custom { tail_slope, .. }, Some(path)) => {
                let full = base_dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| Error::Parse(format!("{}: {e}", full.display())))?;
                WarpKind::Custom { grid: Some(GridFunction::from_csv(&text)?), tail_slope: *tail_slope }
            }
            (WarpKind::Custom { grid: None, .. }, None) => {
                return Err(Error::InvalidParameter("Custom manifold needs warp_csv_path".into()))
            }
            (other, _) => other.clone(),
        };
        let mut m = Self::new(spec.n, kind)?;
        m.warp_csv_path = spec.warp_csv_path.clone();
        Ok(m)
    }

    pub fn spec(&self) -> ManifoldSpec {
        ManifoldSpec { n: self.n, kind: self.kind.clone(), warp_csv_path: self.warp_csv_path.clone() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &WarpKind {
        &self.kind
    }

    /// Short label used in reports.
    pub fn label(&self) -> &'static str {
        match self.kind {
            WarpKind::Euclidean => "Euclidean",
            WarpKind::Hyperbolic => "Hyperbolic",
            WarpKind::Capped { .. } => "Capped",
            WarpKind::Custom { .. } => "Custom",
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.kind, WarpKind::Euclidean)
    }

    /// Largest radius where `w` is defined.
    pub fn r_max(&self) -> f64 {
        match &self.kind {
            WarpKind::Custom { grid: Some(g), tail_slope: None } => g.end(),
            _ => f64::INFINITY,
        }
    }

    /// Eventual slope of `w`, when `w` is eventually affine.
    pub fn tail_slope(&self) -> Option<f64> {
        match &self.kind {
            WarpKind::Euclidean => Some(1.0),
            WarpKind::Hyperbolic => None,
            WarpKind::Capped { bumps } => Some(1.0 + bumps.iter().map(|b| 0.5 * b.amplitude * b.len()).sum::<f64>()),
            WarpKind::Custom { tail_slope, .. } => *tail_slope,
        }
    }

    /// Radius past which `w` is affine (or the end of a custom grid).
    pub fn structure_end(&self) -> f64 {
        match &self.kind {
            WarpKind::Euclidean | WarpKind::Hyperbolic => 0.0,
            WarpKind::Capped { bumps } => bumps.iter().map(|b| b.end).fold(0.0, f64::max),
            WarpKind::Custom { grid, .. } => grid.as_ref().map_or(0.0, |g| g.end()),
        }
    }

    fn custom_grid(&self) -> &GridFunction {
        match &self.kind {
            WarpKind::Custom { grid: Some(g), .. } => g,
            _ => unreachable!("custom grid requested for a closed-form warp"),
        }
    }

    fn check_warp(&self) -> Result<()> {
        match &self.kind {
            WarpKind::Euclidean | WarpKind::Hyperbolic => Ok(()),
            WarpKind::Capped { bumps } => {
                for b in bumps {
                    if !(b.start > 0.0 && b.end > b.start && b.amplitude.is_finite() && b.end.is_finite()) {
                        return Err(Error::InvalidParameter(format!("bad bump {b:?}: need 0 < start < end")));
                    }
                }
                let alpha = self.tail_slope().unwrap();
                if !(alpha > 0.0) {
                    return Err(Error::InvalidParameter(format!("tail slope α = {alpha} must be positive")));
                }
                let end = self.structure_end();
                let steps = ((end / PROFILE_STEP).ceil() as usize).max(1);
                for i in 1..=steps {
                    let r = end * i as f64 / steps as f64;
                    if self.w(r)? <= 0.0 {
                        return Err(Error::InvalidParameter(format!("warp vanishes at r = {r}")));
                    }
                }
                Ok(())
            }
            WarpKind::Custom { grid, tail_slope } => {
                let g = grid.as_ref().ok_or_else(|| Error::InvalidParameter("Custom warp without grid".into()))?;
                if g.values()[0].abs() > 1e-9 || (g.derivs()[0] - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter("custom warp needs w(0) = 0 and w′(0) = 1".into()));
                }
                if let Some(v) = g.values().iter().skip(1).find(|&&v| v <= 0.0) {
                    return Err(Error::InvalidParameter(format!("custom warp not positive: {v}")));
                }
                if let Some(a) = tail_slope {
                    if !(*a > 0.0) {
                        return Err(Error::InvalidParameter(format!("tail slope {a} must be positive")));
                    }
                }
                Ok(())
            }
        }
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if !(r >= 0.0) || r > self.r_max() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("r = {r} outside [0, {}]", self.r_max())));
        }
        Ok(())
    }

    /// `(w, w′, w″)` at `r`.
    pub fn warp(&self, r: f64) -> Result<(f64, f64, f64)> {
        self.check_radius(r)?;
        Ok(match &self.kind {
            WarpKind::Euclidean => (r, 1.0, 0.0),
            WarpKind::Hyperbolic => (r.sinh(), r.cosh(), r.sinh()),
            WarpKind::Capped { bumps } => {
                let mut w = r;
                let mut dw = 1.0;
                let mut ddw = 0.0;
                for b in bumps {
                    w += b.value_gain(r);
                    dw += b.slope_gain(r);
                    ddw += b.kappa(r);
                }
                (w, dw, ddw)
            }
            WarpKind::Custom { grid: Some(g), tail_slope } => {
                if r <= g.end() {
                    (g.value_at(r)?, g.deriv_at(r)?, g.second_deriv_at(r)?)
                } else {
                    let a = tail_slope.unwrap_or(g.last_deriv());
                    (g.last_value() + a * (r - g.end()), a, 0.0)
                }
            }
            WarpKind::Custom { grid: None, .. } => unreachable!(),
        })
    }

    pub fn w(&self, r: f64) -> Result<f64> {
        Ok(self.warp(r)?.0)
    }

    /// `(K_rad, K_tan) = (−w″/w, (1 − w′²)/w²)`. Removable singularities at
    /// the pole use the series limit `−w‴(0)` on `[0, 10Δr)`.
    pub fn sectional_curvatures(&self, r: f64) -> Result<(f64, f64)> {
        self.check_radius(r)?;
        match &self.kind {
            WarpKind::Euclidean => Ok((0.0, 0.0)),
            WarpKind::Hyperbolic => {
                if r < 1e-4 {
                    return Ok((-1.0, -1.0));
                }
                let (w, dw, ddw) = self.warp(r)?;
                Ok((-ddw / w, (1.0 - dw * dw) / (w * w)))
            }
            WarpKind::Capped { bumps } => {
                let first = bumps.iter().map(|b| b.start).fold(f64::INFINITY, f64::min);
                if r < first {
                    return Ok((0.0, 0.0));
                }
                let (w, dw, ddw) = self.warp(r)?;
                Ok((-ddw / w, (1.0 - dw) * (1.0 + dw) / (w * w)))
            }
            WarpKind::Custom { .. } => {
                let pole = 10.0 * self.custom_grid().step();
                if r < pole {
                    let dw = self.custom_grid().deriv_at(pole)?;
                    let third = 2.0 * (dw - 1.0) / (pole * pole);
                    return Ok((-third, -third));
                }
                let (w, dw, ddw) = self.warp(r)?;
                Ok((-ddw / w, (1.0 - dw) * (1.0 + dw) / (w * w)))
            }
        }
    }

    /// The minimal nonincreasing `λ` dominating `max(0, −min(K_rad, K_tan))`.
    ///
    /// The curvature is sampled on a grid of step [`PROFILE_STEP`] and each
    /// node takes the running maximum from the previous node onward, so the
    /// linear interpolant dominates the samples on every cell.
    pub fn admissible_profile(&self) -> Result<CurvatureProfile> {
        let end = match &self.kind {
            WarpKind::Euclidean => return Ok(CurvatureProfile::zero()),
            WarpKind::Hyperbolic => {
                return Err(Error::NotAsymptoticallyNonnegative(
                    "hyperbolic space has λ ≡ 1, so b₀ is infinite".into(),
                ))
            }
            WarpKind::Capped { .. } => {
                let alpha = self.tail_slope().unwrap();
                if alpha > 1.0 {
                    return Err(Error::NotAsymptoticallyNonnegative(format!(
                        "tail slope α = {alpha} > 1 gives K_tan ~ (1 − α²)/(αr)², not integrable against s ds"
                    )));
                }
                self.structure_end()
            }
            WarpKind::Custom { tail_slope, .. } => {
                if tail_slope.is_some_and(|a| a > 1.0) {
                    return Err(Error::NotAsymptoticallyNonnegative("tail slope above 1".into()));
                }
                self.structure_end()
            }
        };
        let steps = ((end / PROFILE_STEP).ceil() as usize).max(1);
        let step = end / steps as f64;
        let mut raw = Vec::with_capacity(steps + 2);
        for i in 0..=steps {
            let (k_rad, k_tan) = self.sectional_curvatures(i as f64 * step)?;
            let neg = -k_rad.min(k_tan);
            raw.push(if neg < CURVATURE_NOISE { 0.0 } else { neg });
        }
        let last = *raw.last().unwrap();
        let open_tail = matches!(self.kind, WarpKind::Custom { tail_slope: None, .. });
        if last > 0.0 && open_tail {
            return Err(Error::NotAsymptoticallyNonnegative(format!(
                "curvature negativity {last} at the end of the warp grid"
            )));
        }
        // Past the structure the warp is affine with slope ≤ 1, so λ = 0 there.
        raw.push(0.0);
        let dominated: Vec<f64> =
            (0..raw.len()).map(|i| if i == 0 { raw[0] } else { raw[i].max(raw[i - 1]) }).collect();
        monotone_envelope(step, &dominated, None)
            .map_err(|e| Error::NotAsymptoticallyNonnegative(e.to_string()))
    }

    /// `vol(B_r(o)) = n|Bⁿ|∫₀^r w^{n−1}`.
    pub fn volume(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        let n = self.n;
        let omega = unit_ball_volume(n)?;
        let k = (n - 1) as i32;
        let integral = match &self.kind {
            WarpKind::Euclidean => return Ok(omega * r.powi(n as i32)),
            WarpKind::Hyperbolic => {
                let scale = 1.0 + r * r.sinh().powi(k);
                adaptive_simpson(|t| t.sinh().powi(k), 0.0, r, 1e-13 * scale)?.value
            }
            WarpKind::Capped { .. } => {
                let end = self.structure_end();
                let inner = r.min(end);
                let head = adaptive_simpson(|t| self.w(t).unwrap().powi(k), 0.0, inner, 1e-13 * (1.0 + inner.powi(n as i32)))?.value;
                if r <= end {
                    head
                } else {
                    let (w_end, a) = (self.w(end)?, self.tail_slope().unwrap());
                    head + ((w_end + a * (r - end)).powi(k + 1) - w_end.powi(k + 1)) / (a * n as f64)
                }
            }
            WarpKind::Custom { .. } => {
                let g = self.custom_grid();
                let slope = self.tail_slope().unwrap_or(g.last_deriv());
                RadialFunction::new(g.clone(), slope).power_integral(n as u32 - 1).at(r)?
            }
        };
        Ok(n as f64 * omega * integral)
    }

    /// `|∂B_r(o)| = n|Bⁿ|w(r)^{n−1}`.
    pub fn area(&self, r: f64) -> Result<f64> {
        Ok(unit_sphere_area(self.n)? * self.w(r)?.powi(self.n as i32 - 1))
    }
}

/// Volumes and the model comparison sampled on a radius grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallGrowth {
    pub r: Vec<f64>,
    pub volume: Vec<f64>,
    pub area: Vec<f64>,
    pub model_volume: Vec<f64>,
    pub ratio: Vec<f64>,
}

impl BallGrowth {
    /// CSV with header `r,volume,area,model_volume,ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,volume,area,model_volume,ratio\n");
        for i in 0..self.r.len() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.r[i], self.volume[i], self.area[i], self.model_volume[i], self.ratio[i]
            );
        }
        out
    }
}

/// Estimate of the asymptotic volume ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaEstimate {
    pub theta: f64,
    /// Radius of the last evaluation.
    pub radius: f64,
    /// `|E(2r) − E(r)|` at the stop.
    pub cauchy_gap: f64,
}

/// A manifold paired with an admissible profile and its model solution `h`.
#[derive(Debug, Clone)]
pub struct VolumeComparison {
    manifold: ModelManifold,
    profile: CurvatureProfile,
    model: ModelSolution,
    model_integral: PowerIntegral,
}

impl VolumeComparison {
    pub fn new(manifold: ModelManifold, profile: CurvatureProfile, ode_tol: f64) -> Result<Self> {
        let model = ModelSolution::solve(&profile, ode_tol)?;
        let model_integral = model.h().power_integral(manifold.n() as u32 - 1);
        Ok(Self { manifold, profile, model, model_integral })
    }

    /// Uses the manifold's own admissible profile.
    pub fn admissible(manifold: ModelManifold, ode_tol: f64) -> Result<Self> {
        let profile = manifold.admissible_profile()?;
        Self::new(manifold, profile, ode_tol)
    }

    pub fn manifold(&self) -> &ModelManifold {
        &self.manifold
    }

    pub fn profile(&self) -> &CurvatureProfile {
        &self.profile
    }

    pub fn model(&self) -> &ModelSolution {
        &self.model
    }

    pub fn volume(&self, r: f64) -> Result<f64> {
        self.manifold.volume(r)
    }

    /// `n|Bⁿ|∫₀^r h^{n−1}`.
    pub fn model_volume(&self, r: f64) -> Result<f64> {
        let n = self.manifold.n();
        Ok(unit_sphere_area(n)? * self.model_integral.at(r)?)
    }

    pub fn ratio(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Ok(1.0);
        }
        Ok(self.volume(r)? / self.model_volume(r)?)
    }

    /// Samples on `r = i·r_max/intervals`, `i = 1..=intervals`, and checks
    /// that the ratio is nonincreasing.
    pub fn ball_growth(&self, r_max: f64, intervals: usize) -> Result<BallGrowth> {
        if !(r_max > 0.0) || intervals == 0 {
            return Err(Error::InvalidParameter(format!("ball growth on (0, {r_max}] with {intervals} intervals")));
        }
        let mut g = BallGrowth { r: vec![], volume: vec![], area: vec![], model_volume: vec![], ratio: vec![] };
        for i in 1..=intervals {
            let r = r_max * i as f64 / intervals as f64;
            let volume = self.volume(r)?;
            let model_volume = self.model_volume(r)?;
            let ratio = volume / model_volume;
            if let Some(&prev) = g.ratio.last() {
                if ratio > prev * (1.0 + RATIO_MONOTONICITY_TOL) {
                    return Err(Error::Inadmissible { radius: r, increase: ratio - prev });
                }
            }
            g.r.push(r);
            g.volume.push(volume);
            g.area.push(self.manifold.area(r)?);
            g.model_volume.push(model_volume);
            g.ratio.push(ratio);
        }
        Ok(g)
    }

    /// Asymptotic volume ratio θ.
    ///
    /// The ratio `ρ(r)` behaves like `θ + c/r` once `w` and `h` are affine,
    /// so the estimate at radius `r` is `E(r) = 2ρ(2r) − ρ(r)`; radii double
    /// until successive estimates differ by less than `tol`.
    pub fn asymptotic_volume_ratio(&self, tol: f64) -> Result<ThetaEstimate> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("θ tolerance {tol} must be > 0")));
        }
        if self.manifold.is_euclidean() && self.profile.is_zero() {
            return Ok(ThetaEstimate { theta: 1.0, radius: 0.0, cauchy_gap: 0.0 });
        }
        let cap = THETA_RADIUS_CAP.min(self.manifold.r_max());
        let mut r = self.manifold.structure_end().max(self.model.h().horizon()).max(1.0);
        let mut rho = self.ratio(r)?;
        let mut previous: Option<f64> = None;
        while 2.0 * r <= cap {
            let rho2 = self.ratio(2.0 * r)?;
            if rho2 > rho * (1.0 + RATIO_MONOTONICITY_TOL) {
                return Err(Error::Inadmissible { radius: 2.0 * r, increase: rho2 - rho });
            }
            let estimate = 2.0 * rho2 - rho;
            if let Some(prev) = previous {
                let gap = (estimate - prev).abs();
                if gap < tol {
                    let theta = estimate.clamp(0.0, rho2);
                    return Ok(ThetaEstimate { theta, radius: 2.0 * r, cauchy_gap: gap });
                }
            }
            previous = Some(estimate);
            rho = rho2;
            r *= 2.0;
        }
        Err(Error::NonConvergence { radius: r, last: previous.unwrap_or(f64::NAN), previous: rho })
    }

    /// Lower and upper sandwich volumes `vol(B_{r−r₀})`, `vol(B_{r+r₀})` for the
    /// set of points within `r` of every point of `B_{r₀}(o)`.
    pub fn sandwich_volumes(&self, r0: f64, r: f64) -> Result<(f64, f64)> {
        if r <= r0 {
            return Err(Error::Domain(format!("sandwich needs r > r₀, got r = {r}, r₀ = {r0}")));
        }
        Ok((self.volume(r - r0)?, self.volume(r + r0)?))
    }
}
