//! Jacobi fields along transport geodesics and the determinant bounds of the
//! ABP argument.
//!
//! A [`JacobiSystem`] carries the matrix equation `P″ = −PS` with initial data
//! `P(0) = P0`, `P′(0) = dP0`. Rows of `P0` that vanish mark normal directions
//! (submanifold case); there `det P ~ tᵖ` near 0 and `Q = P⁻¹P′` has a `1/t`
//! pole, so `Q` is only formed from `t = 10Δt` on.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::manifold::ModelManifold;
use crate::ode::{solve_linear_ivp, sturm_compare, ComparisonDiagnostics, STEP_FLOOR};
use crate::profile::CurvatureProfile;
use crate::report::{terms, InequalityReport, Theorem, Tolerances};
use crate::sobolev::{NeumannSolution, RadialDensity, RadialDomain};

/// Scaled `det P/tᵏ` below this is a conjugate point.
pub const CONJUGATE_THRESHOLD: f64 = 1e-10;
/// `Q` is formed from this many steps on.
pub const Q_START_STEPS: usize = 10;
const INITIAL_STEP: f64 = 1e-2;
const SYMMETRY_TOL: f64 = 1e-12;
const HYPOTHESIS_SLACK: f64 = 1e-12;

/// `t ↦ S(t)`, symmetric.
pub type CurvatureOperator = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
pub struct JacobiSystem {
    dim: usize,
    normal_dim: usize,
    curvature: Option<CurvatureOperator>,
    p0: DMatrix<f64>,
    dp0: DMatrix<f64>,
    horizon: f64,
    speed: f64,
    base_distance: f64,
}

impl fmt::Debug for JacobiSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JacobiSystem")
            .field("dim", &self.dim)
            .field("normal_dim", &self.normal_dim)
            .field("flat", &self.is_flat())
            .field("p0", &self.p0)
            .field("dp0", &self.dp0)
            .field("horizon", &self.horizon)
            .field("speed", &self.speed)
            .field("base_distance", &self.base_distance)
            .finish()
    }
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

impl JacobiSystem {
    /// General system; `curvature = None` means `S ≡ 0`.
    pub fn new(
        p0: DMatrix<f64>,
        dp0: DMatrix<f64>,
        curvature: Option<CurvatureOperator>,
        horizon: f64,
        speed: f64,
        base_distance: f64,
    ) -> Result<Self> {
        let dim = p0.nrows();
        if dim == 0 || !p0.is_square() || dp0.shape() != (dim, dim) {
            return Err(Error::InvalidParameter("P0 and dP0 must be square of equal size".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive")));
        }
        if !(speed > 0.0 && speed < 1.0) {
            return Err(Error::InvalidParameter(format!("speed {speed} must lie in (0, 1)")));
        }
        if !(base_distance >= 0.0 && base_distance.is_finite()) {
            return Err(Error::InvalidParameter(format!("base distance {base_distance} must be ≥ 0")));
        }
        if let Some(s) = &curvature {
            for k in 0..=8 {
                let t = horizon * k as f64 / 8.0;
                let m = s(t);
                if m.shape() != (dim, dim) {
                    return Err(Error::InvalidParameter(format!("S({t}) has shape {:?}", m.shape())));
                }
                if asymmetry(&m) > SYMMETRY_TOL * (1.0 + m.amax()) {
                    return Err(Error::InvalidParameter(format!("S({t}) is not symmetric")));
                }
            }
        }
        let normal_dim = (0..dim).filter(|&i| p0.row(i).iter().all(|&x| x == 0.0)).count();
        Ok(Self { dim, normal_dim, curvature, p0, dp0, horizon, speed, base_distance })
    }

    /// `S ≡ 0`, `P0 = I`, `dP0 = hessian`.
    pub fn euclidean(hessian: DMatrix<f64>, horizon: f64, speed: f64, base_distance: f64) -> Result<Self> {
        let m = hessian.nrows();
        Self::new(DMatrix::identity(m, m), hessian, None, horizon, speed, base_distance)
    }

    /// Geodesic from a point at distance `d` moving radially toward the
    /// pole, in a frame whose last vector is the geodesic direction:
    /// `S(t) = speed²·K_rad(|d − t·speed|)·diag(I_{n−1}, 0)`.
    pub fn model_radial(
        manifold: &ModelManifold,
        hessian: DMatrix<f64>,
        horizon: f64,
        speed: f64,
        base_distance: f64,
    ) -> Result<Self> {
        let n = manifold.n();
        if hessian.shape() != (n, n) {
            return Err(Error::InvalidParameter(format!("hessian must be {n}×{n}")));
        }
        let m = manifold.clone();
        let s2 = speed * speed;
        let curvature: CurvatureOperator = Arc::new(move |t: f64| {
            let rho = (base_distance - t * speed).abs();
            let k_rad = m.sectional_curvatures(rho).map_or(0.0, |k| k.0);
            let mut s = DMatrix::zeros(n, n);
            for i in 0..n - 1 {
                s[(i, i)] = s2 * k_rad;
            }
            s
        });
        Self::new(DMatrix::identity(n, n), hessian, Some(curvature), horizon, speed, base_distance)
    }

    /// Normal-bundle transport: `P0 = diag(I_n, 0)`,
    /// `dP0 = [[T, C], [0, I_p]]` with `T` the symmetric tangential block and
    /// `C` the `n×p` coupling block.
    pub fn submanifold(
        top_left: DMatrix<f64>,
        coupling: DMatrix<f64>,
        curvature: Option<CurvatureOperator>,
        horizon: f64,
        speed: f64,
        base_distance: f64,
    ) -> Result<Self> {
        let n = top_left.nrows();
        let p = coupling.ncols();
        if !top_left.is_square() || coupling.nrows() != n || p == 0 {
            return Err(Error::InvalidParameter("T must be n×n and C n×p with p ≥ 1".into()));
        }
        if asymmetry(&top_left) > SYMMETRY_TOL * (1.0 + top_left.amax()) {
            return Err(Error::InvalidParameter("tangential block T is not symmetric".into()));
        }
        let m = n + p;
        let mut p0 = DMatrix::zeros(m, m);
        p0.view_mut((0, 0), (n, n)).fill_with_identity();
        let mut dp0 = DMatrix::zeros(m, m);
        dp0.view_mut((0, 0), (n, n)).copy_from(&top_left);
        dp0.view_mut((0, n), (n, p)).copy_from(&coupling);
        dp0.view_mut((n, n), (p, p)).fill_with_identity();
        Self::new(p0, dp0, curvature, horizon, speed, base_distance)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of normal directions (zero rows of `P0`).
    pub fn normal_dim(&self) -> usize {
        self.normal_dim
    }

    pub fn is_flat(&self) -> bool {
        self.curvature.is_none()
    }

    pub fn p0(&self) -> &DMatrix<f64> {
        &self.p0
    }

    pub fn dp0(&self) -> &DMatrix<f64> {
        &self.dp0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn base_distance(&self) -> f64 {
        self.base_distance
    }

    pub fn curvature_at(&self, t: f64) -> DMatrix<f64> {
        match &self.curvature {
            Some(s) => s(t),
            None => DMatrix::zeros(self.dim, self.dim),
        }
    }

    /// Trace of the tangential block of `dP0`.
    fn tangential_trace(&self) -> f64 {
        (0..self.dim - self.normal_dim).map(|i| self.dp0[(i, i)]).sum()
    }

    fn describe(&self) -> serde_json::Value {
        let rows: Vec<Vec<f64>> = self.dp0.row_iter().map(|r| r.iter().copied().collect()).collect();
        json!({
            "dim": self.dim,
            "normal_dim": self.normal_dim,
            "flat": self.is_flat(),
            "horizon": self.horizon,
            "speed": self.speed,
            "base_distance": self.base_distance,
            "dP0": rows,
        })
    }
}

/// Integrated Jacobi system on a uniform grid.
#[derive(Debug, Clone)]
pub struct JacobiRun {
    step: f64,
    p: Vec<DMatrix<f64>>,
    dp: Vec<DMatrix<f64>>,
    /// `det P` with derivative `det P·tr Q`.
    pub det: GridFunction,
    q: Vec<Option<DMatrix<f64>>>,
    /// `max ‖Q − Qᵀ‖∞` over the nodes where `Q` is formed.
    pub symmetry_residual: f64,
    normal_dim: usize,
}

impl JacobiRun {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn p(&self, i: usize) -> &DMatrix<f64> {
        &self.p[i]
    }

    pub fn dp(&self, i: usize) -> &DMatrix<f64> {
        &self.dp[i]
    }

    /// `Q` at node `i`, from `t = 10Δt` on.
    pub fn q(&self, i: usize) -> Option<&DMatrix<f64>> {
        self.q[i].as_ref()
    }

    pub fn trace_q(&self, i: usize) -> Option<f64> {
        self.q[i].as_ref().map(|q| q.trace())
    }

    pub fn final_det(&self) -> f64 {
        self.det.last_value()
    }

    /// `max |(log det P)′ − tr Q|` with centered differences.
    pub fn log_det_residual(&self) -> f64 {
        let d = self.det.values();
        let mut worst = 0.0f64;
        for i in Q_START_STEPS + 1..self.len() - 1 {
            let fd = (d[i + 1].ln() - d[i - 1].ln()) / (2.0 * self.step);
            if let Some(tr) = self.trace_q(i) {
                worst = worst.max((fd - tr).abs());
            }
        }
        worst
    }

    /// `det P(t)/tᵖ` at the first node, `p` the normal dimension.
    pub fn small_time_ratio(&self) -> f64 {
        let t = self.step;
        self.det.values()[1] / t.powi(self.normal_dim as i32)
    }
}

fn rk4_matrix(sys: &JacobiSystem, n_steps: usize) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let dt = sys.horizon / n_steps as f64;
    let mut ps = Vec::with_capacity(n_steps + 1);
    let mut vs = Vec::with_capacity(n_steps + 1);
    let (mut p, mut v) = (sys.p0.clone(), sys.dp0.clone());
    ps.push(p.clone());
    vs.push(v.clone());
    if sys.is_flat() {
        for i in 1..=n_steps {
            let t = i as f64 * dt;
            ps.push(&sys.p0 + &sys.dp0 * t);
            vs.push(sys.dp0.clone());
        }
        return (ps, vs);
    }
    let mut s_left = sys.curvature_at(0.0);
    for i in 0..n_steps {
        let t = i as f64 * dt;
        let s_mid = sys.curvature_at(t + 0.5 * dt);
        let s_right = sys.curvature_at(t + dt);
        let k1p = v.clone();
        let k1v = -(&p * &s_left);
        let k2p = &v + &k1v * (0.5 * dt);
        let k2v = -((&p + &k1p * (0.5 * dt)) * &s_mid);
        let k3p = &v + &k2v * (0.5 * dt);
        let k3v = -((&p + &k2p * (0.5 * dt)) * &s_mid);
        let k4p = &v + &k3v * dt;
        let k4v = -((&p + &k3p * dt) * &s_right);
        p += (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (dt / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
        ps.push(p.clone());
        vs.push(v.clone());
        s_left = s_right;
    }
    (ps, vs)
}

/// Integrates `P″ = −PS` on `[0, r]` by RK4 with step halving until the
/// Richardson estimate is below `tol·(1 + max‖P‖)`, then forms `det P` and
/// `Q = P⁻¹P′`.
pub fn integrate_jacobi(sys: &JacobiSystem, tol: f64) -> Result<JacobiRun> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("ODE tolerance {tol} must be > 0")));
    }
    let r = sys.horizon;
    let mut n = (r / INITIAL_STEP.min(tol.powf(0.25))).ceil().max(2.0 * Q_START_STEPS as f64) as usize;
    let (mut p, mut dp) = rk4_matrix(sys, n);
    if !sys.is_flat() {
        loop {
            let (fp, fdp) = rk4_matrix(sys, 2 * n);
            let scale = 1.0 + fp.iter().map(|m| m.amax()).fold(0.0, f64::max);
            let err = (0..=n)
                .map(|i| (&p[i] - &fp[2 * i]).amax().max((&dp[i] - &fdp[2 * i]).amax()) / 15.0)
                .fold(0.0, f64::max);
            if !err.is_finite() {
                return Err(Error::Domain(format!("non-finite Jacobi solution on [0, {r}]")));
            }
            p = fp;
            dp = fdp;
            n *= 2;
            if err <= tol * scale {
                break;
            }
            if r / n as f64 / 2.0 < STEP_FLOOR {
                return Err(Error::ToleranceUnreachable { tol, achieved: err / scale, step: r / n as f64 });
            }
        }
    }
    let step = r / n as f64;
    let k = sys.normal_dim as i32;
    let mut dets = Vec::with_capacity(n + 1);
    let mut q = Vec::with_capacity(n + 1);
    let mut traces = Vec::with_capacity(n + 1);
    let mut symmetry_residual = 0.0f64;
    for i in 0..=n {
        let t = i as f64 * step;
        let det = p[i].determinant();
        if i == 0 {
            if k == 0 && det <= CONJUGATE_THRESHOLD {
                return Err(Error::Precondition(format!("det P(0) = {det} is not positive")));
            }
            dets.push(det);
            traces.push(if k == 0 { p[0].clone().lu().solve(&dp[0]).map(|m| m.trace()) } else { None });
            q.push(None);
            continue;
        }
        let scaled = det / t.powi(k);
        if !(scaled > CONJUGATE_THRESHOLD) {
            return Err(Error::ConjugatePoint { t, det });
        }
        let qi = p[i].clone().lu().solve(&dp[i]).ok_or(Error::ConjugatePoint { t, det })?;
        dets.push(det);
        traces.push(Some(qi.trace()));
        if i >= Q_START_STEPS {
            symmetry_residual = symmetry_residual.max(asymmetry(&qi));
            q.push(Some(qi));
        } else {
            q.push(None);
        }
    }
    let mut derivs: Vec<f64> = dets.iter().zip(&traces).map(|(d, tr)| tr.map_or(0.0, |tr| d * tr)).collect();
    if traces[0].is_none() {
        derivs[0] = (-3.0 * dets[0] + 4.0 * dets[1] - dets[2]) / (2.0 * step);
    }
    Ok(JacobiRun {
        step,
        p,
        dp,
        det: GridFunction::new(step, dets, derivs)?,
        q,
        symmetry_residual,
        normal_dim: sys.normal_dim,
    })
}

/// Checks `(tr Q)′ + (tr Q)²/m ≤ (m−1)·speed²·λ(|d − t·speed|) + tol` at
/// interior nodes, with `(tr Q)′` from centered differences.
pub fn trace_riccati_check(
    sys: &JacobiSystem,
    run: &JacobiRun,
    profile: &CurvatureProfile,
    tol: f64,
) -> Result<ComparisonDiagnostics> {
    if sys.normal_dim != 0 {
        return Err(Error::Precondition("trace Riccati check needs a domain-case system".into()));
    }
    let m = sys.dim as f64;
    let h = run.step;
    let mut diag = ComparisonDiagnostics::new();
    for i in Q_START_STEPS + 1..run.len() - 1 {
        let (Some(lo), Some(mid), Some(hi)) = (run.trace_q(i - 1), run.trace_q(i), run.trace_q(i + 1)) else {
            continue;
        };
        let t = run.time(i);
        let lhs = (hi - lo) / (2.0 * h) + mid * mid / m;
        let rho = (sys.base_distance - t * sys.speed).abs();
        let rhs = (m - 1.0) * sys.speed * sys.speed * profile.eval(rho)?;
        diag.checked_points += 1;
        diag.record(t, lhs - rhs - tol);
    }
    Ok(diag)
}

/// `Λ(t) = weight·λ(|d − t·speed|)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaAlong {
    pub profile: CurvatureProfile,
    pub weight: f64,
    pub speed: f64,
    pub base_distance: f64,
}

impl LambdaAlong {
    fn checked(profile: &CurvatureProfile, weight: f64, speed: f64, base_distance: f64) -> Result<Self> {
        if !(speed > 0.0 && speed < 1.0) {
            return Err(Error::InvalidParameter(format!("speed {speed} must lie in (0, 1)")));
        }
        if !(base_distance >= 0.0) {
            return Err(Error::InvalidParameter(format!("base distance {base_distance} must be ≥ 0")));
        }
        Ok(Self { profile: profile.clone(), weight: weight.max(0.0), speed, base_distance })
    }

    /// Domain case: `weight = ((n−1)/n)·speed²`.
    pub fn domain(profile: &CurvatureProfile, n: usize, speed: f64, base_distance: f64) -> Result<Self> {
        let nf = n as f64;
        Self::checked(profile, (nf - 1.0) / nf * speed * speed, speed, base_distance)
    }

    /// Submanifold direction `A` for the velocity `v = D^Σu + ȳ`:
    /// `weight = |v|² − v_A²`, `speed = |v|`.
    pub fn submanifold(profile: &CurvatureProfile, velocity: &[f64], a: usize, base_distance: f64) -> Result<Self> {
        if a >= velocity.len() {
            return Err(Error::InvalidParameter(format!("direction {a} out of range")));
        }
        let s2: f64 = velocity.iter().map(|x| x * x).sum();
        Self::checked(profile, s2 - velocity[a] * velocity[a], s2.sqrt(), base_distance)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.weight == 0.0 {
            return 0.0;
        }
        self.weight * self.profile.eval((self.base_distance - t * self.speed).abs()).unwrap_or(0.0)
    }

    /// `∫₀^∞ Λ = (weight/speed)(∫₀^d λ + b₁)`.
    pub fn integral(&self, tol: f64) -> Result<f64> {
        if self.weight == 0.0 {
            return Ok(0.0);
        }
        let (m0, _) = self.profile.partial_moments(self.base_distance, tol)?;
        Ok(self.weight / self.speed * (m0 + self.profile.b1()))
    }

    /// `∫₀^∞ τΛ = (weight/speed²)(d∫₀^d λ − ∫₀^d sλ + d·b₁ + b₀)`.
    pub fn tau_integral(&self, tol: f64) -> Result<f64> {
        if self.weight == 0.0 {
            return Ok(0.0);
        }
        let d = self.base_distance;
        let (m0, m1) = self.profile.partial_moments(d, tol)?;
        let (b0, b1) = (self.profile.b0(), self.profile.b1());
        Ok(self.weight / (self.speed * self.speed) * (d * m0 - m1 + d * b1 + b0))
    }

    /// `(weight/speed²)(2r₀b₁ + b₀)`, valid for `d ≤ r₀`.
    pub fn tau_integral_bound(&self, r0: f64) -> f64 {
        self.weight / (self.speed * self.speed) * (2.0 * r0 * self.profile.b1() + self.profile.b0())
    }
}

/// Scalar comparison solutions and their bounds at radius `r`.
#[derive(Debug, Clone)]
pub struct PsiBounds {
    /// `ψ₁″ = Λψ₁`, `ψ₁(0) = 0`, `ψ₁′(0) = 1`.
    pub psi1: GridFunction,
    /// `ψ₂″ = Λψ₂`, `ψ₂(0) = 1`, `ψ₂′(0) = 0`.
    pub psi2: GridFunction,
    pub ratio_at_r: f64,
    /// `∫₀^∞ Λ + 1/r`.
    pub ratio_bound: f64,
    /// `2b₁·weight/speed + 1/r`.
    pub speed_ratio_bound: f64,
    /// `2b₁·weight/speed² + 1/r`, free of the speed.
    pub unit_ratio_bound: f64,
    pub tau_integral: f64,
    /// `(weight/speed²)(2r₀b₁ + b₀)`.
    pub exponent_bound: f64,
    /// `ψ₁(t) ≤ t·e^{∫τΛ} ≤ t·e^{exponent_bound}` at every node.
    pub psi1_bound_ok: bool,
    pub psi1_diagnostics: ComparisonDiagnostics,
}

impl PsiBounds {
    /// `ψ = ψ₂ + g₀ψ₁` on the grid of `ψ₁`.
    pub fn combination(&self, g0: f64) -> Result<GridFunction> {
        let mut values = Vec::with_capacity(self.psi1.len());
        let mut derivs = Vec::with_capacity(self.psi1.len());
        for (i, t) in self.psi1.nodes().enumerate() {
            values.push(self.psi2.value_at(t)? + g0 * self.psi1.values()[i]);
            derivs.push(self.psi2.deriv_at(t)? + g0 * self.psi1.derivs()[i]);
        }
        GridFunction::new(self.psi1.step(), values, derivs)
    }
}

/// Solves for `ψ₁, ψ₂` on `[0, r]` and checks the ratio and growth bounds.
pub fn psi_bounds(lambda: &LambdaAlong, r: f64, r0: f64, tol: f64) -> Result<PsiBounds> {
    if lambda.base_distance > r0 {
        return Err(Error::Precondition(format!("d = {} exceeds r₀ = {r0}", lambda.base_distance)));
    }
    let psi1 = solve_linear_ivp(|t| lambda.eval(t), 0.0, 1.0, r, tol)?;
    let psi2 = solve_linear_ivp(|t| lambda.eval(t), 1.0, 0.0, r, tol)?;
    let ratio_at_r = psi2.last_value() / psi1.last_value();
    let integral = lambda.integral(tol)?;
    let b1 = lambda.profile.b1();
    let ratio_bound = integral + 1.0 / r;
    let speed_ratio_bound = 2.0 * b1 * lambda.weight / lambda.speed + 1.0 / r;
    let unit_ratio_bound = 2.0 * b1 * lambda.weight / (lambda.speed * lambda.speed) + 1.0 / r;
    if ratio_at_r > ratio_bound + tol * (1.0 + ratio_bound) {
        return Err(Error::BoundViolated(format!("ψ₂/ψ₁(r) = {ratio_at_r} > ∫Λ + 1/r = {ratio_bound}")));
    }
    let tau_integral = lambda.tau_integral(tol)?;
    let exponent_bound = lambda.tau_integral_bound(r0);
    let mut diag = ComparisonDiagnostics::new();
    let growth = tau_integral.exp();
    for (t, v) in psi1.nodes().zip(psi1.values()) {
        diag.checked_points += 1;
        diag.record(t, v - t * growth - tol * (1.0 + t * growth));
    }
    diag.record(r, tau_integral - exponent_bound - tol);
    Ok(PsiBounds {
        psi1,
        psi2,
        ratio_at_r,
        ratio_bound,
        speed_ratio_bound,
        unit_ratio_bound,
        tau_integral,
        exponent_bound,
        psi1_bound_ok: diag.is_clean(),
        psi1_diagnostics: diag,
    })
}

/// Checks `φ = (det P)^{1/n} ≤ ψ = ψ₂ + (tr dP0/n)ψ₁` and
/// `φ′/φ ≤ ψ′/ψ` at the nodes of the run.
pub fn comparison_dominance(
    sys: &JacobiSystem,
    run: &JacobiRun,
    profile: &CurvatureProfile,
    tol: f64,
) -> Result<ComparisonDiagnostics> {
    if sys.normal_dim != 0 {
        return Err(Error::Precondition("dominance check needs a domain-case system".into()));
    }
    let n = sys.dim as f64;
    let lambda = LambdaAlong::domain(profile, sys.dim, sys.speed, sys.base_distance)?;
    let psi = psi_bounds(&lambda, sys.horizon, f64::INFINITY, tol)?.combination(sys.tangential_trace() / n)?;
    let dets = run.det.values();
    let values: Vec<f64> = dets.iter().map(|d| d.powf(1.0 / n)).collect();
    let derivs: Vec<f64> =
        values.iter().zip(dets).zip(run.det.derivs()).map(|((phi, d), dd)| phi * dd / (n * d)).collect();
    let phi = GridFunction::new(run.step, values, derivs)?;
    sturm_compare(&phi, &psi, sys.horizon, tol)
}

fn hypothesis_check(g0: f64, limit: f64) -> Result<()> {
    if g0 > limit + HYPOTHESIS_SLACK * (1.0 + limit.abs()) {
        return Err(Error::Precondition(format!("trace hypothesis fails: tr/n = {g0} > {limit}")));
    }
    Ok(())
}

fn check_radius_data(f_value: f64, r0: f64, base_distance: f64) -> Result<()> {
    if !(f_value > 0.0 && f_value.is_finite()) {
        return Err(Error::InvalidParameter(format!("f = {f_value} must be positive")));
    }
    if base_distance > r0 {
        return Err(Error::Precondition(format!("d = {base_distance} exceeds r₀ = {r0}")));
    }
    Ok(())
}

/// Determinant bound `det P(r) ≤ e^{(n−1)(2r₀b₁+b₀)}(1/r + f^{1/(n−1)})ⁿrⁿ`
/// for a domain-case system whose `dP0` satisfies
/// `tr dP0/n ≤ f^{1/(n−1)} − 2((n−1)/n)b₁`. The report has the bound as
/// `lhs` and `det P(r)` as `rhs`.
pub fn det_bound_check(
    sys: &JacobiSystem,
    run: &JacobiRun,
    f_value: f64,
    profile: &CurvatureProfile,
    r0: f64,
    tol: &Tolerances,
) -> Result<InequalityReport> {
    if sys.normal_dim != 0 {
        return Err(Error::Precondition("det bound needs a domain-case system".into()));
    }
    check_radius_data(f_value, r0, sys.base_distance)?;
    let n = sys.dim as f64;
    let (b0, b1) = (profile.b0(), profile.b1());
    let root = f_value.powf(1.0 / (n - 1.0));
    let g0 = sys.tangential_trace() / n;
    hypothesis_check(g0, root - 2.0 * (n - 1.0) / n * b1)?;
    let r = sys.horizon;
    let growth = ((n - 1.0) * (2.0 * r0 * b1 + b0)).exp();
    let bound = growth * (1.0 / r + root).powf(n) * r.powf(n);
    let middle = growth * (2.0 * (n - 1.0) / n * b1 + 1.0 / r + g0).powf(n) * r.powf(n);
    let lambda = LambdaAlong::domain(profile, sys.dim, sys.speed, sys.base_distance)?;
    let psi = psi_bounds(&lambda, r, r0, tol.ode_tol)?;
    let psi_power = (psi.psi2.last_value() + g0 * psi.psi1.last_value()).powf(n);
    let det = run.final_det();
    let t = terms([
        ("det_p", det),
        ("psi_power", psi_power),
        ("middle_bound", middle),
        ("bound", bound),
        ("growth", growth),
    ]);
    let inputs = json!({"system": sys.describe(), "f": f_value, "profile": profile, "r0": r0});
    Ok(InequalityReport::new(Theorem::Det, bound, det, t, tol.error_budget(), inputs, true))
}

/// Determinant bound for the normal-bundle transport:
/// `det P(r) ≤ (1/r + f^{1/(n−1)})ⁿ r^{n+p} e^{(n+p−1)(2r₀b₁+b₀)}` when the
/// tangential block satisfies `tr T/n ≤ f^{1/(n−1)} − 2b₁`.
pub fn submanifold_det_bound_check(
    sys: &JacobiSystem,
    run: &JacobiRun,
    f_value: f64,
    profile: &CurvatureProfile,
    r0: f64,
    tol: &Tolerances,
) -> Result<InequalityReport> {
    let p = sys.normal_dim;
    if p == 0 {
        return Err(Error::Precondition("submanifold det bound needs normal directions".into()));
    }
    check_radius_data(f_value, r0, sys.base_distance)?;
    let n_int = sys.dim - p;
    let (n, pf) = (n_int as f64, p as f64);
    if n_int < 2 {
        return Err(Error::InvalidParameter("intrinsic dimension must be ≥ 2".into()));
    }
    let (b0, b1) = (profile.b0(), profile.b1());
    let root = f_value.powf(1.0 / (n - 1.0));
    let g0 = sys.tangential_trace() / n;
    hypothesis_check(g0, root - 2.0 * b1)?;
    let r = sys.horizon;
    let growth = ((n + pf - 1.0) * (2.0 * r0 * b1 + b0)).exp();
    let bound = (1.0 / r + root).powf(n) * r.powf(n + pf) * growth;
    let middle = (2.0 * b1 * sys.speed + 1.0 / r + g0).powf(n) * r.powf(n + pf) * growth;
    let det = run.final_det();
    let mut t = terms([
        ("det_p", det),
        ("middle_bound", middle),
        ("bound", bound),
        ("growth", growth),
        ("small_time_ratio", run.small_time_ratio()),
    ]);
    if sys.is_flat() {
        let block = DMatrix::identity(n_int, n_int) + sys.dp0.view((0, 0), (n_int, n_int)) * r;
        t.insert("closed_form".into(), r.powi(p as i32) * block.determinant());
    }
    let inputs = json!({"system": sys.describe(), "f": f_value, "profile": profile, "r0": r0});
    Ok(InequalityReport::new(Theorem::SubDet, bound, det, t, tol.error_budget(), inputs, true))
}

/// For each `r`, compares the lower sandwich volume `vol(B_{r−r₀})` with
/// `∫_Ω e^{(n−1)(2r₀b₁+b₀)}(1/r + f^{1/(n−1)})ⁿrⁿ`. The density must be the
/// normalized one that produced `sol`.
pub fn measure_transport_check(
    domain: &RadialDomain,
    f: &RadialDensity,
    sol: &NeumannSolution,
    profile: &CurvatureProfile,
    radii: &[f64],
    tol: &Tolerances,
) -> Result<Vec<InequalityReport>> {
    if (sol.boundary_slope - 1.0).abs() > 10.0 * tol.ode_tol.max(1e-9) {
        return Err(Error::NormalizationInconsistent { boundary_slope: sol.boundary_slope, tol: 10.0 * tol.ode_tol });
    }
    let n = domain.n() as f64;
    let r0 = domain.r0();
    let growth = ((n - 1.0) * (2.0 * r0 * profile.b1() + profile.b0())).exp();
    let power_integral = domain.integral(|s| f.value(s).powf(n / (n - 1.0)))?;
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("transport radius {r} must be positive")));
            }
            let lhs = growth * domain.integral(|s| (1.0 + r * f.value(s).powf(1.0 / (n - 1.0))).powf(n))?;
            let rhs = if r > r0 { domain.manifold().volume(r - r0)? } else { 0.0 };
            let rn = r.powf(n);
            let t = terms([
                ("bound", lhs),
                ("sandwich_volume", rhs),
                ("bound_over_rn", lhs / rn),
                ("volume_over_rn", rhs / rn),
                ("limit_bound_over_rn", growth * power_integral),
                ("growth", growth),
            ]);
            let inputs = json!({"domain": domain.describe(), "f": f.describe(), "profile": profile, "r": r});
            Ok(InequalityReport::new(Theorem::Transport, lhs, rhs, t, tol.error_budget(), inputs, true))
        })
        .collect()
}

/// The `r → ∞` limit of the transport inequality after dividing by
/// `n∫₀^r h^{n−1}`: `e^{(n−1)(2r₀b₁+b₀)}∫_Ω f^{n/(n−1)}/h′(∞)^{n−1} ≥ |Bⁿ|θ`.
pub fn transport_limit_report(
    domain: &RadialDomain,
    f: &RadialDensity,
    profile: &CurvatureProfile,
    theta: f64,
    slope_limit: f64,
    tol: &Tolerances,
) -> Result<InequalityReport> {
    let n_int = domain.n();
    let n = n_int as f64;
    let r0 = domain.r0();
    let growth = ((n - 1.0) * (2.0 * r0 * profile.b1() + profile.b0())).exp();
    let power_integral = domain.integral(|s| f.value(s).powf(n / (n - 1.0)))?;
    let power_limit = slope_limit.powf(1.0 - n);
    let power_bound = (1.0 + profile.b0()).powf(1.0 - n);
    let lhs = growth * power_integral * power_limit;
    let rhs = crate::manifold::unit_ball_volume(n_int)? * theta;
    let t = terms([
        ("growth", growth),
        ("power_integral", power_integral),
        ("power_limit", power_limit),
        ("power_bound", power_bound),
    ]);
    let inputs = json!({"domain": domain.describe(), "f": f.describe(), "profile": profile, "theta": theta});
    Ok(InequalityReport::new(Theorem::Transport, lhs, rhs, t, tol.error_budget(), inputs, true))
}

/// Seeded SplitMix64 generator used by every randomized sweep.
pub fn seeded_rng(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Entries uniform in `[−scale, scale]`.
pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..=scale))
}

/// Symmetric matrix `OΛOᵀ` with `O` orthogonal (QR of a random matrix) and
/// eigenvalues uniform in `[lo, hi]`.
pub fn random_symmetric<R: Rng>(rng: &mut R, m: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let o = random_matrix(rng, m, m, 1.0).qr().q();
    let spectrum = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(m, |_, _| rng.random_range(lo..=hi)));
    let a = &o * spectrum * o.transpose();
    (&a + a.transpose()) * 0.5
}

/// Adds a multiple of the identity so that `tr A/m = mean`.
pub fn shift_to_mean_trace(a: &DMatrix<f64>, mean: f64) -> DMatrix<f64> {
    let m = a.nrows();
    let shift = mean - a.trace() / m as f64;
    a + DMatrix::identity(m, m) * shift
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Bump;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn diag(entries: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(entries))
    }

    #[test]
    fn flat_system_is_affine() {
        let a = diag(&[1.0, -0.3]);
        let sys = JacobiSystem::euclidean(a.clone(), 1.0, 0.5, 0.0).unwrap();
        let run = integrate_jacobi(&sys, 1e-10).unwrap();
        assert_abs_diff_eq!(run.final_det(), 1.4, epsilon = 1e-12);
        for i in [0, 7, run.len() - 1] {
            let expected = DMatrix::identity(2, 2) + &a * run.time(i);
            assert!((run.p(i) - expected).amax() < 1e-12);
        }
        assert!(run.symmetry_residual < 1e-12);
        assert!(run.log_det_residual() < 1e-4);
    }

    #[test]
    fn curved_system_matches_flat_rk4_bookkeeping() {
        // Constant S = κI: P = cos(√κ t)I + sin(√κ t)/√κ·A for commuting data.
        let kappa: f64 = 0.49;
        let s = Arc::new(move |_t: f64| DMatrix::identity(2, 2) * kappa) as CurvatureOperator;
        let a = diag(&[0.2, -0.1]);
        let sys = JacobiSystem::new(DMatrix::identity(2, 2), a.clone(), Some(s), 1.5, 0.5, 0.0).unwrap();
        let run = integrate_jacobi(&sys, 1e-10).unwrap();
        let k = kappa.sqrt();
        let expected = DMatrix::identity(2, 2) * (1.5 * k).cos() + &a * ((1.5 * k).sin() / k);
        assert!((run.p(run.len() - 1) - expected).amax() < 1e-9);
    }

    #[test]
    fn conjugate_point_is_reported() {
        let sys = JacobiSystem::euclidean(diag(&[-1.0, 0.0]), 2.0, 0.5, 0.0).unwrap();
        match integrate_jacobi(&sys, 1e-10) {
            Err(Error::ConjugatePoint { t, .. }) => assert!((t - 1.0).abs() < 0.02),
            other => panic!("expected a conjugate point, got {other:?}"),
        }
    }

    #[test]
    fn model_radial_symmetry_and_riccati() {
        let m = ModelManifold::capped(3, vec![Bump { amplitude: -0.5, start: 1.0, end: 2.0 }]).unwrap();
        let profile = m.admissible_profile().unwrap();
        let mut rng = seeded_rng(7);
        let a = random_symmetric(&mut rng, 3, -0.5, 0.5);
        let sys = JacobiSystem::model_radial(&m, a, 1.0, 0.8, 1.9).unwrap();
        let run = integrate_jacobi(&sys, 1e-10).unwrap();
        assert!(run.symmetry_residual < 1e-9);
        let d = trace_riccati_check(&sys, &run, &profile, 1e-6).unwrap();
        assert!(d.is_clean(), "{d:?}");
        assert!(d.checked_points > 0);
    }

    #[test]
    fn positive_curvature_with_zero_profile() {
        let s = Arc::new(|t: f64| DMatrix::identity(3, 3) * (0.3 * (-t * t).exp())) as CurvatureOperator;
        let sys = JacobiSystem::new(DMatrix::identity(3, 3), diag(&[0.3, 0.1, -0.2]), Some(s), 1.0, 0.5, 0.0)
            .unwrap();
        let run = integrate_jacobi(&sys, 1e-10).unwrap();
        let d = trace_riccati_check(&sys, &run, &CurvatureProfile::zero(), 1e-7).unwrap();
        assert!(d.is_clean());
    }

    #[test]
    fn psi_zero_driver() {
        let lam = LambdaAlong::domain(&CurvatureProfile::zero(), 3, 0.5, 1.0).unwrap();
        let b = psi_bounds(&lam, 2.0, 1.0, 1e-10).unwrap();
        assert_relative_eq!(b.ratio_at_r, 0.5, max_relative = 1e-12);
        assert_relative_eq!(b.ratio_bound, 0.5, max_relative = 1e-15);
        assert!(b.psi1_bound_ok);
    }

    #[test]
    fn psi_exp_decay_driver() {
        let profile = CurvatureProfile::exp_decay(1.0, 1.0).unwrap();
        let lam = LambdaAlong::domain(&profile, 3, 0.5, 1.0).unwrap();
        let b = psi_bounds(&lam, 10.0, 1.0, 1e-10).unwrap();
        assert!(b.ratio_at_r < b.ratio_bound);
        assert!(b.ratio_bound <= b.speed_ratio_bound + 1e-12);
        assert!(b.speed_ratio_bound <= b.unit_ratio_bound);
        assert!(b.psi1_bound_ok);
        assert!(b.tau_integral < b.exponent_bound);
    }

    #[test]
    fn tau_integral_closed_form_matches_quadrature() {
        let profile = CurvatureProfile::exp_decay(1.3, 0.7).unwrap();
        let lam = LambdaAlong::domain(&profile, 2, 0.6, 0.8).unwrap();
        let direct = crate::quadrature::adaptive_simpson(|t| t * lam.eval(t), 0.0, 0.8 / 0.6, 1e-12).unwrap().value
            + crate::quadrature::adaptive_simpson(|t| t * lam.eval(t), 0.8 / 0.6, 200.0, 1e-12).unwrap().value;
        assert_relative_eq!(lam.tau_integral(1e-12).unwrap(), direct, max_relative = 1e-8);
    }

    #[test]
    fn isotropic_euclidean_det() {
        let tol = Tolerances::default();
        let sys = JacobiSystem::euclidean(DMatrix::identity(3, 3) * 0.8, 1.0, 0.5, 0.0).unwrap();
        let run = integrate_jacobi(&sys, 1e-10).unwrap();
        let r = det_bound_check(&sys, &run, 0.8f64.powi(2), &CurvatureProfile::zero(), 1.0, &tol).unwrap();
        assert_relative_eq!(r.lhs, r.rhs, max_relative = 1e-12);
        assert!(!r.is_counterexample());
        let d = comparison_dominance(&sys, &run, &CurvatureProfile::zero(), 1e-8).unwrap();
        assert!(d.is_clean());
    }

    #[test]
    fn hypothesis_is_enforced() {
        let tol = Tolerances::default();
        let sys = JacobiSystem::euclidean(DMatrix::identity(2, 2), 1.0, 0.5, 0.0).unwrap();
        let run = integrate_jacobi(&sys, 1e-10).unwrap();
        assert!(matches!(
            det_bound_check(&sys, &run, 0.5, &CurvatureProfile::zero(), 1.0, &tol),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn submanifold_blocks() {
        let tol = Tolerances::default();
        let t = DMatrix::identity(2, 2) * 0.5;
        let c = DMatrix::from_row_slice(2, 2, &[0.3, -0.2, 0.1, 0.4]);
        let sys = JacobiSystem::submanifold(t, c, None, 1.2, 0.5, 0.0).unwrap();
        assert_eq!(sys.normal_dim(), 2);
        let run = integrate_jacobi(&sys, 1e-10).unwrap();
        assert_relative_eq!(run.final_det(), 1.44 * 1.6 * 1.6, max_relative = 1e-12);
        assert!(run.symmetry_residual < 1e-10);
        assert_abs_diff_eq!(run.small_time_ratio(), 1.0, epsilon = 0.01);
        let r = submanifold_det_bound_check(&sys, &run, 0.5, &CurvatureProfile::zero(), 0.0, &tol).unwrap();
        assert_relative_eq!(r.term("closed_form").unwrap(), run.final_det(), max_relative = 1e-12);
        assert_relative_eq!(r.lhs, r.rhs, max_relative = 1e-12);
    }

    #[test]
    fn random_symmetric_spectrum() {
        let mut rng = seeded_rng(42);
        for m in 1..5 {
            let a = random_symmetric(&mut rng, m, -1.0, 1.0);
            let eig = a.clone().symmetric_eigen().eigenvalues;
            assert!(eig.iter().all(|&e| (-1.0 - 1e-12..=1.0 + 1e-12).contains(&e)));
            let b = shift_to_mean_trace(&a, 0.3);
            assert_relative_eq!(b.trace(), 0.3 * m as f64, max_relative = 1e-12);
        }
        let a = random_matrix(&mut seeded_rng(3), 2, 2, 1.0);
        let b = random_matrix(&mut seeded_rng(3), 2, 2, 1.0);
        assert_eq!(a, b);
    }
}
