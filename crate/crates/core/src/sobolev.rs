//! Sobolev and isoperimetric inequalities on pole-centered geodesic balls
//! with radial densities, plus the radial Neumann problem used by the ABP
//! argument and the pointwise Laplacian bound on the set `{|Du| < 1}`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::manifold::{unit_ball_volume, ModelManifold};
use crate::ode::ComparisonDiagnostics;
use crate::profile::CurvatureProfile;
use crate::quadrature::{cumulative_gauss, gauss_legendre};
use crate::report::{terms, InequalityReport, Theorem, Tolerances};

/// Default number of cells on `[0, R]`.
pub const DEFAULT_CELLS: usize = 4000;
/// Largest `|f′(0)|` accepted for a density that must be smooth at the pole.
pub const POLE_SLOPE_TOL: f64 = 1e-12;

/// Closed-form radial densities on a ball of radius `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum DensitySpec {
    /// `f ≡ value`.
    Constant { value: f64 },
    /// `f = 1 + coef·r²/R²`.
    Quadratic { coef: f64 },
    /// `f = e^{−rate·r}`; not smooth at the pole unless `rate = 0`.
    Exponential { rate: f64 },
}

impl DensitySpec {
    fn eval(&self, r: f64, radius: f64) -> (f64, f64) {
        match *self {
            DensitySpec::Constant { value } => (value, 0.0),
            DensitySpec::Quadratic { coef } => {
                let s = r / radius;
                (1.0 + coef * s * s, 2.0 * coef * s / radius)
            }
            DensitySpec::Exponential { rate } => {
                let e = (-rate * r).exp();
                (e, -rate * e)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum DensitySource {
    Analytic(DensitySpec),
    Sampled(GridFunction),
}

/// A positive radial density `f(r)` on `[0, R]`, times a constant scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDensity {
    source: DensitySource,
    radius: f64,
    scale: f64,
    lipschitz: bool,
}

impl RadialDensity {
    /// A density smooth at the pole: `f′(0) = 0` is required.
    pub fn new(spec: DensitySpec, radius: f64) -> Result<Self> {
        Self::build(DensitySource::Analytic(spec), radius, false)
    }

    /// Accepts `f′(0) ≠ 0`: such an `f` is only Lipschitz at the pole.
    pub fn lipschitz(spec: DensitySpec, radius: f64) -> Result<Self> {
        Self::build(DensitySource::Analytic(spec), radius, true)
    }

    /// A sampled density; `grid` must cover `[0, radius]`.
    pub fn sampled(grid: GridFunction, radius: f64, lipschitz: bool) -> Result<Self> {
        if grid.end() < radius * (1.0 - 1e-12) {
            return Err(Error::Domain(format!("density grid ends at {} < R = {radius}", grid.end())));
        }
        Self::build(DensitySource::Sampled(grid), radius, lipschitz)
    }

    fn build(source: DensitySource, radius: f64, lipschitz: bool) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius {radius} must be positive")));
        }
        let d = Self { source, radius, scale: 1.0, lipschitz };
        let (_, slope) = d.value_and_slope(0.0);
        if !lipschitz && slope.abs() > POLE_SLOPE_TOL {
            return Err(Error::Precondition(format!("f′(0) = {slope} ≠ 0: density is not smooth at the pole")));
        }
        for i in 0..=1000 {
            let r = radius * i as f64 / 1000.0;
            let (v, dv) = d.value_and_slope(r);
            if !(v > 0.0 && v.is_finite() && dv.is_finite()) {
                return Err(Error::InvalidParameter(format!("density not positive and finite at r = {r}: {v}")));
            }
        }
        Ok(d)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_lipschitz(&self) -> bool {
        self.lipschitz
    }

    /// The same density multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { scale: self.scale * c, ..self.clone() }
    }

    fn value_and_slope(&self, r: f64) -> (f64, f64) {
        let (v, d) = match &self.source {
            DensitySource::Analytic(spec) => spec.eval(r, self.radius),
            DensitySource::Sampled(g) => {
                (g.value_at(r).unwrap_or(f64::NAN), g.deriv_at(r).unwrap_or(f64::NAN))
            }
        };
        (self.scale * v, self.scale * d)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.value_and_slope(r).0
    }

    pub fn slope(&self, r: f64) -> f64 {
        self.value_and_slope(r).1
    }

    /// Samples `f` and `f′` on `cells + 1` nodes of `[0, R]`.
    pub fn grid(&self, cells: usize) -> Result<GridFunction> {
        GridFunction::sample(self.radius, cells, |r| self.value(r), |r| self.slope(r))
    }

    pub fn describe(&self) -> serde_json::Value {
        let base = match &self.source {
            DensitySource::Analytic(spec) => serde_json::to_value(spec).unwrap_or_default(),
            DensitySource::Sampled(g) => json!({"kind": "Sampled", "nodes": g.len()}),
        };
        json!({"spec": base, "scale": self.scale, "lipschitz": self.lipschitz})
    }
}

/// A geodesic ball `B_R(o)` around the pole.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDomain {
    manifold: ModelManifold,
    radius: f64,
    cells: usize,
}

impl RadialDomain {
    pub fn new(manifold: ModelManifold, radius: f64) -> Result<Self> {
        Self::with_cells(manifold, radius, DEFAULT_CELLS)
    }

    pub fn with_cells(manifold: ModelManifold, radius: f64, cells: usize) -> Result<Self> {
        if !(radius > 0.0 && radius <= manifold.r_max()) {
            return Err(Error::InvalidParameter(format!(
                "ball radius {radius} must lie in (0, {}]",
                manifold.r_max()
            )));
        }
        if cells < 2 {
            return Err(Error::InvalidParameter(format!("{cells} cells are too few")));
        }
        Ok(Self { manifold, radius, cells })
    }

    pub fn manifold(&self) -> &ModelManifold {
        &self.manifold
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `r₀ = max d(o, x)` over the ball.
    pub fn r0(&self) -> f64 {
        self.radius
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn step(&self) -> f64 {
        self.radius / self.cells as f64
    }

    pub fn n(&self) -> usize {
        self.manifold.n()
    }

    fn sphere(&self) -> f64 {
        self.n() as f64 * unit_ball_volume(self.n()).unwrap()
    }

    fn w_power(&self, r: f64) -> f64 {
        self.manifold.w(r).map_or(f64::NAN, |w| w.powi(self.n() as i32 - 1))
    }

    /// `∫_Ω g = n|Bⁿ|∫₀^R g w^{n−1}`.
    pub fn integral<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let v = self.sphere() * gauss_legendre(|r| g(r) * self.w_power(r), 0.0, self.radius, self.cells);
        if !v.is_finite() {
            return Err(Error::Quadrature { a: 0.0, b: self.radius, estimate: f64::INFINITY, tol: 0.0 });
        }
        Ok(v)
    }

    /// `∫_{∂Ω} g = n|Bⁿ|g(R)w(R)^{n−1}`.
    pub fn boundary_integral(&self, g_at_boundary: f64) -> f64 {
        self.sphere() * g_at_boundary * self.w_power(self.radius)
    }

    pub fn describe(&self) -> serde_json::Value {
        json!({"manifold": self.manifold.spec(), "R": self.radius, "r0": self.r0(), "cells": self.cells})
    }
}

/// Pieces of the Sobolev inequality for a domain and density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevSides {
    pub boundary_term: f64,
    pub gradient_term: f64,
    pub b1_term: f64,
    /// `∫_Ω f^{n/(n−1)}`.
    pub power_integral: f64,
}

impl SobolevSides {
    pub fn compute(domain: &RadialDomain, f: &RadialDensity, profile: &CurvatureProfile) -> Result<Self> {
        check_density_covers(domain, f)?;
        let n = domain.n() as f64;
        let exponent = n / (n - 1.0);
        Ok(Self {
            boundary_term: domain.boundary_integral(f.value(domain.radius)),
            gradient_term: domain.integral(|r| f.slope(r).abs())?,
            b1_term: 2.0 * (n - 1.0) * profile.b1() * domain.integral(|r| f.value(r))?,
            power_integral: domain.integral(|r| f.value(r).powf(exponent))?,
        })
    }

    pub fn lhs(&self) -> f64 {
        self.boundary_term + self.gradient_term + self.b1_term
    }
}

fn check_density_covers(domain: &RadialDomain, f: &RadialDensity) -> Result<()> {
    if (f.radius - domain.radius).abs() > 1e-12 * domain.radius {
        return Err(Error::InvalidParameter(format!(
            "density built for R = {} used on a ball of radius {}",
            f.radius, domain.radius
        )));
    }
    Ok(())
}

/// `((1 + b₀)/e^{2r₀b₁ + b₀})`.
pub fn correction_base(profile: &CurvatureProfile, r0: f64) -> f64 {
    let (b0, b1) = (profile.b0(), profile.b1());
    (1.0 + b0) / (2.0 * r0 * b1 + b0).exp()
}

/// `n|Bⁿ|^{1/n}θ^{1/n}((1+b₀)/e^{2r₀b₁+b₀})^{(n−1)/n}`.
pub fn domain_constant(n: usize, theta: f64, profile: &CurvatureProfile, r0: f64) -> Result<f64> {
    let nf = n as f64;
    Ok(nf * unit_ball_volume(n)?.powf(1.0 / nf)
        * theta.max(0.0).powf(1.0 / nf)
        * correction_base(profile, r0).powf((nf - 1.0) / nf))
}

fn inputs(domain: &RadialDomain, f: Option<&RadialDensity>, profile: &CurvatureProfile, theta: f64) -> serde_json::Value {
    json!({
        "manifold": domain.manifold.spec(),
        "R": domain.radius,
        "f": f.map(RadialDensity::describe),
        "profile": profile,
        "theta": theta,
    })
}

/// Both sides of the Sobolev inequality
/// `∫_{∂Ω}f + ∫_Ω|Df| + 2(n−1)b₁∫_Ω f ≥ K·(∫_Ω f^{n/(n−1)})^{(n−1)/n}`.
pub fn theorem11_report(
    domain: &RadialDomain,
    f: &RadialDensity,
    profile: &CurvatureProfile,
    theta: f64,
    tol: &Tolerances,
) -> Result<InequalityReport> {
    let sides = SobolevSides::compute(domain, f, profile)?;
    let n = domain.n() as f64;
    let theta_factor = theta.max(0.0).powf(1.0 / n);
    let correction_factor = correction_base(profile, domain.r0()).powf((n - 1.0) / n);
    let constant = domain_constant(domain.n(), theta, profile, domain.r0())?;
    let norm = sides.power_integral.powf((n - 1.0) / n);
    let rhs = constant * norm;
    let t = terms([
        ("boundary_term", sides.boundary_term),
        ("gradient_term", sides.gradient_term),
        ("b1_term", sides.b1_term),
        ("theta_factor", theta_factor),
        ("correction_factor", correction_factor),
        ("constant", constant),
        ("density_norm", norm),
    ]);
    Ok(InequalityReport::new(
        Theorem::Thm11,
        sides.lhs(),
        rhs,
        t,
        tol.error_budget(),
        inputs(domain, Some(f), profile, theta),
        true,
    ))
}

/// `|∂Ω| ≥ (K − 2(n−1)b₁|Ω|^{1/n})|Ω|^{(n−1)/n}` from raw values.
#[allow(clippy::too_many_arguments)]
pub fn isoperimetric_from_values(
    n: usize,
    boundary: f64,
    volume: f64,
    profile: &CurvatureProfile,
    r0: f64,
    theta: f64,
    error_budget: f64,
    inputs: serde_json::Value,
) -> Result<InequalityReport> {
    let nf = n as f64;
    let constant = domain_constant(n, theta, profile, r0)?;
    let b1_term = 2.0 * (nf - 1.0) * profile.b1() * volume.powf(1.0 / nf);
    let volume_factor = volume.powf((nf - 1.0) / nf);
    let rhs = (constant - b1_term) * volume_factor;
    let t = terms([
        ("boundary_term", boundary),
        ("constant", constant),
        ("b1_term", b1_term),
        ("volume_factor", volume_factor),
    ]);
    Ok(InequalityReport::new(Theorem::Cor13, boundary, rhs, t, error_budget, inputs, true))
}

/// Isoperimetric inequality for the ball; `rhs ≤ 0` is reported as trivial.
pub fn isoperimetric_report(
    domain: &RadialDomain,
    profile: &CurvatureProfile,
    theta: f64,
    tol: &Tolerances,
) -> Result<InequalityReport> {
    let boundary = domain.manifold.area(domain.radius)?;
    let volume = domain.manifold.volume(domain.radius)?;
    isoperimetric_from_values(
        domain.n(),
        boundary,
        volume,
        profile,
        domain.r0(),
        theta,
        tol.error_budget(),
        inputs(domain, None, profile, theta),
    )
}

/// Scales `f` by the unique `c > 0` making
/// `∫_{∂Ω}f + ∫|Df| + 2(n−1)b₁∫f = n∫f^{n/(n−1)}`.
pub fn normalize_density(
    domain: &RadialDomain,
    f: &RadialDensity,
    profile: &CurvatureProfile,
) -> Result<(f64, RadialDensity)> {
    let sides = SobolevSides::compute(domain, f, profile)?;
    let n = domain.n() as f64;
    let c = (sides.lhs() / (n * sides.power_integral)).powf(n - 1.0);
    Ok((c, f.scaled(c)))
}

/// Radial solution of `div(f Du) = n f^{n/(n−1)} − 2(n−1)b₁f − |Df|` with
/// `u′(R) = 1` and `u(0) = 0`.
#[derive(Debug, Clone)]
pub struct NeumannSolution {
    /// `u` and `u′` on the domain grid.
    pub u: GridFunction,
    /// `u′(R)`.
    pub boundary_slope: f64,
    /// `max |(F_{i+1} − F_{i−1})/(2Δr) − w^{n−1}S|` over interior nodes,
    /// with `F = w^{n−1}f u′` the flux.
    pub flux_residual: f64,
}

/// Solves the radial Neumann problem for a normalized density.
///
/// The flux `F(r) = w^{n−1}f u′` is the running integral of
/// `w^{n−1}(n f^{n/(n−1)} − 2(n−1)b₁f − |f′|)`; `u′ = F/(w^{n−1}f)` with
/// `u′(0) = 0`.
pub fn solve_radial_neumann(
    domain: &RadialDomain,
    f: &RadialDensity,
    profile: &CurvatureProfile,
    tol: f64,
) -> Result<NeumannSolution> {
    check_density_covers(domain, f)?;
    let n = domain.n() as f64;
    let b1 = profile.b1();
    let source = |r: f64| {
        let (v, d) = (f.value(r), f.slope(r));
        n * v.powf(n / (n - 1.0)) - 2.0 * (n - 1.0) * b1 * v - d.abs()
    };
    let step = domain.step();
    let cells = domain.cells;
    let flux = cumulative_gauss(|r| source(r) * domain.w_power(r), step, cells);
    let m = domain.manifold();
    let mut du = Vec::with_capacity(cells + 1);
    let mut ddu = Vec::with_capacity(cells + 1);
    for (i, &flux_i) in flux.iter().enumerate() {
        let r = i as f64 * step;
        let (v, dv) = (f.value(r), f.slope(r));
        if i == 0 {
            du.push(0.0);
            ddu.push(source(0.0) / (n * v));
            continue;
        }
        let (w, dw, _) = m.warp(r)?;
        let slope = flux_i / (domain.w_power(r) * v);
        du.push(slope);
        ddu.push((source(r) - dv * slope) / v - (n - 1.0) * dw / w * slope);
    }
    let boundary_slope = *du.last().unwrap();
    if (boundary_slope - 1.0).abs() > 10.0 * tol {
        return Err(Error::NormalizationInconsistent { boundary_slope, tol: 10.0 * tol });
    }
    let u_values = crate::quadrature::cumulative_hermite(&du, &ddu, step);
    let mut flux_residual = 0.0f64;
    for i in 1..cells {
        let r = i as f64 * step;
        let fd = (flux[i + 1] - flux[i - 1]) / (2.0 * step);
        flux_residual = flux_residual.max((fd - source(r) * domain.w_power(r)).abs());
    }
    Ok(NeumannSolution { u: GridFunction::new(step, u_values, du)?, boundary_slope, flux_residual })
}

/// Checks `Δu/n ≤ f^{1/(n−1)} − 2((n−1)/n)b₁ + tol` at interior nodes with
/// `|u′| < 1`; `Δu = u″ + (n−1)(w′/w)u′` with `u″` from centered differences
/// of `u′` (and `Δu(0) = n·u″(0)` at the pole).
pub fn hessian_trace_bound_check(
    sol: &NeumannSolution,
    f: &RadialDensity,
    profile: &CurvatureProfile,
    domain: &RadialDomain,
    tol: f64,
) -> Result<ComparisonDiagnostics> {
    let n = domain.n() as f64;
    let du = sol.u.derivs();
    let h = sol.u.step();
    let last = du.len() - 1;
    let mut diag = ComparisonDiagnostics::new();
    for i in 0..last {
        if du[i].abs() >= 1.0 {
            continue;
        }
        let r = i as f64 * h;
        let second = if i == 0 {
            (-3.0 * du[0] + 4.0 * du[1] - du[2]) / (2.0 * h)
        } else {
            (du[i + 1] - du[i - 1]) / (2.0 * h)
        };
        let laplacian = if i == 0 {
            n * second
        } else {
            let (w, dw, _) = domain.manifold().warp(r)?;
            second + (n - 1.0) * dw / w * du[i]
        };
        let bound = f.value(r).powf(1.0 / (n - 1.0)) - 2.0 * (n - 1.0) / n * profile.b1();
        diag.checked_points += 1;
        diag.record(r, laplacian / n - bound - tol);
    }
    Ok(diag)
}
