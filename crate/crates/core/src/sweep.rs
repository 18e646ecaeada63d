//! Standard sweeps: the Sobolev inequality over manifolds, dimensions, radii
//! and densities, and randomized determinant-bound runs.
//!
//! Cells run in parallel; results keep the enumeration order, so output is
//! deterministic.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::abp::{
    det_bound_check, integrate_jacobi, random_matrix, random_symmetric, seeded_rng, shift_to_mean_trace,
    submanifold_det_bound_check, JacobiSystem,
};
use crate::error::Result;
use crate::manifold::{Bump, ModelManifold, VolumeComparison};
use crate::profile::CurvatureProfile;
use crate::report::{InequalityReport, Status, Tolerances};
use crate::sobolev::{theorem11_report, DensitySpec, RadialDensity, RadialDomain};

pub const SWEEP_DIMENSIONS: [usize; 3] = [2, 3, 4];
pub const SWEEP_RADII: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
/// Three manifolds × three dimensions × four radii × three densities.
pub const SWEEP_CELLS: usize = 108;

/// The manifolds of the standard sweep: `(name, manifold)`.
pub fn sweep_manifolds(n: usize) -> Result<Vec<(&'static str, ModelManifold)>> {
    Ok(vec![
        ("euclidean", ModelManifold::euclidean(n)?),
        (
            "capped_a",
            ModelManifold::capped(
                n,
                vec![Bump { amplitude: 0.6, start: 0.5, end: 1.5 }, Bump { amplitude: -0.8, start: 1.5, end: 2.5 }],
            )?,
        ),
        ("capped_b", ModelManifold::capped(n, vec![Bump { amplitude: -0.5, start: 1.0, end: 2.0 }])?),
    ])
}

/// `(name, spec)` for `f ≡ 1`, `f = 1 + r²/(2R²)` and `f = e^{−r}`.
pub fn sweep_densities() -> [(&'static str, DensitySpec); 3] {
    [
        ("constant", DensitySpec::Constant { value: 1.0 }),
        ("quadratic", DensitySpec::Quadratic { coef: 0.5 }),
        ("exponential", DensitySpec::Exponential { rate: 1.0 }),
    ]
}

/// A manifold with its admissible profile and asymptotic volume ratio.
#[derive(Debug, Clone)]
pub struct PreparedManifold {
    pub name: &'static str,
    pub manifold: ModelManifold,
    pub profile: CurvatureProfile,
    pub theta: f64,
}

/// Computes the admissible profile and `θ` for `manifold`.
pub fn prepare(name: &'static str, manifold: ModelManifold, tol: &Tolerances) -> Result<PreparedManifold> {
    if manifold.is_euclidean() {
        return Ok(PreparedManifold { name, manifold, profile: CurvatureProfile::zero(), theta: 1.0 });
    }
    let cmp = VolumeComparison::admissible(manifold.clone(), tol.ode_tol)?;
    let theta = cmp.asymptotic_volume_ratio(tol.theta_tol)?.theta;
    Ok(PreparedManifold { name, profile: cmp.profile().clone(), manifold, theta })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub case_id: usize,
    pub manifold: &'static str,
    pub n: usize,
    pub radius: f64,
    pub density: &'static str,
    pub report: InequalityReport,
}

/// The full sweep of the Sobolev inequality for domains, [`SWEEP_CELLS`] cells.
pub fn theorem11_sweep(tol: &Tolerances) -> Result<Vec<SweepCell>> {
    tol.validate()?;
    let mut pending = Vec::new();
    for n in SWEEP_DIMENSIONS {
        for (name, m) in sweep_manifolds(n)? {
            pending.push((name, m));
        }
    }
    let prepared: Vec<PreparedManifold> =
        pending.into_par_iter().map(|(name, m)| prepare(name, m, tol)).collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for p in &prepared {
        for radius in SWEEP_RADII {
            for (density, spec) in sweep_densities() {
                cells.push((p, radius, density, spec));
            }
        }
    }
    cells.sort_by_key(|(p, _, _, _)| (p.manifold.n(), manifold_order(p.name)));
    cells
        .into_par_iter()
        .enumerate()
        .map(|(case_id, (p, radius, density, spec))| {
            let domain = RadialDomain::new(p.manifold.clone(), radius)?;
            let f = RadialDensity::lipschitz(spec, radius)?;
            let report = theorem11_report(&domain, &f, &p.profile, p.theta, tol)?;
            Ok(SweepCell { case_id, manifold: p.name, n: p.manifold.n(), radius, density, report })
        })
        .collect()
}

fn manifold_order(name: &str) -> usize {
    match name {
        "euclidean" => 0,
        "capped_a" => 1,
        _ => 2,
    }
}

pub const SWEEP_CSV_HEADER: &str = "case_id,manifold,n,R,density,lhs,rhs,ratio,slack,error_budget,status";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AbpKind {
    Euclidean,
    Model,
    Submanifold,
}

impl AbpKind {
    pub fn name(&self) -> &'static str {
        match self {
            AbpKind::Euclidean => "euclid",
            AbpKind::Model => "model",
            AbpKind::Submanifold => "sub",
        }
    }
}

/// One determinant-bound run.
#[derive(Debug, Clone, Serialize)]
pub struct AbpCase {
    pub case_id: String,
    pub kind: AbpKind,
    pub r: f64,
    pub det_p: f64,
    pub bound: f64,
    pub margin: f64,
    pub status: Status,
    pub symmetry_residual: f64,
    pub log_det_residual: f64,
}

pub const ABP_CSV_HEADER: &str = "case_id,r,detP,bound,margin,status";

/// Counts of the randomized ABP sweep.
#[derive(Debug, Clone, Copy)]
pub struct AbpSweepSize {
    pub euclidean: usize,
    pub model: usize,
    pub submanifold: usize,
}

impl Default for AbpSweepSize {
    fn default() -> Self {
        Self { euclidean: 50, model: 10, submanifold: 10 }
    }
}

struct AbpJob {
    case_id: String,
    kind: AbpKind,
    system: JacobiSystem,
    f_value: f64,
    profile: CurvatureProfile,
    r0: f64,
}

/// Randomized determinant-bound runs, reproducible from `seed`.
///
/// Initial Hessians have spectrum in `[−1, 1]` and are then shifted so the
/// trace hypothesis holds with a margin drawn from `[0, 0.2]`. Radii stay in
/// `[0.2, 0.75]`, short enough that the shifted data has no conjugate point.
pub fn abp_sweep(seed: u64, size: AbpSweepSize, tol: &Tolerances) -> Result<Vec<AbpCase>> {
    tol.validate()?;
    let mut rng = seeded_rng(seed);
    let mut jobs = Vec::new();
    let zero = CurvatureProfile::zero();
    for k in 0..size.euclidean {
        let n = 2 + k % 3;
        let margin = rng.random_range(0.0..=0.2);
        let a = shift_to_mean_trace(&random_symmetric(&mut rng, n, -1.0, 1.0), 1.0 - margin);
        let r = rng.random_range(0.2..=0.75);
        let speed = rng.random_range(0.1..=0.9);
        let d = rng.random_range(0.0..=1.0);
        jobs.push(AbpJob {
            case_id: format!("euclid-{k:02}"),
            kind: AbpKind::Euclidean,
            system: JacobiSystem::euclidean(a, r, speed, d)?,
            f_value: 1.0,
            profile: zero.clone(),
            r0: 1.0,
        });
    }
    let mut model_prep = Vec::new();
    for (name, m) in sweep_manifolds(3)?.into_iter().skip(1) {
        let profile = m.admissible_profile()?;
        model_prep.push((name, m, profile));
    }
    const MODEL_RADII: [f64; 3] = [0.25, 0.5, 0.75];
    for k in 0..size.model {
        let (_, m, profile) = &model_prep[k % model_prep.len()];
        let n = m.n();
        let nf = n as f64;
        let margin = rng.random_range(0.0..=0.2);
        let root = 1.0 + 2.0 * (nf - 1.0) / nf * profile.b1();
        let a = shift_to_mean_trace(&random_symmetric(&mut rng, n, -1.0, 1.0), 1.0 - margin);
        let speed = rng.random_range(0.1..=0.9);
        let d = rng.random_range(0.5..=2.5);
        let r = MODEL_RADII[k % MODEL_RADII.len()];
        jobs.push(AbpJob {
            case_id: format!("model-{k:02}"),
            kind: AbpKind::Model,
            system: JacobiSystem::model_radial(m, a, r, speed, d)?,
            f_value: root.powf(nf - 1.0),
            profile: profile.clone(),
            r0: 2.5,
        });
    }
    for k in 0..size.submanifold {
        let n = 2 + k % 2;
        let p = 2;
        let margin = rng.random_range(0.0..=0.2);
        let t = shift_to_mean_trace(&random_symmetric(&mut rng, n, -1.0, 1.0), 1.0 - margin);
        let c = random_matrix(&mut rng, n, p, 0.5);
        let r = rng.random_range(0.2..=0.75);
        let speed = rng.random_range(0.1..=0.9);
        let d = rng.random_range(0.0..=1.0);
        jobs.push(AbpJob {
            case_id: format!("sub-{k:02}"),
            kind: AbpKind::Submanifold,
            system: JacobiSystem::submanifold(t, c, None, r, speed, d)?,
            f_value: 1.0,
            profile: zero.clone(),
            r0: 1.0,
        });
    }
    jobs.into_par_iter().map(|job| run_abp_job(job, tol)).collect()
}

fn run_abp_job(job: AbpJob, tol: &Tolerances) -> Result<AbpCase> {
    let run = integrate_jacobi(&job.system, tol.ode_tol)?;
    let report = match job.kind {
        AbpKind::Submanifold => submanifold_det_bound_check(&job.system, &run, job.f_value, &job.profile, job.r0, tol)?,
        _ => det_bound_check(&job.system, &run, job.f_value, &job.profile, job.r0, tol)?,
    };
    Ok(AbpCase {
        case_id: job.case_id,
        kind: job.kind,
        r: job.system.horizon(),
        det_p: report.rhs,
        bound: report.lhs,
        margin: report.slack,
        status: report.status,
        symmetry_residual: run.symmetry_residual,
        log_det_residual: run.log_det_residual(),
    })
}
