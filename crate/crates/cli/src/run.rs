//! Executes a [`RunConfig`] and writes its output files.

use std::collections::BTreeMap;
use std::path::PathBuf;

use ancgeom::manifold::{ModelManifold, VolumeComparison};
use ancgeom::ode::{model_bounds_check, solve_model, ModelSolution};
use ancgeom::profile::CurvatureProfile;
use ancgeom::report::{InequalityReport, Status};
use ancgeom::sobolev::{isoperimetric_report, theorem11_report, RadialDensity, RadialDomain};
use ancgeom::submanifold::{corollary15_report, minimal_isoperimetric_report, theorem14_report, Submanifold};
use ancgeom::sweep::{abp_sweep, prepare, theorem11_sweep};
use serde_json::{json, Value};

use crate::config::{Inputs, RunConfig};
use crate::emit;
use crate::error::{CliError, Result};

/// Files written by a run and the number of counterexample flags raised.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub counterexamples: usize,
}

impl RunOutcome {
    /// 0 when clean, 2 when any counterexample was flagged.
    pub fn exit_code(&self) -> u8 {
        if self.counterexamples > 0 {
            2
        } else {
            0
        }
    }
}

/// Output file contents keyed by path relative to the output directory.
type Files = BTreeMap<String, String>;

pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let tol = &config.tolerances;
    tol.validate()?;
    let mut files = Files::new();
    let counterexamples = match &config.inputs {
        Inputs::Profile { profile, t_end, samples } => run_profile(config, profile, *t_end, *samples, &mut files)?,
        Inputs::Manifold { manifold, r_max, intervals } => {
            let m = ModelManifold::from_spec(manifold, &config.base_dir)?;
            run_manifold(config, m, *r_max, *intervals, &mut files)?
        }
        Inputs::CheckDomain { manifold, radius, density, profile, theta } => {
            let m = ModelManifold::from_spec(manifold, &config.base_dir)?;
            let (profile, theta) = match (profile, theta) {
                (Some(p), Some(t)) => (p.clone(), *t),
                _ => {
                    let prepared = prepare("manifold", m.clone(), tol)?;
                    (profile.clone().unwrap_or(prepared.profile), theta.unwrap_or(prepared.theta))
                }
            };
            let domain = RadialDomain::new(m, *radius)?;
            let f = RadialDensity::lipschitz(density.clone(), *radius)?;
            let reports = vec![
                theorem11_report(&domain, &f, &profile, theta, tol)?,
                isoperimetric_report(&domain, &profile, theta, tol)?,
            ];
            emit_reports(&reports, &mut files)
        }
        Inputs::CheckSubmanifold { specimen, f, profile, theta } => {
            let s = Submanifold::new(*specimen)?;
            let mut reports = vec![theorem14_report(&s, *f, profile, *theta, tol)?];
            if s.p() == 2 {
                reports.push(corollary15_report(&s, *f, profile, *theta, tol)?);
                if s.is_minimal() {
                    reports.push(minimal_isoperimetric_report(&s, profile, *theta, tol)?);
                }
            }
            emit_reports(&reports, &mut files)
        }
        Inputs::Abp { size } => {
            let cases = abp_sweep(config.seed, *size, tol)?;
            files.insert("abp.csv".into(), emit::abp_csv(&cases));
            files.insert("abp.json".into(), emit::json(&to_value(&cases)));
            cases.iter().filter(|c| c.status == Status::Counterexample).count()
        }
        Inputs::Sweep => {
            let cells = theorem11_sweep(tol)?;
            files.insert("sweep.csv".into(), emit::sweep_csv(&cells));
            files.insert("sweep.json".into(), emit::json(&to_value(&cells)));
            for (name, text) in emit::emit_plot_data(&cells) {
                files.insert(format!("plot/{name}"), text);
            }
            cells.iter().filter(|c| c.report.is_counterexample()).count()
        }
    };
    let summary = json!({
        "command": config.command.name(),
        "seed": config.seed,
        "tolerances": config.tolerances,
        "counterexamples": counterexamples,
        "files": files.keys().collect::<Vec<_>>(),
    });
    files.insert("summary.json".into(), emit::json(&summary));
    write_files(config, &files, counterexamples)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn emit_reports(reports: &[InequalityReport], files: &mut Files) -> usize {
    files.insert("reports.json".into(), emit::json(&to_value(&reports)));
    files.insert("reports.csv".into(), emit::reports_csv(reports));
    reports.iter().filter(|r| r.is_counterexample()).count()
}

fn run_profile(config: &RunConfig, profile: &CurvatureProfile, t_end: f64, samples: usize, files: &mut Files) -> Result<usize> {
    let tol = &config.tolerances;
    let b0 = profile.b0();
    let h = solve_model(profile, t_end, tol.ode_tol)?;
    let bounds = model_bounds_check(&h, profile, 100.0 * tol.ode_tol);
    let limit = match ModelSolution::solve(profile, tol.ode_tol) {
        Ok(sol) => json!({"value": sol.slope_limit(), "uncertainty": sol.slope_uncertainty()}),
        Err(e @ (ancgeom::Error::TailNotConverged { .. } | ancgeom::Error::NonConvergence { .. })) => {
            json!({"error": e.to_string()})
        }
        Err(e) => return Err(e.into()),
    };
    let out_of_range = limit["value"].as_f64().is_some_and(|v| {
        let u = limit["uncertainty"].as_f64().unwrap_or(0.0) + 10.0 * tol.ode_tol;
        v < 1.0 + b0 - u || v > 1.0 + b0 * b0.exp() + u
    });
    let value = json!({
        "profile": profile,
        "b0": b0,
        "b1": profile.b1(),
        "tail_error": profile.tail_error(),
        "diagnostics": profile.validate(1000),
        "t_end": t_end,
        "model_bounds": bounds,
        "slope_limit": limit,
        "slope_limit_range": [1.0 + b0, 1.0 + b0 * b0.exp()],
    });
    files.insert("profile.json".into(), emit::json(&value));
    let mut csv = String::from("t,lambda,h,dh\n");
    for i in 0..=samples {
        let t = t_end * i as f64 / samples as f64;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            emit::float(t),
            emit::float(profile.eval(t)?),
            emit::float(h.value_at(t)?),
            emit::float(h.deriv_at(t)?)
        ));
    }
    files.insert("profile_h.csv".into(), csv);
    Ok(usize::from(!bounds.is_clean()) + usize::from(out_of_range))
}

fn run_manifold(config: &RunConfig, m: ModelManifold, r_max: f64, intervals: usize, files: &mut Files) -> Result<usize> {
    let tol = &config.tolerances;
    let spec = m.spec();
    let label = m.label();
    let cmp = VolumeComparison::admissible(m, tol.ode_tol)?;
    let theta = cmp.asymptotic_volume_ratio(tol.theta_tol)?;
    let growth = cmp.ball_growth(r_max, intervals)?;
    let profile = cmp.profile();
    let value = json!({
        "manifold": spec,
        "label": label,
        "profile": profile,
        "b0": profile.b0(),
        "b1": profile.b1(),
        "theta": theta,
        "slope_limit": cmp.model().slope_limit(),
    });
    files.insert("manifold.json".into(), emit::json(&value));
    files.insert("ball_growth.csv".into(), growth.to_csv());
    Ok(0)
}

fn write_files(config: &RunConfig, files: &Files, counterexamples: usize) -> Result<RunOutcome> {
    let mut written = Vec::with_capacity(files.len());
    for (name, text) in files {
        let path = config.output_dir.join(name);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        }
        std::fs::write(&path, text).map_err(|source| CliError::Io { path: path.clone(), source })?;
        written.push(path);
    }
    Ok(RunOutcome { files: written, counterexamples })
}
