//! Run configuration: a JSON file merged with command-line overrides.

use std::path::{Path, PathBuf};

use ancgeom::manifold::ManifoldSpec;
use ancgeom::profile::CurvatureProfile;
use ancgeom::report::Tolerances;
use ancgeom::sobolev::DensitySpec;
use ancgeom::submanifold::SpecimenSpec;
use ancgeom::sweep::AbpSweepSize;
use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 20240601;
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Moments, model solution and bounds of a curvature profile.
    Profile,
    /// Admissible profile, ball growth and asymptotic volume ratio.
    Manifold,
    /// Sobolev and isoperimetric reports for a geodesic ball.
    CheckDomain,
    /// Submanifold Sobolev and isoperimetric reports.
    CheckSubmanifold,
    /// Randomized determinant-bound runs.
    Abp,
    /// The standard Sobolev sweep with plot data.
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Manifold => "manifold",
            Command::CheckDomain => "check-domain",
            Command::CheckSubmanifold => "check-submanifold",
            Command::Abp => "abp",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToleranceOverrides {
    quad_tol: Option<f64>,
    ode_tol: Option<f64>,
    theta_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AbpSizeFile {
    euclidean: Option<usize>,
    model: Option<usize>,
    submanifold: Option<usize>,
}

/// The config file as written. Each input may be inline or a `*_path`
/// relative to the config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    command: Option<Command>,
    #[serde(default)]
    tolerances: ToleranceOverrides,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    profile: Option<CurvatureProfile>,
    profile_path: Option<PathBuf>,
    manifold: Option<ManifoldSpec>,
    manifold_path: Option<PathBuf>,
    specimen: Option<SpecimenSpec>,
    specimen_path: Option<PathBuf>,
    radius: Option<f64>,
    density: Option<DensitySpec>,
    theta: Option<f64>,
    f: Option<f64>,
    t_end: Option<f64>,
    samples: Option<usize>,
    r_max: Option<f64>,
    intervals: Option<usize>,
    abp: Option<AbpSizeFile>,
}

/// Command-line values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quad_tol: Option<f64>,
    pub ode_tol: Option<f64>,
    pub theta_tol: Option<f64>,
}

/// Inputs of the command being run.
#[derive(Debug, Clone)]
pub enum Inputs {
    Profile { profile: CurvatureProfile, t_end: f64, samples: usize },
    Manifold { manifold: ManifoldSpec, r_max: f64, intervals: usize },
    CheckDomain {
        manifold: ManifoldSpec,
        radius: f64,
        density: DensitySpec,
        profile: Option<CurvatureProfile>,
        theta: Option<f64>,
    },
    CheckSubmanifold { specimen: SpecimenSpec, f: f64, profile: CurvatureProfile, theta: f64 },
    Abp { size: AbpSweepSize },
    Sweep,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub inputs: Inputs,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Directory that relative paths in the config resolve against.
    pub base_dir: PathBuf,
}

/// Where a config value came from, for error messages.
struct Source<'a> {
    path: &'a Path,
    text: &'a str,
}

impl Source<'_> {
    fn parse<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_str(self.text).map_err(|e| CliError::Config {
            path: self.path.to_path_buf(),
            line: e.line().max(1),
            column: e.column().max(1),
            message: strip_position(&e.to_string()),
        })
    }

    /// An error anchored at the first occurrence of `"key"`, or at 1:1.
    fn error(&self, key: &str, message: String) -> CliError {
        let needle = format!("\"{key}\"");
        let (line, column) = self
            .text
            .lines()
            .enumerate()
            .find_map(|(i, l)| l.find(&needle).map(|c| (i + 1, l[..c].chars().count() + 1)))
            .unwrap_or((1, 1));
        CliError::Config { path: self.path.to_path_buf(), line, column, message }
    }
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read(path)?;
    Source { path, text: &text }.parse()
}

fn inline_or_path<T: DeserializeOwned>(
    src: &Source,
    base: &Path,
    key: &str,
    inline: Option<T>,
    path: Option<PathBuf>,
) -> Result<Option<T>> {
    match (inline, path) {
        (Some(_), Some(_)) => Err(src.error(key, format!("give either `{key}` or `{key}_path`, not both"))),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(p)) => load(&base.join(p)).map(Some),
        (None, None) => Ok(None),
    }
}

fn required<T>(src: &Source, key: &str, command: Command, value: Option<T>) -> Result<T> {
    value.ok_or_else(|| src.error(key, format!("`{}` needs `{key}` or `{key}_path`", command.name())))
}

fn positive(src: &Source, key: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(src.error(key, format!("`{key}` = {value} must be positive and finite")))
    }
}

impl RunConfig {
    /// Reads the config file named in `overrides` (if any) and applies the
    /// command-line values on top.
    pub fn load(overrides: &Overrides) -> Result<Self> {
        let (path, text) = match &overrides.config {
            Some(p) => (p.clone(), read(p)?),
            None => (PathBuf::from("<command line>"), "{}".to_string()),
        };
        let src = Source { path: &path, text: &text };
        let file: ConfigFile = src.parse()?;
        let base_dir = match &overrides.config {
            Some(p) => p.parent().map(Path::to_path_buf).unwrap_or_default(),
            None => PathBuf::new(),
        };
        Self::build(file, overrides, &src, base_dir)
    }

    /// Parses config text directly; relative paths resolve against `base_dir`.
    pub fn parse_str(text: &str, base_dir: &Path, overrides: &Overrides) -> Result<Self> {
        let path = PathBuf::from("<config>");
        let src = Source { path: &path, text };
        let file: ConfigFile = src.parse()?;
        Self::build(file, overrides, &src, base_dir.to_path_buf())
    }

    fn build(file: ConfigFile, o: &Overrides, src: &Source, base_dir: PathBuf) -> Result<Self> {
        let command = match (o.command, file.command) {
            (Some(a), Some(b)) if a != b => {
                return Err(src.error(
                    "command",
                    format!("config is for `{}` but `{}` was requested", b.name(), a.name()),
                ))
            }
            (Some(c), _) | (None, Some(c)) => c,
            (None, None) => return Err(src.error("command", "no command given".into())),
        };
        let defaults = Tolerances::default();
        let mut tolerances = Tolerances {
            quad_tol: file.tolerances.quad_tol.unwrap_or(defaults.quad_tol),
            ode_tol: file.tolerances.ode_tol.unwrap_or(defaults.ode_tol),
            theta_tol: file.tolerances.theta_tol.unwrap_or(defaults.theta_tol),
        };
        for (key, v) in [("quad_tol", tolerances.quad_tol), ("ode_tol", tolerances.ode_tol), ("theta_tol", tolerances.theta_tol)] {
            positive(src, key, v)?;
        }
        for (flag, v, slot) in [
            ("--tol-quad", o.quad_tol, &mut tolerances.quad_tol),
            ("--tol-ode", o.ode_tol, &mut tolerances.ode_tol),
            ("--tol-theta", o.theta_tol, &mut tolerances.theta_tol),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Input(format!("{flag} {v}: tolerances must be positive and finite")));
                }
                *slot = v;
            }
        }

        let profile = inline_or_path(src, &base_dir, "profile", file.profile, file.profile_path)?;
        let manifold = inline_or_path(src, &base_dir, "manifold", file.manifold, file.manifold_path)?;
        let specimen = inline_or_path(src, &base_dir, "specimen", file.specimen, file.specimen_path)?;
        let inputs = match command {
            Command::Profile => Inputs::Profile {
                profile: required(src, "profile", command, profile)?,
                t_end: positive(src, "t_end", file.t_end.unwrap_or(100.0))?,
                samples: file.samples.unwrap_or(200).max(1),
            },
            Command::Manifold => Inputs::Manifold {
                manifold: required(src, "manifold", command, manifold)?,
                r_max: positive(src, "r_max", file.r_max.unwrap_or(10.0))?,
                intervals: file.intervals.unwrap_or(100).max(1),
            },
            Command::CheckDomain => Inputs::CheckDomain {
                manifold: required(src, "manifold", command, manifold)?,
                radius: positive(src, "radius", required(src, "radius", command, file.radius)?)?,
                density: file.density.unwrap_or(DensitySpec::Constant { value: 1.0 }),
                profile,
                theta: file.theta.map(|t| unit_interval(src, t)).transpose()?,
            },
            Command::CheckSubmanifold => Inputs::CheckSubmanifold {
                specimen: required(src, "specimen", command, specimen)?,
                f: positive(src, "f", file.f.unwrap_or(1.0))?,
                profile: profile.unwrap_or_else(CurvatureProfile::zero),
                theta: unit_interval(src, file.theta.unwrap_or(1.0))?,
            },
            Command::Abp => {
                let d = AbpSweepSize::default();
                let s = file.abp.unwrap_or_default();
                Inputs::Abp {
                    size: AbpSweepSize {
                        euclidean: s.euclidean.unwrap_or(d.euclidean),
                        model: s.model.unwrap_or(d.model),
                        submanifold: s.submanifold.unwrap_or(d.submanifold),
                    },
                }
            }
            Command::Sweep => Inputs::Sweep,
        };
        let output_dir = match (&o.out, file.output_dir) {
            (Some(p), _) => p.clone(),
            (None, Some(p)) => base_dir.join(p),
            (None, None) => PathBuf::from(DEFAULT_OUT),
        };
        Ok(Self { command, inputs, tolerances, output_dir, seed: o.seed.or(file.seed).unwrap_or(DEFAULT_SEED), base_dir })
    }
}

fn unit_interval(src: &Source, theta: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&theta) {
        Ok(theta)
    } else {
        Err(src.error("theta", format!("`theta` = {theta} must lie in [0, 1]")))
    }
}
