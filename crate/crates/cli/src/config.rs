//! Scenario documents for each subcommand.
//!
//! Every struct rejects unknown keys, and parsing goes through
//! `serde_path_to_error` so a bad document is reported with the path of the
//! offending field (`bodies[2].mass`, `r.omega`, ...).

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use ringdyn::LawSpec;

use crate::error::CliError;

/// A parsed config together with the directory relative paths resolve
/// against.
pub struct Loaded<T> {
    pub config: T,
    pub base_dir: PathBuf,
}

impl<T> Loaded<T> {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<Loaded<T>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let config = serde_path_to_error::deserialize(de).map_err(|e| {
        let parent = e.path().to_string();
        let message = e.into_inner().to_string();
        // a missing key is reported at its parent; name the key itself
        let field = match message.strip_prefix("missing field `").and_then(|m| m.split('`').next()) {
            Some(key) if parent == "." => key.to_string(),
            Some(key) => format!("{parent}.{key}"),
            None => parent,
        };
        CliError::Config { field, message }
    })?;
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    Ok(Loaded { config, base_dir })
}

fn newtonian() -> LawSpec {
    LawSpec::Newtonian
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Flat,
    Curved,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSpec {
    #[serde(default = "TolerancesSpec::default_rel")]
    pub rel: f64,
    #[serde(default = "TolerancesSpec::default_abs")]
    pub abs: f64,
}

impl TolerancesSpec {
    fn default_rel() -> f64 {
        1e-10
    }

    fn default_abs() -> f64 {
        1e-12
    }
}

impl Default for TolerancesSpec {
    fn default() -> Self {
        TolerancesSpec {
            rel: Self::default_rel(),
            abs: Self::default_abs(),
        }
    }
}

/// A constant mass or a `t,m` table.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MassSpec {
    Constant(f64),
    Table(MassTable),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassTable {
    pub table: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub mass: MassSpec,
}

fn default_ring_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub space: Space,
    /// Curvature sign for curved runs: `1` (sphere) or `-1` (hyperboloid).
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Explicit bodies, or ...
    #[serde(default)]
    pub bodies: Option<Vec<BodySpec>>,
    /// ... the first sample of a trajectory file.
    #[serde(default)]
    pub initial_trajectory: Option<PathBuf>,
    /// Per-body masses overriding those of `initial_trajectory`.
    #[serde(default)]
    pub masses: Option<Vec<MassSpec>>,
    #[serde(default)]
    pub law: Option<LawSpec>,
    pub t_end: f64,
    #[serde(default)]
    pub tolerances: TolerancesSpec,
    pub sample_dt: f64,
    /// Ring tolerance used for the plot data.
    #[serde(default = "default_ring_tol")]
    pub ring_tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RadiusSpec {
    Constant { value: f64 },
    Sinusoid { c0: f64, c1: f64, omega: f64 },
    Table { path: PathBuf },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralArgumentSpec {
    SquaredRadius,
    Radius,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructConfig {
    /// Total number of bodies, the centre included.
    pub n: usize,
    pub r: RadiusSpec,
    pub a: f64,
    #[serde(default)]
    pub central_mass: Option<f64>,
    #[serde(default)]
    pub central_argument: Option<CentralArgumentSpec>,
    #[serde(default = "newtonian")]
    pub law: LawSpec,
    pub span: [f64; 2],
    pub sample_dt: f64,
}

fn default_window() -> usize {
    5
}

fn default_angle_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub trajectory: PathBuf,
    #[serde(default = "default_ring_tol")]
    pub ring_tol: f64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_angle_tol")]
    pub regular_tol: f64,
    #[serde(default = "default_angle_tol")]
    pub homographic_tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "space", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelSpec {
    Flat {
        #[serde(default = "newtonian")]
        law: LawSpec,
        r: f64,
    },
    Curved {
        sigma: f64,
        r: f64,
    },
}

fn default_grid() -> usize {
    10_000
}

fn default_s_range() -> [f64; 2] {
    [1e-3, 1e3]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default)]
    pub law: Option<LawSpec>,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_s_range")]
    pub s_range: [f64; 2],
}

fn default_starts() -> usize {
    100
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub masses: Vec<f64>,
    pub r: f64,
    /// Spin `A`; when absent `A^2` is solved for.
    #[serde(default, rename = "A")]
    pub spin: Option<f64>,
    #[serde(default = "newtonian")]
    pub law: LawSpec,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
}
