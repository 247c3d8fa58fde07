//! One function per subcommand. Each reads its config, runs the library and
//! writes its artifacts into the output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{Vector2, Vector3};
use serde_json::{json, Value};

use ringdyn::homographic::{
    solve_polygonal_configuration, synthesize_orbit, CentralArgument, HomographicProfile, RadiusProfile,
};
use ringdyn::io::{self, AnyTrajectory, PlotSnapshot};
use ringdyn::ring::{gap_series_from_tracked, homographic_report, track_ring, RingSnapshot};
use ringdyn::spline::HermiteTable;
use ringdyn::{
    AngularKernel, BodyMass, CurvedState, FlatState, IntegrationOptions, MassModel, Sigma,
    Trajectory,
};

use crate::config::{
    self, AnalyzeConfig, CentralArgumentSpec, CheckConfig, ConstructConfig, KernelSpec, Loaded, MassSpec,
    RadiusSpec, SimulateConfig, SolveConfig, Space,
};
use crate::error::CliError;

/// Environment variable that overrides the `seed` of `solve-config`.
pub const SEED_ENV: &str = "RINGDYN_SEED";

/// Classification that `analyze --expect` can demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Expectation {
    Regular,
    Homographic,
    #[value(name = "relative_equilibrium")]
    RelativeEquilibrium,
}

impl Expectation {
    fn key(self) -> &'static str {
        match self {
            Expectation::Regular => "regular",
            Expectation::Homographic => "homographic",
            Expectation::RelativeEquilibrium => "relative_equilibrium",
        }
    }
}

pub struct Outputs {
    pub dir: Option<PathBuf>,
    pub plotdata: bool,
}

impl Outputs {
    fn require_dir(&self) -> Result<&Path, CliError> {
        self.dir
            .as_deref()
            .ok_or_else(|| CliError::Validation("this subcommand needs --out".into()))
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let dir = self.require_dir()?;
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(BufWriter::new(file))
    }

    /// Writes `value` as `name` in the output directory, or to stdout when
    /// there is none.
    fn report(&self, name: &str, value: &Value) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("reports are plain JSON") + "\n";
        match &self.dir {
            Some(_) => {
                let mut w = self.create(name)?;
                w.write_all(text.as_bytes())?;
                w.flush()?;
            }
            None => print!("{text}"),
        }
        Ok(())
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn sigma_of(value: Option<f64>) -> Result<Sigma, CliError> {
    let v = value.ok_or_else(|| invalid("curved runs need sigma (1 or -1)"))?;
    Ok(Sigma::from_value(v)?)
}

fn mass_model<T>(loaded: &Loaded<T>, specs: &[MassSpec]) -> Result<MassModel, CliError> {
    let bodies = specs
        .iter()
        .map(|spec| match spec {
            MassSpec::Constant(m) => Ok(BodyMass::Constant(*m)),
            MassSpec::Table(t) => {
                let (times, masses) = io::read_mass_table(&loaded.resolve(&t.table))?;
                if masses.iter().any(|&m| !(m > 0.0)) {
                    return Err(invalid(format!("{}: masses must be positive", t.table.display())));
                }
                Ok(BodyMass::Profile(Arc::new(HermiteTable::not_a_knot(times, masses)?)))
            }
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(MassModel::new(bodies)?)
}

fn coords<const D: usize>(v: &[f64], what: &str, body: usize) -> Result<[f64; D], CliError> {
    v.try_into()
        .map_err(|_| invalid(format!("bodies[{body}].{what} needs {D} components, got {}", v.len())))
}

fn write_plot<S: PlotSnapshot>(out: &Outputs, traj: &Trajectory<S>, ring_tol: f64) -> Result<(), CliError> {
    if out.plotdata {
        let mut w = out.create("plotdata.csv")?;
        io::write_plotdata(traj, ring_tol, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn momentum_summary<S: PlotSnapshot>(traj: &Trajectory<S>) -> Value {
    let values: Vec<f64> = traj
        .samples()
        .iter()
        .map(|s| s.state.axial_momentum(&s.masses))
        .collect();
    let first = values.first().copied().unwrap_or(0.0);
    let drift = values.iter().map(|v| (v - first).abs()).fold(0.0, f64::max);
    json!({
        "initial": first,
        "final": values.last().copied().unwrap_or(0.0),
        "max_abs_drift": drift,
        "max_relative_drift": if first != 0.0 { drift / first.abs() } else { drift },
    })
}

fn stats_json<S: ringdyn::Timed>(traj: &Trajectory<S>) -> Value {
    match traj.stats() {
        Some(s) => json!({
            "rel_tol": s.rel_tol,
            "abs_tol": s.abs_tol,
            "steps_accepted": s.steps_accepted,
            "steps_rejected": s.steps_rejected,
            "rhs_evaluations": s.rhs_evaluations,
        }),
        None => Value::Null,
    }
}

pub fn simulate(path: &Path, out: &Outputs) -> Result<(), CliError> {
    let loaded: Loaded<SimulateConfig> = config::load(path)?;
    let cfg = &loaded.config;
    out.require_dir()?;
    let options = IntegrationOptions::new(cfg.t_end, cfg.tolerances.rel, cfg.tolerances.abs, cfg.sample_dt);

    let initial = match (&cfg.bodies, &cfg.initial_trajectory) {
        (Some(_), Some(_)) => return Err(invalid("give either bodies or initial_trajectory, not both")),
        (None, None) => return Err(invalid("give bodies or initial_trajectory")),
        (None, Some(p)) => Some(io::read_trajectory_file(&loaded.resolve(p))?),
        (Some(_), None) => None,
    };
    let masses = match (&cfg.bodies, &cfg.masses, &initial) {
        (Some(_), Some(_), _) => return Err(invalid("masses are given per body; drop the top-level masses")),
        (Some(bodies), None, _) => {
            let specs: Vec<MassSpec> = bodies.iter().map(|b| b.mass.clone()).collect();
            mass_model(&loaded, &specs)?
        }
        (None, Some(specs), _) => mass_model(&loaded, specs)?,
        (None, None, Some(AnyTrajectory::Flat(t))) => MassModel::constant(&t.samples()[0].masses)?,
        (None, None, Some(AnyTrajectory::Curved(t))) => MassModel::constant(&t.samples()[0].masses)?,
        (None, None, None) => unreachable!("checked above"),
    };

    match cfg.space {
        Space::Flat => {
            if cfg.sigma.is_some() {
                return Err(invalid("sigma only applies to curved runs"));
            }
            let start = match &initial {
                Some(AnyTrajectory::Flat(t)) => t.samples()[0].state.clone(),
                Some(AnyTrajectory::Curved(_)) => {
                    return Err(invalid("initial_trajectory is curved but space is flat"))
                }
                None => {
                    let bodies = cfg.bodies.as_ref().expect("checked above");
                    let mut q = Vec::new();
                    let mut v = Vec::new();
                    for (i, b) in bodies.iter().enumerate() {
                        let [x, y] = coords::<2>(&b.position, "position", i)?;
                        let [vx, vy] = coords::<2>(&b.velocity, "velocity", i)?;
                        q.push(Vector2::new(x, y));
                        v.push(Vector2::new(vx, vy));
                    }
                    FlatState::new(0.0, q, v)?
                }
            };
            let law = cfg
                .law
                .clone()
                .unwrap_or(ringdyn::LawSpec::Newtonian)
                .build(&loaded.base_dir)?;
            let traj = ringdyn::integrate(&start, &masses, &law, &options)?;
            let mut w = out.create("trajectory.csv")?;
            io::write_flat_trajectory(&traj, &mut w)?;
            w.flush()?;
            write_plot(out, &traj, cfg.ring_tol)?;
            let min_dist = traj
                .samples()
                .iter()
                .map(|s| s.state.min_pair_dist2().sqrt())
                .fold(f64::INFINITY, f64::min);
            out.report(
                "diagnostics.json",
                &json!({
                    "space": "flat",
                    "bodies": start.len(),
                    "samples": traj.len(),
                    "t_end": traj.last().map(|s| s.state.time()),
                    "angular_momentum": momentum_summary(&traj),
                    "min_pair_distance": if min_dist.is_finite() { json!(min_dist) } else { Value::Null },
                    "integrator": stats_json(&traj),
                }),
            )
        }
        Space::Curved => {
            if cfg.law.is_some() {
                return Err(invalid("curved runs use their own force law; drop law"));
            }
            let sigma = sigma_of(cfg.sigma)?;
            let start = match &initial {
                Some(AnyTrajectory::Curved(t)) => t.samples()[0].state.clone(),
                Some(AnyTrajectory::Flat(_)) => {
                    return Err(invalid("initial_trajectory is flat but space is curved"))
                }
                None => {
                    let bodies = cfg.bodies.as_ref().expect("checked above");
                    let mut q = Vec::new();
                    let mut v = Vec::new();
                    for (i, b) in bodies.iter().enumerate() {
                        let [x, y, z] = coords::<3>(&b.position, "position", i)?;
                        let [vx, vy, vz] = coords::<3>(&b.velocity, "velocity", i)?;
                        q.push(Vector3::new(x, y, z));
                        v.push(Vector3::new(vx, vy, vz));
                    }
                    CurvedState::new(sigma, 0.0, q, v)?
                }
            };
            if start.sigma() != sigma {
                return Err(invalid("initial_trajectory lies on the other surface"));
            }
            let traj = ringdyn::integrate_curved(&start, &masses, &options)?;
            let mut w = out.create("trajectory.csv")?;
            io::write_curved_trajectory(&traj, &mut w)?;
            w.flush()?;
            write_plot(out, &traj, cfg.ring_tol)?;
            let (constraint, tangency) = traj
                .samples()
                .iter()
                .map(|s| s.state.drifts())
                .fold((0.0f64, 0.0f64), |acc, d| (acc.0.max(d.0), acc.1.max(d.1)));
            out.report(
                "diagnostics.json",
                &json!({
                    "space": "curved",
                    "sigma": sigma.value(),
                    "bodies": start.len(),
                    "samples": traj.len(),
                    "t_end": traj.last().map(|s| s.state.time()),
                    "angular_momentum": momentum_summary(&traj),
                    "max_constraint_drift": constraint,
                    "max_tangency_drift": tangency,
                    "integrator": stats_json(&traj),
                }),
            )
        }
    }
}

pub fn construct(path: &Path, out: &Outputs) -> Result<(), CliError> {
    let loaded: Loaded<ConstructConfig> = config::load(path)?;
    let cfg = &loaded.config;
    out.require_dir()?;
    let radius = match &cfg.r {
        RadiusSpec::Constant { value } => RadiusProfile::constant(*value)?,
        RadiusSpec::Sinusoid { c0, c1, omega } => RadiusProfile::sinusoid(*c0, *c1, *omega)?,
        RadiusSpec::Table { path } => {
            let (t, r) = io::read_columns(&loaded.resolve(path), ["t", "r"])?;
            RadiusProfile::table(t, r)?
        }
    };
    let law = cfg.law.build(&loaded.base_dir)?;
    let mut profile = HomographicProfile::new(cfg.n, radius, cfg.a, cfg.central_mass, law)?;
    if let Some(arg) = cfg.central_argument {
        if cfg.central_mass.is_none() {
            return Err(invalid("central_argument needs central_mass"));
        }
        profile = profile.with_central_argument(match arg {
            CentralArgumentSpec::SquaredRadius => CentralArgument::SquaredRadius,
            CentralArgumentSpec::Radius => CentralArgument::Radius,
        });
    }
    let [t0, t1] = cfg.span;
    let orbit = synthesize_orbit(&profile, t0, t1, cfg.sample_dt)?;

    let mut w = out.create("trajectory.csv")?;
    io::write_flat_trajectory(&orbit.trajectory, &mut w)?;
    w.flush()?;
    let (times, masses) = orbit.mass_table();
    let mut w = out.create("masses.csv")?;
    io::write_mass_table(&times, &masses, &mut w)?;
    w.flush()?;
    write_plot(out, &orbit.trajectory, 1e-9)?;

    let lo = masses.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = masses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.report(
        "report.json",
        &json!({
            "n": cfg.n,
            "ring_count": profile.ring_count(),
            "central_mass": cfg.central_mass,
            "samples": orbit.trajectory.len(),
            "span": cfg.span,
            "max_residual": orbit.max_residual,
            "ring_mass_min": lo,
            "ring_mass_max": hi,
            "phi_final": orbit.phi.last(),
        }),
    )
}

fn classify<S: RingSnapshot>(
    traj: &Trajectory<S>,
    cfg: &AnalyzeConfig,
    out: &Outputs,
) -> Result<Value, CliError> {
    let tracked = match track_ring(traj, cfg.ring_tol) {
        Ok(t) => t,
        Err(ringdyn::Error::NotARing { .. }) => {
            return Ok(json!({
                "ring": false,
                "variant": Value::Null,
                "homographic": false,
                "relative_equilibrium": false,
                "regular": false,
                "alphas": [],
                "minima_times": [],
            }))
        }
        Err(e) => return Err(e.into()),
    };
    let series = gap_series_from_tracked(&tracked)?;
    let mut w = out.create("gap_series.csv")?;
    io::write_gap_series(&series, &mut w)?;
    w.flush()?;

    let regular = traj.samples().iter().all(|s| {
        s.state
            .ring_decomposition(cfg.ring_tol)
            .map(|d| ringdyn::is_regular(&d, cfg.regular_tol))
            .unwrap_or(false)
    });
    let report = homographic_report(&tracked, cfg.homographic_tol);
    let minima = ringdyn::detect_local_minima(&series, cfg.window);
    Ok(json!({
        "ring": true,
        "variant": tracked.variant.as_str(),
        "homographic": report.homographic,
        "relative_equilibrium": report.relative_equilibrium,
        "regular": regular,
        "alphas": report.alphas.unwrap_or_default(),
        "minima_times": minima,
        "interval_breaks": series.interval_breaks,
        "max_offset_drift": report.max_offset_drift,
        "radius_spread": report.radius_spread,
    }))
}

pub fn analyze(path: &Path, out: &Outputs, expect: Option<Expectation>) -> Result<(), CliError> {
    let loaded: Loaded<AnalyzeConfig> = config::load(path)?;
    let cfg = &loaded.config;
    out.require_dir()?;
    if cfg.window == 0 {
        return Err(CliError::Config {
            field: "window".into(),
            message: "must be at least 1".into(),
        });
    }
    let report = match io::read_trajectory_file(&loaded.resolve(&cfg.trajectory))? {
        AnyTrajectory::Flat(t) => {
            write_plot(out, &t, cfg.ring_tol)?;
            classify(&t, cfg, out)?
        }
        AnyTrajectory::Curved(t) => {
            write_plot(out, &t, cfg.ring_tol)?;
            classify(&t, cfg, out)?
        }
    };
    out.report("report.json", &report)?;
    if let Some(e) = expect {
        if report[e.key()] != Value::Bool(true) {
            return Err(CliError::Expectation {
                expected: e.key().into(),
            });
        }
    }
    Ok(())
}

fn monotonicity_json(r: &ringdyn::MonotonicityReport) -> Value {
    json!({ "decreasing": r.decreasing, "first_violation": r.first_violation })
}

pub fn check_law(path: &Path, out: &Outputs) -> Result<(), CliError> {
    let loaded: Loaded<CheckConfig> = config::load(path)?;
    let cfg = &loaded.config;
    if cfg.law.is_none() && cfg.kernel.is_none() {
        return Err(invalid("give law, kernel or both"));
    }
    let mut report = serde_json::Map::new();
    if let Some(spec) = &cfg.law {
        let law = spec.build(&loaded.base_dir)?;
        let [lo, hi] = cfg.s_range;
        let scan = law.check_sqrt_decreasing(lo, hi, cfg.grid)?;
        report.insert(
            "law".into(),
            json!({
                "admissible": law.is_admissible(),
                "sqrt_s_f": monotonicity_json(&scan),
                "s_range": cfg.s_range,
            }),
        );
    }
    if let Some(spec) = &cfg.kernel {
        let kernel = match spec {
            KernelSpec::Flat { law, r } => AngularKernel::flat(law.build(&loaded.base_dir)?, *r)?,
            KernelSpec::Curved { sigma, r } => AngularKernel::curved(Sigma::from_value(*sigma)?, *r)?,
        };
        let literal = kernel.check_g_decreasing(cfg.grid)?;
        let hypothesis = kernel.check_chord_hypothesis(cfg.grid)?;
        let status = if literal.decreasing && hypothesis.decreasing {
            "decreasing"
        } else {
            "not decreasing"
        };
        report.insert(
            "kernel".into(),
            json!({
                "r": kernel.radius(),
                "g": monotonicity_json(&literal),
                "chord_hypothesis": monotonicity_json(&hypothesis),
                "status": status,
            }),
        );
    }
    report.insert("grid".into(), json!(cfg.grid));
    out.report("report.json", &Value::Object(report))
}

fn seed_override() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| invalid(format!("{SEED_ENV}={s:?} is not a seed: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(invalid(format!("{SEED_ENV}: {e}"))),
    }
}

pub fn solve_config(path: &Path, out: &Outputs) -> Result<(), CliError> {
    let loaded: Loaded<SolveConfig> = config::load(path)?;
    let cfg = &loaded.config;
    let seed = seed_override()?.unwrap_or(cfg.seed);
    let law = cfg.law.build(&loaded.base_dir)?;
    let report = solve_polygonal_configuration(&cfg.masses, cfg.r, cfg.spin, &law, cfg.starts, seed)?;
    let solution = |c: &ringdyn::homographic::PolygonalConfiguration| {
        json!({ "alphas": c.alphas, "A2": c.a2, "residual": c.residual })
    };
    out.report(
        "report.json",
        &json!({
            "solutions": report.solutions.iter().map(solution).collect::<Vec<_>>(),
            "starts": report.starts,
            "converged": report.converged,
            "seed": seed,
            "best": report.best.as_ref().map(solution),
        }),
    )
}
