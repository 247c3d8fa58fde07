//! Exact polygonal homographic orbits with time-varying equal masses.
//!
//! A regular `N`-gon of radius `r(t)` rotating with `r^2 phi' = a` solves the
//! planar equations exactly when every ring body carries
//!
//! ```text
//! m(t) = (a^2 - r'' r^3) / (r^4 S_N(r)),
//! S_N(r) = sum_{j=1}^{N-1} (1 - cos(2 pi j / N)) f(2 r^2 (1 - cos(2 pi j / N)))
//! ```
//!
//! and, with an extra body of constant mass `M` fixed at the origin,
//! `m(t) = (b^2 - (r'' + r M f(r^2)) r^3) / (r^4 S_N(r))`.

mod config;
mod pair;

pub use config::{
    configuration_residuals, solve_from_start, solve_polygonal_configuration, ConfigurationReport,
    PolygonalConfiguration, StartRun, CONVERGENCE_TOL, DEDUP_TOL, MAX_ITERATIONS,
};
pub use pair::counter_rotating_pair;

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::flat::{self, FlatState};
use crate::force_law::ForceLaw;
use crate::mass::{BodyMass, MassModel};
use crate::quadrature;
use crate::spline::{HermiteTable, Jet};
use crate::trajectory::{sample_grid, Sample, Trajectory};

/// Absolute tolerance of the `phi` quadrature on each sample interval.
pub const PHI_QUADRATURE_TOL: f64 = 1e-12;

/// Twice-differentiable radius of the ring.
#[derive(Debug, Clone, PartialEq)]
pub enum RadiusProfile {
    Constant(f64),
    /// `c0 + c1 sin(omega t)` with `|c1| < c0`.
    Sinusoid { c0: f64, c1: f64, omega: f64 },
    /// Not-a-knot cubic spline through `(t, r)` samples.
    Table(Arc<HermiteTable>),
}

impl RadiusProfile {
    pub fn constant(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Invalid(format!("radius must be positive, got {r}")));
        }
        Ok(RadiusProfile::Constant(r))
    }

    pub fn sinusoid(c0: f64, c1: f64, omega: f64) -> Result<Self> {
        if !(c0 > 0.0 && c1.abs() < c0 && omega.is_finite()) {
            return Err(Error::Invalid(format!(
                "sinusoidal radius needs |c1| < c0, got c0 = {c0}, c1 = {c1}"
            )));
        }
        Ok(RadiusProfile::Sinusoid { c0, c1, omega })
    }

    pub fn table(times: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        if radii.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::Invalid("radius table has nonpositive entries".into()));
        }
        Ok(RadiusProfile::Table(Arc::new(HermiteTable::not_a_knot(times, radii)?)))
    }

    /// `r`, `r'` and `r''` at `t`.
    pub fn jet(&self, t: f64) -> Result<Jet> {
        let jet = match self {
            RadiusProfile::Constant(r) => Jet {
                value: *r,
                d1: 0.0,
                d2: 0.0,
            },
            RadiusProfile::Sinusoid { c0, c1, omega } => {
                let (s, c) = (omega * t).sin_cos();
                Jet {
                    value: c0 + c1 * s,
                    d1: c1 * omega * c,
                    d2: -c1 * omega * omega * s,
                }
            }
            RadiusProfile::Table(table) => table.jet(t)?,
        };
        if !(jet.value > 0.0) {
            return Err(Error::InfeasibleProfile {
                t,
                reason: format!("radius {} not positive", jet.value),
            });
        }
        Ok(jet)
    }
}

/// How the central body's pull enters the mass formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CentralArgument {
    /// `f(r^2)`: the law applied to the squared distance, as in the
    /// equations of motion.
    #[default]
    SquaredRadius,
    /// `f(r)`: kept only to demonstrate that it does not solve them.
    Radius,
}

/// Everything needed to build a homographic orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct HomographicProfile {
    n: usize,
    radius: RadiusProfile,
    a: f64,
    central_mass: Option<f64>,
    law: ForceLaw,
    central_argument: CentralArgument,
}

impl HomographicProfile {
    /// `n` counts every body, the central one included when `central_mass`
    /// is given; the ring then has `n - 1` bodies. `a` is the angular
    /// momentum constant `r^2 phi'` (called `b` in the central variant).
    pub fn new(
        n: usize,
        radius: RadiusProfile,
        a: f64,
        central_mass: Option<f64>,
        law: ForceLaw,
    ) -> Result<Self> {
        let ring = n.saturating_sub(usize::from(central_mass.is_some()));
        if ring < 2 {
            return Err(Error::Invalid(format!(
                "a homographic ring needs at least two ring bodies, got {ring}"
            )));
        }
        if !a.is_finite() {
            return Err(Error::Invalid(format!("angular momentum constant must be finite, got {a}")));
        }
        if let Some(m) = central_mass {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::Invalid(format!("central mass must be positive, got {m}")));
            }
        }
        Ok(HomographicProfile {
            n,
            radius,
            a,
            central_mass,
            law,
            central_argument: CentralArgument::default(),
        })
    }

    pub fn with_central_argument(mut self, arg: CentralArgument) -> Self {
        self.central_argument = arg;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ring_count(&self) -> usize {
        self.n - usize::from(self.central_mass.is_some())
    }

    pub fn radius(&self) -> &RadiusProfile {
        &self.radius
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn central_mass(&self) -> Option<f64> {
        self.central_mass
    }

    pub fn law(&self) -> &ForceLaw {
        &self.law
    }

    pub fn central_argument(&self) -> CentralArgument {
        self.central_argument
    }
}

fn one_minus_cos(x: f64) -> f64 {
    let h = (0.5 * x).sin();
    2.0 * h * h
}

/// `S_n(r) = sum_{j=1}^{n-1} (1 - cos(2 pi j/n)) f(2 r^2 (1 - cos(2 pi j/n)))`.
pub fn regular_polygon_sum(n: usize, r: f64, law: &ForceLaw) -> Result<f64> {
    if n < 2 {
        return Err(Error::Invalid(format!("polygon needs n >= 2, got {n}")));
    }
    if !(r > 0.0) {
        return Err(Error::Invalid(format!("radius must be positive, got {r}")));
    }
    let mut sum = 0.0;
    for j in 1..n {
        let u = one_minus_cos(2.0 * PI * j as f64 / n as f64);
        sum += u * law.evaluate(2.0 * r * r * u)?;
    }
    Ok(sum)
}

/// Mass carried by each ring body at time `t`.
pub fn mass_profile(profile: &HomographicProfile, t: f64) -> Result<f64> {
    let jet = profile.radius.jet(t)?;
    mass_from_jet(profile, t, &jet)
}

fn mass_from_jet(profile: &HomographicProfile, t: f64, jet: &Jet) -> Result<f64> {
    let r = jet.value;
    let r3 = r * r * r;
    let mut pull = jet.d2;
    if let Some(m_center) = profile.central_mass {
        let arg = match profile.central_argument {
            CentralArgument::SquaredRadius => r * r,
            CentralArgument::Radius => r,
        };
        pull += r * m_center * profile.law.evaluate(arg)?;
    }
    let numerator = profile.a * profile.a - pull * r3;
    if !(numerator > 0.0) {
        return Err(Error::InfeasibleProfile {
            t,
            reason: format!("mass numerator {numerator:e} is not positive"),
        });
    }
    let sum = regular_polygon_sum(profile.ring_count(), r, &profile.law)?;
    Ok(numerator / (r3 * r * sum))
}

/// A sampled exact orbit together with its analytic accelerations.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedOrbit {
    pub trajectory: Trajectory<FlatState>,
    pub accelerations: Vec<Vec<Vector2<f64>>>,
    /// Rotation angle of the first ring body.
    pub phi: Vec<f64>,
    pub radius: Vec<f64>,
    /// Mass shared by the ring bodies at each sample.
    pub ring_mass: Vec<f64>,
    pub central_mass: Option<f64>,
    /// Residual of the equations of motion at each sample.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

impl SynthesizedOrbit {
    pub fn times(&self) -> Vec<f64> {
        self.trajectory.times()
    }

    /// `(t, m)` samples of the ring mass.
    pub fn mass_table(&self) -> (Vec<f64>, Vec<f64>) {
        (self.times(), self.ring_mass.clone())
    }

    /// Mass model interpolating the emitted ring-mass table, with the
    /// central body (if any) last.
    pub fn mass_model(&self) -> Result<MassModel> {
        let ring = self.trajectory.first().map_or(0, |s| s.state.len())
            - usize::from(self.central_mass.is_some());
        let table = Arc::new(HermiteTable::not_a_knot(self.times(), self.ring_mass.clone())?);
        let mut bodies = vec![BodyMass::Profile(table); ring];
        if let Some(m) = self.central_mass {
            bodies.push(BodyMass::Constant(m));
        }
        MassModel::new(bodies)
    }
}

/// Samples the orbit on `t0 + k dt`, `phi(t0) = 0`.
pub fn synthesize_orbit(
    profile: &HomographicProfile,
    t0: f64,
    t1: f64,
    sample_dt: f64,
) -> Result<SynthesizedOrbit> {
    let grid = sample_grid(t0, t1, sample_dt)?;
    let ring = profile.ring_count();
    let a = profile.a;
    let mut phi = 0.0;
    let mut builder = OrbitBuilder::new(grid.len(), profile.central_mass);

    for (k, &t) in grid.iter().enumerate() {
        if k > 0 {
            let radius = &profile.radius;
            let failure = RefCell::new(None);
            let increment = quadrature::integrate(
                |s| match radius.jet(s) {
                    Ok(j) => a / (j.value * j.value),
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        f64::NAN
                    }
                },
                grid[k - 1],
                t,
                PHI_QUADRATURE_TOL,
            );
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            phi += increment?;
        }
        let jet = profile.radius.jet(t)?;
        let m = mass_from_jet(profile, t, &jet)?;
        let (r, dr) = (jet.value, jet.d1);
        let omega = a / (r * r);
        let radial_acc = jet.d2 - r * omega * omega;

        let mut q = Vec::with_capacity(profile.n);
        let mut v = Vec::with_capacity(profile.n);
        let mut acc = Vec::with_capacity(profile.n);
        for i in 0..ring {
            let (s, c) = (phi + 2.0 * PI * i as f64 / ring as f64).sin_cos();
            let e_r = Vector2::new(c, s);
            let e_t = Vector2::new(-s, c);
            q.push(r * e_r);
            v.push(dr * e_r + r * omega * e_t);
            acc.push(radial_acc * e_r);
        }
        let mut masses = vec![m; ring];
        if let Some(m_center) = profile.central_mass {
            q.push(Vector2::zeros());
            v.push(Vector2::zeros());
            acc.push(Vector2::zeros());
            masses.push(m_center);
        }
        builder.push(FlatState::new(t, q, v)?, acc, masses, &profile.law, phi, r, m)?;
    }
    builder.finish()
}

struct OrbitBuilder {
    samples: Vec<Sample<FlatState>>,
    accelerations: Vec<Vec<Vector2<f64>>>,
    phi: Vec<f64>,
    radius: Vec<f64>,
    ring_mass: Vec<f64>,
    residuals: Vec<f64>,
    central_mass: Option<f64>,
}

impl OrbitBuilder {
    fn new(capacity: usize, central_mass: Option<f64>) -> Self {
        OrbitBuilder {
            samples: Vec::with_capacity(capacity),
            accelerations: Vec::with_capacity(capacity),
            phi: Vec::with_capacity(capacity),
            radius: Vec::with_capacity(capacity),
            ring_mass: Vec::with_capacity(capacity),
            residuals: Vec::with_capacity(capacity),
            central_mass,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        state: FlatState,
        acc: Vec<Vector2<f64>>,
        masses: Vec<f64>,
        law: &ForceLaw,
        phi: f64,
        r: f64,
        ring_mass: f64,
    ) -> Result<()> {
        let residual = flat::residual(&state, &acc, &MassModel::constant(&masses)?, law)?;
        self.residuals.push(residual);
        self.samples.push(Sample { state, masses });
        self.accelerations.push(acc);
        self.phi.push(phi);
        self.radius.push(r);
        self.ring_mass.push(ring_mass);
        Ok(())
    }

    fn finish(self) -> Result<SynthesizedOrbit> {
        let max_residual = self.residuals.iter().copied().fold(0.0, f64::max);
        Ok(SynthesizedOrbit {
            trajectory: Trajectory::new(self.samples, None)?,
            accelerations: self.accelerations,
            phi: self.phi,
            radius: self.radius,
            ring_mass: self.ring_mass,
            central_mass: self.central_mass,
            residuals: self.residuals,
            max_residual,
        })
    }
}
