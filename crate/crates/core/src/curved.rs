//! n-body dynamics on the unit sphere (`sigma = +1`) and the upper sheet of
//! the unit hyperboloid (`sigma = -1`), embedded in R^3 with the signed
//! product `x . y = x1 y1 + x2 y2 + sigma x3 y3`.
//!
//! The equations of motion already contain the constraint force; after every
//! accepted step the state is projected back onto the surface and its tangent
//! bundle, which only removes round-off and truncation drift.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::mass::MassModel;
use crate::ode::{self, OdeSystem};
use crate::ring::{self, RingDecomposition, RingSnapshot};
use crate::trajectory::{sample_grid, IntegrationOptions, Sample, Timed, Trajectory};

/// Tolerance on `q.q = sigma` and `q.v = 0` when a state is admitted.
pub const ADMISSION_TOL: f64 = 1e-9;

/// Smallest allowed pair denominator `sigma - sigma (q_i . q_j)^2`.
pub const SINGULAR_MIN: f64 = 1e-10;

/// Sign of the curvature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sigma {
    /// Unit sphere.
    Positive,
    /// Upper sheet of the unit hyperboloid.
    Negative,
}

impl Sigma {
    pub fn value(self) -> f64 {
        match self {
            Sigma::Positive => 1.0,
            Sigma::Negative => -1.0,
        }
    }

    pub fn from_value(v: f64) -> Result<Self> {
        if v == 1.0 {
            Ok(Sigma::Positive)
        } else if v == -1.0 {
            Ok(Sigma::Negative)
        } else {
            Err(Error::Invalid(format!("sigma must be +1 or -1, got {v}")))
        }
    }
}

/// `x1 y1 + x2 y2 + sigma x3 y3`.
pub fn odot(x: &Vector3<f64>, y: &Vector3<f64>, sigma: Sigma) -> f64 {
    x.x * y.x + x.y * y.y + sigma.value() * x.z * y.z
}

/// Positions and velocities of `n` bodies on the constant-curvature surface.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvedState {
    sigma: Sigma,
    time: f64,
    positions: Vec<Vector3<f64>>,
    velocities: Vec<Vector3<f64>>,
}

impl CurvedState {
    /// Validates surface membership, tangency, the sheet and pair
    /// non-degeneracy.
    pub fn new(
        sigma: Sigma,
        time: f64,
        positions: Vec<Vector3<f64>>,
        velocities: Vec<Vector3<f64>>,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Invalid("state needs at least one body".into()));
        }
        if positions.len() != velocities.len() {
            return Err(Error::Invalid(format!(
                "{} positions but {} velocities",
                positions.len(),
                velocities.len()
            )));
        }
        if !time.is_finite()
            || positions.iter().chain(&velocities).any(|v| !v.iter().all(|c| c.is_finite()))
        {
            return Err(Error::Invalid("state contains non-finite values".into()));
        }
        let s = sigma.value();
        for (i, (q, v)) in positions.iter().zip(&velocities).enumerate() {
            let surface = odot(q, q, sigma) - s;
            if surface.abs() > ADMISSION_TOL {
                return Err(Error::Invalid(format!(
                    "body {i} is off the surface (q.q - sigma = {surface:e})"
                )));
            }
            let tangency = odot(q, v, sigma);
            if tangency.abs() > ADMISSION_TOL {
                return Err(Error::Invalid(format!(
                    "body {i} velocity not tangent (q.v = {tangency:e})"
                )));
            }
            if sigma == Sigma::Negative && !(q.z > 0.0) {
                return Err(Error::Invalid(format!("body {i} is on the lower sheet")));
            }
        }
        let state = CurvedState {
            sigma,
            time,
            positions,
            velocities,
        };
        for i in 0..state.len() {
            for j in i + 1..state.len() {
                let d = state.pair_denominator(i, j);
                if !(d > 0.0) {
                    return Err(Error::Invalid(format!(
                        "bodies {i} and {j} coincide or are antipodal (denominator {d:e})"
                    )));
                }
            }
        }
        Ok(state)
    }

    /// A point at height `z` above the ring of planar radius `r` and angle
    /// `theta`, with `z` chosen on the surface: `+sqrt(1 - r^2)` (or its
    /// negative when `lower_hemisphere`) for the sphere, `sqrt(1 + r^2)` for
    /// the hyperboloid.
    pub fn ring_point(sigma: Sigma, r: f64, theta: f64, lower_hemisphere: bool) -> Result<Vector3<f64>> {
        let z = match sigma {
            Sigma::Positive => {
                if !(r <= 1.0) {
                    return Err(Error::Invalid(format!("ring radius {r} exceeds the sphere")));
                }
                let z = (1.0 - r * r).sqrt();
                if lower_hemisphere {
                    -z
                } else {
                    z
                }
            }
            Sigma::Negative => (1.0 + r * r).sqrt(),
        };
        Ok(Vector3::new(r * theta.cos(), r * theta.sin(), z))
    }

    pub fn sigma(&self) -> Sigma {
        self.sigma
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn velocities(&self) -> &[Vector3<f64>] {
        &self.velocities
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    fn pair_denominator(&self, i: usize, j: usize) -> f64 {
        pair_geometry(&self.positions[i], &self.positions[j], self.sigma).denominator
    }

    /// `max_i |q_i . q_i - sigma|`.
    pub fn constraint_drift(&self) -> f64 {
        let s = self.sigma.value();
        self.positions
            .iter()
            .map(|q| (odot(q, q, self.sigma) - s).abs())
            .fold(0.0, f64::max)
    }

    /// `max_i |q_i . v_i|`.
    pub fn tangency_drift(&self) -> f64 {
        self.positions
            .iter()
            .zip(&self.velocities)
            .map(|(q, v)| odot(q, v, self.sigma).abs())
            .fold(0.0, f64::max)
    }

    fn from_flat(sigma: Sigma, time: f64, y: &[f64]) -> Self {
        let n = y.len() / 6;
        let vec = |k: usize| Vector3::new(y[3 * k], y[3 * k + 1], y[3 * k + 2]);
        CurvedState {
            sigma,
            time,
            positions: (0..n).map(vec).collect(),
            velocities: (n..2 * n).map(vec).collect(),
        }
    }

    fn to_flat(&self) -> Vec<f64> {
        self.positions
            .iter()
            .chain(&self.velocities)
            .flat_map(|v| [v.x, v.y, v.z])
            .collect()
    }
}

impl Timed for CurvedState {
    fn time(&self) -> f64 {
        self.time
    }
}

impl RingSnapshot for CurvedState {
    fn ring_decomposition(&self, tol: f64) -> Result<RingDecomposition> {
        ring_decompose_curved(self, tol)
    }
}

/// Pair denominator `sigma - sigma c^2` and the direction `q_j - sigma c q_i`
/// (up to the mirrored one for body `j`), with `c = q_i . q_j`.
///
/// On the surface, with `d = q_j - q_i` and `e = q_j + q_i`,
/// `h = d.d / 2 = sigma - c` and `p = e.e / 2 = sigma + c`, so the
/// denominator is `sigma h p` and `q_j - sigma c q_i = d + sigma h q_i
/// = e - sigma p q_i`. Close pairs use the `d` form and near-antipodal ones
/// the `e` form, which avoids cancellation in both `1 - c^2` and the
/// direction.
struct PairGeometry {
    denominator: f64,
    to_j: Vector3<f64>,
    to_i: Vector3<f64>,
}

fn pair_geometry(qi: &Vector3<f64>, qj: &Vector3<f64>, sigma: Sigma) -> PairGeometry {
    let s = sigma.value();
    let d = qj - qi;
    let e = qj + qi;
    let h = 0.5 * odot(&d, &d, sigma);
    let p = 0.5 * odot(&e, &e, sigma);
    let (to_j, to_i) = if h.abs() <= p.abs() {
        (d + s * h * qi, s * h * qj - d)
    } else {
        (e - s * p * qi, e - s * p * qj)
    };
    PairGeometry {
        denominator: s * h * p,
        to_j,
        to_i,
    }
}

fn accelerations_into(
    sigma: Sigma,
    positions: &[Vector3<f64>],
    velocities: &[Vector3<f64>],
    masses: &[f64],
    out: &mut [Vector3<f64>],
) -> Result<()> {
    let s = sigma.value();
    for (i, (q, v)) in positions.iter().zip(velocities).enumerate() {
        out[i] = -s * odot(v, v, sigma) * q;
    }
    let n = positions.len();
    for i in 0..n {
        for j in i + 1..n {
            let (qi, qj) = (&positions[i], &positions[j]);
            let pair = pair_geometry(qi, qj, sigma);
            let denominator = pair.denominator;
            if !(denominator >= SINGULAR_MIN) {
                return Err(Error::Singular { i, j, denominator });
            }
            let w = denominator.powf(-1.5);
            // the pair term is not antisymmetric: each body pulls along its
            // own tangent plane
            out[i] += masses[j] * w * pair.to_j;
            out[j] += masses[i] * w * pair.to_i;
        }
    }
    Ok(())
}

/// Right-hand side of the curved equations of motion.
pub fn acceleration_curved(state: &CurvedState, masses: &MassModel) -> Result<Vec<Vector3<f64>>> {
    masses.check_len(state.len())?;
    let m = masses.at(state.time)?;
    let mut out = vec![Vector3::zeros(); state.len()];
    accelerations_into(state.sigma, &state.positions, &state.velocities, &m, &mut out)?;
    Ok(out)
}

/// Projects a position onto the surface (upper sheet for `sigma = -1`).
pub fn project_position(q: &Vector3<f64>, sigma: Sigma) -> Result<Vector3<f64>> {
    match sigma {
        Sigma::Positive => {
            let norm = q.norm();
            if !(norm > 0.0) {
                return Err(Error::Geometry("cannot project the origin onto the sphere".into()));
            }
            Ok(q / norm)
        }
        Sigma::Negative => {
            let qq = odot(q, q, sigma);
            if !(qq < 0.0) || !(q.z > 0.0) {
                return Err(Error::Geometry(format!(
                    "point ({}, {}, {}) cannot be projected onto the upper sheet",
                    q.x, q.y, q.z
                )));
            }
            Ok(q / (-qq).sqrt())
        }
    }
}

/// Removes the normal component of `v` at the surface point `q`.
pub fn project_velocity(q: &Vector3<f64>, v: &Vector3<f64>, sigma: Sigma) -> Vector3<f64> {
    v - sigma.value() * odot(q, v, sigma) * q
}

struct CurvedSystem<'a> {
    sigma: Sigma,
    n: usize,
    masses: &'a MassModel,
}

impl CurvedSystem<'_> {
    fn unpack(&self, y: &[f64]) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
        let vec = |k: usize| Vector3::new(y[3 * k], y[3 * k + 1], y[3 * k + 2]);
        (
            (0..self.n).map(vec).collect(),
            (self.n..2 * self.n).map(vec).collect(),
        )
    }
}

impl OdeSystem for CurvedSystem<'_> {
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let (q, v) = self.unpack(y);
        let mut m = vec![0.0; self.n];
        self.masses.fill(t, &mut m)?;
        let mut acc = vec![Vector3::zeros(); self.n];
        accelerations_into(self.sigma, &q, &v, &m, &mut acc)?;
        let half = 3 * self.n;
        dy[..half].copy_from_slice(&y[half..]);
        for (k, a) in acc.iter().enumerate() {
            dy[half + 3 * k..half + 3 * k + 3].copy_from_slice(a.as_slice());
        }
        Ok(())
    }

    fn project(&self, y: &mut [f64]) -> Result<()> {
        let half = 3 * self.n;
        for k in 0..self.n {
            let q = Vector3::new(y[3 * k], y[3 * k + 1], y[3 * k + 2]);
            let v = Vector3::new(y[half + 3 * k], y[half + 3 * k + 1], y[half + 3 * k + 2]);
            let q = project_position(&q, self.sigma)?;
            let v = project_velocity(&q, &v, self.sigma);
            y[3 * k..3 * k + 3].copy_from_slice(q.as_slice());
            y[half + 3 * k..half + 3 * k + 3].copy_from_slice(v.as_slice());
        }
        Ok(())
    }

    fn projects(&self) -> bool {
        true
    }
}

/// Integrates the curved equations with post-step constraint projection.
pub fn integrate_curved(
    initial: &CurvedState,
    masses: &MassModel,
    options: &IntegrationOptions,
) -> Result<Trajectory<CurvedState>> {
    masses.check_len(initial.len())?;
    let t0 = initial.time;
    if !(options.t_end > t0) {
        return Err(Error::Invalid(format!(
            "t_end {} must exceed the initial time {t0}",
            options.t_end
        )));
    }
    let grid = sample_grid(t0, options.t_end, options.sample_dt)?;
    let system = CurvedSystem {
        sigma: initial.sigma,
        n: initial.len(),
        masses,
    };
    let mut samples = Vec::with_capacity(grid.len());
    let stats = ode::integrate(
        &system,
        t0,
        &initial.to_flat(),
        options.t_end,
        options.tolerances(),
        &grid,
        |t, y| {
            samples.push(Sample {
                state: CurvedState::from_flat(initial.sigma, t, y),
                masses: masses.at(t)?,
            });
            Ok(())
        },
    )?;
    Trajectory::new(samples, Some(stats))
}

/// Recognises the ring forms: every body (or every body but one sitting at
/// the pole `(0, 0, 1)`) at a common planar radius and height.
pub fn ring_decompose_curved(state: &CurvedState, tol: f64) -> Result<RingDecomposition> {
    let pole = state
        .positions
        .iter()
        .position(|q| q.x.hypot(q.y) <= tol && (q.z - 1.0).abs() <= tol);
    let members: Vec<usize> = (0..state.len()).filter(|&i| Some(i) != pole).collect();
    let z: Vec<f64> = members.iter().map(|&i| state.positions[i].z).collect();
    let z_spread = spread(&z);
    if z_spread > tol {
        return Err(Error::NotARing { deviation: z_spread });
    }
    let xy: Vec<[f64; 2]> = state.positions.iter().map(|q| [q.x, q.y]).collect();
    let mut decomposition = ring::decompose_points(&xy, pole, tol)?;
    decomposition.z = Some(z.iter().sum::<f64>() / z.len() as f64);
    Ok(decomposition)
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        0.0
    } else {
        hi - lo
    }
}
