//! Planar n-body dynamics `q_i'' = sum_j m_j (q_j - q_i) f(|q_j - q_i|^2)`
//! with per-body, possibly time-dependent masses.

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::force_law::ForceLaw;
use crate::mass::MassModel;
use crate::ode::{self, OdeSystem};
use crate::ring::{self, RingDecomposition, RingSnapshot};
use crate::trajectory::{sample_grid, IntegrationOptions, Sample, Timed, Trajectory};

/// Positions and velocities of `n >= 1` bodies in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatState {
    time: f64,
    positions: Vec<Vector2<f64>>,
    velocities: Vec<Vector2<f64>>,
}

impl FlatState {
    pub fn new(time: f64, positions: Vec<Vector2<f64>>, velocities: Vec<Vector2<f64>>) -> Result<Self> {
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
            || positions.iter().chain(&velocities).any(|v| !(v.x.is_finite() && v.y.is_finite()))
        {
            return Err(Error::Invalid("state contains non-finite values".into()));
        }
        Ok(FlatState {
            time,
            positions,
            velocities,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn positions(&self) -> &[Vector2<f64>] {
        &self.positions
    }

    pub fn velocities(&self) -> &[Vector2<f64>] {
        &self.velocities
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Smallest pairwise squared distance (infinite for a single body).
    pub fn min_pair_dist2(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.min((self.positions[j] - self.positions[i]).norm_squared());
            }
        }
        best
    }

    fn from_flat(time: f64, y: &[f64]) -> Self {
        let n = y.len() / 4;
        let vec = |k: usize| Vector2::new(y[2 * k], y[2 * k + 1]);
        FlatState {
            time,
            positions: (0..n).map(vec).collect(),
            velocities: (n..2 * n).map(vec).collect(),
        }
    }

    fn to_flat(&self) -> Vec<f64> {
        self.positions
            .iter()
            .chain(&self.velocities)
            .flat_map(|v| [v.x, v.y])
            .collect()
    }
}

impl Timed for FlatState {
    fn time(&self) -> f64 {
        self.time
    }
}

impl RingSnapshot for FlatState {
    fn ring_decomposition(&self, tol: f64) -> Result<RingDecomposition> {
        decompose_flat(self, tol)
    }
}

/// Ring decomposition of a planar state: every body on one circle about the
/// origin, or all but one with the remaining body at the origin.
pub fn decompose_flat(state: &FlatState, tol: f64) -> Result<RingDecomposition> {
    let center = state.positions.iter().position(|q| q.norm() <= tol);
    let xy: Vec<[f64; 2]> = state.positions.iter().map(|q| [q.x, q.y]).collect();
    ring::decompose_points(&xy, center, tol)
}

fn accelerations_into(
    positions: &[Vector2<f64>],
    masses: &[f64],
    law: &ForceLaw,
    out: &mut [Vector2<f64>],
) -> Result<()> {
    out.iter_mut().for_each(|a| *a = Vector2::zeros());
    let n = positions.len();
    for i in 0..n {
        for j in i + 1..n {
            let d = positions[j] - positions[i];
            let dist2 = d.norm_squared();
            if dist2 < law.domain_min() {
                return Err(Error::Collision { i, j, dist2 });
            }
            let f = law.evaluate(dist2)?;
            out[i] += masses[j] * f * d;
            out[j] -= masses[i] * f * d;
        }
    }
    Ok(())
}

/// Accelerations of every body at the state's time.
pub fn acceleration(state: &FlatState, masses: &MassModel, law: &ForceLaw) -> Result<Vec<Vector2<f64>>> {
    masses.check_len(state.len())?;
    let m = masses.at(state.time)?;
    let mut out = vec![Vector2::zeros(); state.len()];
    accelerations_into(&state.positions, &m, law, &mut out)?;
    Ok(out)
}

/// `sum_i m_i (x_i vy_i - y_i vx_i)`.
pub fn angular_momentum(state: &FlatState, masses: &[f64]) -> f64 {
    state
        .positions
        .iter()
        .zip(&state.velocities)
        .zip(masses)
        .map(|((q, v), m)| m * (q.x * v.y - q.y * v.x))
        .sum()
}

/// Max-norm defect of claimed accelerations, relative to `1 + max |a_i|`.
pub fn residual(
    state: &FlatState,
    accel_claim: &[Vector2<f64>],
    masses: &MassModel,
    law: &ForceLaw,
) -> Result<f64> {
    if accel_claim.len() != state.len() {
        return Err(Error::Invalid(format!(
            "{} claimed accelerations for {} bodies",
            accel_claim.len(),
            state.len()
        )));
    }
    let exact = acceleration(state, masses, law)?;
    let scale = 1.0 + exact.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let defect = exact
        .iter()
        .zip(accel_claim)
        .map(|(a, c)| (c - a).norm())
        .fold(0.0, f64::max);
    Ok(defect / scale)
}

struct FlatSystem<'a> {
    n: usize,
    masses: &'a MassModel,
    law: &'a ForceLaw,
}

impl OdeSystem for FlatSystem<'_> {
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.n;
        let positions: Vec<Vector2<f64>> = (0..n).map(|k| Vector2::new(y[2 * k], y[2 * k + 1])).collect();
        let mut m = vec![0.0; n];
        self.masses.fill(t, &mut m)?;
        let mut acc = vec![Vector2::zeros(); n];
        accelerations_into(&positions, &m, self.law, &mut acc)?;
        dy[..2 * n].copy_from_slice(&y[2 * n..]);
        for (k, a) in acc.iter().enumerate() {
            dy[2 * n + 2 * k] = a.x;
            dy[2 * n + 2 * k + 1] = a.y;
        }
        Ok(())
    }
}

/// Integrates the planar equations with adaptive Dormand-Prince 5(4),
/// sampling the dense output on `t0 + k * sample_dt`.
pub fn integrate(
    initial: &FlatState,
    masses: &MassModel,
    law: &ForceLaw,
    options: &IntegrationOptions,
) -> Result<Trajectory<FlatState>> {
    masses.check_len(initial.len())?;
    let t0 = initial.time;
    if !(options.t_end > t0) {
        return Err(Error::Invalid(format!(
            "t_end {} must exceed the initial time {t0}",
            options.t_end
        )));
    }
    let grid = sample_grid(t0, options.t_end, options.sample_dt)?;
    let system = FlatSystem {
        n: initial.len(),
        masses,
        law,
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
                state: FlatState::from_flat(t, y),
                masses: masses.at(t)?,
            });
            Ok(())
        },
    )?;
    Trajectory::new(samples, Some(stats))
}
