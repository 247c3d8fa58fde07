//! Ring coordinates of planar and curved states and the gap diagnostics
//! built on them.
//!
//! A ring state has every body (or every body but one sitting at the
//! centre/pole) at a common radius `r`, so it is described by `r` and the
//! bodies' polar angles. The minimal cyclic gap `mu` between neighbouring
//! angles, and the weighted rate `r^2 mu'`, are the quantities tracked along
//! trajectories.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::trajectory::{Timed, Trajectory};

const TWO_PI: f64 = 2.0 * PI;

/// Gaps within this distance of the minimum count as ties.
pub const TIE_TOL: f64 = 1e-12;

/// Default tolerance for [`is_regular`] and [`is_homographic`].
pub const DEFAULT_ANGLE_TOL: f64 = 1e-6;

/// Largest per-sample angular motion the tracker accepts.
pub const MAX_ANGLE_JUMP: f64 = PI / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RingVariant {
    /// Every body on the circle.
    AllOnCircle,
    /// One body at the centre (planar) or at the pole (curved).
    WithCenter,
}

impl RingVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            RingVariant::AllOnCircle => "all_on_circle",
            RingVariant::WithCenter => "with_center",
        }
    }
}

/// Polar description of a ring state.
#[derive(Debug, Clone, PartialEq)]
pub struct RingDecomposition {
    pub variant: RingVariant,
    pub radius: f64,
    /// Ring angles in `[0, 2 pi)`, strictly increasing.
    pub angles: Vec<f64>,
    /// `order[k]` is the body whose angle is `angles[k]`.
    pub order: Vec<usize>,
    /// Common height of the ring bodies for curved states.
    pub z: Option<f64>,
    /// Body at the centre or pole, for [`RingVariant::WithCenter`].
    pub pole_index: Option<usize>,
}

/// States that can be read as rings.
pub trait RingSnapshot: Timed {
    fn ring_decomposition(&self, tol: f64) -> Result<RingDecomposition>;
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TWO_PI);
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

/// Difference `a - b` reduced to `(-pi, pi]`.
fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TWO_PI);
    if d > PI {
        d - TWO_PI
    } else {
        d
    }
}

pub(crate) fn decompose_points(
    xy: &[[f64; 2]],
    center: Option<usize>,
    tol: f64,
) -> Result<RingDecomposition> {
    let members: Vec<usize> = (0..xy.len()).filter(|&i| Some(i) != center).collect();
    if members.len() < 2 {
        return Err(Error::Invalid(format!(
            "a ring needs at least two bodies besides the centre, got {}",
            members.len()
        )));
    }
    let radii: Vec<f64> = members.iter().map(|&i| xy[i][0].hypot(xy[i][1])).collect();
    let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > tol {
        return Err(Error::NotARing { deviation: hi - lo });
    }
    let radius = radii.iter().sum::<f64>() / radii.len() as f64;
    if !(radius > tol) {
        return Err(Error::NotARing { deviation: radius });
    }
    let mut tagged: Vec<(f64, usize)> = members
        .iter()
        .map(|&i| (wrap_angle(xy[i][1].atan2(xy[i][0])), i))
        .collect();
    tagged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    if let Some(w) = tagged.windows(2).find(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Geometry(format!(
            "bodies {} and {} share the angle {}",
            w[0].1, w[1].1, w[0].0
        )));
    }
    Ok(RingDecomposition {
        variant: if center.is_some() {
            RingVariant::WithCenter
        } else {
            RingVariant::AllOnCircle
        },
        radius,
        angles: tagged.iter().map(|t| t.0).collect(),
        order: tagged.iter().map(|t| t.1).collect(),
        z: None,
        pole_index: center,
    })
}

/// The `N` cyclic gaps of sorted angles, the last one wrapping around.
pub fn cyclic_gaps(angles: &[f64]) -> Vec<f64> {
    let n = angles.len();
    let mut gaps: Vec<f64> = angles.windows(2).map(|w| w[1] - w[0]).collect();
    if n >= 1 {
        gaps.push(TWO_PI + angles[0] - angles[n - 1]);
    }
    gaps
}

/// Index of the smallest gap; ties within [`TIE_TOL`] go to the lowest index.
fn argmin(gaps: &[f64]) -> (f64, usize) {
    let min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let j = gaps.iter().position(|&g| g <= min + TIE_TOL).unwrap_or(0);
    (min, j)
}

/// Minimal cyclic gap and the (0-based) index `j` of the gap
/// `angles[j+1] - angles[j]` realising it; `j = N - 1` is the wraparound gap.
pub fn gap_function(decomp: &RingDecomposition) -> (f64, usize) {
    argmin(&cyclic_gaps(&decomp.angles))
}

/// True when every cyclic gap equals `2 pi / N` within `tol`.
pub fn is_regular(decomp: &RingDecomposition, tol: f64) -> bool {
    let expected = TWO_PI / decomp.angles.len() as f64;
    cyclic_gaps(&decomp.angles)
        .iter()
        .all(|g| (g - expected).abs() <= tol)
}

/// Ring angles tracked continuously along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedRing {
    pub variant: RingVariant,
    pub times: Vec<f64>,
    pub radius: Vec<f64>,
    /// Ring bodies in the cyclic order of the first sample.
    pub cyclic_order: Vec<usize>,
    /// Unwrapped angles, `theta[k][slot]` for slot in `cyclic_order`.
    pub theta: Vec<Vec<f64>>,
    /// First-sample decomposition.
    pub initial: RingDecomposition,
}

impl TrackedRing {
    /// Cyclic gaps at sample `k`, in slot order.
    pub fn gaps(&self, k: usize) -> Vec<f64> {
        let th = &self.theta[k];
        let n = th.len();
        let mut g: Vec<f64> = th.windows(2).map(|w| w[1] - w[0]).collect();
        g.push(TWO_PI + th[0] - th[n - 1]);
        g
    }
}

/// Decomposes every sample and unwraps the angles body by body.
pub fn track_ring<S: RingSnapshot>(trajectory: &Trajectory<S>, ring_tol: f64) -> Result<TrackedRing> {
    let samples = trajectory.samples();
    let first = samples
        .first()
        .ok_or_else(|| Error::Invalid("empty trajectory".into()))?;
    let initial = first.state.ring_decomposition(ring_tol)?;
    let slots = initial.order.clone();
    let n_bodies = slots.iter().copied().max().unwrap_or(0) + 1;
    let mut slot_of = vec![usize::MAX; n_bodies.max(initial.pole_index.map_or(0, |p| p + 1))];
    for (slot, &body) in slots.iter().enumerate() {
        slot_of[body] = slot;
    }

    let mut times = Vec::with_capacity(samples.len());
    let mut radius = Vec::with_capacity(samples.len());
    let mut theta: Vec<Vec<f64>> = Vec::with_capacity(samples.len());
    let mut raw_prev = initial.angles.clone();

    for (k, sample) in samples.iter().enumerate() {
        let t = sample.state.time();
        let d = if k == 0 {
            initial.clone()
        } else {
            sample.state.ring_decomposition(ring_tol)?
        };
        if d.variant != initial.variant || d.pole_index != initial.pole_index {
            return Err(Error::Tracking {
                t,
                reason: "ring variant or centre body changed".into(),
            });
        }
        let mut raw = vec![0.0; slots.len()];
        for (angle, &body) in d.angles.iter().zip(&d.order) {
            let slot = slot_of.get(body).copied().unwrap_or(usize::MAX);
            if slot == usize::MAX {
                return Err(Error::Tracking {
                    t,
                    reason: format!("body {body} joined the ring"),
                });
            }
            raw[slot] = *angle;
        }
        let unwrapped: Vec<f64> = if k == 0 {
            raw.clone()
        } else {
            let prev = &theta[k - 1];
            let mut out = Vec::with_capacity(raw.len());
            for slot in 0..raw.len() {
                let jump = angle_diff(raw[slot], raw_prev[slot]);
                if jump.abs() > MAX_ANGLE_JUMP {
                    return Err(Error::Tracking {
                        t,
                        reason: format!(
                            "body {} moved {jump:.3} rad in one sample",
                            slots[slot]
                        ),
                    });
                }
                out.push(prev[slot] + jump);
            }
            out
        };
        let n = unwrapped.len();
        let ordered = unwrapped.windows(2).all(|w| w[1] > w[0])
            && unwrapped[n - 1] - unwrapped[0] < TWO_PI;
        if !ordered {
            return Err(Error::Tracking {
                t,
                reason: "cyclic order of the ring bodies changed".into(),
            });
        }
        raw_prev = raw;
        times.push(t);
        radius.push(d.radius);
        theta.push(unwrapped);
    }
    Ok(TrackedRing {
        variant: initial.variant,
        times,
        radius,
        cyclic_order: slots,
        theta,
        initial,
    })
}

/// Minimal-gap time series with its weighted rate and argmin intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSeries {
    pub variant: RingVariant,
    pub times: Vec<f64>,
    pub mu: Vec<f64>,
    /// Gap index (in the first sample's cyclic order) achieving the minimum.
    pub argmin_pair: Vec<usize>,
    pub radius: Vec<f64>,
    /// `r^2 mu'` by finite differences of the active gap.
    pub weighted_rate: Vec<f64>,
    pub interval_id: Vec<usize>,
    /// First sample time of every interval after the first.
    pub interval_breaks: Vec<f64>,
    /// All cyclic gaps per sample.
    pub gaps: Vec<Vec<f64>>,
}

// Derivative at x[e] of the parabola through three points.
fn three_point_derivative(x: [f64; 3], y: [f64; 3], e: usize) -> f64 {
    let xe = x[e];
    let mut d = 0.0;
    for i in 0..3 {
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        let dl = ((xe - x[a]) + (xe - x[b])) / ((x[i] - x[a]) * (x[i] - x[b]));
        d += y[i] * dl;
    }
    d
}

/// Builds the gap series of a ring trajectory.
pub fn gap_series<S: RingSnapshot>(trajectory: &Trajectory<S>, ring_tol: f64) -> Result<GapSeries> {
    let tracked = track_ring(trajectory, ring_tol)?;
    gap_series_from_tracked(&tracked)
}

pub fn gap_series_from_tracked(tracked: &TrackedRing) -> Result<GapSeries> {
    let len = tracked.times.len();
    if len < 3 {
        return Err(Error::Invalid(format!(
            "gap series needs at least three samples, got {len}"
        )));
    }
    let gaps: Vec<Vec<f64>> = (0..len).map(|k| tracked.gaps(k)).collect();
    let (mu, argmin_pair): (Vec<f64>, Vec<usize>) = gaps.iter().map(|g| argmin(g)).unzip();

    let mut interval_id = Vec::with_capacity(len);
    let mut interval_breaks = Vec::new();
    for k in 0..len {
        if k == 0 {
            interval_id.push(0);
        } else if argmin_pair[k] != argmin_pair[k - 1] {
            interval_id.push(interval_id[k - 1] + 1);
            interval_breaks.push(tracked.times[k]);
        } else {
            interval_id.push(interval_id[k - 1]);
        }
    }

    let t = &tracked.times;
    let weighted_rate = (0..len)
        .map(|k| {
            let j = argmin_pair[k];
            let starts = k == 0 || interval_id[k - 1] != interval_id[k];
            let ends = k == len - 1 || interval_id[k + 1] != interval_id[k];
            let (base, e) = if starts && k + 2 < len {
                (k, 0)
            } else if ends && k >= 2 {
                (k - 2, 2)
            } else if k == 0 {
                (0, 0)
            } else if k == len - 1 {
                (len - 3, 2)
            } else {
                (k - 1, 1)
            };
            let x = [t[base], t[base + 1], t[base + 2]];
            let y = [gaps[base][j], gaps[base + 1][j], gaps[base + 2][j]];
            let r = tracked.radius[k];
            r * r * three_point_derivative(x, y, e)
        })
        .collect();

    Ok(GapSeries {
        variant: tracked.variant,
        times: tracked.times.clone(),
        mu,
        argmin_pair,
        radius: tracked.radius.clone(),
        weighted_rate,
        interval_id,
        interval_breaks,
        gaps,
    })
}

impl GapSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Error budget of the weighted rate:
    /// `10 dt^2 max|mu'''| max r^2`, with `mu'''` estimated by third divided
    /// differences of every gap that is ever active.
    pub fn fd_tolerance(&self) -> f64 {
        let t = &self.times;
        let dt = t.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let mut active: Vec<usize> = self.argmin_pair.clone();
        active.sort_unstable();
        active.dedup();
        let mut third = 0.0f64;
        for &j in &active {
            let g: Vec<f64> = self.gaps.iter().map(|row| row[j]).collect();
            for k in 0..t.len().saturating_sub(3) {
                let d1: Vec<f64> = (0..3).map(|i| (g[k + i + 1] - g[k + i]) / (t[k + i + 1] - t[k + i])).collect();
                let d2: Vec<f64> = (0..2).map(|i| (d1[i + 1] - d1[i]) / (t[k + i + 2] - t[k + i])).collect();
                let d3 = (d2[1] - d2[0]) / (t[k + 3] - t[k]);
                third = third.max((6.0 * d3).abs());
            }
        }
        let r2 = self.radius.iter().map(|r| r * r).fold(0.0, f64::max);
        10.0 * dt * dt * third * r2
    }

    /// Sample indices `k` where `weighted_rate[k + 1] > weighted_rate[k] + tol`
    /// inside one interval.
    pub fn weighted_rate_increases(&self, tol: f64) -> Vec<usize> {
        (0..self.len().saturating_sub(1))
            .filter(|&k| {
                self.interval_id[k] == self.interval_id[k + 1]
                    && self.weighted_rate[k + 1] > self.weighted_rate[k] + tol
            })
            .collect()
    }

    /// `(break time, rate just before, rate just after)` for every break.
    pub fn break_limits(&self) -> Vec<(f64, f64, f64)> {
        (1..self.len())
            .filter(|&k| self.interval_id[k] != self.interval_id[k - 1])
            .map(|k| (self.times[k], self.weighted_rate[k - 1], self.weighted_rate[k]))
            .collect()
    }
}

/// Interior sample times where `mu` is a local minimum over `+-window`
/// samples and strictly below at least one neighbour.
pub fn detect_local_minima(series: &GapSeries, window: usize) -> Vec<f64> {
    let mu = &series.mu;
    let len = mu.len();
    let window = window.max(1);
    let mut out = Vec::new();
    for k in 1..len.saturating_sub(1) {
        let noise = 1e-12 * mu[k].abs().max(1.0);
        let lo = k.saturating_sub(window);
        let hi = (k + window).min(len - 1);
        let neighbours = (lo..=hi).filter(|&i| i != k);
        let mut strictly_below = false;
        let mut is_min = true;
        for i in neighbours {
            if mu[k] > mu[i] + noise {
                is_min = false;
                break;
            }
            if mu[k] < mu[i] - noise {
                strictly_below = true;
            }
        }
        if is_min && strictly_below {
            out.push(series.times[k]);
        }
    }
    out
}

/// Outcome of [`is_homographic`].
#[derive(Debug, Clone, PartialEq)]
pub struct HomographicReport {
    pub homographic: bool,
    pub relative_equilibrium: bool,
    /// `theta_i(0) - theta_1(0)` in cyclic order, when homographic.
    pub alphas: Option<Vec<f64>>,
    /// `theta_1(t)` (unwrapped), when homographic.
    pub phi_series: Option<Vec<f64>>,
    /// Largest drift of any angle difference from its initial value.
    pub max_offset_drift: f64,
    /// Spread of the ring radius over the trajectory.
    pub radius_spread: f64,
}

/// Tests whether the angle offsets `theta_i - theta_1` stay fixed.
pub fn is_homographic<S: RingSnapshot>(
    trajectory: &Trajectory<S>,
    ring_tol: f64,
    tol: f64,
) -> Result<HomographicReport> {
    Ok(homographic_report(&track_ring(trajectory, ring_tol)?, tol))
}

pub fn homographic_report(tracked: &TrackedRing, tol: f64) -> HomographicReport {
    let th0 = &tracked.theta[0];
    let alphas: Vec<f64> = th0.iter().map(|a| a - th0[0]).collect();
    let max_offset_drift = tracked
        .theta
        .iter()
        .flat_map(|th| {
            th.iter()
                .zip(&alphas)
                .map(move |(a, alpha)| (a - th[0] - alpha).abs())
        })
        .fold(0.0, f64::max);
    let lo = tracked.radius.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tracked.radius.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let radius_spread = hi - lo;
    let homographic = max_offset_drift <= tol;
    HomographicReport {
        homographic,
        relative_equilibrium: homographic && radius_spread <= tol,
        alphas: homographic.then(|| alphas),
        phi_series: homographic.then(|| tracked.theta.iter().map(|th| th[0]).collect()),
        max_offset_drift,
        radius_spread,
    }
}
