//! Sampled trajectories shared by the flat and curved integrators.

use crate::error::{Error, Result};

/// Integrator bookkeeping attached to a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationStats {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evaluations: usize,
}

/// Anything carrying a time stamp.
pub trait Timed {
    fn time(&self) -> f64;
}

/// A state together with the body masses at its time.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<S> {
    pub state: S,
    pub masses: Vec<f64>,
}

/// Ordered samples with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    samples: Vec<Sample<S>>,
    stats: Option<IntegrationStats>,
}

impl<S: Timed> Trajectory<S> {
    pub fn new(samples: Vec<Sample<S>>, stats: Option<IntegrationStats>) -> Result<Self> {
        if let Some(w) = samples
            .windows(2)
            .find(|w| !(w[1].state.time() > w[0].state.time()))
        {
            return Err(Error::Invalid(format!(
                "trajectory times not strictly increasing at t = {}",
                w[1].state.time()
            )));
        }
        Ok(Trajectory { samples, stats })
    }

    pub fn samples(&self) -> &[Sample<S>] {
        &self.samples
    }

    pub fn stats(&self) -> Option<&IntegrationStats> {
        self.stats.as_ref()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.state.time()).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&Sample<S>> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&Sample<S>> {
        self.samples.last()
    }
}

/// Uniform sample grid `t0 + k dt` covering `[t0, t1]`.
pub(crate) fn sample_grid(t0: f64, t1: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Invalid(format!("sample_dt must be positive, got {dt}")));
    }
    if !(t1 >= t0) {
        return Err(Error::Invalid(format!("empty time span [{t0}, {t1}]")));
    }
    let count = ((t1 - t0) / dt + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| t0 + k as f64 * dt).collect())
}

/// Span, tolerances and sampling for an integration run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub sample_dt: f64,
}

impl IntegrationOptions {
    pub fn new(t_end: f64, rel_tol: f64, abs_tol: f64, sample_dt: f64) -> Self {
        IntegrationOptions {
            t_end,
            rel_tol,
            abs_tol,
            sample_dt,
        }
    }

    pub(crate) fn tolerances(&self) -> crate::ode::Tolerances {
        crate::ode::Tolerances {
            rel: self.rel_tol,
            abs: self.abs_tol,
        }
    }
}
