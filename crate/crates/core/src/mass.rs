//! Per-body masses, constant or time-dependent.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spline::HermiteTable;

/// Mass of one body.
#[derive(Debug, Clone, PartialEq)]
pub enum BodyMass {
    Constant(f64),
    /// `m(t)` from a not-a-knot cubic spline through `(t, m)` samples.
    Profile(Arc<HermiteTable>),
}

impl BodyMass {
    pub fn at(&self, t: f64) -> Result<f64> {
        let m = match self {
            BodyMass::Constant(m) => *m,
            BodyMass::Profile(table) => table.value(t)?,
        };
        if !(m > 0.0) {
            return Err(Error::Domain(format!("mass {m} not positive at t = {t}")));
        }
        Ok(m)
    }
}

/// Masses of all bodies.
#[derive(Debug, Clone, PartialEq)]
pub struct MassModel {
    bodies: Vec<BodyMass>,
}

impl MassModel {
    pub fn new(bodies: Vec<BodyMass>) -> Result<Self> {
        for b in &bodies {
            if let BodyMass::Constant(m) = b {
                if !(*m > 0.0 && m.is_finite()) {
                    return Err(Error::Invalid(format!("mass must be positive, got {m}")));
                }
            }
        }
        Ok(MassModel { bodies })
    }

    pub fn constant(masses: &[f64]) -> Result<Self> {
        Self::new(masses.iter().map(|&m| BodyMass::Constant(m)).collect())
    }

    pub fn equal(n: usize, m: f64) -> Result<Self> {
        Self::constant(&vec![m; n])
    }

    /// Spline profile through `(t, m)` samples, shared by `n` bodies.
    pub fn shared_profile(n: usize, times: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if masses.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::Invalid("mass table has nonpositive entries".into()));
        }
        let table = Arc::new(HermiteTable::not_a_knot(times, masses)?);
        Ok(MassModel {
            bodies: vec![BodyMass::Profile(table); n],
        })
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    pub fn bodies(&self) -> &[BodyMass] {
        &self.bodies
    }

    pub fn is_constant(&self) -> bool {
        self.bodies.iter().all(|b| matches!(b, BodyMass::Constant(_)))
    }

    pub fn mass(&self, body: usize, t: f64) -> Result<f64> {
        self.bodies[body].at(t)
    }

    pub fn at(&self, t: f64) -> Result<Vec<f64>> {
        self.bodies.iter().map(|b| b.at(t)).collect()
    }

    /// Fills `out` with the masses at `t` without allocating.
    pub(crate) fn fill(&self, t: f64, out: &mut [f64]) -> Result<()> {
        for (slot, b) in out.iter_mut().zip(&self.bodies) {
            *slot = b.at(t)?;
        }
        Ok(())
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.bodies.len() != n {
            return Err(Error::Invalid(format!(
                "mass model has {} bodies, state has {n}",
                self.bodies.len()
            )));
        }
        Ok(())
    }
}
