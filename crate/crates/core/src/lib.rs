//! Flat and curved n-body dynamics with pluggable force laws.
//!
//! The crate is organised around a few building blocks:
//!
//! * [`force_law`]: positive kernels `f` on squared separations and the
//!   angular kernels derived from them, with monotonicity checks;
//! * [`flat`] and [`curved`]: equations of motion in the plane and on the
//!   sphere/hyperboloid, integrated by an adaptive Dormand-Prince scheme;
//! * [`ring`]: polar decomposition of ring states and gap diagnostics;
//! * [`homographic`]: exact rotating/pulsating regular-polygon orbits with
//!   time-dependent masses, and a solver for frozen-time configurations;
//! * [`io`]: deterministic CSV input/output.
//!
//! ```
//! use ringdyn::homographic::{synthesize_orbit, HomographicProfile, RadiusProfile};
//! use ringdyn::{gap_series, ForceLaw};
//!
//! let profile = HomographicProfile::new(
//!     5,
//!     RadiusProfile::sinusoid(1.0, 0.3, 0.7)?,
//!     1.0,
//!     None,
//!     ForceLaw::newtonian(),
//! )?;
//! let orbit = synthesize_orbit(&profile, 0.0, 20.0, 0.01)?;
//! assert!(orbit.max_residual < 1e-8);
//! let series = gap_series(&orbit.trajectory, 1e-9)?;
//! assert!(series.mu.iter().all(|m| (m - 0.4 * std::f64::consts::PI).abs() < 1e-9));
//! # Ok::<(), ringdyn::Error>(())
//! ```

pub mod curved;
pub mod error;
pub mod flat;
pub mod force_law;
pub mod homographic;
pub mod io;
pub mod mass;
mod ode;
pub mod quadrature;
pub mod ring;
pub mod spline;
pub mod trajectory;

pub use curved::{acceleration_curved, integrate_curved, odot, ring_decompose_curved, CurvedState, Sigma};
pub use error::{Error, Result};
pub use flat::{acceleration, angular_momentum, decompose_flat, integrate, residual, FlatState};
pub use force_law::{AngularKernel, ForceLaw, LawSpec, MonotonicityReport};
pub use mass::{BodyMass, MassModel};
pub use ode::{Tolerances, MIN_STEP};
pub use ring::{
    detect_local_minima, gap_function, gap_series, is_homographic, is_regular, GapSeries,
    HomographicReport, RingDecomposition, RingVariant,
};
pub use trajectory::{IntegrationOptions, IntegrationStats, Sample, Timed, Trajectory};
