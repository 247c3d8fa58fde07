//! An exact two-body ring solution that is *not* homographic.
//!
//! With `s = k t`, the bodies sit at `B (+-s cot s, s)` rotated by `phi0`:
//! both stay on the circle of radius `r = B s / sin s` while their angles
//! `phi0 + s` and `phi0 + pi - s` move in opposite directions. The vertical
//! coordinate is linear in time and the horizontal one is held by the
//! mutual attraction provided each body carries
//! `m(t) = -k^2 g''(s) / (2 g(s) f(4 B^2 g(s)^2))`, `g(s) = s cot s`.
//!
//! The minimal gap switches pairs at `s = 0`, which makes this the simplest
//! trajectory on which the weighted rate `r^2 mu'` has a break.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Rotation2, Vector2};

use super::{OrbitBuilder, SynthesizedOrbit};
use crate::error::{Error, Result};
use crate::flat::FlatState;
use crate::force_law::ForceLaw;
use crate::trajectory::sample_grid;

// Taylor coefficients of s cot s in powers of s^2.
const COT_SERIES: [f64; 7] = [
    1.0,
    -1.0 / 3.0,
    -1.0 / 45.0,
    -2.0 / 945.0,
    -1.0 / 4725.0,
    -2.0 / 93555.0,
    -1382.0 / 638512875.0,
];

const SERIES_CUTOFF: f64 = 0.1;

/// `g(s) = s cot s` and its first two derivatives.
fn s_cot_s(s: f64) -> [f64; 3] {
    if s.abs() < SERIES_CUTOFF {
        let s2 = s * s;
        let (mut g, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for (k, c) in COT_SERIES.iter().enumerate().rev() {
            let p = 2 * k as i32;
            g = g * s2 + c;
            if k >= 1 {
                d1 = d1 * s2 + c * p as f64;
            }
            if k >= 1 {
                d2 = d2 * s2 + c * (p * (p - 1)) as f64;
            }
        }
        // d1 collected c_k * 2k * s^(2k-1), d2 collected c_k 2k(2k-1) s^(2k-2)
        [g, d1 * s, d2]
    } else {
        let (sn, cs) = s.sin_cos();
        let g = s * cs / sn;
        let csc2 = 1.0 / (sn * sn);
        [g, cs / sn - s * csc2, 2.0 * (g - 1.0) * csc2]
    }
}

/// Samples the counter-rotating pair on `[t0, t1]`; `|k t| < pi/2` is
/// required throughout.
pub fn counter_rotating_pair(
    k: f64,
    b: f64,
    phi0: f64,
    law: &ForceLaw,
    t0: f64,
    t1: f64,
    sample_dt: f64,
) -> Result<SynthesizedOrbit> {
    if !(b > 0.0 && k != 0.0 && k.is_finite()) {
        return Err(Error::Invalid(format!("need b > 0 and k != 0, got b = {b}, k = {k}")));
    }
    if !((k * t0).abs() < FRAC_PI_2 && (k * t1).abs() < FRAC_PI_2) {
        return Err(Error::Invalid("the pair exists only while |k t| < pi/2".into()));
    }
    let grid = sample_grid(t0, t1, sample_dt)?;
    let rot = Rotation2::new(phi0);
    let mut builder = OrbitBuilder::new(grid.len(), None);
    for &t in &grid {
        let s = k * t;
        let [g, dg, d2g] = s_cot_s(s);
        let x = b * g;
        let f = law.evaluate(4.0 * x * x)?;
        let m = -k * k * d2g / (2.0 * g * f);
        let q = vec![rot * Vector2::new(x, b * s), rot * Vector2::new(-x, b * s)];
        let v = vec![
            rot * Vector2::new(b * k * dg, b * k),
            rot * Vector2::new(-b * k * dg, b * k),
        ];
        let acc = vec![
            rot * Vector2::new(b * k * k * d2g, 0.0),
            rot * Vector2::new(-b * k * k * d2g, 0.0),
        ];
        let r = b * g.hypot(s);
        builder.push(FlatState::new(t, q, v)?, acc, vec![m, m], law, phi0 + s, r, m)?;
    }
    builder.finish()
}
