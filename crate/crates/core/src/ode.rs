//! Dormand-Prince 5(4) with dense output and optional post-step projection.
//!
//! Step selection never looks at the sample grid, so samples at a common time
//! are identical whatever the sampling interval.

use crate::error::{Error, Result};
use crate::trajectory::IntegrationStats;

/// Smallest step before the integration is declared stiff.
pub const MIN_STEP: f64 = 1e-14;

const MAX_STEPS: usize = 5_000_000;

/// First-order system `y' = f(t, y)`.
pub(crate) trait OdeSystem {
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;

    /// Pulls `y` back onto a constraint manifold after an accepted step.
    fn project(&self, _y: &mut [f64]) -> Result<()> {
        Ok(())
    }

    fn projects(&self) -> bool {
        false
    }
}

/// Tolerances for the embedded error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel), ("abs_tol", self.abs)] {
            if !(v > 0.0 && v <= 1e-2) {
                return Err(Error::Invalid(format!("{name} must lie in (0, 1e-2], got {v}")));
            }
        }
        Ok(())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn scaled_norm(v: &[f64], y0: &[f64], y1: &[f64], tol: &Tolerances) -> f64 {
    let sum: f64 = v
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sk = tol.abs + tol.rel * a.abs().max(b.abs());
            (e / sk).powi(2)
        })
        .sum();
    (sum / v.len() as f64).sqrt()
}

struct Workspace {
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
    dense: [Vec<f64>; 5],
}

/// Integrates from `(t0, y0)` to `t_end`, calling `on_sample` at every time
/// in `sample_times` (which must be sorted and lie in `[t0, t_end]`).
pub(crate) fn integrate<S, F>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    tol: Tolerances,
    sample_times: &[f64],
    mut on_sample: F,
) -> Result<IntegrationStats>
where
    S: OdeSystem,
    F: FnMut(f64, &[f64]) -> Result<()>,
{
    tol.validate()?;
    if !(t_end > t0) {
        return Err(Error::Invalid(format!("t_end {t_end} must exceed start time {t0}")));
    }
    let dim = y0.len();
    let mut ws = Workspace {
        k: std::array::from_fn(|_| vec![0.0; dim]),
        stage: vec![0.0; dim],
        y_new: vec![0.0; dim],
        err: vec![0.0; dim],
        dense: std::array::from_fn(|_| vec![0.0; dim]),
    };
    let mut stats = IntegrationStats {
        rel_tol: tol.rel,
        abs_tol: tol.abs,
        steps_accepted: 0,
        steps_rejected: 0,
        rhs_evaluations: 0,
    };

    let mut y = y0.to_vec();
    let mut t = t0;
    let mut next_sample = 0;
    let mut scratch = vec![0.0; dim];

    while next_sample < sample_times.len() && sample_times[next_sample] <= t0 {
        on_sample(sample_times[next_sample], &y)?;
        next_sample += 1;
    }

    sys.rhs(t, &y, &mut ws.k[0])?;
    stats.rhs_evaluations += 1;
    let mut h = initial_step(sys, t, &y, &ws.k[0], t_end - t0, &tol, &mut stats)?;
    let mut last_rejected = false;

    while t < t_end {
        let remaining = t_end - t;
        if remaining <= 4.0 * f64::EPSILON * t_end.abs().max(1.0) {
            break;
        }
        if stats.steps_accepted + stats.steps_rejected > MAX_STEPS {
            return Err(Error::Stiffness { t, h });
        }
        h = h.min(remaining);
        if h < MIN_STEP {
            return Err(Error::Stiffness { t, h });
        }

        step(sys, t, &y, h, &mut ws)?;
        stats.rhs_evaluations += 6;

        for i in 0..dim {
            ws.err[i] = h
                * (E1 * ws.k[0][i]
                    + E3 * ws.k[2][i]
                    + E4 * ws.k[3][i]
                    + E5 * ws.k[4][i]
                    + E6 * ws.k[5][i]
                    + E7 * ws.k[6][i]);
        }
        let err = scaled_norm(&ws.err, &y, &ws.y_new, &tol);
        if !err.is_finite() {
            stats.steps_rejected += 1;
            h *= 0.2;
            last_rejected = true;
            continue;
        }

        if err <= 1.0 {
            stats.steps_accepted += 1;
            let t_new = if h == remaining { t_end } else { t + h };
            for i in 0..dim {
                let dy = ws.y_new[i] - y[i];
                let bspl = h * ws.k[0][i] - dy;
                ws.dense[0][i] = y[i];
                ws.dense[1][i] = dy;
                ws.dense[2][i] = bspl;
                ws.dense[3][i] = dy - h * ws.k[6][i] - bspl;
                ws.dense[4][i] = h
                    * (D1 * ws.k[0][i]
                        + D3 * ws.k[2][i]
                        + D4 * ws.k[3][i]
                        + D5 * ws.k[4][i]
                        + D6 * ws.k[5][i]
                        + D7 * ws.k[6][i]);
            }
            while next_sample < sample_times.len()
                && (sample_times[next_sample] <= t_new || t_new >= t_end)
            {
                let ts = sample_times[next_sample];
                let theta = (ts - t) / h;
                let theta1 = 1.0 - theta;
                for i in 0..dim {
                    scratch[i] = ws.dense[0][i]
                        + theta
                            * (ws.dense[1][i]
                                + theta1
                                    * (ws.dense[2][i]
                                        + theta * (ws.dense[3][i] + theta1 * ws.dense[4][i])));
                }
                if sys.projects() {
                    sys.project(&mut scratch)?;
                }
                on_sample(ts, &scratch)?;
                next_sample += 1;
            }

            std::mem::swap(&mut y, &mut ws.y_new);
            t = t_new;
            if sys.projects() {
                sys.project(&mut y)?;
                sys.rhs(t, &y, &mut ws.k[0])?;
                stats.rhs_evaluations += 1;
            } else {
                let (first, rest) = ws.k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
            }

            let mut factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if last_rejected {
                factor = factor.min(1.0);
            }
            h *= factor;
            last_rejected = false;
        } else {
            stats.steps_rejected += 1;
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            last_rejected = true;
        }
    }
    Ok(stats)
}

fn step<S: OdeSystem>(sys: &S, t: f64, y: &[f64], h: f64, ws: &mut Workspace) -> Result<()> {
    let dim = y.len();
    let Workspace { k, stage, y_new, .. } = ws;

    for i in 0..dim {
        stage[i] = y[i] + h * A21 * k[0][i];
    }
    sys.rhs(t + C2 * h, stage, &mut k[1])?;
    for i in 0..dim {
        stage[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
    }
    sys.rhs(t + C3 * h, stage, &mut k[2])?;
    for i in 0..dim {
        stage[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
    }
    sys.rhs(t + C4 * h, stage, &mut k[3])?;
    for i in 0..dim {
        stage[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
    }
    sys.rhs(t + C5 * h, stage, &mut k[4])?;
    for i in 0..dim {
        stage[i] = y[i]
            + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
    }
    sys.rhs(t + h, stage, &mut k[5])?;
    for i in 0..dim {
        y_new[i] = y[i]
            + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
    }
    sys.rhs(t + h, y_new, &mut k[6])?;
    Ok(())
}

fn initial_step<S: OdeSystem>(
    sys: &S,
    t: f64,
    y: &[f64],
    f0: &[f64],
    span: f64,
    tol: &Tolerances,
    stats: &mut IntegrationStats,
) -> Result<f64> {
    let d0 = scaled_norm(y, y, y, tol);
    let d1 = scaled_norm(f0, y, y, tol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
    .min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    sys.rhs(t + h0, &y1, &mut f1)?;
    stats.rhs_evaluations += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| (a - b) / h0).collect();
    let d2 = scaled_norm(&diff, y, y, tol);
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}
