//! Piecewise cubic Hermite tables.
//!
//! Two slope rules are provided: not-a-knot cubic splines (C², used for mass
//! and radius tables that must be twice differentiable) and Fritsch-Carlson
//! monotone slopes (used for tabulated force laws, where positivity and
//! monotonicity of the data must survive interpolation).

use crate::error::{Error, Result};

/// Value and first two derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// A cubic Hermite interpolant on a strictly increasing grid.
///
/// Queries outside the grid are refused.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteTable {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

fn validate(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Invalid(format!(
            "table has {} abscissae but {} values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Invalid("table needs at least two points".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Invalid("table contains non-finite entries".into()));
    }
    if let Some(w) = x.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Invalid(format!(
            "table abscissae not strictly increasing at {}",
            w[1]
        )));
    }
    Ok(())
}

fn secants(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d = y
        .windows(2)
        .zip(&h)
        .map(|(w, h)| (w[1] - w[0]) / h)
        .collect();
    (h, d)
}

/// Solves a tridiagonal system in place (Thomas algorithm).
fn solve_tridiagonal(sub: &[f64], diag: &mut [f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let w = sub[i - 1] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
    }
}

impl HermiteTable {
    /// Cubic spline with not-a-knot end conditions.
    pub fn not_a_knot(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        validate(&x, &y)?;
        let n = x.len();
        let (h, d) = secants(&x, &y);
        let slopes = match n {
            2 => vec![d[0], d[0]],
            3 => {
                // single parabola through the three points
                let c = (d[1] - d[0]) / (x[2] - x[0]);
                vec![
                    d[0] - c * h[0],
                    d[0] + c * h[0],
                    d[1] + c * h[1],
                ]
            }
            _ => {
                let mut sub = vec![0.0; n - 1];
                let mut diag = vec![0.0; n];
                let mut sup = vec![0.0; n - 1];
                let mut rhs = vec![0.0; n];

                let span0 = x[2] - x[0];
                diag[0] = h[1];
                sup[0] = span0;
                rhs[0] = ((h[0] + 2.0 * span0) * h[1] * d[0] + h[0] * h[0] * d[1]) / span0;

                for i in 1..n - 1 {
                    sub[i - 1] = h[i];
                    diag[i] = 2.0 * (h[i - 1] + h[i]);
                    sup[i] = h[i - 1];
                    rhs[i] = 3.0 * (h[i] * d[i - 1] + h[i - 1] * d[i]);
                }

                let span1 = x[n - 1] - x[n - 3];
                sub[n - 2] = span1;
                diag[n - 1] = h[n - 3];
                rhs[n - 1] = (h[n - 2] * h[n - 2] * d[n - 3]
                    + (2.0 * span1 + h[n - 2]) * h[n - 3] * d[n - 2])
                    / span1;

                solve_tridiagonal(&sub, &mut diag, &sup, &mut rhs);
                rhs
            }
        };
        Ok(HermiteTable { x, y, slopes })
    }

    /// Monotone piecewise cubic (Fritsch-Carlson / PCHIP slopes).
    pub fn monotone(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        validate(&x, &y)?;
        let n = x.len();
        let (h, d) = secants(&x, &y);
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes = vec![d[0], d[0]];
        } else {
            for k in 1..n - 1 {
                if d[k - 1] * d[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    slopes[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
                }
            }
            slopes[0] = edge_slope(h[0], h[1], d[0], d[1]);
            slopes[n - 1] = edge_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
        }
        Ok(HermiteTable { x, y, slopes })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn lower(&self) -> f64 {
        self.x[0]
    }

    pub fn upper(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    fn locate(&self, t: f64) -> Result<usize> {
        let (lo, hi) = (self.lower(), self.upper());
        let slack = 1e-12 * (hi - lo).max(1.0);
        if !(t >= lo - slack && t <= hi + slack) {
            return Err(Error::Extrapolation { s: t, lo, hi });
        }
        let idx = self.x.partition_point(|&v| v <= t);
        Ok(idx.clamp(1, self.x.len() - 1) - 1)
    }

    /// Interpolated value.
    pub fn value(&self, t: f64) -> Result<f64> {
        Ok(self.jet(t)?.value)
    }

    /// Value with first and second derivative.
    pub fn jet(&self, t: f64) -> Result<Jet> {
        let k = self.locate(t)?;
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let (y0, y1) = (self.y[k], self.y[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);

        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let value = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;

        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        let d1 = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / h;

        let e00 = 12.0 * s - 6.0;
        let e10 = 6.0 * s - 4.0;
        let e01 = -12.0 * s + 6.0;
        let e11 = 6.0 * s - 2.0;
        let d2 = (e00 * y0 + e10 * m0 + e01 * y1 + e11 * m1) / (h * h);

        Ok(Jet { value, d1, d2 })
    }
}

// Three-point end slope, limited so the end interval stays monotone.
fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}
