//! Scalar force kernels `f` on squared separations, the angular kernels
//! derived from them, and grid-based admissibility checks.
//!
//! A law is *admissible* when `sqrt(s) * f(s)` is decreasing; for such laws
//! the flat angular kernel `g(x) = sin(x) f(2 r^2 (1 - cos x))` is decreasing
//! on `(0, 2 pi)`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curved::Sigma;
use crate::error::{Error, Result};
use crate::spline::HermiteTable;

/// Smallest admissible squared separation unless configured otherwise.
pub const DEFAULT_DOMAIN_MIN: f64 = 1e-12;

/// Absolute tolerance on successive differences in the monotonicity checks.
pub const MONOTONE_TOL: f64 = 1e-12;

/// Gaps are sampled on `(GAP_EPS, 2 pi - GAP_EPS)`.
pub const GAP_EPS: f64 = 1e-6;

/// One term `coeff * s^(-exponent)` of a quasihomogeneous law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub coeff: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LawKind {
    /// `f(s) = s^(-3/2)`.
    Newtonian,
    /// `f(s) = sum_i a_i s^(-gamma_i)` with `a_i, gamma_i > 0`.
    Quasihomogeneous(Vec<PowerTerm>),
    /// Monotone cubic interpolation of `(s, f(s))` samples.
    Tabulated(HermiteTable),
}

/// A positive scalar force kernel on squared separations.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceLaw {
    kind: LawKind,
    domain_min: f64,
}

/// Outcome of a monotonicity scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    /// True when no sampled step increases by more than [`MONOTONE_TOL`].
    pub decreasing: bool,
    /// Left end of the first increasing step, if any.
    pub first_violation: Option<f64>,
}

fn scan(points: impl IntoIterator<Item = Result<(f64, f64)>>) -> Result<MonotonicityReport> {
    let mut prev: Option<(f64, f64)> = None;
    for p in points {
        let (at, value) = p?;
        if let Some((prev_at, prev_value)) = prev {
            if value - prev_value > MONOTONE_TOL {
                return Ok(MonotonicityReport {
                    decreasing: false,
                    first_violation: Some(prev_at),
                });
            }
        }
        prev = Some((at, value));
    }
    Ok(MonotonicityReport {
        decreasing: true,
        first_violation: None,
    })
}

fn check_grid_points(grid_points: usize) -> Result<()> {
    if grid_points < 2 {
        return Err(Error::Invalid(format!(
            "grid_points must be at least 2, got {grid_points}"
        )));
    }
    Ok(())
}

impl ForceLaw {
    pub fn newtonian() -> Self {
        ForceLaw {
            kind: LawKind::Newtonian,
            domain_min: DEFAULT_DOMAIN_MIN,
        }
    }

    /// Builds `sum coeff * s^(-exponent)` from `(coeff, exponent)` pairs.
    pub fn quasihomogeneous(terms: &[(f64, f64)]) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Invalid("quasihomogeneous law needs at least one term".into()));
        }
        let mut out = Vec::with_capacity(terms.len());
        for &(coeff, exponent) in terms {
            if !(coeff > 0.0 && coeff.is_finite()) {
                return Err(Error::Invalid(format!("coefficient must be positive, got {coeff}")));
            }
            if !(exponent > 0.0 && exponent.is_finite()) {
                return Err(Error::Invalid(format!("exponent must be positive, got {exponent}")));
            }
            out.push(PowerTerm { coeff, exponent });
        }
        Ok(ForceLaw {
            kind: LawKind::Quasihomogeneous(out),
            domain_min: DEFAULT_DOMAIN_MIN,
        })
    }

    /// Monotone-cubic law through `(s, f)` samples; `s` strictly increasing
    /// and positive, `f` positive.
    pub fn tabulated(s: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if s.first().is_some_and(|&v| v <= 0.0) {
            return Err(Error::Invalid("tabulated law needs s > 0".into()));
        }
        if f.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Invalid("tabulated law needs f > 0".into()));
        }
        let table = HermiteTable::monotone(s, f)?;
        Ok(ForceLaw {
            kind: LawKind::Tabulated(table),
            domain_min: DEFAULT_DOMAIN_MIN,
        })
    }

    /// Reads a tabulated law from CSV with header `s,f`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["s", "f"] {
            return Err(Error::Invalid(format!(
                "{}: expected header \"s,f\"",
                path.display()
            )));
        }
        let (mut s, mut f) = (Vec::new(), Vec::new());
        for record in reader.records() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record[i].trim().parse::<f64>().map_err(|e| {
                    Error::Invalid(format!("{}: bad number {:?}: {e}", path.display(), &record[i]))
                })
            };
            s.push(parse(0)?);
            f.push(parse(1)?);
        }
        Self::tabulated(s, f)
    }

    pub fn with_domain_min(mut self, domain_min: f64) -> Result<Self> {
        if !(domain_min > 0.0) {
            return Err(Error::Invalid(format!("domain_min must be positive, got {domain_min}")));
        }
        self.domain_min = domain_min;
        Ok(self)
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn domain_min(&self) -> f64 {
        self.domain_min
    }

    fn check_domain(&self, s: f64) -> Result<()> {
        if !(s > 0.0) || s < self.domain_min {
            return Err(Error::Domain(format!(
                "s = {s} outside (0, inf) with domain_min {}",
                self.domain_min
            )));
        }
        Ok(())
    }

    /// `f(s)`.
    pub fn evaluate(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        self.evaluate_positive(s)
    }

    /// `f(s)` for any `s > 0`, ignoring `domain_min`.
    ///
    /// `domain_min` guards the dynamics against collisions; kernel scans
    /// legitimately probe separations below it.
    pub(crate) fn evaluate_positive(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::Domain(format!("s = {s} outside (0, inf)")));
        }
        Ok(match &self.kind {
            LawKind::Newtonian => 1.0 / (s * s.sqrt()),
            LawKind::Quasihomogeneous(terms) => {
                terms.iter().map(|t| t.coeff * s.powf(-t.exponent)).sum()
            }
            LawKind::Tabulated(table) => table.value(s)?,
        })
    }

    /// `f'(s)`.
    pub fn derivative(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(match &self.kind {
            LawKind::Newtonian => -1.5 / (s * s * s.sqrt()),
            LawKind::Quasihomogeneous(terms) => terms
                .iter()
                .map(|t| -t.exponent * t.coeff * s.powf(-t.exponent - 1.0))
                .sum(),
            LawKind::Tabulated(table) => table.jet(s)?.d1,
        })
    }

    /// Admissibility metadata: is `sqrt(s) f(s)` decreasing?
    ///
    /// Exact for the closed-form kinds (every exponent above 1/2); for
    /// tabulated laws the scan runs over the table range.
    pub fn is_admissible(&self) -> bool {
        match &self.kind {
            LawKind::Newtonian => true,
            LawKind::Quasihomogeneous(terms) => terms.iter().all(|t| t.exponent > 0.5),
            LawKind::Tabulated(table) => self
                .check_sqrt_decreasing(table.lower(), table.upper(), 4096)
                .map(|r| r.decreasing)
                .unwrap_or(false),
        }
    }

    /// Samples `h(s) = sqrt(s) f(s)` on a log-spaced grid over
    /// `[s_min, s_max]` and reports the first increasing step.
    pub fn check_sqrt_decreasing(
        &self,
        s_min: f64,
        s_max: f64,
        grid_points: usize,
    ) -> Result<MonotonicityReport> {
        check_grid_points(grid_points)?;
        if !(s_min > 0.0 && s_min < s_max) {
            return Err(Error::Invalid(format!(
                "need 0 < s_min < s_max, got [{s_min}, {s_max}]"
            )));
        }
        let (lo, hi) = (s_min.ln(), s_max.ln());
        let last = grid_points - 1;
        scan((0..grid_points).map(|k| {
            let s = match k {
                0 => s_min,
                k if k == last => s_max,
                k => (lo + (hi - lo) * k as f64 / last as f64).exp(),
            };
            Ok((s, s.sqrt() * self.evaluate(s)?))
        }))
    }
}

/// Force-law description as it appears in scenario configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LawSpec {
    Newtonian,
    Quasihomogeneous { terms: Vec<[f64; 2]> },
    Tabulated { path: PathBuf },
}

impl LawSpec {
    /// Builds the law; relative table paths resolve against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<ForceLaw> {
        match self {
            LawSpec::Newtonian => Ok(ForceLaw::newtonian()),
            LawSpec::Quasihomogeneous { terms } => {
                let pairs: Vec<(f64, f64)> = terms.iter().map(|t| (t[0], t[1])).collect();
                ForceLaw::quasihomogeneous(&pairs)
            }
            LawSpec::Tabulated { path } => ForceLaw::from_csv(&base_dir.join(path)),
        }
    }
}

/// Where an angular kernel lives.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelKind {
    /// `g(x) = sin(x) f(2 r^2 u)` with `u = 1 - cos x`.
    Flat(ForceLaw),
    /// `g(x) = sin(x) (2 r^2 u - sigma (r^2 u)^2)^(-3/2)`.
    Curved(Sigma),
}

/// The angular kernel that drives the tangential equation of a ring.
///
/// Force laws only ever see squared chords; the translation from a gap `x`
/// to the chord `2 r^2 (1 - cos x)` lives here.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularKernel {
    kind: KernelKind,
    radius: f64,
}

// 1 - cos x without cancellation near zero.
fn one_minus_cos(x: f64) -> f64 {
    let h = (0.5 * x).sin();
    2.0 * h * h
}

impl AngularKernel {
    pub fn flat(law: ForceLaw, radius: f64) -> Result<Self> {
        Self::new(KernelKind::Flat(law), radius)
    }

    pub fn curved(sigma: Sigma, radius: f64) -> Result<Self> {
        Self::new(KernelKind::Curved(sigma), radius)
    }

    fn new(kind: KernelKind, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Invalid(format!("kernel radius must be positive, got {radius}")));
        }
        Ok(AngularKernel { kind, radius })
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Law seen along the chord: `F(y)` where `y = 2 r^2 (1 - cos x)`.
    ///
    /// In the curved case `2 r^2 u - sigma (r^2 u)^2 = y - sigma y^2 / 4`.
    fn chord_law(&self, y: f64, x: f64) -> Result<f64> {
        match &self.kind {
            KernelKind::Flat(law) => law.evaluate_positive(y),
            KernelKind::Curved(sigma) => {
                let denominator = y - sigma.value() * 0.25 * y * y;
                if !(denominator > 0.0) {
                    return Err(Error::KernelSingular { x });
                }
                Ok(denominator.powf(-1.5))
            }
        }
    }

    /// `g(x)` for a gap `x` in `(0, 2 pi)`.
    pub fn value(&self, x: f64) -> Result<f64> {
        let y = 2.0 * self.radius * self.radius * one_minus_cos(x);
        Ok(x.sin() * self.chord_law(y, x)?)
    }

    fn uniform_gaps(grid_points: usize, upper: f64) -> impl Iterator<Item = f64> {
        let last = (grid_points - 1) as f64;
        (0..grid_points).map(move |k| GAP_EPS + (upper - GAP_EPS) * k as f64 / last)
    }

    /// Samples `g` uniformly on `(eps, 2 pi - eps)` and reports the first
    /// increasing step (by gap).
    pub fn check_g_decreasing(&self, grid_points: usize) -> Result<MonotonicityReport> {
        check_grid_points(grid_points)?;
        // evaluate everything first so a singular gap is reported even past
        // the first violation
        let points = Self::uniform_gaps(grid_points, 2.0 * PI - GAP_EPS)
            .map(|x| Ok((x, self.value(x)?)))
            .collect::<Result<Vec<_>>>()?;
        scan(points.into_iter().map(Ok))
    }

    /// Checks the chord-form monotonicity condition: `sqrt(y) F(y)`
    /// decreasing over every chord `y = 2 r^2 (1 - cos x)` a ring of this
    /// radius can realise (`x` uniform on `(eps, pi]`). Violations are
    /// reported by gap.
    ///
    /// For flat kernels this is the law's own admissibility restricted to
    /// `(0, 4 r^2]`. For `sigma = +1` it fails exactly when `4 r^2 > 8/5`,
    /// i.e. `r > sqrt(10)/5`.
    pub fn check_chord_hypothesis(&self, grid_points: usize) -> Result<MonotonicityReport> {
        check_grid_points(grid_points)?;
        let r2 = self.radius * self.radius;
        let points = Self::uniform_gaps(grid_points, PI)
            .map(|x| {
                let y = 2.0 * r2 * one_minus_cos(x);
                Ok((x, y.sqrt() * self.chord_law(y, x)?))
            })
            .collect::<Result<Vec<_>>>()?;
        scan(points.into_iter().map(Ok))
    }
}
