//! Frozen-time polygonal configurations.
//!
//! For ring angles `alpha_i` with masses `m_i` on a circle of radius `r`,
//! a homographic orbit requires for every body `i`
//!
//! ```text
//! sum_{j != i} m_j (1 - cos d_ij) F(2 r^2 (1 - cos d_ij)) = A^2
//! sum_{j != i} m_j  sin d_ij      F(2 r^2 (1 - cos d_ij)) = 0,   d_ij = alpha_j - alpha_i
//! ```
//!
//! These `2n` equations in `n - 1` angles (after fixing `alpha_1 = 0`) are
//! solved in the least-squares sense by damped Gauss-Newton from random
//! ordered starts.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::force_law::ForceLaw;

/// Max-norm residual below which a start counts as converged.
pub const CONVERGENCE_TOL: f64 = 1e-10;

/// Two solutions closer than this (per angle, circularly) are the same.
pub const DEDUP_TOL: f64 = 1e-6;

pub const MAX_ITERATIONS: usize = 100;

const MIN_DAMPING: f64 = 1e-6;
const TWO_PI: f64 = 2.0 * PI;

/// One configuration with its residual.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalConfiguration {
    /// `0 = alpha_1 < ... < alpha_n < 2 pi`.
    pub alphas: Vec<f64>,
    pub masses: Vec<f64>,
    pub r: f64,
    /// `A^2`, prescribed or read off the first radial equation.
    pub a2: f64,
    /// Max-norm of all `2n` residuals.
    pub residual: f64,
}

/// Result of one Gauss-Newton run.
#[derive(Debug, Clone, PartialEq)]
pub struct StartRun {
    pub start: Vec<f64>,
    pub endpoint: PolygonalConfiguration,
    pub converged: bool,
    pub iterations: usize,
}

/// Outcome of the multistart search.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationReport {
    /// Distinct converged configurations, sorted by residual then angles.
    pub solutions: Vec<PolygonalConfiguration>,
    pub starts: usize,
    pub converged: usize,
    /// Lowest-residual endpoint over all starts, converged or not.
    pub best: Option<PolygonalConfiguration>,
    pub runs: Vec<StartRun>,
}

struct Problem<'a> {
    masses: &'a [f64],
    r: f64,
    /// Prescribed `A^2`; `None` eliminates it through the first radial row.
    a2: Option<f64>,
    law: &'a ForceLaw,
}

/// `(u F, sin F)` at the angle difference `d` and their `d`-derivatives.
struct PairTerms {
    radial: f64,
    tangential: f64,
    d_radial: f64,
    d_tangential: f64,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.masses.len()
    }

    fn pair(&self, d: f64) -> Result<PairTerms> {
        let h = (0.5 * d).sin();
        let u = 2.0 * h * h;
        let (sn, cs) = d.sin_cos();
        let r2 = self.r * self.r;
        let y = 2.0 * r2 * u;
        let f = self.law.evaluate(y)?;
        let fp = self.law.derivative(y)?;
        Ok(PairTerms {
            radial: u * f,
            tangential: sn * f,
            d_radial: sn * (f + 2.0 * r2 * u * fp),
            d_tangential: cs * f + 2.0 * r2 * sn * sn * fp,
        })
    }

    /// Radial sums `R_i`, tangential sums `T_i` and their gradients in the
    /// full angle vector.
    fn sums(&self, alphas: &[f64], with_jacobian: bool) -> Result<Sums> {
        let n = self.n();
        let mut s = Sums {
            radial: vec![0.0; n],
            tangential: vec![0.0; n],
            d_radial: DMatrix::zeros(if with_jacobian { n } else { 0 }, n),
            d_tangential: DMatrix::zeros(if with_jacobian { n } else { 0 }, n),
        };
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let p = self.pair(alphas[j] - alphas[i])?;
                let m = self.masses[j];
                s.radial[i] += m * p.radial;
                s.tangential[i] += m * p.tangential;
                if with_jacobian {
                    s.d_radial[(i, j)] += m * p.d_radial;
                    s.d_radial[(i, i)] -= m * p.d_radial;
                    s.d_tangential[(i, j)] += m * p.d_tangential;
                    s.d_tangential[(i, i)] -= m * p.d_tangential;
                }
            }
        }
        Ok(s)
    }

    fn a2_of(&self, sums: &Sums) -> f64 {
        self.a2.unwrap_or(sums.radial[0])
    }

    /// All `2n` residuals `(R_1 - A^2, ..., R_n - A^2, T_1, ..., T_n)`.
    fn full_residuals(&self, alphas: &[f64]) -> Result<(Vec<f64>, f64)> {
        let s = self.sums(alphas, false)?;
        let a2 = self.a2_of(&s);
        let mut out: Vec<f64> = s.radial.iter().map(|v| v - a2).collect();
        out.extend(&s.tangential);
        Ok((out, a2))
    }

    /// Residuals and Jacobian in the unknowns `alpha_2..alpha_n`; the first
    /// radial row is dropped when it defines `A^2`.
    fn system(&self, alphas: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let n = self.n();
        let s = self.sums(alphas, true)?;
        let a2 = self.a2_of(&s);
        let first_radial = usize::from(self.a2.is_none());
        let rows = 2 * n - first_radial;
        let mut res = DVector::zeros(rows);
        let mut jac = DMatrix::zeros(rows, n - 1);
        let mut row = 0;
        for i in first_radial..n {
            res[row] = s.radial[i] - a2;
            for k in 1..n {
                let mut d = s.d_radial[(i, k)];
                if self.a2.is_none() {
                    d -= s.d_radial[(0, k)];
                }
                jac[(row, k - 1)] = d;
            }
            row += 1;
        }
        for i in 0..n {
            res[row] = s.tangential[i];
            for k in 1..n {
                jac[(row, k - 1)] = s.d_tangential[(i, k)];
            }
            row += 1;
        }
        if jac.iter().chain(res.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Solver("non-finite residual or Jacobian".into()));
        }
        Ok((res, jac))
    }

    fn configuration(&self, alphas: Vec<f64>) -> Result<PolygonalConfiguration> {
        let (res, a2) = self.full_residuals(&alphas)?;
        Ok(PolygonalConfiguration {
            alphas,
            masses: self.masses.to_vec(),
            r: self.r,
            a2,
            residual: res.iter().fold(0.0, |m, v| m.max(v.abs())),
        })
    }
}

struct Sums {
    radial: Vec<f64>,
    tangential: Vec<f64>,
    d_radial: DMatrix<f64>,
    d_tangential: DMatrix<f64>,
}

fn ordered(alphas: &[f64]) -> bool {
    alphas.windows(2).all(|w| w[1] > w[0]) && alphas.last().is_some_and(|&a| a < TWO_PI)
}

fn validate(masses: &[f64], r: f64, a: Option<f64>) -> Result<Option<f64>> {
    if masses.len() < 2 {
        return Err(Error::Invalid(format!(
            "configuration needs at least two masses, got {}",
            masses.len()
        )));
    }
    if let Some(m) = masses.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
        return Err(Error::Invalid(format!("masses must be positive, got {m}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Invalid(format!("radius must be positive, got {r}")));
    }
    match a {
        None => Ok(None),
        Some(a) => {
            let a2 = a * a;
            if !(a2 > 0.0 && a2.is_finite()) {
                return Err(Error::Invalid(format!("prescribed A^2 must be positive, got {a2}")));
            }
            Ok(Some(a2))
        }
    }
}

/// The `2n` residuals `(R_i - A^2, T_i)` at the given angles. With `a`
/// unset, `A^2` is taken from the first radial equation.
pub fn configuration_residuals(
    alphas: &[f64],
    masses: &[f64],
    r: f64,
    a: Option<f64>,
    law: &ForceLaw,
) -> Result<Vec<f64>> {
    let a2 = validate(masses, r, a)?;
    if alphas.len() != masses.len() {
        return Err(Error::Invalid(format!(
            "{} angles for {} masses",
            alphas.len(),
            masses.len()
        )));
    }
    let problem = Problem { masses, r, a2, law };
    Ok(problem.full_residuals(alphas)?.0)
}

/// Runs damped Gauss-Newton from one start. The start is shifted so that
/// its first angle is zero; the shifted angles must stay strictly ordered.
pub fn solve_from_start(
    masses: &[f64],
    r: f64,
    a: Option<f64>,
    law: &ForceLaw,
    start: &[f64],
) -> Result<StartRun> {
    let a2 = validate(masses, r, a)?;
    if start.len() != masses.len() {
        return Err(Error::Invalid(format!(
            "{} start angles for {} masses",
            start.len(),
            masses.len()
        )));
    }
    let problem = Problem { masses, r, a2, law };
    let gauged: Vec<f64> = start.iter().map(|a| (a - start[0]).rem_euclid(TWO_PI)).collect();
    if !ordered(&gauged) {
        return Err(Error::Invalid("start angles are not in cyclic order".into()));
    }
    run(&problem, gauged)
}

fn max_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn run(problem: &Problem, start: Vec<f64>) -> Result<StartRun> {
    let mut alphas = start.clone();
    let (mut res, mut jac) = problem.system(&alphas)?;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && max_norm(&res) > CONVERGENCE_TOL {
        iterations += 1;
        let step = jac
            .clone()
            .svd(true, true)
            .solve(&(-&res), 1e-14)
            .map_err(|e| Error::Solver(e.to_string()))?;
        let current = res.norm();
        let mut damping = 1.0;
        let mut accepted = None;
        while damping >= MIN_DAMPING {
            let mut trial = alphas.clone();
            for k in 1..trial.len() {
                trial[k] += damping * step[k - 1];
            }
            if ordered(&trial) && trial[1] > 0.0 {
                if let Ok((r_new, j_new)) = problem.system(&trial) {
                    if r_new.norm() < current {
                        accepted = Some((trial, r_new, j_new));
                        break;
                    }
                }
            }
            damping *= 0.5;
        }
        match accepted {
            Some((a, r_new, j_new)) => {
                alphas = a;
                res = r_new;
                jac = j_new;
            }
            None => break,
        }
    }
    let endpoint = problem.configuration(alphas)?;
    Ok(StartRun {
        start,
        converged: endpoint.residual <= CONVERGENCE_TOL,
        endpoint,
        iterations,
    })
}

fn circular_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(TWO_PI);
            d.min(TWO_PI - d)
        })
        .fold(0.0, f64::max)
}

fn compare(a: &PolygonalConfiguration, b: &PolygonalConfiguration) -> Ordering {
    a.residual.total_cmp(&b.residual).then_with(|| {
        a.alphas
            .iter()
            .zip(&b.alphas)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Multistart search for polygonal configurations with the given mass
/// order. Starts are sorted uniform draws on `(0, 2 pi)` from a ChaCha8
/// stream seeded with `seed`.
pub fn solve_polygonal_configuration(
    masses: &[f64],
    r: f64,
    a: Option<f64>,
    law: &ForceLaw,
    starts: usize,
    seed: u64,
) -> Result<ConfigurationReport> {
    let a2 = validate(masses, r, a)?;
    let problem = Problem { masses, r, a2, law };
    let n = masses.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut runs = Vec::with_capacity(starts);
    for _ in 0..starts {
        let mut start = vec![0.0; n];
        for slot in start.iter_mut().skip(1) {
            *slot = loop {
                let x: f64 = rng.gen::<f64>() * TWO_PI;
                if x > 0.0 {
                    break x;
                }
            };
        }
        start[1..].sort_by(f64::total_cmp);
        if !ordered(&start) {
            continue;
        }
        runs.push(run(&problem, start)?);
    }

    let mut converged: Vec<&PolygonalConfiguration> =
        runs.iter().filter(|r| r.converged).map(|r| &r.endpoint).collect();
    converged.sort_by(|a, b| compare(a, b));
    let mut solutions: Vec<PolygonalConfiguration> = Vec::new();
    for c in &converged {
        if !solutions
            .iter()
            .any(|s| circular_distance(&s.alphas, &c.alphas) <= DEDUP_TOL)
        {
            solutions.push((*c).clone());
        }
    }
    let best = runs
        .iter()
        .map(|r| &r.endpoint)
        .min_by(|a, b| compare(a, b))
        .cloned();
    Ok(ConfigurationReport {
        solutions,
        starts,
        converged: converged.len(),
        best,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn regular_polygon_has_zero_residual() {
        let law = ForceLaw::newtonian();
        for n in 2..7 {
            let alphas: Vec<f64> = (0..n).map(|i| TWO_PI * i as f64 / n as f64).collect();
            let res = configuration_residuals(&alphas, &vec![2.0; n], 0.7, None, &law).unwrap();
            assert!(res.iter().all(|v| v.abs() < 1e-13), "{res:?}");
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let law = ForceLaw::quasihomogeneous(&[(1.0, 1.5), (0.3, 1.0)]).unwrap();
        let masses = [1.0, 2.0, 0.5, 1.5];
        for a2 in [None, Some(1.7)] {
            let problem = Problem { masses: &masses, r: 0.9, a2, law: &law };
            let alphas = [0.0, 1.1, 2.9, 4.4];
            let (res, jac) = problem.system(&alphas).unwrap();
            for k in 1..4 {
                let h = 1e-6;
                let mut up = alphas;
                up[k] += h;
                let mut down = alphas;
                down[k] -= h;
                let fd = (problem.system(&up).unwrap().0 - problem.system(&down).unwrap().0) / (2.0 * h);
                for row in 0..res.len() {
                    assert_relative_eq!(jac[(row, k - 1)], fd[row], epsilon = 1e-7);
                }
            }
        }
    }

    #[test]
    fn equal_masses_converge_to_the_regular_polygon() {
        let law = ForceLaw::newtonian();
        let report = solve_polygonal_configuration(&[1.0; 5], 1.0, None, &law, 20, 7).unwrap();
        assert!(report.converged > 0);
        assert_eq!(report.solutions.len(), 1);
        for (i, a) in report.solutions[0].alphas.iter().enumerate() {
            assert_relative_eq!(*a, TWO_PI * i as f64 / 5.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let law = ForceLaw::newtonian();
        assert!(solve_polygonal_configuration(&[1.0], 1.0, None, &law, 1, 0).is_err());
        assert!(solve_polygonal_configuration(&[1.0, 1.0], 1.0, Some(0.0), &law, 1, 0).is_err());
        assert!(solve_polygonal_configuration(&[1.0, -1.0], 1.0, None, &law, 1, 0).is_err());
    }
}
