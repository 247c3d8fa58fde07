//! CSV readers and writers for trajectories, gap series and mass tables.
//!
//! Floats are written with `%.17g` semantics so output round-trips exactly
//! and is byte-stable across runs.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{Vector2, Vector3};

use crate::curved::{CurvedState, Sigma};
use crate::error::{Error, Result};
use crate::flat::{self, FlatState};
use crate::ring::{gap_function, GapSeries, RingSnapshot};
use crate::trajectory::{Sample, Trajectory};

pub const FLAT_HEADER: [&str; 7] = ["t", "body", "x", "y", "vx", "vy", "m"];
pub const CURVED_HEADER: [&str; 9] = ["t", "body", "x", "y", "z", "vx", "vy", "vz", "m"];
pub const GAP_HEADER: [&str; 6] = ["t", "mu", "argmin_j", "r", "weighted_rate", "interval_id"];
pub const MASS_HEADER: [&str; 2] = ["t", "m"];
pub const PLOT_HEADER: [&str; 6] = [
    "t",
    "r",
    "mu",
    "angular_momentum",
    "constraint_drift",
    "tangency_drift",
];

/// Formats like C's `printf("%.17g", x)`.
pub fn format_g17(x: f64) -> String {
    const P: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= P {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

pub fn write_flat_trajectory<W: Write>(traj: &Trajectory<FlatState>, out: W) -> Result<()> {
    let mut w = writer(out, &FLAT_HEADER)?;
    for sample in traj.samples() {
        let s = &sample.state;
        for (i, (q, v)) in s.positions().iter().zip(s.velocities()).enumerate() {
            w.write_record([
                format_g17(s.time()),
                i.to_string(),
                format_g17(q.x),
                format_g17(q.y),
                format_g17(v.x),
                format_g17(v.y),
                format_g17(sample.masses[i]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_curved_trajectory<W: Write>(traj: &Trajectory<CurvedState>, out: W) -> Result<()> {
    let mut w = writer(out, &CURVED_HEADER)?;
    for sample in traj.samples() {
        let s = &sample.state;
        for (i, (q, v)) in s.positions().iter().zip(s.velocities()).enumerate() {
            w.write_record([
                format_g17(s.time()),
                i.to_string(),
                format_g17(q.x),
                format_g17(q.y),
                format_g17(q.z),
                format_g17(v.x),
                format_g17(v.y),
                format_g17(v.z),
                format_g17(sample.masses[i]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_gap_series<W: Write>(series: &GapSeries, out: W) -> Result<()> {
    let mut w = writer(out, &GAP_HEADER)?;
    for k in 0..series.len() {
        w.write_record([
            format_g17(series.times[k]),
            format_g17(series.mu[k]),
            series.argmin_pair[k].to_string(),
            format_g17(series.radius[k]),
            format_g17(series.weighted_rate[k]),
            series.interval_id[k].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mass_table<W: Write>(times: &[f64], masses: &[f64], out: W) -> Result<()> {
    let mut w = writer(out, &MASS_HEADER)?;
    for (t, m) in times.iter().zip(masses) {
        w.write_record([format_g17(*t), format_g17(*m)])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-sample quantities a plot of a trajectory needs.
pub trait PlotSnapshot: RingSnapshot {
    /// `(max |q.q - sigma|, max |q.v|)`; zero for planar states.
    fn drifts(&self) -> (f64, f64);
    /// Angular momentum about the axis of the ring.
    fn axial_momentum(&self, masses: &[f64]) -> f64;
}

impl PlotSnapshot for FlatState {
    fn drifts(&self) -> (f64, f64) {
        (0.0, 0.0)
    }

    fn axial_momentum(&self, masses: &[f64]) -> f64 {
        flat::angular_momentum(self, masses)
    }
}

impl PlotSnapshot for CurvedState {
    fn drifts(&self) -> (f64, f64) {
        (self.constraint_drift(), self.tangency_drift())
    }

    fn axial_momentum(&self, masses: &[f64]) -> f64 {
        self.positions()
            .iter()
            .zip(self.velocities())
            .zip(masses)
            .map(|((q, v), m)| m * (q.x * v.y - q.y * v.x))
            .sum()
    }
}

/// One row per sample: `t,r,mu,angular_momentum,constraint_drift,tangency_drift`.
/// `r` and `mu` are `nan` at samples that are not rings within `ring_tol`.
pub fn write_plotdata<S: PlotSnapshot, W: Write>(
    traj: &Trajectory<S>,
    ring_tol: f64,
    out: W,
) -> Result<()> {
    let mut w = writer(out, &PLOT_HEADER)?;
    for sample in traj.samples() {
        let s = &sample.state;
        let (r, mu) = match s.ring_decomposition(ring_tol) {
            Ok(d) => (d.radius, gap_function(&d).0),
            Err(_) => (f64::NAN, f64::NAN),
        };
        let (constraint, tangency) = s.drifts();
        w.write_record([
            format_g17(s.time()),
            format_g17(r),
            format_g17(mu),
            format_g17(s.axial_momentum(&sample.masses)),
            format_g17(constraint),
            format_g17(tangency),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A trajectory file of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyTrajectory {
    Flat(Trajectory<FlatState>),
    Curved(Trajectory<CurvedState>),
}

fn parse_field(record: &csv::StringRecord, i: usize, line: u64) -> Result<f64> {
    record[i]
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Invalid(format!("line {line}: bad number {:?}: {e}", &record[i])))
}

struct Rows {
    /// `(t, body, values, mass)` in file order.
    rows: Vec<(f64, usize, Vec<f64>, f64)>,
}

fn read_rows<R: Read>(input: R, width: usize) -> Result<(Vec<String>, Rows)> {
    let mut reader = csv::ReaderBuilder::new().from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() != width {
        return Err(Error::Invalid(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let line = k as u64 + 2;
        let t = parse_field(&record, 0, line)?;
        let body: usize = record[1]
            .trim()
            .parse()
            .map_err(|e| Error::Invalid(format!("line {line}: bad body index: {e}")))?;
        let values = (2..width - 1)
            .map(|i| parse_field(&record, i, line))
            .collect::<Result<Vec<_>>>()?;
        let m = parse_field(&record, width - 1, line)?;
        rows.push((t, body, values, m));
    }
    Ok((header, Rows { rows }))
}

/// Groups rows into per-time blocks with bodies `0..n` in order.
fn blocks(rows: Rows) -> Result<Vec<(f64, Vec<(Vec<f64>, f64)>)>> {
    let mut out: Vec<(f64, Vec<(Vec<f64>, f64)>)> = Vec::new();
    for (t, body, values, m) in rows.rows {
        match out.last_mut() {
            Some((bt, bodies)) if *bt == t => {
                if body != bodies.len() {
                    return Err(Error::Invalid(format!("t = {t}: body {body} out of order")));
                }
                bodies.push((values, m));
            }
            _ => {
                if body != 0 {
                    return Err(Error::Invalid(format!("t = {t}: block must start with body 0")));
                }
                out.push((t, vec![(values, m)]));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Invalid("trajectory file has no rows".into()));
    }
    let n = out[0].1.len();
    if let Some((t, _)) = out.iter().find(|(_, b)| b.len() != n) {
        return Err(Error::Invalid(format!("t = {t}: body count differs from the first block")));
    }
    Ok(out)
}

/// Reads a flat or curved trajectory CSV, telling them apart by header.
/// For curved files `sigma` is inferred from the first position.
pub fn read_trajectory<R: Read>(input: R) -> Result<AnyTrajectory> {
    let mut buf = String::new();
    let mut input = input;
    input.read_to_string(&mut buf)?;
    let first = buf.lines().next().unwrap_or("");
    let header: Vec<&str> = first.split(',').map(str::trim).collect();
    if header == FLAT_HEADER {
        let (_, rows) = read_rows(buf.as_bytes(), FLAT_HEADER.len())?;
        let samples = blocks(rows)?
            .into_iter()
            .map(|(t, bodies)| {
                let q = bodies.iter().map(|(v, _)| Vector2::new(v[0], v[1])).collect();
                let v = bodies.iter().map(|(v, _)| Vector2::new(v[2], v[3])).collect();
                Ok(Sample {
                    state: FlatState::new(t, q, v)?,
                    masses: bodies.iter().map(|b| b.1).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AnyTrajectory::Flat(Trajectory::new(samples, None)?))
    } else if header == CURVED_HEADER {
        let (_, rows) = read_rows(buf.as_bytes(), CURVED_HEADER.len())?;
        let blocks = blocks(rows)?;
        let p = &blocks[0].1[0].0;
        let sigma = if (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] - 1.0).abs() < 1e-6 {
            Sigma::Positive
        } else {
            Sigma::Negative
        };
        let samples = blocks
            .into_iter()
            .map(|(t, bodies)| {
                let q = bodies.iter().map(|(v, _)| Vector3::new(v[0], v[1], v[2])).collect();
                let v = bodies.iter().map(|(v, _)| Vector3::new(v[3], v[4], v[5])).collect();
                Ok(Sample {
                    state: CurvedState::new(sigma, t, q, v)?,
                    masses: bodies.iter().map(|b| b.1).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AnyTrajectory::Curved(Trajectory::new(samples, None)?))
    } else {
        Err(Error::Invalid(format!("unrecognised trajectory header {first:?}")))
    }
}

pub fn read_trajectory_file(path: &Path) -> Result<AnyTrajectory> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_trajectory(std::io::BufReader::new(file))
}

/// Reads a `t,m` table.
pub fn read_mass_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    read_columns(path, MASS_HEADER)
}

/// Reads a two-column numeric CSV whose header must equal `names`.
pub fn read_columns(path: &Path, names: [&str; 2]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != names {
        return Err(Error::Invalid(format!(
            "{}: expected header \"{}\"",
            path.display(),
            names.join(",")
        )));
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 2 {
            return Err(Error::Invalid(format!("{}: line {} needs two fields", path.display(), k + 2)));
        }
        a.push(parse_field(&record, 0, k as u64 + 2)?);
        b.push(parse_field(&record, 1, k as u64 + 2)?);
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_printf() {
        // reference strings from C printf("%.17g")
        let cases = [
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (1e-5, "1.0000000000000001e-05"),
            (123456789.0, "123456789"),
            (1e17, "1e+17"),
            (1e16, "10000000000000000"),
            (0.0001, "0.0001"),
            (std::f64::consts::PI, "3.1415926535897931"),
            (6.02214076e23, "6.0221407599999999e+23"),
            (0.0, "0"),
        ];
        for (x, s) in cases {
            assert_eq!(format_g17(x), s, "{x}");
        }
    }

    #[test]
    fn g17_round_trips() {
        for x in [1.0 / 3.0, 2f64.sqrt() * 1e-200, -7.123456789e150, 5e-324] {
            assert_eq!(format_g17(x).parse::<f64>().unwrap(), x);
        }
    }
}
