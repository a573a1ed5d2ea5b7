//! CSV interchange for signals and fields.
//!
//! Signal files: header `t,value`, one row per node, 17 significant digits.
//! Field files: header `t,x,value`, row-major in time. Lines starting with `#`
//! are metadata comments and are skipped on read.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::field::HeatField;
use crate::grid::TimeGrid;
use crate::scalar::Real;
use crate::signal::Signal;

/// Formats a scalar with 17 significant digits, enough to round-trip f64.
pub fn fmt_full<F: Real>(v: F) -> String {
    format!("{:.16e}", v.as_f64())
}

/// Writes a signal as CSV. `comment` lines (without leading `#`) are emitted
/// first as `# ...` metadata.
pub fn write_signal<F: Real, W: Write>(out: &mut W, s: &Signal<F>, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "t,value")?;
    for (i, v) in s.values().iter().enumerate() {
        writeln!(out, "{},{}", fmt_full(s.grid().node(i)), fmt_full(*v))?;
    }
    Ok(())
}

/// Writes a field as `t,x,value` CSV, row-major in time.
pub fn write_field<F: Real, W: Write>(out: &mut W, f: &HeatField<F>, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "t,x,value")?;
    for n in 0..f.tgrid().n_nodes() {
        let t = f.tgrid().node(n);
        for i in 0..f.xgrid().n_nodes() {
            writeln!(out, "{},{},{}", fmt_full(t), fmt_full(f.xgrid().node(i)), fmt_full(f.at(n, i)))?;
        }
    }
    Ok(())
}

/// Reads a `t,value` CSV into (times, values), checking monotone times.
pub fn read_pairs<R: BufRead>(input: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            saw_header = true;
            let h: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if h.len() == 2 && h[0].eq_ignore_ascii_case("t") {
                continue; // header row
            }
            // fall through: headerless numeric data is accepted
        }
        let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(Error::CsvParse {
                line: lineno,
                msg: format!("expected 2 columns, found {}", cols.len()),
            });
        }
        let t: f64 = cols[0].parse().map_err(|e| Error::CsvParse {
            line: lineno,
            msg: format!("bad time value {:?}: {e}", cols[0]),
        })?;
        let v: f64 = cols[1].parse().map_err(|e| Error::CsvParse {
            line: lineno,
            msg: format!("bad sample value {:?}: {e}", cols[1]),
        })?;
        if !t.is_finite() || !v.is_finite() {
            return Err(Error::CsvParse { line: lineno, msg: "non-finite entry".into() });
        }
        if let Some(&prev) = ts.last() {
            if t <= prev {
                return Err(Error::CsvParse {
                    line: lineno,
                    msg: format!("times must be strictly increasing, {t} after {prev}"),
                });
            }
        }
        ts.push(t);
        vs.push(v);
    }
    if ts.len() < 2 {
        return Err(Error::CsvParse { line: 0, msg: "need at least 2 data rows".into() });
    }
    Ok((ts, vs))
}

/// Reads a uniformly sampled signal starting at t = 0.
pub fn read_signal<F: Real, R: BufRead>(input: R) -> Result<Signal<F>> {
    let (ts, vs) = read_pairs(input)?;
    if ts[0].abs() > 1e-12 * ts.last().unwrap().abs().max(1.0) {
        return Err(Error::CsvParse { line: 0, msg: format!("signal must start at t=0, got {}", ts[0]) });
    }
    let n = ts.len() - 1;
    let t_end = *ts.last().unwrap();
    let dt = t_end / n as f64;
    for (i, &t) in ts.iter().enumerate() {
        if (t - i as f64 * dt).abs() > 1e-9 * t_end {
            return Err(Error::CsvParse {
                line: 0,
                msg: format!("non-uniform sampling near t={t} (node {i})"),
            });
        }
    }
    let grid = TimeGrid::new(F::of(t_end), n)?;
    Signal::new(grid, vs.into_iter().map(F::of).collect())
}
