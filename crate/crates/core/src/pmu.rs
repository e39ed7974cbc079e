//! PMU-style disturbance records: canonical CSV writing, validated reading
//! and alignment of two records onto a common time grid.
//!
//! Layout (LF line endings, `.` decimal point):
//!
//! ```text
//! # pmu-record v1, f_nominal=50, dt=0.01
//! t_s,B1:vmag_pu,B1:freq_hz,B1-B2@B1:p_mw
//! 0,1.02,50,-169.5
//! ...
//! ```
//!
//! Values are rounded to 12 significant digits and printed in the shortest
//! form that reads back to the rounded value, so writing a record that was
//! read from a file reproduces the file byte for byte.

use std::fs;
use std::path::Path;

use indexmap::IndexMap;

use crate::dynamics::{ChannelId, SignalSet, DT_TOLERANCE};
use crate::error::{Error, Result};

const MAGIC: &str = "# pmu-record v1";

/// Canonical decimal text of `v`: 12 significant digits, shortest round-trip.
pub fn format_value(v: f64) -> String {
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        "0".to_string()
    } else {
        format!("{rounded}")
    }
}

/// A record as stored on disk: nominal frequency plus the signals.
#[derive(Debug, Clone, PartialEq)]
pub struct PmuRecord {
    pub f_nominal_hz: f64,
    pub signals: SignalSet,
}

/// Renders `signals` in the canonical CSV layout.
pub fn render_records(signals: &SignalSet, f_nominal_hz: f64) -> Result<String> {
    if signals.channels().is_empty() {
        return Err(Error::invalid(
            "record",
            "a record must carry at least one channel",
        ));
    }
    let mut out = format!(
        "{MAGIC}, f_nominal={}, dt={}\nt_s",
        format_value(f_nominal_hz),
        format_value(signals.dt())
    );
    for id in signals.channels().keys() {
        out.push(',');
        out.push_str(&id.to_string());
    }
    out.push('\n');
    let cols: Vec<&Vec<f64>> = signals.channels().values().collect();
    for (k, t) in signals.t().iter().enumerate() {
        out.push_str(&format_value(*t));
        for (id, col) in signals.channels().keys().zip(&cols) {
            let v = col[k];
            if !v.is_finite() {
                return Err(Error::invalid(
                    format!("channel '{id}'"),
                    format!("non-finite sample at t = {t}"),
                ));
            }
            out.push(',');
            out.push_str(&format_value(v));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_records(signals: &SignalSet, f_nominal_hz: f64, path: &Path) -> Result<()> {
    let text = render_records(signals, f_nominal_hz)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn header_field(part: &str, key: &str) -> Option<f64> {
    part.trim()
        .strip_prefix(key)?
        .strip_prefix('=')?
        .parse()
        .ok()
}

/// Parses record text; `path` is only used in error messages.
pub fn parse_records(text: &str, path: &Path) -> Result<PmuRecord> {
    let err = |line: usize, message: String| Error::Record {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let parts: Vec<&str> = header.split(',').collect();
    if parts.len() != 3 || parts[0] != MAGIC {
        return Err(err(
            1,
            format!("expected '{MAGIC}, f_nominal=<Hz>, dt=<s>'"),
        ));
    }
    let f_nominal_hz = header_field(parts[1], "f_nominal")
        .filter(|f| *f > 0.0)
        .ok_or_else(|| err(1, "malformed f_nominal".into()))?;
    let dt = header_field(parts[2], "dt")
        .filter(|d| *d > 0.0)
        .ok_or_else(|| err(1, "malformed dt".into()))?;

    let columns = lines
        .next()
        .ok_or_else(|| err(2, "missing column header".into()))?;
    let mut names = columns.split(',');
    if names.next() != Some("t_s") {
        return Err(err(2, "first column must be t_s".into()));
    }
    let ids = names
        .map(|n| n.parse::<ChannelId>().map_err(|e| err(2, e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    if ids.is_empty() {
        return Err(err(2, "a record must carry at least one channel".into()));
    }

    let mut t = Vec::new();
    let mut data: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
    for (i, row) in lines.enumerate() {
        let line = i + 3;
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != ids.len() + 1 {
            return Err(err(
                line,
                format!("expected {} columns, found {}", ids.len() + 1, fields.len()),
            ));
        }
        let mut values = fields.iter().map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line, format!("malformed number '{f}'")))
        });
        let ti = values.next().unwrap()?;
        if let Some(&prev) = t.last() {
            let step: f64 = ti - prev;
            if (step - dt).abs() > DT_TOLERANCE {
                return Err(err(
                    line,
                    format!("non-uniform time step {step} (dt = {dt})"),
                ));
            }
        }
        t.push(ti);
        for (col, v) in data.iter_mut().zip(values) {
            col.push(v?);
        }
    }
    if t.is_empty() {
        return Err(err(3, "no data rows".into()));
    }
    let mut channels = IndexMap::new();
    for (id, col) in ids.into_iter().zip(data) {
        if channels.insert(id.clone(), col).is_some() {
            return Err(err(2, format!("duplicate channel '{id}'")));
        }
    }
    let signals = SignalSet::new(dt, t, channels).map_err(|e| err(3, e.to_string()))?;
    Ok(PmuRecord {
        f_nominal_hz,
        signals,
    })
}

pub fn read_record_file(path: &Path) -> Result<PmuRecord> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text, path)
}

pub fn read_records(path: &Path) -> Result<SignalSet> {
    Ok(read_record_file(path)?.signals)
}

/// Value of a uniformly sampled signal at time `t` (exact sample when `t`
/// falls on the grid, linear interpolation otherwise).
fn sample_at(t0: f64, dt: f64, v: &[f64], t: f64) -> f64 {
    let pos = (t - t0) / dt;
    let nearest = pos.round();
    if (pos - nearest).abs() * dt <= DT_TOLERANCE {
        return v[(nearest.max(0.0) as usize).min(v.len() - 1)];
    }
    let i = (pos.floor().max(0.0) as usize).min(v.len() - 2);
    let w = pos - i as f64;
    v[i] + w * (v[i + 1] - v[i])
}

fn resample(s: &SignalSet, t: &[f64], dt: f64) -> Result<SignalSet> {
    let channels = s
        .channels()
        .iter()
        .map(|(id, v)| {
            let r = if v.len() == 1 {
                vec![v[0]; t.len()]
            } else {
                t.iter()
                    .map(|&ti| sample_at(s.start(), s.dt(), v, ti))
                    .collect()
            };
            (id.clone(), r)
        })
        .collect();
    SignalSet::new(dt, t.to_vec(), channels)
}

/// Restricts both sets to their common time span and puts them on the
/// coarser set's time stamps. The dt values must be commensurate (one an
/// integer multiple of the other).
pub fn align(a: &SignalSet, b: &SignalSet) -> Result<(SignalSet, SignalSet)> {
    let (coarse, a_is_coarse) = if a.dt() >= b.dt() {
        (a, true)
    } else {
        (b, false)
    };
    let fine = if a_is_coarse { b } else { a };
    let ratio = coarse.dt() / fine.dt();
    if (ratio - ratio.round()).abs() > 1e-6 * ratio {
        return Err(Error::Alignment(format!(
            "incommensurate sample steps {} s and {} s",
            a.dt(),
            b.dt()
        )));
    }
    let lo = a.start().max(b.start());
    let hi = a.end().min(b.end());
    if lo > hi + DT_TOLERANCE {
        return Err(Error::Alignment(format!(
            "no overlap between [{}, {}] s and [{}, {}] s",
            a.start(),
            a.end(),
            b.start(),
            b.end()
        )));
    }
    let t: Vec<f64> = coarse
        .t()
        .iter()
        .copied()
        .filter(|&ti| ti >= lo - DT_TOLERANCE && ti <= hi + DT_TOLERANCE)
        .collect();
    if t.is_empty() {
        return Err(Error::Alignment(
            "overlap contains no sample of the coarser record".into(),
        ));
    }
    let c = resample(coarse, &t, coarse.dt())?;
    let f = resample(fine, &t, coarse.dt())?;
    Ok(if a_is_coarse { (c, f) } else { (f, c) })
}
