//! Text format for vacuum calibrations.
//!
//! ```text
//! # comment lines (provenance)
//! n_exposures = 500
//! n_points = 600
//! mean_n_t = 5.88e7
//! roi = 0, 0, 600, 10
//! source_sha256 = <hex digest of the vacuum frame file>
//! p,re,im
//! 0,<re>,<im>
//! ...
//! ```

use std::fmt::Write as _;

use thiserror::Error;
use uqst_core::tomo::{Roi, VacuumCalibration};
use uqst_core::Complex64;

#[derive(Debug, Error, PartialEq)]
#[error("calibration line {line}: {message}")]
pub struct CalibrationError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredCalibration {
    pub calibration: VacuumCalibration,
    pub roi: Roi,
    pub source_sha256: String,
}

pub fn serialize(stored: &StoredCalibration, provenance: &[String]) -> String {
    let mut out = String::new();
    for line in provenance {
        let _ = writeln!(out, "# {line}");
    }
    let cal = &stored.calibration;
    let r = stored.roi;
    let _ = writeln!(out, "n_exposures = {}", cal.n_exposures);
    let _ = writeln!(out, "n_points = {}", cal.len());
    let _ = writeln!(out, "mean_n_t = {:e}", cal.mean_n_t);
    let _ = writeln!(out, "roi = {}, {}, {}, {}", r.x0, r.y0, r.width, r.height);
    let _ = writeln!(out, "source_sha256 = {}", stored.source_sha256);
    let _ = writeln!(out, "p,re,im");
    for (p, k) in cal.mean_k.iter().enumerate() {
        let _ = writeln!(out, "{p},{:e},{:e}", k.re, k.im);
    }
    out
}

pub fn parse(text: &str) -> Result<StoredCalibration, CalibrationError> {
    let err = |line: usize, message: String| CalibrationError { line, message };
    let mut n_exposures = None;
    let mut n_points = None;
    let mut mean_n_t = None;
    let mut roi = None;
    let mut source = None;
    let mut table_started = false;
    let mut mean_k = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        if table_started {
            let parts: Vec<&str> = content.split(',').collect();
            if parts.len() != 3 {
                return Err(err(line, format!("expected `p,re,im`, got `{content}`")));
            }
            let p: usize = parts[0]
                .trim()
                .parse()
                .map_err(|_| err(line, format!("bad mode index `{}`", parts[0])))?;
            if p != mean_k.len() {
                return Err(err(line, format!("mode {p} out of order, expected {}", mean_k.len())));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| err(line, format!("bad number `{s}`")))
            };
            mean_k.push(Complex64::new(num(parts[1])?, num(parts[2])?));
            continue;
        }
        if content.replace(' ', "") == "p,re,im" {
            table_started = true;
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(err(line, format!("expected `key = value`, got `{content}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        let bad = || err(line, format!("bad value for `{key}`: `{value}`"));
        match key {
            "n_exposures" => n_exposures = Some(value.parse::<usize>().map_err(|_| bad())?),
            "n_points" => n_points = Some(value.parse::<usize>().map_err(|_| bad())?),
            "mean_n_t" => mean_n_t = Some(value.parse::<f64>().map_err(|_| bad())?),
            "roi" => {
                let v: Vec<usize> = value
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad())?;
                if v.len() != 4 {
                    return Err(bad());
                }
                roi = Some(Roi::new(v[0], v[1], v[2], v[3]));
            }
            "source_sha256" => source = Some(value.to_string()),
            _ => return Err(err(line, format!("unknown key `{key}`"))),
        }
    }
    let last = text.lines().count();
    let missing = |what: &str| err(last, format!("missing `{what}`"));
    let n_points = n_points.ok_or_else(|| missing("n_points"))?;
    if mean_k.len() != n_points {
        return Err(err(
            last,
            format!("table has {} rows, n_points says {n_points}", mean_k.len()),
        ));
    }
    let calibration = VacuumCalibration {
        mean_k,
        n_exposures: n_exposures.ok_or_else(|| missing("n_exposures"))?,
        mean_n_t: mean_n_t.ok_or_else(|| missing("mean_n_t"))?,
    };
    calibration.validate().map_err(|e| err(last, e.to_string()))?;
    Ok(StoredCalibration {
        calibration,
        roi: roi.ok_or_else(|| missing("roi"))?,
        source_sha256: source.ok_or_else(|| missing("source_sha256"))?,
    })
}
