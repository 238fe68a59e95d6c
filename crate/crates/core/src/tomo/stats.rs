use std::ops::RangeInclusive;

use super::quadrature::{AxisSpec, QuadratureSamples};
use super::reduce::ReducedTrace;
use crate::error::{Error, Result};
use crate::numeric::{mean, pearson, variance};
use crate::sim::DetectorConfig;

/// Photon-number estimates from heterodyne quadrature samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonStatistics {
    pub mean_n: f64,
    pub delta_n: f64,
    /// Standard error of `mean_n`.
    pub stderr_n: f64,
    pub mean_n_clamped: bool,
    pub delta_n_clamped: bool,
}

/// With `u = (x^2 + y^2) / 2`: `<n> = <u> - 1` and
/// `dn^2 = var(u) - <n> - 1`, each clamped at zero. Simultaneous
/// measurement adds one vacuum unit to `<u>`; the variance correction leaves
/// `dn = sqrt(<n>)` for a coherent state.
pub fn photon_statistics(xs: &[f64], ys: &[f64]) -> Result<PhotonStatistics> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewSamples {
            what: "photon statistics",
            needed: 2,
            got: xs.len(),
        });
    }
    let u: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| 0.5 * (x * x + y * y)).collect();
    let mean_u = mean(&u);
    let var_u = variance(&u);
    let raw_n = mean_u - 1.0;
    let mean_n = raw_n.max(0.0);
    let raw_dn2 = var_u - mean_n - 1.0;
    Ok(PhotonStatistics {
        mean_n,
        delta_n: raw_dn2.max(0.0).sqrt(),
        stderr_n: (var_u / u.len() as f64).sqrt(),
        mean_n_clamped: raw_n < 0.0,
        delta_n_clamped: raw_dn2 < 0.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeStats {
    pub p: usize,
    /// Plane-wave mode angle `p lambda / (N dx)`, radians.
    pub theta_p: f64,
    pub mean_n: f64,
    pub delta_n: f64,
    pub stderr_n: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub n_shots: usize,
    pub mean_n_clamped: bool,
    pub delta_n_clamped: bool,
}

pub fn mode_angle(p: usize, n_points: usize, pixel_pitch: f64, wavelength: f64) -> f64 {
    p as f64 * wavelength / (n_points as f64 * pixel_pitch)
}

pub fn mode_stats(
    samples: &QuadratureSamples,
    p: usize,
    detector: &DetectorConfig,
    wavelength: f64,
) -> Result<ModeStats> {
    let (xs, ys) = samples.mode(p)?;
    let photons = photon_statistics(&xs, &ys)?;
    Ok(ModeStats {
        p,
        theta_p: mode_angle(p, samples.n_points, detector.pixel_pitch, wavelength),
        mean_n: photons.mean_n,
        delta_n: photons.delta_n,
        stderr_n: photons.stderr_n,
        mean_x: mean(&xs),
        mean_y: mean(&ys),
        var_x: variance(&xs),
        var_y: variance(&ys),
        n_shots: xs.len(),
        mean_n_clamped: photons.mean_n_clamped,
        delta_n_clamped: photons.delta_n_clamped,
    })
}

/// [`mode_stats`] for every mode in `range`, ordered by `p`.
pub fn mode_spectrum(
    samples: &QuadratureSamples,
    range: RangeInclusive<usize>,
    detector: &DetectorConfig,
    wavelength: f64,
) -> Result<Vec<ModeStats>> {
    range
        .map(|p| mode_stats(samples, p, detector, wavelength))
        .collect()
}

/// Sample Pearson correlation between two quadrature axes across shots.
pub fn quadrature_correlation(samples: &QuadratureSamples, a: AxisSpec, b: AxisSpec) -> Result<f64> {
    let xa = samples.axis(a)?.to_vec();
    let xb = samples.axis(b)?.to_vec();
    if xa.len() < 2 {
        return Err(Error::TooFewSamples {
            what: "correlation",
            needed: 2,
            got: xa.len(),
        });
    }
    pearson(&xa, &xb).ok_or_else(|| Error::ZeroVariance(format!("{a} or {b}")))
}

fn mean_column_variance(traces: &[ReducedTrace], what: &'static str) -> Result<f64> {
    if traces.len() < 2 {
        return Err(Error::TooFewSamples {
            what,
            needed: 2,
            got: traces.len(),
        });
    }
    let n = traces[0].len();
    if let Some(t) = traces.iter().find(|t| t.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: t.len(),
        });
    }
    let per_column: Vec<f64> = (0..n)
        .map(|c| {
            let column: Vec<f64> = traces.iter().map(|t| t.values[c]).collect();
            variance(&column)
        })
        .collect();
    Ok(mean(&per_column))
}

/// Illuminated-to-dark ratio of the column-averaged shot-to-shot count
/// variance, in dB.
pub fn readout_noise_snr(lit: &[ReducedTrace], dark: &[ReducedTrace]) -> Result<f64> {
    let lit_var = mean_column_variance(lit, "illuminated traces")?;
    let dark_var = mean_column_variance(dark, "dark traces")?;
    if lit[0].len() != dark[0].len() {
        return Err(Error::LengthMismatch {
            expected: lit[0].len(),
            actual: dark[0].len(),
        });
    }
    if dark_var <= 0.0 {
        return Err(Error::ZeroDarkVariance);
    }
    Ok(10.0 * (lit_var / dark_var).log10())
}
