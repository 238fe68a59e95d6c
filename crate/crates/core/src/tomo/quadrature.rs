use std::fmt;
use std::ops::RangeInclusive;

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;

use super::calib::VacuumCalibration;
use super::dft::dft_modes_batch;
use super::reduce::ReducedTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    X,
    Y,
}

impl Quadrature {
    pub fn symbol(self) -> char {
        match self {
            Quadrature::X => 'x',
            Quadrature::Y => 'y',
        }
    }
}

/// One axis of a Q-function: a quadrature of a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AxisSpec {
    pub p: usize,
    pub quadrature: Quadrature,
}

impl AxisSpec {
    pub fn x(p: usize) -> Self {
        Self {
            p,
            quadrature: Quadrature::X,
        }
    }

    pub fn y(p: usize) -> Self {
        Self {
            p,
            quadrature: Quadrature::Y,
        }
    }
}

impl fmt::Display for AxisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.quadrature.symbol(), self.p)
    }
}

/// Where the LO scale `n_t` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NtSource {
    /// Total ROI counts of each shot; follows LO power jitter.
    #[default]
    PerShot,
    /// Mean `n_t` of the vacuum exposures, the same for every shot.
    CalibrationMean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub n_t: NtSource,
    /// LO half-width `M`; extracted modes must satisfy `p > 2M`.
    pub lo_mode_halfwidth: usize,
    /// Shots with a larger fraction of saturated ROI pixels are dropped.
    pub max_saturation_fraction: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            n_t: NtSource::PerShot,
            lo_mode_halfwidth: 0,
            max_saturation_fraction: 0.01,
        }
    }
}

/// Per-shot, per-mode quadrature pairs. Row = shot, column = `p - mode_index_offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSamples {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub mode_index_offset: usize,
    /// Transform length `N` the modes refer to.
    pub n_points: usize,
    pub shot_indices: Vec<u32>,
}

impl QuadratureSamples {
    pub fn n_shots(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.x.ncols()
    }

    pub fn modes(&self) -> RangeInclusive<usize> {
        self.mode_index_offset..=self.mode_index_offset + self.n_modes() - 1
    }

    fn column_index(&self, p: usize) -> Result<usize> {
        let range = self.modes();
        if !range.contains(&p) {
            return Err(Error::ModeOutOfRange {
                p,
                min: *range.start(),
                max: *range.end(),
            });
        }
        Ok(p - self.mode_index_offset)
    }

    pub fn axis(&self, axis: AxisSpec) -> Result<ArrayView1<'_, f64>> {
        let c = self.column_index(axis.p)?;
        Ok(match axis.quadrature {
            Quadrature::X => self.x.column(c),
            Quadrature::Y => self.y.column(c),
        })
    }

    /// `(x_p, y_p)` of every shot as owned vectors.
    pub fn mode(&self, p: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((
            self.axis(AxisSpec::x(p))?.to_vec(),
            self.axis(AxisSpec::y(p))?.to_vec(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExclusionReason {
    /// `n_t <= 0`.
    DeadFrame,
    Saturated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub samples: QuadratureSamples,
    pub excluded: Vec<(u32, ExclusionReason)>,
}

/// `(x, y) = sqrt(2 / n_t) * (Re, Im)` of a background-subtracted
/// photocount-sum coefficient.
pub fn scale_quadrature(delta_k_sum: Complex64, n_t: f64) -> (f64, f64) {
    let s = (2.0 / n_t).sqrt();
    (s * delta_k_sum.re, s * delta_k_sum.im)
}

/// Quadrature samples for modes `p_min..=p_max` of every usable shot.
pub fn extract_quadratures(
    traces: &[ReducedTrace],
    cal: &VacuumCalibration,
    mode_range: (usize, usize),
    options: &QuadratureOptions,
) -> Result<Extraction> {
    let (p_min, p_max) = mode_range;
    let Some(first) = traces.first() else {
        return Err(Error::EmptyInput("signal traces"));
    };
    let n = first.len();
    if cal.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: cal.len(),
        });
    }
    let lo_limit = 2 * options.lo_mode_halfwidth + 1;
    let hi_limit = n / 2 - 1;
    for p in [p_min, p_max] {
        if p < lo_limit || p > hi_limit {
            return Err(Error::ModeOutOfRange {
                p,
                min: lo_limit,
                max: hi_limit,
            });
        }
    }
    if p_min > p_max {
        return Err(Error::invalid(
            "mode_range",
            format!("p_min {p_min} exceeds p_max {p_max}"),
        ));
    }
    let calibration_n_t = match options.n_t {
        NtSource::CalibrationMean if !(cal.mean_n_t > 0.0) => {
            return Err(Error::invalid("calibration", "mean n_t must be positive"));
        }
        NtSource::CalibrationMean => Some(cal.mean_n_t),
        NtSource::PerShot => None,
    };

    let mut excluded = Vec::new();
    let usable: Vec<ReducedTrace> = traces
        .iter()
        .filter(|t| {
            if !(t.n_t > 0.0) {
                excluded.push((t.shot_index, ExclusionReason::DeadFrame));
                false
            } else if t.saturation_fraction() > options.max_saturation_fraction {
                excluded.push((t.shot_index, ExclusionReason::Saturated));
                false
            } else {
                true
            }
        })
        .cloned()
        .collect();
    if usable.is_empty() {
        return Err(Error::NoUsableShots {
            excluded: excluded.len(),
        });
    }
    let modes = dft_modes_batch(&usable)?;

    let n_modes = p_max - p_min + 1;
    let mut x = Array2::zeros((usable.len(), n_modes));
    let mut y = Array2::zeros((usable.len(), n_modes));
    let root_n = (n as f64).sqrt();
    for (row, (trace, amps)) in usable.iter().zip(&modes).enumerate() {
        let n_t = calibration_n_t.unwrap_or(trace.n_t);
        for p in p_min..=p_max {
            let delta = (amps.k[p] - cal.mean_k[p]) * root_n;
            let (xp, yp) = scale_quadrature(delta, n_t);
            x[[row, p - p_min]] = xp;
            y[[row, p - p_min]] = yp;
        }
    }
    Ok(Extraction {
        samples: QuadratureSamples {
            x,
            y,
            mode_index_offset: p_min,
            n_points: n,
            shot_indices: usable.iter().map(|t| t.shot_index).collect(),
        },
        excluded,
    })
}

/// Shot-to-shot variance `<|K_p - <K_p>|^2>` of every Fourier coefficient.
pub fn dft_variance_spectrum(traces: &[ReducedTrace]) -> Result<Vec<f64>> {
    if traces.len() < 2 {
        return Err(Error::TooFewSamples {
            what: "DFT variance",
            needed: 2,
            got: traces.len(),
        });
    }
    let modes = dft_modes_batch(traces)?;
    let n = modes[0].len();
    let shots = modes.len() as f64;
    Ok((0..n)
        .map(|p| {
            let mean = crate::numeric::complex_sum(modes.iter().map(|m| m.k[p])) / shots;
            crate::numeric::sum(modes.iter().map(|m| (m.k[p] - mean).norm_sqr())) / (shots - 1.0)
        })
        .collect())
}
