use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::detector::DetectorConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameKind {
    /// LO and signal.
    Signal,
    /// Signal blocked, LO on.
    Vacuum,
    /// No illumination.
    Dark,
}

impl FrameKind {
    pub fn code(self) -> u8 {
        match self {
            FrameKind::Signal => 0,
            FrameKind::Vacuum => 1,
            FrameKind::Dark => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(FrameKind::Signal),
            1 => Some(FrameKind::Vacuum),
            2 => Some(FrameKind::Dark),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FrameKind::Signal => "signal",
            FrameKind::Vacuum => "vacuum",
            FrameKind::Dark => "dark",
        }
    }
}

/// Digitized counts of one exposure, row-major `n_rows x n_cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub counts: Vec<u16>,
    pub n_rows: usize,
    pub n_cols: usize,
    pub shot_index: u32,
    pub kind: FrameKind,
    /// Pixels clipped at the saturation level.
    pub saturated: usize,
}

impl Frame {
    pub fn row(&self, r: usize) -> &[u16] {
        &self.counts[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.counts[row * self.n_cols + col]
    }
}

/// Photon detection and readout for one exposure.
///
/// Each column's expectation is split evenly over the rows. Per pixel:
/// Poisson(expected + dark), plus Gaussian readout noise, plus the ADC bias,
/// rounded and clamped to `[0, full_well + adc_offset]`.
pub fn detect_frame<R: Rng + ?Sized>(
    expected: &[f64],
    detector: &DetectorConfig,
    shot_index: u32,
    kind: FrameKind,
    rng: &mut R,
) -> Result<Frame> {
    if expected.len() != detector.n_pixels_x {
        return Err(Error::LengthMismatch {
            expected: detector.n_pixels_x,
            actual: expected.len(),
        });
    }
    let rows = detector.n_rows;
    let cols = detector.n_pixels_x;
    let clamp = detector.clamp_level() as f64;
    let offset = detector.adc_offset as f64;
    let read = (detector.read_noise_rms > 0.0)
        .then(|| Normal::new(0.0, detector.read_noise_rms).expect("validated read noise"));

    let mut counts = vec![0u16; rows * cols];
    let mut saturated = 0;
    for (c, &e) in expected.iter().enumerate() {
        let lambda = e.max(0.0) / rows as f64 + detector.dark_rate;
        let poisson = (lambda > 0.0).then(|| Poisson::new(lambda).expect("finite rate"));
        for r in 0..rows {
            let mut value = match &poisson {
                Some(dist) => dist.sample(rng),
                None => 0.0,
            };
            if let Some(noise) = &read {
                value += noise.sample(rng);
            }
            let digitized = (value + offset).round();
            let clipped = if digitized >= clamp {
                saturated += 1;
                clamp
            } else {
                digitized.max(0.0)
            };
            counts[r * cols + c] = clipped as u16;
        }
    }
    Ok(Frame {
        counts,
        n_rows: rows,
        n_cols: cols,
        shot_index,
        kind,
        saturated,
    })
}
