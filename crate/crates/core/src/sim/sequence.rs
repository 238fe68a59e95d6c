use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::detect::{detect_frame, Frame, FrameKind};
use super::detector::DetectorConfig;
use super::field::{build_lo_field, draw_signal_realization, expected_counts, signal_field_for};
use super::rng::{ShotStreams, StreamPurpose};
use super::scenario::OpticalScenario;
use crate::error::{Error, Result};

/// Ordered exposures sharing one detector and scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    pub frames: Vec<Frame>,
    pub detector: DetectorConfig,
    /// Absent for dark sets.
    pub scenario: Option<OpticalScenario>,
    pub kind: FrameKind,
    pub master_seed: u64,
}

impl FrameSet {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Uniform frame dimensions and shot indices `0..len` in order.
    pub fn validate(&self) -> Result<()> {
        let (rows, cols) = (self.detector.n_rows, self.detector.n_pixels_x);
        for (i, f) in self.frames.iter().enumerate() {
            if f.n_rows != rows || f.n_cols != cols || f.counts.len() != rows * cols {
                return Err(Error::invalid(
                    "frames",
                    format!("frame {i} is {}x{}, expected {cols}x{rows}", f.n_cols, f.n_rows),
                ));
            }
            if f.shot_index as usize != i {
                return Err(Error::invalid(
                    "frames",
                    format!("frame {i} carries shot index {}", f.shot_index),
                ));
            }
        }
        Ok(())
    }
}

/// Synthesizes one exposure. Pure in `(scenario, detector, lo, shot, kind, seed)`.
///
/// `lo` and `signal_base` are the jitter-free LO field and the undithered
/// signal field; both are recomputed per shot only through scalar factors.
pub fn synthesize_shot(
    scenario: &OpticalScenario,
    detector: &DetectorConfig,
    lo: &[Complex64],
    signal_base: &[Complex64],
    shot_index: u32,
    kind: FrameKind,
    master_seed: u64,
) -> Result<Frame> {
    let streams = ShotStreams::new(master_seed, shot_index as u64);
    let n = detector.n_pixels_x;
    let zero = Complex64::new(0.0, 0.0);

    let lo_gain = if kind == FrameKind::Dark {
        0.0
    } else if scenario.lo_jitter_rms > 0.0 {
        let jitter = Normal::new(0.0, scenario.lo_jitter_rms).expect("validated jitter");
        1.0 + jitter.sample(&mut streams.stream(StreamPurpose::LoJitter))
    } else {
        1.0
    };
    let lo_shot: Vec<Complex64> = lo.iter().map(|e| e * lo_gain).collect();

    let signal_shot: Vec<Complex64> = if kind == FrameKind::Signal && !scenario.signal_modes.is_empty() {
        let realization = draw_signal_realization(
            scenario,
            shot_index as u64,
            &mut streams.stream(StreamPurpose::Signal),
        );
        let factor = Complex64::from_polar(realization.gain, realization.phase);
        signal_base.iter().map(|e| e * factor).collect()
    } else {
        vec![zero; n]
    };

    let expected = expected_counts(&lo_shot, &signal_shot, detector)?;
    detect_frame(
        &expected,
        detector,
        shot_index,
        kind,
        &mut streams.stream(StreamPurpose::Detector),
    )
}

/// Runs `n_shots` exposures of the given kind. Shots are generated in
/// parallel; the result does not depend on the thread count.
pub fn run_exposure_sequence(
    scenario: &OpticalScenario,
    detector: &DetectorConfig,
    n_shots: usize,
    kind: FrameKind,
    master_seed: u64,
) -> Result<FrameSet> {
    if n_shots == 0 {
        return Err(Error::invalid("shots", "must be >= 1"));
    }
    if n_shots > u32::MAX as usize {
        return Err(Error::invalid("shots", "too many shots for 32-bit shot indices"));
    }
    scenario.validate(detector)?;
    let lo = build_lo_field(scenario, detector)?;
    let signal_base = signal_field_for(scenario, detector, super::SignalRealization::STATIC);

    let frames = (0..n_shots as u32)
        .into_par_iter()
        .map(|shot| synthesize_shot(scenario, detector, &lo, &signal_base, shot, kind, master_seed))
        .collect::<Result<Vec<_>>>()?;

    Ok(FrameSet {
        frames,
        detector: detector.clone(),
        scenario: (kind != FrameKind::Dark).then(|| scenario.clone()),
        kind,
        master_seed,
    })
}
