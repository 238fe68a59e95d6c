#![allow(dead_code)]

use uqst_core::sim::{run_exposure_sequence, DetectorConfig, FrameKind, OpticalScenario};
use uqst_core::tomo::{
    extract_quadratures, reduce_frameset, vacuum_average, QuadratureOptions, QuadratureSamples,
    ReducedTrace, Roi, VacuumCalibration,
};

pub const WAVELENGTH: f64 = 780e-9;
pub const PITCH: f64 = 20e-6;

/// Small ideal detector that keeps Monte-Carlo tests fast.
pub fn compact_detector() -> DetectorConfig {
    DetectorConfig {
        full_well: 60_000,
        ..DetectorConfig::ideal(128, 2, PITCH)
    }
}

pub fn traces(
    scenario: &OpticalScenario,
    detector: &DetectorConfig,
    shots: usize,
    kind: FrameKind,
    seed: u64,
) -> Vec<ReducedTrace> {
    let set = run_exposure_sequence(scenario, detector, shots, kind, seed).unwrap();
    reduce_frameset(&set, &Roi::full(detector)).unwrap()
}

pub fn calibration(
    scenario: &OpticalScenario,
    detector: &DetectorConfig,
    shots: usize,
    seed: u64,
) -> VacuumCalibration {
    vacuum_average(&traces(scenario, detector, shots, FrameKind::Vacuum, seed)).unwrap()
}

/// Simulate, calibrate on an independent vacuum run, and extract.
pub fn quadratures(
    scenario: &OpticalScenario,
    detector: &DetectorConfig,
    shots: usize,
    vacuum_shots: usize,
    seed: u64,
    range: (usize, usize),
) -> QuadratureSamples {
    let cal = calibration(scenario, detector, vacuum_shots, seed.wrapping_add(0x9e37_79b9));
    let sig = traces(scenario, detector, shots, FrameKind::Signal, seed);
    let opts = QuadratureOptions {
        lo_mode_halfwidth: scenario.lo_mode_halfwidth,
        ..QuadratureOptions::default()
    };
    extract_quadratures(&sig, &cal, range, &opts).unwrap().samples
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}
