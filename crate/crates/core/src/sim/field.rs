use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::detector::DetectorConfig;
use super::scenario::{LoEnvelope, OpticalScenario, PhaseDither};
use crate::error::{Error, Result};
use crate::tomo::UnitaryDft;

/// Detector-grid plane-wave mode `u_p(j) = exp(-i 2 pi p j / N) / sqrt(N)`.
/// Negative `p` addresses the wrapped index `N + p`.
pub fn plane_wave_mode(p: i64, n: usize) -> Vec<Complex64> {
    let norm = 1.0 / (n as f64).sqrt();
    (0..n as i64)
        .map(|j| {
            let phase = (p * j).rem_euclid(n as i64) as f64 / n as f64;
            Complex64::from_polar(norm, -2.0 * PI * phase)
        })
        .collect()
}

/// LO field `E_LO(x_j)` at pixel centers, normalized so that
/// `sum_j |E_LO|^2 = lo_photons_per_shot`.
pub fn build_lo_field(scenario: &OpticalScenario, detector: &DetectorConfig) -> Result<Vec<Complex64>> {
    let n = detector.n_pixels_x;
    let m = scenario.lo_mode_halfwidth;
    if m >= n / 4 {
        return Err(Error::LoBandTooWide { m, limit: n / 4 });
    }
    let photons = scenario.lo_photons_per_shot;
    match scenario.lo_envelope {
        LoEnvelope::Uniform => {
            let coeff = (photons / (2 * m + 1) as f64).sqrt();
            let mut field = vec![Complex64::new(0.0, 0.0); n];
            for k in -(m as i64)..=m as i64 {
                for (f, u) in field.iter_mut().zip(plane_wave_mode(k, n)) {
                    *f += u * coeff;
                }
            }
            Ok(field)
        }
        LoEnvelope::Gaussian { waist } => {
            if !(waist.is_finite() && waist > 0.0) {
                return Err(Error::invalid(
                    "lo_envelope",
                    format!("gaussian waist must be positive, got {waist}"),
                ));
            }
            let center = (n as f64 - 1.0) / 2.0;
            let raw: Vec<f64> = (0..n)
                .map(|j| {
                    let r = (j as f64 - center) * detector.pixel_pitch / waist;
                    (-r * r).exp()
                })
                .collect();
            let energy: f64 = raw.iter().map(|g| g * g).sum();
            let scale = (photons / energy).sqrt();
            let field: Vec<Complex64> = raw.iter().map(|g| Complex64::new(g * scale, 0.0)).collect();
            let effective = effective_halfwidth(&field, 0.99);
            if effective > m {
                return Err(Error::invalid(
                    "lo_envelope",
                    format!(
                        "gaussian LO spreads over |p| <= {effective} (99% energy) but lo_mode_halfwidth is {m}"
                    ),
                ));
            }
            Ok(field)
        }
    }
}

/// Smallest `M` such that plane-wave modes `-M..=M` carry at least `fraction`
/// of the field's energy.
pub fn effective_halfwidth(field: &[Complex64], fraction: f64) -> usize {
    let n = field.len();
    let coeffs = UnitaryDft::new(n).transform_complex(field);
    let power: Vec<f64> = coeffs.iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    let mut inside = power[0];
    let mut m = 0;
    while inside < fraction * total && m < n / 2 {
        m += 1;
        inside += power[m];
        if n - m != m {
            inside += power[n - m];
        }
    }
    m
}

/// Per-shot draw of the signal's global phase and shared amplitude gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalRealization {
    pub phase: f64,
    pub gain: f64,
}

impl SignalRealization {
    pub const STATIC: SignalRealization = SignalRealization {
        phase: 0.0,
        gain: 1.0,
    };

    fn factor(&self) -> Complex64 {
        Complex64::from_polar(self.gain, self.phase)
    }
}

pub fn draw_signal_realization<R: Rng + ?Sized>(
    scenario: &OpticalScenario,
    shot_index: u64,
    rng: &mut R,
) -> SignalRealization {
    let phase = match scenario.phase_dither {
        PhaseDither::None => 0.0,
        PhaseDither::UniformRandom => rng.random::<f64>() * 2.0 * PI,
        PhaseDither::Sinusoidal { depth, period } => {
            depth * (2.0 * PI * shot_index as f64 / period).sin()
        }
    };
    let gain = if scenario.signal_jitter_rms > 0.0 {
        let jitter = Normal::new(0.0, scenario.signal_jitter_rms).expect("validated jitter");
        1.0 + jitter.sample(rng)
    } else {
        1.0
    };
    SignalRealization { phase, gain }
}

/// `E_S(x_j) = gain * exp(i phase) * sum_p alpha_p u_p(x_j)`.
pub fn signal_field_for(
    scenario: &OpticalScenario,
    detector: &DetectorConfig,
    realization: SignalRealization,
) -> Vec<Complex64> {
    let n = detector.n_pixels_x;
    let mut field = vec![Complex64::new(0.0, 0.0); n];
    let factor = realization.factor();
    for mode in &scenario.signal_modes {
        let amp = mode.amplitude * factor;
        for (f, u) in field.iter_mut().zip(plane_wave_mode(mode.p as i64, n)) {
            *f += u * amp;
        }
    }
    field
}

/// Signal field for one shot, drawing its dither phase and gain from `rng`.
pub fn build_signal_field<R: Rng + ?Sized>(
    scenario: &OpticalScenario,
    detector: &DetectorConfig,
    shot_index: u64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    scenario.validate_signal(detector)?;
    let realization = draw_signal_realization(scenario, shot_index, rng);
    Ok(signal_field_for(scenario, detector, realization))
}

/// Expected photoelectrons per column, `QE * |E_LO + E_S|^2`.
pub fn expected_counts(
    lo: &[Complex64],
    signal: &[Complex64],
    detector: &DetectorConfig,
) -> Result<Vec<f64>> {
    if lo.len() != signal.len() {
        return Err(Error::LengthMismatch {
            expected: lo.len(),
            actual: signal.len(),
        });
    }
    Ok(lo
        .iter()
        .zip(signal)
        .map(|(l, s)| detector.quantum_efficiency * (l + s).norm_sqr())
        .collect())
}
