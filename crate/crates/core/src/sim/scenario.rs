use std::collections::HashSet;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::detector::DetectorConfig;
use super::field::{build_lo_field, effective_halfwidth};
use crate::error::{Error, Result};

/// Spatial envelope of the local oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoEnvelope {
    /// Equal amplitude in every plane-wave mode `-M..=M`; a flat field for `M = 0`.
    Uniform,
    /// Gaussian beam centered on the ROI with the given 1/e field radius in
    /// meters. Its 99%-energy bandwidth must fit inside `-M..=M`.
    Gaussian { waist: f64 },
}

/// Per-shot global phase applied to every signal mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseDither {
    None,
    UniformRandom,
    /// `phi = depth * sin(2 pi shot / period)`; period in shots.
    Sinusoidal { depth: f64, period: f64 },
}

/// One populated signal plane-wave mode. `|amplitude|^2` is its mean photon
/// number per shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalMode {
    pub p: usize,
    pub amplitude: Complex64,
}

impl SignalMode {
    pub fn new(p: usize, amplitude: Complex64) -> Self {
        Self { p, amplitude }
    }

    /// Real positive amplitude carrying `photons` on average.
    pub fn with_photons(p: usize, photons: f64) -> Self {
        Self::new(p, Complex64::new(photons.sqrt(), 0.0))
    }

    pub fn photons(&self) -> f64 {
        self.amplitude.norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpticalScenario {
    /// Meters.
    pub wavelength: f64,
    /// Mean LO photons reaching the simulated region per shot (`|beta|^2`).
    pub lo_photons_per_shot: f64,
    /// `M`: the LO occupies plane-wave modes `-M..=M`.
    pub lo_mode_halfwidth: usize,
    pub lo_envelope: LoEnvelope,
    /// RMS of the per-shot multiplicative LO amplitude fluctuation.
    pub lo_jitter_rms: f64,
    /// Signal propagation angle relative to the LO, radians.
    pub tilt_angle: f64,
    pub signal_modes: Vec<SignalMode>,
    pub phase_dither: PhaseDither,
    /// RMS of a per-shot multiplicative amplitude fluctuation shared by all
    /// signal modes.
    pub signal_jitter_rms: f64,
}

impl OpticalScenario {
    /// Flat single-mode LO, no signal, no jitter.
    pub fn new(wavelength: f64, lo_photons_per_shot: f64) -> Self {
        Self {
            wavelength,
            lo_photons_per_shot,
            lo_mode_halfwidth: 0,
            lo_envelope: LoEnvelope::Uniform,
            lo_jitter_rms: 0.0,
            tilt_angle: 0.0,
            signal_modes: Vec::new(),
            phase_dither: PhaseDither::None,
            signal_jitter_rms: 0.0,
        }
    }

    /// Replaces the signal spectrum and points the tilt at its strongest mode.
    pub fn with_signal(mut self, modes: Vec<SignalMode>, detector: &DetectorConfig) -> Self {
        self.signal_modes = modes;
        if let Some(central) = self.central_mode() {
            self.tilt_angle = mode_tilt(central.p as f64, detector, self.wavelength);
        }
        self
    }

    /// Strongest signal mode; the lowest index wins ties.
    pub fn central_mode(&self) -> Option<&SignalMode> {
        self.signal_modes.iter().fold(None, |best: Option<&SignalMode>, m| match best {
            Some(b) if b.photons() > m.photons() || (b.photons() == m.photons() && b.p < m.p) => {
                Some(b)
            }
            _ => Some(m),
        })
    }

    pub fn total_signal_photons(&self) -> f64 {
        self.signal_modes.iter().map(SignalMode::photons).sum()
    }

    pub fn photons_in_mode(&self, p: usize) -> f64 {
        self.signal_modes
            .iter()
            .filter(|m| m.p == p)
            .map(SignalMode::photons)
            .sum()
    }

    /// Checks the LO band, the signal spectrum against it, and tilt consistency.
    pub fn validate(&self, detector: &DetectorConfig) -> Result<()> {
        detector.validate()?;
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(Error::invalid(
                "wavelength",
                format!("must be positive, got {}", self.wavelength),
            ));
        }
        if !(self.lo_photons_per_shot.is_finite() && self.lo_photons_per_shot > 0.0) {
            return Err(Error::invalid(
                "lo_photons_per_shot",
                format!("must be positive, got {}", self.lo_photons_per_shot),
            ));
        }
        if !(self.lo_jitter_rms.is_finite() && self.lo_jitter_rms >= 0.0) {
            return Err(Error::invalid("lo_jitter_rms", "must be >= 0"));
        }
        if !(self.signal_jitter_rms.is_finite() && self.signal_jitter_rms >= 0.0) {
            return Err(Error::invalid("signal_jitter_rms", "must be >= 0"));
        }
        if let PhaseDither::Sinusoidal { depth, period } = self.phase_dither {
            if !depth.is_finite() || !(period.is_finite() && period > 0.0) {
                return Err(Error::invalid(
                    "phase_dither",
                    "sinusoidal dither needs a finite depth and a positive period",
                ));
            }
        }
        // Builds the LO once: checks M < N/4 and the Gaussian bandwidth.
        build_lo_field(self, detector)?;
        self.validate_signal(detector)?;
        if let Some(central) = self.central_mode() {
            let q = fractional_mode_index(self.tilt_angle, detector, self.wavelength);
            if !self.tilt_angle.is_finite() || (central.p as f64 - q).abs() > 1.0 {
                return Err(Error::invalid(
                    "tilt_angle",
                    format!(
                        "{} rad maps to mode {:.2}, but the strongest signal mode is p = {}",
                        self.tilt_angle, q, central.p
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Mode range, collision and weak-signal checks on the signal spectrum.
    pub(crate) fn validate_signal(&self, detector: &DetectorConfig) -> Result<()> {
        let n = detector.n_pixels_x;
        let min = 2 * self.lo_mode_halfwidth + 1;
        let max = n / 2 - 1;
        let limit = self.lo_photons_per_shot / 100.0;
        let mut seen = HashSet::new();
        for mode in &self.signal_modes {
            if mode.p < min || mode.p > max {
                return Err(Error::ModeOutOfRange { p: mode.p, min, max });
            }
            if !seen.insert(mode.p) {
                return Err(Error::ModeCollision(mode.p));
            }
            if !(mode.amplitude.re.is_finite() && mode.amplitude.im.is_finite()) {
                return Err(Error::invalid("signal_modes", "amplitudes must be finite"));
            }
            let power = mode.photons();
            if power > limit {
                return Err(Error::SignalTooStrong {
                    p: mode.p,
                    power,
                    limit,
                });
            }
        }
        Ok(())
    }

    /// 99%-energy half-bandwidth of the configured LO field.
    pub fn lo_effective_halfwidth(&self, detector: &DetectorConfig) -> Result<usize> {
        Ok(effective_halfwidth(&build_lo_field(self, detector)?, 0.99))
    }
}

/// Continuous plane-wave mode index `N dx sin(theta) / lambda` of a tilt.
pub fn fractional_mode_index(theta: f64, detector: &DetectorConfig, wavelength: f64) -> f64 {
    detector.n_pixels_x as f64 * detector.pixel_pitch * theta.sin() / wavelength
}

fn mode_tilt(p: f64, detector: &DetectorConfig, wavelength: f64) -> f64 {
    (p * wavelength / (detector.n_pixels_x as f64 * detector.pixel_pitch)).asin()
}

/// Mode amplitudes of a plane wave tilted by `theta` carrying `photons`.
///
/// The wave generally falls between grid modes; it is represented by the
/// nearest mode plus `neighbors` leakage modes on each side, with the exact
/// grid projection (Dirichlet kernel) as amplitudes.
pub fn tilted_plane_wave(
    theta: f64,
    photons: f64,
    detector: &DetectorConfig,
    wavelength: f64,
    neighbors: usize,
) -> Vec<SignalMode> {
    let n = detector.n_pixels_x as f64;
    let q = fractional_mode_index(theta, detector, wavelength);
    let nearest = q.round() as i64;
    let amplitude = photons.sqrt();
    (nearest - neighbors as i64..=nearest + neighbors as i64)
        .filter(|&p| p >= 0)
        .map(|p| {
            let delta = p as f64 - q;
            // (1/N) sum_j exp(i 2 pi delta j / N)
            let coeff = if delta.abs() < 1e-12 {
                Complex64::new(1.0, 0.0)
            } else {
                let num = Complex64::from_polar(1.0, 2.0 * PI * delta) - 1.0;
                let den = Complex64::from_polar(1.0, 2.0 * PI * delta / n) - 1.0;
                num / den / n
            };
            SignalMode::new(p as usize, coeff * amplitude)
        })
        .collect()
}

/// `count` contiguous modes centered on `center` with a Gaussian photon
/// profile `peak_photons * exp(-(p - center)^2 / (2 width^2))` and real
/// positive amplitudes.
pub fn smooth_profile(center: usize, count: usize, peak_photons: f64, width: f64) -> Vec<SignalMode> {
    let start = center as i64 - (count as i64 - 1) / 2;
    (0..count as i64)
        .map(|i| start + i)
        .filter(|&p| p >= 0)
        .map(|p| {
            let d = (p - center as i64) as f64;
            SignalMode::with_photons(p as usize, peak_photons * (-d * d / (2.0 * width * width)).exp())
        })
        .collect()
}
