use crate::error::{Error, Result};

/// Geometry and noise model of the detector region that is simulated.
///
/// `n_pixels_x` is the transform length `N`; column expectations are split
/// evenly across `n_rows`, each row drawing independent noise.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub n_pixels_x: usize,
    pub n_rows: usize,
    /// Pixel pitch in meters.
    pub pixel_pitch: f64,
    pub quantum_efficiency: f64,
    /// Gaussian readout noise per pixel, electrons RMS.
    pub read_noise_rms: f64,
    /// Dark electrons per pixel per exposure.
    pub dark_rate: f64,
    /// Saturation level in electrons.
    pub full_well: u32,
    /// Constant bias added before digitization, counts.
    pub adc_offset: u32,
}

impl DetectorConfig {
    /// 600 x 10 pixel region of a back-illuminated CCD with 20 um pixels and
    /// 98% quantum efficiency at 780 nm. Readout noise is left at zero; use
    /// [`read_noise_for_snr`] to set it for a given illumination level.
    pub fn reference_roi() -> Self {
        Self {
            n_pixels_x: 600,
            n_rows: 10,
            pixel_pitch: 20e-6,
            quantum_efficiency: 0.98,
            read_noise_rms: 0.0,
            dark_rate: 0.0,
            full_well: 60_000,
            adc_offset: 500,
        }
    }

    /// Perfect detector: unit efficiency, no readout noise, no bias.
    pub fn ideal(n_pixels_x: usize, n_rows: usize, pixel_pitch: f64) -> Self {
        Self {
            n_pixels_x,
            n_rows,
            pixel_pitch,
            quantum_efficiency: 1.0,
            read_noise_rms: 0.0,
            dark_rate: 0.0,
            full_well: u16::MAX as u32,
            adc_offset: 0,
        }
    }

    /// Highest digitized value; counts are clamped here.
    pub fn clamp_level(&self) -> u32 {
        self.full_well.saturating_add(self.adc_offset)
    }

    pub fn n_pixels(&self) -> usize {
        self.n_pixels_x * self.n_rows
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pixels_x < 2 || self.n_pixels_x % 2 != 0 {
            return Err(Error::invalid(
                "n_pixels_x",
                format!("must be even and >= 2, got {}", self.n_pixels_x),
            ));
        }
        if self.n_rows < 1 {
            return Err(Error::invalid("n_rows", "must be >= 1"));
        }
        if !(self.pixel_pitch.is_finite() && self.pixel_pitch > 0.0) {
            return Err(Error::invalid(
                "pixel_pitch",
                format!("must be positive, got {}", self.pixel_pitch),
            ));
        }
        if !(self.quantum_efficiency > 0.0 && self.quantum_efficiency <= 1.0) {
            return Err(Error::invalid(
                "quantum_efficiency",
                format!("must be in (0, 1], got {}", self.quantum_efficiency),
            ));
        }
        if !(self.read_noise_rms.is_finite() && self.read_noise_rms >= 0.0) {
            return Err(Error::invalid(
                "read_noise_rms",
                format!("must be >= 0, got {}", self.read_noise_rms),
            ));
        }
        if !(self.dark_rate.is_finite() && self.dark_rate >= 0.0) {
            return Err(Error::invalid(
                "dark_rate",
                format!("must be >= 0, got {}", self.dark_rate),
            ));
        }
        if self.full_well == 0 {
            return Err(Error::invalid("full_well", "must be > 0"));
        }
        if self.clamp_level() > u16::MAX as u32 {
            return Err(Error::invalid(
                "full_well",
                format!(
                    "full_well + adc_offset = {} exceeds 16-bit count storage",
                    self.clamp_level()
                ),
            ));
        }
        Ok(())
    }
}

/// Readout noise (electrons RMS) that puts the illuminated per-pixel variance
/// `snr_db` decibels above the dark variance, for a Poisson-limited pixel
/// collecting `mean_electrons` on average.
pub fn read_noise_for_snr(mean_electrons: f64, snr_db: f64) -> f64 {
    let ratio = 10f64.powf(snr_db / 10.0);
    (mean_electrons / (ratio - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_roi_is_valid() {
        let d = DetectorConfig::reference_roi();
        d.validate().unwrap();
        assert_eq!(d.n_pixels_x, 600);
        assert_eq!(d.pixel_pitch, 20e-6);
        assert_eq!(d.quantum_efficiency, 0.98);
    }

    #[test]
    fn rejects_bad_geometry_and_efficiency() {
        let mut d = DetectorConfig::reference_roi();
        d.n_pixels_x = 601;
        assert!(matches!(d.validate(), Err(Error::Invalid { field: "n_pixels_x", .. })));
        let mut d = DetectorConfig::reference_roi();
        d.quantum_efficiency = 1.5;
        assert!(matches!(
            d.validate(),
            Err(Error::Invalid { field: "quantum_efficiency", .. })
        ));
        let mut d = DetectorConfig::reference_roi();
        d.full_well = 65_535;
        assert!(d.validate().is_err());
    }

    #[test]
    fn snr_noise_inverts() {
        let sigma = read_noise_for_snr(1000.0, 15.0);
        let ratio = (1000.0 + sigma * sigma) / (sigma * sigma);
        assert!((10.0 * ratio.log10() - 15.0).abs() < 1e-12);
    }
}
