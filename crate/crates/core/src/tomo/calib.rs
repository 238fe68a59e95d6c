use num_complex::Complex64;

use super::dft::dft_modes_batch;
use super::reduce::ReducedTrace;
use crate::error::{Error, Result};
use crate::numeric::{sum, CompensatedSum};

/// Mean Fourier coefficients `<K_p>_vac` of signal-blocked exposures.
#[derive(Debug, Clone, PartialEq)]
pub struct VacuumCalibration {
    pub mean_k: Vec<Complex64>,
    pub n_exposures: usize,
    pub mean_n_t: f64,
}

impl VacuumCalibration {
    /// Number of exposures averaged by default.
    pub const DEFAULT_EXPOSURES: usize = 500;

    pub fn len(&self) -> usize {
        self.mean_k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_k.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_exposures == 0 {
            return Err(Error::invalid("calibration", "n_exposures must be >= 1"));
        }
        let finite = self.mean_k.iter().all(|c| c.re.is_finite() && c.im.is_finite());
        if !finite || !self.mean_n_t.is_finite() {
            return Err(Error::invalid("calibration", "entries must be finite"));
        }
        Ok(())
    }
}

pub fn vacuum_average(traces: &[ReducedTrace]) -> Result<VacuumCalibration> {
    if traces.is_empty() {
        return Err(Error::EmptyInput("vacuum traces"));
    }
    let modes = dft_modes_batch(traces)?;
    let n = modes[0].len();
    let count = modes.len() as f64;
    let mut re = vec![CompensatedSum::new(); n];
    let mut im = vec![CompensatedSum::new(); n];
    for m in &modes {
        for (p, k) in m.k.iter().enumerate() {
            re[p].add(k.re);
            im[p].add(k.im);
        }
    }
    let mean_k = re
        .iter()
        .zip(&im)
        .map(|(r, i)| Complex64::new(r.value() / count, i.value() / count))
        .collect();
    Ok(VacuumCalibration {
        mean_k,
        n_exposures: traces.len(),
        mean_n_t: sum(traces.iter().map(|t| t.n_t)) / count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomo::dft_modes;

    #[test]
    fn identical_traces_average_to_their_dft() {
        let values: Vec<f64> = (0..600).map(|j| 1000.0 + (j % 7) as f64).collect();
        let trace = ReducedTrace::from_values(values, 0);
        let traces = vec![trace.clone(); VacuumCalibration::DEFAULT_EXPOSURES];
        let cal = vacuum_average(&traces).unwrap();
        let single = dft_modes(&trace);
        assert_eq!(cal.n_exposures, 500);
        for (a, b) in cal.mean_k.iter().zip(&single.k) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
        }
        assert!((cal.mean_n_t - trace.n_t).abs() < 1e-9);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert_eq!(vacuum_average(&[]), Err(Error::EmptyInput("vacuum traces")));
    }
}
