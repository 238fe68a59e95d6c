use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::reduce::ReducedTrace;
use crate::error::{Error, Result};

/// Unitary DFT with the positive exponent,
/// `X_p = N^-1/2 sum_j exp(+i 2 pi p j / N) x_j`.
#[derive(Clone)]
pub struct UnitaryDft {
    n: usize,
    plan: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for UnitaryDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryDft").field("n", &self.n).finish()
    }
}

impl UnitaryDft {
    pub fn new(n: usize) -> Self {
        // rustfft's inverse transform carries the +i exponent.
        let plan = FftPlanner::new().plan_fft_inverse(n);
        Self { n, plan }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn transform(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.run(&mut buf);
        buf
    }

    pub fn transform_complex(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.run(&mut buf);
        buf
    }

    fn run(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n, "transform length");
        self.plan.process(buf);
        let scale = 1.0 / (self.n as f64).sqrt();
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

/// Fourier coefficients `K_p`, `p = 0..N`, of one reduced trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeAmplitudes {
    pub k: Vec<Complex64>,
    pub shot_index: u32,
}

impl ModeAmplitudes {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// Modes `p < N/2`; the upper half is their complex conjugate.
    pub fn unique(&self) -> &[Complex64] {
        &self.k[..self.k.len() / 2]
    }
}

pub fn dft_modes(trace: &ReducedTrace) -> ModeAmplitudes {
    ModeAmplitudes {
        k: UnitaryDft::new(trace.len()).transform(&trace.values),
        shot_index: trace.shot_index,
    }
}

/// Transforms many equal-length traces with one plan, in parallel, keeping order.
pub fn dft_modes_batch(traces: &[ReducedTrace]) -> Result<Vec<ModeAmplitudes>> {
    let Some(first) = traces.first() else {
        return Ok(Vec::new());
    };
    let n = first.len();
    if let Some(bad) = traces.iter().find(|t| t.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    let dft = UnitaryDft::new(n);
    Ok(traces
        .par_iter()
        .map(|t| ModeAmplitudes {
            k: dft.transform(&t.values),
            shot_index: t.shot_index,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn naive(values: &[f64]) -> Vec<Complex64> {
        let n = values.len();
        (0..n)
            .map(|p| {
                values
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| Complex64::from_polar(v, 2.0 * PI * ((p * j) % n) as f64 / n as f64))
                    .sum::<Complex64>()
                    / (n as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn constant_trace_lands_in_dc() {
        let trace = ReducedTrace::from_values(vec![3.5; 600], 0);
        let modes = dft_modes(&trace);
        assert!((modes.k[0].re - 600f64.sqrt() * 3.5).abs() < 1e-9);
        assert!(modes.k[0].im.abs() < 1e-9);
        assert!(modes.k[1..].iter().all(|c| c.norm() < 1e-9));
        assert_eq!(modes.unique().len(), 300);
    }

    #[test]
    fn cosine_trace_matches_direct_summation() {
        let (n, p0, a, b, phi) = (600usize, 197usize, 40.0, 3.0, 0.7);
        let values: Vec<f64> = (0..n)
            .map(|j| a + b * (2.0 * PI * ((p0 * j) % n) as f64 / n as f64 + phi).cos())
            .collect();
        let modes = dft_modes(&ReducedTrace::from_values(values.clone(), 0));
        let oracle = naive(&values);
        for (fast, slow) in modes.k.iter().zip(&oracle) {
            assert!((fast - slow).norm() < 1e-9);
        }
        // With the +i kernel the cosine's phase comes back conjugated.
        let expected = Complex64::from_polar((n as f64).sqrt() * b / 2.0, -phi);
        assert!((modes.k[p0] - expected).norm() < 1e-9, "{}", modes.k[p0]);
        assert!((modes.k[n - p0] - expected.conj()).norm() < 1e-9);
    }

    #[test]
    fn batch_rejects_ragged_input() {
        let traces = vec![
            ReducedTrace::from_values(vec![1.0; 8], 0),
            ReducedTrace::from_values(vec![1.0; 6], 1),
        ];
        assert!(dft_modes_batch(&traces).is_err());
    }

    proptest! {
        #[test]
        fn parseval_and_hermitian_symmetry(values in proptest::collection::vec(0.0f64..1.0e4, 2..128usize)) {
            let mut values = values;
            if values.len() % 2 == 1 { values.pop(); }
            let trace = ReducedTrace::from_values(values.clone(), 0);
            let modes = dft_modes(&trace);
            let energy_in: f64 = values.iter().map(|v| v * v).sum();
            let energy_out: f64 = modes.k.iter().map(|c| c.norm_sqr()).sum();
            prop_assert!(((energy_in - energy_out) / energy_in.max(1e-300)).abs() < 1e-12);
            let n = values.len();
            let scale = modes.k[0].norm().max(1.0);
            for p in 1..n {
                prop_assert!((modes.k[n - p] - modes.k[p].conj()).norm() / scale < 1e-12);
            }
        }
    }
}
