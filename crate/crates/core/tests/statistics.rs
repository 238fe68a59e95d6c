//! Monte-Carlo checks of the simulator and estimators against analytic values.

mod common;

use std::f64::consts::PI;

use common::{calibration, compact_detector, mean, quadratures, traces, var, WAVELENGTH};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use uqst_core::sim::{
    draw_signal_realization, read_noise_for_snr, DetectorConfig, FrameKind, OpticalScenario,
    PhaseDither, ShotStreams, SignalMode, StreamPurpose,
};
use uqst_core::tomo::{dft_modes, dft_variance_spectrum, mode_stats, readout_noise_snr};
use uqst_core::Complex64;

const N_LO: f64 = 4.0e6;

fn scenario_with(det: &DetectorConfig, p: usize, alpha: Complex64) -> OpticalScenario {
    OpticalScenario::new(WAVELENGTH, N_LO).with_signal(vec![SignalMode::new(p, alpha)], det)
}

#[test]
fn pixel_counts_are_poissonian_across_shots() {
    let det = DetectorConfig::ideal(128, 2, common::PITCH);
    let sc = OpticalScenario::new(WAVELENGTH, 100.0 * 256.0);
    let set = uqst_core::sim::run_exposure_sequence(&sc, &det, 400, FrameKind::Vacuum, 5).unwrap();
    let mut ratios = Vec::new();
    for px in 0..256 {
        let v: Vec<f64> = set.frames.iter().map(|f| f.counts[px] as f64).collect();
        ratios.push(var(&v) / mean(&v));
        assert!((mean(&v) - 100.0).abs() < 4.0 * (100.0f64 / 400.0).sqrt() + 1e-9);
    }
    let r = mean(&ratios);
    assert!((r - 1.0).abs() < 0.02, "var/mean = {r}");
}

#[test]
fn lo_amplitude_jitter_doubles_in_intensity() {
    let det = compact_detector();
    let mut sc = OpticalScenario::new(WAVELENGTH, N_LO);
    sc.lo_jitter_rms = 0.01;
    let t = traces(&sc, &det, 4000, FrameKind::Vacuum, 21);
    let totals: Vec<f64> = t.iter().map(|t| t.n_t).collect();
    let rel = var(&totals).sqrt() / mean(&totals);
    assert!((rel - 0.02).abs() < 0.001, "relative std {rel}");
}

#[test]
fn vacuum_frames_carry_no_signal() {
    let det = compact_detector();
    let sc = scenario_with(&det, 40, Complex64::new(4.0, 0.0));
    let power = |kind: FrameKind, p: usize| -> Vec<f64> {
        traces(&sc, &det, 2000, kind, 8)
            .iter()
            .map(|t| dft_modes(t).k[p].norm_sqr())
            .collect()
    };
    let at_signal = power(FrameKind::Vacuum, 40);
    let empty = power(FrameKind::Vacuum, 50);
    // |K_p|^2 of shot noise is exponential: std = mean.
    let m = mean(&empty);
    let z = (mean(&at_signal) - m) / (m * (2.0 / 2000.0f64).sqrt());
    assert!(z.abs() < 4.0, "z = {z}");
    let lit = power(FrameKind::Signal, 40);
    assert!(mean(&lit) > 5.0 * m);
}

#[test]
fn uniform_dither_phases_pass_ks() {
    let mut sc = OpticalScenario::new(WAVELENGTH, N_LO);
    sc.phase_dither = PhaseDither::UniformRandom;
    let n = 8000;
    let mut phases: Vec<f64> = (0..n)
        .map(|s| {
            let mut rng = ShotStreams::new(3, s).stream(StreamPurpose::Signal);
            draw_signal_realization(&sc, s, &mut rng).phase / (2.0 * PI)
        })
        .collect();
    phases.sort_by(f64::total_cmp);
    assert!(phases.iter().all(|u| (0.0..1.0).contains(u)));
    let d = phases
        .iter()
        .enumerate()
        .map(|(i, u)| ((i + 1) as f64 / n as f64 - u).max(u - i as f64 / n as f64))
        .fold(0.0, f64::max);
    // 1% critical value of the one-sample KS statistic.
    assert!(d < 1.628 / (n as f64).sqrt(), "D = {d}");
}

#[test]
fn calibration_mean_vanishes_off_dc() {
    let det = compact_detector();
    let sc = OpticalScenario::new(WAVELENGTH, N_LO);
    let shots = 4000;
    let cal = calibration(&sc, &det, shots, 17);
    let scale = ((det.n_pixels_x * shots) as f64 / cal.mean_n_t).sqrt();
    for p in 1..=64 {
        let z = cal.mean_k[p].norm() * scale;
        assert!(z < 4.5, "p={p} z={z}");
    }
    // DC carries the LO: sqrt(N) times the mean column count.
    let dc = cal.mean_k[0].re / (cal.mean_n_t / (det.n_pixels_x as f64).sqrt());
    assert!((dc - 1.0).abs() < 1e-12);
}

#[test]
fn vacuum_quadratures_have_unit_variance() {
    let det = DetectorConfig {
        quantum_efficiency: 0.98,
        read_noise_rms: read_noise_for_snr(0.98 * N_LO / 256.0, 25.0),
        adc_offset: 300,
        ..compact_detector()
    };
    let sc = OpticalScenario::new(WAVELENGTH, N_LO);
    let shots = 16_000;
    let s = quadratures(&sc, &det, shots, 16_000, 31, (20, 24));
    // Independent calibration adds its own mean error.
    let tol = 4.0 * (2.0 / shots as f64).sqrt();
    for p in 20..=24 {
        let (x, y) = s.mode(p).unwrap();
        for q in [&x, &y] {
            assert!(mean(q).abs() < tol, "p={p} mean {}", mean(q));
            assert!((var(q) - 1.0).abs() < 0.05, "p={p} var {}", var(q));
        }
    }
}

#[test]
fn coherent_mode_is_displaced_vacuum() {
    let det = compact_detector();
    let alpha = Complex64::new(2.0, -1.6);
    let sc = scenario_with(&det, 40, alpha);
    let shots = 8000;
    let s = quadratures(&sc, &det, shots, 16_000, 41, (40, 40));
    let (x, y) = s.mode(40).unwrap();
    let sigma = (1.0 / shots as f64 + 1.0 / 16_000.0).sqrt();
    assert!((mean(&x) - 2f64.sqrt() * alpha.re).abs() < 4.0 * sigma);
    assert!((mean(&y) - 2f64.sqrt() * alpha.im).abs() < 4.0 * sigma);
    assert!((var(&x) - 1.0).abs() < 0.05);
    assert!((var(&y) - 1.0).abs() < 0.05);
}

#[test]
fn photon_number_estimators_are_consistent() {
    let det = compact_detector();
    let (shots, vac) = (8000, 16_000);
    for (i, n) in [0.0, 1.0, 7.2, 50.0].into_iter().enumerate() {
        let alpha = Complex64::from_polar(f64::sqrt(n), 0.7);
        let sc = if n == 0.0 {
            OpticalScenario::new(WAVELENGTH, N_LO)
        } else {
            scenario_with(&det, 40, alpha)
        };
        let s = quadratures(&sc, &det, shots, vac, 100 + i as u64, (40, 40));
        let st = mode_stats(&s, 40, &det, WAVELENGTH).unwrap();
        // Calibration error displaces the centroid by ~1/sqrt(vac) per axis.
        let cal_term = (2.0 * n / vac as f64).sqrt();
        let tol = 3.0 * (st.stderr_n.powi(2) + cal_term.powi(2)).sqrt();
        assert!((st.mean_n - n).abs() <= tol, "n={n}: {} +- {tol}", st.mean_n);
        if n > 0.0 {
            let rel = st.delta_n / n.sqrt() - 1.0;
            assert!(rel.abs() < 0.1, "n={n}: delta_n {}", st.delta_n);
        }
    }
}

#[test]
fn quadratures_scale_linearly_with_amplitude() {
    let det = compact_detector();
    let alpha = Complex64::new(1.5, 0.5);
    let shots = 8000;
    let s1 = quadratures(&scenario_with(&det, 40, alpha), &det, shots, 16_000, 7, (40, 40));
    let s2 = quadratures(&scenario_with(&det, 40, alpha * 2.0), &det, shots, 16_000, 8, (40, 40));
    let (x1, y1) = s1.mode(40).unwrap();
    let (x2, y2) = s2.mode(40).unwrap();
    // Each mean: shot error 1/sqrt(shots), calibration 1/sqrt(16000).
    let sigma = (1.0 / shots as f64 + 1.0 / 16_000.0).sqrt();
    let tol = 4.0 * sigma * 5f64.sqrt();
    assert!((mean(&x2) - 2.0 * mean(&x1)).abs() < tol);
    assert!((mean(&y2) - 2.0 * mean(&y1)).abs() < tol);

    let n1 = mode_stats(&s1, 40, &det, WAVELENGTH).unwrap();
    let n2 = mode_stats(&s2, 40, &det, WAVELENGTH).unwrap();
    let cal = |n: f64| (2.0 * n / 16_000.0).sqrt();
    let n_true = alpha.norm_sqr();
    let tol = 4.0
        * ((4.0 * n1.stderr_n).powi(2) + n2.stderr_n.powi(2) + (4.0 * cal(n_true)).powi(2) + cal(4.0 * n_true).powi(2))
            .sqrt();
    assert!((n2.mean_n - 4.0 * n1.mean_n).abs() < tol, "{} vs 4 x {}", n2.mean_n, n1.mean_n);
}

#[test]
fn dithered_mode_forms_an_annulus() {
    let det = compact_detector();
    let chi_crit = ChiSquared::new(35.0).unwrap().inverse_cdf(0.99);
    for (i, n0) in [4.0, 7.2].into_iter().enumerate() {
        let mut sc = scenario_with(&det, 40, Complex64::new(f64::sqrt(n0), 0.0));
        sc.phase_dither = PhaseDither::UniformRandom;
        let s = quadratures(&sc, &det, 8000, 8000, 200 + i as u64, (40, 40));
        let (x, y) = s.mode(40).unwrap();
        let r2: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * a + b * b).collect();
        let want = 2.0 * n0 + 2.0;
        assert!((mean(&r2) / want - 1.0).abs() < 0.05, "n0={n0}: <r^2> = {}", mean(&r2));

        let mut bins = [0usize; 36];
        for (a, b) in x.iter().zip(&y) {
            let t = b.atan2(*a).rem_euclid(2.0 * PI);
            bins[((t / (2.0 * PI) * 36.0) as usize).min(35)] += 1;
        }
        let e = x.len() as f64 / 36.0;
        let chi: f64 = bins.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!(chi < chi_crit, "n0={n0}: chi2 = {chi}");
    }
}

#[test]
fn readout_snr_tracks_illumination() {
    let qe = 0.98;
    let base = DetectorConfig {
        quantum_efficiency: qe,
        read_noise_rms: read_noise_for_snr(qe * N_LO / 256.0, 15.0),
        adc_offset: 500,
        ..compact_detector()
    };
    let lo = OpticalScenario::new(WAVELENGTH, N_LO);
    let lit = traces(&lo, &base, 2000, FrameKind::Vacuum, 61);
    let dark = traces(&lo, &base, 2000, FrameKind::Dark, 62);
    let snr = readout_noise_snr(&lit, &dark).unwrap();
    assert!((snr - 15.0).abs() < 0.5, "{snr} dB");

    let bright = OpticalScenario::new(WAVELENGTH, 2.0 * N_LO);
    let lit2 = traces(&bright, &base, 2000, FrameKind::Vacuum, 63);
    let gain = readout_noise_snr(&lit2, &dark).unwrap() - snr;
    assert!((gain - 3.0).abs() < 0.3, "+{gain} dB");
}

#[test]
fn lo_jitter_stays_inside_lo_band() {
    let det = compact_detector();
    // The M = 2 fringe peaks at 5x the mean intensity; stay below full well.
    let mut quiet = OpticalScenario::new(WAVELENGTH, 1.0e6);
    quiet.lo_mode_halfwidth = 2;
    let mut noisy = quiet.clone();
    noisy.lo_jitter_rms = 0.01;
    let a = dft_variance_spectrum(&traces(&quiet, &det, 2000, FrameKind::Vacuum, 71)).unwrap();
    let b = dft_variance_spectrum(&traces(&noisy, &det, 2000, FrameKind::Vacuum, 72)).unwrap();
    for p in 0..=4 {
        assert!(b[p] / a[p] > 10.0, "p={p} ratio {}", b[p] / a[p]);
    }
    let band = |v: &[f64]| mean(&v[10..=64]);
    assert!((band(&b) / band(&a) - 1.0).abs() < 0.05);
}
