//! Simulation and reconstruction for multimode quantum state tomography with
//! an unbalanced (single-array) heterodyne detector.
//!
//! A weak multimode signal interferes on a CCD with a strong plane-wave local
//! oscillator (LO) tilted relative to it. [`sim`] synthesizes the photocount
//! frames such a setup records, including shot noise, readout noise and LO
//! power jitter. [`tomo`] runs the analysis chain on those frames: ROI
//! reduction, per-shot Fourier transform into plane-wave modes, vacuum
//! background subtraction, quadrature scaling, photon statistics and
//! Husimi Q-function estimates (histogram and Gaussian KDE).
//!
//! Plane-wave mode `p` of an `N`-pixel trace is
//! `u_p(j) = exp(-i 2π p j / N) / √N`; the analysis transform is the unitary
//! DFT with the positive exponent, so a mode amplitude injected by the
//! simulator is read back at the same index `p`.

pub mod error;
pub mod numeric;
pub mod sim;
pub mod tomo;

pub use error::{Error, Result};
pub use num_complex::Complex64;
