//! Analysis chain from raw frames to quadrature samples, photon statistics
//! and Q-function estimates.
//!
//! Per shot: sum the ROI rows into an `N`-point trace, take the unitary DFT
//! `K_p = N^-1/2 sum_j exp(+i 2 pi p j / N) n_j`, subtract the vacuum mean
//! `<K_p>_vac`, and scale by the LO amplitude `|beta| = sqrt(n_t)`:
//!
//! ```text
//! x_p + i y_p = sqrt(2 / n_t) * sqrt(N) * (K_p - <K_p>_vac)
//! ```
//!
//! The `sqrt(N)` converts the unitary coefficient back to the photocount sum
//! `sum_j exp(+i 2 pi p j / N) n_j`, whose shot-noise variance is `n_t`; with
//! it, vacuum quadratures have unit variance and a coherent amplitude `alpha`
//! reads back as `(sqrt 2 Re alpha, sqrt 2 Im alpha)`.

mod calib;
mod dft;
mod qfunc;
mod quadrature;
mod reduce;
mod stats;

pub use calib::{vacuum_average, VacuumCalibration};
pub use dft::{dft_modes, dft_modes_batch, ModeAmplitudes, UnitaryDft};
pub use qfunc::{
    histogram2d, joint_q, q_histogram, q_kde, scott_bandwidth, Bandwidth, Estimator, GaussianKde,
    GridKind, HistRange, QGrid,
};
pub use quadrature::{
    dft_variance_spectrum, extract_quadratures, scale_quadrature, AxisSpec, ExclusionReason,
    Extraction, NtSource, Quadrature, QuadratureOptions, QuadratureSamples,
};
pub use reduce::{reduce_frameset, reduce_roi, ReducedTrace, Roi};
pub use stats::{
    mode_angle, mode_spectrum, mode_stats, photon_statistics, quadrature_correlation,
    readout_noise_snr, ModeStats, PhotonStatistics,
};
