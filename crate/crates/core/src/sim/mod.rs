//! Synthetic CCD frames for a tilted multimode signal interfering with a
//! plane-wave local oscillator.
//!
//! Fields are sampled at pixel centers in photoelectron units
//! (`|E|^2` = expected photons per column before quantum efficiency).
//! Every random draw for a shot comes from counter-based ChaCha streams keyed
//! by `(master_seed, shot_index)`, so frame sets are bit-identical regardless
//! of how shots are scheduled across threads.

mod detect;
mod detector;
mod field;
mod rng;
mod scenario;
mod sequence;

pub use detect::{detect_frame, Frame, FrameKind};
pub use detector::{read_noise_for_snr, DetectorConfig};
pub use field::{
    build_lo_field, build_signal_field, draw_signal_realization, effective_halfwidth,
    expected_counts, plane_wave_mode, signal_field_for, SignalRealization,
};
pub use rng::{ShotStreams, StreamPurpose};
pub use scenario::{
    fractional_mode_index, smooth_profile, tilted_plane_wave, LoEnvelope, OpticalScenario,
    PhaseDither, SignalMode,
};
pub use sequence::{run_exposure_sequence, synthesize_shot, FrameSet};
