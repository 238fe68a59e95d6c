//! One function per pipeline stage. Each reads its inputs from files and
//! writes its outputs to files; nothing else is shared between stages.

use std::fs;
use std::path::{Path, PathBuf};

use uqst_core::sim::{run_exposure_sequence, FrameKind};
use uqst_core::tomo::{
    extract_quadratures, joint_q, mode_spectrum, readout_noise_snr, reduce_frameset, vacuum_average,
    AxisSpec, Bandwidth, Estimator, HistRange, ModeStats, NtSource, QGrid, QuadratureOptions,
    QuadratureSamples,
};

use crate::calibration::{self, StoredCalibration};
use crate::config::{parse_config, RunConfig};
use crate::error::{CliError, Result};
use crate::export::{self, sha256_hex, Provenance};
use crate::frames::{self, FrameFile};

/// Seed of the exposure stream for each frame kind. Signal, vacuum and dark
/// runs of one configuration must not share detector noise.
pub fn kind_seed(seed: u64, kind: FrameKind) -> u64 {
    seed.wrapping_add((kind.code() as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_config(&text).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

struct Loaded {
    file: FrameFile,
    sha256: String,
}

fn load_frames(path: &Path) -> Result<Loaded> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    let sha256 = sha256_hex(&bytes);
    let file = frames::decode(&bytes).map_err(|source| CliError::Frames {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Loaded { file, sha256 })
}

fn load_calibration(path: Option<&Path>) -> Result<(StoredCalibration, String)> {
    let hint = "run `uqst calibrate --frames <vacuum.uqst> --out <calibration.txt>` first";
    let Some(path) = path else {
        return Err(CliError::MissingCalibration(format!(
            "no vacuum calibration given (--calibration); {hint}"
        )));
    };
    if !path.exists() {
        return Err(CliError::MissingCalibration(format!(
            "calibration file {} does not exist; {hint}",
            path.display()
        )));
    }
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let stored = calibration::parse(&text).map_err(|source| CliError::Calibration {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((stored, sha256_hex(text.as_bytes())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(CliError::io(path))
}

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub path: PathBuf,
    pub frames: usize,
    pub saturated_pixels: usize,
}

/// Generates exposures of `kind` and stores them. `shots` defaults to
/// `run.shots` for signal sets and `run.vacuum_shots` otherwise.
pub fn simulate(config: &Path, kind: FrameKind, out: &Path, shots: Option<usize>) -> Result<SimulateReport> {
    let cfg = load_config(config)?;
    simulate_config(&cfg, kind, out, shots)
}

pub fn simulate_config(cfg: &RunConfig, kind: FrameKind, out: &Path, shots: Option<usize>) -> Result<SimulateReport> {
    let shots = shots.unwrap_or(match kind {
        FrameKind::Signal => cfg.run.shots,
        _ => cfg.run.vacuum_shots,
    });
    let set = run_exposure_sequence(
        &cfg.scenario,
        &cfg.detector,
        shots,
        kind,
        kind_seed(cfg.run.seed, kind),
    )?;
    frames::write_frameset(out, &set, &cfg.run).map_err(|source| CliError::Frames {
        path: out.to_path_buf(),
        source,
    })?;
    Ok(SimulateReport {
        path: out.to_path_buf(),
        frames: set.len(),
        saturated_pixels: set.frames.iter().map(|f| f.saturated).sum(),
    })
}

fn provenance(loaded: &Loaded, extra: &[(&str, &str)]) -> Provenance {
    let mut inputs = vec![("frames".to_string(), loaded.sha256.clone())];
    inputs.extend(extra.iter().map(|(n, d)| (n.to_string(), d.to_string())));
    Provenance {
        config_sha256: sha256_hex(loaded.file.config_text.as_bytes()),
        seed: loaded.file.run.seed,
        inputs,
    }
}

#[derive(Debug, Clone)]
pub struct CalibrateReport {
    pub exposures: usize,
    pub mean_n_t: f64,
}

/// Averages the Fourier coefficients of a vacuum frame set.
pub fn calibrate(frames_path: &Path, out: &Path) -> Result<CalibrateReport> {
    let loaded = load_frames(frames_path)?;
    let file = &loaded.file;
    if file.set.kind != FrameKind::Vacuum {
        return Err(CliError::Mismatch(format!(
            "{} holds {} frames; calibration needs vacuum frames",
            frames_path.display(),
            file.set.kind.name()
        )));
    }
    let traces = reduce_frameset(&file.set, &file.run.roi)?;
    let cal = vacuum_average(&traces)?;
    let stored = StoredCalibration {
        calibration: cal,
        roi: file.run.roi,
        source_sha256: loaded.sha256.clone(),
    };
    let mut lines = provenance(&loaded, &[]).lines();
    lines.insert(0, "uqst vacuum calibration".to_string());
    write(out, calibration::serialize(&stored, &lines))?;
    Ok(CalibrateReport {
        exposures: stored.calibration.n_exposures,
        mean_n_t: stored.calibration.mean_n_t,
    })
}

struct Extracted {
    loaded: Loaded,
    cal_sha: String,
    samples: QuadratureSamples,
    excluded: usize,
}

fn extract(
    frames_path: &Path,
    calibration_path: Option<&Path>,
    range: Option<(usize, usize)>,
    n_t: NtSource,
) -> Result<Extracted> {
    let (stored, cal_sha) = load_calibration(calibration_path)?;
    let loaded = load_frames(frames_path)?;
    let file = &loaded.file;
    let Some(scenario) = &file.set.scenario else {
        return Err(CliError::Mismatch(format!(
            "{} holds dark frames, which carry no signal to reconstruct",
            frames_path.display()
        )));
    };
    if stored.roi != file.run.roi {
        return Err(CliError::Mismatch(format!(
            "calibration ROI {:?} differs from the frame set's ROI {:?}",
            stored.roi, file.run.roi
        )));
    }
    let traces = reduce_frameset(&file.set, &file.run.roi)?;
    let options = QuadratureOptions {
        n_t,
        lo_mode_halfwidth: scenario.lo_mode_halfwidth,
        ..QuadratureOptions::default()
    };
    let range = range.unwrap_or(file.run.mode_range);
    let extraction = extract_quadratures(&traces, &stored.calibration, range, &options)?;
    Ok(Extracted {
        loaded,
        cal_sha,
        samples: extraction.samples,
        excluded: extraction.excluded.len(),
    })
}

#[derive(Debug, Clone, Default)]
pub struct ReconstructOptions {
    pub out_dir: Option<PathBuf>,
    pub dump_quadratures: bool,
    /// Mode whose Q-function is exported; defaults to the strongest signal
    /// mode if it is in range, else the middle of the range.
    pub q_mode: Option<usize>,
    pub n_t: NtSource,
}

#[derive(Debug, Clone)]
pub struct ReconstructReport {
    pub out_dir: PathBuf,
    pub stats: Vec<ModeStats>,
    pub q_mode: usize,
    pub excluded: usize,
    pub files: Vec<PathBuf>,
}

impl ReconstructReport {
    pub fn mode(&self, p: usize) -> Option<&ModeStats> {
        self.stats.iter().find(|s| s.p == p)
    }
}

/// Quadratures, per-mode statistics and Q-functions of a signal frame set.
/// Nothing is written unless every step succeeds.
pub fn reconstruct(
    frames_path: &Path,
    calibration_path: Option<&Path>,
    opts: &ReconstructOptions,
) -> Result<ReconstructReport> {
    let ex = extract(frames_path, calibration_path, None, opts.n_t)?;
    let file = &ex.loaded.file;
    let scenario = file.set.scenario.as_ref().expect("checked in extract");
    let det = &file.set.detector;
    let modes = ex.samples.modes();
    let stats = mode_spectrum(&ex.samples, modes.clone(), det, scenario.wavelength)?;

    let q_mode = match opts.q_mode {
        Some(p) => p,
        None => scenario
            .central_mode()
            .map(|m| m.p)
            .filter(|p| modes.contains(p))
            .unwrap_or((modes.start() + modes.end()) / 2),
    };
    let run = &file.run;
    let hist = joint_q(
        &ex.samples,
        AxisSpec::x(q_mode),
        AxisSpec::y(q_mode),
        Estimator::Histogram {
            bins: run.hist_bins,
            range: HistRange::Auto,
        },
    )?;
    let kde = joint_q(
        &ex.samples,
        AxisSpec::x(q_mode),
        AxisSpec::y(q_mode),
        Estimator::Kde {
            grid: run.kde_grid,
            bandwidth: Bandwidth::Scott,
        },
    )?;

    let prov = provenance(&ex.loaded, &[("calibration", &ex.cal_sha)]);
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| run.output_dir.clone());
    let mut outputs: Vec<(PathBuf, Vec<u8>)> = vec![
        (out_dir.join("mode_stats.csv"), export::mode_stats_csv(&stats, &prov).into_bytes()),
        (out_dir.join("spectrum.csv"), export::spectrum_csv(&stats, &prov).into_bytes()),
    ];
    outputs.extend(grid_outputs(&out_dir, &format!("q_hist_p{q_mode}"), &hist, &prov));
    outputs.extend(grid_outputs(&out_dir, &format!("q_kde_p{q_mode}"), &kde, &prov));
    if opts.dump_quadratures {
        outputs.push((
            out_dir.join("quadratures.csv"),
            export::quadratures_csv(&ex.samples, &prov).into_bytes(),
        ));
    }
    let files = write_outputs(&out_dir, outputs, &prov)?;
    Ok(ReconstructReport {
        out_dir,
        stats,
        q_mode,
        excluded: ex.excluded,
        files,
    })
}

fn grid_outputs(dir: &Path, stem: &str, grid: &QGrid, prov: &Provenance) -> Vec<(PathBuf, Vec<u8>)> {
    vec![
        (dir.join(format!("{stem}.csv")), export::qgrid_csv(grid, prov).into_bytes()),
        (dir.join(format!("{stem}.pgm")), export::qgrid_pgm(grid, prov)),
    ]
}

/// Writes the prepared files plus `provenance.txt`, the only artifact that
/// carries a timestamp.
fn write_outputs(dir: &Path, outputs: Vec<(PathBuf, Vec<u8>)>, prov: &Provenance) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let mut written = Vec::new();
    for (path, bytes) in outputs {
        write(&path, bytes)?;
        written.push(path);
    }
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut text: String = prov.lines().into_iter().map(|l| l + "\n").collect();
    text.push_str(&format!("created_unix = {created}\n"));
    for p in &written {
        if let Some(name) = p.file_name() {
            text.push_str(&format!("output = {}\n", name.to_string_lossy()));
        }
    }
    let path = dir.join("provenance.txt");
    write(&path, text)?;
    written.push(path);
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxesChoice {
    Xx,
    Xy,
    Yy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorChoice {
    Hist,
    Kde,
}

#[derive(Debug, Clone)]
pub struct QfuncOptions {
    pub mode: usize,
    pub joint: Option<usize>,
    pub axes: Option<AxesChoice>,
    pub estimator: EstimatorChoice,
    pub out_dir: Option<PathBuf>,
    pub n_t: NtSource,
}

#[derive(Debug, Clone)]
pub struct QfuncReport {
    pub grid: QGrid,
    pub files: Vec<PathBuf>,
}

/// Single-mode `Q(x_p, y_p)` or a two-mode density over the chosen axes.
pub fn qfunc(frames_path: &Path, calibration_path: Option<&Path>, opts: &QfuncOptions) -> Result<QfuncReport> {
    let (a, b) = match (opts.joint, opts.axes) {
        (None, None) => (AxisSpec::x(opts.mode), AxisSpec::y(opts.mode)),
        (None, Some(_)) => {
            return Err(CliError::Usage(
                "--axes selects quadratures of two modes and needs --joint".into(),
            ))
        }
        (Some(q), axes) => match axes.unwrap_or(AxesChoice::Xx) {
            AxesChoice::Xx => (AxisSpec::x(opts.mode), AxisSpec::x(q)),
            AxesChoice::Xy => (AxisSpec::x(opts.mode), AxisSpec::y(q)),
            AxesChoice::Yy => (AxisSpec::y(opts.mode), AxisSpec::y(q)),
        },
    };
    if a == b {
        return Err(CliError::Usage(format!(
            "both axes are {a}; choose a different --joint mode or --axes"
        )));
    }
    let lo = opts.mode.min(opts.joint.unwrap_or(opts.mode));
    let hi = opts.mode.max(opts.joint.unwrap_or(opts.mode));
    let ex = extract(frames_path, calibration_path, Some((lo, hi)), opts.n_t)?;
    let run = &ex.loaded.file.run;
    let (estimator, tag) = match opts.estimator {
        EstimatorChoice::Hist => (
            Estimator::Histogram {
                bins: run.hist_bins,
                range: HistRange::Auto,
            },
            "hist",
        ),
        EstimatorChoice::Kde => (
            Estimator::Kde {
                grid: run.kde_grid,
                bandwidth: Bandwidth::Scott,
            },
            "kde",
        ),
    };
    let grid = joint_q(&ex.samples, a, b, estimator)?;
    let stem = if opts.joint.is_none() {
        format!("q_{tag}_p{}", opts.mode)
    } else {
        format!("q_{tag}_{a}_{b}")
    };
    let prov = provenance(&ex.loaded, &[("calibration", &ex.cal_sha)]);
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| run.output_dir.clone());
    let files = write_outputs(&out_dir, grid_outputs(&out_dir, &stem, &grid, &prov), &prov)?;
    Ok(QfuncReport { grid, files })
}

/// Illuminated-to-dark count variance ratio in dB.
pub fn noise(lit_path: &Path, dark_path: &Path) -> Result<f64> {
    let lit = load_frames(lit_path)?.file;
    let dark = load_frames(dark_path)?.file;
    if dark.set.kind != FrameKind::Dark {
        return Err(CliError::Mismatch(format!(
            "{} holds {} frames; expected dark frames",
            dark_path.display(),
            dark.set.kind.name()
        )));
    }
    if lit.set.kind == FrameKind::Dark {
        return Err(CliError::Mismatch(format!(
            "{} holds dark frames; expected illuminated frames",
            lit_path.display()
        )));
    }
    if lit.run.roi != dark.run.roi {
        return Err(CliError::Mismatch("lit and dark sets use different ROIs".into()));
    }
    let lit_traces = reduce_frameset(&lit.set, &lit.run.roi)?;
    let dark_traces = reduce_frameset(&dark.set, &dark.run.roi)?;
    Ok(readout_noise_snr(&lit_traces, &dark_traces)?)
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub signal: SimulateReport,
    pub vacuum: SimulateReport,
    pub calibration: CalibrateReport,
    pub reconstruction: ReconstructReport,
}

/// simulate (signal and vacuum) -> calibrate -> reconstruct, all inside the
/// output directory.
pub fn pipeline(config: &Path, out_dir: Option<&Path>, opts: &ReconstructOptions) -> Result<PipelineReport> {
    let cfg = load_config(config)?;
    let dir = out_dir.map_or_else(|| cfg.run.output_dir.clone(), Path::to_path_buf);
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let signal_path = dir.join("signal.uqst");
    let vacuum_path = dir.join("vacuum.uqst");
    let cal_path = dir.join("calibration.txt");
    let signal = simulate_config(&cfg, FrameKind::Signal, &signal_path, None)?;
    let vacuum = simulate_config(&cfg, FrameKind::Vacuum, &vacuum_path, None)?;
    let calibration = calibrate(&vacuum_path, &cal_path)?;
    let opts = ReconstructOptions {
        out_dir: Some(dir),
        ..opts.clone()
    };
    let reconstruction = reconstruct(&signal_path, Some(&cal_path), &opts)?;
    Ok(PipelineReport {
        signal,
        vacuum,
        calibration,
        reconstruction,
    })
}
