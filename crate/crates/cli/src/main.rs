use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use uqst::commands::{self, AxesChoice, EstimatorChoice, QfuncOptions, ReconstructOptions};
use uqst::CliError;
use uqst_core::sim::FrameKind;
use uqst_core::tomo::NtSource;

#[derive(Parser)]
#[command(name = "uqst", version, about = "Simulated unbalanced array detection and quantum state tomography")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Signal,
    Vacuum,
    Dark,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axes {
    Xx,
    Xy,
    Yy,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Hist,
    Kde,
}

#[derive(Clone, Copy, ValueEnum)]
enum NtArg {
    /// Total ROI counts of each shot.
    PerShot,
    /// Mean total counts of the vacuum calibration.
    Calibration,
}

impl From<NtArg> for NtSource {
    fn from(v: NtArg) -> Self {
        match v {
            NtArg::PerShot => NtSource::PerShot,
            NtArg::Calibration => NtSource::CalibrationMean,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate exposures and store them as a frame file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "signal")]
        kind: Kind,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `shots` / `vacuum_shots` from the configuration.
        #[arg(long)]
        shots: Option<usize>,
    },
    /// Average a vacuum frame set into a calibration file.
    Calibrate {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract quadratures and export mode statistics and Q-functions.
    Reconstruct {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Also write every (shot, p, x, y) sample.
        #[arg(long)]
        dump_quadratures: bool,
        /// Mode whose Q-function is exported.
        #[arg(long)]
        mode: Option<usize>,
        #[arg(long, value_enum, default_value = "per-shot")]
        n_t: NtArg,
    },
    /// Export a single-mode or two-mode Q-function.
    Qfunc {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long)]
        mode: usize,
        /// Second mode for a joint density.
        #[arg(long)]
        joint: Option<usize>,
        /// Quadratures of (mode, joint) on the two axes.
        #[arg(long, value_enum)]
        axes: Option<Axes>,
        #[arg(long, value_enum, default_value = "kde")]
        estimator: EstimatorArg,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "per-shot")]
        n_t: NtArg,
    },
    /// Readout-noise SNR of an illuminated frame set against a dark one.
    Noise {
        #[arg(long)]
        lit: PathBuf,
        #[arg(long)]
        dark: PathBuf,
    },
    /// simulate, calibrate and reconstruct in one go.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        dump_quadratures: bool,
    },
}

fn run(cli: Cli) -> uqst::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate { config, kind, out, shots } => {
            let kind = match kind {
                Kind::Signal => FrameKind::Signal,
                Kind::Vacuum => FrameKind::Vacuum,
                Kind::Dark => FrameKind::Dark,
            };
            let r = commands::simulate(&config, kind, &out, shots)?;
            println!(
                "wrote {} {} frames to {} ({} saturated pixels)",
                r.frames,
                kind.name(),
                r.path.display(),
                r.saturated_pixels
            );
        }
        Command::Calibrate { frames, out } => {
            let r = commands::calibrate(&frames, &out)?;
            println!(
                "calibrated from {} exposures, mean n_t = {:.6e}; wrote {}",
                r.exposures,
                r.mean_n_t,
                out.display()
            );
        }
        Command::Reconstruct {
            frames,
            calibration,
            out_dir,
            dump_quadratures,
            mode,
            n_t,
        } => {
            let opts = ReconstructOptions {
                out_dir,
                dump_quadratures,
                q_mode: mode,
                n_t: n_t.into(),
            };
            let r = commands::reconstruct(&frames, calibration.as_deref(), &opts)?;
            print_reconstruction(&r);
        }
        Command::Qfunc {
            frames,
            calibration,
            mode,
            joint,
            axes,
            estimator,
            out_dir,
            n_t,
        } => {
            let opts = QfuncOptions {
                mode,
                joint,
                axes: axes.map(|a| match a {
                    Axes::Xx => AxesChoice::Xx,
                    Axes::Xy => AxesChoice::Xy,
                    Axes::Yy => AxesChoice::Yy,
                }),
                estimator: match estimator {
                    EstimatorArg::Hist => EstimatorChoice::Hist,
                    EstimatorArg::Kde => EstimatorChoice::Kde,
                },
                out_dir,
                n_t: n_t.into(),
            };
            let r = commands::qfunc(&frames, calibration.as_deref(), &opts)?;
            for f in &r.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Noise { lit, dark } => {
            let db = commands::noise(&lit, &dark)?;
            println!("snr_db = {db:.3}");
        }
        Command::Pipeline {
            config,
            out_dir,
            dump_quadratures,
        } => {
            let opts = ReconstructOptions {
                dump_quadratures,
                ..ReconstructOptions::default()
            };
            let r = commands::pipeline(&config, out_dir.as_deref(), &opts)?;
            println!(
                "simulated {} signal and {} vacuum frames",
                r.signal.frames, r.vacuum.frames
            );
            print_reconstruction(&r.reconstruction);
        }
    }
    Ok(())
}

fn print_reconstruction(r: &commands::ReconstructReport) {
    if r.excluded > 0 {
        println!("excluded {} shots (dead or saturated)", r.excluded);
    }
    if let Some(s) = r.mode(r.q_mode) {
        println!(
            "mode {}: theta = {:.4} mrad, <n> = {:.3} +- {:.3}, dn = {:.3}, var x = {:.4}, var y = {:.4}",
            s.p,
            s.theta_p * 1e3,
            s.mean_n,
            s.stderr_n,
            s.delta_n,
            s.var_x,
            s.var_y
        );
    }
    println!("wrote {} files to {}", r.files.len(), r.out_dir.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code())
        }
    }
}
