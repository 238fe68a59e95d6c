//! Run configuration: a sectioned `key = value` text format.
//!
//! ```text
//! # comment
//! [detector]
//! n_pixels_x = 600
//! pixel_pitch = 20um          # SI float, or a float with a unit suffix
//!
//! [scenario]
//! wavelength = 780e-9
//! lo_photons_per_shot = 6e7
//! signal_modes = 197: 2.68, 0; 198: 1.0, -0.5
//!
//! [run]
//! shots = 8000
//! seed = 1
//! ```
//!
//! Keys are the field names of [`DetectorConfig`], [`OpticalScenario`] and
//! [`RunSettings`]. `#` starts a comment. Every error carries the line it
//! refers to.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;
use uqst_core::sim::{smooth_profile, DetectorConfig, LoEnvelope, OpticalScenario, PhaseDither, SignalMode};
use uqst_core::tomo::Roi;
use uqst_core::Complex64;

pub const MAX_SHOTS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default(), key.as_ref().map(|k| format!("`{k}`: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, key: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            key: key.map(str::to_string),
            message: message.into(),
        }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

/// Settings of the `[run]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub shots: usize,
    pub vacuum_shots: usize,
    pub roi: Roi,
    pub mode_range: (usize, usize),
    pub seed: u64,
    pub output_dir: PathBuf,
    pub hist_bins: usize,
    pub kde_grid: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub detector: DetectorConfig,
    pub scenario: OpticalScenario,
    pub run: RunSettings,
}

/// Configuration embedded in a frame file; dark sets carry no scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDocument {
    pub detector: DetectorConfig,
    pub scenario: Option<OpticalScenario>,
    pub run: RunSettings,
}

const DETECTOR_KEYS: &[&str] = &[
    "n_pixels_x",
    "n_rows",
    "pixel_pitch",
    "quantum_efficiency",
    "read_noise_rms",
    "dark_rate",
    "full_well",
    "adc_offset",
];
const SCENARIO_KEYS: &[&str] = &[
    "wavelength",
    "lo_photons_per_shot",
    "lo_mode_halfwidth",
    "lo_envelope",
    "lo_jitter_rms",
    "tilt_angle",
    "signal_modes",
    "signal_profile",
    "phase_dither",
    "signal_jitter_rms",
];
const RUN_KEYS: &[&str] = &[
    "shots",
    "vacuum_shots",
    "roi",
    "mode_range",
    "seed",
    "output_dir",
    "hist_bins",
    "kde_grid",
];

#[derive(Debug, Clone, Copy)]
enum Unit {
    None,
    Length,
    Angle,
}

fn unit_of(key: &str) -> Unit {
    match key {
        "pixel_pitch" | "wavelength" => Unit::Length,
        "tilt_angle" => Unit::Angle,
        _ => Unit::None,
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Default)]
struct Section {
    header_line: usize,
    entries: HashMap<String, Entry>,
}

impl Section {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn required(&self, section: &str, key: &str) -> Result<&Entry> {
        self.get(key).ok_or_else(|| {
            ConfigError::at(
                self.header_line,
                Some(key),
                format!("required key missing from [{section}]"),
            )
        })
    }
}

fn split_sections(text: &str) -> Result<HashMap<String, Section>> {
    let mut sections: HashMap<String, Section> = HashMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if !matches!(name, "detector" | "scenario" | "run") {
                return Err(ConfigError::at(line, None, format!("unknown section [{name}]")));
            }
            if sections.contains_key(name) {
                return Err(ConfigError::at(line, None, format!("duplicate section [{name}]")));
            }
            sections.insert(
                name.to_string(),
                Section {
                    header_line: line,
                    entries: HashMap::new(),
                },
            );
            current = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::at(line, None, format!("expected `key = value`, got `{content}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(section_name) = current.as_deref() else {
            return Err(ConfigError::at(line, Some(key), "key appears before any section header"));
        };
        let allowed = match section_name {
            "detector" => DETECTOR_KEYS,
            "scenario" => SCENARIO_KEYS,
            _ => RUN_KEYS,
        };
        if !allowed.contains(&key) {
            return Err(ConfigError::at(
                line,
                Some(key),
                format!("unknown key in [{section_name}]"),
            ));
        }
        if value.is_empty() {
            return Err(ConfigError::at(line, Some(key), "empty value"));
        }
        let section = sections.get_mut(section_name).expect("section registered");
        if let Some(prev) = section.entries.get(key) {
            return Err(ConfigError::at(
                line,
                Some(key),
                format!("duplicate key (first set on line {})", prev.line),
            ));
        }
        section.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }
    Ok(sections)
}

fn parse_float(key: &str, entry: &Entry) -> Result<f64> {
    parse_float_str(key, &entry.value, entry.line)
}

fn parse_float_str(key: &str, text: &str, line: usize) -> Result<f64> {
    let text = text.trim();
    let suffixes: &[(&str, f64)] = match unit_of(key) {
        Unit::Length => &[("nm", 1e-9), ("um", 1e-6), ("µm", 1e-6), ("mm", 1e-3), ("m", 1.0)],
        Unit::Angle => &[("urad", 1e-6), ("mrad", 1e-3), ("rad", 1.0)],
        Unit::None => &[],
    };
    let (number, scale) = suffixes
        .iter()
        .find_map(|(s, f)| text.strip_suffix(s).map(|n| (n.trim_end(), *f)))
        .unwrap_or((text, 1.0));
    let v: f64 = number
        .parse()
        .map_err(|_| ConfigError::at(line, Some(key), format!("not a number: `{text}`")))?;
    if !v.is_finite() {
        return Err(ConfigError::at(line, Some(key), "must be finite"));
    }
    Ok(v * scale)
}

fn parse_int<T: std::str::FromStr>(key: &str, entry: &Entry) -> Result<T> {
    entry
        .value
        .parse()
        .map_err(|_| ConfigError::at(entry.line, Some(key), format!("not a non-negative integer: `{}`", entry.value)))
}

fn parse_list(key: &str, entry: &Entry, count: usize) -> Result<Vec<usize>> {
    let parts: Vec<&str> = entry.value.split(',').map(str::trim).collect();
    if parts.len() != count {
        return Err(ConfigError::at(
            entry.line,
            Some(key),
            format!("expected {count} comma-separated integers, got `{}`", entry.value),
        ));
    }
    parts
        .iter()
        .map(|p| {
            p.parse()
                .map_err(|_| ConfigError::at(entry.line, Some(key), format!("not an integer: `{p}`")))
        })
        .collect()
}

/// `name(a, b, ...)` -> `(name, [a, b, ...])`.
fn call_form<'a>(key: &str, entry: &'a Entry) -> Result<(&'a str, Vec<&'a str>)> {
    let v = entry.value.as_str();
    match v.split_once('(') {
        None => Ok((v, Vec::new())),
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| ConfigError::at(entry.line, Some(key), format!("unbalanced parentheses in `{v}`")))?;
            Ok((name.trim(), inner.split(',').map(str::trim).collect()))
        }
    }
}

fn parse_signal_modes(entry: &Entry) -> Result<Vec<SignalMode>> {
    let key = "signal_modes";
    entry
        .value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let bad = || {
                ConfigError::at(
                    entry.line,
                    Some(key),
                    format!("expected `p: re, im`, got `{item}`"),
                )
            };
            let (p, amp) = item.split_once(':').ok_or_else(bad)?;
            let p: usize = p.trim().parse().map_err(|_| bad())?;
            let (re, im) = amp.split_once(',').ok_or_else(bad)?;
            let re = parse_float_str(key, re, entry.line)?;
            let im = parse_float_str(key, im, entry.line)?;
            Ok(SignalMode::new(p, Complex64::new(re, im)))
        })
        .collect()
}

fn parse_detector(s: &Section) -> Result<DetectorConfig> {
    let mut d = DetectorConfig::ideal(2, 1, 1.0);
    d.n_pixels_x = parse_int("n_pixels_x", s.required("detector", "n_pixels_x")?)?;
    d.n_rows = parse_int("n_rows", s.required("detector", "n_rows")?)?;
    d.pixel_pitch = parse_float("pixel_pitch", s.required("detector", "pixel_pitch")?)?;
    d.quantum_efficiency = parse_float("quantum_efficiency", s.required("detector", "quantum_efficiency")?)?;
    if let Some(e) = s.get("read_noise_rms") {
        d.read_noise_rms = parse_float("read_noise_rms", e)?;
    }
    if let Some(e) = s.get("dark_rate") {
        d.dark_rate = parse_float("dark_rate", e)?;
    }
    if let Some(e) = s.get("full_well") {
        d.full_well = parse_int("full_well", e)?;
    }
    if let Some(e) = s.get("adc_offset") {
        d.adc_offset = parse_int("adc_offset", e)?;
    }
    Ok(d)
}

fn parse_scenario(s: &Section, det: &DetectorConfig) -> Result<OpticalScenario> {
    let wavelength = parse_float("wavelength", s.required("scenario", "wavelength")?)?;
    let n_lo = parse_float("lo_photons_per_shot", s.required("scenario", "lo_photons_per_shot")?)?;
    let mut sc = OpticalScenario::new(wavelength, n_lo);
    if let Some(e) = s.get("lo_mode_halfwidth") {
        sc.lo_mode_halfwidth = parse_int("lo_mode_halfwidth", e)?;
    }
    if let Some(e) = s.get("lo_envelope") {
        let key = "lo_envelope";
        sc.lo_envelope = match call_form(key, e)? {
            ("uniform", args) if args.is_empty() => LoEnvelope::Uniform,
            ("gaussian", args) if args.len() == 1 => LoEnvelope::Gaussian {
                waist: parse_float_str("pixel_pitch", args[0], e.line)?,
            },
            _ => {
                return Err(ConfigError::at(
                    e.line,
                    Some(key),
                    format!("expected `uniform` or `gaussian(waist)`, got `{}`", e.value),
                ))
            }
        };
    }
    if let Some(e) = s.get("lo_jitter_rms") {
        sc.lo_jitter_rms = parse_float("lo_jitter_rms", e)?;
    }
    if let Some(e) = s.get("phase_dither") {
        let key = "phase_dither";
        sc.phase_dither = match call_form(key, e)? {
            ("none", args) if args.is_empty() => PhaseDither::None,
            ("uniform_random", args) if args.is_empty() => PhaseDither::UniformRandom,
            ("sinusoidal", args) if args.len() == 2 => PhaseDither::Sinusoidal {
                depth: parse_float_str(key, args[0], e.line)?,
                period: parse_float_str(key, args[1], e.line)?,
            },
            _ => {
                return Err(ConfigError::at(
                    e.line,
                    Some(key),
                    format!(
                        "expected `none`, `uniform_random` or `sinusoidal(depth, period)`, got `{}`",
                        e.value
                    ),
                ))
            }
        };
    }
    if let Some(e) = s.get("signal_jitter_rms") {
        sc.signal_jitter_rms = parse_float("signal_jitter_rms", e)?;
    }

    let mut modes = match s.get("signal_modes") {
        Some(e) => parse_signal_modes(e)?,
        None => Vec::new(),
    };
    if let Some(e) = s.get("signal_profile") {
        let key = "signal_profile";
        let (name, args) = call_form(key, e)?;
        if name != "smooth" || args.len() != 4 {
            return Err(ConfigError::at(
                e.line,
                Some(key),
                format!("expected `smooth(center, count, peak_photons, width)`, got `{}`", e.value),
            ));
        }
        let int = |a: &str| {
            a.parse::<usize>()
                .map_err(|_| ConfigError::at(e.line, Some(key), format!("not an integer: `{a}`")))
        };
        modes.extend(smooth_profile(
            int(args[0])?,
            int(args[1])?,
            parse_float_str(key, args[2], e.line)?,
            parse_float_str(key, args[3], e.line)?,
        ));
    }
    sc = sc.with_signal(modes, det);
    if let Some(e) = s.get("tilt_angle") {
        sc.tilt_angle = parse_float("tilt_angle", e)?;
    }
    Ok(sc)
}

fn parse_run(s: &Section, det: &DetectorConfig, scenario: Option<&OpticalScenario>) -> Result<RunSettings> {
    let shots_entry = s.required("run", "shots")?;
    let shots: usize = parse_int("shots", shots_entry)?;
    if !(1..=MAX_SHOTS).contains(&shots) {
        return Err(ConfigError::at(
            shots_entry.line,
            Some("shots"),
            format!("must be in [1, {MAX_SHOTS}], got {shots}"),
        ));
    }
    let vacuum_shots = match s.get("vacuum_shots") {
        Some(e) => {
            let v: usize = parse_int("vacuum_shots", e)?;
            if !(1..=MAX_SHOTS).contains(&v) {
                return Err(ConfigError::at(
                    e.line,
                    Some("vacuum_shots"),
                    format!("must be in [1, {MAX_SHOTS}], got {v}"),
                ));
            }
            v
        }
        None => uqst_core::tomo::VacuumCalibration::DEFAULT_EXPOSURES,
    };
    let roi = match s.get("roi") {
        Some(e) => {
            let v = parse_list("roi", e, 4)?;
            let roi = Roi::new(v[0], v[1], v[2], v[3]);
            if !roi.fits(det.n_pixels_x, det.n_rows) {
                return Err(ConfigError::at(
                    e.line,
                    Some("roi"),
                    format!("does not fit the {}x{} detector", det.n_pixels_x, det.n_rows),
                ));
            }
            if roi.width % 2 != 0 {
                return Err(ConfigError::at(e.line, Some("roi"), "width must be even"));
            }
            roi
        }
        None => Roi::full(det),
    };
    let lo_m = scenario.map_or(0, |sc| sc.lo_mode_halfwidth);
    let (lo_limit, hi_limit) = (2 * lo_m + 1, roi.width / 2 - 1);
    let mode_range = match s.get("mode_range") {
        Some(e) => {
            let v = parse_list("mode_range", e, 2)?;
            // Dark sets carry no scenario and are never analysed per mode.
            if scenario.is_some() && (v[0] > v[1] || v[0] < lo_limit || v[1] > hi_limit) {
                return Err(ConfigError::at(
                    e.line,
                    Some("mode_range"),
                    format!(
                        "need {lo_limit} <= p_min <= p_max <= {hi_limit}, got {}, {}",
                        v[0], v[1]
                    ),
                ));
            }
            (v[0], v[1])
        }
        None => match scenario.and_then(|sc| sc.central_mode()) {
            Some(c) => (c.p.saturating_sub(7).max(lo_limit), (c.p + 7).min(hi_limit)),
            None => (lo_limit, hi_limit),
        },
    };
    let seed = parse_int("seed", s.required("run", "seed")?)?;
    let output_dir = s
        .get("output_dir")
        .map_or_else(|| PathBuf::from("out"), |e| PathBuf::from(&e.value));
    let hist_bins = match s.get("hist_bins") {
        Some(e) => positive("hist_bins", e, 1)?,
        None => uqst_core::tomo::Estimator::DEFAULT_BINS,
    };
    let kde_grid = match s.get("kde_grid") {
        Some(e) => positive("kde_grid", e, 2)?,
        None => uqst_core::tomo::Estimator::DEFAULT_GRID,
    };
    Ok(RunSettings {
        shots,
        vacuum_shots,
        roi,
        mode_range,
        seed,
        output_dir,
        hist_bins,
        kde_grid,
    })
}

fn positive(key: &str, e: &Entry, min: usize) -> Result<usize> {
    let v: usize = parse_int(key, e)?;
    if v < min {
        return Err(ConfigError::at(e.line, Some(key), format!("must be >= {min}")));
    }
    Ok(v)
}

/// Line to blame for a domain-invariant failure.
fn blame(sections: &HashMap<String, Section>, section: &str, key: &str) -> usize {
    let s = &sections[section];
    s.get(key).map_or(s.header_line, |e| e.line)
}

fn invariant_error(sections: &HashMap<String, Section>, err: uqst_core::Error) -> ConfigError {
    use uqst_core::Error as E;
    let (section, key) = match &err {
        E::Invalid { field, .. } if DETECTOR_KEYS.contains(field) => ("detector", *field),
        E::Invalid { field, .. } if SCENARIO_KEYS.contains(field) => ("scenario", *field),
        E::Invalid { field, .. } if *field == "frames" => ("detector", "n_pixels_x"),
        E::LoBandTooWide { .. } => ("scenario", "lo_mode_halfwidth"),
        E::ModeCollision(_) | E::SignalTooStrong { .. } | E::ModeOutOfRange { .. } => {
            let s = &sections["scenario"];
            if s.get("signal_modes").is_some() {
                ("scenario", "signal_modes")
            } else {
                ("scenario", "signal_profile")
            }
        }
        _ => ("scenario", "wavelength"),
    };
    ConfigError::at(blame(sections, section, key), Some(key), err.to_string())
}

/// Parses a document whose `[scenario]` section may be absent.
pub fn parse_document(text: &str) -> Result<ConfigDocument> {
    let sections = split_sections(text)?;
    let section = |name: &str| {
        sections.get(name).ok_or_else(|| ConfigError {
            line: None,
            key: None,
            message: format!("missing section [{name}]"),
        })
    };
    let det_section = section("detector")?;
    let detector = parse_detector(det_section)?;
    if let Err(e) = detector.validate() {
        return Err(invariant_error(&sections, e));
    }
    let scenario = match sections.get("scenario") {
        Some(s) => {
            let sc = parse_scenario(s, &detector)?;
            if let Err(e) = sc.validate(&detector) {
                return Err(invariant_error(&sections, e));
            }
            Some(sc)
        }
        None => None,
    };
    let run = parse_run(section("run")?, &detector, scenario.as_ref())?;
    Ok(ConfigDocument {
        detector,
        scenario,
        run,
    })
}

/// Parses and validates a complete run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let doc = parse_document(text)?;
    let scenario = doc.scenario.ok_or_else(|| ConfigError {
        line: None,
        key: None,
        message: "missing section [scenario]".to_string(),
    })?;
    Ok(RunConfig {
        detector: doc.detector,
        scenario,
        run: doc.run,
    })
}

fn write_detector(out: &mut String, d: &DetectorConfig) {
    let _ = writeln!(out, "[detector]");
    let _ = writeln!(out, "n_pixels_x = {}", d.n_pixels_x);
    let _ = writeln!(out, "n_rows = {}", d.n_rows);
    let _ = writeln!(out, "pixel_pitch = {:e}", d.pixel_pitch);
    let _ = writeln!(out, "quantum_efficiency = {}", d.quantum_efficiency);
    let _ = writeln!(out, "read_noise_rms = {}", d.read_noise_rms);
    let _ = writeln!(out, "dark_rate = {}", d.dark_rate);
    let _ = writeln!(out, "full_well = {}", d.full_well);
    let _ = writeln!(out, "adc_offset = {}", d.adc_offset);
}

fn write_scenario(out: &mut String, sc: &OpticalScenario) {
    let _ = writeln!(out, "\n[scenario]");
    let _ = writeln!(out, "wavelength = {:e}", sc.wavelength);
    let _ = writeln!(out, "lo_photons_per_shot = {:e}", sc.lo_photons_per_shot);
    let _ = writeln!(out, "lo_mode_halfwidth = {}", sc.lo_mode_halfwidth);
    match sc.lo_envelope {
        LoEnvelope::Uniform => {
            let _ = writeln!(out, "lo_envelope = uniform");
        }
        LoEnvelope::Gaussian { waist } => {
            let _ = writeln!(out, "lo_envelope = gaussian({waist:e})");
        }
    }
    let _ = writeln!(out, "lo_jitter_rms = {}", sc.lo_jitter_rms);
    if !sc.signal_modes.is_empty() {
        let modes: Vec<String> = sc
            .signal_modes
            .iter()
            .map(|m| format!("{}: {:e}, {:e}", m.p, m.amplitude.re, m.amplitude.im))
            .collect();
        let _ = writeln!(out, "signal_modes = {}", modes.join("; "));
    }
    let _ = writeln!(out, "tilt_angle = {:e}", sc.tilt_angle);
    match sc.phase_dither {
        PhaseDither::None => {
            let _ = writeln!(out, "phase_dither = none");
        }
        PhaseDither::UniformRandom => {
            let _ = writeln!(out, "phase_dither = uniform_random");
        }
        PhaseDither::Sinusoidal { depth, period } => {
            let _ = writeln!(out, "phase_dither = sinusoidal({depth:e}, {period:e})");
        }
    }
    let _ = writeln!(out, "signal_jitter_rms = {}", sc.signal_jitter_rms);
}

fn write_run(out: &mut String, r: &RunSettings) {
    let _ = writeln!(out, "\n[run]");
    let _ = writeln!(out, "shots = {}", r.shots);
    let _ = writeln!(out, "vacuum_shots = {}", r.vacuum_shots);
    let _ = writeln!(out, "roi = {}, {}, {}, {}", r.roi.x0, r.roi.y0, r.roi.width, r.roi.height);
    let _ = writeln!(out, "mode_range = {}, {}", r.mode_range.0, r.mode_range.1);
    let _ = writeln!(out, "seed = {}", r.seed);
    let _ = writeln!(out, "output_dir = {}", r.output_dir.display());
    let _ = writeln!(out, "hist_bins = {}", r.hist_bins);
    let _ = writeln!(out, "kde_grid = {}", r.kde_grid);
}

/// Canonical text of a document. Floats use the shortest representation
/// that reads back to the same value, so parsing the output reproduces the
/// document exactly.
pub fn serialize_document(doc: &ConfigDocument) -> String {
    let mut out = String::new();
    write_detector(&mut out, &doc.detector);
    if let Some(sc) = &doc.scenario {
        write_scenario(&mut out, sc);
    }
    write_run(&mut out, &doc.run);
    out
}

pub fn serialize_config(cfg: &RunConfig) -> String {
    serialize_document(&ConfigDocument {
        detector: cfg.detector.clone(),
        scenario: Some(cfg.scenario.clone()),
        run: cfg.run.clone(),
    })
}

impl From<RunConfig> for ConfigDocument {
    fn from(cfg: RunConfig) -> Self {
        Self {
            detector: cfg.detector,
            scenario: Some(cfg.scenario),
            run: cfg.run,
        }
    }
}
