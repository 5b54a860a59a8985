//! Experiment configuration: defaults, presets, `key = value` files and flag
//! overrides.
//!
//! Resolution order, later wins: built-in defaults, `--preset`, the
//! `--config` file, individual flags.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::channel::{CompositeParams, FadingModel, GainMatrix, MuUnits, RainParams};
use crate::error::Result;
use crate::montecarlo::SnrGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(
                f,
                "config error at line {line}, key '{}': {}",
                self.key, self.message
            ),
            None => write!(f, "config error, key '{}': {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum BeamSource {
    Synthetic { beams: usize, overlap: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingKind {
    Composite,
    Rain,
    Unit,
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub beam_source: BeamSource,
    pub fading: FadingKind,
    pub rician_factor_db: f64,
    pub shadow_mean: f64,
    pub shadow_sigma: f64,
    pub rain_mu: f64,
    pub rain_sigma: f64,
    pub snr_start_db: f64,
    pub snr_stop_db: f64,
    pub snr_points: usize,
    pub trials: usize,
    pub seed: u64,
    pub out: String,
    pub db_conversion: bool,
    pub mu_units: MuUnits,
    pub crossing_instances: usize,
    pub crossing_gamma_max: f64,
}

pub const PRESETS: &[&str] = &["composite-fig2", "rain-fig2", "unit"];

pub const DEFAULT_SEED: u64 = 2013;

impl Default for ExperimentConfig {
    /// Seven synthetic beams, composite fading with `K_r = 10 dB`,
    /// `μ = -2.63`, `σ = 0.5`, 1000 trials over -10..30 dB.
    fn default() -> Self {
        Self {
            beam_source: BeamSource::Synthetic {
                beams: 7,
                overlap: 0.3,
            },
            fading: FadingKind::Composite,
            rician_factor_db: 10.0,
            shadow_mean: -2.63,
            shadow_sigma: 0.5,
            rain_mu: -2.63,
            rain_sigma: 0.5,
            snr_start_db: -10.0,
            snr_stop_db: 30.0,
            snr_points: 25,
            trials: 1000,
            seed: DEFAULT_SEED,
            out: "corrmmse".into(),
            db_conversion: false,
            mu_units: MuUnits::Natural,
            crossing_instances: 100,
            crossing_gamma_max: 1e6,
        }
    }
}

const KEYS: &[&str] = &[
    "beams",
    "overlap",
    "pattern_file",
    "fading",
    "rician_factor_db",
    "shadow_mean",
    "shadow_sigma",
    "rain_mu",
    "rain_sigma",
    "snr_db",
    "trials",
    "seed",
    "out",
    "db_conversion",
    "mu_units",
    "crossing_instances",
    "crossing_gamma_max",
];

fn parse_num<T: std::str::FromStr>(value: &str, what: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("expected {what}, got '{value}'"))
}

fn parse_on_off(value: &str) -> std::result::Result<bool, String> {
    match value {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        _ => Err(format!("expected on|off, got '{value}'")),
    }
}

/// Parses `start:stop:points` (dB).
pub fn parse_snr_spec(value: &str) -> std::result::Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    let [start, stop, points] = parts[..] else {
        return Err(format!("expected start:stop:points, got '{value}'"));
    };
    let start: f64 = parse_num(start, "a start dB value")?;
    let stop: f64 = parse_num(stop, "a stop dB value")?;
    let points: usize = parse_num(points, "a point count")?;
    if points == 0 {
        return Err("point count must be positive".into());
    }
    if !start.is_finite() || !stop.is_finite() {
        return Err("dB bounds must be finite".into());
    }
    if points > 1 && stop <= start {
        return Err("stop must exceed start".into());
    }
    Ok((start, stop, points))
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Option<Self> {
        let base = Self::default();
        match name {
            "composite-fig2" => Some(base),
            "rain-fig2" => Some(Self {
                fading: FadingKind::Rain,
                out: "corrmmse_rain".into(),
                ..base
            }),
            "unit" => Some(Self {
                beam_source: BeamSource::Synthetic {
                    beams: 7,
                    overlap: 0.0,
                },
                fading: FadingKind::Unit,
                out: "corrmmse_unit".into(),
                ..base
            }),
            _ => None,
        }
    }

    /// Assigns one key. Unknown keys and malformed values are errors.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        match key {
            "beams" => {
                let beams: usize = parse_num(value, "a positive integer")?;
                if beams == 0 {
                    return Err("must be at least 1".into());
                }
                let overlap = match self.beam_source {
                    BeamSource::Synthetic { overlap, .. } => overlap,
                    BeamSource::File(_) => Self::default_overlap(),
                };
                self.beam_source = BeamSource::Synthetic { beams, overlap };
            }
            "overlap" => {
                let overlap: f64 = parse_num(value, "a number")?;
                if !(0.0..1.0).contains(&overlap) {
                    return Err("must lie in [0, 1)".into());
                }
                let beams = match self.beam_source {
                    BeamSource::Synthetic { beams, .. } => beams,
                    BeamSource::File(_) => Self::default_beams(),
                };
                self.beam_source = BeamSource::Synthetic { beams, overlap };
            }
            "pattern_file" => {
                if value.is_empty() {
                    return Err("path is empty".into());
                }
                self.beam_source = BeamSource::File(PathBuf::from(value));
            }
            "fading" => {
                self.fading = match value {
                    "composite" => FadingKind::Composite,
                    "rain" => FadingKind::Rain,
                    "unit" => FadingKind::Unit,
                    _ => return Err(format!("expected composite|rain|unit, got '{value}'")),
                }
            }
            "rician_factor_db" => self.rician_factor_db = finite(parse_num(value, "a number")?)?,
            "shadow_mean" => self.shadow_mean = finite(parse_num(value, "a number")?)?,
            "shadow_sigma" => self.shadow_sigma = positive(parse_num(value, "a number")?)?,
            "rain_mu" => self.rain_mu = finite(parse_num(value, "a number")?)?,
            "rain_sigma" => self.rain_sigma = positive(parse_num(value, "a number")?)?,
            "snr_db" => {
                let (start, stop, points) = parse_snr_spec(value)?;
                self.snr_start_db = start;
                self.snr_stop_db = stop;
                self.snr_points = points;
            }
            "trials" => {
                let trials: usize = parse_num(value, "an integer")?;
                if trials < 2 {
                    return Err("need at least 2 trials".into());
                }
                self.trials = trials;
            }
            "seed" => self.seed = parse_num(value, "a 64-bit unsigned integer")?,
            "out" => {
                if value.is_empty() {
                    return Err("output prefix is empty".into());
                }
                self.out = value.to_string();
            }
            "db_conversion" => self.db_conversion = parse_on_off(value)?,
            "mu_units" => {
                self.mu_units = match value {
                    "natural" => MuUnits::Natural,
                    "db" => MuUnits::Decibel,
                    _ => return Err(format!("expected natural|db, got '{value}'")),
                }
            }
            "crossing_instances" => self.crossing_instances = parse_num(value, "an integer")?,
            "crossing_gamma_max" => {
                self.crossing_gamma_max = positive(parse_num(value, "a number")?)?
            }
            _ => return Err(format!("unknown key (known keys: {})", KEYS.join(", "))),
        }
        Ok(())
    }

    fn default_beams() -> usize {
        7
    }

    fn default_overlap() -> f64 {
        0.3
    }

    /// Applies a `key = value` document on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> std::result::Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError {
                    key: line.to_string(),
                    line: Some(i + 1),
                    message: "expected 'key = value'".into(),
                });
            };
            let key = key.trim();
            let value = value.split(" #").next().unwrap_or("").trim();
            self.set(key, value).map_err(|message| ConfigError {
                key: key.to_string(),
                line: Some(i + 1),
                message,
            })?;
        }
        Ok(())
    }

    /// Serializes every field; `apply_text` on the defaults restores `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match &self.beam_source {
            BeamSource::Synthetic { beams, overlap } => {
                let _ = writeln!(s, "beams = {beams}");
                let _ = writeln!(s, "overlap = {overlap}");
            }
            BeamSource::File(p) => {
                let _ = writeln!(s, "pattern_file = {}", p.display());
            }
        }
        let fading = match self.fading {
            FadingKind::Composite => "composite",
            FadingKind::Rain => "rain",
            FadingKind::Unit => "unit",
        };
        let _ = writeln!(s, "fading = {fading}");
        let _ = writeln!(s, "rician_factor_db = {}", self.rician_factor_db);
        let _ = writeln!(s, "shadow_mean = {}", self.shadow_mean);
        let _ = writeln!(s, "shadow_sigma = {}", self.shadow_sigma);
        let _ = writeln!(s, "rain_mu = {}", self.rain_mu);
        let _ = writeln!(s, "rain_sigma = {}", self.rain_sigma);
        let _ = writeln!(
            s,
            "snr_db = {}:{}:{}",
            self.snr_start_db, self.snr_stop_db, self.snr_points
        );
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out = {}", self.out);
        let _ = writeln!(
            s,
            "db_conversion = {}",
            if self.db_conversion { "on" } else { "off" }
        );
        let mu = match self.mu_units {
            MuUnits::Natural => "natural",
            MuUnits::Decibel => "db",
        };
        let _ = writeln!(s, "mu_units = {mu}");
        let _ = writeln!(s, "crossing_instances = {}", self.crossing_instances);
        let _ = writeln!(s, "crossing_gamma_max = {}", self.crossing_gamma_max);
        s
    }

    pub fn fading_model(&self) -> FadingModel {
        match self.fading {
            FadingKind::Composite => FadingModel::Composite(CompositeParams {
                rician_factor_db: self.rician_factor_db,
                shadow_mean: self.shadow_mean,
                shadow_sigma: self.shadow_sigma,
                mu_units: self.mu_units,
            }),
            FadingKind::Rain => FadingModel::Rain(RainParams {
                lognormal_mu: self.rain_mu,
                lognormal_sigma: self.rain_sigma,
                db_conversion: self.db_conversion,
            }),
            FadingKind::Unit => FadingModel::Unit,
        }
    }

    pub fn gain_matrix(&self) -> Result<GainMatrix> {
        match &self.beam_source {
            BeamSource::Synthetic { beams, overlap } => {
                GainMatrix::synthetic(*beams, *overlap, None)
            }
            BeamSource::File(path) => GainMatrix::load(path),
        }
    }

    pub fn grid(&self) -> Result<SnrGrid> {
        SnrGrid::from_db(self.snr_start_db, self.snr_stop_db, self.snr_points)
    }
}

fn finite(x: f64) -> std::result::Result<f64, String> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err("must be finite".into())
    }
}

fn positive(x: f64) -> std::result::Result<f64, String> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err("must be positive".into())
    }
}

/// Builds a configuration from an optional preset, file and overrides.
pub fn parse_config(
    preset: Option<&str>,
    file: Option<&Path>,
    overrides: &[(&str, String)],
) -> std::result::Result<ExperimentConfig, ConfigError> {
    let mut cfg = match preset {
        None => ExperimentConfig::default(),
        Some(name) => ExperimentConfig::preset(name).ok_or_else(|| ConfigError {
            key: "preset".into(),
            line: None,
            message: format!("unknown preset '{name}' (known: {})", PRESETS.join(", ")),
        })?,
    };
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            key: "config".into(),
            line: None,
            message: format!("{}: {e}", path.display()),
        })?;
        cfg.apply_text(&text)?;
    }
    for (key, value) in overrides {
        cfg.set(key, value).map_err(|message| ConfigError {
            key: key.to_string(),
            line: None,
            message,
        })?;
    }
    Ok(cfg)
}
