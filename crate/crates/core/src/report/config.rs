//! Flat `key = value` pipeline configuration.
//!
//! ```text
//! # comments start with '#'
//! seed = 7
//! span = 0.512
//! bins = 2
//! sequences = 10
//! length = 1000000
//! ```
//!
//! Later pairs override earlier ones, so command-line flags are applied by
//! appending them after the file's pairs.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::extract::ThresholdMode;
use crate::io::BitFormat;
use crate::nist::BatteryConfig;
use crate::source_sim::SourceConfig;

/// Seed used when neither the config, the flags nor `QRNG_SEED` set one.
pub const DEFAULT_SEED: u64 = 0;

pub const DEFAULT_SEQUENCES: usize = 10;
pub const DEFAULT_LENGTH: usize = 1_000_000;
pub const DEFAULT_BATTERY_SPLIT: usize = 10;

const SOURCE_KEYS: [&str; 5] = [
    "pair_rate",
    "singles_excess_rate",
    "span",
    "bin_width",
    "dead_time",
];

const KNOWN_KEYS: [&str; 20] = [
    "seed",
    "pair_rate",
    "singles_excess_rate",
    "span",
    "bin_width",
    "dead_time",
    "input",
    "t0",
    "mode",
    "bins",
    "von_neumann",
    "borel",
    "battery",
    "alpha",
    "sequences",
    "length",
    "battery_split",
    "out",
    "format",
    "verbose",
];

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                return None;
            }
            Some(match line.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => {
                    Ok((k.trim().to_string(), v.trim().to_string()))
                }
                _ => Err(Error::Config(format!(
                    "line {}: expected `key = value`, got {raw:?}",
                    i + 1
                ))),
            })
        })
        .collect()
}

pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pairs(&text)
}

#[derive(Clone, Debug, PartialEq)]
pub enum SourceSpec {
    Simulated(SourceConfig),
    /// CSV of nanosecond detection timestamps.
    Timestamps(PathBuf),
    /// Ready-made bits (`.txt` or `.bits`); extraction is skipped.
    Bits(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractionConfig {
    /// Truncation offset in seconds.
    pub t0: f64,
    pub mode: ThresholdMode,
    /// Number of interval bins (power of two); 2 is the median split.
    pub bins: usize,
    pub von_neumann: bool,
}

impl ExtractionConfig {
    /// Median split with `t0 = 2 * dead_time`.
    pub fn for_dead_time(dead_time: f64) -> Self {
        Self {
            t0: 2.0 * dead_time,
            mode: ThresholdMode::Median,
            bins: 2,
            von_neumann: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub borel: bool,
    pub battery: bool,
    pub battery_config: BatteryConfig,
    /// Number of sequences; `None` means the source default.
    pub sequences: Option<usize>,
    /// Bits per sequence; `None` means the source default.
    pub length: Option<usize>,
    /// Sub-strings each sequence is cut into for the battery.
    pub battery_split: usize,
    /// Include per-block counts in JSON.
    pub verbose: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: BitFormat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub source: SourceSpec,
    pub extraction: ExtractionConfig,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key} = {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key} = {value:?}: expected a boolean"
        ))),
    }
}

impl PipelineConfig {
    /// Builds a config from ordered pairs (later pairs win). `env_seed` is
    /// used when no `seed` key is present.
    pub fn from_pairs(pairs: &[(String, String)], env_seed: Option<u64>) -> Result<Self> {
        let get = |key: &str| {
            pairs
                .iter()
                .rev()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
        };
        if let Some((k, _)) = pairs
            .iter()
            .find(|(k, _)| !KNOWN_KEYS.contains(&k.as_str()))
        {
            return Err(Error::Config(format!("unknown key {k:?}")));
        }

        let seed = match get("seed") {
            Some(v) => parse_value("seed", v)?,
            None => env_seed.unwrap_or(DEFAULT_SEED),
        };
        let mut sim = SourceConfig::full_scale(seed);
        if let Some(v) = get("pair_rate") {
            sim.pair_rate = parse_value("pair_rate", v)?;
        }
        if let Some(v) = get("singles_excess_rate") {
            sim.singles_excess_rate = parse_value("singles_excess_rate", v)?;
        }
        if let Some(v) = get("span") {
            sim.span = parse_value("span", v)?;
        }
        if let Some(v) = get("bin_width") {
            sim.bin_width = parse_value("bin_width", v)?;
        }
        if let Some(v) = get("dead_time") {
            sim.dead_time = parse_value("dead_time", v)?;
        }

        let source = match get("input") {
            Some(path) => {
                if let Some(k) = SOURCE_KEYS
                    .iter()
                    .find(|k| get(k).is_some() && **k != "dead_time")
                {
                    return Err(Error::Config(format!(
                        "`input` and simulation parameter `{k}` are mutually exclusive"
                    )));
                }
                let path = PathBuf::from(path);
                match path.extension().and_then(|e| e.to_str()) {
                    Some("csv") => SourceSpec::Timestamps(path),
                    Some("txt") | Some("bits") => SourceSpec::Bits(path),
                    _ => {
                        return Err(Error::Config(format!(
                            "input {}: expected a .csv, .txt or .bits file",
                            path.display()
                        )))
                    }
                }
            }
            None => {
                sim.validate()?;
                SourceSpec::Simulated(sim.clone())
            }
        };

        let mut extraction = ExtractionConfig::for_dead_time(sim.dead_time);
        if let Some(v) = get("t0") {
            extraction.t0 = parse_value("t0", v)?;
            if !(extraction.t0 >= 0.0) {
                return Err(Error::Config(format!("t0 must be >= 0, got {v}")));
            }
        }
        if let Some(v) = get("mode") {
            extraction.mode = v.parse()?;
        }
        if let Some(v) = get("bins") {
            extraction.bins = parse_value("bins", v)?;
            if extraction.bins < 2 || !extraction.bins.is_power_of_two() {
                return Err(Error::Config(format!(
                    "bins must be a power of two >= 2, got {v}"
                )));
            }
        }
        if let Some(v) = get("von_neumann") {
            extraction.von_neumann = parse_bool("von_neumann", v)?;
        }

        let mut battery_config = BatteryConfig::default();
        if let Some(v) = get("alpha") {
            battery_config.alpha = parse_value("alpha", v)?;
            if !(battery_config.alpha > 0.0 && battery_config.alpha < 1.0) {
                return Err(Error::Config(format!("alpha must be in (0, 1), got {v}")));
            }
        }
        let positive = |key: &str| -> Result<Option<usize>> {
            get(key)
                .map(|v| {
                    let n: usize = parse_value(key, v)?;
                    if n == 0 {
                        return Err(Error::Config(format!("{key} must be >= 1")));
                    }
                    Ok(n)
                })
                .transpose()
        };
        let analysis = AnalysisConfig {
            borel: get("borel")
                .map(|v| parse_bool("borel", v))
                .transpose()?
                .unwrap_or(true),
            battery: get("battery")
                .map(|v| parse_bool("battery", v))
                .transpose()?
                .unwrap_or(false),
            battery_config,
            sequences: positive("sequences")?,
            length: positive("length")?,
            battery_split: positive("battery_split")?.unwrap_or(DEFAULT_BATTERY_SPLIT),
            verbose: get("verbose")
                .map(|v| parse_bool("verbose", v))
                .transpose()?
                .unwrap_or(false),
        };

        let output = OutputConfig {
            dir: PathBuf::from(get("out").unwrap_or("out")),
            format: get("format")
                .map(str::parse)
                .transpose()?
                .unwrap_or_default(),
        };

        Ok(Self {
            source,
            extraction,
            analysis,
            output,
        })
    }
}
