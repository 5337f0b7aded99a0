//! `qrng`: simulate a photon-pair source, extract bits from detection
//! intervals and test them for Borel normality and with a statistical
//! battery.
//!
//! Exit codes: 0 when every requested analysis passes, 1 when one fails,
//! 2 on errors (bad input, bad config, I/O).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrng_core::borel::borel_verdict;
use qrng_core::fixtures::FixtureKind;
use qrng_core::io::{
    read_bits_auto, write_bin_series, write_bits, write_timestamps_csv, BitFormat,
};
use qrng_core::nist::{run_battery, BatteryConfig};
use qrng_core::report::{
    read_pairs, run_pipeline, simulate_bits, write_artifacts, PipelineConfig, SourceSpec,
};
use qrng_core::source_sim::{bins_to_timestamps, coincidences, simulate_span, TimestampSeries};
use qrng_core::{Error, Result};

const SEED_ENV: &str = "QRNG_SEED";

#[derive(Parser)]
#[command(
    name = "qrng",
    version,
    about = "Photon-pair QRNG simulator and randomness certifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate detector bin series and coincidence timestamps.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Number of consecutive spans of coincidence timestamps to emit.
        #[arg(long, default_value_t = 1)]
        spans: u64,
    },
    /// Extract bits from a timestamp CSV, or from a simulated source.
    Extract {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        extraction: ExtractionArgs,
        /// Number of bits to extract from a simulated source.
        #[arg(long)]
        length: Option<usize>,
    },
    /// Borel normality verdict for a bit file.
    Borel {
        #[command(flatten)]
        common: Common,
        /// Sequences to split the input into (default: 1).
        #[arg(long)]
        sequences: Option<usize>,
        /// Bits per sequence (default: all that fit).
        #[arg(long)]
        length: Option<usize>,
        /// Include per-block counts in the JSON.
        #[arg(long)]
        verbose: bool,
    },
    /// Statistical battery over equal-length sub-sequences of a bit file.
    Battery {
        #[command(flatten)]
        common: Common,
        /// Significance level.
        #[arg(long)]
        alpha: Option<f64>,
        /// Number of sub-sequences (default: 100).
        #[arg(long)]
        sequences: Option<usize>,
        /// Bits per sub-sequence (default: input length / sequences).
        #[arg(long)]
        length: Option<usize>,
    },
    /// Full run: acquire, extract, analyse and write every artifact.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        extraction: ExtractionArgs,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        sequences: Option<usize>,
        #[arg(long)]
        length: Option<usize>,
        /// Also run the statistical battery.
        #[arg(long)]
        battery: bool,
        /// Skip the Borel analysis.
        #[arg(long)]
        no_borel: bool,
        #[arg(long)]
        verbose: bool,
    },
    /// Write a deterministic test sequence.
    Fixture {
        /// champernowne, periodic or all-zero.
        #[arg(long)]
        kind: FixtureKind,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value = "ascii")]
        format: BitFormat,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Seed; falls back to the config file, then QRNG_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input file (.csv timestamps, .txt or .bits).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    format: Option<BitFormat>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ExtractionArgs {
    /// Truncation offset in seconds (default: twice the dead time).
    #[arg(long)]
    t0: Option<f64>,
    /// Number of interval bins, a power of two.
    #[arg(long)]
    bins: Option<usize>,
    /// Threshold mode: median or analytic.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    von_neumann: bool,
}

/// Collects config-file pairs followed by flag pairs, so flags win.
struct Pairs(Vec<(String, String)>);

impl Pairs {
    fn new(common: &Common) -> Result<Self> {
        let mut pairs = match &common.config {
            Some(path) => read_pairs(path)?,
            None => Vec::new(),
        };
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.to_string(), v));
            }
        };
        push("seed", common.seed.map(|s| s.to_string()));
        push(
            "input",
            common.input.as_ref().map(|p| p.display().to_string()),
        );
        push("out", common.out.as_ref().map(|p| p.display().to_string()));
        push("format", common.format.map(|f| format_name(f).to_string()));
        Ok(Self(pairs))
    }

    fn set(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.0.push((key.to_string(), v.to_string()));
        }
    }

    fn extraction(&mut self, args: &ExtractionArgs) {
        self.set("t0", args.t0);
        self.set("bins", args.bins);
        self.set("mode", args.mode.clone());
        if args.von_neumann {
            self.set("von_neumann", Some("true"));
        }
    }

    fn build(&self) -> Result<PipelineConfig> {
        PipelineConfig::from_pairs(&self.0, env_seed()?)
    }
}

fn format_name(f: BitFormat) -> &'static str {
    match f {
        BitFormat::Ascii => "ascii",
        BitFormat::Packed => "packed",
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| Error::Config(format!("{SEED_ENV}={v:?}: {e}"))),
        Err(_) => Ok(None),
    }
}

fn require_input(cfg: &PipelineConfig) -> Result<&Path> {
    match &cfg.source {
        SourceSpec::Bits(p) => Ok(p),
        _ => Err(Error::Config(
            "--input must name a .txt or .bits file".into(),
        )),
    }
}

fn simulate(common: &Common, spans: u64) -> Result<i32> {
    let cfg = Pairs::new(common)?.build()?;
    let SourceSpec::Simulated(source) = &cfg.source else {
        return Err(Error::Config("simulate does not take --input".into()));
    };
    if spans == 0 {
        return Err(Error::Config("--spans must be >= 1".into()));
    }
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let mut ticks = Vec::new();
    let bins = source.bin_count() as u64;
    for span in 0..spans {
        let (signal, idler) = simulate_span(source, span)?;
        let c = coincidences(&signal, &idler)?;
        if span == 0 {
            write_bin_series(&signal, &dir.join("signal.bin"))?;
            write_bin_series(&idler, &dir.join("idler.bin"))?;
            write_bin_series(&c, &dir.join("coincidences.bin"))?;
            println!(
                "span 0: signal {} idler {} coincidences {} of {} bins",
                signal.count_ones(),
                idler.count_ones(),
                c.count_ones(),
                c.len()
            );
        }
        ticks.extend(
            bins_to_timestamps(&c)
                .ticks()
                .iter()
                .map(|t| t + span * bins),
        );
    }
    let ts = TimestampSeries::new(ticks, source.bin_width);
    let path = dir.join("coincidences.csv");
    write_timestamps_csv(&ts, &path)?;
    println!(
        "wrote {} coincidence timestamps to {}",
        ts.len(),
        path.display()
    );
    Ok(0)
}

fn extract(common: &Common, args: &ExtractionArgs, length: Option<usize>) -> Result<i32> {
    let mut pairs = Pairs::new(common)?;
    pairs.extraction(args);
    pairs.set("length", length);
    pairs.set("sequences", length.map(|_| 1));
    pairs.set("borel", Some(false));
    let cfg = pairs.build()?;
    let bits = match &cfg.source {
        SourceSpec::Simulated(source) => {
            let needed = length.ok_or_else(|| {
                Error::Config("extract from a simulated source needs --length".into())
            })?;
            let sim = simulate_bits(source, &cfg.extraction, needed)?;
            write_artifacts(
                &cfg.output,
                Some(&sim.bits),
                &[],
                None,
                Some((&sim.intervals, &sim.edges)),
                false,
            )?;
            sim.bits
        }
        SourceSpec::Timestamps(_) => {
            let outcome = run_pipeline(&cfg)?;
            outcome.sequences.into_iter().next().unwrap_or_default()
        }
        SourceSpec::Bits(_) => {
            return Err(Error::Config("extract takes a timestamp .csv input".into()))
        }
    };
    println!(
        "extracted {} bits (ones fraction {:.6}) into {}",
        bits.len(),
        bits.ones_fraction(),
        cfg.output.dir.display()
    );
    Ok(0)
}

fn borel(
    common: &Common,
    sequences: Option<usize>,
    length: Option<usize>,
    verbose: bool,
) -> Result<i32> {
    let mut pairs = Pairs::new(common)?;
    pairs.set("sequences", sequences);
    pairs.set("length", length);
    let cfg = pairs.build()?;
    let bits = read_bits_auto(require_input(&cfg)?)?;
    let count = sequences.unwrap_or(1);
    let len = length.unwrap_or(bits.len() / count);
    let parts = bits.split(count, len)?;
    let mut code = 0;
    let mut verdicts = Vec::new();
    for (i, seq) in parts.iter().enumerate() {
        let v = borel_verdict(seq)?;
        println!(
            "sequence {i}: n={} m_max={} bound={:.7} verdict={}",
            v.n,
            v.m_max,
            v.bound,
            v.label()
        );
        for o in &v.per_order {
            println!(
                "  m={} max_dev={:.6} sigma={:.6} rel_pct={:.1} {}",
                o.m,
                o.max_abs_deviation,
                o.sigma,
                o.relative_pct,
                if o.pass { "pass" } else { "FAIL" }
            );
        }
        if let Some(o) = v.first_failure() {
            code = 1;
            println!(
                "  Borel FAIL at m={}: {}",
                o.m,
                o.failure_reason(v.bound).unwrap_or_default()
            );
        }
        verdicts.push(v);
    }
    if common.out.is_some() {
        let files = write_artifacts(&cfg.output, None, &verdicts, None, None, verbose)?;
        println!(
            "wrote {} files to {}",
            files.paths().len(),
            cfg.output.dir.display()
        );
    }
    Ok(code)
}

fn battery(
    common: &Common,
    alpha: Option<f64>,
    sequences: Option<usize>,
    length: Option<usize>,
) -> Result<i32> {
    let mut pairs = Pairs::new(common)?;
    pairs.set("alpha", alpha);
    let cfg = pairs.build()?;
    let bits = read_bits_auto(require_input(&cfg)?)?;
    let count = sequences.unwrap_or(100);
    let len = length.unwrap_or(bits.len() / count.max(1));
    let parts = bits.split(count, len)?;
    let bcfg = BatteryConfig {
        alpha: cfg.analysis.battery_config.alpha,
        ..BatteryConfig::default()
    };
    let report = run_battery(&parts, &bcfg)?;
    print!("{}", report.to_table());
    if common.out.is_some() {
        write_artifacts(&cfg.output, None, &[], Some(&report), None, false)?;
    }
    Ok(if report.all_pass { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn pipeline(
    common: &Common,
    args: &ExtractionArgs,
    alpha: Option<f64>,
    sequences: Option<usize>,
    length: Option<usize>,
    battery: bool,
    no_borel: bool,
    verbose: bool,
) -> Result<i32> {
    let mut pairs = Pairs::new(common)?;
    pairs.extraction(args);
    pairs.set("alpha", alpha);
    pairs.set("sequences", sequences);
    pairs.set("length", length);
    if battery {
        pairs.set("battery", Some(true));
    }
    if no_borel {
        pairs.set("borel", Some(false));
    }
    if verbose {
        pairs.set("verbose", Some(true));
    }
    let cfg = pairs.build()?;
    let outcome = run_pipeline(&cfg)?;
    for line in &outcome.diagnostics {
        println!("{line}");
    }
    for path in outcome.artifacts.paths() {
        println!("wrote {}", path.display());
    }
    Ok(outcome.exit_code)
}

fn fixture(kind: FixtureKind, length: usize, format: BitFormat, out: &Path) -> Result<i32> {
    if length == 0 {
        return Err(Error::Config("--length must be >= 1".into()));
    }
    write_bits(&kind.generate(length), out, format)?;
    println!("wrote {length} bits to {}", out.display());
    Ok(0)
}

fn run(cli: Cli) -> Result<i32> {
    match &cli.command {
        Command::Simulate { common, spans } => simulate(common, *spans),
        Command::Extract {
            common,
            extraction,
            length,
        } => extract(common, extraction, *length),
        Command::Borel {
            common,
            sequences,
            length,
            verbose,
        } => borel(common, *sequences, *length, *verbose),
        Command::Battery {
            common,
            alpha,
            sequences,
            length,
        } => battery(common, *alpha, *sequences, *length),
        Command::Pipeline {
            common,
            extraction,
            alpha,
            sequences,
            length,
            battery,
            no_borel,
            verbose,
        } => pipeline(
            common, extraction, *alpha, *sequences, *length, *battery, *no_borel, *verbose,
        ),
        Command::Fixture {
            kind,
            length,
            format,
            out,
        } => fixture(*kind, *length, *format, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
