use rayon::prelude::*;

use crate::bits::BitSequence;
use crate::borel::{borel_verdict, BorelVerdict};
use crate::error::{Error, Result};
use crate::extract::{
    analytic_edges, encode_with_edges, interarrival, multibin_edges, threshold, truncate_dead_time,
    von_neumann, IntervalSeries, ThresholdMode,
};
use crate::io::{read_bits_auto, read_timestamps_csv};
use crate::nist::{run_battery, BatteryReport};
use crate::source_sim::{bins_to_timestamps, coincidences, simulate_span, SourceConfig};

use super::artifacts::{write_artifacts, Artifacts};
use super::config::{
    ExtractionConfig, PipelineConfig, SourceSpec, DEFAULT_LENGTH, DEFAULT_SEQUENCES,
};

/// Spans simulated per parallel batch. Results are merged in span order, so
/// the output does not depend on the thread count.
const SPAN_BATCH: usize = 8;

/// Upper bound on simulated spans, to stop runaway loops on sources that
/// produce almost no coincidences.
const MAX_SPANS: u64 = 1 << 20;

/// Coincidence intervals of one span, truncated at `t0`. `None` when the span
/// has fewer than two coincidences or nothing survives truncation.
pub fn span_intervals(
    source: &SourceConfig,
    span_index: u64,
    t0: f64,
) -> Result<Option<IntervalSeries>> {
    let (signal, idler) = simulate_span(source, span_index)?;
    let ts = bins_to_timestamps(&coincidences(&signal, &idler)?);
    if ts.len() < 2 {
        return Ok(None);
    }
    match truncate_dead_time(&interarrival(&ts)?, t0) {
        Ok(iv) => Ok(Some(iv)),
        Err(Error::EmptyAfterTruncation { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Accumulates truncated coincidence intervals span by span. Spans are never
/// joined: the interval across a span boundary is not observed.
#[derive(Clone, Debug)]
pub struct IntervalCollector {
    source: SourceConfig,
    t0: f64,
    next_span: u64,
    intervals: IntervalSeries,
}

impl IntervalCollector {
    pub fn new(source: SourceConfig, t0: f64) -> Result<Self> {
        source.validate()?;
        if !(t0 >= 0.0) || !t0.is_finite() {
            return Err(Error::InvalidArgument(format!("t0 must be >= 0, got {t0}")));
        }
        Ok(Self {
            source,
            t0,
            next_span: 0,
            intervals: IntervalSeries::new(Vec::new(), t0)?,
        })
    }

    pub fn intervals(&self) -> &IntervalSeries {
        &self.intervals
    }

    pub fn spans(&self) -> u64 {
        self.next_span
    }

    /// Simulates further spans until at least `count` intervals are held.
    pub fn collect_until(&mut self, count: usize) -> Result<()> {
        while self.intervals.len() < count {
            if self.next_span >= MAX_SPANS {
                return Err(Error::InsufficientData(format!(
                    "{} intervals after {MAX_SPANS} spans, {count} requested",
                    self.intervals.len()
                )));
            }
            let start = self.next_span;
            let batch: Vec<Option<IntervalSeries>> = (start..start + SPAN_BATCH as u64)
                .into_par_iter()
                .map(|i| span_intervals(&self.source, i, self.t0))
                .collect::<Result<_>>()?;
            self.next_span += SPAN_BATCH as u64;
            let before = self.intervals.len();
            for iv in batch.into_iter().flatten() {
                self.intervals.append(&iv)?;
            }
            if self.intervals.len() == before {
                return Err(Error::InsufficientData(format!(
                    "spans {start}..{} produced no intervals; check the source rates",
                    self.next_span
                )));
            }
        }
        Ok(())
    }
}

/// Collects at least `min_count` truncated coincidence intervals.
pub fn simulate_intervals(
    source: &SourceConfig,
    t0: f64,
    min_count: usize,
) -> Result<IntervalSeries> {
    let mut collector = IntervalCollector::new(source.clone(), t0)?;
    collector.collect_until(min_count)?;
    Ok(collector.intervals)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub bits: BitSequence,
    /// Bin edges used for encoding; one value for the median split.
    pub edges: Vec<f64>,
}

/// Encodes intervals according to `ext` (threshold mode, bin count and
/// optional von Neumann stage). `ext.t0` is not applied here.
pub fn extract_bits(iv: &IntervalSeries, ext: &ExtractionConfig) -> Result<Extraction> {
    let edges = match (ext.bins, ext.mode) {
        (2, mode) => vec![threshold(iv, mode)?],
        (k, ThresholdMode::Median) => multibin_edges(iv, k)?,
        (k, ThresholdMode::Analytic) => analytic_edges(iv, k)?,
    };
    let raw = encode_with_edges(iv, &edges)?;
    let bits = if ext.von_neumann {
        von_neumann(&raw)
    } else {
        raw
    };
    Ok(Extraction { bits, edges })
}

#[derive(Clone, Debug)]
pub struct SimulatedBits {
    pub bits: BitSequence,
    pub edges: Vec<f64>,
    /// All pooled intervals; the edges are computed from these.
    pub intervals: IntervalSeries,
    pub spans: u64,
}

/// Simulates spans until `needed` bits can be extracted, with the threshold
/// computed from every pooled interval, then truncates to exactly `needed`.
pub fn simulate_bits(
    source: &SourceConfig,
    ext: &ExtractionConfig,
    needed: usize,
) -> Result<SimulatedBits> {
    let per_interval = ext.bins.trailing_zeros().max(1) as f64;
    // von Neumann keeps about a quarter of its input bits
    let yield_factor = if ext.von_neumann {
        per_interval / 4.2
    } else {
        per_interval
    };
    let mut target = (needed as f64 / yield_factor * 1.002).ceil() as usize + 16;
    let mut collector = IntervalCollector::new(source.clone(), ext.t0)?;
    loop {
        collector.collect_until(target)?;
        let extraction = extract_bits(collector.intervals(), ext)?;
        if extraction.bits.len() >= needed {
            let mut bits = extraction.bits;
            bits.truncate(needed);
            return Ok(SimulatedBits {
                bits,
                edges: extraction.edges,
                spans: collector.spans(),
                intervals: collector.intervals,
            });
        }
        target = collector.intervals().len() + (collector.intervals().len() / 50).max(64);
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    /// 0 when every requested analysis passes, 1 otherwise.
    pub exit_code: i32,
    /// Human-readable lines describing failures and summaries.
    pub diagnostics: Vec<String>,
    pub sequences: Vec<BitSequence>,
    pub borel: Vec<BorelVerdict>,
    pub battery: Option<BatteryReport>,
    pub artifacts: Artifacts,
}

struct Acquired {
    bits: BitSequence,
    intervals: Option<(IntervalSeries, Vec<f64>)>,
}

fn acquire(cfg: &PipelineConfig) -> Result<(Acquired, usize, usize)> {
    let analysis = &cfg.analysis;
    match &cfg.source {
        SourceSpec::Simulated(source) => {
            let sequences = analysis.sequences.unwrap_or(DEFAULT_SEQUENCES);
            let length = analysis.length.unwrap_or(DEFAULT_LENGTH);
            let needed = sequences
                .checked_mul(length)
                .ok_or_else(|| Error::Config(format!("{sequences} x {length} bits overflows")))?;
            let sim = simulate_bits(source, &cfg.extraction, needed)?;
            Ok((
                Acquired {
                    bits: sim.bits,
                    intervals: Some((sim.intervals, sim.edges)),
                },
                sequences,
                length,
            ))
        }
        SourceSpec::Timestamps(path) => {
            let ts = read_timestamps_csv(path)?;
            let iv = truncate_dead_time(&interarrival(&ts)?, cfg.extraction.t0)?;
            let extraction = extract_bits(&iv, &cfg.extraction)?;
            let (sequences, length) =
                layout(analysis.sequences, analysis.length, extraction.bits.len())?;
            Ok((
                Acquired {
                    bits: extraction.bits,
                    intervals: Some((iv, extraction.edges)),
                },
                sequences,
                length,
            ))
        }
        SourceSpec::Bits(path) => {
            let bits = read_bits_auto(path)?;
            let (sequences, length) = layout(analysis.sequences, analysis.length, bits.len())?;
            Ok((
                Acquired {
                    bits,
                    intervals: None,
                },
                sequences,
                length,
            ))
        }
    }
}

/// Sequence count and length for `available` bits; unspecified values
/// default to one sequence and as many bits as fit.
fn layout(
    sequences: Option<usize>,
    length: Option<usize>,
    available: usize,
) -> Result<(usize, usize)> {
    let (s, l) = match (sequences, length) {
        (Some(s), Some(l)) => (s, l),
        (Some(s), None) => (s, available / s),
        (None, Some(l)) => (1, l),
        (None, None) => (1, available),
    };
    if l == 0 || s.saturating_mul(l) > available {
        return Err(Error::InsufficientLength {
            needed: s.saturating_mul(l.max(1)),
            have: available,
        });
    }
    Ok((s, l))
}

/// Runs acquisition, extraction and the requested analyses, then writes all
/// artifacts to `cfg.output.dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    let (acquired, count, length) = acquire(cfg)?;
    let sequences = acquired.bits.split(count, length)?;
    let mut all_bits = BitSequence::with_capacity(count * length);
    for s in &sequences {
        all_bits.extend_from(s);
    }

    let mut diagnostics = Vec::new();
    let mut pass = true;

    let borel: Vec<BorelVerdict> = if cfg.analysis.borel {
        sequences
            .par_iter()
            .map(borel_verdict)
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    for (i, v) in borel.iter().enumerate() {
        match v.first_failure() {
            Some(order) => {
                pass = false;
                diagnostics.push(format!(
                    "sequence {i}: Borel FAIL at m={}: {}",
                    order.m,
                    order.failure_reason(v.bound).unwrap_or_default()
                ));
            }
            None => diagnostics.push(format!(
                "sequence {i}: Borel {} (n={}, m_max={}, bound={:.7})",
                v.label(),
                v.n,
                v.m_max,
                v.bound
            )),
        }
    }

    let battery = if cfg.analysis.battery {
        let split = cfg.analysis.battery_split;
        let sub_len = length / split;
        if sub_len == 0 {
            return Err(Error::Config(format!(
                "cannot split {length}-bit sequences into {split} parts"
            )));
        }
        let subs: Vec<BitSequence> = sequences
            .iter()
            .map(|s| s.split(split, sub_len))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let report = run_battery(&subs, &cfg.analysis.battery_config)?;
        for row in report.evaluated_rows().filter(|r| !r.pass) {
            diagnostics.push(format!(
                "battery FAIL: {} ({}/{} passed, uniformity p = {})",
                row.test_name,
                row.passed,
                row.total,
                row.uniformity_p.map_or("-".into(), |p| format!("{p:.6}"))
            ));
        }
        if !report.all_pass {
            pass = false;
        } else {
            diagnostics.push(format!(
                "battery PASS: {} sequences of {} bits",
                report.sequences, report.sequence_length
            ));
        }
        Some(report)
    } else {
        None
    };

    let artifacts = write_artifacts(
        &cfg.output,
        Some(&all_bits),
        &borel,
        battery.as_ref(),
        acquired
            .intervals
            .as_ref()
            .map(|(iv, edges)| (iv, edges.as_slice())),
        cfg.analysis.verbose,
    )?;

    Ok(PipelineOutcome {
        exit_code: if pass { 0 } else { 1 },
        diagnostics,
        sequences,
        borel,
        battery,
        artifacts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_source(seed: u64) -> SourceConfig {
        SourceConfig {
            pair_rate: 2e5,
            singles_excess_rate: 0.0,
            span: 0.01,
            bin_width: 2e-9,
            dead_time: 20e-9,
            seed,
        }
    }

    #[test]
    fn simulate_bits_exact_length_and_deterministic() {
        let ext = ExtractionConfig::for_dead_time(20e-9);
        let a = simulate_bits(&small_source(4), &ext, 5_000).unwrap();
        let b = simulate_bits(&small_source(4), &ext, 5_000).unwrap();
        assert_eq!(a.bits.len(), 5_000);
        assert_eq!(a.bits, b.bits);
        assert_eq!(a.edges.len(), 1);
        assert!(a.intervals.len() >= 5_000);
    }

    #[test]
    fn multibin_and_von_neumann_lengths() {
        let mut ext = ExtractionConfig::for_dead_time(20e-9);
        ext.bins = 4;
        let a = simulate_bits(&small_source(1), &ext, 4_000).unwrap();
        assert_eq!(a.edges.len(), 3);
        assert_eq!(a.bits.len(), 4_000);
        ext.bins = 2;
        ext.von_neumann = true;
        let b = simulate_bits(&small_source(1), &ext, 1_000).unwrap();
        assert_eq!(b.bits.len(), 1_000);
    }

    #[test]
    fn silent_source_errors() {
        let mut src = small_source(0);
        src.pair_rate = 0.0;
        let ext = ExtractionConfig::for_dead_time(20e-9);
        assert!(matches!(
            simulate_bits(&src, &ext, 10),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn layout_defaults() {
        assert_eq!(layout(None, None, 50).unwrap(), (1, 50));
        assert_eq!(layout(Some(3), None, 50).unwrap(), (3, 16));
        assert_eq!(layout(None, Some(20), 50).unwrap(), (1, 20));
        assert!(layout(Some(3), Some(20), 50).is_err());
        assert!(layout(Some(100), None, 50).is_err());
    }
}
