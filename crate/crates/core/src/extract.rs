//! Bit extraction from the intervals between successive detections.
//!
//! Intervals of a Poisson detection process are exponentially distributed.
//! Splitting them at the value that bisects the distribution yields one
//! unbiased bit per interval; splitting at `k` equiprobable quantiles yields
//! `log2(k)` bits. Detector dead time depletes short intervals, which is
//! handled by discarding intervals below `t0` and shifting the rest down by
//! `t0` (valid because the exponential law is memoryless).

use serde::{Deserialize, Serialize};

use crate::bits::BitSequence;
use crate::error::{Error, Result};
use crate::source_sim::TimestampSeries;

/// Inter-detection durations in seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalSeries {
    durations: Vec<f64>,
    truncation_offset: f64,
}

impl IntervalSeries {
    pub fn new(durations: Vec<f64>, truncation_offset: f64) -> Result<Self> {
        if let Some(i) = durations
            .iter()
            .position(|d| !(*d >= 0.0) || !d.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "duration {i} is {} (must be finite and >= 0)",
                durations[i]
            )));
        }
        Ok(Self {
            durations,
            truncation_offset,
        })
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    /// The `t0` already subtracted from every duration (0 if untruncated).
    pub fn truncation_offset(&self) -> f64 {
        self.truncation_offset
    }

    pub fn len(&self) -> usize {
        self.durations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.durations.is_empty()
    }

    pub fn mean(&self) -> f64 {
        crate::stats::mean(&self.durations)
    }

    /// Appends another series with the same truncation offset.
    pub fn append(&mut self, other: &IntervalSeries) -> Result<()> {
        if other.truncation_offset != self.truncation_offset {
            return Err(Error::Shape(format!(
                "truncation offsets differ: {} vs {}",
                self.truncation_offset, other.truncation_offset
            )));
        }
        self.durations.extend_from_slice(&other.durations);
        Ok(())
    }

    /// The first `n` durations.
    pub fn head(&self, n: usize) -> IntervalSeries {
        Self {
            durations: self.durations[..n.min(self.len())].to_vec(),
            truncation_offset: self.truncation_offset,
        }
    }
}

/// How the split value for median encoding is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Empirical median of the intervals.
    #[default]
    Median,
    /// `ln 2 / lambda` with `lambda` fitted as the inverse mean interval.
    Analytic,
}

impl std::str::FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(Self::Median),
            "analytic" => Ok(Self::Analytic),
            other => Err(Error::Config(format!(
                "unknown threshold mode {other:?} (expected median|analytic)"
            ))),
        }
    }
}

pub fn interarrival(ts: &TimestampSeries) -> Result<IntervalSeries> {
    let ticks = ts.ticks();
    if ticks.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 timestamps, got {}",
            ticks.len()
        )));
    }
    let durations = ticks
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            if w[1] <= w[0] {
                Err(Error::Ordering { index: k + 1 })
            } else {
                Ok((w[1] - w[0]) as f64 * ts.tick())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IntervalSeries {
        durations,
        truncation_offset: 0.0,
    })
}

/// Drops intervals shorter than `t0` and shifts the survivors by `-t0`.
pub fn truncate_dead_time(iv: &IntervalSeries, t0: f64) -> Result<IntervalSeries> {
    if !(t0 >= 0.0) || !t0.is_finite() {
        return Err(Error::InvalidArgument(format!("t0 must be >= 0, got {t0}")));
    }
    if t0 == 0.0 {
        return Ok(iv.clone());
    }
    let durations: Vec<f64> = iv
        .durations
        .iter()
        .filter(|&&d| d >= t0)
        .map(|&d| d - t0)
        .collect();
    if durations.is_empty() {
        return Err(Error::EmptyAfterTruncation { t0 });
    }
    Ok(IntervalSeries {
        durations,
        truncation_offset: iv.truncation_offset + t0,
    })
}

/// Edge `j` of `k` equiprobable bins over a sorted sample.
///
/// Nearest-rank quantile at `j/k`; when `j*n/k` lands exactly between two
/// order statistics the midpoint is used, so an even-sized sample splits into
/// two equal halves.
fn quantile_edge(sorted: &[f64], j: usize, k: usize) -> f64 {
    let n = sorted.len();
    let scaled = j * n;
    if scaled % k == 0 {
        let p = scaled / k;
        (sorted[p - 1] + sorted[p]) / 2.0
    } else {
        sorted[scaled / k]
    }
}

fn sorted_durations(iv: &IntervalSeries) -> Vec<f64> {
    let mut sorted = iv.durations.clone();
    sorted.sort_by(f64::total_cmp);
    sorted
}

/// The value splitting the sample into two equal halves (empirical median).
pub fn split_threshold(iv: &IntervalSeries) -> Result<f64> {
    if iv.is_empty() {
        return Err(Error::InsufficientData("empty interval series".into()));
    }
    Ok(quantile_edge(&sorted_durations(iv), 1, 2))
}

/// `ln 2 / lambda` for the exponential law with `lambda` fitted by maximum
/// likelihood (inverse of the mean interval).
pub fn analytic_threshold(iv: &IntervalSeries) -> Result<f64> {
    if iv.is_empty() {
        return Err(Error::InsufficientData("empty interval series".into()));
    }
    Ok(std::f64::consts::LN_2 * iv.mean())
}

pub fn threshold(iv: &IntervalSeries, mode: ThresholdMode) -> Result<f64> {
    match mode {
        ThresholdMode::Median => split_threshold(iv),
        ThresholdMode::Analytic => analytic_threshold(iv),
    }
}

/// One bit per interval: 0 below `x`, 1 above. Intervals exactly equal to
/// `x` produce no output.
pub fn encode_median(iv: &IntervalSeries, x: f64) -> Result<BitSequence> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "threshold must be > 0, got {x}"
        )));
    }
    Ok(iv
        .durations
        .iter()
        .filter(|&&t| t != x)
        .map(|&t| t > x)
        .collect())
}

/// Quantile edges for `k` equiprobable bins (`k - 1` values, non-decreasing).
pub fn multibin_edges(iv: &IntervalSeries, k: usize) -> Result<Vec<f64>> {
    if k < 2 || !k.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "bin count must be a power of two >= 2, got {k}"
        )));
    }
    if iv.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} intervals cannot fill {k} bins",
            iv.len()
        )));
    }
    let sorted = sorted_durations(iv);
    Ok((1..k).map(|j| quantile_edge(&sorted, j, k)).collect())
}

/// Quantile edges of the fitted exponential law: `-mean * ln(1 - j/k)`.
pub fn analytic_edges(iv: &IntervalSeries, k: usize) -> Result<Vec<f64>> {
    if k < 2 || !k.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "bin count must be a power of two >= 2, got {k}"
        )));
    }
    if iv.is_empty() {
        return Err(Error::InsufficientData("empty interval series".into()));
    }
    let mean = iv.mean();
    Ok((1..k)
        .map(|j| -mean * (1.0 - j as f64 / k as f64).ln())
        .collect())
}

/// `log2(k)` bits per interval: the index of its quantile bin, most
/// significant bit first. Intervals equal to any edge are discarded.
pub fn encode_multibin(iv: &IntervalSeries, k: usize) -> Result<BitSequence> {
    let edges = multibin_edges(iv, k)?;
    encode_with_edges(iv, &edges)
}

/// Encodes every interval by the index of the bin it falls in, given
/// `k - 1` non-decreasing edges with `k` a power of two.
pub fn encode_with_edges(iv: &IntervalSeries, edges: &[f64]) -> Result<BitSequence> {
    let k = edges.len() + 1;
    if k < 2 || !k.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "{} edges do not define a power-of-two bin count",
            edges.len()
        )));
    }
    let width = k.trailing_zeros() as usize;
    let mut out = BitSequence::with_capacity(iv.len() * width);
    for &t in &iv.durations {
        let index = edges.partition_point(|&e| e < t);
        if index < edges.len() && edges[index] == t {
            continue;
        }
        for shift in (0..width).rev() {
            out.push(index >> shift & 1 == 1);
        }
    }
    Ok(out)
}

/// Von Neumann extractor over non-overlapping pairs: `01 -> 0`, `10 -> 1`,
/// `00` and `11` emit nothing.
pub fn von_neumann(bits: &BitSequence) -> BitSequence {
    bits.as_slice()
        .chunks_exact(2)
        .filter(|pair| pair[0] != pair[1])
        .map(|pair| pair[0])
        .collect()
}
