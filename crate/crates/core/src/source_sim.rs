//! Seeded simulation of a two-channel photon-pair detector.
//!
//! Photon pairs arrive as a Poisson process and are delivered to both the
//! signal and idler channels at the same instant. Each channel additionally
//! receives its own uncorrelated Poisson stream (loss asymmetry and dark
//! counts). Every channel applies a non-paralyzable dead time and the surviving
//! detections are binned into a thresholded series with one bit per bin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed when checking that the span is a whole number of bins.
const BIN_COUNT_TOLERANCE: f64 = 1e-9;

/// Pair rate (s^-1) used by [`SourceConfig::full_scale`].
pub const FULL_SCALE_PAIR_RATE: f64 = 1.62e5;
/// Uncorrelated per-channel rate (s^-1) used by [`SourceConfig::full_scale`].
pub const FULL_SCALE_SINGLES_EXCESS_RATE: f64 = 1.555e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    /// Photon pairs per second delivered to both channels.
    pub pair_rate: f64,
    /// Extra uncorrelated events per second on each channel.
    pub singles_excess_rate: f64,
    /// Acquisition span in seconds.
    pub span: f64,
    /// Duration of one time bin in seconds.
    pub bin_width: f64,
    /// Non-paralyzable detector dead time in seconds.
    pub dead_time: f64,
    pub seed: u64,
}

impl SourceConfig {
    /// A 0.512 s acquisition of 2 ns bins with 20 ns dead time, with rates
    /// tuned so each channel registers about 8.5e5 detections and the
    /// coincidence channel about 8e4 per span.
    pub fn full_scale(seed: u64) -> Self {
        Self {
            pair_rate: FULL_SCALE_PAIR_RATE,
            singles_excess_rate: FULL_SCALE_SINGLES_EXCESS_RATE,
            span: 0.512,
            bin_width: 2e-9,
            dead_time: 20e-9,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.pair_rate,
            self.singles_excess_rate,
            self.span,
            self.bin_width,
            self.dead_time,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("source parameters must be finite".into()));
        }
        if self.span <= 0.0 {
            return Err(Error::Config(format!(
                "span must be > 0, got {}",
                self.span
            )));
        }
        if self.bin_width <= 0.0 {
            return Err(Error::Config(format!(
                "bin_width must be > 0, got {}",
                self.bin_width
            )));
        }
        if self.dead_time < 0.0 {
            return Err(Error::Config(format!(
                "dead_time must be >= 0, got {}",
                self.dead_time
            )));
        }
        if self.pair_rate < 0.0 || self.singles_excess_rate < 0.0 {
            return Err(Error::Config("rates must be >= 0".into()));
        }
        let ratio = self.span / self.bin_width;
        let rounded = ratio.round();
        if rounded < 1.0 || (ratio - rounded).abs() > BIN_COUNT_TOLERANCE * rounded {
            return Err(Error::Config(format!(
                "span {} is not an integer multiple of bin_width {}",
                self.span, self.bin_width
            )));
        }
        if rounded > u32::MAX as f64 {
            return Err(Error::Config(format!(
                "{rounded} bins exceed the 32-bit series length limit"
            )));
        }
        Ok(())
    }

    pub fn bin_count(&self) -> usize {
        (self.span / self.bin_width).round() as usize
    }

    /// Dead time expressed in whole bins (rounded up).
    pub fn dead_bins(&self) -> usize {
        (self.dead_time / self.bin_width - BIN_COUNT_TOLERANCE)
            .ceil()
            .max(0.0) as usize
    }
}

/// Thresholded detector output: one bit per time bin, packed LSB-first into
/// 64-bit words.
#[derive(Clone, PartialEq)]
pub struct BinSeries {
    words: Vec<u64>,
    len: usize,
    bin_width: f64,
}

impl BinSeries {
    pub fn zeros(len: usize, bin_width: f64) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
            bin_width,
        }
    }

    pub fn from_bits(bits: &[bool], bin_width: f64) -> Self {
        let mut series = Self::zeros(bits.len(), bin_width);
        for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            series.set(i);
        }
        series
    }

    /// Builds a series from LSB-first packed bytes. Bits past `len` are ignored.
    pub fn from_packed_bytes(bytes: &[u8], len: usize, bin_width: f64) -> Self {
        let mut words = vec![0u64; len.div_ceil(64)];
        for (w, chunk) in words.iter_mut().zip(bytes.chunks(8)) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            *w = u64::from_le_bytes(buf);
        }
        let mut series = Self {
            words,
            len,
            bin_width,
        };
        series.clear_tail();
        series
    }

    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(self.len.div_ceil(8));
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn get(&self, index: usize) -> bool {
        assert!(index < self.len, "bin {index} out of range {}", self.len);
        self.words[index / 64] >> (index % 64) & 1 == 1
    }

    pub fn set(&mut self, index: usize) {
        assert!(index < self.len, "bin {index} out of range {}", self.len);
        self.words[index / 64] |= 1 << (index % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of the 1-bins in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + bit)
            })
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl std::fmt::Debug for BinSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BinSeries")
            .field("len", &self.len)
            .field("ones", &self.count_ones())
            .field("bin_width", &self.bin_width)
            .finish()
    }
}

/// Strictly increasing detection times stored as integer ticks of a fixed
/// duration, so differences stay exact.
#[derive(Clone, Debug, PartialEq)]
pub struct TimestampSeries {
    ticks: Vec<u64>,
    tick: f64,
}

impl TimestampSeries {
    /// Wraps raw ticks. Ordering is checked lazily by
    /// [`crate::extract::interarrival`].
    pub fn new(ticks: Vec<u64>, tick: f64) -> Self {
        Self { ticks, tick }
    }

    pub fn ticks(&self) -> &[u64] {
        &self.ticks
    }

    /// Duration of one tick in seconds.
    pub fn tick(&self) -> f64 {
        self.tick
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.ticks.iter().map(move |&t| t as f64 * self.tick)
    }
}

/// Per-(seed, span, stream) generator. ChaCha streams keep the signal, idler
/// and pair processes of every span independent and individually reproducible.
fn stream_rng(seed: u64, span_index: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(span_index.wrapping_mul(4).wrapping_add(stream));
    rng
}

/// Event times of a homogeneous Poisson process on `[0, span)`, drawn by
/// inverse-CDF sampling of exponential gaps.
fn poisson_times(rng: &mut impl Rng, rate: f64, span: f64) -> Vec<f64> {
    if rate <= 0.0 {
        return Vec::new();
    }
    let mut times = Vec::with_capacity((rate * span * 1.05) as usize + 16);
    let mut t = 0.0;
    loop {
        // 1 - u lies in (0, 1], so the logarithm is finite.
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / rate;
        if t >= span {
            break;
        }
        times.push(t);
    }
    times
}

/// Merges two sorted event streams and applies the non-paralyzable dead time,
/// writing surviving events into a bin series.
fn register_channel(pairs: &[f64], excess: &[f64], cfg: &SourceConfig) -> BinSeries {
    let bins = cfg.bin_count();
    let dead_bins = cfg.dead_bins();
    let mut series = BinSeries::zeros(bins, cfg.bin_width);
    let mut last: Option<(f64, usize)> = None;

    let (mut i, mut j) = (0, 0);
    while i < pairs.len() || j < excess.len() {
        let t = if j >= excess.len() || (i < pairs.len() && pairs[i] <= excess[j]) {
            i += 1;
            pairs[i - 1]
        } else {
            j += 1;
            excess[j - 1]
        };
        let bin = ((t / cfg.bin_width) as usize).min(bins - 1);
        let live = match last {
            None => true,
            Some((t_last, bin_last)) => t - t_last >= cfg.dead_time && bin - bin_last >= dead_bins,
        };
        if live {
            series.set(bin);
            last = Some((t, bin));
        }
    }
    series
}

/// Simulates one acquisition span and returns the `(signal, idler)` series.
pub fn simulate_source(cfg: &SourceConfig) -> Result<(BinSeries, BinSeries)> {
    simulate_span(cfg, 0)
}

/// Simulates span number `span_index` of a multi-span run. Span 0 is what
/// [`simulate_source`] returns; later spans use independent streams of the
/// same seed.
pub fn simulate_span(cfg: &SourceConfig, span_index: u64) -> Result<(BinSeries, BinSeries)> {
    cfg.validate()?;
    let pairs = poisson_times(
        &mut stream_rng(cfg.seed, span_index, 0),
        cfg.pair_rate,
        cfg.span,
    );
    let signal_excess = poisson_times(
        &mut stream_rng(cfg.seed, span_index, 1),
        cfg.singles_excess_rate,
        cfg.span,
    );
    let idler_excess = poisson_times(
        &mut stream_rng(cfg.seed, span_index, 2),
        cfg.singles_excess_rate,
        cfg.span,
    );
    let signal = register_channel(&pairs, &signal_excess, cfg);
    let idler = register_channel(&pairs, &idler_excess, cfg);
    Ok((signal, idler))
}

/// Bitwise AND of the two channel series.
pub fn coincidences(signal: &BinSeries, idler: &BinSeries) -> Result<BinSeries> {
    if signal.len != idler.len {
        return Err(Error::Shape(format!(
            "series lengths differ: {} vs {}",
            signal.len, idler.len
        )));
    }
    if signal.bin_width != idler.bin_width {
        return Err(Error::Shape(format!(
            "bin widths differ: {} vs {}",
            signal.bin_width, idler.bin_width
        )));
    }
    Ok(BinSeries {
        words: signal
            .words
            .iter()
            .zip(&idler.words)
            .map(|(a, b)| a & b)
            .collect(),
        len: signal.len,
        bin_width: signal.bin_width,
    })
}

pub fn bins_to_timestamps(series: &BinSeries) -> TimestampSeries {
    TimestampSeries::new(series.ones().map(|i| i as u64).collect(), series.bin_width)
}

/// Inverse of [`bins_to_timestamps`] for a series of `len` bins. The tick of
/// `ts` is taken as the bin width.
pub fn timestamps_to_bins(ts: &TimestampSeries, len: usize) -> Result<BinSeries> {
    let mut series = BinSeries::zeros(len, ts.tick());
    for &t in ts.ticks() {
        let bin = usize::try_from(t)
            .ok()
            .filter(|&b| b < len)
            .ok_or_else(|| {
                Error::Shape(format!("timestamp tick {t} outside series of {len} bins"))
            })?;
        series.set(bin);
    }
    Ok(series)
}
