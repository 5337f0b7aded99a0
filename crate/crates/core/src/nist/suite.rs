//! Individual statistical tests. Each returns a [`TestResult`] with a p-value
//! or [`Error::InsufficientLength`] when the input is too short for the test's
//! asymptotics.

use std::f64::consts::{LN_2, SQRT_2};
use std::sync::OnceLock;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::special::{erfc, gamma_q, normal_cdf};
use crate::bits::BitSequence;
use crate::error::{Error, Result};

pub const FREQUENCY_MIN_LEN: usize = 100;
pub const RUNS_MIN_LEN: usize = 100;
pub const CUSUM_MIN_LEN: usize = 100;
pub const LONGEST_RUN_MIN_LEN: usize = 128;
pub const SPECTRAL_MIN_LEN: usize = 1000;

/// Block length used by the longest-run test.
pub const LONGEST_RUN_BLOCK: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestKind {
    Frequency,
    BlockFrequency,
    CumulativeSumsForward,
    CumulativeSumsReverse,
    Runs,
    LongestRun,
    Fft,
    ApproximateEntropy,
}

impl TestKind {
    pub const ALL: [TestKind; 8] = [
        TestKind::Frequency,
        TestKind::BlockFrequency,
        TestKind::CumulativeSumsForward,
        TestKind::CumulativeSumsReverse,
        TestKind::Runs,
        TestKind::LongestRun,
        TestKind::Fft,
        TestKind::ApproximateEntropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Frequency => "Frequency",
            TestKind::BlockFrequency => "Block Frequency",
            TestKind::CumulativeSumsForward | TestKind::CumulativeSumsReverse => "Cumulative Sums",
            TestKind::Runs => "Runs",
            TestKind::LongestRun => "Longest Run",
            TestKind::Fft => "FFT",
            TestKind::ApproximateEntropy => "Approximate Entropy",
        }
    }

    /// Unique machine-readable identifier.
    pub fn id(self) -> &'static str {
        match self {
            TestKind::Frequency => "frequency",
            TestKind::BlockFrequency => "block_frequency",
            TestKind::CumulativeSumsForward => "cusum_forward",
            TestKind::CumulativeSumsReverse => "cusum_reverse",
            TestKind::Runs => "runs",
            TestKind::LongestRun => "longest_run",
            TestKind::Fft => "fft",
            TestKind::ApproximateEntropy => "approximate_entropy",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub kind: TestKind,
    pub p_value: f64,
    /// The test statistic the p-value was derived from.
    pub statistic: f64,
}

impl TestResult {
    fn new(kind: TestKind, p_value: f64, statistic: f64) -> Self {
        debug_assert!(!p_value.is_nan(), "{kind:?} produced NaN");
        Self {
            kind,
            p_value: p_value.clamp(0.0, 1.0),
            statistic,
        }
    }

    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

fn require_len(bits: &BitSequence, needed: usize) -> Result<()> {
    if bits.len() < needed {
        Err(Error::InsufficientLength {
            needed,
            have: bits.len(),
        })
    } else {
        Ok(())
    }
}

fn plus_minus_sum(bits: &[bool]) -> i64 {
    bits.iter().map(|&b| if b { 1i64 } else { -1 }).sum()
}

pub fn frequency_test(bits: &BitSequence) -> Result<TestResult> {
    require_len(bits, FREQUENCY_MIN_LEN)?;
    let n = bits.len() as f64;
    let s = plus_minus_sum(bits.as_slice()).abs() as f64;
    let s_obs = s / n.sqrt();
    Ok(TestResult::new(
        TestKind::Frequency,
        erfc(s_obs / SQRT_2),
        s_obs,
    ))
}

/// Chi-square over the ones-proportion of `floor(n / block_len)` blocks.
pub fn block_frequency_test(bits: &BitSequence, block_len: usize) -> Result<TestResult> {
    if block_len == 0 {
        return Err(Error::InvalidArgument("block length must be >= 1".into()));
    }
    require_len(bits, FREQUENCY_MIN_LEN.max(block_len))?;
    let blocks = bits.as_slice().chunks_exact(block_len);
    let n_blocks = blocks.len() as f64;
    let m = block_len as f64;
    let sum_sq: f64 = blocks
        .map(|b| {
            let pi = b.iter().filter(|&&x| x).count() as f64 / m;
            (pi - 0.5) * (pi - 0.5)
        })
        .sum();
    let chi_sq = 4.0 * m * sum_sq;
    Ok(TestResult::new(
        TestKind::BlockFrequency,
        gamma_q(n_blocks / 2.0, chi_sq / 2.0),
        chi_sq,
    ))
}

pub fn runs_test(bits: &BitSequence) -> Result<TestResult> {
    require_len(bits, RUNS_MIN_LEN)?;
    let s = bits.as_slice();
    let n = s.len() as f64;
    let pi = bits.count_ones() as f64 / n;
    let tau = 2.0 / n.sqrt();
    if (pi - 0.5).abs() >= tau {
        // Frequency pre-test failed; the runs statistic is meaningless.
        return Ok(TestResult::new(TestKind::Runs, 0.0, f64::NAN));
    }
    let v_obs = 1 + s.windows(2).filter(|w| w[0] != w[1]).count();
    let v = v_obs as f64;
    let pq = pi * (1.0 - pi);
    let p = erfc((v - 2.0 * n * pq).abs() / (2.0 * (2.0 * n).sqrt() * pq));
    Ok(TestResult::new(TestKind::Runs, p, v))
}

fn longest_run_of_ones(block: impl IntoIterator<Item = bool>) -> usize {
    let (mut best, mut cur) = (0, 0);
    for b in block {
        if b {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}

fn longest_run_class(run: usize) -> usize {
    run.saturating_sub(1).min(3)
}

/// Probabilities of the classes {<=1, 2, 3, >=4} for the longest run of ones
/// in an 8-bit block, obtained by enumerating all 256 blocks.
pub fn longest_run_class_probabilities() -> [f64; 4] {
    static PROBS: OnceLock<[f64; 4]> = OnceLock::new();
    *PROBS.get_or_init(|| {
        let mut counts = [0u32; 4];
        for block in 0u32..1 << LONGEST_RUN_BLOCK {
            let run = longest_run_of_ones((0..LONGEST_RUN_BLOCK).map(|i| block >> i & 1 == 1));
            counts[longest_run_class(run)] += 1;
        }
        counts.map(|c| c as f64 / (1u32 << LONGEST_RUN_BLOCK) as f64)
    })
}

/// Longest run of ones within 8-bit blocks, binned into four classes and
/// compared with the enumerated class probabilities.
pub fn longest_run_test(bits: &BitSequence) -> Result<TestResult> {
    require_len(bits, LONGEST_RUN_MIN_LEN)?;
    let probs = longest_run_class_probabilities();
    let mut observed = [0u64; 4];
    let blocks = bits.as_slice().chunks_exact(LONGEST_RUN_BLOCK);
    let n_blocks = blocks.len() as f64;
    for block in blocks {
        observed[longest_run_class(longest_run_of_ones(block.iter().copied()))] += 1;
    }
    let chi_sq: f64 = observed
        .iter()
        .zip(probs)
        .map(|(&v, p)| {
            let expected = n_blocks * p;
            (v as f64 - expected).powi(2) / expected
        })
        .sum();
    Ok(TestResult::new(
        TestKind::LongestRun,
        gamma_q(1.5, chi_sq / 2.0),
        chi_sq,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

/// Maximal excursion of the +/-1 random walk, with the p-value from the
/// distribution of the maximum of a random walk.
pub fn cusum_test(bits: &BitSequence, direction: Direction) -> Result<TestResult> {
    require_len(bits, CUSUM_MIN_LEN)?;
    let step = |b: bool| if b { 1i64 } else { -1 };
    let walk = |it: &mut dyn Iterator<Item = bool>| {
        let mut s = 0i64;
        let mut z = 0i64;
        for b in it {
            s += step(b);
            z = z.max(s.abs());
        }
        z
    };
    let z = match direction {
        Direction::Forward => walk(&mut bits.iter()),
        Direction::Reverse => walk(&mut bits.iter().rev()),
    } as f64;
    let n = bits.len() as f64;
    let sqrt_n = n.sqrt();

    let lo1 = ((-n / z + 1.0) / 4.0).trunc() as i64;
    let hi1 = ((n / z - 1.0) / 4.0).trunc() as i64;
    let sum1: f64 = (lo1..=hi1)
        .map(|k| {
            let k = k as f64;
            normal_cdf((4.0 * k + 1.0) * z / sqrt_n) - normal_cdf((4.0 * k - 1.0) * z / sqrt_n)
        })
        .sum();
    let lo2 = ((-n / z - 3.0) / 4.0).trunc() as i64;
    let sum2: f64 = (lo2..=hi1)
        .map(|k| {
            let k = k as f64;
            normal_cdf((4.0 * k + 3.0) * z / sqrt_n) - normal_cdf((4.0 * k + 1.0) * z / sqrt_n)
        })
        .sum();
    let kind = match direction {
        Direction::Forward => TestKind::CumulativeSumsForward,
        Direction::Reverse => TestKind::CumulativeSumsReverse,
    };
    Ok(TestResult::new(kind, 1.0 - sum1 + sum2, z))
}

/// Whether `m` satisfies `m < log2(n) - 5`.
pub fn approx_entropy_order_ok(n: usize, m: usize) -> bool {
    n > 0 && (m as f64) < (n as f64).log2() - 5.0
}

/// Largest admissible approximate-entropy order for `n` bits, capped at 10.
pub fn default_approx_entropy_order(n: usize) -> Option<usize> {
    (1..=10).rev().find(|&m| approx_entropy_order_ok(n, m))
}

/// `phi(m)`: sum of `C ln C` over the overlapping, wrapped `m`-bit patterns.
fn approx_entropy_phi(bits: &[bool], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len();
    let mask = (1usize << m) - 1;
    let mut counts = vec![0u32; 1 << m];
    let mut window = bits[..m - 1]
        .iter()
        .fold(0usize, |acc, &b| acc << 1 | b as usize);
    for i in 0..n {
        let b = bits[(i + m - 1) % n];
        window = (window << 1 | b as usize) & mask;
        counts[window] += 1;
    }
    let nf = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / nf;
            p * p.ln()
        })
        .sum()
}

pub fn approx_entropy_test(bits: &BitSequence, m: usize) -> Result<TestResult> {
    if m == 0 || m > 24 {
        return Err(Error::InvalidArgument(format!(
            "approximate entropy order {m} out of range"
        )));
    }
    if !approx_entropy_order_ok(bits.len(), m) {
        // Smallest n with m < log2(n) - 5.
        let needed = (((m + 5) as f64).exp2().floor() as usize) + 1;
        return Err(Error::InsufficientLength {
            needed,
            have: bits.len(),
        });
    }
    let s = bits.as_slice();
    let ap_en = approx_entropy_phi(s, m) - approx_entropy_phi(s, m + 1);
    let n = s.len() as f64;
    let chi_sq = 2.0 * n * (LN_2 - ap_en);
    Ok(TestResult::new(
        TestKind::ApproximateEntropy,
        gamma_q((1u64 << (m - 1)) as f64, chi_sq / 2.0),
        chi_sq,
    ))
}

/// Magnitudes of the first `floor(n/2)` DFT coefficients of the +/-1 signal.
pub fn dft_magnitudes(bits: &BitSequence) -> Vec<f64> {
    let n = bits.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = bits
        .iter()
        .map(|b| Complex::new(if b { 1.0 } else { -1.0 }, 0.0))
        .collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    fft.process(&mut buf);
    buf[..n / 2].iter().map(|c| c.norm()).collect()
}

/// Counts DFT peaks below the 95% threshold `sqrt(n ln(1/0.05))` and compares
/// with the expected `0.95 n / 2`.
pub fn spectral_test(bits: &BitSequence) -> Result<TestResult> {
    require_len(bits, SPECTRAL_MIN_LEN)?;
    let n = bits.len() as f64;
    let threshold = (n * (1.0f64 / 0.05).ln()).sqrt();
    let below = dft_magnitudes(bits)
        .iter()
        .filter(|&&m| m < threshold)
        .count() as f64;
    let expected = 0.95 * n / 2.0;
    let d = (below - expected) / (n * 0.95 * 0.05 / 4.0).sqrt();
    Ok(TestResult::new(TestKind::Fft, erfc(d.abs() / SQRT_2), d))
}
