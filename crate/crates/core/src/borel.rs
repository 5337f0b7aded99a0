//! Borel normality test for finite binary sequences.
//!
//! A sequence of length `n` is cut into non-overlapping blocks of `m` bits
//! starting at position 0 and the block frequencies `P(i) = N(i) / N_m` are
//! compared with `2^-m`. Almost every algorithmically random string satisfies
//!
//! ```text
//! |P(i) - 2^-m| < sqrt(log2(n) / n)    for every block i and m <= log2(log2(n))
//! ```
//!
//! The same bound is applied to the RMS deviation
//! `sigma_m = sqrt(2^-m * sum_i (P(i) - 2^-m)^2)`.
//!
//! Passing is a necessary condition for algorithmic randomness, not a
//! sufficient one: a PASS verdict only means the sequence was not falsified.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bits::BitSequence;
use crate::error::{Error, Result};
use crate::stats::BoxStats;

/// Assumption tags recorded in every serialized verdict.
pub const ASSUMPTIONS: [&str; 2] = ["log2", "sigma_sqrt_bound"];

/// Note attached to serialized verdicts about the bound value.
pub const BOUND_NOTE: &str =
    "bound = sqrt(log2(n)/n) evaluated exactly; the rounded figure 0.00441 \
     often quoted for n = 10^6 understates the exact 0.0044645";

/// Largest admissible block order, `floor(log2(log2(n)))`, at least 1.
pub fn max_order(n: usize) -> Result<usize> {
    if n < 4 {
        return Err(Error::InsufficientLength { needed: 4, have: n });
    }
    // Largest m with n >= 2^(2^m), evaluated with integer shifts.
    let mut m = 0u32;
    while (1u32 << (m + 1)) < usize::BITS && n >> (1u32 << (m + 1)) >= 1 {
        m += 1;
    }
    let m = m as usize;
    Ok(m.max(1))
}

/// `sqrt(log2(n) / n)`.
pub fn borel_bound(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InsufficientLength { needed: 2, have: n });
    }
    let n = n as f64;
    Ok((n.log2() / n).sqrt())
}

/// Counts of every `m`-bit block in a sequence cut into non-overlapping blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDistribution {
    m: usize,
    /// Indexed by block value, first bit most significant.
    counts: Vec<u64>,
    total: u64,
    discarded: usize,
}

impl BlockDistribution {
    pub fn order(&self) -> usize {
        self.m
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, block: &str) -> Option<u64> {
        if block.len() != self.m {
            return None;
        }
        usize::from_str_radix(block, 2).ok().map(|i| self.counts[i])
    }

    /// `N_m = floor(n / m)`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Trailing bits (`n mod m`) that did not fill a block.
    pub fn discarded_bits(&self) -> usize {
        self.discarded
    }

    pub fn probs(&self) -> Vec<f64> {
        let total = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }

    /// `|P(i) - 2^-m|` for every block.
    pub fn abs_deviations(&self) -> Vec<f64> {
        let expected = expected_prob(self.m);
        self.probs().iter().map(|p| (p - expected).abs()).collect()
    }

    /// Block label with `m` characters, e.g. `"011"`.
    pub fn label(&self, index: usize) -> String {
        format!("{index:0width$b}", width = self.m)
    }
}

fn expected_prob(m: usize) -> f64 {
    (-(m as f64)).exp2()
}

pub fn block_distribution(bits: &BitSequence, m: usize) -> Result<BlockDistribution> {
    if m == 0 {
        return Err(Error::InvalidArgument("block order must be >= 1".into()));
    }
    if m > 30 {
        return Err(Error::InvalidArgument(format!("block order {m} too large")));
    }
    if m > bits.len() {
        return Err(Error::InsufficientLength {
            needed: m,
            have: bits.len(),
        });
    }
    let mut counts = vec![0u64; 1 << m];
    let blocks = bits.as_slice().chunks_exact(m);
    let discarded = blocks.remainder().len();
    for block in blocks {
        let index = block.iter().fold(0usize, |acc, &b| acc << 1 | b as usize);
        counts[index] += 1;
    }
    Ok(BlockDistribution {
        m,
        counts,
        total: (bits.len() / m) as u64,
        discarded,
    })
}

/// RMS deviation of the block probabilities from `2^-m`.
pub fn sigma(dist: &BlockDistribution) -> f64 {
    let blocks = dist.counts.len() as f64;
    let sum_sq: f64 = dist.abs_deviations().iter().map(|d| d * d).sum();
    (sum_sq / blocks).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    pub box_stats: BoxStats,
    /// Largest deviation as a percentage of the bound.
    pub relative_pct: f64,
}

pub fn deviation_summary(dist: &BlockDistribution, bound: f64) -> DeviationSummary {
    let box_stats = BoxStats::from_values(&dist.abs_deviations());
    DeviationSummary {
        relative_pct: 100.0 * box_stats.max / bound.abs(),
        box_stats,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderResult {
    pub m: usize,
    pub max_abs_deviation: f64,
    pub sigma: f64,
    pub box_stats: BoxStats,
    pub relative_pct: f64,
    pub pass: bool,
    pub distribution: BlockDistribution,
}

impl OrderResult {
    /// Which of the two criteria failed, if any.
    pub fn failure_reason(&self, bound: f64) -> Option<String> {
        let mut reasons = Vec::new();
        if !(self.max_abs_deviation < bound) {
            reasons.push(format!(
                "max |P(i) - 2^-{}| = {:.6} >= bound {:.6}",
                self.m, self.max_abs_deviation, bound
            ));
        }
        if !(self.sigma < bound) {
            reasons.push(format!(
                "sigma_{} = {:.6} >= bound {:.6}",
                self.m, self.sigma, bound
            ));
        }
        (!reasons.is_empty()).then(|| reasons.join("; "))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BorelVerdict {
    pub n: usize,
    pub m_max: usize,
    pub bound: f64,
    pub per_order: Vec<OrderResult>,
    pub overall_pass: bool,
}

impl BorelVerdict {
    /// First failing order, if any.
    pub fn first_failure(&self) -> Option<&OrderResult> {
        self.per_order.iter().find(|o| !o.pass)
    }

    /// `"not falsified"` or `"FAIL"`; a pass never certifies randomness.
    pub fn label(&self) -> &'static str {
        if self.overall_pass {
            "PASS (not falsified)"
        } else {
            "FAIL"
        }
    }

    /// JSON view; per-block counts are included only when `verbose`.
    pub fn to_json(&self, verbose: bool) -> Value {
        let per_order: Vec<Value> = self
            .per_order
            .iter()
            .map(|o| {
                let mut v = json!({
                    "m": o.m,
                    "max_dev": o.max_abs_deviation,
                    "sigma": o.sigma,
                    "box": o.box_stats.as_array(),
                    "rel_pct": o.relative_pct,
                    "pass": o.pass,
                    "discarded_bits": o.distribution.discarded_bits(),
                });
                if verbose {
                    let counts: serde_json::Map<String, Value> = o
                        .distribution
                        .counts()
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| (o.distribution.label(i), json!(c)))
                        .collect();
                    v["counts"] = Value::Object(counts);
                }
                v
            })
            .collect();
        json!({
            "n": self.n,
            "m_max": self.m_max,
            "bound": self.bound,
            "assumptions": ASSUMPTIONS,
            "notes": [BOUND_NOTE, "PASS means not falsified: Borel normality is necessary, not sufficient, for algorithmic randomness"],
            "per_order": per_order,
            "overall_pass": self.overall_pass,
            "verdict": self.label(),
        })
    }
}

/// Evaluates orders `1..=max_order(n)` against `sqrt(log2(n)/n)`.
pub fn borel_verdict(bits: &BitSequence) -> Result<BorelVerdict> {
    let bound = borel_bound(bits.len().max(2))?;
    borel_verdict_with_bound(bits, bound)
}

/// As [`borel_verdict`] but with an explicit bound.
pub fn borel_verdict_with_bound(bits: &BitSequence, bound: f64) -> Result<BorelVerdict> {
    let n = bits.len();
    let m_max = max_order(n)?;
    let per_order = (1..=m_max)
        .map(|m| {
            let distribution = block_distribution(bits, m)?;
            let summary = deviation_summary(&distribution, bound);
            let sigma = sigma(&distribution);
            let max_abs_deviation = summary.box_stats.max;
            Ok(OrderResult {
                m,
                max_abs_deviation,
                sigma,
                box_stats: summary.box_stats,
                relative_pct: summary.relative_pct,
                pass: max_abs_deviation < bound && sigma < bound,
                distribution,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BorelVerdict {
        n,
        m_max,
        bound,
        overall_pass: per_order.iter().all(|o| o.pass),
        per_order,
    })
}
