use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::special::gamma_q;
use super::suite::{
    approx_entropy_test, block_frequency_test, cusum_test, default_approx_entropy_order,
    frequency_test, longest_run_test, runs_test, spectral_test, Direction, TestKind, TestResult,
};
use crate::bits::BitSequence;
use crate::error::{Error, Result};

/// Minimum p-value of the uniformity chi-square for a row to pass.
pub const UNIFORMITY_THRESHOLD: f64 = 0.0001;

/// Rows of the standard battery that this crate does not implement.
pub const NOT_IMPLEMENTED: [&str; 3] = ["Rank", "Non-Overlapping Template", "Overlapping Template"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryConfig {
    pub alpha: f64,
    /// Required passing fraction when `min_pass_count` is not set.
    pub min_pass_fraction: f64,
    /// Explicit number of sequences that must pass each test.
    pub min_pass_count: Option<usize>,
    pub block_frequency_len: usize,
    /// Approximate-entropy order; `None` picks the largest admissible order
    /// up to 10 for each sequence length.
    pub approx_entropy_order: Option<usize>,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            min_pass_fraction: 0.97,
            min_pass_count: None,
            block_frequency_len: 128,
            approx_entropy_order: None,
        }
    }
}

impl BatteryConfig {
    pub fn required_passes(&self, sequences: usize) -> usize {
        self.min_pass_count
            .unwrap_or_else(|| (self.min_pass_fraction * sequences as f64 - 1e-9).ceil() as usize)
    }

    /// Lower edge of the `p_hat +/- 3 sigma` acceptance interval for the
    /// passing proportion, as a count out of `sequences`.
    pub fn binomial_threshold(&self, sequences: usize) -> f64 {
        let p = 1.0 - self.alpha;
        let s = sequences as f64;
        s * (p - 3.0 * (p * (1.0 - p) / s).sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Evaluated,
    /// No sequence was long enough for the test.
    NotRun,
    NotImplemented,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryRow {
    pub test_name: String,
    pub test_id: String,
    pub status: RowStatus,
    /// Chi-square p-value of the p-value histogram over 10 bins.
    pub uniformity_p: Option<f64>,
    pub passed: usize,
    pub total: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub alpha: f64,
    pub sequences: usize,
    pub sequence_length: usize,
    pub min_pass_count: usize,
    pub binomial_threshold: f64,
    pub block_frequency_len: usize,
    pub approx_entropy_order: Option<usize>,
    pub rows: Vec<BatteryRow>,
    pub all_pass: bool,
}

impl BatteryReport {
    pub fn row(&self, id: &str) -> Option<&BatteryRow> {
        self.rows.iter().find(|r| r.test_id == id)
    }

    pub fn evaluated_rows(&self) -> impl Iterator<Item = &BatteryRow> {
        self.rows
            .iter()
            .filter(|r| r.status == RowStatus::Evaluated)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned text table with Test, P-value and Pass columns.
    pub fn to_table(&self) -> String {
        let name_width = self
            .rows
            .iter()
            .map(|r| r.test_name.len())
            .max()
            .unwrap_or(4)
            .max(4);
        let mut out = format!(
            "{:<name_width$}  {:>10}  {:>9}  {}\n",
            "Test", "P-value", "Pass", "Result"
        );
        out.push_str(&"-".repeat(name_width + 34));
        out.push('\n');
        for row in &self.rows {
            let (p, count, result) = match row.status {
                RowStatus::Evaluated => (
                    row.uniformity_p
                        .map(|p| format!("{p:.6}"))
                        .unwrap_or_else(|| "-".into()),
                    format!("{}/{}", row.passed, row.total),
                    if row.pass { "PASS" } else { "FAIL" },
                ),
                RowStatus::NotRun => ("-".into(), "-".into(), "not run"),
                RowStatus::NotImplemented => ("-".into(), "-".into(), "not implemented"),
            };
            out.push_str(&format!(
                "{:<name_width$}  {:>10}  {:>9}  {}\n",
                row.test_name, p, count, result
            ));
        }
        out.push_str(&format!(
            "alpha = {}, required passes = {}/{}, sequence length = {}\n",
            self.alpha, self.min_pass_count, self.sequences, self.sequence_length
        ));
        out
    }
}

/// Chi-square uniformity of p-values over 10 equal bins.
pub fn pvalue_uniformity(p_values: &[f64]) -> Option<f64> {
    if p_values.len() < 2 {
        return None;
    }
    let mut bins = [0u64; 10];
    for &p in p_values {
        bins[((p * 10.0) as usize).min(9)] += 1;
    }
    let expected = p_values.len() as f64 / 10.0;
    let chi_sq: f64 = bins
        .iter()
        .map(|&f| (f as f64 - expected).powi(2) / expected)
        .sum();
    Some(gamma_q(4.5, chi_sq / 2.0))
}

/// Runs every implemented test on one sequence. Tests the sequence is too
/// short for are reported as `None`.
pub fn run_all(
    bits: &BitSequence,
    cfg: &BatteryConfig,
) -> Result<Vec<(TestKind, Option<TestResult>)>> {
    let apen_order = cfg
        .approx_entropy_order
        .or_else(|| default_approx_entropy_order(bits.len()));
    TestKind::ALL
        .iter()
        .map(|&kind| {
            let outcome = match kind {
                TestKind::Frequency => frequency_test(bits),
                TestKind::BlockFrequency => block_frequency_test(bits, cfg.block_frequency_len),
                TestKind::CumulativeSumsForward => cusum_test(bits, Direction::Forward),
                TestKind::CumulativeSumsReverse => cusum_test(bits, Direction::Reverse),
                TestKind::Runs => runs_test(bits),
                TestKind::LongestRun => longest_run_test(bits),
                TestKind::Fft => spectral_test(bits),
                TestKind::ApproximateEntropy => match apen_order {
                    Some(m) => approx_entropy_test(bits, m),
                    None => Err(Error::InsufficientLength {
                        needed: 128,
                        have: bits.len(),
                    }),
                },
            };
            match outcome {
                Ok(r) => Ok((kind, Some(r))),
                Err(Error::InsufficientLength { .. }) => Ok((kind, None)),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Runs the battery over many sequences and aggregates per-test proportions
/// and p-value uniformity.
pub fn run_battery(sequences: &[BitSequence], cfg: &BatteryConfig) -> Result<BatteryReport> {
    if sequences.is_empty() {
        return Err(Error::InsufficientData(
            "battery needs at least one sequence".into(),
        ));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::Config(format!(
            "alpha must be in (0, 1), got {}",
            cfg.alpha
        )));
    }
    let per_sequence: Vec<Vec<(TestKind, Option<TestResult>)>> = sequences
        .par_iter()
        .map(|s| run_all(s, cfg))
        .collect::<Result<_>>()?;

    let min_pass_count = cfg.required_passes(sequences.len());
    let mut rows = Vec::new();
    for (slot, &kind) in TestKind::ALL.iter().enumerate() {
        let results: Vec<TestResult> = per_sequence.iter().filter_map(|r| r[slot].1).collect();
        let row = if results.is_empty() {
            BatteryRow {
                test_name: kind.name().into(),
                test_id: kind.id().into(),
                status: RowStatus::NotRun,
                uniformity_p: None,
                passed: 0,
                total: 0,
                pass: false,
            }
        } else {
            let p_values: Vec<f64> = results.iter().map(|r| r.p_value).collect();
            let passed = results.iter().filter(|r| r.passes(cfg.alpha)).count();
            let uniformity_p = pvalue_uniformity(&p_values);
            let required = cfg
                .min_pass_count
                .unwrap_or_else(|| cfg.required_passes(results.len()));
            BatteryRow {
                test_name: kind.name().into(),
                test_id: kind.id().into(),
                status: RowStatus::Evaluated,
                uniformity_p,
                passed,
                total: results.len(),
                pass: passed >= required && uniformity_p.is_none_or(|p| p >= UNIFORMITY_THRESHOLD),
            }
        };
        rows.push(row);
        // Keep the standard ordering: Rank after Longest Run, templates after FFT.
        match kind {
            TestKind::LongestRun => rows.push(not_implemented(NOT_IMPLEMENTED[0])),
            TestKind::Fft => {
                rows.push(not_implemented(NOT_IMPLEMENTED[1]));
                rows.push(not_implemented(NOT_IMPLEMENTED[2]));
            }
            _ => {}
        }
    }
    let all_pass = rows
        .iter()
        .filter(|r| r.status == RowStatus::Evaluated)
        .all(|r| r.pass)
        && rows.iter().any(|r| r.status == RowStatus::Evaluated);
    Ok(BatteryReport {
        alpha: cfg.alpha,
        sequences: sequences.len(),
        sequence_length: sequences.iter().map(BitSequence::len).min().unwrap_or(0),
        min_pass_count,
        binomial_threshold: cfg.binomial_threshold(sequences.len()),
        block_frequency_len: cfg.block_frequency_len,
        approx_entropy_order: cfg
            .approx_entropy_order
            .or_else(|| default_approx_entropy_order(sequences[0].len())),
        rows,
        all_pass,
    })
}

fn not_implemented(name: &str) -> BatteryRow {
    BatteryRow {
        test_name: name.into(),
        test_id: name.to_lowercase().replace([' ', '-'], "_"),
        status: RowStatus::NotImplemented,
        uniformity_p: None,
        passed: 0,
        total: 0,
        pass: false,
    }
}
