//! Files written by the pipeline. Numbers are formatted with Rust's
//! `Display`, which is locale-independent and round-trips `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::bits::BitSequence;
use crate::borel::BorelVerdict;
use crate::error::{Error, Result};
use crate::extract::IntervalSeries;
use crate::io::write_bits;
use crate::nist::BatteryReport;
use crate::stats::interpolated_quantile;

use super::config::OutputConfig;

pub const HISTOGRAM_BINS: usize = 100;

/// Histogram upper edge as a quantile of the intervals; trims the long tail.
const HISTOGRAM_QUANTILE: f64 = 0.999;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Artifacts {
    pub bits: Option<PathBuf>,
    pub borel_json: Option<PathBuf>,
    pub block_probs_csv: Vec<PathBuf>,
    pub box_whisker_csv: Option<PathBuf>,
    pub battery_json: Option<PathBuf>,
    pub battery_txt: Option<PathBuf>,
    pub intervals_hist_csv: Option<PathBuf>,
}

impl Artifacts {
    pub fn paths(&self) -> Vec<&Path> {
        let mut out: Vec<&Path> = Vec::new();
        out.extend(self.bits.as_deref());
        out.extend(self.borel_json.as_deref());
        out.extend(self.block_probs_csv.iter().map(PathBuf::as_path));
        out.extend(self.box_whisker_csv.as_deref());
        out.extend(self.battery_json.as_deref());
        out.extend(self.battery_txt.as_deref());
        out.extend(self.intervals_hist_csv.as_deref());
        out
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// One row per histogram bin: `(lower, upper, count, density, fitted density)`.
/// The fit is the exponential law with the sample mean, averaged over the bin.
pub fn interval_histogram(iv: &IntervalSeries, bins: usize) -> Vec<(f64, f64, u64, f64, f64)> {
    if iv.is_empty() || bins == 0 {
        return Vec::new();
    }
    let mut sorted = iv.durations().to_vec();
    sorted.sort_by(f64::total_cmp);
    let upper = interpolated_quantile(&sorted, HISTOGRAM_QUANTILE);
    if !(upper > 0.0) {
        return Vec::new();
    }
    let width = upper / bins as f64;
    let mut counts = vec![0u64; bins];
    for &d in &sorted {
        if d <= upper {
            counts[((d / width) as usize).min(bins - 1)] += 1;
        }
    }
    let n = sorted.len() as f64;
    let rate = 1.0 / iv.mean();
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let lo = i as f64 * width;
            let hi = lo + width;
            let fit = ((-rate * lo).exp() - (-rate * hi).exp()) / width;
            (lo, hi, c, c as f64 / (n * width), fit)
        })
        .collect()
}

fn block_probs_csv(m: usize, verdicts: &[BorelVerdict]) -> String {
    let mut out = format!(
        "# relative frequency P(i) of each non-overlapping {m}-bit block, per sequence\n\
         # expected = 2^-{m}; bound = Borel limit on |P(i) - expected| for that sequence length\n\
         sequence,block,count,probability,expected,bound\n"
    );
    let expected = 0.5f64.powi(m as i32);
    for (s, v) in verdicts.iter().enumerate() {
        let Some(order) = v.per_order.iter().find(|o| o.m == m) else {
            continue;
        };
        let dist = &order.distribution;
        for (i, (count, p)) in dist.counts().iter().zip(dist.probs()).enumerate() {
            let _ = writeln!(
                out,
                "{s},{},{count},{p},{expected},{}",
                dist.label(i),
                v.bound
            );
        }
    }
    out
}

fn box_whisker_csv(verdicts: &[BorelVerdict]) -> String {
    let mut out = String::from(
        "# five-number summary of |P(i) - 2^-m| over all blocks, per sequence and order\n\
         sequence,m,min,q1,median,q3,max,sigma,bound,relative_pct,pass\n",
    );
    for (s, v) in verdicts.iter().enumerate() {
        for o in &v.per_order {
            let b = o.box_stats;
            let _ = writeln!(
                out,
                "{s},{},{},{},{},{},{},{},{},{},{}",
                o.m, b.min, b.q1, b.median, b.q3, b.max, o.sigma, v.bound, o.relative_pct, o.pass
            );
        }
    }
    out
}

fn intervals_csv(iv: &IntervalSeries, edges: &[f64]) -> String {
    let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
    let mut out = format!(
        "# histogram of truncated inter-coincidence intervals (seconds), {} intervals\n\
         # truncation offset t0 = {}; encoding edges = {}\n\
         # fit = exponential density with rate 1/mean = {}\n\
         lower,upper,count,density,fit\n",
        iv.len(),
        iv.truncation_offset(),
        list(edges),
        1.0 / iv.mean()
    );
    for (lo, hi, c, d, f) in interval_histogram(iv, HISTOGRAM_BINS) {
        let _ = writeln!(out, "{lo},{hi},{c},{d},{f}");
    }
    out
}

/// Writes the bits (if given) and every available analysis to `output.dir`.
pub fn write_artifacts(
    output: &OutputConfig,
    bits: Option<&BitSequence>,
    borel: &[BorelVerdict],
    battery: Option<&BatteryReport>,
    intervals: Option<(&IntervalSeries, &[f64])>,
    verbose: bool,
) -> Result<Artifacts> {
    let dir = &output.dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut artifacts = Artifacts::default();

    if let Some(bits) = bits {
        let path = dir.join(format!("bits.{}", output.format.extension()));
        write_bits(bits, &path, output.format)?;
        artifacts.bits = Some(path);
    }

    if !borel.is_empty() {
        let doc = json!({
            "sequences": borel.iter().map(|v| v.to_json(verbose)).collect::<Vec<_>>(),
            "overall_pass": borel.iter().all(|v| v.overall_pass),
        });
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        artifacts.borel_json = Some(write(&dir.join("borel.json"), text)?);
        let m_max = borel.iter().map(|v| v.m_max).max().unwrap_or(0);
        for m in 1..=m_max {
            let path = dir.join(format!("block_probs_m{m}.csv"));
            artifacts
                .block_probs_csv
                .push(write(&path, block_probs_csv(m, borel))?);
        }
        artifacts.box_whisker_csv =
            Some(write(&dir.join("box_whisker.csv"), box_whisker_csv(borel))?);
    }

    if let Some(report) = battery {
        artifacts.battery_json = Some(write(&dir.join("battery.json"), report.to_json()? + "\n")?);
        artifacts.battery_txt = Some(write(&dir.join("battery.txt"), report.to_table())?);
    }

    if let Some((iv, edges)) = intervals.filter(|(iv, _)| !iv.is_empty()) {
        artifacts.intervals_hist_csv = Some(write(
            &dir.join("intervals_hist.csv"),
            intervals_csv(iv, edges),
        )?);
    }
    Ok(artifacts)
}
