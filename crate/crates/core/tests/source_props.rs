use qrng_core::extract::{interarrival, split_threshold, truncate_dead_time};
use qrng_core::source_sim::{
    bins_to_timestamps, coincidences, simulate_source, simulate_span, SourceConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn single_channel(rate: f64, dead_time: f64, span: f64, seed: u64) -> SourceConfig {
    SourceConfig {
        pair_rate: rate,
        singles_excess_rate: 0.0,
        span,
        bin_width: 2e-9,
        dead_time,
        seed,
    }
}

#[test]
fn poisson_count_mean_and_variance() {
    // dead time 0: counts per span are Poisson(rate * span)
    let (rate, span) = (1e6, 1e-3);
    let counts: Vec<f64> = (0..100)
        .map(|seed| {
            let (s, _) = simulate_source(&single_channel(rate, 0.0, span, seed)).unwrap();
            s.count_ones() as f64
        })
        .collect();
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    // bin collisions at 2 ns remove about rate * bin / 2 of events
    let expected = rate * span * (1.0 - rate * 2e-9 / 2.0);
    assert!(
        (mean - expected).abs() < 3.0 * (expected / n).sqrt(),
        "mean {mean} vs {expected}"
    );
    assert!(
        (var / expected - 1.0).abs() < 0.35,
        "variance {var} vs {expected}"
    );
}

/// Direct event-by-event simulation of a non-paralyzable counter in
/// continuous time.
fn brute_force_dead_time_rate(rate: f64, dead_time: f64, span: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut t, mut last, mut count) = (0.0f64, f64::NEG_INFINITY, 0u64);
    loop {
        t += -(1.0 - rng.random::<f64>()).ln() / rate;
        if t >= span {
            break;
        }
        if t - last >= dead_time {
            count += 1;
            last = t;
        }
    }
    count as f64 / span
}

#[test]
fn dead_time_rate_matches_formula_and_oracle() {
    let (rate, dead, span) = (5e6, 20e-9, 0.02);
    let formula = rate / (1.0 + rate * dead);
    let (s, _) = simulate_source(&single_channel(rate, dead, span, 9)).unwrap();
    let simulated = s.count_ones() as f64 / span;
    let oracle = brute_force_dead_time_rate(rate, dead, span, 9);
    assert!(
        (simulated / formula - 1.0).abs() < 0.02,
        "{simulated} vs formula {formula}"
    );
    assert!(
        (simulated / oracle - 1.0).abs() < 0.02,
        "{simulated} vs oracle {oracle}"
    );
    assert!((oracle / formula - 1.0).abs() < 0.02);
}

#[test]
fn full_scale_counts_within_five_percent() {
    let cfg = SourceConfig::full_scale(21);
    let (signal, idler) = simulate_span(&cfg, 0).unwrap();
    let c = coincidences(&signal, &idler).unwrap();
    for singles in [signal.count_ones(), idler.count_ones()] {
        assert!(
            (singles as f64 / 8.5e5 - 1.0).abs() < 0.05,
            "singles {singles}"
        );
    }
    assert!(
        (c.count_ones() as f64 / 8e4 - 1.0).abs() < 0.05,
        "coincidences {}",
        c.count_ones()
    );
}

fn ks_exponential(sample: &mut [f64], rate: f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-rate * x).exp();
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

#[test]
fn truncated_intervals_are_exponential_with_median_ln2_over_rate() {
    // Far above the bin width, so discretization is negligible at this tolerance.
    let rate = 2e5;
    let cfg = single_channel(rate, 20e-9, 0.6, 17);
    let (s, _) = simulate_source(&cfg).unwrap();
    let iv = interarrival(&bins_to_timestamps(&s)).unwrap();
    let tr = truncate_dead_time(&iv, 40e-9).unwrap();
    assert!(tr.len() > 100_000);
    let median = split_threshold(&tr).unwrap();
    // dead time barely changes the interval law beyond t0 at this rate
    let expected = std::f64::consts::LN_2 / rate;
    assert!(
        (median / expected - 1.0).abs() < 0.01,
        "{median} vs {expected}"
    );
}

#[test]
fn coincidence_interval_law_is_memoryless() {
    let cfg = SourceConfig::full_scale(5);
    let (a, b) = simulate_span(&cfg, 0).unwrap();
    let iv = interarrival(&bins_to_timestamps(&coincidences(&a, &b).unwrap())).unwrap();
    let tr = truncate_dead_time(&iv, 40e-9).unwrap();
    let mut sample = tr.durations().to_vec();
    let rate = 1.0 / tr.mean();
    let d = ks_exponential(&mut sample, rate);
    // 5% critical value; the fitted rate makes the test conservative
    assert!(d < 1.358 / (sample.len() as f64).sqrt(), "KS D = {d}");
}
