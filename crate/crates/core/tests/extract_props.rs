use proptest::prelude::*;
use qrng_core::extract::{
    encode_median, encode_multibin, interarrival, multibin_edges, split_threshold,
    truncate_dead_time, von_neumann, IntervalSeries,
};
use qrng_core::source_sim::TimestampSeries;
use qrng_core::BitSequence;

fn durations() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(1e-9f64..1e-3, 2..400)
}

proptest! {
    #[test]
    fn median_encoding_invariant_under_monotone_relabeling(d in durations(), scale in 0.1f64..100.0) {
        let iv = IntervalSeries::new(d.clone(), 0.0).unwrap();
        let bits = encode_median(&iv, split_threshold(&iv).unwrap()).unwrap();
        // strictly increasing map: t -> scale * t^2 + t
        let relabeled: Vec<f64> = d.iter().map(|&t| scale * t * t + t).collect();
        let iv2 = IntervalSeries::new(relabeled, 0.0).unwrap();
        let bits2 = encode_median(&iv2, split_threshold(&iv2).unwrap()).unwrap();
        prop_assert_eq!(bits, bits2);
    }

    #[test]
    fn multibin_invariant_under_scaling(d in durations(), scale in 0.5f64..4.0) {
        prop_assume!(d.len() >= 4);
        let iv = IntervalSeries::new(d.clone(), 0.0).unwrap();
        let scaled = IntervalSeries::new(d.iter().map(|t| t * 2f64.powf(scale.round())).collect(), 0.0).unwrap();
        prop_assert_eq!(encode_multibin(&iv, 4).unwrap(), encode_multibin(&scaled, 4).unwrap());
    }

    #[test]
    fn median_split_is_balanced(d in proptest::collection::hash_set(1u32..1_000_000, 2..400)) {
        // distinct values: exactly half below and half above, minus ties
        let iv = IntervalSeries::new(d.iter().map(|&v| v as f64 * 1e-9).collect(), 0.0).unwrap();
        let bits = encode_median(&iv, split_threshold(&iv).unwrap()).unwrap();
        let ones = bits.count_ones();
        prop_assert_eq!(ones, bits.len() - ones);
    }

    #[test]
    fn multibin_edges_non_decreasing(d in durations(), log_k in 1u32..4) {
        let k = 1usize << log_k;
        prop_assume!(d.len() >= k);
        let iv = IntervalSeries::new(d, 0.0).unwrap();
        let edges = multibin_edges(&iv, k).unwrap();
        prop_assert_eq!(edges.len(), k - 1);
        prop_assert!(edges.windows(2).all(|w| w[0] <= w[1]));
        let bits = encode_multibin(&iv, k).unwrap();
        prop_assert_eq!(bits.len() % log_k as usize, 0);
    }

    #[test]
    fn truncation_drops_and_shifts(d in durations(), t0 in 0.0f64..5e-4) {
        let iv = IntervalSeries::new(d.clone(), 0.0).unwrap();
        match truncate_dead_time(&iv, t0) {
            Ok(tr) => {
                let expected: Vec<f64> = d.iter().filter(|&&t| t >= t0).map(|t| t - t0).collect();
                prop_assert_eq!(tr.durations(), expected.as_slice());
                prop_assert_eq!(tr.truncation_offset(), t0);
            }
            Err(_) => prop_assert!(d.iter().all(|&t| t < t0)),
        }
    }

    #[test]
    fn interarrival_sums_to_span(mut ticks in proptest::collection::btree_set(0u64..1_000_000, 2..300)) {
        let ticks: Vec<u64> = std::mem::take(&mut ticks).into_iter().collect();
        let ts = TimestampSeries::new(ticks.clone(), 1.0);
        let iv = interarrival(&ts).unwrap();
        prop_assert_eq!(iv.len(), ticks.len() - 1);
        let total: f64 = iv.durations().iter().sum();
        prop_assert_eq!(total, (ticks[ticks.len() - 1] - ticks[0]) as f64);
    }

    #[test]
    fn von_neumann_commutes_with_complement(v in proptest::collection::vec(any::<bool>(), 0..1000)) {
        let bits = BitSequence::new(v);
        prop_assert_eq!(von_neumann(&bits.complement()), von_neumann(&bits).complement());
        prop_assert!(von_neumann(&bits).len() <= bits.len() / 2);
    }
}
