use std::collections::HashMap;

use proptest::prelude::*;
use qrng_core::borel::{block_distribution, borel_bound, borel_verdict, max_order, sigma};
use qrng_core::BitSequence;

/// Chunk the string into non-overlapping `m`-character blocks and tally.
fn chunk_and_tally(s: &str, m: usize) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for chunk in s.as_bytes().chunks_exact(m) {
        *counts
            .entry(String::from_utf8(chunk.to_vec()).unwrap())
            .or_insert(0) += 1;
    }
    counts
}

fn bits_strategy() -> impl Strategy<Value = BitSequence> {
    proptest::collection::vec(any::<bool>(), 16..3000).prop_map(BitSequence::new)
}

proptest! {
    #[test]
    fn counts_match_chunk_and_tally(bits in bits_strategy(), m in 1usize..=4) {
        let oracle = chunk_and_tally(&bits.to_ascii(), m);
        let dist = block_distribution(&bits, m).unwrap();
        for i in 0..1usize << m {
            let label = dist.label(i);
            prop_assert_eq!(dist.count(&label).unwrap(), *oracle.get(&label).unwrap_or(&0));
        }
        prop_assert_eq!(dist.total() as usize, bits.len() / m);
        prop_assert_eq!(dist.discarded_bits(), bits.len() % m);
    }

    #[test]
    fn complement_relabels_counts(bits in bits_strategy(), m in 1usize..=4) {
        let a = block_distribution(&bits, m).unwrap();
        let b = block_distribution(&bits.complement(), m).unwrap();
        let mask = (1usize << m) - 1;
        for i in 0..=mask {
            prop_assert_eq!(a.counts()[i], b.counts()[i ^ mask]);
        }
        prop_assert!((sigma(&a) - sigma(&b)).abs() < 1e-15);
    }

    #[test]
    fn sigma_at_most_max_deviation(bits in bits_strategy(), m in 1usize..=4) {
        let dist = block_distribution(&bits, m).unwrap();
        let max = dist.abs_deviations().into_iter().fold(0.0, f64::max);
        prop_assert!(sigma(&dist) <= max + 1e-15);
        let total: f64 = dist.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bound_decreasing(n in 3usize..10_000_000) {
        prop_assert!(borel_bound(n + 1).unwrap() < borel_bound(n).unwrap());
    }

    #[test]
    fn max_order_matches_float_formula(n in 4usize..100_000_000) {
        let expected = (n as f64).log2().log2().floor() as usize;
        prop_assert_eq!(max_order(n).unwrap(), expected.max(1));
    }

    #[test]
    fn complement_concatenation_is_balanced(bits in bits_strategy()) {
        let mut both = bits.clone();
        both.extend_from(&bits.complement());
        let dist = block_distribution(&both, 1).unwrap();
        prop_assert_eq!(dist.counts()[0], dist.counts()[1]);
    }
}

#[test]
fn verdict_order_count_follows_length() {
    let bits = qrng_core::fixtures::champernowne(70_000);
    let v = borel_verdict(&bits).unwrap();
    assert_eq!(v.m_max, 4);
    assert_eq!(v.per_order.len(), 4);
    let json = v.to_json(true);
    assert_eq!(json["per_order"][1]["counts"].as_object().unwrap().len(), 4);
}
