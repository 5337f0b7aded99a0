use proptest::prelude::*;
use qrng_core::io::{
    decode_bin_series, encode_bin_series, encode_packed, parse_ascii, parse_packed, read_bits,
    read_timestamps_csv, write_bits, write_timestamps_csv, BitFormat,
};
use qrng_core::source_sim::{bins_to_timestamps, timestamps_to_bins, BinSeries, TimestampSeries};
use qrng_core::{BitSequence, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn files_round_trip_100k_bits_both_formats() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bits: BitSequence = (0..100_000).map(|_| rng.random::<bool>()).collect();
    let dir = tempfile::tempdir().unwrap();
    for format in [BitFormat::Ascii, BitFormat::Packed] {
        let path = dir.path().join(format!("b.{}", format.extension()));
        write_bits(&bits, &path, format).unwrap();
        assert_eq!(read_bits(&path, format).unwrap(), bits);
    }
}

#[test]
fn timestamp_file_round_trip() {
    let ts = TimestampSeries::new(vec![0, 3, 9, 10, 4_000_000_000], 1e-9);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_timestamps_csv(&ts, &path).unwrap();
    assert_eq!(read_timestamps_csv(&path).unwrap(), ts);
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = read_bits(&dir.path().join("nope.txt"), BitFormat::Ascii).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}

proptest! {
    #[test]
    fn ascii_round_trip(v in proptest::collection::vec(any::<bool>(), 0..2000)) {
        let bits = BitSequence::new(v);
        prop_assert_eq!(parse_ascii(bits.to_ascii().as_bytes()).unwrap(), bits);
    }

    #[test]
    fn packed_round_trip(v in proptest::collection::vec(any::<bool>(), 0..2000)) {
        let bits = BitSequence::new(v);
        let bytes = encode_packed(&bits).unwrap();
        prop_assert_eq!(bytes.len(), 8 + bits.len().div_ceil(8));
        prop_assert_eq!(parse_packed(&bytes).unwrap(), bits);
    }

    #[test]
    fn truncated_packed_payload_is_length_mismatch(
        v in proptest::collection::vec(any::<bool>(), 1..500),
        cut in 1usize..8,
    ) {
        let bytes = encode_packed(&BitSequence::new(v)).unwrap();
        let cut = cut.min(bytes.len() - 8);
        prop_assume!(cut > 0);
        let truncated = matches!(
            parse_packed(&bytes[..bytes.len() - cut]),
            Err(Error::LengthMismatch { .. })
        );
        prop_assert!(truncated);
    }

    #[test]
    fn bin_series_round_trip(v in proptest::collection::vec(any::<bool>(), 0..3000)) {
        let series = BinSeries::from_bits(&v, 2e-9);
        let bytes = encode_bin_series(&series).unwrap();
        prop_assert!(decode_bin_series(&bytes, 2e-9).unwrap() == series);
        prop_assert_eq!(series.to_bools(), v);
    }

    #[test]
    fn timestamps_bins_round_trip(v in proptest::collection::vec(any::<bool>(), 1..3000)) {
        let series = BinSeries::from_bits(&v, 2e-9);
        let ts = bins_to_timestamps(&series);
        prop_assert_eq!(ts.len(), series.count_ones());
        prop_assert!(ts.ticks().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(timestamps_to_bins(&ts, v.len()).unwrap() == series);
    }
}
