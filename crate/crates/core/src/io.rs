//! File formats.
//!
//! * ASCII bits: `'0'`/`'1'` bytes; `\n` and `\r` are ignored.
//! * Packed bits: `b"QBIN"`, bit count as little-endian `u32`, then
//!   `ceil(n / 8)` payload bytes with bit `i` at bit `i % 8` (LSB first) of
//!   byte `i / 8`. Bin series use the same layout.
//! * Timestamps: CSV with one nanosecond integer per line.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::BitSequence;
use crate::error::{Error, Result};
use crate::source_sim::{BinSeries, TimestampSeries};

pub const PACKED_MAGIC: &[u8; 4] = b"QBIN";
pub const PACKED_HEADER_LEN: usize = 8;

const NANOSECOND: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BitFormat {
    #[default]
    Ascii,
    Packed,
}

impl BitFormat {
    /// `.txt` is ASCII, `.bits` is packed.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "txt" => Some(Self::Ascii),
            "bits" => Some(Self::Packed),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::Ascii => "txt",
            Self::Packed => "bits",
        }
    }
}

impl FromStr for BitFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascii" => Ok(Self::Ascii),
            "packed" => Ok(Self::Packed),
            other => Err(Error::Config(format!(
                "unknown format {other:?} (expected ascii|packed)"
            ))),
        }
    }
}

pub fn parse_ascii(bytes: &[u8]) -> Result<BitSequence> {
    let mut bits = BitSequence::with_capacity(bytes.len());
    for (offset, &b) in bytes.iter().enumerate() {
        match b {
            b'0' => bits.push(false),
            b'1' => bits.push(true),
            b'\n' | b'\r' => {}
            other => {
                return Err(Error::Format {
                    offset,
                    msg: format!("unexpected byte 0x{other:02x}, expected '0', '1' or newline"),
                })
            }
        }
    }
    Ok(bits)
}

fn pack(bits: impl Iterator<Item = bool>, len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(PACKED_HEADER_LEN + len.div_ceil(8));
    out.extend_from_slice(PACKED_MAGIC);
    out.extend_from_slice(&(len as u32).to_le_bytes());
    let mut payload = vec![0u8; len.div_ceil(8)];
    for (i, b) in bits.enumerate() {
        if b {
            payload[i / 8] |= 1 << (i % 8);
        }
    }
    out.extend_from_slice(&payload);
    out
}

pub fn encode_packed(bits: &BitSequence) -> Result<Vec<u8>> {
    check_u32_len(bits.len())?;
    Ok(pack(bits.iter(), bits.len()))
}

fn check_u32_len(len: usize) -> Result<()> {
    if len > u32::MAX as usize {
        return Err(Error::InvalidArgument(format!(
            "{len} bits exceed the packed format's 32-bit length field"
        )));
    }
    Ok(())
}

/// Validates the header and returns `(declared_len, payload)`.
fn split_packed(bytes: &[u8]) -> Result<(usize, &[u8])> {
    if bytes.len() < PACKED_HEADER_LEN {
        return Err(Error::Format {
            offset: bytes.len(),
            msg: format!("file too short for the {PACKED_HEADER_LEN}-byte header"),
        });
    }
    if let Some(offset) = (0..4).find(|&i| bytes[i] != PACKED_MAGIC[i]) {
        return Err(Error::Format {
            offset,
            msg: "bad magic, expected \"QBIN\"".into(),
        });
    }
    let declared = u32::from_le_bytes(bytes[4..8].try_into().expect("4-byte slice")) as usize;
    let payload = &bytes[PACKED_HEADER_LEN..];
    let expected = declared.div_ceil(8);
    if payload.len() != expected {
        return Err(Error::LengthMismatch {
            declared,
            payload_bytes: payload.len(),
            expected_bytes: expected,
        });
    }
    Ok((declared, payload))
}

pub fn parse_packed(bytes: &[u8]) -> Result<BitSequence> {
    let (len, payload) = split_packed(bytes)?;
    Ok((0..len)
        .map(|i| payload[i / 8] >> (i % 8) & 1 == 1)
        .collect())
}

pub fn read_bits(path: &Path, format: BitFormat) -> Result<BitSequence> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        BitFormat::Ascii => parse_ascii(&bytes),
        BitFormat::Packed => parse_packed(&bytes),
    }
}

/// Like [`read_bits`] but picks the format from the file extension.
pub fn read_bits_auto(path: &Path) -> Result<BitSequence> {
    let format = BitFormat::from_path(path).ok_or_else(|| {
        Error::Config(format!(
            "{}: cannot infer bit format (use .txt or .bits)",
            path.display()
        ))
    })?;
    read_bits(path, format)
}

pub fn write_bits(bits: &BitSequence, path: &Path, format: BitFormat) -> Result<()> {
    let bytes = match format {
        BitFormat::Ascii => {
            let mut s = bits.to_ascii();
            s.push('\n');
            s.into_bytes()
        }
        BitFormat::Packed => encode_packed(bits)?,
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_bin_series(series: &BinSeries) -> Result<Vec<u8>> {
    check_u32_len(series.len())?;
    let mut out = Vec::with_capacity(PACKED_HEADER_LEN + series.len().div_ceil(8));
    out.extend_from_slice(PACKED_MAGIC);
    out.extend_from_slice(&(series.len() as u32).to_le_bytes());
    out.extend_from_slice(&series.to_packed_bytes());
    Ok(out)
}

pub fn decode_bin_series(bytes: &[u8], bin_width: f64) -> Result<BinSeries> {
    let (len, payload) = split_packed(bytes)?;
    Ok(BinSeries::from_packed_bytes(payload, len, bin_width))
}

pub fn write_bin_series(series: &BinSeries, path: &Path) -> Result<()> {
    fs::write(path, encode_bin_series(series)?).map_err(|e| Error::io(path, e))
}

/// Reads a packed bin series; the bin width is not stored in the file.
pub fn read_bin_series(path: &Path, bin_width: f64) -> Result<BinSeries> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bin_series(&bytes, bin_width)
}

/// Writes one nanosecond integer per line.
pub fn write_timestamps_csv(ts: &TimestampSeries, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let scale = ts.tick() / NANOSECOND;
    for &t in ts.ticks() {
        writeln!(w, "{}", (t as f64 * scale).round() as u64).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parses nanosecond timestamps. Blank lines and lines starting with `#` are
/// skipped.
pub fn parse_timestamps_csv(text: &str) -> Result<TimestampSeries> {
    let mut ticks = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !trimmed.is_empty() && !trimmed.starts_with('#') {
            let value = trimmed.parse::<u64>().map_err(|e| Error::Format {
                offset,
                msg: format!("invalid nanosecond timestamp {trimmed:?}: {e}"),
            })?;
            ticks.push(value);
        }
        offset += line.len();
    }
    Ok(TimestampSeries::new(ticks, NANOSECOND))
}

pub fn read_timestamps_csv(path: &Path) -> Result<TimestampSeries> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_timestamps_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_ignores_newlines() {
        let bits = parse_ascii(b"0101\n11\r\n0").unwrap();
        assert_eq!(bits.to_ascii(), "0101110");
    }

    #[test]
    fn ascii_error_offset() {
        match parse_ascii(b"0101001x01") {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn packed_layout() {
        let bits = BitSequence::from_ascii("1000000011").unwrap();
        let bytes = encode_packed(&bits).unwrap();
        assert_eq!(&bytes[..4], b"QBIN");
        assert_eq!(&bytes[4..8], &[10, 0, 0, 0]);
        assert_eq!(&bytes[8..], &[0b0000_0001, 0b0000_0011]);
        assert_eq!(parse_packed(&bytes).unwrap(), bits);
    }

    #[test]
    fn packed_errors() {
        let bits = BitSequence::from_ascii("1011001110").unwrap();
        let bytes = encode_packed(&bits).unwrap();
        assert!(matches!(
            parse_packed(&bytes[..bytes.len() - 1]),
            Err(Error::LengthMismatch {
                declared: 10,
                payload_bytes: 1,
                expected_bytes: 2
            })
        ));
        let mut bad = bytes.clone();
        bad[2] = b'X';
        assert!(matches!(
            parse_packed(&bad),
            Err(Error::Format { offset: 2, .. })
        ));
        assert!(matches!(parse_packed(b"QBI"), Err(Error::Format { .. })));
    }

    #[test]
    fn bin_series_matches_bit_layout() {
        let bools: Vec<bool> = (0..100).map(|i| i % 5 == 2).collect();
        let series = BinSeries::from_bits(&bools, 2e-9);
        let a = encode_bin_series(&series).unwrap();
        let b = encode_packed(&BitSequence::new(bools)).unwrap();
        assert_eq!(a, b);
        assert!(decode_bin_series(&a, 2e-9).unwrap() == series);
    }

    #[test]
    fn timestamps_csv() {
        let ts = parse_timestamps_csv("# header\n4\n10\n\n12\n").unwrap();
        assert_eq!(ts.ticks(), &[4, 10, 12]);
        assert_eq!(ts.tick(), 1e-9);
        match parse_timestamps_csv("4\n1x\n") {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            BitFormat::from_path(Path::new("a/b.txt")),
            Some(BitFormat::Ascii)
        );
        assert_eq!(
            BitFormat::from_path(Path::new("b.bits")),
            Some(BitFormat::Packed)
        );
        assert_eq!(BitFormat::from_path(Path::new("b.csv")), None);
    }
}
