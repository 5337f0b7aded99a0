use std::fmt;
use std::ops::Range;

use crate::error::{Error, Result};

/// An ordered sequence of binary symbols.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct BitSequence {
    bits: Vec<bool>,
}

impl BitSequence {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            bits: Vec::with_capacity(capacity),
        }
    }

    /// Parses a string of `'0'`/`'1'` characters. Whitespace is not accepted
    /// here; use [`crate::io::parse_ascii`] for file contents.
    pub fn from_ascii(s: &str) -> Result<Self> {
        s.bytes()
            .enumerate()
            .map(|(offset, b)| match b {
                b'0' => Ok(false),
                b'1' => Ok(true),
                other => Err(Error::Format {
                    offset,
                    msg: format!("unexpected byte 0x{other:02x}, expected '0' or '1'"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn to_ascii(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = bool> + ExactSizeIterator + '_ {
        self.bits.iter().copied()
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn extend_from(&mut self, other: &BitSequence) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn truncate(&mut self, len: usize) {
        self.bits.truncate(len);
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Fraction of symbols equal to 1; `NaN` for an empty sequence.
    pub fn ones_fraction(&self) -> f64 {
        self.count_ones() as f64 / self.len() as f64
    }

    pub fn slice(&self, range: Range<usize>) -> BitSequence {
        Self::new(self.bits[range].to_vec())
    }

    /// Splits into `count` consecutive sub-sequences of `len` bits each.
    pub fn split(&self, count: usize, len: usize) -> Result<Vec<BitSequence>> {
        let needed = count
            .checked_mul(len)
            .ok_or_else(|| Error::InvalidArgument(format!("{count} x {len} overflows")))?;
        if needed > self.len() {
            return Err(Error::InsufficientLength {
                needed,
                have: self.len(),
            });
        }
        Ok((0..count)
            .map(|i| self.slice(i * len..(i + 1) * len))
            .collect())
    }

    pub fn complement(&self) -> BitSequence {
        self.iter().map(|b| !b).collect()
    }

    pub fn reversed(&self) -> BitSequence {
        self.iter().rev().collect()
    }

    pub fn into_inner(self) -> Vec<bool> {
        self.bits
    }
}

impl FromIterator<bool> for BitSequence {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

impl From<Vec<bool>> for BitSequence {
    fn from(bits: Vec<bool>) -> Self {
        Self::new(bits)
    }
}

impl fmt::Debug for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const PREVIEW: usize = 64;
        let head: String = self
            .bits
            .iter()
            .take(PREVIEW)
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        let ellipsis = if self.len() > PREVIEW { "..." } else { "" };
        write!(f, "BitSequence(n={}, {head}{ellipsis})", self.len())
    }
}
