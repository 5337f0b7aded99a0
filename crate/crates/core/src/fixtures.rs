//! Deterministic test sequences: patterned inputs that look random to naive
//! checks, and trivially non-random ones.

use std::str::FromStr;

use crate::bits::BitSequence;
use crate::error::{Error, Result};

/// First `n` symbols of the binary Champernowne sequence: all 1-bit strings,
/// then all 2-bit strings in ascending order, then all 3-bit strings, ...
pub fn champernowne(n: usize) -> BitSequence {
    let mut out = BitSequence::with_capacity(n);
    let mut width = 1usize;
    'outer: loop {
        for value in 0u64..1 << width {
            for shift in (0..width).rev() {
                if out.len() == n {
                    break 'outer;
                }
                out.push(value >> shift & 1 == 1);
            }
        }
        width += 1;
    }
    out
}

/// `0101...` of length `n`.
pub fn periodic(n: usize) -> BitSequence {
    (0..n).map(|i| i % 2 == 1).collect()
}

pub fn zeros(n: usize) -> BitSequence {
    BitSequence::new(vec![false; n])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureKind {
    Champernowne,
    Periodic,
    Zeros,
}

impl FixtureKind {
    pub fn generate(self, n: usize) -> BitSequence {
        match self {
            Self::Champernowne => champernowne(n),
            Self::Periodic => periodic(n),
            Self::Zeros => zeros(n),
        }
    }
}

impl FromStr for FixtureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "champernowne" => Ok(Self::Champernowne),
            "periodic" => Ok(Self::Periodic),
            "zeros" | "all-zero" => Ok(Self::Zeros),
            other => Err(Error::Config(format!(
                "unknown fixture {other:?} (expected champernowne|periodic|zeros)"
            ))),
        }
    }
}
