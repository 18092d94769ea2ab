use rand::Rng;
use serde::Serialize;

use super::{BitString, PostprocError};

/// Diagonals of an `n_out × n_in` Toeplitz matrix over GF(2):
/// `T[i][j] = entries[i − j + n_in − 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ToeplitzSeed {
    entries: BitString,
    n_in: usize,
    n_out: usize,
}

impl ToeplitzSeed {
    pub fn new(entries: BitString, n_in: usize, n_out: usize) -> Result<Self, PostprocError> {
        if n_out > n_in || n_in == 0 || entries.len() != n_in + n_out - 1 {
            return Err(PostprocError::SeedDimensions {
                entries: entries.len(),
                n_in,
                n_out,
            });
        }
        Ok(ToeplitzSeed { entries, n_in, n_out })
    }

    pub fn random<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Result<Self, PostprocError> {
        Self::new(BitString::random((n_in + n_out).saturating_sub(1), rng), n_in, n_out)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn entry(&self, row: usize, col: usize) -> u8 {
        self.entries.get(row + self.n_in - 1 - col)
    }
}

pub fn toeplitz_hash(input: &BitString, seed: &ToeplitzSeed) -> Result<BitString, PostprocError> {
    if input.len() != seed.n_in {
        return Err(PostprocError::LengthMismatch(input.len(), seed.n_in));
    }
    let x = input.as_slice();
    let diag = seed.entries.as_slice();
    let out = (0..seed.n_out)
        .map(|i| {
            // Row i reads the diagonals i + n_in - 1 down to i.
            let row = &diag[i..i + seed.n_in];
            row.iter().rev().zip(x).fold(0u8, |acc, (t, b)| acc ^ (t & b))
        })
        .collect();
    BitString::new(out)
}
