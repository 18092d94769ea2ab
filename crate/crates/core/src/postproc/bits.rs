use std::fmt;

use rand::Rng;
use serde::{Serialize, Serializer};

use super::PostprocError;

/// Ordered sequence of bits, one `u8` (0 or 1) per position.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<u8>,
}

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self, PostprocError> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(PostprocError::InvalidBit {
                position: pos,
                value: bits[pos],
            });
        }
        Ok(BitString { bits })
    }

    pub fn zeros(len: usize) -> Self {
        BitString { bits: vec![0; len] }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        BitString {
            bits: (0..len).map(|_| rng.random_range(0..2u8)).collect(),
        }
    }

    /// Parses a string of `'0'`/`'1'` characters.
    pub fn parse(s: &str) -> Result<Self, PostprocError> {
        let bits = s
            .chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(PostprocError::InvalidBit {
                    position: i,
                    value: c as u8,
                }),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        Ok(BitString { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] ^= 1;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn prefix(&self, len: usize) -> BitString {
        BitString {
            bits: self.bits[..len.min(self.bits.len())].to_vec(),
        }
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString, PostprocError> {
        if self.len() != other.len() {
            return Err(PostprocError::LengthMismatch(self.len(), other.len()));
        }
        Ok(BitString {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a ^ b).collect(),
        })
    }

    pub fn hamming(&self, other: &BitString) -> Result<usize, PostprocError> {
        Ok(self.xor(other)?.bits.iter().filter(|&&b| b == 1).count())
    }

    /// Packs bits MSB-first into bytes, zero-padding the last byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|chunk| chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (b << (7 - i))))
            .collect()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }
}

impl From<Vec<bool>> for BitString {
    fn from(v: Vec<bool>) -> Self {
        BitString {
            bits: v.into_iter().map(u8::from).collect(),
        }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(")?;
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}
