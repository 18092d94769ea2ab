//! Classical post-processing: reconciliation, privacy amplification and
//! one-time-pad delivery of the dealer's secret.

mod bits;
mod reconcile;
mod toeplitz;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::protocol::SiftedKeys;

pub use bits::BitString;
pub use reconcile::{default_block_size, polynomial_hash, reconcile, ReconciliationReport, VERIFICATION_BITS};
pub use toeplitz::{toeplitz_hash, ToeplitzSeed};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PostprocError {
    #[error("length mismatch: {0} vs {1} bits")]
    LengthMismatch(usize, usize),
    #[error("block size must be at least 1")]
    InvalidBlockSize,
    #[error("invalid bit {value} at position {position}")]
    InvalidBit { position: usize, value: u8 },
    #[error("Toeplitz seed with {entries} entries cannot map {n_in} bits to {n_out}")]
    SeedDimensions { entries: usize, n_in: usize, n_out: usize },
}

/// Binary entropy in bits, `h2(0) = h2(1) = 0`.
pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// `max(0, ⌊n_sift·(1 − h2(qber_z))⌋ − leaked − safety_margin)`.
pub fn pa_output_length(n_sift: u64, qber_z: f64, leaked: u64, safety_margin: u64) -> u64 {
    let q = qber_z.clamp(0.0, 0.5);
    let secure = (n_sift as f64 * (1.0 - h2(q))).floor() as u64;
    secure.saturating_sub(leaked).saturating_sub(safety_margin)
}

pub fn otp_encrypt(key: &BitString, secret: &BitString) -> Result<BitString, PostprocError> {
    key.xor(secret)
}

pub fn otp_decrypt(key: &BitString, ciphertext: &BitString) -> Result<BitString, PostprocError> {
    key.xor(ciphertext)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PostProcessParams {
    /// Reconciliation block size; derived from the Z-round error rate when
    /// unset.
    pub block_size: Option<usize>,
    pub safety_margin: u64,
}

impl Default for PostProcessParams {
    fn default() -> Self {
        PostProcessParams {
            block_size: None,
            safety_margin: 64,
        }
    }
}

/// How the secret fared at the end of post-processing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SecretDelivery {
    Delivered {
        secret: BitString,
        ciphertext: BitString,
        recovered: BitString,
    },
    InsufficientKey {
        needed: usize,
        available: usize,
    },
}

/// Every key stage from sifting to the one-time pad. The raw keys stay in
/// memory for test oracles and are never part of any disclosed message.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyMaterial {
    pub raw_key: BitString,
    pub sharers_raw_key: BitString,
    pub z_estimation_rounds: usize,
    pub qber_z: Option<f64>,
    pub corrected_key: BitString,
    pub reconciliation: ReconciliationReport,
    pub achievable_key_bits: u64,
    pub final_key: BitString,
    pub sharers_final_key: BitString,
    pub delivery: SecretDelivery,
}

/// Steps after sifting: the cooperating sharers reconstruct the raw key,
/// reconcile it against Alice's, both sides hash down to the secret length,
/// Alice encrypts and the sharers decrypt.
pub fn distill<R: Rng + ?Sized>(
    sifted: &SiftedKeys,
    params: &PostProcessParams,
    secret: &BitString,
    rng: &mut R,
) -> Result<KeyMaterial, PostprocError> {
    let raw_key = BitString::new(sifted.alice_raw_key())?;
    let sharers_raw_key = BitString::new(sifted.sharers_raw_key())?;
    let qber_z = sifted.qber_z();
    // Without Z rounds nothing bounds the leakage.
    let q = qber_z.unwrap_or(0.5);
    let block_size = params.block_size.unwrap_or_else(|| default_block_size(q));
    let (corrected_key, reconciliation) = reconcile(&raw_key, &sharers_raw_key, block_size, rng)?;

    let achievable_key_bits = pa_output_length(
        raw_key.len() as u64,
        q,
        reconciliation.total_leaked(),
        params.safety_margin,
    );
    let sufficient = reconciliation.verification_ok && achievable_key_bits >= secret.len() as u64;
    let n_out = if sufficient {
        secret.len()
    } else if reconciliation.verification_ok {
        achievable_key_bits as usize
    } else {
        0
    };

    let (final_key, sharers_final_key) = if n_out == 0 {
        (BitString::default(), BitString::default())
    } else {
        let seed = ToeplitzSeed::random(raw_key.len(), n_out, rng)?;
        (toeplitz_hash(&raw_key, &seed)?, toeplitz_hash(&corrected_key, &seed)?)
    };

    let delivery = if sufficient {
        let ciphertext = otp_encrypt(&final_key, secret)?;
        let recovered = otp_decrypt(&sharers_final_key, &ciphertext)?;
        SecretDelivery::Delivered {
            secret: secret.clone(),
            ciphertext,
            recovered,
        }
    } else {
        SecretDelivery::InsufficientKey {
            needed: secret.len(),
            available: final_key.len(),
        }
    };

    Ok(KeyMaterial {
        raw_key,
        sharers_raw_key,
        z_estimation_rounds: sifted.z_estimation_bits.len(),
        qber_z,
        corrected_key,
        reconciliation,
        achievable_key_bits,
        final_key,
        sharers_final_key,
        delivery,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::RandomStream;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn h2_values() {
        assert_eq!(h2(0.0), 0.0);
        assert_eq!(h2(1.0), 0.0);
        assert!((h2(0.5) - 1.0).abs() < 1e-15);
        assert!((h2(0.05) - 0.286_396_957_115_956).abs() < 1e-12);
    }

    #[test]
    fn pa_examples() {
        assert_eq!(pa_output_length(1000, 0.0, 0, 0), 1000);
        assert_eq!(pa_output_length(1000, 0.5, 0, 0), 0);
        assert_eq!(pa_output_length(1000, 0.05, 120, 50), 543);
        assert_eq!(pa_output_length(10, 0.0, 20, 0), 0);
    }

    proptest! {
        #[test]
        fn pa_monotone(n in 0u64..10_000, q1 in 0.0f64..0.5, q2 in 0.0f64..0.5, l1 in 0u64..5_000, l2 in 0u64..5_000) {
            let (qa, qb) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            let (la, lb) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            prop_assert!(pa_output_length(n, qb, la, 0) <= pa_output_length(n, qa, la, 0));
            prop_assert!(pa_output_length(n, qa, lb, 0) <= pa_output_length(n, qa, la, 0));
        }

        #[test]
        fn otp_round_trip(key in proptest::collection::vec(0u8..2, 128), secret in proptest::collection::vec(0u8..2, 128)) {
            let k = BitString::new(key).unwrap();
            let s = BitString::new(secret).unwrap();
            let c = otp_encrypt(&k, &s).unwrap();
            prop_assert_eq!(otp_decrypt(&k, &c).unwrap(), s);
        }
    }

    #[test]
    fn otp_examples() {
        let s = BitString::parse("1100").unwrap();
        assert_eq!(otp_encrypt(&BitString::zeros(4), &s).unwrap(), s);
        assert_eq!(
            otp_encrypt(&BitString::parse("1010").unwrap(), &s).unwrap(),
            BitString::parse("0110").unwrap()
        );
        assert!(matches!(
            otp_encrypt(&BitString::zeros(3), &s),
            Err(PostprocError::LengthMismatch(3, 4))
        ));
    }

    #[test]
    fn toeplitz_two_universal() {
        // Two fixed distinct inputs collide under a random 32→16 seed with
        // probability 2^-16.
        let mut rng = RandomStream::seed_from_u64(8);
        let x = BitString::random(32, &mut rng);
        let mut y = x.clone();
        y.flip(5);
        y.flip(17);
        let draws = 100_000u32;
        let mut collisions = 0u32;
        for _ in 0..draws {
            let seed = ToeplitzSeed::random(32, 16, &mut rng).unwrap();
            if toeplitz_hash(&x, &seed).unwrap() == toeplitz_hash(&y, &seed).unwrap() {
                collisions += 1;
            }
        }
        let p = 2f64.powi(-16);
        let mean = p * f64::from(draws);
        let sigma = (f64::from(draws) * p * (1.0 - p)).sqrt();
        assert!(
            (f64::from(collisions) - mean).abs() <= 5.0 * sigma,
            "collisions {collisions}"
        );
    }

    #[test]
    fn insufficient_key_is_reported() {
        let mut rng = RandomStream::seed_from_u64(9);
        let sifted = SiftedKeys::default();
        let secret = BitString::random(128, &mut rng);
        let km = distill(&sifted, &PostProcessParams::default(), &secret, &mut rng).unwrap();
        assert_eq!(
            km.delivery,
            SecretDelivery::InsufficientKey {
                needed: 128,
                available: 0
            }
        );
    }
}
