//! Round orchestration: GHZ and decoy rounds, relay announcements, Alice's
//! conditional measurement, decoy checks, sifting and the campaign-level
//! abort decision.

mod campaign;
mod round;
mod sift;
mod table;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qsim::{NoiseSpec, QsimError};

pub use campaign::{decide, run_campaign, Decision, Transcript};
pub use round::{
    alice_basis_action, decoy_check, reconstruct_bit, run_round, Announcement, CheckResult, MeasuredBit, RoundKind,
    RoundRecord,
};
pub use sift::{
    estimate_error_rate, sift, ArmTally, ChannelErrorReport, ErrorRate, KeyBit, SiftedKeys, XShare, ZEstimate,
};
pub use table::{correlation_table, ghz_branch, identify_prep, CorrelationRow};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid protocol config: {0}")]
    InvalidConfig(String),
    #[error("intercepted particle is entangled with the rest of the register")]
    Entangled,
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// Campaign parameters. `p` is the probability of a GHZ round, `m` the
/// number of rounds; each noise spec covers one transit into a relay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub p: f64,
    pub m: u64,
    pub qber_threshold: f64,
    /// Alice to David.
    pub noise_d: NoiseSpec,
    /// Alice to Ethan.
    pub noise_e: NoiseSpec,
    /// Bob to David.
    pub noise_b: NoiseSpec,
    /// Charlie to Ethan.
    pub noise_c: NoiseSpec,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            p: 0.8,
            m: 10_000,
            qber_threshold: 0.05,
            noise_d: NoiseSpec::noiseless(),
            noise_e: NoiseSpec::noiseless(),
            noise_b: NoiseSpec::noiseless(),
            noise_c: NoiseSpec::noiseless(),
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    /// `p = 1` is accepted (GHZ rounds only, nothing is ever checked).
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(ProtocolError::InvalidConfig(format!(
                "p = {} must lie in (0, 1]",
                self.p
            )));
        }
        if self.m == 0 {
            return Err(ProtocolError::InvalidConfig("m must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.qber_threshold) {
            return Err(ProtocolError::InvalidConfig(format!(
                "qber_threshold = {} must lie in [0, 1]",
                self.qber_threshold
            )));
        }
        for spec in [&self.noise_d, &self.noise_e, &self.noise_b, &self.noise_c] {
            spec.validate()?;
        }
        Ok(())
    }
}
