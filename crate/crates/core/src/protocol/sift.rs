use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::round::{CheckResult, RoundKind, RoundRecord};
use crate::qsim::Basis;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KeyBit {
    pub round: u64,
    pub bit: u8,
}

/// The two sharers' private bits plus the public Bell sign bits of an X/X
/// round; together they determine Alice's key bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct XShare {
    pub round: u64,
    pub bob_bit: u8,
    pub charlie_bit: u8,
    pub sign_d: u8,
    pub sign_e: u8,
}

impl XShare {
    pub fn reconstruct(&self) -> u8 {
        (self.bob_bit ^ self.charlie_bit ^ self.sign_d ^ self.sign_e) & 1
    }
}

/// A Z/Z round. Each sharer alone predicts Alice's bit from their own bit
/// and the parity of their relay's outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ZEstimate {
    pub round: u64,
    pub alice_bit: u8,
    pub bob_bit: u8,
    pub charlie_bit: u8,
    pub parity_d: u8,
    pub parity_e: u8,
}

impl ZEstimate {
    pub fn bob_prediction(&self) -> u8 {
        self.bob_bit ^ self.parity_d
    }

    pub fn charlie_prediction(&self) -> u8 {
        self.charlie_bit ^ self.parity_e
    }

    pub fn is_error(&self) -> bool {
        self.bob_prediction() != self.alice_bit || self.charlie_prediction() != self.alice_bit
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SiftedKeys {
    pub raw_key_bits: Vec<KeyBit>,
    pub raw_key_shares: Vec<XShare>,
    pub z_estimation_bits: Vec<ZEstimate>,
    pub discarded_count: u64,
}

impl SiftedKeys {
    pub fn alice_raw_key(&self) -> Vec<u8> {
        self.raw_key_bits.iter().map(|k| k.bit).collect()
    }

    /// Raw key as the cooperating sharers reconstruct it.
    pub fn sharers_raw_key(&self) -> Vec<u8> {
        self.raw_key_shares.iter().map(XShare::reconstruct).collect()
    }

    /// Fraction of Z/Z rounds where either sharer's prediction disagrees
    /// with Alice; `None` without Z rounds.
    pub fn qber_z(&self) -> Option<f64> {
        if self.z_estimation_bits.is_empty() {
            return None;
        }
        let errors = self.z_estimation_bits.iter().filter(|z| z.is_error()).count();
        Some(errors as f64 / self.z_estimation_bits.len() as f64)
    }
}

/// Splits GHZ rounds into X/X key rounds, Z/Z estimation rounds and
/// discarded mixed-basis rounds. Decoy rounds are ignored.
pub fn sift(records: &[RoundRecord]) -> SiftedKeys {
    let mut keys = SiftedKeys::default();
    for r in records.iter().filter(|r| r.is_ghz()) {
        match r.alice_result {
            Some(m) if m.basis == Basis::X && r.is_sifted(Basis::X) => {
                keys.raw_key_bits.push(KeyBit {
                    round: r.index,
                    bit: m.bit,
                });
                keys.raw_key_shares.push(XShare {
                    round: r.index,
                    bob_bit: r.bob_prep.bit(),
                    charlie_bit: r.charlie_prep.bit(),
                    sign_d: r.bsm_d.sign_bit(),
                    sign_e: r.bsm_e.sign_bit(),
                });
            }
            Some(m) if m.basis == Basis::Z && r.is_sifted(Basis::Z) => {
                keys.z_estimation_bits.push(ZEstimate {
                    round: r.index,
                    alice_bit: m.bit,
                    bob_bit: r.bob_prep.bit(),
                    charlie_bit: r.charlie_prep.bit(),
                    parity_d: r.bsm_d.parity_bit(),
                    parity_e: r.bsm_e.parity_bit(),
                });
            }
            _ => keys.discarded_count += 1,
        }
    }
    keys
}

/// Error rate with an explicit marker for "nothing was checked".
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ErrorRate {
    NoData,
    Rate(f64),
}

impl ErrorRate {
    fn from_counts(errors: u64, checked: u64) -> Self {
        if checked == 0 {
            ErrorRate::NoData
        } else {
            ErrorRate::Rate(errors as f64 / checked as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            ErrorRate::NoData => None,
            ErrorRate::Rate(r) => Some(r),
        }
    }
}

impl Serialize for ErrorRate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ErrorRate::NoData => s.serialize_str("NO_DATA"),
            ErrorRate::Rate(r) => s.serialize_f64(*r),
        }
    }
}

/// Check tallies for one relay arm (or both combined).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ArmTally {
    pub checked_z: u64,
    pub errors_z: u64,
    pub checked_x: u64,
    pub errors_x: u64,
}

impl ArmTally {
    fn record(&mut self, basis: Basis, result: CheckResult) {
        let (checked, errors) = match basis {
            Basis::Z => (&mut self.checked_z, &mut self.errors_z),
            Basis::X => (&mut self.checked_x, &mut self.errors_x),
        };
        match result {
            CheckResult::Ok => *checked += 1,
            CheckResult::Error => {
                *checked += 1;
                *errors += 1;
            }
            CheckResult::Skipped | CheckResult::NotApplicable => {}
        }
    }

    pub fn checked(&self) -> u64 {
        self.checked_z + self.checked_x
    }

    pub fn errors(&self) -> u64 {
        self.errors_z + self.errors_x
    }

    pub fn rate(&self) -> ErrorRate {
        ErrorRate::from_counts(self.errors(), self.checked())
    }

    pub fn rate_z(&self) -> ErrorRate {
        ErrorRate::from_counts(self.errors_z, self.checked_z)
    }

    pub fn rate_x(&self) -> ErrorRate {
        ErrorRate::from_counts(self.errors_x, self.checked_x)
    }

    pub fn merged(&self, other: &ArmTally) -> ArmTally {
        ArmTally {
            checked_z: self.checked_z + other.checked_z,
            errors_z: self.errors_z + other.errors_z,
            checked_x: self.checked_x + other.checked_x,
            errors_x: self.errors_x + other.errors_x,
        }
    }
}

impl Serialize for ArmTally {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ArmTally", 9)?;
        st.serialize_field("checked", &self.checked())?;
        st.serialize_field("errors", &self.errors())?;
        st.serialize_field("rate", &self.rate())?;
        st.serialize_field("checked_z", &self.checked_z)?;
        st.serialize_field("errors_z", &self.errors_z)?;
        st.serialize_field("rate_z", &self.rate_z())?;
        st.serialize_field("checked_x", &self.checked_x)?;
        st.serialize_field("errors_x", &self.errors_x)?;
        st.serialize_field("rate_x", &self.rate_x())?;
        st.end()
    }
}

/// Per-arm decoy statistics. The David arm covers checks between
/// `decoy_d` and Bob's state, the Ethan arm `decoy_e` and Charlie's.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ChannelErrorReport {
    pub david: ArmTally,
    pub ethan: ArmTally,
    pub combined: ArmTally,
}

impl ChannelErrorReport {
    pub fn merged(&self, other: &ChannelErrorReport) -> ChannelErrorReport {
        ChannelErrorReport {
            david: self.david.merged(&other.david),
            ethan: self.ethan.merged(&other.ethan),
            combined: self.combined.merged(&other.combined),
        }
    }
}

pub fn estimate_error_rate(records: &[RoundRecord]) -> ChannelErrorReport {
    let mut report = ChannelErrorReport::default();
    for r in records {
        if let RoundKind::DecoyRound { decoy_d, decoy_e } = r.kind {
            report.david.record(decoy_d.basis(), r.check_d);
            report.ethan.record(decoy_e.basis(), r.check_e);
        }
    }
    report.combined = report.david.merged(&report.ethan);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::round::{Announcement, MeasuredBit};
    use crate::qsim::{BellOutcome, SingleQubitPrep};

    fn ghz(index: u64, bob: SingleQubitPrep, charlie: SingleQubitPrep, alice: Option<u8>) -> RoundRecord {
        RoundRecord {
            index,
            kind: RoundKind::GhzRound,
            bob_prep: bob,
            charlie_prep: charlie,
            bsm_d: BellOutcome::PhiPlus,
            bsm_e: BellOutcome::PsiMinus,
            bob_announced: Announcement::Basis(bob.basis()),
            charlie_announced: Announcement::Basis(charlie.basis()),
            alice_result: alice.map(|bit| MeasuredBit {
                basis: bob.basis(),
                bit,
            }),
            check_d: CheckResult::NotApplicable,
            check_e: CheckResult::NotApplicable,
        }
    }

    fn decoy(index: u64, d: SingleQubitPrep, check_d: CheckResult) -> RoundRecord {
        RoundRecord {
            index,
            kind: RoundKind::DecoyRound {
                decoy_d: d,
                decoy_e: SingleQubitPrep::Plus,
            },
            bob_prep: SingleQubitPrep::Zero,
            charlie_prep: SingleQubitPrep::Zero,
            bsm_d: BellOutcome::PhiPlus,
            bsm_e: BellOutcome::PhiPlus,
            bob_announced: Announcement::State(SingleQubitPrep::Zero),
            charlie_announced: Announcement::State(SingleQubitPrep::Zero),
            alice_result: None,
            check_d,
            check_e: CheckResult::Skipped,
        }
    }

    #[test]
    fn all_decoy_is_empty() {
        let records: Vec<_> = (0..5)
            .map(|i| decoy(i, SingleQubitPrep::One, CheckResult::Ok))
            .collect();
        let keys = sift(&records);
        assert!(keys.raw_key_bits.is_empty() && keys.z_estimation_bits.is_empty());
        assert_eq!(keys.discarded_count, 0);
        assert_eq!(keys.qber_z(), None);
    }

    #[test]
    fn partitions_by_basis() {
        use SingleQubitPrep::*;
        let records = vec![
            ghz(0, Plus, Minus, Some(0)),
            ghz(1, Plus, Zero, None),
            ghz(2, One, Zero, Some(1)),
            ghz(3, Zero, Minus, None),
        ];
        let keys = sift(&records);
        assert_eq!(keys.raw_key_bits, vec![KeyBit { round: 0, bit: 0 }]);
        assert_eq!(keys.raw_key_shares[0].reconstruct(), 0);
        assert_eq!(keys.z_estimation_bits.len(), 1);
        assert_eq!(keys.z_estimation_bits[0].bob_prediction(), 1);
        assert_eq!(keys.discarded_count, 2);
    }

    #[test]
    fn error_report_counts() {
        let records = vec![
            decoy(0, SingleQubitPrep::One, CheckResult::Ok),
            decoy(1, SingleQubitPrep::One, CheckResult::Error),
            decoy(2, SingleQubitPrep::Plus, CheckResult::Skipped),
        ];
        let report = estimate_error_rate(&records);
        assert_eq!(report.david.checked(), 2);
        assert_eq!(report.david.rate(), ErrorRate::Rate(0.5));
        assert_eq!(report.david.rate_x(), ErrorRate::NoData);
        assert_eq!(report.ethan.rate(), ErrorRate::NoData);
        assert_eq!(report.combined.rate(), ErrorRate::Rate(0.5));
        let json = serde_json::to_value(report).unwrap();
        assert_eq!(json["ethan"]["rate"], "NO_DATA");
    }
}
