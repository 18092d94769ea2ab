use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use super::round::{run_round, RoundRecord};
use super::sift::{estimate_error_rate, sift, ChannelErrorReport, ErrorRate, SiftedKeys};
use super::{ProtocolConfig, ProtocolError};
use crate::adversary::AttackStrategy;
use crate::qsim::substream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    Proceed,
    Abort,
}

/// Everything a campaign of `m` rounds produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub rounds: Vec<RoundRecord>,
    pub report: ChannelErrorReport,
    pub decision: Decision,
    /// Present only when the campaign proceeds.
    pub sifted: Option<SiftedKeys>,
}

impl Transcript {
    /// One JSON object per round, LF-terminated.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in &self.rounds {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Abort when the combined decoy error rate exceeds the threshold, or when
/// no decoy check happened at all.
pub fn decide(report: &ChannelErrorReport, qber_threshold: f64) -> Decision {
    match report.combined.rate() {
        ErrorRate::Rate(r) if r <= qber_threshold => Decision::Proceed,
        _ => Decision::Abort,
    }
}

/// Runs `config.m` rounds. Round `i` draws from substream `i` of
/// `config.seed`, so the transcript does not depend on thread scheduling.
pub fn run_campaign(config: &ProtocolConfig, attack: &AttackStrategy) -> Result<Transcript, ProtocolError> {
    config.validate()?;
    let rounds = (0..config.m)
        .into_par_iter()
        .map(|i| run_round(config, attack, i, &mut substream(config.seed, i)))
        .collect::<Result<Vec<_>, _>>()?;
    let report = estimate_error_rate(&rounds);
    let decision = decide(&report, config.qber_threshold);
    let sifted = (decision == Decision::Proceed).then(|| sift(&rounds));
    Ok(Transcript {
        rounds,
        report,
        decision,
        sifted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::BasisPolicy;
    use crate::qsim::NoiseSpec;

    #[test]
    fn deterministic_for_fixed_seed() {
        let config = ProtocolConfig {
            m: 2_000,
            seed: 99,
            ..ProtocolConfig::default()
        };
        let a = run_campaign(&config, &AttackStrategy::NoAttack).unwrap();
        let b = run_campaign(&config, &AttackStrategy::NoAttack).unwrap();
        assert_eq!(a, b);
        let mut ja = Vec::new();
        let mut jb = Vec::new();
        a.write_jsonl(&mut ja).unwrap();
        b.write_jsonl(&mut jb).unwrap();
        assert_eq!(ja, jb);
        assert_eq!(ja.iter().filter(|&&c| c == b'\n').count(), 2_000);
    }

    #[test]
    fn honest_campaign_proceeds_and_reconstructs() {
        let config = ProtocolConfig {
            m: 5_000,
            seed: 1,
            ..ProtocolConfig::default()
        };
        let t = run_campaign(&config, &AttackStrategy::NoAttack).unwrap();
        assert_eq!(t.decision, Decision::Proceed);
        assert_eq!(t.report.combined.errors(), 0);
        let keys = t.sifted.unwrap();
        assert!(!keys.raw_key_bits.is_empty());
        assert_eq!(keys.alice_raw_key(), keys.sharers_raw_key());
        assert_eq!(keys.qber_z(), Some(0.0));
    }

    #[test]
    fn heavy_noise_aborts() {
        let config = ProtocolConfig {
            m: 3_000,
            noise_b: NoiseSpec::new(0.3, 0.0, 0.0).unwrap(),
            ..ProtocolConfig::default()
        };
        let t = run_campaign(&config, &AttackStrategy::NoAttack).unwrap();
        assert_eq!(t.decision, Decision::Abort);
        assert!(t.sifted.is_none());
    }

    #[test]
    fn intercept_resend_aborts() {
        let config = ProtocolConfig {
            m: 2_000,
            ..ProtocolConfig::default()
        };
        let attack = AttackStrategy::InterceptResendC {
            basis_policy: BasisPolicy::RandomPerRound,
        };
        for seed in 0..20 {
            let t = run_campaign(&ProtocolConfig { seed, ..config.clone() }, &attack).unwrap();
            assert_eq!(t.decision, Decision::Abort);
        }
    }

    #[test]
    fn no_checks_means_abort() {
        let config = ProtocolConfig {
            p: 1.0,
            m: 100,
            ..ProtocolConfig::default()
        };
        let t = run_campaign(&config, &AttackStrategy::NoAttack).unwrap();
        assert_eq!(t.report.combined.rate(), ErrorRate::NoData);
        assert_eq!(t.decision, Decision::Abort);
    }
}
