//! Participant attacks on the relay arms and the detection statistics they
//! are judged by.
//!
//! Three strategies are modelled: intercept-resend of Charlie's particle,
//! X-basis measurement of Alice's GHZ particles by the relays, and a probe
//! qubit entangled with one in-flight particle. Each is a hook invoked by
//! [`run_round`](crate::protocol::run_round) at the point where the colluding
//! relay holds the particle.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::protocol::{
    decoy_check, run_round, CheckResult, Decision, ProtocolConfig, ProtocolError, RoundRecord, Transcript,
};
use crate::qsim::{
    apply_two_qubit_unitary, measure_local, prepare_single, substream, tensor, Amplitude, AncillaState, Basis,
    BellOutcome, QsimError, SingleQubitPrep, StateVector, TwoQubitUnitary,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisPolicy {
    FixedZ,
    FixedX,
    RandomPerRound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AncillaTarget {
    CParticle,
    DParticle,
    EParticle,
}

#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum AttackStrategy {
    NoAttack,
    /// Ethan measures Charlie's particle and forwards a fresh eigenstate.
    InterceptResendC {
        basis_policy: BasisPolicy,
    },
    /// David and Ethan measure Alice's particles in X before their BSMs.
    MeasureDEInX,
    /// A probe qubit is coupled to one in-flight particle by `u`, with the
    /// target particle as the high-order qubit of `u`.
    EntangleAncilla {
        u: TwoQubitUnitary,
        ancilla: AncillaState,
        target: AncillaTarget,
    },
}

impl AttackStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            AttackStrategy::NoAttack => "none",
            AttackStrategy::InterceptResendC { .. } => "intercept_resend_c",
            AttackStrategy::MeasureDEInX => "measure_de_in_x",
            AttackStrategy::EntangleAncilla { .. } => "entangle_ancilla",
        }
    }

    /// Relay arms `(david, ethan)` whose checks can expose this attack.
    pub fn monitored_arms(&self) -> (bool, bool) {
        match self {
            AttackStrategy::NoAttack | AttackStrategy::MeasureDEInX => (true, true),
            AttackStrategy::InterceptResendC { .. } => (false, true),
            AttackStrategy::EntangleAncilla { target, .. } => match target {
                AncillaTarget::DParticle => (true, false),
                AncillaTarget::CParticle | AncillaTarget::EParticle => (false, true),
            },
        }
    }
}

/// Measures a single in-flight qubit in `basis` and returns the bit with the
/// matching eigenstate.
pub fn measure_and_resend<R: Rng + ?Sized>(
    in_flight: &StateVector,
    basis: Basis,
    rng: &mut R,
) -> Result<(u8, StateVector), QsimError> {
    let (bit, _) = measure_local(in_flight, 0, basis, rng)?;
    Ok((bit, prepare_single(SingleQubitPrep::from_basis_bit(basis, bit))))
}

pub fn intercept_resend_hook<R: Rng + ?Sized>(
    in_flight: &StateVector,
    policy: BasisPolicy,
    rng: &mut R,
) -> Result<StateVector, QsimError> {
    let basis = match policy {
        BasisPolicy::FixedZ => Basis::Z,
        BasisPolicy::FixedX => Basis::X,
        BasisPolicy::RandomPerRound => Basis::ALL[rng.random_range(0..2)],
    };
    Ok(measure_and_resend(in_flight, basis, rng)?.1)
}

/// Relays' X outcomes on `d` and `e`, and Alice's remaining qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct DeMeasurement {
    pub bit_d: u8,
    pub bit_e: u8,
    pub alice: StateVector,
}

impl DeMeasurement {
    /// The coalition's guess for Alice's X bit.
    pub fn inferred_alice_bit(&self) -> u8 {
        self.bit_d ^ self.bit_e
    }
}

/// Measures qubits `d` and `e` of an `(a, d, e)` register in X.
pub fn measure_de_hook<R: Rng + ?Sized>(ghz: &StateVector, rng: &mut R) -> Result<DeMeasurement, QsimError> {
    let (bit_d, rest) = measure_local(ghz, 1, Basis::X, rng)?;
    let (bit_e, alice) = measure_local(&rest, 1, Basis::X, rng)?;
    Ok(DeMeasurement { bit_d, bit_e, alice })
}

/// Probability that one decoy check errors when `u` couples the probe to
/// the sharer's particle before the relay's BSM.
pub fn ancilla_check_error(
    u: &TwoQubitUnitary,
    ancilla: &AncillaState,
    decoy: SingleQubitPrep,
    sharer: SingleQubitPrep,
) -> Result<f64, QsimError> {
    // Layout (sharer, probe, decoy).
    let state = tensor(
        &tensor(&prepare_single(sharer), &ancilla.to_state())?,
        &prepare_single(decoy),
    )?;
    let state = apply_two_qubit_unitary(&state, 0, 1, u)?;
    let probs = state.bell_probabilities(0, 2)?;
    Ok(BellOutcome::ALL
        .into_iter()
        .zip(probs)
        .filter(|(b, _)| decoy_check(decoy, sharer, *b) == CheckResult::Error)
        .map(|(_, p)| p)
        .sum())
}

/// Same-basis `(decoy, sharer)` pairs Alice actually checks.
pub fn checked_configurations() -> impl Iterator<Item = (SingleQubitPrep, SingleQubitPrep)> {
    SingleQubitPrep::ALL.into_iter().flat_map(|d| {
        SingleQubitPrep::ALL
            .into_iter()
            .filter(move |s| s.basis() == d.basis())
            .map(move |s| (d, s))
    })
}

/// Worst-case check error over all checked configurations.
pub fn ancilla_residual_error(u: &TwoQubitUnitary, ancilla: &AncillaState) -> Result<f64, QsimError> {
    checked_configurations().try_fold(0.0f64, |worst, (d, s)| {
        Ok(worst.max(ancilla_check_error(u, ancilla, d, s)?))
    })
}

/// Real rotation of the target by angle `asin(epsilon)`, identity on the
/// probe. With probe `|0⟩` this gives `U|0⟩|E⟩` a `|10⟩` coefficient of
/// `epsilon`.
pub fn ancilla_rotation(epsilon: f64) -> Result<TwoQubitUnitary, QsimError> {
    let s = epsilon.clamp(-1.0, 1.0);
    let c = (1.0 - s * s).sqrt();
    let r = |x: f64| Amplitude::new(x, 0.0);
    TwoQubitUnitary::kron(&[[r(c), r(-s)], [r(s), r(c)]], &[[r(1.0), r(0.0)], [r(0.0), r(1.0)]])
}

fn outer(ket: &AncillaState, bra: &AncillaState) -> [[Amplitude; 2]; 2] {
    let k = [ket.alpha(), ket.beta()];
    let b = [bra.alpha(), bra.beta()];
    [
        [k[0] * b[0].conj(), k[0] * b[1].conj()],
        [k[1] * b[0].conj(), k[1] * b[1].conj()],
    ]
}

/// Random coupling of the form `U|x⟩|E⟩ = |x⟩|F⟩`: the target is never
/// flipped and the probe ends in the same state `F` for both target values,
/// so it carries no information.
pub fn random_transparent_unitary<R: Rng + ?Sized>(ancilla: &AncillaState, rng: &mut R) -> TwoQubitUnitary {
    let f = AncillaState::random(rng);
    let block = |phase: f64| {
        let a = outer(&f, ancilla);
        let b = outer(&f.orthogonal(), &ancilla.orthogonal());
        let p = Amplitude::from_polar(1.0, phase);
        [
            [a[0][0] + p * b[0][0], a[0][1] + p * b[0][1]],
            [a[1][0] + p * b[1][0], a[1][1] + p * b[1][1]],
        ]
    };
    let v0 = block(rng.random::<f64>() * std::f64::consts::TAU);
    let v1 = block(rng.random::<f64>() * std::f64::consts::TAU);
    TwoQubitUnitary::controlled(&v0, &v1).expect("blocks are unitary")
}

/// Probability that one decoy check errors when the relay measures the
/// decoy in X and forwards the matching eigenstate, averaged over the
/// checked configurations.
pub fn measure_de_check_error() -> f64 {
    let mut total = 0.0;
    let mut n = 0.0;
    for (decoy, sharer) in checked_configurations() {
        for bit in 0..2u8 {
            let (p_bit, _) = prepare_single(decoy)
                .local_project(0, Basis::X, bit)
                .expect("one qubit");
            let fake = SingleQubitPrep::from_basis_bit(Basis::X, bit);
            let pair = tensor(&prepare_single(sharer), &prepare_single(fake)).expect("two qubits");
            let probs = pair.bell_probabilities(0, 1).expect("two qubits");
            for (b, p) in BellOutcome::ALL.into_iter().zip(probs) {
                if decoy_check(decoy, sharer, b) == CheckResult::Error {
                    total += p_bit * p;
                }
            }
        }
        n += 1.0;
    }
    total / n
}

/// Nominal escape curve `(1/4)^num_checked`, the reference column of the
/// attack sweeps.
pub fn theoretical_escape(num_checked: u32) -> f64 {
    0.25f64.powi(num_checked as i32)
}

/// Exact probability that a single noiseless check on Charlie's arm passes
/// under intercept-resend, averaged over the checked configurations.
pub fn intercept_resend_escape_per_check(policy: BasisPolicy) -> f64 {
    let bases: &[(Basis, f64)] = match policy {
        BasisPolicy::FixedZ => &[(Basis::Z, 1.0)],
        BasisPolicy::FixedX => &[(Basis::X, 1.0)],
        BasisPolicy::RandomPerRound => &[(Basis::Z, 0.5), (Basis::X, 0.5)],
    };
    let mut total = 0.0;
    let mut configs = 0.0;
    for (decoy, sharer) in checked_configurations() {
        for &(basis, p_basis) in bases {
            for bit in 0..2u8 {
                let (p_bit, _) = prepare_single(sharer)
                    .local_project(0, basis, bit)
                    .expect("single qubit");
                let fake = prepare_single(SingleQubitPrep::from_basis_bit(basis, bit));
                let pair = tensor(&fake, &prepare_single(decoy)).expect("two qubits");
                let probs = pair.bell_probabilities(0, 1).expect("two qubits");
                let pass: f64 = BellOutcome::ALL
                    .into_iter()
                    .zip(probs)
                    .filter(|(b, _)| decoy_check(decoy, sharer, *b) == CheckResult::Ok)
                    .map(|(_, p)| p)
                    .sum();
                total += p_basis * p_bit * pass;
            }
        }
        configs += 1.0;
    }
    total / configs
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DetectionStats {
    pub checked_rounds: u64,
    pub escaped_rounds: u64,
    pub empirical_escape_rate: f64,
    pub campaigns_aborted: u64,
    pub campaigns_total: u64,
}

impl DetectionStats {
    fn finish(checked_rounds: u64, escaped_rounds: u64, campaigns_aborted: u64, campaigns_total: u64) -> Self {
        let empirical_escape_rate = if checked_rounds == 0 {
            1.0
        } else {
            escaped_rounds as f64 / checked_rounds as f64
        };
        DetectionStats {
            checked_rounds,
            escaped_rounds,
            empirical_escape_rate,
            campaigns_aborted,
            campaigns_total,
        }
    }

    pub fn abort_rate(&self) -> f64 {
        if self.campaigns_total == 0 {
            0.0
        } else {
            self.campaigns_aborted as f64 / self.campaigns_total as f64
        }
    }

    /// Fraction of campaigns that were not aborted.
    pub fn campaign_escape_rate(&self) -> f64 {
        1.0 - self.abort_rate()
    }

    /// Aggregates full campaigns; a campaign counts as aborted by its
    /// threshold decision.
    pub fn from_transcripts(transcripts: &[Transcript], attack: &AttackStrategy) -> Self {
        let mut checked = 0;
        let mut escaped = 0;
        for t in transcripts {
            for r in &t.rounds {
                if let Some(ok) = monitored_outcome(r, attack) {
                    checked += 1;
                    escaped += u64::from(ok);
                }
            }
        }
        let aborted = transcripts.iter().filter(|t| t.decision == Decision::Abort).count() as u64;
        DetectionStats::finish(checked, escaped, aborted, transcripts.len() as u64)
    }
}

/// `Some(true)` when a monitored arm was checked and every monitored check
/// passed, `Some(false)` if one failed, `None` if nothing monitored was
/// checked this round.
fn monitored_outcome(r: &RoundRecord, attack: &AttackStrategy) -> Option<bool> {
    let (david, ethan) = attack.monitored_arms();
    let checks: Vec<CheckResult> = [(david, r.check_d), (ethan, r.check_e)]
        .into_iter()
        .filter(|(on, c)| *on && c.is_checked())
        .map(|(_, c)| c)
        .collect();
    (!checks.is_empty()).then(|| checks.iter().all(|&c| c == CheckResult::Ok))
}

/// Runs `campaigns` campaigns that each stop after exactly `num_checked`
/// monitored checks. A campaign is aborted iff any of its checks failed.
pub fn run_truncated_campaigns(
    config: &ProtocolConfig,
    attack: &AttackStrategy,
    num_checked: u32,
    campaigns: u64,
    seed: u64,
) -> Result<DetectionStats, ProtocolError> {
    config.validate()?;
    if config.p >= 1.0 && num_checked > 0 {
        return Err(ProtocolError::InvalidConfig("p = 1 never produces decoy rounds".into()));
    }
    let per_campaign = (0..campaigns)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c);
            let mut escaped = 0u64;
            let mut checked = 0u32;
            let mut index = 0u64;
            while checked < num_checked {
                let r = run_round(config, attack, index, &mut rng)?;
                index += 1;
                if let Some(ok) = monitored_outcome(&r, attack) {
                    checked += 1;
                    escaped += u64::from(ok);
                }
            }
            Ok(escaped)
        })
        .collect::<Result<Vec<u64>, ProtocolError>>()?;
    let escaped: u64 = per_campaign.iter().sum();
    let aborted = per_campaign.iter().filter(|&&e| e < u64::from(num_checked)).count() as u64;
    Ok(DetectionStats::finish(
        u64::from(num_checked) * campaigns,
        escaped,
        aborted,
        campaigns,
    ))
}

/// Colluding sets without both sharers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coalition {
    BobDavidEthan,
    CharlieDavidEthan,
}

/// Fixed guessing rules a coalition can evaluate from its own view of an
/// X/X round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GuessRule {
    OwnBit,
    SignParity,
    OwnBitXorSigns,
}

impl GuessRule {
    pub const ALL: [GuessRule; 3] = [GuessRule::OwnBit, GuessRule::SignParity, GuessRule::OwnBitXorSigns];

    pub fn guess(self, coalition: Coalition, r: &RoundRecord) -> u8 {
        let own = match coalition {
            Coalition::BobDavidEthan => r.bob_prep.bit(),
            Coalition::CharlieDavidEthan => r.charlie_prep.bit(),
        };
        let signs = r.bsm_d.sign_bit() ^ r.bsm_e.sign_bit();
        match self {
            GuessRule::OwnBit => own,
            GuessRule::SignParity => signs,
            GuessRule::OwnBitXorSigns => own ^ signs,
        }
    }
}

/// Fraction of X/X key rounds where `rule` matches Alice's bit, with the
/// number of rounds scored.
pub fn guess_accuracy(records: &[RoundRecord], coalition: Coalition, rule: GuessRule) -> (f64, usize) {
    let mut hits = 0usize;
    let mut total = 0usize;
    for r in records.iter().filter(|r| r.is_sifted(Basis::X)) {
        if let Some(m) = r.alice_result {
            total += 1;
            hits += usize::from(rule.guess(coalition, r) == m.bit);
        }
    }
    (if total == 0 { 0.5 } else { hits as f64 / total as f64 }, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{prepare_ghz, RandomStream};
    use rand::SeedableRng;
    use SingleQubitPrep::*;

    #[test]
    fn intercept_x_on_plus_passes_through() {
        let mut rng = RandomStream::seed_from_u64(1);
        for _ in 0..100 {
            let out = intercept_resend_hook(&prepare_single(Plus), BasisPolicy::FixedX, &mut rng).unwrap();
            assert!((out.fidelity(&prepare_single(Plus)).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn intercept_x_on_zero_fails_z_check_half_the_time() {
        // Exact: forwarded |±> against decoy |0>: parity error probability 1/2.
        for fake in [Plus, Minus] {
            let pair = tensor(&prepare_single(fake), &prepare_single(Zero)).unwrap();
            let probs = pair.bell_probabilities(0, 1).unwrap();
            let err: f64 = BellOutcome::ALL
                .into_iter()
                .zip(probs)
                .filter(|(b, _)| decoy_check(Zero, Zero, *b) == CheckResult::Error)
                .map(|(_, p)| p)
                .sum();
            assert!((err - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn intercept_resend_detection_rate() {
        // 10^4 checked rounds on Charlie's arm; per-check detection is 1/4.
        let config = ProtocolConfig {
            p: 0.5,
            ..ProtocolConfig::default()
        };
        let attack = AttackStrategy::InterceptResendC {
            basis_policy: BasisPolicy::RandomPerRound,
        };
        let stats = run_truncated_campaigns(&config, &attack, 1, 10_000, 17).unwrap();
        assert_eq!(stats.checked_rounds, 10_000);
        let detected = 1.0 - stats.empirical_escape_rate;
        assert!((detected - 0.25).abs() < 0.02, "detected {detected}");
        assert!(
            (stats.empirical_escape_rate - intercept_resend_escape_per_check(BasisPolicy::RandomPerRound)).abs() < 0.02
        );
    }

    #[test]
    fn intercept_never_errors_when_bases_align() {
        let config = ProtocolConfig {
            p: 0.3,
            ..ProtocolConfig::default()
        };
        for (policy, basis) in [(BasisPolicy::FixedX, Basis::X), (BasisPolicy::FixedZ, Basis::Z)] {
            let attack = AttackStrategy::InterceptResendC { basis_policy: policy };
            for i in 0..3_000 {
                let r = run_round(&config, &attack, i, &mut substream(23, i)).unwrap();
                if let crate::protocol::RoundKind::DecoyRound { decoy_e, .. } = r.kind {
                    if decoy_e.basis() == basis && r.charlie_prep.basis() == basis {
                        assert_eq!(r.check_e, CheckResult::Ok);
                    }
                }
            }
        }
    }

    #[test]
    fn measure_de_steers_alice() {
        let mut rng = RandomStream::seed_from_u64(2);
        for _ in 0..200 {
            let m = measure_de_hook(&prepare_ghz(), &mut rng).unwrap();
            let expected = if m.bit_d == m.bit_e { Plus } else { Minus };
            assert!((m.alice.fidelity(&prepare_single(expected)).unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(m.inferred_alice_bit(), expected.bit());
        }
    }

    #[test]
    fn measure_de_decoy_error_rate_is_quarter() {
        let oracle = measure_de_check_error();
        assert!((oracle - 0.25).abs() < 1e-12);

        let config = ProtocolConfig {
            p: 0.2,
            m: 40_000,
            seed: 5,
            ..ProtocolConfig::default()
        };
        let t = crate::protocol::run_campaign(&config, &AttackStrategy::MeasureDEInX).unwrap();
        let rate = t.report.combined.rate().value().unwrap();
        let n = t.report.combined.checked() as f64;
        let sigma = (0.25 * 0.75 / n).sqrt();
        assert!((rate - oracle).abs() < 5.0 * sigma, "rate {rate}");
    }

    #[test]
    fn ancilla_identity_is_harmless() {
        let mut rng = RandomStream::seed_from_u64(3);
        for _ in 0..20 {
            let e = AncillaState::random(&mut rng);
            assert!(ancilla_residual_error(&TwoQubitUnitary::identity(), &e).unwrap() < 1e-12);
        }
    }

    #[test]
    fn ancilla_half_flip_on_zero() {
        // U = X⊗H with E = |0>: U|0>|E> = (|10> + |11>)/√2, so
        // |c|^2 = |d|^2 = 1/2 and the flipped weight is |c|^2 + |d|^2 = 1.
        let e = AncillaState::zero();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = |x: f64| Amplitude::new(x, 0.0);
        let u = TwoQubitUnitary::kron(&[[r(0.0), r(1.0)], [r(1.0), r(0.0)]], &[[r(h), r(h)], [r(h), r(-h)]]).unwrap();
        let out = apply_two_qubit_unitary(&tensor(&prepare_single(Zero), &e.to_state()).unwrap(), 0, 1, &u).unwrap();
        assert!((out.probability(0b10) - 0.5).abs() < 1e-12 && (out.probability(0b11) - 0.5).abs() < 1e-12);
        let flipped = out.probability(0b10) + out.probability(0b11);
        let err = ancilla_check_error(&u, &e, Zero, Zero).unwrap();
        assert!((err - flipped).abs() < 1e-12);
        assert!(err >= 0.25);
    }

    #[test]
    fn ancilla_rotation_follows_epsilon_squared() {
        let e = AncillaState::zero();
        for eps in [0.1, 0.2, 0.3] {
            let u = ancilla_rotation(eps).unwrap();
            let z = ancilla_check_error(&u, &e, Zero, Zero).unwrap();
            assert!((z - eps * eps).abs() < 1e-12);
            assert!((ancilla_residual_error(&u, &e).unwrap() - eps * eps).abs() < 1e-12);
        }
    }

    #[test]
    fn transparent_couplings_are_undetectable() {
        let mut rng = RandomStream::seed_from_u64(4);
        for _ in 0..50 {
            let e = AncillaState::random(&mut rng);
            let u = random_transparent_unitary(&e, &mut rng);
            assert!(u.off_block_mass() < 1e-12);
            assert!(ancilla_residual_error(&u, &e).unwrap() < 1e-12);
        }
    }

    #[test]
    fn block_diagonal_but_probe_dependent_couplings_are_detected_in_x() {
        // U = |0><0|⊗V0 + |1><1|⊗V1 never flips the target, so Z checks pass,
        // but X checks fail with probability (1 - Re<F0|F1>)/2 where
        // F_i = V_i|E>.
        let mut rng = RandomStream::seed_from_u64(6);
        for _ in 0..50 {
            let e = AncillaState::random(&mut rng);
            let g = TwoQubitUnitary::random(&mut rng);
            let h = TwoQubitUnitary::random(&mut rng);
            let v0 = [
                [g.entries()[0][0], g.entries()[0][1]],
                [g.entries()[1][0], g.entries()[1][1]],
            ];
            let v0 = unitary_part(v0);
            let v1 = unitary_part([
                [h.entries()[0][0], h.entries()[0][1]],
                [h.entries()[1][0], h.entries()[1][1]],
            ]);
            let u = TwoQubitUnitary::controlled(&v0, &v1).unwrap();
            let f0 = apply2(&v0, &e);
            let f1 = apply2(&v1, &e);
            let overlap = f0[0].conj() * f1[0] + f0[1].conj() * f1[1];
            let expected_x = (1.0 - overlap.re) / 2.0;
            for (d, s) in checked_configurations() {
                let err = ancilla_check_error(&u, &e, d, s).unwrap();
                if d.basis() == Basis::Z {
                    assert!(err < 1e-12);
                } else {
                    assert!((err - expected_x).abs() < 1e-9);
                }
            }
        }
    }

    fn apply2(m: &[[Amplitude; 2]; 2], e: &AncillaState) -> [Amplitude; 2] {
        [
            m[0][0] * e.alpha() + m[0][1] * e.beta(),
            m[1][0] * e.alpha() + m[1][1] * e.beta(),
        ]
    }

    /// Orthonormalizes the columns of a 2×2 matrix.
    fn unitary_part(m: [[Amplitude; 2]; 2]) -> [[Amplitude; 2]; 2] {
        let n0 = (m[0][0].norm_sqr() + m[1][0].norm_sqr()).sqrt();
        let c0 = [m[0][0] / n0, m[1][0] / n0];
        let proj = c0[0].conj() * m[0][1] + c0[1].conj() * m[1][1];
        let v = [m[0][1] - proj * c0[0], m[1][1] - proj * c0[1]];
        let n1 = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        [[c0[0], v[0] / n1], [c0[1], v[1] / n1]]
    }

    #[test]
    fn exact_intercept_escape() {
        assert!((intercept_resend_escape_per_check(BasisPolicy::RandomPerRound) - 0.75).abs() < 1e-12);
        assert!((intercept_resend_escape_per_check(BasisPolicy::FixedX) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn theoretical_escape_values() {
        assert_eq!(theoretical_escape(0), 1.0);
        assert_eq!(theoretical_escape(2), 1.0 / 16.0);
        assert_eq!(theoretical_escape(3), 0.015625);
    }

    #[test]
    fn escape_decays_exponentially() {
        let config = ProtocolConfig {
            p: 0.5,
            ..ProtocolConfig::default()
        };
        let attack = AttackStrategy::InterceptResendC {
            basis_policy: BasisPolicy::RandomPerRound,
        };
        let ks = [1u32, 2, 3, 4];
        let logs: Vec<f64> = ks
            .iter()
            .map(|&k| {
                let s = run_truncated_campaigns(&config, &attack, k, 20_000, 31 + u64::from(k)).unwrap();
                s.campaign_escape_rate().ln()
            })
            .collect();
        let mean_k = 2.5;
        let mean_l = logs.iter().sum::<f64>() / 4.0;
        let slope = ks
            .iter()
            .zip(&logs)
            .map(|(&k, l)| (f64::from(k) - mean_k) * (l - mean_l))
            .sum::<f64>()
            / ks.iter().map(|&k| (f64::from(k) - mean_k).powi(2)).sum::<f64>();
        let expected = intercept_resend_escape_per_check(BasisPolicy::RandomPerRound).ln();
        assert!(((slope - expected) / expected).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn no_attack_is_a_noop() {
        let config = ProtocolConfig {
            m: 1_000,
            seed: 12,
            ..ProtocolConfig::default()
        };
        let a = crate::protocol::run_campaign(&config, &AttackStrategy::NoAttack).unwrap();
        let stats = run_truncated_campaigns(&config, &AttackStrategy::NoAttack, 3, 200, 1).unwrap();
        assert_eq!(stats.campaigns_aborted, 0);
        assert_eq!(
            DetectionStats::from_transcripts(&[a], &AttackStrategy::NoAttack).campaigns_aborted,
            0
        );
    }

    #[test]
    fn single_sharer_views_are_uninformative() {
        let config = ProtocolConfig {
            p: 0.999,
            m: 40_000,
            seed: 77,
            ..ProtocolConfig::default()
        };
        let t = crate::protocol::run_campaign(&config, &AttackStrategy::NoAttack).unwrap();
        for coalition in [Coalition::BobDavidEthan, Coalition::CharlieDavidEthan] {
            for rule in GuessRule::ALL {
                let (acc, n) = guess_accuracy(&t.rounds, coalition, rule);
                let sigma = (0.25 / n as f64).sqrt();
                assert!((acc - 0.5).abs() < 4.0 * sigma, "{coalition:?} {rule:?} {acc}");
            }
        }
    }
}
