use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ProtocolConfig, ProtocolError};
use crate::adversary::{self, AncillaTarget, AttackStrategy};
use crate::qsim::{
    apply_pauli_noise, apply_two_qubit_unitary, measure_bell, measure_local, prepare_ghz, prepare_single, tensor,
    Basis, BellOutcome, NoiseSpec, SingleQubitPrep, StateVector, TwoQubitUnitary,
};

/// What Alice sent towards the relays this round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RoundKind {
    GhzRound,
    DecoyRound {
        decoy_d: SingleQubitPrep,
        decoy_e: SingleQubitPrep,
    },
}

/// A sharer's public disclosure: the basis in GHZ rounds, the full state in
/// decoy rounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Announcement {
    Basis(Basis),
    State(SingleQubitPrep),
}

impl Announcement {
    pub fn basis(self) -> Basis {
        match self {
            Announcement::Basis(b) => b,
            Announcement::State(s) => s.basis(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasuredBit {
    pub basis: Basis,
    pub bit: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CheckResult {
    NotApplicable,
    Skipped,
    Ok,
    Error,
}

impl CheckResult {
    pub fn is_checked(self) -> bool {
        matches!(self, CheckResult::Ok | CheckResult::Error)
    }
}

/// Transcript of one round. Field order follows the order of events: the
/// relays broadcast their Bell outcomes before the sharers disclose bases.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: u64,
    pub kind: RoundKind,
    pub bob_prep: SingleQubitPrep,
    pub charlie_prep: SingleQubitPrep,
    pub bsm_d: BellOutcome,
    pub bsm_e: BellOutcome,
    pub bob_announced: Announcement,
    pub charlie_announced: Announcement,
    pub alice_result: Option<MeasuredBit>,
    pub check_d: CheckResult,
    pub check_e: CheckResult,
}

impl RoundRecord {
    pub fn is_ghz(&self) -> bool {
        self.kind == RoundKind::GhzRound
    }

    /// Both sharers announced `basis` in a GHZ round.
    pub fn is_sifted(&self, basis: Basis) -> bool {
        self.is_ghz() && self.bob_announced.basis() == basis && self.charlie_announced.basis() == basis
    }
}

/// Alice's verdict on one relay arm of a decoy round.
///
/// Z-basis pairs must reproduce `bit(decoy) ⊕ bit(sharer)` in the Bell
/// parity bit, X-basis pairs in the Bell sign bit.
pub fn decoy_check(decoy: SingleQubitPrep, sharer: SingleQubitPrep, bsm: BellOutcome) -> CheckResult {
    if decoy.basis() != sharer.basis() {
        return CheckResult::Skipped;
    }
    let expected = decoy.bit() ^ sharer.bit();
    let observed = match decoy.basis() {
        Basis::Z => bsm.parity_bit(),
        Basis::X => bsm.sign_bit(),
    };
    if observed == expected {
        CheckResult::Ok
    } else {
        CheckResult::Error
    }
}

/// Alice measures her qubit only when both sharers used the same basis.
pub fn alice_basis_action(bob_basis: Basis, charlie_basis: Basis) -> Option<Basis> {
    (bob_basis == charlie_basis).then_some(bob_basis)
}

/// Joint reconstruction of Alice's X-basis bit from both sharers' bits and
/// the two announced Bell outcomes.
pub fn reconstruct_bit(bob_bit: u8, charlie_bit: u8, bsm_d: BellOutcome, bsm_e: BellOutcome) -> u8 {
    (bob_bit ^ charlie_bit ^ bsm_d.sign_bit() ^ bsm_e.sign_bit()) & 1
}

fn random_prep<R: Rng + ?Sized>(rng: &mut R) -> SingleQubitPrep {
    SingleQubitPrep::ALL[rng.random_range(0..4)]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Particle {
    A,
    D,
    E,
    B,
    C,
    Probe,
}

/// Statevector with a label per qubit so that measured-out qubits do not
/// disturb lookups.
struct Register {
    state: StateVector,
    labels: Vec<Particle>,
}

impl Register {
    fn new(state: StateVector, labels: Vec<Particle>) -> Self {
        debug_assert_eq!(state.num_qubits(), labels.len());
        Register { state, labels }
    }

    fn index(&self, p: Particle) -> usize {
        self.labels
            .iter()
            .position(|&l| l == p)
            .expect("particle present in register")
    }

    fn push(&mut self, p: Particle, qubit: &StateVector) -> Result<(), ProtocolError> {
        self.state = tensor(&self.state, qubit)?;
        self.labels.push(p);
        Ok(())
    }

    fn noise<R: Rng + ?Sized>(&mut self, p: Particle, spec: &NoiseSpec, rng: &mut R) -> Result<(), ProtocolError> {
        let (state, _) = apply_pauli_noise(&self.state, self.index(p), spec, rng)?;
        self.state = state;
        Ok(())
    }

    fn unitary(&mut self, p1: Particle, p2: Particle, u: &TwoQubitUnitary) -> Result<(), ProtocolError> {
        self.state = apply_two_qubit_unitary(&self.state, self.index(p1), self.index(p2), u)?;
        Ok(())
    }

    fn bell<R: Rng + ?Sized>(&mut self, p1: Particle, p2: Particle, rng: &mut R) -> Result<BellOutcome, ProtocolError> {
        let (i1, i2) = (self.index(p1), self.index(p2));
        let (outcome, rest) = measure_bell(&self.state, i1, i2, rng)?;
        self.state = rest;
        self.labels.retain(|&l| l != p1 && l != p2);
        Ok(outcome)
    }

    fn measure<R: Rng + ?Sized>(&mut self, p: Particle, basis: Basis, rng: &mut R) -> Result<u8, ProtocolError> {
        let (bit, rest) = measure_local(&self.state, self.index(p), basis, rng)?;
        self.state = rest;
        self.labels.retain(|&l| l != p);
        Ok(bit)
    }

    /// Hands a single in-flight qubit to `f` and puts the result back at the
    /// end of the register.
    fn intercept<R, F>(&mut self, p: Particle, rng: &mut R, f: F) -> Result<(), ProtocolError>
    where
        R: Rng + ?Sized,
        F: FnOnce(&StateVector, &mut R) -> Result<StateVector, ProtocolError>,
    {
        // Transit qubits are unentangled with the rest of the register.
        let idx = self.index(p);
        let (qubit, rest) = split_product(&self.state, idx)?;
        let forwarded = f(&qubit, rng)?;
        self.state = rest;
        self.labels.retain(|&l| l != p);
        self.push(p, &forwarded)
    }
}

/// Splits qubit `q` off a state in which it is unentangled.
fn split_product(state: &StateVector, q: usize) -> Result<(StateVector, StateVector), ProtocolError> {
    let (p0, rest0) = state.local_project(q, Basis::Z, 0)?;
    let (p1, rest1) = state.local_project(q, Basis::Z, 1)?;
    let rest = rest0.clone().or_else(|| rest1.clone()).expect("some branch survives");
    // Reduced amplitudes of q, phase-aligned against `rest`.
    let mut amps = [crate::qsim::Amplitude::new(0.0, 0.0); 2];
    for (bit, (p, branch)) in [(p0, rest0), (p1, rest1)].into_iter().enumerate() {
        if let Some(branch) = branch {
            let overlap = rest.inner(&branch)?;
            if (overlap.norm() - 1.0).abs() > 1e-9 {
                return Err(ProtocolError::Entangled);
            }
            amps[bit] = overlap * p.sqrt();
        }
    }
    let qubit = StateVector::new(amps.to_vec())?;
    Ok((qubit, rest))
}

/// Executes one round of the protocol under `attack`.
pub fn run_round<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    attack: &AttackStrategy,
    index: u64,
    rng: &mut R,
) -> Result<RoundRecord, ProtocolError> {
    let kind = if rng.random::<f64>() < config.p {
        RoundKind::GhzRound
    } else {
        RoundKind::DecoyRound {
            decoy_d: random_prep(rng),
            decoy_e: random_prep(rng),
        }
    };
    let bob_prep = random_prep(rng);
    let charlie_prep = random_prep(rng);

    // Alice's particles in transit to David and Ethan.
    let mut reg = match kind {
        RoundKind::GhzRound => Register::new(prepare_ghz(), vec![Particle::A, Particle::D, Particle::E]),
        RoundKind::DecoyRound { decoy_d, decoy_e } => Register::new(
            tensor(&prepare_single(decoy_d), &prepare_single(decoy_e))?,
            vec![Particle::D, Particle::E],
        ),
    };
    reg.noise(Particle::D, &config.noise_d, rng)?;
    reg.noise(Particle::E, &config.noise_e, rng)?;
    if let AttackStrategy::MeasureDEInX = attack {
        match kind {
            RoundKind::GhzRound => {
                let m = adversary::measure_de_hook(&reg.state, rng)?;
                let resent = tensor(
                    &prepare_single(SingleQubitPrep::from_basis_bit(Basis::X, m.bit_d)),
                    &prepare_single(SingleQubitPrep::from_basis_bit(Basis::X, m.bit_e)),
                )?;
                reg = Register::new(tensor(&m.alice, &resent)?, vec![Particle::A, Particle::D, Particle::E]);
            }
            RoundKind::DecoyRound { .. } => {
                for p in [Particle::D, Particle::E] {
                    reg.intercept(p, rng, |q, rng| Ok(adversary::measure_and_resend(q, Basis::X, rng)?.1))?;
                }
            }
        }
    }

    // Sharers' particles.
    reg.push(Particle::B, &prepare_single(bob_prep))?;
    reg.noise(Particle::B, &config.noise_b, rng)?;
    reg.push(Particle::C, &prepare_single(charlie_prep))?;
    reg.noise(Particle::C, &config.noise_c, rng)?;
    match attack {
        AttackStrategy::InterceptResendC { basis_policy } => {
            reg.intercept(Particle::C, rng, |q, rng| {
                Ok(adversary::intercept_resend_hook(q, *basis_policy, rng)?)
            })?;
        }
        AttackStrategy::EntangleAncilla { u, ancilla, target } => {
            reg.push(Particle::Probe, &ancilla.to_state())?;
            let target = match target {
                AncillaTarget::CParticle => Particle::C,
                AncillaTarget::DParticle => Particle::D,
                AncillaTarget::EParticle => Particle::E,
            };
            reg.unitary(target, Particle::Probe, u)?;
        }
        AttackStrategy::NoAttack | AttackStrategy::MeasureDEInX => {}
    }

    let bsm_d = reg.bell(Particle::B, Particle::D, rng)?;
    let bsm_e = reg.bell(Particle::C, Particle::E, rng)?;

    let record = match kind {
        RoundKind::GhzRound => {
            let alice_result = match alice_basis_action(bob_prep.basis(), charlie_prep.basis()) {
                Some(basis) => Some(MeasuredBit {
                    basis,
                    bit: reg.measure(Particle::A, basis, rng)?,
                }),
                None => None,
            };
            RoundRecord {
                index,
                kind,
                bob_prep,
                charlie_prep,
                bsm_d,
                bsm_e,
                bob_announced: Announcement::Basis(bob_prep.basis()),
                charlie_announced: Announcement::Basis(charlie_prep.basis()),
                alice_result,
                check_d: CheckResult::NotApplicable,
                check_e: CheckResult::NotApplicable,
            }
        }
        RoundKind::DecoyRound { decoy_d, decoy_e } => RoundRecord {
            index,
            kind,
            bob_prep,
            charlie_prep,
            bsm_d,
            bsm_e,
            bob_announced: Announcement::State(bob_prep),
            charlie_announced: Announcement::State(charlie_prep),
            alice_result: None,
            check_d: decoy_check(decoy_d, bob_prep, bsm_d),
            check_e: decoy_check(decoy_e, charlie_prep, bsm_e),
        },
    };
    Ok(record)
}
