use serde::Serialize;

use crate::qsim::{prepare_ghz, prepare_single, tensor, BellOutcome, SingleQubitPrep, StateVector, BRANCH_CUTOFF};

// Register layout for a GHZ round is (a, d, e, b, c); once b and d are
// measured out it is (a, e, c).
const D: usize = 1;
const B: usize = 3;
const E_AFTER_D: usize = 1;
const C_AFTER_D: usize = 2;

/// One non-zero branch of a GHZ round: sharer preparations, both relay
/// announcements, and the state Alice's qubit collapses to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub bob: SingleQubitPrep,
    pub charlie: SingleQubitPrep,
    pub bsm_d: BellOutcome,
    pub bsm_e: BellOutcome,
    pub alice_state: SingleQubitPrep,
    pub probability: f64,
}

/// Exact branch of a GHZ round for fixed preparations and announcements:
/// probability and Alice's collapsed qubit, or `None` for an impossible
/// announcement pair.
pub fn ghz_branch(
    bob: SingleQubitPrep,
    charlie: SingleQubitPrep,
    bsm_d: BellOutcome,
    bsm_e: BellOutcome,
) -> Option<(f64, StateVector)> {
    let state = tensor(
        &tensor(&prepare_ghz(), &prepare_single(bob)).expect("4 qubits"),
        &prepare_single(charlie),
    )
    .expect("5 qubits");
    let (p_d, rest) = state.bell_project(B, D, bsm_d).expect("valid qubits");
    let (p_e, alice) = rest?.bell_project(C_AFTER_D, E_AFTER_D, bsm_e).expect("valid qubits");
    let prob = p_d * p_e;
    (prob > BRANCH_CUTOFF).then(|| (prob, alice.expect("non-zero branch")))
}

/// Names the element of `{|0⟩, |1⟩, |+⟩, |−⟩}` equal to `state` up to phase.
pub fn identify_prep(state: &StateVector) -> Option<SingleQubitPrep> {
    SingleQubitPrep::ALL
        .into_iter()
        .find(|&p| (state.fidelity(&prepare_single(p)).unwrap_or(0.0) - 1.0).abs() < 1e-9)
}

/// Enumerates every preparation pair and announcement pair by exact
/// projection, dropping impossible branches.
pub fn correlation_table() -> Vec<CorrelationRow> {
    let mut rows = Vec::new();
    for bob in SingleQubitPrep::ALL {
        for charlie in SingleQubitPrep::ALL {
            for bsm_d in BellOutcome::ALL {
                for bsm_e in BellOutcome::ALL {
                    if let Some((probability, alice)) = ghz_branch(bob, charlie, bsm_d, bsm_e) {
                        let alice_state = identify_prep(&alice).expect("Alice's qubit collapses into S");
                        rows.push(CorrelationRow {
                            bob,
                            charlie,
                            bsm_d,
                            bsm_e,
                            alice_state,
                            probability,
                        });
                    }
                }
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::reconstruct_bit;
    use crate::qsim::Basis;
    use BellOutcome::*;
    use SingleQubitPrep::*;

    #[test]
    fn plus_plus_phi_plus_phi_plus() {
        let (p, alice) = ghz_branch(Plus, Plus, PhiPlus, PhiPlus).unwrap();
        assert!((p - 1.0 / 16.0).abs() < 1e-12);
        assert_eq!(identify_prep(&alice), Some(Plus));
        let (p0, _) = alice.local_project(0, Basis::X, 0).unwrap();
        assert!((p0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plus_plus_phi_plus_phi_minus_is_minus() {
        let (_, alice) = ghz_branch(Plus, Plus, PhiPlus, PhiMinus).unwrap();
        assert_eq!(identify_prep(&alice), Some(Minus));
    }

    #[test]
    fn x_preps_give_uniform_announcements() {
        for bob in [Plus, Minus] {
            for charlie in [Plus, Minus] {
                let mut total = 0.0;
                for d in BellOutcome::ALL {
                    for e in BellOutcome::ALL {
                        let (p, _) = ghz_branch(bob, charlie, d, e).unwrap();
                        assert!((p - 1.0 / 16.0).abs() < 1e-12);
                        total += p;
                    }
                }
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reconstruction_rule_matches_every_x_branch() {
        for row in correlation_table() {
            if row.bob.basis() == Basis::X && row.charlie.basis() == Basis::X {
                assert_eq!(row.alice_state.basis(), Basis::X);
                let bit = reconstruct_bit(row.bob.bit(), row.charlie.bit(), row.bsm_d, row.bsm_e);
                assert_eq!(bit, row.alice_state.bit(), "{row:?}");
            }
        }
    }

    #[test]
    fn row_counts() {
        let rows = correlation_table();
        let count = |pred: &dyn Fn(&CorrelationRow) -> bool| rows.iter().filter(|r| pred(r)).count();
        assert_eq!(
            count(&|r| r.bob.basis() == Basis::X && r.charlie.basis() == Basis::X),
            64
        );
        assert_eq!(
            count(&|r| r.bob.basis() == Basis::Z && r.charlie.basis() == Basis::Z),
            32
        );
        assert_eq!(count(&|r| r.bob.basis() != r.charlie.basis()), 128);
        assert_eq!(rows.len(), 224);
        for bob in SingleQubitPrep::ALL {
            for charlie in SingleQubitPrep::ALL {
                let total: f64 = rows
                    .iter()
                    .filter(|r| r.bob == bob && r.charlie == charlie)
                    .map(|r| r.probability)
                    .sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }
}
