//! Exact simulation of three-party measurement-device-independent quantum
//! secret sharing.
//!
//! A dealer (Alice) distributes GHZ particles, or decoy qubits, to two
//! untrusted relays (David and Ethan). Each relay performs a Bell-state
//! measurement between Alice's particle and the qubit of one sharer (Bob or
//! Charlie). Alice's X-basis outcomes become a raw key that only the two
//! sharers together can reconstruct; decoy rounds detect tampering on the
//! relay arms.
//!
//! * [`qsim`]: statevector kernel (≤ 6 qubits).
//! * [`protocol`]: rounds, decoy checks, sifting, campaigns.
//! * [`adversary`]: participant attacks and detection statistics.
//! * [`postproc`]: reconciliation, privacy amplification, one-time pad.
//! * [`cli`]: batch driver behind the `mdiqss` binary.

pub mod adversary;
pub mod cli;
pub mod postproc;
pub mod protocol;
pub mod qsim;
