//! Exact statevector kernel for the handful of qubits one protocol round
//! touches: the GHZ triple, two sharer qubits and an optional attack probe.

mod ops;
mod state;
mod types;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use ops::{apply_pauli_noise, apply_two_qubit_unitary, AncillaState, NoiseSpec, TwoQubitUnitary};
pub use state::{
    measure_bell, measure_local, prepare_ghz, prepare_single, tensor, StateVector, BRANCH_CUTOFF, MAX_QUBITS,
    NORM_TOLERANCE,
};
pub use types::{Amplitude, Basis, BellOutcome, PauliLabel, SingleQubitPrep};

/// Seedable stream every random choice in the simulator draws from.
pub type RandomStream = ChaCha8Rng;

/// Independent stream number `stream` under `seed`.
pub fn substream(seed: u64, stream: u64) -> RandomStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("amplitude vector length {0} is not a power of two")]
    BadLength(usize),
    #[error("{0} qubits exceeds the {MAX_QUBITS}-qubit limit")]
    TooManyQubits(usize),
    #[error("amplitudes must be finite")]
    NonFinite,
    #[error("squared norm {0} is not 1")]
    NotNormalized(f64),
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit state")]
    InvalidQubit { qubit: usize, num_qubits: usize },
    #[error("qubit {0} used twice")]
    DuplicateQubit(usize),
    #[error("matrix deviates from unitary by {0}")]
    NotUnitary(f64),
    #[error("invalid noise spec {0:?}")]
    InvalidNoise(NoiseSpec),
    #[error("dimension mismatch: {0} vs {1} qubits")]
    DimensionMismatch(usize, usize),
}
