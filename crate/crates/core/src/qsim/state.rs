use rand::Rng;

use super::types::{Amplitude, Basis, BellOutcome, SingleQubitPrep, FRAC_1_SQRT_2};
use super::QsimError;

/// Largest register the kernel will build.
pub const MAX_QUBITS: usize = 6;

/// Tolerance on the unit-norm invariant.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Branches with probability below this are treated as impossible.
pub const BRANCH_CUTOFF: f64 = 1e-12;

/// Pure state of up to [`MAX_QUBITS`] qubits.
///
/// Index bits are big-endian over qubit labels: qubit 0 is the most
/// significant bit of the amplitude index. A zero-qubit state is the scalar
/// left over once every qubit has been measured out.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Amplitude>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Amplitude>) -> Result<Self, QsimError> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(QsimError::BadLength(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(QsimError::TooManyQubits(num_qubits));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QsimError::NonFinite);
        }
        let state = StateVector { num_qubits, amplitudes };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QsimError::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Builds a state from real amplitudes.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self, QsimError> {
        Self::new(amplitudes.iter().map(|&re| Amplitude::new(re, 0.0)).collect())
    }

    /// Renormalizes an unnormalized vector; used after projections.
    fn normalized(num_qubits: usize, mut amplitudes: Vec<Amplitude>) -> Self {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amplitudes {
            *a /= norm;
        }
        StateVector { num_qubits, amplitudes }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Amplitude {
        self.amplitudes[index]
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Amplitude, QsimError> {
        if self.num_qubits != other.num_qubits {
            return Err(QsimError::DimensionMismatch(self.num_qubits, other.num_qubits));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64, QsimError> {
        self.inner(other).map(|z| z.norm_sqr())
    }

    pub(crate) fn check_qubit(&self, q: usize) -> Result<(), QsimError> {
        if q >= self.num_qubits {
            Err(QsimError::InvalidQubit {
                qubit: q,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_pair(&self, q1: usize, q2: usize) -> Result<(), QsimError> {
        self.check_qubit(q1)?;
        self.check_qubit(q2)?;
        if q1 == q2 {
            return Err(QsimError::DuplicateQubit(q1));
        }
        Ok(())
    }

    /// Bit mask selecting qubit `q` in an amplitude index.
    pub(crate) fn mask(&self, q: usize) -> usize {
        1 << (self.num_qubits - 1 - q)
    }

    /// Contracts qubits `qubits` against `bra` (amplitudes over their joint
    /// basis, first listed qubit most significant) and drops them. Returns
    /// the branch probability and the unnormalized remainder.
    fn contract(&self, qubits: &[usize], bra: &[Amplitude]) -> (f64, Vec<Amplitude>) {
        let remaining = self.num_qubits - qubits.len();
        let mut out = vec![Amplitude::new(0.0, 0.0); 1 << remaining];
        for (index, amp) in self.amplitudes.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let mut sub = 0usize;
            for &q in qubits {
                sub = (sub << 1) | usize::from(index & self.mask(q) != 0);
            }
            let mut reduced = 0usize;
            for q in 0..self.num_qubits {
                if !qubits.contains(&q) {
                    reduced = (reduced << 1) | usize::from(index & self.mask(q) != 0);
                }
            }
            out[reduced] += bra[sub].conj() * amp;
        }
        let prob = out.iter().map(|a| a.norm_sqr()).sum();
        (prob, out)
    }

    /// Projects qubits `(q1, q2)` onto a Bell state and removes them.
    ///
    /// Returns the branch probability and, when it exceeds
    /// [`BRANCH_CUTOFF`], the normalized post-measurement state.
    pub fn bell_project(
        &self,
        q1: usize,
        q2: usize,
        outcome: BellOutcome,
    ) -> Result<(f64, Option<StateVector>), QsimError> {
        self.check_pair(q1, q2)?;
        let (prob, rest) = self.contract(&[q1, q2], &outcome.amplitudes());
        let post = (prob > BRANCH_CUTOFF).then(|| StateVector::normalized(self.num_qubits - 2, rest));
        Ok((prob, post))
    }

    pub fn bell_probabilities(&self, q1: usize, q2: usize) -> Result<[f64; 4], QsimError> {
        self.check_pair(q1, q2)?;
        Ok(BellOutcome::ALL.map(|b| self.contract(&[q1, q2], &b.amplitudes()).0))
    }

    /// Projects qubit `q` onto the `bit` eigenstate of `basis` and removes it.
    pub fn local_project(&self, q: usize, basis: Basis, bit: u8) -> Result<(f64, Option<StateVector>), QsimError> {
        self.check_qubit(q)?;
        let bra = SingleQubitPrep::from_basis_bit(basis, bit).amplitudes();
        let (prob, rest) = self.contract(&[q], &bra);
        let post = (prob > BRANCH_CUTOFF).then(|| StateVector::normalized(self.num_qubits - 1, rest));
        Ok((prob, post))
    }

    /// Applies a 2×2 matrix to qubit `q`. The caller guarantees unitarity.
    pub(crate) fn apply_single(&self, q: usize, m: &[[Amplitude; 2]; 2]) -> StateVector {
        let mask = self.mask(q);
        let mut out = self.amplitudes.clone();
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | mask]);
                out[i] = m[0][0] * a0 + m[0][1] * a1;
                out[i | mask] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        StateVector {
            num_qubits: self.num_qubits,
            amplitudes: out,
        }
    }

    /// Applies a 4×4 matrix on `(q1, q2)`, `q1` as the high-order bit of the
    /// matrix index.
    pub(crate) fn apply_pair(&self, q1: usize, q2: usize, m: &[[Amplitude; 4]; 4]) -> StateVector {
        let (m1, m2) = (self.mask(q1), self.mask(q2));
        let mut out = self.amplitudes.clone();
        for base in 0..self.amplitudes.len() {
            if base & (m1 | m2) != 0 {
                continue;
            }
            let idx = [base, base | m2, base | m1, base | m1 | m2];
            let input = idx.map(|i| self.amplitudes[i]);
            for (row, &target) in idx.iter().enumerate() {
                out[target] = (0..4).map(|col| m[row][col] * input[col]).sum();
            }
        }
        StateVector {
            num_qubits: self.num_qubits,
            amplitudes: out,
        }
    }
}

/// `(|000⟩ + |111⟩)/√2` on qubits ordered `(a, d, e)`.
pub fn prepare_ghz() -> StateVector {
    let mut amplitudes = vec![Amplitude::new(0.0, 0.0); 8];
    amplitudes[0b000] = Amplitude::new(FRAC_1_SQRT_2, 0.0);
    amplitudes[0b111] = Amplitude::new(FRAC_1_SQRT_2, 0.0);
    StateVector {
        num_qubits: 3,
        amplitudes,
    }
}

pub fn prepare_single(prep: SingleQubitPrep) -> StateVector {
    StateVector {
        num_qubits: 1,
        amplitudes: prep.amplitudes().to_vec(),
    }
}

/// Kronecker product; `left` occupies the high-order qubit positions.
pub fn tensor(left: &StateVector, right: &StateVector) -> Result<StateVector, QsimError> {
    let num_qubits = left.num_qubits + right.num_qubits;
    if num_qubits > MAX_QUBITS {
        return Err(QsimError::TooManyQubits(num_qubits));
    }
    let amplitudes = left
        .amplitudes
        .iter()
        .flat_map(|l| right.amplitudes.iter().map(move |r| l * r))
        .collect();
    Ok(StateVector { num_qubits, amplitudes })
}

/// Picks a branch index from (possibly unnormalized) probabilities,
/// ignoring branches at or below [`BRANCH_CUTOFF`].
pub(crate) fn sample_branch<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().filter(|&&p| p > BRANCH_CUTOFF).sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= BRANCH_CUTOFF {
            continue;
        }
        last = i;
        if u < p {
            return i;
        }
        u -= p;
    }
    last
}

/// Bell-state measurement on `(q1, q2)`; both qubits are consumed.
pub fn measure_bell<R: Rng + ?Sized>(
    state: &StateVector,
    q1: usize,
    q2: usize,
    rng: &mut R,
) -> Result<(BellOutcome, StateVector), QsimError> {
    let probs = state.bell_probabilities(q1, q2)?;
    let outcome = BellOutcome::ALL[sample_branch(&probs, rng)];
    let (_, post) = state.bell_project(q1, q2, outcome)?;
    Ok((outcome, post.expect("sampled branch has non-zero weight")))
}

/// Single-qubit measurement of `q` in `basis`; the qubit is consumed.
pub fn measure_local<R: Rng + ?Sized>(
    state: &StateVector,
    q: usize,
    basis: Basis,
    rng: &mut R,
) -> Result<(u8, StateVector), QsimError> {
    let probs = [state.local_project(q, basis, 0)?.0, state.local_project(q, basis, 1)?.0];
    let bit = sample_branch(&probs, rng) as u8;
    let (_, post) = state.local_project(q, basis, bit)?;
    Ok((bit, post.expect("sampled branch has non-zero weight")))
}
