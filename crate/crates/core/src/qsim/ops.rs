use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::state::{sample_branch, StateVector, NORM_TOLERANCE};
use super::types::{Amplitude, PauliLabel};
use super::QsimError;

const UNITARY_TOLERANCE: f64 = 1e-9;

fn zero() -> Amplitude {
    Amplitude::new(0.0, 0.0)
}

/// 4×4 unitary on an ordered qubit pair; row/column index `2·x + y` for
/// basis state `|x y⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitUnitary {
    entries: [[Amplitude; 4]; 4],
}

impl TwoQubitUnitary {
    pub fn new(entries: [[Amplitude; 4]; 4]) -> Result<Self, QsimError> {
        let deviation = unitarity_deviation(&entries);
        if deviation > UNITARY_TOLERANCE {
            return Err(QsimError::NotUnitary(deviation));
        }
        Ok(TwoQubitUnitary { entries })
    }

    pub fn identity() -> Self {
        let mut entries = [[zero(); 4]; 4];
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] = Amplitude::new(1.0, 0.0);
        }
        TwoQubitUnitary { entries }
    }

    pub fn swap() -> Self {
        let one = Amplitude::new(1.0, 0.0);
        let mut entries = [[zero(); 4]; 4];
        entries[0][0] = one;
        entries[1][2] = one;
        entries[2][1] = one;
        entries[3][3] = one;
        TwoQubitUnitary { entries }
    }

    /// `first ⊗ second`.
    pub fn kron(first: &[[Amplitude; 2]; 2], second: &[[Amplitude; 2]; 2]) -> Result<Self, QsimError> {
        let mut entries = [[zero(); 4]; 4];
        for (r, row) in entries.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = first[r >> 1][c >> 1] * second[r & 1][c & 1];
            }
        }
        Self::new(entries)
    }

    /// `|0⟩⟨0| ⊗ on_zero + |1⟩⟨1| ⊗ on_one`.
    pub fn controlled(on_zero: &[[Amplitude; 2]; 2], on_one: &[[Amplitude; 2]; 2]) -> Result<Self, QsimError> {
        let mut entries = [[zero(); 4]; 4];
        for r in 0..2 {
            for c in 0..2 {
                entries[r][c] = on_zero[r][c];
                entries[2 + r][2 + c] = on_one[r][c];
            }
        }
        Self::new(entries)
    }

    /// Haar-distributed unitary via Gram-Schmidt on a complex Gaussian matrix.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut cols: Vec<[Amplitude; 4]> = Vec::with_capacity(4);
        while cols.len() < 4 {
            let mut v = [zero(); 4];
            for entry in &mut v {
                *entry = Amplitude::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            }
            for u in &cols {
                let proj: Amplitude = (0..4).map(|i| u[i].conj() * v[i]).sum();
                for i in 0..4 {
                    v[i] -= proj * u[i];
                }
            }
            let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-6 {
                continue;
            }
            cols.push(v.map(|a| a / norm));
        }
        let mut entries = [[zero(); 4]; 4];
        for (c, col) in cols.iter().enumerate() {
            for r in 0..4 {
                entries[r][c] = col[r];
            }
        }
        TwoQubitUnitary { entries }
    }

    pub fn entries(&self) -> &[[Amplitude; 4]; 4] {
        &self.entries
    }

    /// Frobenius mass of the entries that flip the first qubit.
    pub fn off_block_mass(&self) -> f64 {
        let mut mass = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                if (r >> 1) != (c >> 1) {
                    mass += self.entries[r][c].norm_sqr();
                }
            }
        }
        mass
    }
}

fn unitarity_deviation(m: &[[Amplitude; 4]; 4]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let dot: Amplitude = (0..4).map(|k| m[k][i].conj() * m[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - Amplitude::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Probe qubit `α|0⟩ + β|1⟩` used by an entangling attack.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AncillaState {
    alpha: Amplitude,
    beta: Amplitude,
}

impl AncillaState {
    pub fn new(alpha: Amplitude, beta: Amplitude) -> Result<Self, QsimError> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QsimError::NotNormalized(norm));
        }
        Ok(AncillaState { alpha, beta })
    }

    pub fn zero() -> Self {
        AncillaState {
            alpha: Amplitude::new(1.0, 0.0),
            beta: zero(),
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let a = Amplitude::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let b = Amplitude::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        AncillaState {
            alpha: a / norm,
            beta: b / norm,
        }
    }

    pub fn alpha(&self) -> Amplitude {
        self.alpha
    }

    pub fn beta(&self) -> Amplitude {
        self.beta
    }

    /// The orthogonal state `−β*|0⟩ + α*|1⟩`.
    pub fn orthogonal(&self) -> AncillaState {
        AncillaState {
            alpha: -self.beta.conj(),
            beta: self.alpha.conj(),
        }
    }

    pub fn to_state(&self) -> StateVector {
        StateVector::new(vec![self.alpha, self.beta]).expect("normalized by construction")
    }
}

/// Per-transit Pauli channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
}

impl NoiseSpec {
    pub fn new(p_x: f64, p_y: f64, p_z: f64) -> Result<Self, QsimError> {
        let spec = NoiseSpec { p_x, p_y, p_z };
        spec.validate()?;
        Ok(spec)
    }

    pub fn noiseless() -> Self {
        NoiseSpec::default()
    }

    pub fn validate(&self) -> Result<(), QsimError> {
        let ps = [self.p_x, self.p_y, self.p_z];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) || ps.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(QsimError::InvalidNoise(*self));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p_x == 0.0 && self.p_y == 0.0 && self.p_z == 0.0
    }
}

/// Applies `u` to `(q1, q2)`; `q1` is the high-order qubit of `u`'s index.
pub fn apply_two_qubit_unitary(
    state: &StateVector,
    q1: usize,
    q2: usize,
    u: &TwoQubitUnitary,
) -> Result<StateVector, QsimError> {
    state.check_pair(q1, q2)?;
    Ok(state.apply_pair(q1, q2, &u.entries))
}

/// Samples one Pauli from `spec` and applies it to qubit `q`.
///
/// Always consumes exactly one uniform draw so that the random stream stays
/// aligned regardless of the noise level.
pub fn apply_pauli_noise<R: Rng + ?Sized>(
    state: &StateVector,
    q: usize,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<(StateVector, PauliLabel), QsimError> {
    spec.validate()?;
    state.check_qubit(q)?;
    let p_i = (1.0 - spec.p_x - spec.p_y - spec.p_z).max(0.0);
    let labels = [PauliLabel::I, PauliLabel::X, PauliLabel::Y, PauliLabel::Z];
    let label = labels[sample_branch(&[p_i, spec.p_x, spec.p_y, spec.p_z], rng)];
    if label == PauliLabel::I {
        return Ok((state.clone(), label));
    }
    Ok((state.apply_single(q, &label.matrix()), label))
}
