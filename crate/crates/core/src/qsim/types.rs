use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Complex amplitude of a computational basis state.
pub type Amplitude = Complex64;

pub(crate) const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Single-qubit measurement basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Z, Basis::X];
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Z => f.write_str("Z"),
            Basis::X => f.write_str("X"),
        }
    }
}

/// One of the four single-qubit states `{|0⟩, |1⟩, |+⟩, |−⟩}` used for
/// sharer preparations and decoys.
///
/// `|0⟩` and `|+⟩` encode bit 0, `|1⟩` and `|−⟩` encode bit 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SingleQubitPrep {
    Zero,
    One,
    Plus,
    Minus,
}

impl SingleQubitPrep {
    pub const ALL: [SingleQubitPrep; 4] = [
        SingleQubitPrep::Zero,
        SingleQubitPrep::One,
        SingleQubitPrep::Plus,
        SingleQubitPrep::Minus,
    ];

    pub fn from_basis_bit(basis: Basis, bit: u8) -> Self {
        match (basis, bit & 1) {
            (Basis::Z, 0) => SingleQubitPrep::Zero,
            (Basis::Z, _) => SingleQubitPrep::One,
            (Basis::X, 0) => SingleQubitPrep::Plus,
            (Basis::X, _) => SingleQubitPrep::Minus,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            SingleQubitPrep::Zero | SingleQubitPrep::One => Basis::Z,
            SingleQubitPrep::Plus | SingleQubitPrep::Minus => Basis::X,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            SingleQubitPrep::Zero | SingleQubitPrep::Plus => 0,
            SingleQubitPrep::One | SingleQubitPrep::Minus => 1,
        }
    }

    /// Amplitudes `(⟨0|ψ⟩, ⟨1|ψ⟩)`.
    pub fn amplitudes(self) -> [Amplitude; 2] {
        let h = FRAC_1_SQRT_2;
        match self {
            SingleQubitPrep::Zero => [Amplitude::new(1.0, 0.0), Amplitude::new(0.0, 0.0)],
            SingleQubitPrep::One => [Amplitude::new(0.0, 0.0), Amplitude::new(1.0, 0.0)],
            SingleQubitPrep::Plus => [Amplitude::new(h, 0.0), Amplitude::new(h, 0.0)],
            SingleQubitPrep::Minus => [Amplitude::new(h, 0.0), Amplitude::new(-h, 0.0)],
        }
    }

    pub fn ket(self) -> &'static str {
        match self {
            SingleQubitPrep::Zero => "|0>",
            SingleQubitPrep::One => "|1>",
            SingleQubitPrep::Plus => "|+>",
            SingleQubitPrep::Minus => "|->",
        }
    }
}

/// Outcome of a Bell-state measurement.
///
/// `sign_bit` distinguishes `±`, `parity_bit` distinguishes `φ` (equal
/// bits) from `ψ` (opposite bits).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BellOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
    ];

    pub fn from_bits(parity_bit: u8, sign_bit: u8) -> Self {
        match (parity_bit & 1, sign_bit & 1) {
            (0, 0) => BellOutcome::PhiPlus,
            (0, _) => BellOutcome::PhiMinus,
            (_, 0) => BellOutcome::PsiPlus,
            (_, _) => BellOutcome::PsiMinus,
        }
    }

    pub fn sign_bit(self) -> u8 {
        match self {
            BellOutcome::PhiPlus | BellOutcome::PsiPlus => 0,
            BellOutcome::PhiMinus | BellOutcome::PsiMinus => 1,
        }
    }

    pub fn parity_bit(self) -> u8 {
        match self {
            BellOutcome::PhiPlus | BellOutcome::PhiMinus => 0,
            BellOutcome::PsiPlus | BellOutcome::PsiMinus => 1,
        }
    }

    /// Amplitudes over `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub fn amplitudes(self) -> [Amplitude; 4] {
        let h = FRAC_1_SQRT_2;
        let z = 0.0;
        let (v00, v01, v10, v11) = match self {
            BellOutcome::PhiPlus => (h, z, z, h),
            BellOutcome::PhiMinus => (h, z, z, -h),
            BellOutcome::PsiPlus => (z, h, h, z),
            BellOutcome::PsiMinus => (z, h, -h, z),
        };
        [v00, v01, v10, v11].map(|re| Amplitude::new(re, 0.0))
    }

    pub fn ket(self) -> &'static str {
        match self {
            BellOutcome::PhiPlus => "phi+",
            BellOutcome::PhiMinus => "phi-",
            BellOutcome::PsiPlus => "psi+",
            BellOutcome::PsiMinus => "psi-",
        }
    }
}

/// Pauli operator applied by the noise channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PauliLabel {
    I,
    X,
    Y,
    Z,
}

impl PauliLabel {
    pub fn matrix(self) -> [[Amplitude; 2]; 2] {
        let o = Amplitude::new(0.0, 0.0);
        let l = Amplitude::new(1.0, 0.0);
        let i = Amplitude::new(0.0, 1.0);
        match self {
            PauliLabel::I => [[l, o], [o, l]],
            PauliLabel::X => [[o, l], [l, o]],
            PauliLabel::Y => [[o, -i], [i, o]],
            PauliLabel::Z => [[l, o], [o, -l]],
        }
    }
}
