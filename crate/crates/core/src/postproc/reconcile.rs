use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::{BitString, PostprocError};

/// Bits disclosed by the final equality check.
pub const VERIFICATION_BITS: u64 = 64;

const MERSENNE_61: u64 = (1 << 61) - 1;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ReconciliationReport {
    /// Sharer-side positions flipped, in the order they were found.
    pub corrected_positions: Vec<usize>,
    /// Block and binary-search parities disclosed over both passes.
    pub parity_bits_leaked: u64,
    pub verification_bits_leaked: u64,
    pub verification_ok: bool,
}

impl ReconciliationReport {
    pub fn total_leaked(&self) -> u64 {
        self.parity_bits_leaked + self.verification_bits_leaked
    }
}

fn parity(key: &BitString, positions: &[usize]) -> u8 {
    positions.iter().fold(0, |acc, &p| acc ^ key.get(p))
}

fn mul_mod(a: u64, b: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(MERSENNE_61)) as u64
}

/// Polynomial hash over GF(2^61 − 1) of the key's 32-bit chunks, evaluated
/// at `point`.
pub fn polynomial_hash(key: &BitString, point: u64) -> u64 {
    let mut acc = 0u64;
    for chunk in key.as_slice().chunks(32) {
        let word = chunk.iter().fold(0u64, |w, &b| (w << 1) | u64::from(b));
        acc = (mul_mod(acc, point) + word) % MERSENNE_61;
    }
    // Length is folded in so keys differing only by trailing zeros differ.
    (mul_mod(acc, point) + key.len() as u64) % MERSENNE_61
}

/// Binary search inside a block whose parities differ; flips and returns the
/// erroneous position.
fn locate(alice: &BitString, sharer: &mut BitString, block: &[usize], report: &mut ReconciliationReport) -> usize {
    let mut window = block;
    while window.len() > 1 {
        let (left, right) = window.split_at(window.len() / 2);
        report.parity_bits_leaked += 1;
        window = if parity(alice, left) != parity(sharer, left) {
            left
        } else {
            right
        };
    }
    sharer.flip(window[0]);
    report.corrected_positions.push(window[0]);
    window[0]
}

/// Block layout of one pass, with a reverse map from position to block.
struct Layout {
    blocks: Vec<Vec<usize>>,
    owner: Vec<usize>,
}

impl Layout {
    fn new(order: &[usize], block_size: usize) -> Self {
        let blocks: Vec<Vec<usize>> = order.chunks(block_size).map(<[usize]>::to_vec).collect();
        let mut owner = vec![0; order.len()];
        for (b, block) in blocks.iter().enumerate() {
            for &p in block {
                owner[p] = b;
            }
        }
        Layout { blocks, owner }
    }
}

/// Runs pass `current`: disclose each block parity and correct mismatches.
/// A flip toggles the parity of its enclosing block in every disclosed
/// layout, so those blocks are revisited until all disclosed parities agree.
fn pass(
    alice: &BitString,
    sharer: &mut BitString,
    layouts: &[Layout],
    current: usize,
    report: &mut ReconciliationReport,
) {
    for (index, block) in layouts[current].blocks.iter().enumerate() {
        report.parity_bits_leaked += 1;
        if parity(alice, block) == parity(sharer, block) {
            continue;
        }
        let mut pending = vec![locate(alice, sharer, block, report)];
        while let Some(flipped) = pending.pop() {
            for (l, layout) in layouts[..=current].iter().enumerate() {
                let b = layout.owner[flipped];
                if l == current && b > index {
                    continue;
                }
                let enclosing = &layout.blocks[b];
                if parity(alice, enclosing) != parity(sharer, enclosing) {
                    pending.push(locate(alice, sharer, enclosing, report));
                }
            }
        }
    }
}

/// Two-pass block-parity reconciliation of `sharer_key` toward `alice_key`.
/// The second pass runs over a public random permutation and backtracks into
/// first-pass blocks whose parity its corrections disturb.
pub fn reconcile<R: Rng + ?Sized>(
    alice_key: &BitString,
    sharer_key: &BitString,
    block_size: usize,
    rng: &mut R,
) -> Result<(BitString, ReconciliationReport), PostprocError> {
    if alice_key.len() != sharer_key.len() {
        return Err(PostprocError::LengthMismatch(alice_key.len(), sharer_key.len()));
    }
    if block_size == 0 {
        return Err(PostprocError::InvalidBlockSize);
    }
    let mut corrected = sharer_key.clone();
    let mut report = ReconciliationReport::default();

    let mut order: Vec<usize> = (0..alice_key.len()).collect();
    let first = Layout::new(&order, block_size);
    order.shuffle(rng);
    let layouts = [first, Layout::new(&order, block_size)];
    for current in 0..layouts.len() {
        pass(alice_key, &mut corrected, &layouts, current, &mut report);
    }

    let point = rng.random_range(2..MERSENNE_61);
    report.verification_bits_leaked = VERIFICATION_BITS;
    report.verification_ok = polynomial_hash(alice_key, point) == polynomial_hash(&corrected, point);
    Ok((corrected, report))
}

/// Block size tuned to the estimated error rate, about 0.73 / qber, capped
/// at 64 since the Z-basis estimate can undercount X-basis key errors.
pub fn default_block_size(qber: f64) -> usize {
    let q = qber.max(1e-3);
    ((0.73 / q).round() as usize).clamp(4, 64)
}
