//! Hash-preimage proof of work gating group joins.

use rand::RngCore;

use crate::crypto::hash::{hash, leading_zero_bits, Digest};

pub const DEFAULT_POW_DIFFICULTY: u32 = 16;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PowPuzzle {
    pub challenge: Digest,
    /// Required leading zero bits.
    pub difficulty: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PowSolution {
    pub nonce: [u8; 8],
}

impl PowPuzzle {
    pub fn random<R: RngCore + ?Sized>(difficulty: u32, rng: &mut R) -> Self {
        let mut challenge = [0u8; 32];
        rng.fill_bytes(&mut challenge);
        Self {
            challenge,
            difficulty,
        }
    }
}

fn pow_hash(puzzle: &PowPuzzle, nonce: &[u8; 8]) -> Digest {
    let mut input = [0u8; 40];
    input[..32].copy_from_slice(&puzzle.challenge);
    input[32..].copy_from_slice(nonce);
    hash(b"pow", &input)
}

/// Sequential search from nonce 0. Returns the solution and the number of
/// hash evaluations spent.
pub fn pow_solve_counted(puzzle: &PowPuzzle) -> (PowSolution, u64) {
    for n in 0u64.. {
        let nonce = n.to_be_bytes();
        if leading_zero_bits(&pow_hash(puzzle, &nonce)) >= puzzle.difficulty {
            return (PowSolution { nonce }, n + 1);
        }
    }
    unreachable!("nonce space exhausted")
}

pub fn pow_solve(puzzle: &PowPuzzle) -> PowSolution {
    pow_solve_counted(puzzle).0
}

pub fn pow_verify(puzzle: &PowPuzzle, solution: &PowSolution) -> bool {
    leading_zero_bits(&pow_hash(puzzle, &solution.nonce)) >= puzzle.difficulty
}
