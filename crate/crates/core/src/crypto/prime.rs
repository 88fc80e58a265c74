//! Probabilistic primality and prime generation for RSA moduli and safe primes.

use std::sync::OnceLock;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngCore;

const SIEVE_LIMIT: u32 = 4096;

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = SIEVE_LIMIT as usize;
        let mut composite = vec![false; n + 1];
        let mut out = Vec::new();
        for i in 2..=n {
            if !composite[i] {
                out.push(i as u32);
                let mut j = i * i;
                while j <= n {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        out
    })
}

fn trial_division(n: &BigUint) -> Option<bool> {
    if let Some(small) = n.to_u64() {
        if small < 2 {
            return Some(false);
        }
        if small <= SIEVE_LIMIT as u64 {
            return Some(small_primes().binary_search(&(small as u32)).is_ok());
        }
    }
    for &p in small_primes() {
        if (n % p).is_zero() {
            return Some(false);
        }
    }
    None
}

fn miller_rabin_round(n: &BigUint, n_minus_1: &BigUint, d: &BigUint, s: u64, a: &BigUint) -> bool {
    let mut x = a.modpow(d, n);
    if x.is_one() || &x == n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if &x == n_minus_1 {
            return true;
        }
        if x.is_one() {
            return false;
        }
    }
    false
}

fn decompose(n: &BigUint) -> (BigUint, BigUint, u64) {
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    (n_minus_1, d, s)
}

/// Miller-Rabin with `rounds` random bases, after trial division.
pub fn is_probable_prime<R: RngCore + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    if let Some(answer) = trial_division(n) {
        return answer;
    }
    let (n_minus_1, d, s) = decompose(n);
    let two = BigUint::from(2u32);
    (0..rounds).all(|_| {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        miller_rabin_round(n, &n_minus_1, &d, s, &a)
    })
}

/// Miller-Rabin with the first 32 primes as fixed bases. Used to validate
/// externally supplied parameters without needing an rng.
pub fn is_prime_fixed_bases(n: &BigUint) -> bool {
    if let Some(answer) = trial_division(n) {
        return answer;
    }
    let (n_minus_1, d, s) = decompose(n);
    small_primes()
        .iter()
        .take(32)
        .all(|&a| miller_rabin_round(n, &n_minus_1, &d, s, &BigUint::from(a)))
}

fn sieve_offsets(start: &BigUint) -> Vec<u32> {
    small_primes()
        .iter()
        .map(|&p| (start % p).to_u32().unwrap())
        .collect()
}

/// Random prime of exactly `bits` bits with the top two bits set, so the
/// product of two such primes has exactly `2 * bits` bits.
pub fn random_prime<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    assert!(bits >= 16, "prime too small");
    loop {
        let mut start = rng.gen_biguint(bits);
        start.set_bit(bits - 1, true);
        start.set_bit(bits - 2, true);
        start.set_bit(0, true);
        let residues = sieve_offsets(&start);
        // Walk odd candidates start, start+2, ... while they stay within `bits`.
        for delta in (0u32..1 << 16).step_by(2) {
            let clean = small_primes()
                .iter()
                .zip(&residues)
                .all(|(&p, &r)| (r + delta) % p != 0);
            if !clean {
                continue;
            }
            let candidate = &start + delta;
            if candidate.bits() != bits {
                break;
            }
            if is_probable_prime(&candidate, 20, rng) {
                return candidate;
            }
        }
    }
}

/// Random safe prime `p = 2q + 1` with `p` exactly `bits` bits. Returns `(p, q)`.
pub fn random_safe_prime<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> (BigUint, BigUint) {
    assert!(bits >= 5, "safe prime too small");
    if bits <= 16 {
        // Small widths: enumerate, since the sieve below assumes large candidates.
        loop {
            let q = rng.gen_biguint_range(
                &(BigUint::one() << (bits - 2)),
                &(BigUint::one() << (bits - 1)),
            );
            let p: BigUint = (&q << 1) + 1u32;
            if p.bits() == bits && is_probable_prime(&q, 20, rng) && is_probable_prime(&p, 20, rng)
            {
                return (p, q);
            }
        }
    }
    let q_bits = bits - 1;
    loop {
        let mut start = rng.gen_biguint(q_bits);
        start.set_bit(q_bits - 1, true);
        start.set_bit(0, true);
        let residues = sieve_offsets(&start);
        for delta in (0u32..1 << 20).step_by(2) {
            // Reject if q or 2q+1 has a small factor.
            let clean = small_primes().iter().zip(&residues).all(|(&p, &r)| {
                let rq = (r as u64 + delta as u64) % p as u64;
                rq != 0 && !(2 * rq + 1).is_multiple_of(p as u64)
            });
            if !clean {
                continue;
            }
            let q = &start + delta;
            if q.bits() != q_bits {
                break;
            }
            if !is_probable_prime(&q, 1, rng) {
                continue;
            }
            let p: BigUint = (&q << 1) + 1u32;
            if is_probable_prime(&p, 20, rng) && is_probable_prime(&q, 20, rng) {
                return (p, q);
            }
        }
    }
}

/// Extended Euclid inverse; `None` when `gcd(a, m) != 1`.
pub fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    if m.is_zero() {
        return None;
    }
    let a = a % m;
    if a.gcd(m) != BigUint::one() {
        return None;
    }
    a.modinv(m)
}
