//! Schnorr subgroup of a safe-prime field: parameters, scalars, elements and
//! fixed-base exponentiation tables.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

use super::hash::{expand, hash, Digest};
use super::prime;
use super::CryptoError;
use crate::encoding::{DecodeError, Decoder, Encoder};

/// Exponent window for registered fixed-base tables.
const WINDOW_BITS: u32 = 6;
/// Wider window for the three generators, which are used most.
const GENERATOR_WINDOW_BITS: u32 = 8;
/// Below this modulus width tables cost more than they save.
const TABLE_MIN_BITS: u64 = 128;
/// Cap on registered non-generator tables (about 0.5 MiB each at 512 bits).
const MAX_EXTRA_BASES: usize = 32;
/// Fiat-Shamir challenges are this wide when `q` is larger.
const CHALLENGE_BITS: u64 = 256;

/// Desk-default 512-bit safe prime. First `p = 2q + 1` with both prime and
/// `q >= expand("fairtor/safe-prime/512")`, searched upward from that seed.
const DESK_P_HEX: &str = "8dc9517e50910c3c4ba653f36112500665ab6a6150728aea4f4f7792bb1aac98f97abd1005dc846e63bae0f61f8a4961df0d38629a61e56983d801be89e1ca0f";
const DESK_SEED: &[u8] = b"fairtor/generators/v1";

/// Exponent reduced modulo the subgroup order `q`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar(pub(crate) BigUint);

impl Scalar {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({:x})", self.0)
    }
}

/// Member of the order-`q` subgroup of `Z_p^*`. Only built through checked
/// constructors and group operations, so membership is a type invariant.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GroupElement(pub(crate) BigUint);

impl GroupElement {
    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement({:x})", self.0)
    }
}

/// A base with a precomputed radix-2^w power table.
#[derive(Clone)]
pub struct FixedBase {
    base: GroupElement,
    window: u32,
    table: Option<Arc<Vec<Vec<BigUint>>>>,
}

impl fmt::Debug for FixedBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FixedBase")
            .field("base", &self.base)
            .field("table", &self.table.is_some())
            .finish()
    }
}

impl PartialEq for FixedBase {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
    }
}

impl Eq for FixedBase {}

impl FixedBase {
    fn build(p: &BigUint, q: &BigUint, base: GroupElement, window: u32) -> Self {
        if p.bits() < TABLE_MIN_BITS {
            return Self {
                base,
                window,
                table: None,
            };
        }
        let digits = q.bits().div_ceil(window as u64) as usize;
        let width = 1usize << window;
        let mut rows = Vec::with_capacity(digits);
        let mut cur = base.0.clone();
        for _ in 0..digits {
            let mut row = Vec::with_capacity(width);
            row.push(BigUint::one());
            row.push(cur.clone());
            for d in 2..width {
                let next = (&row[d - 1] * &cur) % p;
                row.push(next);
            }
            cur = (&row[width - 1] * &cur) % p;
            rows.push(row);
        }
        Self {
            base,
            window,
            table: Some(Arc::new(rows)),
        }
    }

    pub fn new(params: &GroupParams, base: GroupElement) -> Self {
        Self::build(&params.p, &params.q, base, WINDOW_BITS)
    }

    pub fn element(&self) -> &GroupElement {
        &self.base
    }

    pub fn pow(&self, params: &GroupParams, e: &Scalar) -> GroupElement {
        match &self.table {
            None => GroupElement(self.base.0.modpow(&e.0, &params.p)),
            Some(rows) => {
                let mut acc: Option<BigUint> = None;
                for (row, digit) in rows.iter().zip(e.0.to_radix_le(1 << self.window)) {
                    if digit == 0 {
                        continue;
                    }
                    let factor = &row[digit as usize];
                    acc = Some(match acc {
                        None => factor.clone(),
                        Some(a) => (a * factor) % &params.p,
                    });
                }
                GroupElement(acc.unwrap_or_else(BigUint::one))
            }
        }
    }
}

/// Group description: safe prime `p = 2q + 1` and three independent
/// generators of the order-`q` subgroup (`g` for keys, `h` for commitments
/// and member tags, `g_op` for the opener's ElGamal key).
#[derive(Clone, Debug)]
pub struct GroupParams {
    p: BigUint,
    q: BigUint,
    g: FixedBase,
    h: FixedBase,
    g_op: FixedBase,
    elem_len: usize,
    scalar_len: usize,
    id: Digest,
    challenge_modulus: BigUint,
    extra: Arc<RwLock<HashMap<BigUint, FixedBase>>>,
}

impl PartialEq for GroupParams {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for GroupParams {}

impl GroupParams {
    /// Validates and assembles explicit parameters.
    pub fn new(
        p: BigUint,
        q: BigUint,
        g: BigUint,
        h: BigUint,
        g_op: BigUint,
    ) -> Result<Self, CryptoError> {
        if p != (&q << 1) + 1u32 {
            return Err(CryptoError::InvalidParams("p is not 2q + 1"));
        }
        if !prime::is_prime_fixed_bases(&q) || !prime::is_prime_fixed_bases(&p) {
            return Err(CryptoError::InvalidParams("p or q is not prime"));
        }
        for gen in [&g, &h, &g_op] {
            if gen.is_one() || !is_qr(gen, &p) {
                return Err(CryptoError::InvalidParams(
                    "generator outside the order-q subgroup",
                ));
            }
        }
        if g == h || g == g_op || h == g_op {
            return Err(CryptoError::InvalidParams("generators must be distinct"));
        }
        Ok(Self::assemble(p, q, g, h, g_op))
    }

    fn assemble(p: BigUint, q: BigUint, g: BigUint, h: BigUint, g_op: BigUint) -> Self {
        let elem_len = p.bits().div_ceil(8) as usize;
        let scalar_len = q.bits().div_ceil(8) as usize;
        let mut enc = Encoder::new();
        enc.uint_var(&p)
            .uint_var(&q)
            .uint(&g, elem_len)
            .uint(&h, elem_len)
            .uint(&g_op, elem_len);
        let id = hash(b"group-params", enc.as_slice());
        let mk = |v: BigUint| FixedBase::build(&p, &q, GroupElement(v), GENERATOR_WINDOW_BITS);
        let challenge_modulus = if q.bits() > CHALLENGE_BITS {
            BigUint::one() << CHALLENGE_BITS
        } else {
            q.clone()
        };
        Self {
            g: mk(g),
            h: mk(h),
            g_op: mk(g_op),
            p,
            q,
            elem_len,
            scalar_len,
            id,
            challenge_modulus,
            extra: Arc::default(),
        }
    }

    /// Derives `g`, `h`, `g_op` from `seed` by hashing to the group, so no
    /// discrete-log relation between them is known to anyone.
    pub fn from_seed(p: BigUint, q: BigUint, seed: &[u8]) -> Result<Self, CryptoError> {
        if p != (&q << 1) + 1u32
            || !prime::is_prime_fixed_bases(&q)
            || !prime::is_prime_fixed_bases(&p)
        {
            return Err(CryptoError::InvalidParams("p is not a safe prime"));
        }
        let g = hash_to_group(&p, seed, b"g");
        let h = hash_to_group(&p, seed, b"h");
        let g_op = hash_to_group(&p, seed, b"g_op");
        Self::new(p, q, g, h, g_op)
    }

    /// Fresh safe prime of `bits` bits with seed-derived generators.
    pub fn generate<R: RngCore + ?Sized>(
        bits: u64,
        seed: &[u8],
        rng: &mut R,
    ) -> Result<Self, CryptoError> {
        let (p, q) = prime::random_safe_prime(bits, rng);
        Self::from_seed(p, q, seed)
    }

    /// The shared 512-bit desk parameters.
    pub fn desk() -> Arc<Self> {
        static DESK: OnceLock<Arc<GroupParams>> = OnceLock::new();
        DESK.get_or_init(|| {
            let p = BigUint::parse_bytes(DESK_P_HEX.as_bytes(), 16).expect("valid constant");
            let q = &p >> 1;
            Arc::new(Self::from_seed(p, q, DESK_SEED).expect("desk parameters are valid"))
        })
        .clone()
    }

    /// `p = 23, q = 11, g = 4, h = 9, g_op = 3`. Only for tests and worked
    /// examples; every discrete log is trivially known here.
    pub fn toy() -> Arc<Self> {
        static TOY: OnceLock<Arc<GroupParams>> = OnceLock::new();
        TOY.get_or_init(|| {
            Arc::new(
                Self::new(
                    23u32.into(),
                    11u32.into(),
                    4u32.into(),
                    9u32.into(),
                    3u32.into(),
                )
                .expect("toy parameters are valid"),
            )
        })
        .clone()
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn g(&self) -> &GroupElement {
        self.g.element()
    }

    pub fn h(&self) -> &GroupElement {
        self.h.element()
    }

    pub fn g_op(&self) -> &GroupElement {
        self.g_op.element()
    }

    /// Digest of the canonical parameter encoding.
    pub fn id(&self) -> &Digest {
        &self.id
    }

    pub fn element_len(&self) -> usize {
        self.elem_len
    }

    pub fn scalar_len(&self) -> usize {
        self.scalar_len
    }

    // ---- scalars ----

    pub fn scalar(&self, v: BigUint) -> Scalar {
        Scalar(v % &self.q)
    }

    pub fn scalar_u64(&self, v: u64) -> Scalar {
        self.scalar(BigUint::from(v))
    }

    pub fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        Scalar(rng.gen_biguint_below(&self.q))
    }

    /// Uniform in `[1, q)`.
    pub fn random_nonzero_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        Scalar(rng.gen_biguint_range(&BigUint::one(), &self.q))
    }

    pub fn hash_to_scalar(&self, label: &[u8], data: &[u8]) -> Scalar {
        self.scalar(BigUint::from_bytes_be(&hash(label, data)))
    }

    /// Size of the Fiat-Shamir challenge space: `2^256`, or `q` for groups
    /// too small to hold that.
    pub fn challenge_modulus(&self) -> &BigUint {
        &self.challenge_modulus
    }

    pub fn hash_to_challenge(&self, label: &[u8], data: &[u8]) -> Scalar {
        Scalar(BigUint::from_bytes_be(&hash(label, data)) % &self.challenge_modulus)
    }

    pub fn random_challenge<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        Scalar(rng.gen_biguint_below(&self.challenge_modulus))
    }

    pub fn is_challenge(&self, c: &Scalar) -> bool {
        c.0 < self.challenge_modulus
    }

    /// Addition in the challenge space.
    pub fn cadd(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &b.0) % &self.challenge_modulus)
    }

    /// Subtraction in the challenge space.
    pub fn csub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &self.challenge_modulus - &b.0) % &self.challenge_modulus)
    }

    pub fn sadd(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &b.0) % &self.q)
    }

    pub fn ssub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &self.q - &b.0) % &self.q)
    }

    pub fn smul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 * &b.0) % &self.q)
    }

    pub fn sneg(&self, a: &Scalar) -> Scalar {
        Scalar((&self.q - &a.0) % &self.q)
    }

    // ---- elements ----

    pub fn identity(&self) -> GroupElement {
        GroupElement(BigUint::one())
    }

    /// Subgroup membership. For a safe prime the order-`q` subgroup is the
    /// set of quadratic residues, so the Jacobi symbol decides it.
    pub fn is_member(&self, v: &BigUint) -> bool {
        !v.is_zero() && v < &self.p && is_qr(v, &self.p)
    }

    pub fn element(&self, v: BigUint) -> Result<GroupElement, CryptoError> {
        if self.is_member(&v) {
            Ok(GroupElement(v))
        } else {
            Err(CryptoError::Subgroup)
        }
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement((&a.0 * &b.0) % &self.p)
    }

    pub fn inv(&self, a: &GroupElement) -> GroupElement {
        GroupElement(a.0.modinv(&self.p).expect("group elements are invertible"))
    }

    pub fn div(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.mul(a, &self.inv(b))
    }

    /// `base^e`, using a precomputed table when `base` is a generator or a
    /// registered long-lived base.
    pub fn pow(&self, base: &GroupElement, e: &Scalar) -> GroupElement {
        for fixed in [&self.g, &self.h, &self.g_op] {
            if fixed.element() == base {
                return fixed.pow(self, e);
            }
        }
        if let Some(fixed) = self.extra.read().expect("table lock").get(&base.0) {
            return fixed.pow(self, e);
        }
        GroupElement(base.0.modpow(&e.0, &self.p))
    }

    /// Precomputes a table for a long-lived base such as an opener key, so
    /// later `pow` calls on it are fast. The cache is cleared when full.
    pub fn register_fixed_base(&self, base: &GroupElement) {
        if self.p.bits() < TABLE_MIN_BITS
            || self.extra.read().expect("table lock").contains_key(&base.0)
        {
            return;
        }
        let table = FixedBase::build(&self.p, &self.q, base.clone(), WINDOW_BITS);
        let mut extra = self.extra.write().expect("table lock");
        if extra.len() >= MAX_EXTRA_BASES {
            extra.clear();
        }
        extra.insert(base.0.clone(), table);
    }

    /// `base^(-e)`.
    pub fn pow_neg(&self, base: &GroupElement, e: &Scalar) -> GroupElement {
        self.pow(&self.inv(base), e)
    }

    pub fn g_pow(&self, e: &Scalar) -> GroupElement {
        self.g.pow(self, e)
    }

    pub fn h_pow(&self, e: &Scalar) -> GroupElement {
        self.h.pow(self, e)
    }

    pub fn gop_pow(&self, e: &Scalar) -> GroupElement {
        self.g_op.pow(self, e)
    }

    // ---- canonical encoding ----

    pub fn put_element(&self, enc: &mut Encoder, e: &GroupElement) {
        enc.uint(&e.0, self.elem_len);
    }

    pub fn put_scalar(&self, enc: &mut Encoder, s: &Scalar) {
        enc.uint(&s.0, self.scalar_len);
    }

    pub fn get_element(&self, dec: &mut Decoder<'_>) -> Result<GroupElement, DecodeError> {
        let v = dec.uint(self.elem_len)?;
        if self.is_member(&v) {
            Ok(GroupElement(v))
        } else {
            Err(DecodeError::NotInSubgroup)
        }
    }

    pub fn get_scalar(&self, dec: &mut Decoder<'_>) -> Result<Scalar, DecodeError> {
        let v = dec.uint(self.scalar_len)?;
        if v < self.q {
            Ok(Scalar(v))
        } else {
            Err(DecodeError::ScalarRange)
        }
    }

    pub fn element_bytes(&self, e: &GroupElement) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.put_element(&mut enc, e);
        enc.finish()
    }

    pub fn encode(&self, enc: &mut Encoder) {
        enc.uint_var(&self.p).uint_var(&self.q);
        for gen in [self.g(), self.h(), self.g_op()] {
            self.put_element(enc, gen);
        }
    }

    pub fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let [p, q, g, h, g_op] = Self::decode_values(dec)?;
        Self::new(p, q, g, h, g_op).map_err(|_| DecodeError::Invalid("group parameters"))
    }

    /// Like `decode`, but returns the shared desk instance (tables and all)
    /// when the encoding matches it, skipping validation.
    pub fn decode_shared(dec: &mut Decoder<'_>) -> Result<Arc<Self>, DecodeError> {
        let [p, q, g, h, g_op] = Self::decode_values(dec)?;
        let desk = Self::desk();
        if desk.p == p && desk.q == q && desk.g().0 == g && desk.h().0 == h && desk.g_op().0 == g_op
        {
            return Ok(desk);
        }
        Self::new(p, q, g, h, g_op)
            .map(Arc::new)
            .map_err(|_| DecodeError::Invalid("group parameters"))
    }

    fn decode_values(dec: &mut Decoder<'_>) -> Result<[BigUint; 5], DecodeError> {
        let p = dec.uint_var()?;
        let q = dec.uint_var()?;
        let width = p.bits().div_ceil(8) as usize;
        Ok([p, q, dec.uint(width)?, dec.uint(width)?, dec.uint(width)?])
    }
}

fn hash_to_group(p: &BigUint, seed: &[u8], tag: &[u8]) -> BigUint {
    let width = p.bits().div_ceil(8) as usize + 16;
    for ctr in 0u32.. {
        let mut input = Vec::with_capacity(seed.len() + tag.len() + 12);
        input.extend_from_slice(&(seed.len() as u32).to_be_bytes());
        input.extend_from_slice(seed);
        input.extend_from_slice(tag);
        input.extend_from_slice(&ctr.to_be_bytes());
        let x = BigUint::from_bytes_be(&expand(b"hash-to-group", &input, width)) % p;
        let y = (&x * &x) % p;
        if !y.is_zero() && !y.is_one() {
            return y;
        }
    }
    unreachable!()
}

fn low_bits(v: &BigUint) -> u64 {
    v.iter_u64_digits().next().unwrap_or(0)
}

/// Jacobi symbol `(a / n) == 1` for odd `n`.
fn is_qr(a: &BigUint, n: &BigUint) -> bool {
    let mut a = a % n;
    let mut n = n.clone();
    let mut sign = 1i32;
    while !a.is_zero() {
        let tz = a.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            a >>= tz;
            let n_mod_8 = low_bits(&n) & 7;
            if tz % 2 == 1 && (n_mod_8 == 3 || n_mod_8 == 5) {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if low_bits(&a) & 3 == 3 && low_bits(&n) & 3 == 3 {
            sign = -sign;
        }
        a = a.mod_floor(&n);
    }
    n.is_one() && sign == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn jacobi_matches_order_q_at_toy_size() {
        let params = GroupParams::toy();
        for v in 1u32..23 {
            let by_pow = BigUint::from(v)
                .modpow(&BigUint::from(11u32), &BigUint::from(23u32))
                .is_one();
            assert_eq!(params.is_member(&BigUint::from(v)), by_pow, "v = {v}");
        }
        assert!(!params.is_member(&BigUint::zero()));
        assert!(!params.is_member(&BigUint::from(23u32)));
    }

    #[test]
    fn jacobi_matches_order_q_on_desk_samples() {
        let params = GroupParams::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..40 {
            let v = rng.gen_biguint_below(params.p());
            let by_pow = !v.is_zero() && v.modpow(params.q(), params.p()).is_one();
            assert_eq!(params.is_member(&v), by_pow);
        }
    }

    #[test]
    fn desk_params_valid() {
        let params = GroupParams::desk();
        assert_eq!(params.p().bits(), 512);
        assert_eq!(params.p(), &((params.q() << 1) + 1u32));
        for gen in [params.g(), params.h(), params.g_op()] {
            assert!(gen.value().modpow(params.q(), params.p()).is_one());
            assert!(!gen.value().is_one());
        }
    }

    #[test]
    fn fixed_base_matches_modpow() {
        let params = GroupParams::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..20 {
            let e = params.random_scalar(&mut rng);
            let direct = params.g().value().modpow(e.value(), params.p());
            assert_eq!(params.g_pow(&e).value(), &direct);
            let direct = params.h().value().modpow(e.value(), params.p());
            assert_eq!(params.h_pow(&e).value(), &direct);
        }
        assert!(params.g_pow(&params.scalar_u64(0)).value().is_one());
        let last = params.ssub(&params.scalar_u64(0), &params.scalar_u64(1));
        assert_eq!(
            params.mul(&params.g_pow(&last), params.g()),
            params.identity()
        );
    }

    #[test]
    fn registered_base_matches_modpow() {
        let params = GroupParams::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let base = params.g_pow(&params.random_scalar(&mut rng));
        let e = params.random_scalar(&mut rng);
        let before = params.pow(&base, &e);
        params.register_fixed_base(&base);
        assert_eq!(params.pow(&base, &e), before);
        assert_eq!(before.value(), &base.value().modpow(e.value(), params.p()));
    }

    #[test]
    fn challenge_space() {
        let desk = GroupParams::desk();
        assert_eq!(desk.challenge_modulus().bits(), 257);
        assert!(desk.challenge_modulus() < desk.q());
        let toy = GroupParams::toy();
        assert_eq!(toy.challenge_modulus(), toy.q());
        let c = toy.csub(&toy.scalar_u64(3), &toy.scalar_u64(5));
        assert_eq!(c, toy.scalar_u64(9));
        assert_eq!(toy.cadd(&c, &toy.scalar_u64(5)), toy.scalar_u64(3));
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        assert!((0..50).all(|_| desk.is_challenge(&desk.random_challenge(&mut rng))));
    }

    #[test]
    fn toy_powers() {
        let params = GroupParams::toy();
        assert_eq!(
            params.g_pow(&params.scalar_u64(5)).value(),
            &BigUint::from(12u32)
        );
        assert_eq!(params.scalar_u64(13), params.scalar_u64(2));
        assert_eq!(params.sneg(&params.scalar_u64(0)), params.scalar_u64(0));
    }

    #[test]
    fn invalid_params_rejected() {
        // 4 is in the subgroup, 5 is not (5 is a non-residue mod 23).
        assert!(GroupParams::new(
            23u32.into(),
            11u32.into(),
            4u32.into(),
            5u32.into(),
            3u32.into()
        )
        .is_err());
        assert!(GroupParams::new(
            29u32.into(),
            14u32.into(),
            4u32.into(),
            9u32.into(),
            3u32.into()
        )
        .is_err());
        assert!(GroupParams::new(
            23u32.into(),
            11u32.into(),
            4u32.into(),
            4u32.into(),
            3u32.into()
        )
        .is_err());
    }

    #[test]
    fn generated_params_roundtrip() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let params = GroupParams::generate(64, b"test", &mut rng).unwrap();
        let mut enc = Encoder::new();
        params.encode(&mut enc);
        let bytes = enc.finish();
        let mut dec = Decoder::new(&bytes);
        let back = GroupParams::decode(&mut dec).unwrap();
        dec.finish().unwrap();
        assert_eq!(back, params);
        let shared = GroupParams::decode_shared(&mut Decoder::new(&bytes)).unwrap();
        assert_eq!(*shared, params);
    }

    #[test]
    fn decode_shared_reuses_desk_and_validates_others() {
        let desk = GroupParams::desk();
        let mut enc = Encoder::new();
        desk.encode(&mut enc);
        let bytes = enc.finish();
        let shared = GroupParams::decode_shared(&mut Decoder::new(&bytes)).unwrap();
        assert!(Arc::ptr_eq(&shared, &desk));

        let mut enc = Encoder::new();
        enc.uint_var(&BigUint::from(23u32))
            .uint_var(&BigUint::from(11u32))
            .uint(&BigUint::from(4u32), 1)
            .uint(&BigUint::from(4u32), 1)
            .uint(&BigUint::from(3u32), 1);
        let bytes = enc.finish();
        assert!(GroupParams::decode_shared(&mut Decoder::new(&bytes)).is_err());
    }

    #[test]
    fn decoding_rejects_non_members() {
        let params = GroupParams::toy();
        let mut enc = Encoder::new();
        enc.uint(&BigUint::from(22u32), params.element_len());
        let bytes = enc.finish();
        assert_eq!(
            params.get_element(&mut Decoder::new(&bytes)),
            Err(DecodeError::NotInSubgroup)
        );
    }
}
