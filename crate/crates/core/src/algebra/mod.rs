//! Pairing groups, scalar arithmetic and polynomial expansion over BLS12-381.
//!
//! Every operation whose cost matters for the scheme's complexity claims goes
//! through [`PairingCtx`], which counts it. Plain operator impls on the
//! element types exist for bookkeeping that should stay out of the counts
//! (tests, encodings, one-off group products).

mod counters;
mod poly;

pub use counters::{OpCounters, OpCounts};
pub use poly::Poly;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use ark_bls12_381::{g2::Config as G2Config, Bls12_381, Fr, G1Affine, G1Projective, G2Affine, G2Projective};
use ark_ec::pairing::{Pairing, PairingOutput};
use ark_ec::scalar_mul::glv::GLVConfig;
use ark_ec::{CurveGroup, PrimeGroup, VariableBaseMSM};
use ark_ff::{Field, One, PrimeField, UniformRand, Zero};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha512};

use crate::error::{Error, Result};

pub const CURVE_NAME: &str = "BLS12-381";

/// Width of the big-endian scalar encoding.
pub const SCALAR_BYTES: usize = 32;
/// Compressed G1 point.
pub const G1_BYTES: usize = 48;
/// Compressed G2 point.
pub const G2_BYTES: usize = 96;
/// Canonical Fq12 encoding of a target-group element.
pub const GT_BYTES: usize = 576;

/// Element of the scalar field of prime order `p`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Scalar(pub(crate) Fr);

impl Scalar {
    pub fn zero() -> Self {
        Scalar(Fr::zero())
    }

    pub fn one() -> Self {
        Scalar(Fr::one())
    }

    pub fn from_u64(v: u64) -> Self {
        Scalar(Fr::from(v))
    }

    pub fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        Scalar(Fr::rand(&mut RngAdapter(rng)))
    }

    /// Uniform over the multiplicative group, i.e. never zero.
    pub fn random_nonzero<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let s = Self::random(rng);
            if !s.is_zero() {
                return s;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn inverse(&self) -> Option<Self> {
        self.0.inverse().map(Scalar)
    }

    pub fn pow(&self, e: u64) -> Self {
        Scalar(self.0.pow([e]))
    }

    /// Reduces an arbitrary big-endian byte string modulo `p`.
    pub fn from_be_bytes_mod_order(bytes: &[u8]) -> Self {
        Scalar(Fr::from_be_bytes_mod_order(bytes))
    }

    pub fn to_bytes(&self) -> [u8; SCALAR_BYTES] {
        let mut le = Vec::with_capacity(SCALAR_BYTES);
        self.0
            .serialize_compressed(&mut le)
            .expect("serializing into a Vec cannot fail");
        let mut out = [0u8; SCALAR_BYTES];
        for (dst, src) in out.iter_mut().zip(le.iter().rev()) {
            *dst = *src;
        }
        out
    }

    /// Rejects encodings of values `>= p`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != SCALAR_BYTES {
            return Err(Error::Encoding(format!(
                "scalar must be {SCALAR_BYTES} bytes, got {}",
                bytes.len()
            )));
        }
        let le: Vec<u8> = bytes.iter().rev().copied().collect();
        Fr::deserialize_compressed(&le[..])
            .map(Scalar)
            .map_err(|_| Error::Encoding("scalar is not reduced modulo p".into()))
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar(0x")?;
        for b in self.to_bytes() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 + rhs.0)
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 - rhs.0)
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 * rhs.0)
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

macro_rules! curve_element {
    ($name:ident, $proj:ty, $affine:ty, $len:expr, $label:literal) => {
        #[doc = concat!("Element of ", $label, ", always on-curve and in the prime-order subgroup.")]
        #[derive(Clone, Copy, PartialEq, Eq)]
        pub struct $name(pub(crate) $proj);

        impl $name {
            pub fn identity() -> Self {
                $name(<$proj>::zero())
            }

            pub fn is_identity(&self) -> bool {
                self.0.is_zero()
            }

            pub fn to_bytes(&self) -> [u8; $len] {
                let mut buf = Vec::with_capacity($len);
                self.0
                    .into_affine()
                    .serialize_compressed(&mut buf)
                    .expect("serializing into a Vec cannot fail");
                buf.try_into().expect("compressed point width")
            }

            /// Decodes a compressed point, checking curve and subgroup membership.
            pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
                if bytes.len() != $len {
                    return Err(Error::Encoding(format!(
                        "{} element must be {} bytes, got {}",
                        $label,
                        $len,
                        bytes.len()
                    )));
                }
                <$affine>::deserialize_compressed(bytes)
                    .map(|p| $name(p.into()))
                    .map_err(|e| Error::Encoding(format!("{} element rejected: {e}", $label)))
            }
        }

        impl Mul for $name {
            type Output = $name;
            /// The group operation, written multiplicatively.
            #[allow(clippy::suspicious_arithmetic_impl)]
            fn mul(self, rhs: $name) -> $name {
                $name(self.0 + rhs.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let bytes = self.to_bytes();
                write!(f, "{}(", stringify!($name))?;
                for b in &bytes[..8] {
                    write!(f, "{b:02x}")?;
                }
                write!(f, "..)")
            }
        }
    };
}

curve_element!(G1, G1Projective, G1Affine, G1_BYTES, "G1");
curve_element!(G2, G2Projective, G2Affine, G2_BYTES, "G2");

/// Element of the target group, written multiplicatively.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Gt(pub(crate) PairingOutput<Bls12_381>);

impl Gt {
    pub fn identity() -> Self {
        Gt(PairingOutput::zero())
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(GT_BYTES);
        self.0
            .serialize_compressed(&mut buf)
            .expect("serializing into a Vec cannot fail");
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != GT_BYTES {
            return Err(Error::Encoding(format!(
                "GT element must be {GT_BYTES} bytes, got {}",
                bytes.len()
            )));
        }
        PairingOutput::<Bls12_381>::deserialize_compressed(bytes)
            .map(Gt)
            .map_err(|e| Error::Encoding(format!("GT element rejected: {e}")))
    }
}

impl Mul for Gt {
    type Output = Gt;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Gt) -> Gt {
        Gt(self.0 + rhs.0)
    }
}

impl fmt::Debug for Gt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bytes = self.to_bytes();
        write!(f, "Gt(")?;
        for b in &bytes[..8] {
            write!(f, "{b:02x}")?;
        }
        write!(f, "..)")
    }
}

/// Maps an identity to a non-zero scalar.
///
/// SHA-512 of the input is reduced modulo `p`; a zero result is retried with a
/// one-byte counter appended to the input.
pub fn hash_to_scalar(id: &[u8]) -> Scalar {
    let first = Scalar::from_be_bytes_mod_order(&Sha512::digest(id));
    if !first.is_zero() {
        return first;
    }
    for counter in 1..=u8::MAX {
        let mut h = Sha512::new();
        h.update(id);
        h.update([counter]);
        let s = Scalar::from_be_bytes_mod_order(&h.finalize());
        if !s.is_zero() {
            return s;
        }
    }
    unreachable!("256 consecutive SHA-512 outputs divisible by p")
}

/// Shared pairing context: fixed generators plus operation counters.
///
/// Immutable apart from the atomic counters, so a single context can be shared
/// across threads behind an `Arc`.
pub struct PairingCtx {
    g1_gen: G1,
    g2_gen: G2,
    counters: OpCounters,
}

impl Default for PairingCtx {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for PairingCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PairingCtx")
            .field("curve", &CURVE_NAME)
            .field("counts", &self.counts())
            .finish()
    }
}

impl PairingCtx {
    pub fn new() -> Self {
        PairingCtx {
            g1_gen: G1(G1Projective::generator()),
            g2_gen: G2(G2Projective::generator()),
            counters: OpCounters::default(),
        }
    }

    pub fn curve(&self) -> &'static str {
        CURVE_NAME
    }

    /// Big-endian encoding of the group order `p`.
    pub fn order_be_bytes(&self) -> Vec<u8> {
        use ark_ff::BigInteger;
        Fr::MODULUS.to_bytes_be()
    }

    pub fn g1_generator(&self) -> G1 {
        self.g1_gen
    }

    pub fn g2_generator(&self) -> G2 {
        self.g2_gen
    }

    pub fn counts(&self) -> OpCounts {
        self.counters.snapshot()
    }

    /// Runs `f` and returns its result with the operations it performed on
    /// this context. Concurrent users of the same context will be included.
    pub fn measure<R>(&self, f: impl FnOnce() -> R) -> (R, OpCounts) {
        let before = self.counts();
        let out = f();
        (out, self.counts() - before)
    }

    pub fn hash_to_scalar(&self, id: &[u8]) -> Scalar {
        self.counters.bump_hash();
        hash_to_scalar(id)
    }

    pub fn smul(&self, a: Scalar, b: Scalar) -> Scalar {
        self.counters.bump_scalar_mul(1);
        a * b
    }

    pub fn sadd(&self, a: Scalar, b: Scalar) -> Scalar {
        self.counters.bump_scalar_add(1);
        a + b
    }

    pub fn sinv(&self, a: Scalar) -> Option<Scalar> {
        self.counters.bump_scalar_inv();
        a.inverse()
    }

    /// Coefficients of `prod_i (X + roots[i])`, lowest degree first.
    ///
    /// Costs `r(r+1)/2` multiplications and `r(r-1)/2` additions for `r` roots.
    pub fn expand_linear_factors(&self, roots: &[Scalar]) -> Poly {
        let mut coeffs: Vec<Fr> = Vec::with_capacity(roots.len() + 1);
        coeffs.push(Fr::one());
        let (mut muls, mut adds) = (0u64, 0u64);
        for root in roots {
            let d = coeffs.len() - 1;
            // new[t] = old[t-1] + root * old[t], new[d+1] = old[d] = 1
            coeffs.push(coeffs[d]);
            for t in (1..=d).rev() {
                coeffs[t] = coeffs[t - 1] + root.0 * coeffs[t];
            }
            coeffs[0] *= root.0;
            muls += d as u64 + 1;
            adds += d as u64;
        }
        self.counters.bump_scalar_mul(muls);
        self.counters.bump_scalar_add(adds);
        Poly::from_coeffs(coeffs.into_iter().map(Scalar).collect())
    }

    pub fn exp_g1(&self, base: &G1, e: &Scalar) -> G1 {
        self.counters.bump_g1_exp(1);
        G1(base.0 * e.0)
    }

    pub fn exp_g2(&self, base: &G2, e: &Scalar) -> G2 {
        self.counters.bump_g2_exp(1);
        // the curve config provides the endomorphism but the default `Mul`
        // does not use it
        G2(G2Config::glv_mul_projective(base.0, e.0))
    }

    pub fn exp_gt(&self, base: &Gt, e: &Scalar) -> Gt {
        self.counters.bump_gt_exp(1);
        Gt(base.0 * e.0)
    }

    /// `prod_i bases[i]^exps[i]`, counted as one exponentiation per base.
    pub fn multi_exp_g2(&self, bases: &[G2], exps: &[Scalar]) -> Result<G2> {
        if bases.len() != exps.len() {
            return Err(Error::LengthMismatch {
                bases: bases.len(),
                exponents: exps.len(),
            });
        }
        self.counters.bump_g2_exp(bases.len() as u64);
        if bases.is_empty() {
            return Ok(G2::identity());
        }
        let proj: Vec<G2Projective> = bases.iter().map(|b| b.0).collect();
        let affine = G2Projective::normalize_batch(&proj);
        let scalars: Vec<Fr> = exps.iter().map(|s| s.0).collect();
        let acc = G2Projective::msm(&affine, &scalars)
            .expect("lengths were checked above");
        Ok(G2(acc))
    }

    pub fn pairing(&self, a: &G1, b: &G2) -> Gt {
        self.counters.bump_pairing();
        Gt(Bls12_381::pairing(a.0, b.0))
    }
}

/// Lets `rand` 0.8 generators drive arkworks sampling without requiring `Sized`.
struct RngAdapter<'a, R: ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}
