//! Identity-based broadcast encryption with master-key shortcuts.
//!
//! A broadcast cipher `{C1, C2, C3}` encapsulates `bk = v^k` for a receiver
//! set `S`:
//!
//! ```text
//! C1 = w^-k,   C3 = h^prod(gamma + H(u)),   C2 = C3^k
//! ```
//!
//! Anyone holding the public key can build the cipher through the full
//! polynomial expansion ([`encrypt_public`], quadratic in `|S|`). Inside the
//! enclave the product is evaluated directly on `gamma` ([`encrypt_master`],
//! linear), and `C3` lets membership changes and rekeying touch a constant
//! number of group elements.

use std::collections::HashSet;
use std::fmt;

use rand::{CryptoRng, RngCore};

use crate::algebra::{
    PairingCtx, Scalar, G1, G1_BYTES, G2, G2_BYTES, Gt, GT_BYTES, SCALAR_BYTES,
};
use crate::error::{Error, Result};
use crate::wire::Reader;

const CIPHER_MAGIC: &[u8; 5] = b"IBBC1";
const PUBKEY_MAGIC: &[u8; 5] = b"IBPK1";

/// Serialized size of every [`BroadcastCipher`], whatever the receiver count.
pub const CIPHER_BYTES: usize = CIPHER_MAGIC.len() + G1_BYTES + 2 * G2_BYTES;

/// `{g, gamma}`. Only ever held by the enclave.
#[derive(Clone)]
pub struct MasterKey {
    pub(crate) g: G1,
    pub(crate) gamma: Scalar,
}

impl MasterKey {
    /// `g || gamma`. Secret material: the enclave only ever seals it.
    pub fn to_bytes(&self) -> [u8; G1_BYTES + SCALAR_BYTES] {
        let mut out = [0u8; G1_BYTES + SCALAR_BYTES];
        out[..G1_BYTES].copy_from_slice(&self.g.to_bytes());
        out[G1_BYTES..].copy_from_slice(&self.gamma.to_bytes());
        out
    }
}

impl fmt::Debug for MasterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MasterKey(<redacted>)")
    }
}

/// `{w, v, h, h^gamma, ..., h^gamma^n}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    w: G1,
    v: Gt,
    h_powers: Vec<G2>,
}

impl PublicKey {
    /// Maximum receiver-set size.
    pub fn n(&self) -> usize {
        self.h_powers.len() - 1
    }

    pub fn w(&self) -> &G1 {
        &self.w
    }

    pub fn v(&self) -> &Gt {
        &self.v
    }

    pub fn h(&self) -> &G2 {
        &self.h_powers[0]
    }

    pub fn h_powers(&self) -> &[G2] {
        &self.h_powers
    }

    /// Number of components: `w`, `v` and the `n + 1` powers of `h`.
    pub fn component_count(&self) -> usize {
        2 + self.h_powers.len()
    }

    /// Checks the key against the generator `g` it was built from:
    /// `v == e(g, h)` and `e(w, h^gamma^i) == e(g, h^gamma^(i+1))` for all `i`.
    pub fn is_consistent_with(&self, ctx: &PairingCtx, g: &G1) -> bool {
        self.h_powers.windows(2).all(|pair| {
            ctx.pairing(&self.w, &pair[0]) == ctx.pairing(g, &pair[1])
        }) && ctx.pairing(g, self.h()) == self.v
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            PUBKEY_MAGIC.len() + 4 + G1_BYTES + GT_BYTES + self.h_powers.len() * G2_BYTES,
        );
        out.extend_from_slice(PUBKEY_MAGIC);
        out.extend_from_slice(&(self.n() as u32).to_be_bytes());
        out.extend_from_slice(&self.w.to_bytes());
        out.extend_from_slice(&self.v.to_bytes());
        for p in &self.h_powers {
            out.extend_from_slice(&p.to_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "public key");
        r.magic(PUBKEY_MAGIC)?;
        let n = r.u32()? as usize;
        if n == 0 {
            return Err(Error::Encoding("public key: n must be at least 1".into()));
        }
        let w = G1::from_bytes(r.take(G1_BYTES)?)?;
        let v = Gt::from_bytes(r.take(GT_BYTES)?)?;
        let mut h_powers = Vec::with_capacity(n + 1);
        for _ in 0..=n {
            h_powers.push(G2::from_bytes(r.take(G2_BYTES)?)?);
        }
        r.finish()?;
        Ok(PublicKey { w, v, h_powers })
    }
}

/// `g^(1 / (gamma + H(u)))` for one identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserKey {
    user_id: String,
    sk: G1,
}

impl UserKey {
    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn sk(&self) -> &G1 {
        &self.sk
    }

    /// Checks `e(sk, h^gamma) * e(sk, h)^H(u) == v`, i.e.
    /// `e(sk, h)^(gamma + H(u)) == e(g, h)`.
    pub fn verify(&self, ctx: &PairingCtx, pk: &PublicKey) -> bool {
        let hu = ctx.hash_to_scalar(self.user_id.as_bytes());
        let lhs = ctx.pairing(&self.sk, &pk.h_powers[1])
            * ctx.exp_gt(&ctx.pairing(&self.sk, pk.h()), &hu);
        lhs == pk.v
    }
}

/// `{C1, C2, C3}`; constant size regardless of the receiver count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BroadcastCipher {
    pub c1: G1,
    pub c2: G2,
    pub c3: G2,
}

impl BroadcastCipher {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(CIPHER_BYTES);
        out.extend_from_slice(CIPHER_MAGIC);
        out.extend_from_slice(&self.c1.to_bytes());
        out.extend_from_slice(&self.c2.to_bytes());
        out.extend_from_slice(&self.c3.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "broadcast cipher");
        let cipher = Self::read(&mut r)?;
        r.finish()?;
        Ok(cipher)
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self> {
        r.magic(CIPHER_MAGIC)?;
        Ok(BroadcastCipher {
            c1: G1::from_bytes(r.take(G1_BYTES)?)?,
            c2: G2::from_bytes(r.take(G2_BYTES)?)?,
            c3: G2::from_bytes(r.take(G2_BYTES)?)?,
        })
    }
}

/// `bk = v^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BroadcastKey(pub Gt);

impl BroadcastKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.to_bytes()
    }
}

fn check_receivers(receivers: &[&str], capacity: usize) -> Result<()> {
    if receivers.is_empty() {
        return Err(Error::InvalidParameter("receiver set is empty".into()));
    }
    if receivers.len() > capacity {
        return Err(Error::Capacity {
            size: receivers.len(),
            capacity,
        });
    }
    let mut seen = HashSet::with_capacity(receivers.len());
    for id in receivers {
        if !seen.insert(*id) {
            return Err(Error::DuplicateId(id.to_string()));
        }
    }
    Ok(())
}

/// Hashes every receiver, rejecting distinct ids with equal hashes.
fn receiver_hashes(ctx: &PairingCtx, receivers: &[&str]) -> Result<Vec<Scalar>> {
    let hashes: Vec<Scalar> = receivers
        .iter()
        .map(|id| ctx.hash_to_scalar(id.as_bytes()))
        .collect();
    let mut seen = HashSet::with_capacity(hashes.len());
    for (id, h) in receivers.iter().zip(&hashes) {
        if !seen.insert(*h) {
            return Err(Error::Degenerate(id.to_string()));
        }
    }
    Ok(hashes)
}

fn check_k(k: &Scalar) -> Result<()> {
    if k.is_zero() {
        return Err(Error::InvalidParameter("k must be non-zero".into()));
    }
    Ok(())
}

/// Generates the master secret and the public key for receiver sets of up to
/// `n` identities. Costs `n + 1` exponentiations in G2.
pub fn setup<R: RngCore + CryptoRng + ?Sized>(
    ctx: &PairingCtx,
    n: usize,
    rng: &mut R,
) -> Result<(MasterKey, PublicKey)> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let g = ctx.exp_g1(&ctx.g1_generator(), &Scalar::random_nonzero(rng));
    let h = ctx.exp_g2(&ctx.g2_generator(), &Scalar::random_nonzero(rng));
    let gamma = Scalar::random_nonzero(rng);

    let w = ctx.exp_g1(&g, &gamma);
    let v = ctx.pairing(&g, &h);
    let mut h_powers = Vec::with_capacity(n + 1);
    h_powers.push(h);
    for i in 0..n {
        let next = ctx.exp_g2(&h_powers[i], &gamma);
        h_powers.push(next);
    }
    Ok((MasterKey { g, gamma }, PublicKey { w, v, h_powers }))
}

/// One addition, one inversion, one G1 exponentiation.
pub fn extract_user_key(ctx: &PairingCtx, mk: &MasterKey, user_id: &str) -> Result<UserKey> {
    let hu = ctx.hash_to_scalar(user_id.as_bytes());
    let exponent = ctx
        .sinv(ctx.sadd(mk.gamma, hu))
        .ok_or_else(|| Error::Degenerate(user_id.to_string()))?;
    Ok(UserKey {
        user_id: user_id.to_string(),
        sk: ctx.exp_g1(&mk.g, &exponent),
    })
}

fn finish_cipher(
    ctx: &PairingCtx,
    pk: &PublicKey,
    c3: G2,
    k: &Scalar,
) -> (BroadcastKey, BroadcastCipher) {
    let c2 = ctx.exp_g2(&c3, k);
    let c1 = ctx.exp_g1(&pk.w, &-*k);
    let bk = BroadcastKey(ctx.exp_gt(&pk.v, k));
    (bk, BroadcastCipher { c1, c2, c3 })
}

/// Public-key encryption through the coefficient expansion of
/// `prod (X + H(u))` over all powers `h^gamma^0 .. h^gamma^|S|`.
pub fn encrypt_public(
    ctx: &PairingCtx,
    pk: &PublicKey,
    receivers: &[&str],
    k: &Scalar,
) -> Result<(BroadcastKey, BroadcastCipher)> {
    check_receivers(receivers, pk.n())?;
    check_k(k)?;
    let hashes = receiver_hashes(ctx, receivers)?;
    let poly = ctx.expand_linear_factors(&hashes);
    let c3 = ctx.multi_exp_g2(&pk.h_powers[..poly.coeffs().len()], poly.coeffs())?;
    Ok(finish_cipher(ctx, pk, c3, k))
}

/// Enclave-side encryption: `|S|` scalar multiplications for the running
/// product of `gamma + H(u)`, then two G2 exponentiations.
pub fn encrypt_master(
    ctx: &PairingCtx,
    mk: &MasterKey,
    pk: &PublicKey,
    receivers: &[&str],
    k: &Scalar,
) -> Result<(BroadcastKey, BroadcastCipher)> {
    check_receivers(receivers, pk.n())?;
    check_k(k)?;
    let hashes = receiver_hashes(ctx, receivers)?;
    let mut product = Scalar::one();
    for (id, hu) in receivers.iter().zip(&hashes) {
        let factor = ctx.sadd(mk.gamma, *hu);
        if factor.is_zero() {
            return Err(Error::Degenerate(id.to_string()));
        }
        product = ctx.smul(product, factor);
    }
    let c3 = ctx.exp_g2(pk.h(), &product);
    Ok(finish_cipher(ctx, pk, c3, k))
}

/// Recovers `bk` for `user_id`, a member of `receivers`.
///
/// With `prod_{j != i} (X + H(u_j)) = sum_t c_t X^t` and `Delta = c_0`:
///
/// ```text
/// h^p = prod_{t >= 1} (h^gamma^(t-1))^c_t
/// bk  = (e(C1, h^p) * e(sk, C2))^(1 / Delta)
/// ```
///
/// The expansion makes this quadratic in `|S|`. A key for the wrong identity
/// yields a different group element, not an error.
pub fn decrypt(
    ctx: &PairingCtx,
    pk: &PublicKey,
    receivers: &[&str],
    user_id: &str,
    uk: &UserKey,
    cipher: &BroadcastCipher,
) -> Result<BroadcastKey> {
    check_receivers(receivers, pk.n())?;
    if !receivers.contains(&user_id) {
        return Err(Error::NotMember(user_id.to_string()));
    }
    if uk.user_id != user_id {
        return Err(Error::InvalidParameter(format!(
            "key for {:?} used to decrypt as {user_id:?}",
            uk.user_id
        )));
    }
    let others: Vec<&str> = receivers.iter().copied().filter(|u| *u != user_id).collect();
    let hashes = receiver_hashes(ctx, &others)?;
    let poly = ctx.expand_linear_factors(&hashes);
    let coeffs = poly.coeffs();
    let delta_inv = ctx
        .sinv(coeffs[0])
        .ok_or_else(|| Error::Degenerate(user_id.to_string()))?;
    let hp = ctx.multi_exp_g2(&pk.h_powers[..others.len()], &coeffs[1..])?;
    let blinded = ctx.pairing(&cipher.c1, &hp) * ctx.pairing(&uk.sk, &cipher.c2);
    Ok(BroadcastKey(ctx.exp_gt(&blinded, &delta_inv)))
}

/// `C2 <- C2^(gamma + H(u_a))`, `C3 <- C3^(gamma + H(u_a))`; `bk` unchanged.
pub fn add_user_to_cipher(
    ctx: &PairingCtx,
    mk: &MasterKey,
    cipher: &BroadcastCipher,
    user_id: &str,
) -> Result<BroadcastCipher> {
    let factor = ctx.sadd(mk.gamma, ctx.hash_to_scalar(user_id.as_bytes()));
    if factor.is_zero() {
        return Err(Error::Degenerate(user_id.to_string()));
    }
    Ok(BroadcastCipher {
        c1: cipher.c1,
        c2: ctx.exp_g2(&cipher.c2, &factor),
        c3: ctx.exp_g2(&cipher.c3, &factor),
    })
}

/// Strips `u_r` out of `C3` and re-randomizes under `k_new`.
pub fn remove_user_from_cipher(
    ctx: &PairingCtx,
    mk: &MasterKey,
    pk: &PublicKey,
    cipher: &BroadcastCipher,
    user_id: &str,
    k_new: &Scalar,
) -> Result<(BroadcastKey, BroadcastCipher)> {
    check_k(k_new)?;
    let factor = ctx.sadd(mk.gamma, ctx.hash_to_scalar(user_id.as_bytes()));
    let inverse = ctx
        .sinv(factor)
        .ok_or_else(|| Error::Degenerate(user_id.to_string()))?;
    let c3 = ctx.exp_g2(&cipher.c3, &inverse);
    Ok(finish_cipher(ctx, pk, c3, k_new))
}

/// Fresh `bk` for the same receiver set. Needs only public material.
pub fn rekey_cipher(
    ctx: &PairingCtx,
    pk: &PublicKey,
    cipher: &BroadcastCipher,
    k_new: &Scalar,
) -> Result<(BroadcastKey, BroadcastCipher)> {
    check_k(k_new)?;
    Ok(finish_cipher(ctx, pk, cipher.c3, k_new))
}
