//! Hybrid-encryption baseline: the group key wrapped once per member under
//! that member's public key.
//!
//! Each wrap is X25519 with a fresh ephemeral key, HKDF-SHA256 and
//! AES-256-GCM, so an entry is `eph_pub (32) || iv (12) || ct (32) || tag (16)`.
//! Metadata therefore grows by a fixed amount per member, and removing a
//! member means rewrapping a new key for everyone left.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes256Gcm, Nonce};
use hkdf::Hkdf;
use rand::{CryptoRng, RngCore};
use sha2::Sha256;
use x25519_dalek::{EphemeralSecret, PublicKey, StaticSecret};

use crate::error::{Error, Result};
use crate::groups::{GroupKey, GROUP_KEY_BYTES};
use crate::wire::{put_bytes, put_u32, Reader};

pub use x25519_dalek::PublicKey as HePublicKey;

const META_MAGIC: &[u8; 5] = b"HEGM1";
const KDF_INFO: &[u8] = b"enclave-share he wrap";
pub const ENTRY_BYTES: usize = 32 + 12 + GROUP_KEY_BYTES + 16;
pub const META_HEADER_BYTES: usize = META_MAGIC.len() + 4;

pub struct HeUserKeyPair {
    user_id: String,
    secret: StaticSecret,
    public: PublicKey,
}

impl fmt::Debug for HeUserKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HeUserKeyPair")
            .field("user_id", &self.user_id)
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

impl HeUserKeyPair {
    pub fn generate<R: RngCore + CryptoRng>(user_id: &str, rng: &mut R) -> Self {
        let secret = StaticSecret::random_from_rng(rng);
        let public = PublicKey::from(&secret);
        HeUserKeyPair {
            user_id: user_id.to_string(),
            secret,
            public,
        }
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeEntry {
    pub ephemeral: [u8; 32],
    pub iv: [u8; 12],
    /// Wrapped key followed by the GCM tag.
    pub wrapped: Vec<u8>,
}

impl HeEntry {
    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(ENTRY_BYTES);
        out.extend_from_slice(&self.ephemeral);
        out.extend_from_slice(&self.iv);
        out.extend_from_slice(&self.wrapped);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeGroupMeta {
    pub group_id: String,
    pub entries: BTreeMap<String, HeEntry>,
}

impl HeGroupMeta {
    pub fn member_count(&self) -> usize {
        self.entries.len()
    }

    pub fn contains(&self, user_id: &str) -> bool {
        self.entries.contains_key(user_id)
    }

    /// `"HEGM1" || count || [len || user id || entry]*`. The group id is
    /// implied by where the file is stored.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(META_MAGIC);
        put_u32(&mut out, self.entries.len());
        for (id, e) in &self.entries {
            put_bytes(&mut out, id.as_bytes());
            out.extend_from_slice(&e.to_bytes());
        }
        out
    }

    pub fn from_bytes(group_id: &str, bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "he metadata");
        r.magic(META_MAGIC)?;
        let count = r.u32()? as usize;
        let mut entries = BTreeMap::new();
        for _ in 0..count {
            let len = r.u32()? as usize;
            let id = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::Encoding("he metadata: user id is not UTF-8".into()))?
                .to_string();
            let entry = HeEntry {
                ephemeral: r.array()?,
                iv: r.array()?,
                wrapped: r.take(GROUP_KEY_BYTES + 16)?.to_vec(),
            };
            if entries.insert(id.clone(), entry).is_some() {
                return Err(Error::DuplicateId(id));
            }
        }
        r.finish()?;
        Ok(HeGroupMeta {
            group_id: group_id.to_string(),
            entries,
        })
    }

    pub fn encoded_len(&self) -> usize {
        META_HEADER_BYTES
            + self
                .entries
                .keys()
                .map(|id| 4 + id.len() + ENTRY_BYTES)
                .sum::<usize>()
    }
}

/// Counts wraps and unwraps across calls.
#[derive(Debug, Default)]
pub struct HeCtx {
    wraps: AtomicU64,
    unwraps: AtomicU64,
}

impl HeCtx {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn wraps(&self) -> u64 {
        self.wraps.load(Ordering::Relaxed)
    }

    pub fn unwraps(&self) -> u64 {
        self.unwraps.load(Ordering::Relaxed)
    }
}

fn aad(group_id: &str, user_id: &str) -> Vec<u8> {
    let mut a = Vec::with_capacity(group_id.len() + user_id.len() + 1);
    a.extend_from_slice(group_id.as_bytes());
    a.push(0);
    a.extend_from_slice(user_id.as_bytes());
    a
}

fn kdf(shared: &[u8; 32], ephemeral: &[u8; 32], recipient: &PublicKey) -> [u8; 32] {
    let mut salt = [0u8; 64];
    salt[..32].copy_from_slice(ephemeral);
    salt[32..].copy_from_slice(recipient.as_bytes());
    let mut key = [0u8; 32];
    Hkdf::<Sha256>::new(Some(&salt), shared)
        .expand(KDF_INFO, &mut key)
        .expect("32 bytes is a valid HKDF output length");
    key
}

fn wrap<R: RngCore + CryptoRng>(
    ctx: &HeCtx,
    group_id: &str,
    user_id: &str,
    recipient: &PublicKey,
    gk: &GroupKey,
    rng: &mut R,
) -> HeEntry {
    ctx.wraps.fetch_add(1, Ordering::Relaxed);
    let eph = EphemeralSecret::random_from_rng(&mut *rng);
    let ephemeral = PublicKey::from(&eph).to_bytes();
    let shared = eph.diffie_hellman(recipient);
    let key = kdf(shared.as_bytes(), &ephemeral, recipient);
    let mut iv = [0u8; 12];
    rng.fill_bytes(&mut iv);
    let wrapped = Aes256Gcm::new(&key.into())
        .encrypt(
            Nonce::from_slice(&iv),
            Payload {
                msg: &gk.0,
                aad: &aad(group_id, user_id),
            },
        )
        .expect("AES-GCM encryption of in-memory data");
    HeEntry { ephemeral, iv, wrapped }
}

fn public_of<'a>(directory: &'a BTreeMap<String, PublicKey>, user_id: &str) -> Result<&'a PublicKey> {
    directory
        .get(user_id)
        .ok_or_else(|| Error::UnknownUser(user_id.to_string()))
}

pub fn he_create_group<R: RngCore + CryptoRng>(
    ctx: &HeCtx,
    group_id: &str,
    members: &[(&str, &PublicKey)],
    gk: &GroupKey,
    rng: &mut R,
) -> Result<HeGroupMeta> {
    let mut entries = BTreeMap::new();
    for (id, pk) in members {
        if entries.contains_key(*id) {
            return Err(Error::DuplicateId(id.to_string()));
        }
        entries.insert(id.to_string(), wrap(ctx, group_id, id, pk, gk, rng));
    }
    Ok(HeGroupMeta {
        group_id: group_id.to_string(),
        entries,
    })
}

/// Appends one wrap of the current key.
pub fn he_add_user<R: RngCore + CryptoRng>(
    ctx: &HeCtx,
    meta: &mut HeGroupMeta,
    user_id: &str,
    public: &PublicKey,
    gk: &GroupKey,
    rng: &mut R,
) -> Result<()> {
    if meta.contains(user_id) {
        return Err(Error::AlreadyMember(user_id.to_string()));
    }
    let e = wrap(ctx, &meta.group_id, user_id, public, gk, rng);
    meta.entries.insert(user_id.to_string(), e);
    Ok(())
}

/// Drops `user_id` and rewraps `gk_new` for every remaining member.
pub fn he_remove_user<R: RngCore + CryptoRng>(
    ctx: &HeCtx,
    meta: &mut HeGroupMeta,
    user_id: &str,
    directory: &BTreeMap<String, PublicKey>,
    gk_new: &GroupKey,
    rng: &mut R,
) -> Result<()> {
    if !meta.contains(user_id) {
        return Err(Error::NotMember(user_id.to_string()));
    }
    let mut entries = BTreeMap::new();
    for id in meta.entries.keys().filter(|id| *id != user_id) {
        let pk = public_of(directory, id)?;
        entries.insert(id.clone(), wrap(ctx, &meta.group_id, id, pk, gk_new, rng));
    }
    meta.entries = entries;
    Ok(())
}

pub fn he_unwrap(ctx: &HeCtx, meta: &HeGroupMeta, keys: &HeUserKeyPair) -> Result<GroupKey> {
    let e = meta
        .entries
        .get(&keys.user_id)
        .ok_or_else(|| Error::NotMember(keys.user_id.clone()))?;
    ctx.unwraps.fetch_add(1, Ordering::Relaxed);
    let shared = keys.secret.diffie_hellman(&PublicKey::from(e.ephemeral));
    let key = kdf(shared.as_bytes(), &e.ephemeral, &keys.public);
    let gk = Aes256Gcm::new(&key.into())
        .decrypt(
            Nonce::from_slice(&e.iv),
            Payload {
                msg: &e.wrapped,
                aad: &aad(&meta.group_id, &keys.user_id),
            },
        )
        .map_err(|_| Error::Authentication)?;
    Ok(GroupKey(gk.try_into().map_err(|_| Error::Authentication)?))
}
