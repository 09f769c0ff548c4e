//! Anonymous group file sharing.
//!
//! The enclave keeps one symmetric key per user and the reader/writer sets
//! of every group. Writing a file draws a fresh file access key `fk`; the
//! enclave envelopes `fk` once per reader, and stored objects carry no
//! reader identities, only AEAD fragments (optionally with salted labels).
//! Uploads are signed by the enclave so readers can tell that an authorized
//! writer produced them.
//!
//! Revocation is lazy: removing a reader affects envelopes created later.

pub mod acl;
pub mod envelope;

use std::fmt;

use aes::cipher::{KeyIvInit, StreamCipher};
use aes_gcm::aead::{Aead, KeyInit};
use aes_gcm::{Aes256Gcm, Nonce};
use ed25519_dalek::{Signature, Signer, Verifier, VerifyingKey};
use hmac::{Hmac, Mac};
use rand::seq::SliceRandom;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha224, Sha256};

use crate::enclave::{Enclave, GroupAcl};
use crate::error::{Error, Result};
use crate::store::ObjectStore;
use crate::wire::Reader;

pub use envelope::{AskyEnvelope, Fragment, Label, Variant};
use envelope::{IV_BYTES, KEY_CT_BYTES, NONCE_BYTES};

type Aes256Ctr = ctr::Ctr128BE<aes::Aes256>;

const OBJECT_MAGIC: &[u8; 5] = b"ASKO1";
pub const FILE_IV_BYTES: usize = 16;
pub const SIGNATURE_BYTES: usize = 64;

macro_rules! secret_key {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, PartialEq, Eq)]
        pub struct $name(pub [u8; 32]);

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(concat!(stringify!($name), "(<redacted>)"))
            }
        }
    };
}

secret_key!(
    /// A user's symmetric key, handed out once at registration.
    UserSecret
);
secret_key!(
    /// Per-file symmetric key, fresh for every write.
    FileAccessKey
);

impl FileAccessKey {
    pub fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        let mut k = [0u8; 32];
        rng.fill_bytes(&mut k);
        FileAccessKey(k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Reader,
    Writer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Add,
    Remove,
}

/// Registers `user_id` and returns its key. The key is also persisted,
/// encrypted, as an ACL document in `docs`.
pub fn create_user(enclave: &Enclave, docs: &dyn ObjectStore, user_id: &str) -> Result<UserSecret> {
    if user_id.is_empty() {
        return Err(Error::InvalidParameter("empty user id".into()));
    }
    let mut tables = enclave.tables_mut();
    if tables.user_keys.contains_key(user_id) {
        return Err(Error::UserExists(user_id.to_string()));
    }
    let key: [u8; 32] = enclave.random_bytes();
    acl::persist_user(enclave, docs, user_id, &key)?;
    tables.user_keys.insert(user_id.to_string(), key);
    Ok(UserSecret(key))
}

pub fn set_membership(
    enclave: &Enclave,
    docs: &dyn ObjectStore,
    group_id: &str,
    user_id: &str,
    role: Role,
    action: Action,
) -> Result<()> {
    if group_id.is_empty() {
        return Err(Error::InvalidParameter("empty group id".into()));
    }
    let mut tables = enclave.tables_mut();
    if !tables.user_keys.contains_key(user_id) {
        return Err(Error::UnknownUser(user_id.to_string()));
    }
    let mut acl = tables.groups.get(group_id).cloned().unwrap_or_default();
    let set = match role {
        Role::Reader => &mut acl.readers,
        Role::Writer => &mut acl.writers,
    };
    match action {
        Action::Add => set.insert(user_id.to_string()),
        Action::Remove => set.remove(user_id),
    };
    acl::persist_group(enclave, docs, group_id, &acl)?;
    tables.groups.insert(group_id.to_string(), acl);
    Ok(())
}

pub fn group_acl(enclave: &Enclave, group_id: &str) -> Option<GroupAcl> {
    enclave.tables().groups.get(group_id).cloned()
}

fn label_for(key: &[u8; 32], nonce: &[u8; NONCE_BYTES]) -> Label {
    let mut h = Sha224::new();
    h.update(key);
    h.update(nonce);
    h.finalize().into()
}

fn envelope(enclave: &Enclave, writer_id: &str, group_id: &str, fk: &FileAccessKey, variant: Variant) -> AskyEnvelope {
    let nonce = match variant {
        Variant::Indexed => Some(enclave.random_bytes::<NONCE_BYTES>()),
        Variant::Standard => None,
    };
    let mut env = AskyEnvelope {
        variant,
        nonce,
        fragments: Vec::new(),
    };
    let tables = enclave.tables();
    let Some(acl) = tables.groups.get(group_id) else {
        return env;
    };
    if !acl.writers.contains(writer_id) {
        return env;
    }
    for reader in &acl.readers {
        let Some(key) = tables.user_keys.get(reader) else { continue };
        let iv: [u8; IV_BYTES] = enclave.random_bytes();
        let sealed = Aes256Gcm::new(key.into())
            .encrypt(Nonce::from_slice(&iv), fk.0.as_slice())
            .expect("AES-GCM encryption of in-memory data");
        let (ct, tag) = sealed.split_at(KEY_CT_BYTES);
        env.fragments.push(Fragment {
            label: nonce.map(|n| label_for(key, &n)),
            iv,
            key_ct: ct.try_into().expect("fixed-size key"),
            tag: tag.try_into().expect("16-byte tag"),
        });
    }
    drop(tables);
    match variant {
        Variant::Standard => enclave.with_rng(|rng| env.fragments.shuffle(rng)),
        Variant::Indexed => env.fragments.sort_by_key(|f| f.label),
    }
    env
}

/// One fragment per reader of `group_id` in random order, or an empty
/// envelope if `writer_id` may not write to the group.
pub fn key_enveloping(enclave: &Enclave, writer_id: &str, group_id: &str, fk: &FileAccessKey) -> AskyEnvelope {
    envelope(enclave, writer_id, group_id, fk, Variant::Standard)
}

/// Like [`key_enveloping`], with each fragment labelled
/// `SHA-224(user key || nonce)` and fragments sorted by label.
pub fn key_enveloping_indexed(enclave: &Enclave, writer_id: &str, group_id: &str, fk: &FileAccessKey) -> AskyEnvelope {
    envelope(enclave, writer_id, group_id, fk, Variant::Indexed)
}

/// What the store holds: the package and the enclave's signature over it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoredObject {
    pub signature: [u8; SIGNATURE_BYTES],
    pub package: Vec<u8>,
}

impl StoredObject {
    /// `"ASKO1" || len(sig) (u16 BE) || sig || package`
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(OBJECT_MAGIC.len() + 2 + SIGNATURE_BYTES + self.package.len());
        out.extend_from_slice(OBJECT_MAGIC);
        out.extend_from_slice(&(SIGNATURE_BYTES as u16).to_be_bytes());
        out.extend_from_slice(&self.signature);
        out.extend_from_slice(&self.package);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "stored object");
        r.magic(OBJECT_MAGIC)?;
        let sig_len = r.u16()? as usize;
        if sig_len != SIGNATURE_BYTES {
            return Err(Error::Encoding(format!("stored object: signature length {sig_len}")));
        }
        let signature = r.array()?;
        Ok(StoredObject {
            signature,
            package: r.rest().to_vec(),
        })
    }

    pub fn verify(&self, pk_ta: &VerifyingKey) -> Result<()> {
        let sig = Signature::from_bytes(&self.signature);
        pk_ta
            .verify(&package_digest(&self.package), &sig)
            .map_err(|_| Error::Integrity)
    }
}

pub fn package_digest(package: &[u8]) -> [u8; 32] {
    Sha256::digest(package).into()
}

fn require_writer(enclave: &Enclave, writer_id: &str, group_id: &str) -> Result<()> {
    let allowed = enclave
        .tables()
        .groups
        .get(group_id)
        .is_some_and(|acl| acl.writers.contains(writer_id));
    if !allowed {
        return Err(Error::Permission(format!("{writer_id:?} may not write to {group_id:?}")));
    }
    Ok(())
}

/// Signs `package` and uploads it if `writer_id` may write to `group_id`.
pub fn proxy_write(
    enclave: &Enclave,
    object_id: &str,
    writer_id: &str,
    group_id: &str,
    package: &[u8],
    store: &dyn ObjectStore,
) -> Result<()> {
    require_writer(enclave, writer_id, group_id)?;
    let signature = enclave.signing_key().sign(&package_digest(package)).to_bytes();
    let obj = StoredObject {
        signature,
        package: package.to_vec(),
    };
    store.put(object_id, &obj.to_bytes())
}

/// Short-lived upload capability: the enclave's signature over the package
/// digest plus `HMAC(storage credential, object id || expiry)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WriteToken {
    pub object_id: String,
    pub expiry: u64,
    pub signature: [u8; SIGNATURE_BYTES],
    pub mac: [u8; 32],
}

fn token_mac(credential: &[u8; 32], object_id: &str, expiry: u64) -> Hmac<Sha256> {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(credential).expect("HMAC accepts any key length");
    mac.update(object_id.as_bytes());
    mac.update(&[0]);
    mac.update(&expiry.to_be_bytes());
    mac
}

impl fmt::Display for WriteToken {
    /// `expiry.signature.mac.object_id`, binary fields in hex.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{}.{}.{}",
            self.expiry,
            hex::encode(self.signature),
            hex::encode(self.mac),
            self.object_id
        )
    }
}

impl std::str::FromStr for WriteToken {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Encoding("malformed write token".into());
        let mut parts = s.splitn(4, '.');
        let mut next = || parts.next().ok_or_else(bad);
        let expiry = next()?.parse().map_err(|_| bad())?;
        let mut signature = [0u8; SIGNATURE_BYTES];
        hex::decode_to_slice(next()?, &mut signature).map_err(|_| bad())?;
        let mut mac = [0u8; 32];
        hex::decode_to_slice(next()?, &mut mac).map_err(|_| bad())?;
        let object_id = next()?.to_string();
        Ok(WriteToken {
            object_id,
            expiry,
            signature,
            mac,
        })
    }
}

pub fn issue_write_token(
    enclave: &Enclave,
    object_id: &str,
    writer_id: &str,
    group_id: &str,
    digest: &[u8; 32],
    expiry: u64,
) -> Result<WriteToken> {
    require_writer(enclave, writer_id, group_id)?;
    let signature = enclave.signing_key().sign(digest).to_bytes();
    let mac = token_mac(&enclave.storage_credential(), object_id, expiry)
        .finalize()
        .into_bytes()
        .into();
    Ok(WriteToken {
        object_id: object_id.to_string(),
        expiry,
        signature,
        mac,
    })
}

/// Storage-side check of write tokens in front of an [`ObjectStore`].
pub struct TokenGate<'a> {
    store: &'a dyn ObjectStore,
    credential: [u8; 32],
}

impl<'a> TokenGate<'a> {
    pub fn new(store: &'a dyn ObjectStore, credential: [u8; 32]) -> Self {
        TokenGate { store, credential }
    }

    /// Stores `package` under the token's object id if the MAC checks out
    /// and the token has not expired at time `now`.
    pub fn upload(&self, token: &WriteToken, package: &[u8], now: u64) -> Result<()> {
        token_mac(&self.credential, &token.object_id, token.expiry)
            .verify_slice(&token.mac)
            .map_err(|_| Error::Permission("invalid write token".into()))?;
        if now > token.expiry {
            return Err(Error::Permission("write token expired".into()));
        }
        let obj = StoredObject {
            signature: token.signature,
            package: package.to_vec(),
        };
        self.store.put(&token.object_id, &obj.to_bytes())
    }
}

fn encrypt_file<R: RngCore + CryptoRng + ?Sized>(fk: &FileAccessKey, plaintext: &[u8], rng: &mut R) -> Vec<u8> {
    let mut iv = [0u8; FILE_IV_BYTES];
    rng.fill_bytes(&mut iv);
    let mut out = Vec::with_capacity(FILE_IV_BYTES + plaintext.len());
    out.extend_from_slice(&iv);
    out.extend_from_slice(plaintext);
    Aes256Ctr::new(&fk.0.into(), &iv.into()).apply_keystream(&mut out[FILE_IV_BYTES..]);
    out
}

fn decrypt_file(fk: &FileAccessKey, cipher: &[u8]) -> Result<Vec<u8>> {
    if cipher.len() < FILE_IV_BYTES {
        return Err(Error::Encoding("file cipher shorter than its IV".into()));
    }
    let (iv, body) = cipher.split_at(FILE_IV_BYTES);
    let iv: [u8; FILE_IV_BYTES] = iv.try_into().expect("split at IV length");
    let mut out = body.to_vec();
    Aes256Ctr::new(&fk.0.into(), &iv.into()).apply_keystream(&mut out);
    Ok(out)
}

/// Client side of a write: fresh `fk`, envelope from the enclave, and the
/// package `envelope || E(fk, plaintext)`.
fn build_package<R: RngCore + CryptoRng + ?Sized>(
    enclave: &Enclave,
    writer_id: &str,
    group_id: &str,
    plaintext: &[u8],
    variant: Variant,
    rng: &mut R,
) -> Vec<u8> {
    let fk = FileAccessKey::random(rng);
    let env = envelope(enclave, writer_id, group_id, &fk, variant);
    let mut package = Vec::with_capacity(env.encoded_len() + FILE_IV_BYTES + plaintext.len());
    env.write(&mut package);
    package.extend_from_slice(&encrypt_file(&fk, plaintext, rng));
    package
}

#[allow(clippy::too_many_arguments)]
pub fn write_to_group<R: RngCore + CryptoRng + ?Sized>(
    enclave: &Enclave,
    store: &dyn ObjectStore,
    object_id: &str,
    writer_id: &str,
    group_id: &str,
    plaintext: &[u8],
    variant: Variant,
    rng: &mut R,
) -> Result<()> {
    require_writer(enclave, writer_id, group_id)?;
    let package = build_package(enclave, writer_id, group_id, plaintext, variant, rng);
    proxy_write(enclave, object_id, writer_id, group_id, &package, store)
}

/// Write path that uploads directly through a [`TokenGate`] instead of
/// sending the bytes through the enclave.
#[allow(clippy::too_many_arguments)]
pub fn write_to_group_with_token<R: RngCore + CryptoRng + ?Sized>(
    enclave: &Enclave,
    gate: &TokenGate<'_>,
    object_id: &str,
    writer_id: &str,
    group_id: &str,
    plaintext: &[u8],
    variant: Variant,
    expiry: u64,
    now: u64,
    rng: &mut R,
) -> Result<()> {
    require_writer(enclave, writer_id, group_id)?;
    let package = build_package(enclave, writer_id, group_id, plaintext, variant, rng);
    let token = issue_write_token(enclave, object_id, writer_id, group_id, &package_digest(&package), expiry)?;
    gate.upload(&token, &package, now)
}

/// Work done by one read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReadStats {
    pub aead_trials: u32,
    /// Ordering comparisons made by the label search.
    pub label_comparisons: u32,
}

/// Downloads `object_id`, checks the signature, and splits the package.
fn fetch(store: &dyn ObjectStore, object_id: &str, pk_ta: &VerifyingKey) -> Result<(AskyEnvelope, Vec<u8>)> {
    let obj = StoredObject::from_bytes(&store.get(object_id)?).map_err(|_| Error::Integrity)?;
    obj.verify(pk_ta)?;
    let mut r = Reader::new(&obj.package, "package");
    let env = AskyEnvelope::read(&mut r)?;
    let cipher = r.rest().to_vec();
    Ok((env, cipher))
}

fn try_fragment(key: &UserSecret, f: &Fragment, stats: &mut ReadStats) -> Option<FileAccessKey> {
    stats.aead_trials += 1;
    let fk = Aes256Gcm::new(&key.0.into())
        .decrypt(Nonce::from_slice(&f.iv), f.sealed().as_slice())
        .ok()?;
    Some(FileAccessKey(fk.try_into().ok()?))
}

fn linear_search(env: &AskyEnvelope, key: &UserSecret, stats: &mut ReadStats) -> Result<FileAccessKey> {
    env.fragments
        .iter()
        .find_map(|f| try_fragment(key, f, stats))
        .ok_or(Error::AccessDenied)
}

/// Tries every fragment in order until one opens under `key`.
pub fn read_file_with_stats(
    store: &dyn ObjectStore,
    object_id: &str,
    key: &UserSecret,
    pk_ta: &VerifyingKey,
) -> Result<(Vec<u8>, ReadStats)> {
    let (env, cipher) = fetch(store, object_id, pk_ta)?;
    let mut stats = ReadStats::default();
    let fk = linear_search(&env, key, &mut stats)?;
    Ok((decrypt_file(&fk, &cipher)?, stats))
}

/// The file access key of `object_id` as seen by the holder of `key`,
/// e.g. for caching it client-side.
pub fn recover_file_key(
    store: &dyn ObjectStore,
    object_id: &str,
    key: &UserSecret,
    pk_ta: &VerifyingKey,
) -> Result<FileAccessKey> {
    let (env, _) = fetch(store, object_id, pk_ta)?;
    linear_search(&env, key, &mut ReadStats::default())
}

pub fn read_file(store: &dyn ObjectStore, object_id: &str, key: &UserSecret, pk_ta: &VerifyingKey) -> Result<Vec<u8>> {
    read_file_with_stats(store, object_id, key, pk_ta).map(|(p, _)| p)
}

/// Recomputes the reader's label, binary-searches for it and opens that
/// single fragment. On a label collision the preceding equal label is tried
/// as well.
pub fn read_file_indexed_with_stats(
    store: &dyn ObjectStore,
    object_id: &str,
    key: &UserSecret,
    pk_ta: &VerifyingKey,
) -> Result<(Vec<u8>, ReadStats)> {
    let (env, cipher) = fetch(store, object_id, pk_ta)?;
    let nonce = match (env.variant, env.nonce) {
        (Variant::Indexed, Some(n)) => n,
        _ => return Err(Error::InvalidParameter("object was written without labels".into())),
    };
    let target = label_for(&key.0, &nonce);
    let (found, label_comparisons) = env.search_label(&target);
    let mut stats = ReadStats {
        aead_trials: 0,
        label_comparisons,
    };
    let mut i = found.ok_or(Error::AccessDenied)?;
    loop {
        let f = &env.fragments[i];
        if f.label != Some(target) {
            return Err(Error::AccessDenied);
        }
        if let Some(fk) = try_fragment(key, f, &mut stats) {
            return Ok((decrypt_file(&fk, &cipher)?, stats));
        }
        if i == 0 {
            return Err(Error::AccessDenied);
        }
        i -= 1;
    }
}

pub fn read_file_indexed(
    store: &dyn ObjectStore,
    object_id: &str,
    key: &UserSecret,
    pk_ta: &VerifyingKey,
) -> Result<Vec<u8>> {
    read_file_indexed_with_stats(store, object_id, key, pk_ta).map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::PairingCtx;
    use crate::store::MemoryStore;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::sync::Arc;

    struct World {
        enclave: Enclave,
        docs: MemoryStore,
        store: MemoryStore,
        rng: ChaCha20Rng,
    }

    fn world() -> World {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let enclave = Enclave::init(Arc::new(PairingCtx::new()), 1, &mut rng).unwrap();
        World {
            enclave,
            docs: MemoryStore::new(),
            store: MemoryStore::new(),
            rng,
        }
    }

    impl World {
        fn user(&self, id: &str, group: &str, roles: &[Role]) -> UserSecret {
            let k = create_user(&self.enclave, &self.docs, id).unwrap();
            for r in roles {
                set_membership(&self.enclave, &self.docs, group, id, *r, Action::Add).unwrap();
            }
            k
        }

        fn pk(&self) -> VerifyingKey {
            self.enclave.signing_public_key()
        }
    }

    #[test]
    fn user_registration() {
        let w = world();
        let a = create_user(&w.enclave, &w.docs, "a").unwrap();
        let b = create_user(&w.enclave, &w.docs, "b").unwrap();
        assert_ne!(a, b);
        assert!(matches!(create_user(&w.enclave, &w.docs, "a"), Err(Error::UserExists(_))));
        assert!(matches!(
            set_membership(&w.enclave, &w.docs, "g", "zed", Role::Reader, Action::Add),
            Err(Error::UnknownUser(_))
        ));
        assert_eq!(format!("{a:?}"), "UserSecret(<redacted>)");
    }

    #[test]
    fn standard_round_trip_and_refusal() {
        let mut w = world();
        let writer = w.user("w", "g", &[Role::Writer]);
        let r1 = w.user("r1", "g", &[Role::Reader]);
        let r2 = w.user("r2", "g", &[Role::Reader, Role::Writer]);
        write_to_group(&w.enclave, &w.store, "g/f1", "w", "g", b"hello", Variant::Standard, &mut w.rng).unwrap();
        let pk = w.pk();
        assert_eq!(read_file(&w.store, "g/f1", &r1, &pk).unwrap(), b"hello");
        assert_eq!(read_file(&w.store, "g/f1", &r2, &pk).unwrap(), b"hello");
        // writers without the reader role cannot read
        assert!(matches!(read_file(&w.store, "g/f1", &writer, &pk), Err(Error::AccessDenied)));

        let fk = FileAccessKey([0; 32]);
        assert!(key_enveloping(&w.enclave, "r1", "g", &fk).is_empty());
        assert!(key_enveloping(&w.enclave, "w", "nope", &fk).is_empty());
        let err = write_to_group(&w.enclave, &w.store, "g/f2", "r1", "g", b"x", Variant::Standard, &mut w.rng);
        assert!(matches!(err, Err(Error::Permission(_))));
        assert_eq!(w.store.list("").unwrap(), vec!["g/f1"]);
    }

    #[test]
    fn indexed_round_trip() {
        let mut w = world();
        w.user("w", "g", &[Role::Writer]);
        let readers: Vec<_> = (0..8).map(|i| w.user(&format!("r{i}"), "g", &[Role::Reader])).collect();
        write_to_group(&w.enclave, &w.store, "f", "w", "g", b"data", Variant::Indexed, &mut w.rng).unwrap();
        let pk = w.pk();
        for r in &readers {
            let (p, stats) = read_file_indexed_with_stats(&w.store, "f", r, &pk).unwrap();
            assert_eq!(p, b"data");
            assert_eq!(stats.aead_trials, 1);
            assert!(stats.label_comparisons <= 3);
            assert_eq!(read_file(&w.store, "f", r, &pk).unwrap(), p);
        }
        let outsider = create_user(&w.enclave, &w.docs, "o").unwrap();
        assert!(matches!(read_file_indexed(&w.store, "f", &outsider, &pk), Err(Error::AccessDenied)));
    }

    #[test]
    fn tampering_is_caught_before_any_trial() {
        let mut w = world();
        w.user("w", "g", &[Role::Writer]);
        let r = w.user("r", "g", &[Role::Reader]);
        write_to_group(&w.enclave, &w.store, "f", "w", "g", b"payload", Variant::Standard, &mut w.rng).unwrap();
        let good = w.store.get("f").unwrap();
        for i in [0, 10, good.len() - 1] {
            let mut bad = good.clone();
            bad[i] ^= 1;
            w.store.put("f", &bad).unwrap();
            assert!(matches!(read_file_with_stats(&w.store, "f", &r, &w.pk()), Err(Error::Integrity)));
        }
    }

    #[test]
    fn token_writes() {
        let mut w = world();
        w.user("w", "g", &[Role::Writer]);
        let r = w.user("r", "g", &[Role::Reader]);
        let gate = TokenGate::new(&w.store, w.enclave.storage_credential());
        write_to_group_with_token(&w.enclave, &gate, "f", "w", "g", b"t", Variant::Indexed, 100, 50, &mut w.rng)
            .unwrap();
        assert_eq!(read_file_indexed(&w.store, "f", &r, &w.pk()).unwrap(), b"t");

        let digest = package_digest(b"pkg");
        let token = issue_write_token(&w.enclave, "f2", "w", "g", &digest, 10).unwrap();
        let parsed: WriteToken = token.to_string().parse().unwrap();
        assert_eq!(parsed, token);
        assert!(matches!(gate.upload(&token, b"pkg", 11), Err(Error::Permission(_))));
        let mut forged = token.clone();
        forged.expiry = 1000;
        assert!(matches!(gate.upload(&forged, b"pkg", 11), Err(Error::Permission(_))));
        let mut moved = token.clone();
        moved.object_id = "f3".into();
        assert!(gate.upload(&moved, b"pkg", 0).is_err());
        gate.upload(&token, b"pkg", 10).unwrap();
        assert!(issue_write_token(&w.enclave, "f2", "r", "g", &digest, 10).is_err());
    }

    #[test]
    fn acl_documents_round_trip_and_detect_tampering() {
        let w = world();
        let key = w.user("alice", "team", &[Role::Reader]);
        match acl::load_user(&w.enclave, &w.docs, "alice").unwrap() {
            acl::AclRecord::User { user_id, key: k } => {
                assert_eq!(user_id, "alice");
                assert_eq!(k, key.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        match acl::load_group(&w.enclave, &w.docs, "team").unwrap() {
            acl::AclRecord::Group { readers, writers, .. } => {
                assert!(readers.contains("alice"));
                assert!(writers.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
        let id = acl::group_document_id(&w.enclave, "team");
        let mut bytes = w.docs.get(&id).unwrap();
        let n = bytes.len();
        bytes[n / 2] ^= 4;
        w.docs.put(&id, &bytes).unwrap();
        assert!(matches!(acl::load_group(&w.enclave, &w.docs, "team"), Err(Error::Integrity)));
        for (doc_id, body) in crate::store::dump(&w.docs).unwrap() {
            assert!(!doc_id.contains("alice") && !doc_id.contains("team"));
            assert!(!body.windows(5).any(|s| s == b"alice"));
        }
    }
}
