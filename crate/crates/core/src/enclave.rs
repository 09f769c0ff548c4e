//! In-process stand-in for the trusted execution environment.
//!
//! The [`Enclave`] owns every long-term secret: the broadcast-encryption
//! master key, the sealing key, the anonymous-sharing user keys and ACLs, and
//! the content-signing key. Callers get ciphertexts, MACs, signatures and
//! group elements back, never the secrets themselves.
//!
//! Sealing is AES-256-GCM under a per-instance random key. The key can be
//! written to a file readable only by its owner, which plays the part of the
//! hardware-derived sealing key. Rollback of sealed state is not detected.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes256Gcm, Nonce};
use ed25519_dalek::{SigningKey, VerifyingKey};
use parking_lot::{Mutex, RwLock, RwLockReadGuard, RwLockWriteGuard};
use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{PairingCtx, Scalar, G1, G1_BYTES};
use crate::error::{Error, Result};
use crate::ibbe::{self, MasterKey, PublicKey, UserKey};
use crate::wire::Reader;

const SEAL_MAGIC: &[u8; 6] = b"GSEAL1";
pub const SEAL_NONCE_BYTES: usize = 12;
pub const SEAL_TAG_BYTES: usize = 16;

/// Version string folded into the measurement of this build.
pub const ENCLAVE_VERSION: &str = concat!("enclave-share/", env!("CARGO_PKG_VERSION"));

/// Measurement of an enclave build identified by `version`.
pub fn measurement_for(version: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"enclave-share measurement\0");
    h.update(version.as_bytes());
    h.finalize().into()
}

/// Authenticated ciphertext produced by [`Enclave::seal`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SealedBlob {
    pub nonce: [u8; SEAL_NONCE_BYTES],
    pub ciphertext: Vec<u8>,
    pub tag: [u8; SEAL_TAG_BYTES],
}

impl SealedBlob {
    /// `"GSEAL1" || nonce || len (u32 BE) || ciphertext || tag`
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(SEAL_MAGIC);
        out.extend_from_slice(&self.nonce);
        crate::wire::put_u32(&mut out, self.ciphertext.len());
        out.extend_from_slice(&self.ciphertext);
        out.extend_from_slice(&self.tag);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "sealed blob");
        r.magic(SEAL_MAGIC)?;
        let nonce = r.array()?;
        let len = r.u32()? as usize;
        let ciphertext = r.take(len)?.to_vec();
        let tag = r.array()?;
        r.finish()?;
        Ok(SealedBlob { nonce, ciphertext, tag })
    }

    pub fn encoded_len(&self) -> usize {
        SEAL_MAGIC.len() + SEAL_NONCE_BYTES + 4 + self.ciphertext.len() + SEAL_TAG_BYTES
    }
}

/// Reader and writer sets of one group.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAcl {
    pub readers: BTreeSet<String>,
    pub writers: BTreeSet<String>,
}

/// Key table and ACLs used by the anonymous-sharing service.
#[derive(Clone, Default, Serialize, Deserialize)]
pub(crate) struct AccessTables {
    pub(crate) user_keys: HashMap<String, [u8; 32]>,
    pub(crate) groups: HashMap<String, GroupAcl>,
}

#[derive(Serialize, Deserialize)]
struct PersistedState {
    version: String,
    n: usize,
    g: Vec<u8>,
    gamma: [u8; 32],
    public_key: Vec<u8>,
    signing_key: [u8; 32],
    tables: AccessTables,
    rng_seed: [u8; 32],
}

pub struct Enclave {
    ctx: Arc<PairingCtx>,
    version: String,
    measurement: [u8; 32],
    master_key: MasterKey,
    public_key: PublicKey,
    sealing_key: [u8; 32],
    signing_key: SigningKey,
    rng: Mutex<ChaCha20Rng>,
    tables: RwLock<AccessTables>,
}

impl fmt::Debug for Enclave {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Enclave")
            .field("version", &self.version)
            .field("n", &self.public_key.n())
            .finish_non_exhaustive()
    }
}

impl Enclave {
    /// Creates and provisions an enclave for partitions of up to `n` members.
    /// All internal randomness is drawn from a generator seeded by `rng`.
    pub fn init<R: RngCore + CryptoRng + ?Sized>(
        ctx: Arc<PairingCtx>,
        n: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Self::init_with_version(ctx, n, ENCLAVE_VERSION, rng)
    }

    pub fn init_with_version<R: RngCore + CryptoRng + ?Sized>(
        ctx: Arc<PairingCtx>,
        n: usize,
        version: &str,
        rng: &mut R,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("partition size must be at least 1".into()));
        }
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        let mut inner = ChaCha20Rng::from_seed(seed);

        let mut sealing_key = [0u8; 32];
        inner.fill_bytes(&mut sealing_key);
        let signing_key = SigningKey::generate(&mut inner);
        let (master_key, public_key) = ibbe::setup(&ctx, n, &mut inner)?;

        Ok(Enclave {
            ctx,
            version: version.to_string(),
            measurement: measurement_for(version),
            master_key,
            public_key,
            sealing_key,
            signing_key,
            rng: Mutex::new(inner),
            tables: RwLock::new(AccessTables::default()),
        })
    }

    pub fn ctx(&self) -> &PairingCtx {
        &self.ctx
    }

    pub fn shared_ctx(&self) -> Arc<PairingCtx> {
        Arc::clone(&self.ctx)
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.public_key
    }

    /// Maximum partition size `n` the public key supports.
    pub fn partition_capacity(&self) -> usize {
        self.public_key.n()
    }

    /// Public half of the content-signing key.
    pub fn signing_public_key(&self) -> VerifyingKey {
        self.signing_key.verifying_key()
    }

    /// Static measurement standing in for remote attestation.
    pub fn attest_stub(&self) -> [u8; 32] {
        self.measurement
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn extract_user_key(&self, user_id: &str) -> Result<UserKey> {
        ibbe::extract_user_key(&self.ctx, &self.master_key, user_id)
    }

    pub fn seal(&self, payload: &[u8]) -> SealedBlob {
        let nonce: [u8; SEAL_NONCE_BYTES] = self.random_bytes();
        let cipher = Aes256Gcm::new(&self.sealing_key.into());
        let mut ct = cipher
            .encrypt(
                Nonce::from_slice(&nonce),
                Payload { msg: payload, aad: SEAL_MAGIC },
            )
            .expect("AES-GCM encryption of in-memory data");
        let tag: [u8; SEAL_TAG_BYTES] = ct.split_off(ct.len() - SEAL_TAG_BYTES).try_into().unwrap();
        SealedBlob { nonce, ciphertext: ct, tag }
    }

    pub fn unseal(&self, blob: &SealedBlob) -> Result<Vec<u8>> {
        let cipher = Aes256Gcm::new(&self.sealing_key.into());
        let mut ct = Vec::with_capacity(blob.ciphertext.len() + SEAL_TAG_BYTES);
        ct.extend_from_slice(&blob.ciphertext);
        ct.extend_from_slice(&blob.tag);
        cipher
            .decrypt(
                Nonce::from_slice(&blob.nonce),
                Payload { msg: &ct, aad: SEAL_MAGIC },
            )
            .map_err(|_| Error::Integrity)
    }

    /// Writes the sealing key to `path` with owner-only permissions.
    pub fn save_sealing_key(&self, path: &Path) -> Result<()> {
        let mut opts = fs::OpenOptions::new();
        opts.write(true).create(true).truncate(true);
        #[cfg(unix)]
        {
            use std::os::unix::fs::OpenOptionsExt;
            opts.mode(0o600);
        }
        let mut f = opts.open(path)?;
        f.write_all(&self.sealing_key)?;
        f.sync_all()?;
        Ok(())
    }

    /// Seals the complete enclave state for persistence outside the boundary.
    pub fn seal_state(&self) -> SealedBlob {
        let mut rng_seed = [0u8; 32];
        self.rng.lock().fill_bytes(&mut rng_seed);
        let state = PersistedState {
            version: self.version.clone(),
            n: self.public_key.n(),
            g: self.master_key.g.to_bytes().to_vec(),
            gamma: self.master_key.gamma.to_bytes(),
            public_key: self.public_key.to_bytes(),
            signing_key: self.signing_key.to_bytes(),
            tables: self.tables.read().clone(),
            rng_seed,
        };
        let json = serde_json::to_vec(&state).expect("state serializes");
        self.seal(&json)
    }

    /// Reloads an enclave from its sealing-key file and sealed state.
    pub fn restore(ctx: Arc<PairingCtx>, sealing_key_file: &Path, blob: &SealedBlob) -> Result<Self> {
        let key_bytes = fs::read(sealing_key_file)?;
        let sealing_key: [u8; 32] = key_bytes
            .try_into()
            .map_err(|_| Error::Encoding("sealing key file must hold 32 bytes".into()))?;
        let cipher = Aes256Gcm::new(&sealing_key.into());
        let mut ct = blob.ciphertext.clone();
        ct.extend_from_slice(&blob.tag);
        let json = cipher
            .decrypt(Nonce::from_slice(&blob.nonce), Payload { msg: &ct, aad: SEAL_MAGIC })
            .map_err(|_| Error::Integrity)?;
        let state: PersistedState = serde_json::from_slice(&json)
            .map_err(|e| Error::Encoding(format!("sealed state: {e}")))?;
        if state.g.len() != G1_BYTES {
            return Err(Error::Encoding("sealed state: bad generator".into()));
        }
        let master_key = MasterKey {
            g: G1::from_bytes(&state.g)?,
            gamma: Scalar::from_bytes(&state.gamma)?,
        };
        let public_key = PublicKey::from_bytes(&state.public_key)?;
        if public_key.n() != state.n {
            return Err(Error::Encoding("sealed state: capacity mismatch".into()));
        }
        Ok(Enclave {
            ctx,
            measurement: measurement_for(&state.version),
            version: state.version,
            master_key,
            public_key,
            sealing_key,
            signing_key: SigningKey::from_bytes(&state.signing_key),
            rng: Mutex::new(ChaCha20Rng::from_seed(state.rng_seed)),
            tables: RwLock::new(state.tables),
        })
    }

    pub(crate) fn master_key(&self) -> &MasterKey {
        &self.master_key
    }

    pub(crate) fn signing_key(&self) -> &SigningKey {
        &self.signing_key
    }

    /// Key protecting persisted ACL documents, derived from the sealing key.
    pub(crate) fn document_key(&self) -> [u8; 32] {
        self.derive_key(b"acl-documents")
    }

    /// Credential shared with the storage provider for direct uploads.
    pub fn storage_credential(&self) -> [u8; 32] {
        self.derive_key(b"storage-credential")
    }

    fn derive_key(&self, label: &[u8]) -> [u8; 32] {
        use hmac::{Hmac, Mac};
        let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(&self.sealing_key)
            .expect("HMAC accepts any key length");
        mac.update(label);
        mac.finalize().into_bytes().into()
    }

    pub(crate) fn random_scalar(&self) -> Scalar {
        Scalar::random_nonzero(&mut *self.rng.lock())
    }

    pub(crate) fn random_bytes<const N: usize>(&self) -> [u8; N] {
        let mut out = [0u8; N];
        self.rng.lock().fill_bytes(&mut out);
        out
    }

    /// Runs `f` with the enclave's generator, e.g. for shuffles.
    pub(crate) fn with_rng<T>(&self, f: impl FnOnce(&mut ChaCha20Rng) -> T) -> T {
        f(&mut self.rng.lock())
    }

    pub(crate) fn tables(&self) -> RwLockReadGuard<'_, AccessTables> {
        self.tables.read()
    }

    pub(crate) fn tables_mut(&self) -> RwLockWriteGuard<'_, AccessTables> {
        self.tables.write()
    }
}
