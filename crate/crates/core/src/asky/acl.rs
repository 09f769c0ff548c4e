//! Encrypted, MAC-protected ACL documents: one per user and one per group.
//!
//! Document ids are keyed hashes of the user or group id and bodies are
//! AES-256-GCM ciphertexts, so the document store learns neither names nor
//! keys. Layout: `"ACLD1" || iv (12) || ciphertext+tag || HMAC-SHA256 (32)`,
//! where the MAC covers the document id and everything before it.

use std::collections::BTreeSet;

use aes_gcm::aead::{Aead, KeyInit};
use aes_gcm::{Aes256Gcm, Nonce};
use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::enclave::{Enclave, GroupAcl};
use crate::error::{Error, Result};
use crate::store::ObjectStore;

const DOC_MAGIC: &[u8; 5] = b"ACLD1";
pub const DOC_PREFIX: &str = "acl/";
const MAC_BYTES: usize = 32;

pub(crate) fn hmac_sha256(key: &[u8], parts: &[&[u8]]) -> [u8; 32] {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(key).expect("HMAC accepts any key length");
    for p in parts {
        mac.update(p);
    }
    mac.finalize().into_bytes().into()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AclRecord {
    User {
        user_id: String,
        key: [u8; 32],
    },
    Group {
        group_id: String,
        readers: BTreeSet<String>,
        writers: BTreeSet<String>,
    },
}

struct DocKeys {
    id: [u8; 32],
    enc: [u8; 32],
    mac: [u8; 32],
}

fn doc_keys(enclave: &Enclave) -> DocKeys {
    let root = enclave.document_key();
    DocKeys {
        id: hmac_sha256(&root, &[b"id"]),
        enc: hmac_sha256(&root, &[b"enc"]),
        mac: hmac_sha256(&root, &[b"mac"]),
    }
}

fn document_id_with(keys: &DocKeys, kind: &str, id: &str) -> String {
    let digest = hmac_sha256(&keys.id, &[kind.as_bytes(), b"\0", id.as_bytes()]);
    format!("{DOC_PREFIX}{}", hex::encode(&digest[..16]))
}

pub fn user_document_id(enclave: &Enclave, user_id: &str) -> String {
    document_id_with(&doc_keys(enclave), "user", user_id)
}

pub fn group_document_id(enclave: &Enclave, group_id: &str) -> String {
    document_id_with(&doc_keys(enclave), "group", group_id)
}

fn write_record(enclave: &Enclave, docs: &dyn ObjectStore, doc_id: &str, record: &AclRecord) -> Result<()> {
    let keys = doc_keys(enclave);
    let body = serde_json::to_vec(record).expect("ACL records serialize");
    let iv: [u8; 12] = enclave.random_bytes();
    let ct = Aes256Gcm::new(&keys.enc.into())
        .encrypt(Nonce::from_slice(&iv), body.as_slice())
        .expect("AES-GCM encryption of in-memory data");
    let mut out = Vec::with_capacity(DOC_MAGIC.len() + iv.len() + ct.len() + MAC_BYTES);
    out.extend_from_slice(DOC_MAGIC);
    out.extend_from_slice(&iv);
    out.extend_from_slice(&ct);
    let mac = hmac_sha256(&keys.mac, &[doc_id.as_bytes(), &out]);
    out.extend_from_slice(&mac);
    docs.put(doc_id, &out)
}

pub(crate) fn persist_user(enclave: &Enclave, docs: &dyn ObjectStore, user_id: &str, key: &[u8; 32]) -> Result<()> {
    let record = AclRecord::User {
        user_id: user_id.to_string(),
        key: *key,
    };
    write_record(enclave, docs, &user_document_id(enclave, user_id), &record)
}

pub(crate) fn persist_group(enclave: &Enclave, docs: &dyn ObjectStore, group_id: &str, acl: &GroupAcl) -> Result<()> {
    let record = AclRecord::Group {
        group_id: group_id.to_string(),
        readers: acl.readers.clone(),
        writers: acl.writers.clone(),
    };
    write_record(enclave, docs, &group_document_id(enclave, group_id), &record)
}

/// Reads and authenticates a document. Any tampering or a document moved to
/// another id yields [`Error::Integrity`].
pub fn load_document(enclave: &Enclave, docs: &dyn ObjectStore, doc_id: &str) -> Result<AclRecord> {
    let keys = doc_keys(enclave);
    let bytes = docs.get(doc_id)?;
    let min = DOC_MAGIC.len() + 12 + 16 + MAC_BYTES;
    if bytes.len() < min || &bytes[..DOC_MAGIC.len()] != DOC_MAGIC {
        return Err(Error::Integrity);
    }
    let (signed, mac) = bytes.split_at(bytes.len() - MAC_BYTES);
    let mut check = <Hmac<Sha256> as Mac>::new_from_slice(&keys.mac).expect("HMAC accepts any key length");
    check.update(doc_id.as_bytes());
    check.update(signed);
    check.verify_slice(mac).map_err(|_| Error::Integrity)?;
    let iv = &signed[DOC_MAGIC.len()..DOC_MAGIC.len() + 12];
    let body = Aes256Gcm::new(&keys.enc.into())
        .decrypt(Nonce::from_slice(iv), &signed[DOC_MAGIC.len() + 12..])
        .map_err(|_| Error::Integrity)?;
    serde_json::from_slice(&body).map_err(|_| Error::Integrity)
}

pub fn load_user(enclave: &Enclave, docs: &dyn ObjectStore, user_id: &str) -> Result<AclRecord> {
    load_document(enclave, docs, &user_document_id(enclave, user_id))
}

pub fn load_group(enclave: &Enclave, docs: &dyn ObjectStore, group_id: &str) -> Result<AclRecord> {
    load_document(enclave, docs, &group_document_id(enclave, group_id))
}
