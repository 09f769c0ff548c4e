//! Partitioned group key management.
//!
//! A group of `N` members is split into partitions of at most `n` members.
//! Each partition carries its own broadcast cipher `C_i` and an AES-GCM
//! envelope `y_i` of the shared group key `gk` under `SHA-256(bk_i)`, so a
//! member's decryption cost depends on `n` only. All steps that touch `gk` or
//! the master key run through the [`Enclave`]; everything else here is the
//! untrusted administrator's bookkeeping.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use aes_gcm::aead::{Aead, KeyInit};
use aes_gcm::{Aes256Gcm, Nonce};
use sha2::{Digest, Sha256};

use crate::algebra::PairingCtx;
use crate::enclave::{Enclave, SealedBlob};
use crate::error::{Error, Result};
use crate::ibbe::{self, BroadcastCipher, BroadcastKey, PublicKey, UserKey, CIPHER_BYTES};
use crate::store::ObjectStore;
use crate::wire::{put_bytes, put_u32, Reader};

pub const GROUP_KEY_BYTES: usize = 32;
pub const IV_BYTES: usize = 12;
/// Encrypted group key plus GCM tag.
pub const Y_BYTES: usize = GROUP_KEY_BYTES + 16;

const PARTITION_MAGIC: &[u8; 4] = b"GPT1";
/// Partition file bytes excluding the member list.
pub const PARTITION_FIXED_BYTES: usize =
    PARTITION_MAGIC.len() + 4 + 4 + CIPHER_BYTES + IV_BYTES + 4 + Y_BYTES;

#[derive(Clone, PartialEq, Eq)]
pub struct GroupKey(pub [u8; GROUP_KEY_BYTES]);

impl fmt::Debug for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("GroupKey(<redacted>)")
    }
}

/// Symmetric key derived from a broadcast key.
fn envelope_key(bk: &BroadcastKey) -> [u8; 32] {
    Sha256::digest(bk.to_bytes()).into()
}

fn wrap_group_key(bk: &BroadcastKey, iv: &[u8; IV_BYTES], gk: &[u8]) -> Vec<u8> {
    Aes256Gcm::new(&envelope_key(bk).into())
        .encrypt(Nonce::from_slice(iv), gk)
        .expect("AES-GCM encryption of in-memory data")
}

fn unwrap_group_key(bk: &BroadcastKey, iv: &[u8; IV_BYTES], y: &[u8]) -> Result<GroupKey> {
    let gk = Aes256Gcm::new(&envelope_key(bk).into())
        .decrypt(Nonce::from_slice(iv), y)
        .map_err(|_| Error::Authentication)?;
    let gk: [u8; GROUP_KEY_BYTES] = gk.try_into().map_err(|_| Error::Authentication)?;
    Ok(GroupKey(gk))
}

/// `{members, C_i, y_i, IV_i}` for one partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub id: u32,
    pub members: Vec<String>,
    pub cipher: BroadcastCipher,
    pub iv: [u8; IV_BYTES],
    pub y: Vec<u8>,
}

impl Partition {
    pub fn receivers(&self) -> Vec<&str> {
        self.members.iter().map(String::as_str).collect()
    }

    /// `"GPT1" || id || count || [len || user id]* || cipher || IV || len(y) || y`
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(PARTITION_MAGIC);
        out.extend_from_slice(&self.id.to_be_bytes());
        put_u32(&mut out, self.members.len());
        for m in &self.members {
            put_bytes(&mut out, m.as_bytes());
        }
        out.extend_from_slice(&self.cipher.to_bytes());
        out.extend_from_slice(&self.iv);
        put_bytes(&mut out, &self.y);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "partition");
        r.magic(PARTITION_MAGIC)?;
        let id = r.u32()?;
        let count = r.u32()? as usize;
        let mut members = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let len = r.u32()? as usize;
            let raw = r.take(len)?;
            let m = std::str::from_utf8(raw)
                .map_err(|_| Error::Encoding("partition: member id is not UTF-8".into()))?;
            members.push(m.to_string());
        }
        let cipher = BroadcastCipher::read(&mut r)?;
        let iv = r.array()?;
        let y_len = r.u32()? as usize;
        let y = r.take(y_len)?.to_vec();
        r.finish()?;
        Ok(Partition { id, members, cipher, iv, y })
    }

    pub fn encoded_len(&self) -> usize {
        PARTITION_FIXED_BYTES - Y_BYTES
            + self.y.len()
            + self.members.iter().map(|m| 4 + m.len()).sum::<usize>()
    }
}

/// Administrator-side view of one group.
#[derive(Clone, Debug)]
pub struct GroupState {
    group_id: String,
    partition_size: usize,
    partitions: Vec<Partition>,
    user_index: BTreeMap<String, u32>,
    sealed_gk: SealedBlob,
    next_partition_id: u32,
}

impl GroupState {
    pub fn group_id(&self) -> &str {
        &self.group_id
    }

    pub fn partition_size(&self) -> usize {
        self.partition_size
    }

    /// Partitions in ascending id order.
    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn partition_sizes(&self) -> Vec<usize> {
        self.partitions.iter().map(|p| p.members.len()).collect()
    }

    pub fn sealed_gk(&self) -> &SealedBlob {
        &self.sealed_gk
    }

    pub fn member_count(&self) -> usize {
        self.user_index.len()
    }

    pub fn contains(&self, user_id: &str) -> bool {
        self.user_index.contains_key(user_id)
    }

    /// Members in partition order.
    pub fn members(&self) -> impl Iterator<Item = &str> {
        self.partitions
            .iter()
            .flat_map(|p| p.members.iter().map(String::as_str))
    }

    pub fn partition_of(&self, user_id: &str) -> Option<&Partition> {
        let id = *self.user_index.get(user_id)?;
        self.partitions.iter().find(|p| p.id == id)
    }

    /// Serialized size of all partition files.
    pub fn metadata_bytes(&self) -> usize {
        self.partitions.iter().map(Partition::encoded_len).sum()
    }

    /// Verifies that the user index is a bijection onto partition membership
    /// and that partitions respect the size bound.
    pub fn check_consistency(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(format!("inconsistent group state: {msg}")));
        let mut seen = HashSet::new();
        let mut prev_id = None;
        for p in &self.partitions {
            if prev_id.is_some_and(|prev| prev >= p.id) {
                return fail(format!("partition ids out of order at {}", p.id));
            }
            prev_id = Some(p.id);
            if p.members.is_empty() || p.members.len() > self.partition_size {
                return fail(format!("partition {} holds {} members", p.id, p.members.len()));
            }
            for m in &p.members {
                if !seen.insert(m.as_str()) {
                    return fail(format!("{m:?} listed twice"));
                }
                if self.user_index.get(m) != Some(&p.id) {
                    return fail(format!("index disagrees on {m:?}"));
                }
            }
        }
        if seen.len() != self.user_index.len() {
            return fail("index lists users outside every partition".into());
        }
        Ok(())
    }

    pub fn partition_object_id(group_id: &str, partition_id: u32) -> String {
        format!("{group_id}/{partition_id:010}")
    }

    pub fn sealed_key_object_id(group_id: &str) -> String {
        format!("{group_id}.gk")
    }

    /// Writes every partition file and the sealed group key, and deletes files
    /// of partitions that no longer exist.
    pub fn persist(&self, store: &dyn ObjectStore) -> Result<()> {
        let live: HashSet<String> = self
            .partitions
            .iter()
            .map(|p| Self::partition_object_id(&self.group_id, p.id))
            .collect();
        for stale in store.list(&format!("{}/", self.group_id))? {
            if !live.contains(&stale) {
                store.delete(&stale)?;
            }
        }
        for p in &self.partitions {
            store.put(&Self::partition_object_id(&self.group_id, p.id), &p.to_bytes())?;
        }
        store.put(&Self::sealed_key_object_id(&self.group_id), &self.sealed_gk.to_bytes())
    }
}

/// Reads the partition that lists `user_id`, as a client would.
pub fn find_partition(store: &dyn ObjectStore, group_id: &str, user_id: &str) -> Result<Partition> {
    for id in store.list(&format!("{group_id}/"))? {
        let p = Partition::from_bytes(&store.get(&id)?)?;
        if p.members.iter().any(|m| m == user_id) {
            return Ok(p);
        }
    }
    Err(Error::NotMember(user_id.to_string()))
}

pub fn load_partitions(store: &dyn ObjectStore, group_id: &str) -> Result<Vec<Partition>> {
    store
        .list(&format!("{group_id}/"))?
        .iter()
        .map(|id| Partition::from_bytes(&store.get(id)?))
        .collect()
}

fn validate_group_id(group_id: &str) -> Result<()> {
    if group_id.is_empty() || group_id.contains('/') || group_id.starts_with('.') {
        return Err(Error::InvalidParameter(format!("bad group id {group_id:?}")));
    }
    Ok(())
}

fn check_partition_size(enclave: &Enclave, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("partition size must be at least 1".into()));
    }
    if n > enclave.partition_capacity() {
        return Err(Error::Capacity {
            size: n,
            capacity: enclave.partition_capacity(),
        });
    }
    Ok(())
}

/// Builds `{C_i, y_i, IV_i}` for a fresh partition inside the enclave.
fn seal_partition(enclave: &Enclave, id: u32, members: Vec<String>, gk: &[u8]) -> Result<Partition> {
    let receivers: Vec<&str> = members.iter().map(String::as_str).collect();
    let k = enclave.random_scalar();
    let (bk, cipher) = ibbe::encrypt_master(
        enclave.ctx(),
        enclave.master_key(),
        enclave.public_key(),
        &receivers,
        &k,
    )?;
    let iv = enclave.random_bytes();
    let y = wrap_group_key(&bk, &iv, gk);
    Ok(Partition { id, members, cipher, iv, y })
}

/// Splits `members` into consecutive chunks of `n` and envelopes a fresh
/// group key for each.
pub fn create_group(
    enclave: &Enclave,
    group_id: &str,
    members: &[&str],
    n: usize,
) -> Result<GroupState> {
    validate_group_id(group_id)?;
    check_partition_size(enclave, n)?;
    if members.is_empty() {
        return Err(Error::InvalidParameter("a group needs at least one member".into()));
    }
    let mut seen = HashSet::with_capacity(members.len());
    for m in members {
        if m.is_empty() {
            return Err(Error::InvalidParameter("empty user id".into()));
        }
        if !seen.insert(*m) {
            return Err(Error::DuplicateId(m.to_string()));
        }
    }

    let gk: [u8; GROUP_KEY_BYTES] = enclave.random_bytes();
    let mut partitions = Vec::with_capacity(members.len().div_ceil(n));
    let mut user_index = BTreeMap::new();
    for (i, chunk) in members.chunks(n).enumerate() {
        let id = i as u32;
        for m in chunk {
            user_index.insert(m.to_string(), id);
        }
        let owned = chunk.iter().map(|m| m.to_string()).collect();
        partitions.push(seal_partition(enclave, id, owned, &gk)?);
    }
    let sealed_gk = enclave.seal(&gk);
    Ok(GroupState {
        group_id: group_id.to_string(),
        partition_size: n,
        next_partition_id: partitions.len() as u32,
        partitions,
        user_index,
        sealed_gk,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AddOutcome {
    pub partition_id: u32,
    pub new_partition: bool,
}

/// Adds `user_id` to the lowest-id partition with room, or to a new singleton
/// partition enveloping the current group key when all are full.
pub fn add_user(enclave: &Enclave, gs: &mut GroupState, user_id: &str) -> Result<AddOutcome> {
    if user_id.is_empty() {
        return Err(Error::InvalidParameter("empty user id".into()));
    }
    if gs.contains(user_id) {
        return Err(Error::AlreadyMember(user_id.to_string()));
    }
    let n = gs.partition_size;
    if let Some(p) = gs.partitions.iter_mut().find(|p| p.members.len() < n) {
        p.cipher = ibbe::add_user_to_cipher(enclave.ctx(), enclave.master_key(), &p.cipher, user_id)?;
        p.members.push(user_id.to_string());
        gs.user_index.insert(user_id.to_string(), p.id);
        return Ok(AddOutcome {
            partition_id: p.id,
            new_partition: false,
        });
    }

    let gk = enclave.unseal(&gs.sealed_gk)?;
    let id = gs.next_partition_id;
    let p = seal_partition(enclave, id, vec![user_id.to_string()], &gk)?;
    gs.partitions.push(p);
    gs.user_index.insert(user_id.to_string(), id);
    gs.next_partition_id += 1;
    Ok(AddOutcome {
        partition_id: id,
        new_partition: true,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RemoveOutcome {
    pub partition_id: u32,
    /// The partition lost its last member and was dropped.
    pub dropped_partition: bool,
}

/// Removes `user_id` and rotates the group key: the affected partition is
/// updated in constant time, every other partition is rekeyed, and all
/// envelopes are recomputed under fresh IVs.
pub fn remove_user(enclave: &Enclave, gs: &mut GroupState, user_id: &str) -> Result<RemoveOutcome> {
    let pid = *gs
        .user_index
        .get(user_id)
        .ok_or_else(|| Error::NotMember(user_id.to_string()))?;
    let ctx = enclave.ctx();
    let mk = enclave.master_key();
    let pk = enclave.public_key();

    let gk: [u8; GROUP_KEY_BYTES] = enclave.random_bytes();
    let mut updated = Vec::with_capacity(gs.partitions.len());
    let mut dropped = false;
    for p in &gs.partitions {
        let k = enclave.random_scalar();
        let (bk, cipher, members) = if p.id == pid {
            let members: Vec<String> = p.members.iter().filter(|m| *m != user_id).cloned().collect();
            if members.is_empty() {
                dropped = true;
                continue;
            }
            let (bk, cipher) = ibbe::remove_user_from_cipher(ctx, mk, pk, &p.cipher, user_id, &k)?;
            (bk, cipher, members)
        } else {
            let (bk, cipher) = ibbe::rekey_cipher(ctx, pk, &p.cipher, &k)?;
            (bk, cipher, p.members.clone())
        };
        let iv = enclave.random_bytes();
        let y = wrap_group_key(&bk, &iv, &gk);
        updated.push(Partition { id: p.id, members, cipher, iv, y });
    }
    gs.partitions = updated;
    gs.user_index.remove(user_id);
    gs.sealed_gk = enclave.seal(&gk);
    Ok(RemoveOutcome {
        partition_id: pid,
        dropped_partition: dropped,
    })
}

/// Occupancy at or below which a partition counts as sparse: `ceil(2n/3)`.
pub fn sparse_threshold(n: usize) -> usize {
    (2 * n).div_ceil(3)
}

/// Whether at least half of the partitions are sparse.
pub fn needs_repartition(gs: &GroupState) -> bool {
    let m = gs.partitions.len();
    let threshold = sparse_threshold(gs.partition_size);
    let sparse = gs
        .partitions
        .iter()
        .filter(|p| p.members.len() <= threshold)
        .count();
    m > 0 && 2 * sparse >= m
}

/// Re-creates the group over its current membership when
/// [`needs_repartition`] holds. Returns whether it did.
pub fn maybe_repartition(enclave: &Enclave, gs: &mut GroupState) -> Result<bool> {
    if !needs_repartition(gs) {
        return Ok(false);
    }
    let members: Vec<String> = gs.members().map(str::to_string).collect();
    let refs: Vec<&str> = members.iter().map(String::as_str).collect();
    *gs = create_group(enclave, &gs.group_id, &refs, gs.partition_size)?;
    Ok(true)
}

/// Client-side derivation of the group key from one partition's metadata.
pub fn derive_group_key(
    ctx: &PairingCtx,
    pk: &PublicKey,
    partition: &Partition,
    user_id: &str,
    uk: &UserKey,
) -> Result<GroupKey> {
    open_envelope(ctx, pk, &partition.receivers(), &partition.cipher, &partition.iv, &partition.y, user_id, uk)
}

/// [`derive_group_key`] with an explicit receiver list, e.g. one a client
/// assembled itself.
#[allow(clippy::too_many_arguments)]
pub fn open_envelope(
    ctx: &PairingCtx,
    pk: &PublicKey,
    receivers: &[&str],
    cipher: &BroadcastCipher,
    iv: &[u8; IV_BYTES],
    y: &[u8],
    user_id: &str,
    uk: &UserKey,
) -> Result<GroupKey> {
    let bk = ibbe::decrypt(ctx, pk, receivers, user_id, uk, cipher)?;
    unwrap_group_key(&bk, iv, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::PairingCtx;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::sync::Arc;

    fn enclave(n: usize) -> Enclave {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        Enclave::init(Arc::new(PairingCtx::new()), n, &mut rng).unwrap()
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("user{i}")).collect()
    }

    fn refs(v: &[String]) -> Vec<&str> {
        v.iter().map(String::as_str).collect()
    }

    fn gk_of(e: &Enclave, gs: &GroupState) -> GroupKey {
        GroupKey(e.unseal(gs.sealed_gk()).unwrap().try_into().unwrap())
    }

    fn derive(e: &Enclave, gs: &GroupState, user: &str) -> Result<GroupKey> {
        let uk = e.extract_user_key(user)?;
        let p = gs.partition_of(user).ok_or_else(|| Error::NotMember(user.into()))?;
        derive_group_key(e.ctx(), e.public_key(), p, user, &uk)
    }

    #[test]
    fn create_chunks_consecutively() {
        let e = enclave(3);
        let users = ids(7);
        let gs = create_group(&e, "g", &refs(&users), 3).unwrap();
        assert_eq!(gs.partition_sizes(), vec![3, 3, 1]);
        assert_eq!(gs.partitions()[1].members, users[3..6]);
        gs.check_consistency().unwrap();
        let gk = gk_of(&e, &gs);
        for u in &users {
            assert_eq!(derive(&e, &gs, u).unwrap(), gk);
        }
    }

    #[test]
    fn create_rejects_bad_input() {
        let e = enclave(3);
        assert!(matches!(create_group(&e, "g", &["a", "a"], 2), Err(Error::DuplicateId(_))));
        assert!(create_group(&e, "g", &[], 2).is_err());
        assert!(matches!(create_group(&e, "g", &["a"], 4), Err(Error::Capacity { .. })));
        assert!(create_group(&e, "a/b", &["a"], 2).is_err());
        assert!(create_group(&e, "g", &["a"], 0).is_err());
    }

    #[test]
    fn add_fills_lowest_non_full_partition() {
        let e = enclave(3);
        let mut gs = create_group(&e, "g", &["a", "b", "c", "d", "e"], 3).unwrap();
        assert_eq!(gs.partition_sizes(), vec![3, 2]);
        let gk = gk_of(&e, &gs);
        let out = add_user(&e, &mut gs, "f").unwrap();
        assert_eq!(out, AddOutcome { partition_id: 1, new_partition: false });
        assert_eq!(gs.partition_sizes(), vec![3, 3]);
        let out = add_user(&e, &mut gs, "g").unwrap();
        assert_eq!(out, AddOutcome { partition_id: 2, new_partition: true });
        assert_eq!(gs.partition_sizes(), vec![3, 3, 1]);
        gs.check_consistency().unwrap();
        assert_eq!(gk_of(&e, &gs), gk);
        for u in ["a", "d", "f", "g"] {
            assert_eq!(derive(&e, &gs, u).unwrap(), gk);
        }
        assert!(matches!(add_user(&e, &mut gs, "a"), Err(Error::AlreadyMember(_))));
    }

    #[test]
    fn add_to_existing_partition_keeps_its_envelope() {
        let e = enclave(4);
        let mut gs = create_group(&e, "g", &["a"], 4).unwrap();
        let before = gs.partitions()[0].clone();
        let (_, counts) = e.ctx().measure(|| add_user(&e, &mut gs, "b").unwrap());
        let after = &gs.partitions()[0];
        assert_eq!(after.y, before.y);
        assert_eq!(after.iv, before.iv);
        assert_eq!(after.cipher.c1, before.cipher.c1);
        assert_eq!(counts.g2_exp, 2);
        assert_eq!(counts.g1_exp, 0);
    }

    #[test]
    fn remove_rotates_key_and_revokes() {
        let e = enclave(3);
        let mut gs = create_group(&e, "g", &["a", "b", "c", "d", "e", "f"], 3).unwrap();
        let old_gk = gk_of(&e, &gs);
        let old_partition = gs.partition_of("a").unwrap().clone();
        remove_user(&e, &mut gs, "a").unwrap();
        assert_eq!(gs.partition_sizes(), vec![2, 3]);
        gs.check_consistency().unwrap();
        let new_gk = gk_of(&e, &gs);
        assert_ne!(new_gk, old_gk);
        for u in ["b", "c", "d", "e", "f"] {
            assert_eq!(derive(&e, &gs, u).unwrap(), new_gk);
        }
        // lazy revocation: the old snapshot still opens for the old key
        let uk = e.extract_user_key("a").unwrap();
        assert_eq!(
            derive_group_key(e.ctx(), e.public_key(), &old_partition, "a", &uk).unwrap(),
            old_gk
        );
        assert!(matches!(remove_user(&e, &mut gs, "a"), Err(Error::NotMember(_))));
    }

    #[test]
    fn removing_last_member_drops_partition() {
        let e = enclave(2);
        let mut gs = create_group(&e, "g", &["a", "b", "c"], 2).unwrap();
        let out = remove_user(&e, &mut gs, "c").unwrap();
        assert!(out.dropped_partition);
        assert_eq!(gs.partition_sizes(), vec![2]);
        remove_user(&e, &mut gs, "a").unwrap();
        remove_user(&e, &mut gs, "b").unwrap();
        assert_eq!(gs.member_count(), 0);
        assert!(gs.partitions().is_empty());
        // an empty group accepts members again, under the current key
        add_user(&e, &mut gs, "z").unwrap();
        assert_eq!(derive(&e, &gs, "z").unwrap(), gk_of(&e, &gs));
        gs.check_consistency().unwrap();
    }

    #[test]
    fn repartition_heuristic() {
        assert_eq!(sparse_threshold(3), 2);
        assert_eq!(sparse_threshold(1000), 667);
        let e = enclave(3);
        let mut gs = create_group(&e, "g", &["a", "b", "c", "d", "e", "f"], 3).unwrap();
        assert!(!maybe_repartition(&e, &mut gs).unwrap());
        remove_user(&e, &mut gs, "a").unwrap();
        remove_user(&e, &mut gs, "d").unwrap();
        assert_eq!(gs.partition_sizes(), vec![2, 2]);
        assert!(maybe_repartition(&e, &mut gs).unwrap());
        assert_eq!(gs.partition_sizes(), vec![3, 1]);
        gs.check_consistency().unwrap();
        let gk = gk_of(&e, &gs);
        for u in ["b", "c", "e", "f"] {
            assert_eq!(derive(&e, &gs, u).unwrap(), gk);
        }
    }

    #[test]
    fn partition_file_layout() {
        let e = enclave(2);
        let gs = create_group(&e, "g", &["ab", "c"], 2).unwrap();
        let p = &gs.partitions()[0];
        let bytes = p.to_bytes();
        assert_eq!(&bytes[..4], b"GPT1");
        assert_eq!(&bytes[4..8], &0u32.to_be_bytes());
        assert_eq!(&bytes[8..12], &2u32.to_be_bytes());
        assert_eq!(&bytes[12..16], &2u32.to_be_bytes());
        assert_eq!(&bytes[16..18], b"ab");
        assert_eq!(bytes.len(), PARTITION_FIXED_BYTES + 4 + 2 + 4 + 1);
        assert_eq!(bytes.len(), p.encoded_len());
        assert_eq!(Partition::from_bytes(&bytes).unwrap(), *p);
    }

    #[test]
    fn persisted_metadata_is_readable_by_clients() {
        let e = enclave(2);
        let store = crate::store::MemoryStore::new();
        let mut gs = create_group(&e, "team", &["a", "b", "c"], 2).unwrap();
        gs.persist(&store).unwrap();
        assert_eq!(
            store.list("team/").unwrap(),
            vec!["team/0000000000", "team/0000000001"]
        );
        let p = find_partition(&store, "team", "c").unwrap();
        let uk = e.extract_user_key("c").unwrap();
        assert_eq!(
            derive_group_key(e.ctx(), e.public_key(), &p, "c", &uk).unwrap(),
            gk_of(&e, &gs)
        );
        remove_user(&e, &mut gs, "c").unwrap();
        gs.persist(&store).unwrap();
        assert_eq!(store.list("team/").unwrap(), vec!["team/0000000000"]);
        assert!(matches!(find_partition(&store, "team", "c"), Err(Error::NotMember(_))));
        assert_eq!(load_partitions(&store, "team").unwrap(), gs.partitions());
    }
}
