use std::collections::BTreeMap;
use std::sync::Arc;

use enclave_share::algebra::PairingCtx;
use enclave_share::enclave::Enclave;
use enclave_share::groups::{self, GroupKey, GroupState, Partition, PARTITION_FIXED_BYTES};
use enclave_share::store::{FsStore, MemoryStore, ObjectStore};
use enclave_share::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn enclave(n: usize, seed: u64) -> Enclave {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Enclave::init(Arc::new(PairingCtx::new()), n, &mut rng).unwrap()
}

fn current_gk(e: &Enclave, gs: &GroupState) -> GroupKey {
    GroupKey(e.unseal(gs.sealed_gk()).unwrap().try_into().unwrap())
}

/// An outsider splices itself into a partition's receiver list.
fn forged_derive(e: &Enclave, p: &Partition, attacker: &str, cap: usize) -> enclave_share::Result<GroupKey> {
    let uk = e.extract_user_key(attacker)?;
    let mut receivers = p.receivers();
    if receivers.len() >= cap {
        receivers.pop();
    }
    receivers.push(attacker);
    groups::open_envelope(e.ctx(), e.public_key(), &receivers, &p.cipher, &p.iv, &p.y, attacker, &uk)
}

#[test]
fn metadata_grows_with_partition_count() {
    let e = enclave(4, 1);
    let ids: Vec<String> = (0..40).map(|i| format!("user{i:04}")).collect();
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    for (n_members, n) in [(4, 4), (8, 4), (40, 4), (40, 2)] {
        let gs = groups::create_group(&e, "g", &refs[..n_members], n).unwrap();
        let m = n_members.div_ceil(n);
        assert_eq!(gs.partitions().len(), m);
        // 4-byte length prefix plus 8-byte id per member
        assert_eq!(gs.metadata_bytes(), m * PARTITION_FIXED_BYTES + n_members * 12);
    }
    assert_eq!(PARTITION_FIXED_BYTES, 4 + 4 + 4 + 245 + 12 + 4 + 48);
}

#[test]
fn remove_cost_tracks_partition_count_not_membership() {
    let e = enclave(8, 2);
    let ids: Vec<String> = (0..64).map(|i| format!("m{i}")).collect();
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let mut by_shape = BTreeMap::new();
    for (n_members, n) in [(16, 8), (16, 4), (32, 8), (64, 8), (32, 4)] {
        let mut gs = groups::create_group(&e, "g", &refs[..n_members], n).unwrap();
        let m = gs.partitions().len() as u64;
        let (_, c) = e.ctx().measure(|| groups::remove_user(&e, &mut gs, "m1").unwrap());
        // one constant-time removal plus a rekey of every other partition
        assert_eq!(c.group_exp(), 3 + 2 * (m - 1));
        assert_eq!(c.gt_exp, m);
        by_shape.insert((n_members, n), c.group_exp());
    }
    assert_eq!(by_shape[&(16, 4)], by_shape[&(32, 8)]);
}

#[test]
fn stale_snapshot_opens_only_the_old_key() {
    let e = enclave(3, 3);
    let mut gs = groups::create_group(&e, "g", &["a", "b", "c", "d"], 3).unwrap();
    let gk0 = current_gk(&e, &gs);
    let snapshot = gs.partitions().to_vec();
    groups::remove_user(&e, &mut gs, "b").unwrap();
    let gk1 = current_gk(&e, &gs);
    assert_ne!(gk0, gk1);

    let uk_b = e.extract_user_key("b").unwrap();
    let old = snapshot.iter().find(|p| p.members.iter().any(|m| m == "b")).unwrap();
    assert_eq!(groups::derive_group_key(e.ctx(), e.public_key(), old, "b", &uk_b).unwrap(), gk0);
    for p in gs.partitions() {
        assert!(matches!(
            groups::derive_group_key(e.ctx(), e.public_key(), p, "b", &uk_b),
            Err(Error::NotMember(_))
        ));
        assert!(matches!(forged_derive(&e, p, "b", 3), Err(Error::Authentication)));
    }
    // a current member presenting the stale snapshot gets the old key, not the new
    let uk_a = e.extract_user_key("a").unwrap();
    let a_old = snapshot.iter().find(|p| p.members.iter().any(|m| m == "a")).unwrap();
    assert_ne!(groups::derive_group_key(e.ctx(), e.public_key(), a_old, "a", &uk_a).unwrap(), gk1);
}

#[test]
fn tampered_envelope_is_rejected() {
    let e = enclave(2, 4);
    let gs = groups::create_group(&e, "g", &["a", "b"], 2).unwrap();
    let uk = e.extract_user_key("a").unwrap();
    let mut p = gs.partitions()[0].clone();
    p.y[0] ^= 1;
    assert!(matches!(
        groups::derive_group_key(e.ctx(), e.public_key(), &p, "a", &uk),
        Err(Error::Authentication)
    ));
    let mut p = gs.partitions()[0].clone();
    p.iv[3] ^= 1;
    assert!(matches!(
        groups::derive_group_key(e.ctx(), e.public_key(), &p, "a", &uk),
        Err(Error::Authentication)
    ));
}

#[test]
fn persisted_layout_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let store = FsStore::open(dir.path()).unwrap();
    let e = enclave(2, 5);
    let mut gs = groups::create_group(&e, "team", &["a", "b", "c", "d", "e"], 2).unwrap();
    gs.persist(&store).unwrap();
    assert!(dir.path().join("team").join("0000000002").is_file());
    assert!(dir.path().join("team.gk").is_file());
    groups::remove_user(&e, &mut gs, "e").unwrap();
    gs.persist(&store).unwrap();
    assert!(!dir.path().join("team").join("0000000002").exists());
    let on_disk: usize = store
        .list("team/")
        .unwrap()
        .iter()
        .map(|id| store.get(id).unwrap().len())
        .sum();
    assert_eq!(on_disk, gs.metadata_bytes());
    let p = groups::find_partition(&store, "team", "d").unwrap();
    let uk = e.extract_user_key("d").unwrap();
    assert_eq!(
        groups::derive_group_key(e.ctx(), e.public_key(), &p, "d", &uk).unwrap(),
        current_gk(&e, &gs)
    );
}

#[derive(Clone, Debug)]
enum Step {
    Add(usize),
    Remove(usize),
    Repartition,
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        4 => (0usize..10).prop_map(Step::Add),
        3 => (0usize..10).prop_map(Step::Remove),
        1 => Just(Step::Repartition),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn interleavings_preserve_membership_and_revocation(
        n in 1usize..=3,
        initial in 1usize..=5,
        steps in proptest::collection::vec(step(), 1..14),
        seed in any::<u64>(),
    ) {
        let e = enclave(3, seed);
        let store = MemoryStore::new();
        let name = |i: usize| format!("user{i}");
        let init: Vec<String> = (0..initial).map(name).collect();
        let init_refs: Vec<&str> = init.iter().map(String::as_str).collect();
        let mut gs = groups::create_group(&e, "g", &init_refs, n).unwrap();
        prop_assert_eq!(gs.partitions().len(), initial.div_ceil(n));
        let mut removed: Vec<(String, Vec<Partition>, GroupKey)> = Vec::new();

        for s in steps {
            let before_gk = current_gk(&e, &gs);
            match s {
                Step::Add(i) => {
                    let u = name(i);
                    let was = gs.contains(&u);
                    let r = groups::add_user(&e, &mut gs, &u);
                    prop_assert_eq!(r.is_ok(), !was);
                    prop_assert_eq!(current_gk(&e, &gs), before_gk);
                }
                Step::Remove(i) => {
                    let u = name(i);
                    let snapshot = gs.partitions().to_vec();
                    let was = gs.contains(&u);
                    let r = groups::remove_user(&e, &mut gs, &u);
                    prop_assert_eq!(r.is_ok(), was);
                    if was {
                        prop_assert_ne!(current_gk(&e, &gs), before_gk.clone());
                        removed.retain(|(v, _, _)| *v != u);
                        removed.push((u, snapshot, before_gk));
                    }
                }
                Step::Repartition => {
                    let members: Vec<String> = gs.members().map(str::to_string).collect();
                    if groups::maybe_repartition(&e, &mut gs).unwrap() {
                        prop_assert_eq!(gs.partitions().len(), members.len().div_ceil(n));
                        let mut after: Vec<String> = gs.members().map(str::to_string).collect();
                        let mut before = members;
                        after.sort();
                        before.sort();
                        prop_assert_eq!(after, before);
                    }
                }
            }
            gs.check_consistency().unwrap();
        }

        gs.persist(&store).unwrap();
        let gk = current_gk(&e, &gs);
        let members: Vec<String> = gs.members().map(str::to_string).collect();
        for u in &members {
            let p = groups::find_partition(&store, "g", u).unwrap();
            let uk = e.extract_user_key(u).unwrap();
            prop_assert_eq!(groups::derive_group_key(e.ctx(), e.public_key(), &p, u, &uk).unwrap(), gk.clone());
        }
        for (u, snapshot, old_gk) in &removed {
            if gs.contains(u) {
                continue;
            }
            // old metadata still yields the key of its time
            let uk = e.extract_user_key(u).unwrap();
            let old = snapshot.iter().find(|p| p.members.contains(u)).unwrap();
            prop_assert_eq!(&groups::derive_group_key(e.ctx(), e.public_key(), old, u, &uk).unwrap(), old_gk);
            for p in gs.partitions() {
                prop_assert!(matches!(forged_derive(&e, p, u, n), Err(Error::Authentication)));
            }
        }
    }
}
