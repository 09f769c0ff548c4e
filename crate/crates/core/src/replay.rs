//! Replays a membership trace against one scheme and reports the
//! administrator's cost, a sample of member derivation costs, and the final
//! metadata size.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::algebra::{OpCounts, PairingCtx};
use crate::enclave::Enclave;
use crate::error::{Error, Result};
use crate::groups::{self, GroupKey, GroupState};
use crate::hybrid::{self, HeCtx, HeGroupMeta, HePublicKey, HeUserKeyPair};
use crate::trace::{OpKind, TraceOp};

pub const GROUP_ID: &str = "replay";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    IbbeSgx,
    He,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::IbbeSgx => "ibbe-sgx",
            Scheme::He => "he",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ibbe-sgx" => Ok(Scheme::IbbeSgx),
            "he" => Ok(Scheme::He),
            _ => Err(Error::InvalidParameter(format!("unknown scheme {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReplayConfig {
    pub scheme: Scheme,
    /// Ignored by the HE scheme.
    pub partition_size: usize,
    pub seed: u64,
    /// Members whose key derivation is timed after the replay.
    pub derive_samples: usize,
    /// Run the group-state consistency check after every operation.
    pub check_each_op: bool,
}

impl ReplayConfig {
    pub fn new(scheme: Scheme, partition_size: usize, seed: u64) -> Self {
        ReplayConfig {
            scheme,
            partition_size,
            seed,
            derive_samples: 4,
            check_each_op: false,
        }
    }
}

/// One summary row.
#[derive(Clone, Debug, Serialize)]
pub struct ReplaySummary {
    pub scheme: String,
    pub partition_size: usize,
    pub ops: usize,
    pub adds: usize,
    pub removes: usize,
    pub repartitions: usize,
    pub admin_ms: f64,
    pub admin_group_exp: u64,
    pub admin_g1_exp: u64,
    pub admin_g2_exp: u64,
    pub admin_gt_exp: u64,
    pub admin_scalar_ops: u64,
    pub admin_wraps: u64,
    pub derive_samples: usize,
    pub mean_derive_ms: f64,
    pub mean_derive_scalar_ops: f64,
    pub mean_derive_pairings: f64,
    pub final_members: usize,
    pub final_partitions: usize,
    pub final_metadata_bytes: usize,
}

#[derive(Debug)]
pub struct ReplayOutcome {
    pub summary: ReplaySummary,
    pub admin_counts: OpCounts,
    pub members: BTreeSet<String>,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Indices of `k` members spread evenly over `0..n`.
fn sample_indices(n: usize, k: usize) -> Vec<usize> {
    let k = k.min(n);
    (0..k).map(|i| i * n / k).collect()
}

pub fn replay(ops: &[TraceOp], cfg: &ReplayConfig) -> Result<ReplayOutcome> {
    match cfg.scheme {
        Scheme::IbbeSgx => replay_ibbe(ops, cfg),
        Scheme::He => replay_he(ops, cfg),
    }
}

fn trace_error(i: usize, e: Error) -> Error {
    match e {
        Error::NotMember(u) => Error::Trace {
            line: i + 1,
            reason: format!("remove of absent user {u:?}"),
        },
        Error::AlreadyMember(u) => Error::Trace {
            line: i + 1,
            reason: format!("add of present user {u:?}"),
        },
        other => other,
    }
}

fn replay_ibbe(ops: &[TraceOp], cfg: &ReplayConfig) -> Result<ReplayOutcome> {
    let ctx = Arc::new(PairingCtx::new());
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let enclave = Enclave::init(ctx.clone(), cfg.partition_size, &mut rng)?;

    let mut gs: Option<GroupState> = None;
    let (mut adds, mut removes, mut repartitions) = (0, 0, 0);
    let mut admin_time = Duration::ZERO;
    let mut admin_counts = OpCounts::default();
    for (i, op) in ops.iter().enumerate() {
        let before = ctx.counts();
        let start = Instant::now();
        match (op.op, gs.as_mut()) {
            (OpKind::Add, None) => {
                gs = Some(groups::create_group(&enclave, GROUP_ID, &[&op.user_id], cfg.partition_size)?);
            }
            (OpKind::Add, Some(state)) => {
                groups::add_user(&enclave, state, &op.user_id).map_err(|e| trace_error(i, e))?;
            }
            (OpKind::Remove, None) => {
                return Err(trace_error(i, Error::NotMember(op.user_id.clone())));
            }
            (OpKind::Remove, Some(state)) => {
                groups::remove_user(&enclave, state, &op.user_id).map_err(|e| trace_error(i, e))?;
                if groups::maybe_repartition(&enclave, state)? {
                    repartitions += 1;
                }
            }
        }
        admin_time += start.elapsed();
        admin_counts = admin_counts + (ctx.counts() - before);
        match op.op {
            OpKind::Add => adds += 1,
            OpKind::Remove => removes += 1,
        }
        if cfg.check_each_op {
            if let Some(state) = &gs {
                state.check_consistency()?;
            }
        }
    }

    let members: BTreeSet<String> = gs
        .as_ref()
        .map(|s| s.members().map(str::to_string).collect())
        .unwrap_or_default();
    let (mut derive_time, mut derive_counts) = (Duration::ZERO, OpCounts::default());
    let mut samples = 0;
    if let Some(state) = &gs {
        state.check_consistency()?;
        let gk = GroupKey(
            enclave
                .unseal(state.sealed_gk())?
                .try_into()
                .map_err(|_| Error::Integrity)?,
        );
        let all: Vec<&String> = members.iter().collect();
        for idx in sample_indices(all.len(), cfg.derive_samples) {
            let user = all[idx];
            let uk = enclave.extract_user_key(user)?;
            let partition = state.partition_of(user).expect("member has a partition");
            let before = ctx.counts();
            let start = Instant::now();
            let derived = groups::derive_group_key(&ctx, enclave.public_key(), partition, user, &uk)?;
            derive_time += start.elapsed();
            derive_counts = derive_counts + (ctx.counts() - before);
            if derived != gk {
                return Err(Error::Authentication);
            }
            samples += 1;
        }
    }
    let per = |v: u64| if samples == 0 { 0.0 } else { v as f64 / samples as f64 };
    let summary = ReplaySummary {
        scheme: Scheme::IbbeSgx.to_string(),
        partition_size: cfg.partition_size,
        ops: ops.len(),
        adds,
        removes,
        repartitions,
        admin_ms: ms(admin_time),
        admin_group_exp: admin_counts.group_exp(),
        admin_g1_exp: admin_counts.g1_exp,
        admin_g2_exp: admin_counts.g2_exp,
        admin_gt_exp: admin_counts.gt_exp,
        admin_scalar_ops: admin_counts.scalar_ops(),
        admin_wraps: 0,
        derive_samples: samples,
        mean_derive_ms: if samples == 0 { 0.0 } else { ms(derive_time) / samples as f64 },
        mean_derive_scalar_ops: per(derive_counts.scalar_ops()),
        mean_derive_pairings: per(derive_counts.pairings),
        final_members: members.len(),
        final_partitions: gs.as_ref().map_or(0, |s| s.partitions().len()),
        final_metadata_bytes: gs.as_ref().map_or(0, GroupState::metadata_bytes),
    };
    Ok(ReplayOutcome {
        summary,
        admin_counts,
        members,
    })
}

fn replay_he(ops: &[TraceOp], cfg: &ReplayConfig) -> Result<ReplayOutcome> {
    let he = HeCtx::new();
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut keys: BTreeMap<String, HeUserKeyPair> = BTreeMap::new();
    let mut directory: BTreeMap<String, HePublicKey> = BTreeMap::new();
    let mut gk = GroupKey([0; 32]);
    rng.fill_bytes(&mut gk.0);
    let mut meta = HeGroupMeta {
        group_id: GROUP_ID.to_string(),
        entries: BTreeMap::new(),
    };

    let (mut adds, mut removes) = (0, 0);
    let mut admin_time = Duration::ZERO;
    for (i, op) in ops.iter().enumerate() {
        match op.op {
            OpKind::Add => {
                // key generation is the user's business, not the administrator's
                let pair = HeUserKeyPair::generate(&op.user_id, &mut rng);
                let public = *pair.public();
                let start = Instant::now();
                hybrid::he_add_user(&he, &mut meta, &op.user_id, &public, &gk, &mut rng)
                    .map_err(|e| trace_error(i, e))?;
                admin_time += start.elapsed();
                directory.insert(op.user_id.clone(), public);
                keys.insert(op.user_id.clone(), pair);
                adds += 1;
            }
            OpKind::Remove => {
                let start = Instant::now();
                rng.fill_bytes(&mut gk.0);
                hybrid::he_remove_user(&he, &mut meta, &op.user_id, &directory, &gk, &mut rng)
                    .map_err(|e| trace_error(i, e))?;
                admin_time += start.elapsed();
                directory.remove(&op.user_id);
                keys.remove(&op.user_id);
                removes += 1;
            }
        }
    }

    let members: BTreeSet<String> = meta.entries.keys().cloned().collect();
    let all: Vec<&String> = members.iter().collect();
    let mut derive_time = Duration::ZERO;
    let mut samples = 0;
    for idx in sample_indices(all.len(), cfg.derive_samples) {
        let start = Instant::now();
        let derived = hybrid::he_unwrap(&he, &meta, &keys[all[idx]])?;
        derive_time += start.elapsed();
        if derived != gk {
            return Err(Error::Authentication);
        }
        samples += 1;
    }
    let summary = ReplaySummary {
        scheme: Scheme::He.to_string(),
        partition_size: 0,
        ops: ops.len(),
        adds,
        removes,
        repartitions: 0,
        admin_ms: ms(admin_time),
        admin_group_exp: 0,
        admin_g1_exp: 0,
        admin_g2_exp: 0,
        admin_gt_exp: 0,
        admin_scalar_ops: 0,
        admin_wraps: he.wraps(),
        derive_samples: samples,
        mean_derive_ms: if samples == 0 { 0.0 } else { ms(derive_time) / samples as f64 },
        mean_derive_scalar_ops: 0.0,
        mean_derive_pairings: 0.0,
        final_members: members.len(),
        final_partitions: 0,
        final_metadata_bytes: meta.encoded_len(),
    };
    Ok(ReplayOutcome {
        summary,
        admin_counts: OpCounts::default(),
        members,
    })
}
