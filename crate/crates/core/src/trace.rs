//! Membership traces: sequences of adds and removes for replay.
//!
//! CSV with one `op,user_id` row per operation and an optional
//! `op,user_id` header. A trace is valid when every add names an absent
//! user and every remove a present one.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    Add,
    Remove,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpKind::Add => "add",
            OpKind::Remove => "remove",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceOp {
    pub op: OpKind,
    pub user_id: String,
}

impl TraceOp {
    pub fn add(user_id: impl Into<String>) -> Self {
        TraceOp {
            op: OpKind::Add,
            user_id: user_id.into(),
        }
    }

    pub fn remove(user_id: impl Into<String>) -> Self {
        TraceOp {
            op: OpKind::Remove,
            user_id: user_id.into(),
        }
    }
}

/// Applies `op` to `members`, rejecting invalid transitions.
fn step(members: &mut HashSet<String>, op: &TraceOp) -> std::result::Result<(), String> {
    if op.user_id.is_empty() {
        return Err("empty user id".into());
    }
    match op.op {
        OpKind::Add if !members.insert(op.user_id.clone()) => {
            Err(format!("add of present user {:?}", op.user_id))
        }
        OpKind::Remove if !members.remove(&op.user_id) => {
            Err(format!("remove of absent user {:?}", op.user_id))
        }
        _ => Ok(()),
    }
}

/// Checks the add/remove invariants. Line numbers in errors are 1-based
/// operation indices.
pub fn validate(ops: &[TraceOp]) -> Result<()> {
    final_members(ops).map(|_| ())
}

/// Membership after replaying `ops`, validating along the way.
pub fn final_members(ops: &[TraceOp]) -> Result<HashSet<String>> {
    let mut members = HashSet::new();
    for (i, op) in ops.iter().enumerate() {
        step(&mut members, op).map_err(|reason| Error::Trace { line: i + 1, reason })?;
    }
    Ok(members)
}

/// `n_ops` operations of which `round(ratio * n_ops)` are removals of a
/// uniformly chosen member, placed uniformly at random. A removal that
/// finds the group empty becomes an add and is made up by turning a later
/// add into a removal. Users are named `u0`, `u1`, ... in order of arrival.
pub fn gen_synthetic(n_ops: usize, revocation_ratio: f64, seed: u64) -> Result<Vec<TraceOp>> {
    if !(0.0..=1.0).contains(&revocation_ratio) {
        return Err(Error::InvalidParameter(format!(
            "revocation ratio {revocation_ratio} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let removes = (revocation_ratio * n_ops as f64).round() as usize;
    let mut slots = vec![false; n_ops];
    slots[..removes].fill(true);
    slots.shuffle(&mut rng);

    let mut members: Vec<String> = Vec::new();
    let mut next_id = 0usize;
    let mut owed = 0usize;
    let mut ops = Vec::with_capacity(n_ops);
    for wants_remove in slots {
        let remove = if members.is_empty() {
            if wants_remove {
                owed += 1;
            }
            false
        } else if wants_remove {
            true
        } else if owed > 0 {
            owed -= 1;
            true
        } else {
            false
        };
        if remove {
            let i = rng.gen_range(0..members.len());
            ops.push(TraceOp::remove(members.swap_remove(i)));
        } else {
            let id = format!("u{next_id}");
            next_id += 1;
            members.push(id.clone());
            ops.push(TraceOp::add(id));
        }
    }
    Ok(ops)
}

/// Parses and validates a CSV trace. Errors carry the 1-based line number.
pub fn parse_trace(bytes: &[u8]) -> Result<Vec<TraceOp>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut ops = Vec::new();
    let mut members = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Trace {
            line: e.position().map_or(i + 1, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        let fail = |reason: String| Error::Trace { line, reason };
        if record.len() != 2 {
            return Err(fail(format!("expected 2 fields, found {}", record.len())));
        }
        if i == 0 && &record[0] == "op" && &record[1] == "user_id" {
            continue;
        }
        let op = match &record[0] {
            "add" => OpKind::Add,
            "remove" => OpKind::Remove,
            other => return Err(fail(format!("unknown op {other:?}"))),
        };
        let op = TraceOp {
            op,
            user_id: record[1].to_string(),
        };
        step(&mut members, &op).map_err(fail)?;
        ops.push(op);
    }
    Ok(ops)
}

/// CSV with a header row.
pub fn serialize(ops: &[TraceOp]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["op", "user_id"]).expect("writing to memory");
    for op in ops {
        w.write_record([op.op.to_string().as_str(), op.user_id.as_str()])
            .expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}
