use std::ops::Sub;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

/// Monotone operation counters, incremented atomically.
#[derive(Debug, Default)]
pub struct OpCounters {
    g1_exp: AtomicU64,
    g2_exp: AtomicU64,
    gt_exp: AtomicU64,
    pairings: AtomicU64,
    scalar_mul: AtomicU64,
    scalar_add: AtomicU64,
    scalar_inv: AtomicU64,
    hashes: AtomicU64,
}

impl OpCounters {
    pub(crate) fn bump_g1_exp(&self, n: u64) {
        self.g1_exp.fetch_add(n, Ordering::Relaxed);
    }
    pub(crate) fn bump_g2_exp(&self, n: u64) {
        self.g2_exp.fetch_add(n, Ordering::Relaxed);
    }
    pub(crate) fn bump_gt_exp(&self, n: u64) {
        self.gt_exp.fetch_add(n, Ordering::Relaxed);
    }
    pub(crate) fn bump_pairing(&self) {
        self.pairings.fetch_add(1, Ordering::Relaxed);
    }
    pub(crate) fn bump_scalar_mul(&self, n: u64) {
        self.scalar_mul.fetch_add(n, Ordering::Relaxed);
    }
    pub(crate) fn bump_scalar_add(&self, n: u64) {
        self.scalar_add.fetch_add(n, Ordering::Relaxed);
    }
    pub(crate) fn bump_scalar_inv(&self) {
        self.scalar_inv.fetch_add(1, Ordering::Relaxed);
    }
    pub(crate) fn bump_hash(&self) {
        self.hashes.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> OpCounts {
        OpCounts {
            g1_exp: self.g1_exp.load(Ordering::Relaxed),
            g2_exp: self.g2_exp.load(Ordering::Relaxed),
            gt_exp: self.gt_exp.load(Ordering::Relaxed),
            pairings: self.pairings.load(Ordering::Relaxed),
            scalar_mul: self.scalar_mul.load(Ordering::Relaxed),
            scalar_add: self.scalar_add.load(Ordering::Relaxed),
            scalar_inv: self.scalar_inv.load(Ordering::Relaxed),
            hashes: self.hashes.load(Ordering::Relaxed),
        }
    }
}

/// A point-in-time reading of [`OpCounters`], or the difference of two.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub g1_exp: u64,
    pub g2_exp: u64,
    pub gt_exp: u64,
    pub pairings: u64,
    pub scalar_mul: u64,
    pub scalar_add: u64,
    pub scalar_inv: u64,
    pub hashes: u64,
}

impl OpCounts {
    /// Exponentiations in the source groups G1 and G2.
    pub fn group_exp(&self) -> u64 {
        self.g1_exp + self.g2_exp
    }

    /// Field multiplications, additions and inversions.
    pub fn scalar_ops(&self) -> u64 {
        self.scalar_mul + self.scalar_add + self.scalar_inv
    }
}

impl Sub for OpCounts {
    type Output = OpCounts;
    fn sub(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            g1_exp: self.g1_exp - rhs.g1_exp,
            g2_exp: self.g2_exp - rhs.g2_exp,
            gt_exp: self.gt_exp - rhs.gt_exp,
            pairings: self.pairings - rhs.pairings,
            scalar_mul: self.scalar_mul - rhs.scalar_mul,
            scalar_add: self.scalar_add - rhs.scalar_add,
            scalar_inv: self.scalar_inv - rhs.scalar_inv,
            hashes: self.hashes - rhs.hashes,
        }
    }
}

impl std::ops::Add for OpCounts {
    type Output = OpCounts;
    fn add(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            g1_exp: self.g1_exp + rhs.g1_exp,
            g2_exp: self.g2_exp + rhs.g2_exp,
            gt_exp: self.gt_exp + rhs.gt_exp,
            pairings: self.pairings + rhs.pairings,
            scalar_mul: self.scalar_mul + rhs.scalar_mul,
            scalar_add: self.scalar_add + rhs.scalar_add,
            scalar_inv: self.scalar_inv + rhs.scalar_inv,
            hashes: self.hashes + rhs.hashes,
        }
    }
}
