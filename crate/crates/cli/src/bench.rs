//! Micro-benchmarks. Each configuration yields one [`BenchRecord`]: the
//! median and mean wall time over the measured iterations, and the op
//! counters of one iteration (they do not vary between iterations).

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use enclave_share::algebra::{OpCounts, PairingCtx, G1_BYTES};
use enclave_share::asky::{self, Action, FileAccessKey, Role};
use enclave_share::enclave::Enclave;
use enclave_share::groups::{self, GroupKey};
use enclave_share::hybrid::{self, HeCtx, HeGroupMeta, HePublicKey, HeUserKeyPair};
use enclave_share::replay::Scheme;
use enclave_share::store::MemoryStore;
use enclave_share::Result;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

pub const WARMUP: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Op {
    Setup,
    Extract,
    Create,
    Add,
    Remove,
    Decrypt,
    Envelope,
    Metadata,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRecord {
    pub scheme: String,
    pub operation: String,
    pub group_size: usize,
    pub partition_size: usize,
    pub iterations: usize,
    pub median_ms: f64,
    pub mean_ms: f64,
    pub g1_exp: u64,
    pub g2_exp: u64,
    pub gt_exp: u64,
    pub group_exp: u64,
    pub pairings: u64,
    pub scalar_mul: u64,
    pub scalar_add: u64,
    pub scalar_inv: u64,
    pub hashes: u64,
    pub he_wraps: u64,
    pub he_unwraps: u64,
    pub metadata_bytes: usize,
}

pub struct BenchConfig {
    pub op: Op,
    pub scheme: Scheme,
    pub group_sizes: Vec<usize>,
    pub partition_sizes: Vec<usize>,
    pub iters: usize,
    pub seed: u64,
}

/// One measured run: elapsed time, counters, and metadata size afterwards.
struct Sample {
    ms: f64,
    counts: OpCounts,
    wraps: u64,
    unwraps: u64,
    metadata_bytes: usize,
}

fn timed<T>(ctx: &PairingCtx, f: impl FnOnce() -> T) -> (T, f64, OpCounts) {
    let start = Instant::now();
    let (out, counts) = ctx.measure(f);
    (out, start.elapsed().as_secs_f64() * 1e3, counts)
}

fn user(i: usize) -> String {
    format!("user{i:07}")
}

fn users(n: usize) -> Vec<String> {
    (0..n).map(user).collect()
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

struct Harness {
    seed: u64,
    enclaves: BTreeMap<usize, Enclave>,
}

impl Harness {
    fn rng(&self, salt: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    fn enclave(&mut self, n: usize) -> Result<&Enclave> {
        if !self.enclaves.contains_key(&n) {
            let mut rng = self.rng(n as u64);
            let e = Enclave::init(Arc::new(PairingCtx::new()), n, &mut rng)?;
            self.enclaves.insert(n, e);
        }
        Ok(&self.enclaves[&n])
    }
}

fn ibbe_sample(h: &mut Harness, op: Op, size: usize, n: usize, iter: usize) -> Result<Sample> {
    if op == Op::Setup {
        let ctx = Arc::new(PairingCtx::new());
        let mut rng = h.rng(iter as u64);
        let start = Instant::now();
        let e = Enclave::init(ctx.clone(), n, &mut rng)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        return Ok(Sample {
            ms,
            counts: ctx.counts(),
            wraps: 0,
            unwraps: 0,
            metadata_bytes: e.public_key().to_bytes().len(),
        });
    }
    let e = h.enclave(n)?;
    let ctx = e.ctx();
    let sample = |ms, counts, metadata_bytes| Sample {
        ms,
        counts,
        wraps: 0,
        unwraps: 0,
        metadata_bytes,
    };
    let members = users(size);
    match op {
        Op::Setup => unreachable!(),
        Op::Extract => {
            let id = format!("extract{iter}");
            let (r, ms, c) = timed(ctx, || e.extract_user_key(&id));
            r?;
            Ok(sample(ms, c, G1_BYTES))
        }
        Op::Create | Op::Metadata => {
            let (gs, ms, c) = timed(ctx, || groups::create_group(e, "bench", &refs(&members), n));
            Ok(sample(ms, c, gs?.metadata_bytes()))
        }
        Op::Add => {
            let mut gs = groups::create_group(e, "bench", &refs(&members), n)?;
            let (r, ms, c) = timed(ctx, || groups::add_user(e, &mut gs, &user(size)));
            r?;
            Ok(sample(ms, c, gs.metadata_bytes()))
        }
        Op::Remove => {
            let mut gs = groups::create_group(e, "bench", &refs(&members), n)?;
            let (r, ms, c) = timed(ctx, || groups::remove_user(e, &mut gs, &members[0]));
            r?;
            Ok(sample(ms, c, gs.metadata_bytes()))
        }
        Op::Decrypt => {
            let gs = groups::create_group(e, "bench", &refs(&members), n)?;
            let p = gs.partition_of(&members[0]).expect("member has a partition");
            let uk = e.extract_user_key(&members[0])?;
            let (r, ms, c) = timed(ctx, || groups::derive_group_key(ctx, e.public_key(), p, &members[0], &uk));
            r?;
            Ok(sample(ms, c, p.encoded_len()))
        }
        Op::Envelope => unreachable!("handled by envelope_samples"),
    }
}

fn he_sample(h: &Harness, op: Op, size: usize, iter: usize) -> Result<Sample> {
    let mut rng = h.rng(iter as u64);
    let he = HeCtx::new();
    let ids = users(size + 1);
    let keys: Vec<HeUserKeyPair> = ids.iter().map(|u| HeUserKeyPair::generate(u, &mut rng)).collect();
    let directory: BTreeMap<String, HePublicKey> =
        keys.iter().map(|k| (k.user_id().to_string(), *k.public())).collect();
    let members: Vec<(&str, &HePublicKey)> = keys[..size].iter().map(|k| (k.user_id(), k.public())).collect();
    let mut gk = GroupKey([0; 32]);
    rng.fill_bytes(&mut gk.0);

    let start = Instant::now();
    let run = |meta: &HeGroupMeta, ms: f64| Sample {
        ms,
        counts: OpCounts::default(),
        wraps: he.wraps(),
        unwraps: he.unwraps(),
        metadata_bytes: meta.encoded_len(),
    };
    match op {
        Op::Create | Op::Metadata => {
            let meta = hybrid::he_create_group(&he, "bench", &members, &gk, &mut rng)?;
            Ok(run(&meta, start.elapsed().as_secs_f64() * 1e3))
        }
        Op::Add => {
            let mut meta = hybrid::he_create_group(&he, "bench", &members, &gk, &mut rng)?;
            let before = he.wraps();
            let start = Instant::now();
            hybrid::he_add_user(&he, &mut meta, keys[size].user_id(), keys[size].public(), &gk, &mut rng)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            Ok(Sample {
                wraps: he.wraps() - before,
                ..run(&meta, ms)
            })
        }
        Op::Remove => {
            let mut meta = hybrid::he_create_group(&he, "bench", &members, &gk, &mut rng)?;
            let before = he.wraps();
            let mut fresh = GroupKey([0; 32]);
            rng.fill_bytes(&mut fresh.0);
            let start = Instant::now();
            hybrid::he_remove_user(&he, &mut meta, &ids[0], &directory, &fresh, &mut rng)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            Ok(Sample {
                wraps: he.wraps() - before,
                ..run(&meta, ms)
            })
        }
        Op::Decrypt => {
            let meta = hybrid::he_create_group(&he, "bench", &members, &gk, &mut rng)?;
            let before = he.wraps();
            let start = Instant::now();
            hybrid::he_unwrap(&he, &meta, &keys[0])?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            Ok(Sample {
                wraps: he.wraps() - before,
                ..run(&meta, ms)
            })
        }
        Op::Setup | Op::Extract | Op::Envelope => unreachable!("rejected during validation"),
    }
}

/// Standard and indexed enveloping for `readers` readers.
fn envelope_samples(h: &mut Harness, readers: usize) -> Result<[Sample; 2]> {
    let e = h.enclave(1)?;
    let docs = MemoryStore::new();
    let writer = format!("writer-{readers}");
    let group = format!("readers-{readers}");
    if asky::group_acl(e, &group).is_none() {
        asky::create_user(e, &docs, &writer)?;
        asky::set_membership(e, &docs, &group, &writer, Role::Writer, Action::Add)?;
        for i in 0..readers {
            let id = format!("{group}-{i}");
            asky::create_user(e, &docs, &id)?;
            asky::set_membership(e, &docs, &group, &id, Role::Reader, Action::Add)?;
        }
    }
    let fk = FileAccessKey([0x5a; 32]);
    let sample = |indexed: bool| {
        let start = Instant::now();
        let env = if indexed {
            asky::key_enveloping_indexed(e, &writer, &group, &fk)
        } else {
            asky::key_enveloping(e, &writer, &group, &fk)
        };
        Sample {
            ms: start.elapsed().as_secs_f64() * 1e3,
            counts: OpCounts::default(),
            wraps: 0,
            unwraps: 0,
            metadata_bytes: env.fragments_len(),
        }
    };
    Ok([sample(false), sample(true)])
}

fn record(scheme: &str, op: &str, size: usize, n: usize, mut samples: Vec<Sample>) -> BenchRecord {
    let measured: Vec<Sample> = samples.split_off(WARMUP.min(samples.len().saturating_sub(1)));
    let mut ms: Vec<f64> = measured.iter().map(|s| s.ms).collect();
    let mean = ms.iter().sum::<f64>() / ms.len() as f64;
    let last = measured.last().expect("at least one sample");
    BenchRecord {
        scheme: scheme.to_string(),
        operation: op.to_string(),
        group_size: size,
        partition_size: n,
        iterations: measured.len(),
        median_ms: median(&mut ms),
        mean_ms: mean,
        g1_exp: last.counts.g1_exp,
        g2_exp: last.counts.g2_exp,
        gt_exp: last.counts.gt_exp,
        group_exp: last.counts.group_exp(),
        pairings: last.counts.pairings,
        scalar_mul: last.counts.scalar_mul,
        scalar_add: last.counts.scalar_add,
        scalar_inv: last.counts.scalar_inv,
        hashes: last.counts.hashes,
        he_wraps: last.wraps,
        he_unwraps: last.unwraps,
        metadata_bytes: last.metadata_bytes,
    }
}

/// Operations that make no sense for a scheme.
pub fn check(op: Op, scheme: Scheme) -> std::result::Result<(), String> {
    match (op, scheme) {
        (Op::Setup | Op::Extract, Scheme::He) => Err(format!("{op:?} has no hybrid-encryption counterpart")),
        _ => Ok(()),
    }
}

pub fn run(cfg: &BenchConfig, mut emit: impl FnMut(BenchRecord) -> Result<()>) -> Result<()> {
    let mut h = Harness {
        seed: cfg.seed,
        enclaves: BTreeMap::new(),
    };
    let name = format!("{:?}", cfg.op).to_lowercase();
    // metadata sizes are deterministic; one run is enough
    let runs = if cfg.op == Op::Metadata { 1 } else { cfg.iters + WARMUP };
    match (cfg.op, cfg.scheme) {
        (Op::Envelope, _) => {
            for &r in &cfg.group_sizes {
                let (mut std_s, mut idx_s) = (Vec::new(), Vec::new());
                for _ in 0..runs {
                    let [a, b] = envelope_samples(&mut h, r)?;
                    std_s.push(a);
                    idx_s.push(b);
                }
                emit(record("asky-standard", &name, r, 0, std_s))?;
                emit(record("asky-indexed", &name, r, 0, idx_s))?;
            }
        }
        (Op::Setup | Op::Extract, Scheme::IbbeSgx) => {
            for &n in &cfg.partition_sizes {
                let samples = (0..runs).map(|i| ibbe_sample(&mut h, cfg.op, 0, n, i)).collect::<Result<_>>()?;
                emit(record("ibbe-sgx", &name, 0, n, samples))?;
            }
        }
        (_, Scheme::IbbeSgx) => {
            for &size in &cfg.group_sizes {
                for &n in &cfg.partition_sizes {
                    let samples = (0..runs)
                        .map(|i| ibbe_sample(&mut h, cfg.op, size, n, i))
                        .collect::<Result<_>>()?;
                    emit(record("ibbe-sgx", &name, size, n, samples))?;
                }
            }
        }
        (_, Scheme::He) => {
            for &size in &cfg.group_sizes {
                let samples = (0..runs).map(|i| he_sample(&h, cfg.op, size, i)).collect::<Result<_>>()?;
                emit(record("he", &name, size, 0, samples))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(op: Op, scheme: Scheme, sizes: &[usize], parts: &[usize]) -> Vec<BenchRecord> {
        let cfg = BenchConfig {
            op,
            scheme,
            group_sizes: sizes.to_vec(),
            partition_sizes: parts.to_vec(),
            iters: 2,
            seed: 1,
        };
        let mut out = Vec::new();
        run(&cfg, |r| {
            out.push(r);
            Ok(())
        })
        .unwrap();
        out
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn warmup_runs_are_excluded() {
        let r = rows(Op::Add, Scheme::IbbeSgx, &[4], &[4]);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].iterations, 2);
        assert_eq!(r[0].group_exp, 3);
    }

    #[test]
    fn update_counters_match_the_scheme() {
        let add = rows(Op::Add, Scheme::IbbeSgx, &[3], &[4]);
        assert_eq!((add[0].g1_exp, add[0].g2_exp), (0, 2));
        let rem = rows(Op::Remove, Scheme::IbbeSgx, &[8], &[4]);
        assert_eq!(rem[0].group_exp, 3 + 2);
        let he = rows(Op::Remove, Scheme::He, &[8], &[4]);
        assert_eq!((he[0].he_wraps, he[0].partition_size), (7, 0));
    }

    #[test]
    fn envelope_rows_report_fragment_bytes() {
        let r = rows(Op::Envelope, Scheme::IbbeSgx, &[10], &[1]);
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].metadata_bytes, 600);
        assert_eq!(r[1].metadata_bytes, 896);
    }

    #[test]
    fn setup_has_no_he_counterpart() {
        assert!(check(Op::Setup, Scheme::He).is_err());
        assert!(check(Op::Decrypt, Scheme::He).is_ok());
    }
}
