//! `eshare`: benchmarks, trace generation and trace replay.

mod bench;
mod range;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use enclave_share::replay::{self, ReplayConfig, Scheme};
use enclave_share::trace;

use crate::bench::{BenchConfig, Op};
use crate::range::SizeRange;

#[derive(Parser)]
#[command(name = "eshare", version, about = "Group key management benchmarks and trace replay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Micro-benchmark one operation; one CSV row per configuration.
    Bench(BenchArgs),
    /// Replay a membership trace and print a summary row per partition size.
    Replay(ReplayArgs),
    /// Membership traces.
    #[command(subcommand)]
    Trace(TraceCommand),
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    op: Op,
    /// ibbe-sgx or he.
    #[arg(long)]
    scheme: Option<Scheme>,
    /// Group sizes, `A..B[xStep]`.
    #[arg(long, default_value = "100")]
    group_size: SizeRange,
    /// Partition sizes, `A..B[xStep]`.
    #[arg(long, default_value = "100")]
    partition_size: SizeRange,
    /// Measured iterations, after 2 warm-up runs.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    iters: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["trace", "revocation_ratio"])))]
struct ReplayArgs {
    /// CSV trace file (`op,user`).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Replay a synthetic trace with this share of removals instead.
    #[arg(long)]
    revocation_ratio: Option<f64>,
    /// Length of the synthetic trace.
    #[arg(long, default_value_t = 10_000, requires = "revocation_ratio")]
    ops: usize,
    #[arg(long, default_value = "ibbe-sgx")]
    scheme: Scheme,
    /// Partition sizes, `A..B[xStep]`; ignored by `he`.
    #[arg(long, default_value = "1000")]
    partition_size: SizeRange,
    /// Members sampled for derivation cost.
    #[arg(long, default_value_t = 4)]
    derive_samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TraceCommand {
    /// Write a synthetic trace.
    Gen {
        #[arg(long, default_value_t = 10_000)]
        ops: usize,
        #[arg(long, default_value_t = 0.0)]
        revocation_ratio: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn sink(out: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    if a.op == Op::Envelope && a.scheme.is_some() {
        return Err(Failure::Usage("envelope does not take --scheme".into()));
    }
    let scheme = a.scheme.unwrap_or(Scheme::IbbeSgx);
    bench::check(a.op, scheme).map_err(Failure::Usage)?;
    let cfg = BenchConfig {
        op: a.op,
        scheme,
        group_sizes: a.group_size.values(),
        partition_sizes: a.partition_size.values(),
        iters: a.iters as usize,
        seed: a.seed,
    };
    let mut w = csv::Writer::from_writer(sink(&a.out)?);
    bench::run(&cfg, |r| {
        w.serialize(r).map_err(|e| enclave_share::Error::Io(e.into()))?;
        w.flush().map_err(enclave_share::Error::Io)
    })?;
    Ok(())
}

fn replay_cmd(a: ReplayArgs) -> Result<(), Failure> {
    let ops = match (&a.trace, a.revocation_ratio) {
        (Some(path), _) => trace::parse_trace(&std::fs::read(path)?)?,
        (None, Some(ratio)) => trace::gen_synthetic(a.ops, ratio, a.seed)?,
        (None, None) => unreachable!("clap requires a source"),
    };
    let sizes = match a.scheme {
        Scheme::He => vec![0],
        Scheme::IbbeSgx => a.partition_size.values(),
    };
    let mut w = csv::Writer::from_writer(sink(&a.out)?);
    for n in sizes {
        let mut cfg = ReplayConfig::new(a.scheme, n.max(1), a.seed);
        cfg.derive_samples = a.derive_samples;
        let mut out = replay::replay(&ops, &cfg)?;
        out.summary.partition_size = n;
        w.serialize(&out.summary)?;
        w.flush()?;
    }
    Ok(())
}

fn trace_cmd(c: TraceCommand) -> Result<(), Failure> {
    match c {
        TraceCommand::Gen {
            ops,
            revocation_ratio,
            seed,
            out,
        } => {
            let t = trace::gen_synthetic(ops, revocation_ratio, seed).map_err(|e| Failure::Usage(e.to_string()))?;
            sink(&out)?.write_all(&trace::serialize(&t))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Replay(a) => replay_cmd(a),
        Command::Trace(c) => trace_cmd(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("eshare: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("eshare: {msg}");
            ExitCode::from(1)
        }
    }
}
