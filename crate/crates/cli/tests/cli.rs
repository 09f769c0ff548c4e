use std::process::{Command, Output};

fn eshare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eshare")).args(args).output().expect("spawn eshare")
}

fn rows(out: &Output) -> Vec<csv::StringRecord> {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    r.records().map(Result::unwrap).collect()
}

fn column(out: &Output, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let i = r.headers().unwrap().iter().position(|h| h == name).expect(name);
    r.records().map(|rec| rec.unwrap()[i].to_string()).collect()
}

#[test]
fn bench_create_emits_one_populated_row() {
    let out = eshare(&["bench", "create", "--scheme", "ibbe-sgx", "--group-size", "40", "--partition-size", "20", "--iters", "1"]);
    let rows = rows(&out);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].iter().all(|f| !f.is_empty()));
    // two partitions of 321 fixed bytes plus 4 + 11 bytes of index per member
    assert_eq!(column(&out, "metadata_bytes"), vec![(2 * 321 + 40 * 15).to_string()]);
}

#[test]
fn he_metadata_is_affine_in_group_size() {
    let out = eshare(&["bench", "create", "--scheme", "he", "--group-size", "10..1000x10", "--iters", "1"]);
    let sizes: Vec<i64> = column(&out, "metadata_bytes").iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(sizes.len(), 3);
    assert_eq!((sizes[2] - sizes[1]) * 10, (sizes[1] - sizes[0]) * 100);
}

#[test]
fn decrypt_counters_grow_superlinearly() {
    let out = eshare(&["bench", "decrypt", "--group-size", "64", "--partition-size", "16..64", "--iters", "1"]);
    let muls: Vec<f64> = column(&out, "scalar_mul").iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(muls.len(), 3);
    assert!(muls[1] / muls[0] > 3.0 && muls[2] / muls[1] > 3.0, "{muls:?}");
}

#[test]
fn envelope_reports_both_variants() {
    let out = eshare(&["bench", "envelope", "--group-size", "10", "--iters", "1"]);
    assert_eq!(column(&out, "scheme"), vec!["asky-standard", "asky-indexed"]);
    assert_eq!(column(&out, "metadata_bytes"), vec!["600", "896"]);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["bench", "setup", "--scheme", "he"][..],
        &["bench", "envelope", "--scheme", "he"],
        &["bench", "create", "--group-size", "9..3"],
        &["bench", "create", "--iters", "0"],
        &["bench", "frobnicate"],
        &["replay"],
        &["trace", "gen", "--revocation-ratio", "1.5"],
    ] {
        assert_eq!(eshare(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    assert_eq!(eshare(&["replay", "--trace", missing.to_str().unwrap()]).status.code(), Some(1));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "op,user_id\nremove,ghost\n").unwrap();
    assert_eq!(eshare(&["replay", "--trace", bad.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn generated_trace_replays_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let p = path.to_str().unwrap();
    assert!(eshare(&["trace", "gen", "--ops", "300", "--revocation-ratio", "0.3", "--seed", "5", "--out", p]).status.success());
    let run = || eshare(&["replay", "--trace", p, "--partition-size", "8..16", "--seed", "2"]);
    let (a, b) = (run(), run());
    assert_eq!(rows(&a).len(), 2);
    for col in ["admin_group_exp", "admin_scalar_ops", "repartitions", "final_metadata_bytes", "mean_derive_scalar_ops"] {
        assert_eq!(column(&a, col), column(&b, col), "{col}");
    }
    assert_eq!(column(&a, "removes"), vec!["90", "90"]);
}

#[test]
fn add_only_trace_never_repartitions() {
    let out = eshare(&["replay", "--revocation-ratio", "0", "--ops", "1000", "--partition-size", "100"]);
    assert_eq!(column(&out, "adds"), vec!["1000"]);
    assert_eq!(column(&out, "repartitions"), vec!["0"]);
    assert_eq!(column(&out, "final_partitions"), vec!["10"]);
}

#[test]
fn he_replay_counts_wraps() {
    let out = eshare(&["replay", "--scheme", "he", "--revocation-ratio", "0", "--ops", "50"]);
    assert_eq!(column(&out, "admin_wraps"), vec!["50"]);
    assert_eq!(column(&out, "partition_size"), vec!["0"]);
}

#[test]
fn out_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let out = eshare(&["bench", "extract", "--partition-size", "4", "--iters", "1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("scheme,operation,"));
    assert_eq!(text.lines().count(), 2);
}
