//! End-to-end tests of the `irgcn` binary: every subcommand runs
//! against real files in a temporary directory, and outputs are checked
//! for shape, determinism, and exit-code discipline.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use irgcn::checkpoint::Checkpoint;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_irgcn"))
}

fn run_ok(args: &[&str], cwd: &Path) -> Output {
    let out = bin().args(args).current_dir(cwd).output().unwrap();
    assert!(
        out.status.success(),
        "command {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_code(args: &[&str], cwd: &Path) -> (i32, String) {
    let out = bin().args(args).current_dir(cwd).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        format!(
            "{}{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        ),
    )
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

/// Generate a small synthetic dataset and a k-shot split; returns the
/// workspace root (everything lives under it).
fn pipeline_fixture(k: usize) -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "synth", "--types", "2", "--nodes", "24", "--relations", "3", "--edges", "30",
            "--rare-edges", "10", "--labels", "2", "--seed", "5", "--out", "data",
        ],
        tmp.path(),
    );
    run_ok(
        &[
            "split", "--graph", "data/graph.tsv", "--nodemap", "data/nodemap.tsv", "--relation",
            "rare", "--mode", "kshot", "--k", &k.to_string(), "--seed", "7", "--out", "split",
        ],
        tmp.path(),
    );
    tmp
}

fn train_args(out: &str, extra: &[&str]) -> Vec<String> {
    let mut args: Vec<String> = [
        "train",
        "--nodemap",
        "data/nodemap.tsv",
        "--train",
        "split/train.tsv",
        "--set",
        "epochs=12",
        "--set",
        "hidden=6",
        "--set",
        "embed_dim=6",
        "--out",
        out,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    args.extend(extra.iter().map(|s| s.to_string()));
    args
}

fn run_owned(args: &[String], cwd: &Path) -> Output {
    let strs: Vec<&str> = args.iter().map(String::as_str).collect();
    run_ok(&strs, cwd)
}

#[test]
fn version_names_binary_and_checkpoint_format() {
    let out = bin().arg("--version").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success());
    assert!(text.contains(env!("CARGO_PKG_VERSION")), "{text}");
    assert!(text.contains("checkpoint format 1"), "{text}");
}

#[test]
fn split_counts_and_determinism() {
    let tmp = pipeline_fixture(4);
    let train = read(&tmp.path().join("split"), "train.tsv");
    let test = read(&tmp.path().join("split"), "test.tsv");
    let rare_train = train.lines().filter(|l| l.contains("\trare\t")).count();
    let rare_test = test.lines().filter(|l| l.contains("\trare\t")).count();
    assert_eq!(rare_train, 4, "k-shot keeps exactly k target edges");
    assert_eq!(rare_train + rare_test, 10, "partition covers the relation");
    assert!(test.lines().all(|l| l.contains("\trare\t")), "test is target-only");

    // Same seed → byte-identical outputs.
    run_ok(
        &[
            "split", "--graph", "data/graph.tsv", "--nodemap", "data/nodemap.tsv", "--relation",
            "rare", "--mode", "kshot", "--k", "4", "--seed", "7", "--out", "split2",
        ],
        tmp.path(),
    );
    assert_eq!(train, read(&tmp.path().join("split2"), "train.tsv"));
    assert_eq!(test, read(&tmp.path().join("split2"), "test.tsv"));

    // Percentage mode: |train ∩ relation| = round(p · |E_rel|).
    run_ok(
        &[
            "split", "--graph", "data/graph.tsv", "--nodemap", "data/nodemap.tsv", "--relation",
            "rare", "--mode", "percent", "--p", "0.5", "--seed", "7", "--out", "split3",
        ],
        tmp.path(),
    );
    let train3 = read(&tmp.path().join("split3"), "train.tsv");
    assert_eq!(train3.lines().filter(|l| l.contains("\trare\t")).count(), 5);
}

#[test]
fn split_usage_errors_exit_2_and_data_errors_exit_1() {
    let tmp = pipeline_fixture(3);
    let base = [
        "split", "--graph", "data/graph.tsv", "--nodemap", "data/nodemap.tsv", "--relation",
        "rare", "--out", "x",
    ];
    let mut missing_k = base.to_vec();
    missing_k.extend(["--mode", "kshot"]);
    let (code, msg) = run_code(&missing_k, tmp.path());
    assert_eq!(code, 2, "{msg}");

    let mut bad_mode = base.to_vec();
    bad_mode.extend(["--mode", "thirds"]);
    let (code, msg) = run_code(&bad_mode, tmp.path());
    assert_eq!(code, 2, "{msg}");

    let (code, msg) = run_code(
        &[
            "split", "--graph", "data/graph.tsv", "--nodemap", "data/nodemap.tsv", "--relation",
            "no_such", "--mode", "kshot", "--k", "1", "--out", "x",
        ],
        tmp.path(),
    );
    assert_eq!(code, 1);
    assert!(msg.contains("no_such"), "{msg}");

    // Unparseable flag value is a usage error from the parser.
    let (code, _) = run_code(
        &[
            "split", "--graph", "data/graph.tsv", "--nodemap", "data/nodemap.tsv", "--relation",
            "rare", "--mode", "kshot", "--k", "lots", "--out", "x",
        ],
        tmp.path(),
    );
    assert_eq!(code, 2);
}

#[test]
fn train_writes_trace_and_is_deterministic() {
    let tmp = pipeline_fixture(4);
    let out1 = run_owned(&train_args("run1", &[]), tmp.path());
    assert!(String::from_utf8_lossy(&out1.stdout).contains("final loss"));

    let loss = read(&tmp.path().join("run1"), "loss.csv");
    let mut lines = loss.lines();
    assert_eq!(lines.next(), Some("epoch,loss"));
    assert_eq!(loss.lines().count(), 13, "header plus one line per epoch");
    let first: f64 = loss.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let last: f64 = loss.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last < first, "loss should drop over training ({first} -> {last})");

    run_owned(&train_args("run2", &[]), tmp.path());
    let ck1 = std::fs::read(tmp.path().join("run1/checkpoint.bin")).unwrap();
    let ck2 = std::fs::read(tmp.path().join("run2/checkpoint.bin")).unwrap();
    assert_eq!(ck1, ck2, "same seed and inputs must give identical checkpoint bytes");

    // A different seed changes the bytes.
    run_owned(&train_args("run3", &["--set".into(), "seed=33".into()]), tmp.path());
    let ck3 = std::fs::read(tmp.path().join("run3/checkpoint.bin")).unwrap();
    assert_ne!(ck1, ck3);
}

#[test]
fn inductive_and_transductive_checkpoints_differ_structurally() {
    let tmp = pipeline_fixture(4);
    run_owned(&train_args("trans", &[]), tmp.path());
    run_owned(
        &train_args(
            "ind",
            &["--set".into(), "mode=inductive".into()],
        ),
        tmp.path(),
    );
    let names = |p: PathBuf| -> Vec<String> {
        Checkpoint::load(p).unwrap().params.into_iter().map(|p| p.name).collect()
    };
    let trans_names = names(tmp.path().join("trans/checkpoint.bin"));
    let ind_names = names(tmp.path().join("ind/checkpoint.bin"));
    assert!(trans_names.iter().any(|n| n == "rel.table"));
    assert!(!ind_names.iter().any(|n| n == "rel.table"), "{ind_names:?}");
    assert!(ind_names.iter().any(|n| n == "relmlp.w1"));
}

#[test]
fn evaluate_reports_one_row_per_query_and_round_trips() {
    let tmp = pipeline_fixture(4);
    run_owned(&train_args("run", &[]), tmp.path());
    let eval_args = [
        "evaluate", "--nodemap", "data/nodemap.tsv", "--train", "split/train.tsv", "--test",
        "split/test.tsv", "--checkpoint", "run/checkpoint.bin", "--out", "eval1",
    ];
    run_ok(&eval_args, tmp.path());
    let ranks = read(&tmp.path().join("eval1"), "ranks.tsv");
    let test_lines = read(&tmp.path().join("split"), "test.tsv").lines().count();
    assert_eq!(ranks.lines().count(), test_lines, "one rank row per held-out edge");
    for line in ranks.lines() {
        assert_eq!(line.split('\t').count(), 5, "head, relation, tail, rank, candidates");
    }
    let metrics = read(&tmp.path().join("eval1"), "metrics.csv");
    assert!(metrics.starts_with("metric,value\nmrr,"));
    let metadata = read(&tmp.path().join("eval1"), "metadata.txt");
    assert!(metadata.contains("policy = all"));
    assert!(metadata.contains("filter = filtered"));

    // Loading the checkpoint again must reproduce the scores exactly.
    let mut again = eval_args;
    again[10] = "eval2";
    run_ok(&again, tmp.path());
    assert_eq!(metrics, read(&tmp.path().join("eval2"), "metrics.csv"));
    assert_eq!(ranks, read(&tmp.path().join("eval2"), "ranks.tsv"));
}

#[test]
fn divergence_exits_1_and_names_the_epoch() {
    let tmp = pipeline_fixture(4);
    let args = train_args("boom", &["--set".into(), "lr=1e100".into()]);
    let strs: Vec<&str> = args.iter().map(String::as_str).collect();
    let (code, msg) = run_code(&strs, tmp.path());
    assert_eq!(code, 1);
    assert!(msg.contains("diverged at epoch"), "{msg}");
}

#[test]
fn unknown_config_keys_abort_before_any_output() {
    let tmp = pipeline_fixture(4);
    let args = train_args("cfgbad", &["--set".into(), "epchs=9".into()]);
    let strs: Vec<&str> = args.iter().map(String::as_str).collect();
    let (code, msg) = run_code(&strs, tmp.path());
    assert_eq!(code, 1);
    assert!(msg.contains("epchs"), "{msg}");
    assert!(!tmp.path().join("cfgbad").exists(), "no partial outputs");

    // Same for a config file with a bad key.
    std::fs::write(tmp.path().join("bad.cfg"), "epochs = 3\nmystery = 1\n").unwrap();
    let args = train_args("cfgbad2", &["--config".into(), "bad.cfg".into()]);
    let strs: Vec<&str> = args.iter().map(String::as_str).collect();
    let (code, msg) = run_code(&strs, tmp.path());
    assert_eq!(code, 1);
    assert!(msg.contains("mystery"), "{msg}");
}

#[test]
fn config_file_and_overrides_layer_in_order() {
    let tmp = pipeline_fixture(4);
    std::fs::write(tmp.path().join("run.cfg"), "epochs = 2\nseed = 100\n").unwrap();
    // --set wins over the file.
    run_ok(
        &[
            "train", "--nodemap", "data/nodemap.tsv", "--train", "split/train.tsv", "--config",
            "run.cfg", "--set", "seed=200", "--out", "layered",
        ],
        tmp.path(),
    );
    let ck = Checkpoint::load(tmp.path().join("layered/checkpoint.bin")).unwrap();
    assert_eq!(ck.seed, 200);
    assert_eq!(ck.epochs, 2);
    assert!(ck.config_text.contains("seed = 200"));
}

#[test]
fn repurpose_emits_descending_hits_and_metadata() {
    let tmp = pipeline_fixture(4);
    run_owned(&train_args("run", &[]), tmp.path());
    // rare runs t0 → t1: candidates are t0 (heads), targets t1 (tails).
    std::fs::write(tmp.path().join("genes.txt"), "n1\nn2\n").unwrap();
    let drugs: String = (0..12).map(|i| format!("n{i}\n")).collect();
    std::fs::write(tmp.path().join("drugs.txt"), drugs).unwrap();
    std::fs::write(tmp.path().join("validation.txt"), "n3\nn5\nn7\n").unwrap();
    run_ok(
        &[
            "repurpose", "--nodemap", "data/nodemap.tsv", "--train", "split/train.tsv",
            "--checkpoint", "run/checkpoint.bin", "--relation", "rare", "--genes", "genes.txt",
            "--drugs", "drugs.txt", "--validation", "validation.txt", "--set", "topk=4",
            "--set", "control_trials=20", "--out", "rep",
        ],
        tmp.path(),
    );
    let hits = read(&tmp.path().join("rep"), "hits.tsv");
    let mut lines = hits.lines();
    assert_eq!(lines.next(), Some("drug\thits"));
    let counts: Vec<usize> = lines.map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(counts.len(), 3, "one row per validation drug");
    assert!(counts.windows(2).all(|w| w[0] >= w[1]), "descending hits: {counts:?}");
    let total: usize = counts.iter().sum();
    assert!(total <= 2 * 4, "hits cannot exceed genes × k");

    let per_gene = read(&tmp.path().join("rep"), "per_gene.tsv");
    assert_eq!(per_gene.lines().count(), 1 + 2 * 4, "header + k rows per gene");

    let meta = read(&tmp.path().join("rep"), "metadata.txt");
    assert!(meta.contains("direction = drug-as-head"));
    assert!(meta.contains("baseline_hits_per_drug = 0.66"), "2·4/12: {meta}");
    assert!(meta.contains("control_mean_hits"));

    // Unknown names exit 1 and are all listed.
    std::fs::write(tmp.path().join("badnames.txt"), "n1\nghost\nphantom\n").unwrap();
    let (code, msg) = run_code(
        &[
            "repurpose", "--nodemap", "data/nodemap.tsv", "--train", "split/train.tsv",
            "--checkpoint", "run/checkpoint.bin", "--relation", "rare", "--genes", "genes.txt",
            "--drugs", "badnames.txt", "--validation", "validation.txt", "--set", "topk=2",
            "--out", "rep2",
        ],
        tmp.path(),
    );
    assert_eq!(code, 1);
    assert!(msg.contains("ghost") && msg.contains("phantom"), "{msg}");
}

#[test]
fn transform_expands_four_relations_by_three_labels_into_twelve() {
    let tmp = tempfile::tempdir().unwrap();
    // Hand-built graph: 4 relations between labeled type a and
    // unlabeled type b, 3 labels on a.
    let mut graph = String::new();
    let mut edges = 0;
    for r in 0..4 {
        for i in 0..6 {
            // a_i → b_{(i+r) mod 6} under relation rel{r}.
            graph.push_str(&format!("a::a{i}\trel{r}\tb::b{}\n", (i + r) % 6));
            edges += 1;
        }
    }
    let mut nodemap = String::new();
    for i in 0..6 {
        nodemap.push_str(&format!("a\ta{i}\t{i}\n"));
    }
    for i in 0..6 {
        nodemap.push_str(&format!("b\tb{i}\t{i}\n"));
    }
    let mut labels = String::new();
    for i in 0..6 {
        labels.push_str(&format!("a\ta{i}\tl{}\n", i % 3));
    }
    std::fs::write(tmp.path().join("graph.tsv"), graph).unwrap();
    std::fs::write(tmp.path().join("nodemap.tsv"), nodemap).unwrap();
    std::fs::write(tmp.path().join("labels.tsv"), labels).unwrap();
    let out = run_ok(
        &[
            "transform", "--graph", "graph.tsv", "--nodemap", "nodemap.tsv", "--labels",
            "labels.tsv", "--out", "t",
        ],
        tmp.path(),
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("4 relations became 12"));
    let manifest = read(&tmp.path().join("t"), "manifest.txt");
    assert!(manifest.contains("relations_after = 12"));
    assert!(manifest.contains(&format!("edges = {edges}")));
    let refined = read(&tmp.path().join("t"), "graph.tsv");
    assert_eq!(refined.lines().count(), edges, "every edge survives");
}

#[test]
fn gradcheck_passes_quickly_at_small_trial_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_ok(&["gradcheck", "--trials", "3"], tmp.path());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("all gradients verified"), "{text}");
}

#[test]
fn missing_files_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, msg) = run_code(
        &[
            "split", "--graph", "absent.tsv", "--nodemap", "absent2.tsv", "--relation", "r",
            "--mode", "kshot", "--k", "1", "--out", "x",
        ],
        tmp.path(),
    );
    assert_eq!(code, 1);
    assert!(msg.contains("error"), "{msg}");
}
