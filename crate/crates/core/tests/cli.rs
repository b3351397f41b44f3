use std::path::Path;
use std::process::Command;

use chasm::cli::{lookup_report, run_with, split_query_videos};
use chasm::geometry::mc_hamming_distribution;
use chasm::loss::DEFAULT_T0;
use chasm::multi_index::{brute_force_lookup, MultiIndex};
use chasm::pipeline::synthetic::{drifting_video, retime, DriftParams};
use chasm::pipeline::*;
use chasm::trainer::{history_csv, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn chasm(args: &[&str]) -> (i32, Vec<u8>, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_with(
        std::iter::once("chasm").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (code, out, String::from_utf8(err).unwrap())
}

fn ok(args: &[&str]) -> String {
    let (code, out, err) = chasm(args);
    assert_eq!(code, 0, "{args:?}: {err}");
    String::from_utf8(out).unwrap()
}

fn corpus(dir: &Path) -> (std::path::PathBuf, Vec<EmbeddingRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let params = DriftParams::for_dim(64);
    let mut records = Vec::new();
    for v in 0..4 {
        records.extend(drifting_video(&format!("v{v}"), &[2.0, 3.0], &params, &mut rng).unwrap());
    }
    records[5].black = true;
    let path = dir.join("frames.jsonl");
    write_embeddings(&records, std::fs::File::create(&path).unwrap()).unwrap();
    (path, records)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn index_build_then_query_equals_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let (frames, records) = corpus(dir.path());
    let idx = dir.path().join("idx.chmi");
    ok(&[
        "index-build",
        "--in",
        s(&frames),
        "--out",
        s(&idx),
        "--parts",
        "4",
    ]);
    let postings = hash_records(&records);
    for probe in [0usize, 33, 250] {
        let hex = postings[probe].hash.to_hex();
        let out = ok(&["query", "--index", s(&idx), "--r", "3", "--hash", &hex]);
        let got: serde_json::Value = serde_json::from_str(&out).unwrap();
        let brute = brute_force_lookup(&postings, &postings[probe].hash, 3).unwrap();
        let want = lookup_report(3, &brute);
        assert_eq!(got["matches"], want["matches"]);
        assert!(!got["matches"].as_array().unwrap().is_empty());
    }
    let (code, _, err) = chasm(&[
        "query",
        "--index",
        s(&idx),
        "--r",
        "4",
        "--hash",
        &postings[0].hash.to_hex(),
    ]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn hash_file_matches_library_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (frames, records) = corpus(dir.path());
    let out = dir.path().join("frames.chsh");
    let (code, _, err) = chasm(&[
        "hash",
        "--in",
        s(&frames),
        "--exclude-black",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 0);
    assert!(err.contains("dropped 1 black"));
    let kept: Vec<_> = records.iter().filter(|r| !r.black).cloned().collect();
    let mut want = Vec::new();
    write_hash_dataset(64, &hash_records(&kept), &mut want).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), want);

    // Both input formats evaluate identically.
    let a = ok(&["eval", "--in", s(&out), "--r", "2"]);
    let b = ok(&["eval", "--in", s(&frames), "--exclude-black", "--r", "2"]);
    assert_eq!(a, b);
}

#[test]
fn eval_roc_and_select_match_library() {
    let dir = tempfile::tempdir().unwrap();
    let (frames, records) = corpus(dir.path());
    let postings = hash_records(&records);

    let eval = ok(&["eval", "--in", s(&frames), "--r", "3"]);
    let rates = evaluate_pair_rates(&postings, 3, DEFAULT_T0).unwrap();
    let point = RocPoint {
        r: 3,
        rates,
        mean_candidates: None,
    };
    assert_eq!(eval, report::rates_csv(&[point]));

    let roc_path = dir.path().join("roc.csv");
    ok(&[
        "roc",
        "--in",
        s(&frames),
        "--r-values",
        "0,1,2,3,4,6,8",
        "--parts",
        "4",
        "--out",
        s(&roc_path),
    ]);
    let points = roc_sweep(&postings, &[0, 1, 2, 3, 4, 6, 8], DEFAULT_T0, Some(4)).unwrap();
    assert_eq!(
        std::fs::read_to_string(&roc_path).unwrap(),
        report::rates_csv(&points)
    );

    let tsv = ok(&[
        "roc",
        "--in",
        s(&frames),
        "--r-values",
        "0,1,2,3,4,6,8",
        "--tsv",
    ]);
    assert_eq!(
        tsv,
        report::roc_tsv(&roc_sweep(&postings, &[0, 1, 2, 3, 4, 6, 8], DEFAULT_T0, None).unwrap())
    );

    let chosen = ok(&["select-r", "--in", s(&roc_path)]);
    let want = select_radius(&points, DEFAULT_MIN_TP, DEFAULT_FP_PENALTY)
        .map_or("none".to_string(), |r| r.to_string());
    assert_eq!(chosen.trim(), want);
    let strict = ok(&["select-r", "--in", s(&roc_path), "--min-tp", "1.5"]);
    assert_eq!(strict.trim(), "none");
}

#[test]
fn match_reports_shifted_clip() {
    let dir = tempfile::tempdir().unwrap();
    let (frames, records) = corpus(dir.path());
    let idx = dir.path().join("idx.chmi");
    ok(&[
        "index-build",
        "--in",
        s(&frames),
        "--out",
        s(&idx),
        "--parts",
        "4",
    ]);
    let clip: Vec<_> = records
        .iter()
        .filter(|r| r.frame.video_id == "v2")
        .cloned()
        .collect();
    let query = retime(&clip, "clip", -1.0);
    let qpath = dir.path().join("query.jsonl");
    write_embeddings(&query, std::fs::File::create(&qpath).unwrap()).unwrap();

    let out = ok(&[
        "match",
        "--index",
        s(&idx),
        "--query",
        s(&qpath),
        "--r",
        "3",
    ]);
    let index = MultiIndex::load(std::fs::File::open(&idx).unwrap()).unwrap();
    let groups = split_query_videos(hash_records(&query));
    let want: Vec<_> = groups
        .iter()
        .flat_map(|g| match_scenes(g, &index, 3, &SceneParams::default()).unwrap())
        .collect();
    assert_eq!(out, report::scene_matches_jsonl(&want));
    assert!(want
        .iter()
        .any(|m| m.dataset_video == "v2" && (m.offset - 1.0).abs() <= DEFAULT_T0));
}

#[test]
fn mc_verify_is_seeded_and_thread_independent() {
    let one = ok(&[
        "--threads",
        "1",
        "mc-verify",
        "--n",
        "32",
        "--theta",
        "0.4",
        "--trials",
        "9000",
        "--seed",
        "3",
    ]);
    let four = ok(&[
        "mc-verify",
        "--n",
        "32",
        "--theta",
        "0.4",
        "--trials",
        "9000",
        "--seed",
        "3",
        "--threads",
        "4",
    ]);
    assert_eq!(one, four);
    let hist = mc_hamming_distribution(32, 0.4, 9000, 3).unwrap();
    assert_eq!(
        one,
        report::histogram_tsv(&hist, 0.4 / std::f64::consts::PI).unwrap()
    );
    assert!(one.lines().last().unwrap().starts_with("# tvd="));
    let other = ok(&[
        "mc-verify",
        "--n",
        "32",
        "--theta",
        "0.4",
        "--trials",
        "9000",
        "--seed",
        "4",
    ]);
    assert_ne!(one, other);
}

#[test]
fn train_toy_matches_library_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("toy.toml");
    std::fs::write(
        &cfg_path,
        "steps = 4\n[data]\nvideos = 5\nheldout_videos = 3\n[batch]\nvideos = 5\n",
    )
    .unwrap();
    let out = ok(&["train-toy", "--config", s(&cfg_path), "--seed", "11"]);
    let mut cfg = TrainConfig::from_toml(&std::fs::read_to_string(&cfg_path).unwrap()).unwrap();
    cfg.seed = 11;
    assert_eq!(out, history_csv(&cfg.run().unwrap().history));
    let again = ok(&["train-toy", "--config", s(&cfg_path), "--seed", "11"]);
    assert_eq!(out, again);

    std::fs::write(&cfg_path, "stepz = 4\n").unwrap();
    assert_eq!(chasm(&["train-toy", "--config", s(&cfg_path)]).0, 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_chasm");
    let status = |args: &[&str], threads: Option<&str>| {
        let mut cmd = Command::new(bin);
        cmd.args(args).env_remove("CHASM_THREADS");
        if let Some(t) = threads {
            cmd.env("CHASM_THREADS", t);
        }
        cmd.output().unwrap()
    };
    let none = status(&[], None);
    assert_eq!(none.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&none.stderr).contains("Usage"));
    assert_eq!(status(&["--help"], None).status.code(), Some(0));
    assert_eq!(
        status(&["mc-verify", "--n", "8", "--theta", "0.2"], Some("zero"))
            .status
            .code(),
        Some(1)
    );
    let run = status(
        &["mc-verify", "--n", "8", "--theta", "0.2", "--trials", "100"],
        Some("2"),
    );
    assert_eq!(run.status.code(), Some(0));
    assert!(run.stderr.is_empty());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("distance\tcount"));
}
