//! End-to-end tests of the `hypwn` binary: exit codes, output formats,
//! and bit-for-bit replayability from the emitted config copy.

use std::path::PathBuf;
use std::process::{Command, Output};

fn hypwn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypwn"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hypwn-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn unknown_flag_exits_one() {
    let out = hypwn(&["sample", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = hypwn(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_str(&out).contains("sample"));
}

#[test]
fn missing_required_input_exits_one() {
    // logpdf without --z is a validation error.
    let out = hypwn(&["logpdf"]);
    assert_eq!(out.status.code(), Some(1));
    // eval-embed with a nonexistent checkpoint is a runtime error.
    let out = hypwn(&["eval-embed", "--model", "/nonexistent/ckpt", "--tree-depth", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sample_is_deterministic_and_valid_json() {
    let a = hypwn(&["sample", "--dim", "3", "--count", "4", "--seed", "9"]);
    let b = hypwn(&["sample", "--dim", "3", "--count", "4", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let rows: serde_json::Value = serde_json::from_str(&stdout_str(&a)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["z"].as_array().unwrap().len(), 4);
    assert_eq!(rows[0]["base"].as_array().unwrap().len(), 3);
}

#[test]
fn logpdf_off_manifold_point_is_rejected() {
    let out = hypwn(&["logpdf", "--z", "1.0,0.5,0.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn logpdf_at_origin_matches_standard_gaussian_constant() {
    // At z = mu = origin the wrapped density equals the Euclidean normal
    // at 0: -n/2 log(2 pi) for n = 2.
    let out = hypwn(&["logpdf", "--z", "1.0,0.0,0.0"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let lp = v["log_prob"].as_f64().unwrap();
    let want = -(2.0 * std::f64::consts::PI).ln();
    assert!((lp - want).abs() < 1e-12, "got {lp}, want {want}");
}

#[test]
fn gen_tree_depth_one_emits_three_clean_rows() {
    let out = hypwn(&["gen-tree", "--depth", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.starts_with("clean,")));
    // Root code is the first indicator bit only.
    assert_eq!(rows[0], "clean,0,1,0,0");
}

#[test]
fn gen_tree_with_noise_appends_rows_and_meta() {
    let out_path = tmp("tree.csv");
    let out = hypwn(&[
        "gen-tree",
        "--depth",
        "2",
        "--samples-per-node",
        "3",
        "--seed",
        "5",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let clean = text.lines().filter(|l| l.starts_with("clean,")).count();
    let noisy = text.lines().filter(|l| l.starts_with("noisy,")).count();
    assert_eq!(clean, 7);
    assert_eq!(noisy, 21);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_path.with_extension("meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["nodes"], 7);
    assert_eq!(meta["code_len"], 7);
}

#[test]
fn density_grid_is_csv_with_header() {
    let out = hypwn(&["density-grid", "--grid", "5", "--sigma", "0.7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    assert!(text.starts_with("x,y,log_density\n"));
    assert!(text.lines().count() > 5);
}

#[test]
fn train_embed_replays_bitwise_from_emitted_config() {
    let ckpt_a = tmp("emb-a.bin");
    let ckpt_b = tmp("emb-b.bin");
    let base = [
        "train-embed",
        "--tree-depth",
        "2",
        "--dim",
        "2",
        "--epochs",
        "2",
        "--kl-samples",
        "2",
        "--negatives",
        "2",
        "--seed",
        "11",
    ];
    let mut args_a: Vec<&str> = base.to_vec();
    args_a.extend(["--out", ckpt_a.to_str().unwrap()]);
    assert_eq!(hypwn(&args_a).status.code(), Some(0));

    // Replay purely from the emitted config, overriding only the output path.
    let config = ckpt_a.with_extension("bin.config.json");
    let args_b = [
        "train-embed",
        "--config",
        config.to_str().unwrap(),
        "--out",
        ckpt_b.to_str().unwrap(),
    ];
    assert_eq!(hypwn(&args_b).status.code(), Some(0));
    assert_eq!(
        std::fs::read(&ckpt_a).unwrap(),
        std::fs::read(&ckpt_b).unwrap(),
        "replayed checkpoint must be bit-identical"
    );
}

#[test]
fn vae_train_eval_export_pipeline() {
    let ckpt = tmp("vae.bin");
    let out = hypwn(&[
        "train-vae",
        "--depth",
        "2",
        "--epochs",
        "1",
        "--hidden",
        "8",
        "--samples-per-node",
        "2",
        "--seed",
        "3",
        "--out",
        ckpt.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report["epochs"], 1);

    let eval = hypwn(&[
        "eval-vae",
        "--model",
        ckpt.to_str().unwrap(),
        "--depth",
        "2",
        "--samples-per-node",
        "2",
        "--seed",
        "3",
    ]);
    assert_eq!(eval.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&eval)).unwrap();
    assert!(v["correlation_clean"].as_f64().unwrap().is_finite());

    let export = hypwn(&[
        "export-latent",
        "--model",
        ckpt.to_str().unwrap(),
        "--depth",
        "2",
        "--samples-per-node",
        "2",
        "--seed",
        "3",
    ]);
    assert_eq!(export.status.code(), Some(0));
    let text = stdout_str(&export);
    assert!(text.starts_with("kind,node,x1,x2\n"));
    // 7 clean nodes + 14 noisy rows.
    assert_eq!(text.lines().count(), 1 + 7 + 14);
}

#[test]
fn eval_embed_reports_map_and_mean_rank() {
    let ckpt = tmp("emb-eval.bin");
    let out = hypwn(&[
        "train-embed",
        "--tree-depth",
        "2",
        "--dim",
        "2",
        "--epochs",
        "1",
        "--kl-samples",
        "2",
        "--negatives",
        "2",
        "--out",
        ckpt.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let eval = hypwn(&[
        "eval-embed",
        "--model",
        ckpt.to_str().unwrap(),
        "--tree-depth",
        "2",
        "--kl-samples",
        "4",
    ]);
    assert_eq!(eval.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&eval)).unwrap();
    let map = v["map"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&map));
    assert!(v["mean_rank"].as_f64().unwrap() >= 1.0);
}

#[test]
fn selfcheck_passes() {
    let out = hypwn(&["selfcheck", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout_str(&out));
    let text = stdout_str(&out);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}
