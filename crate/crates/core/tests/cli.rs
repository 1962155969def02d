use std::path::Path;

use molgen::cli::{run, EXIT_EMPTY, EXIT_INPUT, EXIT_OK};

fn molgen(dir: &Path, args: &[&str]) -> i32 {
    let mut full = vec!["molgen".to_string(), "--quiet".to_string()];
    full.extend(args.iter().map(|a| a.replace("{dir}", dir.to_str().unwrap())));
    run(full)
}

const CORPUS: &str = "CCO\nc1ccccc1O\nCC(=O)Oc1ccccc1C(=O)O\nCCN(CC)CC\nOC(=O)CCl\nC1CCNCC1\nCC(C)Cc1ccc(cc1)C(C)C(=O)O\nCOc1ccccc1\n";

fn prepared() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("in.smi"), CORPUS).unwrap();
    assert_eq!(molgen(dir.path(), &["prepare", "--input", "{dir}/in.smi", "--output", "{dir}/c.csv", "--seed", "4"]), EXIT_OK);
    dir
}

#[test]
fn prepare_writes_cache_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("three.smi"), "CCO\nc1ccccc1\nCC(=O)O\n").unwrap();
    assert_eq!(molgen(dir.path(), &["prepare", "--input", "{dir}/three.smi", "--output", "{dir}/c.csv"]), EXIT_OK);
    let cache = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert_eq!(cache.lines().count(), 4);
    assert!(cache.starts_with("smiles,mw,logp,hbd,hba,tpsa\n"));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("c.csv.json")).unwrap()).unwrap();
    assert_eq!(summary["records"], 3);
    assert_eq!(molgen(dir.path(), &["prepare", "--input", "{dir}/missing.smi", "--output", "{dir}/x.csv"]), EXIT_INPUT);
    assert_eq!(molgen(dir.path(), &["prepare", "--output", "{dir}/x.csv"]), EXIT_INPUT);
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(["molgen", "--help"]), EXIT_OK);
    assert_eq!(run(["molgen", "train", "--help"]), EXIT_OK);
    assert_eq!(run(["molgen", "frobnicate"]), EXIT_INPUT);
    assert_eq!(run(["molgen", "train", "--epochs", "many"]), EXIT_INPUT);
}

#[test]
fn train_generate_evaluate_analyze() {
    let dir = prepared();
    let small = ["--embedding-dim", "8", "--hidden-dim", "12", "--latent-dim", "4"];
    let mut args = vec!["train", "--cache", "{dir}/c.csv", "--checkpoint", "{dir}/init.ckpt", "--epochs", "0"];
    args.extend(small);
    assert_eq!(molgen(dir.path(), &args), EXIT_OK);
    assert!(dir.path().join("init.ckpt").exists());

    std::fs::write(dir.path().join("run.cfg"), "epochs = 2\nbatch_size = 4\nseed = 9\n").unwrap();
    let mut args = vec!["--config", "{dir}/run.cfg", "train", "--cache", "{dir}/c.csv", "--checkpoint", "{dir}/m.ckpt"];
    args.extend(small);
    assert_eq!(molgen(dir.path(), &args), EXIT_OK);
    let log = std::fs::read_to_string(dir.path().join("m.ckpt.loss.csv")).unwrap();
    let mut lines = log.lines();
    assert_eq!(lines.next(), Some("epoch,train_recon,train_kl,val_total"));
    assert_eq!(lines.count(), 2);

    let gen = |out: &str, extra: &[&str]| {
        let mut a = vec!["generate", "--checkpoint", "{dir}/m.ckpt", "--output", out, "--quota", "1", "--attempt-cap", "3", "--writeouts", "20", "--seed", "5", "--workers", "1"];
        a.extend(extra);
        molgen(dir.path(), &a)
    };
    let tamiflu = ["--mw", "312.2", "--logp", "1.285", "--hbd", "2", "--hba", "5", "--tpsa", "90.64"];
    let code = gen("{dir}/a.csv", &tamiflu);
    assert!(code == EXIT_OK || code == EXIT_EMPTY);
    assert_eq!(gen("{dir}/b.csv", &tamiflu), code);
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());

    let code = gen("{dir}/like.csv", &["--like", "CC(=O)Oc1ccccc1C(=O)O", "--around-target"]);
    assert!(code == EXIT_OK || code == EXIT_EMPTY);
    let code = gen("{dir}/beyond.csv", &["--beyond", "logp"]);
    assert!(code == EXIT_OK || code == EXIT_EMPTY);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("beyond.csv.json")).unwrap()).unwrap();
    let header = molgen::cvae::read_header(&dir.path().join("m.ckpt")).unwrap();
    let want = 1.1 * header.stats.logp.max;
    assert!((report["target"]["logp"].as_f64().unwrap() - want).abs() < 1e-12);
    assert_eq!(gen("{dir}/bad.csv", &["--like", "C1CC"]), EXIT_INPUT);

    std::fs::write(dir.path().join("empty.csv"), "canonical_smiles,mw,logp,hbd,hba,tpsa,success_flag,attempt_index\n").unwrap();
    assert_eq!(molgen(dir.path(), &["evaluate", "--results", "{dir}/empty.csv"]), EXIT_EMPTY);
    std::fs::write(
        dir.path().join("some.csv"),
        "canonical_smiles,mw,logp,hbd,hba,tpsa,success_flag,attempt_index\nCCO,46.04,-0.0014,1,1,20.23,1,0\n",
    )
    .unwrap();
    let args = ["evaluate", "--results", "{dir}/some.csv", "--checkpoint", "{dir}/m.ckpt", "--histograms", "{dir}/h", "--reference", "{dir}/c.csv"];
    assert_eq!(molgen(dir.path(), &args), EXIT_OK);
    let h = std::fs::read_to_string(dir.path().join("h/generated_tpsa.csv")).unwrap();
    assert!(h.starts_with("bin_left,bin_right,count\n"));

    let pca = |out: &str| molgen(dir.path(), &["analyze", "--checkpoint", "{dir}/m.ckpt", "--cache", "{dir}/c.csv", "--pca", out, "--seed", "2"]);
    assert_eq!(pca("{dir}/p1.csv"), EXIT_OK);
    assert_eq!(pca("{dir}/p2.csv"), EXIT_OK);
    let p1 = std::fs::read_to_string(dir.path().join("p1.csv")).unwrap();
    assert!(p1.starts_with("pc1,pc2,mw,logp,tpsa\n"));
    assert_eq!(p1, std::fs::read_to_string(dir.path().join("p2.csv")).unwrap());
}
