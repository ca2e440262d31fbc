use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn gradval(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradval"))
        .args(args)
        .current_dir(dir)
        .env_remove("GRADVAL_SEED")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = gradval(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Small labelled source with 20% flipped labels plus clean target and test sets.
fn fixture() -> TempDir {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["synth", "--n", "200", "--d", "10", "--seed", "1", "--out", "src.csv"]);
    ok(d, &["synth", "--n", "60", "--d", "10", "--seed", "2", "--out", "tgt.csv"]);
    ok(d, &["synth", "--n", "80", "--d", "10", "--seed", "3", "--out", "test.csv"]);
    ok(d, &["corrupt", "--data", "src.csv", "--kind", "labels", "--seed", "4", "--out", "noisy.csv"]);
    tmp
}

const VALUE: &[&str] = &[
    "value", "--source", "noisy.csv", "--target", "tgt.csv", "--iters", "60", "--runs", "1",
];

#[test]
fn pipeline_end_to_end() {
    let tmp = fixture();
    let d = tmp.path();
    assert!(d.join("noisy.corruption.csv").exists());

    ok(d, &[VALUE, &["--out", "v.csv"]].concat());
    let values = fs::read_to_string(d.join("v.csv")).unwrap();
    assert!(values.starts_with("sample_id,value\n"));
    assert_eq!(values.lines().count(), 201);
    let plan = fs::read_to_string(d.join("v.plan")).unwrap();
    assert!(plan.contains("valuation.iters = 60"), "{plan}");

    let report: serde_json::Value = serde_json::from_str(&ok(
        d,
        &["evaluate", "--values", "v.csv", "--corruption", "noisy.corruption.csv"],
    ))
    .unwrap();
    assert_eq!(report["metric"], "auroc");
    assert_eq!(report["corrupted"], 40);
    assert!(report["value"].as_f64().unwrap() > 0.8, "{report}");

    // flipped labels carry no noise magnitude to rank against
    let out = gradval(d, &["evaluate", "--values", "v.csv", "--corruption", "noisy.corruption.csv", "--metric", "spearman"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(stderr(&out).starts_with("gradval: error[other]: degenerate"));

    ok(d, &["discovery", "--values", "v.csv", "--corruption", "noisy.corruption.csv", "--grid", "0,0.5,1", "--out", "disc.csv"]);
    let disc = fs::read_to_string(d.join("disc.csv")).unwrap();
    let lines: Vec<&str> = disc.lines().collect();
    assert_eq!(lines[0], "fraction,found");
    assert_eq!(lines[1], "0,0");
    assert_eq!(lines[3], "1,1");

    ok(d, &[
        "filter-curve", "--source", "noisy.csv", "--test", "test.csv", "--values", "v.csv",
        "--grid", "0,0.2", "--direction", "lowest", "--repeats", "2", "--epochs", "5", "--out", "curve.csv",
    ]);
    let curve = fs::read_to_string(d.join("curve.csv")).unwrap();
    let lines: Vec<&str> = curve.lines().collect();
    assert_eq!(lines[0], "direction,fraction,metric,mean,std,n");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("lowest,0,auroc,") && lines[1].ends_with(",2"), "{curve}");
}

#[test]
fn feature_corruption_and_autoencoder_values() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["synth", "--kind", "lowrank", "--n", "120", "--d", "12", "--rank", "3", "--out", "src.csv"]);
    ok(d, &["synth", "--kind", "lowrank", "--n", "40", "--d", "12", "--rank", "3", "--out", "tgt.csv"]);
    let header = fs::read_to_string(d.join("src.csv")).unwrap();
    assert!(!header.lines().next().unwrap().contains("label"));
    ok(d, &["corrupt", "--data", "src.csv", "--kind", "features", "--phi-max", "2", "--record", "rec.csv", "--out", "noisy.csv"]);
    ok(d, &[
        "value", "--source", "noisy.csv", "--target", "tgt.csv", "--model", "autoencoder", "--hidden", "4",
        "--iters", "40", "--batch", "20", "--runs", "1", "--out", "v.csv",
    ]);
    ok(d, &["evaluate", "--values", "v.csv", "--corruption", "rec.csv", "--out", "e.json"]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("e.json")).unwrap()).unwrap();
    assert_eq!(report["metric"], "spearman");
    assert!(report["value"].as_f64().unwrap().is_finite());
}

#[test]
fn apc_reports_groups_and_mean() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("r.csv"), "batch,a,b,c\nx,1,2,3\nx,2,4,6.5\ny,3,1,0\n").unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&ok(d, &["apc", "--data", "r.csv", "--group-column", "batch"])).unwrap();
    let groups = report["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 2);
    assert!(groups[1]["apc"].is_null());
    assert_eq!(report["mean"], groups[0]["apc"]);
    assert!(report["mean"].as_f64().unwrap() > 0.99);
}

#[test]
fn run_is_reproducible_and_thread_count_invariant() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(
        d.join("small.plan"),
        "name = small\nreplicates = 2\ndata.n = 300\ndata.d = 8\nsplit.source = 150\nsplit.target = 60\nsplit.test = 90\n\
         valuation.iters = 40\nvaluation.runs = 1\ntrain.epochs = 5\nfilter.grid = 0,0.2\n",
    )
    .unwrap();
    let digest = |jobs: &str, out: &str| {
        let stdout = ok(d, &["--jobs", jobs, "run", "--plan", "small.plan", "--set", "seed=9", "--out", out]);
        let bundle = stdout.lines().next().unwrap().strip_prefix("bundle ").unwrap().to_string();
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(Path::new(&bundle).join("manifest.json")).unwrap()).unwrap();
        (manifest["values_digest"].clone(), fs::read(Path::new(&bundle).join("values.csv")).unwrap())
    };
    let a = digest("1", &d.join("a").to_string_lossy());
    let b = digest("1", &d.join("b").to_string_lossy());
    let c = digest("4", &d.join("c").to_string_lossy());
    assert!(a.0.is_string());
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn value_output_is_thread_count_invariant() {
    let tmp = fixture();
    let d = tmp.path();
    ok(d, &[&["--jobs", "1"], VALUE, &["--chunk", "7", "--out", "a.csv"]].concat());
    ok(d, &[&["--jobs", "4"], VALUE, &["--chunk", "7", "--out", "b.csv"]].concat());
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
}

#[test]
fn seed_falls_back_to_environment() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let synth = |seed: Option<&str>, out: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_gradval"));
        cmd.args(["synth", "--n", "20", "--d", "3", "--out", out]).current_dir(d);
        match seed {
            Some(s) => cmd.env("GRADVAL_SEED", s),
            None => cmd.env_remove("GRADVAL_SEED"),
        };
        assert!(cmd.status().unwrap().success());
        fs::read(d.join(out)).unwrap()
    };
    ok(d, &["synth", "--n", "20", "--d", "3", "--seed", "5", "--out", "flag.csv"]);
    assert_eq!(synth(Some("5"), "env.csv"), fs::read(d.join("flag.csv")).unwrap());
    assert_ne!(synth(None, "none.csv"), fs::read(d.join("flag.csv")).unwrap());
}

#[test]
fn usage_errors_exit_2() {
    let tmp = fixture();
    let d = tmp.path();
    for args in [
        &["value", "--bogus"][..],
        &["synth"],
        &["corrupt", "--data", "src.csv", "--kind", "both", "--out", "x.csv"],
        &["--jobs", "0", "synth", "--out", "x.csv"],
        &[VALUE, &["--out", "x.csv", "--set", "valuation.period=0"]].concat(),
        &[VALUE, &["--out", "x.csv", "--set", "no.such.key=1"]].concat(),
        &[VALUE, &["--out", "x.csv", "--set", "missing-equals"]].concat(),
    ] {
        let out = gradval(d, args);
        assert_eq!(code(&out), 2, "{args:?}: {}", stderr(&out));
        let err = stderr(&out);
        assert!(err.starts_with("gradval: error["), "{err}");
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    }
}

#[test]
fn io_errors_exit_3() {
    let tmp = fixture();
    let d = tmp.path();
    fs::write(d.join("bad.csv"), "sample_id,value\n0,abc\n").unwrap();
    for args in [
        &["evaluate", "--values", "missing.csv", "--corruption", "noisy.corruption.csv"][..],
        &["evaluate", "--values", "bad.csv", "--corruption", "noisy.corruption.csv"],
        &["value", "--source", "missing.csv", "--target", "tgt.csv", "--out", "x.csv"],
        &["value", "--source", "noisy.csv", "--target", "tgt.csv", "--config", "missing.plan", "--out", "x.csv"],
        &["synth", "--n", "10", "--d", "2", "--out", "no/such/dir/x.csv"],
    ] {
        let out = gradval(d, args);
        assert_eq!(code(&out), 3, "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).starts_with("gradval: error[io]: "));
    }
}

#[test]
fn divergence_exits_4() {
    let tmp = fixture();
    let d = tmp.path();
    let out = gradval(d, &[VALUE, &["--lr", "1e300", "--out", "x.csv"]].concat());
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(stderr(&out).starts_with("gradval: error[divergence]: "));
    assert!(!d.join("x.csv").exists());

    let out = gradval(
        d,
        &["run", "--set", "data.n=200", "--set", "split.source=100", "--set", "split.target=40", "--set", "split.test=60",
          "--set", "replicates=1", "--set", "filter.grid=", "--batch", "20", "--lr", "1e300", "--out", "runs"],
    );
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn help_documents_every_flag() {
    let tmp = TempDir::new().unwrap();
    let top = ok(tmp.path(), &["--help"]);
    assert!(top.contains("Exit codes:") && top.contains("--jobs"));
    let expected: &[(&str, &[&str])] = &[
        ("synth", &["--kind", "--n", "--d", "--classes", "--separation", "--rank", "--seed", "--out"]),
        ("corrupt", &["--data", "--kind", "--proportion", "--phi-max", "--fraction", "--seed", "--out", "--record"]),
        ("value", &[
            "--source", "--target", "--out", "--method", "--similarity", "--iters", "--lr", "--batch", "--period",
            "--runs", "--seed", "--chunk", "--balance-classes", "--params", "--model", "--hidden", "--activation",
            "--dropout", "--instance-norm", "--epochs", "--train-lr", "--train-batch", "--budget", "--tolerance",
            "--config", "--set",
        ]),
        ("evaluate", &["--values", "--corruption", "--metric", "--out"]),
        ("filter-curve", &["--source", "--test", "--values", "--grid", "--direction", "--repeats", "--seed", "--out", "--config", "--set"]),
        ("discovery", &["--values", "--corruption", "--grid", "--out"]),
        ("apc", &["--data", "--group-column", "--out"]),
        ("run", &["--plan", "--set", "--out", "--method", "--period", "--model", "--epochs", "--budget"]),
    ];
    for (cmd, flags) in expected {
        assert!(top.contains(cmd), "top-level help lacks {cmd}");
        let help = ok(tmp.path(), &[cmd, "--help"]);
        for flag in *flags {
            assert!(help.contains(flag), "{cmd} --help lacks {flag}");
        }
        let documented = help.lines().filter(|l| l.trim_start().starts_with("--")).count();
        let described = help
            .lines()
            .filter(|l| l.trim_start().starts_with("--"))
            .filter(|l| l.split_whitespace().count() > 2 || l.contains("  "))
            .count();
        assert_eq!(documented, described, "{cmd} has an undocumented flag:\n{help}");
    }
}
