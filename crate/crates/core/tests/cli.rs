use std::fs;
use std::path::Path;
use std::process::Command;

const SMALL: &str = r#"
[synth]
n_treated = 1
n_control = 1
length = 240
t0 = 200
seed = 3

[model]
context_len = 12
horizon = 12
stride = 6
hidden = 6

[train]
epochs = 2
seed = 5

[forecast]
n_samples = 40
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_counterfact"))
}

fn run(args: &[&str]) -> std::process::Output {
    let out = bin().args(args).output().unwrap();
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn synth(dir: &Path) -> String {
    let base = dir.join("base.toml");
    fs::write(&base, SMALL).unwrap();
    let data = dir.join("data");
    assert!(run(&["synth", "-c", base.to_str().unwrap(), "--out", data.to_str().unwrap()]).status.success());
    data.join("config.toml").to_string_lossy().into_owned()
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth(dir.path());
    let d = |p: &str| dir.path().join(p).to_string_lossy().into_owned();

    assert!(run(&["train", "-c", &cfg, "--out", &d("model.txt")]).status.success());
    let curve = fs::read_to_string(d("model.txt.loss.csv")).unwrap();
    assert!(curve.starts_with("# config_hash="));
    assert_eq!(curve.lines().nth(1), Some("epoch,mean_nll"));
    assert_eq!(curve.lines().count(), 2 + 2);

    assert!(run(&["effect", "-c", &cfg, "--model", &d("model.txt"), "--out", &d("report")]).status.success());
    let effects = fs::read_to_string(d("report/effects.csv")).unwrap();
    assert_eq!(
        effects.lines().nth(1),
        Some("unit_id,tau,avg_causal_effect,pct_change,p_signed_rank,p_rank_sum")
    );
    // 13 quantile rows plus one summary row for the single treated unit.
    assert_eq!(effects.lines().count(), 2 + 14);

    assert!(run(&["effect", "-c", &cfg, "--model", &d("model.txt"), "--out", &d("report2")]).status.success());
    for f in ["effects.csv", "placebo.csv", "fan.csv", "distribution.csv", "series.csv"] {
        assert_eq!(
            fs::read(d(&format!("report/{f}"))).unwrap(),
            fs::read(d(&format!("report2/{f}"))).unwrap(),
            "{f} differs between identical runs"
        );
    }

    let out = run(&["placebo", "-c", &cfg, "--model", &d("model.txt")]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("placebo"));

    assert!(run(&["plotdata", "--report", &d("report"), "--out", &d("plots")]).status.success());
    for f in ["fan_plot.csv", "quantile_distribution.csv", "boxplot.csv"] {
        assert!(fs::metadata(d(&format!("plots/{f}"))).unwrap().len() > 0);
    }

    let out = run(&["backtest", "-c", &cfg, "--model", &d("model.txt")]);
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().nth(1), Some("unit_id,method,wape,wrmspe,msis,crps"));
    // four methods x one control unit
    assert_eq!(table.lines().count(), 2 + 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth(dir.path());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[train]\nepochs = 0\n").unwrap();
    let out = bin().args(["train", "-c", bad.to_str().unwrap(), "--out", "/dev/null"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let missing = dir.path().join("missing.csv");
    let out = bin()
        .args(["train", "-c", &cfg, "--panel", missing.to_str().unwrap(), "--out", "/dev/null"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    let out = bin()
        .args(["train", "-c", &cfg, "--set", "model.context_len=500", "--out", "/dev/null"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let junk = dir.path().join("junk.txt");
    fs::write(&junk, "not a model\n").unwrap();
    let out = bin()
        .args(["effect", "-c", &cfg, "--model", junk.to_str().unwrap(), "--out", "/tmp/x"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
