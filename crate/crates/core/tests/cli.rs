use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn acho(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acho"))
        .args(args)
        .output()
        .unwrap()
}

const SPEC: &str = r#"
seeds = [1, 2]

[objective]
kind = "hypercube"
n = 200
seed = 5

[space]
preset = "random_forest"
m = 50
seed = 6

[[runs]]
name = "cqi-qrf"
framework = "cqi"
n_init = 5
budget = 10
quantile_params = { n_trees = 20 }

[[runs]]
name = "random"
framework = "random"
budget = 10
"#;

fn write_spec(dir: &Path, text: &str) -> String {
    let p = dir.join("spec.toml");
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn run_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), SPEC);
    let out = dir.path().join("out");
    let o = acho(&["run", &spec, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for run in ["cqi-qrf", "random"] {
        for seed in [1, 2] {
            let p = out
                .join("traces")
                .join(run)
                .join(format!("seed_{seed}.csv"));
            let text = fs::read_to_string(&p).unwrap();
            assert_eq!(text.lines().count(), 11);
            // no wall time unless asked for
            assert!(text
                .lines()
                .skip(1)
                .all(|l| l.split(',').nth(1) == Some("")));
        }
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 2);

    let s = acho(&["summarize", out.to_str().unwrap()]);
    assert!(s.status.success());
    let table = String::from_utf8(s.stdout).unwrap();
    assert!(table.contains("cqi-qrf") && table.contains("random"));
}

#[test]
fn wall_time_flag_fills_elapsed() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), SPEC);
    let out = dir.path().join("out");
    let o = acho(&["run", &spec, "--out", out.to_str().unwrap(), "--wall-time"]);
    assert!(o.status.success());
    let text = fs::read_to_string(out.join("traces/random/seed_1.csv")).unwrap();
    assert!(text
        .lines()
        .skip(1)
        .all(|l| !l.split(',').nth(1).unwrap().is_empty()));
}

#[test]
fn spec_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &SPEC.replace("seeds = [1, 2]", "seeds = []"));
    let o = acho(&["run", &spec]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seeds"));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = acho(&["summarize", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = acho(&["run", dir.path().join("nope.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_dataset_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f1.csv");
    let o = acho(&[
        "gen-dataset",
        "1",
        "--n",
        "50",
        "--noise",
        "0",
        "--seed",
        "3",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("x0,x1,x2,x3,x4,x5,x6,x7,x8,x9,y\n"));
    assert_eq!(text.lines().count(), 51);
    assert_eq!(
        acho(&["gen-dataset", "4", "--out", p.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}
