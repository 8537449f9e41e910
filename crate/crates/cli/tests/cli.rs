use std::path::Path;
use std::process::{Command, Output};

fn ehalloc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ehalloc"))
        .args(args)
        .current_dir(cwd)
        .env_remove("EHALLOC_OUT_DIR")
        .env("EHALLOC_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn validate_reports_derived_constants() {
    let dir = tempfile::tempdir().unwrap();
    let wor = write(dir.path(), "wor.toml", "scheme = \"NOMA_WOR\"\n");
    let out = ehalloc(&["validate", &wor], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["v_max"].as_f64().unwrap() - 0.085).abs() < 1e-12);
    assert!((v["c"].as_f64().unwrap() - 9.5).abs() < 1e-12);

    let wr = write(dir.path(), "wr.toml", "scheme = \"NOMA_WR\"\n");
    let v = json(&ehalloc(&["validate", &wr], dir.path()));
    assert!((v["p_th_worst"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert!((v["e_th_worst"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert_eq!(v["ok"], true);
}

#[test]
fn validate_names_the_broken_assumption() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[battery]\ne_c_max = 1.5\np_max = 1.0\n");
    let out = ehalloc(&["validate", &bad], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("charging assumption"));
    assert_eq!(json(&out)["ok"], false);
}

#[test]
fn unknown_keys_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(dir.path(), "typo.toml", "[arrival]\nlamda = 2.0\n");
    assert_eq!(ehalloc(&["validate", &typo], dir.path()).status.code(), Some(1));
    assert_eq!(ehalloc(&["validate", "missing.toml"], dir.path()).status.code(), Some(3));
}

#[test]
fn run_is_reproducible_and_respects_floors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "wr.toml", "scheme = \"NOMA_WR\"\n");
    let mut traces = Vec::new();
    for name in ["a", "b"] {
        let trace = format!("{name}.csv");
        let summary = format!("{name}.json");
        let out = ehalloc(
            &["run", &cfg, "--seed", "5", "--slots", "300", "--trace-out", &trace, "--summary-out", &summary],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        traces.push(std::fs::read(dir.path().join(&trace)).unwrap());
        let s: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join(&summary)).unwrap()).unwrap();
        assert_eq!(s["slots"], 300);
    }
    assert_eq!(traces[0], traces[1]);

    let text = String::from_utf8(traces.remove(0)).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rate_cols: Vec<usize> = (0..header.len()).filter(|&i| header[i].starts_with("rate_")).collect();
    assert_eq!(rate_cols.len(), 4);
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        for &i in &rate_cols {
            assert!(cells[i] >= 1.0 - 1e-9);
        }
    }
}

#[test]
fn zero_slots_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"scheme": "OPA"}"#);
    let out = ehalloc(&["run", &cfg, "--slots", "0"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1);
    assert!(trace.starts_with("t,e_b,q,e_a,e_h,p_total,rho_1,"));
}

#[test]
fn out_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "");
    let out = Command::new(env!("CARGO_BIN_EXE_ehalloc"))
        .args(["run", &cfg, "--slots", "10"])
        .current_dir(dir.path())
        .env("EHALLOC_OUT_DIR", dir.path().join("results"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("results/trace.csv").exists());
    assert!(dir.path().join("results/summary.json").exists());
}

#[test]
fn sweep_prints_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = ehalloc(
        &["sweep", "--axis", "lambda", "--values", "0.5,2.5", "--runs", "2", "--slots", "200", "--out", "t.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("value,runs,mean,std_err,failures\n0.5,2,"));
    assert_eq!(std::fs::read_to_string(dir.path().join("t.csv")).unwrap(), stdout);

    let out = ehalloc(&["sweep", "--axis", "v", "--values", "0.5", "--runs", "1", "--slots", "10"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn figure_csv_and_svg_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = ehalloc(&["fig", "8", "--out", "f", "--slots", "200", "--runs", "2", "--stride", "50"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("f/fig8.csv")).unwrap();
    assert!(csv.starts_with("series,x,mean,std_err\n"));
    for line in csv.lines().skip(1) {
        let mean: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(mean >= 4.0 - 1e-9);
    }
    let svg = std::fs::read(dir.path().join("f/fig8.svg")).unwrap();
    let out = ehalloc(&["fig", "8", "--out", "g", "--from-csv", "f/fig8.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(dir.path().join("g/fig8.svg")).unwrap(), svg);
    assert_eq!(ehalloc(&["fig", "2"], dir.path()).status.code(), Some(1));
}
