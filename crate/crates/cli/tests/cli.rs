use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reset-ldp")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

/// Header and data rows of the first CSV table.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.take_while(|l| !l.is_empty()).map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn header_carries_version_and_config() {
    let text = stdout(&["airy-table", "--count", "2"]);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("# reset-ldp {}", env!("CARGO_PKG_VERSION")));
    let cfg = lines.next().unwrap().strip_prefix("# config: ").unwrap();
    let v: serde_json::Value = serde_json::from_str(cfg).unwrap();
    assert_eq!(v["command"]["command"], "airy-table");
    assert_eq!(v["command"]["count"], 2);
}

#[test]
fn occupation_rate_at_zero_equals_reset_rate() {
    let text = stdout(&["rate", "--functional", "occupation", "--dist", "exp:1", "--w-grid", "0:1:101"]);
    let (header, rows) = table(&text);
    assert_eq!(header, ["w", "I", "k_star", "regime"]);
    assert_eq!(rows.len(), 101);
    assert_eq!(rows[0][0], "0");
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 1.0);
    // interior closed form 1 − 2√(w(1−w)) at w = 0.3
    let i = rows[30][1].parse::<f64>().unwrap();
    assert!((i - (1.0 - 2.0 * (0.21f64).sqrt())).abs() < 1e-7);
}

#[test]
fn airy_table_first_row() {
    let text = stdout(&["airy-table", "--count", "5"]);
    let (header, rows) = table(&text);
    assert_eq!(header, ["i", "z_i", "nu_i", "c_i"]);
    assert_eq!(rows.len(), 5);
    let nu: f64 = rows[0][2].parse().unwrap();
    let c: f64 = rows[0][3].parse().unwrap();
    // leading digits 0.80861… and 1.48257…
    assert_eq!((nu * 1e5).floor(), 80861.0);
    assert_eq!((c * 1e5).floor(), 148257.0);
    assert!((c - 1.48257).abs() < 5e-6);
}

#[test]
fn varpi_dominates_phi_for_poissonian_occupation() {
    let o = run(&["varpi-check", "--functional", "occupation", "--dist", "exp:1", "--k-grid", "-3:3:61"]);
    assert!(o.status.success());
    let (header, rows) = table(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(header, ["k", "varpi", "phi", "boundary", "ok"]);
    assert_eq!(rows.len(), 61);
    for r in &rows {
        assert_eq!(r[4], "true", "{r:?}");
        let (v, p): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!(v >= p - 1e-9);
    }
}

#[test]
fn outputs_are_byte_stable() {
    let sim = [
        "simulate", "--functional", "area", "--dist", "cubic:1", "--t", "20", "--n", "3000", "--seed", "9", "--k-grid",
        "-1:1:5", "--bins", "-0.5:0.5:5", "--out", "csv",
    ];
    assert_eq!(stdout(&sim), stdout(&sim));
    let rate = ["rate", "--functional", "area", "--dist", "cubic:1", "--w-grid", "-8:8:33"];
    assert_eq!(stdout(&rate), stdout(&rate));
}

#[test]
fn infinities_are_text_literals() {
    let text = stdout(&["phi", "--functional", "area", "--dist", "cubic:1", "--k-grid", "3:3:1"]);
    let (_, rows) = table(&text);
    assert_eq!(rows[0][1], "-inf");
    assert_eq!(rows[0][2], "minus-infinity");
    let json = stdout(&["phi", "--functional", "area", "--dist", "cubic:1", "--k-grid", "3:3:1", "--out", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["phi"][0]["value"], "-inf");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("airy.csv");
    let p = path.to_str().unwrap();
    let o = run(&["airy-table", "--count", "3", "--output", p]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&["airy-table", "--count", "3"]).replace(
        "\"output\":null",
        &format!("\"output\":{}", serde_json::to_string(p).unwrap())
    ));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["phi", "--functional", "nope", "--dist", "exp:1", "--k-grid", "0:1:2"]).status.code(), Some(1));
    assert_eq!(run(&["rate", "--functional", "area", "--dist", "exp:1", "--w-grid", "1:0:2"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--functional", "area", "--dist", "exp:1", "--n", "10"]).status.code(), Some(1));
    assert_eq!(run(&["verify", "--criteria", "11"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    // a failed check exits 3 after the table is written
    let o = run(&["varpi-check", "--functional", "occupation", "--dist", "exp:1", "--k-grid", "0:1:3", "--tol=-1"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(table(&String::from_utf8(o.stdout).unwrap()).1.len(), 3);
}

#[test]
fn corrupt_law_cache_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("law.bin");
    std::fs::write(&cache, b"not a quantile table").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_reset-ldp"))
        .args(["phi", "--functional", "abs-area", "--dist", "exp:1", "--k-grid", "0.5:0.5:1"])
        .env("RESET_LDP_CACHE", &cache)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_reports_one_line_per_selected_criterion() {
    let o = run(&["verify", "--criteria", "1,4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("PASS [ 1]")));
    assert!(text.lines().any(|l| l.starts_with("PASS [ 4]")));
    assert!(text.contains("acceptance: 0 criteria failed"));
}
