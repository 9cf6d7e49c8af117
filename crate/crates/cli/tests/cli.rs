use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_chiral-router"));
    c.env_remove("CHIRAL_ROUTER_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

fn csv_rows(text: &str) -> Vec<Vec<Option<f64>>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().ok()).collect())
        .collect()
}

fn entry(m: &Value, r: usize, c: usize) -> (f64, f64) {
    let e = &m["matrix"][r][c];
    (e[0].as_f64().unwrap(), e[1].as_f64().unwrap())
}

#[test]
fn reduced_hamiltonian_for_two_outputs() {
    let o = run(&[
        "hamiltonian",
        "--n",
        "2",
        "--beta",
        "1",
        "--phi",
        "0",
        "--reduced",
    ]);
    assert!(o.status.success());
    let m = json(&o);
    assert_eq!(m["dim"], 6);
    let expected = [
        [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0, 1.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 1.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
    ];
    for (r, row) in expected.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let (re, im) = entry(&m, r, c);
            assert!((re - v).abs() < 1e-15 && im.abs() < 1e-15, "({r},{c})");
        }
    }
}

#[test]
fn full_hamiltonian_size_and_phase() {
    let o = run(&["hamiltonian", "--full", "--n", "3"]);
    assert!(o.status.success());
    let m = json(&o);
    assert_eq!(m["dim"], 8);
    assert_eq!(m["matrix"].as_array().unwrap().len(), 8);

    let o = run(&[
        "hamiltonian",
        "--full",
        "--n",
        "2",
        "--phi",
        &FRAC_PI_2.to_string(),
    ]);
    let m = json(&o);
    let (re, im) = entry(&m, 1, 0);
    assert!(re.abs() < 1e-15 && (im - 1.0).abs() < 1e-15);
    let (re, im) = entry(&m, 0, 1);
    assert!(re.abs() < 1e-15 && (im + 1.0).abs() < 1e-15);
}

#[test]
fn invalid_router_exits_2() {
    let o = run(&["hamiltonian", "--n", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least 2"));
    assert_eq!(
        run(&["hamiltonian", "--full", "--reduced"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn phase_scan_csv() {
    let o = run(&[
        "scan",
        "phase",
        "--n",
        "40",
        "--t-min",
        "15",
        "--t-max",
        "19",
        "--t-steps",
        "41",
        "--param-steps",
        "64",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("t,param,fidelity,p_wrong"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 41 * 64);
    assert!(rows
        .iter()
        .all(|r| r.len() == 4 && r.iter().all(Option::is_some)));
    // broad plateau above 0.8 around φ = π
    let best_near_pi = rows
        .iter()
        .filter(|r| (r[1].unwrap() - PI).abs() < 0.35)
        .map(|r| r[2].unwrap())
        .fold(0.0, f64::max);
    assert!(best_near_pi > 0.8, "{best_near_pi}");
}

#[test]
fn weight_scan_and_json_format() {
    let args = [
        "scan",
        "weight",
        "--n",
        "50",
        "--t-max",
        "10",
        "--t-steps",
        "11",
        "--param-max",
        "10",
        "--param-steps",
        "11",
    ];
    let o = run(&args);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 121);
    let mut with_json = args.to_vec();
    with_json.extend(["--format", "json"]);
    let v = json(&run(&with_json));
    assert_eq!(v.as_array().unwrap().len(), 121);
    assert_eq!(v[5]["fidelity"].as_f64(), rows[5][2]);
}

#[test]
fn bad_ranges_exit_2() {
    assert_eq!(
        run(&["scan", "phase", "--t-steps", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["scan", "phase", "--t-min", "5", "--t-max", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["noise", "ou", "--sigma", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["noise", "vonmises", "--k", "-2"]).status.code(),
        Some(2)
    );
}

#[test]
fn table1_report() {
    let o = run(&["table1", "--row", "all"]);
    assert!(o.status.success());
    let v = json(&o);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert!(r["abs_diff"].as_f64().unwrap() < 0.01, "{r}");
    }
    let first = json(&run(&["table1", "--row", "1"]));
    assert_eq!(first["rows"][0]["objective"], "average");
    let last = json(&run(&["table1", "--row", "5"]));
    assert_eq!(last["rows"][0]["n"], 1_000_000);
    assert_eq!(last["rows"][0]["objective"], "worst-case");
}

#[test]
fn table1_bad_row_lists_valid_rows() {
    let o = run(&["table1", "--row", "99"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1, 2, 3, 4, 5, all"));
}

#[test]
fn von_mises_noise_lowers_the_peak() {
    let noisy = run(&[
        "noise",
        "vonmises",
        "--k",
        "12.5",
        "--t-max",
        "20",
        "--t-steps",
        "81",
    ]);
    assert!(noisy.status.success());
    let text = stdout(&noisy);
    assert_eq!(text.lines().next(), Some("t,fidelity,stderr"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(',')));
    let sharp = run(&[
        "noise",
        "vonmises",
        "--k",
        "1e12",
        "--t-max",
        "20",
        "--t-steps",
        "81",
    ]);
    let noisy = csv_rows(&text);
    let clean = csv_rows(&stdout(&sharp));
    assert!((noisy[0][1].unwrap() - clean[0][1].unwrap()).abs() < 1e-12);
    let peak = |rows: &[Vec<Option<f64>>]| {
        rows.iter()
            .enumerate()
            .max_by(|a, b| a.1[1].unwrap().total_cmp(&b.1[1].unwrap()))
            .map(|(i, r)| (i, r[1].unwrap()))
            .unwrap()
    };
    let (i, clean_max) = peak(&clean);
    let (_, noisy_max) = peak(&noisy);
    assert!(noisy_max < clean_max);
    assert!(noisy[i][1].unwrap() < clean_max);
}

#[test]
fn ou_without_volatility_matches_noiseless() {
    let common = ["--t-max", "5", "--t-steps", "51", "--trajectories", "4"];
    let mut ou = vec!["noise", "ou", "--theta", "1", "--sigma", "0"];
    ou.extend(common);
    let vm = [
        "noise",
        "vonmises",
        "--k",
        "1e12",
        "--t-max",
        "5",
        "--t-steps",
        "51",
    ];
    let a = csv_rows(&stdout(&run(&ou)));
    let b = csv_rows(&stdout(&run(&vm)));
    for (x, y) in a.iter().zip(&b) {
        assert!((x[1].unwrap() - y[1].unwrap()).abs() < 1e-6);
        assert_eq!(x[2], Some(0.0));
    }
}

#[test]
fn ou_output_is_byte_stable() {
    let args = [
        "noise",
        "ou",
        "--seed",
        "7",
        "--trajectories",
        "24",
        "--t-max",
        "2",
        "--t-steps",
        "11",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut other = args.to_vec();
    other[3] = "8";
    assert_ne!(run(&other).stdout, a.stdout);
}

#[test]
fn verify_reduction_passes_and_detects_corruption() {
    let o = run(&["verify-reduction", "--n-max", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert!(v["max_deviation"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["per_n"].as_array().unwrap().len(), 7);

    assert_eq!(
        run(&["verify-reduction", "--n-max", "2"]).status.code(),
        Some(0)
    );
    assert_eq!(
        run(&["verify-reduction", "--n-max", "1"]).status.code(),
        Some(2)
    );

    let bad = run(&[
        "verify-reduction",
        "--n-max",
        "4",
        "--inject-corruption",
        "0.01",
    ]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(json(&bad)["pass"], false);
}

#[test]
fn optimize_improves_start() {
    let o = run(&[
        "optimize",
        "phase",
        "--n",
        "20",
        "--t-start",
        "18.4",
        "--param-start",
        "4.7",
    ]);
    assert!(o.status.success());
    let v = json(&o);
    let value = v["value"].as_f64().unwrap();
    assert!(value >= v["start_value"].as_f64().unwrap());
    assert!(value > 0.99, "{v}");
}

#[test]
fn config_file_layering() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    fs::write(&path, r#"{"n": 5, "beta": 0.5, "phi": 1.0}"#).unwrap();
    let p = path.to_str().unwrap();

    let v = json(&run(&["--config", p, "hamiltonian"]));
    assert_eq!(v["n"], 5);
    assert_eq!(v["beta"], 0.5);
    // flag beats file
    let v = json(&run(&["--config", p, "hamiltonian", "--n", "9"]));
    assert_eq!(v["n"], 9);
    assert_eq!(v["beta"], 0.5);
    // env var supplies the default path
    let o = bin()
        .env("CHIRAL_ROUTER_CONFIG", p)
        .args(["hamiltonian"])
        .output()
        .unwrap();
    assert_eq!(json(&o)["n"], 5);
}

#[test]
fn config_rejects_unknown_keys_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    fs::write(&path, r#"{"n": 5, "colour": "blue"}"#).unwrap();
    let o = run(&["--config", path.to_str().unwrap(), "hamiltonian"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let missing = dir.path().join("nope.json");
    assert_eq!(
        run(&["--config", missing.to_str().unwrap(), "hamiltonian"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t1.json");
    let o = run(&["table1", "--row", "3", "--output", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["rows"][0]["n"], 70);
}
