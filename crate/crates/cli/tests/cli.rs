use std::process::{Command, Output};

use serde_json::Value;

fn moran(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moran")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn rates_table() {
    let o = moran(&["rates", "--payoff", "4,1,3,2", "--N", "4", "--mu", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("i,x,w_up,w_down,omega_up,omega_down\n"));
    assert!(text.ends_with('\n'));
    let r = rows(&text);
    assert_eq!(r.len(), 5);
    assert_eq!(r[2][2].parse::<f64>().unwrap(), 0.25);
    assert_eq!(r[2][3].parse::<f64>().unwrap(), 0.25);

    let o = moran(&["rates", "--payoff", "4,1,3,2", "--N", "10", "--mu", "0.07"]);
    let r = rows(&stdout(&o));
    assert_eq!(r[0][2].parse::<f64>().unwrap(), 0.07);
    assert_eq!(r[0][3].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn stationary_methods_stack_with_one_header() {
    let o = moran(&["stationary", "--payoff", "4,1,3,2", "--N", "400", "--mu", "0.05", "--method", "exact,diffusion"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("i,")).count(), 1);
    let r = rows(&text);
    assert_eq!(r.len(), 2 * 401);
    let argmax = |method: &str| {
        r.iter()
            .filter(|row| row[3] == method)
            .max_by(|a, b| a[2].parse::<f64>().unwrap().total_cmp(&b[2].parse::<f64>().unwrap()))
            .map(|row| row[0].parse::<i64>().unwrap())
            .unwrap()
    };
    assert!((argmax("exact") - argmax("diffusion")).abs() <= 2);
}

#[test]
fn stationary_symmetric_payoffs() {
    let o = moran(&["stationary", "--payoff", "2,1,1,2", "--N", "100", "--mu", "0.05", "--format", "json"]);
    let v = json(&o);
    let p: Vec<f64> = v["distributions"][0]["prob"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for i in 0..=100 {
        assert!((p[i] - p[100 - i]).abs() <= 1e-12 * p[i].max(1e-300));
    }
}

#[test]
fn monte_carlo_is_seed_deterministic() {
    let args = [
        "stationary", "--payoff", "4,1,3,2", "--N", "50", "--mu", "0.05", "--method", "monte-carlo", "--rounds", "20000",
        "--burn-in", "2000", "--realizations", "8", "--seed", "42",
    ];
    let a = moran(&args);
    let b = moran(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let err = String::from_utf8(a.stderr).unwrap();
    assert!(err.contains("total variation monte_carlo vs exact"), "{err}");
}

#[test]
fn missing_seed_is_logged() {
    let o = moran(&[
        "stationary", "--payoff", "4,1,3,2", "--N", "20", "--mu", "0.1", "--method", "mc", "--rounds", "2000",
        "--burn-in", "100", "--realizations", "2",
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("no --seed given"));
}

#[test]
fn bifurcation_case1_reports_critical_rates() {
    let v = json(&moran(&["bifurcation", "--payoff", "4,1,3,2"]));
    assert!((v["mu1"].as_f64().unwrap() - 1.0 / 12.0).abs() < 1e-12);
    assert!((v["mu2"].as_f64().unwrap() - (6.0 - 4.0 * 2f64.sqrt()) / 4.0).abs() < 1e-12);
    assert_eq!(v["folds"].as_array().unwrap().len(), 1);
    assert_eq!(v["config"]["payoff"]["a"], 4.0);
}

#[test]
fn bifurcation_case2_and_symmetric() {
    let v = json(&moran(&["bifurcation", "--payoff", "4,2,1,4", "--mu-grid", "0.001:0.3:0.002"]));
    assert!(v.get("mu1").is_none() && v.get("mu2").is_none());
    assert!(!v["folds"].as_array().unwrap().is_empty());

    let v = json(&moran(&["bifurcation", "--payoff", "2,1,1,2"]));
    assert_eq!(v["mu1"], v["mu2"]);
}

#[test]
fn bifurcation_csv_branches() {
    let o = moran(&["bifurcation", "--payoff", "4,1,3,2", "--mu-grid", "0:0.2:0.005", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("branch_id,mu,x,stability\n"));
    let ids: std::collections::BTreeSet<String> = rows(&text).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(ids.len(), 3);
}

#[test]
fn mfpt_all_methods() {
    let v = json(&moran(&[
        "mfpt", "--payoff", "4,1,3,2", "--N", "200", "--mu", "0.06", "--method", "exact,diffusion,wkb,monte-carlo",
        "--realizations", "400", "--seed", "5",
    ]));
    let reports = v["results"][0]["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 4);
    let tau = |m: &str| reports.iter().find(|r| r["method"] == m).unwrap()["tau_minus"].as_f64().unwrap();
    let mc = reports.iter().find(|r| r["method"] == "monte_carlo").unwrap();
    let ci = mc["ci_minus"].as_array().unwrap();
    let exact = tau("exact");
    assert!(ci[0].as_f64().unwrap() <= exact && exact <= ci[1].as_f64().unwrap());
    assert!((tau("diffusion").ln() / tau("wkb").ln() - 1.0).abs() <= 0.01);
    assert!(reports.iter().find(|r| r["method"] == "exact").unwrap()["exponent"].is_null());
    assert_eq!(v["config"]["sim"]["seed"], 5);
}

#[test]
fn mfpt_grid_past_fold_is_partial() {
    let o = moran(&["mfpt", "--payoff", "4,1,3,2", "--N", "100", "--mu-grid", "0.05:0.1:0.025", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("incomplete: mu = 0.1"), "{err}");
    // the bistable cells are still written
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 2 * 3);
}

#[test]
fn round_cap_is_partial() {
    let o = moran(&[
        "mfpt", "--payoff", "4,1,3,2", "--N", "200", "--mu", "0.06", "--method", "monte-carlo", "--realizations", "4",
        "--seed", "1", "--cap", "10",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("realizations finished within 10 rounds"));
}

#[test]
fn sweep_heatmap_defaults() {
    let o = moran(&[
        "sweep", "--payoff", "4,1,3,2", "--N", "30", "--mu-grid", "0.02:0.1:0.04", "--method", "heatmap,exact",
        "--format", "json",
    ]);
    let v = json(&o);
    assert_eq!(v["config"]["sim"]["rounds"], 200_000);
    assert_eq!(v["config"]["sim"]["burn_in"], 20_000);
    assert_eq!(v["config"]["sim"]["realizations"], 100);
    assert_eq!(v["heatmap"]["log_occupancy"].as_array().unwrap().len(), 31);

    let o = moran(&["sweep", "--payoff", "4,1,3,2", "--N", "30", "--mu-grid", "0.02:0.1:0.04", "--method", "exact"]);
    let text = stdout(&o);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 4);
    assert_eq!(header[0], "x");
    assert_eq!(text.lines().count(), 32);
}

#[test]
fn sweep_moments_per_basin() {
    let o = moran(&["sweep", "--payoff", "4,1,3,2", "--N", "500", "--mu-grid", "0.04:0.2:0.08", "--method", "moments,exact"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("mu,x_star,mean_sim,var_sim,"));
    let r = rows(&text);
    let basins: Vec<&str> = r.iter().map(|row| row.last().unwrap().as_str()).collect();
    assert_eq!(basins, ["lower", "upper", "lower", "lower"]);
    // var_lna tracks the exact conditional variance away from the fold
    let last = &r[3];
    let (var, lna) = (last[3].parse::<f64>().unwrap(), last[5].parse::<f64>().unwrap());
    assert!((var - lna).abs() / var < 0.1);
}

#[test]
fn config_file_with_flag_override_and_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"payoff": {"a": 4, "b": 1, "c": 3, "d": 2}, "N": 40, "mu": 0.2, "format": "json"}"#).unwrap();
    let out = dir.path().join("rates.json");
    let o = moran(&["rates", "--config", cfg.to_str().unwrap(), "--N", "8", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["config"]["N"], 8);
    assert_eq!(v["config"]["mu"], 0.2);
    assert_eq!(v["rows"].as_array().unwrap().len(), 9);
}

#[test]
fn bad_input_fails_cleanly() {
    let o = moran(&["rates", "--payoff", "4,1,3", "--N", "4", "--mu", "0.1"]);
    assert!(!o.status.success());
    let o = moran(&["stationary", "--payoff", "4,1,3,2", "--N", "10", "--mu", "0.1", "--method", "bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown stationary method"));
    let o = moran(&["stationary", "--payoff", "4,1,3,2", "--N", "10", "--mu", "0.1", "--mu-grid", "0.1:0.2:0.1"]);
    assert!(!o.status.success());
}
