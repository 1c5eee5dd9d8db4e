//! Browser bindings for the demo page in `www/`. Every entry point takes
//! plain numbers and returns a JSON string; errors come back as a string
//! message so the page can show them.

use moran_core::chain::{stationary_exact, ChainParams};
use moran_core::deterministic::{continue_diagram, critical_mus_case1, fixed_points};
use moran_core::escape::{escape_exact, mfpt_diffusion, mfpt_wkb, stationary_diffusion};
use moran_core::PayoffMatrix;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest population the page lets through to the exact solvers.
pub const MAX_N: usize = 5000;

fn payoff(a: f64, b: f64, c: f64, d: f64) -> Result<PayoffMatrix, String> {
    let p = PayoffMatrix::new(a, b, c, d).map_err(|e| e.to_string())?;
    p.check_positive().map_err(|e| e.to_string())?;
    Ok(p)
}

fn check_n(n: usize) -> Result<(), String> {
    if !(2..=MAX_N).contains(&n) {
        return Err(format!("N must lie in 2..={MAX_N}"));
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct DiagramView {
    branches: Vec<Vec<(f64, f64, bool)>>,
    folds: Vec<(f64, f64)>,
    transcritical: Vec<(f64, f64)>,
    mu1: Option<f64>,
    mu2: Option<f64>,
}

/// Equilibrium branches on `[mu_hi / 400, mu_hi]` as `(mu, x, stable)` triples.
pub fn bifurcation_json(a: f64, b: f64, c: f64, d: f64, mu_hi: f64) -> Result<String, String> {
    let p = payoff(a, b, c, d)?;
    if !(mu_hi > 0.0 && mu_hi < 1.0) {
        return Err("mu range must end inside (0, 1)".into());
    }
    let step = mu_hi / 400.0;
    let diagram = continue_diagram(&p, step, mu_hi, step).map_err(|e| e.to_string())?;
    let critical = critical_mus_case1(&p).ok();
    to_json(&DiagramView {
        branches: diagram
            .branches
            .iter()
            .map(|br| br.points.iter().map(|q| (q.mu, q.x, q.stability.as_str() == "stable")).collect())
            .collect(),
        folds: diagram.folds.iter().map(|f| (f.mu, f.x)).collect(),
        transcritical: diagram.transcritical_points.iter().map(|t| (t.mu, t.x)).collect(),
        mu1: critical.map(|c| c.mu1),
        mu2: critical.map(|c| c.mu2),
    })
}

#[derive(Serialize)]
struct DensityView {
    x: Vec<f64>,
    exact: Vec<f64>,
    diffusion: Vec<f64>,
    equilibria: Vec<(f64, bool)>,
    total_variation: f64,
}

/// Exact stationary law next to the diffusion density, on the lattice `i / N`.
pub fn stationary_json(a: f64, b: f64, c: f64, d: f64, n: usize, mu: f64) -> Result<String, String> {
    check_n(n)?;
    let params = ChainParams::new(payoff(a, b, c, d)?, n, mu).map_err(|e| e.to_string())?;
    let exact = stationary_exact(&params);
    let diffusion = stationary_diffusion(&params.model(), n, n).map_err(|e| e.to_string())?;
    to_json(&DensityView {
        x: (0..=n).map(|i| i as f64 / n as f64).collect(),
        total_variation: exact.total_variation(&diffusion).map_err(|e| e.to_string())?,
        exact: exact.probs().to_vec(),
        diffusion: diffusion.probs().to_vec(),
        equilibria: fixed_points(&params.model())
            .iter()
            .map(|f| (f.x, f.stability.as_str() == "stable"))
            .collect(),
    })
}

#[derive(Serialize)]
struct EscapeRow {
    mu: f64,
    exact: f64,
    diffusion: f64,
    wkb: f64,
}

/// `log10` of the escape time out of `x_-` (rounds) over `points` values of
/// `mu` in `[mu_lo, mu_hi]`. Values of `mu` without two attractors are left out.
#[allow(clippy::too_many_arguments)]
pub fn escape_json(a: f64, b: f64, c: f64, d: f64, n: usize, mu_lo: f64, mu_hi: f64, points: usize) -> Result<String, String> {
    check_n(n)?;
    let p = payoff(a, b, c, d)?;
    if !(0.0 < mu_lo && mu_lo < mu_hi && mu_hi < 1.0) || points < 2 {
        return Err("need 0 < mu_lo < mu_hi < 1 and at least two points".into());
    }
    let mut rows = Vec::new();
    for k in 0..points {
        let mu = mu_lo + (mu_hi - mu_lo) * k as f64 / (points - 1) as f64;
        let params = ChainParams::new(p, n, mu).map_err(|e| e.to_string())?;
        let m = params.model();
        let (Ok(e), Ok(df), Ok(w)) = (escape_exact(&params), mfpt_diffusion(&m, n), mfpt_wkb(&m, n)) else {
            continue;
        };
        rows.push(EscapeRow {
            mu,
            exact: e.tau_minus.log10(),
            diffusion: df.tau_minus.log10(),
            wkb: w.tau_minus.log10(),
        });
    }
    to_json(&rows)
}

#[wasm_bindgen]
pub fn bifurcation(a: f64, b: f64, c: f64, d: f64, mu_hi: f64) -> Result<String, JsValue> {
    bifurcation_json(a, b, c, d, mu_hi).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn stationary(a: f64, b: f64, c: f64, d: f64, n: usize, mu: f64) -> Result<String, JsValue> {
    stationary_json(a, b, c, d, n, mu).map_err(|e| JsValue::from_str(&e))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn escape_times(a: f64, b: f64, c: f64, d: f64, n: usize, mu_lo: f64, mu_hi: f64, points: usize) -> Result<String, JsValue> {
    escape_json(a, b, c, d, n, mu_lo, mu_hi, points).map_err(|e| JsValue::from_str(&e))
}
