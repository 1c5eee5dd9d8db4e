//! One function per subcommand. Each returns the rendered artifact plus
//! notes and failures; a failure means the artifact is partial.

use anyhow::{bail, Context, Result};
use moran_core::chain::{distribution_moments, stationary_exact, ChainParams, Distribution};
use moran_core::deterministic::{continue_diagram, critical_mus_case1};
use moran_core::escape::{
    escape_exact, escape_monte_carlo, mfpt_diffusion, mfpt_wkb, stationary_diffusion, EscapeMethod, EscapeReport,
};
use moran_core::io::{fmt_f64, write_diagram, write_distribution, write_heatmap, write_rates, write_table};
use moran_core::moments::{basin_windows, corrected_moments, lna_variance};
use moran_core::sim::{heatmap, simulate};
use moran_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};

pub enum Body {
    Csv(Vec<u8>),
    Json(Value),
}

pub struct Output {
    pub body: Body,
    pub notes: Vec<String>,
    pub failures: Vec<String>,
}

impl Output {
    fn new(body: Body) -> Self {
        Self {
            body,
            notes: Vec::new(),
            failures: Vec::new(),
        }
    }
}

fn with_config(cfg: &RunConfig, mut result: Value) -> Value {
    result["config"] = json!(cfg);
    result
}

fn chain(cfg: &RunConfig, mu: f64) -> Result<ChainParams> {
    Ok(ChainParams::new(cfg.payoff, cfg.n()?, mu)?)
}

pub fn rates(cfg: &RunConfig) -> Result<Output> {
    let mu = cfg.single_mu()?;
    if !(0.0..=1.0).contains(&mu) {
        bail!("mu must lie in [0, 1], got {mu}");
    }
    cfg.payoff.check_positive()?;
    // the closed endpoints are fine for rate tables, unlike the solvers
    let n = cfg.n()?;
    let params = ChainParams { payoff: cfg.payoff, n, mu };
    Ok(Output::new(match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_rates(&mut buf, &params)?;
            Body::Csv(buf)
        }
        Format::Json => {
            let m = params.model();
            let (up, down) = params.rate_tables();
            let rows: Vec<Value> = (0..=n)
                .map(|i| {
                    let x = i as f64 / n as f64;
                    let (ou, od) = m.rates(x);
                    json!({"i": i, "x": x, "w_up": up[i], "w_down": down[i], "omega_up": ou, "omega_down": od})
                })
                .collect();
            Body::Json(with_config(cfg, json!({ "rows": rows })))
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StationaryMethod {
    Exact,
    Diffusion,
    MonteCarlo,
}

impl StationaryMethod {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s.replace('_', "-").as_str() {
            "exact" => Self::Exact,
            "diffusion" => Self::Diffusion,
            "monte-carlo" | "mc" => Self::MonteCarlo,
            other => bail!("unknown stationary method '{other}' (exact, diffusion, monte-carlo)"),
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Diffusion => "diffusion",
            Self::MonteCarlo => "monte_carlo",
        }
    }
}

pub fn stationary(cfg: &RunConfig) -> Result<Output> {
    let params = chain(cfg, cfg.single_mu()?)?;
    let methods = cfg.method.iter().map(|m| StationaryMethod::parse(m)).collect::<Result<Vec<_>>>()?;
    let exact = stationary_exact(&params);
    let mut dists: Vec<(StationaryMethod, Distribution)> = Vec::new();
    for &method in &methods {
        let d = match method {
            StationaryMethod::Exact => exact.clone(),
            StationaryMethod::Diffusion => stationary_diffusion(&params.model(), params.n, params.n)?,
            StationaryMethod::MonteCarlo => simulate(&params, &cfg.sim)?,
        };
        dists.push((method, d));
    }

    let mut notes = Vec::new();
    if methods.contains(&StationaryMethod::MonteCarlo) {
        notes.extend(cfg.seed_note());
    }
    let mut tv_mc = None;
    for (method, d) in &dists {
        if *method != StationaryMethod::Exact {
            let tv = d.total_variation(&exact)?;
            notes.push(format!("total variation {} vs exact: {tv:.6}", method.name()));
            if *method == StationaryMethod::MonteCarlo {
                tv_mc = Some(tv);
            }
        }
    }

    let body = match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            for (k, (method, d)) in dists.iter().enumerate() {
                let mut part = Vec::new();
                write_distribution(&mut part, d, Some(method.name()))?;
                // one header for the stacked table
                let skip = if k == 0 { 0 } else { part.iter().position(|&b| b == b'\n').map_or(0, |p| p + 1) };
                buf.extend_from_slice(&part[skip..]);
            }
            Body::Csv(buf)
        }
        Format::Json => {
            let items: Vec<Value> = dists
                .iter()
                .map(|(method, d)| json!({"method": method.name(), "prob": d.probs()}))
                .collect();
            Body::Json(with_config(cfg, json!({"distributions": items, "tv_monte_carlo_exact": tv_mc})))
        }
    };
    Ok(Output {
        body,
        notes,
        failures: Vec::new(),
    })
}

/// Default range when neither `mu` nor a grid is given.
const DEFAULT_BIFURCATION_GRID: (f64, f64, f64) = (0.0025, 0.5, 0.0025);

pub fn bifurcation(cfg: &RunConfig) -> Result<Output> {
    let (lo, hi, step) = match (cfg.mu_grid, cfg.mu) {
        (Some(g), _) => (g.lo, g.hi, g.step),
        (None, None) => DEFAULT_BIFURCATION_GRID,
        (None, Some(_)) => bail!("bifurcation takes --mu-grid, not --mu"),
    };
    let mut notes = Vec::new();
    // at mu = 0 the equilibria sit on the boundary; continue from the next point
    let lo = if lo == 0.0 {
        notes.push(format!("continuation starts at mu = {step}, the first positive grid point"));
        step
    } else {
        lo
    };
    let diagram = continue_diagram(&cfg.payoff, lo, hi, step)?;
    let regime = cfg.payoff.classify();
    let critical = if regime.is_case1() { critical_mus_case1(&cfg.payoff).ok() } else { None };
    notes.push(format!("regime {regime:?}"));
    if let Some(c) = critical {
        notes.push(format!("mu1 = {}, mu2 = {}", fmt_f64(c.mu1), fmt_f64(c.mu2)));
    }
    for f in &diagram.folds {
        notes.push(format!("fold at mu = {}, x = {}", fmt_f64(f.mu), fmt_f64(f.x)));
    }
    for t in &diagram.transcritical_points {
        notes.push(format!("transcritical point at mu = {}, x = {}", fmt_f64(t.mu), fmt_f64(t.x)));
    }
    let body = match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_diagram(&mut buf, &diagram)?;
            Body::Csv(buf)
        }
        Format::Json => {
            let mut v = json!({
                "regime": regime,
                "folds": diagram.folds,
                "transcritical_points": diagram.transcritical_points,
                "branches": diagram.branches,
            });
            if let Some(c) = critical {
                v["mu1"] = json!(c.mu1);
                v["mu2"] = json!(c.mu2);
            }
            Body::Json(with_config(cfg, v))
        }
    };
    Ok(Output {
        body,
        notes,
        failures: Vec::new(),
    })
}

#[derive(Serialize)]
struct MfptCell {
    mu: f64,
    reports: Vec<EscapeReport>,
}

fn escape_by(method: EscapeMethod, params: &ChainParams, cfg: &RunConfig) -> moran_core::Result<EscapeReport> {
    match method {
        EscapeMethod::Exact => escape_exact(params),
        EscapeMethod::Diffusion => mfpt_diffusion(&params.model(), params.n),
        EscapeMethod::Wkb => mfpt_wkb(&params.model(), params.n),
        EscapeMethod::MonteCarlo => escape_monte_carlo(params, cfg.sim.realizations, cfg.sim.seed, cfg.cap),
    }
}

fn cross_checks(mu: f64, reports: &[EscapeReport], notes: &mut Vec<String>) {
    let find = |m: EscapeMethod| reports.iter().find(|r| r.method == m);
    if let (Some(e), Some(mc)) = (find(EscapeMethod::Exact), find(EscapeMethod::MonteCarlo)) {
        let (lo, hi) = mc.ci_minus.unwrap_or((f64::NAN, f64::NAN));
        let inside = lo <= e.tau_minus && e.tau_minus <= hi;
        notes.push(format!("mu = {mu}: exact tau_minus {} Monte Carlo 95% interval", if inside { "inside" } else { "outside" }));
    }
    if let (Some(d), Some(w)) = (find(EscapeMethod::Diffusion), find(EscapeMethod::Wkb)) {
        notes.push(format!("mu = {mu}: ln tau_diffusion / ln tau_wkb = {:.6}", d.tau_minus.ln() / w.tau_minus.ln()));
    }
}

pub fn mfpt(cfg: &RunConfig) -> Result<Output> {
    let methods = cfg
        .method
        .iter()
        .map(|m| m.parse::<EscapeMethod>())
        .collect::<moran_core::Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    let mut notes = Vec::new();
    if methods.contains(&EscapeMethod::MonteCarlo) {
        notes.extend(cfg.seed_note());
    }
    let mut failures = Vec::new();
    for mu in cfg.mus()? {
        let params = chain(cfg, mu)?;
        let mut reports = Vec::new();
        for &method in &methods {
            match escape_by(method, &params, cfg) {
                Ok(r) => reports.push(r),
                Err(Error::RoundCapExceeded { cap, completed }) => failures.push(format!(
                    "mu = {mu}, {}: {} of {} realizations finished within {cap} rounds",
                    method.as_str(),
                    completed.len(),
                    cfg.sim.realizations
                )),
                Err(e @ Error::NotBistable { .. }) => failures.push(format!("mu = {mu}, {}: {e}", method.as_str())),
                Err(e) => return Err(e).with_context(|| format!("mu = {mu}, {}", method.as_str())),
            }
        }
        cross_checks(mu, &reports, &mut notes);
        cells.push(MfptCell { mu, reports });
    }

    let body = match cfg.format {
        Format::Json => Body::Json(with_config(cfg, json!({ "results": cells }))),
        Format::Csv => {
            let header = [
                "mu",
                "tau_minus",
                "tau_plus",
                "exponent",
                "prefactor",
                "exponent_plus",
                "prefactor_plus",
                "ci_minus_low",
                "ci_minus_high",
                "ci_plus_low",
                "ci_plus_high",
                "method",
            ];
            let nan = f64::NAN;
            let rows: Vec<(Vec<f64>, Option<String>)> = cells
                .iter()
                .flat_map(|c| {
                    c.reports.iter().map(move |r| {
                        let (a, b) = r.ci_minus.unwrap_or((nan, nan));
                        let (p, q) = r.ci_plus.unwrap_or((nan, nan));
                        (
                            vec![
                                c.mu,
                                r.tau_minus,
                                r.tau_plus,
                                r.exponent.unwrap_or(nan),
                                r.prefactor.unwrap_or(nan),
                                r.exponent_plus.unwrap_or(nan),
                                r.prefactor_plus.unwrap_or(nan),
                                a,
                                b,
                                p,
                                q,
                            ],
                            Some(r.method.as_str().to_string()),
                        )
                    })
                })
                .collect();
            let mut buf = Vec::new();
            write_table(&mut buf, &header, &rows)?;
            Body::Csv(buf)
        }
    };
    Ok(Output { body, notes, failures })
}

#[derive(Debug, Serialize)]
struct MomentRow {
    mu: f64,
    basin: &'static str,
    x_star: f64,
    mean_sim: f64,
    var_sim: f64,
    third_sim: f64,
    var_lna: f64,
    mean_corrected: f64,
    var_corrected: f64,
    third_corrected: f64,
}

/// `heatmap` (default) or `moments`, from the method list. `exact` swaps
/// simulation for the detailed-balance law.
pub fn sweep(cfg: &RunConfig) -> Result<Output> {
    let mus = cfg.grid()?;
    let n = cfg.n()?;
    let mut kind = "heatmap";
    let mut exact = false;
    for m in &cfg.method {
        match m.as_str() {
            "heatmap" | "moments" => kind = if m == "heatmap" { "heatmap" } else { "moments" },
            "exact" => exact = true,
            "monte-carlo" | "monte_carlo" | "mc" => exact = false,
            other => bail!("unknown sweep method '{other}' (heatmap, moments, exact, monte-carlo)"),
        }
    }
    let notes: Vec<String> = if exact { Vec::new() } else { cfg.seed_note().into_iter().collect() };
    if kind == "heatmap" {
        let h = heatmap(&cfg.payoff, n, &mus, &cfg.sim, exact)?;
        let body = match cfg.format {
            Format::Csv => {
                let mut buf = Vec::new();
                write_heatmap(&mut buf, &h)?;
                Body::Csv(buf)
            }
            Format::Json => Body::Json(with_config(cfg, json!({ "heatmap": h }))),
        };
        return Ok(Output {
            body,
            notes,
            failures: Vec::new(),
        });
    }

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &mu in &mus {
        let params = chain(cfg, mu)?;
        let m = params.model();
        let dist = if exact { stationary_exact(&params) } else { simulate(&params, &cfg.sim)? };
        let basins = match basin_windows(&m, n) {
            Ok(b) => b,
            Err(e) => {
                failures.push(format!("mu = {mu}: {e}"));
                continue;
            }
        };
        let labels: &[&'static str] = if basins.single_mode { &["lower"] } else { &["lower", "upper"] };
        for ((&window, &x_star), &basin) in basins.windows.iter().zip(&basins.attractors).zip(labels) {
            let sampled = match distribution_moments(&dist, Some(window)) {
                Ok(s) => s,
                Err(e) => {
                    failures.push(format!("mu = {mu}, {basin} basin: {e}"));
                    continue;
                }
            };
            let lna = lna_variance(&m, n, x_star)?;
            let corr = corrected_moments(&m, n, x_star)?;
            rows.push(MomentRow {
                mu,
                basin,
                x_star,
                mean_sim: sampled.mean,
                var_sim: sampled.variance,
                third_sim: sampled.third_central,
                var_lna: lna.variance,
                mean_corrected: corr.mean,
                var_corrected: corr.variance,
                third_corrected: corr.third_central,
            });
        }
    }
    let body = match cfg.format {
        Format::Json => Body::Json(with_config(cfg, json!({ "rows": rows, "exact": exact }))),
        Format::Csv => {
            let header = [
                "mu",
                "x_star",
                "mean_sim",
                "var_sim",
                "third_sim",
                "var_lna",
                "mean_corrected",
                "var_corrected",
                "third_corrected",
                "basin",
            ];
            let table: Vec<(Vec<f64>, Option<String>)> = rows
                .iter()
                .map(|r| {
                    (
                        vec![
                            r.mu,
                            r.x_star,
                            r.mean_sim,
                            r.var_sim,
                            r.third_sim,
                            r.var_lna,
                            r.mean_corrected,
                            r.var_corrected,
                            r.third_corrected,
                        ],
                        Some(r.basin.to_string()),
                    )
                })
                .collect();
            let mut buf = Vec::new();
            write_table(&mut buf, &header, &table)?;
            Body::Csv(buf)
        }
    };
    Ok(Output { body, notes, failures })
}
