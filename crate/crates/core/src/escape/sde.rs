use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::Model;
use crate::sim::stream_rng;

/// Euler-Maruyama settings. `t_end` and `dt` are in generations, the time
/// unit of the drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub x0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    /// With `false` the scheme integrates the deterministic drift only.
    pub noise: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdePath {
    pub dt: f64,
    pub xs: Vec<f64>,
}

impl SdePath {
    /// Fraction of steps spent in each of `bins` equal cells of `[0, 1]`.
    pub fn occupancy(&self, bins: usize) -> Vec<f64> {
        let mut h = vec![0.0; bins];
        for &x in &self.xs {
            h[((x * bins as f64) as usize).min(bins - 1)] += 1.0;
        }
        let total = self.xs.len() as f64;
        h.iter_mut().for_each(|c| *c /= total);
        h
    }
}

fn reflect(x: f64) -> f64 {
    let y = if x < 0.0 {
        -x
    } else if x > 1.0 {
        2.0 - x
    } else {
        x
    };
    y.clamp(0.0, 1.0)
}

/// `dx = f dt + sqrt(sigma / N) dW`, reflected back into `[0, 1]`.
pub fn simulate_sde(m: &Model, n: usize, cfg: &SdeConfig) -> Result<SdePath> {
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {}", cfg.dt)));
    }
    if !(cfg.t_end >= 0.0 && cfg.t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end must be >= 0, got {}", cfg.t_end)));
    }
    if n == 0 {
        return Err(Error::InvalidParams("N must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&cfg.x0) {
        return Err(Error::InvalidArgument(format!("x0 = {} outside [0, 1]", cfg.x0)));
    }
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut rng = stream_rng(cfg.seed, 0);
    let scale = (cfg.dt / n as f64).sqrt();
    let mut xs = Vec::with_capacity(steps + 1);
    let mut x = cfg.x0;
    xs.push(x);
    for _ in 0..steps {
        let (up, down) = m.rates(x);
        let mut next = x + (up - down) * cfg.dt;
        if cfg.noise {
            let z: f64 = StandardNormal.sample(&mut rng);
            next += (up + down).sqrt() * scale * z;
        }
        x = reflect(next);
        xs.push(x);
    }
    Ok(SdePath { dt: cfg.dt, xs })
}
