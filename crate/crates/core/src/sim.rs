//! Monte Carlo for the discrete-round chain.
//!
//! Realization `k` draws from ChaCha8 seeded with `seed` on stream `k`, and
//! per-realization results are combined in index order, so aggregate output
//! depends only on `(seed, realizations)` and not on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{stationary_exact, ChainParams, Distribution};
use crate::error::{Error, Result};
use crate::game::PayoffMatrix;

/// Default per-realization round cap for first-passage runs.
pub const DEFAULT_ROUND_CAP: u64 = 10_000_000_000;
/// Floor added before taking logs of heatmap occupancies.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub rounds: u64,
    pub burn_in: u64,
    pub realizations: usize,
    pub seed: u64,
    /// Initial state; `None` starts at `N / 2` rounded half up.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            rounds: 200_000,
            burn_in: 20_000,
            realizations: 100,
            seed: 0,
            start: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.rounds {
            return Err(Error::InvalidArgument(format!(
                "burn_in ({}) must be below rounds ({})",
                self.burn_in, self.rounds
            )));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidArgument("realizations must be >= 1".into()));
        }
        Ok(())
    }

    fn start_state(&self, n: usize) -> Result<usize> {
        match self.start {
            Some(s) if s > n => Err(Error::StateOutOfRange { state: s, n }),
            Some(s) => Ok(s),
            None => Ok(n.div_ceil(2)),
        }
    }
}

/// The generator for realization `k` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

#[cfg(feature = "parallel")]
fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Cumulative step thresholds: move up if `u < up[i]`, down if
/// `up[i] <= u < both[i]`.
struct StepTable {
    up: Vec<f64>,
    both: Vec<f64>,
}

impl StepTable {
    fn new(params: &ChainParams) -> Self {
        let (up, down) = params.rate_tables();
        let both = up.iter().zip(&down).map(|(u, d)| u + d).collect();
        Self { up, both }
    }

    #[inline]
    fn step(&self, i: usize, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        if u < self.up[i] {
            i + 1
        } else if u < self.both[i] {
            i - 1
        } else {
            i
        }
    }
}

/// Occupancy histogram over rounds `burn_in..rounds`, pooled over
/// realizations and normalized.
pub fn simulate(params: &ChainParams, cfg: &SimConfig) -> Result<Distribution> {
    cfg.validate()?;
    let start = cfg.start_state(params.n)?;
    let table = StepTable::new(params);
    let n = params.n;
    let per_run = map_indexed(cfg.realizations, |k| {
        let mut rng = stream_rng(cfg.seed, k as u64);
        let mut counts = vec![0u64; n + 1];
        let mut i = start;
        for _ in 0..cfg.burn_in {
            i = table.step(i, &mut rng);
        }
        for _ in cfg.burn_in..cfg.rounds {
            counts[i] += 1;
            i = table.step(i, &mut rng);
        }
        counts
    });
    let mut total = vec![0u64; n + 1];
    for counts in per_run {
        for (t, c) in total.iter_mut().zip(counts) {
            *t += c;
        }
    }
    let samples: u64 = total.iter().sum();
    Distribution::from_weights(total.into_iter().map(|c| c as f64 / samples as f64).collect())
}

/// Mean first-passage rounds with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FptEstimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(rename = "n")]
    pub n_samples: usize,
}

impl FptEstimate {
    pub fn from_samples(samples: &[u64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument("need at least two first-passage samples".into()));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().map(|&t| t as f64).sum::<f64>() / n;
        let var = samples.iter().map(|&t| (t as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let half = 1.96 * (var / n).sqrt();
        Ok(Self {
            mean,
            ci_low: mean - half,
            ci_high: mean + half,
            n_samples: samples.len(),
        })
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

/// Rounds to first reach `target` from `start`, one sample per realization.
///
/// A realization that has not hit the target after `cap` rounds aborts the
/// run with [`Error::RoundCapExceeded`] carrying the samples that did finish.
pub fn estimate_fpt(
    params: &ChainParams,
    start: usize,
    target: usize,
    realizations: usize,
    seed: u64,
    cap: u64,
) -> Result<FptEstimate> {
    let n = params.n;
    for s in [start, target] {
        if s > n {
            return Err(Error::StateOutOfRange { state: s, n });
        }
    }
    if start == target {
        return Err(Error::InvalidArgument("start and target coincide".into()));
    }
    if realizations < 2 {
        return Err(Error::InvalidArgument("realizations must be >= 2".into()));
    }
    let table = StepTable::new(params);
    let runs = map_indexed(realizations, |k| {
        let mut rng = stream_rng(seed, k as u64);
        let mut i = start;
        let mut t = 0u64;
        while i != target {
            if t >= cap {
                return None;
            }
            i = table.step(i, &mut rng);
            t += 1;
        }
        Some(t)
    });
    let completed: Vec<u64> = runs.iter().flatten().copied().collect();
    if completed.len() < runs.len() {
        return Err(Error::RoundCapExceeded { cap, completed });
    }
    FptEstimate::from_samples(&completed)
}

/// Log-occupancy over states (rows) and mutation rates (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub mus: Vec<f64>,
    /// `log_occupancy[i][j]` is the log of the mass at state `i` for `mus[j]`.
    pub log_occupancy: Vec<Vec<f64>>,
    pub exact: bool,
}

/// One occupancy column per `mu`, simulated or (with `exact`) taken from the
/// detailed-balance law, floored at [`LOG_FLOOR`] before the log.
pub fn heatmap(payoff: &PayoffMatrix, n: usize, mus: &[f64], cfg: &SimConfig, exact: bool) -> Result<Heatmap> {
    let params = mus
        .iter()
        .map(|&mu| ChainParams::new(*payoff, n, mu))
        .collect::<Result<Vec<_>>>()?;
    let columns = map_indexed(params.len(), |j| {
        if exact {
            Ok(stationary_exact(&params[j]))
        } else {
            simulate(&params[j], cfg)
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let log_occupancy = (0..=n)
        .map(|i| columns.iter().map(|d| (d.probs()[i] + LOG_FLOOR).ln()).collect())
        .collect();
    Ok(Heatmap {
        mus: mus.to_vec(),
        log_occupancy,
        exact,
    })
}
