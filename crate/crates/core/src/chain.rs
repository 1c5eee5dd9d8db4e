//! The exact finite-population chain.
//!
//! States are `i = 0..=N`, the number of A-players. Per round the chain
//! moves up with probability `w_up(i)`, down with `w_down(i)` and otherwise
//! stays. Because the expected-hitting-round equations of this discrete
//! chain coincide with the continuous-time master-equation ones, the
//! stationary law and mean first-passage times here serve as the exact
//! reference for every approximation in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{fitness_counts, PayoffMatrix};
use crate::rates::Model;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub payoff: PayoffMatrix,
    #[serde(rename = "N")]
    pub n: usize,
    pub mu: f64,
}

impl ChainParams {
    pub fn new(payoff: PayoffMatrix, n: usize, mu: f64) -> Result<Self> {
        payoff.check_positive()?;
        if n < 2 {
            return Err(Error::InvalidParams(format!("N must be >= 2, got {n}")));
        }
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::InvalidParams(format!("mu must lie in (0, 1), got {mu}")));
        }
        Ok(Self { payoff, n, mu })
    }

    pub fn model(&self) -> Model {
        Model {
            payoff: self.payoff,
            mu: self.mu,
        }
    }

    /// A and B swapped; state `i` maps to `N - i`.
    pub fn relabeled(&self) -> Self {
        Self {
            payoff: self.payoff.relabeled(),
            ..*self
        }
    }

    fn check_state(&self, i: usize) -> Result<()> {
        if i > self.n {
            Err(Error::StateOutOfRange { state: i, n: self.n })
        } else {
            Ok(())
        }
    }

    /// `(w_up(i), w_down(i))` in the count form: fitness-proportional birth,
    /// uniform death, offspring switching type with probability `mu`.
    pub fn rates_at(&self, i: usize) -> Result<(f64, f64)> {
        self.check_state(i)?;
        let n = self.n as f64;
        let (fa, fb) = fitness_counts(&self.payoff, i, self.n);
        let a_weight = i as f64 * fa;
        let b_weight = (self.n - i) as f64 * fb;
        let total = a_weight + b_weight;
        let pick_a = a_weight / total;
        let pick_b = b_weight / total;
        let b_dies = (self.n - i) as f64 / n;
        let a_dies = i as f64 / n;
        let up = pick_a * b_dies * (1.0 - self.mu) + pick_b * b_dies * self.mu;
        let down = pick_b * a_dies * (1.0 - self.mu) + pick_a * a_dies * self.mu;
        Ok((up, down))
    }

    pub fn rate_up(&self, i: usize) -> Result<f64> {
        Ok(self.rates_at(i)?.0)
    }

    pub fn rate_down(&self, i: usize) -> Result<f64> {
        Ok(self.rates_at(i)?.1)
    }

    /// Rate tables for every state.
    pub fn rate_tables(&self) -> (Vec<f64>, Vec<f64>) {
        (0..=self.n)
            .map(|i| self.rates_at(i).expect("state in range"))
            .unzip()
    }

    /// Nearest lattice state to the fraction `x`.
    pub fn state_of(&self, x: f64) -> usize {
        ((x * self.n as f64).round().max(0.0) as usize).min(self.n)
    }
}

/// Probability vector over states `0..=N`, or over a uniform grid on
/// `[0, 1]` with `len - 1` intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub third_central: f64,
}

impl Distribution {
    /// Accepts a vector that already sums to one within `1e-12`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidArgument("distribution needs at least two states".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidArgument("probabilities must be finite and >= 0".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidArgument(format!("weights sum to {total}")));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    /// Normalizes log-weights with the log-sum-exp shift.
    pub fn from_log_weights(log_w: &[f64]) -> Result<Self> {
        let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(Error::InvalidArgument("log-weights have no finite maximum".into()));
        }
        Self::from_weights(log_w.iter().map(|l| (l - top).exp()).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of intervals: `N` for a chain distribution.
    pub fn n(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.n() as f64
    }

    pub fn argmax(&self) -> usize {
        self.probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn total_variation(&self, other: &Distribution) -> Result<f64> {
        if self.probs.len() != other.probs.len() {
            return Err(Error::InvalidArgument(format!(
                "distributions have {} and {} states",
                self.probs.len(),
                other.probs.len()
            )));
        }
        Ok(0.5 * self.probs.iter().zip(&other.probs).map(|(p, q)| (p - q).abs()).sum::<f64>())
    }

    /// Restricts to states `lo..=hi` and renormalizes.
    pub fn restricted(&self, lo: usize, hi: usize) -> Result<Distribution> {
        let n = self.n();
        if lo > hi || hi > n {
            return Err(Error::InvalidArgument(format!("window [{lo}, {hi}] outside 0..={n}")));
        }
        let mass: f64 = self.probs[lo..=hi].iter().sum();
        if mass <= 0.0 {
            return Err(Error::EmptyWindow { lo, hi });
        }
        let probs = self
            .probs
            .iter()
            .enumerate()
            .map(|(i, p)| if (lo..=hi).contains(&i) { p / mass } else { 0.0 })
            .collect();
        Ok(Distribution { probs })
    }

    /// Interior local maxima (modes) and minima (antimodes), in state order.
    pub fn extrema(&self) -> (Vec<usize>, Vec<usize>) {
        let p = &self.probs;
        let mut maxima = Vec::new();
        let mut minima = Vec::new();
        let last = p.len() - 1;
        if p[0] > p[1] {
            maxima.push(0);
        }
        for i in 1..last {
            if p[i] > p[i - 1] && p[i] >= p[i + 1] {
                maxima.push(i);
            } else if p[i] < p[i - 1] && p[i] <= p[i + 1] {
                minima.push(i);
            }
        }
        if p[last] > p[last - 1] {
            maxima.push(last);
        }
        (maxima, minima)
    }
}

/// Mean, variance and third central moment of `i / N`, optionally
/// restricted to the states `lo..=hi` and renormalized there.
pub fn distribution_moments(dist: &Distribution, window: Option<(usize, usize)>) -> Result<Moments> {
    let d = match window {
        Some((lo, hi)) => dist.restricted(lo, hi)?,
        None => dist.clone(),
    };
    let mean: f64 = d.probs.iter().enumerate().map(|(i, p)| p * d.x(i)).sum();
    let (mut m2, mut m3) = (0.0, 0.0);
    for (i, p) in d.probs.iter().enumerate() {
        let dx = d.x(i) - mean;
        m2 += p * dx * dx;
        m3 += p * dx * dx * dx;
    }
    Ok(Moments {
        mean,
        variance: m2,
        third_central: m3,
    })
}

/// Exact stationary law from detailed balance,
/// `pi_{i+1} / pi_i = w_up(i) / w_down(i + 1)`, accumulated in log space.
pub fn stationary_exact(params: &ChainParams) -> Distribution {
    let (up, down) = params.rate_tables();
    let mut log_w = Vec::with_capacity(params.n + 1);
    let mut acc = 0.0;
    log_w.push(acc);
    for k in 0..params.n {
        acc += up[k].ln() - down[k + 1].ln();
        log_w.push(acc);
    }
    Distribution::from_log_weights(&log_w).expect("mu > 0 keeps every ratio finite")
}

/// Expected number of rounds to first reach `target` from `start`.
///
/// Solves `(w_up + w_down) h(i) = 1 + w_up h(i+1) + w_down h(i-1)` on the
/// states between the reflecting boundary on the far side of `start` and
/// the absorbing `target`, with `h(target) = 0`.
pub fn mfpt_exact(params: &ChainParams, start: usize, target: usize) -> Result<f64> {
    params.check_state(start)?;
    params.check_state(target)?;
    if start == target {
        return Err(Error::InvalidArgument("start and target coincide".into()));
    }
    Ok(hitting_times(params, target, start < target)?[start])
}

/// Mean hitting times of `target`, indexed by state. Only the states on the
/// `from_below` side of the target are filled in; the rest stay zero.
///
/// The tridiagonal system is eliminated starting at the reflecting end.
/// There every pivot reduces to the rate towards the target, so the
/// elimination is carried out on the increments `h(k) - h(k +- 1)` directly:
/// for the upward case `w_up(k) D(k) = 1 + w_down(k) D(k - 1)`. All terms are
/// positive, which avoids the `(w_up + w_down) - w_down` cancellation of a
/// generic sweep when the drift opposes the passage.
fn hitting_times(params: &ChainParams, target: usize, from_below: bool) -> Result<Vec<f64>> {
    let (up, down) = params.rate_tables();
    let mut h = vec![0.0; params.n + 1];
    if from_below {
        let mut prev = 0.0;
        let mut incr = vec![0.0; target];
        for k in 0..target {
            if up[k] <= 0.0 {
                return Err(Error::SingularSystem { row: k });
            }
            prev = (1.0 + down[k] * prev) / up[k];
            incr[k] = prev;
        }
        let mut acc = 0.0;
        for k in (0..target).rev() {
            acc += incr[k];
            h[k] = acc;
        }
    } else {
        let n = params.n;
        let mut prev = 0.0;
        let mut incr = vec![0.0; n + 1];
        for k in (target + 1..=n).rev() {
            if down[k] <= 0.0 {
                return Err(Error::SingularSystem { row: n - k });
            }
            prev = (1.0 + up[k] * prev) / down[k];
            incr[k] = prev;
        }
        let mut acc = 0.0;
        for k in target + 1..=n {
            acc += incr[k];
            h[k] = acc;
        }
    }
    Ok(h)
}
