//! Payoff matrices, fitness and regime classification.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `(a + b) - (c + d)` when deciding Case 1.
pub const CASE1_TOL: f64 = 1e-12;

/// Row-player payoffs of the 2x2 game. `a` is A against A, `b` is A against
/// B, `c` is B against A and `d` is B against B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeCase {
    /// `a + b = c + d`, `a > d`, `b < c`.
    Case1_1,
    /// `a + b = c + d`, `a < d`, `b > c`.
    Case1_2,
    /// `a + b = c + d` with the remaining sign patterns, including the
    /// interchangeable `a = d`, `b = c`.
    Case1_3,
    /// `a + b > c + d`.
    Case2,
    /// `a + b < c + d`.
    Case3,
}

impl RegimeCase {
    pub fn is_case1(self) -> bool {
        matches!(self, Self::Case1_1 | Self::Case1_2 | Self::Case1_3)
    }
}

impl PayoffMatrix {
    /// Builds a matrix with finite entries.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let p = Self { a, b, c, d };
        if !p.entries().iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidPayoff(format!("non-finite entry in {p}")));
        }
        Ok(p)
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// The same game with the strategy labels swapped: `(d, c, b, a)`.
    pub fn relabeled(&self) -> Self {
        Self {
            a: self.d,
            b: self.c,
            c: self.b,
            d: self.a,
        }
    }

    /// Entries strictly positive, which keeps both fitnesses positive on
    /// the whole simplex.
    pub fn check_positive(&self) -> Result<()> {
        if self.entries().iter().all(|&v| v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidPayoff(format!(
                "chain payoffs must be finite and > 0, got {self}"
            )))
        }
    }

    pub fn classify(&self) -> RegimeCase {
        classify_regime(self)
    }
}

impl fmt::Display for PayoffMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.a, self.b, self.c, self.d)
    }
}

impl FromStr for PayoffMatrix {
    type Err = Error;

    /// Parses `"a,b,c,d"`.
    fn from_str(s: &str) -> Result<Self> {
        let vals = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("payoff entry {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        match vals.as_slice() {
            &[a, b, c, d] => Self::new(a, b, c, d),
            _ => Err(Error::Parse(format!(
                "payoff needs 4 comma-separated entries, got {}",
                vals.len()
            ))),
        }
    }
}

pub fn classify_regime(p: &PayoffMatrix) -> RegimeCase {
    let diff = (p.a + p.b) - (p.c + p.d);
    if diff.abs() <= CASE1_TOL {
        if p.a > p.d && p.b < p.c {
            RegimeCase::Case1_1
        } else if p.a < p.d && p.b > p.c {
            RegimeCase::Case1_2
        } else {
            RegimeCase::Case1_3
        }
    } else if diff > 0.0 {
        RegimeCase::Case2
    } else {
        RegimeCase::Case3
    }
}

/// `(A is ESS, B is ESS)`: A resists invasion iff `a > c`, B iff `d > b`.
pub fn ess_profile(p: &PayoffMatrix) -> (bool, bool) {
    (p.a > p.c, p.d > p.b)
}

/// Mean payoffs `(f_A, f_B)` when a fraction `x` of the population plays A.
pub fn fitness(p: &PayoffMatrix, x: f64) -> (f64, f64) {
    (p.a * x + p.b * (1.0 - x), p.c * x + p.d * (1.0 - x))
}

/// Count form of [`fitness`] for `i` A-players out of `n`.
///
/// Defined through `x = i / n` so that it agrees with [`fitness`] bit for bit.
pub fn fitness_counts(p: &PayoffMatrix, i: usize, n: usize) -> (f64, f64) {
    fitness(p, i as f64 / n as f64)
}

/// Single-round Prisoner's Dilemma with `t > r > p > s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdMatrix {
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub p: f64,
}

impl PdMatrix {
    pub fn new(r: f64, s: f64, t: f64, p: f64) -> Result<Self> {
        if !(t > r && r > p && p > s) {
            return Err(Error::InvalidPayoff(format!(
                "prisoner's dilemma needs t > r > p > s, got r={r}, s={s}, t={t}, p={p}"
            )));
        }
        Ok(Self { r, s, t, p })
    }
}

/// Expected `m`-round payoff matrix when strategy A cooperates with
/// probability `alpha` and B with probability `beta`, every move independent.
///
/// The per-round expectation is the bilinear form
/// `E[u(X, Y)] = q r + q(1-q') s + (1-q) q' t + (1-q)(1-q') p` for the
/// cooperation probabilities `q` (row) and `q'` (column).
pub fn aggregate_mixed(pd: &PdMatrix, alpha: f64, beta: f64, m: u32) -> Result<PayoffMatrix> {
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!(
            "cooperation probabilities must lie in [0, 1], got {alpha}, {beta}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("round count must be >= 1".into()));
    }
    let round = |row: f64, col: f64| {
        row * col * pd.r + row * (1.0 - col) * pd.s + (1.0 - row) * col * pd.t
            + (1.0 - row) * (1.0 - col) * pd.p
    };
    let m = f64::from(m);
    PayoffMatrix::new(
        m * round(alpha, alpha),
        m * round(alpha, beta),
        m * round(beta, alpha),
        m * round(beta, beta),
    )
}

/// Aggregate `m`-round payoffs with A = tit-for-tat and B = always-defect,
/// and whether both strategies are ESS.
pub fn aggregate_tft_alld(pd: &PdMatrix, m: u32) -> Result<(PayoffMatrix, bool)> {
    if m == 0 {
        return Err(Error::InvalidArgument("round count must be >= 1".into()));
    }
    let mf = f64::from(m);
    let p = PayoffMatrix::new(
        mf * pd.r,
        pd.s + (mf - 1.0) * pd.p,
        pd.t + (mf - 1.0) * pd.p,
        mf * pd.p,
    )?;
    let (a_ess, b_ess) = ess_profile(&p);
    Ok((p, a_ess && b_ess))
}

/// Smallest round count for which TFT is also ESS against AllD.
pub fn tft_ess_threshold(pd: &PdMatrix) -> u32 {
    // m r > t + (m - 1) p  <=>  m > (t - p) / (r - p)
    let holds = |m: u32| f64::from(m) * pd.r > pd.t + (f64::from(m) - 1.0) * pd.p;
    let mut m0 = (((pd.t - pd.p) / (pd.r - pd.p)).floor() + 1.0).max(1.0) as u32;
    // settle rounding at exact integer thresholds against the inequality itself
    while m0 > 1 && holds(m0 - 1) {
        m0 -= 1;
    }
    while !holds(m0) {
        m0 += 1;
    }
    m0
}
