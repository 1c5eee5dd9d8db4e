//! Scaled transition rates `Omega_+(x)`, `Omega_-(x)` and their derivatives.
//!
//! Derivatives are propagated through the factored rate expressions with a
//! second-order jet, which keeps them exact up to rounding and avoids the
//! cancellation an expanded polynomial form shows near `x = 1`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{fitness, PayoffMatrix};

/// Value with first and second derivative in one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: f64,
    pub dd: f64,
}

impl Jet {
    pub const fn constant(v: f64) -> Self {
        Self { v, d: 0.0, dd: 0.0 }
    }

    pub const fn variable(v: f64) -> Self {
        Self { v, d: 1.0, dd: 0.0 }
    }

    pub fn ln(self) -> Self {
        let d = self.d / self.v;
        Self {
            v: self.v.ln(),
            d,
            dd: self.dd / self.v - d * d,
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            d: self.d + o.d,
            dd: self.dd + o.dd,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet {
            v: self.v - o.v,
            d: self.d - o.d,
            dd: self.dd - o.dd,
        }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            v: -self.v,
            d: -self.d,
            dd: -self.dd,
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
            dd: self.dd * o.v + 2.0 * self.d * o.d + self.v * o.dd,
        }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, k: f64) -> Jet {
        Jet {
            v: self.v * k,
            d: self.d * k,
            dd: self.dd * k,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let q = self.v / o.v;
        let dq = (self.d - q * o.d) / o.v;
        let ddq = (self.dd - 2.0 * dq * o.d - q * o.dd) / o.v;
        Jet { v: q, d: dq, dd: ddq }
    }
}

/// A payoff matrix together with a mutation probability: everything the
/// infinite-population quantities depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub payoff: PayoffMatrix,
    pub mu: f64,
}

/// The pieces of the rate numerators, as jets in `x`.
struct Parts {
    /// `x (1 - x) f_A`: A reproduces without mutation, B dies.
    a_birth_b_death: Jet,
    /// `(1 - x)^2 f_B`: B reproduces and mutates, B dies.
    b_mutant_b_death: Jet,
    /// `x (1 - x) f_B`: B reproduces without mutation, A dies.
    b_birth_a_death: Jet,
    /// `x^2 f_A`: A reproduces and mutates, A dies.
    a_mutant_a_death: Jet,
    /// `x f_A + (1 - x) f_B`: total reproductive weight.
    weight: Jet,
}

impl Model {
    /// Payoffs must be strictly positive and `0 <= mu < 1`.
    pub fn new(payoff: PayoffMatrix, mu: f64) -> Result<Self> {
        payoff.check_positive()?;
        if !(0.0..1.0).contains(&mu) {
            return Err(Error::InvalidParams(format!("mu must lie in [0, 1), got {mu}")));
        }
        Ok(Self { payoff, mu })
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..*self }
    }

    /// The model with A and B swapped; maps `x` to `1 - x`.
    pub fn relabeled(&self) -> Self {
        Self {
            payoff: self.payoff.relabeled(),
            mu: self.mu,
        }
    }

    fn parts(&self, x: f64) -> Parts {
        let p = &self.payoff;
        let xj = Jet::variable(x);
        let yj = Jet::constant(1.0) - xj;
        let fa = Jet::constant(p.b) + xj * (p.a - p.b);
        let fb = Jet::constant(p.d) + xj * (p.c - p.d);
        Parts {
            a_birth_b_death: xj * yj * fa,
            b_mutant_b_death: yj * yj * fb,
            b_birth_a_death: xj * yj * fb,
            a_mutant_a_death: xj * xj * fa,
            weight: xj * fa + yj * fb,
        }
    }

    /// `Omega_+(x)` and `Omega_-(x)`.
    pub fn rates(&self, x: f64) -> (f64, f64) {
        let (fa, fb) = fitness(&self.payoff, x);
        let y = 1.0 - x;
        let w = x * fa + y * fb;
        let up = (x * fa * y * (1.0 - self.mu) + y * y * fb * self.mu) / w;
        let down = (y * fb * x * (1.0 - self.mu) + x * x * fa * self.mu) / w;
        (up, down)
    }

    pub fn rate_up(&self, x: f64) -> f64 {
        self.rates(x).0
    }

    pub fn rate_down(&self, x: f64) -> f64 {
        self.rates(x).1
    }

    /// `Omega_+` and `Omega_-` with their first two `x`-derivatives.
    pub fn rate_jets(&self, x: f64) -> (Jet, Jet) {
        let q = self.parts(x);
        let keep = 1.0 - self.mu;
        let up = (q.a_birth_b_death * keep + q.b_mutant_b_death * self.mu) / q.weight;
        let down = (q.b_birth_a_death * keep + q.a_mutant_a_death * self.mu) / q.weight;
        (up, down)
    }

    /// `d Omega_+ / d mu` and `d Omega_- / d mu` as jets in `x`. The rates
    /// are affine in `mu`, so these do not depend on it.
    pub fn rate_mu_jets(&self, x: f64) -> (Jet, Jet) {
        let q = self.parts(x);
        let up = (q.b_mutant_b_death - q.a_birth_b_death) / q.weight;
        let down = (q.a_mutant_a_death - q.b_birth_a_death) / q.weight;
        (up, down)
    }

    /// Drift `f = Omega_+ - Omega_-` with `f'` and `f''`.
    pub fn drift_jet(&self, x: f64) -> Jet {
        let (u, d) = self.rate_jets(x);
        u - d
    }

    /// `df/dmu` with its `x`-derivatives.
    pub fn drift_mu_jet(&self, x: f64) -> Jet {
        let (u, d) = self.rate_mu_jets(x);
        u - d
    }

    /// Noise amplitude `sigma = Omega_+ + Omega_-` with `sigma'`, `sigma''`.
    pub fn sigma_jet(&self, x: f64) -> Jet {
        let (u, d) = self.rate_jets(x);
        u + d
    }
}
