//! Metastable switching between the two stable mixtures.
//!
//! Switching times are returned in rounds. The asymptotic formulas are
//! naturally written in the drift's time unit (one generation, `N` rounds),
//! so their prefactors carry an explicit factor `N`.

mod profiles;
mod quasipotential;
mod sde;

pub use profiles::{stationary_diffusion, wkb_profiles, WkbProfiles};
pub use quasipotential::{
    compare_quasipotentials, curvature, derivative_gap, phi, phi_prime, phi_second, psi, psi_prime, psi_second,
    q_minus_one, ComparisonRow, PotentialKind, Quasipotential,
};
pub use sde::{simulate_sde, SdeConfig, SdePath};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::chain::{mfpt_exact, ChainParams};
use crate::deterministic::{fixed_points, Stability};
use crate::error::{Error, Result};
use crate::rates::Model;
use crate::sim::{estimate_fpt, FptEstimate};

/// The three equilibria of a bistable drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bistable {
    pub x_minus: f64,
    pub x_zero: f64,
    pub x_plus: f64,
}

impl Bistable {
    /// Requires exactly the pattern stable, unstable, stable.
    pub fn of(m: &Model) -> Result<Self> {
        let fps = fixed_points(m);
        match fps.as_slice() {
            [a, b, c]
                if a.stability == Stability::Stable
                    && b.stability == Stability::Unstable
                    && c.stability == Stability::Stable =>
            {
                Ok(Self {
                    x_minus: a.x,
                    x_zero: b.x,
                    x_plus: c.x,
                })
            }
            _ => Err(Error::NotBistable { found: fps.len() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeMethod {
    Exact,
    Diffusion,
    Wkb,
    MonteCarlo,
}

impl EscapeMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Diffusion => "diffusion",
            Self::Wkb => "wkb",
            Self::MonteCarlo => "monte_carlo",
        }
    }
}

impl std::str::FromStr for EscapeMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "exact" => Ok(Self::Exact),
            "diffusion" => Ok(Self::Diffusion),
            "wkb" => Ok(Self::Wkb),
            "monte_carlo" | "mc" => Ok(Self::MonteCarlo),
            other => Err(Error::Parse(format!("unknown escape method '{other}'"))),
        }
    }
}

/// Mean switching times out of each basin.
///
/// `tau_minus` is the time to leave `x_-` for `x_+`, `tau_plus` the reverse.
/// For the asymptotic methods `tau_minus = prefactor * exp(exponent)` and
/// likewise for the `_plus` pair; the exact and Monte Carlo methods leave
/// those fields empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    pub method: EscapeMethod,
    pub tau_minus: f64,
    pub tau_plus: f64,
    pub exponent: Option<f64>,
    pub prefactor: Option<f64>,
    pub exponent_plus: Option<f64>,
    pub prefactor_plus: Option<f64>,
    pub equilibria: Bistable,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_minus: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_plus: Option<(f64, f64)>,
}

fn asymptotic(m: &Model, n: usize, kind: PotentialKind) -> Result<EscapeReport> {
    if n == 0 {
        return Err(Error::InvalidParams("N must be >= 1".into()));
    }
    let eq = Bistable::of(m)?;
    let q = Quasipotential::new(*m, kind, eq.x_minus)?;
    let barrier_minus = q.value(eq.x_zero)?;
    let barrier_plus = barrier_minus - q.value(eq.x_plus)?;
    let c_minus = curvature(m, eq.x_minus, kind)?;
    let c_zero = curvature(m, eq.x_zero, kind)?.abs();
    let c_plus = curvature(m, eq.x_plus, kind)?;
    let nf = n as f64;
    let prefactor = nf * 2.0 * PI / (m.rate_up(eq.x_minus) * (c_minus * c_zero).sqrt());
    let prefactor_plus = nf * 2.0 * PI / (m.rate_down(eq.x_plus) * (c_plus * c_zero).sqrt());
    let exponent = nf * barrier_minus;
    let exponent_plus = nf * barrier_plus;
    Ok(EscapeReport {
        method: match kind {
            PotentialKind::Diffusion => EscapeMethod::Diffusion,
            PotentialKind::Wkb => EscapeMethod::Wkb,
        },
        tau_minus: prefactor * exponent.exp(),
        tau_plus: prefactor_plus * exponent_plus.exp(),
        exponent: Some(exponent),
        prefactor: Some(prefactor),
        exponent_plus: Some(exponent_plus),
        prefactor_plus: Some(prefactor_plus),
        equilibria: eq,
        ci_minus: None,
        ci_plus: None,
    })
}

/// Switching times of the diffusion approximation, built on `Phi`.
pub fn mfpt_diffusion(m: &Model, n: usize) -> Result<EscapeReport> {
    asymptotic(m, n, PotentialKind::Diffusion)
}

/// Switching times from the WKB matched-asymptotic solution, built on `Psi`.
pub fn mfpt_wkb(m: &Model, n: usize) -> Result<EscapeReport> {
    asymptotic(m, n, PotentialKind::Wkb)
}

/// States nearest `x_-` and `x_+` on the lattice `i / N`.
pub fn basin_states(params: &ChainParams, eq: &Bistable) -> (usize, usize) {
    (params.state_of(eq.x_minus), params.state_of(eq.x_plus))
}

/// Exact mean rounds between the lattice states nearest `x_-` and `x_+`.
pub fn escape_exact(params: &ChainParams) -> Result<EscapeReport> {
    let eq = Bistable::of(&params.model())?;
    let (lo, hi) = basin_states(params, &eq);
    if lo == hi {
        return Err(Error::InvalidParams(format!("N = {} too small to separate the basins", params.n)));
    }
    Ok(EscapeReport {
        method: EscapeMethod::Exact,
        tau_minus: mfpt_exact(params, lo, hi)?,
        tau_plus: mfpt_exact(params, hi, lo)?,
        exponent: None,
        prefactor: None,
        exponent_plus: None,
        prefactor_plus: None,
        equilibria: eq,
        ci_minus: None,
        ci_plus: None,
    })
}

/// Monte Carlo estimate of the same passage times as [`escape_exact`].
pub fn escape_monte_carlo(params: &ChainParams, realizations: usize, seed: u64, cap: u64) -> Result<EscapeReport> {
    let eq = Bistable::of(&params.model())?;
    let (lo, hi) = basin_states(params, &eq);
    if lo == hi {
        return Err(Error::InvalidParams(format!("N = {} too small to separate the basins", params.n)));
    }
    let minus: FptEstimate = estimate_fpt(params, lo, hi, realizations, seed, cap)?;
    // a distinct stream family for the reverse direction
    let plus = estimate_fpt(params, hi, lo, realizations, seed ^ 0x9e37_79b9_7f4a_7c15, cap)?;
    Ok(EscapeReport {
        method: EscapeMethod::MonteCarlo,
        tau_minus: minus.mean,
        tau_plus: plus.mean,
        exponent: None,
        prefactor: None,
        exponent_plus: None,
        prefactor_plus: None,
        equilibria: eq,
        ci_minus: Some((minus.ci_low, minus.ci_high)),
        ci_plus: Some((plus.ci_low, plus.ci_high)),
    })
}
