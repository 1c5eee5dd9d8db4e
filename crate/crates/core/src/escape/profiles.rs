use serde::{Deserialize, Serialize};

use super::quasipotential::{PotentialKind, Quasipotential};
use super::{mfpt_wkb, Bistable};
use crate::chain::Distribution;
use crate::deterministic::{fixed_points, Stability};
use crate::error::{Error, Result};
use crate::rates::Model;

/// Stationary density of the diffusion approximation,
/// `P_s(x) ∝ exp(-N Phi(x)) / sigma(x)`, as masses on the grid
/// `x_k = k / grid` normalized to one.
pub fn stationary_diffusion(m: &Model, n: usize, grid: usize) -> Result<Distribution> {
    if !(m.mu > 0.0) {
        return Err(Error::InvalidParams("stationary density needs mu > 0".into()));
    }
    if grid < 2 {
        return Err(Error::InvalidArgument("grid needs at least two intervals".into()));
    }
    let base = fixed_points(m)
        .iter()
        .find(|p| p.stability == Stability::Stable)
        .map_or(0.5, |p| p.x);
    let xs: Vec<f64> = (0..=grid).map(|k| k as f64 / grid as f64).collect();
    let phis = Quasipotential::new(*m, PotentialKind::Diffusion, base)?.values(&xs)?;
    let log_w: Vec<f64> = xs
        .iter()
        .zip(&phis)
        .map(|(&x, &phi)| {
            let (up, down) = m.rates(x);
            -(n as f64) * phi - (up + down).ln()
        })
        .collect();
    Distribution::from_log_weights(&log_w)
}

/// Quasistationary WKB pieces for escape out of the `x_-` basin.
///
/// The activation profile lives on the lattice points `i / N` in
/// `[1/N, x_0)` and has unit mass there. The relaxation profile
/// `J / (Omega_+ - Omega_-)` lives on the lattice points in `(x_0, x_+)`,
/// where the drift is positive, with the flux `J = 1 / tau_-` per round
/// that the activation mass leaks over the saddle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WkbProfiles {
    pub equilibria: Bistable,
    pub activation_x: Vec<f64>,
    pub activation: Vec<f64>,
    pub relaxation_x: Vec<f64>,
    pub relaxation: Vec<f64>,
    pub boundary_layer_width: f64,
}

/// Width of the inner layer around the saddle,
/// `sqrt(2 Omega_+(x0) / (N (Omega_+' - Omega_-')(x0)))`.
pub fn boundary_layer_width(m: &Model, n: usize, x_zero: f64) -> f64 {
    let slope = m.drift_jet(x_zero).d;
    (2.0 * m.rate_up(x_zero) / (n as f64 * slope)).sqrt()
}

pub fn wkb_profiles(m: &Model, n: usize) -> Result<WkbProfiles> {
    let report = mfpt_wkb(m, n)?;
    let eq = report.equilibria;
    let nf = n as f64;
    let activation_x: Vec<f64> = (1..n).map(|i| i as f64 / nf).take_while(|&x| x < eq.x_zero).collect();
    if activation_x.is_empty() {
        return Err(Error::InvalidParams(format!("N = {n} leaves no lattice points below x_0")));
    }
    let psis = Quasipotential::new(*m, PotentialKind::Wkb, eq.x_minus)?.values(&activation_x)?;
    let log_w: Vec<f64> = activation_x
        .iter()
        .zip(&psis)
        .map(|(&x, &psi)| {
            let (up, down) = m.rates(x);
            -nf * psi - 0.5 * (up.ln() + down.ln())
        })
        .collect();
    let activation = Distribution::from_log_weights(&log_w)?.probs().to_vec();

    let flux = 1.0 / report.tau_minus;
    let relaxation_x: Vec<f64> = (1..n)
        .map(|i| i as f64 / nf)
        .filter(|&x| x > eq.x_zero && x < eq.x_plus)
        .collect();
    let relaxation = relaxation_x
        .iter()
        .map(|&x| {
            let (up, down) = m.rates(x);
            flux / (up - down)
        })
        .collect();
    Ok(WkbProfiles {
        equilibria: eq,
        activation_x,
        activation,
        relaxation_x,
        relaxation,
        boundary_layer_width: boundary_layer_width(m, n, eq.x_zero),
    })
}
