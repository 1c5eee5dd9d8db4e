//! Finite-N moments around a stable equilibrium: the linear-noise
//! variance and its next-order corrections.

use serde::{Deserialize, Serialize};

use crate::deterministic::{fixed_points, Stability};
use crate::error::{Error, Result};
use crate::game::PayoffMatrix;
use crate::rates::{Jet, Model};

/// Residual allowed for a point passed in as an equilibrium.
pub const FIXED_POINT_TOL: f64 = 1e-8;

/// `sigma(x) = Omega_+(x) + Omega_-(x)`.
pub fn noise_amplitude(m: &Model, x: f64) -> f64 {
    let (u, d) = m.rates(x);
    u + d
}

pub fn noise_amplitude_dx(m: &Model, x: f64) -> f64 {
    m.sigma_jet(x).d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentOrder {
    Lna,
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub x_star: f64,
    pub mean: f64,
    pub variance: f64,
    pub third_central: f64,
    pub order: MomentOrder,
}

/// Drift jet at `x`, provided `x` is an attracting equilibrium.
pub fn stable_drift_jet(m: &Model, x: f64) -> Result<Jet> {
    let f = m.drift_jet(x);
    if !(f.v.abs() <= FIXED_POINT_TOL) {
        return Err(Error::NotFixedPoint { x, residual: f.v.abs() });
    }
    if !(f.d < 0.0) {
        return Err(Error::UnstableFixedPoint { x, slope: f.d });
    }
    Ok(f)
}

/// Gaussian fluctuations: mean `x*`, variance `sigma / (2 N |f'|)`.
pub fn lna_variance(m: &Model, n: usize, x_star: f64) -> Result<MomentReport> {
    let f = stable_drift_jet(m, x_star)?;
    let sigma = noise_amplitude(m, x_star);
    Ok(MomentReport {
        x_star,
        mean: x_star,
        variance: sigma / (2.0 * n as f64 * f.d.abs()),
        third_central: 0.0,
        order: MomentOrder::Lna,
    })
}

/// Mean, variance and third central moment through the first correction
/// beyond the linear-noise order.
pub fn corrected_moments(m: &Model, n: usize, x_star: f64) -> Result<MomentReport> {
    let f = stable_drift_jet(m, x_star)?;
    let s = m.sigma_jet(x_star);
    let n = n as f64;
    let (f1, f2) = (f.d, f.dd);
    let (sig, sig1) = (s.v, s.d);
    let mean = x_star + f2 * sig / (4.0 * n * f1 * f1);
    let variance = sig / (2.0 * n * f1.abs())
        + f2 * f2 * sig * sig / (8.0 * n * n * f1.powi(4))
        + sig1 * sig1 / (16.0 * n * n * f1 * f1);
    let third_central =
        f2.powi(3) * sig.powi(3) / (8.0 * n.powi(3) * f1.powi(6)) + 3.0 * sig1 * sig1 * f2 * sig / (32.0 * n.powi(3) * f1.powi(4));
    Ok(MomentReport {
        x_star,
        mean,
        variance,
        third_central,
        order: MomentOrder::Corrected,
    })
}

/// Factored closed form of `f''(1/2)` for a Case 1 matrix.
pub fn f_xx_half_case1(p: &PayoffMatrix, mu: f64) -> Result<f64> {
    let case = p.classify();
    if !case.is_case1() {
        return Err(Error::RegimeMismatch {
            expected: "Case 1 (a + b = c + d)",
            actual: case,
        });
    }
    let (a, b, c, d) = (p.a, p.b, p.c, p.d);
    Ok(32.0 * (c + d) * (a - c) * (a - d) * (2.0 * mu - 1.0) / (a + b + c + d).powi(3))
}

/// Sign of the skew about `x0 = 1/2` in the single-equilibrium Case 1
/// regime, read off the factored `f''(1/2)`.
pub fn skew_sign_case1(p: &PayoffMatrix, mu: f64) -> Result<i8> {
    let v = f_xx_half_case1(p, mu)?;
    Ok(if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    })
}

/// State windows over which conditional moments are taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinWindows {
    /// `(lo, hi)` inclusive state ranges, lower basin first.
    pub windows: Vec<(usize, usize)>,
    /// Stable equilibrium of each window.
    pub attractors: Vec<f64>,
    /// True when only one equilibrium exists and its moments are reported
    /// in the lower (`x_-`) slot.
    pub single_mode: bool,
}

/// Basins of the stable equilibria split at the unstable one: states with
/// `i / N < x0` and `i / N > x0`. With a single equilibrium the whole state
/// space is one window.
pub fn basin_windows(m: &Model, n: usize) -> Result<BasinWindows> {
    let fps = fixed_points(m);
    let stable: Vec<f64> = fps.iter().filter(|p| p.stability == Stability::Stable).map(|p| p.x).collect();
    let unstable: Vec<f64> = fps.iter().filter(|p| p.stability == Stability::Unstable).map(|p| p.x).collect();
    match (stable.as_slice(), unstable.as_slice()) {
        ([x], []) => Ok(BasinWindows {
            windows: vec![(0, n)],
            attractors: vec![*x],
            single_mode: true,
        }),
        ([lo, hi], [x0]) => {
            let edge = x0 * n as f64;
            let below = (edge.ceil() as usize).saturating_sub(1);
            let above = edge.floor() as usize + 1;
            Ok(BasinWindows {
                windows: vec![(0, below), (above.min(n), n)],
                attractors: vec![*lo, *hi],
                single_mode: false,
            })
        }
        _ => Err(Error::NotBistable { found: fps.len() }),
    }
}
