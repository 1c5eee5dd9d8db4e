use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadConfig};
use crate::rates::Model;

/// Which effective potential: the diffusion one `Phi` or the WKB one `Psi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    Diffusion,
    Wkb,
}

/// `q(x) - 1 = Omega_-/Omega_+ - 1`, computed as `-f / Omega_+` so that it
/// keeps full relative accuracy near equilibria.
pub fn q_minus_one(m: &Model, x: f64) -> f64 {
    let (up, down) = m.rates(x);
    (down - up) / up
}

/// `Phi'(x) = -2 f / sigma`.
pub fn phi_prime(m: &Model, x: f64) -> f64 {
    let (up, down) = m.rates(x);
    -2.0 * (up - down) / (up + down)
}

/// `Psi'(x) = ln(Omega_- / Omega_+)`.
pub fn psi_prime(m: &Model, x: f64) -> f64 {
    q_minus_one(m, x).ln_1p()
}

/// `Phi''(x)` at any `x`.
pub fn phi_second(m: &Model, x: f64) -> f64 {
    let f = m.drift_jet(x);
    let s = m.sigma_jet(x);
    -2.0 * (f.d * s.v - f.v * s.d) / (s.v * s.v)
}

/// `Psi''(x) = Omega_-'/Omega_- - Omega_+'/Omega_+` at any interior `x`.
pub fn psi_second(m: &Model, x: f64) -> f64 {
    let (u, d) = m.rate_jets(x);
    d.d / d.v - u.d / u.v
}

/// `Phi'(x) - Psi'(x)` without cancellation for small `|q - 1|`.
pub fn derivative_gap(m: &Model, x: f64) -> f64 {
    let u = q_minus_one(m, x);
    if u.abs() < 1e-2 {
        // sum_{k>=3} (-1)^(k+1) u^k (2^(1-k) - 1/k)
        let mut sum = 0.0;
        let mut pow = u * u;
        for k in 3..=24 {
            pow *= u;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum += sign * pow * (0.5f64.powi(k - 1) - 1.0 / k as f64);
        }
        sum
    } else {
        2.0 * u / (2.0 + u) - u.ln_1p()
    }
}

/// A quasipotential pinned to zero at `base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quasipotential {
    pub model: Model,
    pub kind: PotentialKind,
    pub base: f64,
    pub quad: QuadConfig,
}

impl Quasipotential {
    pub fn new(model: Model, kind: PotentialKind, base: f64) -> Result<Self> {
        let q = Self {
            model,
            kind,
            base,
            quad: QuadConfig::default(),
        };
        q.check_point(base)?;
        Ok(q)
    }

    /// `Psi'` is log-singular at the ends of `[0, 1]`; `Phi` is regular
    /// there as long as `mu > 0`.
    fn check_point(&self, x: f64) -> Result<()> {
        let ok = match self.kind {
            PotentialKind::Wkb => x > 0.0 && x < 1.0,
            PotentialKind::Diffusion => (0.0..=1.0).contains(&x) && (self.model.mu > 0.0 || (x > 0.0 && x < 1.0)),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "{:?} potential cannot be evaluated at x = {x} with mu = {}",
                self.kind, self.model.mu
            )))
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self.kind {
            PotentialKind::Diffusion => phi_prime(&self.model, x),
            PotentialKind::Wkb => psi_prime(&self.model, x),
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match self.kind {
            PotentialKind::Diffusion => phi_second(&self.model, x),
            PotentialKind::Wkb => psi_second(&self.model, x),
        }
    }

    fn segment(&self, lo: f64, hi: f64) -> Result<f64> {
        Ok(integrate(|x| self.derivative(x), lo, hi, &self.quad)?.value)
    }

    /// Integral of the derivative from `base` to `x`.
    pub fn value(&self, x: f64) -> Result<f64> {
        self.check_point(x)?;
        self.segment(self.base, x)
    }

    /// Values at every point of `xs` (in any order), integrating only between
    /// neighbouring points.
    pub fn values(&self, xs: &[f64]) -> Result<Vec<f64>> {
        for &x in xs {
            self.check_point(x)?;
        }
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
        let mut out = vec![0.0; xs.len()];
        // walk outward from the base in both directions
        let split = order.partition_point(|&i| xs[i] < self.base);
        let (mut prev, mut acc) = (self.base, 0.0);
        for &i in &order[split..] {
            acc += self.segment(prev, xs[i])?;
            out[i] = acc;
            prev = xs[i];
        }
        let (mut prev, mut acc) = (self.base, 0.0);
        for &i in order[..split].iter().rev() {
            acc += self.segment(prev, xs[i])?;
            out[i] = acc;
            prev = xs[i];
        }
        Ok(out)
    }
}

/// `Phi(x)` relative to `base`.
pub fn phi(m: &Model, x: f64, base: f64) -> Result<f64> {
    Quasipotential::new(*m, PotentialKind::Diffusion, base)?.value(x)
}

/// `Psi(x)` relative to `base`; both points must be interior.
pub fn psi(m: &Model, x: f64, base: f64) -> Result<f64> {
    Quasipotential::new(*m, PotentialKind::Wkb, base)?.value(x)
}

/// Residual within which a point counts as an equilibrium for curvature.
pub const CURVATURE_FIXED_TOL: f64 = 1e-8;

/// Second derivative of the potential at an equilibrium from the analytic
/// reductions `Phi'' = -2 f' / sigma` and `Psi'' = -f' / Omega_+`.
pub fn curvature(m: &Model, x_f: f64, kind: PotentialKind) -> Result<f64> {
    let f = m.drift_jet(x_f);
    if !(f.v.abs() <= CURVATURE_FIXED_TOL) {
        return Err(Error::NotFixedPoint { x: x_f, residual: f.v.abs() });
    }
    let (up, down) = m.rates(x_f);
    Ok(match kind {
        PotentialKind::Diffusion => -2.0 * f.d / (up + down),
        PotentialKind::Wkb => -f.d / up,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub x: f64,
    pub phi: f64,
    pub psi: f64,
    pub diff: f64,
    pub q: f64,
    /// `Phi'(x) - Psi'(x)`.
    pub derivative_gap: f64,
}

impl ComparisonRow {
    /// Whether `|Phi' - Psi'| <= coeff |q - 1|^3` holds at this row, or the
    /// row lies outside `|q - 1| <= window`.
    pub fn series_bound_holds(&self, coeff: f64, window: f64) -> bool {
        let u = (self.q - 1.0).abs();
        u > window || self.derivative_gap.abs() <= coeff * u.powi(3)
    }
}

/// Both potentials on `grid`, pinned at a common `base`, together with the
/// local rate ratio `q` and the derivative gap.
pub fn compare_quasipotentials(m: &Model, base: f64, grid: &[f64]) -> Result<Vec<ComparisonRow>> {
    if grid.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::InvalidArgument("comparison grid must lie inside (0, 1)".into()));
    }
    let phis = Quasipotential::new(*m, PotentialKind::Diffusion, base)?.values(grid)?;
    let psis = Quasipotential::new(*m, PotentialKind::Wkb, base)?.values(grid)?;
    Ok(grid
        .iter()
        .zip(phis.iter().zip(&psis))
        .map(|(&x, (&phi, &psi))| ComparisonRow {
            x,
            phi,
            psi,
            diff: phi - psi,
            q: 1.0 + q_minus_one(m, x),
            derivative_gap: derivative_gap(m, x),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deterministic::fixed_points;
    use crate::game::PayoffMatrix;

    fn model(a: f64, b: f64, c: f64, d: f64, mu: f64) -> Model {
        Model::new(PayoffMatrix::new(a, b, c, d).unwrap(), mu).unwrap()
    }

    #[test]
    fn zero_at_base() {
        let m = model(4., 1., 3., 2., 0.05);
        assert_eq!(phi(&m, 0.3, 0.3).unwrap(), 0.0);
        assert_eq!(psi(&m, 0.3, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn stationary_at_fixed_points() {
        let m = model(4., 1., 3., 2., 0.05);
        for fp in fixed_points(&m) {
            assert!(phi_prime(&m, fp.x).abs() <= 1e-8);
            assert!(psi_prime(&m, fp.x).abs() <= 1e-8);
            assert!(derivative_gap(&m, fp.x).abs() <= 1e-20);
        }
    }

    #[test]
    fn psi_rejects_endpoints() {
        let m = model(4., 1., 3., 2., 0.05);
        assert!(psi(&m, 0.0, 0.5).is_err());
        assert!(psi(&m, 0.5, 1.0).is_err());
        assert!(phi(&m, 0.0, 0.5).is_ok());
    }

    #[test]
    fn antisymmetric_in_limits() {
        let m = model(4., 2., 1., 4., 0.05);
        let a = psi(&m, 0.7, 0.2).unwrap();
        let b = psi(&m, 0.2, 0.7).unwrap();
        assert!((a + b).abs() < 1e-13);
    }

    #[test]
    fn values_match_pointwise() {
        let m = model(4., 1., 3., 2., 0.05);
        let q = Quasipotential::new(m, PotentialKind::Wkb, 0.3).unwrap();
        let xs = [0.9, 0.1, 0.5, 0.3, 0.05, 0.62];
        let vs = q.values(&xs).unwrap();
        for (x, v) in xs.iter().zip(vs) {
            assert!((q.value(*x).unwrap() - v).abs() < 1e-11, "x = {x}");
        }
    }

    #[test]
    fn second_derivatives_match_differences() {
        let m = model(3., 1.5, 2., 5., 0.11);
        let h = 1e-5;
        for k in 1..50 {
            let x = k as f64 / 50.0;
            let fd_phi = (phi_prime(&m, x + h) - phi_prime(&m, x - h)) / (2.0 * h);
            let fd_psi = (psi_prime(&m, x + h) - psi_prime(&m, x - h)) / (2.0 * h);
            assert!((phi_second(&m, x) - fd_phi).abs() <= 1e-6 * fd_phi.abs().max(1.0));
            assert!((psi_second(&m, x) - fd_psi).abs() <= 1e-6 * fd_psi.abs().max(1.0));
        }
    }

    #[test]
    fn curvature_reductions_agree() {
        let m = model(4., 1., 3., 2., 0.05);
        for fp in fixed_points(&m) {
            let a = curvature(&m, fp.x, PotentialKind::Diffusion).unwrap();
            let b = curvature(&m, fp.x, PotentialKind::Wkb).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs());
            assert!((a - phi_second(&m, fp.x)).abs() <= 1e-10 * a.abs());
            assert!((b - psi_second(&m, fp.x)).abs() <= 1e-10 * b.abs());
        }
        let fps = fixed_points(&m);
        assert!(curvature(&m, fps[0].x, PotentialKind::Wkb).unwrap() > 0.0);
        assert!(curvature(&m, fps[1].x, PotentialKind::Wkb).unwrap() < 0.0);
        assert!(matches!(curvature(&m, 0.3, PotentialKind::Wkb), Err(Error::NotFixedPoint { .. })));
    }

    #[test]
    fn gap_series_matches_direct_form() {
        let m = model(4., 1., 3., 2., 0.05);
        for k in 1..200 {
            let x = k as f64 / 200.0;
            let u = q_minus_one(&m, x);
            if (1e-3..1e-2).contains(&u.abs()) {
                let direct = 2.0 * u / (2.0 + u) - u.ln_1p();
                assert!((derivative_gap(&m, x) - direct).abs() <= 1e-12 * u.abs().powi(3).max(1e-300) + 1e-17);
            }
        }
    }

    #[test]
    fn gap_leading_order() {
        // Phi' - Psi' = -u^3 / 12 + O(u^4)
        let m = model(4., 1., 3., 2., 0.05);
        let x = 0.15;
        let u = q_minus_one(&m, x);
        assert!(u.abs() < 0.2);
        let g = derivative_gap(&m, x);
        assert!((g + u.powi(3) / 12.0).abs() <= 0.2 * u.powi(4));
    }

    #[test]
    fn comparison_table() {
        let m = model(4., 1., 3., 2., 0.05);
        let fps = fixed_points(&m);
        let grid: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
        let rows = compare_quasipotentials(&m, fps[0].x, &grid).unwrap();
        assert_eq!(rows.len(), 99);
        for r in &rows {
            assert_eq!(r.diff, r.phi - r.psi);
        }
        assert!(compare_quasipotentials(&m, 0.5, &[0.0]).is_err());
    }
}
