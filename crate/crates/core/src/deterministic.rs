//! Infinite-population drift `dx/dt = f(x; mu) = Omega_+(x) - Omega_-(x)`,
//! its equilibria and their bifurcations in `mu`.
//!
//! `t` here is measured in generations (`N` rounds); equilibria and their
//! stability do not depend on the time unit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{PayoffMatrix, RegimeCase};
use crate::rates::Model;

/// Residual bound every reported fixed point satisfies.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;
/// `|f'|` at or below this is reported as marginal.
pub const MARGINAL_SLOPE: f64 = 1e-8;
/// Default number of scan intervals on `[0, 1]`.
pub const DEFAULT_SCAN: usize = 2048;

pub fn drift(m: &Model, x: f64) -> f64 {
    let (up, down) = m.rates(x);
    up - down
}

pub fn drift_dx(m: &Model, x: f64) -> f64 {
    m.drift_jet(x).d
}

pub fn drift_dxx(m: &Model, x: f64) -> f64 {
    m.drift_jet(x).dd
}

pub fn drift_dmu(m: &Model, x: f64) -> f64 {
    m.drift_mu_jet(x).v
}

/// Mixed derivative `d^2 f / dx dmu`.
pub fn drift_dxmu(m: &Model, x: f64) -> f64 {
    m.drift_mu_jet(x).d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn from_slope(slope: f64) -> Self {
        if slope.abs() <= MARGINAL_SLOPE {
            Self::Marginal
        } else if slope < 0.0 {
            Self::Stable
        } else {
            Self::Unstable
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Stable => "stable",
            Self::Unstable => "unstable",
            Self::Marginal => "marginal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub x: f64,
    pub stability: Stability,
    pub residual: f64,
}

impl FixedPoint {
    fn at(m: &Model, x: f64) -> Self {
        Self {
            x,
            stability: Stability::from_slope(drift_dx(m, x)),
            residual: drift(m, x).abs(),
        }
    }
}

/// Roots of `f(.; mu)` on `[lo, hi]`: sign-change scan over `intervals`
/// panels, bisection to `1e-12`, then a bracketed Newton polish.
pub fn roots_in(m: &Model, lo: f64, hi: f64, intervals: usize) -> Vec<f64> {
    let intervals = intervals.max(1);
    let width = (hi - lo) / intervals as f64;
    let node = |k: usize| if k == intervals { hi } else { lo + width * k as f64 };
    let mut roots: Vec<f64> = Vec::new();
    let push = |r: f64, roots: &mut Vec<f64>| {
        if roots.last().is_none_or(|&last| (r - last).abs() > 1e-9) {
            roots.push(r);
        }
    };
    let mut x_prev = node(0);
    let mut f_prev = drift(m, x_prev);
    if f_prev == 0.0 {
        push(x_prev, &mut roots);
    }
    for k in 1..=intervals {
        let x = node(k);
        let fx = drift(m, x);
        if fx == 0.0 {
            push(x, &mut roots);
        } else if f_prev != 0.0 && (f_prev < 0.0) != (fx < 0.0) {
            push(refine_root(m, x_prev, x, f_prev), &mut roots);
        }
        x_prev = x;
        f_prev = fx;
    }
    roots
}

fn refine_root(m: &Model, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let neg_at_a = fa < 0.0;
    while b - a > 1e-12 {
        let mid = 0.5 * (a + b);
        let fm = drift(m, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == neg_at_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..4 {
        let j = m.drift_jet(x);
        if j.v == 0.0 || j.d == 0.0 {
            break;
        }
        let next = x - j.v / j.d;
        if !(a..=b).contains(&next) || drift(m, next).abs() >= j.v.abs() {
            break;
        }
        x = next;
    }
    x
}

/// All equilibria of the drift in `[0, 1]` with the default scan resolution.
pub fn fixed_points(m: &Model) -> Vec<FixedPoint> {
    fixed_points_with(m, DEFAULT_SCAN)
}

pub fn fixed_points_with(m: &Model, scan: usize) -> Vec<FixedPoint> {
    let pts: Vec<FixedPoint> = roots_in(m, 0.0, 1.0, scan)
        .into_iter()
        .map(|x| FixedPoint::at(m, x))
        .collect();
    // f(0) = mu >= 0 and f(1) = -mu <= 0 force a root
    assert!(!pts.is_empty(), "drift has no root on [0, 1] for {m:?}");
    pts
}

/// `mu1` (transcritical crossing with `x0 = 1/2`) and `mu2` (fold) for Case 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalMus {
    pub mu1: f64,
    pub mu2: f64,
}

fn check_case1_bistable(p: &PayoffMatrix) -> Result<()> {
    let case = p.classify();
    if !case.is_case1() {
        return Err(Error::RegimeMismatch {
            expected: "Case 1 (a + b = c + d)",
            actual: case,
        });
    }
    if p.d <= p.b {
        return Err(Error::InvalidPayoff(format!(
            "Case 1 formulas need d > b (both strategies ESS), got {p}"
        )));
    }
    Ok(())
}

pub fn critical_mus_case1(p: &PayoffMatrix) -> Result<CriticalMus> {
    check_case1_bistable(p)?;
    let mu1 = (p.d - p.b) / (2.0 * (p.a + p.d));
    if p.classify() == RegimeCase::Case1_3 && (p.a - p.d).abs() <= crate::game::CASE1_TOL {
        return Ok(CriticalMus { mu1, mu2: mu1 });
    }
    let mu2 = (p.d - p.b) * (p.a + p.d - 2.0 * (p.a * p.d).sqrt()) / (p.d - p.a).powi(2);
    Ok(CriticalMus { mu1, mu2 })
}

/// Closed-form Case 1 equilibria. `x_minus`/`x_plus` are `None` once the
/// radicand turns negative (beyond the fold).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Case1Branches {
    pub x_minus: Option<f64>,
    pub x_zero: f64,
    pub x_plus: Option<f64>,
    pub radicand: f64,
}

impl Case1Branches {
    pub fn complex(&self) -> bool {
        self.x_minus.is_none()
    }
}

pub fn case1_branches(m: &Model) -> Result<Case1Branches> {
    let p = &m.payoff;
    check_case1_bistable(p)?;
    let mu = m.mu;
    let (a, b, c, d) = (p.a, p.b, p.c, p.d);
    let radicand = 4.0 * (b - c).powi(2) * mu * mu + 8.0 * (b - d) * (a + d) * mu + 4.0 * (b - d).powi(2);
    let x_zero = (d - b) / (a - b - c + d);
    let centre = 0.5 + (d - a) / (2.0 * (d - b)) * mu;
    let (x_minus, x_plus) = if radicand >= 0.0 {
        let half_width = radicand.sqrt() / (4.0 * (d - b));
        (Some(centre - half_width), Some(centre + half_width))
    } else {
        (None, None)
    };
    Ok(Case1Branches {
        x_minus,
        x_zero,
        x_plus,
        radicand,
    })
}

/// The unique root in `(0, 1)` of `df/dmu`, where equilibria stop moving.
pub fn x_star_case2(p: &PayoffMatrix) -> Result<f64> {
    let case = p.classify();
    if case != RegimeCase::Case2 {
        return Err(Error::RegimeMismatch {
            expected: "Case 2 (a + b > c + d)",
            actual: case,
        });
    }
    let den = 2.0 * (p.a - p.b + p.c - p.d);
    if den.abs() <= 1e-14 {
        return Err(Error::InvalidPayoff(format!("a - b + c - d vanishes for {p}")));
    }
    Ok((-(p.b - p.c + 2.0 * p.d) + ((p.b - p.c).powi(2) + 4.0 * p.a * p.d).sqrt()) / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub mu: f64,
    pub x: f64,
    pub stability: Stability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchEnd {
    /// Reached the upper end of the parameter range.
    RangeEnd,
    /// Annihilated in a fold.
    Fold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    pub points: Vec<BranchPoint>,
    pub end: BranchEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialPoint {
    pub mu: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    pub branches: Vec<Branch>,
    pub folds: Vec<SpecialPoint>,
    pub transcritical_points: Vec<SpecialPoint>,
}

/// Newton on `{f = 0, f' = 0}` in `(x, mu)` starting from `(x, mu)`.
pub fn refine_fold(payoff: &PayoffMatrix, x: f64, mu: f64) -> Option<SpecialPoint> {
    let (mut x, mut mu) = (x, mu);
    for _ in 0..50 {
        let m = Model { payoff: *payoff, mu };
        let j = m.drift_jet(x);
        let jm = m.drift_mu_jet(x);
        // [f_x  f_mu ] [dx ]   [f ]
        // [f_xx f_xmu] [dmu] = [f_x]
        let det = j.d * jm.d - jm.v * j.dd;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = (j.v * jm.d - jm.v * j.d) / det;
        let dmu = (j.d * j.d - j.dd * j.v) / det;
        x -= dx;
        mu -= dmu;
        if !(0.0..=1.0).contains(&x) || !(0.0..1.0).contains(&mu) {
            return None;
        }
        if dx.abs() < 1e-15 && dmu.abs() < 1e-15 {
            break;
        }
    }
    let m = Model { payoff: *payoff, mu };
    let j = m.drift_jet(x);
    (j.v.abs() <= ROOT_RESIDUAL_TOL && j.d.abs() <= MARGINAL_SLOPE).then_some(SpecialPoint { mu, x })
}

/// Locates where `f'` changes sign along a branch between two accepted
/// points by bisection in `mu`, re-solving for the branch root each time.
fn refine_crossing(payoff: &PayoffMatrix, from: BranchPoint, to: BranchPoint) -> SpecialPoint {
    let (mut lo, mut hi) = (from, to);
    let sign_lo = drift_dx(&Model { payoff: *payoff, mu: lo.mu }, lo.x) < 0.0;
    for _ in 0..80 {
        if hi.mu - lo.mu <= 1e-14 {
            break;
        }
        let mu = 0.5 * (lo.mu + hi.mu);
        let m = Model { payoff: *payoff, mu };
        let guess = 0.5 * (lo.x + hi.x);
        let span = (hi.x - lo.x).abs().max(1e-9);
        let Some(x) = nearest_root(&m, guess, 2.0 * span) else {
            break;
        };
        let pt = BranchPoint { mu, x, stability: Stability::Marginal };
        if (drift_dx(&m, x) < 0.0) == sign_lo {
            lo = pt;
        } else {
            hi = pt;
        }
    }
    SpecialPoint {
        mu: 0.5 * (lo.mu + hi.mu),
        x: 0.5 * (lo.x + hi.x),
    }
}

/// Branch slope `dx/dmu = -f_mu / f_x`, zero where the slope is undefined.
fn tangent(payoff: &PayoffMatrix, mu: f64, x: f64) -> f64 {
    let m = Model { payoff: *payoff, mu };
    let fx = drift_dx(&m, x);
    if fx.abs() > MARGINAL_SLOPE {
        -drift_dmu(&m, x) / fx
    } else {
        0.0
    }
}

fn nearest_root(m: &Model, guess: f64, window: f64) -> Option<f64> {
    let lo = (guess - window).max(0.0);
    let hi = (guess + window).min(1.0);
    let scanned = roots_in(m, lo, hi, 64)
        .into_iter()
        .min_by(|a, b| (a - guess).abs().total_cmp(&(b - guess).abs()));
    // two nearly coincident roots give no sign change; Newton still finds them
    scanned.or_else(|| newton_root(m, guess, lo, hi))
}

fn newton_root(m: &Model, mut x: f64, lo: f64, hi: f64) -> Option<f64> {
    for _ in 0..200 {
        let j = m.drift_jet(x);
        if j.v == 0.0 {
            return Some(x);
        }
        if j.d == 0.0 || !j.d.is_finite() {
            return None;
        }
        let next = x - j.v / j.d;
        if !(lo..=hi).contains(&next) {
            return None;
        }
        if (next - x).abs() <= 1e-15 {
            x = next;
            break;
        }
        x = next;
    }
    (drift(m, x).abs() <= 1e-13).then_some(x)
}

/// Natural-parameter continuation of every equilibrium present at `mu_lo`
/// up to `mu_hi`.
///
/// Each step extrapolates along the tangent, corrects by a local root scan
/// around the prediction and halves the step when no root lies within a
/// quarter of the predicted move or the tangent there differs by more than
/// half. A branch whose step shrinks below `1e-9` has met a fold, which is then refined with
/// Newton on `{f = 0, f' = 0}`. A sign change of `f'` between accepted points
/// is a stability exchange and is recorded as a transcritical point.
pub fn continue_diagram(payoff: &PayoffMatrix, mu_lo: f64, mu_hi: f64, step: f64) -> Result<BifurcationDiagram> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be > 0, got {step}")));
    }
    if !(0.0 < mu_lo && mu_lo < mu_hi && mu_hi < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < mu_lo < mu_hi < 1, got [{mu_lo}, {mu_hi}]"
        )));
    }
    let start = Model::new(*payoff, mu_lo)?;
    let mut branches = Vec::new();
    let mut folds: Vec<SpecialPoint> = Vec::new();
    let mut transcritical: Vec<SpecialPoint> = Vec::new();
    let min_step = 1e-9;

    for (id, fp) in fixed_points(&start).into_iter().enumerate() {
        let mut points = vec![BranchPoint { mu: mu_lo, x: fp.x, stability: fp.stability }];
        let mut h = step;
        let mut end = BranchEnd::RangeEnd;
        while points.last().unwrap().mu < mu_hi {
            let last = *points.last().unwrap();
            let mu = (last.mu + h).min(mu_hi);
            let slope = tangent(payoff, last.mu, last.x);
            let predicted = last.x + slope * (mu - last.mu);
            let m = Model { payoff: *payoff, mu };
            let move_len = (predicted - last.x).abs();
            let corrected = nearest_root(&m, predicted, (4.0 * move_len).max(1e-4))
                .filter(|x| (x - predicted).abs() <= (0.25 * move_len).max(1e-9))
                // a jump onto a crossing branch shows up as a kink in the tangent
                .filter(|&x| {
                    let t = tangent(payoff, mu, x);
                    (t - slope).abs() <= 0.5 * t.abs().max(slope.abs()) + 1e-6
                });
            match corrected {
                Some(x) => {
                    if !(-1e-12..=1.0 + 1e-12).contains(&x) {
                        return Err(Error::BranchEscaped { mu, x });
                    }
                    let pt = BranchPoint { mu, x, stability: Stability::from_slope(drift_dx(&m, x)) };
                    let s_old = drift_dx(&Model { payoff: *payoff, mu: last.mu }, last.x);
                    let s_new = drift_dx(&m, x);
                    if s_old != 0.0 && s_new != 0.0 && (s_old < 0.0) != (s_new < 0.0) {
                        let sp = refine_crossing(payoff, last, pt);
                        let mm = Model { payoff: *payoff, mu: sp.mu };
                        if drift_dmu(&mm, sp.x).abs() <= 1e-6 {
                            push_unique(&mut transcritical, sp);
                        } else {
                            // jumped onto the partner branch across a fold
                            if let Some(f) = refine_fold(payoff, last.x, last.mu) {
                                push_unique(&mut folds, f);
                            }
                            end = BranchEnd::Fold;
                            break;
                        }
                    }
                    points.push(pt);
                    h = (2.0 * h).min(step);
                }
                None => {
                    h *= 0.5;
                    if h < min_step {
                        let fold = refine_fold(payoff, last.x, last.mu).unwrap_or(SpecialPoint {
                            mu: last.mu,
                            x: last.x,
                        });
                        push_unique(&mut folds, fold);
                        end = BranchEnd::Fold;
                        break;
                    }
                }
            }
        }
        branches.push(Branch { id, points, end });
    }
    folds.sort_by(|a, b| a.mu.total_cmp(&b.mu));
    transcritical.sort_by(|a, b| a.mu.total_cmp(&b.mu));
    Ok(BifurcationDiagram {
        branches,
        folds,
        transcritical_points: transcritical,
    })
}

fn push_unique(list: &mut Vec<SpecialPoint>, p: SpecialPoint) {
    if !list.iter().any(|q| (q.mu - p.mu).abs() < 1e-7 && (q.x - p.x).abs() < 1e-5) {
        list.push(p);
    }
}

/// Number of equilibria at `mu` with the default scan.
pub fn fixed_point_count(payoff: &PayoffMatrix, mu: f64) -> Result<usize> {
    Ok(fixed_points(&Model::new(*payoff, mu)?).len())
}

/// Bisects `[lo, hi]` until the interval where the equilibrium count changes
/// from its value at `lo` is at most `tol` wide.
pub fn bracket_count_change(payoff: &PayoffMatrix, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64, usize, usize)> {
    let count_lo = fixed_point_count(payoff, lo)?;
    let count_hi = fixed_point_count(payoff, hi)?;
    if count_lo == count_hi {
        return Err(Error::InvalidArgument(format!(
            "equilibrium count is {count_lo} at both ends of [{lo}, {hi}]"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if fixed_point_count(payoff, mid)? == count_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi, count_lo, count_hi))
}
