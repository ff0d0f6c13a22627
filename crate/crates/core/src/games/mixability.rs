//! Numeric mixability certification.
//!
//! The one-step inequality behind every bound in this crate is
//!
//! ```text
//! E(p,g) = p·e^{κ(λ(1,p) − λ(1,g))} + (1−p)·e^{κ(λ(0,p) − λ(0,g))} ≤ 1
//! ```
//!
//! for all `p, g ∈ [0,1]`. For a standard-form κ-mixable game it holds with
//! equality exactly at `g = p`. [`check_one_step_inequality`] scans it on a
//! grid; [`estimate_eta_star`] finds the largest η at which a decision set
//! remains mixable.

use alloc::vec::Vec;

use super::standardize::{convex_hull, ne_frontier, standardize};
use super::{DecisionSet, Game, GameError, Outcome};
use crate::math;

/// Slack allowed above 1 before the grid check reports a violation. Absorbs
/// rounding in `e^{κΔ}`; genuine violations observed above η* exceed 1e−3
/// on a 512 grid for the quadratic game.
pub const ONE_STEP_TOLERANCE: f64 = 1e-9;

/// Result of a grid scan of the one-step inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneStepReport {
    pub holds: bool,
    /// `max E(p,g) − 1` over the grid.
    pub worst_slack: f64,
    /// The `(p, g)` pair attaining the worst slack.
    pub worst_point: (f64, f64),
}

/// One term `factor · e^{κ(lp − lg)}` of `E(p,g)` in extended-real
/// arithmetic. The factor is applied first: a zero factor kills the term
/// even against an infinite exponent.
#[inline]
fn ext_term(factor: f64, lp: f64, lg: f64, kappa: f64) -> f64 {
    if factor == 0.0 {
        return 0.0;
    }
    if lp == f64::INFINITY {
        if lg == f64::INFINITY {
            return factor; // limit of identical losses
        }
        return f64::INFINITY;
    }
    if lg == f64::INFINITY {
        return 0.0; // e^{−∞}
    }
    factor * math::exp(kappa * (lp - lg))
}

/// Scans `E(p,g)` on a `grid_size × grid_size` grid over `[0,1]²`.
pub fn check_one_step_inequality(
    game: &Game,
    kappa: f64,
    grid_size: usize,
) -> Result<OneStepReport, GameError> {
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(GameError::InvalidKappa(kappa));
    }
    if grid_size < 2 {
        return Err(GameError::InvalidGrid(grid_size));
    }
    let step = 1.0 / (grid_size - 1) as f64;
    let grid: Vec<f64> = (0..grid_size).map(|i| i as f64 * step).collect();
    let l0: Vec<f64> = grid.iter().map(|&p| game.loss(Outcome::Zero, p)).collect();
    let l1: Vec<f64> = grid.iter().map(|&p| game.loss(Outcome::One, p)).collect();

    let mut worst_slack = f64::NEG_INFINITY;
    let mut worst_point = (0.0, 0.0);
    for (i, &p) in grid.iter().enumerate() {
        for (j, &g) in grid.iter().enumerate() {
            let e = ext_term(p, l1[i], l1[j], kappa) + ext_term(1.0 - p, l0[i], l0[j], kappa);
            let slack = e - 1.0;
            if slack > worst_slack {
                worst_slack = slack;
                worst_point = (p, g);
            }
        }
    }
    Ok(OneStepReport {
        holds: worst_slack <= ONE_STEP_TOLERANCE,
        worst_slack,
        worst_point,
    })
}

const ETA_SEARCH_LO: f64 = 1e-3;
const ETA_SEARCH_HI: f64 = 32.0;
const ETA_STANDARDIZE_GRID: usize = 1025;
const ETA_CHECK_GRID: usize = 512;

/// Estimates `η* = sup{ η : the decision set is η-mixable }` by bisection,
/// to within `tol`. Returns the upper search bound when every probed η is
/// mixable (e.g. a single decision).
///
/// η-mixability of the generators is equivalent to the exp-image of the
/// decision set being convex already, i.e. to the η-mixture closure not
/// improving on any pure decision: the mixability predicate compares, per
/// grid point `p`, the minimum of `p·y + (1−p)·x` over the raw decisions
/// against the minimum over the closure built by [`standardize`]. The
/// standardized game is also required to pass [`check_one_step_inequality`]
/// at κ = η.
pub fn estimate_eta_star(decisions: &DecisionSet, tol: f64) -> Result<f64, GameError> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(GameError::InvalidTolerance(tol));
    }
    let raw_chain = sw_hull_chain(decisions);
    let scale = decisions
        .points()
        .iter()
        .flat_map(|&(x, y)| [x, y])
        .fold(1.0f64, f64::max);
    let improvement_tol = 1e-6 * scale;

    let mixable = |eta: f64| -> bool {
        let game = match standardize(decisions, eta, ETA_STANDARDIZE_GRID) {
            Ok(g) => g,
            Err(_) => return false,
        };
        if closure_improvement(&raw_chain, &game) > improvement_tol {
            return false;
        }
        match check_one_step_inequality(&game, eta, ETA_CHECK_GRID) {
            Ok(report) => report.holds,
            Err(_) => false,
        }
    };

    if mixable(ETA_SEARCH_HI) {
        return Ok(ETA_SEARCH_HI);
    }
    if !mixable(ETA_SEARCH_LO) {
        return Err(GameError::NotMixable);
    }
    let mut lo = ETA_SEARCH_LO;
    let mut hi = ETA_SEARCH_HI;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mixable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Max over the game's grid of how much the mixture closure improves the
/// support objective `p·y + (1−p)·x` over the best raw decision.
fn closure_improvement(raw_chain: &[(f64, f64)], game: &Game) -> f64 {
    let rows = game
        .tabulated_grid()
        .expect("standardize always returns a tabulated game");
    let mut worst = 0.0f64;
    let mut idx = 0usize; // raw minimizer slides along the SW chain as p grows
    for &(p, a, b) in &rows {
        let objective = |&(x, y): &(f64, f64)| p * y + (1.0 - p) * x;
        while idx + 1 < raw_chain.len() && objective(&raw_chain[idx + 1]) <= objective(&raw_chain[idx])
        {
            idx += 1;
        }
        let raw_min = objective(&raw_chain[idx]);
        let closure_min = p * b + (1.0 - p) * a;
        worst = worst.max(raw_min - closure_min);
    }
    worst
}

/// Southwest convex chain of the decision points in loss space, ordered
/// from the min-x vertex to the min-y vertex. A linear objective with
/// nonnegative weights attains its minimum over the set on this chain, and
/// the minimizing vertex slides monotonically along it as `p` grows.
fn sw_hull_chain(decisions: &DecisionSet) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = decisions.points().to_vec();
    let hull = convex_hull(&mut pts);
    // SW chain of (x, y) = NE chain of (−x, −y); point reflection keeps the
    // hull counterclockwise.
    let negated: Vec<(f64, f64)> = hull.iter().map(|&(x, y)| (-x, -y)).collect();
    let chain = ne_frontier(&negated);
    // reorder so the chain runs min-x → min-y, matching the sweep in
    // `closure_improvement`
    chain.into_iter().rev().map(|(x, y)| (-x, -y)).collect()
}
