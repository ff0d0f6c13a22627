//! The learner's prediction rules.
//!
//! [`defensive_forecast`] picks `p` so that both one-step increments of the
//! exponential supermartingale stay nonpositive (up to tolerance), which
//! pins the regret to `ln K / κ` no matter what reality does. The existence
//! argument behind it is a minimax theorem, but for these supermartingales
//! a constructive route works: `t(1,·)` and `t(0,·)` are continuous,
//! `t(0,0) ≤ 0` and `t(1,1) ≤ 0` always hold (the mean inequality at the
//! endpoints), so either an endpoint is already safe or
//! `h(p) = t(1,p) − t(0,p)` changes sign on `[0,1]` and bisection finds a
//! root; at any root the mean inequality `p·t(1,p) + (1−p)·t(0,p) ≤ 0`
//! forces both increments down.
//!
//! [`aa_forecast`] is the Aggregating Algorithm baseline for constant
//! advice: mix the experts' exp-losses with the posterior weights, then
//! substitute a genuine prediction that dominates the generalized one.

use crate::games::{Game, Outcome};
use crate::martingale::{Advice, IncrementEvaluator, MartingaleError, WeightState};
use crate::math;

/// Once the bracket is narrower than `bisect_tol`, keep halving until the
/// accepted increments drop to this level (or the floating-point floor):
/// the leftover positive increment accumulates into the regret bound over
/// long runs, so we drive it well below the per-round acceptance tolerance.
const T_INNER: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecasterConfig {
    /// Width tolerance on the bisection bracket for `p`.
    pub bisect_tol: f64,
    /// Acceptance tolerance on the increments `t(ω, p)`.
    pub t_tol: f64,
    /// Iteration cap; must allow at least `log2(1/bisect_tol)` halvings.
    pub max_iter: u32,
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        ForecasterConfig {
            bisect_tol: 1e-12,
            t_tol: 1e-9,
            max_iter: 200,
        }
    }
}

impl ForecasterConfig {
    pub fn validate(&self) -> Result<(), ForecastError> {
        if !self.bisect_tol.is_finite() || self.bisect_tol <= 0.0 {
            return Err(ForecastError::InvalidConfig(
                "bisect_tol must be positive and finite",
            ));
        }
        if !self.t_tol.is_finite() || self.t_tol <= 0.0 {
            return Err(ForecastError::InvalidConfig(
                "t_tol must be positive and finite",
            ));
        }
        let needed = -math::ln(self.bisect_tol) / core::f64::consts::LN_2;
        if (self.max_iter as f64) < needed {
            return Err(ForecastError::InvalidConfig(
                "max_iter below ceil(log2(1/bisect_tol))",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ForecastError {
    #[error(transparent)]
    Martingale(#[from] MartingaleError),
    #[error("invalid forecaster config: {0}")]
    InvalidConfig(&'static str),
    #[error("continuity violation: no p with t(0,p) ≤ tol and t(1,p) ≤ tol after {iterations} iterations (p={p}, t0={t0}, t1={t1}); advice may be discontinuous")]
    ContinuityViolation {
        p: f64,
        t0: f64,
        t1: f64,
        iterations: u32,
    },
    #[error("AA requires constant advice")]
    NonConstantAdvice,
    #[error("all expert weights are zero")]
    AllWeightsZero,
    #[error("advice value {0} outside [0,1]")]
    InvalidAdviceValue(f64),
    #[error("substitution failure: no prediction dominates the generalized prediction (g0={g0}, g1={g1}); the game's eta may be overstated")]
    SubstitutionFailure { g0: f64, g1: f64 },
}

/// Defensive forecasting: a `p` with `t(0,p) ≤ t_tol` and `t(1,p) ≤ t_tol`.
///
/// Deterministic in its inputs. Advice curves are queried at
/// `O(log 1/bisect_tol)` points per call and must be pure within the round.
pub fn defensive_forecast(
    state: &WeightState,
    advice: &Advice,
    game: &Game,
    cfg: &ForecasterConfig,
) -> Result<f64, ForecastError> {
    cfg.validate()?;
    let eval = IncrementEvaluator::new(state, advice, game)?;

    // Endpoint shortcuts: t(0,0) ≤ 0 and t(1,1) ≤ 0 unconditionally, so an
    // endpoint is safe as soon as its other increment is.
    if eval.eval(Outcome::One, 0.0) <= cfg.t_tol {
        return Ok(0.0);
    }
    if eval.eval(Outcome::Zero, 1.0) <= cfg.t_tol {
        return Ok(1.0);
    }

    // Here h(0) = t(1,0) − t(0,0) > 0 and h(1) = t(1,1) − t(0,1) < 0:
    // bisect the sign change of h.
    let t_accept = cfg.t_tol.min(T_INNER);
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut iterations = 0u32;
    loop {
        let mid = 0.5 * (lo + hi);
        let t0 = eval.eval(Outcome::Zero, mid);
        let t1 = eval.eval(Outcome::One, mid);
        let worst = t0.max(t1);
        let at_fp_floor = mid <= lo || mid >= hi;
        // an exact sign-change point is the root itself; common at fixed
        // points and symmetric configurations, where it keeps p exact
        if t1 == t0 && worst <= t_accept {
            return Ok(mid);
        }
        if worst <= t_accept && (hi - lo <= cfg.bisect_tol || at_fp_floor) {
            return Ok(mid);
        }
        iterations += 1;
        if at_fp_floor || iterations >= cfg.max_iter {
            // bracket exhausted: accept anything within the contract
            if worst <= cfg.t_tol {
                return Ok(mid);
            }
            return Err(ForecastError::ContinuityViolation {
                p: mid,
                t0,
                t1,
                iterations,
            });
        }
        if t1 > t0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Aggregating Algorithm baseline at learning rate `κ = state.kappa`.
///
/// Computes the generalized prediction
/// `g(ω) = −(1/κ)·ln Σ_k q_k e^{−κ λ(ω, γ_k)}` with posterior weights
/// `q_k ∝ e^{d_k}`, then substitutes the prediction that equalizes the two
/// excesses `λ(ω,p) − g(ω)`, found by bisection on their (monotone)
/// difference. At the equalizer both excesses sit at
/// `min_p max_ω(λ(ω,p) − g(ω)) ≤ 0`, which κ-mixability guarantees, so the
/// returned `p` dominates the generalized prediction within `t_tol`.
/// Second-guessing advice is rejected at the engine level; this function
/// takes the constant values directly.
pub fn aa_forecast(
    state: &WeightState,
    constant_advice: &[f64],
    game: &Game,
    cfg: &ForecasterConfig,
) -> Result<f64, ForecastError> {
    cfg.validate()?;
    let kappa = state.kappa();
    if kappa > game.eta() {
        return Err(MartingaleError::KappaExceedsEta {
            kappa,
            eta: game.eta(),
        }
        .into());
    }
    if constant_advice.len() != state.num_experts() {
        return Err(MartingaleError::AdviceLengthMismatch {
            advice: constant_advice.len(),
            experts: state.num_experts(),
        }
        .into());
    }
    for &c in constant_advice {
        if !(0.0..=1.0).contains(&c) {
            return Err(ForecastError::InvalidAdviceValue(c));
        }
    }
    let d = state.log_weights();
    let log_total = d.iter().copied().fold(f64::NEG_INFINITY, math::log_add_exp);
    if log_total == f64::NEG_INFINITY {
        return Err(ForecastError::AllWeightsZero);
    }

    // g(ω) = −(1/κ)(ln Σ e^{d_k − κλ(ω,γ_k)} − ln Σ e^{d_k})
    let generalized = |omega: Outcome| -> f64 {
        let mut acc = f64::NEG_INFINITY;
        for (k, &c) in constant_advice.iter().enumerate() {
            if d[k] == f64::NEG_INFINITY {
                continue;
            }
            let loss = game.loss(omega, c);
            if loss == f64::INFINITY {
                continue;
            }
            acc = math::log_add_exp(acc, d[k] - kappa * loss);
        }
        if acc == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            -(acc - log_total) / kappa
        }
    };
    let g0 = generalized(Outcome::Zero);
    let g1 = generalized(Outcome::One);

    // Substitute the prediction whose two excesses λ(ω,p) − g(ω) are equal:
    // their difference D(p) is monotone decreasing in p, and at its root the
    // common excess equals min_p max_ω(λ(ω,p) − g(ω)) ≤ 0 by κ-mixability.
    let excess = |omega: Outcome, p: f64| -> f64 {
        let loss = game.loss(omega, p);
        let g = match omega {
            Outcome::Zero => g0,
            Outcome::One => g1,
        };
        if loss == f64::INFINITY && g == f64::INFINITY {
            0.0
        } else {
            loss - g
        }
    };
    let diff = |p: f64| excess(Outcome::One, p) - excess(Outcome::Zero, p);
    let mut p = if diff(0.0) <= 0.0 {
        0.0
    } else if diff(1.0) >= 0.0 {
        1.0
    } else {
        // Settle on the D > 0 side of the bracket: there the increasing
        // excess λ(0,·) − g0 sits below its value at the root, which keeps
        // the check robust where λ(0,·) is steep (near p = 1 the loss
        // slope can dwarf the f64 spacing).
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break lo;
            }
            let d = diff(mid);
            if d == 0.0 {
                break mid; // exact equalizer (symmetric configurations)
            }
            if d > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    };
    if p == 0.0 && diff(0.0) > 0.0 {
        // the bracket never moved off the endpoint; fall back to the first
        // interior candidate
        p = f64::MIN_POSITIVE;
    }
    if excess(Outcome::Zero, p) <= cfg.t_tol && excess(Outcome::One, p) <= cfg.t_tol {
        Ok(p)
    } else {
        Err(ForecastError::SubstitutionFailure { g0, g1 })
    }
}
