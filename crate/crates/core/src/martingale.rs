//! The K-expert exponential supermartingale in log space.
//!
//! After round `n−1` the state keeps, per expert, the log-weight
//! `d_k = κ(L_{n−1} − L_{n−1}^k)`. The supermartingale value is
//! `S_{n−1} = Σ_k e^{d_k}`, with `S_0 = K`, and its one-step increment when
//! the learner plays `p` and reality answers `ω` is
//!
//! ```text
//! t(ω,p) = Σ_k e^{d_k} · ( e^{κ(λ(ω,p) − λ(ω,γ^k(p)))} − 1 ).
//! ```
//!
//! Weights are never materialized as raw exponentials: after many rounds
//! the differences `κ(L − L^k)` reach hundreds, and an expert with infinite
//! cumulative loss carries `d_k = −∞` permanently while still counting
//! toward `K`.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::games::{Game, Outcome};
use crate::math;

/// Errors from weight-state operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MartingaleError {
    #[error("kappa must be positive and finite, got {0}")]
    InvalidKappa(f64),
    #[error("need at least one expert")]
    NoExperts,
    #[error("kappa {kappa} exceeds the game's certified eta {eta}; the bound is no longer guaranteed")]
    KappaExceedsEta { kappa: f64, eta: f64 },
    #[error("advice has {advice} entries but the state tracks {experts} experts")]
    AdviceLengthMismatch { advice: usize, experts: usize },
    #[error("cumulative losses must be nonnegative extended reals, got {0}")]
    InvalidLoss(f64),
}

/// One expert's advice for a round: a continuous map `γ: [0,1] → [0,1]`
/// queried pointwise at any prospective prediction.
pub enum AdviceCurve {
    /// `γ(p) = c`.
    Constant(f64),
    /// `γ(p) = 0.5 + slope·(p − 0.5)`, a decategorizing second-guesser.
    Decategorizer { slope: f64 },
    /// `γ(p) = clamp(p + shift)`.
    ShiftMap { shift: f64 },
    /// `γ(p) = replacement` near `trigger`, `γ(p) = p` far from it, joined
    /// by linear ramps of the given width.
    RegretRamp {
        trigger: f64,
        replacement: f64,
        radius: f64,
        width: f64,
    },
    /// Arbitrary continuous map with an optional declared Lipschitz bound.
    Custom {
        f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
        lipschitz: Option<f64>,
    },
}

impl AdviceCurve {
    /// Query the advice at `p`. Values are clamped into `[0,1]`.
    #[inline]
    pub fn eval(&self, p: f64) -> f64 {
        let raw = match self {
            AdviceCurve::Constant(c) => *c,
            AdviceCurve::Decategorizer { slope } => 0.5 + slope * (p - 0.5),
            AdviceCurve::ShiftMap { shift } => p + shift,
            AdviceCurve::RegretRamp {
                trigger,
                replacement,
                radius,
                width,
            } => {
                let dist = math::abs(p - trigger);
                if dist <= *radius {
                    *replacement
                } else if dist >= radius + width {
                    p
                } else {
                    let blend = (dist - radius) / width;
                    (1.0 - blend) * replacement + blend * p
                }
            }
            AdviceCurve::Custom { f, .. } => f(p),
        };
        raw.clamp(0.0, 1.0)
    }

    /// The constant value, when this curve does not second-guess. Clamped
    /// like [`AdviceCurve::eval`] so the two views agree.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            AdviceCurve::Constant(c) => Some(c.clamp(0.0, 1.0)),
            _ => None,
        }
    }

    /// Declared modulus of continuity, when known.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            AdviceCurve::Constant(_) => Some(0.0),
            AdviceCurve::Decategorizer { slope } => Some(math::abs(*slope)),
            AdviceCurve::ShiftMap { .. } => Some(1.0),
            AdviceCurve::RegretRamp {
                trigger,
                replacement,
                width,
                ..
            } => {
                // steepest section is the ramp: d/dp of the blend is bounded
                // by 1 + |p − replacement|/width near the trigger
                let span = math::abs(trigger - replacement) + 1.0;
                Some(1.0 + span / width)
            }
            AdviceCurve::Custom { lipschitz, .. } => *lipschitz,
        }
    }
}

impl fmt::Debug for AdviceCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdviceCurve::Constant(c) => write!(f, "Constant({c})"),
            AdviceCurve::Decategorizer { slope } => write!(f, "Decategorizer({slope})"),
            AdviceCurve::ShiftMap { shift } => write!(f, "ShiftMap({shift})"),
            AdviceCurve::RegretRamp {
                trigger,
                replacement,
                radius,
                width,
            } => write!(f, "RegretRamp({trigger}->{replacement}, r={radius}, w={width})"),
            AdviceCurve::Custom { .. } => write!(f, "Custom(..)"),
        }
    }
}

/// The advice of all `K` experts for one round. Curves must be pure within
/// the round: the forecaster queries them at many prospective `p`.
#[derive(Debug)]
pub struct Advice {
    curves: Vec<AdviceCurve>,
}

impl Advice {
    pub fn new(curves: Vec<AdviceCurve>) -> Self {
        Advice { curves }
    }

    pub fn constants(values: &[f64]) -> Self {
        Advice {
            curves: values.iter().map(|&v| AdviceCurve::Constant(v)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn curves(&self) -> &[AdviceCurve] {
        &self.curves
    }

    #[inline]
    pub fn eval(&self, k: usize, p: f64) -> f64 {
        self.curves[k].eval(p)
    }

    pub fn eval_all(&self, p: f64) -> Vec<f64> {
        self.curves.iter().map(|c| c.eval(p)).collect()
    }

    /// All constant values, or `None` if any expert second-guesses.
    pub fn all_constant(&self) -> Option<Vec<f64>> {
        self.curves.iter().map(|c| c.constant_value()).collect()
    }
}

/// Per-expert log-weights `d_k = κ(L − L^k)` plus the cumulative losses
/// they are derived from. Immutable; [`WeightState::advance`] returns the
/// successor state.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightState {
    kappa: f64,
    log_weights: Vec<f64>,
    learner_loss: f64,
    expert_losses: Vec<f64>,
    round: u64,
}

impl WeightState {
    /// The round-zero state: all weights 1, all losses 0.
    pub fn initial(kappa: f64, num_experts: usize) -> Result<Self, MartingaleError> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(MartingaleError::InvalidKappa(kappa));
        }
        if num_experts == 0 {
            return Err(MartingaleError::NoExperts);
        }
        Ok(WeightState {
            kappa,
            log_weights: alloc::vec![0.0; num_experts],
            learner_loss: 0.0,
            expert_losses: alloc::vec![0.0; num_experts],
            round: 0,
        })
    }

    /// Rebuild a state from recorded losses (checkpoint resume); the
    /// log-weights are recomputed.
    pub fn from_losses(
        kappa: f64,
        learner_loss: f64,
        expert_losses: Vec<f64>,
        round: u64,
    ) -> Result<Self, MartingaleError> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(MartingaleError::InvalidKappa(kappa));
        }
        if expert_losses.is_empty() {
            return Err(MartingaleError::NoExperts);
        }
        if learner_loss.is_nan() || learner_loss < 0.0 {
            return Err(MartingaleError::InvalidLoss(learner_loss));
        }
        for &l in &expert_losses {
            if l.is_nan() || l < 0.0 {
                return Err(MartingaleError::InvalidLoss(l));
            }
        }
        let log_weights = expert_losses
            .iter()
            .map(|&l| log_weight(kappa, learner_loss, l))
            .collect();
        Ok(WeightState {
            kappa,
            log_weights,
            learner_loss,
            expert_losses,
            round,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn num_experts(&self) -> usize {
        self.log_weights.len()
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn learner_loss(&self) -> f64 {
        self.learner_loss
    }

    pub fn expert_losses(&self) -> &[f64] {
        &self.expert_losses
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `S = Σ_k e^{d_k}` via max-shifted summation.
    pub fn supermartingale_value(&self) -> f64 {
        let m = math::max_or_neg_inf(&self.log_weights);
        if m == f64::NEG_INFINITY {
            return 0.0;
        }
        if m == f64::INFINITY {
            return f64::INFINITY;
        }
        let sum: f64 = self.log_weights.iter().map(|&d| math::exp(d - m)).sum();
        math::exp(m) * sum
    }

    /// The supermartingale increment `t(ω,p)` for this round's advice.
    ///
    /// Rejects `κ > game.eta` (the one-step inequality is then no longer
    /// guaranteed) and mismatched advice length. The result may be `±∞`
    /// but never `NaN`; in particular it is `+∞` when `λ(ω,p) = +∞` and
    /// some weight is positive on an expert with finite loss there.
    pub fn increment(
        &self,
        advice: &Advice,
        game: &Game,
        omega: Outcome,
        p: f64,
    ) -> Result<f64, MartingaleError> {
        let eval = IncrementEvaluator::new(self, advice, game)?;
        Ok(eval.eval(omega, p))
    }

    /// The successor state after the learner plays `p` and reality plays
    /// `ω`: losses accumulate and the log-weights are recomputed. An expert
    /// whose cumulative loss hits `+∞` keeps `d_k = −∞` forever but stays
    /// in the state so that `S_0 = K` accounting is preserved.
    pub fn advance(&self, advice: &Advice, game: &Game, p: f64, omega: Outcome) -> WeightState {
        debug_assert_eq!(advice.len(), self.num_experts());
        let learner_loss = self.learner_loss + game.loss(omega, p);
        let expert_losses: Vec<f64> = self
            .expert_losses
            .iter()
            .enumerate()
            .map(|(k, &l)| l + game.loss(omega, advice.eval(k, p)))
            .collect();
        let log_weights = expert_losses
            .iter()
            .map(|&l| log_weight(self.kappa, learner_loss, l))
            .collect();
        WeightState {
            kappa: self.kappa,
            log_weights,
            learner_loss,
            expert_losses,
            round: self.round + 1,
        }
    }
}

#[inline]
fn log_weight(kappa: f64, learner_loss: f64, expert_loss: f64) -> f64 {
    if expert_loss == f64::INFINITY {
        f64::NEG_INFINITY
    } else if learner_loss == f64::INFINITY {
        f64::INFINITY
    } else {
        kappa * (learner_loss - expert_loss)
    }
}

/// Evaluates `t(ω, ·)` for one round, precomputing what the advice allows.
///
/// For constant advice the increment collapses to
/// `t(ω,p) = A_ω·e^{κλ(ω,p)} − S` with `A_ω = Σ_k e^{d_k − κλ(ω,γ_k)}`,
/// so a bisection step costs O(1) instead of O(K).
pub struct IncrementEvaluator<'a> {
    state: &'a WeightState,
    advice: &'a Advice,
    game: &'a Game,
    fast: Option<FastConstant>,
}

struct FastConstant {
    /// `ln A_ω` for ω = 0, 1; −∞ when no live expert has finite loss there.
    log_a: [f64; 2],
    /// `S = Σ_k e^{d_k}`.
    total: f64,
}

impl<'a> IncrementEvaluator<'a> {
    pub fn new(
        state: &'a WeightState,
        advice: &'a Advice,
        game: &'a Game,
    ) -> Result<Self, MartingaleError> {
        if state.kappa > game.eta() {
            return Err(MartingaleError::KappaExceedsEta {
                kappa: state.kappa,
                eta: game.eta(),
            });
        }
        if advice.len() != state.num_experts() {
            return Err(MartingaleError::AdviceLengthMismatch {
                advice: advice.len(),
                experts: state.num_experts(),
            });
        }
        let fast = advice.all_constant().map(|values| {
            let mut log_a = [f64::NEG_INFINITY; 2];
            for (w, slot) in [Outcome::Zero, Outcome::One].into_iter().zip(0..) {
                let mut acc = f64::NEG_INFINITY;
                for (k, &c) in values.iter().enumerate() {
                    let d = state.log_weights[k];
                    if d == f64::NEG_INFINITY {
                        continue;
                    }
                    let loss = game.loss(w, c);
                    if loss == f64::INFINITY {
                        continue;
                    }
                    acc = math::log_add_exp(acc, d - state.kappa * loss);
                }
                log_a[slot] = acc;
            }
            FastConstant {
                log_a,
                total: state.supermartingale_value(),
            }
        });
        Ok(IncrementEvaluator {
            state,
            advice,
            game,
            fast,
        })
    }

    /// `t(ω, p)`.
    pub fn eval(&self, omega: Outcome, p: f64) -> f64 {
        let lp = self.game.loss(omega, p);
        if let Some(fast) = &self.fast {
            let log_a = fast.log_a[omega.as_u8() as usize];
            if lp == f64::INFINITY {
                // finite-loss live experts force +∞; otherwise every live
                // expert shares the infinite loss and the limit term is 0
                return if log_a > f64::NEG_INFINITY {
                    f64::INFINITY
                } else {
                    0.0
                };
            }
            return math::exp(self.state.kappa * lp + log_a) - fast.total;
        }
        self.eval_generic(omega, lp, p)
    }

    fn eval_generic(&self, omega: Outcome, lp: f64, p: f64) -> f64 {
        let kappa = self.state.kappa;
        let d = &self.state.log_weights;
        // first pass: the max shift m = max_k max(d_k, d_k + κΔ_k), and the
        // +∞ short-circuit
        let mut shift = f64::NEG_INFINITY;
        for (k, &dk) in d.iter().enumerate() {
            if dk == f64::NEG_INFINITY {
                continue;
            }
            let lg = self.game.loss(omega, self.advice.eval(k, p));
            if lp == f64::INFINITY {
                if lg == f64::INFINITY {
                    continue; // identical infinities: zero contribution
                }
                return f64::INFINITY;
            }
            let grown = if lg == f64::INFINITY {
                f64::NEG_INFINITY
            } else {
                dk + kappa * (lp - lg)
            };
            shift = shift.max(dk).max(grown);
        }
        if shift == f64::NEG_INFINITY {
            return 0.0;
        }
        let mut sum = 0.0;
        for (k, &dk) in d.iter().enumerate() {
            if dk == f64::NEG_INFINITY {
                continue;
            }
            let lg = self.game.loss(omega, self.advice.eval(k, p));
            let grown = if lg == f64::INFINITY {
                f64::NEG_INFINITY
            } else {
                dk + kappa * (lp - lg)
            };
            sum += math::exp(grown - shift) - math::exp(dk - shift);
        }
        math::exp(shift) * sum
    }
}
