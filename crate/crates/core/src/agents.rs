//! Expert and reality strategies for experiments.
//!
//! Experts produce one continuous advice map per round from the public
//! history; constant and fixed-sequence experts produce constant maps,
//! the rest second-guess the learner. Reality strategies are unconstrained
//! by the protocol; the adversarial kinds respond greedily to the round in
//! progress.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::games::{Game, Outcome};
use crate::martingale::AdviceCurve;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error("constant advice {0} outside [0,1]")]
    InvalidConstant(f64),
    #[error("fixed sequence must be nonempty with values in [0,1]")]
    InvalidSequence,
    #[error("decategorizer slope must lie in (0,1], got {0}")]
    InvalidSlope(f64),
    #[error("shift must lie in [-1,1], got {0}")]
    InvalidShift(f64),
    #[error("regret pair parameters out of range (trigger {trigger}, replacement {replacement}, radius {radius}, width {width})")]
    InvalidRegretPair {
        trigger: f64,
        replacement: f64,
        radius: f64,
        width: f64,
    },
    #[error("bernoulli theta must lie in [0,1], got {0}")]
    InvalidTheta(f64),
}

/// Public history available to experts when producing a round's advice.
#[derive(Debug, Clone, Default)]
pub struct History {
    outcomes: Vec<Outcome>,
    predictions: Vec<f64>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rounds completed so far.
    pub fn rounds(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn predictions(&self) -> &[f64] {
        &self.predictions
    }

    pub fn push(&mut self, prediction: f64, outcome: Outcome) {
        self.predictions.push(prediction);
        self.outcomes.push(outcome);
    }
}

/// An expert strategy: per round, a rule `history → advice map`.
#[derive(Debug, Clone, PartialEq)]
pub enum ExpertStrategy {
    /// Always the same constant map.
    Constant(f64),
    /// Cycles through a fixed list of constants, one per round.
    FixedSequence(Vec<f64>),
    /// Empirical frequency of past outcomes with add-one smoothing.
    Frequency,
    /// Second-guesser `γ(p) = clamp(p + shift)`.
    ShiftMap { shift: f64 },
    /// Second-guesser `γ(p) = 0.5 + slope·(p − 0.5)`: pulls the learner's
    /// prediction toward 1/2, undoing overly categorical forecasts.
    Decategorizer { slope: f64 },
    /// Second-guesser that answers `replacement` when the learner's
    /// prediction is within `radius` of `trigger` and `p` elsewhere, joined
    /// by continuous ramps of the given `width`.
    InternalRegretPair {
        trigger: f64,
        replacement: f64,
        radius: f64,
        width: f64,
    },
}

impl ExpertStrategy {
    pub fn validate(&self) -> Result<(), AgentError> {
        match self {
            ExpertStrategy::Constant(c) => {
                if !(0.0..=1.0).contains(c) {
                    return Err(AgentError::InvalidConstant(*c));
                }
            }
            ExpertStrategy::FixedSequence(values) => {
                if values.is_empty() || values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(AgentError::InvalidSequence);
                }
            }
            ExpertStrategy::Frequency => {}
            ExpertStrategy::ShiftMap { shift } => {
                if !(-1.0..=1.0).contains(shift) || !shift.is_finite() {
                    return Err(AgentError::InvalidShift(*shift));
                }
            }
            ExpertStrategy::Decategorizer { slope } => {
                if slope.is_nan() || *slope <= 0.0 || *slope > 1.0 {
                    return Err(AgentError::InvalidSlope(*slope));
                }
            }
            ExpertStrategy::InternalRegretPair {
                trigger,
                replacement,
                radius,
                width,
            } => {
                let ok = (0.0..=1.0).contains(trigger)
                    && (0.0..=1.0).contains(replacement)
                    && *radius >= 0.0
                    && radius.is_finite()
                    && *width > 0.0
                    && width.is_finite();
                if !ok {
                    return Err(AgentError::InvalidRegretPair {
                        trigger: *trigger,
                        replacement: *replacement,
                        radius: *radius,
                        width: *width,
                    });
                }
            }
        }
        Ok(())
    }

    /// The advice map for the round following `history`.
    pub fn produce(&self, history: &History) -> AdviceCurve {
        match self {
            ExpertStrategy::Constant(c) => AdviceCurve::Constant(*c),
            ExpertStrategy::FixedSequence(values) => {
                AdviceCurve::Constant(values[history.rounds() % values.len()])
            }
            ExpertStrategy::Frequency => {
                let n = history.rounds();
                let ones = history
                    .outcomes()
                    .iter()
                    .filter(|&&w| w == Outcome::One)
                    .count();
                AdviceCurve::Constant((ones as f64 + 1.0) / (n as f64 + 2.0))
            }
            ExpertStrategy::ShiftMap { shift } => AdviceCurve::ShiftMap { shift: *shift },
            ExpertStrategy::Decategorizer { slope } => {
                AdviceCurve::Decategorizer { slope: *slope }
            }
            ExpertStrategy::InternalRegretPair {
                trigger,
                replacement,
                radius,
                width,
            } => AdviceCurve::RegretRamp {
                trigger: *trigger,
                replacement: *replacement,
                radius: *radius,
                width: *width,
            },
        }
    }

    /// True when every produced map is constant (accepted by the AA).
    pub fn is_constant_kind(&self) -> bool {
        matches!(
            self,
            ExpertStrategy::Constant(_)
                | ExpertStrategy::FixedSequence(_)
                | ExpertStrategy::Frequency
        )
    }

    pub fn spec_string(&self) -> String {
        match self {
            ExpertStrategy::Constant(c) => alloc::format!("constant({c})"),
            ExpertStrategy::FixedSequence(v) => alloc::format!("fixed_sequence(len={})", v.len()),
            ExpertStrategy::Frequency => String::from("frequency"),
            ExpertStrategy::ShiftMap { shift } => alloc::format!("shift_map({shift})"),
            ExpertStrategy::Decategorizer { slope } => {
                alloc::format!("decategorizer({slope})")
            }
            ExpertStrategy::InternalRegretPair {
                trigger,
                replacement,
                radius,
                width,
            } => alloc::format!(
                "internal_regret_pair({trigger}->{replacement}, r={radius}, w={width})"
            ),
        }
    }
}

/// What reality sees before announcing the outcome of round `round`.
#[derive(Debug)]
pub struct RealityContext<'a> {
    /// 1-based round number.
    pub round: u64,
    /// The learner's prediction this round.
    pub p: f64,
    pub game: &'a Game,
    /// Advice values `γ^k(p)` this round.
    pub advice_at_p: &'a [f64],
    /// Cumulative learner loss before this round.
    pub learner_loss: f64,
    /// Cumulative expert losses before this round.
    pub expert_losses: &'a [f64],
}

/// Reality (outcome) strategies. Seeded kinds are bit-reproducible.
#[derive(Debug, Clone)]
pub enum RealityStrategy {
    /// Cycles through a fixed outcome list.
    FixedSequence(Vec<Outcome>),
    /// I.i.d. coin with success probability `theta`.
    Bernoulli {
        theta: f64,
        seed: u64,
        rng: Box<ChaCha8Rng>,
    },
    /// Picks the outcome maximizing the learner's loss this round
    /// (ties go to 1).
    AdversarialMaxLoss,
    /// Picks the outcome maximizing the learner's regret after this round
    /// (ties go to 1).
    AdversarialMaxRegret,
}

impl RealityStrategy {
    pub fn fixed(outcomes: Vec<Outcome>) -> Self {
        RealityStrategy::FixedSequence(outcomes)
    }

    pub fn bernoulli(theta: f64, seed: u64) -> Self {
        RealityStrategy::Bernoulli {
            theta,
            seed,
            rng: Box::new(ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        match self {
            RealityStrategy::FixedSequence(outcomes) if outcomes.is_empty() => {
                Err(AgentError::InvalidSequence)
            }
            RealityStrategy::Bernoulli { theta, .. } if !(0.0..=1.0).contains(theta) => {
                Err(AgentError::InvalidTheta(*theta))
            }
            _ => Ok(()),
        }
    }

    pub fn next_outcome(&mut self, ctx: &RealityContext<'_>) -> Outcome {
        match self {
            RealityStrategy::FixedSequence(outcomes) => {
                outcomes[(ctx.round - 1) as usize % outcomes.len()]
            }
            RealityStrategy::Bernoulli { theta, rng, .. } => {
                if rng.random::<f64>() < *theta {
                    Outcome::One
                } else {
                    Outcome::Zero
                }
            }
            RealityStrategy::AdversarialMaxLoss => {
                let loss1 = ctx.game.loss(Outcome::One, ctx.p);
                let loss0 = ctx.game.loss(Outcome::Zero, ctx.p);
                if loss1 >= loss0 {
                    Outcome::One
                } else {
                    Outcome::Zero
                }
            }
            RealityStrategy::AdversarialMaxRegret => {
                let regret_if = |omega: Outcome| -> f64 {
                    let learner = ctx.learner_loss + ctx.game.loss(omega, ctx.p);
                    let best_expert = ctx
                        .expert_losses
                        .iter()
                        .zip(ctx.advice_at_p)
                        .map(|(&cum, &g)| cum + ctx.game.loss(omega, g))
                        .fold(f64::INFINITY, f64::min);
                    if best_expert == f64::INFINITY {
                        f64::NEG_INFINITY
                    } else {
                        learner - best_expert
                    }
                };
                if regret_if(Outcome::One) >= regret_if(Outcome::Zero) {
                    Outcome::One
                } else {
                    Outcome::Zero
                }
            }
        }
    }

    pub fn spec_string(&self) -> String {
        match self {
            RealityStrategy::FixedSequence(v) => alloc::format!("fixed_sequence(len={})", v.len()),
            RealityStrategy::Bernoulli { theta, seed, .. } => {
                alloc::format!("bernoulli({theta}, seed={seed})")
            }
            RealityStrategy::AdversarialMaxLoss => String::from("adversarial_max_loss"),
            RealityStrategy::AdversarialMaxRegret => String::from("adversarial_max_regret"),
        }
    }
}
