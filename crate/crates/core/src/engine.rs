//! The protocol loop.
//!
//! Each round: collect advice maps, ask the learner for `p_n`, ask reality
//! for `ω_n`, account losses, and record the round. Two monitors run every
//! round:
//!
//! * the regret bound `L_n ≤ min_k L_n^k + ln K / κ` (slack may dip to
//!   −1e−6 before it counts as a violation);
//! * supermartingale monotonicity `S_n ≤ S_{n−1} + t_tol` for defensive
//!   runs.
//!
//! The bound monitor uses the κ actually supplied, not the game's η, so
//! runs with a conservative κ are checked against their own constant.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::agents::{ExpertStrategy, History, RealityContext, RealityStrategy};
use crate::forecaster::{aa_forecast, defensive_forecast, ForecastError, ForecasterConfig};
use crate::games::{Game, Outcome};
use crate::martingale::{Advice, WeightState};
use crate::math;

/// Slack the bound monitor tolerates below zero.
pub const BOUND_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    Defensive,
    AggregatingAlgorithm,
}

impl LearnerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Defensive => "defensive",
            LearnerKind::AggregatingAlgorithm => "aa",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub forecaster: ForecasterConfig,
    pub check_bound: bool,
    pub check_supermartingale: bool,
    /// Record monitor violations in the trace instead of aborting.
    pub continue_on_violation: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            forecaster: ForecasterConfig::default(),
            check_bound: true,
            check_supermartingale: true,
            continue_on_violation: false,
        }
    }
}

/// Run metadata carried by every trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub game_name: String,
    pub game_kind: String,
    pub eta: f64,
    pub learner: LearnerKind,
    pub kappa: f64,
    pub num_experts: usize,
    pub rounds: u64,
    pub expert_specs: Vec<String>,
    pub reality_spec: String,
    pub forecaster: ForecasterConfig,
    /// Wall-clock duration, filled in by callers that time the run.
    pub runtime_seconds: Option<f64>,
}

/// One protocol round as recorded in the trace.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// 1-based round number n.
    pub round: u64,
    pub p: f64,
    pub omega: Outcome,
    /// Advice values γ^k(p_n); bisection probes are not persisted.
    pub advice: Vec<f64>,
    /// λ(ω_n, p_n).
    pub step_loss: f64,
    /// λ(ω_n, γ^k(p_n)).
    pub expert_step_losses: Vec<f64>,
    /// Cumulative L_n.
    pub learner_loss: f64,
    /// Cumulative L_n^k.
    pub expert_losses: Vec<f64>,
    /// S_n after the round.
    pub supermartingale: f64,
    /// min_k L_n^k + ln K / κ − L_n (+∞ when every expert is infinite).
    pub bound_slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorKind {
    BoundSlack,
    SupermartingaleGrowth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorDiagnostic {
    pub round: u64,
    pub kind: MonitorKind,
    /// The offending value (slack, or S_n − S_{n−1}).
    pub value: f64,
    /// The limit it crossed.
    pub limit: f64,
}

/// Complete record of one run.
#[derive(Debug, Clone)]
pub struct Trace {
    pub meta: RunMeta,
    pub steps: Vec<StepRecord>,
    pub violations: Vec<MonitorDiagnostic>,
    pub final_state: WeightState,
}

impl Trace {
    /// L_N − min_k L_N^k of the completed run.
    pub fn final_regret(&self) -> f64 {
        self.steps.last().map_or(0.0, regret)
    }

    /// max over rounds of L_n − min_k L_n^k.
    pub fn max_regret(&self) -> f64 {
        self.steps
            .iter()
            .map(regret)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// min over rounds of the recorded bound slack.
    pub fn min_bound_slack(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.bound_slack)
            .fold(f64::INFINITY, f64::min)
    }

    /// max over rounds of S_n − S_{n−1} (S_0 = K).
    pub fn max_supermartingale_growth(&self) -> f64 {
        let mut prev = self.meta.num_experts as f64;
        let mut worst = f64::NEG_INFINITY;
        for s in &self.steps {
            worst = worst.max(s.supermartingale - prev);
            prev = s.supermartingale;
        }
        worst
    }
}

fn regret(s: &StepRecord) -> f64 {
    let best = s
        .expert_losses
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if best == f64::INFINITY {
        f64::NEG_INFINITY
    } else {
        s.learner_loss - best
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("rounds must be at least 1")]
    InvalidRounds,
    #[error("kappa {kappa} outside (0, {eta}]")]
    InvalidKappa { kappa: f64, eta: f64 },
    #[error("need at least one expert")]
    NoExperts,
    #[error("invalid strategy: {0}")]
    Agent(#[from] crate::agents::AgentError),
    #[error("forecaster failed at round {round}: {source}")]
    Forecast {
        round: u64,
        source: ForecastError,
    },
    #[error("monitor violation at round {}: {:?} value {} vs limit {}", diagnostic.round, diagnostic.kind, diagnostic.value, diagnostic.limit)]
    MonitorViolation {
        diagnostic: MonitorDiagnostic,
        /// Rounds completed before the abort, including the offending one.
        trace: Box<Trace>,
    },
    #[error("traces disagree on {0}; compare needs identical runs")]
    MismatchedTraces(&'static str),
    #[error("compare needs at least one trace")]
    NoTraces,
}

/// Executes `rounds` rounds of the protocol.
pub fn run(
    game: &Game,
    learner: LearnerKind,
    kappa: f64,
    experts: &[ExpertStrategy],
    reality: &mut RealityStrategy,
    rounds: u64,
    cfg: &EngineConfig,
) -> Result<Trace, EngineError> {
    if rounds == 0 {
        return Err(EngineError::InvalidRounds);
    }
    if experts.is_empty() {
        return Err(EngineError::NoExperts);
    }
    if kappa.is_nan() || kappa <= 0.0 || kappa > game.eta() {
        return Err(EngineError::InvalidKappa {
            kappa,
            eta: game.eta(),
        });
    }
    for e in experts {
        e.validate()?;
    }
    reality.validate()?;
    if learner == LearnerKind::AggregatingAlgorithm
        && experts.iter().any(|e| !e.is_constant_kind())
    {
        return Err(EngineError::Forecast {
            round: 0,
            source: ForecastError::NonConstantAdvice,
        });
    }

    let num_experts = experts.len();
    let bound_constant = math::ln(num_experts as f64) / kappa;
    let mut state = WeightState::initial(kappa, num_experts).expect("validated above");
    let mut history = History::new();
    let mut trace = Trace {
        meta: RunMeta {
            game_name: String::from(game.name()),
            game_kind: String::from(game.kind_name()),
            eta: game.eta(),
            learner,
            kappa,
            num_experts,
            rounds,
            expert_specs: experts.iter().map(|e| e.spec_string()).collect(),
            reality_spec: reality.spec_string(),
            forecaster: cfg.forecaster,
            runtime_seconds: None,
        },
        steps: Vec::with_capacity(rounds as usize),
        violations: Vec::new(),
        final_state: state.clone(),
    };

    for n in 1..=rounds {
        let advice = Advice::new(experts.iter().map(|e| e.produce(&history)).collect());
        let p = match learner {
            LearnerKind::Defensive => defensive_forecast(&state, &advice, game, &cfg.forecaster),
            LearnerKind::AggregatingAlgorithm => {
                let constants = advice
                    .all_constant()
                    .ok_or(ForecastError::NonConstantAdvice);
                constants.and_then(|c| aa_forecast(&state, &c, game, &cfg.forecaster))
            }
        }
        .map_err(|source| EngineError::Forecast { round: n, source })?;

        let advice_at_p = advice.eval_all(p);
        let omega = reality.next_outcome(&RealityContext {
            round: n,
            p,
            game,
            advice_at_p: &advice_at_p,
            learner_loss: state.learner_loss(),
            expert_losses: state.expert_losses(),
        });

        let prev_value = state.supermartingale_value();
        let step_loss = game.loss(omega, p);
        let expert_step_losses: Vec<f64> =
            advice_at_p.iter().map(|&g| game.loss(omega, g)).collect();
        state = state.advance(&advice, game, p, omega);
        let value = state.supermartingale_value();

        let best_expert = state
            .expert_losses()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let bound_slack = if best_expert == f64::INFINITY {
            f64::INFINITY
        } else {
            best_expert + bound_constant - state.learner_loss()
        };

        trace.steps.push(StepRecord {
            round: n,
            p,
            omega,
            advice: advice_at_p,
            step_loss,
            expert_step_losses,
            learner_loss: state.learner_loss(),
            expert_losses: state.expert_losses().to_vec(),
            supermartingale: value,
            bound_slack,
        });
        history.push(p, omega);

        let mut diagnostics: [Option<MonitorDiagnostic>; 2] = [None, None];
        if cfg.check_bound && bound_slack < -BOUND_TOLERANCE {
            diagnostics[0] = Some(MonitorDiagnostic {
                round: n,
                kind: MonitorKind::BoundSlack,
                value: bound_slack,
                limit: -BOUND_TOLERANCE,
            });
        }
        if cfg.check_supermartingale
            && learner == LearnerKind::Defensive
            && value > prev_value + cfg.forecaster.t_tol
        {
            diagnostics[1] = Some(MonitorDiagnostic {
                round: n,
                kind: MonitorKind::SupermartingaleGrowth,
                value: value - prev_value,
                limit: cfg.forecaster.t_tol,
            });
        }
        for diagnostic in diagnostics.into_iter().flatten() {
            if cfg.continue_on_violation {
                trace.violations.push(diagnostic);
            } else {
                trace.final_state = state;
                return Err(EngineError::MonitorViolation {
                    diagnostic,
                    trace: Box::new(trace),
                });
            }
        }
    }
    trace.final_state = state;
    Ok(trace)
}

/// Per-learner comparison row over identically configured runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub learner: String,
    pub final_regret: f64,
    /// max over rounds of L_n − min_k L_n^k: how much of the ln K/κ budget
    /// the run ever used.
    pub max_regret: f64,
    pub bound_constant: f64,
    pub mean_round_seconds: Option<f64>,
}

/// Summarizes traces that share a game, experts, reality, κ and horizon.
pub fn compare(traces: &[Trace]) -> Result<Vec<CompareRow>, EngineError> {
    let first = traces.first().ok_or(EngineError::NoTraces)?;
    for t in &traces[1..] {
        if t.meta.game_name != first.meta.game_name || t.meta.game_kind != first.meta.game_kind {
            return Err(EngineError::MismatchedTraces("game"));
        }
        if t.meta.kappa != first.meta.kappa || t.meta.eta != first.meta.eta {
            return Err(EngineError::MismatchedTraces("kappa"));
        }
        if t.meta.rounds != first.meta.rounds {
            return Err(EngineError::MismatchedTraces("rounds"));
        }
        if t.meta.expert_specs != first.meta.expert_specs {
            return Err(EngineError::MismatchedTraces("experts"));
        }
        if t.meta.reality_spec != first.meta.reality_spec {
            return Err(EngineError::MismatchedTraces("reality"));
        }
    }
    Ok(traces
        .iter()
        .map(|t| CompareRow {
            learner: String::from(t.meta.learner.as_str()),
            final_regret: t.final_regret(),
            max_regret: t.max_regret(),
            bound_constant: math::ln(t.meta.num_experts as f64) / t.meta.kappa,
            mean_round_seconds: t
                .meta
                .runtime_seconds
                .map(|s| s / t.meta.rounds as f64),
        })
        .collect())
}
