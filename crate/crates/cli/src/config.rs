//! JSON run configuration.
//!
//! Schema (versioned via the `schema` field, currently 1):
//!
//! ```json
//! {
//!   "schema": 1,
//!   "game": {"kind": "quadratic"},
//!   "learner": "defensive",
//!   "kappa": 2.0,
//!   "experts": [{"kind": "constant", "value": 0.3}],
//!   "reality": {"kind": "bernoulli", "theta": 0.5, "seed": 42},
//!   "rounds": 1000,
//!   "forecaster": {"bisect_tol": 1e-12, "t_tol": 1e-9, "max_iter": 200},
//!   "monitors": {"bound": true, "supermartingale": true, "continue_on_violation": false}
//! }
//! ```
//!
//! `game` and `reality` also accept a string, read as a path to a JSON
//! document of the same shape (relative to the config file).

use std::path::Path;

use serde::{Deserialize, Serialize};

use defensor_core::agents::{ExpertStrategy, RealityStrategy};
use defensor_core::engine::{EngineConfig, LearnerKind};
use defensor_core::forecaster::ForecasterConfig;
use defensor_core::games::{Game, Outcome};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub game: GameRef,
    pub learner: LearnerSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub experts: Vec<ExpertSpec>,
    pub reality: RealityRef,
    pub rounds: u64,
    #[serde(default)]
    pub forecaster: ForecasterSpec,
    #[serde(default)]
    pub monitors: MonitorSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameRef {
    Path(String),
    Inline(GameSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RealityRef {
    Path(String),
    Inline(RealitySpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerSpec {
    Defensive,
    Aa,
}

impl LearnerSpec {
    pub fn kind(self) -> LearnerKind {
        match self {
            LearnerSpec::Defensive => LearnerKind::Defensive,
            LearnerSpec::Aa => LearnerKind::AggregatingAlgorithm,
        }
    }
}

/// Game document: `{"name": ..., "kind": "quadratic"|"log"|"tabulated",
/// "eta": ..., "grid": [[p, loss0, loss1], ...]}`. `eta` and `grid` are
/// required only for `"tabulated"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: GameKindSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKindSpec {
    Quadratic,
    Log,
    Tabulated,
}

impl GameSpec {
    pub fn build(&self) -> Result<Game, CliError> {
        match self.kind {
            GameKindSpec::Quadratic => {
                self.reject_builtin_overrides(2.0)?;
                Ok(Game::quadratic())
            }
            GameKindSpec::Log => {
                self.reject_builtin_overrides(1.0)?;
                Ok(Game::log_loss())
            }
            GameKindSpec::Tabulated => {
                let eta = self
                    .eta
                    .ok_or_else(|| CliError::Config("tabulated game needs an eta".into()))?;
                let grid = self
                    .grid
                    .as_ref()
                    .ok_or_else(|| CliError::Config("tabulated game needs a grid".into()))?;
                if grid.len() < 2 {
                    return Err(CliError::Config("tabulated grid needs at least 2 rows".into()));
                }
                let n = grid.len();
                let mut losses = Vec::with_capacity(n);
                for (i, row) in grid.iter().enumerate() {
                    let expected = i as f64 / (n - 1) as f64;
                    if (row[0] - expected).abs() > 1e-9 {
                        return Err(CliError::Config(format!(
                            "tabulated grid row {i}: p = {} but the grid must be uniform over [0,1] (expected {expected})",
                            row[0]
                        )));
                    }
                    losses.push((row[1], row[2]));
                }
                let name = self.name.clone().unwrap_or_else(|| "tabulated".into());
                Game::tabulated(name, eta, &losses)
                    .map_err(|e| CliError::Config(format!("tabulated game: {e}")))
            }
        }
    }

    fn reject_builtin_overrides(&self, eta: f64) -> Result<(), CliError> {
        if let Some(requested) = self.eta {
            if (requested - eta).abs() > 1e-12 {
                return Err(CliError::Config(format!(
                    "built-in game has eta = {eta}; cannot override with {requested}"
                )));
            }
        }
        if self.grid.is_some() {
            return Err(CliError::Config(
                "built-in games do not take a grid".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExpertSpec {
    Constant { value: f64 },
    FixedSequence { values: Vec<f64> },
    Frequency,
    ShiftMap { shift: f64 },
    Decategorizer { slope: f64 },
    InternalRegretPair {
        trigger: f64,
        replacement: f64,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default = "default_width")]
        width: f64,
    },
}

fn default_radius() -> f64 {
    0.05
}

fn default_width() -> f64 {
    0.01
}

impl ExpertSpec {
    pub fn strategy(&self) -> Result<ExpertStrategy, CliError> {
        let strategy = match self {
            ExpertSpec::Constant { value } => ExpertStrategy::Constant(*value),
            ExpertSpec::FixedSequence { values } => ExpertStrategy::FixedSequence(values.clone()),
            ExpertSpec::Frequency => ExpertStrategy::Frequency,
            ExpertSpec::ShiftMap { shift } => ExpertStrategy::ShiftMap { shift: *shift },
            ExpertSpec::Decategorizer { slope } => ExpertStrategy::Decategorizer { slope: *slope },
            ExpertSpec::InternalRegretPair {
                trigger,
                replacement,
                radius,
                width,
            } => ExpertStrategy::InternalRegretPair {
                trigger: *trigger,
                replacement: *replacement,
                radius: *radius,
                width: *width,
            },
        };
        strategy
            .validate()
            .map_err(|e| CliError::Config(format!("expert spec: {e}")))?;
        Ok(strategy)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RealitySpec {
    FixedSequence { outcomes: Vec<u8> },
    Bernoulli { theta: f64, seed: u64 },
    AdversarialMaxLoss,
    AdversarialMaxRegret,
}

impl RealitySpec {
    pub fn strategy(&self) -> Result<RealityStrategy, CliError> {
        let strategy = match self {
            RealitySpec::FixedSequence { outcomes } => {
                let parsed: Option<Vec<Outcome>> =
                    outcomes.iter().map(|&b| Outcome::from_u8(b)).collect();
                RealityStrategy::fixed(parsed.ok_or_else(|| {
                    CliError::Config("fixed_sequence outcomes must be 0 or 1".into())
                })?)
            }
            RealitySpec::Bernoulli { theta, seed } => RealityStrategy::bernoulli(*theta, *seed),
            RealitySpec::AdversarialMaxLoss => RealityStrategy::AdversarialMaxLoss,
            RealitySpec::AdversarialMaxRegret => RealityStrategy::AdversarialMaxRegret,
        };
        strategy
            .validate()
            .map_err(|e| CliError::Config(format!("reality spec: {e}")))?;
        Ok(strategy)
    }

    /// Derive the replica's variant: seeded kinds advance their seed, the
    /// deterministic kinds are shared as-is.
    pub fn with_seed_offset(&self, offset: u64) -> RealitySpec {
        match self {
            RealitySpec::Bernoulli { theta, seed } => RealitySpec::Bernoulli {
                theta: *theta,
                seed: seed.wrapping_add(offset),
            },
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecasterSpec {
    #[serde(default = "default_bisect_tol")]
    pub bisect_tol: f64,
    #[serde(default = "default_t_tol")]
    pub t_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: u32,
}

fn default_bisect_tol() -> f64 {
    1e-12
}

fn default_t_tol() -> f64 {
    1e-9
}

fn default_max_iter() -> u32 {
    200
}

impl Default for ForecasterSpec {
    fn default() -> Self {
        ForecasterSpec {
            bisect_tol: default_bisect_tol(),
            t_tol: default_t_tol(),
            max_iter: default_max_iter(),
        }
    }
}

impl ForecasterSpec {
    pub fn config(&self) -> ForecasterConfig {
        ForecasterConfig {
            bisect_tol: self.bisect_tol,
            t_tol: self.t_tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSpec {
    #[serde(default = "default_true")]
    pub bound: bool,
    #[serde(default = "default_true")]
    pub supermartingale: bool,
    #[serde(default)]
    pub continue_on_violation: bool,
}

fn default_true() -> bool {
    true
}

impl Default for MonitorSpec {
    fn default() -> Self {
        MonitorSpec {
            bound: true,
            supermartingale: true,
            continue_on_violation: false,
        }
    }
}

/// A fully validated run, ready for the engine.
#[derive(Debug)]
pub struct ResolvedRun {
    pub game: Game,
    pub learner: LearnerKind,
    pub kappa: f64,
    pub experts: Vec<ExpertStrategy>,
    pub reality_spec: RealitySpec,
    pub rounds: u64,
    pub engine: EngineConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config parse: {e}")))
    }

    /// Validates the whole config against the engine's preconditions.
    /// `base_dir` anchors relative game/reality file references.
    pub fn resolve(&self, base_dir: &Path) -> Result<ResolvedRun, CliError> {
        if self.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        let game = match &self.game {
            GameRef::Inline(spec) => spec.build()?,
            GameRef::Path(path) => crate::formats::load_game(&base_dir.join(path))?,
        };
        let kappa = self.kappa.unwrap_or_else(|| game.eta());
        if kappa.is_nan() || kappa <= 0.0 || kappa > game.eta() {
            return Err(CliError::Config(format!(
                "kappa too large: {kappa} outside (0, {}] for game '{}'",
                game.eta(),
                game.name()
            )));
        }
        if self.experts.is_empty() {
            return Err(CliError::Config("need at least one expert".into()));
        }
        let experts: Vec<ExpertStrategy> = self
            .experts
            .iter()
            .map(|spec| spec.strategy())
            .collect::<Result<_, _>>()?;
        if self.learner == LearnerSpec::Aa && experts.iter().any(|e| !e.is_constant_kind()) {
            return Err(CliError::Config(
                "AA requires constant advice; remove second-guessing experts or use the defensive learner".into(),
            ));
        }
        let reality_spec = match &self.reality {
            RealityRef::Inline(spec) => spec.clone(),
            RealityRef::Path(path) => crate::formats::load_reality(&base_dir.join(path))?,
        };
        reality_spec.strategy()?;
        if self.rounds == 0 {
            return Err(CliError::Config("rounds must be at least 1".into()));
        }
        let forecaster = self.forecaster.config();
        forecaster
            .validate()
            .map_err(|e| CliError::Config(format!("forecaster config: {e}")))?;
        Ok(ResolvedRun {
            game,
            learner: self.learner.kind(),
            kappa,
            experts,
            reality_spec,
            rounds: self.rounds,
            engine: EngineConfig {
                forecaster,
                check_bound: self.monitors.bound,
                check_supermartingale: self.monitors.supermartingale,
                continue_on_violation: self.monitors.continue_on_violation,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(learner: &str, expert: &str, kappa: Option<f64>) -> String {
        let kappa_field = kappa.map_or(String::new(), |k| format!("\"kappa\": {k},"));
        format!(
            r#"{{
                "schema": 1,
                "game": {{"kind": "quadratic"}},
                "learner": "{learner}",
                {kappa_field}
                "experts": [{expert}],
                "reality": {{"kind": "bernoulli", "theta": 0.5, "seed": 42}},
                "rounds": 10
            }}"#
        )
    }

    #[test]
    fn parses_and_resolves_minimal_config() {
        let cfg =
            RunConfig::parse(&minimal("defensive", r#"{"kind": "constant", "value": 0.3}"#, None))
                .unwrap();
        let run = cfg.resolve(Path::new(".")).unwrap();
        assert_eq!(run.kappa, 2.0); // defaults to game.eta
        assert_eq!(run.rounds, 10);
    }

    #[test]
    fn kappa_above_eta_is_a_config_error() {
        let cfg = RunConfig::parse(&minimal(
            "defensive",
            r#"{"kind": "constant", "value": 0.3}"#,
            Some(3.0),
        ))
        .unwrap();
        let err = cfg.resolve(Path::new(".")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("kappa too large"));
    }

    #[test]
    fn aa_with_second_guesser_is_a_config_error() {
        let cfg = RunConfig::parse(&minimal(
            "aa",
            r#"{"kind": "decategorizer", "slope": 0.5}"#,
            None,
        ))
        .unwrap();
        let err = cfg.resolve(Path::new(".")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("AA requires constant advice"));
    }

    #[test]
    fn tabulated_game_spec_round_trip() {
        let spec = GameSpec {
            name: Some("toy".into()),
            kind: GameKindSpec::Tabulated,
            eta: Some(1.5),
            grid: Some(vec![[0.0, 0.0, 1.0], [0.5, 0.25, 0.25], [1.0, 1.0, 0.0]]),
        };
        let game = spec.build().unwrap();
        assert_eq!(game.name(), "toy");
        assert_eq!(game.eta(), 1.5);
        let bad = GameSpec {
            grid: Some(vec![[0.0, 0.0, 1.0], [0.7, 0.25, 0.25], [1.0, 1.0, 0.0]]),
            ..spec
        };
        assert!(bad.build().is_err());
    }

    #[test]
    fn builtin_eta_override_rejected() {
        let spec = GameSpec {
            name: None,
            kind: GameKindSpec::Quadratic,
            eta: Some(1.7),
            grid: None,
        };
        assert!(spec.build().is_err());
    }

    #[test]
    fn replica_seeding_only_touches_seeded_kinds() {
        let b = RealitySpec::Bernoulli { theta: 0.5, seed: 7 };
        match b.with_seed_offset(3) {
            RealitySpec::Bernoulli { seed, .. } => assert_eq!(seed, 10),
            _ => unreachable!(),
        }
        let a = RealitySpec::AdversarialMaxLoss;
        assert!(matches!(
            a.with_seed_offset(3),
            RealitySpec::AdversarialMaxLoss
        ));
    }
}
