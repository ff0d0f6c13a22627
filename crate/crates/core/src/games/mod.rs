//! Binary prediction games in standard form.
//!
//! A game is a pair of loss evaluators `λ(0,·)`, `λ(1,·)` on the prediction
//! interval `[0,1]` together with a certified learning rate `η`. In standard
//! form `λ(0,·)` is nondecreasing, `λ(1,·)` is nonincreasing, and for each
//! `p` the pair `(λ(0,p), λ(1,p))` minimizes `p·y + (1−p)·x` over the
//! superprediction set — i.e. the loss function is a proper scoring rule.
//!
//! Built-ins:
//!
//! * [`Game::quadratic`] — `λ(ω,p) = (p−ω)²`, mixable up to `η = 2`;
//! * [`Game::log_loss`] — `λ(1,p) = −ln p`, `λ(0,p) = −ln(1−p)`, mixable up
//!   to `η = 1` (takes the value `+∞` at the endpoints);
//! * tabulated games produced by [`standardize`] from a raw
//!   [`DecisionSet`], stored as exp-coordinates `e^{−ηλ}` on a uniform grid
//!   with shape-preserving cubic interpolation.

mod interp;
mod mixability;
mod standardize;

pub use mixability::{check_one_step_inequality, estimate_eta_star, OneStepReport};
pub use standardize::standardize;

use alloc::string::String;
use alloc::vec::Vec;

use crate::math;
use interp::MonotoneCubic;

/// A binary outcome `ω ∈ {0,1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Zero,
    One,
}

impl Outcome {
    #[inline]
    pub fn as_f64(self) -> f64 {
        match self {
            Outcome::Zero => 0.0,
            Outcome::One => 1.0,
        }
    }

    #[inline]
    pub fn as_u8(self) -> u8 {
        match self {
            Outcome::Zero => 0,
            Outcome::One => 1,
        }
    }

    pub fn from_u8(value: u8) -> Option<Self> {
        match value {
            0 => Some(Outcome::Zero),
            1 => Some(Outcome::One),
            _ => None,
        }
    }
}

/// Errors from game construction and the mixability operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GameError {
    #[error("decision set must be nonempty")]
    EmptyDecisionSet,
    #[error("decision losses must be finite and nonnegative, got ({0}, {1})")]
    InvalidDecision(f64, f64),
    #[error("learning rate eta must be positive and finite, got {0}")]
    InvalidEta(f64),
    #[error("kappa must be positive and finite, got {0}")]
    InvalidKappa(f64),
    #[error("grid size must be at least 2, got {0}")]
    InvalidGrid(usize),
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("exp-coordinates underflow at eta = {eta} (loss {loss} too large)")]
    EtaOverflow { eta: f64, loss: f64 },
    #[error("tabulated grid: {0}")]
    InvalidTabulated(String),
    #[error("no eta in the search bracket is mixable")]
    NotMixable,
}

/// A finite set of raw decisions, each represented by its loss pair
/// `(λ(0,γ), λ(1,γ))`. Standardization closes the set under η-mixtures, so
/// the points act as generators of the game rather than as its entire
/// decision space.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSet {
    points: Vec<(f64, f64)>,
}

impl DecisionSet {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, GameError> {
        if points.is_empty() {
            return Err(GameError::EmptyDecisionSet);
        }
        for &(x, y) in &points {
            if !x.is_finite() || !y.is_finite() || x < 0.0 || y < 0.0 {
                return Err(GameError::InvalidDecision(x, y));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone)]
pub(crate) enum GameKind {
    Quadratic,
    Log,
    Tabulated(Tabulated),
}

/// A standard-form game tabulated on a uniform grid.
///
/// The grid stores exp-coordinates `u_i = e^{−η·λ(0,p_i)}` and
/// `v_i = e^{−η·λ(1,p_i)}` rather than the losses themselves: interpolation
/// in exp-space is exact on mixture segments (where `u` and `v` are linear
/// in `p`) and stays bounded near endpoint losses that grow without bound,
/// where loss-space interpolation would oscillate.
#[derive(Debug, Clone)]
pub(crate) struct Tabulated {
    eta: f64,
    u: MonotoneCubic,
    v: MonotoneCubic,
}

impl Tabulated {
    pub(crate) fn from_exp(eta: f64, u: Vec<f64>, v: Vec<f64>) -> Self {
        debug_assert_eq!(u.len(), v.len());
        Tabulated {
            eta,
            u: MonotoneCubic::new(u),
            v: MonotoneCubic::new(v),
        }
    }

    #[inline]
    fn loss(&self, omega: Outcome, p: f64) -> f64 {
        let w = match omega {
            Outcome::Zero => self.u.eval(p),
            Outcome::One => self.v.eval(p),
        };
        if w <= 0.0 {
            f64::INFINITY
        } else {
            -math::ln(w) / self.eta
        }
    }

    fn grid_len(&self) -> usize {
        self.u.len()
    }
}

/// A binary prediction game in standard form: loss evaluators on `[0,1]`
/// plus a certified mixability rate `η`.
#[derive(Debug, Clone)]
pub struct Game {
    kind: GameKind,
    eta: f64,
    name: String,
}

impl Game {
    /// The quadratic (Brier) game, `λ(ω,p) = (p−ω)²`, with `η = 2`.
    pub fn quadratic() -> Self {
        Game {
            kind: GameKind::Quadratic,
            eta: 2.0,
            name: String::from("quadratic"),
        }
    }

    /// The log-loss game, `λ(1,p) = −ln p`, `λ(0,p) = −ln(1−p)`, with
    /// `η = 1`. The losses take the value `+∞` at the wrong endpoint.
    pub fn log_loss() -> Self {
        Game {
            kind: GameKind::Log,
            eta: 1.0,
            name: String::from("log"),
        }
    }

    /// A tabulated standard-form game from loss values on a uniform grid
    /// over `[0,1]`. `grid[i]` is `(λ(0,p_i), λ(1,p_i))` at `p_i = i/(n−1)`.
    ///
    /// Requires at least two rows, finite nonnegative losses, `λ(0,·)`
    /// nondecreasing and `λ(1,·)` nonincreasing.
    pub fn tabulated(
        name: impl Into<String>,
        eta: f64,
        grid: &[(f64, f64)],
    ) -> Result<Self, GameError> {
        if !eta.is_finite() || eta <= 0.0 {
            return Err(GameError::InvalidEta(eta));
        }
        if grid.len() < 2 {
            return Err(GameError::InvalidGrid(grid.len()));
        }
        for (i, &(a, b)) in grid.iter().enumerate() {
            if !a.is_finite() || !b.is_finite() || a < 0.0 || b < 0.0 {
                return Err(GameError::InvalidTabulated(alloc::format!(
                    "row {i}: losses must be finite and nonnegative, got ({a}, {b})"
                )));
            }
            if i > 0 {
                let (pa, pb) = grid[i - 1];
                if a < pa || b > pb {
                    return Err(GameError::InvalidTabulated(alloc::format!(
                        "row {i}: loss0 must be nondecreasing and loss1 nonincreasing"
                    )));
                }
            }
        }
        let u: Vec<f64> = grid.iter().map(|&(a, _)| math::exp(-eta * a)).collect();
        let v: Vec<f64> = grid.iter().map(|&(_, b)| math::exp(-eta * b)).collect();
        if u.iter().chain(v.iter()).any(|&w| w <= 0.0) {
            let worst = grid
                .iter()
                .flat_map(|&(a, b)| [a, b])
                .fold(0.0f64, f64::max);
            return Err(GameError::EtaOverflow { eta, loss: worst });
        }
        Ok(Game {
            kind: GameKind::Tabulated(Tabulated::from_exp(eta, u, v)),
            eta,
            name: name.into(),
        })
    }

    pub(crate) fn from_tabulated(name: String, eta: f64, tab: Tabulated) -> Self {
        Game {
            kind: GameKind::Tabulated(tab),
            eta,
            name,
        }
    }

    /// The loss `λ(ω, p)`. `p` must lie in `[0,1]`; the result can be `+∞`
    /// (log game endpoints) but never `NaN`.
    #[inline]
    pub fn loss(&self, omega: Outcome, p: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&p), "prediction {p} outside [0,1]");
        match &self.kind {
            GameKind::Quadratic => {
                let d = p - omega.as_f64();
                d * d
            }
            GameKind::Log => match omega {
                Outcome::One => -math::ln(p),
                Outcome::Zero => -math::ln_1p(-p),
            },
            GameKind::Tabulated(t) => t.loss(omega, p),
        }
    }

    /// The certified mixability rate η of this game.
    #[inline]
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            GameKind::Quadratic => "quadratic",
            GameKind::Log => "log",
            GameKind::Tabulated(_) => "tabulated",
        }
    }

    /// For tabulated games, the stored grid as `(p, λ(0,p), λ(1,p))` rows.
    pub fn tabulated_grid(&self) -> Option<Vec<(f64, f64, f64)>> {
        match &self.kind {
            GameKind::Tabulated(t) => {
                let n = t.grid_len();
                Some(
                    (0..n)
                        .map(|i| {
                            let p = i as f64 / (n - 1) as f64;
                            (p, t.loss(Outcome::Zero, p), t.loss(Outcome::One, p))
                        })
                        .collect(),
                )
            }
            _ => None,
        }
    }
}
