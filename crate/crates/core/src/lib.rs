//! Defensive forecasting for prediction with expert advice on binary outcomes.
//!
//! The learner plays the standard protocol: each round, `K` experts announce
//! advice, the learner announces a probability `p ∈ [0,1]`, reality announces
//! an outcome `ω ∈ {0,1}`, and everyone is charged by a loss function
//! `λ(ω, ·)`. Experts here may *second-guess*: their advice is a continuous
//! map `γ: [0,1] → [0,1]` of the learner's own prediction.
//!
//! The learner's strategy is to pick `p` so that a chosen exponential
//! supermartingale
//!
//! ```text
//! S_N = Σ_k exp( κ Σ_{n≤N} ( λ(ω_n, p_n) − λ(ω_n, γ_n^k(p_n)) ) )
//! ```
//!
//! cannot grow. Since `S_0 = K`, this forces the regret bound
//! `L_N ≤ min_k L_N^k + ln K / κ` at every round, for every opponent.
//! The valid range of `κ` depends on the game: `κ ∈ [0,2]` for quadratic
//! loss, `κ ∈ [0,1]` for log loss, and `κ ∈ [0,η]` for any η-mixable game
//! in standard form.
//!
//! Crate layout:
//!
//! * [`games`] — loss functions in standard form, standardization of raw
//!   decision sets, and numeric mixability certification;
//! * [`martingale`] — the weight state `d_k = κ(L − L^k)` in log space and
//!   the one-step increment `t(ω, p)`;
//! * [`forecaster`] — the defensive forecasting rule (bisection on
//!   `t(1,p) − t(0,p)`) and an Aggregating Algorithm baseline;
//! * [`agents`] — expert and reality strategies for experiments, including
//!   second-guessing experts;
//! * [`engine`] — the protocol loop with per-round bound and supermartingale
//!   monitors, producing a [`engine::Trace`].
//!
//! The crate is `no_std`-compatible (`alloc` required): disable default
//! features and enable `libm`.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("defensor-core requires either the `std` or the `libm` feature");

extern crate alloc;

pub mod agents;
pub mod engine;
pub mod forecaster;
pub mod games;
pub mod martingale;
pub(crate) mod math;

pub use games::{DecisionSet, Game, Outcome};
pub use martingale::{Advice, WeightState};
