//! Acceptance suite: the regret bounds, the one-step inequalities, the
//! auxiliary inequalities, eta-star recovery, second-guessing robustness,
//! the brute-force oracle for the forecaster, and the AA baseline.
//!
//! Each criterion prints one pass line (visible with `--nocapture`):
//!
//! ```text
//! cargo test -p defensor --test acceptance -- --nocapture
//! ```

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use defensor_core::agents::{ExpertStrategy, RealityStrategy};
use defensor_core::engine::{run, EngineConfig, LearnerKind};
use defensor_core::forecaster::{defensive_forecast, ForecasterConfig};
use defensor_core::games::{
    check_one_step_inequality, estimate_eta_star, standardize, DecisionSet, Game,
};
use defensor_core::martingale::{Advice, WeightState};
use defensor_core::Outcome;

const SEEDS_PER_CELL: u64 = 20;

#[derive(Debug, Clone)]
struct RunStats {
    matrix: &'static str,
    learner: LearnerKind,
    num_experts: usize,
    bound: f64,
    max_regret: f64,
    max_growth: f64,
}

#[derive(Debug)]
struct MatrixResults {
    stats: Vec<RunStats>,
    quadratic_seconds: f64,
    log_seconds: f64,
    tabulated_seconds: f64,
}

fn quadratic_decisions(n: usize) -> DecisionSet {
    DecisionSet::new(
        (0..n)
            .map(|i| {
                let g = i as f64 / (n - 1) as f64;
                (g * g, (g - 1.0) * (g - 1.0))
            })
            .collect(),
    )
    .unwrap()
}

fn capped_log_decisions(n: usize, cap: f64) -> DecisionSet {
    DecisionSet::new(
        (0..n)
            .map(|i| {
                let g = i as f64 / (n - 1) as f64;
                let x = if g >= 1.0 { cap } else { (-(1.0 - g).ln()).min(cap) };
                let y = if g <= 0.0 { cap } else { (-g.ln()).min(cap) };
                (x, y)
            })
            .collect(),
    )
    .unwrap()
}

/// The eta = 1.5 tabulated game standardized from dense quadratic samples.
fn tabulated_game() -> &'static Game {
    static GAME: OnceLock<Game> = OnceLock::new();
    GAME.get_or_init(|| standardize(&quadratic_decisions(100_001), 1.5, 1025).unwrap())
}

type RealityMaker = fn(u64) -> RealityStrategy;

fn realities() -> [(&'static str, RealityMaker); 2] {
    [
        ("bernoulli", |seed| RealityStrategy::bernoulli(0.5, seed)),
        ("adversarial_max_regret", |_| {
            RealityStrategy::AdversarialMaxRegret
        }),
    ]
}

/// One run of a bound matrix cell; returns (max regret, max S growth).
fn run_cell(
    game: &Game,
    learner: LearnerKind,
    kappa: f64,
    experts: &[ExpertStrategy],
    mut reality: RealityStrategy,
    rounds: u64,
) -> (f64, f64) {
    let trace = run(
        game,
        learner,
        kappa,
        experts,
        &mut reality,
        rounds,
        &EngineConfig::default(),
    )
    .expect("matrix runs respect the bound");
    assert!(trace.violations.is_empty());
    (trace.max_regret(), trace.max_supermartingale_growth())
}

fn random_constants(rng: &mut ChaCha8Rng, k: usize) -> Vec<ExpertStrategy> {
    (0..k)
        .map(|_| ExpertStrategy::Constant(rng.random_range(0.0..=1.0)))
        .collect()
}

/// Criteria 1–3 (and 10, when `learner` is the AA): the full bound matrix.
/// The AA matrix keeps every expert a plain constant (criterion 10 is
/// about constant-expert configs); the defensive log matrix swaps in one
/// endpoint-hitting expert to exercise infinite losses.
fn run_matrices(learner: LearnerKind) -> MatrixResults {
    let boundary_expert = learner == LearnerKind::Defensive;
    let mut jobs: Vec<(&'static str, usize, u64, usize, u64)> = Vec::new();
    // (matrix, K, rounds, reality index, seed)
    for &k in &[2usize, 10, 100] {
        for reality_idx in 0..2 {
            for seed in 0..SEEDS_PER_CELL {
                jobs.push(("quadratic", k, 10_000, reality_idx, seed));
                jobs.push(("log", k, 10_000, reality_idx, seed));
            }
        }
    }
    for reality_idx in 0..2 {
        for seed in 0..5 {
            jobs.push(("tabulated", 10, 5_000, reality_idx, seed));
        }
    }

    let quadratic_clock = Instant::now();
    let stats: Vec<RunStats> = jobs
        .par_iter()
        .map(|&(matrix, k, rounds, reality_idx, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed ^ (k as u64) << 20 ^ (reality_idx as u64) << 40,
            );
            let mut experts = random_constants(&mut rng, k);
            let (game, kappa) = match matrix {
                "quadratic" => (Game::quadratic(), 2.0),
                "log" => {
                    if boundary_expert {
                        // one expert hits the endpoints to exercise infinite losses
                        experts[0] =
                            ExpertStrategy::FixedSequence(vec![0.0, 0.37, 1.0, 0.52, 0.8]);
                    }
                    (Game::log_loss(), 1.0)
                }
                "tabulated" => (tabulated_game().clone(), 1.5),
                _ => unreachable!(),
            };
            let reality = realities()[reality_idx].1(seed.wrapping_mul(7919).wrapping_add(1));
            let (max_regret, max_growth) =
                run_cell(&game, learner, kappa, &experts, reality, rounds);
            let allowance = if matrix == "tabulated" { 1e-4 } else { 1e-6 };
            RunStats {
                matrix,
                learner,
                num_experts: k,
                bound: (k as f64).ln() / kappa + allowance,
                max_regret,
                max_growth,
            }
        })
        .collect();
    // one wall clock for all three matrices; attribute by round share
    let total = quadratic_clock.elapsed().as_secs_f64();
    let weight = |m: &str| -> f64 {
        stats
            .iter()
            .filter(|s| s.matrix == m)
            .map(|s| s.num_experts as f64)
            .sum()
    };
    let denom = weight("quadratic") + weight("log") + weight("tabulated");
    MatrixResults {
        quadratic_seconds: total * weight("quadratic") / denom,
        log_seconds: total * weight("log") / denom,
        tabulated_seconds: total * weight("tabulated") / denom,
        stats,
    }
}

fn defensive_matrices() -> &'static MatrixResults {
    static RESULTS: OnceLock<MatrixResults> = OnceLock::new();
    RESULTS.get_or_init(|| run_matrices(LearnerKind::Defensive))
}

fn aa_matrices() -> &'static MatrixResults {
    static RESULTS: OnceLock<MatrixResults> = OnceLock::new();
    RESULTS.get_or_init(|| run_matrices(LearnerKind::AggregatingAlgorithm))
}

fn assert_matrix_bound(results: &MatrixResults, matrix: &str) -> (f64, f64) {
    let mut worst_margin = f64::INFINITY;
    let mut worst_regret = f64::NEG_INFINITY;
    let mut runs = 0;
    for s in results.stats.iter().filter(|s| s.matrix == matrix) {
        runs += 1;
        worst_regret = worst_regret.max(s.max_regret);
        worst_margin = worst_margin.min(s.bound - s.max_regret);
        assert!(
            s.max_regret <= s.bound,
            "{matrix} K={} ({:?}): max regret {} exceeds bound {}",
            s.num_experts,
            s.learner,
            s.max_regret,
            s.bound
        );
    }
    assert!(runs > 0, "matrix {matrix} produced no runs");
    (worst_regret, worst_margin)
}

#[test]
fn criterion_01_quadratic_bound_matrix() {
    let results = defensive_matrices();
    let (worst, margin) = assert_matrix_bound(results, "quadratic");
    println!(
        "[acceptance] criterion 1 (quadratic regret bound ln(K)/2, kappa=2, K in {{2,10,100}}, N=10000, 20 seeds x 2 realities): PASS \
         (worst regret {worst:.6}, min margin {margin:.2e}, ~{:.1}s)",
        results.quadratic_seconds
    );
}

#[test]
fn criterion_02_log_bound_matrix() {
    let results = defensive_matrices();
    let (worst, margin) = assert_matrix_bound(results, "log");
    println!(
        "[acceptance] criterion 2 (log-loss regret bound ln(K), kappa=1, boundary expert included): PASS \
         (worst regret {worst:.6}, min margin {margin:.2e}, ~{:.1}s)",
        results.log_seconds
    );
}

#[test]
fn criterion_03_tabulated_bound_matrix() {
    let results = defensive_matrices();
    let (worst, margin) = assert_matrix_bound(results, "tabulated");
    println!(
        "[acceptance] criterion 3 (mixable-game regret bound ln(K)/eta, standardized eta=1.5 game, K=10, N=5000): PASS \
         (worst regret {worst:.6} vs ln(10)/1.5 = {:.6}, min margin {margin:.2e}, ~{:.1}s)",
        10f64.ln() / 1.5,
        results.tabulated_seconds
    );
}

#[test]
fn criterion_04_supermartingale_monotone_every_round() {
    // S_0 = K exactly
    for k in [2usize, 10, 100] {
        let s0 = WeightState::initial(1.0, k).unwrap().supermartingale_value();
        assert_eq!(s0, k as f64, "S_0 must equal K exactly");
    }
    let results = defensive_matrices();
    let mut worst = f64::NEG_INFINITY;
    for s in &results.stats {
        worst = worst.max(s.max_growth);
        assert!(
            s.max_growth <= 1e-9,
            "{} K={}: supermartingale grew by {}",
            s.matrix,
            s.num_experts,
            s.max_growth
        );
    }
    println!(
        "[acceptance] criterion 4 (supermartingale monotonicity: S_n nonincreasing within 1e-9 on all {} defensive runs, S_0 = K): PASS \
         (worst growth {worst:.2e})",
        results.stats.len()
    );
}

#[test]
fn criterion_05_one_step_inequalities() {
    let clock = Instant::now();
    let mut lines = Vec::new();
    for (game, kappas) in [
        (Game::quadratic(), vec![0.5, 1.0, 2.0]),
        (Game::log_loss(), vec![0.5, 1.0]),
        (tabulated_game().clone(), vec![1.5]),
    ] {
        for kappa in kappas {
            let report = check_one_step_inequality(&game, kappa, 512).unwrap();
            assert!(
                report.holds,
                "{} at kappa={kappa}: worst slack {}",
                game.name(),
                report.worst_slack
            );
            lines.push(format!("{}@{kappa}: {:.1e}", game.name(), report.worst_slack));
        }
    }
    let broken = check_one_step_inequality(&Game::quadratic(), 2.5, 512).unwrap();
    assert!(!broken.holds, "quadratic at 2.5 must fail");
    assert!(
        broken.worst_slack > 1e-3,
        "violation too small: {}",
        broken.worst_slack
    );
    let elapsed = clock.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 5 took {elapsed:.1}s (budget 10s)");
    println!(
        "[acceptance] criterion 5 (one-step inequalities on 512-grid; quadratic kappa=2.5 fails with slack {:.2e}): PASS \
         (slacks: {}; {elapsed:.2}s)",
        broken.worst_slack,
        lines.join(", ")
    );
}

#[test]
fn criterion_06_auxiliary_inequalities() {
    // Hoeffding: p e^{h(1-p)} + (1-p) e^{-hp} <= e^{h^2/8}
    let mut hoeffding_worst = f64::NEG_INFINITY;
    for i in 0..=400 {
        let p = i as f64 / 400.0;
        for j in 0..=800 {
            let h = -20.0 + 40.0 * j as f64 / 800.0;
            let lhs = p * (h * (1.0 - p)).exp() + (1.0 - p) * (-h * p).exp();
            hoeffding_worst = hoeffding_worst.max(lhs - (h * h / 8.0).exp());
        }
    }
    assert!(hoeffding_worst <= 1e-12, "Hoeffding excess {hoeffding_worst}");

    // geometric-arithmetic: p^{1-k} g^k + (1-p)^{1-k} (1-g)^k <= 1
    let mut geo_worst = f64::NEG_INFINITY;
    for k in 0..=10 {
        let kappa = k as f64 / 10.0;
        for i in 0..=400 {
            let p = i as f64 / 400.0;
            for j in 0..=400 {
                let g = j as f64 / 400.0;
                let lhs = p.powf(1.0 - kappa) * g.powf(kappa)
                    + (1.0 - p).powf(1.0 - kappa) * (1.0 - g).powf(kappa);
                geo_worst = geo_worst.max(lhs - 1.0);
            }
        }
    }
    assert!(geo_worst <= 1e-12, "geometric-mean excess {geo_worst}");
    println!(
        "[acceptance] criterion 6 (Hoeffding and geometric-mean inequalities to 1e-12): PASS \
         (excesses {hoeffding_worst:.2e}, {geo_worst:.2e})"
    );
}

#[test]
fn criterion_07_eta_star_recovery() {
    let clock = Instant::now();
    let quad = estimate_eta_star(&quadratic_decisions(20_001), 0.005).unwrap();
    assert!(
        (quad - 2.0).abs() <= 0.01,
        "quadratic eta* = {quad}, expected 2 +- 0.01"
    );
    let logc = estimate_eta_star(&capped_log_decisions(20_001, 30.0), 0.005).unwrap();
    assert!(
        (logc - 1.0).abs() <= 0.01,
        "capped-log eta* = {logc}, expected 1 +- 0.01"
    );
    let elapsed = clock.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "criterion 7 took {elapsed:.1}s (budget 60s)");
    println!(
        "[acceptance] criterion 7 (eta* recovery: quadratic {quad:.4}, capped-log {logc:.4}): PASS ({elapsed:.2}s)"
    );
}

#[test]
fn criterion_08_second_guessing_robustness() {
    let game = Game::quadratic();
    let experts = [
        ExpertStrategy::Constant(0.35),
        ExpertStrategy::Constant(0.65),
        ExpertStrategy::Decategorizer { slope: 0.8 },
        ExpertStrategy::InternalRegretPair {
            trigger: 0.3,
            replacement: 0.7,
            radius: 0.05,
            width: 0.01,
        },
        ExpertStrategy::InternalRegretPair {
            trigger: 0.8,
            replacement: 0.2,
            radius: 0.05,
            width: 0.01,
        },
    ];
    let bound = 5f64.ln() / 2.0 + 1e-6;
    let mut worst = f64::NEG_INFINITY;
    for reality in [
        RealityStrategy::AdversarialMaxRegret,
        RealityStrategy::AdversarialMaxLoss,
    ] {
        let (max_regret, max_growth) = run_cell(
            &game,
            LearnerKind::Defensive,
            2.0,
            &experts,
            reality,
            5_000,
        );
        assert!(
            max_regret <= bound,
            "second-guessing run broke the bound: {max_regret} > {bound}"
        );
        assert!(max_growth <= 1e-9);
        worst = worst.max(max_regret);
    }
    println!(
        "[acceptance] criterion 8 (second-guessing experts, adversarial reality, K=5, N=5000): PASS \
         (worst regret {worst:.6} vs bound {bound:.6})"
    );
}

const ORACLE_GRID: usize = 1_000_000;

/// λ(ω, i/GRID) for the two built-in games, shared across oracle cases.
fn oracle_loss_tables() -> &'static [[Vec<f64>; 2]; 2] {
    static TABLES: OnceLock<[[Vec<f64>; 2]; 2]> = OnceLock::new();
    TABLES.get_or_init(|| {
        let build = |game: &Game| -> [Vec<f64>; 2] {
            let mut l0 = Vec::with_capacity(ORACLE_GRID + 1);
            let mut l1 = Vec::with_capacity(ORACLE_GRID + 1);
            for i in 0..=ORACLE_GRID {
                let p = i as f64 / ORACLE_GRID as f64;
                l0.push(game.loss(Outcome::Zero, p));
                l1.push(game.loss(Outcome::One, p));
            }
            [l0, l1]
        };
        [build(&Game::quadratic()), build(&Game::log_loss())]
    })
}

#[test]
fn criterion_09_oracle_equivalence_small_instances() {
    let clock = Instant::now();
    let cfg = ForecasterConfig::default();
    let cases: Vec<u64> = (0..1000).collect();
    let mismatches: Vec<String> = cases
        .par_iter()
        .filter_map(|&case| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xACCE97 + case);
            let k = rng.random_range(1..=4usize);
            let (game, table, kappa) = if case % 2 == 0 {
                (
                    Game::quadratic(),
                    &oracle_loss_tables()[0],
                    rng.random_range(0.5..=2.0f64),
                )
            } else {
                (
                    Game::log_loss(),
                    &oracle_loss_tables()[1],
                    rng.random_range(0.3..=1.0f64),
                )
            };
            let learner_loss = rng.random_range(0.0..2.0f64);
            let expert_losses: Vec<f64> =
                (0..k).map(|_| rng.random_range(0.0..4.0f64)).collect();
            let advice: Vec<f64> = (0..k).map(|_| rng.random_range(0.02..=0.98f64)).collect();
            let state =
                WeightState::from_losses(kappa, learner_loss, expert_losses, 1).unwrap();

            // per-expert constants of the definition
            // t(ω,p) = Σ_k e^{d_k} (e^{κλ(ω,p)} e^{−κλ(ω,γ_k)} − 1)
            let weight_exp: Vec<f64> =
                state.log_weights().iter().map(|&d| d.exp()).collect();
            let advice_factor: [Vec<f64>; 2] = [0, 1].map(|w| {
                advice
                    .iter()
                    .map(|&g| {
                        (-kappa * game.loss(if w == 0 { Outcome::Zero } else { Outcome::One }, g))
                            .exp()
                    })
                    .collect()
            });

            // brute-force scan of max(t0, t1)
            let mut best_p = 0.0;
            let mut best_val = f64::INFINITY;
            for (i, (&loss0, &loss1)) in table[0].iter().zip(&table[1]).enumerate() {
                let mut worst_t = f64::NEG_INFINITY;
                for (w, &lp) in [loss0, loss1].iter().enumerate() {
                    let grown = (kappa * lp).exp();
                    let mut t = 0.0;
                    for j in 0..k {
                        t += weight_exp[j] * (grown * advice_factor[w][j] - 1.0);
                    }
                    worst_t = worst_t.max(t);
                }
                if worst_t < best_val {
                    best_val = worst_t;
                    best_p = i as f64 / ORACLE_GRID as f64;
                }
            }
            if best_val > 0.0 {
                return None; // grid missed the feasible point; not comparable
            }
            let p = defensive_forecast(&state, &Advice::constants(&advice), &game, &cfg)
                .expect("forecast succeeds");
            if (p - best_p).abs() > 1e-6 {
                Some(format!(
                    "case {case}: bisection {p} vs oracle {best_p} (game {}, kappa {kappa})",
                    game.name()
                ))
            } else {
                None
            }
        })
        .collect();
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
    let elapsed = clock.elapsed().as_secs_f64();
    println!(
        "[acceptance] criterion 9 (1000 random triples agree with the 10^6-grid oracle within 1e-6): PASS ({elapsed:.1}s)"
    );
}

#[test]
fn criterion_10_aa_baseline_bounds() {
    let results = aa_matrices();
    let (q, qm) = assert_matrix_bound(results, "quadratic");
    let (l, lm) = assert_matrix_bound(results, "log");
    let (t, tm) = assert_matrix_bound(results, "tabulated");
    println!(
        "[acceptance] criterion 10 (AA baseline on the constant-expert matrices): PASS \
         (worst regrets: quadratic {q:.6} margin {qm:.1e}, log {l:.6} margin {lm:.1e}, tabulated {t:.6} margin {tm:.1e})"
    );
}
