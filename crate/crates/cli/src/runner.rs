//! The three commands behind the `defensor` binary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use defensor_core::engine::{self, EngineError, Trace};
use defensor_core::games::check_one_step_inequality;

use crate::config::{RealitySpec, RunConfig};
use crate::formats;
use crate::CliError;

/// Forecaster flags that override the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct ForecasterOverrides {
    pub bisect_tol: Option<f64>,
    pub t_tol: Option<f64>,
    pub max_iter: Option<u32>,
}

/// `defensor run <config.json> [--out DIR] [--replicas R]`
///
/// Exit 0 on a bound-respecting completion, 2 when a monitor fires (trace
/// and summary files are still written), 1 on config/IO errors.
pub fn cmd_run(
    config_path: &Path,
    out_dir: Option<&Path>,
    replicas: u64,
    overrides: &ForecasterOverrides,
) -> Result<(), CliError> {
    if replicas == 0 {
        return Err(CliError::Config("replicas must be at least 1".into()));
    }
    let text = std::fs::read_to_string(config_path)
        .map_err(CliError::io(format!("reading {}", config_path.display())))?;
    let mut config = RunConfig::parse(&text)?;
    if let Some(v) = overrides.bisect_tol {
        config.forecaster.bisect_tol = v;
    }
    if let Some(v) = overrides.t_tol {
        config.forecaster.t_tol = v;
    }
    if let Some(v) = overrides.max_iter {
        config.forecaster.max_iter = v;
    }
    let base_dir = config_path.parent().unwrap_or_else(|| Path::new("."));
    // validate before spawning any replica
    config.resolve(base_dir)?;

    let out_dir: PathBuf = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("defensor-out"));

    let results: Vec<Result<ReplicaReport, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..replicas)
            .map(|r| {
                let config = &config;
                let out_dir = &out_dir;
                scope.spawn(move || run_replica(config, base_dir, out_dir, r, replicas))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("replica thread panicked"))
            .collect()
    });

    let mut rows = Vec::new();
    let mut failure: Option<CliError> = None;
    for result in results {
        match result {
            Ok(report) => {
                if report.violated && failure.is_none() {
                    failure = Some(CliError::Runtime(format!(
                        "monitor violation in replica {}; see {}",
                        report.replica,
                        out_dir.display()
                    )));
                }
                rows.push(report.summary);
            }
            Err(e) => {
                if failure.is_none() {
                    failure = Some(e);
                }
            }
        }
    }
    formats::atomic_write(
        &out_dir.join("summary.json"),
        serde_json::to_string_pretty(&json!({ "replicas": rows }))
            .expect("summary serializes")
            .as_bytes(),
    )?;
    log::info!("wrote {}", out_dir.join("summary.json").display());
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

struct ReplicaReport {
    replica: u64,
    violated: bool,
    summary: serde_json::Value,
}

fn run_replica(
    config: &RunConfig,
    base_dir: &Path,
    out_dir: &Path,
    replica: u64,
    replicas: u64,
) -> Result<ReplicaReport, CliError> {
    let resolved = config.resolve(base_dir)?;
    let reality_spec: RealitySpec = resolved.reality_spec.with_seed_offset(replica);
    let mut reality = reality_spec.strategy()?;

    let started = Instant::now();
    let outcome = engine::run(
        &resolved.game,
        resolved.learner,
        resolved.kappa,
        &resolved.experts,
        &mut reality,
        resolved.rounds,
        &resolved.engine,
    );
    let elapsed = started.elapsed().as_secs_f64();

    let (mut trace, violated, abort_reason) = match outcome {
        Ok(trace) => {
            let violated = !trace.violations.is_empty();
            (trace, violated, None)
        }
        Err(EngineError::MonitorViolation { diagnostic, trace }) => {
            (*trace, true, Some(format!("{diagnostic:?}")))
        }
        Err(EngineError::Forecast { round, source }) => {
            return Err(CliError::Runtime(format!(
                "forecaster failed at round {round}: {source}"
            )))
        }
        Err(other) => return Err(CliError::Config(other.to_string())),
    };
    trace.meta.runtime_seconds = Some(elapsed);

    let suffix = if replicas > 1 {
        format!("_r{replica}")
    } else {
        String::new()
    };
    write_trace_files(&trace, out_dir, &suffix)?;

    let summary = json!({
        "replica": replica,
        "learner": trace.meta.learner.as_str(),
        "game": trace.meta.game_name,
        "kappa": trace.meta.kappa,
        "experts": trace.meta.num_experts,
        "rounds": trace.meta.rounds,
        "reality": reality_spec,
        "final_regret": formats::json_real(trace.final_regret()),
        "max_regret": formats::json_real(trace.max_regret()),
        "bound_constant": (trace.meta.num_experts as f64).ln() / trace.meta.kappa,
        "min_bound_slack": formats::json_real(trace.min_bound_slack()),
        "max_supermartingale_growth": formats::json_real(trace.max_supermartingale_growth()),
        "violations": trace.violations.len(),
        "abort": abort_reason,
        "runtime_seconds": elapsed,
    });
    Ok(ReplicaReport {
        replica,
        violated,
        summary,
    })
}

fn write_trace_files(trace: &Trace, out_dir: &Path, suffix: &str) -> Result<(), CliError> {
    formats::atomic_write(
        &out_dir.join(format!("trace{suffix}.csv")),
        formats::trace_csv(trace).as_bytes(),
    )?;
    formats::atomic_write(
        &out_dir.join(format!("trace{suffix}.jsonl")),
        formats::trace_jsonl(trace).as_bytes(),
    )?;
    formats::atomic_write(
        &out_dir.join(format!("checkpoint{suffix}.json")),
        formats::checkpoint_json(&trace.final_state).as_bytes(),
    )?;
    Ok(())
}

/// `defensor verify --game G --kappa K [--grid N]`
///
/// Exit 0 when the one-step inequality holds, 3 on a violation.
pub fn cmd_verify(game_arg: &str, kappa: f64, grid: usize) -> Result<(), CliError> {
    let game = match game_arg {
        "quadratic" => defensor_core::Game::quadratic(),
        "log" => defensor_core::Game::log_loss(),
        path => formats::load_game(Path::new(path))?,
    };
    let report = check_one_step_inequality(&game, kappa, grid)
        .map_err(|e| CliError::Config(e.to_string()))?;
    println!(
        "one-step inequality: game={} kappa={kappa} grid={grid}",
        game.name()
    );
    println!("holds: {}", report.holds);
    println!("worst_slack: {}", formats::fmt_f64(report.worst_slack));
    println!(
        "worst_point: p={} g={}",
        formats::fmt_f64(report.worst_point.0),
        formats::fmt_f64(report.worst_point.1)
    );
    if report.holds {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "inequality violated: worst slack {} at (p={}, g={})",
            report.worst_slack, report.worst_point.0, report.worst_point.1
        )))
    }
}

/// `defensor ingest <file.csv> --out <spec.json>`
pub fn cmd_ingest(input: &Path, out: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(input)
        .map_err(CliError::io(format!("reading {}", input.display())))?;
    let outcomes = formats::parse_outcomes(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
    let spec = RealitySpec::FixedSequence {
        outcomes: outcomes.iter().map(|o| o.as_u8()).collect(),
    };
    formats::atomic_write(
        out,
        serde_json::to_string_pretty(&spec)
            .expect("spec serializes")
            .as_bytes(),
    )?;
    println!("wrote {} ({} outcomes)", out.display(), outcomes.len());
    Ok(())
}
