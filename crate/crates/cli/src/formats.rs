//! On-disk formats: game documents, decision-set CSV, traces (CSV and
//! JSON-lines), weight-state checkpoints, and outcome ingestion.
//!
//! All writes go through a temp file and an atomic rename. Reals are
//! written with 17 significant digits so that doubles round-trip exactly;
//! infinities are spelled `inf` (CSV) / `"inf"` (JSON).

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use defensor_core::engine::Trace;
use defensor_core::games::{DecisionSet, Game, Outcome};
use defensor_core::martingale::WeightState;

use crate::config::{GameSpec, RealitySpec};
use crate::CliError;

/// 17 significant digits: lossless round-trip for f64.
pub fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64, CliError> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|e| CliError::Config(format!("bad real '{other}': {e}"))),
    }
}

/// JSON value for an extended real; infinities become `"inf"`/`"-inf"`.
pub fn json_real(x: f64) -> Value {
    if x.is_infinite() {
        json!(if x > 0.0 { "inf" } else { "-inf" })
    } else {
        json!(x)
    }
}

fn real_from_json(v: &Value) -> Result<f64, CliError> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| CliError::Config(format!("bad real {n}"))),
        Value::String(s) if s == "inf" => Ok(f64::INFINITY),
        Value::String(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        other => Err(CliError::Config(format!("expected a real, got {other}"))),
    }
}

pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let parent = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(parent).map_err(CliError::io(format!("creating {}", parent.display())))?;
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)
            .map_err(CliError::io(format!("creating {}", tmp.display())))?;
        f.write_all(contents)
            .map_err(CliError::io(format!("writing {}", tmp.display())))?;
        f.sync_all()
            .map_err(CliError::io(format!("syncing {}", tmp.display())))?;
    }
    fs::rename(&tmp, path).map_err(CliError::io(format!(
        "renaming {} to {}",
        tmp.display(),
        path.display()
    )))
}

pub fn load_game(path: &Path) -> Result<Game, CliError> {
    let text =
        fs::read_to_string(path).map_err(CliError::io(format!("reading {}", path.display())))?;
    let spec: GameSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("game file {}: {e}", path.display())))?;
    spec.build()
}

pub fn load_reality(path: &Path) -> Result<RealitySpec, CliError> {
    let text =
        fs::read_to_string(path).map_err(CliError::io(format!("reading {}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("reality file {}: {e}", path.display())))
}

/// Decision sets come as CSV with the exact header `loss0,loss1`.
pub fn load_decision_csv(path: &Path) -> Result<DecisionSet, CliError> {
    let text =
        fs::read_to_string(path).map_err(CliError::io(format!("reading {}", path.display())))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "loss0,loss1" => {}
        _ => {
            return Err(CliError::Config(format!(
                "{}: first line must be the header 'loss0,loss1'",
                path.display()
            )))
        }
    }
    let mut points = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (x, y) = match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), None) => (parse_f64(a)?, parse_f64(b)?),
            _ => {
                return Err(CliError::Config(format!(
                    "{}: line {}: expected two comma-separated losses",
                    path.display(),
                    idx + 1
                )))
            }
        };
        points.push((x, y));
    }
    DecisionSet::new(points).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Trace CSV: `n,p,omega,loss,L,S,slack,L_k_1..L_k_K`.
pub fn trace_csv(trace: &Trace) -> String {
    let k = trace.meta.num_experts;
    let mut out = String::with_capacity(trace.steps.len() * 64);
    out.push_str("n,p,omega,loss,L,S,slack");
    for i in 1..=k {
        out.push_str(&format!(",L_k_{i}"));
    }
    out.push('\n');
    for s in &trace.steps {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            s.round,
            fmt_f64(s.p),
            s.omega.as_u8(),
            fmt_f64(s.step_loss),
            fmt_f64(s.learner_loss),
            fmt_f64(s.supermartingale),
            fmt_f64(s.bound_slack),
        ));
        for l in &s.expert_losses {
            out.push(',');
            out.push_str(&fmt_f64(*l));
        }
        out.push('\n');
    }
    out
}

/// Trace JSON-lines: a meta object, then one object per round.
pub fn trace_jsonl(trace: &Trace) -> String {
    let mut out = String::new();
    let meta = json!({
        "meta": {
            "game": trace.meta.game_name,
            "game_kind": trace.meta.game_kind,
            "eta": trace.meta.eta,
            "learner": trace.meta.learner.as_str(),
            "kappa": trace.meta.kappa,
            "experts": trace.meta.expert_specs,
            "reality": trace.meta.reality_spec,
            "rounds": trace.meta.rounds,
            "runtime_seconds": trace.meta.runtime_seconds,
        }
    });
    out.push_str(&meta.to_string());
    out.push('\n');
    for s in &trace.steps {
        let row = json!({
            "n": s.round,
            "p": s.p,
            "omega": s.omega.as_u8(),
            "advice": s.advice,
            "loss": json_real(s.step_loss),
            "expert_step_losses": s.expert_step_losses.iter().map(|&x| json_real(x)).collect::<Vec<_>>(),
            "L": json_real(s.learner_loss),
            "L_k": s.expert_losses.iter().map(|&x| json_real(x)).collect::<Vec<_>>(),
            "S": json_real(s.supermartingale),
            "slack": json_real(s.bound_slack),
        });
        out.push_str(&row.to_string());
        out.push('\n');
    }
    out
}

/// Checkpoint: enough to resume the weight state.
pub fn checkpoint_json(state: &WeightState) -> String {
    let doc = json!({
        "kappa": state.kappa(),
        "round": state.round(),
        "learner_loss": json_real(state.learner_loss()),
        "expert_losses": state
            .expert_losses()
            .iter()
            .map(|&x| json_real(x))
            .collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&doc).expect("checkpoint serializes")
}

pub fn load_checkpoint(path: &Path) -> Result<WeightState, CliError> {
    let text =
        fs::read_to_string(path).map_err(CliError::io(format!("reading {}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("checkpoint {}: {e}", path.display())))?;
    let kappa = real_from_json(
        doc.get("kappa")
            .ok_or_else(|| CliError::Config("checkpoint: missing kappa".into()))?,
    )?;
    let round = doc
        .get("round")
        .and_then(Value::as_u64)
        .ok_or_else(|| CliError::Config("checkpoint: missing round".into()))?;
    let learner_loss = real_from_json(
        doc.get("learner_loss")
            .ok_or_else(|| CliError::Config("checkpoint: missing learner_loss".into()))?,
    )?;
    let expert_losses = doc
        .get("expert_losses")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::Config("checkpoint: missing expert_losses".into()))?
        .iter()
        .map(real_from_json)
        .collect::<Result<Vec<f64>, _>>()?;
    WeightState::from_losses(kappa, learner_loss, expert_losses, round)
        .map_err(|e| CliError::Config(format!("checkpoint {}: {e}", path.display())))
}

/// Parses a 0/1-per-line outcome file. A first line containing letters is
/// treated as a header. Errors cite 1-based line numbers.
pub fn parse_outcomes(text: &str) -> Result<Vec<Outcome>, CliError> {
    let mut outcomes = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 && line.chars().any(|c| c.is_alphabetic()) {
            continue; // optional header
        }
        match line {
            "0" => outcomes.push(Outcome::Zero),
            "1" => outcomes.push(Outcome::One),
            other => {
                return Err(CliError::Config(format!(
                    "line {}: expected 0 or 1, got '{other}'",
                    idx + 1
                )))
            }
        }
    }
    if outcomes.is_empty() {
        return Err(CliError::Config("no outcomes".into()));
    }
    Ok(outcomes)
}
