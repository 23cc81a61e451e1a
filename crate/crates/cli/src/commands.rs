use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use handoff_core::decision::{canonical_dataset, encode, gate, levels_of, table_oracle};
use handoff_core::export;
use handoff_core::neuralnet::{train, Vote};
use handoff_core::simulator::{link_traces, run_monte_carlo, sweep};
use handoff_core::{decision, Action, Error, Levels, NetworkWeights, TrafficIntensity};
use serde_json::json;

use crate::config::{Loaded, SEED_ENV};
use crate::{Command, Common};

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type Outcome = Result<(), Failure>;

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: error.into(),
    }
}

fn domain(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::TrainingDidNotConverge { .. } => domain(e),
            other => usage(other),
        }
    }
}

trait UsageContext<T> {
    fn usage_ctx(self, what: impl FnOnce() -> String) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> UsageContext<T> for Result<T, E> {
    fn usage_ctx(self, what: impl FnOnce() -> String) -> Result<T, Failure> {
        self.map_err(|e| usage(e.into().context(what())))
    }
}

pub fn run(common: &Common, command: Command) -> Outcome {
    let mut loaded = Loaded::from_path(common.config.as_deref()).map_err(usage)?;
    let env_seed = std::env::var(SEED_ENV).ok();
    loaded
        .apply_seed(common.seed, env_seed.as_deref())
        .map_err(usage)?;
    let mut cfg = loaded.config;

    match &command {
        Command::Train {
            max_epochs,
            learning_rate,
        } => {
            if let Some(n) = max_epochs {
                cfg.training.max_epochs = *n;
            }
            if let Some(r) = learning_rate {
                cfg.training.learning_rate = *r;
            }
        }
        Command::Simulate { runs, .. } | Command::Sweep { runs, .. } => {
            if let Some(n) = runs {
                cfg.scenario.n_runs = *n;
            }
        }
        Command::Verify | Command::Decide { .. } => {}
    }

    if common.dump_config {
        let text = cfg.effective().to_json().map_err(usage)?;
        return emit(&(text + "\n"));
    }

    match command {
        Command::Train { .. } => cmd_train(common, &cfg),
        Command::Verify => cmd_verify(common),
        Command::Decide {
            rss_s,
            rss_t,
            ti_s,
            ti_t,
        } => cmd_decide(common, &cfg, rss_s, rss_t, ti_s, ti_t),
        Command::Simulate {
            trace,
            signal_trace,
            estimate_trace,
            ..
        } => cmd_simulate(common, &cfg, trace, signal_trace, estimate_trace),
        Command::Sweep {
            hysteresis,
            threshold,
            ..
        } => cmd_sweep(common, &cfg, &hysteresis, &threshold),
    }
}

fn load_weights(common: &Common) -> Result<NetworkWeights, Failure> {
    let path = common
        .weights
        .as_deref()
        .ok_or_else(|| usage(anyhow!("--weights <path> is required")))?;
    NetworkWeights::load(path).usage_ctx(|| format!("loading weights {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .usage_ctx(|| format!("creating {}", path.display()))
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> Outcome {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(usage(e)),
        _ => Ok(()),
    }
}

/// `--out` file, or standard output.
fn output(common: &Common) -> Result<Box<dyn Write>, Failure> {
    Ok(match &common.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_train(common: &Common, cfg: &crate::config::ConfigFile) -> Outcome {
    let path = common
        .out
        .as_deref()
        .or(common.weights.as_deref())
        .ok_or_else(|| usage(anyhow!("train needs --out <weights.json>")))?;
    let outcome = train(&canonical_dataset(), &cfg.training)?;
    outcome
        .weights
        .save(path)
        .usage_ctx(|| format!("writing weights {}", path.display()))?;
    emit(&format!(
        "converged after {} epochs, max error {:.6}; weights written to {}\n",
        outcome.epochs_used,
        outcome.final_max_error,
        path.display()
    ))
}

fn cmd_verify(common: &Common) -> Outcome {
    let net = load_weights(common)?;
    let mut agree = 0;
    let mut report = String::from("rss_s rss_t ti_s ti_t table     network   y\n");
    for levels in Levels::all() {
        let y = net.forward(&encode(levels))?.y;
        let table = table_oracle(levels);
        let network = match Vote::of(y) {
            Vote::Positive => Action::Handoff,
            Vote::Negative => Action::NoHandoff,
        };
        if table == network {
            agree += 1;
        }
        report += &format!(
            "{:<5} {:<5} {:<4} {:<4} {:<9} {:<9} {:+.6}{}\n",
            levels.rss_serving.letter(),
            levels.rss_target.letter(),
            levels.ti_serving.letter(),
            levels.ti_target.letter(),
            table.to_string(),
            network.to_string(),
            y,
            if table == network { "" } else { "  MISMATCH" }
        );
    }
    report += &format!("agreement: {agree}/36\n");
    emit(&report)?;
    if agree == 36 {
        Ok(())
    } else {
        Err(domain(anyhow!(
            "network disagrees with the decision table on {} of 36 cells",
            36 - agree
        )))
    }
}

fn cmd_decide(
    common: &Common,
    cfg: &crate::config::ConfigFile,
    rss_s: f64,
    rss_t: f64,
    ti_s: f64,
    ti_t: f64,
) -> Outcome {
    let net = load_weights(common)?;
    cfg.decision.validate()?;
    let ti_s = TrafficIntensity::new(ti_s)?;
    let ti_t = TrafficIntensity::new(ti_t)?;
    let d = decision::decide(rss_s, rss_t, ti_s, ti_t, &net, &cfg.decision)?;
    let levels = levels_of(rss_s, rss_t, ti_s, ti_t, &cfg.decision);
    let y = net.forward(&encode(levels))?.y;
    let report = json!({
        "decision": d.action().to_string(),
        "provenance": d.provenance().to_string(),
        "gate_passed": gate(rss_s, rss_t, &cfg.decision),
        "levels": levels,
        "network_output": y,
    });
    emit(&(serde_json::to_string_pretty(&report).map_err(usage)? + "\n"))
}

fn cmd_simulate(
    common: &Common,
    cfg: &crate::config::ConfigFile,
    trace: Option<PathBuf>,
    signal_trace: Option<PathBuf>,
    estimate_trace: Option<PathBuf>,
) -> Outcome {
    let net = load_weights(common)?;
    let scenario = cfg.scenario().map_err(usage)?;
    let mc = run_monte_carlo(&scenario, &net)?;

    let mut out = output(common)?;
    export::write_run_summary(&mut out, &mc.runs)?;
    out.flush().map_err(usage)?;

    if let Some(path) = trace {
        export::write_decision_trace(create(&path)?, &mc.runs[0])?;
    }
    if signal_trace.is_some() || estimate_trace.is_some() {
        let links = link_traces(&scenario, 0)?;
        if let Some(path) = signal_trace {
            export::write_signal_trace(create(&path)?, &links.positions, &links.raw[0], &links.raw[1])?;
        }
        if let Some(path) = estimate_trace {
            export::write_estimate_trace(create(&path)?, &links.raw[0], &links.observed[0])?;
        }
    }

    let first = mc
        .avg_first_handoff_distance_m
        .map(|d| format!("{d:.2} m"))
        .unwrap_or_else(|| "none".into());
    eprintln!(
        "{} runs: average handoffs {:.4}, average first handoff {first}",
        mc.runs.len(),
        mc.avg_handoff_count
    );
    Ok(())
}

fn cmd_sweep(
    common: &Common,
    cfg: &crate::config::ConfigFile,
    hysteresis: &[f64],
    threshold: &[f64],
) -> Outcome {
    if hysteresis.is_empty() || threshold.is_empty() {
        return Err(usage(anyhow!("--hysteresis and --threshold need at least one value")));
    }
    let net = load_weights(common)?;
    let scenario = cfg.scenario().map_err(usage)?;
    let result = sweep(&scenario, &net, hysteresis, threshold)?;
    let mut out = output(common)?;
    export::write_sweep(&mut out, &result)?;
    out.flush().context("flushing sweep output").map_err(usage)?;
    Ok(())
}
