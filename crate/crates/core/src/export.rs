//! Plot-ready CSV writers. Every file starts with a fixed header row; floats
//! use Rust's shortest round-trip formatting and absent values are empty
//! fields.

use std::io::Write;

use crate::channel::SignalSample;
use crate::error::{Error, Result};
use crate::simulator::{RunResult, SweepResult};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `distance_m,rss_serving_dbm,rss_target_dbm`, one row per position.
pub fn write_signal_trace<W: Write>(
    out: W,
    positions: &[f64],
    serving: &[SignalSample],
    target: &[SignalSample],
) -> Result<()> {
    if positions.len() != serving.len() || serving.len() != target.len() {
        return Err(Error::invalid("signal trace", "link traces differ in length"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["distance_m", "rss_serving_dbm", "rss_target_dbm"])?;
    for ((d, s), t) in positions.iter().zip(serving).zip(target) {
        w.write_record([d.to_string(), s.rss_dbm.to_string(), t.rss_dbm.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `distance_m,rss_raw_dbm,rss_est_dbm` for one link.
pub fn write_estimate_trace<W: Write>(
    out: W,
    raw: &[SignalSample],
    estimated: &[f64],
) -> Result<()> {
    if raw.len() != estimated.len() {
        return Err(Error::invalid("estimate trace", "length mismatch"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["distance_m", "rss_raw_dbm", "rss_est_dbm"])?;
    for (s, e) in raw.iter().zip(estimated) {
        w.write_record([s.distance_m.to_string(), s.rss_dbm.to_string(), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `distance_m,rss_s_est,rss_t_est,decision,serving_bs`
pub fn write_decision_trace<W: Write>(out: W, run: &RunResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["distance_m", "rss_s_est", "rss_t_est", "decision", "serving_bs"])?;
    for e in &run.decision_trace {
        w.write_record([
            e.distance_m.to_string(),
            e.rss_serving_est.to_string(),
            e.rss_target_est.to_string(),
            e.decision.action().to_string(),
            e.serving_bs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `run,handoff_count,first_handoff_distance_m,fluctuation_count`
pub fn write_run_summary<W: Write>(out: W, runs: &[RunResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "run",
        "handoff_count",
        "first_handoff_distance_m",
        "fluctuation_count",
    ])?;
    for (i, r) in runs.iter().enumerate() {
        w.write_record([
            i.to_string(),
            r.handoff_count.to_string(),
            opt(r.first_handoff_distance_m),
            r.fluctuation_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `hysteresis_db,threshold_dbm,ti_s,ti_t,avg_handoffs,avg_first_ho_m,runs`
pub fn write_sweep<W: Write>(out: W, sweep: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "hysteresis_db",
        "threshold_dbm",
        "ti_s",
        "ti_t",
        "avg_handoffs",
        "avg_first_ho_m",
        "runs",
    ])?;
    for r in &sweep.rows {
        w.write_record([
            r.hysteresis_db.to_string(),
            r.threshold_dbm.to_string(),
            r.ti_serving.value().to_string(),
            r.ti_target.value().to_string(),
            r.avg_handoff_count.to_string(),
            opt(r.avg_first_handoff_distance_m),
            r.runs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
