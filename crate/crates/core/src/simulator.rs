//! Two-cell trajectory simulation and Monte Carlo aggregation.
//!
//! A mobile walks the straight line from base station 1 (at 0 m, initially
//! serving) to base station 2 (at the separation distance). Both links are
//! sampled at every step, smoothed independently, and fed to [`decide`]. A
//! handoff swaps the serving and target roles immediately; monitoring
//! continues to the end of the line, so ping-pong shows up as extra
//! handoffs. Traffic intensities belong to the roles, not to the stations.
//!
//! Every link of every run draws from its own [`RngStream`] keyed by
//! `(master_seed, 2 * run_index + link)`, which makes runs independent of
//! each other and of evaluation order, and gives every sweep cell the same
//! channel realizations (common random numbers).

use rayon::prelude::*;

use crate::channel::{generate_trace, PropagationParams, RngStream, SignalSample, MIN_DISTANCE_M};
use crate::decision::{
    decide, quantize_ti, DecisionConfig, HandoffDecision, TiLevel, TrafficIntensity,
};
use crate::error::{ensure_finite, Error, Result};
use crate::estimator::{estimate_stream, EstimatorConfig};
use crate::neuralnet::NetworkWeights;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub cell_radius_m: f64,
    pub bs_separation_m: f64,
    pub sample_step_m: f64,
    pub ti_serving: TrafficIntensity,
    pub ti_target: TrafficIntensity,
    pub propagation: PropagationParams,
    pub estimator: EstimatorConfig,
    pub decision: DecisionConfig,
    pub n_runs: usize,
    pub master_seed: u64,
    /// Feed least-squares estimates to the decision; raw RSS otherwise.
    pub smoothing: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let ti = TrafficIntensity::new(0.5).expect("valid constant");
        Self {
            cell_radius_m: 500.0,
            bs_separation_m: 1000.0,
            sample_step_m: 1.0,
            ti_serving: ti,
            ti_target: ti,
            propagation: PropagationParams::default(),
            estimator: EstimatorConfig::default(),
            decision: DecisionConfig::default(),
            n_runs: 100,
            master_seed: 0,
            smoothing: true,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("cell_radius_m", self.cell_radius_m)?;
        ensure_finite("bs_separation_m", self.bs_separation_m)?;
        ensure_finite("sample_step_m", self.sample_step_m)?;
        if self.cell_radius_m <= 0.0 {
            return Err(Error::invalid("cell_radius_m", "must be positive"));
        }
        if self.bs_separation_m <= 2.0 * MIN_DISTANCE_M {
            return Err(Error::invalid(
                "bs_separation_m",
                "leaves no room for a trajectory",
            ));
        }
        if self.sample_step_m <= 0.0 {
            return Err(Error::invalid("sample_step_m", "must be positive"));
        }
        if self.n_runs == 0 {
            return Err(Error::invalid("n_runs", "must be at least 1"));
        }
        self.propagation.validate()?;
        self.estimator.validate()?;
        self.decision.validate()
    }

    /// Sample positions from 1 m past station 1 to 1 m short of station 2.
    pub fn trajectory(&self) -> Vec<f64> {
        let end = self.bs_separation_m - MIN_DISTANCE_M;
        let mut out = Vec::new();
        let mut k = 0u64;
        loop {
            let pos = MIN_DISTANCE_M + k as f64 * self.sample_step_m;
            if pos > end + 1e-9 {
                break;
            }
            out.push(pos);
            k += 1;
        }
        out
    }

    pub fn ti_levels(&self) -> (TiLevel, TiLevel) {
        (
            quantize_ti(self.ti_serving, &self.decision),
            quantize_ti(self.ti_target, &self.decision),
        )
    }
}

/// 1 or 2.
pub type BsId = u8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    /// Position along the line, i.e. distance from station 1.
    pub distance_m: f64,
    pub rss_serving_est: f64,
    pub rss_target_est: f64,
    pub decision: HandoffDecision,
    /// Serving station when the decision was taken.
    pub serving_bs: BsId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub first_handoff_distance_m: Option<f64>,
    pub handoff_count: usize,
    pub decision_trace: Vec<TraceEntry>,
    /// Number of adjacent trace entries whose actions differ.
    pub fluctuation_count: usize,
}

/// Raw and smoothed signal of both links for one run.
#[derive(Debug, Clone)]
pub struct LinkTraces {
    pub positions: Vec<f64>,
    pub raw: [Vec<SignalSample>; 2],
    /// What the decision sees: estimates, or raw RSS with smoothing off.
    pub observed: [Vec<f64>; 2],
}

fn stream_id(run_index: u64, link: usize) -> u64 {
    run_index.wrapping_mul(2).wrapping_add(link as u64)
}

pub fn link_traces(scenario: &ScenarioConfig, run_index: u64) -> Result<LinkTraces> {
    scenario.validate()?;
    let positions = scenario.trajectory();
    let stations = [0.0, scenario.bs_separation_m];
    let mut raw: [Vec<SignalSample>; 2] = Default::default();
    let mut observed: [Vec<f64>; 2] = Default::default();
    for link in 0..2 {
        let mut rng = RngStream::new(scenario.master_seed, stream_id(run_index, link));
        raw[link] = generate_trace(&positions, stations[link], &scenario.propagation, &mut rng)?;
        observed[link] = if scenario.smoothing {
            estimate_stream(&raw[link], &scenario.estimator)?
                .into_iter()
                .map(|(_, rss)| rss)
                .collect()
        } else {
            raw[link].iter().map(|s| s.rss_dbm).collect()
        };
    }
    Ok(LinkTraces {
        positions,
        raw,
        observed,
    })
}

pub fn run_once(
    scenario: &ScenarioConfig,
    net: &NetworkWeights,
    run_index: u64,
) -> Result<RunResult> {
    let links = link_traces(scenario, run_index)?;
    let mut serving = 0usize;
    let mut trace = Vec::with_capacity(links.positions.len());
    let mut first = None;
    let mut count = 0;

    for (k, &pos) in links.positions.iter().enumerate() {
        let target = 1 - serving;
        let (rs, rt) = (links.observed[serving][k], links.observed[target][k]);
        let decision = decide(
            rs,
            rt,
            scenario.ti_serving,
            scenario.ti_target,
            net,
            &scenario.decision,
        )?;
        trace.push(TraceEntry {
            distance_m: pos,
            rss_serving_est: rs,
            rss_target_est: rt,
            decision,
            serving_bs: serving as BsId + 1,
        });
        if decision.is_handoff() {
            count += 1;
            first.get_or_insert(pos);
            serving = target;
        }
    }

    let fluctuation_count = trace
        .windows(2)
        .filter(|w| w[0].decision.action() != w[1].decision.action())
        .count();
    Ok(RunResult {
        first_handoff_distance_m: first,
        handoff_count: count,
        decision_trace: trace,
        fluctuation_count,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub avg_handoff_count: f64,
    /// Averaged over the runs that handed off at least once.
    pub avg_first_handoff_distance_m: Option<f64>,
    pub runs: Vec<RunResult>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Averages {
    handoffs: f64,
    first_handoff_m: Option<f64>,
}

// Sums run in index order so the result is independent of thread count.
fn average<'a>(runs: impl Iterator<Item = (usize, Option<f64>)> + 'a) -> Averages {
    let (mut n, mut total, mut first_sum, mut first_n) = (0usize, 0usize, 0.0, 0usize);
    for (count, first) in runs {
        n += 1;
        total += count;
        if let Some(d) = first {
            first_sum += d;
            first_n += 1;
        }
    }
    Averages {
        handoffs: total as f64 / n as f64,
        first_handoff_m: (first_n > 0).then(|| first_sum / first_n as f64),
    }
}

pub fn run_monte_carlo(scenario: &ScenarioConfig, net: &NetworkWeights) -> Result<MonteCarloResult> {
    scenario.validate()?;
    let runs = (0..scenario.n_runs as u64)
        .into_par_iter()
        .map(|i| run_once(scenario, net, i))
        .collect::<Result<Vec<_>>>()?;
    let avg = average(
        runs.iter()
            .map(|r| (r.handoff_count, r.first_handoff_distance_m)),
    );
    Ok(MonteCarloResult {
        avg_handoff_count: avg.handoffs,
        avg_first_handoff_distance_m: avg.first_handoff_m,
        runs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub hysteresis_db: f64,
    pub threshold_dbm: f64,
    pub ti_serving: TrafficIntensity,
    pub ti_target: TrafficIntensity,
    pub avg_handoff_count: f64,
    pub avg_first_handoff_distance_m: Option<f64>,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Every (threshold, hysteresis) pair, threshold outermost, all cells on the
/// same master seed.
pub fn sweep(
    scenario: &ScenarioConfig,
    net: &NetworkWeights,
    hysteresis_db: &[f64],
    threshold_dbm: &[f64],
) -> Result<SweepResult> {
    if hysteresis_db.is_empty() {
        return Err(Error::Empty("hysteresis list"));
    }
    if threshold_dbm.is_empty() {
        return Err(Error::Empty("threshold list"));
    }
    scenario.validate()?;

    let mut rows = Vec::with_capacity(hysteresis_db.len() * threshold_dbm.len());
    for &thr in threshold_dbm {
        for &hyst in hysteresis_db {
            let cell = ScenarioConfig {
                decision: DecisionConfig {
                    threshold_dbm: thr,
                    hysteresis_db: hyst,
                    ..scenario.decision
                },
                ..*scenario
            };
            cell.validate()?;
            let per_run = (0..cell.n_runs as u64)
                .into_par_iter()
                .map(|i| {
                    run_once(&cell, net, i).map(|r| (r.handoff_count, r.first_handoff_distance_m))
                })
                .collect::<Result<Vec<_>>>()?;
            let avg = average(per_run.into_iter());
            rows.push(SweepRow {
                hysteresis_db: hyst,
                threshold_dbm: thr,
                ti_serving: cell.ti_serving,
                ti_target: cell.ti_target,
                avg_handoff_count: avg.handoffs,
                avg_first_handoff_distance_m: avg.first_handoff_m,
                runs: cell.n_runs,
            });
        }
    }
    Ok(SweepResult { rows })
}

/// Traffic-intensity combinations (serving/target) that behave alike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TiGroup {
    /// L/L, M/M, H/H, L/M
    Group1,
    /// H/L, H/M, M/L
    Group2,
    /// L/H, M/H: never hands off.
    Group3,
}

pub fn group_of(ti_serving: TiLevel, ti_target: TiLevel) -> TiGroup {
    use TiLevel::*;
    match (ti_serving, ti_target) {
        (Low, Low) | (Medium, Medium) | (High, High) | (Low, Medium) => TiGroup::Group1,
        (High, Low) | (High, Medium) | (Medium, Low) => TiGroup::Group2,
        (Low, High) | (Medium, High) => TiGroup::Group3,
    }
}

impl TiGroup {
    /// The (serving, target) level pairs in this group.
    pub fn members(self) -> Vec<(TiLevel, TiLevel)> {
        TiLevel::ALL
            .into_iter()
            .flat_map(|s| TiLevel::ALL.into_iter().map(move |t| (s, t)))
            .filter(|&(s, t)| group_of(s, t) == self)
            .collect()
    }
}

/// A traffic intensity inside each band under the default bounds.
pub fn representative_ti(level: TiLevel) -> TrafficIntensity {
    let v = match level {
        TiLevel::Low => 0.5,
        TiLevel::Medium => 0.7,
        TiLevel::High => 0.9,
    };
    TrafficIntensity::new(v).expect("valid constant")
}
