//! Acceptance suite. One line per criterion:
//!
//! `[PASS] C<n> <name>: <detail> (<elapsed> s, limit <limit> s)`
//!
//! A criterion passes only if its check holds and it finishes inside its
//! time limit. The process exits non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use handoff_core::channel::{sample_rss, RngStream};
use handoff_core::decision::{canonical_dataset, encode, table_oracle};
use handoff_core::estimator::fit_window;
use handoff_core::export::write_decision_trace;
use handoff_core::neuralnet::{train, Vote};
use handoff_core::simulator::{representative_ti, run_monte_carlo, run_once, sweep, TiGroup};
use handoff_core::{
    Action, EstimatorConfig, GateMode, Levels, NetworkWeights, PropagationParams, ScenarioConfig,
    TiLevel, TrainConfig, TrainingSample,
};

type Check = Result<String, String>;

struct Criterion {
    id: u8,
    name: &'static str,
    limit: Duration,
    run: fn(&NetworkWeights) -> Check,
}

const CRITERIA: [Criterion; 8] = [
    Criterion { id: 1, name: "table fidelity", limit: Duration::from_secs(10), run: table_fidelity },
    Criterion { id: 2, name: "gradient correctness", limit: Duration::from_secs(5), run: gradients },
    Criterion { id: 3, name: "deterministic handoff position", limit: Duration::from_secs(1), run: deterministic_position },
    Criterion { id: 4, name: "congested target never hands off", limit: Duration::from_secs(30), run: group3_zero },
    Criterion { id: 5, name: "within-group trace identity", limit: Duration::from_secs(10), run: group_identity },
    Criterion { id: 6, name: "hysteresis monotonicity", limit: Duration::from_secs(60), run: hysteresis_monotone },
    Criterion { id: 7, name: "estimator recovery", limit: Duration::from_secs(10), run: estimator_recovery },
    Criterion { id: 8, name: "channel statistics", limit: Duration::from_secs(5), run: channel_statistics },
];

fn main() -> ExitCode {
    let net = match verified_net() {
        Ok(n) => n,
        Err(e) => {
            println!("[FAIL] setup: {e}");
            return ExitCode::FAILURE;
        }
    };

    let mut failed = 0;
    for c in &CRITERIA {
        let start = Instant::now();
        let outcome = (c.run)(&net);
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; over time limit")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "[{}] C{} {}: {} ({:.3} s, limit {} s)",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            elapsed.as_secs_f64(),
            c.limit.as_secs()
        );
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn verified_net() -> Result<NetworkWeights, String> {
    let net = train(&canonical_dataset(), &TrainConfig::default())
        .map_err(|e| e.to_string())?
        .weights;
    let agree = table_agreement(&net);
    if agree != 36 {
        return Err(format!("default training agrees on {agree}/36 cells"));
    }
    Ok(net)
}

fn table_agreement(net: &NetworkWeights) -> usize {
    Levels::all()
        .filter(|&l| {
            let vote = net.classify(&encode(l)).expect("finite input");
            let want = match table_oracle(l) {
                Action::Handoff => Vote::Positive,
                Action::NoHandoff => Vote::Negative,
            };
            vote == want
        })
        .count()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sim_err(e: handoff_core::Error) -> String {
    e.to_string()
}

fn scenario_for(base: &ScenarioConfig, serving: TiLevel, target: TiLevel) -> ScenarioConfig {
    ScenarioConfig {
        ti_serving: representative_ti(serving),
        ti_target: representative_ti(target),
        ..*base
    }
}

fn pair_name((s, t): (TiLevel, TiLevel)) -> String {
    format!("{}/{}", s.letter(), t.letter())
}

fn table_fidelity(_: &NetworkWeights) -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_handoff");
    let seeds = [0u64, 1, 2, 3, 4];
    for seed in seeds {
        let weights = dir.path().join(format!("w{seed}.json"));
        let weights = weights.to_str().expect("utf-8 temp path");
        let seed_arg = seed.to_string();
        let t = Command::new(bin)
            .args(["train", "--seed", &seed_arg, "--out", weights])
            .env_remove("HANDOFF_SEED")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(t.status.success(), || {
            format!("seed {seed}: train failed: {}", String::from_utf8_lossy(&t.stderr))
        })?;
        let v = Command::new(bin)
            .args(["verify", "--weights", weights])
            .output()
            .map_err(|e| e.to_string())?;
        let out = String::from_utf8_lossy(&v.stdout);
        ensure(v.status.success() && out.contains("agreement: 36/36"), || {
            format!("seed {seed}: {}", out.lines().last().unwrap_or("no output"))
        })?;
    }
    Ok(format!("36/36 for seeds {seeds:?}"))
}

fn loss(w: &NetworkWeights, s: &TrainingSample) -> f64 {
    0.5 * (w.forward(&s.x).expect("finite").y - s.target).powi(2)
}

// Denominator floored at 1e-3: for smaller gradients the central difference
// is limited by rounding in the loss (~1e-10 absolute), not by the gradient.
fn gradients(_: &NetworkWeights) -> Check {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for pair in 0..100u64 {
        let mut w = NetworkWeights::init(1000 + pair, 0.5);
        let mut rng = RngStream::new(pair, 7);
        let features = [(); 4].map(|_| rng.uniform(-1.0, 1.0));
        let target = if pair % 2 == 0 { 1.0 } else { -1.0 };
        let s = TrainingSample::new(features, target).map_err(sim_err)?;
        let analytic: Vec<f64> = w.gradient(&s).params().collect();
        for (i, a) in analytic.into_iter().enumerate() {
            let orig = *w.param_mut(i);
            *w.param_mut(i) = orig + h;
            let up = loss(&w, &s);
            *w.param_mut(i) = orig - h;
            let down = loss(&w, &s);
            *w.param_mut(i) = orig;
            let numeric = (up - down) / (2.0 * h);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max(rel);
        }
    }
    ensure(worst < 1e-6, || format!("worst relative error {worst:.3e}"))?;
    Ok(format!("100 pairs, worst relative error {worst:.3e}"))
}

fn deterministic_position(net: &NetworkWeights) -> Check {
    let base = ScenarioConfig {
        propagation: PropagationParams::default().deterministic(),
        n_runs: 1,
        ..ScenarioConfig::default()
    };
    let d = base.bs_separation_m;
    let (h, gamma) = (base.decision.hysteresis_db, base.propagation.gamma);
    let expected = d / (1.0 + 10f64.powf(-h / (10.0 * gamma)));
    let mut pairs = TiGroup::Group1.members();
    pairs.extend(TiGroup::Group2.members());
    let mut seen = Vec::new();
    for pair in &pairs {
        let r = run_once(&scenario_for(&base, pair.0, pair.1), net, 0).map_err(sim_err)?;
        let first = r.first_handoff_distance_m;
        ensure(r.handoff_count == 1, || {
            format!("{}: {} handoffs", pair_name(*pair), r.handoff_count)
        })?;
        let first = first.ok_or_else(|| format!("{}: no handoff", pair_name(*pair)))?;
        ensure((first - expected).abs() <= base.sample_step_m, || {
            format!("{}: first handoff at {first} m, expected {expected:.2} m", pair_name(*pair))
        })?;
        seen.push(first);
    }
    Ok(format!(
        "{} pairs hand off once at {:?} m (closed form {expected:.2} m)",
        pairs.len(),
        seen.first().expect("non-empty")
    ))
}

fn group3_zero(net: &NetworkWeights) -> Check {
    let hysteresis = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0];
    let thresholds = [-80.0, -85.0, -90.0];
    for pair in TiGroup::Group3.members() {
        let mc_cfg = ScenarioConfig {
            n_runs: 1000,
            ..scenario_for(&ScenarioConfig::default(), pair.0, pair.1)
        };
        let mc = run_monte_carlo(&mc_cfg, net).map_err(sim_err)?;
        ensure(mc.avg_handoff_count == 0.0, || {
            format!("{}: average {} handoffs over 1000 runs", pair_name(pair), mc.avg_handoff_count)
        })?;
        let grid_cfg = ScenarioConfig { n_runs: 100, ..mc_cfg };
        let grid = sweep(&grid_cfg, net, &hysteresis, &thresholds).map_err(sim_err)?;
        if let Some(row) = grid.rows.iter().find(|r| r.avg_handoff_count != 0.0) {
            return Err(format!(
                "{}: h={} thr={} average {}",
                pair_name(pair),
                row.hysteresis_db,
                row.threshold_dbm,
                row.avg_handoff_count
            ));
        }
    }
    Ok("L/H and M/H: 0 handoffs over 1000 runs and 18 sweep cells x 100 runs".into())
}

fn trace_bytes(scenario: &ScenarioConfig, net: &NetworkWeights, run: u64) -> Result<Vec<u8>, String> {
    let r = run_once(scenario, net, run).map_err(sim_err)?;
    let mut buf = Vec::new();
    write_decision_trace(&mut buf, &r).map_err(sim_err)?;
    Ok(buf)
}

fn group_identity(net: &NetworkWeights) -> Check {
    let base = ScenarioConfig {
        master_seed: 2024,
        ..ScenarioConfig::default()
    };
    if base.decision.gate_mode != GateMode::Full {
        return Err("default gate mode is not Full".into());
    }
    let runs = 20;
    for group in [TiGroup::Group1, TiGroup::Group2] {
        let members = group.members();
        for run in 0..runs {
            let reference = trace_bytes(&scenario_for(&base, members[0].0, members[0].1), net, run)?;
            for pair in &members[1..] {
                let other = trace_bytes(&scenario_for(&base, pair.0, pair.1), net, run)?;
                ensure(other == reference, || {
                    format!("{:?}: {} differs from {} in run {run}", group, pair_name(*pair), pair_name(members[0]))
                })?;
            }
        }
    }
    Ok(format!("Group1 (4 pairs) and Group2 (3 pairs) identical over {runs} seeded runs"))
}

fn hysteresis_monotone(net: &NetworkWeights) -> Check {
    let hysteresis = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0];
    let mut summary = Vec::new();
    for pair in TiGroup::Group1.members() {
        let cfg = ScenarioConfig {
            n_runs: 500,
            ..scenario_for(&ScenarioConfig::default(), pair.0, pair.1)
        };
        let grid = sweep(&cfg, net, &hysteresis, &[cfg.decision.threshold_dbm]).map_err(sim_err)?;
        let avgs: Vec<f64> = grid.rows.iter().map(|r| r.avg_handoff_count).collect();
        ensure(avgs.windows(2).all(|w| w[1] <= w[0]), || {
            format!("{}: {avgs:?}", pair_name(pair))
        })?;
        summary = avgs;
    }
    Ok(format!(
        "4 Group1 pairs non-increasing, {:.3} -> {:.3} over 0..10 dB",
        summary[0],
        summary[summary.len() - 1]
    ))
}

fn estimator_recovery(_: &NetworkWeights) -> Check {
    let cfg = EstimatorConfig {
        window_len: 100,
        min_samples: 10,
    };
    let gamma = 3.0;

    let noiseless = PropagationParams::default().deterministic();
    let clean: Vec<(f64, f64)> = (0..=10)
        .map(|k| {
            let d = 100.0 + 10.0 * k as f64;
            (d, handoff_core::channel::mean_rss(d, &noiseless).expect("valid"))
        })
        .collect();
    let fit = fit_window(&clean, 150.0, &cfg).map_err(sim_err)?;
    let exact_err = (fit.gamma_hat - gamma).abs();
    ensure(exact_err < 1e-9, || format!("noiseless error {exact_err:e}"))?;

    let shadowed = PropagationParams {
        rayleigh_enabled: false,
        shadow_decorr_m: 0.0,
        ..PropagationParams::default()
    };
    let distances: Vec<f64> = (0..100).map(|k| 100.0 + 400.0 * k as f64 / 99.0).collect();
    let trials = 1000u64;
    let mut hits = 0;
    for t in 0..trials {
        let mut rng = RngStream::new(t, 0);
        let mut window = Vec::with_capacity(distances.len());
        for &d in &distances {
            window.push((d, sample_rss(d, &shadowed, &mut rng, None).map_err(sim_err)?.rss_dbm));
        }
        let fit = fit_window(&window, 300.0, &cfg).map_err(sim_err)?;
        if (fit.gamma_hat - gamma).abs() < 0.5 {
            hits += 1;
        }
    }
    let rate = hits as f64 / trials as f64;
    let detail = format!(
        "noiseless error {exact_err:.1e}; sigma=8 dB: {hits}/{trials} trials within 0.5 ({:.1}%, need >= 95%)",
        100.0 * rate
    );
    if rate >= 0.95 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn channel_statistics(_: &NetworkWeights) -> Check {
    let n = 100_000;
    let d = 250.0;

    let fading_only = PropagationParams {
        shadowing_enabled: false,
        ..PropagationParams::default()
    };
    let mut rng = RngStream::new(1, 0);
    let mut gain_sum = 0.0;
    for _ in 0..n {
        let s = sample_rss(d, &fading_only, &mut rng, None).map_err(sim_err)?;
        gain_sum += 10f64.powf(s.fading_db / 10.0);
    }
    let gain_mean = gain_sum / n as f64;
    ensure((gain_mean - 1.0).abs() <= 0.01, || format!("Rayleigh power gain mean {gain_mean:.5}"))?;

    let shadow_only = PropagationParams {
        rayleigh_enabled: false,
        shadow_decorr_m: 0.0,
        ..PropagationParams::default()
    };
    let sigma = shadow_only.shadow_sigma_db;
    let mut rng = RngStream::new(2, 0);
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        draws.push(sample_rss(d, &shadow_only, &mut rng, None).map_err(sim_err)?.shadow_db);
    }
    let mean = draws.iter().sum::<f64>() / n as f64;
    let std = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    ensure((std / sigma - 1.0).abs() <= 0.02, || format!("shadowing std {std:.4} dB for sigma {sigma}"))?;

    Ok(format!(
        "Rayleigh power gain mean {gain_mean:.5}; shadowing std {std:.4} dB (sigma {sigma})"
    ))
}
