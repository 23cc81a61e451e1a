//! Sliding-window least-squares path-loss estimation.
//!
//! Each window is fitted with ordinary least squares of RSS (dBm) against
//! the regressor `u = 10 * log10(d)`. The slope is `-gamma_hat` and the
//! intercept `p_ref_hat`, so the smoothed RSS at the query distance is the
//! fitted log-distance line evaluated there.

use serde::{Deserialize, Serialize};

use crate::channel::{SignalSample, MIN_DISTANCE_M};
use crate::error::{ensure_finite, Error, Result};

/// Regressor variance below which a window is treated as degenerate.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Trailing window length in samples.
    pub window_len: usize,
    /// Samples required before a fit replaces the raw value.
    pub min_samples: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            window_len: 50,
            min_samples: 10,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples < 2 {
            return Err(Error::invalid("min_samples", "must be at least 2"));
        }
        if self.window_len < self.min_samples {
            return Err(Error::invalid(
                "window_len",
                format!(
                    "{} is smaller than min_samples ({})",
                    self.window_len, self.min_samples
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossFit {
    pub gamma_hat: f64,
    pub p_ref_hat_dbm: f64,
    pub fitted_rss_dbm: f64,
    pub residual_rms_db: f64,
}

impl PathLossFit {
    /// Fitted RSS at distance `d`.
    pub fn predict(&self, d: f64) -> f64 {
        self.p_ref_hat_dbm - 10.0 * self.gamma_hat * d.max(MIN_DISTANCE_M).log10()
    }
}

/// Fits `(distance_m, rss_dbm)` pairs and evaluates the line at `d_query`.
pub fn fit_window(
    samples: &[(f64, f64)],
    d_query: f64,
    config: &EstimatorConfig,
) -> Result<PathLossFit> {
    config.validate()?;
    ensure_finite("d_query", d_query)?;
    if samples.len() < config.min_samples {
        return Err(Error::NotEnoughSamples {
            got: samples.len(),
            need: config.min_samples,
        });
    }
    for &(d, rss) in samples {
        ensure_finite("sample distance", d)?;
        ensure_finite("sample rss", rss)?;
        if d < MIN_DISTANCE_M {
            return Err(Error::invalid(
                "sample distance",
                format!("{d} m is below the 1 m reference"),
            ));
        }
    }
    let u: Vec<f64> = samples.iter().map(|&(d, _)| regressor(d)).collect();
    let y: Vec<f64> = samples.iter().map(|&(_, rss)| rss).collect();
    fit_unchecked(&u, &y, d_query)
}

fn regressor(d: f64) -> f64 {
    10.0 * d.max(MIN_DISTANCE_M).log10()
}

// Two-pass OLS on u = 10 log10(d); callers have already validated the inputs.
fn fit_unchecked(u: &[f64], y: &[f64], d_query: f64) -> Result<PathLossFit> {
    let n_f = u.len() as f64;
    let mean_u = u.iter().sum::<f64>() / n_f;
    let mean_y = y.iter().sum::<f64>() / n_f;

    let (sxx, sxy) = u.iter().zip(y).fold((0.0, 0.0), |(sxx, sxy), (&ui, &yi)| {
        let du = ui - mean_u;
        (sxx + du * du, sxy + du * (yi - mean_y))
    });
    if sxx / n_f < DEGENERATE_VARIANCE {
        return Err(Error::DegenerateRegressor);
    }

    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_u;
    let sse = u
        .iter()
        .zip(y)
        .map(|(&ui, &yi)| {
            let r = yi - (intercept + slope * ui);
            r * r
        })
        .sum::<f64>();

    let fit = PathLossFit {
        gamma_hat: -slope,
        p_ref_hat_dbm: intercept,
        fitted_rss_dbm: 0.0,
        residual_rms_db: (sse / n_f).sqrt(),
    };
    Ok(PathLossFit {
        fitted_rss_dbm: fit.predict(d_query),
        ..fit
    })
}

/// Smooths a trace: every position from index `min_samples - 1` on gets
/// the fit of its trailing window evaluated at its own distance; earlier
/// positions pass the raw RSS through.
///
/// A degenerate window reuses the most recent successful fit, or the raw
/// value if there is none yet.
pub fn estimate_stream(
    trace: &[SignalSample],
    config: &EstimatorConfig,
) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    if trace.is_empty() {
        return Err(Error::Empty("trace"));
    }

    let u: Vec<f64> = trace.iter().map(|s| regressor(s.distance_m)).collect();
    let y: Vec<f64> = trace.iter().map(|s| s.rss_dbm).collect();
    let mut out = Vec::with_capacity(trace.len());
    let mut last_fit: Option<PathLossFit> = None;
    for (i, sample) in trace.iter().enumerate() {
        let d = sample.distance_m;
        if i + 1 < config.min_samples {
            out.push((d, sample.rss_dbm));
            continue;
        }
        let start = (i + 1).saturating_sub(config.window_len);
        let est = match fit_unchecked(&u[start..=i], &y[start..=i], d) {
            Ok(fit) => {
                last_fit = Some(fit);
                fit.fitted_rss_dbm
            }
            Err(Error::DegenerateRegressor) => match last_fit {
                Some(fit) => fit.predict(d),
                None => sample.rss_dbm,
            },
            Err(e) => return Err(e),
        };
        out.push((d, est));
    }
    Ok(out)
}
