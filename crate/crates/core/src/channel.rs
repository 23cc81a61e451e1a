//! Received signal strength along a trajectory.
//!
//! Mean power follows the log-distance law `p_ref - 10 * gamma * log10(d)`
//! (dBm, `d` in meters, 1 m reference). On top of it ride two stochastic
//! terms, both in dB so that a sample is an exact sum of its components:
//!
//! * log-normal shadowing, optionally correlated along the path with a
//!   first-order Gauss-Markov process, `s_k = rho * s_{k-1} + sqrt(1 - rho^2) * N(0, sigma^2)`
//!   where `rho = exp(-moved / decorrelation)`;
//! * Rayleigh fading, drawn per sample as a unit-mean exponential power
//!   gain `g` and applied as `10 * log10(g)`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Smallest distance the model evaluates; closer positions are clamped.
pub const MIN_DISTANCE_M: f64 = 1.0;

pub const GAMMA_MIN: f64 = 2.0;
pub const GAMMA_MAX: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationParams {
    /// Received power at the 1 m reference distance, dBm.
    pub p_ref_dbm: f64,
    /// Path-loss exponent.
    pub gamma: f64,
    pub shadow_sigma_db: f64,
    /// Shadowing decorrelation distance in meters; 0 gives i.i.d. samples.
    pub shadow_decorr_m: f64,
    pub rayleigh_enabled: bool,
    pub shadowing_enabled: bool,
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self {
            p_ref_dbm: -5.0,
            gamma: 3.0,
            shadow_sigma_db: 8.0,
            shadow_decorr_m: 20.0,
            rayleigh_enabled: true,
            shadowing_enabled: true,
        }
    }
}

impl PropagationParams {
    /// Same path loss, no shadowing and no fading.
    pub fn deterministic(self) -> Self {
        Self {
            rayleigh_enabled: false,
            shadowing_enabled: false,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("p_ref_dbm", self.p_ref_dbm)?;
        ensure_finite("gamma", self.gamma)?;
        ensure_finite("shadow_sigma_db", self.shadow_sigma_db)?;
        ensure_finite("shadow_decorr_m", self.shadow_decorr_m)?;
        if !(GAMMA_MIN..=GAMMA_MAX).contains(&self.gamma) {
            return Err(Error::invalid(
                "gamma",
                format!("{} outside [{GAMMA_MIN}, {GAMMA_MAX}]", self.gamma),
            ));
        }
        if self.shadow_sigma_db < 0.0 {
            return Err(Error::invalid("shadow_sigma_db", "must be >= 0"));
        }
        if self.shadow_decorr_m < 0.0 {
            return Err(Error::invalid("shadow_decorr_m", "must be >= 0"));
        }
        Ok(())
    }
}

/// One RSS observation, split into its dB components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSample {
    pub distance_m: f64,
    pub rss_dbm: f64,
    pub path_loss_dbm: f64,
    pub shadow_db: f64,
    pub fading_db: f64,
}

/// A reproducible random stream keyed by `(seed, stream_id)`.
///
/// Streams with the same seed and different ids are independent ChaCha8
/// streams, so every run and link of a simulation gets its own stream
/// without any coordination between them.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Unit-mean exponential variate.
    pub fn exp1(&mut self) -> f64 {
        self.rng.sample(Exp1)
    }

    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        if low == high {
            return low;
        }
        self.rng.random_range(low..high)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Shadowing state carried from the previous sample of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorShadow {
    pub shadow_db: f64,
    /// Distance travelled since that sample, meters.
    pub moved_m: f64,
}

/// Deterministic mean RSS in dBm at distance `d` (clamped to 1 m).
pub fn mean_rss(d: f64, params: &PropagationParams) -> Result<f64> {
    ensure_finite("distance", d)?;
    let d = d.max(MIN_DISTANCE_M);
    Ok(params.p_ref_dbm - 10.0 * params.gamma * d.log10())
}

pub fn sample_rss(
    d: f64,
    params: &PropagationParams,
    rng: &mut RngStream,
    prior: Option<PriorShadow>,
) -> Result<SignalSample> {
    params.validate()?;
    let path_loss_dbm = mean_rss(d, params)?;

    let shadow_db = if params.shadowing_enabled {
        let innovation = params.shadow_sigma_db * rng.standard_normal();
        match prior {
            Some(prev) if params.shadow_decorr_m > 0.0 => {
                let rho = (-prev.moved_m.abs() / params.shadow_decorr_m).exp();
                rho * prev.shadow_db + (1.0 - rho * rho).sqrt() * innovation
            }
            _ => innovation,
        }
    } else {
        0.0
    };

    let fading_db = if params.rayleigh_enabled {
        // Exp1 can return exactly 0.0; keep the dB value finite.
        10.0 * rng.exp1().max(f64::MIN_POSITIVE).log10()
    } else {
        0.0
    };

    Ok(SignalSample {
        distance_m: d.max(MIN_DISTANCE_M),
        rss_dbm: path_loss_dbm + shadow_db + fading_db,
        path_loss_dbm,
        shadow_db,
        fading_db,
    })
}

/// Samples one link along `trajectory` (positions on the line, meters) as
/// seen from a base station at `bs_position`.
pub fn generate_trace(
    trajectory: &[f64],
    bs_position: f64,
    params: &PropagationParams,
    rng: &mut RngStream,
) -> Result<Vec<SignalSample>> {
    if trajectory.is_empty() {
        return Err(Error::Empty("trajectory"));
    }
    params.validate()?;
    ensure_finite("bs_position", bs_position)?;

    let mut out = Vec::with_capacity(trajectory.len());
    let mut prior: Option<PriorShadow> = None;
    let mut last_pos: Option<f64> = None;
    for &pos in trajectory {
        ensure_finite("trajectory position", pos)?;
        let prior_here = match (prior, last_pos) {
            (Some(p), Some(last)) => Some(PriorShadow {
                moved_m: (pos - last).abs(),
                ..p
            }),
            _ => None,
        };
        let sample = sample_rss((pos - bs_position).abs(), params, rng, prior_here)?;
        prior = Some(PriorShadow {
            shadow_db: sample.shadow_db,
            moved_m: 0.0,
        });
        last_pos = Some(pos);
        out.push(sample);
    }
    Ok(out)
}
