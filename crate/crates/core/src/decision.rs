//! Handoff policy: level quantization, network input encoding, the
//! reference decision table, the threshold/hysteresis gate and the gated
//! network decision.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::neuralnet::{Input, NetworkWeights, TrainingSample, Vote};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RssLevel {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TiLevel {
    Low,
    Medium,
    High,
}

impl RssLevel {
    pub const ALL: [RssLevel; 2] = [RssLevel::Low, RssLevel::High];

    fn code(self) -> f64 {
        match self {
            RssLevel::Low => -1.0,
            RssLevel::High => 1.0,
        }
    }

    pub fn letter(self) -> char {
        match self {
            RssLevel::Low => 'L',
            RssLevel::High => 'H',
        }
    }
}

impl TiLevel {
    pub const ALL: [TiLevel; 3] = [TiLevel::Low, TiLevel::Medium, TiLevel::High];

    fn code(self) -> f64 {
        match self {
            TiLevel::Low => -1.0,
            TiLevel::Medium => 0.0,
            TiLevel::High => 1.0,
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            TiLevel::Low => 'L',
            TiLevel::Medium => 'M',
            TiLevel::High => 'H',
        }
    }
}

/// Offered load in Erlang per channel.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TrafficIntensity(f64);

impl TrafficIntensity {
    pub fn new(erlangs: f64) -> Result<Self> {
        ensure_finite("traffic intensity", erlangs)?;
        if erlangs < 0.0 {
            return Err(Error::invalid(
                "traffic intensity",
                format!("{erlangs} is negative"),
            ));
        }
        Ok(Self(erlangs))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for TrafficIntensity {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TrafficIntensity> for f64 {
    fn from(t: TrafficIntensity) -> f64 {
        t.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    /// Serving below threshold and target ahead by the hysteresis margin.
    #[default]
    Full,
    HysteresisOnly,
    /// Always consult the network.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionConfig {
    pub threshold_dbm: f64,
    /// Margin (dB, non-negative) by which the target must exceed the serving RSS.
    pub hysteresis_db: f64,
    pub ti_low_bound: f64,
    pub ti_high_bound: f64,
    pub gate_mode: GateMode,
}

impl Default for DecisionConfig {
    fn default() -> Self {
        Self {
            threshold_dbm: -85.0,
            hysteresis_db: 5.0,
            ti_low_bound: 0.66,
            ti_high_bound: 0.76,
            gate_mode: GateMode::Full,
        }
    }
}

impl DecisionConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("threshold_dbm", self.threshold_dbm)?;
        ensure_finite("hysteresis_db", self.hysteresis_db)?;
        ensure_finite("ti_low_bound", self.ti_low_bound)?;
        ensure_finite("ti_high_bound", self.ti_high_bound)?;
        if self.hysteresis_db < 0.0 {
            return Err(Error::invalid("hysteresis_db", "must be >= 0"));
        }
        if self.ti_low_bound >= self.ti_high_bound {
            return Err(Error::invalid(
                "ti_low_bound",
                "must be below ti_high_bound",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Handoff,
    NoHandoff,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Handoff => "Handoff",
            Action::NoHandoff => "NoHandoff",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    GateBlocked,
    NetworkDecided,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::GateBlocked => "GateBlocked",
            Provenance::NetworkDecided => "NetworkDecided",
        })
    }
}

/// Outcome of [`decide`]. A gate block is always a no-handoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HandoffDecision {
    action: Action,
    provenance: Provenance,
}

impl HandoffDecision {
    pub const GATE_BLOCKED: Self = Self {
        action: Action::NoHandoff,
        provenance: Provenance::GateBlocked,
    };

    pub fn network(action: Action) -> Self {
        Self {
            action,
            provenance: Provenance::NetworkDecided,
        }
    }

    pub fn action(self) -> Action {
        self.action
    }

    pub fn provenance(self) -> Provenance {
        self.provenance
    }

    pub fn is_handoff(self) -> bool {
        self.action == Action::Handoff
    }
}

/// The four quantized inputs of one decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Levels {
    pub rss_serving: RssLevel,
    pub rss_target: RssLevel,
    pub ti_serving: TiLevel,
    pub ti_target: TiLevel,
}

impl Levels {
    pub fn new(rss_serving: RssLevel, rss_target: RssLevel, ti_serving: TiLevel, ti_target: TiLevel) -> Self {
        Self {
            rss_serving,
            rss_target,
            ti_serving,
            ti_target,
        }
    }

    /// All 36 combinations, serving RSS outermost.
    pub fn all() -> impl Iterator<Item = Levels> {
        RssLevel::ALL.into_iter().flat_map(|rs| {
            RssLevel::ALL.into_iter().flat_map(move |rt| {
                TiLevel::ALL.into_iter().flat_map(move |ts| {
                    TiLevel::ALL
                        .into_iter()
                        .map(move |tt| Levels::new(rs, rt, ts, tt))
                })
            })
        })
    }
}

impl fmt::Display for Levels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rss {}/{} ti {}/{}",
            self.rss_serving.letter(),
            self.rss_target.letter(),
            self.ti_serving.letter(),
            self.ti_target.letter()
        )
    }
}

pub fn quantize_rss(rss_dbm: f64, config: &DecisionConfig) -> RssLevel {
    if rss_dbm <= config.threshold_dbm {
        RssLevel::Low
    } else {
        RssLevel::High
    }
}

/// Both band edges belong to Medium.
pub fn quantize_ti(ti: TrafficIntensity, config: &DecisionConfig) -> TiLevel {
    let v = ti.value();
    if v < config.ti_low_bound {
        TiLevel::Low
    } else if v > config.ti_high_bound {
        TiLevel::High
    } else {
        TiLevel::Medium
    }
}

/// Network input: RSS Low/High as -1/+1, TI Low/Medium/High as -1/0/+1,
/// then the bias.
pub fn encode(levels: Levels) -> Input {
    [
        levels.rss_serving.code(),
        levels.rss_target.code(),
        levels.ti_serving.code(),
        levels.ti_target.code(),
        1.0,
    ]
}

const HO: bool = true;
const NO: bool = false;

/// Reference policy, indexed `[serving RSS][target RSS][target TI][serving TI]`.
/// Rows are the target's TI and columns the serving cell's TI.
const TABLE: [[[[bool; 3]; 3]; 2]; 2] = [
    // serving RSS Low
    [
        // target RSS Low
        [[NO, HO, HO], [NO, NO, HO], [NO, NO, NO]],
        // target RSS High
        [[HO, HO, HO], [HO, HO, HO], [NO, NO, HO]],
    ],
    // serving RSS High
    [
        // target RSS Low
        [[NO, NO, HO], [NO, NO, HO], [NO, NO, NO]],
        // target RSS High
        [[NO, HO, HO], [NO, NO, HO], [NO, NO, NO]],
    ],
];

pub fn table_oracle(levels: Levels) -> Action {
    let cell = TABLE[levels.rss_serving as usize][levels.rss_target as usize]
        [levels.ti_target.index()][levels.ti_serving.index()];
    if cell {
        Action::Handoff
    } else {
        Action::NoHandoff
    }
}

/// One training sample per level combination, labelled by [`table_oracle`].
pub fn canonical_dataset() -> Vec<TrainingSample> {
    Levels::all()
        .map(|levels| {
            let target = match table_oracle(levels) {
                Action::Handoff => 1.0,
                Action::NoHandoff => -1.0,
            };
            TrainingSample {
                x: encode(levels),
                target,
            }
        })
        .collect()
}

pub fn gate(rss_serving_dbm: f64, rss_target_dbm: f64, config: &DecisionConfig) -> bool {
    let margin_ok = rss_target_dbm - rss_serving_dbm >= config.hysteresis_db;
    match config.gate_mode {
        GateMode::Full => rss_serving_dbm < config.threshold_dbm && margin_ok,
        GateMode::HysteresisOnly => margin_ok,
        GateMode::None => true,
    }
}

pub fn levels_of(
    rss_serving_dbm: f64,
    rss_target_dbm: f64,
    ti_serving: TrafficIntensity,
    ti_target: TrafficIntensity,
    config: &DecisionConfig,
) -> Levels {
    Levels::new(
        quantize_rss(rss_serving_dbm, config),
        quantize_rss(rss_target_dbm, config),
        quantize_ti(ti_serving, config),
        quantize_ti(ti_target, config),
    )
}

pub fn decide(
    rss_serving_dbm: f64,
    rss_target_dbm: f64,
    ti_serving: TrafficIntensity,
    ti_target: TrafficIntensity,
    net: &NetworkWeights,
    config: &DecisionConfig,
) -> Result<HandoffDecision> {
    ensure_finite("serving rss", rss_serving_dbm)?;
    ensure_finite("target rss", rss_target_dbm)?;
    if !gate(rss_serving_dbm, rss_target_dbm, config) {
        return Ok(HandoffDecision::GATE_BLOCKED);
    }
    let levels = levels_of(rss_serving_dbm, rss_target_dbm, ti_serving, ti_target, config);
    let action = match net.classify(&encode(levels))? {
        Vote::Positive => Action::Handoff,
        Vote::Negative => Action::NoHandoff,
    };
    Ok(HandoffDecision::network(action))
}
