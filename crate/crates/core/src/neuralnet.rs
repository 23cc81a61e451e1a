//! A 5-20-1 feedforward network trained by online backpropagation.
//!
//! Hidden units use `tanh`; the output is a plain weighted sum of the hidden
//! activations with no bias and no squashing. The fifth input is the
//! constant bias `+1`. A positive output means "hand off".

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::RngStream;
use crate::error::{ensure_finite, Error, Result};

pub const INPUTS: usize = 5;
pub const HIDDEN: usize = 20;
/// Index of the constant bias input.
pub const BIAS_INDEX: usize = INPUTS - 1;

const INIT_STREAM: u64 = u64::MAX;
const SHUFFLE_STREAM: u64 = u64::MAX - 1;

pub type Input = [f64; INPUTS];

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    /// Input-to-hidden weights, one row per hidden unit.
    pub hidden: [[f64; INPUTS]; HIDDEN],
    /// Hidden-to-output weights.
    pub output: [f64; HIDDEN],
}

/// Gradients have the same shape as the weights.
pub type Gradients = NetworkWeights;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forward {
    pub y: f64,
    pub hidden: [f64; HIDDEN],
}

/// Sign of the network output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vote {
    Positive,
    Negative,
}

impl Vote {
    /// Zero votes negative.
    pub fn of(y: f64) -> Self {
        if y > 0.0 {
            Vote::Positive
        } else {
            Vote::Negative
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Vote::Positive => 1.0,
            Vote::Negative => -1.0,
        }
    }
}

impl NetworkWeights {
    pub fn zeros() -> Self {
        Self {
            hidden: [[0.0; INPUTS]; HIDDEN],
            output: [0.0; HIDDEN],
        }
    }

    /// Weights i.i.d. uniform on `[-init_range, init_range]`.
    pub fn init(seed: u64, init_range: f64) -> Self {
        let mut rng = RngStream::new(seed, INIT_STREAM);
        let mut w = Self::zeros();
        for row in w.hidden.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.uniform(-init_range, init_range);
            }
        }
        for v in w.output.iter_mut() {
            *v = rng.uniform(-init_range, init_range);
        }
        w
    }

    pub fn forward(&self, x: &Input) -> Result<Forward> {
        for &xi in x {
            ensure_finite("network input", xi)?;
        }
        Ok(self.forward_unchecked(x))
    }

    fn forward_unchecked(&self, x: &Input) -> Forward {
        let mut hidden = [0.0; HIDDEN];
        let mut y = 0.0;
        for (j, (h, row)) in hidden.iter_mut().zip(&self.hidden).enumerate() {
            let z: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
            *h = z.tanh();
            y += self.output[j] * *h;
        }
        Forward { y, hidden }
    }

    pub fn classify(&self, x: &Input) -> Result<Vote> {
        Ok(Vote::of(self.forward(x)?.y))
    }

    /// Analytic gradient of `0.5 * (y - target)^2`.
    ///
    /// tanh' is written in terms of the activation, `1 - h^2`.
    pub fn gradient(&self, sample: &TrainingSample) -> Gradients {
        let f = self.forward_unchecked(&sample.x);
        let err = f.y - sample.target;
        let mut g = Self::zeros();
        for j in 0..HIDDEN {
            let h = f.hidden[j];
            g.output[j] = err * h;
            let delta = err * self.output[j] * (1.0 - h * h);
            for (gi, xi) in g.hidden[j].iter_mut().zip(&sample.x) {
                *gi = delta * xi;
            }
        }
        g
    }

    /// `self -= rate * grad`
    fn descend(&mut self, grad: &Gradients, rate: f64) {
        for (row, grow) in self.hidden.iter_mut().zip(&grad.hidden) {
            for (w, g) in row.iter_mut().zip(grow) {
                *w -= rate * g;
            }
        }
        for (w, g) in self.output.iter_mut().zip(&grad.output) {
            *w -= rate * g;
        }
    }

    /// Flat view in (hidden row-major, then output) order.
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.hidden
            .iter()
            .flat_map(|r| r.iter().copied())
            .chain(self.output.iter().copied())
    }

    pub fn param_mut(&mut self, index: usize) -> &mut f64 {
        let n_hidden = HIDDEN * INPUTS;
        if index < n_hidden {
            &mut self.hidden[index / INPUTS][index % INPUTS]
        } else {
            &mut self.output[index - n_hidden]
        }
    }

    pub const PARAM_COUNT: usize = HIDDEN * INPUTS + HIDDEN;

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&WeightsFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: WeightsFile = serde_json::from_str(text)?;
        Self::try_from(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk layout of the weights.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    hidden: Vec<Vec<f64>>,
    output: Vec<f64>,
    activation: String,
}

impl From<&NetworkWeights> for WeightsFile {
    fn from(w: &NetworkWeights) -> Self {
        Self {
            hidden: w.hidden.iter().map(|r| r.to_vec()).collect(),
            output: w.output.to_vec(),
            activation: "tanh".to_owned(),
        }
    }
}

impl TryFrom<WeightsFile> for NetworkWeights {
    type Error = Error;

    fn try_from(file: WeightsFile) -> Result<Self> {
        if file.activation != "tanh" {
            return Err(Error::MalformedWeights(format!(
                "unsupported activation `{}`",
                file.activation
            )));
        }
        if file.hidden.len() != HIDDEN {
            return Err(Error::MalformedWeights(format!(
                "expected {HIDDEN} hidden rows, found {}",
                file.hidden.len()
            )));
        }
        if file.output.len() != HIDDEN {
            return Err(Error::MalformedWeights(format!(
                "expected {HIDDEN} output weights, found {}",
                file.output.len()
            )));
        }
        let mut w = NetworkWeights::zeros();
        for (j, row) in file.hidden.iter().enumerate() {
            if row.len() != INPUTS {
                return Err(Error::MalformedWeights(format!(
                    "hidden row {j} has {} weights, expected {INPUTS}",
                    row.len()
                )));
            }
            w.hidden[j].copy_from_slice(row);
        }
        w.output.copy_from_slice(&file.output);
        if w.params().any(|v| !v.is_finite()) {
            return Err(Error::MalformedWeights("non-finite weight".into()));
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSample {
    pub x: Input,
    pub target: f64,
}

impl TrainingSample {
    /// Appends the bias input to four features.
    pub fn new(features: [f64; INPUTS - 1], target: f64) -> Result<Self> {
        if target != 1.0 && target != -1.0 {
            return Err(Error::invalid("target", format!("{target} is not +1 or -1")));
        }
        let mut x = [1.0; INPUTS];
        x[..BIAS_INDEX].copy_from_slice(&features);
        for &v in &x {
            ensure_finite("training input", v)?;
        }
        Ok(Self { x, target })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Training stops once every sample's `|y - target|` is below this.
    pub stop_tolerance: f64,
    pub init_range: f64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            max_epochs: 10_000,
            stop_tolerance: 0.2,
            init_range: 0.5,
            shuffle_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate", "must be positive"));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs", "must be positive"));
        }
        if !(self.stop_tolerance > 0.0 && self.stop_tolerance < 2.0) {
            return Err(Error::invalid("stop_tolerance", "must lie in (0, 2)"));
        }
        if !(self.init_range.is_finite() && self.init_range >= 0.0) {
            return Err(Error::invalid("init_range", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub weights: NetworkWeights,
    pub epochs_used: usize,
    pub final_max_error: f64,
    /// Mean squared-error loss over the dataset after each epoch.
    pub epoch_losses: Vec<f64>,
}

fn evaluate(net: &NetworkWeights, dataset: &[TrainingSample]) -> (f64, f64) {
    let mut loss = 0.0;
    let mut max_err: f64 = 0.0;
    for s in dataset {
        let e = net.forward_unchecked(&s.x).y - s.target;
        loss += 0.5 * e * e;
        max_err = max_err.max(e.abs());
    }
    (loss / dataset.len() as f64, max_err)
}

/// Per-sample gradient descent with the sample order reshuffled every epoch.
pub fn train(dataset: &[TrainingSample], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if let Some(s) = dataset.iter().find(|s| s.x[BIAS_INDEX] != 1.0) {
        return Err(Error::invalid(
            "dataset",
            format!("bias input is {} instead of 1", s.x[BIAS_INDEX]),
        ));
    }

    let mut net = NetworkWeights::init(config.shuffle_seed, config.init_range);
    let mut rng = RngStream::new(config.shuffle_seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut epoch_losses = Vec::new();

    let (_, mut max_err) = evaluate(&net, dataset);
    if max_err < config.stop_tolerance {
        return Ok(TrainOutcome {
            weights: net,
            epochs_used: 0,
            final_max_error: max_err,
            epoch_losses,
        });
    }

    for epoch in 1..=config.max_epochs {
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        for &i in &order {
            let g = net.gradient(&dataset[i]);
            net.descend(&g, config.learning_rate);
        }
        let (loss, err) = evaluate(&net, dataset);
        if !loss.is_finite() {
            return Err(Error::TrainingDidNotConverge {
                epochs: epoch,
                final_max_error: err,
            });
        }
        epoch_losses.push(loss);
        max_err = err;
        if max_err < config.stop_tolerance {
            return Ok(TrainOutcome {
                weights: net,
                epochs_used: epoch,
                final_max_error: max_err,
                epoch_losses,
            });
        }
    }
    Err(Error::TrainingDidNotConverge {
        epochs: config.max_epochs,
        final_max_error: max_err,
    })
}
