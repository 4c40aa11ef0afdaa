//! Online disturbance estimator: a three-layer feedforward network
//! (sigmoid hidden layer, linear scalar output) trained one backpropagation
//! step per control step.
//!
//! The estimate is d_hat = w' * [sigmoid(v' * [theta; 1]); 1]. Bias units on
//! both layers can be disabled for a strict two-matrix reading.

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// Step size of one backpropagation update.
    pub learning_rate: f64,
    /// The estimate is held at zero and no updates run before this time (s).
    pub start_time: f64,
    /// Weights are initialized uniformly in [-init_scale, +init_scale].
    pub init_scale: f64,
    pub seed: u64,
    /// Include bias units on the hidden and output layers.
    pub bias: bool,
    /// Per-input normalization: the i-th input is divided by `input_scale[i]`.
    pub input_scale: Vec<f64>,
}

impl NetworkConfig {
    pub fn new(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            learning_rate: 0.1,
            start_time: 0.0,
            init_scale: 0.1,
            seed: 0,
            bias: true,
            input_scale: vec![1.0; input_dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim < 1 {
            return Err(Error::InvalidConfig("ann.input_dim: must be >= 1".into()));
        }
        if self.hidden_dim < 1 {
            return Err(Error::InvalidConfig("ann.hidden: must be >= 1".into()));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "ann.learning_rate: must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.start_time < 0.0 || !self.start_time.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "ann.start_time: must be >= 0, got {}",
                self.start_time
            )));
        }
        if self.init_scale < 0.0 || !self.init_scale.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "ann.init_scale: must be >= 0, got {}",
                self.init_scale
            )));
        }
        if self.input_scale.len() != self.input_dim {
            return Err(Error::InvalidConfig(format!(
                "ann.input_scale: expected {} entries, got {}",
                self.input_dim,
                self.input_scale.len()
            )));
        }
        if self.input_scale.iter().any(|s| *s <= 0.0 || !s.is_finite()) {
            return Err(Error::InvalidConfig(
                "ann.input_scale: entries must be > 0".into(),
            ));
        }
        Ok(())
    }

    fn input_rows(&self) -> usize {
        self.input_dim + usize::from(self.bias)
    }

    fn output_len(&self) -> usize {
        self.hidden_dim + usize::from(self.bias)
    }
}

/// Weight state of the estimator. `input_to_hidden` has one row per input
/// (plus a bias row when enabled) and one column per hidden unit;
/// `hidden_to_output` has one entry per hidden unit (plus an output bias).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    pub input_to_hidden: DMatrix<f64>,
    pub hidden_to_output: DVector<f64>,
}

impl NetworkWeights {
    /// Seeded uniform initialization in [-init_scale, +init_scale].
    pub fn seeded(cfg: &NetworkConfig) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        let s = cfg.init_scale;
        let mut draw = || {
            if s == 0.0 {
                0.0
            } else {
                rng.random_range(-s..=s)
            }
        };
        let input_to_hidden = DMatrix::from_fn(cfg.input_rows(), cfg.hidden_dim, |_, _| draw());
        let hidden_to_output = DVector::from_fn(cfg.output_len(), |_, _| draw());
        Self {
            input_to_hidden,
            hidden_to_output,
        }
    }

    pub fn zeros(cfg: &NetworkConfig) -> Self {
        Self {
            input_to_hidden: DMatrix::zeros(cfg.input_rows(), cfg.hidden_dim),
            hidden_to_output: DVector::zeros(cfg.output_len()),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.input_to_hidden.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.input_to_hidden.iter().all(|w| w.is_finite())
            && self.hidden_to_output.iter().all(|w| w.is_finite())
    }

    /// Row-major flattening of the hidden matrix followed by the output
    /// vector; the order used for CSV weight snapshots.
    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.input_to_hidden.len() + self.hidden_to_output.len());
        for r in 0..self.input_to_hidden.nrows() {
            for c in 0..self.input_to_hidden.ncols() {
                flat.push(self.input_to_hidden[(r, c)]);
            }
        }
        flat.extend(self.hidden_to_output.iter());
        flat
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Checks that `theta` and the weight shapes describe one consistent network
/// and reports whether bias units are present.
fn layout(theta: &[f64], w: &NetworkWeights) -> Result<bool> {
    let hidden = w.input_to_hidden.ncols();
    let with_bias =
        w.input_to_hidden.nrows() == theta.len() + 1 && w.hidden_to_output.len() == hidden + 1;
    let without_bias =
        w.input_to_hidden.nrows() == theta.len() && w.hidden_to_output.len() == hidden;
    if with_bias == without_bias {
        return Err(Error::InvalidParameter(format!(
            "network shapes ({}x{} hidden matrix, {} output weights) do not match {} inputs",
            w.input_to_hidden.nrows(),
            hidden,
            w.hidden_to_output.len(),
            theta.len()
        )));
    }
    Ok(with_bias)
}

fn hidden_activations(theta: &[f64], w: &NetworkWeights, bias: bool) -> DVector<f64> {
    let hidden = w.input_to_hidden.ncols();
    DVector::from_fn(hidden, |j, _| {
        let mut z = 0.0;
        for (i, th) in theta.iter().enumerate() {
            z += w.input_to_hidden[(i, j)] * th;
        }
        if bias {
            z += w.input_to_hidden[(theta.len(), j)];
        }
        sigmoid(z)
    })
}

/// Network output for input `theta`.
pub fn forward(theta: &[f64], w: &NetworkWeights) -> Result<f64> {
    let bias = layout(theta, w)?;
    let activations = hidden_activations(theta, w, bias);
    let hidden = activations.len();
    let mut out = 0.0;
    for j in 0..hidden {
        out += w.hidden_to_output[j] * activations[j];
    }
    if bias {
        out += w.hidden_to_output[hidden];
    }
    Ok(out)
}

/// Analytic gradient of the output with respect to both weight layers,
/// in the same shapes as the weights themselves.
pub fn gradient(theta: &[f64], w: &NetworkWeights) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let bias = layout(theta, w)?;
    let activations = hidden_activations(theta, w, bias);
    let hidden = activations.len();

    let mut d_output = DVector::zeros(w.hidden_to_output.len());
    for j in 0..hidden {
        d_output[j] = activations[j];
    }
    if bias {
        d_output[hidden] = 1.0;
    }

    let rows = w.input_to_hidden.nrows();
    let mut d_hidden = DMatrix::zeros(rows, hidden);
    for j in 0..hidden {
        let slope = w.hidden_to_output[j] * activations[j] * (1.0 - activations[j]);
        for i in 0..rows {
            let input = if i < theta.len() { theta[i] } else { 1.0 };
            d_hidden[(i, j)] = slope * input;
        }
    }
    Ok((d_hidden, d_output))
}

/// One backpropagation step on the instantaneous cost (1/2) e^2, with `e`
/// the output-error signal: both layers move along +learning_rate * e *
/// (gradient of the output). Non-finite inputs, or a step that would produce
/// non-finite weights, leave the update rejected.
pub fn update(
    theta: &[f64],
    output_error: f64,
    w: &NetworkWeights,
    cfg: &NetworkConfig,
) -> Result<NetworkWeights> {
    if theta.len() != cfg.input_dim {
        return Err(Error::InvalidParameter(format!(
            "expected {} inputs, got {}",
            cfg.input_dim,
            theta.len()
        )));
    }
    if !output_error.is_finite() || theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter(
            "non-finite training signal rejected".into(),
        ));
    }
    let (d_hidden, d_output) = gradient(theta, w)?;
    let step = cfg.learning_rate * output_error;
    let next = NetworkWeights {
        input_to_hidden: &w.input_to_hidden + d_hidden * step,
        hidden_to_output: &w.hidden_to_output + d_output * step,
    };
    if !next.is_finite() {
        return Err(Error::InvalidParameter(
            "update produced non-finite weights".into(),
        ));
    }
    Ok(next)
}

/// Output gated by the activation delay: zero before `start_time` (the
/// boundary instant itself is active), the plain forward pass afterwards.
pub fn gated_estimate(
    t: f64,
    theta: &[f64],
    w: &NetworkWeights,
    cfg: &NetworkConfig,
) -> Result<f64> {
    if t < cfg.start_time {
        return Ok(0.0);
    }
    forward(theta, w)
}

/// Stateful estimator owned by one simulation run. Training and output share
/// the same activation gate: before `start_time` the weights are untouched
/// and the estimate is zero.
#[derive(Debug, Clone)]
pub struct Compensator {
    config: NetworkConfig,
    weights: NetworkWeights,
    faults: u64,
}

impl Compensator {
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let weights = NetworkWeights::seeded(&config);
        Ok(Self {
            config,
            weights,
            faults: 0,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn weights(&self) -> &NetworkWeights {
        &self.weights
    }

    /// Count of rejected updates (non-finite signals).
    pub fn faults(&self) -> u64 {
        self.faults
    }

    fn scaled(&self, signals: &[f64]) -> Result<Vec<f64>> {
        if signals.len() != self.config.input_dim {
            return Err(Error::InvalidParameter(format!(
                "expected {} input signals, got {}",
                self.config.input_dim,
                signals.len()
            )));
        }
        Ok(signals
            .iter()
            .zip(&self.config.input_scale)
            .map(|(s, scale)| s / scale)
            .collect())
    }

    /// Gated disturbance estimate at time `t`.
    pub fn estimate(&self, t: f64, signals: &[f64]) -> Result<f64> {
        let theta = self.scaled(signals)?;
        gated_estimate(t, &theta, &self.weights, &self.config)
    }

    /// One gated training step driven by the combined tracking error.
    ///
    /// The output-error signal fed to backpropagation is -eps: in the closed
    /// loop m eps' = -kappa eps - (d - d_hat), the steady residual d - d_hat
    /// has the opposite sign of eps, so the estimate must move against it.
    pub fn train(&mut self, t: f64, signals: &[f64], combined_error: f64) {
        if t < self.config.start_time {
            return;
        }
        let theta = match self.scaled(signals) {
            Ok(theta) => theta,
            Err(_) => {
                self.faults += 1;
                return;
            }
        };
        match update(&theta, -combined_error, &self.weights, &self.config) {
            Ok(next) => self.weights = next,
            Err(_) => self.faults += 1,
        }
    }
}
