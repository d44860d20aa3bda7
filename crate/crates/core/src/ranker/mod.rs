//! MatchPyramid-style ranker: `[conv + ReLU]×n → adaptive max-pool → MLP`.
//!
//! The forward pass records an [`ActivationCache`]; from it the ranker
//! computes exact gradients of the score with respect to the last
//! convolutional feature maps (for Grad-CAM) or all parameters (for training).

mod forward;
mod io;
mod train;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use forward::{ActivationCache, ModelGradients, ParamGrad};
pub use io::{load_model, save_model, FORMAT_VERSION, MAGIC};
pub use train::{pairwise_accuracy, train, train_with_progress, TrainOptions, TrainReport};

/// Zero padding applied by a convolution layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Output has the input's spatial size.
    #[default]
    Same,
    /// No padding; output shrinks by `kernel - 1` per axis.
    Valid,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub out_channels: usize,
    #[serde(default)]
    pub padding: Padding,
}

impl ConvSpec {
    pub fn new(kernel_h: usize, kernel_w: usize, out_channels: usize) -> Self {
        Self {
            kernel_h,
            kernel_w,
            out_channels,
            padding: Padding::Same,
        }
    }

    pub fn valid(mut self) -> Self {
        self.padding = Padding::Valid;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankerConfig {
    pub conv_layers: Vec<ConvSpec>,
    /// Fixed `(rows, cols)` of the adaptive max-pool output.
    pub pool_out: (usize, usize),
    /// Hidden MLP widths; the output layer (width 1) is implicit.
    pub mlp_hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for RankerConfig {
    fn default() -> Self {
        Self {
            conv_layers: vec![ConvSpec::new(3, 3, 8), ConvSpec::new(3, 3, 16)],
            pool_out: (4, 8),
            mlp_hidden: vec![32],
            seed: 42,
        }
    }
}

impl RankerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.conv_layers.is_empty() {
            return Err(Error::Config(
                "at least one convolution layer is required".into(),
            ));
        }
        for (i, c) in self.conv_layers.iter().enumerate() {
            if c.kernel_h == 0 || c.kernel_w == 0 || c.out_channels == 0 {
                return Err(Error::Config(format!(
                    "convolution layer {i} has a zero dimension: {c:?}"
                )));
            }
        }
        if self.pool_out.0 == 0 || self.pool_out.1 == 0 {
            return Err(Error::Config(format!(
                "pool_out must be at least 1x1, got {:?}",
                self.pool_out
            )));
        }
        if let Some(i) = self.mlp_hidden.iter().position(|&w| w == 0) {
            return Err(Error::Config(format!("hidden layer {i} has width 0")));
        }
        Ok(())
    }

    /// Channels of the last convolution layer, i.e. the number of Grad-CAM feature maps.
    pub fn feature_channels(&self) -> usize {
        self.conv_layers.last().map_or(0, |c| c.out_channels)
    }

    /// Length of the flattened pooled vector fed to the MLP.
    pub fn pooled_len(&self) -> usize {
        self.feature_channels() * self.pool_out.0 * self.pool_out.1
    }

    /// Total number of learnable scalars implied by the configuration.
    pub fn parameter_count(&self) -> usize {
        let mut in_ch = 1;
        let mut total = 0;
        for c in &self.conv_layers {
            total += c.out_channels * in_ch * c.kernel_h * c.kernel_w + c.out_channels;
            in_ch = c.out_channels;
        }
        let mut fan_in = self.pooled_len();
        for &w in self.mlp_hidden.iter().chain(std::iter::once(&1)) {
            total += w * fan_in + w;
            fan_in = w;
        }
        total
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    spec: ConvSpec,
    in_channels: usize,
    /// `[out][in][kh][kw]`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl ConvLayer {
    fn zeros(spec: ConvSpec, in_channels: usize) -> Self {
        let n = spec.out_channels * in_channels * spec.kernel_h * spec.kernel_w;
        Self {
            bias: vec![0.0; spec.out_channels],
            weights: vec![0.0; n],
            spec,
            in_channels,
        }
    }

    pub fn spec(&self) -> &ConvSpec {
        &self.spec
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.spec.out_channels
    }

    #[inline]
    pub fn weight_index(&self, o: usize, c: usize, dy: usize, dx: usize) -> usize {
        ((o * self.in_channels + c) * self.spec.kernel_h + dy) * self.spec.kernel_w + dx
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    /// `[out][in]`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl DenseLayer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }
}

static NEXT_MODEL_ID: AtomicU64 = AtomicU64::new(1);

fn next_model_id() -> u64 {
    NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed)
}

/// All learnable parameters of the ranker plus its architecture.
///
/// Every mutable accessor bumps an internal generation counter; activation
/// caches recorded before a mutation are rejected by the backward passes.
#[derive(Debug)]
pub struct RankerModel {
    config: RankerConfig,
    conv: Vec<ConvLayer>,
    dense: Vec<DenseLayer>,
    id: u64,
    generation: u64,
}

impl Clone for RankerModel {
    fn clone(&self) -> Self {
        Self {
            config: self.config.clone(),
            conv: self.conv.clone(),
            dense: self.dense.clone(),
            id: next_model_id(),
            generation: 0,
        }
    }
}

impl PartialEq for RankerModel {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.conv == other.conv && self.dense == other.dense
    }
}

impl RankerModel {
    /// Model with every parameter set to zero.
    pub fn zeros(config: RankerConfig) -> Result<Self> {
        config.validate()?;
        let mut conv = Vec::with_capacity(config.conv_layers.len());
        let mut in_ch = 1;
        for spec in &config.conv_layers {
            conv.push(ConvLayer::zeros(spec.clone(), in_ch));
            in_ch = spec.out_channels;
        }
        let mut dense = Vec::with_capacity(config.mlp_hidden.len() + 1);
        let mut fan_in = config.pooled_len();
        for &w in config.mlp_hidden.iter().chain(std::iter::once(&1)) {
            dense.push(DenseLayer::zeros(fan_in, w));
            fan_in = w;
        }
        Ok(Self {
            config,
            conv,
            dense,
            id: next_model_id(),
            generation: 0,
        })
    }

    /// Glorot-uniform weights `U[-s, s]`, `s = sqrt(6 / (fan_in + fan_out))`,
    /// zero biases, drawn from a generator seeded with `config.seed`.
    pub fn init(config: RankerConfig) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(model.config.seed);
        for layer in &mut model.conv {
            let area = layer.spec.kernel_h * layer.spec.kernel_w;
            let fan_in = layer.in_channels * area;
            let fan_out = layer.spec.out_channels * area;
            fill_uniform(&mut rng, &mut layer.weights, fan_in, fan_out);
        }
        for layer in &mut model.dense {
            fill_uniform(&mut rng, &mut layer.weights, layer.inputs, layer.outputs);
        }
        Ok(model)
    }

    pub fn config(&self) -> &RankerConfig {
        &self.config
    }

    pub fn conv_layers(&self) -> &[ConvLayer] {
        &self.conv
    }

    pub fn dense_layers(&self) -> &[DenseLayer] {
        &self.dense
    }

    pub fn conv_layers_mut(&mut self) -> &mut [ConvLayer] {
        self.generation += 1;
        &mut self.conv
    }

    pub fn dense_layers_mut(&mut self) -> &mut [DenseLayer] {
        self.generation += 1;
        &mut self.dense
    }

    pub fn parameter_count(&self) -> usize {
        self.conv
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .chain(self.dense.iter().map(|l| l.weights.len() + l.bias.len()))
            .sum()
    }

    /// Parameters in declaration order: per conv layer weights then bias,
    /// then per dense layer weights then bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.conv {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        for l in &self.dense {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Overwrites all parameters from a flat slice in declaration order.
    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.parameter_count(),
                values.len()
            )));
        }
        self.generation += 1;
        let mut rest = values;
        let mut take = |dst: &mut [f64]| {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        };
        for l in &mut self.conv {
            take(&mut l.weights);
            take(&mut l.bias);
        }
        for l in &mut self.dense {
            take(&mut l.weights);
            take(&mut l.bias);
        }
        Ok(())
    }

    /// `θ += scale · g` for every parameter.
    pub fn apply_gradients(&mut self, grads: &ModelGradients, scale: f64) -> Result<()> {
        if grads.conv.len() != self.conv.len() || grads.dense.len() != self.dense.len() {
            return Err(Error::Shape(
                "gradient layout does not match the model".into(),
            ));
        }
        self.generation += 1;
        fn axpy(dst: &mut [f64], src: &[f64], scale: f64) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
        for (l, g) in self.conv.iter_mut().zip(&grads.conv) {
            axpy(&mut l.weights, &g.weights, scale);
            axpy(&mut l.bias, &g.bias, scale);
        }
        for (l, g) in self.dense.iter_mut().zip(&grads.dense) {
            axpy(&mut l.weights, &g.weights, scale);
            axpy(&mut l.bias, &g.bias, scale);
        }
        Ok(())
    }

    fn is_current(&self, cache: &ActivationCache) -> bool {
        cache.model_id == self.id && cache.generation == self.generation
    }
}

fn fill_uniform(rng: &mut ChaCha8Rng, dst: &mut [f64], fan_in: usize, fan_out: usize) {
    let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for w in dst {
        *w = rng.gen_range(-s..=s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic() {
        let a = RankerModel::init(RankerConfig::default()).unwrap();
        let b = RankerModel::init(RankerConfig::default()).unwrap();
        let (pa, pb) = (a.parameters(), b.parameters());
        assert!(pa.iter().zip(&pb).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = RankerModel::init(RankerConfig {
            seed: 7,
            ..RankerConfig::default()
        })
        .unwrap();
        assert_ne!(pa, c.parameters());
    }

    #[test]
    fn zero_conv_layers_rejected() {
        let cfg = RankerConfig {
            conv_layers: vec![],
            ..RankerConfig::default()
        };
        assert!(matches!(RankerModel::init(cfg), Err(Error::Config(_))));
        let cfg = RankerConfig {
            pool_out: (0, 3),
            ..RankerConfig::default()
        };
        assert!(matches!(RankerModel::init(cfg), Err(Error::Config(_))));
    }

    #[test]
    fn default_parameter_count() {
        // conv1: 1*8*3*3 + 8 = 80
        // conv2: 8*16*3*3 + 16 = 1168
        // dense1: (16*4*8)*32 + 32 = 16416
        // dense2: 32*1 + 1 = 33
        let expected = 80 + 1168 + 16416 + 33;
        assert_eq!(expected, 17697);
        let model = RankerModel::init(RankerConfig::default()).unwrap();
        assert_eq!(model.parameter_count(), expected);
        assert_eq!(model.config().parameter_count(), expected);
        assert_eq!(model.parameters().len(), expected);
    }

    #[test]
    fn weights_within_glorot_bound() {
        let model = RankerModel::init(RankerConfig::default()).unwrap();
        let s = (6.0f64 / (9.0 + 72.0)).sqrt();
        let l0 = &model.conv_layers()[0];
        assert!(l0.weights().iter().all(|w| w.abs() <= s));
        assert!(l0.bias().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn set_parameters_round_trip() {
        let a = RankerModel::init(RankerConfig::default()).unwrap();
        let mut b = RankerModel::zeros(RankerConfig::default()).unwrap();
        b.set_parameters(&a.parameters()).unwrap();
        assert_eq!(a, b);
        assert!(b.set_parameters(&[1.0]).is_err());
    }
}
