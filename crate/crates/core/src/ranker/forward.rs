use super::{ConvLayer, DenseLayer, Padding, RankerModel};
use crate::{Error, Matrix, Result, Tensor3};

/// Score, pool argmax indices, and per-dense-layer inputs and pre-activations.
type HeadPass = (f64, Vec<usize>, Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Activations recorded by one forward pass over one interaction matrix.
#[derive(Clone, Debug)]
pub struct ActivationCache {
    pub(super) model_id: u64,
    pub(super) generation: u64,
    input_shape: (usize, usize),
    /// Input of each conv layer.
    conv_inputs: Vec<Tensor3>,
    /// Pre-ReLU output of each conv layer.
    conv_pre: Vec<Tensor3>,
    /// Post-ReLU output of the last conv layer: the feature maps `A^k`.
    feature_maps: Tensor3,
    /// For each pooled output, the flat index of its argmax in `feature_maps`.
    pool_argmax: Vec<usize>,
    /// Input vector of each dense layer (the first is the pooled vector).
    dense_inputs: Vec<Vec<f64>>,
    /// Pre-activation output of each dense layer.
    dense_pre: Vec<Vec<f64>>,
    score: f64,
}

impl ActivationCache {
    pub fn score(&self) -> f64 {
        self.score
    }

    /// Post-ReLU output of the last convolution layer.
    pub fn feature_maps(&self) -> &Tensor3 {
        &self.feature_maps
    }

    pub fn input_shape(&self) -> (usize, usize) {
        self.input_shape
    }

    pub fn pooled(&self) -> &[f64] {
        &self.dense_inputs[0]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradients of the score with respect to every parameter, laid out like the model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelGradients {
    pub conv: Vec<ParamGrad>,
    pub dense: Vec<ParamGrad>,
    /// `∂S/∂A^k` for the last conv layer's feature maps.
    pub feature_maps: Tensor3,
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

fn conv_geometry(layer: &ConvLayer, rows: usize, cols: usize) -> (usize, usize, usize, usize) {
    let (kh, kw) = (layer.spec.kernel_h, layer.spec.kernel_w);
    match layer.spec.padding {
        Padding::Same => (rows, cols, (kh - 1) / 2, (kw - 1) / 2),
        Padding::Valid => (rows + 1 - kh, cols + 1 - kw, 0, 0),
    }
}

/// Range of output columns `x` for which `x + d - pad` lies in `[0, in_len)`.
#[inline]
fn valid_range(d: usize, pad: usize, in_len: usize, out_len: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(d);
    let hi = (in_len + pad).saturating_sub(d).min(out_len);
    (lo, hi.max(lo))
}

fn conv_forward(layer: &ConvLayer, input: &Tensor3) -> Tensor3 {
    let (rows, cols) = (input.rows(), input.cols());
    let (out_rows, out_cols, pt, pl) = conv_geometry(layer, rows, cols);
    let (kh, kw) = (layer.spec.kernel_h, layer.spec.kernel_w);
    let mut out = Tensor3::zeros(layer.spec.out_channels, out_rows, out_cols);
    let out_data = out.as_mut_slice();
    let in_data = input.as_slice();
    for o in 0..layer.spec.out_channels {
        let plane = &mut out_data[o * out_rows * out_cols..(o + 1) * out_rows * out_cols];
        plane.fill(layer.bias[o]);
        for c in 0..layer.in_channels {
            let in_plane = &in_data[c * rows * cols..(c + 1) * rows * cols];
            for dy in 0..kh {
                let (y_lo, y_hi) = valid_range(dy, pt, rows, out_rows);
                for dx in 0..kw {
                    let w = layer.weights[layer.weight_index(o, c, dy, dx)];
                    if w == 0.0 {
                        continue;
                    }
                    let (x_lo, x_hi) = valid_range(dx, pl, cols, out_cols);
                    for y in y_lo..y_hi {
                        let iy = y + dy - pt;
                        let src = &in_plane[iy * cols + x_lo + dx - pl..iy * cols + x_hi + dx - pl];
                        let dst = &mut plane[y * out_cols + x_lo..y * out_cols + x_hi];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += w * s;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Backpropagates `d_out` (gradient w.r.t. the pre-activation output) through
/// one conv layer. Accumulates parameter gradients into `grad` and returns the
/// gradient w.r.t. the layer input when `need_input` is set.
fn conv_backward(
    layer: &ConvLayer,
    input: &Tensor3,
    d_out: &Tensor3,
    grad: &mut ParamGrad,
    need_input: bool,
) -> Option<Tensor3> {
    let (rows, cols) = (input.rows(), input.cols());
    let (out_rows, out_cols) = (d_out.rows(), d_out.cols());
    let (_, _, pt, pl) = conv_geometry(layer, rows, cols);
    let (kh, kw) = (layer.spec.kernel_h, layer.spec.kernel_w);
    let mut d_in = need_input.then(|| Tensor3::zeros(layer.in_channels, rows, cols));
    let in_data = input.as_slice();
    for o in 0..layer.spec.out_channels {
        let g_plane = d_out.channel(o);
        grad.bias[o] += g_plane.iter().sum::<f64>();
        for c in 0..layer.in_channels {
            let in_plane = &in_data[c * rows * cols..(c + 1) * rows * cols];
            for dy in 0..kh {
                let (y_lo, y_hi) = valid_range(dy, pt, rows, out_rows);
                for dx in 0..kw {
                    let (x_lo, x_hi) = valid_range(dx, pl, cols, out_cols);
                    let wi = layer.weight_index(o, c, dy, dx);
                    let w = layer.weights[wi];
                    let mut acc = 0.0;
                    for y in y_lo..y_hi {
                        let iy = y + dy - pt;
                        let g = &g_plane[y * out_cols + x_lo..y * out_cols + x_hi];
                        let start = iy * cols + x_lo + dx - pl;
                        let src = &in_plane[start..start + g.len()];
                        acc += g.iter().zip(src).map(|(a, b)| a * b).sum::<f64>();
                        if let Some(d_in) = d_in.as_mut() {
                            let base = c * rows * cols + start;
                            let dst = &mut d_in.as_mut_slice()[base..base + g.len()];
                            for (d, gv) in dst.iter_mut().zip(g) {
                                *d += w * gv;
                            }
                        }
                    }
                    grad.weights[wi] += acc;
                }
            }
        }
    }
    d_in
}

#[inline]
fn pool_bounds(i: usize, input: usize, output: usize) -> (usize, usize) {
    let start = i * input / output;
    let end = ((i + 1) * input).div_ceil(output);
    (start, end)
}

/// Adaptive max-pool; returns pooled values and the flat argmax of each cell.
/// Ties resolve to the first element in row-major order.
fn adaptive_max_pool(maps: &Tensor3, out: (usize, usize)) -> (Vec<f64>, Vec<usize>) {
    let (channels, rows, cols) = maps.shape();
    let (ph, pw) = out;
    let mut values = Vec::with_capacity(channels * ph * pw);
    let mut argmax = Vec::with_capacity(channels * ph * pw);
    let data = maps.as_slice();
    for c in 0..channels {
        for py in 0..ph {
            let (r0, r1) = pool_bounds(py, rows, ph);
            for px in 0..pw {
                let (c0, c1) = pool_bounds(px, cols, pw);
                let mut best_idx = maps.index(c, r0, c0);
                let mut best = data[best_idx];
                for r in r0..r1 {
                    for q in c0..c1 {
                        let idx = maps.index(c, r, q);
                        if data[idx] > best {
                            best = data[idx];
                            best_idx = idx;
                        }
                    }
                }
                values.push(best);
                argmax.push(best_idx);
            }
        }
    }
    (values, argmax)
}

fn dense_forward(layer: &DenseLayer, x: &[f64]) -> Vec<f64> {
    (0..layer.outputs)
        .map(|o| {
            let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
            layer.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        })
        .collect()
}

impl RankerModel {
    fn check_input(&self, rows: usize, cols: usize) -> Result<()> {
        let (mut r, mut c) = (rows, cols);
        for (i, layer) in self.conv.iter().enumerate() {
            let (kh, kw) = (layer.spec.kernel_h, layer.spec.kernel_w);
            if r < kh || c < kw {
                return Err(Error::Shape(format!(
                    "conv layer {i} with {kh}x{kw} kernel received a {r}x{c} input \
                     (interaction matrix is {rows}x{cols})"
                )));
            }
            (r, c, _, _) = conv_geometry(layer, r, c);
        }
        Ok(())
    }

    /// Pool + MLP head: the score as a function of the last feature maps.
    fn head(&self, maps: &Tensor3) -> HeadPass {
        let (pooled, argmax) = adaptive_max_pool(maps, self.config.pool_out);
        let mut inputs = Vec::with_capacity(self.dense.len());
        let mut pres = Vec::with_capacity(self.dense.len());
        let mut x = pooled;
        let last = self.dense.len() - 1;
        for (i, layer) in self.dense.iter().enumerate() {
            let pre = dense_forward(layer, &x);
            let next = if i == last {
                pre.clone()
            } else {
                pre.iter().map(|&v| relu(v)).collect()
            };
            inputs.push(std::mem::replace(&mut x, next));
            pres.push(pre);
        }
        (x[0], argmax, inputs, pres)
    }

    /// Scores an interaction matrix and records the activations needed for
    /// backpropagation.
    pub fn forward(&self, interaction: &Matrix) -> Result<(f64, ActivationCache)> {
        let (rows, cols) = interaction.shape();
        self.check_input(rows, cols)?;
        let mut conv_inputs = Vec::with_capacity(self.conv.len());
        let mut conv_pre = Vec::with_capacity(self.conv.len());
        let mut x = Tensor3::from_matrix(interaction);
        for layer in &self.conv {
            let pre = conv_forward(layer, &x);
            let mut act = pre.clone();
            act.as_mut_slice().iter_mut().for_each(|v| *v = relu(*v));
            conv_inputs.push(std::mem::replace(&mut x, act));
            conv_pre.push(pre);
        }
        let feature_maps = x;
        let (score, pool_argmax, dense_inputs, dense_pre) = self.head(&feature_maps);
        let cache = ActivationCache {
            model_id: self.id,
            generation: self.generation,
            input_shape: (rows, cols),
            conv_inputs,
            conv_pre,
            feature_maps,
            pool_argmax,
            dense_inputs,
            dense_pre,
            score,
        };
        Ok((score, cache))
    }

    pub fn score(&self, interaction: &Matrix) -> Result<f64> {
        self.forward(interaction).map(|(s, _)| s)
    }

    /// Evaluates pool + MLP on externally supplied last-layer feature maps.
    pub fn score_from_feature_maps(&self, maps: &Tensor3) -> Result<f64> {
        let channels = self.config.feature_channels();
        if maps.channels() != channels || maps.rows() == 0 || maps.cols() == 0 {
            return Err(Error::Shape(format!(
                "expected {channels} non-empty feature maps, got {:?}",
                maps.shape()
            )));
        }
        Ok(self.head(maps).0)
    }

    /// Gradient of the score w.r.t. the flattened pooled vector.
    fn backward_head(&self, cache: &ActivationCache, grads: Option<&mut [ParamGrad]>) -> Vec<f64> {
        let mut d = vec![1.0];
        let mut grads = grads;
        for (i, layer) in self.dense.iter().enumerate().rev() {
            let input = &cache.dense_inputs[i];
            if let Some(g) = grads.as_deref_mut() {
                let g = &mut g[i];
                for (o, &dv) in d.iter().enumerate() {
                    g.bias[o] += dv;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, x) in row.iter_mut().zip(input) {
                        *gw += dv * x;
                    }
                }
            }
            let mut d_in = vec![0.0; layer.inputs];
            for (o, &dv) in d.iter().enumerate() {
                if dv == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (di, w) in d_in.iter_mut().zip(row) {
                    *di += w * dv;
                }
            }
            if i > 0 {
                for (di, &pre) in d_in.iter_mut().zip(&cache.dense_pre[i - 1]) {
                    if pre <= 0.0 {
                        *di = 0.0;
                    }
                }
            }
            d = d_in;
        }
        d
    }

    fn scatter_pool(&self, cache: &ActivationCache, d_pooled: &[f64]) -> Tensor3 {
        let (c, r, q) = cache.feature_maps.shape();
        let mut d = Tensor3::zeros(c, r, q);
        let data = d.as_mut_slice();
        for (&idx, &g) in cache.pool_argmax.iter().zip(d_pooled) {
            data[idx] += g;
        }
        d
    }

    /// Exact `∂S/∂A^k` for the feature maps recorded in `cache`.
    pub fn backward_to_feature_maps(&self, cache: &ActivationCache) -> Result<Tensor3> {
        if !self.is_current(cache) {
            return Err(Error::StaleCache);
        }
        let d_pooled = self.backward_head(cache, None);
        Ok(self.scatter_pool(cache, &d_pooled))
    }

    /// Gradients of the score w.r.t. every parameter and the last feature maps.
    pub fn gradients(&self, cache: &ActivationCache) -> Result<ModelGradients> {
        if !self.is_current(cache) {
            return Err(Error::StaleCache);
        }
        let mut dense: Vec<ParamGrad> = self
            .dense
            .iter()
            .map(|l| ParamGrad {
                weights: vec![0.0; l.weights.len()],
                bias: vec![0.0; l.bias.len()],
            })
            .collect();
        let d_pooled = self.backward_head(cache, Some(&mut dense));
        let feature_maps = self.scatter_pool(cache, &d_pooled);

        let mut conv: Vec<ParamGrad> = self
            .conv
            .iter()
            .map(|l| ParamGrad {
                weights: vec![0.0; l.weights.len()],
                bias: vec![0.0; l.bias.len()],
            })
            .collect();
        let mut d_act = feature_maps.clone();
        for i in (0..self.conv.len()).rev() {
            let mut d_pre = d_act;
            for (g, &pre) in d_pre
                .as_mut_slice()
                .iter_mut()
                .zip(cache.conv_pre[i].as_slice())
            {
                if pre <= 0.0 {
                    *g = 0.0;
                }
            }
            match conv_backward(
                &self.conv[i],
                &cache.conv_inputs[i],
                &d_pre,
                &mut conv[i],
                i > 0,
            ) {
                Some(d) => d_act = d,
                None => break,
            }
        }
        Ok(ModelGradients {
            conv,
            dense,
            feature_maps,
        })
    }
}
