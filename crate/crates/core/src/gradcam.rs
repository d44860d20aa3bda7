//! Grad-CAM for the ranker.
//!
//! Each feature map `A^k` of the last convolution layer is weighted by the
//! mean of `∂S/∂A^k` over its spatial positions, the weighted sum is clipped
//! by ReLU, and the result is upsampled (align-corners bilinear) to the size
//! of the interaction matrix so that `L[i][j]` is the contribution of the term
//! pair `(q_i, d_j)`.

use serde::{Deserialize, Serialize};

use crate::interaction::{build_interaction_matrix, flatten_columns};
use crate::ranker::RankerModel;
use crate::text::{EmbeddingTable, TokenSequence};
use crate::{Error, Matrix, Result, Tensor3};

/// One weight per last-layer feature map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceWeights(pub Vec<f64>);

impl ImportanceWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn common_shape(maps: &[Matrix], what: &str) -> Result<(usize, usize)> {
    let Some(first) = maps.first() else {
        return Err(Error::Shape(format!("no {what}")));
    };
    let shape = first.shape();
    if shape.0 == 0 || shape.1 == 0 {
        return Err(Error::Shape(format!("{what} are empty")));
    }
    if let Some(k) = maps.iter().position(|m| m.shape() != shape) {
        return Err(Error::Shape(format!(
            "{what} {k} is {:?}, expected {shape:?}",
            maps[k].shape()
        )));
    }
    Ok(shape)
}

/// `α_k = (1/Z) Σ_i Σ_j grads[k][i][j]` with `Z` the number of map elements.
pub fn importance_weights(grads: &[Matrix]) -> Result<ImportanceWeights> {
    let (rows, cols) = common_shape(grads, "gradient maps")?;
    let z = (rows * cols) as f64;
    Ok(ImportanceWeights(
        grads.iter().map(|g| g.sum() / z).collect(),
    ))
}

/// `ReLU(Σ_k α_k A^k)`, elementwise.
pub fn localization_map(alpha: &ImportanceWeights, maps: &[Matrix]) -> Result<Matrix> {
    let (rows, cols) = common_shape(maps, "feature maps")?;
    if alpha.len() != maps.len() {
        return Err(Error::Shape(format!(
            "{} importance weights for {} feature maps",
            alpha.len(),
            maps.len()
        )));
    }
    let mut out = Matrix::zeros(rows, cols);
    for (a, map) in alpha.0.iter().zip(maps) {
        for (o, x) in out.as_mut_slice().iter_mut().zip(map.as_slice()) {
            *o += a * x;
        }
    }
    out.as_mut_slice().iter_mut().for_each(|x| *x = x.max(0.0));
    Ok(out)
}

/// Align-corners bilinear upsampling of `map` to `target = (rows, cols)`.
///
/// Target cell `(i, j)` samples source coordinate
/// `(i·(h−1)/(rows−1), j·(w−1)/(cols−1))`; an axis of length 1 on either
/// side maps every target index to source index 0.
pub fn bilinear_upsample(map: &Matrix, target: (usize, usize)) -> Result<Matrix> {
    let (h, w) = map.shape();
    let (rows, cols) = target;
    if h == 0 || w == 0 {
        return Err(Error::Shape("cannot upsample an empty map".into()));
    }
    if rows < h || cols < w {
        return Err(Error::Shape(format!(
            "target {rows}x{cols} is smaller than source {h}x{w}; downsampling is unsupported"
        )));
    }
    let ys: Vec<(usize, usize, f64)> = (0..rows).map(|i| axis_sample(i, h, rows)).collect();
    let xs: Vec<(usize, usize, f64)> = (0..cols).map(|j| axis_sample(j, w, cols)).collect();
    Ok(Matrix::from_fn(rows, cols, |i, j| {
        let (y0, y1, fy) = ys[i];
        let (x0, x1, fx) = xs[j];
        let top = map.get(y0, x0) * (1.0 - fx) + map.get(y0, x1) * fx;
        let bottom = map.get(y1, x0) * (1.0 - fx) + map.get(y1, x1) * fx;
        top * (1.0 - fy) + bottom * fy
    }))
}

/// Neighbouring source indices and interpolation fraction for target index `i`.
fn axis_sample(i: usize, src: usize, dst: usize) -> (usize, usize, f64) {
    if src == 1 || dst == 1 {
        return (0, 0, 0.0);
    }
    let pos = i as f64 * (src - 1) as f64 / (dst - 1) as f64;
    let lo = (pos.floor() as usize).min(src - 1);
    let hi = (lo + 1).min(src - 1);
    (lo, hi, pos - lo as f64)
}

/// Localization map before and after upsampling, with its column sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationMap {
    /// `ReLU(Σ α_k A^k)` at feature-map resolution.
    pub raw: Matrix,
    /// `raw` upsampled to the interaction matrix size.
    pub upsampled: Matrix,
    /// Column sums of `upsampled`: cumulative contribution per document term.
    pub l: Vec<f64>,
}

/// Everything Grad-CAM produces for one query–document pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Explanation {
    pub score: f64,
    pub interaction: Matrix,
    pub feature_maps: Tensor3,
    pub gradients: Tensor3,
    pub alpha: ImportanceWeights,
    pub localization: LocalizationMap,
    /// Column sums of the interaction matrix: cumulative query similarity per document term.
    pub m: Vec<f64>,
}

/// Runs Grad-CAM on an already built interaction matrix.
pub fn explain_matrix(model: &RankerModel, interaction: Matrix) -> Result<Explanation> {
    let (score, cache) = model.forward(&interaction)?;
    let gradients = model.backward_to_feature_maps(&cache)?;
    let feature_maps = cache.feature_maps().clone();
    let alpha = importance_weights(&gradients.to_channels())?;
    let raw = localization_map(&alpha, &feature_maps.to_channels())?;
    let upsampled = bilinear_upsample(&raw, interaction.shape())?;
    let l = flatten_columns(&upsampled);
    let m = flatten_columns(&interaction);
    Ok(Explanation {
        score,
        interaction,
        feature_maps,
        gradients,
        alpha,
        localization: LocalizationMap { raw, upsampled, l },
        m,
    })
}

/// Builds the interaction matrix for `(query, doc)` and explains the model's score.
pub fn explain(
    model: &RankerModel,
    query: &TokenSequence,
    doc: &TokenSequence,
    emb: &EmbeddingTable,
) -> Result<Explanation> {
    explain_matrix(model, build_interaction_matrix(query, doc, emb)?)
}
