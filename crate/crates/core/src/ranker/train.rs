use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::RankerModel;
use crate::interaction::build_interaction_matrix;
use crate::text::{EmbeddingTable, RankingDataset};
use crate::{Error, Matrix, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub lr: f64,
    pub margin: f64,
    /// Seeds the per-epoch shuffling of training triples.
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 12,
            lr: 0.05,
            margin: 1.0,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    /// Mean hinge loss over the triples of each epoch.
    pub epoch_losses: Vec<f64>,
}

struct PreparedRecord {
    positive: Matrix,
    negatives: Vec<Matrix>,
}

fn prepare(data: &RankingDataset, emb: &EmbeddingTable) -> Result<Vec<PreparedRecord>> {
    data.records
        .iter()
        .map(|r| {
            Ok(PreparedRecord {
                positive: build_interaction_matrix(&r.query, &r.positive, emb)?,
                negatives: r
                    .negatives
                    .iter()
                    .map(|d| build_interaction_matrix(&r.query, d, emb))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}

pub fn train(
    model: &mut RankerModel,
    data: &RankingDataset,
    emb: &EmbeddingTable,
    opts: &TrainOptions,
) -> Result<TrainReport> {
    train_with_progress(model, data, emb, opts, |_, _| {})
}

/// Pairwise hinge-loss SGD, one `(Q, D⁺, D⁻)` triple per step:
/// `loss = max(0, margin − S(Q,D⁺) + S(Q,D⁻))`.
///
/// `progress` is called after every epoch with the epoch index and its mean loss.
pub fn train_with_progress(
    model: &mut RankerModel,
    data: &RankingDataset,
    emb: &EmbeddingTable,
    opts: &TrainOptions,
    mut progress: impl FnMut(usize, f64),
) -> Result<TrainReport> {
    if let Some(r) = data.records.iter().find(|r| r.negatives.is_empty()) {
        return Err(Error::InvalidInput(format!(
            "record {:?} has no negative documents",
            r.qid
        )));
    }
    if !opts.lr.is_finite() || !opts.margin.is_finite() {
        return Err(Error::InvalidInput("lr and margin must be finite".into()));
    }
    let prepared = prepare(data, emb)?;
    let mut triples: Vec<(usize, usize)> = prepared
        .iter()
        .enumerate()
        .flat_map(|(r, rec)| (0..rec.negatives.len()).map(move |k| (r, k)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = TrainReport::default();

    for epoch in 0..opts.epochs {
        triples.shuffle(&mut rng);
        let mut total = 0.0;
        for &(r, k) in &triples {
            let rec = &prepared[r];
            let (s_pos, cache_pos) = model.forward(&rec.positive)?;
            let (s_neg, cache_neg) = model.forward(&rec.negatives[k])?;
            let raw = opts.margin - s_pos + s_neg;
            if !raw.is_finite() {
                return Err(Error::Divergence { epoch, loss: raw });
            }
            let loss = raw.max(0.0);
            total += loss;
            if loss > 0.0 && opts.lr != 0.0 {
                // ∂loss/∂θ = ∂S⁻/∂θ − ∂S⁺/∂θ
                let g_pos = model.gradients(&cache_pos)?;
                let g_neg = model.gradients(&cache_neg)?;
                model.apply_gradients(&g_pos, opts.lr)?;
                model.apply_gradients(&g_neg, -opts.lr)?;
            }
        }
        let mean = if triples.is_empty() {
            0.0
        } else {
            total / triples.len() as f64
        };
        if !mean.is_finite() {
            return Err(Error::Divergence { epoch, loss: mean });
        }
        report.epoch_losses.push(mean);
        progress(epoch, mean);
    }
    Ok(report)
}

/// Fraction of `(positive, negative)` pairs the model orders correctly
/// (`S⁺ > S⁻` strictly). Returns 0 for a dataset without pairs.
pub fn pairwise_accuracy(
    model: &RankerModel,
    data: &RankingDataset,
    emb: &EmbeddingTable,
) -> Result<f64> {
    let mut correct = 0usize;
    let mut total = 0usize;
    for r in &data.records {
        let s_pos = model.score(&build_interaction_matrix(&r.query, &r.positive, emb)?)?;
        for d in &r.negatives {
            let s_neg = model.score(&build_interaction_matrix(&r.query, d, emb)?)?;
            correct += usize::from(s_pos > s_neg);
            total += 1;
        }
    }
    Ok(if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    })
}
