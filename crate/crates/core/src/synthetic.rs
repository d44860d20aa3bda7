//! Seeded synthetic ranking corpora for desk-scale experiments.
//!
//! The vocabulary is split into topic tokens (`t*`), one near-synonym per
//! topic token (`s*`, cosine 0.85 to its topic token) and filler tokens
//! (`f*`). Queries draw 3–6 topic tokens. A positive document is filler with a
//! short relevant passage holding exact query tokens and synonyms of query
//! tokens; negatives are filler with a few distractor topic/synonym tokens
//! that are unrelated to the query.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::text::{EmbeddingTable, RankingDataset, RankingRecord, TokenSequence};
use crate::{Error, Result};

/// Cosine between a topic token and its synonym.
pub const SYNONYM_COSINE: f64 = 0.85;
pub const MIN_VOCAB: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub n_queries: usize,
    pub vocab_size: usize,
    pub seed: u64,
    pub negatives: usize,
    pub dim: usize,
    /// Inclusive range of document lengths.
    pub doc_len: (usize, usize),
}

impl SyntheticConfig {
    pub fn new(n_queries: usize, vocab_size: usize, seed: u64) -> Self {
        Self {
            n_queries,
            vocab_size,
            seed,
            negatives: 4,
            dim: 32,
            doc_len: (30, 60),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub dataset: RankingDataset,
    pub embeddings: EmbeddingTable,
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Unit vector at cosine `cos` to the unit vector `base`.
fn near_synonym(rng: &mut ChaCha8Rng, base: &[f64], cos: f64) -> Vec<f64> {
    loop {
        let r = random_unit(rng, base.len());
        let along: f64 = r.iter().zip(base).map(|(a, b)| a * b).sum();
        let ortho: Vec<f64> = r.iter().zip(base).map(|(a, b)| a - along * b).collect();
        let norm = ortho.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            let sin = (1.0 - cos * cos).sqrt();
            return base
                .iter()
                .zip(&ortho)
                .map(|(b, o)| cos * b + sin * o / norm)
                .collect();
        }
    }
}

impl SyntheticCorpus {
    pub fn generate(n_queries: usize, vocab_size: usize, seed: u64) -> Result<Self> {
        Self::with_config(&SyntheticConfig::new(n_queries, vocab_size, seed))
    }

    pub fn with_config(cfg: &SyntheticConfig) -> Result<Self> {
        if cfg.vocab_size < MIN_VOCAB {
            return Err(Error::InvalidInput(format!(
                "vocabulary size must be at least {MIN_VOCAB}, got {}",
                cfg.vocab_size
            )));
        }
        if cfg.dim < 2 || cfg.doc_len.0 < 16 || cfg.doc_len.0 > cfg.doc_len.1 {
            return Err(Error::InvalidInput(format!(
                "invalid synthetic corpus shape: dim {}, doc_len {:?}",
                cfg.dim, cfg.doc_len
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let n_topic = cfg.vocab_size / 4;
        let n_filler = cfg.vocab_size - 2 * n_topic;

        let topic: Vec<String> = (0..n_topic).map(|i| format!("t{i}")).collect();
        let synonym: Vec<String> = (0..n_topic).map(|i| format!("s{i}")).collect();
        let filler: Vec<String> = (0..n_filler).map(|i| format!("f{i}")).collect();

        let mut entries = Vec::with_capacity(cfg.vocab_size);
        for i in 0..n_topic {
            let t = random_unit(&mut rng, cfg.dim);
            let s = near_synonym(&mut rng, &t, SYNONYM_COSINE);
            entries.push((topic[i].clone(), t));
            entries.push((synonym[i].clone(), s));
        }
        for f in &filler {
            entries.push((f.clone(), random_unit(&mut rng, cfg.dim)));
        }
        let embeddings = EmbeddingTable::from_entries(cfg.dim, entries, cfg.seed)?;

        let mut records = Vec::with_capacity(cfg.n_queries);
        let topic_ids: Vec<usize> = (0..n_topic).collect();
        for qi in 0..cfg.n_queries {
            let q_len = rng.gen_range(3..=6).min(n_topic);
            let q_ids: Vec<usize> = topic_ids
                .choose_multiple(&mut rng, q_len)
                .copied()
                .collect();
            let query: Vec<&str> = q_ids.iter().map(|&i| topic[i].as_str()).collect();

            let fill = |rng: &mut ChaCha8Rng| -> Vec<&str> {
                let len = rng.gen_range(cfg.doc_len.0..=cfg.doc_len.1);
                (0..len)
                    .map(|_| filler.choose(rng).expect("filler pool").as_str())
                    .collect()
            };

            // Relevant passage: exact matches and synonyms inside a short span.
            let mut positive = fill(&mut rng);
            let span = 12.min(positive.len());
            let offset = rng.gen_range(0..=positive.len() - span);
            let mut slots: Vec<usize> = (offset..offset + span).collect();
            slots.shuffle(&mut rng);
            let n_exact = rng.gen_range(1..=3);
            let n_syn = rng.gen_range(1..=3);
            for (k, &slot) in slots.iter().take(n_exact + n_syn).enumerate() {
                let id = *q_ids.choose(&mut rng).expect("non-empty query");
                positive[slot] = if k < n_exact {
                    topic[id].as_str()
                } else {
                    synonym[id].as_str()
                };
            }

            let others: Vec<usize> = topic_ids
                .iter()
                .copied()
                .filter(|i| !q_ids.contains(i))
                .collect();
            let mut negatives = Vec::with_capacity(cfg.negatives);
            for _ in 0..cfg.negatives {
                let mut doc = fill(&mut rng);
                if !others.is_empty() {
                    for _ in 0..rng.gen_range(1..=3) {
                        let id = *others.choose(&mut rng).expect("non-empty");
                        let slot = rng.gen_range(0..doc.len());
                        doc[slot] = if rng.gen_bool(0.5) {
                            topic[id].as_str()
                        } else {
                            synonym[id].as_str()
                        };
                    }
                }
                negatives.push(TokenSequence::from_tokens(doc)?);
            }

            records.push(RankingRecord {
                qid: format!("q{qi}"),
                query: TokenSequence::from_tokens(query)?,
                positive: TokenSequence::from_tokens(positive)?,
                negatives,
            });
        }
        Ok(Self {
            dataset: RankingDataset::new(records)?,
            embeddings,
        })
    }

    /// Splits off the last `n` records, e.g. as held-out evaluation pairs.
    pub fn split_off(&mut self, n: usize) -> RankingDataset {
        let at = self.dataset.records.len().saturating_sub(n);
        RankingDataset {
            records: self.dataset.records.split_off(at),
        }
    }
}
