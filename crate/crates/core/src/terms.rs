//! Effective and filtered document terms.
//!
//! Effective terms are the document positions with the largest cumulative
//! contribution `l_j`. Filtered terms have a high cumulative query similarity
//! `m_j` but a low contribution: similarity the ranker chose to discount.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::text::TokenSequence;
use crate::{Error, Result};

pub const DEFAULT_TOP_K: usize = 5;
pub const DEFAULT_SIMILARITY_PERCENTILE: f64 = 80.0;
pub const DEFAULT_CONTRIBUTION_PERCENTILE: f64 = 40.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub token: String,
    pub position: usize,
    pub l: f64,
    pub m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    pub effective: Vec<Term>,
    pub filtered: Vec<Term>,
}

fn check_len(name: &str, values: &[f64], doc: &TokenSequence) -> Result<()> {
    if values.len() != doc.len() {
        return Err(Error::Shape(format!(
            "{name} has {} entries but the document has {} tokens",
            values.len(),
            doc.len()
        )));
    }
    Ok(())
}

/// Keeps the first occurrence of each token in an already ranked position list.
fn dedup_by_token(order: impl IntoIterator<Item = usize>, doc: &TokenSequence) -> Vec<usize> {
    let mut seen = HashSet::new();
    order
        .into_iter()
        .filter(|&j| seen.insert(doc.tokens()[j].as_str()))
        .collect()
}

/// Positions of the top-`k` distinct tokens by `l`, highest first.
///
/// Ties go to the lower position; a repeated token is represented by its
/// highest-scoring occurrence.
pub fn effective_positions(l: &[f64], doc: &TokenSequence, k: usize) -> Result<Vec<usize>> {
    check_len("l", l, doc)?;
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..l.len()).collect();
    order.sort_by(|&a, &b| l[b].total_cmp(&l[a]).then(a.cmp(&b)));
    let mut positions = dedup_by_token(order, doc);
    positions.truncate(k);
    Ok(positions)
}

pub fn effective_terms(l: &[f64], m: &[f64], doc: &TokenSequence, k: usize) -> Result<Vec<Term>> {
    check_len("m", m, doc)?;
    Ok(effective_positions(l, doc, k)?
        .into_iter()
        .map(|j| term(doc, l, m, j))
        .collect())
}

/// Min-max normalization to `[0, 1]`; a constant array maps to all zeros.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range.is_nan() || range <= 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|&x| (x - lo) / range).collect()
}

/// Percentile with linear interpolation between closest ranks
/// (rank `p/100 · (n − 1)` in the sorted array).
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let rank = (p / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

/// Positions with high query similarity but low contribution.
///
/// Both arrays are min-max normalized per document; a position qualifies when
/// `m̂_j ≥ percentile(m̂, similarity_pct)` and `l̂_j ≤ percentile(l̂, contribution_pct)`.
/// A constant `m` singles out no position, so the result is empty. Results are
/// ordered by `m̂_j − l̂_j` descending (ties to the lower position) and deduplicated
/// by token.
pub fn filtered_positions(
    l: &[f64],
    m: &[f64],
    doc: &TokenSequence,
    similarity_pct: f64,
    contribution_pct: f64,
) -> Result<Vec<usize>> {
    check_len("l", l, doc)?;
    check_len("m", m, doc)?;
    if !(0.0 < contribution_pct && contribution_pct < similarity_pct && similarity_pct < 100.0) {
        return Err(Error::InvalidInput(format!(
            "percentiles must satisfy 0 < contribution ({contribution_pct}) < similarity ({similarity_pct}) < 100"
        )));
    }
    let m_hat = min_max_normalize(m);
    if m_hat.iter().all(|&x| x == 0.0) {
        return Ok(Vec::new());
    }
    let l_hat = min_max_normalize(l);
    let m_cut = percentile(&m_hat, similarity_pct);
    let l_cut = percentile(&l_hat, contribution_pct);
    let gap = |j: usize| m_hat[j] - l_hat[j];
    let mut hits: Vec<usize> = (0..doc.len())
        .filter(|&j| m_hat[j] >= m_cut && l_hat[j] <= l_cut)
        .collect();
    hits.sort_by(|&a, &b| gap(b).total_cmp(&gap(a)).then(a.cmp(&b)));
    Ok(dedup_by_token(hits, doc))
}

pub fn filtered_terms(
    l: &[f64],
    m: &[f64],
    doc: &TokenSequence,
    similarity_pct: f64,
    contribution_pct: f64,
) -> Result<Vec<Term>> {
    Ok(
        filtered_positions(l, m, doc, similarity_pct, contribution_pct)?
            .into_iter()
            .map(|j| term(doc, l, m, j))
            .collect(),
    )
}

fn term(doc: &TokenSequence, l: &[f64], m: &[f64], j: usize) -> Term {
    Term {
        token: doc.tokens()[j].clone(),
        position: j,
        l: l[j],
        m: m[j],
    }
}

/// Effective and filtered terms with disjoint token sets: a token that is
/// already effective is dropped from the filtered list.
pub fn analyze_terms(
    l: &[f64],
    m: &[f64],
    doc: &TokenSequence,
    k: usize,
    similarity_pct: f64,
    contribution_pct: f64,
) -> Result<TermReport> {
    let effective = effective_terms(l, m, doc, k)?;
    let taken: HashSet<&str> = effective.iter().map(|t| t.token.as_str()).collect();
    let filtered = filtered_terms(l, m, doc, similarity_pct, contribution_pct)?
        .into_iter()
        .filter(|t| !taken.contains(t.token.as_str()))
        .collect();
    Ok(TermReport {
        effective,
        filtered,
    })
}
