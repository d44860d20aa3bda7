//! Query-biased snippets over a fixed token window.
//!
//! Both generators score each document token and return the leftmost window
//! of `w` tokens with the largest total score. The vanilla generator scores a
//! token 1 when it exactly matches a query token; the Grad-CAM generator adds
//! `l_j / w` to that indicator.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::text::TokenSequence;
use crate::{Error, Result};

pub const DEFAULT_WINDOW: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnippetSpan {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub score: f64,
    pub tokens: Vec<String>,
}

impl SnippetSpan {
    pub fn same_span(&self, other: &SnippetSpan) -> bool {
        self.start == other.start && self.end == other.end
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// `b_j = 1` if document token `j` equals some query token, else 0.
pub fn exact_match_indicator(query: &TokenSequence, doc: &TokenSequence) -> Vec<f64> {
    let q: HashSet<&str> = query.tokens().iter().map(String::as_str).collect();
    doc.tokens()
        .iter()
        .map(|t| if q.contains(t.as_str()) { 1.0 } else { 0.0 })
        .collect()
}

/// Leftmost window of `w` weights with the maximal sum. Each candidate sum is
/// accumulated left to right so equal windows compare equal bit for bit.
fn best_window(weights: &[f64], w: usize) -> (usize, usize, f64) {
    let n = weights.len();
    if n <= w {
        return (0, n, weights.iter().sum());
    }
    let mut best = (0, w, weights[..w].iter().sum::<f64>());
    for start in 1..=n - w {
        let score: f64 = weights[start..start + w].iter().sum();
        if score > best.2 {
            best = (start, start + w, score);
        }
    }
    best
}

fn span(doc: &TokenSequence, (start, end, score): (usize, usize, f64)) -> SnippetSpan {
    SnippetSpan {
        start,
        end,
        score,
        tokens: doc.tokens()[start..end].to_vec(),
    }
}

fn check_window(w: usize) -> Result<()> {
    if w == 0 {
        return Err(Error::InvalidInput("window size must be at least 1".into()));
    }
    Ok(())
}

/// Window with the most exact query-term matches.
pub fn vanilla_snippet(
    query: &TokenSequence,
    doc: &TokenSequence,
    w: usize,
) -> Result<SnippetSpan> {
    check_window(w)?;
    let weights = exact_match_indicator(query, doc);
    Ok(span(doc, best_window(&weights, w)))
}

/// Per-token weight `b_j + l_j / w`.
pub fn gradcam_weights(
    query: &TokenSequence,
    doc: &TokenSequence,
    l: &[f64],
    w: usize,
) -> Result<Vec<f64>> {
    check_window(w)?;
    if l.len() != doc.len() {
        return Err(Error::Shape(format!(
            "l has {} entries but the document has {} tokens",
            l.len(),
            doc.len()
        )));
    }
    let scale = w as f64;
    Ok(exact_match_indicator(query, doc)
        .into_iter()
        .zip(l)
        .map(|(b, &lj)| b + lj / scale)
        .collect())
}

/// Window maximizing `Σ (b_j + l_j / w)`.
pub fn gradcam_snippet(
    query: &TokenSequence,
    doc: &TokenSequence,
    l: &[f64],
    w: usize,
) -> Result<SnippetSpan> {
    let weights = gradcam_weights(query, doc, l, w)?;
    Ok(span(doc, best_window(&weights, w)))
}
