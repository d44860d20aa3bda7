//! Versioned JSON explanation report.
//!
//! Floats are rounded to 9 significant digits when the report is built, so the
//! in-memory report, its JSON text and the re-parsed report all agree exactly.

use serde::{Deserialize, Serialize};

use crate::gradcam::Explanation;
use crate::snippet::{gradcam_snippet, vanilla_snippet, SnippetSpan, DEFAULT_WINDOW};
use crate::stats::{map_kurtosis, map_total};
use crate::terms::{
    analyze_terms, Term, DEFAULT_CONTRIBUTION_PERCENTILE, DEFAULT_SIMILARITY_PERCENTILE,
    DEFAULT_TOP_K,
};
use crate::text::TokenSequence;
use crate::{Error, Matrix, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Rounds to 9 significant decimal digits. Non-finite values and zero pass through.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn round_vec(v: &[f64]) -> Vec<f64> {
    v.iter().copied().map(round_sig9).collect()
}

fn round_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| round_vec(m.row(i))).collect()
}

fn round_term(t: Term) -> Term {
    Term {
        l: round_sig9(t.l),
        m: round_sig9(t.m),
        ..t
    }
}

fn round_span(s: SnippetSpan) -> SnippetSpan {
    SnippetSpan {
        score: round_sig9(s.score),
        ..s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportOptions {
    pub top_k: usize,
    pub window: usize,
    pub similarity_percentile: f64,
    pub contribution_percentile: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            top_k: DEFAULT_TOP_K,
            window: DEFAULT_WINDOW,
            similarity_percentile: DEFAULT_SIMILARITY_PERCENTILE,
            contribution_percentile: DEFAULT_CONTRIBUTION_PERCENTILE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnippetPair {
    pub window: usize,
    pub vanilla: SnippetSpan,
    pub gradcam: SnippetSpan,
    /// Whether both generators picked the same span.
    pub same: bool,
}

impl SnippetPair {
    pub fn compute(
        query: &TokenSequence,
        doc: &TokenSequence,
        l: &[f64],
        window: usize,
    ) -> Result<Self> {
        let vanilla = vanilla_snippet(query, doc, window)?;
        let gradcam = gradcam_snippet(query, doc, l, window)?;
        Ok(Self {
            window,
            same: vanilla.same_span(&gradcam),
            vanilla: round_span(vanilla),
            gradcam: round_span(gradcam),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplanationReport {
    pub schema_version: u32,
    pub query: Vec<String>,
    pub doc: Vec<String>,
    pub score: f64,
    /// Interaction matrix `M`, `|query| × |doc|`.
    pub interaction: Vec<Vec<f64>>,
    /// Upsampled localization map `L`, `|query| × |doc|`.
    pub localization: Vec<Vec<f64>>,
    pub l: Vec<f64>,
    pub m: Vec<f64>,
    pub effective_terms: Vec<Term>,
    pub filtered_terms: Vec<Term>,
    pub snippets: SnippetPair,
    pub kurtosis: Option<f64>,
    pub total: f64,
}

impl ExplanationReport {
    pub fn build(
        query: &TokenSequence,
        doc: &TokenSequence,
        explanation: &Explanation,
        opts: &ReportOptions,
    ) -> Result<Self> {
        let loc = &explanation.localization;
        let terms = analyze_terms(
            &loc.l,
            &explanation.m,
            doc,
            opts.top_k,
            opts.similarity_percentile,
            opts.contribution_percentile,
        )?;
        let kurtosis = match map_kurtosis(&loc.upsampled) {
            Ok(k) => Some(round_sig9(k)),
            Err(Error::DegenerateMap | Error::InvalidInput(_)) => None,
            Err(e) => return Err(e),
        };
        let report = Self {
            schema_version: SCHEMA_VERSION,
            query: query.tokens().to_vec(),
            doc: doc.tokens().to_vec(),
            score: round_sig9(explanation.score),
            interaction: round_rows(&explanation.interaction),
            localization: round_rows(&loc.upsampled),
            l: round_vec(&loc.l),
            m: round_vec(&explanation.m),
            effective_terms: terms.effective.into_iter().map(round_term).collect(),
            filtered_terms: terms.filtered.into_iter().map(round_term).collect(),
            snippets: SnippetPair::compute(query, doc, &loc.l, opts.window)?,
            kurtosis,
            total: round_sig9(map_total(&loc.upsampled)),
        };
        report.validate()?;
        Ok(report)
    }

    /// Checks the schema version and that all arrays agree in shape.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::format(None, msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {}",
                self.schema_version
            ));
        }
        let (u, v) = (self.query.len(), self.doc.len());
        if u == 0 || v == 0 {
            return bad("query and doc must be non-empty".into());
        }
        for (name, m) in [
            ("interaction", &self.interaction),
            ("localization", &self.localization),
        ] {
            if m.len() != u || m.iter().any(|row| row.len() != v) {
                return bad(format!("{name} must be {u}x{v}"));
            }
        }
        if self.l.len() != v || self.m.len() != v {
            return bad(format!("l and m must have length {v}"));
        }
        if self.localization.iter().flatten().any(|&x| x < 0.0) {
            return bad("localization map has negative entries".into());
        }
        for t in self.effective_terms.iter().chain(&self.filtered_terms) {
            if t.position >= v || self.doc[t.position] != t.token {
                return bad(format!(
                    "term {:?} does not match doc position {}",
                    t.token, t.position
                ));
            }
        }
        for s in [&self.snippets.vanilla, &self.snippets.gradcam] {
            if s.start > s.end || s.end > v || s.end - s.start > self.snippets.window.max(1) {
                return bad(format!("snippet span [{}, {}) is invalid", s.start, s.end));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)
            .map_err(|e| Error::format(Some(e.line()), format!("invalid report: {e}")))?;
        report.validate()?;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcam::explain;
    use crate::ranker::{RankerConfig, RankerModel};
    use crate::synthetic::SyntheticCorpus;

    #[test]
    fn rounding_keeps_nine_digits() {
        assert_eq!(round_sig9(1.0 / 3.0), 0.333333333);
        assert_eq!(round_sig9(123456789012.0), 123456789000.0);
        assert_eq!(round_sig9(0.0), 0.0);
        let x = round_sig9(std::f64::consts::PI);
        assert_eq!(round_sig9(x), x);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let corpus = SyntheticCorpus::generate(3, 40, 1).unwrap();
        let model = RankerModel::init(RankerConfig::default()).unwrap();
        let r = &corpus.dataset.records[0];
        let ex = explain(&model, &r.query, &r.positive, &corpus.embeddings).unwrap();
        let report =
            ExplanationReport::build(&r.query, &r.positive, &ex, &ReportOptions::default())
                .unwrap();
        let json = report.to_json();
        let back = ExplanationReport::from_json(&json).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.to_json(), json);
        assert_eq!(report.localization.len(), r.query.len());
        assert_eq!(report.l.len(), r.positive.len());
    }

    #[test]
    fn unknown_fields_and_bad_shapes_rejected() {
        let corpus = SyntheticCorpus::generate(2, 40, 1).unwrap();
        let model = RankerModel::init(RankerConfig::default()).unwrap();
        let r = &corpus.dataset.records[1];
        let ex = explain(&model, &r.query, &r.positive, &corpus.embeddings).unwrap();
        let report =
            ExplanationReport::build(&r.query, &r.positive, &ex, &ReportOptions::default())
                .unwrap();
        let mut value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        value["extra"] = serde_json::json!(1);
        assert!(ExplanationReport::from_json(&value.to_string()).is_err());
        let mut short = report.clone();
        short.l.pop();
        assert!(short.validate().is_err());
        let mut version = report;
        version.schema_version = 2;
        assert!(version.validate().is_err());
    }
}
