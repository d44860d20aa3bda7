//! Localization-map statistics and the positive-vs-negative separation test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::gradcam::explain;
use crate::ranker::RankerModel;
use crate::report::round_sig9;
use crate::text::{EmbeddingTable, RankingDataset, TokenSequence};
use crate::{Error, Matrix, Result};

/// Above this many pairs the U statistic is counted from sorted samples
/// instead of by enumerating every pair. Both routes are exact.
pub const PAIR_COUNT_LIMIT: usize = 1_000_000;

/// Fourth standardized moment `E[((x − μ)/σ)^4]` over all elements, with
/// population moments (no excess, no bias correction).
pub fn kurtosis(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InvalidInput(
            "kurtosis needs at least two values".into(),
        ));
    }
    let first = values[0];
    if values.iter().all(|&x| x == first) {
        return Err(Error::DegenerateMap);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var.is_nan() || var <= 0.0 {
        return Err(Error::DegenerateMap);
    }
    let fourth = values.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Ok(fourth / (var * var))
}

pub fn map_kurtosis(map: &Matrix) -> Result<f64> {
    kurtosis(map.as_slice())
}

/// `Σ_i Σ_j L_ij`.
pub fn map_total(map: &Matrix) -> f64 {
    map.sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AGreater,
    BGreater,
    None,
}

/// Mann–Whitney U test of the one-sided alternative "a is stochastically larger".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `#{(x, y) : x > y} + ½ #{x = y}` over `a × b`.
    pub u: f64,
    /// One-sided p-value (normal approximation, tie-corrected, continuity-corrected).
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub direction: Direction,
}

fn u_by_pairs(a: &[f64], b: &[f64]) -> f64 {
    let mut twice = 0u64;
    for &x in a {
        for &y in b {
            if x > y {
                twice += 2;
            } else if x == y {
                twice += 1;
            }
        }
    }
    twice as f64 / 2.0
}

fn u_by_sorting(a: &[f64], b: &[f64]) -> f64 {
    let mut sorted = b.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut twice = 0u64;
    for &x in a {
        let below = sorted.partition_point(|&y| y < x);
        let not_above = sorted.partition_point(|&y| y <= x);
        twice += 2 * below as u64 + (not_above - below) as u64;
    }
    twice as f64 / 2.0
}

/// `Σ (t³ − t)` over groups of tied values in the pooled sample.
fn tie_term(a: &[f64], b: &[f64]) -> f64 {
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j] == pooled[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        total += t * t * t - t;
        i = j;
    }
    total
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput(
            "Mann-Whitney U needs two non-empty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("samples contain NaN".into()));
    }
    let (n_a, n_b) = (a.len(), b.len());
    let u = if n_a * n_b <= PAIR_COUNT_LIMIT {
        u_by_pairs(a, b)
    } else {
        u_by_sorting(a, b)
    };
    let (na, nb) = (n_a as f64, n_b as f64);
    let n = na + nb;
    let mean = na * nb / 2.0;
    let ties = if n > 1.0 {
        tie_term(a, b) / (n * (n - 1.0))
    } else {
        0.0
    };
    let var = na * nb / 12.0 * ((n + 1.0) - ties);
    let p_value = if var > 0.0 {
        let z = (u - mean - 0.5) / var.sqrt();
        Normal::standard().sf(z).clamp(0.0, 1.0)
    } else {
        // Every value tied: no evidence for either side.
        1.0
    };
    let direction = if u > mean {
        Direction::AGreater
    } else if u < mean {
        Direction::BGreater
    } else {
        Direction::None
    };
    Ok(MannWhitney {
        u,
        p_value,
        n_a,
        n_b,
        direction,
    })
}

/// `[min, q1, median, q3, max]` with linear interpolation.
pub fn five_number_summary(values: &[f64]) -> Option<[f64; 5]> {
    if values.is_empty() {
        return None;
    }
    let q = |p| crate::terms::percentile(values, p);
    Some([q(0.0), q(25.0), q(50.0), q(75.0), q(100.0)])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

/// Per-document row of the corpus analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapStatistics {
    pub doc_id: String,
    pub label: Label,
    pub score: f64,
    /// `None` when the localization map is constant.
    pub kurtosis: Option<f64>,
    pub total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Kurtosis,
    Total,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupDirection {
    Positive,
    Negative,
    None,
}

/// One-sided test "positives are larger" for one measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationResult {
    pub measure: Measure,
    #[serde(rename = "U")]
    pub u_statistic: f64,
    #[serde(rename = "p")]
    pub p_value: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub direction: GroupDirection,
    /// Documents left out of this test (constant maps for kurtosis).
    pub excluded_count: usize,
    /// `[min, q1, median, q3, max]` of the positive group, when non-empty.
    pub pos_summary: Option<[f64; 5]>,
    pub neg_summary: Option<[f64; 5]>,
}

impl SeparationResult {
    pub fn median_pos(&self) -> Option<f64> {
        self.pos_summary.map(|s| s[2])
    }

    pub fn median_neg(&self) -> Option<f64> {
        self.neg_summary.map(|s| s[2])
    }
}

/// A document whose explanation failed; the corpus run continues without it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocumentFailure {
    pub doc_id: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusAnalysis {
    pub documents: Vec<MapStatistics>,
    pub tests: Vec<SeparationResult>,
    pub failures: Vec<DocumentFailure>,
}

impl CorpusAnalysis {
    pub fn test(&self, measure: Measure) -> Option<&SeparationResult> {
        self.tests.iter().find(|t| t.measure == measure)
    }

    /// Copy with every float rounded to 9 significant digits, for stable output.
    pub fn rounded(&self) -> Self {
        let r = round_sig9;
        let summary = |s: Option<[f64; 5]>| s.map(|s| s.map(r));
        Self {
            documents: self
                .documents
                .iter()
                .map(|d| MapStatistics {
                    score: r(d.score),
                    kurtosis: d.kurtosis.map(r),
                    total: r(d.total),
                    ..d.clone()
                })
                .collect(),
            tests: self
                .tests
                .iter()
                .map(|t| SeparationResult {
                    u_statistic: r(t.u_statistic),
                    p_value: r(t.p_value),
                    pos_summary: summary(t.pos_summary),
                    neg_summary: summary(t.neg_summary),
                    ..t.clone()
                })
                .collect(),
            failures: self.failures.clone(),
        }
    }
}

fn separation(
    measure: Measure,
    pos: &[f64],
    neg: &[f64],
    excluded: usize,
) -> Result<SeparationResult> {
    let mw = mann_whitney_u(pos, neg)?;
    Ok(SeparationResult {
        measure,
        u_statistic: mw.u,
        p_value: mw.p_value,
        n_pos: mw.n_a,
        n_neg: mw.n_b,
        direction: match mw.direction {
            Direction::AGreater => GroupDirection::Positive,
            Direction::BGreater => GroupDirection::Negative,
            Direction::None => GroupDirection::None,
        },
        excluded_count: excluded,
        pos_summary: five_number_summary(pos),
        neg_summary: five_number_summary(neg),
    })
}

fn document_stats(
    model: &RankerModel,
    query: &TokenSequence,
    doc: &TokenSequence,
    emb: &EmbeddingTable,
    doc_id: String,
    label: Label,
) -> std::result::Result<MapStatistics, DocumentFailure> {
    let fail = |e: Error| DocumentFailure {
        doc_id: doc_id.clone(),
        error: format!("{}: {e}", e.kind()),
    };
    let explanation = explain(model, query, doc, emb).map_err(fail)?;
    let map = &explanation.localization.upsampled;
    let kurtosis = match map_kurtosis(map) {
        Ok(k) => Some(k),
        Err(Error::DegenerateMap) => None,
        // A single-cell map: no spread to measure either.
        Err(Error::InvalidInput(_)) => None,
        Err(e) => return Err(fail(e)),
    };
    Ok(MapStatistics {
        doc_id,
        label,
        score: explanation.score,
        kurtosis,
        total: map_total(map),
    })
}

/// Explains every (query, positive) and (query, negative) pair, then tests
/// whether positives have larger kurtosis and larger map totals than
/// negatives, pooling all documents of the corpus.
///
/// Documents with a constant map are kept in the table with `kurtosis: None`
/// and excluded from the kurtosis test only.
pub fn corpus_analysis(
    model: &RankerModel,
    dataset: &RankingDataset,
    emb: &EmbeddingTable,
) -> Result<CorpusAnalysis> {
    let jobs: Vec<(&TokenSequence, &TokenSequence, String, Label)> = dataset
        .records
        .iter()
        .flat_map(|r| {
            std::iter::once((&r.query, &r.positive, r.positive_id(), Label::Positive)).chain(
                r.negatives
                    .iter()
                    .enumerate()
                    .map(move |(k, d)| (&r.query, d, r.negative_id(k), Label::Negative)),
            )
        })
        .collect();

    let run = |(q, d, id, label): &(&TokenSequence, &TokenSequence, String, Label)| {
        document_stats(model, q, d, emb, id.clone(), *label)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = jobs.iter().map(run).collect();

    let mut documents = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(row) => documents.push(row),
            Err(f) => failures.push(f),
        }
    }

    let group = |label: Label| documents.iter().filter(move |d| d.label == label);
    let totals = |label| group(label).map(|d| d.total).collect::<Vec<_>>();
    let kurts = |label| group(label).filter_map(|d| d.kurtosis).collect::<Vec<_>>();
    let degenerate = documents.iter().filter(|d| d.kurtosis.is_none()).count();

    let mut tests = Vec::with_capacity(2);
    let (kp, kn) = (kurts(Label::Positive), kurts(Label::Negative));
    if !kp.is_empty() && !kn.is_empty() {
        tests.push(separation(Measure::Kurtosis, &kp, &kn, degenerate)?);
    }
    let (tp, tn) = (totals(Label::Positive), totals(Label::Negative));
    if !tp.is_empty() && !tn.is_empty() {
        tests.push(separation(Measure::Total, &tp, &tn, 0)?);
    }
    Ok(CorpusAnalysis {
        documents,
        tests,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kurtosis_two_point() {
        assert_eq!(kurtosis(&[-1.0, 1.0, -1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn kurtosis_constant_is_degenerate() {
        assert!(matches!(kurtosis(&[0.3; 6]), Err(Error::DegenerateMap)));
        assert!(matches!(
            map_kurtosis(&Matrix::zeros(3, 3)),
            Err(Error::DegenerateMap)
        ));
    }

    #[test]
    fn kurtosis_single_spike() {
        // μ = 1/4, σ² = 3/16; deviations (−1/4)×3 and 3/4:
        // E[d⁴] = (3·(1/256) + 81/256)/4 = 84/1024, σ⁴ = 9/256,
        // so Kurt = (84/1024)/(9/256) = 84/36 = 7/3.
        let k = kurtosis(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((k - 7.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn totals() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(map_total(&m), 10.0);
        assert_eq!(map_total(&Matrix::zeros(2, 5)), 0.0);
        let col_sum: f64 = crate::interaction::flatten_columns(&m).iter().sum();
        assert_eq!(col_sum, map_total(&m));
    }

    #[test]
    fn u_all_pairs_won() {
        let r = mann_whitney_u(&[3.0, 4.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.u, 4.0);
        assert_eq!(r.direction, Direction::AGreater);
        assert!(r.p_value < 0.5);
    }

    #[test]
    fn u_identical_samples_is_midpoint() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.u, 4.5);
        assert_eq!(r.direction, Direction::None);
        assert!(r.p_value > 0.5);
    }

    #[test]
    fn u_rejects_empty() {
        assert!(matches!(
            mann_whitney_u(&[], &[1.0]),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            mann_whitney_u(&[1.0], &[]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn all_tied_gives_p_one() {
        let r = mann_whitney_u(&[2.0; 4], &[2.0; 3]).unwrap();
        assert_eq!(r.u, 6.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn large_samples_use_sorted_counting() {
        let a: Vec<f64> = (0..1200).map(|i| (i % 37) as f64).collect();
        let b: Vec<f64> = (0..900).map(|i| (i % 41) as f64 - 1.0).collect();
        assert!(a.len() * b.len() > PAIR_COUNT_LIMIT);
        assert_eq!(mann_whitney_u(&a, &b).unwrap().u, u_by_pairs(&a, &b));
        assert_eq!(u_by_sorting(&a, &b), u_by_pairs(&a, &b));
    }

    #[test]
    fn five_numbers() {
        assert_eq!(
            five_number_summary(&[5.0, 1.0, 3.0, 2.0, 4.0]).unwrap(),
            [1.0, 2.0, 3.0, 4.0, 5.0]
        );
        assert!(five_number_summary(&[]).is_none());
    }

    fn sample() -> impl Strategy<Value = Vec<f64>> {
        // Coarse values so ties occur.
        proptest::collection::vec((-20i32..20).prop_map(|x| x as f64 / 4.0), 1..25)
    }

    proptest! {
        #[test]
        fn kurtosis_is_affine_invariant(
            values in proptest::collection::vec(-10.0f64..10.0, 3..40),
            a in prop_oneof![-5.0f64..-0.2, 0.2f64..5.0],
            b in -10.0f64..10.0,
        ) {
            if let Ok(k) = kurtosis(&values) {
                let moved: Vec<f64> = values.iter().map(|x| a * x + b).collect();
                let k2 = kurtosis(&moved).unwrap();
                prop_assert!((k - k2).abs() <= 1e-8 * k.abs().max(1.0));
            }
        }

        #[test]
        fn total_is_homogeneous(values in proptest::collection::vec(0.0f64..10.0, 1..30), c in 0.0f64..10.0) {
            let m = Matrix::from_vec(1, values.len(), values).unwrap();
            let scaled = m.map(|x| c * x);
            prop_assert!((map_total(&scaled) - c * map_total(&m)).abs() <= 1e-9 * (1.0 + map_total(&scaled)));
        }

        #[test]
        fn u_statistics_are_complementary(a in sample(), b in sample()) {
            let ab = mann_whitney_u(&a, &b).unwrap();
            let ba = mann_whitney_u(&b, &a).unwrap();
            prop_assert_eq!(ab.u + ba.u, (a.len() * b.len()) as f64);
            prop_assert!((0.0..=(a.len() * b.len()) as f64).contains(&ab.u));
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
        }

        #[test]
        fn u_invariant_under_monotone_transform(a in sample(), b in sample()) {
            let f = |x: &f64| (x * 0.7).exp() + x * 3.0;
            let fa: Vec<f64> = a.iter().map(f).collect();
            let fb: Vec<f64> = b.iter().map(f).collect();
            prop_assert_eq!(mann_whitney_u(&a, &b).unwrap().u, mann_whitney_u(&fa, &fb).unwrap().u);
        }
    }
}
