//! A small MatchPyramid-style neural ranker with Grad-CAM explanations.
//!
//! The pipeline turns a query and a document into a token-level interaction
//! matrix, scores it with a CNN + MLP ranker, and attributes the score back to
//! individual query/document term pairs:
//!
//! ```text
//! text ──tokenize──▶ tokens ──embed──▶ M (u×v) ──CNN──▶ A^k ──pool+MLP──▶ S(Q,D)
//!                                                  │                      │
//!                                                  └──── ∂S/∂A^k ◀────────┘
//!                                   α_k = mean(∂S/∂A^k);  L = ReLU(Σ α_k A^k)
//! ```
//!
//! On top of the localization map `L` the crate provides effective/filtered
//! term extraction, query-biased snippet generators and corpus-level
//! separation statistics (kurtosis, map totals, Mann–Whitney U).

pub mod error;
pub mod gradcam;
pub mod heatmap;
pub mod interaction;
pub mod matrix;
pub mod ranker;
pub mod report;
pub mod snippet;
pub mod stats;
pub mod synthetic;
pub mod terms;
pub mod text;

pub use error::{Error, Result};
pub use gradcam::{explain, Explanation, ImportanceWeights};
pub use matrix::{Matrix, Tensor3};
pub use ranker::{RankerConfig, RankerModel, TrainOptions};
pub use report::ExplanationReport;
pub use text::{tokenize, EmbeddingTable, RankingDataset, RankingRecord, TokenSequence};
