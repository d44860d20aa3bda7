//! Query × document interaction matrices and column flattening.

use crate::text::{EmbeddingTable, TokenSequence};
use crate::{Error, Matrix, Result};

/// Cosine similarity; a zero-norm operand yields 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (dot, na, nb) = a
        .iter()
        .zip(b)
        .fold((0.0, 0.0, 0.0), |(d, na, nb), (&x, &y)| {
            (d + x * y, na + x * x, nb + y * y)
        });
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// `M[i][j] = cos(emb(q_i), emb(d_j))`, a `|query| × |doc|` matrix.
pub fn build_interaction_matrix(
    query: &TokenSequence,
    doc: &TokenSequence,
    emb: &EmbeddingTable,
) -> Result<Matrix> {
    if query.is_empty() || doc.is_empty() {
        return Err(Error::EmptyInput(
            "query and document must be non-empty".into(),
        ));
    }
    let q: Vec<&[f64]> = query.tokens().iter().map(|t| emb.lookup(t)).collect();
    let d: Vec<&[f64]> = doc.tokens().iter().map(|t| emb.lookup(t)).collect();
    Ok(Matrix::from_fn(q.len(), d.len(), |i, j| cosine(q[i], d[j])))
}

/// Column sums: `out[j] = Σ_i matrix[i][j]`.
pub fn flatten_columns(matrix: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; matrix.cols()];
    for i in 0..matrix.rows() {
        for (acc, &x) in out.iter_mut().zip(matrix.row(i)) {
            *acc += x;
        }
    }
    out
}
