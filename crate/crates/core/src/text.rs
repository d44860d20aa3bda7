//! Tokenization, embedding tables and ranking datasets.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_MAX_QUERY_LEN: usize = 16;
pub const DEFAULT_MAX_DOC_LEN: usize = 128;

/// Bound of the uniform distribution the out-of-vocabulary vector is drawn from.
pub const OOV_BOUND: f64 = 0.1;

/// A tokenized text: lowercase alphanumeric runs, in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    tokens: Vec<String>,
    source: String,
}

impl TokenSequence {
    /// Wraps already normalized tokens without re-tokenizing them.
    pub fn from_tokens<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Result<Self> {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(Error::EmptyInput("token sequence has no tokens".into()));
        }
        let source = tokens.join(" ");
        Ok(Self { tokens, source })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.iter().any(|t| t == token)
    }
}

/// Lowercases `text`, splits it on runs of non-alphanumeric characters and
/// keeps at most `max_len` tokens.
pub fn tokenize(text: &str, max_len: usize) -> Result<TokenSequence> {
    if max_len == 0 {
        return Err(Error::InvalidInput("max_len must be positive".into()));
    }
    // Lowercase first: some uppercase letters lower to sequences containing
    // combining marks, which must then act as separators for idempotence.
    let lowered = text.to_lowercase();
    let tokens: Vec<String> = lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .take(max_len)
        .map(str::to_owned)
        .collect();
    if tokens.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no alphanumeric content in {text:?}"
        )));
    }
    Ok(TokenSequence {
        tokens,
        source: text.to_owned(),
    })
}

/// Token → vector lookup with a shared, seeded out-of-vocabulary vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
    oov: Vec<f64>,
}

impl EmbeddingTable {
    /// Builds a table from `(token, vector)` pairs. The first occurrence of a
    /// token wins.
    pub fn from_entries<I>(dim: usize, entries: I, seed: u64) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        if dim == 0 {
            return Err(Error::InvalidInput(
                "embedding dimension must be positive".into(),
            ));
        }
        let mut map = HashMap::new();
        for (token, vector) in entries {
            if vector.len() != dim {
                return Err(Error::Shape(format!(
                    "vector for {token:?} has length {}, expected {dim}",
                    vector.len()
                )));
            }
            map.entry(token).or_insert(vector);
        }
        Ok(Self {
            dim,
            entries: map,
            oov: oov_vector(dim, seed),
        })
    }

    /// Parses the whitespace-separated text format: `<token> <f1> ... <fdim>` per line.
    pub fn parse(content: &str, seed: u64) -> Result<Self> {
        let mut dim = None;
        let mut entries = Vec::new();
        for (idx, line) in content.lines().enumerate() {
            let line_no = idx + 1;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else {
                continue;
            };
            let vector = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| {
                        Error::format(
                            line_no,
                            format!("unreadable float {f:?} for token {token:?}"),
                        )
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if vector.is_empty() {
                return Err(Error::format(
                    line_no,
                    format!("token {token:?} has no vector"),
                ));
            }
            match dim {
                None => dim = Some(vector.len()),
                Some(d) if d != vector.len() => {
                    return Err(Error::format(
                        line_no,
                        format!("vector has {} components, expected {d}", vector.len()),
                    ))
                }
                Some(_) => {}
            }
            entries.push((token.to_owned(), vector));
        }
        let dim = dim.ok_or_else(|| Error::format(None, "embedding file contains no vectors"))?;
        Self::from_entries(dim, entries, seed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    /// Vector for `token`, or the shared out-of-vocabulary vector.
    pub fn lookup(&self, token: &str) -> &[f64] {
        self.entries.get(token).map_or(&self.oov, Vec::as_slice)
    }

    pub fn oov_vector(&self) -> &[f64] {
        &self.oov
    }

    /// Serializes in the text format, tokens sorted for stable output.
    pub fn to_text(&self) -> String {
        let mut tokens: Vec<&String> = self.entries.keys().collect();
        tokens.sort();
        let mut out = String::new();
        for token in tokens {
            out.push_str(token);
            for x in &self.entries[token] {
                // `{:?}` prints the shortest representation that parses back exactly.
                let _ = write!(out, " {x:?}");
            }
            out.push('\n');
        }
        out
    }
}

fn oov_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim)
        .map(|_| rng.gen_range(-OOV_BOUND..=OOV_BOUND))
        .collect()
}

pub fn load_embeddings(path: impl AsRef<Path>, seed: u64) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EmbeddingTable::parse(&content, seed)
}

/// One query with its positive document and sampled negatives.
#[derive(Clone, Debug, PartialEq)]
pub struct RankingRecord {
    pub qid: String,
    pub query: TokenSequence,
    pub positive: TokenSequence,
    pub negatives: Vec<TokenSequence>,
}

impl RankingRecord {
    pub fn positive_id(&self) -> String {
        format!("{}:pos", self.qid)
    }

    pub fn negative_id(&self, k: usize) -> String {
        format!("{}:neg{k}", self.qid)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RankingDataset {
    pub records: Vec<RankingRecord>,
}

impl RankingDataset {
    pub fn new(records: Vec<RankingRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.qid.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate query id {:?}",
                    r.qid
                )));
            }
        }
        Ok(Self { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of (query, positive, negative) triples.
    pub fn pair_count(&self) -> usize {
        self.records.iter().map(|r| r.negatives.len()).sum()
    }

    /// Parses tab-separated records:
    /// `<qid>\t<query>\t<positive doc>\t<neg 1>\t...\t<neg k>`. Blank lines are skipped.
    pub fn parse(content: &str, max_q: usize, max_d: usize) -> Result<Self> {
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for (idx, line) in content.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let record_idx = records.len();
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 3 {
                return Err(Error::format(
                    line_no,
                    format!(
                        "record {record_idx}: expected qid, query and positive document, found {} field(s)",
                        fields.len()
                    ),
                ));
            }
            let qid = fields[0].trim();
            if qid.is_empty() {
                return Err(Error::format(
                    line_no,
                    format!("record {record_idx}: empty query id"),
                ));
            }
            if !seen.insert(qid.to_owned()) {
                return Err(Error::format(
                    line_no,
                    format!("record {record_idx}: duplicate query id {qid:?}"),
                ));
            }
            let field = |text: &str, max: usize, what: &str| {
                tokenize(text, max).map_err(|e| {
                    Error::format(line_no, format!("record {record_idx}: {what}: {e}"))
                })
            };
            let query = field(fields[1], max_q, "query")?;
            let positive = field(fields[2], max_d, "positive document")?;
            let negatives = fields[3..]
                .iter()
                .enumerate()
                .map(|(k, text)| field(text, max_d, &format!("negative document {k}")))
                .collect::<Result<Vec<_>>>()?;
            records.push(RankingRecord {
                qid: qid.to_owned(),
                query,
                positive,
                negatives,
            });
        }
        Ok(Self { records })
    }

    /// Writes records in the tab-separated format, joining tokens with spaces.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.qid);
            for seq in std::iter::once(&r.query)
                .chain(std::iter::once(&r.positive))
                .chain(&r.negatives)
            {
                out.push('\t');
                out.push_str(&seq.tokens().join(" "));
            }
            out.push('\n');
        }
        out
    }
}

pub fn load_dataset(path: impl AsRef<Path>, max_q: usize, max_d: usize) -> Result<RankingDataset> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RankingDataset::parse(&content, max_q, max_d)
}
