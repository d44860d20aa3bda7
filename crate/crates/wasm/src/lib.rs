//! Browser demo: trains a small ranker on a synthetic corpus, then explains
//! query/document pairs typed into the page.
//!
//! The JS-facing [`Demo`] is a thin wrapper over [`DemoState`], which is plain
//! Rust and testable natively.

use gradrank::gradcam::bilinear_upsample;
use gradrank::heatmap::render_rgb;
use gradrank::ranker::{pairwise_accuracy, train, ConvSpec};
use gradrank::report::{ReportOptions, SnippetPair};
use gradrank::synthetic::SyntheticCorpus;
use gradrank::text::{DEFAULT_MAX_DOC_LEN, DEFAULT_MAX_QUERY_LEN};
use gradrank::{
    explain, tokenize, Explanation, ExplanationReport, Matrix, RankerConfig, RankerModel,
    TokenSequence, TrainOptions,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const DEMO_QUERIES: usize = 60;
const DEMO_VOCAB: usize = 160;
const DEMO_EPOCHS: usize = 4;

/// Expands packed RGB into RGBA with full opacity, as `ImageData` expects.
pub fn rgb_to_rgba(rgb: &[u8]) -> Vec<u8> {
    rgb.chunks_exact(3)
        .flat_map(|p| [p[0], p[1], p[2], 255])
        .collect()
}

/// Heatmap image of `map`: `(width, height, rgba)`.
pub fn heatmap_rgba(map: &Matrix, cell_px: usize) -> (usize, usize, Vec<u8>) {
    let (w, h, rgb) = render_rgb(map, cell_px);
    (w, h, rgb_to_rgba(&rgb))
}

#[derive(Serialize)]
struct Summary {
    queries: usize,
    pairs: usize,
    parameters: usize,
    epoch_losses: Vec<f64>,
    accuracy: f64,
}

#[derive(Serialize)]
struct Sample {
    query: String,
    positive: String,
    negative: String,
}

struct Current {
    query: TokenSequence,
    doc: TokenSequence,
    explanation: Explanation,
}

pub struct DemoState {
    corpus: SyntheticCorpus,
    model: RankerModel,
    summary: Summary,
    current: Option<Current>,
}

impl DemoState {
    pub fn new(seed: u64) -> Result<Self, String> {
        let corpus =
            SyntheticCorpus::generate(DEMO_QUERIES, DEMO_VOCAB, seed).map_err(|e| e.to_string())?;
        let config = RankerConfig {
            conv_layers: vec![ConvSpec::new(3, 3, 4), ConvSpec::new(3, 3, 8)],
            mlp_hidden: vec![16],
            seed,
            ..RankerConfig::default()
        };
        let mut model = RankerModel::init(config).map_err(|e| e.to_string())?;
        let opts = TrainOptions {
            epochs: DEMO_EPOCHS,
            seed,
            ..TrainOptions::default()
        };
        let report = train(&mut model, &corpus.dataset, &corpus.embeddings, &opts)
            .map_err(|e| e.to_string())?;
        let accuracy = pairwise_accuracy(&model, &corpus.dataset, &corpus.embeddings)
            .map_err(|e| e.to_string())?;
        let summary = Summary {
            queries: corpus.dataset.len(),
            pairs: corpus.dataset.pair_count(),
            parameters: model.parameter_count(),
            epoch_losses: report.epoch_losses,
            accuracy,
        };
        Ok(Self {
            corpus,
            model,
            summary,
            current: None,
        })
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string(&self.summary).expect("summary serializes")
    }

    /// Query, positive and first negative of record `index` (wrapping).
    pub fn sample_json(&self, index: usize) -> String {
        let records = &self.corpus.dataset.records;
        let r = &records[index % records.len()];
        let join = |t: &TokenSequence| t.tokens().join(" ");
        serde_json::to_string(&Sample {
            query: join(&r.query),
            positive: join(&r.positive),
            negative: r.negatives.first().map(join).unwrap_or_default(),
        })
        .expect("sample serializes")
    }

    /// Explains the pair and keeps it for the heatmap and snippet calls.
    /// Returns the explanation report as JSON.
    pub fn explain(&mut self, query: &str, doc: &str, window: usize) -> Result<String, String> {
        let err = |e: gradrank::Error| format!("{}: {e}", e.kind());
        let query = tokenize(query, DEFAULT_MAX_QUERY_LEN).map_err(err)?;
        let doc = tokenize(doc, DEFAULT_MAX_DOC_LEN).map_err(err)?;
        let explanation =
            explain(&self.model, &query, &doc, &self.corpus.embeddings).map_err(err)?;
        let opts = ReportOptions {
            window: window.max(1),
            ..ReportOptions::default()
        };
        let report = ExplanationReport::build(&query, &doc, &explanation, &opts).map_err(err)?;
        self.current = Some(Current {
            query,
            doc,
            explanation,
        });
        Ok(report.to_json())
    }

    fn current(&self) -> Result<&Current, String> {
        self.current
            .as_ref()
            .ok_or_else(|| "no pair has been explained yet".to_owned())
    }

    /// Heatmap of the last localization map (`which = "L"`) or interaction
    /// matrix (`"M"`).
    pub fn heatmap(&self, which: &str, cell_px: usize) -> Result<(usize, usize, Vec<u8>), String> {
        let ex = &self.current()?.explanation;
        match which {
            "L" => Ok(heatmap_rgba(&ex.localization.upsampled, cell_px)),
            "M" => Ok(heatmap_rgba(&ex.interaction, cell_px)),
            other => Err(format!("unknown map {other:?}; expected \"L\" or \"M\"")),
        }
    }

    /// Both snippets of the last explained pair for window size `window`.
    pub fn snippets_json(&self, window: usize) -> Result<String, String> {
        let c = self.current()?;
        let pair = SnippetPair::compute(&c.query, &c.doc, &c.explanation.localization.l, window)
            .map_err(|e| e.to_string())?;
        Ok(serde_json::to_string(&pair).expect("snippets serialize"))
    }
}

/// Align-corners bilinear upsampling of a row-major `rows × cols` grid.
pub fn upsample(
    values: &[f64],
    rows: usize,
    cols: usize,
    target_rows: usize,
    target_cols: usize,
) -> Result<Matrix, String> {
    let src = Matrix::from_vec(rows, cols, values.to_vec()).map_err(|e| e.to_string())?;
    bilinear_upsample(&src, (target_rows, target_cols)).map_err(|e| e.to_string())
}

/// Rendered RGBA image with its dimensions, handed to `ImageData`.
#[wasm_bindgen]
pub struct Image {
    width: usize,
    height: usize,
    rgba: Vec<u8>,
}

#[wasm_bindgen]
impl Image {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    #[wasm_bindgen(getter)]
    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }
}

impl From<(usize, usize, Vec<u8>)> for Image {
    fn from((width, height, rgba): (usize, usize, Vec<u8>)) -> Self {
        Self {
            width,
            height,
            rgba,
        }
    }
}

#[wasm_bindgen]
pub struct Demo {
    state: DemoState,
}

#[wasm_bindgen]
impl Demo {
    /// Generates the corpus and trains the model; takes a moment.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<Demo, JsError> {
        DemoState::new(u64::from(seed))
            .map(|state| Demo { state })
            .map_err(|e| JsError::new(&e))
    }

    pub fn summary(&self) -> String {
        self.state.summary_json()
    }

    pub fn sample(&self, index: usize) -> String {
        self.state.sample_json(index)
    }

    pub fn explain(&mut self, query: &str, doc: &str, window: usize) -> Result<String, JsError> {
        self.state
            .explain(query, doc, window)
            .map_err(|e| JsError::new(&e))
    }

    pub fn heatmap(&self, which: &str, cell_px: usize) -> Result<Image, JsError> {
        self.state
            .heatmap(which, cell_px)
            .map(Image::from)
            .map_err(|e| JsError::new(&e))
    }

    pub fn snippets(&self, window: usize) -> Result<String, JsError> {
        self.state
            .snippets_json(window)
            .map_err(|e| JsError::new(&e))
    }
}

/// Upsamples a grid and renders it as a heatmap image.
#[wasm_bindgen]
pub fn upsample_image(
    values: &[f64],
    rows: usize,
    cols: usize,
    target_rows: usize,
    target_cols: usize,
    cell_px: usize,
) -> Result<Image, JsError> {
    let up =
        upsample(values, rows, cols, target_rows, target_cols).map_err(|e| JsError::new(&e))?;
    Ok(heatmap_rgba(&up, cell_px).into())
}
