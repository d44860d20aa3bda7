use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gradrank::heatmap::{heatmap_ppm, DEFAULT_CELL_PX};
use gradrank::ranker::{load_model, save_model, train_with_progress};
use gradrank::report::{round_sig9, ReportOptions, SnippetPair, SCHEMA_VERSION};
use gradrank::snippet::DEFAULT_WINDOW;
use gradrank::stats::{corpus_analysis, CorpusAnalysis};
use gradrank::synthetic::SyntheticCorpus;
use gradrank::terms::DEFAULT_TOP_K;
use gradrank::text::{load_dataset, load_embeddings, DEFAULT_MAX_DOC_LEN, DEFAULT_MAX_QUERY_LEN};
use gradrank::{
    explain, tokenize, EmbeddingTable, ExplanationReport, RankerConfig, RankerModel, TokenSequence,
    TrainOptions,
};

const THREADS_ENV: &str = "GRADRANK_THREADS";

/// Train a convolutional interaction ranker and explain its scores.
#[derive(Parser)]
#[command(name = "gradrank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a ranker on a TSV dataset with pairwise hinge loss.
    Train(TrainArgs),
    /// Score one query/document pair.
    Score(PairArgs),
    /// Explain one pair: writes report.json, L.ppm and M.ppm.
    Explain(ExplainArgs),
    /// Compare the exact-match and Grad-CAM snippets for one pair.
    Snippet(SnippetArgs),
    /// Localization-map statistics over a dataset, as JSON.
    Stats(StatsArgs),
    /// Write a seeded synthetic dataset and embedding table.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Inputs {
    /// Embedding table: one `token v1 v2 ...` line per token.
    #[arg(long)]
    embeddings: PathBuf,
    /// Seed of the shared out-of-vocabulary vector.
    #[arg(long, default_value_t = 0)]
    oov_seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_QUERY_LEN)]
    max_q: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_DOC_LEN)]
    max_d: usize,
}

impl Inputs {
    fn embeddings(&self) -> Result<EmbeddingTable> {
        Ok(load_embeddings(&self.embeddings, self.oov_seed)?)
    }
}

#[derive(Args)]
struct TrainArgs {
    /// TSV rows: `qid<TAB>query<TAB>positive<TAB>negative...`.
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    inputs: Inputs,
    /// Output model file.
    #[arg(long)]
    model: PathBuf,
    /// Architecture as JSON; defaults to two 3×3 conv layers and one hidden layer.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = TrainOptions::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainOptions::default().lr)]
    lr: f64,
    #[arg(long, default_value_t = TrainOptions::default().margin)]
    margin: f64,
    /// Seeds weight initialization and triple shuffling.
    #[arg(long, default_value_t = TrainOptions::default().seed)]
    seed: u64,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    query: String,
    /// Document text.
    #[arg(
        long,
        conflicts_with = "doc_file",
        required_unless_present = "doc_file"
    )]
    doc: Option<String>,
    /// File holding the document text.
    #[arg(long)]
    doc_file: Option<PathBuf>,
}

struct Pair {
    model: RankerModel,
    embeddings: EmbeddingTable,
    query: TokenSequence,
    doc: TokenSequence,
}

impl PairArgs {
    fn load(&self) -> Result<Pair> {
        let model = load_model(&self.model)?;
        let embeddings = self.inputs.embeddings()?;
        let doc_text = match (&self.doc, &self.doc_file) {
            (Some(text), _) => text.clone(),
            (None, Some(path)) => {
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
            }
            (None, None) => unreachable!("clap requires --doc or --doc-file"),
        };
        Ok(Pair {
            model,
            embeddings,
            query: tokenize(&self.query, self.inputs.max_q)?,
            doc: tokenize(&doc_text, self.inputs.max_d)?,
        })
    }
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Pixel size of one heatmap cell.
    #[arg(long, default_value_t = DEFAULT_CELL_PX)]
    cell_px: usize,
}

#[derive(Args)]
struct SnippetArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Print the comparison as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    inputs: Inputs,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    queries: usize,
    #[arg(long, default_value_t = 400)]
    vocab: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Directory for dataset.tsv and embeddings.txt.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct StatsOutput {
    schema_version: u32,
    #[serde(flatten)]
    analysis: CorpusAnalysis,
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn train(args: &TrainArgs) -> Result<()> {
    let data = load_dataset(&args.dataset, args.inputs.max_q, args.inputs.max_d)?;
    let embeddings = args.inputs.embeddings()?;
    let mut config = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<RankerConfig>(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => RankerConfig::default(),
    };
    config.seed = args.seed;
    let mut model = RankerModel::init(config)?;
    let opts = TrainOptions {
        epochs: args.epochs,
        lr: args.lr,
        margin: args.margin,
        seed: args.seed,
    };
    println!(
        "training on {} queries, {} pairs, {} parameters",
        data.len(),
        data.pair_count(),
        model.parameter_count()
    );
    train_with_progress(&mut model, &data, &embeddings, &opts, |epoch, loss| {
        println!("epoch {:>3}  loss {}", epoch + 1, round_sig9(loss));
    })?;
    save_model(&model, &args.model)?;
    println!("saved {}", args.model.display());
    Ok(())
}

fn score(args: &PairArgs) -> Result<()> {
    let p = args.load()?;
    let m = gradrank::interaction::build_interaction_matrix(&p.query, &p.doc, &p.embeddings)?;
    println!("{}", round_sig9(p.model.score(&m)?));
    Ok(())
}

fn explain_pair(args: &ExplainArgs) -> Result<()> {
    let p = args.pair.load()?;
    let explanation = explain(&p.model, &p.query, &p.doc, &p.embeddings)?;
    let opts = ReportOptions {
        top_k: args.top_k,
        window: args.window,
        ..ReportOptions::default()
    };
    let report = ExplanationReport::build(&p.query, &p.doc, &explanation, &opts)?;
    create_dir(&args.out)?;
    write(&args.out.join("report.json"), report.to_json() + "\n")?;
    write(
        &args.out.join("L.ppm"),
        heatmap_ppm(&explanation.localization.upsampled, args.cell_px),
    )?;
    write(
        &args.out.join("M.ppm"),
        heatmap_ppm(&explanation.interaction, args.cell_px),
    )?;

    println!("score {}", report.score);
    let terms = |ts: &[gradrank::terms::Term]| {
        ts.iter()
            .map(|t| t.token.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    };
    println!("effective terms: {}", terms(&report.effective_terms));
    println!("filtered terms:  {}", terms(&report.filtered_terms));
    println!("wrote report.json, L.ppm, M.ppm to {}", args.out.display());
    Ok(())
}

fn snippet(args: &SnippetArgs) -> Result<()> {
    let p = args.pair.load()?;
    let explanation = explain(&p.model, &p.query, &p.doc, &p.embeddings)?;
    let pair = SnippetPair::compute(&p.query, &p.doc, &explanation.localization.l, args.window)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&pair)?);
        return Ok(());
    }
    for (name, s) in [("vanilla", &pair.vanilla), ("gradcam", &pair.gradcam)] {
        println!(
            "{name:<8} [{}, {}) score {}: {}",
            s.start,
            s.end,
            s.score,
            s.text()
        );
    }
    println!("{}", if pair.same { "same" } else { "different" });
    Ok(())
}

fn stats(args: &StatsArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let data = load_dataset(&args.dataset, args.inputs.max_q, args.inputs.max_d)?;
    let embeddings = args.inputs.embeddings()?;
    let analysis = corpus_analysis(&model, &data, &embeddings)?;
    let out = StatsOutput {
        schema_version: SCHEMA_VERSION,
        analysis: analysis.rounded(),
    };
    let json = serde_json::to_string_pretty(&out)? + "\n";
    match &args.out {
        Some(path) => write(path, json)?,
        None => print!("{json}"),
    }
    for t in &out.analysis.tests {
        eprintln!(
            "{:?}: U {} p {} direction {:?} (excluded {})",
            t.measure, t.u_statistic, t.p_value, t.direction, t.excluded_count
        );
    }
    if !out.analysis.failures.is_empty() {
        eprintln!("{} documents failed", out.analysis.failures.len());
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let corpus = SyntheticCorpus::generate(args.queries, args.vocab, args.seed)?;
    create_dir(&args.out)?;
    write(&args.out.join("dataset.tsv"), corpus.dataset.to_tsv())?;
    write(
        &args.out.join("embeddings.txt"),
        corpus.embeddings.to_text(),
    )?;
    println!(
        "wrote {} queries and {} embeddings to {}",
        corpus.dataset.len(),
        corpus.embeddings.len(),
        args.out.display()
    );
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Train(a) => train(a),
        Command::Score(a) => score(a),
        Command::Explain(a) => explain_pair(a),
        Command::Snippet(a) => snippet(a),
        Command::Stats(a) => stats(a),
        Command::Synth(a) => synth(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match e.downcast_ref::<gradrank::Error>() {
                Some(core) => eprintln!("error: {}: {core}", core.kind()),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::FAILURE
        }
    }
}
