//! Trains the default ranker on a synthetic corpus and runs the corpus-level
//! separation analysis.
//!
//! ```text
//! cargo run --release -p gradrank --example synthetic_study -- [queries] [epochs] [seed]
//! ```

use std::time::Instant;

use gradrank::ranker::{pairwise_accuracy, train_with_progress};
use gradrank::stats::{corpus_analysis, Measure};
use gradrank::synthetic::SyntheticCorpus;
use gradrank::{RankerConfig, RankerModel, TrainOptions};

fn main() -> gradrank::Result<()> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let queries = args.first().copied().unwrap_or(200) as usize;
    let epochs = args
        .get(1)
        .copied()
        .unwrap_or(TrainOptions::default().epochs as u64) as usize;
    let seed = args.get(2).copied().unwrap_or(7);

    let mut corpus = SyntheticCorpus::generate(queries + 50, 400, seed)?;
    let held_out = corpus.split_off(50);
    let mut model = RankerModel::init(RankerConfig::default())?;
    let opts = TrainOptions {
        epochs,
        ..TrainOptions::default()
    };
    let start = Instant::now();
    train_with_progress(
        &mut model,
        &corpus.dataset,
        &corpus.embeddings,
        &opts,
        |e, loss| {
            println!("epoch {e:>3}  loss {loss:.5}");
        },
    )?;
    println!("trained in {:.1?}", start.elapsed());
    println!(
        "pairwise accuracy: train {:.4}  held-out {:.4}",
        pairwise_accuracy(&model, &corpus.dataset, &corpus.embeddings)?,
        pairwise_accuracy(&model, &held_out, &corpus.embeddings)?
    );

    let analysis = corpus_analysis(&model, &corpus.dataset, &corpus.embeddings)?;
    for measure in [Measure::Kurtosis, Measure::Total] {
        if let Some(t) = analysis.test(measure) {
            println!(
                "{measure:?}: U = {} p = {:.3e} direction {:?} median pos {:.4} neg {:.4} excluded {}",
                t.u_statistic,
                t.p_value,
                t.direction,
                t.median_pos().unwrap_or(f64::NAN),
                t.median_neg().unwrap_or(f64::NAN),
                t.excluded_count
            );
        }
    }
    println!("failures: {}", analysis.failures.len());
    Ok(())
}
