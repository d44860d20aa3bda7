//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.
//!
//! ```text
//! cargo test -p gradrank --test acceptance
//! ```

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use gradrank::gradcam::{bilinear_upsample, explain_matrix};
use gradrank::ranker::{pairwise_accuracy, train, ConvSpec, Padding};
use gradrank::report::{ExplanationReport, ReportOptions};
use gradrank::snippet::{exact_match_indicator, gradcam_snippet, vanilla_snippet};
use gradrank::stats::{corpus_analysis, kurtosis, mann_whitney_u, GroupDirection, Measure};
use gradrank::synthetic::SyntheticCorpus;
use gradrank::{explain, Matrix, RankerConfig, RankerModel, Tensor3, TokenSequence, TrainOptions};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const FD_EPS: f64 = 1e-4;
const GRAD_REL_TOL: f64 = 1e-3;
/// Floor for the relative-error denominator so exact zeros compare cleanly.
const REL_FLOOR: f64 = 1e-8;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(lo..hi))
}

fn random_config(rng: &mut ChaCha8Rng) -> RankerConfig {
    let n_conv = rng.gen_range(1..=3);
    let conv_layers = (0..n_conv)
        .map(|_| ConvSpec {
            kernel_h: rng.gen_range(1..=3),
            kernel_w: rng.gen_range(1..=3),
            out_channels: rng.gen_range(2..=4),
            padding: if rng.gen_bool(0.3) {
                Padding::Valid
            } else {
                Padding::Same
            },
        })
        .collect();
    RankerConfig {
        conv_layers,
        pool_out: (rng.gen_range(1..=3), rng.gen_range(1..=4)),
        mlp_hidden: (0..rng.gen_range(0..=2))
            .map(|_| rng.gen_range(2..=6))
            .collect(),
        seed: rng.gen(),
    }
}

/// Model with random weights and small random biases.
fn random_model(rng: &mut ChaCha8Rng, cfg: RankerConfig) -> RankerModel {
    let mut model = RankerModel::init(cfg).unwrap();
    let mut params = model.parameters();
    for p in &mut params {
        *p += rng.gen_range(-0.1..0.1);
    }
    model.set_parameters(&params).unwrap();
    model
}

/// Finite differences of the pool+MLP head around one feature-map element.
struct Probe {
    central: f64,
    /// The head is piecewise linear in the feature maps; differing one-sided
    /// slopes mean the ±ε interval straddles a kink (pool tie or ReLU switch).
    kink: bool,
}

fn probe(model: &RankerModel, maps: &Tensor3, idx: usize, base: f64) -> Probe {
    let mut shifted = maps.clone();
    shifted.as_mut_slice()[idx] += FD_EPS;
    let up = model.score_from_feature_maps(&shifted).unwrap();
    shifted.as_mut_slice()[idx] = maps.as_slice()[idx] - FD_EPS;
    let down = model.score_from_feature_maps(&shifted).unwrap();
    let forward = (up - base) / FD_EPS;
    let backward = (base - down) / FD_EPS;
    Probe {
        central: (up - down) / (2.0 * FD_EPS),
        kink: (forward - backward).abs() > 1e-6 * (1.0 + forward.abs().max(backward.abs())),
    }
}

// 1. Analytic ∂S/∂A^k vs central finite differences.
fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    let mut worst: f64 = 0.0;
    let mut models = 0;
    let mut total_checked = 0;
    let mut nonzero_checked = 0;
    while models < 25 {
        let cfg = random_config(&mut rng);
        let model = random_model(&mut rng, cfg);
        let (rows, cols) = (rng.gen_range(8..=12), rng.gen_range(20..=40));
        let m = random_matrix(&mut rng, rows, cols, -1.0, 1.0);
        let Ok((score, cache)) = model.forward(&m) else {
            continue;
        };
        let maps = cache.feature_maps();
        if maps.len() < 100 {
            continue;
        }
        let grads = model.backward_to_feature_maps(&cache).unwrap();
        // Every coordinate with a non-zero analytic gradient, then random others.
        let mut order: Vec<usize> = (0..maps.len()).collect();
        order.shuffle(&mut rng);
        order.sort_by_key(|&i| grads.as_slice()[i] == 0.0);
        let mut checked = 0;
        for idx in order {
            if checked >= 100 && grads.as_slice()[idx] == 0.0 {
                break;
            }
            let p = probe(&model, maps, idx, score);
            if p.kink {
                continue;
            }
            let analytic = grads.as_slice()[idx];
            let err = rel_err(analytic, p.central);
            if err > GRAD_REL_TOL {
                return Err(format!(
                    "model {models}, coordinate {idx}: analytic {analytic:e} vs finite difference {:e} (rel {err:e})",
                    p.central
                ));
            }
            worst = worst.max(err);
            checked += 1;
            nonzero_checked += usize::from(analytic != 0.0);
        }
        ensure(checked >= 100, || {
            format!("model {models}: only {checked} differentiable coordinates")
        })?;
        total_checked += checked;
        models += 1;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    ensure(nonzero_checked > 0, || {
        "no non-zero gradients were checked".into()
    })?;
    Ok(format!(
        "{models} models, {total_checked} coordinates ({nonzero_checked} non-zero), worst rel err {worst:.2e}, {elapsed:.1?}"
    ))
}

/// Align-corners bilinear interpolation evaluated cell by cell from the formula.
fn bilinear_oracle(src: &Matrix, rows: usize, cols: usize) -> Matrix {
    let (h, w) = src.shape();
    let coord = |t: usize, n_src: usize, n_dst: usize| -> f64 {
        if n_src == 1 || n_dst == 1 {
            0.0
        } else {
            t as f64 * (n_src - 1) as f64 / (n_dst - 1) as f64
        }
    };
    Matrix::from_fn(rows, cols, |i, j| {
        let sy = coord(i, h, rows);
        let sx = coord(j, w, cols);
        let y0 = sy.floor() as usize;
        let x0 = sx.floor() as usize;
        let y1 = if y0 + 1 < h { y0 + 1 } else { y0 };
        let x1 = if x0 + 1 < w { x0 + 1 } else { x0 };
        let (dy, dx) = (sy - y0 as f64, sx - x0 as f64);
        src.get(y0, x0) * (1.0 - dy) * (1.0 - dx)
            + src.get(y0, x1) * (1.0 - dy) * dx
            + src.get(y1, x0) * dy * (1.0 - dx)
            + src.get(y1, x1) * dy * dx
    })
}

// 2. Pipeline L vs finite-difference construction of the importance weights and map.
fn gradcam_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xCA4);
    let mut cases = 0;
    let mut rejected = 0;
    let mut worst: f64 = 0.0;
    while cases < 10 {
        let mut cfg = random_config(&mut rng);
        cfg.conv_layers.last_mut().unwrap().padding = Padding::Valid;
        let mut model = random_model(&mut rng, cfg);
        let (rows, cols) = (rng.gen_range(5..=8), rng.gen_range(8..=20));
        let m = random_matrix(&mut rng, rows, cols, -1.0, 1.0);
        if model.forward(&m).is_err() {
            continue;
        }
        // Lift the last layer's activations off zero so pooling windows have
        // unique maxima and finite differences are well defined.
        let last = model.conv_layers().len() - 1;
        model.conv_layers_mut()[last]
            .bias_mut()
            .iter_mut()
            .for_each(|b| *b += 2.0);
        let (score, cache) = model.forward(&m).unwrap();
        let maps = cache.feature_maps().clone();
        let (k, h, w) = maps.shape();

        let mut fd = vec![0.0; maps.len()];
        let mut kink = false;
        for (idx, g) in fd.iter_mut().enumerate() {
            let p = probe(&model, &maps, idx, score);
            kink |= p.kink;
            *g = p.central;
        }
        if kink {
            rejected += 1;
            continue;
        }
        let z = (h * w) as f64;
        let alpha: Vec<f64> = (0..k)
            .map(|c| fd[c * h * w..(c + 1) * h * w].iter().sum::<f64>() / z)
            .collect();
        let raw = Matrix::from_fn(h, w, |i, j| {
            let s: f64 = (0..k).map(|c| alpha[c] * maps.get(c, i, j)).sum();
            if s > 0.0 {
                s
            } else {
                0.0
            }
        });
        let expected = bilinear_oracle(&raw, m.rows(), m.cols());

        let got = explain_matrix(&model, m.clone()).unwrap();
        let scale = expected
            .as_slice()
            .iter()
            .fold(0.0f64, |a, &x| a.max(x.abs()))
            .max(REL_FLOOR);
        for (name, a, b) in [
            ("raw", &got.localization.raw, &raw),
            ("upsampled", &got.localization.upsampled, &expected),
        ] {
            ensure(a.shape() == b.shape(), || {
                format!("case {cases}: {name} shape mismatch")
            })?;
            let diff = a
                .as_slice()
                .iter()
                .zip(b.as_slice())
                .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
            let err = diff / scale;
            ensure(err <= GRAD_REL_TOL, || {
                format!("case {cases}: {name} map differs by {err:e} (relative to max |L|)")
            })?;
            worst = worst.max(err);
        }
        cases += 1;
    }
    Ok(format!(
        "{cases} cases ({rejected} redrawn at kinks), worst rel err {worst:.2e}"
    ))
}

// 3. Bilinear upsampling vs the per-cell formula.
fn bilinear() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB11);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for _ in 0..200 {
        let (h, w) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
        let src = random_matrix(&mut rng, h, w, 0.0, 5.0);
        let (rows, cols) = (rng.gen_range(h..=64), rng.gen_range(w..=64));
        let got = bilinear_upsample(&src, (rows, cols)).unwrap();
        let want = bilinear_oracle(&src, rows, cols);
        for (a, b) in got.as_slice().iter().zip(want.as_slice()) {
            worst = worst.max((a - b).abs());
        }
        ensure(worst <= 1e-12, || {
            format!("{h}x{w} -> {rows}x{cols}: deviation {worst:e}")
        })?;
        ensure(bilinear_upsample(&src, (h, w)).unwrap() == src, || {
            "identity failed".into()
        })?;
        let (lo, hi) = (src.min().unwrap(), src.max().unwrap());
        ensure(
            got.as_slice()
                .iter()
                .all(|&x| x >= lo - 1e-12 && x <= hi + 1e-12),
            || format!("{h}x{w} -> {rows}x{cols}: bounds violated"),
        )?;
        n += 1;
    }
    let up = bilinear_upsample(&Matrix::filled(8, 8, 1.0), (64, 64)).unwrap();
    ensure(up.shape() == (64, 64), || "8x8 -> 64x64 shape".into())?;
    Ok(format!("{n} random maps, max deviation {worst:.1e}"))
}

fn brute_force_window(weights: &[f64], w: usize) -> (usize, usize) {
    let n = weights.len();
    if n <= w {
        return (0, n);
    }
    let mut best = (0, f64::NEG_INFINITY);
    for s in 0..=n - w {
        let mut total = 0.0;
        for x in &weights[s..s + w] {
            total += x;
        }
        if total > best.1 {
            best = (s, total);
        }
    }
    (best.0, best.0 + w)
}

// 4. Snippet generators vs exhaustive window scans.
fn snippets() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5A1);
    let mut differing = 0;
    for case in 0..1000 {
        let vocab = rng.gen_range(3..15);
        let doc_len = rng.gen_range(1..120);
        let w = rng.gen_range(1..30);
        let doc = TokenSequence::from_tokens(
            (0..doc_len).map(|_| format!("w{}", rng.gen_range(0..vocab))),
        )
        .unwrap();
        let query = TokenSequence::from_tokens(
            (0..rng.gen_range(1..5)).map(|_| format!("w{}", rng.gen_range(0..vocab * 2))),
        )
        .unwrap();
        // Sparse, sometimes coarse contributions to provoke ties.
        let l: Vec<f64> = (0..doc_len)
            .map(|_| match rng.gen_range(0..4) {
                0 => 0.0,
                1 => rng.gen_range(0..4) as f64,
                _ => rng.gen_range(0.0..3.0),
            })
            .collect();
        let b = exact_match_indicator(&query, &doc);
        let c: Vec<f64> = b.iter().zip(&l).map(|(b, l)| b + l / w as f64).collect();

        let v = vanilla_snippet(&query, &doc, w).unwrap();
        let g = gradcam_snippet(&query, &doc, &l, w).unwrap();
        ensure((v.start, v.end) == brute_force_window(&b, w), || {
            format!("case {case}: vanilla span")
        })?;
        ensure((g.start, g.end) == brute_force_window(&c, w), || {
            format!("case {case}: gradcam span")
        })?;
        let zero = gradcam_snippet(&query, &doc, &vec![0.0; doc_len], w).unwrap();
        ensure(zero == v, || {
            format!("case {case}: l = 0 differs from vanilla")
        })?;
        differing += usize::from(!v.same_span(&g));
    }
    Ok(format!(
        "1000 instances exact; {differing} where the generators disagree"
    ))
}

fn kurtosis_oracle(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    x.iter().map(|v| ((v - mean) / sd).powi(4)).sum::<f64>() / n
}

/// Exact one-sided permutation p-value estimate with `rounds` shuffles.
fn permutation_p(a: &[f64], b: &[f64], rounds: usize, rng: &mut ChaCha8Rng) -> f64 {
    let u = |x: &[f64], y: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in x {
            for q in y {
                s += if p > q {
                    1.0
                } else if p == q {
                    0.5
                } else {
                    0.0
                };
            }
        }
        s
    };
    let observed = u(a, b);
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut hits = 0;
    for _ in 0..rounds {
        pooled.shuffle(rng);
        if u(&pooled[..a.len()], &pooled[a.len()..]) >= observed {
            hits += 1;
        }
    }
    hits as f64 / rounds as f64
}

// 5. Kurtosis, affine invariance, Mann–Whitney p-values and U complementarity.
fn statistics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x57A7);
    let mut worst_k: f64 = 0.0;
    let mut worst_affine: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(4..400);
        let x: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.4) {
                    0.0
                } else {
                    rng.gen_range(0.0f64..5.0).powi(2)
                }
            })
            .collect();
        let Ok(k) = kurtosis(&x) else { continue };
        let err = (k - kurtosis_oracle(&x)).abs() / k.abs().max(1.0);
        worst_k = worst_k.max(err);
        let (a, b) = (
            rng.gen_range(0.1..10.0) * if rng.gen_bool(0.5) { -1.0 } else { 1.0 },
            rng.gen_range(-50.0..50.0),
        );
        let moved: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let err = (kurtosis(&moved).unwrap() - k).abs() / k.abs().max(1.0);
        worst_affine = worst_affine.max(err);
    }
    ensure(worst_k <= 1e-10, || {
        format!("kurtosis deviates from oracle by {worst_k:e}")
    })?;
    ensure(worst_affine <= 1e-8, || {
        format!("affine invariance off by {worst_affine:e}")
    })?;

    let mut worst_p: f64 = 0.0;
    for pair in 0..20 {
        let shift = rng.gen_range(-0.2..0.9);
        let discrete = pair % 4 == 0;
        let draw = |rng: &mut ChaCha8Rng, offset: f64| -> Vec<f64> {
            (0..30)
                .map(|_| {
                    let v: f64 = rng.gen_range(0.0..1.0) + offset;
                    if discrete {
                        (v * 5.0).round()
                    } else {
                        v
                    }
                })
                .collect()
        };
        let a = draw(&mut rng, shift);
        let b = draw(&mut rng, 0.0);
        let mw = mann_whitney_u(&a, &b).unwrap();
        let reverse = mann_whitney_u(&b, &a).unwrap();
        ensure(mw.u + reverse.u == (a.len() * b.len()) as f64, || {
            format!(
                "pair {pair}: U_a + U_b = {} != {}",
                mw.u + reverse.u,
                a.len() * b.len()
            )
        })?;
        let p_perm = permutation_p(&a, &b, 10_000, &mut rng);
        let diff = (mw.p_value - p_perm).abs();
        ensure(diff <= 0.02, || {
            format!(
                "pair {pair}: normal p {:.4} vs permutation p {p_perm:.4}",
                mw.p_value
            )
        })?;
        worst_p = worst_p.max(diff);
    }
    Ok(format!(
        "kurtosis err {worst_k:.1e}, affine err {worst_affine:.1e}, worst |p - p_perm| {worst_p:.4} over 20 pairs"
    ))
}

struct Trained {
    corpus: SyntheticCorpus,
    held_out: gradrank::RankingDataset,
    model: RankerModel,
    elapsed: Duration,
}

fn train_synthetic() -> Trained {
    let start = Instant::now();
    let mut corpus = SyntheticCorpus::generate(250, 400, 2024).unwrap();
    let held_out = corpus.split_off(50);
    let mut model = RankerModel::init(RankerConfig::default()).unwrap();
    train(
        &mut model,
        &corpus.dataset,
        &corpus.embeddings,
        &TrainOptions::default(),
    )
    .unwrap();
    Trained {
        corpus,
        held_out,
        model,
        elapsed: start.elapsed(),
    }
}

// 6. Positives have larger localization-map totals than negatives.
fn scaled_replication(t: &Trained) -> Outcome {
    let start = Instant::now();
    let data = &t.corpus.dataset;
    ensure(
        data.len() == 200 && data.records.iter().all(|r| r.negatives.len() == 4),
        || "corpus must have 200 queries with 4 negatives".into(),
    )?;
    let acc = pairwise_accuracy(&t.model, data, &t.corpus.embeddings).unwrap();
    ensure(acc >= 0.95, || {
        format!("training pairwise accuracy {acc:.4} < 0.95")
    })?;
    let analysis = corpus_analysis(&t.model, data, &t.corpus.embeddings).unwrap();
    let total = analysis.test(Measure::Total).ok_or("no total test")?;
    ensure(total.direction == GroupDirection::Positive, || {
        format!("total direction {:?}", total.direction)
    })?;
    ensure(total.p_value < 0.05, || {
        format!("total p = {:e}", total.p_value)
    })?;
    let (mp, mn) = (total.median_pos().unwrap(), total.median_neg().unwrap());
    ensure(mp > mn, || {
        format!("total medians: positive {mp} <= negative {mn}")
    })?;
    let rows = data
        .records
        .iter()
        .map(|r| 1 + r.negatives.len())
        .sum::<usize>();
    ensure(
        analysis.documents.len() + analysis.failures.len() == rows,
        || "row accounting".into(),
    )?;
    let kurt = analysis
        .test(Measure::Kurtosis)
        .map(|k| {
            format!(
                "kurtosis (not gated): {:?}, p {:.2e}, medians {:.3}/{:.3}, excluded {}",
                k.direction,
                k.p_value,
                k.median_pos().unwrap_or(f64::NAN),
                k.median_neg().unwrap_or(f64::NAN),
                k.excluded_count
            )
        })
        .unwrap_or_else(|| "kurtosis: no test".into());
    let elapsed = t.elapsed + start.elapsed();
    ensure(elapsed < Duration::from_secs(300), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "total: p {:.2e}, medians {mp:.4} > {mn:.4}; {kurt}; {elapsed:.1?}",
        total.p_value
    ))
}

// 7. Training reaches the accuracy target; lr = 0 is a no-op.
fn training_sanity(t: &Trained) -> Outcome {
    let acc = pairwise_accuracy(&t.model, &t.held_out, &t.corpus.embeddings).unwrap();
    ensure(acc >= 0.95, || {
        format!("held-out pairwise accuracy {acc:.4} < 0.95")
    })?;
    let mut frozen = RankerModel::init(RankerConfig::default()).unwrap();
    let before = frozen.parameters();
    let opts = TrainOptions {
        epochs: 2,
        lr: 0.0,
        ..TrainOptions::default()
    };
    train(&mut frozen, &t.held_out, &t.corpus.embeddings, &opts).unwrap();
    let same = before
        .iter()
        .zip(frozen.parameters())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    ensure(same, || "lr = 0 changed parameters".into())?;
    Ok(format!(
        "held-out accuracy {acc:.4} after {} epochs; lr = 0 bit-identical",
        TrainOptions::default().epochs
    ))
}

// 8. Model container and JSON report round-trips.
fn round_trips(t: &Trained) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("model.grnk");
    gradrank::ranker::save_model(&t.model, &path).map_err(|e| e.to_string())?;
    let loaded = gradrank::ranker::load_model(&path).map_err(|e| e.to_string())?;
    ensure(loaded == t.model, || "parameters differ after load".into())?;
    ensure(loaded.to_bytes() == std::fs::read(&path).unwrap(), || {
        "re-save differs".into()
    })?;
    let mut reports = 0;
    let mut keys = BTreeSet::new();
    for r in t.held_out.records.iter().take(10) {
        let m = gradrank::interaction::build_interaction_matrix(
            &r.query,
            &r.positive,
            &t.corpus.embeddings,
        )
        .unwrap();
        let (a, b) = (t.model.score(&m).unwrap(), loaded.score(&m).unwrap());
        ensure(a.to_bits() == b.to_bits(), || {
            "score changed after load".into()
        })?;
        let ex = explain(&loaded, &r.query, &r.positive, &t.corpus.embeddings).unwrap();
        let report =
            ExplanationReport::build(&r.query, &r.positive, &ex, &ReportOptions::default())
                .unwrap();
        let json = report.to_json();
        let back = ExplanationReport::from_json(&json).map_err(|e| e.to_string())?;
        ensure(back == report && back.to_json() == json, || {
            "report JSON round-trip".into()
        })?;
        let value: serde_json::Value = serde_json::from_str(&json).map_err(|e| e.to_string())?;
        keys.extend(
            value
                .as_object()
                .into_iter()
                .flat_map(|o| o.keys().cloned()),
        );
        reports += 1;
    }
    ensure(keys.contains("schema_version"), || {
        "schema_version missing".into()
    })?;
    Ok(format!("model bytes identical; {reports} reports lossless"))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("PASS  AC{id} {name}: {detail}"),
        Err(detail) => {
            failed += 1;
            println!("FAIL  AC{id} {name}: {detail}");
        }
    };
    report(1, "gradient correctness", gradient_correctness());
    report(2, "grad-cam oracle equivalence", gradcam_oracle());
    report(3, "bilinear upsampling", bilinear());
    report(4, "snippet generators", snippets());
    report(5, "statistics", statistics());
    let trained = train_synthetic();
    report(
        6,
        "scaled separation replication",
        scaled_replication(&trained),
    );
    report(7, "training sanity", training_sanity(&trained));
    report(8, "round-trips", round_trips(&trained));
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
