//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use polyglot_id::embed::{
    cosine, joint_probabilities, kl_divergence, kl_gradient, train_skipgram, tsne_project, SkipGramParams, TsneParams,
};
use polyglot_id::eval::{
    accuracy, confusion_matrix_with_classes, f1_score, holdout_evaluate, metrics_from_confusion,
    snippet_length_experiment, stratified_holdout_indices, stratified_kfold, ConfusionMatrix, SnippetStudyConfig,
    SplitSpec,
};
use polyglot_id::features::{fit_vocabulary, vectorize, Channel, FeatureChannel, FeatureMatrix, FeaturizerConfig};
use polyglot_id::models::{
    leaf_weight, nb_fit, nb_predict_proba, rf_fit, rf_predict, softmax_grad_hess, softmax_log_loss, ForestParams,
    ModelKind, ModelSpec,
};
use polyglot_id::synth::{generate_corpus, two_block_corpus, SynthConfig, SYNTH_SEED};
use polyglot_id::textprep::TokenSeq;
use polyglot_id::LanguageId;
use rand::Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Independent TF-IDF: dense, straight from the definitions.
fn brute_force_tfidf(docs: &[Vec<String>], min_df: usize) -> (Vec<String>, Vec<Vec<f64>>) {
    let n = docs.len() as f64;
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        let mut seen: Vec<&str> = d.iter().map(String::as_str).collect();
        seen.sort();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }
    let terms: Vec<String> = df
        .iter()
        .filter(|(_, &c)| c >= min_df)
        .map(|(t, _)| t.to_string())
        .collect();
    let vectors = docs
        .iter()
        .map(|d| {
            let raw: Vec<f64> = terms
                .iter()
                .map(|t| {
                    let tf = d.iter().filter(|x| *x == t).count() as f64;
                    tf * (((1.0 + n) / (1.0 + df[t.as_str()] as f64)).ln() + 1.0)
                })
                .collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            raw.iter().map(|x| if norm > 0.0 { x / norm } else { 0.0 }).collect()
        })
        .collect();
    (terms, vectors)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = polyglot_id::rng::seeded(101, 0);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let n_docs = rng.random_range(1..=5);
        let n_terms = rng.random_range(1..=10);
        let docs: Vec<Vec<String>> = (0..n_docs)
            .map(|_| {
                let len = rng.random_range(0..=8);
                (0..len).map(|_| format!("t{}", rng.random_range(0..n_terms))).collect()
            })
            .collect();
        let min_df = rng.random_range(1..=2);
        let (terms, expected) = brute_force_tfidf(&docs, min_df);
        let seqs: Vec<TokenSeq> = docs.iter().map(|d| TokenSeq(d.clone())).collect();
        match fit_vocabulary(&seqs, min_df, Channel::Text) {
            Err(e) => {
                if !terms.is_empty() {
                    return Err(format!("case {case}: unexpected error {e}"));
                }
            }
            Ok(vocab) => {
                if vocab.terms() != terms.as_slice() {
                    return Err(format!("case {case}: vocabulary {:?} vs {:?}", vocab.terms(), terms));
                }
                for (d, want) in seqs.iter().zip(&expected) {
                    let got = vectorize(d, &vocab).to_dense();
                    for (g, w) in got.iter().zip(want) {
                        worst = worst.max((g - w).abs());
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-9 && elapsed < Duration::from_secs(1),
        format!("20 corpora, max deviation {worst:.1e}, {elapsed:.1?}"),
    )
}

fn criterion_2() -> Outcome {
    // Vocabulary order: bar, baz, foo. X = "foo foo bar", Y = "baz".
    let m = FeatureMatrix::from_dense(
        &[vec![1.0, 0.0, 2.0], vec![0.0, 1.0, 0.0]],
        vec![LanguageId::Java, LanguageId::Python],
    )
    .map_err(|e| e.to_string())?;
    let model = nb_fit(&m, 1.0).map_err(|e| e.to_string())?;
    let query = polyglot_id::features::SparseVector::from_dense(&[0.0, 0.0, 1.0]);
    let p = nb_predict_proba(&model, &query).map_err(|e| e.to_string())?;
    let dev = (p[0] - 2.0 / 3.0).abs().max((p[1] - 1.0 / 3.0).abs());
    check(
        dev <= 1e-9,
        format!("posterior ({:.12}, {:.12}), deviation {dev:.1e}", p[0], p[1]),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = polyglot_id::rng::seeded(103, 0);
    let normal = Normal::new(0.0, 2.0).unwrap();
    let (eps_g, eps_h) = (1e-5, 1e-3);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let k = [2, 5, 24][i % 3];
        let s: Vec<f64> = (0..k).map(|_| normal.sample(&mut rng)).collect();
        let y = rng.random_range(0..k);
        let (g, h) = softmax_grad_hess(&s, y);
        let loss = |d: usize, e: f64| {
            let mut t = s.clone();
            t[d] += e;
            softmax_log_loss(&t, y)
        };
        for d in 0..k {
            let fd_g = (loss(d, eps_g) - loss(d, -eps_g)) / (2.0 * eps_g);
            let fd_h = (loss(d, eps_h) - 2.0 * loss(d, 0.0) + loss(d, -eps_h)) / (eps_h * eps_h);
            for (a, f) in [(g[d], fd_g), (h[d], fd_h)] {
                let rel = (a - f).abs() / a.abs().max(f.abs()).max(1e-8);
                worst = worst.max(rel);
            }
        }
    }
    check(
        worst <= 1e-4,
        format!("100 score vectors, K in {{2,5,24}}, max relative error {worst:.1e}"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = polyglot_id::rng::seeded(104, 0);
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            (0..6)
                .map(|_| if rng.random::<f64>() < 0.5 { 0.0 } else { rng.random() })
                .collect()
        })
        .collect();
    let labels: Vec<LanguageId> = rows
        .iter()
        .map(|r| LanguageId::ALL[((r[0] + r[1] * 2.0) * 2.0) as usize % 4])
        .collect();
    let m = FeatureMatrix::from_dense(&rows, labels).map_err(|e| e.to_string())?;
    let forest = rf_fit(
        &m,
        &ForestParams {
            n_estimators: 1,
            seed: 7,
            ..ForestParams::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let mut disagreements = 0;
    for _ in 0..1000 {
        let x: Vec<f64> = (0..6)
            .map(|_| {
                if rng.random::<f64>() < 0.3 {
                    0.0
                } else {
                    rng.random_range(-0.2..1.2)
                }
            })
            .collect();
        let v = polyglot_id::features::SparseVector::from_dense(&x);
        let a = rf_predict(&forest, &v).map_err(|e| e.to_string())?;
        let b = forest.trees[0].predict(&v).map_err(|e| e.to_string())?;
        disagreements += usize::from(a != b);
    }
    let lambdas = [0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0];
    let mut violations = 0;
    let mut cells = 0;
    for gi in -20..=20 {
        for hi in 1..=20 {
            for alpha in [0.0, 0.5, 2.0] {
                let (g, h) = (gi as f64 * 0.5, hi as f64 * 0.25);
                let w: Vec<f64> = lambdas.iter().map(|&l| leaf_weight(g, h, l, alpha).abs()).collect();
                violations += w.windows(2).filter(|p| p[1] > p[0]).count();
                cells += 1;
            }
        }
    }
    check(
        disagreements == 0 && violations == 0,
        format!("{disagreements}/1000 forest-vs-tree disagreements; {violations} lambda violations over {cells} (G,H,alpha) cells"),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = polyglot_id::rng::seeded(105, 0);
    let k = 10;
    for case in 0..50 {
        let n_classes = rng.random_range(2..=8);
        let sizes: Vec<usize> = (0..n_classes).map(|_| rng.random_range(k..=80)).collect();
        let labels: Vec<LanguageId> = sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(LanguageId::ALL[c], n))
            .collect();
        let folds = stratified_kfold(&labels, k, case).map_err(|e| e.to_string())?;
        for (f, fold) in folds.iter().enumerate() {
            for (c, &n) in sizes.iter().enumerate() {
                let got = fold.iter().filter(|&&i| labels[i] == LanguageId::ALL[c]).count() as f64;
                let share = n as f64 / k as f64;
                if (got - share).abs() > 1.0 {
                    return Err(format!("case {case} fold {f} class {c}: {got} vs share {share}"));
                }
            }
        }
        let (train, test) =
            stratified_holdout_indices(&labels, &SplitSpec::with_seed(case)).map_err(|e| e.to_string())?;
        for (c, &n) in sizes.iter().enumerate() {
            let t = train.iter().filter(|&&i| labels[i] == LanguageId::ALL[c]).count();
            let rule = (0.8 * n as f64 + 0.5).floor() as usize;
            if t != rule || t + test.iter().filter(|&&i| labels[i] == LanguageId::ALL[c]).count() != n {
                return Err(format!("case {case} class {c}: train {t}, rule {rule}"));
            }
        }
    }
    Ok("50 class-size vectors, 10 folds within 1 of share, hold-out follows round-half-up".into())
}

fn criterion_6() -> Outcome {
    let swift = format!("{:.2}", f1_score(0.98, 0.96));
    let mut rng = polyglot_id::rng::seeded(106, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.random_range(2..=24);
        let classes: Vec<LanguageId> = LanguageId::ALL[..k].to_vec();
        let counts: Vec<Vec<u64>> = (0..k)
            .map(|_| (0..k).map(|_| rng.random_range(0..20)).collect())
            .collect();
        let cm = ConfusionMatrix {
            classes: classes.clone(),
            counts: counts.clone(),
        };
        if cm.total() == 0 {
            continue;
        }
        let a1 = metrics_from_confusion(&cm).map_err(|e| e.to_string())?.accuracy;
        // Second path: expand to label vectors and count agreements.
        let mut truth = Vec::new();
        let mut pred = Vec::new();
        for i in 0..k {
            for j in 0..k {
                for _ in 0..counts[i][j] {
                    truth.push(classes[i]);
                    pred.push(classes[j]);
                }
            }
        }
        let a2 = accuracy(&truth, &pred);
        let rebuilt = confusion_matrix_with_classes(&truth, &pred, &classes).map_err(|e| e.to_string())?;
        if rebuilt.counts != counts {
            return Err("confusion matrix does not round-trip".into());
        }
        worst = worst.max((a1 - a2).abs());
    }
    check(
        swift == "0.97" && worst <= 1e-12,
        format!("F1(0.98, 0.96) = {swift}; 100 matrices, max accuracy disagreement {worst:.1e}"),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let corpus = generate_corpus(&SynthConfig::default());
    let spec = ModelSpec::default_for(ModelKind::Gbt, SYNTH_SEED);
    let split = SplitSpec::with_seed(SYNTH_SEED);
    let mut acc = BTreeMap::new();
    let mut majority = 0.0;
    for channel in [FeatureChannel::Combined, FeatureChannel::Text, FeatureChannel::Code] {
        let run = holdout_evaluate(&corpus.questions, &FeaturizerConfig::new(channel, 2), &spec, &split)
            .map_err(|e| e.to_string())?;
        majority = run.report.per_class.iter().map(|m| m.support).max().unwrap_or(0) as f64 / run.report.total as f64;
        acc.insert(channel.to_string(), run.report.accuracy);
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "combined {:.3}, text {:.3}, code {:.3}, majority baseline {:.3}, {:.1?}",
        acc["combined"], acc["text"], acc["code"], majority, elapsed
    );
    check(
        acc["combined"] >= 0.90
            && acc["text"] >= majority + 0.20
            && acc["code"] >= majority + 0.20
            && elapsed < Duration::from_secs(180),
        detail,
    )
}

fn criterion_8() -> Outcome {
    let corpus = generate_corpus(&SynthConfig::with_short_snippets(0.3));
    let config = SnippetStudyConfig {
        featurizer: FeaturizerConfig::new(FeatureChannel::Code, 2),
        model: ModelSpec::default_for(ModelKind::Gbt, SYNTH_SEED),
        split: SplitSpec::with_seed(SYNTH_SEED),
    };
    let r = snippet_length_experiment(&corpus, &[10, 100], &config).map_err(|e| e.to_string())?;
    let (a10, a100) = match (r[0].accuracy(), r[1].accuracy()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(format!(
                "a threshold was skipped: {:?}",
                r.iter().map(|x| &x.outcome).collect::<Vec<_>>()
            ))
        }
    };
    check(
        a100 >= a10 - 0.02,
        format!(
            "accuracy {a10:.3} at >=10 chars ({} questions), {a100:.3} at >=100 chars ({})",
            r[0].retained, r[1].retained
        ),
    )
}

fn criterion_9() -> Outcome {
    let (docs, [a, b]) = two_block_corpus(SYNTH_SEED, 200, 20, 10);
    let model = train_skipgram(
        &docs,
        &SkipGramParams {
            seed: SYNTH_SEED,
            ..SkipGramParams::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let vec = |t: &String| model.vector(t).map(|v| v.to_vec()).map_err(|e| e.to_string());
    let mut intra = Vec::new();
    let mut inter = Vec::new();
    for (i, s) in a.iter().chain(&b).enumerate() {
        for (j, t) in a.iter().chain(&b).enumerate() {
            if i < j {
                let c = cosine(&vec(s)?, &vec(t)?);
                if (i < a.len()) == (j < a.len()) {
                    intra.push(c);
                } else {
                    inter.push(c);
                }
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let gap = mean(&intra) - mean(&inter);

    // t-SNE on the embedding vectors of both blocks and on Gaussian blobs,
    // several seeds each.
    let terms: Vec<String> = a.iter().chain(&b).cloned().collect();
    let vectors: Vec<Vec<f64>> = terms.iter().map(vec).collect::<Result<_, _>>()?;
    let params = TsneParams {
        perplexity: 10.0,
        ..TsneParams::default()
    };
    let mut kl_ok = 0;
    let mut runs = 0;
    for seed in 0..3 {
        let p = tsne_project(&terms, &vectors, &TsneParams { seed, ..params }).map_err(|e| e.to_string())?;
        runs += 1;
        kl_ok += usize::from(p.kl_trace.last().unwrap().1 < p.kl_trace[0].1);
    }
    let mut rng = polyglot_id::rng::seeded(109, 0);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let blobs: Vec<Vec<f64>> = (0..40)
        .map(|i| {
            (0..10)
                .map(|_| if i < 20 { 0.0 } else { 10.0 } + normal.sample(&mut rng))
                .collect()
        })
        .collect();
    let names: Vec<String> = (0..40).map(|i| format!("p{i:02}")).collect();
    for seed in 0..2 {
        let p = tsne_project(&names, &blobs, &TsneParams { seed, ..params }).map_err(|e| e.to_string())?;
        runs += 1;
        kl_ok += usize::from(p.kl_trace.last().unwrap().1 < p.kl_trace[0].1);
    }

    // Gradient against central differences of the KL objective.
    let x: Vec<Vec<f64>> = (0..8).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
    let p = joint_probabilities(&x, 2.0);
    let y: Vec<[f64; 2]> = (0..8).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    let grad = kl_gradient(&p, &y, 1.0);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..8 {
        for d in 0..2 {
            let mut plus = y.clone();
            let mut minus = y.clone();
            plus[i][d] += eps;
            minus[i][d] -= eps;
            let fd = (kl_divergence(&p, &plus) - kl_divergence(&p, &minus)) / (2.0 * eps);
            worst = worst.max((fd - grad[i][d]).abs() / fd.abs().max(grad[i][d].abs()).max(1e-8));
        }
    }
    check(
        gap >= 0.1 && kl_ok == runs && worst <= 1e-4,
        format!(
            "cosine intra {:.3} vs inter {:.3} (gap {gap:.3}); KL dropped in {kl_ok}/{runs} runs; gradient relative error {worst:.1e}",
            mean(&intra),
            mean(&inter)
        ),
    )
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_polyglot-id"))
        .env("POLYGLOT_ID_WORKERS", "1")
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn dir_bytes(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        let bytes = std::fs::read(entry.path()).map_err(|e| e.to_string())?;
        files.insert(entry.file_name().to_string_lossy().into_owned(), bytes);
    }
    Ok(files)
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = tmp.path().join("corpus.jsonl");
    let c = corpus.to_str().unwrap();
    cli(&["generate-corpus", "--out", c, "--per-language", "40"])?;
    let mut compared = Vec::new();
    let commands: [(&str, Vec<&str>); 3] = [
        (
            "train",
            vec![
                "train",
                "--corpus",
                c,
                "--channel",
                "combined",
                "--model",
                "gbt",
                "--seed",
                "11",
            ],
        ),
        (
            "tune",
            vec![
                "tune",
                "--corpus",
                c,
                "--channel",
                "code",
                "--model",
                "gbt",
                "--budget",
                "3",
                "--folds",
                "3",
                "--seed",
                "11",
            ],
        ),
        (
            "embed",
            vec![
                "embed",
                "--corpus",
                c,
                "--language",
                "python",
                "--embed-channel",
                "code",
                "--seed",
                "11",
            ],
        ),
    ];
    for (name, args) in commands {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = tmp.path().join(format!("{name}-{run}"));
            let mut full = args.clone();
            full.extend(["--out", out.to_str().unwrap()]);
            cli(&full)?;
            outputs.push(dir_bytes(&out)?);
        }
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            return Err(format!("{name}: artifacts differ between runs"));
        }
        compared.push(format!("{name} ({} files)", outputs[0].len()));
    }
    Ok(format!("byte-identical reruns: {}", compared.join(", ")))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("TF-IDF oracle equivalence", criterion_1),
        ("naive Bayes closed form", criterion_2),
        ("boosting gradient check", criterion_3),
        ("ensemble identities", criterion_4),
        ("stratification", criterion_5),
        ("metric cross-check", criterion_6),
        ("end-to-end synthetic gate", criterion_7),
        ("snippet-length trend", criterion_8),
        ("embedding sanity", criterion_9),
        ("determinism", criterion_10),
    ];
    let suite = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {:>2} {status} {name}: {detail} [{:.1?}]",
            i + 1,
            start.elapsed()
        );
    }
    println!(
        "acceptance: {} of {} passed in {:.1?}",
        criteria.len() - failed,
        criteria.len(),
        suite.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
