use std::path::Path;

use polyglot_id::corpus::Corpus;
use polyglot_id::eval::{stratified_holdout_indices, ThresholdOutcome};
use polyglot_id::features::FeatureChannel;
use polyglot_id::models::{Classifier, ModelKind};
use polyglot_id::pipeline::{
    load_corpus, predict, run_snippet_study, run_train_eval, save_corpus, LoadedModel, PipelineError, PredictInput,
    RunConfig,
};
use polyglot_id::synth::{generate_corpus, SynthConfig};

fn write_corpus(dir: &Path, per_language: usize) -> std::path::PathBuf {
    let corpus = generate_corpus(&SynthConfig {
        per_language,
        ..SynthConfig::default()
    });
    let path = dir.join("corpus.jsonl");
    save_corpus(&corpus, &path).unwrap();
    path
}

fn config(dir: &Path, corpus: &Path, channel: FeatureChannel, model: ModelKind) -> RunConfig {
    let mut c = RunConfig {
        channel,
        model,
        ..RunConfig::default()
    };
    c.paths.corpus = Some(corpus.to_path_buf());
    c.paths.out_dir = Some(dir.join(format!("{channel}-{model}")));
    c.hyperparams = match model {
        ModelKind::Gbt => [("n_rounds".to_string(), 10.into())].into(),
        ModelKind::Rf => [("n_estimators".to_string(), 10.into())].into(),
        ModelKind::Nb => Default::default(),
    };
    c
}

#[test]
fn held_out_questions_get_their_generating_language() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = write_corpus(dir.path(), 30);
    let cfg = config(dir.path(), &corpus_path, FeatureChannel::Combined, ModelKind::Nb);
    run_train_eval(&cfg).unwrap();
    let model = LoadedModel::load(cfg.paths.out_dir.as_ref().unwrap()).unwrap();
    let corpus = load_corpus(&corpus_path).unwrap().corpus;
    let labels: Vec<_> = corpus.questions.iter().map(|q| q.label).collect();
    let (_, test) = stratified_holdout_indices(&labels, &cfg.split()).unwrap();
    assert_eq!(model.file.metadata["test_rows"].as_u64(), Some(test.len() as u64));
    let mut correct = 0;
    for &i in &test {
        let q = &corpus.questions[i];
        let p = predict(
            &model,
            &PredictInput {
                title: Some(q.title.clone()),
                body: Some(q.body_text.clone()),
                snippet: Some(q.snippet.clone()),
            },
        )
        .unwrap();
        assert!((p.probabilities.values().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(p.probabilities.len(), 12);
        correct += usize::from(p.label == q.label);
    }
    assert!(correct as f64 >= 0.9 * test.len() as f64, "{correct}/{}", test.len());
}

#[test]
fn missing_fields_name_the_channel_requirement() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = write_corpus(dir.path(), 10);
    let cfg = config(dir.path(), &corpus_path, FeatureChannel::Text, ModelKind::Nb);
    run_train_eval(&cfg).unwrap();
    let model = LoadedModel::load(cfg.paths.out_dir.as_ref().unwrap()).unwrap();
    let err = predict(
        &model,
        &PredictInput {
            snippet: Some("x = 1".into()),
            ..PredictInput::default()
        },
    )
    .unwrap_err();
    assert!(matches!(err, PipelineError::MissingField { .. }));
    assert_eq!(err.to_string(), "text channel requires title/body");
}

#[test]
fn out_of_vocabulary_input_is_scored_as_the_zero_vector() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = write_corpus(dir.path(), 10);
    for kind in [ModelKind::Nb, ModelKind::Gbt] {
        let cfg = config(dir.path(), &corpus_path, FeatureChannel::Code, kind);
        run_train_eval(&cfg).unwrap();
        let model = LoadedModel::load(cfg.paths.out_dir.as_ref().unwrap()).unwrap();
        let p = predict(
            &model,
            &PredictInput {
                snippet: Some("qqqqqq wwwwww".into()),
                ..PredictInput::default()
            },
        )
        .unwrap();
        let zero = polyglot_id::features::SparseVector::zero(model.featurizer.dim());
        assert_eq!(p.label, model.file.model.predict(&zero).unwrap(), "{kind}");
        if let polyglot_id::models::AnyModel::NaiveBayes(nb) = &model.file.model {
            let prior = &nb.class_log_prior;
            let best = (0..prior.len()).fold(0, |m, i| if prior[i] > prior[m] { i } else { m });
            assert_eq!(p.label, nb.classes[best]);
        }
    }
}

#[test]
fn foreign_vocabulary_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let cfg_a = config(&a, &write_corpus(&a, 10), FeatureChannel::Text, ModelKind::Nb);
    let cfg_b = config(&b, &write_corpus(&b, 12), FeatureChannel::Text, ModelKind::Nb);
    run_train_eval(&cfg_a).unwrap();
    run_train_eval(&cfg_b).unwrap();
    let out_a = cfg_a.paths.out_dir.as_ref().unwrap();
    std::fs::copy(
        cfg_b.paths.out_dir.as_ref().unwrap().join("vocab_text.json"),
        out_a.join("vocab_text.json"),
    )
    .unwrap();
    let err = LoadedModel::load(out_a).unwrap_err();
    assert!(err.to_string().contains("vocabulary hash mismatch"), "{err}");
}

#[test]
fn snippet_study_skips_unreachable_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_corpus(&SynthConfig {
        per_language: 15,
        short_snippet_fraction: 0.3,
        ..SynthConfig::default()
    });
    let path = dir.path().join("c.jsonl");
    save_corpus(&corpus, &path).unwrap();
    let mut cfg = config(dir.path(), &path, FeatureChannel::Code, ModelKind::Nb);
    cfg.min_df = 1;
    let results = run_snippet_study(&cfg, &[10, 100_000]).unwrap();
    assert!(matches!(results[0].outcome, ThresholdOutcome::Evaluated { .. }));
    assert!(matches!(&results[1].outcome, ThresholdOutcome::Skipped { reason } if reason.contains("no snippets")));
    assert_eq!(results[1].retained, 0);
    assert!(run_snippet_study(&cfg, &[50, 10]).is_err());
    assert!(run_snippet_study(&cfg, &[0]).is_err());
}

#[test]
fn corpus_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_corpus(dir.path(), 3);
    let loaded = load_corpus(&path).unwrap();
    assert_eq!(loaded.sha256.len(), 64);
    let again: Corpus = generate_corpus(&SynthConfig {
        per_language: 3,
        ..SynthConfig::default()
    });
    assert_eq!(loaded.corpus.questions, again.questions);
}
