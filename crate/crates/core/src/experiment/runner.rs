//! Runs every (classifier family, feature scheme) cell of an experiment and
//! writes the report and per-cell artifacts.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{CorpusSource, ExperimentConfig, FeatureSpec};
use super::pipeline::{tokenize_corpus, tune_and_fit, Featurizer, TrainedPipeline};
use super::report::{emit_report, ReportFormat, ResultRow, ResultTable};
use super::synth::make_synthetic;
use crate::agreement::load_label_csv;
use crate::classifiers::{Dataset, Family, GridResult, Rows};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, score_external, split_labels, EvalReport, Prediction, Split, SplitSpec};
use crate::features::{EmbeddingTable, FitOptions};
use crate::ingest::{load_tweets, Corpus, InputFormat, Label};
use crate::seed;

/// Hooks called with the ids that reach each fitting step.
pub trait FitObserver: Sync {
    /// A feature extractor is about to be fitted on `ids`.
    fn features_fitted(&self, _feature: &str, _ids: &[String]) {}
    /// Hyperparameter search and the final fit of `family` are about to run
    /// on `ids`.
    fn model_fitted(&self, _family: Family, _feature: &str, _ids: &[String]) {}
}

/// Observer that does nothing.
pub struct NoObserver;

impl FitObserver for NoObserver {}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: ResultTable,
    pub split: Split,
    /// Every file written, report files first.
    pub files: Vec<PathBuf>,
}

/// Loads (or generates) the corpus named by the config, applying the label
/// file if one is given. Every tweet must end up labeled.
pub fn load_labeled_corpus(cfg: &ExperimentConfig) -> Result<Corpus> {
    let corpus = match &cfg.corpus {
        CorpusSource::Synthetic(spec) => make_synthetic(spec, cfg.seed)?,
        CorpusSource::File { path, format, labels } => {
            let format = format.unwrap_or_else(|| InputFormat::from_path(path));
            let mut corpus = load_tweets(path, format)?.corpus;
            if let Some(lp) = labels {
                let map = load_label_csv(lp)?;
                for t in &mut corpus.tweets {
                    if let Some(&l) = map.get(&t.id) {
                        t.label = Some(l);
                    }
                }
            }
            corpus
        }
    };
    if corpus.is_empty() {
        return Err(Error::Empty("experiment corpus".into()));
    }
    corpus.labels()?;
    Ok(corpus)
}

struct Side {
    ids: Vec<String>,
    docs: Vec<Vec<String>>,
    labels: Vec<Label>,
}

fn side(corpus: &Corpus, tokens: &[Vec<String>], ids: &[String]) -> Side {
    let pos: HashMap<&str, usize> = corpus.tweets.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
    let mut s = Side {
        ids: ids.to_vec(),
        docs: Vec::with_capacity(ids.len()),
        labels: Vec::with_capacity(ids.len()),
    };
    for id in ids {
        let i = pos[id.as_str()];
        s.docs.push(tokens[i].clone());
        s.labels.push(corpus.tweets[i].label.expect("labels checked on load"));
    }
    s
}

/// Train/test features of one scheme at one normalization setting.
struct Prepared {
    featurizer: Featurizer,
    train: Dataset,
    test: Rows,
}

struct CellOutcome {
    row: ResultRow,
    eval: Option<EvalReport>,
    search: Option<GridResult>,
    pipeline: Option<TrainedPipeline>,
}

fn cell_name(family: Family, feature: &FeatureSpec) -> String {
    format!("{}__{}", family.as_str(), feature.name())
}

pub fn run_grid(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_grid_with(cfg, &NoObserver)
}

pub fn run_grid_with(cfg: &ExperimentConfig, observer: &dyn FitObserver) -> Result<RunOutput> {
    cfg.validate()?;
    let corpus = load_labeled_corpus(cfg)?;
    let split = split_labels(&corpus.labels()?, &cfg.split)?;
    let tokens = tokenize_corpus(&corpus, &cfg.text);
    let train = side(&corpus, &tokens, &split.train);
    let test = side(&corpus, &tokens, &split.test);
    let gold: HashMap<String, Label> = test.ids.iter().cloned().zip(test.labels.iter().copied()).collect();

    let fit_opts = FitOptions {
        char_range: cfg.char_range,
        min_df: cfg.min_df,
        normalize: false,
    };
    let tables: Mutex<BTreeMap<PathBuf, Arc<EmbeddingTable>>> = Mutex::new(BTreeMap::new());
    let load_table = |p: &Path| -> Result<Arc<EmbeddingTable>> {
        let mut cache = tables.lock().expect("table cache poisoned");
        if let Some(t) = cache.get(p) {
            return Ok(t.clone());
        }
        let t = Arc::new(EmbeddingTable::load(p)?);
        cache.insert(p.to_path_buf(), t.clone());
        Ok(t)
    };

    // features are fitted once per scheme and transformed once per
    // normalization setting any family needs
    let mut prepared: BTreeMap<(usize, bool), std::result::Result<Arc<Prepared>, String>> = BTreeMap::new();
    for (fi, feature) in cfg.features.iter().enumerate() {
        observer.features_fitted(feature.name(), &train.ids);
        let base = Featurizer::fit(feature, &train.docs, &fit_opts, &load_table);
        for norm in [false, true] {
            if !cfg.families.iter().any(|&f| cfg.normalizes(f) == norm) {
                continue;
            }
            let p = base.as_ref().map_err(|e| e.to_string()).and_then(|b| {
                let featurizer = b.with_normalize(norm);
                let build = || -> Result<Prepared> {
                    let rows = featurizer.transform(&train.docs)?;
                    let train_ds = Dataset::new(rows, train.labels.clone(), featurizer.dim())?;
                    let test_rows = featurizer.transform(&test.docs)?;
                    Ok(Prepared {
                        featurizer: featurizer.clone(),
                        train: train_ds,
                        test: test_rows,
                    })
                };
                build().map(Arc::new).map_err(|e| e.to_string())
            });
            prepared.insert((fi, norm), p);
        }
    }

    let cells: Vec<(Family, usize)> = cfg
        .families
        .iter()
        .flat_map(|&f| (0..cfg.features.len()).map(move |fi| (f, fi)))
        .collect();
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|&(family, fi)| {
            let feature = &cfg.features[fi];
            let classifier = family.display_name();
            let feature_name = feature.display_name();
            let fail = |reason: String| {
                log::warn!("{}: {reason}", cell_name(family, feature));
                let mut row = ResultRow::failed(classifier, feature_name, reason);
                row.family = Some(family);
                row.scheme = Some(feature.name().to_string());
                CellOutcome {
                    row,
                    eval: None,
                    search: None,
                    pipeline: None,
                }
            };
            let prep = match &prepared[&(fi, cfg.normalizes(family))] {
                Ok(p) => p.clone(),
                Err(e) => return fail(format!("feature extraction failed: {e}")),
            };
            let cell_seed = seed::derive(cfg.seed, &[seed::tag(family.as_str()), seed::tag(feature.name())]);
            observer.model_fitted(family, feature.name(), &train.ids);
            let run = || -> Result<(EvalReport, Option<GridResult>, TrainedPipeline)> {
                let (model, search) = tune_and_fit(
                    family,
                    &prep.train,
                    &cfg.grid,
                    cfg.tuning.folds,
                    cfg.tuning.metric,
                    cell_seed,
                )?;
                let out = model.predict_rows(&prep.test)?;
                let preds: Vec<Prediction> = test
                    .ids
                    .iter()
                    .zip(out)
                    .map(|(id, (pred, score))| Prediction {
                        id: id.clone(),
                        pred,
                        score: Some(score),
                    })
                    .collect();
                let eval = evaluate(&cell_name(family, feature), &preds, &gold)?;
                Ok((eval, search, TrainedPipeline::new(cfg.text, prep.featurizer.clone(), model)))
            };
            match run() {
                Ok((eval, search, pipeline)) => {
                    let mut row = ResultRow::from_eval(classifier, feature_name, &eval);
                    row.family = Some(family);
                    row.scheme = Some(feature.name().to_string());
                    row.hyperparams = Some(pipeline.classifier.hyperparams);
                    row.cv_score = search.as_ref().map(|s| s.best_score);
                    CellOutcome {
                        row,
                        eval: Some(eval),
                        search,
                        pipeline: Some(pipeline),
                    }
                }
                Err(e) => fail(e.to_string()),
            }
        })
        .collect();

    let mut rows: Vec<ResultRow> = outcomes.iter().map(|o| o.row.clone()).collect();
    let mut externals = Vec::new();
    for ext in &cfg.external {
        match score_external(&ext.path, &gold) {
            Ok(r) => {
                let feature = ext.feature.clone().unwrap_or_else(|| "external".into());
                rows.push(ResultRow::from_eval(&r.model, &feature, &r));
                externals.push(r);
            }
            Err(e) => {
                let name = ext.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                log::warn!("external predictions {}: {e}", ext.path.display());
                rows.push(ResultRow::failed(&name, "external", e.to_string()));
            }
        }
    }

    let table = ResultTable {
        seed: cfg.seed,
        corpus: corpus.provenance.clone(),
        n_train: split.train.len(),
        n_test: split.test.len(),
        tuning_metric: cfg.tuning.metric,
        folds: cfg.tuning.folds,
        rows,
    };
    let mut files = emit_report(&table, &ReportFormat::ALL, &cfg.out_dir)?;
    files.extend(write_artifacts(cfg, &split, &cells, &outcomes, &externals)?);
    Ok(RunOutput { table, split, files })
}

fn write_file(path: PathBuf, content: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    files.push(path);
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn write_artifacts(
    cfg: &ExperimentConfig,
    split: &Split,
    cells: &[(Family, usize)],
    outcomes: &[CellOutcome],
    externals: &[EvalReport],
) -> Result<Vec<PathBuf>> {
    #[derive(Serialize)]
    struct SplitFile<'a> {
        spec: &'a SplitSpec,
        train: &'a [String],
        test: &'a [String],
    }
    let out = &cfg.out_dir;
    let mut files = Vec::new();
    write_file(
        out.join("split.json"),
        &pretty(&SplitFile {
            spec: &cfg.split,
            train: &split.train,
            test: &split.test,
        })?,
        &mut files,
    )?;
    write_file(out.join("config.json"), &pretty(cfg)?, &mut files)?;
    for (&(family, fi), o) in cells.iter().zip(outcomes) {
        let dir = out.join("cells").join(cell_name(family, &cfg.features[fi]));
        if let Some(eval) = &o.eval {
            write_file(dir.join("confusion.json"), &pretty(&eval.metrics)?, &mut files)?;
            if let Some(roc) = &eval.roc {
                write_file(dir.join("roc.csv"), &roc.to_csv(), &mut files)?;
            }
        }
        if let Some(search) = &o.search {
            write_file(dir.join("grid.json"), &pretty(search)?, &mut files)?;
        }
        if cfg.save_models {
            if let Some(p) = &o.pipeline {
                write_file(dir.join("model.json"), &p.to_json()?, &mut files)?;
            }
        }
    }
    for (i, r) in externals.iter().enumerate() {
        let dir = out.join("external").join(format!("{i:02}"));
        write_file(dir.join("report.json"), &r.to_json()?, &mut files)?;
        if let Some(roc) = &r.roc {
            write_file(dir.join("roc.csv"), &roc.to_csv(), &mut files)?;
        }
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{HyperGrid, Hyperparams};
    use crate::experiment::SynthSpec;
    use crate::features::Scheme;

    fn small_config(out: &Path) -> ExperimentConfig {
        ExperimentConfig {
            corpus: CorpusSource::Synthetic(SynthSpec {
                n: 120,
                misspelling_rate: 0.05,
                ..SynthSpec::default()
            }),
            features: vec![FeatureSpec::Sparse(Scheme::TfidfUnigram)],
            families: vec![Family::Knn],
            grid: HyperGrid::single(Hyperparams::Knn { k: 3 }),
            out_dir: out.to_path_buf(),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn one_cell_gives_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_grid(&small_config(dir.path())).unwrap();
        assert_eq!(out.table.rows.len(), 1);
        assert!(out.table.rows[0].is_ok(), "{:?}", out.table.rows[0].error);
        assert!(dir.path().join("report.md").is_file());
        assert!(dir.path().join("cells/knn__tfidf_unigram/model.json").is_file());
        assert!(dir.path().join("cells/knn__tfidf_unigram/roc.csv").is_file());
    }

    #[test]
    fn failing_cell_becomes_an_annotated_row() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.families.push(Family::Gnb);
        cfg.grid = HyperGrid::single(Hyperparams::Knn { k: 10_000 });
        let out = run_grid(&cfg).unwrap();
        assert_eq!(out.table.rows.len(), 2);
        assert!(!out.table.rows[0].is_ok());
        assert!(out.table.rows[1].is_ok());
    }

    struct Recorder(Mutex<Vec<String>>);

    impl FitObserver for Recorder {
        fn features_fitted(&self, _: &str, ids: &[String]) {
            self.0.lock().unwrap().extend(ids.iter().cloned());
        }
        fn model_fitted(&self, _: Family, _: &str, ids: &[String]) {
            self.0.lock().unwrap().extend(ids.iter().cloned());
        }
    }

    #[test]
    fn test_ids_never_reach_a_fit() {
        let dir = tempfile::tempdir().unwrap();
        let rec = Recorder(Mutex::new(Vec::new()));
        let out = run_grid_with(&small_config(dir.path()), &rec).unwrap();
        let seen = rec.0.into_inner().unwrap();
        assert!(!seen.is_empty());
        assert!(seen.iter().all(|id| !out.split.test.contains(id)));
    }
}
