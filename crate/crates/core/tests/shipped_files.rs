use std::path::{Path, PathBuf};

use arsid_core::classifiers::{Family, HyperGrid};
use arsid_core::experiment::{CorpusSource, ExperimentConfig, FeatureSpec};
use arsid_core::ingest::KeywordList;

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

#[test]
fn full_grid_file_is_the_default_search_space() {
    let mut cfg = ExperimentConfig::load(repo("configs/tweets.toml")).unwrap();
    assert_eq!(cfg.grid, HyperGrid::default());
    cfg.load_grid_file().unwrap();
    assert_eq!(cfg.features.len(), 6);
    assert!(matches!(&cfg.features[4], FeatureSpec::Embedding { path, .. } if path.is_absolute()));
    assert!(matches!(&cfg.corpus, CorpusSource::File { path, .. } if path.ends_with("data/tweets.jsonl")));
}

#[test]
fn quick_config_is_valid() {
    let cfg = ExperimentConfig::load(repo("configs/quick.toml")).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.families, Family::ALL.to_vec());
    assert_eq!(cfg.grid.svm_rbf.c, vec![1.0, 10.0]);
}

#[test]
fn keyword_file_parses_and_keeps_source_tags() {
    let list = KeywordList::load(repo("data/keywords.tsv")).unwrap();
    assert!(list.len() > 30);
    assert!(list.iter().all(|k| !k.source.is_empty()));
    assert!(list.iter().any(|k| k.phrase == "عايز اموت" && k.source == "I want to die"));
}
