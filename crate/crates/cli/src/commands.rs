use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use arsid_annotation::Store;
use arsid_core::agreement::{cohen_kappa, contingency, load_label_csv, parse_label_csv};
use arsid_core::evaluation::{self, render_predictions, score_external, split_labels, EvalReport, SplitSpec};
use arsid_core::experiment::{
    load_labeled_corpus, make_synthetic, render_markdown, run_grid, CorpusSource, ExperimentConfig, SynthSpec,
    TrainedPipeline,
};
use arsid_core::features::FitOptions;
use arsid_core::ingest::{self, load_tweets, Corpus, InputFormat, KeywordList, Label};
use arsid_core::stats::{self, StatsReport};
use arsid_core::textnorm::StopList;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::{
    Cli, Command, EvaluateArgs, IngestArgs, InputArgs, KappaArgs, ScoreExternalArgs, ServeArgs, SplitArgs, StatsArgs,
    SynthArgs, TrainArgs,
};
use crate::failure::{fail, Classify, CmdResult, Kind};

/// Resolved global options.
struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
}

/// The file written by `split` (and by `grid` next to its report).
#[derive(Debug, Serialize, Deserialize)]
struct SplitFile {
    spec: SplitSpec,
    train: Vec<String>,
    test: Vec<String>,
}

pub fn run(cli: Cli) -> CmdResult {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        // one seed governs every randomized step, including the split
        cfg.seed = seed;
        cfg.split.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    let ctx = Ctx {
        out: cfg.out_dir.clone(),
        cfg,
    };
    match cli.command {
        Command::Ingest(a) => ingest(&ctx, a),
        Command::Stats(a) => stats(&ctx, a),
        Command::Split(a) => split(&ctx, a),
        Command::Train(a) => train(&ctx, a),
        Command::Grid => grid(&ctx),
        Command::Evaluate(a) => evaluate(&ctx, a),
        Command::Kappa(a) => kappa(a),
        Command::ScoreExternal(a) => score(&ctx, a),
        Command::Synth(a) => synth(&ctx, a),
        Command::ServeAnnotation(a) => serve(&ctx, a),
    }
}

fn write(path: &Path, content: impl AsRef<[u8]>) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| anyhow::anyhow!("creating {}: {e}", dir.display()))
            .or_fail(Kind::Run)?;
    }
    std::fs::write(path, content)
        .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))
        .or_fail(Kind::Run)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

fn print_json<T: Serialize>(v: &T) {
    print!("{}", pretty(v));
}

fn apply_labels(corpus: &mut Corpus, path: &Path) -> CmdResult {
    let map = load_label_csv(path)?;
    for t in &mut corpus.tweets {
        if let Some(&l) = map.get(&t.id) {
            t.label = Some(l);
        }
    }
    Ok(())
}

/// Tweets named by `--input`, or the configured corpus.
fn load_input(ctx: &Ctx, args: &InputArgs) -> CmdResult<Corpus> {
    let mut corpus = match &args.input {
        Some(path) => {
            let format = args.format.unwrap_or_else(|| InputFormat::from_path(path));
            load_tweets(path, format)?.corpus
        }
        None => {
            ctx.cfg.validate()?;
            load_labeled_corpus(&ctx.cfg)?
        }
    };
    if corpus.is_empty() {
        return fail(Kind::Data, "the input has no usable tweets");
    }
    if let Some(path) = &args.labels {
        apply_labels(&mut corpus, path)?;
    }
    Ok(corpus)
}

fn read_split(path: &Path) -> CmdResult<SplitFile> {
    let s = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))
        .or_fail(Kind::Data)?;
    serde_json::from_str(&s)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
        .or_fail(Kind::Data)
}

/// Keeps the tweets whose ids are listed, in corpus order; every listed id
/// must be present.
fn restrict(corpus: &Corpus, ids: &[String]) -> CmdResult<Corpus> {
    let keep: HashSet<&str> = ids.iter().map(String::as_str).collect();
    let tweets: Vec<_> = corpus.tweets.iter().filter(|t| keep.contains(t.id.as_str())).cloned().collect();
    if tweets.len() != keep.len() {
        return fail(
            Kind::Data,
            format!("the split names {} ids but only {} are in the corpus", keep.len(), tweets.len()),
        );
    }
    Ok(Corpus::new(tweets, corpus.provenance.clone())?)
}

fn ingest(ctx: &Ctx, a: IngestArgs) -> CmdResult {
    let format = a.format.unwrap_or_else(|| InputFormat::from_path(&a.input));
    let outcome = load_tweets(&a.input, format)?;
    let (corpus, counts) = match &a.keywords {
        Some(path) => {
            let keywords = KeywordList::load(path)?;
            if keywords.is_empty() {
                return fail(Kind::Data, format!("{}: no keywords", path.display()));
            }
            ingest::collect_corpus(outcome.corpus, outcome.skipped, &keywords, !a.no_dedup)
        }
        None => {
            let loaded = outcome.corpus.len();
            let corpus = if a.no_dedup {
                outcome.corpus
            } else {
                ingest::dedup(&outcome.corpus)
            };
            let counts = ingest::StageCounts {
                loaded,
                skipped: outcome.skipped,
                matched: loaded,
                deduplicated: corpus.len(),
            };
            (corpus, counts)
        }
    };
    let path = ctx.out.join("corpus.jsonl");
    let mut buf = Vec::new();
    corpus.write_jsonl(&mut buf)?;
    write(&path, buf)?;
    write(&ctx.out.join("ingest.json"), pretty(&counts))?;
    print_json(&counts);
    Ok(())
}

fn stats(ctx: &Ctx, a: StatsArgs) -> CmdResult {
    let corpus = load_input(ctx, &a.input)?;
    let stops = match &a.stopwords {
        Some(p) => StopList::load(p)?,
        None => StopList::new(),
    };
    let class = a.class.label();
    let labeled = corpus.tweets.iter().all(|t| t.label.is_some());
    let report = StatsReport {
        class_weights: if labeled { Some(stats::class_weights(&corpus)?) } else { None },
        lengths: stats::length_histogram(&corpus, class, a.bin_width)?,
        terms: stats::term_frequencies(&corpus, class, &stops, a.top_k)?,
        hourly: stats::hourly_trend(&corpus, class, a.tz_offset)?,
    };
    let tag = a.class.as_str();
    let dir = &ctx.out;
    if let Some(w) = &report.class_weights {
        write(&dir.join("class_weights.csv"), w.to_csv())?;
    }
    write(&dir.join(format!("lengths_{tag}.csv")), report.lengths.to_csv())?;
    write(&dir.join(format!("terms_{tag}.csv")), stats::term_frequencies_csv(&report.terms))?;
    write(&dir.join(format!("hourly_{tag}.csv")), report.hourly.to_csv())?;
    write(&dir.join(format!("stats_{tag}.json")), pretty(&report))?;
    print_json(&report);
    Ok(())
}

fn split(ctx: &Ctx, a: SplitArgs) -> CmdResult {
    let corpus = load_input(ctx, &a.input)?;
    let mut spec = ctx.cfg.split;
    if let Some(f) = a.train_fraction {
        spec.train_fraction = f;
    }
    spec.validate()?;
    let s = split_labels(&corpus.labels()?, &spec)?;
    let file = SplitFile {
        spec,
        train: s.train,
        test: s.test,
    };
    write(&ctx.out.join("split.json"), pretty(&file))?;
    print_json(&json!({ "train": file.train.len(), "test": file.test.len(), "spec": file.spec }));
    Ok(())
}

fn train(ctx: &Ctx, a: TrainArgs) -> CmdResult {
    let cfg = &ctx.cfg;
    let mut corpus = load_input(ctx, &a.input)?;
    if let Some(p) = &a.split {
        corpus = restrict(&corpus, &read_split(p)?.train)?;
    }
    let fit_opts = FitOptions {
        char_range: cfg.char_range,
        min_df: cfg.min_df,
        normalize: cfg.normalizes(a.family),
    };
    let (pipeline, search) = TrainedPipeline::train(
        &corpus,
        &a.feature,
        a.family,
        cfg.text.clone(),
        fit_opts,
        &cfg.grid,
        cfg.tuning.folds,
        cfg.tuning.metric,
        cfg.seed,
    )?;
    let path = a.model.unwrap_or_else(|| ctx.out.join("model.json"));
    write(&path, pipeline.to_json()?)?;
    if let Some(s) = &search {
        write(&path.with_extension("grid.json"), pretty(s))?;
    }
    print_json(&json!({
        "model": path,
        "family": a.family,
        "feature": a.feature.name(),
        "n_train": corpus.len(),
        "hyperparams": pipeline.classifier.hyperparams,
        "cv_score": search.as_ref().map(|s| s.best_score),
    }));
    Ok(())
}

fn grid(ctx: &Ctx) -> CmdResult {
    let out = run_grid(&ctx.cfg)?;
    let failed = out.table.rows.iter().filter(|r| !r.is_ok()).count();
    print!("{}", render_markdown(&out.table));
    for f in &out.files {
        log::info!("wrote {}", f.display());
    }
    if failed == out.table.rows.len() {
        return fail(Kind::Run, "every cell failed; see the report for reasons");
    }
    if failed > 0 {
        log::warn!("{failed} of {} cells failed", out.table.rows.len());
    }
    Ok(())
}

fn gold_labels(corpus: &Corpus) -> CmdResult<HashMap<String, Label>> {
    Ok(corpus.labels()?.into_iter().collect())
}

fn evaluate(ctx: &Ctx, a: EvaluateArgs) -> CmdResult {
    let mut corpus = load_input(ctx, &a.input)?;
    if let Some(p) = &a.split {
        corpus = restrict(&corpus, &read_split(p)?.test)?;
    }
    let gold = gold_labels(&corpus)?;
    let pipeline = TrainedPipeline::load(&a.model)?;
    let preds = pipeline.predict(&corpus)?;
    let name = a.name.unwrap_or_else(|| {
        a.model
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".into())
    });
    let report = evaluation::evaluate(&name, &preds, &gold)?;
    write(&ctx.out.join("predictions.csv"), render_predictions(&name, &preds)?)?;
    write_eval(&ctx.out, "eval", &report)?;
    print!("{}", report.to_json()?);
    Ok(())
}

fn write_eval(dir: &Path, stem: &str, report: &EvalReport) -> CmdResult {
    write(&dir.join(format!("{stem}.json")), report.to_json()?)?;
    if let Some(roc) = &report.roc {
        write(&dir.join(format!("{stem}_roc.csv")), roc.to_csv())?;
    }
    Ok(())
}

fn kappa(a: KappaArgs) -> CmdResult {
    let la = load_label_csv(&a.a)?;
    let lb = load_label_csv(&a.b)?;
    let table = contingency(&la, &lb)?;
    let k = cohen_kappa(&table)?;
    print_json(&json!({ "kappa": k.kappa, "pa": k.pa, "pe": k.pe, "table": table }));
    Ok(())
}

/// Gold labels from an `id,label` CSV, or from a labeled tweet file.
fn load_gold(path: &Path) -> CmdResult<HashMap<String, Label>> {
    let content = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))
        .or_fail(Kind::Data)?;
    let header: Vec<String> = content
        .lines()
        .next()
        .unwrap_or("")
        .split(',')
        .map(|f| f.trim().trim_start_matches('\u{feff}').to_ascii_lowercase())
        .collect();
    if header == ["id", "label"] {
        return Ok(parse_label_csv(&content)?);
    }
    let corpus = load_tweets(path, InputFormat::from_path(path))?.corpus;
    gold_labels(&corpus)
}

fn score(ctx: &Ctx, a: ScoreExternalArgs) -> CmdResult {
    let gold = load_gold(&a.gold)?;
    let report = score_external(&a.predictions, &gold)?;
    write_eval(&ctx.out, &format!("external_{}", sanitize(&report.model)), &report)?;
    print!("{}", report.to_json()?);
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn synth(ctx: &Ctx, a: SynthArgs) -> CmdResult {
    let mut spec = match &ctx.cfg.corpus {
        CorpusSource::Synthetic(s) => s.clone(),
        CorpusSource::File { .. } => SynthSpec::default(),
    };
    if let Some(n) = a.n {
        spec.n = n;
    }
    if let Some(b) = a.balance {
        spec.balance = b;
    }
    if let Some(r) = a.misspelling_rate {
        spec.misspelling_rate = r;
    }
    let corpus = make_synthetic(&spec, ctx.cfg.seed)?;
    let mut buf = Vec::new();
    corpus.write_jsonl(&mut buf)?;
    write(&ctx.out.join("synthetic.jsonl"), buf)?;
    let positives = corpus.tweets.iter().filter(|t| t.label == Some(Label::Suicidal)).count();
    print_json(&json!({ "n": corpus.len(), "suicidal": positives, "seed": spec.seed.unwrap_or(ctx.cfg.seed) }));
    Ok(())
}

fn serve(ctx: &Ctx, a: ServeArgs) -> CmdResult {
    let format = a.format.unwrap_or_else(|| InputFormat::from_path(&a.input));
    let corpus = load_tweets(&a.input, format)?.corpus;
    let dir = a.data_dir.unwrap_or_else(|| ctx.out.join("annotation"));
    let store = Arc::new(Store::open(&corpus, &dir, a.snapshot_every)?);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().or_fail(Kind::Run)?;
    eprintln!("serving {} tweets on http://{} (logs in {})", corpus.len(), a.addr, dir.display());
    rt.block_on(arsid_annotation::serve(a.addr, store))
        .map_err(|e| anyhow::anyhow!("annotation service on {}: {e}", a.addr))
        .or_fail(Kind::Run)
}
