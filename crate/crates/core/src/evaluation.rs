//! Train/test splitting, confusion-matrix metrics, ROC/AUC, and scoring of
//! prediction files produced outside this crate.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Corpus, Label};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 42,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Ids of each side, in corpus order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Number of training items for a group of `n`: nearest integer with ties
/// rounded up, kept within `[1, n - 1]` so both sides are non-empty.
fn train_count(n: usize, fraction: f64) -> usize {
    let k = (n as f64 * fraction + 0.5).floor() as usize;
    k.clamp(1, n - 1)
}

pub fn stratified_split(corpus: &Corpus, spec: &SplitSpec) -> Result<Split> {
    split_labels(&corpus.labels()?, spec)
}

/// Splits labeled ids. With `stratified`, each class is permuted and cut
/// separately; otherwise the whole set is.
pub fn split_labels(items: &[(String, Label)], spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let groups: Vec<Vec<usize>> = if spec.stratified {
        [Label::NonSuicidal, Label::Suicidal]
            .iter()
            .map(|&c| (0..items.len()).filter(|&i| items[i].1 == c).collect())
            .collect()
    } else {
        vec![(0..items.len()).collect()]
    };
    let mut in_train = vec![false; items.len()];
    for (g, mut idx) in groups.into_iter().enumerate() {
        if idx.len() < 2 {
            return Err(Error::InvalidArgument(if spec.stratified {
                format!("class {g} has {} items; at least 2 are needed to split", idx.len())
            } else {
                format!("{} items; at least 2 are needed to split", idx.len())
            }));
        }
        let mut rng = seed::rng(seed::derive(spec.seed, &[g as u64]));
        idx.shuffle(&mut rng);
        for &i in &idx[..train_count(idx.len(), spec.train_fraction)] {
            in_train[i] = true;
        }
    }
    let mut split = Split {
        train: Vec::new(),
        test: Vec::new(),
    };
    for (i, (id, _)) in items.iter().enumerate() {
        if in_train[i] {
            split.train.push(id.clone());
        } else {
            split.test.push(id.clone());
        }
    }
    Ok(split)
}

/// Binary confusion counts with class 1 (suicidal) as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// The same matrix with class 0 treated as positive.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }

    /// Counts from `(predicted, gold)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Result<Self> {
        let mut cm = Self::default();
        for (pred, gold) in pairs {
            match (pred.is_positive(), gold.is_positive()) {
                (true, true) => cm.tp += 1,
                (true, false) => cm.fp += 1,
                (false, false) => cm.tn += 1,
                (false, true) => cm.fn_ += 1,
            }
        }
        if cm.total() == 0 {
            return Err(Error::Empty("no predictions to compare".into()));
        }
        Ok(cm)
    }

    pub fn metrics(&self) -> MetricsReport {
        metrics(self)
    }
}

/// Errors with the symmetric difference when the two id sets differ.
pub fn check_same_ids<A, B>(predicted: &HashMap<String, A>, gold: &HashMap<String, B>) -> Result<()> {
    let only_left: BTreeSet<&String> = predicted.keys().filter(|k| !gold.contains_key(*k)).collect();
    let only_right: BTreeSet<&String> = gold.keys().filter(|k| !predicted.contains_key(*k)).collect();
    if only_left.is_empty() && only_right.is_empty() {
        return Ok(());
    }
    Err(Error::IdMismatch {
        only_left: only_left.into_iter().cloned().collect(),
        only_right: only_right.into_iter().cloned().collect(),
    })
}

pub fn confusion(predicted: &HashMap<String, Label>, gold: &HashMap<String, Label>) -> Result<ConfusionMatrix> {
    check_same_ids(predicted, gold)?;
    ConfusionMatrix::from_pairs(predicted.iter().map(|(id, &p)| (p, gold[id])))
}

/// Which values had a zero denominator and are reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Undefined {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
}

impl Undefined {
    pub fn any(&self) -> bool {
        self.precision || self.recall || self.f1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold items of this class (the full total for the macro average).
    pub support: u64,
    #[serde(default)]
    pub undefined: Undefined,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn class_metrics(cm: &ConfusionMatrix) -> ClassMetrics {
    let p = ratio(cm.tp, cm.tp + cm.fp);
    let r = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = match (p, r) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    ClassMetrics {
        precision: p.unwrap_or(0.0),
        recall: r.unwrap_or(0.0),
        f1: f1.unwrap_or(0.0),
        support: cm.tp + cm.fn_,
        undefined: Undefined {
            precision: p.is_none(),
            recall: r.is_none(),
            f1: f1.is_none(),
        },
    }
}

fn mean_defined(values: [(f64, bool); 2]) -> (f64, bool) {
    let defined: Vec<f64> = values.iter().filter(|(_, u)| !u).map(|(v, _)| *v).collect();
    if defined.is_empty() {
        (0.0, true)
    } else {
        (defined.iter().sum::<f64>() / defined.len() as f64, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    /// Class 1 (suicidal) as positive; the headline numbers.
    pub positive: ClassMetrics,
    /// Class 0 as positive.
    pub negative: ClassMetrics,
    /// Unweighted mean of the defined per-class values.
    pub macro_avg: ClassMetrics,
}

pub fn metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let positive = class_metrics(cm);
    let negative = class_metrics(&cm.swapped());
    let (precision, up) = mean_defined([
        (positive.precision, positive.undefined.precision),
        (negative.precision, negative.undefined.precision),
    ]);
    let (recall, ur) = mean_defined([
        (positive.recall, positive.undefined.recall),
        (negative.recall, negative.undefined.recall),
    ]);
    let (f1, uf) = mean_defined([
        (positive.f1, positive.undefined.f1),
        (negative.f1, negative.undefined.f1),
    ]);
    MetricsReport {
        confusion: *cm,
        accuracy: ratio(cm.tp + cm.tn, cm.total()).unwrap_or(0.0),
        positive,
        negative,
        macro_avg: ClassMetrics {
            precision,
            recall,
            f1,
            support: cm.total(),
            undefined: Undefined {
                precision: up,
                recall: ur,
                f1: uf,
            },
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores at or above this value are predicted positive; absent for the
    /// initial `(0, 0)` point.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// `fpr,tpr,threshold` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr,threshold\n");
        for p in &self.points {
            let t = p.threshold.map(|t| t.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", p.fpr, p.tpr, t));
        }
        out
    }
}

/// ROC from `(score, gold)` pairs. Thresholds sweep every distinct score in
/// descending order; tied scores form a single diagonal segment.
pub fn roc_from_pairs(pairs: &[(f64, Label)]) -> Result<RocCurve> {
    if let Some((s, _)) = pairs.iter().find(|(s, _)| s.is_nan()) {
        return Err(Error::InvalidArgument(format!("score {s} is not a number")));
    }
    let pos = pairs.iter().filter(|(_, l)| l.is_positive()).count() as u64;
    let neg = pairs.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: None,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    // twice the area, in units of 1 / (pos * neg), kept integral until the end
    let mut area2 = 0u128;
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].0;
        let (tp0, fp0) = (tp, fp);
        while i < sorted.len() && sorted[i].0 == score {
            if sorted[i].1.is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += u128::from(fp - fp0) * u128::from(tp + tp0);
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold: Some(score),
        });
    }
    let auc = area2 as f64 / (2.0 * pos as f64 * neg as f64);
    Ok(RocCurve { points, auc })
}

pub fn roc_auc(scores: &HashMap<String, f64>, gold: &HashMap<String, Label>) -> Result<RocCurve> {
    check_same_ids(scores, gold)?;
    let mut pairs: Vec<(&String, f64, Label)> = scores.iter().map(|(id, &s)| (id, s, gold[id])).collect();
    // fixed order so the curve does not depend on hash iteration
    pairs.sort_by(|a, b| a.0.cmp(b.0));
    roc_from_pairs(&pairs.into_iter().map(|(_, s, l)| (s, l)).collect::<Vec<_>>())
}

/// One row of a prediction file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub pred: Label,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionFile {
    pub model: String,
    pub rows: Vec<Prediction>,
}

/// Parses a prediction file: a `model=<name>` line (optionally prefixed by
/// `#`), then `id,pred[,score]` rows with an optional header row.
pub fn parse_predictions(content: &str) -> Result<PredictionFile> {
    let mut lines = content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, first)) = lines.next() else {
        return Err(Error::Empty("prediction file".into()));
    };
    let model = first
        .trim()
        .trim_start_matches('#')
        .trim()
        .strip_prefix("model=")
        .map(|m| m.trim().to_string())
        .filter(|m| !m.is_empty())
        .ok_or_else(|| Error::parse("line 1", "expected a `model=<name>` header"))?;

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    let mut with_scores: Option<bool> = None;
    for (n, line) in lines {
        let loc = format!("line {}", n + 1);
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if rows.is_empty() && fields.first() == Some(&"id") {
            continue;
        }
        if !(2..=3).contains(&fields.len()) {
            return Err(Error::parse(loc, format!("expected id,pred[,score], got {line:?}")));
        }
        let id = fields[0].to_string();
        if id.is_empty() {
            return Err(Error::parse(loc, "empty id"));
        }
        let pred = fields[1]
            .parse::<u8>()
            .map_err(|e| e.to_string())
            .and_then(Label::try_from)
            .map_err(|e| Error::parse(&loc, format!("bad prediction {:?}: {e}", fields[1])))?;
        let score = match fields.get(2).filter(|s| !s.is_empty()) {
            Some(s) => Some(
                s.parse::<f64>()
                    .ok()
                    .filter(|v| !v.is_nan())
                    .ok_or_else(|| Error::parse(&loc, format!("bad score {s:?}")))?,
            ),
            None => None,
        };
        match with_scores {
            None => with_scores = Some(score.is_some()),
            Some(w) if w != score.is_some() => {
                return Err(Error::parse(loc, "scores must be given on every row or on none"));
            }
            Some(_) => {}
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        rows.push(Prediction { id, pred, score });
    }
    if rows.is_empty() {
        return Err(Error::Empty("prediction file has no rows".into()));
    }
    Ok(PredictionFile { model, rows })
}

/// Renders rows in the format read by [`parse_predictions`]. Scores are
/// written only when every row has one.
pub fn render_predictions(model: &str, rows: &[Prediction]) -> Result<String> {
    if model.trim().is_empty() || model.contains('\n') {
        return Err(Error::InvalidArgument(format!("bad model name {model:?}")));
    }
    let scored = !rows.is_empty() && rows.iter().all(|r| r.score.is_some());
    let mut out = format!("# model={}\n", model.trim());
    out.push_str(if scored { "id,pred,score\n" } else { "id,pred\n" });
    for r in rows {
        if r.id.is_empty() || r.id.contains([',', '\n', '\r']) {
            return Err(Error::InvalidArgument(format!("id {:?} cannot be written to a prediction file", r.id)));
        }
        match r.score.filter(|_| scored) {
            Some(s) => out.push_str(&format!("{},{},{s}\n", r.id, r.pred.as_u8())),
            None => out.push_str(&format!("{},{}\n", r.id, r.pred.as_u8())),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub n: u64,
    pub metrics: MetricsReport,
    pub roc: Option<RocCurve>,
    /// Set when the predictions carried no scores.
    pub roc_absent: bool,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub const CSV_HEADER: &'static str = "model,n,tp,fp,tn,fn,accuracy,precision,recall,f1,\
neg_precision,neg_recall,neg_f1,macro_precision,macro_recall,macro_f1,auc";

    /// One flattened CSV row matching [`EvalReport::CSV_HEADER`].
    pub fn to_csv_row(&self) -> String {
        let m = &self.metrics;
        let c = &m.confusion;
        let auc = self.roc.as_ref().map(|r| r.auc.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&self.model),
            self.n,
            c.tp,
            c.fp,
            c.tn,
            c.fn_,
            m.accuracy,
            m.positive.precision,
            m.positive.recall,
            m.positive.f1,
            m.negative.precision,
            m.negative.recall,
            m.negative.f1,
            m.macro_avg.precision,
            m.macro_avg.recall,
            m.macro_avg.f1,
            auc
        )
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Evaluates predictions against gold labels; the id sets must coincide.
pub fn evaluate(model: &str, rows: &[Prediction], gold: &HashMap<String, Label>) -> Result<EvalReport> {
    let mut predicted = HashMap::with_capacity(rows.len());
    for r in rows {
        if predicted.insert(r.id.clone(), r.pred).is_some() {
            return Err(Error::DuplicateId(r.id.clone()));
        }
    }
    let cm = confusion(&predicted, gold)?;
    let scored: Option<HashMap<String, f64>> = rows.iter().map(|r| r.score.map(|s| (r.id.clone(), s))).collect();
    let roc = match &scored {
        Some(scores) if !rows.is_empty() => Some(roc_auc(scores, gold)?),
        _ => None,
    };
    Ok(EvalReport {
        model: model.to_string(),
        n: cm.total(),
        metrics: metrics(&cm),
        roc_absent: roc.is_none(),
        roc,
    })
}

pub fn score_external_str(content: &str, gold: &HashMap<String, Label>) -> Result<EvalReport> {
    let file = parse_predictions(content)?;
    evaluate(&file.model, &file.rows, gold)
}

pub fn score_external(path: impl AsRef<Path>, gold: &HashMap<String, Label>) -> Result<EvalReport> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    score_external_str(&content, gold)
}
