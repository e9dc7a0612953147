//! Result tables and their JSON, CSV and markdown renderings.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{Family, Hyperparams, Metric};
use crate::error::{Error, Result};
use crate::evaluation::{csv_field, EvalReport};

/// One (classifier, feature) cell of the experiment grid, or one external
/// model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub classifier: String,
    pub feature: String,
    /// Absent for external models.
    pub family: Option<Family>,
    pub scheme: Option<String>,
    /// Positive-class (suicidal) precision.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub auc: Option<f64>,
    /// Hyperparameters of the evaluated model.
    pub hyperparams: Option<Hyperparams>,
    /// Mean cross-validation score that selected them; absent when the grid
    /// had a single candidate.
    pub cv_score: Option<f64>,
    /// Why the cell produced no model.
    pub error: Option<String>,
}

impl ResultRow {
    pub fn from_eval(classifier: &str, feature: &str, report: &EvalReport) -> Self {
        let m = &report.metrics;
        Self {
            classifier: classifier.to_string(),
            feature: feature.to_string(),
            family: None,
            scheme: None,
            precision: m.positive.precision,
            recall: m.positive.recall,
            f1: m.positive.f1,
            accuracy: m.accuracy,
            macro_precision: m.macro_avg.precision,
            macro_recall: m.macro_avg.recall,
            macro_f1: m.macro_avg.f1,
            auc: report.roc.as_ref().map(|r| r.auc),
            hyperparams: None,
            cv_score: None,
            error: None,
        }
    }

    pub fn failed(classifier: &str, feature: &str, reason: impl Into<String>) -> Self {
        Self {
            classifier: classifier.to_string(),
            feature: feature.to_string(),
            family: None,
            scheme: None,
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            accuracy: 0.0,
            macro_precision: 0.0,
            macro_recall: 0.0,
            macro_f1: 0.0,
            auc: None,
            hyperparams: None,
            cv_score: None,
            error: Some(reason.into()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub seed: u64,
    pub corpus: String,
    pub n_train: usize,
    pub n_test: usize,
    pub tuning_metric: Metric,
    pub folds: usize,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Row for a (family, scheme) cell.
    pub fn cell(&self, family: Family, scheme: &str) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.family == Some(family) && r.scheme.as_deref() == Some(scheme))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown];

    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Json => "report.json",
            ReportFormat::Csv => "report.csv",
            ReportFormat::Markdown => "report.md",
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "markdown",
        })
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::InvalidArgument(format!("unknown report format {other:?}"))),
        }
    }
}

pub fn render_json(table: &ResultTable) -> Result<String> {
    let mut s = serde_json::to_string_pretty(table)?;
    s.push('\n');
    Ok(s)
}

pub fn render_csv(table: &ResultTable) -> String {
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from(
        "classifier,feature,precision,recall,f1,accuracy,macro_precision,macro_recall,macro_f1,auc,\
hyperparams,cv_score,error\n",
    );
    for r in &table.rows {
        let hp = r.hyperparams.map(|h| h.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(&r.classifier),
            csv_field(&r.feature),
            r.precision,
            r.recall,
            r.f1,
            r.accuracy,
            r.macro_precision,
            r.macro_recall,
            r.macro_f1,
            opt(r.auc),
            csv_field(&hp),
            opt(r.cv_score),
            csv_field(r.error.as_deref().unwrap_or(""))
        ));
    }
    out
}

/// Markdown table in the column order Classifier, Feature, Precision,
/// Recall, F1-score, Accuracy, as percentages. The best value of each metric
/// column (all ties included) is set in bold; failed rows show their reason.
pub fn render_markdown(table: &ResultTable) -> String {
    type Col = fn(&ResultRow) -> f64;
    let cols: [Col; 4] = [|r| r.precision, |r| r.recall, |r| r.f1, |r| r.accuracy];
    let pct = |v: f64| format!("{:.1}", v * 100.0);
    let best: Vec<Option<String>> = cols
        .iter()
        .map(|c| {
            table
                .rows
                .iter()
                .filter(|r| r.is_ok())
                .map(|r| pct(c(r)))
                .max_by(|a, b| a.parse::<f64>().unwrap_or(0.0).total_cmp(&b.parse::<f64>().unwrap_or(0.0)))
        })
        .collect();

    let mut out = String::from("| Classifier | Feature | Precision | Recall | F1-score | Accuracy |\n");
    out.push_str("|---|---|---:|---:|---:|---:|\n");
    let mut failures = Vec::new();
    for r in &table.rows {
        let cells: Vec<String> = if let Some(e) = &r.error {
            failures.push(format!("- {} / {}: {}", r.classifier, r.feature, e.replace('\n', " ")));
            vec!["failed".into(), "—".into(), "—".into(), "—".into()]
        } else {
            cols.iter()
                .zip(&best)
                .map(|(c, b)| {
                    let v = pct(c(r));
                    if b.as_deref() == Some(v.as_str()) {
                        format!("**{v}**")
                    } else {
                        v
                    }
                })
                .collect()
        };
        out.push_str(&format!(
            "| {} | {} | {} |\n",
            r.classifier.replace('|', "\\|"),
            r.feature.replace('|', "\\|"),
            cells.join(" | ")
        ));
    }
    out.push_str(&format!(
        "\nPositive class: suicidal. Values in percent; best per column in bold. Seed {}, {} train / {} test.\n",
        table.seed, table.n_train, table.n_test
    ));
    if !failures.is_empty() {
        out.push_str("\nFailed cells:\n");
        for f in failures {
            out.push_str(&f);
            out.push('\n');
        }
    }
    out
}

/// Writes one file per requested format into `dir`.
pub fn emit_report(table: &ResultTable, formats: &[ReportFormat], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if table.rows.is_empty() {
        return Err(Error::Empty("result table has no rows".into()));
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for &f in formats {
        if written.iter().any(|p: &PathBuf| p.ends_with(f.file_name())) {
            continue;
        }
        let content = match f {
            ReportFormat::Json => render_json(table)?,
            ReportFormat::Csv => render_csv(table),
            ReportFormat::Markdown => render_markdown(table),
        };
        let path = dir.join(f.file_name());
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(c: &str, acc: f64) -> ResultRow {
        ResultRow {
            accuracy: acc,
            precision: 0.5,
            recall: acc / 2.0,
            f1: 0.4,
            ..ResultRow::failed(c, "char", "")
        }
        .ok()
    }

    impl ResultRow {
        fn ok(mut self) -> Self {
            self.error = None;
            self
        }
    }

    fn table(rows: Vec<ResultRow>) -> ResultTable {
        ResultTable {
            seed: 1,
            corpus: "mem".into(),
            n_train: 8,
            n_test: 2,
            tuning_metric: Metric::Accuracy,
            folds: 5,
            rows,
        }
    }

    #[test]
    fn markdown_shape_and_best_flags() {
        let md = render_markdown(&table(vec![row("SVM", 0.9), row("NB", 0.7)]));
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines[0], "| Classifier | Feature | Precision | Recall | F1-score | Accuracy |");
        let data: Vec<&&str> = lines.iter().skip(2).take_while(|l| l.starts_with('|')).collect();
        assert_eq!(data.len(), 2);
        assert!(data[0].contains("**90.0**"));
        assert!(!data[1].contains("**70.0**"));
        // tied precision is flagged on both rows
        assert!(data.iter().all(|l| l.contains("**50.0**")));
    }

    #[test]
    fn failed_rows_are_annotated() {
        let t = table(vec![row("SVM", 0.9), ResultRow::failed("KNN", "bow", "k exceeds samples")]);
        let md = render_markdown(&t);
        assert!(md.contains("| KNN | bow | failed |"));
        assert!(md.contains("k exceeds samples"));
        assert!(render_csv(&t).lines().nth(2).unwrap().ends_with("k exceeds samples"));
    }

    #[test]
    fn emits_all_formats() {
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_report(&table(vec![row("SVM", 0.9), row("NB", 0.7)]), &ReportFormat::ALL, dir.path()).unwrap();
        assert_eq!(paths.len(), 3);
        for p in &paths {
            assert!(p.is_file());
        }
        let back: ResultTable = serde_json::from_str(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
        assert_eq!(back.rows.len(), 2);
    }

    #[test]
    fn empty_table_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_report(&table(vec![]), &ReportFormat::ALL, dir.path()).is_err());
    }
}
