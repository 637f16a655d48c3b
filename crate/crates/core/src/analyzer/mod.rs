//! Repository-level SATD tallies, cohort averages and cohort comparisons.

mod render;
mod selection;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{classify, Classifier, ClassifyError};
use crate::extract::{scan_repository, ScanConfig, ScanDiagnostic, ScanError};
use crate::label::{Label, PerLabel};
use crate::preprocess::{normalize, StopWordPolicy};

pub use render::{read_count_table, render_csv, render_instances, render_markdown, CountRow, InstanceRecord};
pub use selection::{
    check_selection, GitHubMetadata, LocalMetadata, MetadataError, MetadataSource, RepoMetadata, SelectionCriteria,
    SelectionFailure, SelectionOutcome,
};

pub const EXCERPT_CHARS: usize = 120;

#[derive(Debug, thiserror::Error)]
pub enum AnalyzeError {
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("cohort has no repositories")]
    EmptyCohort,
    #[error("report for {0} is incomplete; percentages are unavailable")]
    Incomplete(String),
    #[error("cannot divide by zero {0}")]
    DivisionByZero(String),
    #[error("metadata field `{0}` is missing")]
    MissingField(&'static str),
}

/// One debt comment located in the repository.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatdInstance {
    #[serde(rename = "file")]
    pub file_path: String,
    pub line_start: usize,
    pub line_end: usize,
    pub label: Label,
    pub score: f64,
    /// First characters of the raw comment text.
    pub excerpt: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    Complete,
    /// No classifiable comments were found.
    Empty,
    /// Some files could not be read.
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepoReport {
    pub repo_name: String,
    pub domain_tag: String,
    pub status: ReportStatus,
    pub counts: PerLabel<u64>,
    pub total_satd: u64,
    pub total_comments: u64,
    /// `None` when the report is incomplete.
    pub pct_sci: Option<f64>,
    pub pct_satd: Option<f64>,
    pub files_scanned: usize,
    /// Comments whose normalized text was empty; not part of any count.
    pub dropped_empty: u64,
    pub unreadable_files: Vec<String>,
    pub instances: Vec<SatdInstance>,
}

fn percent(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

impl RepoReport {
    /// Builds a report from label counts alone, deriving totals and percentages.
    pub fn from_counts(repo_name: impl Into<String>, domain_tag: impl Into<String>, counts: PerLabel<u64>) -> Self {
        let total_satd: u64 = Label::SATD.iter().map(|l| counts[*l]).sum();
        let total_comments = total_satd + counts[Label::NonSatd];
        RepoReport {
            repo_name: repo_name.into(),
            domain_tag: domain_tag.into(),
            status: if total_comments == 0 {
                ReportStatus::Empty
            } else {
                ReportStatus::Complete
            },
            counts,
            total_satd,
            total_comments,
            pct_sci: Some(percent(counts[Label::Scientific], total_comments)),
            pct_satd: Some(percent(total_satd, total_comments)),
            files_scanned: 0,
            dropped_empty: 0,
            unreadable_files: Vec::new(),
            instances: Vec::new(),
        }
    }

    /// Marks the report incomplete, withdrawing its percentages.
    fn mark_incomplete(&mut self, unreadable: Vec<String>) {
        self.status = ReportStatus::Incomplete;
        self.pct_sci = None;
        self.pct_satd = None;
        self.unreadable_files = unreadable;
    }

    fn percentages(&self) -> Result<(f64, f64), AnalyzeError> {
        match (self.pct_sci, self.pct_satd) {
            (Some(sci), Some(satd)) => Ok((sci, satd)),
            _ => Err(AnalyzeError::Incomplete(self.repo_name.clone())),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeConfig {
    pub scan: ScanConfig,
    pub domain_tag: String,
    pub stop_words: StopWordPolicy,
}

/// Full analysis output: the report plus scan diagnostics.
pub struct Analysis {
    pub report: RepoReport,
    pub diagnostics: Vec<ScanDiagnostic>,
}

/// Extracts, normalizes and classifies every comment under `root` and tallies
/// the labels. Comments that normalize to nothing are dropped, not counted.
pub fn analyze_repo(root: &Path, backend: &dyn Classifier, config: &AnalyzeConfig) -> Result<Analysis, AnalyzeError> {
    let scan = scan_repository(root, &config.scan)?;
    let mut kept = Vec::with_capacity(scan.comments.len());
    let mut texts = Vec::with_capacity(scan.comments.len());
    let mut dropped_empty = 0;
    for comment in &scan.comments {
        match normalize(&comment.raw_text, &config.stop_words) {
            Some(text) => {
                kept.push(comment);
                texts.push(text);
            }
            None => dropped_empty += 1,
        }
    }
    let predictions = classify(&texts, backend)?;

    let mut counts = PerLabel::<u64>::default();
    let mut instances = Vec::new();
    for (comment, prediction) in kept.iter().zip(&predictions) {
        counts[prediction.label] += 1;
        if prediction.label.is_satd() {
            instances.push(SatdInstance {
                file_path: comment.file_path.clone(),
                line_start: comment.line_start,
                line_end: comment.line_end,
                label: prediction.label,
                score: prediction.score(),
                excerpt: comment.raw_text.chars().take(EXCERPT_CHARS).collect(),
            });
        }
    }
    let mut report = RepoReport::from_counts(scan.repo.clone(), config.domain_tag.clone(), counts);
    report.files_scanned = scan.files_scanned;
    report.dropped_empty = dropped_empty;
    report.instances = instances;
    let unreadable: Vec<String> = scan
        .diagnostics
        .iter()
        .filter_map(|d| match d {
            ScanDiagnostic::Unreadable { path, .. } => Some(path.clone()),
            ScanDiagnostic::Lex { .. } => None,
        })
        .collect();
    if !unreadable.is_empty() {
        report.mark_incomplete(unreadable);
    }
    Ok(Analysis {
        report,
        diagnostics: scan.diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub repos: Vec<RepoReport>,
    pub totals: PerLabel<u64>,
    pub total_satd: u64,
    pub total_comments: u64,
    /// Unweighted means of the per-repository percentages.
    pub avg_pct_sci: f64,
    pub avg_pct_satd: f64,
}

pub fn cohort_report(reports: Vec<RepoReport>) -> Result<CohortReport, AnalyzeError> {
    if reports.is_empty() {
        return Err(AnalyzeError::EmptyCohort);
    }
    let mut totals = PerLabel::<u64>::default();
    let mut sum_sci = 0.0;
    let mut sum_satd = 0.0;
    for r in &reports {
        let (sci, satd) = r.percentages()?;
        sum_sci += sci;
        sum_satd += satd;
        for label in Label::ALL {
            totals[label] += r.counts[label];
        }
    }
    let n = reports.len() as f64;
    let total_satd = Label::SATD.iter().map(|l| totals[*l]).sum();
    Ok(CohortReport {
        total_comments: total_satd + totals[Label::NonSatd],
        total_satd,
        totals,
        avg_pct_sci: sum_sci / n,
        avg_pct_satd: sum_satd / n,
        repos: reports,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortComparison {
    pub first: String,
    pub second: String,
    /// `first.avg_pct_sci / second.avg_pct_sci`.
    pub ratio_sci: f64,
    pub ratio_satd: f64,
    /// Ratio of per-comment label rates computed from cohort totals; `None`
    /// where the second cohort's rate is zero.
    pub label_rate_ratios: PerLabel<Option<f64>>,
}

pub fn compare_cohorts(
    first_name: &str,
    first: &CohortReport,
    second_name: &str,
    second: &CohortReport,
) -> Result<CohortComparison, AnalyzeError> {
    if second.avg_pct_sci == 0.0 {
        return Err(AnalyzeError::DivisionByZero(format!("{second_name} average %SCI")));
    }
    if second.avg_pct_satd == 0.0 {
        return Err(AnalyzeError::DivisionByZero(format!("{second_name} average %SATD")));
    }
    if first.total_comments == 0 {
        return Err(AnalyzeError::DivisionByZero(format!("{first_name} comment total")));
    }
    let mut label_rate_ratios = PerLabel::<Option<f64>>::default();
    for label in Label::ALL {
        let a = first.totals[label] as f64 / first.total_comments as f64;
        let b = second.totals[label] as f64 / second.total_comments as f64;
        label_rate_ratios[label] = (b > 0.0).then(|| a / b);
    }
    Ok(CohortComparison {
        first: first_name.to_string(),
        second: second_name.to_string(),
        ratio_sci: first.avg_pct_sci / second.avg_pct_sci,
        ratio_satd: first.avg_pct_satd / second.avg_pct_satd,
        label_rate_ratios,
    })
}
