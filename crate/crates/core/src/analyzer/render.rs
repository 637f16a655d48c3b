//! Report renderings: counts CSV, markdown tables and instance records.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CohortReport, RepoReport};
use crate::label::{Label, PerLabel};

/// Table column order for the debt labels.
const COLUMN_LABELS: [Label; 5] = [
    Label::Documentation,
    Label::Requirement,
    Label::Test,
    Label::CodeDesign,
    Label::Scientific,
];

const CSV_HEADER: [&str; 11] = [
    "repo_name",
    "domain",
    "total_satd",
    "non_satd",
    "doc",
    "req",
    "tes",
    "cd",
    "sci",
    "pct_sci",
    "pct_satd",
];

/// One row of the counts table; also the format of transcribed reference tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub repo_name: String,
    pub domain: String,
    pub total_satd: u64,
    pub non_satd: u64,
    pub doc: u64,
    pub req: u64,
    pub tes: u64,
    pub cd: u64,
    pub sci: u64,
    pub pct_sci: Option<f64>,
    pub pct_satd: Option<f64>,
}

impl CountRow {
    pub fn counts(&self) -> PerLabel<u64> {
        let mut c = PerLabel::<u64>::default();
        c[Label::NonSatd] = self.non_satd;
        c[Label::Documentation] = self.doc;
        c[Label::Requirement] = self.req;
        c[Label::Test] = self.tes;
        c[Label::CodeDesign] = self.cd;
        c[Label::Scientific] = self.sci;
        c
    }

    /// Report recomputed from the counts; stored percentages are ignored.
    pub fn to_report(&self) -> RepoReport {
        RepoReport::from_counts(self.repo_name.clone(), self.domain.clone(), self.counts())
    }
}

pub fn read_count_table(path: &Path) -> Result<Vec<CountRow>, csv::Error> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

fn pct(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| format!("{v:.2}"))
}

pub fn render_csv(reports: &[RepoReport]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER).expect("in-memory write");
    for r in reports {
        let mut record = vec![r.repo_name.clone(), r.domain_tag.clone(), r.total_satd.to_string()];
        record.push(r.counts[Label::NonSatd].to_string());
        record.extend(COLUMN_LABELS.iter().map(|l| r.counts[*l].to_string()));
        record.push(pct(r.pct_sci));
        record.push(pct(r.pct_satd));
        writer.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn markdown_pct(value: Option<f64>) -> String {
    value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

/// Markdown table with columns Repo Name, Repo Domain, Total SATD, Non SATD,
/// DOC, REQ, TES, C/D, SCI, %SCI, %SATD. With a cohort, a totals row follows
/// whose percentage cells are column averages marked `*`.
pub fn render_markdown(reports: &[RepoReport], cohort: Option<&CohortReport>) -> String {
    let mut out = String::from(
        "| Repo Name | Repo Domain | Total SATD | Non SATD | DOC | REQ | TES | C/D | SCI | %SCI | %SATD |\n",
    );
    out += "|---|---|---|---|---|---|---|---|---|---|---|\n";
    let row = |name: &str, domain: &str, total: u64, counts: &PerLabel<u64>, sci: String, satd: String| {
        let labels: Vec<String> = COLUMN_LABELS.iter().map(|l| counts[*l].to_string()).collect();
        format!(
            "| {name} | {domain} | {total} | {} | {} | {sci} | {satd} |\n",
            counts[Label::NonSatd],
            labels.join(" | ")
        )
    };
    for r in reports {
        out += &row(
            &r.repo_name,
            &r.domain_tag,
            r.total_satd,
            &r.counts,
            markdown_pct(r.pct_sci),
            markdown_pct(r.pct_satd),
        );
    }
    if let Some(c) = cohort {
        out += &row(
            "Total",
            "",
            c.total_satd,
            &c.totals,
            format!("{:.2}*", c.avg_pct_sci),
            format!("{:.2}*", c.avg_pct_satd),
        );
        out += "\n\\* column average\n";
    }
    out
}

/// Location record for editor integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub file: String,
    pub line_start: usize,
    pub line_end: usize,
    pub label: Label,
    pub score: f64,
}

pub fn render_instances(reports: &[RepoReport]) -> Vec<InstanceRecord> {
    reports
        .iter()
        .flat_map(|r| r.instances.iter())
        .map(|i| InstanceRecord {
            file: i.file_path.clone(),
            line_start: i.line_start,
            line_end: i.line_end,
            label: i.label,
            score: i.score,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzer::cohort_report;

    fn healpy() -> RepoReport {
        RepoReport::from_counts("Healpy", "Physics", PerLabel([367, 4, 0, 1, 1, 171]))
    }

    #[test]
    fn markdown_matches_golden() {
        let r = healpy();
        let cohort = cohort_report(vec![r.clone()]).unwrap();
        let md = render_markdown(&[r], Some(&cohort));
        let expected = "\
| Repo Name | Repo Domain | Total SATD | Non SATD | DOC | REQ | TES | C/D | SCI | %SCI | %SATD |
|---|---|---|---|---|---|---|---|---|---|---|
| Healpy | Physics | 177 | 367 | 0 | 1 | 1 | 4 | 171 | 31.43 | 32.54 |
| Total |  | 177 | 367 | 0 | 1 | 1 | 4 | 171 | 31.43* | 32.54* |

\\* column average
";
        assert_eq!(md, expected);
    }

    #[test]
    fn csv_round_trips_through_count_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, render_csv(&[healpy()])).unwrap();
        let rows = read_count_table(&path).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].to_report(), healpy());
        assert_eq!(rows[0].pct_sci, Some(31.43));
    }
}
