//! Reader for the hand-lexed extractor corpus.
//!
//! Every source file under the corpus root has a sibling
//! `<name>.expected.json` holding `[{line_start, line_end, kind, raw_text}]`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use satd_core::extract::{detect_language, extract_comments, is_fixed_form_fortran, CommentKind, SourceLanguage};
use serde::Deserialize;

pub const EXPECTED_SUFFIX: &str = ".expected.json";

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ExpectedComment {
    pub line_start: usize,
    pub line_end: usize,
    pub kind: CommentKind,
    pub raw_text: String,
}

#[derive(Debug, Default)]
pub struct GoldenSummary {
    pub files: usize,
    pub comments: usize,
    pub per_language: BTreeMap<SourceLanguage, usize>,
    pub fixed_form_files: usize,
    pub kinds: BTreeMap<String, usize>,
    /// One message per file whose extraction differs from its expectation.
    pub mismatches: Vec<String>,
}

pub fn corpus_root() -> PathBuf {
    crate::core_fixtures().join("golden")
}

pub fn source_files(root: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = walkdir::WalkDir::new(root)
        .into_iter()
        .filter_map(Result::ok)
        .map(|e| e.into_path())
        .filter(|p| p.is_file() && !p.to_string_lossy().ends_with(EXPECTED_SUFFIX))
        .collect();
    files.sort();
    files
}

fn check_file(root: &Path, path: &Path, summary: &mut GoldenSummary) -> Result<(), String> {
    let rel = path.strip_prefix(root).unwrap_or(path).to_string_lossy().into_owned();
    let language = detect_language(path).ok_or_else(|| format!("{rel}: unknown language"))?;
    *summary.per_language.entry(language).or_default() += 1;
    if language == SourceLanguage::Fortran && is_fixed_form_fortran(path) {
        summary.fixed_form_files += 1;
    }
    let text = std::fs::read_to_string(path).map_err(|e| format!("{rel}: {e}"))?;
    let expected_path = PathBuf::from(format!("{}{EXPECTED_SUFFIX}", path.display()));
    let expected: Vec<ExpectedComment> = std::fs::read_to_string(&expected_path)
        .map_err(|e| format!("{rel}: no expectation: {e}"))
        .and_then(|t| serde_json::from_str(&t).map_err(|e| format!("{rel}: bad expectation: {e}")))?;
    for c in &expected {
        *summary.kinds.entry(format!("{:?}", c.kind)).or_default() += 1;
    }
    summary.comments += expected.len();

    let extracted = extract_comments(&text, language, &rel);
    if !extracted.diagnostics.is_empty() {
        return Err(format!("{rel}: diagnostics {:?}", extracted.diagnostics));
    }
    let actual: Vec<ExpectedComment> = extracted
        .comments
        .into_iter()
        .map(|c| ExpectedComment {
            line_start: c.line_start,
            line_end: c.line_end,
            kind: c.kind,
            raw_text: c.raw_text,
        })
        .collect();
    if actual != expected {
        return Err(format!("{rel}: expected {expected:?}, got {actual:?}"));
    }
    Ok(())
}

/// Extracts every corpus file and compares it with its expectation.
pub fn check_corpus(root: &Path) -> GoldenSummary {
    let mut summary = GoldenSummary::default();
    for path in source_files(root) {
        summary.files += 1;
        if let Err(message) = check_file(root, &path, &mut summary) {
            summary.mismatches.push(message);
        }
    }
    summary
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_wrong_expectation_is_reported() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        std::fs::write(dir.join("a.py"), "# one\n").unwrap();
        std::fs::write(
            dir.join("a.py.expected.json"),
            r#"[{"line_start": 1, "line_end": 1, "kind": "line", "raw_text": "two"}]"#,
        )
        .unwrap();
        let summary = check_corpus(dir);
        assert_eq!(summary.files, 1);
        assert_eq!(summary.mismatches.len(), 1);
    }
}
