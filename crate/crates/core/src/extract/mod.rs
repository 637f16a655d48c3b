//! Comment extraction from source trees.
//!
//! [`extract_comments`] lexes one file into logical comments: block comments
//! become one comment each and maximal runs of whole-line comments using the
//! same marker are merged. [`scan_repository`] walks a directory and applies
//! it to every file with a known extension.

mod language;
mod lexer;

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

pub use language::{Escape, SourceLanguage, StringRule};

pub use language::is_fixed_form_fortran;
use lexer::Lexer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommentKind {
    Line,
    Block,
    MergedLineGroup,
}

/// A comment located by file and 1-based inclusive line span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceComment {
    pub repo: String,
    #[serde(rename = "file")]
    pub file_path: String,
    pub line_start: usize,
    pub line_end: usize,
    pub language: SourceLanguage,
    pub kind: CommentKind,
    pub raw_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LexDiagnostic {
    UnterminatedBlockComment { line: usize },
    UnterminatedString { line: usize },
}

impl fmt::Display for LexDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LexDiagnostic::UnterminatedBlockComment { line } => {
                write!(f, "unterminated block comment starting on line {line}")
            }
            LexDiagnostic::UnterminatedString { line } => {
                write!(f, "unterminated string literal starting on line {line}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileComments {
    pub comments: Vec<SourceComment>,
    pub diagnostics: Vec<LexDiagnostic>,
}

/// Returns the language for a path, or `None` when the extension is unknown.
pub fn detect_language(path: &Path) -> Option<SourceLanguage> {
    SourceLanguage::detect(path)
}

/// Lexes `file_text` and returns its comments in source order.
///
/// `file_path` is copied into each comment and, for Fortran, selects
/// fixed-form (`.f`, `.for`, `.ftn`, `.f77`) or free-form lexing.
pub fn extract_comments(file_text: &str, language: SourceLanguage, file_path: &str) -> FileComments {
    let fixed_form =
        language == SourceLanguage::Fortran && is_fixed_form_fortran(Path::new(file_path));
    let (comments, diagnostics) = Lexer::new(language, fixed_form, file_path.to_string()).run(file_text);
    FileComments {
        comments,
        diagnostics,
    }
}

pub const VCS_DIRS: &[&str] = &[".git", ".hg", ".svn", ".bzr"];
pub const DEFAULT_VENDORED_DIRS: &[&str] = &["vendor", "third_party", "thirdparty", "node_modules"];

#[derive(Debug, Clone)]
pub struct ScanConfig {
    /// Recorded in every comment; defaults to the root directory name.
    pub repo_name: Option<String>,
    /// Directory names skipped in addition to VCS metadata.
    pub ignore_dirs: Vec<String>,
    /// Restrict the scan to these languages.
    pub languages: Option<Vec<SourceLanguage>>,
    /// Worker threads for lexing; `None` uses the ambient rayon pool.
    pub jobs: Option<usize>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            repo_name: None,
            ignore_dirs: DEFAULT_VENDORED_DIRS.iter().map(|s| s.to_string()).collect(),
            languages: None,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScanDiagnostic {
    Unreadable { path: String, message: String },
    Lex { file: String, #[serde(flatten)] diagnostic: LexDiagnostic },
}

impl ScanDiagnostic {
    pub fn is_unreadable(&self) -> bool {
        matches!(self, ScanDiagnostic::Unreadable { .. })
    }
}

impl fmt::Display for ScanDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScanDiagnostic::Unreadable { path, message } => write!(f, "{path}: unreadable: {message}"),
            ScanDiagnostic::Lex { file, diagnostic } => write!(f, "{file}: {diagnostic}"),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScanOutput {
    pub repo: String,
    pub files_scanned: usize,
    /// Sorted by file path, then line.
    pub comments: Vec<SourceComment>,
    pub diagnostics: Vec<ScanDiagnostic>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScanError {
    #[error("{0}: not a readable directory")]
    NotADirectory(PathBuf),
    #[error("failed to build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Walks `root` and extracts comments from every supported file.
///
/// Unreadable entries are reported as diagnostics and skipped. Output order
/// is independent of the number of workers.
pub fn scan_repository(root: &Path, config: &ScanConfig) -> Result<ScanOutput, ScanError> {
    if !root.is_dir() {
        return Err(ScanError::NotADirectory(root.to_path_buf()));
    }
    let repo = config.repo_name.clone().unwrap_or_else(|| {
        root.canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_default()
    });

    let mut diagnostics = Vec::new();
    let mut files: Vec<(String, PathBuf, SourceLanguage)> = Vec::new();
    let walker = WalkDir::new(root).follow_links(false).into_iter().filter_entry(|e| {
        e.depth() == 0
            || !e.file_type().is_dir()
            || !is_ignored_dir(&e.file_name().to_string_lossy(), &config.ignore_dirs)
    });
    for entry in walker {
        let entry = match entry {
            Ok(e) => e,
            Err(err) => {
                let path = err
                    .path()
                    .map(|p| relative_path(root, p))
                    .unwrap_or_default();
                diagnostics.push(ScanDiagnostic::Unreadable {
                    path,
                    message: err.to_string(),
                });
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let Some(language) = detect_language(entry.path()) else {
            continue;
        };
        if let Some(allowed) = &config.languages {
            if !allowed.contains(&language) {
                continue;
            }
        }
        files.push((relative_path(root, entry.path()), entry.into_path(), language));
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));

    let lex_all = || {
        files
            .par_iter()
            .map(|(rel, path, language)| match std::fs::read(path) {
                Ok(bytes) => {
                    let text = String::from_utf8_lossy(&bytes);
                    Ok(extract_comments(&text, *language, rel))
                }
                Err(err) => Err(ScanDiagnostic::Unreadable {
                    path: rel.clone(),
                    message: err.to_string(),
                }),
            })
            .collect::<Vec<_>>()
    };
    let results = match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()?
            .install(lex_all),
        None => lex_all(),
    };

    let mut comments = Vec::new();
    let mut files_scanned = 0;
    for ((rel, _, _), result) in files.iter().zip(results) {
        match result {
            Ok(file) => {
                files_scanned += 1;
                diagnostics.extend(file.diagnostics.into_iter().map(|d| ScanDiagnostic::Lex {
                    file: rel.clone(),
                    diagnostic: d,
                }));
                comments.extend(file.comments.into_iter().map(|mut c| {
                    c.repo = repo.clone();
                    c
                }));
            }
            Err(diag) => diagnostics.push(diag),
        }
    }

    Ok(ScanOutput {
        repo,
        files_scanned,
        comments,
        diagnostics,
    })
}

fn is_ignored_dir(name: &str, extra: &[String]) -> bool {
    VCS_DIRS.contains(&name) || extra.iter().any(|d| d == name)
}

fn relative_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn go_hack_comment() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("main.go"), "package main\n// hack\n").unwrap();
        let out = scan_repository(dir.path(), &ScanConfig::default()).unwrap();
        assert_eq!(out.comments.len(), 1);
        assert_eq!(out.comments[0].raw_text, "hack");
        assert_eq!(out.comments[0].file_path, "main.go");
    }

    #[test]
    fn unsupported_files_only() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("logo.png"), [0x89, b'P', b'N', b'G']).unwrap();
        let out = scan_repository(dir.path(), &ScanConfig::default()).unwrap();
        assert!(out.comments.is_empty());
        assert_eq!(out.files_scanned, 0);
    }

    #[test]
    fn ignored_directories_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        for sub in [".git", "vendor", "src"] {
            fs::create_dir(dir.path().join(sub)).unwrap();
            fs::write(dir.path().join(sub).join("a.c"), "// x\n").unwrap();
        }
        let out = scan_repository(dir.path(), &ScanConfig::default()).unwrap();
        let files: Vec<_> = out.comments.iter().map(|c| c.file_path.as_str()).collect();
        assert_eq!(files, vec!["src/a.c"]);

        let config = ScanConfig {
            ignore_dirs: vec![],
            ..ScanConfig::default()
        };
        let out = scan_repository(dir.path(), &config).unwrap();
        assert_eq!(out.comments.len(), 2);
    }

    #[test]
    fn invalid_utf8_is_replaced() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("old.f90"), b"! caf\xe9 ok\n").unwrap();
        let out = scan_repository(dir.path(), &ScanConfig::default()).unwrap();
        assert_eq!(out.comments[0].raw_text, "caf\u{fffd} ok");
    }

    #[test]
    fn not_a_directory() {
        let err = scan_repository(Path::new("/nonexistent/satd"), &ScanConfig::default());
        assert!(matches!(err, Err(ScanError::NotADirectory(_))));
    }

    #[test]
    fn jsonl_record_shape() {
        let c = &extract_comments("# hi", SourceLanguage::Python, "a.py").comments[0];
        let v: serde_json::Value = serde_json::to_value(c).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(
            keys,
            ["file", "kind", "language", "line_end", "line_start", "raw_text", "repo"]
        );
        assert_eq!(v["kind"], "line");
        assert_eq!(v["language"], "python");
    }
}
