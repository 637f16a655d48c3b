//! Comment text normalization.
//!
//! Pipeline: join lines, replace everything except letters, spaces and the
//! marks `"`, `'`, `!` with a space, lowercase, collapse whitespace, and
//! optionally drop stop words.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Punctuation that survives normalization.
pub const PRESERVED_MARKS: [char; 3] = ['"', '\'', '!'];

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StopWordPolicy {
    #[default]
    None,
    CustomList { words: BTreeSet<String> },
}

impl StopWordPolicy {
    pub fn custom<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopWordPolicy::CustomList {
            words: words
                .into_iter()
                .filter_map(|w| normalize(w.as_ref(), &StopWordPolicy::None))
                .collect(),
        }
    }

    /// Reads a whitespace-separated word list. Lines starting with `#` are ignored.
    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::custom(
            text.lines()
                .filter(|l| !l.trim_start().starts_with('#'))
                .flat_map(str::split_whitespace),
        ))
    }
}

/// A normalized comment paired with where it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedComment {
    pub source: String,
    pub text: String,
}

fn keep(c: char) -> bool {
    c.is_alphabetic() || c == ' ' || PRESERVED_MARKS.contains(&c)
}

/// Case folding as `lower(upper(c))` so that e.g. `ς` and `σ` agree.
fn fold_case(c: char, out: &mut String) {
    for u in c.to_uppercase() {
        out.extend(u.to_lowercase());
    }
}

fn normalize_once(raw: &str) -> String {
    let mut folded = String::with_capacity(raw.len());
    for c in raw.chars() {
        if keep(c) {
            fold_case(c, &mut folded);
        } else {
            folded.push(' ');
        }
    }
    // case mapping can introduce combining marks; filter again
    let filtered: String = folded.chars().map(|c| if keep(c) { c } else { ' ' }).collect();
    filtered.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalizes raw comment text; `None` when nothing survives.
///
/// "Alphabetic" is the Unicode `Alphabetic` property, so non-English text is
/// kept. Digits are removed.
pub fn normalize(raw: &str, policy: &StopWordPolicy) -> Option<String> {
    let mut text = normalize_once(raw);
    // a handful of characters need a second pass to reach a fixed point
    for _ in 0..4 {
        let again = normalize_once(&text);
        if again == text {
            break;
        }
        text = again;
    }
    if let StopWordPolicy::CustomList { words } = policy {
        text = text
            .split(' ')
            .filter(|t| !words.contains(*t))
            .collect::<Vec<_>>()
            .join(" ");
    }
    (!text.is_empty()).then_some(text)
}

/// True when `text` satisfies the normalized-comment character set.
pub fn is_normalized(text: &str) -> bool {
    !text.is_empty()
        && !text.starts_with(' ')
        && !text.ends_with(' ')
        && !text.contains("  ")
        && text.chars().all(|c| {
            c == ' ' || PRESERVED_MARKS.contains(&c) || (c.is_alphabetic() && {
                let mut s = String::new();
                fold_case(c, &mut s);
                s.chars().eq(std::iter::once(c))
            })
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("token statistics need a non-empty corpus")]
pub struct EmptyCorpus;

/// Mean and population standard deviation of whitespace-token counts.
pub fn token_stats<S: AsRef<str>>(corpus: &[S]) -> Result<(f64, f64), EmptyCorpus> {
    if corpus.is_empty() {
        return Err(EmptyCorpus);
    }
    let counts: Vec<f64> = corpus
        .iter()
        .map(|t| t.as_ref().split_whitespace().count() as f64)
        .collect();
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}
