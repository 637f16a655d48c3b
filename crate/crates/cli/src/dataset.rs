use std::path::PathBuf;

use anyhow::Context as _;
use satd_core::corpus::{load_dataset, merge, DatasetFormat, LabeledExample};
use satd_core::preprocess::{normalize, StopWordPolicy};

use crate::{Context, Io};

pub(crate) struct Loaded {
    pub examples: Vec<LabeledExample>,
    /// Rows dropped because their text normalized to nothing.
    pub dropped: usize,
}

/// Loads and merges the datasets from the flags (or `SATD_DATASET`), falling
/// back to the config file.
pub(crate) fn load(ctx: &Context, flags: &[PathBuf], io: &mut Io) -> anyhow::Result<Loaded> {
    let paths = if flags.is_empty() { &ctx.file.dataset } else { flags };
    anyhow::ensure!(!paths.is_empty(), "no dataset given; pass --dataset or set SATD_DATASET");
    let mut parts = Vec::with_capacity(paths.len());
    let mut dropped = 0;
    for path in paths {
        let format = DatasetFormat::from_path(path)?;
        let loaded = load_dataset(path, format).with_context(|| format!("loading {}", path.display()))?;
        for line in &loaded.dropped_lines {
            io.warn(format!("{}:{line}: text is empty after normalization", path.display()));
        }
        dropped += loaded.dropped_lines.len();
        parts.push(loaded.examples);
    }
    let (mut examples, summary) = merge(&parts);
    if let StopWordPolicy::CustomList { .. } = ctx.stop_words {
        let before = examples.len();
        examples.retain_mut(|ex| match normalize(&ex.text, &ctx.stop_words) {
            Some(text) => {
                ex.text = text;
                true
            }
            None => false,
        });
        let removed = before - examples.len();
        if removed > 0 {
            io.warn(format!("{removed} examples consisted only of stop words"));
            dropped += removed;
        }
    }
    log::info!("loaded {} examples ({:?})", summary.total, summary.counts);
    Ok(Loaded { examples, dropped })
}
