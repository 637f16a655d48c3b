use std::path::PathBuf;
use std::str::FromStr;

use anyhow::Context as _;
use satd_core::classifier::{Classifier, NgramModel, PatternRuleSet};
use satd_core::inference::{InferenceEndpoint, RemoteClassifier};

use crate::Context;

/// Backend selector: `ngram[:MODEL]`, `patterns[:RULES]`, `remote[:URL]`.
///
/// A bare `ngram` means "train one" where the command can (evaluate) and is
/// an error where a trained model is required. A bare `patterns` uses the
/// built-in keyword rules; a bare `remote` uses `--endpoint`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Ngram(Option<PathBuf>),
    Patterns(Option<PathBuf>),
    Remote(Option<String>),
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        if arg == Some("") {
            return Err(format!("empty argument in backend `{s}`"));
        }
        match kind {
            "ngram" => Ok(BackendSpec::Ngram(arg.map(PathBuf::from))),
            "patterns" => Ok(BackendSpec::Patterns(arg.map(PathBuf::from))),
            "remote" => Ok(BackendSpec::Remote(arg.map(str::to_string))),
            _ => Err(format!(
                "unknown backend `{s}`; expected ngram[:MODEL], patterns[:RULES] or remote[:URL]"
            )),
        }
    }
}

pub(crate) fn endpoint_url(spec: Option<&str>, ctx: &Context) -> anyhow::Result<String> {
    spec.map(str::to_string)
        .or_else(|| ctx.endpoint.clone())
        .context("no inference endpoint; pass remote:URL, --endpoint or set SATD_ENDPOINT")
}

/// Builds a ready-to-use classifier; bare `ngram` is rejected.
pub(crate) fn load(spec: &BackendSpec, ctx: &Context) -> anyhow::Result<Box<dyn Classifier>> {
    Ok(match spec {
        BackendSpec::Ngram(Some(path)) => Box::new(
            NgramModel::load(path).with_context(|| format!("loading model {}", path.display()))?,
        ),
        BackendSpec::Ngram(None) => anyhow::bail!("this command needs a trained model: use ngram:PATH"),
        BackendSpec::Patterns(Some(path)) => Box::new(
            PatternRuleSet::load(path).with_context(|| format!("loading rules {}", path.display()))?,
        ),
        BackendSpec::Patterns(None) => Box::new(PatternRuleSet::default()),
        BackendSpec::Remote(url) => {
            let mut endpoint = InferenceEndpoint::new(endpoint_url(url.as_deref(), ctx)?);
            if let Some(jobs) = ctx.jobs {
                endpoint.max_in_flight = jobs;
            }
            Box::new(RemoteClassifier::connect(endpoint)?)
        }
    })
}
