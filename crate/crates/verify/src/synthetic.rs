//! Seeded synthetic corpora.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satd_core::corpus::LabeledExample;
use satd_core::Label;

/// Share of tokens replaced by noise in the balanced corpus.
pub const NOISE_RATE: f64 = 0.2;

fn vocabulary(label: Label) -> &'static [&'static str] {
    match label {
        Label::NonSatd => &[
            "returns", "the", "value", "of", "index", "computes", "buffer", "list", "loop", "sets", "reads",
            "header", "counter", "parameter", "string", "converts",
        ],
        Label::CodeDesign => &[
            "hack", "fixme", "refactor", "duplicated", "ugly", "messy", "cleanup", "coupling", "spaghetti",
            "kludge", "redesign", "smell", "workaround", "clumsy", "brittle", "tangled",
        ],
        Label::Documentation => &[
            "document", "docstring", "explain", "undocumented", "describe", "comment", "clarify", "manual",
            "docs", "readme", "usage", "examples", "wording", "describes", "doc", "explained",
        ],
        Label::Test => &[
            "test", "tests", "coverage", "untested", "assert", "mock", "fixture", "flaky", "unit", "testcase",
            "regression", "harness", "verify", "testing", "suite", "asserts",
        ],
        Label::Requirement => &[
            "todo", "implement", "support", "feature", "missing", "unsupported", "yet", "add", "incomplete",
            "extend", "handle", "later", "needed", "implemented", "option", "pending",
        ],
        Label::Scientific => &[
            "approximation", "equation", "physical", "model", "numerical", "precision", "convergence",
            "theory", "empirical", "coefficient", "assumption", "integration", "spectrum", "boundary",
            "simulation", "accuracy",
        ],
    }
}

const NOISE: &[&str] = &[
    "this", "that", "here", "there", "code", "function", "should", "maybe", "now", "we", "it", "is", "a",
    "for", "in", "when",
];

fn sentence(rng: &mut ChaCha8Rng, label: Label) -> String {
    let len = rng.random_range(5..=10);
    let words: Vec<&str> = (0..len)
        .map(|_| {
            let pool = if rng.random_bool(NOISE_RATE) { NOISE } else { vocabulary(label) };
            *pool.choose(rng).expect("non-empty vocabulary")
        })
        .collect();
    words.join(" ")
}

/// `per_label` examples of every label, each drawn from its label's
/// vocabulary with [`NOISE_RATE`] of the tokens replaced by shared filler.
pub fn balanced_corpus(per_label: usize, seed: u64) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(per_label * Label::ALL.len());
    for i in 0..per_label {
        for label in Label::ALL {
            let project = format!("p{}", i % 7);
            out.push(LabeledExample::new(project, sentence(&mut rng, label), label));
        }
    }
    out
}

/// `projects` projects of uneven size, each with its own label skew: roughly
/// half Non-SATD overall, with one debt label dominating per project.
pub fn grouped_corpus(projects: usize, seed: u64) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for p in 0..projects {
        let size = rng.random_range(20..=240);
        let favourite = Label::SATD[p % Label::SATD.len()];
        for _ in 0..size {
            let roll: f64 = rng.random();
            let label = if roll < 0.5 {
                Label::NonSatd
            } else if roll < 0.8 {
                favourite
            } else {
                *Label::SATD.choose(&mut rng).expect("non-empty")
            };
            out.push(LabeledExample::new(format!("project-{p:02}"), sentence(&mut rng, label), label));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use satd_core::preprocess::{is_normalized, normalize, StopWordPolicy};

    #[test]
    fn balanced_corpus_is_balanced_and_normalized() {
        let corpus = balanced_corpus(300, 1);
        for label in Label::ALL {
            assert_eq!(corpus.iter().filter(|e| e.label == label).count(), 300);
        }
        for e in &corpus {
            assert!(is_normalized(&e.text));
            assert_eq!(normalize(&e.text, &StopWordPolicy::None).as_deref(), Some(e.text.as_str()));
        }
    }

    #[test]
    fn grouped_corpus_has_every_project_and_is_seeded() {
        let a = grouped_corpus(19, 4);
        let projects: std::collections::BTreeSet<_> = a.iter().map(|e| e.project.as_str()).collect();
        assert_eq!(projects.len(), 19);
        assert_eq!(a, grouped_corpus(19, 4));
    }
}
