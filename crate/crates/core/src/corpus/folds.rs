//! Project-grouped, label-stratified fold assignment.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CorpusError, LabeledExample};
use crate::label::{Label, PerLabel, NUM_LABELS};

/// Maps every project to one fold in `[0, k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of_project: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn test_projects(&self, fold: usize) -> Vec<&str> {
        self.fold_of_project
            .iter()
            .filter(|(_, f)| **f == fold)
            .map(|(p, _)| p.as_str())
            .collect()
    }

    pub fn train_projects(&self, fold: usize) -> Vec<&str> {
        self.fold_of_project
            .iter()
            .filter(|(_, f)| **f != fold)
            .map(|(p, _)| p.as_str())
            .collect()
    }

    /// Splits `examples` into (train, test) for `fold`. Examples whose
    /// project is not in the assignment are left out of both.
    pub fn partition<'a>(
        &self,
        examples: &'a [LabeledExample],
        fold: usize,
    ) -> (Vec<&'a LabeledExample>, Vec<&'a LabeledExample>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for ex in examples {
            match self.fold_of_project.get(&ex.project) {
                Some(f) if *f == fold => test.push(ex),
                Some(_) => train.push(ex),
                None => {}
            }
        }
        (train, test)
    }
}

fn project_counts(examples: &[LabeledExample]) -> BTreeMap<&str, PerLabel<usize>> {
    let mut counts: BTreeMap<&str, PerLabel<usize>> = BTreeMap::new();
    for ex in examples {
        counts.entry(ex.project.as_str()).or_default()[ex.label] += 1;
    }
    counts
}

/// Label proportions over a set of examples (all zero when empty).
pub fn label_proportions<'a, I>(examples: I) -> PerLabel<f64>
where
    I: IntoIterator<Item = &'a LabeledExample>,
{
    let mut counts = PerLabel::<usize>::default();
    let mut n = 0usize;
    for ex in examples {
        counts[ex.label] += 1;
        n += 1;
    }
    proportions(&counts, n)
}

fn proportions(counts: &PerLabel<usize>, n: usize) -> PerLabel<f64> {
    let mut out = PerLabel::<f64>::default();
    if n > 0 {
        for l in Label::ALL {
            out[l] = counts[l] as f64 / n as f64;
        }
    }
    out
}

fn l1(counts: &PerLabel<usize>, global: &PerLabel<f64>) -> f64 {
    let n: usize = counts.0.iter().sum();
    let p = proportions(counts, n);
    Label::ALL.iter().map(|&l| (p[l] - global[l]).abs()).sum()
}

/// L1 distance between each fold's test-set label distribution and the
/// global distribution.
pub fn fold_label_deviations(examples: &[LabeledExample], assignment: &FoldAssignment) -> Vec<f64> {
    let global = label_proportions(examples);
    let mut counts = vec![PerLabel::<usize>::default(); assignment.k];
    for ex in examples {
        if let Some(&f) = assignment.fold_of_project.get(&ex.project) {
            counts[f][ex.label] += 1;
        }
    }
    counts.iter().map(|c| l1(c, &global)).collect()
}

/// Projects ordered by descending size (ties by name), dealt to folds in turn.
pub fn round_robin_assignment(examples: &[LabeledExample], k: usize) -> FoldAssignment {
    let fold_of_project = ordered_projects(&project_counts(examples))
        .into_iter()
        .enumerate()
        .map(|(i, (p, _))| (p.to_string(), i % k.max(1)))
        .collect();
    FoldAssignment { k, fold_of_project }
}

fn ordered_projects<'a>(
    counts: &BTreeMap<&'a str, PerLabel<usize>>,
) -> Vec<(&'a str, PerLabel<usize>)> {
    let mut order: Vec<_> = counts.iter().map(|(p, c)| (*p, *c)).collect();
    order.sort_by(|a, b| {
        let (na, nb): (usize, usize) = (a.1 .0.iter().sum(), b.1 .0.iter().sum());
        nb.cmp(&na).then_with(|| a.0.cmp(b.0))
    });
    order
}

/// Greedy stratified group k-fold.
///
/// Projects are visited largest first; each goes to the fold whose label
/// distribution ends up closest (L1) to the global one. A fold holds at most
/// `ceil(projects / k)` projects and every fold receives at least one. Ties
/// go to the fold with fewer projects, then fewer examples, then the lowest
/// index after rotating fold order by `seed`.
///
/// The greedy result, or the round-robin assignment when that deviates less,
/// is then refined by moving and swapping projects between folds while the
/// summed deviation strictly drops, so the outcome is never worse than
/// round-robin.
pub fn stratified_group_kfold(
    examples: &[LabeledExample],
    k: usize,
    seed: u64,
) -> Result<FoldAssignment, CorpusError> {
    if k == 0 {
        return Err(CorpusError::ZeroFolds);
    }
    let counts = project_counts(examples);
    if counts.len() < k {
        return Err(CorpusError::TooFewGroups {
            k,
            got: counts.len(),
        });
    }
    let global = label_proportions(examples);
    let order = ordered_projects(&counts);
    let capacity = order.len().div_ceil(k);
    let rotation = (seed % k as u64) as usize;

    let mut fold_counts = vec![PerLabel::<usize>::default(); k];
    let mut fold_projects = vec![0usize; k];
    let mut fold_of_project = BTreeMap::new();

    for (visited, (project, pc)) in order.iter().enumerate() {
        let remaining = order.len() - visited;
        let empty = fold_projects.iter().filter(|n| **n == 0).count();
        let must_fill = remaining <= empty;

        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for step in 0..k {
            let f = (step + rotation) % k;
            if fold_projects[f] >= capacity || (must_fill && fold_projects[f] > 0) {
                continue;
            }
            let mut merged = fold_counts[f];
            for i in 0..NUM_LABELS {
                merged.0[i] += pc.0[i];
            }
            let cost = l1(&merged, &global);
            let size: usize = fold_counts[f].0.iter().sum();
            let key = (cost, fold_projects[f], size, step, f);
            let better = match &best {
                None => true,
                Some(b) => {
                    key.0 < b.0 - 1e-12
                        || ((key.0 - b.0).abs() <= 1e-12 && (key.1, key.2, key.3) < (b.1, b.2, b.3))
                }
            };
            if better {
                best = Some(key);
            }
        }
        let (_, _, _, _, fold) = best.expect("capacity always leaves a fold open");
        for i in 0..NUM_LABELS {
            fold_counts[fold].0[i] += pc.0[i];
        }
        fold_projects[fold] += 1;
        fold_of_project.insert(project.to_string(), fold);
    }

    let mut greedy: Vec<usize> = order.iter().map(|(p, _)| fold_of_project[*p]).collect();
    let round_robin: Vec<usize> = (0..order.len()).map(|i| i % k).collect();
    let project_label_counts: Vec<PerLabel<usize>> = order.iter().map(|(_, c)| *c).collect();
    if total_deviation(&project_label_counts, &round_robin, k, &global)
        < total_deviation(&project_label_counts, &greedy, k, &global) - 1e-12
    {
        greedy = round_robin;
    }
    refine(&project_label_counts, &mut greedy, k, capacity, &global);

    let fold_of_project = order
        .iter()
        .zip(greedy)
        .map(|((p, _), f)| (p.to_string(), f))
        .collect();
    Ok(FoldAssignment { k, fold_of_project })
}

fn fold_totals(projects: &[PerLabel<usize>], folds: &[usize], k: usize) -> Vec<PerLabel<usize>> {
    let mut totals = vec![PerLabel::<usize>::default(); k];
    for (pc, &f) in projects.iter().zip(folds) {
        for i in 0..NUM_LABELS {
            totals[f].0[i] += pc.0[i];
        }
    }
    totals
}

fn total_deviation(projects: &[PerLabel<usize>], folds: &[usize], k: usize, global: &PerLabel<f64>) -> f64 {
    fold_totals(projects, folds, k).iter().map(|c| l1(c, global)).sum()
}

/// First-improvement local search over single moves and pairwise swaps.
fn refine(projects: &[PerLabel<usize>], folds: &mut [usize], k: usize, capacity: usize, global: &PerLabel<f64>) {
    const MAX_PASSES: usize = 50;
    let shifted = |c: &PerLabel<usize>, add: &PerLabel<usize>, remove: &PerLabel<usize>| {
        let mut out = *c;
        for i in 0..NUM_LABELS {
            out.0[i] = out.0[i] + add.0[i] - remove.0[i];
        }
        out
    };
    let none = PerLabel::<usize>::default();
    for _ in 0..MAX_PASSES {
        let mut improved = false;
        let mut totals = fold_totals(projects, folds, k);
        let mut sizes = vec![0usize; k];
        for &f in folds.iter() {
            sizes[f] += 1;
        }
        for a in 0..projects.len() {
            let from = folds[a];
            for to in 0..k {
                if to == from || sizes[to] >= capacity || sizes[from] <= 1 {
                    continue;
                }
                let new_from = shifted(&totals[from], &none, &projects[a]);
                let new_to = shifted(&totals[to], &projects[a], &none);
                let delta = l1(&new_from, global) + l1(&new_to, global) - l1(&totals[from], global) - l1(&totals[to], global);
                if delta < -1e-12 {
                    totals[from] = new_from;
                    totals[to] = new_to;
                    sizes[from] -= 1;
                    sizes[to] += 1;
                    folds[a] = to;
                    improved = true;
                    break;
                }
            }
        }
        for a in 0..projects.len() {
            for b in a + 1..projects.len() {
                let (fa, fb) = (folds[a], folds[b]);
                if fa == fb {
                    continue;
                }
                let new_a = shifted(&totals[fa], &projects[b], &projects[a]);
                let new_b = shifted(&totals[fb], &projects[a], &projects[b]);
                let delta = l1(&new_a, global) + l1(&new_b, global) - l1(&totals[fa], global) - l1(&totals[fb], global);
                if delta < -1e-12 {
                    totals[fa] = new_a;
                    totals[fb] = new_b;
                    folds.swap(a, b);
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}
