//! Definitional metric oracle.
//!
//! Expands a confusion matrix back into paired label lists and counts true
//! positives, false positives and false negatives one example at a time,
//! sharing no code with the library's matrix arithmetic.

use rand::Rng;
use satd_core::evaluation::ConfusionMatrix;
use satd_core::{Label, NUM_LABELS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleLabel {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub per_label: Vec<OracleLabel>,
    pub macro_f1: f64,
    pub weighted_f1: f64,
}

fn divide(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Metrics of paired truth/prediction lists, by definition.
pub fn oracle_metrics(truth: &[Label], predicted: &[Label]) -> OracleReport {
    assert_eq!(truth.len(), predicted.len());
    let mut per_label = Vec::with_capacity(NUM_LABELS);
    for label in Label::ALL {
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for (t, p) in truth.iter().zip(predicted) {
            match (*t == label, *p == label) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        let precision = divide(tp as f64, (tp + fp) as f64);
        let recall = divide(tp as f64, (tp + fn_) as f64);
        per_label.push(OracleLabel {
            precision,
            recall,
            f1: divide(2.0 * precision * recall, precision + recall),
            support: tp + fn_,
        });
    }
    let macro_f1 = per_label.iter().map(|m| m.f1).sum::<f64>() / NUM_LABELS as f64;
    let total: u64 = per_label.iter().map(|m| m.support).sum();
    let weighted_f1 = divide(
        per_label.iter().map(|m| m.f1 * m.support as f64).sum(),
        total as f64,
    );
    OracleReport {
        per_label,
        macro_f1,
        weighted_f1,
    }
}

/// Truth and prediction lists whose confusion matrix is `cm`.
pub fn expand(cm: &ConfusionMatrix) -> (Vec<Label>, Vec<Label>) {
    let mut truth = Vec::new();
    let mut predicted = Vec::new();
    for t in Label::ALL {
        for p in Label::ALL {
            for _ in 0..cm.get(t, p) {
                truth.push(t);
                predicted.push(p);
            }
        }
    }
    (truth, predicted)
}

/// A random non-empty matrix; about a third of the rows and columns are
/// zeroed so that the 0/0 paths are exercised.
pub fn random_matrix<R: Rng>(rng: &mut R) -> ConfusionMatrix {
    loop {
        let mut counts = [[0u64; NUM_LABELS]; NUM_LABELS];
        let empty_row: Vec<bool> = (0..NUM_LABELS).map(|_| rng.random_bool(0.3)).collect();
        let empty_col: Vec<bool> = (0..NUM_LABELS).map(|_| rng.random_bool(0.3)).collect();
        for (i, row) in counts.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                if !empty_row[i] && !empty_col[j] {
                    *cell = rng.random_range(0..50);
                }
            }
        }
        let cm = ConfusionMatrix { counts };
        if cm.total() > 0 {
            return cm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_on_a_hand_case() {
        use Label::*;
        let truth = [Requirement, Requirement, Requirement, Scientific, Scientific, NonSatd];
        let predicted = [Requirement, Requirement, Scientific, Scientific, NonSatd, NonSatd];
        let r = oracle_metrics(&truth, &predicted);
        assert_eq!(r.per_label[Requirement.index()].f1, 0.8);
        assert_eq!(r.per_label[Test.index()].f1, 0.0);
        assert!((r.macro_f1 - 59.0 / 180.0).abs() < 1e-15);
        assert!((r.weighted_f1 - 61.0 / 90.0).abs() < 1e-15);
    }

    #[test]
    fn expand_round_trips() {
        let mut counts = [[0u64; NUM_LABELS]; NUM_LABELS];
        counts[1][2] = 3;
        counts[5][5] = 1;
        let (t, p) = expand(&ConfusionMatrix { counts });
        assert_eq!(t.len(), 4);
        assert_eq!(satd_core::evaluation::confusion(&t, &p).unwrap().counts, counts);
    }
}
