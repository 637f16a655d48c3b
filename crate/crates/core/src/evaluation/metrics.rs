use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::label::{Label, PerLabel, NUM_LABELS};

/// Counts indexed `[true][predicted]` in canonical label order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_LABELS]; NUM_LABELS],
}

impl ConfusionMatrix {
    pub fn get(&self, truth: Label, predicted: Label) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Number of examples whose true label is `label`.
    pub fn support(&self, label: Label) -> u64 {
        self.counts[label.index()].iter().sum()
    }

    pub fn predicted(&self, label: Label) -> u64 {
        self.counts.iter().map(|row| row[label.index()]).sum()
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            truth: y_true.len(),
            predicted: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        cm.counts[t.index()][p.index()] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Real-valued so that fold averages stay representable.
    pub support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_label: PerLabel<LabelMetrics>,
    pub macro_f1: f64,
    pub weighted_f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 per label with 0/0 taken as 0; macro F1 is the
/// mean over all six labels and weighted F1 weights by true-class support.
pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let mut per_label = PerLabel::<LabelMetrics>::default();
    for label in Label::ALL {
        let tp = cm.get(label, label);
        let precision = ratio(tp, cm.predicted(label));
        let recall = ratio(tp, cm.support(label));
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_label[label] = LabelMetrics {
            precision,
            recall,
            f1,
            support: cm.support(label) as f64,
        };
    }
    let macro_f1 = per_label.0.iter().map(|m| m.f1).sum::<f64>() / NUM_LABELS as f64;
    let weighted_f1 = per_label.0.iter().map(|m| m.support * m.f1).sum::<f64>() / total as f64;
    Ok(MetricsReport {
        per_label,
        macro_f1,
        weighted_f1,
    })
}

/// Column order of the published evaluation tables.
pub const TABLE_LABEL_ORDER: [Label; NUM_LABELS] = [
    Label::Requirement,
    Label::CodeDesign,
    Label::Documentation,
    Label::Test,
    Label::Scientific,
    Label::NonSatd,
];

impl MetricsReport {
    /// Element-wise arithmetic mean, including supports.
    pub fn average(reports: &[MetricsReport]) -> Option<MetricsReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let mean = |f: &dyn Fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let mut per_label = PerLabel::<LabelMetrics>::default();
        for label in Label::ALL {
            per_label[label] = LabelMetrics {
                precision: mean(&|r| r.per_label[label].precision),
                recall: mean(&|r| r.per_label[label].recall),
                f1: mean(&|r| r.per_label[label].f1),
                support: mean(&|r| r.per_label[label].support),
            };
        }
        Some(MetricsReport {
            per_label,
            macro_f1: mean(&|r| r.macro_f1),
            weighted_f1: mean(&|r| r.weighted_f1),
        })
    }

    pub fn markdown_header() -> String {
        let mut cols = vec!["Model".to_string()];
        cols.extend(TABLE_LABEL_ORDER.iter().map(|l| l.short_name().to_string()));
        cols.push("Macro Avg F1".into());
        cols.push("Weighted Avg F1".into());
        format!("| {} |\n|{}|\n", cols.join(" | "), vec!["---"; cols.len()].join("|"))
    }

    /// One markdown table row of F1 values.
    pub fn markdown_row(&self, name: &str) -> String {
        let mut cells = vec![name.to_string()];
        cells.extend(TABLE_LABEL_ORDER.iter().map(|l| format!("{:.4}", self.per_label[*l].f1)));
        cells.push(format!("{:.4}", self.macro_f1));
        cells.push(format!("{:.4}", self.weighted_f1));
        format!("| {} |\n", cells.join(" | "))
    }

    pub fn to_markdown(&self, name: &str) -> String {
        Self::markdown_header() + &self.markdown_row(name)
    }

    /// `label,precision,recall,f1,support` rows followed by the two averages.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,precision,recall,f1,support\n");
        for label in TABLE_LABEL_ORDER {
            let m = self.per_label[label];
            out += &format!("{},{},{},{},{}\n", label.wire_name(), m.precision, m.recall, m.f1, m.support);
        }
        out += &format!("macro-avg,,,{},\n", self.macro_f1);
        out += &format!("weighted-avg,,,{},\n", self.weighted_f1);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basic_confusion() {
        let cm = confusion(&[Label::Test, Label::Test], &[Label::Test, Label::Test]).unwrap();
        assert_eq!(cm.get(Label::Test, Label::Test), 2);
        assert_eq!(cm.total(), 2);
        let cm = confusion(&[Label::Test], &[Label::Requirement]).unwrap();
        assert_eq!(cm.get(Label::Test, Label::Requirement), 1);
        assert_eq!(cm.total(), 1);
        assert!(matches!(confusion(&[], &[]), Err(EvalError::Empty)));
        assert!(matches!(
            confusion(&[Label::Test], &[]),
            Err(EvalError::LengthMismatch { truth: 1, predicted: 0 })
        ));
    }

    #[test]
    fn confusion_matches_pairwise_tally() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let truth: Vec<Label> = (0..50).map(|_| Label::ALL[rng.random_range(0..6)]).collect();
        let pred: Vec<Label> = (0..50).map(|_| Label::ALL[rng.random_range(0..6)]).collect();
        let cm = confusion(&truth, &pred).unwrap();
        for t in Label::ALL {
            for p in Label::ALL {
                let tally = (0..50).filter(|&i| truth[i] == t && pred[i] == p).count() as u64;
                assert_eq!(cm.get(t, p), tally);
            }
        }
    }

    #[test]
    fn perfect_predictions() {
        let labels: Vec<Label> = Label::ALL.iter().flat_map(|l| [*l, *l]).collect();
        let r = metrics(&confusion(&labels, &labels).unwrap()).unwrap();
        assert!(r.per_label.0.iter().all(|m| m.f1 == 1.0));
        assert_eq!((r.macro_f1, r.weighted_f1), (1.0, 1.0));
    }

    #[test]
    fn hand_arithmetic_two_class_slice() {
        // Test (support 8) is always right; Requirement (support 10) too. A
        // third label with 4 examples supplies 2 false positives to each.
        let (a, b, c) = (Label::Test.index(), Label::Requirement.index(), Label::Scientific.index());
        let mut cm = ConfusionMatrix::default();
        cm.counts[a][a] = 8;
        cm.counts[b][b] = 10;
        cm.counts[c][a] = 2;
        cm.counts[c][b] = 2;
        let r = metrics(&cm).unwrap();
        let f1_a: f64 = 2.0 * 0.8 / 1.8;
        let f1_b: f64 = 2.0 * (10.0 / 12.0) / (1.0 + 10.0 / 12.0);
        assert!((f1_a - 0.888_888_888_9).abs() < 1e-9 && (f1_b - 0.909_090_909_1).abs() < 1e-9);
        assert!((r.per_label[Label::Test].f1 - f1_a).abs() < 1e-12);
        assert!((r.per_label[Label::Requirement].f1 - f1_b).abs() < 1e-12);
        // restricted to the two-label slice the weighted mean is (8 f1_a + 10 f1_b) / 18
        let slice = (8.0 * f1_a + 10.0 * f1_b) / 18.0;
        assert!((r.weighted_f1 * 22.0 / 18.0 - slice).abs() < 1e-12);
        assert!((r.macro_f1 - (f1_a + f1_b) / 6.0).abs() < 1e-12);
        // zero support and zero predictions
        assert_eq!(r.per_label[Label::Documentation], LabelMetrics::default());
    }

    fn brute_force(counts: &[[u64; 6]; 6]) -> (Vec<(f64, f64, f64)>, f64, f64) {
        let mut rows = Vec::new();
        let mut total = 0u64;
        let mut weighted = 0.0;
        for l in 0..6 {
            let mut tp = 0;
            let mut fp = 0;
            let mut fn_ = 0;
            for t in 0..6 {
                for p in 0..6 {
                    let c = counts[t][p];
                    if t == l && p == l {
                        tp += c;
                    } else if p == l {
                        fp += c;
                    } else if t == l {
                        fn_ += c;
                    }
                }
            }
            let prec = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
            let rec = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
            let f1 = if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) };
            rows.push((prec, rec, f1));
            total += tp + fn_;
            weighted += (tp + fn_) as f64 * f1;
        }
        let macro_f1 = rows.iter().map(|r| r.2).sum::<f64>() / 6.0;
        (rows, macro_f1, weighted / total as f64)
    }

    #[test]
    fn metrics_match_brute_force_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        let mut checked = 0;
        while checked < 200 {
            let mut cm = ConfusionMatrix::default();
            for row in &mut cm.counts {
                for c in row.iter_mut() {
                    *c = rng.random_range(0..=20);
                }
            }
            if cm.total() == 0 {
                continue;
            }
            let r = metrics(&cm).unwrap();
            let (rows, macro_f1, weighted) = brute_force(&cm.counts);
            for (l, (p, rc, f)) in rows.into_iter().enumerate() {
                let m = r.per_label.0[l];
                assert!((m.precision - p).abs() <= 1e-12);
                assert!((m.recall - rc).abs() <= 1e-12);
                assert!((m.f1 - f).abs() <= 1e-12);
            }
            assert!((r.macro_f1 - macro_f1).abs() <= 1e-12);
            assert!((r.weighted_f1 - weighted).abs() <= 1e-12);
            checked += 1;
        }
    }

    proptest! {
        #[test]
        fn metrics_are_bounded(counts in prop::array::uniform6(prop::array::uniform6(0u64..30))) {
            let cm = ConfusionMatrix { counts };
            prop_assume!(cm.total() > 0);
            let r = metrics(&cm).unwrap();
            for m in r.per_label.0 {
                prop_assert!((0.0..=1.0).contains(&m.precision));
                prop_assert!((0.0..=1.0).contains(&m.recall));
                prop_assert!((0.0..=1.0).contains(&m.f1));
            }
            prop_assert!((0.0..=1.0).contains(&r.macro_f1));
            prop_assert!((0.0..=1.0 + 1e-12).contains(&r.weighted_f1));
        }

        #[test]
        fn equal_supports_make_weighted_equal_macro(
            counts in prop::array::uniform6(prop::array::uniform5(0u64..10))
        ) {
            // complete each row so that every label has support 50
            let mut full = [[0u64; 6]; 6];
            for (t, row) in counts.iter().enumerate() {
                let used: u64 = row.iter().sum();
                for (p, c) in row.iter().enumerate() {
                    full[t][if p >= t { p + 1 } else { p }] = *c;
                }
                full[t][t] = 50 - used;
            }
            let r = metrics(&ConfusionMatrix { counts: full }).unwrap();
            prop_assert!((r.macro_f1 - r.weighted_f1).abs() < 1e-12);
        }

        #[test]
        fn scaling_supports_leaves_average_f1_unchanged(
            a in prop::array::uniform6(prop::array::uniform6(0u64..10)),
            b in prop::array::uniform6(prop::array::uniform6(0u64..10)),
            scale in 2u64..5,
        ) {
            let a = ConfusionMatrix { counts: a };
            let b = ConfusionMatrix { counts: b };
            prop_assume!(a.total() > 0 && b.total() > 0);
            let mut scaled = [a.clone(), b.clone()];
            for cm in &mut scaled {
                for c in cm.counts.iter_mut().flatten() {
                    *c *= scale;
                }
            }
            let plain = MetricsReport::average(&[metrics(&a).unwrap(), metrics(&b).unwrap()]).unwrap();
            let bigger = MetricsReport::average(&[metrics(&scaled[0]).unwrap(), metrics(&scaled[1]).unwrap()]).unwrap();
            prop_assert!((plain.macro_f1 - bigger.macro_f1).abs() < 1e-12);
            prop_assert!((plain.weighted_f1 - bigger.weighted_f1).abs() < 1e-12);
        }
    }

    #[test]
    fn average_is_elementwise_mean() {
        let a = metrics(&confusion(&[Label::Test, Label::Scientific], &[Label::Test, Label::Test]).unwrap()).unwrap();
        let b = metrics(&confusion(&[Label::Test], &[Label::Test]).unwrap()).unwrap();
        let avg = MetricsReport::average(&[a.clone(), b.clone()]).unwrap();
        assert!((avg.macro_f1 - (a.macro_f1 + b.macro_f1) / 2.0).abs() < 1e-12);
        assert!((avg.per_label[Label::Test].support - 1.0).abs() < 1e-12);
        assert!(MetricsReport::average(&[]).is_none());
    }

    #[test]
    fn markdown_column_order() {
        let r = metrics(&confusion(&[Label::Test], &[Label::Test]).unwrap()).unwrap();
        let md = r.to_markdown("ngram");
        let header = md.lines().next().unwrap();
        assert_eq!(
            header,
            "| Model | REQ | C/D | DOC | TES | SCI | Non-SATD | Macro Avg F1 | Weighted Avg F1 |"
        );
        assert_eq!(
            md.lines().nth(2).unwrap(),
            "| ngram | 0.0000 | 0.0000 | 0.0000 | 1.0000 | 0.0000 | 0.0000 | 0.1667 | 1.0000 |"
        );
    }
}
