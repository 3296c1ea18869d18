//! Evaluation reports and their text-table renderings.

use serde::{Deserialize, Serialize};

use crate::niosh::RiskLabel;

/// Accuracy and confusion counts for one evaluation. Confusion rows are true
/// classes and columns predicted classes, both in NR, IR, HR order;
/// accuracy is the diagonal total over the test size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub accuracy: f64,
    pub confusion: [[usize; 3]; 3],
    pub n_test: usize,
}

impl EvaluationReport {
    pub fn from_confusion(confusion: [[usize; 3]; 3]) -> Self {
        let n_test: usize = confusion.iter().flatten().sum();
        let trace: usize = (0..3).map(|i| confusion[i][i]).sum();
        EvaluationReport { accuracy: trace as f64 / n_test as f64, confusion, n_test }
    }
}

/// Aggregate over repeated stratified holdout splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub per_rep_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// max - min over the repetition accuracies.
    pub spread: f64,
    pub pooled_confusion: [[usize; 3]; 3],
    pub n_test_total: usize,
}

impl HoldoutReport {
    pub fn from_reports(reports: &[EvaluationReport]) -> Self {
        let per_rep: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
        let mean = per_rep.iter().sum::<f64>() / per_rep.len() as f64;
        let max = per_rep.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = per_rep.iter().copied().fold(f64::INFINITY, f64::min);
        let mut pooled = [[0usize; 3]; 3];
        let mut n_total = 0;
        for r in reports {
            n_total += r.n_test;
            for (row, src) in pooled.iter_mut().zip(&r.confusion) {
                for (cell, &v) in row.iter_mut().zip(src) {
                    *cell += v;
                }
            }
        }
        HoldoutReport {
            per_rep_accuracies: per_rep,
            mean_accuracy: mean,
            spread: max - min,
            pooled_confusion: pooled,
            n_test_total: n_total,
        }
    }
}

/// Confusion matrix as an aligned text table with NR/IR/HR rows and columns.
pub fn render_confusion_table(confusion: &[[usize; 3]; 3]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<22}{:>6}{:>6}{:>6}\n", "Risk Class", "NR", "IR", "HR"));
    for (i, label) in RiskLabel::ALL.iter().enumerate() {
        out.push_str(&format!(
            "{:<22}{:>6}{:>6}{:>6}\n",
            format!("{} ({})", label.display_name(), label.code()),
            confusion[i][0],
            confusion[i][1],
            confusion[i][2]
        ));
    }
    out
}

/// Accuracy grid (percent) with one row per window size and one column per
/// algorithm.
pub fn render_accuracy_table(
    window_labels: &[String],
    algorithm_names: &[String],
    accuracies: &[Vec<f64>],
) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<18}", "Window"));
    for name in algorithm_names {
        out.push_str(&format!("{:>16}", name));
    }
    out.push('\n');
    for (label, row) in window_labels.iter().zip(accuracies) {
        out.push_str(&format!("{:<18}", label));
        for acc in row {
            out.push_str(&format!("{:>16.2}", acc * 100.0));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_from_confusion() {
        let r = EvaluationReport::from_confusion([[34, 0, 0], [0, 22, 0], [0, 0, 50]]);
        assert_eq!(r.n_test, 106);
        assert_eq!(r.accuracy, 1.0);

        let constant = EvaluationReport::from_confusion([[34, 0, 0], [22, 0, 0], [50, 0, 0]]);
        assert_eq!(constant.n_test, 106);
        assert!((constant.accuracy - 34.0 / 106.0).abs() < 1e-12);
    }

    #[test]
    fn holdout_aggregation() {
        let reports = vec![
            EvaluationReport::from_confusion([[4, 1, 0], [0, 3, 0], [0, 0, 2]]),
            EvaluationReport::from_confusion([[5, 0, 0], [0, 3, 0], [0, 0, 2]]),
        ];
        let h = HoldoutReport::from_reports(&reports);
        assert_eq!(h.per_rep_accuracies, vec![0.9, 1.0]);
        assert!((h.mean_accuracy - 0.95).abs() < 1e-12);
        assert!((h.spread - 0.1).abs() < 1e-12);
        assert_eq!(h.pooled_confusion, [[9, 1, 0], [0, 6, 0], [0, 0, 4]]);
        assert_eq!(h.n_test_total, 20);
    }

    #[test]
    fn confusion_row_sums_match_true_counts() {
        let confusion = [[10, 2, 0], [1, 15, 3], [0, 0, 9]];
        let r = EvaluationReport::from_confusion(confusion);
        let row_sums: Vec<usize> = r.confusion.iter().map(|row| row.iter().sum()).collect();
        assert_eq!(row_sums, vec![12, 19, 9]);
    }

    #[test]
    fn confusion_table_layout() {
        let table = render_confusion_table(&[[34, 0, 0], [0, 19, 3], [0, 0, 50]]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].contains("NR") && lines[0].contains("HR"));
        assert!(lines[1].starts_with("Nominal Risk (NR)"));
        assert!(lines[2].contains("19") && lines[2].contains('3'));
        assert!(lines[3].trim_end().ends_with("50"));
    }

    #[test]
    fn accuracy_table_layout() {
        let table = render_accuracy_table(
            &["1s".into(), "0.5s".into()],
            &["decision_tree".into(), "svm".into()],
            &[vec![0.977, 0.9717], vec![0.9935, 0.989]],
        );
        assert!(table.contains("decision_tree"));
        assert!(table.contains("97.70"));
        assert!(table.contains("99.35"));
    }
}
