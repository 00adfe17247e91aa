use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `counts[i][j]`: posts of true class `i` predicted as `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn true_positives(&self, class: usize) -> u64 {
        self.counts[class][class]
    }

    pub fn false_positives(&self, class: usize) -> u64 {
        (0..self.classes).filter(|&i| i != class).map(|i| self.counts[i][class]).sum()
    }

    pub fn false_negatives(&self, class: usize) -> u64 {
        (0..self.classes).filter(|&j| j != class).map(|j| self.counts[class][j]).sum()
    }
}

pub fn confusion_counts(predictions: &[usize], labels: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(Error::Config(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut m = ConfusionMatrix::zeros(classes);
    for (&p, &l) in predictions.iter().zip(labels) {
        if p >= classes || l >= classes {
            return Err(Error::Config(format!("class index outside 0..{classes}")));
        }
        m.counts[l][p] += 1;
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn precision_recall_f1(counts: &ConfusionMatrix, class: usize) -> Prf {
    let tp = counts.true_positives(class);
    let precision = ratio(tp, tp + counts.false_positives(class));
    let recall = ratio(tp, tp + counts.false_negatives(class));
    Prf {
        precision,
        recall,
        f1: f1_score(precision, recall),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_are_diagonal() {
        let labels = [0, 1, 1, 2, 0, 1];
        let m = confusion_counts(&labels, &labels, 3).unwrap();
        assert_eq!(m.counts, vec![vec![2, 0, 0], vec![0, 3, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn hand_tally() {
        let labels = [0, 0, 1, 1, 1, 0];
        let preds = [0, 1, 1, 0, 1, 0];
        let m = confusion_counts(&preds, &labels, 2).unwrap();
        assert_eq!(m.counts, vec![vec![2, 1], vec![1, 2]]);
        assert_eq!(m.total(), 6);
    }

    #[test]
    fn empty_and_mismatched() {
        assert_eq!(confusion_counts(&[], &[], 2).unwrap(), ConfusionMatrix::zeros(2));
        assert!(confusion_counts(&[0], &[0, 1], 2).is_err());
    }

    #[test]
    fn prf_examples() {
        let mut m = ConfusionMatrix::zeros(2);
        m.counts[1][1] = 10;
        let r = precision_recall_f1(&m, 1);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));

        // TP=3, FP=1, FN=2
        m.counts = vec![vec![0, 1], vec![2, 3]];
        let r = precision_recall_f1(&m, 1);
        assert_eq!(r.precision, 0.75);
        assert_eq!(r.recall, 0.6);
        assert!((r.f1 - 0.6667).abs() < 1e-4);

        let r = precision_recall_f1(&ConfusionMatrix::zeros(2), 1);
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn reported_precision_recall_give_reported_f1() {
        let f1 = f1_score(0.91, 0.98);
        assert!((f1 - 1.7836 / 1.89).abs() < 1e-12);
        assert_eq!(format!("{f1:.2}"), "0.94");
    }
}
