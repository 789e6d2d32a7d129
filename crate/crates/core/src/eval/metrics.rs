use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::data::Label;

/// Binary confusion counts with `Metaphor` as the positive class.
/// Unparseable answers are kept apart and count as incorrect.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub unparseable: usize,
}

impl ConfusionMatrix {
    pub fn record(&mut self, gold: Label, predicted: Option<Label>) {
        match (gold, predicted) {
            (_, None) => self.unparseable += 1,
            (Label::Metaphor, Some(Label::Metaphor)) => self.tp += 1,
            (Label::Literal, Some(Label::Metaphor)) => self.fp += 1,
            (Label::Metaphor, Some(Label::Literal)) => self.fn_ += 1,
            (Label::Literal, Some(Label::Literal)) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn + self.unparseable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy, precision, recall and F1; every zero denominator yields 0.
pub fn compute_metrics(c: &ConfusionMatrix) -> Result<Metrics, EvalError> {
    let total = c.total();
    if total == 0 {
        return Err(EvalError::EmptyConfusion);
    }
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Metrics {
        accuracy: ratio(c.tp + c.tn, total),
        precision,
        recall,
        f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(tp: usize, fp: usize, fn_: usize, tn: usize, unparseable: usize) -> ConfusionMatrix {
        ConfusionMatrix {
            tp,
            fp,
            fn_,
            tn,
            unparseable,
        }
    }

    #[test]
    fn hand_computed() {
        // acc 7/10, P 3/4, R 3/5, F1 = 2*.75*.6/1.35 = 2/3
        let m = compute_metrics(&cm(3, 1, 2, 4, 0)).unwrap();
        assert!((m.accuracy - 0.7).abs() < 1e-15);
        assert!((m.precision - 0.75).abs() < 1e-15);
        assert!((m.recall - 0.6).abs() < 1e-15);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_denominators() {
        let m = compute_metrics(&cm(0, 0, 5, 5, 0)).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert_eq!(m.accuracy, 0.5);
    }

    #[test]
    fn perfect() {
        let m = compute_metrics(&cm(5, 0, 0, 5, 0)).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn unparseable_only_in_accuracy_denominator() {
        let m = compute_metrics(&cm(2, 0, 0, 2, 4)).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
    }

    #[test]
    fn empty() {
        assert!(matches!(compute_metrics(&ConfusionMatrix::default()), Err(EvalError::EmptyConfusion)));
    }

    #[test]
    fn serde_names() {
        let json = serde_json::to_string(&cm(1, 2, 3, 4, 5)).unwrap();
        assert_eq!(json, r#"{"tp":1,"fp":2,"fn":3,"tn":4,"unparseable":5}"#);
    }
}
