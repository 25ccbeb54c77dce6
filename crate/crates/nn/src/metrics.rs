//! Confusion matrices and macro-averaged classification metrics.

/// `counts[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Confusion {
    counts: Vec<Vec<u64>>,
}

/// Accuracy plus macro-averaged precision, recall and F1. A class with no
/// predictions has precision 0; a class with no samples has recall 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Confusion {
    pub fn new(n_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn from_pairs(n_classes: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut c = Self::new(n_classes);
        for (a, p) in pairs {
            c.record(a, p);
        }
        c
    }

    pub fn record(&mut self, actual: usize, predicted: usize) {
        self.counts[actual][predicted] += 1;
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn predicted_count(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }

    pub fn actual_count(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    /// Classes that occur in the data but are never predicted.
    pub fn never_predicted(&self) -> Vec<usize> {
        (0..self.n_classes())
            .filter(|&c| self.predicted_count(c) == 0 && self.actual_count(c) > 0)
            .collect()
    }

    pub fn precision(&self, class: usize) -> f64 {
        ratio(self.counts[class][class], self.predicted_count(class))
    }

    pub fn recall(&self, class: usize) -> f64 {
        ratio(self.counts[class][class], self.actual_count(class))
    }

    pub fn metrics(&self) -> Metrics {
        let k = self.n_classes().max(1) as f64;
        let correct: u64 = (0..self.n_classes()).map(|c| self.counts[c][c]).sum();
        let precision = (0..self.n_classes()).map(|c| self.precision(c)).sum::<f64>() / k;
        let recall = (0..self.n_classes()).map(|c| self.recall(c)).sum::<f64>() / k;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            accuracy: ratio(correct, self.total()),
            precision,
            recall,
            f1,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_example() {
        // actual: 0 0 0 1 1 2 ; predicted: 0 0 1 1 1 1
        let c = Confusion::from_pairs(3, [(0, 0), (0, 0), (0, 1), (1, 1), (1, 1), (2, 1)]);
        let m = c.metrics();
        assert!((m.accuracy - 4.0 / 6.0).abs() < 1e-15);
        // precision: 1, 2/4, 0 ; recall: 2/3, 1, 0
        assert!((m.precision - 0.5).abs() < 1e-15);
        assert!((m.recall - (2.0 / 3.0 + 1.0) / 3.0).abs() < 1e-15);
        assert_eq!(c.never_predicted(), vec![2]);
    }

    #[test]
    fn perfect_predictions() {
        let c = Confusion::from_pairs(2, [(0, 0), (1, 1)]);
        let m = c.metrics();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn empty_matrix_is_all_zero() {
        let m = Confusion::new(3).metrics();
        assert_eq!((m.accuracy, m.precision, m.recall), (0.0, 0.0, 0.0));
    }
}
