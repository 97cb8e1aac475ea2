//! Multi-label sigmoid cross-entropy, thresholding, per-attribute accuracy
//! and the majority-class baseline.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Binary labels for a batch, with an optional per-entry presence mask for
/// datasets with missing labels (1 = label present).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<u8>,
    pub mask: Vec<u8>,
}

impl LabelMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<u8>) -> Result<Self> {
        let mask = vec![1u8; rows * cols];
        Self::with_mask(rows, cols, values, mask)
    }

    pub fn with_mask(rows: usize, cols: usize, values: Vec<u8>, mask: Vec<u8>) -> Result<Self> {
        if values.len() != rows * cols || mask.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "label matrix {}x{} needs {} entries, got {} values / {} mask",
                rows,
                cols,
                rows * cols,
                values.len(),
                mask.len()
            )));
        }
        if values.iter().any(|&v| v > 1) || mask.iter().any(|&v| v > 1) {
            return Err(Error::Data("labels and mask must be 0 or 1".into()));
        }
        Ok(LabelMatrix {
            rows,
            cols,
            values,
            mask,
        })
    }

    pub fn value(&self, row: usize, col: usize) -> u8 {
        self.values[row * self.cols + col]
    }

    pub fn present(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.cols + col] == 1
    }
}

fn sigmoid<T: Scalar>(s: T) -> T {
    if s >= T::zero() {
        T::one() / (T::one() + (-s).exp())
    } else {
        let e = s.exp();
        e / (T::one() + e)
    }
}

/// Mean-over-batch sigmoid cross-entropy and its gradient w.r.t. the scores.
///
/// Per masked entry the numerically stable form
/// max(s,0) - s*y + ln(1 + exp(-|s|)) is summed, divided by the batch size
/// N; the gradient is (sigmoid(s) - y)/N on masked entries and 0 elsewhere.
pub fn sigmoid_ce<T: Scalar>(scores: &Tensor<T>, labels: &LabelMatrix) -> Result<(T, Tensor<T>)> {
    if scores.shape() != [labels.rows, labels.cols] {
        return Err(Error::Dimension(format!(
            "scores shape {:?} vs labels {}x{}",
            scores.shape(),
            labels.rows,
            labels.cols
        )));
    }
    let n = T::of_f64(labels.rows as f64);
    let inv_n = T::one() / n;
    let mut loss = T::zero();
    let mut grad = Tensor::zeros(scores.shape());
    for (i, (&s, g)) in scores
        .data()
        .iter()
        .zip(grad.data_mut().iter_mut())
        .enumerate()
    {
        if labels.mask[i] == 0 {
            continue;
        }
        let y = T::of_f64(labels.values[i] as f64);
        let pos = if s > T::zero() { s } else { T::zero() };
        loss += pos - s * y + (T::one() + (-s.abs()).exp()).ln();
        *g = (sigmoid(s) - y) * inv_n;
    }
    Ok((loss * inv_n, grad))
}

/// Binary predictions: 1 iff score >= 0 (sigmoid >= 0.5). A score of
/// exactly zero thresholds to positive.
pub fn threshold<T: Scalar>(scores: &Tensor<T>) -> Vec<u8> {
    scores
        .data()
        .iter()
        .map(|&s| u8::from(s >= T::zero()))
        .collect()
}

/// Fraction of masked rows where prediction equals label, per attribute.
/// Attributes with no masked rows report `None`.
pub fn accuracy(predictions: &[u8], labels: &LabelMatrix) -> Result<Vec<Option<f64>>> {
    if predictions.len() != labels.rows * labels.cols {
        return Err(Error::Dimension(format!(
            "predictions have {} entries, labels are {}x{}",
            predictions.len(),
            labels.rows,
            labels.cols
        )));
    }
    let mut hits = vec![0usize; labels.cols];
    let mut counts = vec![0usize; labels.cols];
    for row in 0..labels.rows {
        for col in 0..labels.cols {
            let i = row * labels.cols + col;
            if labels.mask[i] == 0 {
                continue;
            }
            counts[col] += 1;
            if predictions[i] == labels.values[i] {
                hits[col] += 1;
            }
        }
    }
    Ok(hits
        .iter()
        .zip(&counts)
        .map(|(&h, &c)| (c > 0).then(|| h as f64 / c as f64))
        .collect())
}

/// Majority label per attribute from the train split, scored on the test
/// split. Ties in the train counts break toward label 0.
pub fn majority_baseline(train: &LabelMatrix, test: &LabelMatrix) -> Result<Vec<Option<f64>>> {
    if train.cols != test.cols {
        return Err(Error::Dimension(format!(
            "train has {} attributes, test has {}",
            train.cols, test.cols
        )));
    }
    let mut out = Vec::with_capacity(train.cols);
    for col in 0..train.cols {
        let mut ones = 0usize;
        let mut total = 0usize;
        for row in 0..train.rows {
            if train.present(row, col) {
                total += 1;
                ones += train.value(row, col) as usize;
            }
        }
        if total == 0 {
            out.push(None);
            continue;
        }
        let majority = u8::from(ones * 2 > total);
        let mut hits = 0usize;
        let mut count = 0usize;
        for row in 0..test.rows {
            if test.present(row, col) {
                count += 1;
                if test.value(row, col) == majority {
                    hits += 1;
                }
            }
        }
        out.push((count > 0).then(|| hits as f64 / count as f64));
    }
    Ok(out)
}

/// Per-attribute evaluation results.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub attributes: Vec<String>,
    pub per_attribute_accuracy: Vec<Option<f64>>,
    pub baseline_accuracy: Vec<Option<f64>>,
    pub mean_accuracy: f64,
    pub loss: f64,
}

fn csv_cell(v: &Option<f64>) -> String {
    match v {
        Some(x) => format!("{}", x),
        None => "NA".to_string(),
    }
}

impl MetricsReport {
    /// CSV layout: header row of attribute names, then an accuracy row and
    /// a baseline row, each tagged in the first column.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str("attribute");
        for name in &self.attributes {
            s.push(',');
            s.push_str(name);
        }
        s.push('\n');
        s.push_str("accuracy");
        for v in &self.per_attribute_accuracy {
            s.push(',');
            s.push_str(&csv_cell(v));
        }
        s.push('\n');
        s.push_str("baseline");
        for v in &self.baseline_accuracy {
            s.push(',');
            s.push_str(&csv_cell(v));
        }
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{rand_init, InitScheme};

    fn scores(shape: &[usize], data: Vec<f64>) -> Tensor<f64> {
        Tensor::from_vec(shape, data).unwrap()
    }

    /// Independent oracle: direct per-element formula in a scalar loop.
    fn ce_oracle(s: &Tensor<f64>, labels: &LabelMatrix) -> f64 {
        let mut total = 0.0;
        for row in 0..labels.rows {
            for col in 0..labels.cols {
                if !labels.present(row, col) {
                    continue;
                }
                let sv = s.get2(row, col);
                let y = labels.value(row, col) as f64;
                let p = 1.0 / (1.0 + (-sv).exp());
                total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
            }
        }
        total / labels.rows as f64
    }

    #[test]
    fn ce_at_zero_score() {
        let labels = LabelMatrix::new(1, 1, vec![1]).unwrap();
        let (loss, grad) = sigmoid_ce(&scores(&[1, 1], vec![0.0]), &labels).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((grad.data()[0] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn ce_saturated_positive() {
        let labels = LabelMatrix::new(1, 1, vec![1]).unwrap();
        let (loss, grad) = sigmoid_ce(&scores(&[1, 1], vec![50.0]), &labels).unwrap();
        assert!(loss < 1e-9);
        assert!(grad.data()[0].abs() < 1e-9);
    }

    #[test]
    fn ce_matches_scalar_loop_oracle_and_finite_differences() {
        let labels = LabelMatrix::new(3, 4, vec![1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 0]).unwrap();
        let s: Tensor<f64> = rand_init(&[3, 4], InitScheme::Gaussian(2.0), 31);
        let (loss, grad) = sigmoid_ce(&s, &labels).unwrap();
        assert!((loss - ce_oracle(&s, &labels)).abs() < 1e-12);
        let eps = 1e-6;
        for i in 0..s.len() {
            let mut probe = s.clone();
            probe.data_mut()[i] += eps;
            let up = sigmoid_ce(&probe, &labels).unwrap().0;
            probe.data_mut()[i] -= 2.0 * eps;
            let down = sigmoid_ce(&probe, &labels).unwrap().0;
            let numeric = (up - down) / (2.0 * eps);
            assert!(
                (grad.data()[i] - numeric).abs() < 1e-8,
                "entry {}: {} vs {}",
                i,
                grad.data()[i],
                numeric
            );
        }
    }

    #[test]
    fn ce_masked_entries_contribute_nothing() {
        let full = LabelMatrix::new(2, 2, vec![1, 0, 1, 0]).unwrap();
        let masked =
            LabelMatrix::with_mask(2, 2, vec![1, 0, 1, 0], vec![1, 0, 1, 1]).unwrap();
        let s = scores(&[2, 2], vec![0.3, -0.7, 1.1, 0.2]);
        let (full_loss, _) = sigmoid_ce(&s, &full).unwrap();
        let (masked_loss, grad) = sigmoid_ce(&s, &masked).unwrap();
        assert!(masked_loss < full_loss);
        assert_eq!(grad.data()[1], 0.0);
    }

    #[test]
    fn ce_is_nonnegative() {
        for seed in 0..10 {
            let s: Tensor<f64> = rand_init(&[4, 5], InitScheme::Gaussian(3.0), seed);
            let values: Vec<u8> = (0..20).map(|i| ((i * 7 + seed as usize) % 2) as u8).collect();
            let labels = LabelMatrix::new(4, 5, values).unwrap();
            let (loss, _) = sigmoid_ce(&s, &labels).unwrap();
            assert!(loss >= 0.0);
        }
    }

    #[test]
    fn ce_rejects_bad_labels() {
        assert!(matches!(
            LabelMatrix::new(1, 2, vec![0, 2]),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn threshold_conventions() {
        let s = scores(&[1, 3], vec![0.0, -3.2, 0.1]);
        assert_eq!(threshold(&s), vec![1, 0, 1]);
    }

    #[test]
    fn threshold_invariant_under_positive_scaling() {
        let s: Tensor<f64> = rand_init(&[5, 8], InitScheme::Gaussian(1.0), 77);
        let base = threshold(&s);
        for c in [0.5, 2.0, 1e6] {
            let scaled = s.map(|v| v * c);
            assert_eq!(threshold(&scaled), base);
        }
    }

    #[test]
    fn accuracy_perfect_and_partial() {
        let labels = LabelMatrix::new(2, 2, vec![1, 0, 0, 1]).unwrap();
        let all = accuracy(&[1, 0, 0, 1], &labels).unwrap();
        assert_eq!(all, vec![Some(1.0), Some(1.0)]);

        let labels5 = LabelMatrix::new(5, 1, vec![1, 1, 0, 0, 1]).unwrap();
        let acc = accuracy(&[1, 1, 0, 1, 0], &labels5).unwrap();
        assert_eq!(acc, vec![Some(0.6)]);
    }

    #[test]
    fn accuracy_matches_counting_oracle() {
        let mut rng_state = 88u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 33) as usize
        };
        let (n, a) = (50, 40);
        let values: Vec<u8> = (0..n * a).map(|_| (next() % 2) as u8).collect();
        let preds: Vec<u8> = (0..n * a).map(|_| (next() % 2) as u8).collect();
        let labels = LabelMatrix::new(n, a, values.clone()).unwrap();
        let acc = accuracy(&preds, &labels).unwrap();
        for col in 0..a {
            let mut hits = 0;
            for row in 0..n {
                if preds[row * a + col] == values[row * a + col] {
                    hits += 1;
                }
            }
            assert_eq!(acc[col], Some(hits as f64 / n as f64));
        }
    }

    #[test]
    fn accuracy_undefined_when_column_fully_masked() {
        let labels =
            LabelMatrix::with_mask(2, 2, vec![1, 0, 0, 1], vec![1, 0, 1, 0]).unwrap();
        let acc = accuracy(&[1, 0, 0, 1], &labels).unwrap();
        assert_eq!(acc[1], None);
        assert_eq!(acc[0], Some(1.0));
    }

    #[test]
    fn baseline_example_and_tie_rule() {
        let train = LabelMatrix::new(3, 1, vec![1, 1, 0]).unwrap();
        let test = LabelMatrix::new(4, 1, vec![1, 0, 1, 1]).unwrap();
        assert_eq!(majority_baseline(&train, &test).unwrap(), vec![Some(0.75)]);

        // balanced train column: tie breaks toward label 0
        let tied = LabelMatrix::new(4, 1, vec![1, 1, 0, 0]).unwrap();
        let test0 = LabelMatrix::new(2, 1, vec![0, 1]).unwrap();
        assert_eq!(majority_baseline(&tied, &test0).unwrap(), vec![Some(0.5)]);
        let test_all0 = LabelMatrix::new(2, 1, vec![0, 0]).unwrap();
        assert_eq!(
            majority_baseline(&tied, &test_all0).unwrap(),
            vec![Some(1.0)]
        );
    }

    #[test]
    fn baseline_at_least_half_when_distributions_match() {
        // test split identical to train split: the majority class is at
        // least half of it by definition
        for seed in 0..5u64 {
            let mut x = seed.wrapping_add(3);
            let mut next = || {
                x = x.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
                ((x >> 40) % 100) as u8
            };
            let values: Vec<u8> = (0..60).map(|_| u8::from(next() < 70)).collect();
            let labels = LabelMatrix::new(20, 3, values).unwrap();
            let base = majority_baseline(&labels, &labels).unwrap();
            for b in base {
                assert!(b.unwrap() >= 0.5);
            }
        }
    }

    #[test]
    fn metrics_csv_layout() {
        let report = MetricsReport {
            attributes: vec!["A".into(), "B".into()],
            per_attribute_accuracy: vec![Some(0.5), None],
            baseline_accuracy: vec![Some(0.75), Some(1.0)],
            mean_accuracy: 0.5,
            loss: 0.1,
        };
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "attribute,A,B");
        assert_eq!(lines[1], "accuracy,0.5,NA");
        assert_eq!(lines[2], "baseline,0.75,1");
    }
}
