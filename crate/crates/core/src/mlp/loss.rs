use super::matrix::Matrix;
use crate::Scalar;

/// Numerically stable softmax of one row.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Mean cross-entropy over the batch and its gradient with respect to the
/// logits, `(softmax − one_hot) / n`.
pub fn softmax_cross_entropy<T: Scalar>(logits: &Matrix<T>, labels: &[usize]) -> (T, Matrix<T>) {
    assert_eq!(logits.rows(), labels.len(), "one label per logit row");
    let n = T::from_usize_lossy(labels.len());
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    let mut total = T::zero();
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let log_sum = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
        total = total + log_sum - (row[label] - max);
        for (c, g) in grad.row_mut(r).iter_mut().enumerate() {
            let p = (row[c] - max - log_sum).exp();
            let target = if c == label { T::one() } else { T::zero() };
            *g = (p - target) / n;
        }
    }
    (total / n, grad)
}
