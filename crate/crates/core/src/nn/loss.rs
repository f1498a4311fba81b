use ndarray::{Array2, ArrayView2, Axis};

/// Training objective for [`super::train_step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// Mean squared error over every output element of the activated output.
    Mse,
    /// Softmax cross-entropy on the final-layer logits, averaged over the batch.
    /// The final activation is bypassed; with a sigmoid head the argmax of the
    /// reported outputs and of the logits coincide.
    CrossEntropy,
}

/// Returns the mean squared error and its gradient w.r.t. `output`.
pub fn mse(output: ArrayView2<f64>, target: ArrayView2<f64>) -> (f64, Array2<f64>) {
    let n = output.len().max(1) as f64;
    let diff = &output - &target;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    (loss, diff * (2.0 / n))
}

/// Row-wise numerically stable softmax.
pub fn softmax(logits: ArrayView2<f64>) -> Array2<f64> {
    let mut p = logits.to_owned();
    for mut row in p.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    p
}

/// Mean softmax cross-entropy of `logits` against category indices and its
/// gradient w.r.t. the logits.
pub fn softmax_cross_entropy(logits: ArrayView2<f64>, categories: &[usize]) -> (f64, Array2<f64>) {
    debug_assert_eq!(logits.nrows(), categories.len());
    let n = logits.nrows().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros(logits.raw_dim());
    for ((row, mut g), &c) in logits
        .axis_iter(Axis(0))
        .zip(grad.axis_iter_mut(Axis(0)))
        .zip(categories)
    {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        loss += log_sum - row[c];
        for (j, gv) in g.iter_mut().enumerate() {
            *gv = (row[j] - log_sum).exp() / n;
        }
        g[c] -= 1.0 / n;
    }
    (loss / n, grad)
}
