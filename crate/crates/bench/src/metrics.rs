//! Evaluation metrics.

use ndarray::ArrayView2;

/// `√((1/d) ‖β̂ − β*‖²)`; at `d = 2` this is `√(½‖β̂ − β*‖²)`.
pub fn rmsd(estimate: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(estimate.len(), truth.len(), "dimension mismatch");
    let ss: f64 = estimate.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    (ss / estimate.len() as f64).sqrt()
}

/// Root mean squared error over all entries.
pub fn rmse(predictions: ArrayView2<f64>, targets: ArrayView2<f64>) -> f64 {
    assert_eq!(predictions.dim(), targets.dim(), "shape mismatch");
    let ss: f64 = predictions.iter().zip(targets.iter()).map(|(p, t)| (p - t) * (p - t)).sum();
    (ss / predictions.len() as f64).sqrt()
}

/// Fraction of matching labels.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(predicted.len(), truth.len(), "length mismatch");
    if predicted.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / predicted.len() as f64
}
