//! Synthetic label noise.

use eln_core::rng::seeded;
use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Each class flips to the next one (mod C) with probability ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelNoiseSpec {
    pub epsilon: f64,
    pub classes: usize,
}

impl LabelNoiseSpec {
    pub fn new(epsilon: f64, classes: usize) -> Result<Self> {
        let spec = Self { epsilon, classes };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(invalid("label noise rate must lie in [0, 1]"));
        }
        if self.classes < 2 {
            return Err(invalid("need at least two classes"));
        }
        Ok(())
    }

    /// Row-stochastic transition matrix `Q[i][j] = P(noisy = j | clean = i)`.
    pub fn transition_matrix(&self) -> Array2<f64> {
        let c = self.classes;
        let mut q = Array2::zeros((c, c));
        for i in 0..c {
            q[[i, i]] += 1.0 - self.epsilon;
            q[[i, (i + 1) % c]] += self.epsilon;
        }
        q
    }
}

pub fn apply_label_noise(labels: &[usize], spec: &LabelNoiseSpec, seed: u64) -> Result<Vec<usize>> {
    spec.validate()?;
    if let Some(&bad) = labels.iter().find(|&&l| l >= spec.classes) {
        return Err(invalid(format!("label {bad} outside [0, {})", spec.classes)));
    }
    let mut rng = seeded(seed);
    Ok(labels
        .iter()
        .map(|&l| if rng.random::<f64>() < spec.epsilon { (l + 1) % spec.classes } else { l })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes() {
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let none = apply_label_noise(&labels, &LabelNoiseSpec::new(0.0, 3).unwrap(), 1).unwrap();
        assert_eq!(none, labels);
        let all = apply_label_noise(&labels, &LabelNoiseSpec::new(1.0, 3).unwrap(), 1).unwrap();
        assert!(all.iter().zip(&labels).all(|(n, c)| *n == (c + 1) % 3));
    }

    #[test]
    fn transition_rows_sum_to_one() {
        for c in 2..6 {
            let q = LabelNoiseSpec::new(0.3, c).unwrap().transition_matrix();
            for row in q.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(LabelNoiseSpec::new(1.5, 2).is_err());
        assert!(LabelNoiseSpec::new(0.1, 1).is_err());
        let spec = LabelNoiseSpec::new(0.1, 2).unwrap();
        assert!(apply_label_noise(&[0, 2], &spec, 0).is_err());
    }
}
