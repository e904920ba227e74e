//! Information-theoretic-learning losses written as ELN instances.

use serde::{Deserialize, Serialize};

use crate::eln::{ElnModel, Node};
use crate::error::{invalid, Error, Result};
use crate::kernels::RadialBasis;
use crate::pdf_match::nearest;
use crate::scalar::Scalar;

/// Maximum correntropy: `l(e) = −G_σ(e)`.
pub fn make_mcc<T: Scalar>(sigma: T) -> Result<ElnModel<T>> {
    make_mcc_vc(sigma, T::zero())
}

/// Correntropy with a variable center: `l(e) = −G_σ(e − c)`.
pub fn make_mcc_vc<T: Scalar>(sigma: T, center: T) -> Result<ElnModel<T>> {
    ElnModel::single(RadialBasis::gaussian(center, sigma)?, -T::one())
}

/// Generalized correntropy: `l(e) = −exp(−λ|e|^α)`.
pub fn make_gmcc<T: Scalar>(alpha: T, lambda: T) -> Result<ElnModel<T>> {
    ElnModel::single(RadialBasis::generalized_gaussian(alpha, lambda)?, -T::one())
}

/// Kernel risk-sensitive loss: `l(e) = exp(λ(1 − G_σ(e))) / λ`.
pub fn make_krsl<T: Scalar>(lambda: T, sigma: T) -> Result<ElnModel<T>> {
    ElnModel::single(RadialBasis::risk_sensitive(lambda, sigma)?, T::one() / lambda)
}

/// Kernel mean p-power error: `l(e) = (1 − G_σ(e))^(p/2)`.
pub fn make_kmpe<T: Scalar>(p: T, sigma: T) -> Result<ElnModel<T>> {
    ElnModel::single(RadialBasis::kernel_p_power(p, sigma)?, T::one())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmccType {
    /// Two Gaussians of widths σ1, σ2.
    Gaussian,
    /// Gaussian of width σ1 and Laplacian of width σ2.
    Laplacian,
}

/// Mixture correntropy with weights `(−α, α − 1)`.
pub fn make_mmcc<T: Scalar>(sigma1: T, sigma2: T, alpha: T, kind: MmccType) -> Result<ElnModel<T>> {
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(invalid(format!("mixture coefficient must lie in [0, 1], got {alpha}")));
    }
    let second = match kind {
        MmccType::Gaussian => RadialBasis::gaussian(T::zero(), sigma2)?,
        MmccType::Laplacian => RadialBasis::laplacian(T::zero(), sigma2)?,
    };
    ElnModel::new(vec![
        Node::new(RadialBasis::gaussian(T::zero(), sigma1)?, -alpha),
        Node::new(second, alpha - T::one()),
    ])
}

/// Minimum error entropy: one node per sample, width `√2 σ`, weight `−1/N`.
///
/// Its empirical loss is the negated quadratic information potential
/// `−(1/N²) Σ_i Σ_j G_{√2σ}(e_i − e_j)`.
pub fn make_mee<T: Scalar>(errors: &[T], sigma: T) -> Result<ElnModel<T>> {
    if errors.is_empty() {
        return Err(Error::EmptyInput("error sample"));
    }
    let width = T::of(2.0).sqrt() * sigma;
    let theta = -T::one() / T::of(errors.len() as f64);
    ElnModel::new(
        errors
            .iter()
            .map(|&e| Ok(Node::new(RadialBasis::gaussian(e, width)?, theta)))
            .collect::<Result<_>>()?,
    )
}

/// Codebook built by online vector quantization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerState<T> {
    pub codebook: Vec<T>,
    pub counts: Vec<usize>,
}

impl<T> QuantizerState<T> {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Single pass in sample order: a sample joins its nearest center when within
/// `threshold`, otherwise it opens a new center. Ties go to the earlier center.
pub fn ovq_quantize<T: Scalar>(errors: &[T], threshold: T) -> Result<QuantizerState<T>> {
    if !(threshold >= T::zero()) {
        return Err(invalid(format!("quantization threshold must be ≥ 0, got {threshold}")));
    }
    let mut state = QuantizerState { codebook: Vec::new(), counts: Vec::new() };
    for &e in errors {
        if state.codebook.is_empty() {
            state.codebook.push(e);
            state.counts.push(1);
            continue;
        }
        let j = nearest(&state.codebook, e);
        if (e - state.codebook[j]).abs() <= threshold {
            state.counts[j] += 1;
        } else {
            state.codebook.push(e);
            state.counts.push(1);
        }
    }
    Ok(state)
}

/// Quantized MEE: nodes at the codebook centers, width σ, weights `−M_i/N`.
pub fn make_qmee<T: Scalar>(errors: &[T], sigma: T, threshold: T) -> Result<ElnModel<T>> {
    if errors.is_empty() {
        return Err(Error::EmptyInput("error sample"));
    }
    let q = ovq_quantize(errors, threshold)?;
    let n = T::of(errors.len() as f64);
    ElnModel::new(
        q.codebook
            .iter()
            .zip(&q.counts)
            .map(|(&c, &m)| Ok(Node::new(RadialBasis::gaussian(c, sigma)?, -T::of(m as f64) / n)))
            .collect::<Result<_>>()?,
    )
}

/// Three Gaussians at 0, −1, +1 with weights `−M_k/N`.
pub fn make_rmee<T: Scalar>(sigma: T, m1: usize, m2: usize, m3: usize, n: usize) -> Result<ElnModel<T>> {
    if n == 0 {
        return Err(invalid("sample count N must be ≥ 1"));
    }
    let nf = T::of(n as f64);
    let w = |m: usize| -T::of(m as f64) / nf;
    ElnModel::new(vec![
        Node::new(RadialBasis::gaussian(T::zero(), sigma)?, w(m1)),
        Node::new(RadialBasis::gaussian(-T::one(), sigma)?, w(m2)),
        Node::new(RadialBasis::gaussian(T::one(), sigma)?, w(m3)),
    ])
}

/// Multi-kernel correntropy: `M ≥ 2` Gaussians with weights `−λ_i`.
pub fn make_mmkcc<T: Scalar>(centers: &[T], widths: &[T], lambdas: &[T]) -> Result<ElnModel<T>> {
    if centers.len() < 2 {
        return Err(invalid("multi-kernel correntropy needs M ≥ 2 kernels"));
    }
    if widths.len() != centers.len() {
        return Err(Error::DimensionMismatch { expected: centers.len(), got: widths.len() });
    }
    if lambdas.len() != centers.len() {
        return Err(Error::DimensionMismatch { expected: centers.len(), got: lambdas.len() });
    }
    ElnModel::new(
        centers
            .iter()
            .zip(widths)
            .zip(lambdas)
            .map(|((&c, &w), &l)| Ok(Node::new(RadialBasis::gaussian(c, w)?, -l)))
            .collect::<Result<_>>()?,
    )
}

/// Weighted mixture `Σ_k w_k l_k(e)` as a single ELN.
pub fn combine<T: Scalar>(models: &[ElnModel<T>], weights: &[T]) -> Result<ElnModel<T>> {
    if models.is_empty() {
        return Err(Error::EmptyInput("models to combine"));
    }
    if models.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: models.len(), got: weights.len() });
    }
    let mut nodes = Vec::new();
    for (m, &w) in models.iter().zip(weights) {
        nodes.extend(m.nodes().iter().map(|n| Node::new(n.basis, n.theta * w)));
    }
    ElnModel::new(nodes)
}
