//! The error loss network: `l(e) = Σ_j θ_j φ_j(e)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{gaussian, RadialBasis};
use crate::scalar::Scalar;

/// A basis function together with its output weight θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node<T> {
    #[serde(flatten)]
    pub basis: RadialBasis<T>,
    pub theta: T,
}

impl<T> Node<T> {
    pub fn new(basis: RadialBasis<T>, theta: T) -> Self {
        Self { basis, theta }
    }
}

/// An ordered list of weighted basis nodes, `M ≥ 1`.
///
/// The JSON form is `{"nodes":[{"kind":…,"params":{…},"theta":…}, …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel<T>", bound(deserialize = "T: Scalar"))]
pub struct ElnModel<T> {
    nodes: Vec<Node<T>>,
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
struct RawModel<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> TryFrom<RawModel<T>> for ElnModel<T> {
    type Error = Error;

    fn try_from(raw: RawModel<T>) -> Result<Self> {
        Self::new(raw.nodes)
    }
}

impl<T: Scalar> ElnModel<T> {
    pub fn new(nodes: Vec<Node<T>>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyInput("an ELN needs at least one node"));
        }
        for n in &nodes {
            n.basis.validate()?;
            if !n.theta.is_finite() {
                return Err(invalid(format!("node weight must be finite, got {}", n.theta)));
            }
        }
        Ok(Self { nodes })
    }

    pub fn single(basis: RadialBasis<T>, theta: T) -> Result<Self> {
        Self::new(vec![Node::new(basis, theta)])
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn thetas(&self) -> Vec<T> {
        self.nodes.iter().map(|n| n.theta).collect()
    }

    pub fn is_all_gaussian(&self) -> bool {
        self.nodes.iter().all(|n| n.basis.is_gaussian())
    }

    /// Every kind shipped here has a finite supremum, so every model is bounded.
    pub fn is_bounded(&self) -> bool {
        self.nodes.iter().all(|n| {
            matches!(
                n.basis,
                RadialBasis::Gaussian { .. }
                    | RadialBasis::Laplacian { .. }
                    | RadialBasis::KernelPPower { .. }
                    | RadialBasis::GeneralizedGaussian { .. }
                    | RadialBasis::RiskSensitive { .. }
            )
        })
    }

    pub fn loss(&self, e: T) -> Result<T> {
        if !e.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        Ok(self.loss_unchecked(e))
    }

    #[inline]
    pub(crate) fn loss_unchecked(&self, e: T) -> T {
        self.nodes
            .iter()
            .fold(T::zero(), |acc, n| acc + n.theta * n.basis.eval_unchecked(e))
    }

    /// `dl/de`.
    pub fn loss_deriv(&self, e: T) -> Result<T> {
        let mut acc = T::zero();
        for n in &self.nodes {
            acc += n.theta * n.basis.deriv(e)?;
        }
        Ok(acc)
    }

    pub fn empirical_loss(&self, errors: &[T]) -> Result<T> {
        if errors.is_empty() {
            return Err(Error::EmptyInput("error sample"));
        }
        let mut acc = T::zero();
        for &e in errors {
            acc += self.loss(e)?;
        }
        Ok(acc / T::of(errors.len() as f64))
    }

    /// `Σ_j |θ_j| b_j`, an upper bound on `|l(e)|` over the real line.
    pub fn loss_bound(&self) -> T {
        self.nodes
            .iter()
            .fold(T::zero(), |acc, n| acc + n.theta.abs() * n.basis.upper_bound())
    }

    /// `ψ(e) = Σ_j θ_j/σ_j² G_{σ_j}(e - c_j)`; all-Gaussian models only.
    pub fn psi(&self, e: T) -> Result<T> {
        self.psi_xi(e).map(|(p, _)| p)
    }

    /// `ξ(e) = Σ_j c_j θ_j/σ_j² G_{σ_j}(e - c_j)`; all-Gaussian models only.
    pub fn xi_weight(&self, e: T) -> Result<T> {
        self.psi_xi(e).map(|(_, x)| x)
    }

    /// `(ψ(e), ξ(e))` in one pass.
    pub fn psi_xi(&self, e: T) -> Result<(T, T)> {
        if !e.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        let mut psi = T::zero();
        let mut xi = T::zero();
        for n in &self.nodes {
            match n.basis {
                RadialBasis::Gaussian { center, width } => {
                    let w = n.theta / (width * width) * gaussian(e - center, width);
                    psi += w;
                    xi += center * w;
                }
                _ => return Err(Error::NotAllGaussian),
            }
        }
        Ok((psi, xi))
    }

    /// Concatenates node lists: the loss of the result is the sum of the losses.
    pub fn concat(&self, other: &Self) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(&other.nodes);
        Self { nodes }
    }

    /// Multiplies every weight by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::new(
            self.nodes
                .iter()
                .map(|n| Node::new(n.basis, n.theta * factor))
                .collect(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Writes `(e, l(e))` pairs as CSV with header `e,loss`.
    pub fn write_loss_curve<W: Write>(&self, grid: &[T], mut out: W) -> std::io::Result<()> {
        writeln!(out, "e,loss")?;
        for &e in grid {
            writeln!(out, "{},{}", e, self.loss_unchecked(e))?;
        }
        Ok(())
    }
}
