//! Feature maps of linear-in-parameter models, `y = h(x) β`.

use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::seeded;
use crate::scalar::Scalar;

/// Default hidden width of a random vector functional link network.
pub const RVFLNN_DEFAULT_HIDDEN: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound(deserialize = "T: Scalar"))]
pub enum FeatureMap<T> {
    /// `h(x) = x`.
    Linear { dim: usize },
    /// `h(x) = [x | g(x·w_1 + b_1), …, g(x·w_K + b_K)]` with the logistic sigmoid `g`.
    Rvflnn {
        /// `K × d` hidden weights.
        weights: Array2<T>,
        biases: Array1<T>,
        direct_link: bool,
    },
    /// `h_k(x) = exp(−‖x − x_k‖² / 2σ²)` over a fixed anchor set.
    RbfMap { anchors: Array2<T>, width: T },
}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / ((-x).exp() + T::one())
}

impl<T: Scalar> FeatureMap<T> {
    pub fn linear(dim: usize) -> Self {
        Self::Linear { dim }
    }

    /// Hidden weights uniform on `[−1, 1]`, biases uniform on `[0, 1]`, direct link on.
    pub fn rvflnn(dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let weights = Array2::from_shape_simple_fn((hidden, dim), || T::of(rng.random_range(-1.0..=1.0)));
        let biases = Array1::from_shape_simple_fn(hidden, || T::of(rng.random_range(0.0..=1.0)));
        Self::Rvflnn { weights, biases, direct_link: true }
    }

    pub fn rbf(anchors: Array2<T>, width: T) -> Result<Self> {
        if !(width > T::zero() && width.is_finite()) {
            return Err(invalid(format!("RBF width must be finite and > 0, got {width}")));
        }
        if anchors.nrows() == 0 {
            return Err(Error::EmptyInput("RBF anchor set"));
        }
        Ok(Self::RbfMap { anchors, width })
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Self::Linear { dim } => *dim,
            Self::Rvflnn { weights, .. } => weights.ncols(),
            Self::RbfMap { anchors, .. } => anchors.ncols(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Self::Linear { dim } => *dim,
            Self::Rvflnn { weights, direct_link, .. } => {
                weights.nrows() + if *direct_link { weights.ncols() } else { 0 }
            }
            Self::RbfMap { anchors, .. } => anchors.nrows(),
        }
    }

    pub fn map_row(&self, x: ArrayView1<T>) -> Result<Array1<T>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(match self {
            Self::Linear { .. } => x.to_owned(),
            Self::Rvflnn { weights, biases, direct_link } => {
                let hidden = (weights.dot(&x) + biases).mapv(sigmoid);
                if *direct_link {
                    concatenate![Axis(0), x, hidden]
                } else {
                    hidden
                }
            }
            Self::RbfMap { anchors, width } => {
                let denom = T::of(2.0) * *width * *width;
                anchors
                    .rows()
                    .into_iter()
                    .map(|a| {
                        let d2 = a.iter().zip(x.iter()).map(|(&u, &v)| (u - v) * (u - v)).sum::<T>();
                        (-d2 / denom).exp()
                    })
                    .collect()
            }
        })
    }

    /// Stacks `map_row` over the rows of `x`.
    pub fn design_matrix(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        let mut h = Array2::zeros((x.nrows(), self.output_dim()));
        for (mut out, row) in h.rows_mut().into_iter().zip(x.rows()) {
            out.assign(&self.map_row(row)?);
        }
        Ok(h)
    }
}
