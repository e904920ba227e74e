//! Error loss networks.
//!
//! An error loss network (ELN) is an RBF-shaped function of a scalar error,
//! `l(e) = Σ_j θ_j φ_j(e)`, used as the training loss of a supervised model.
//! This crate provides
//!
//! - [`kernels`]: the radial basis functions and their derivatives,
//! - [`eln`]: the loss network itself and the ψ/ξ reweighting terms,
//! - [`pdf_match`]: fitting θ so that `l(e) ≈ −p(e)` for an error sample,
//! - [`itl_zoo`]: correntropy / error-entropy losses expressed as ELNs,
//! - [`lip`]: linear-in-parameter feature maps,
//! - [`solver`]: fixed-point and IRLS training, ridge regression, prediction.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root pin the common `f64` instantiation.

// `!(x > 0)` is the NaN-rejecting form of the parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eln;
pub mod error;
pub mod itl_zoo;
pub mod kernels;
pub mod linalg;
pub mod lip;
pub mod pdf_match;
pub mod rng;
pub mod scalar;
pub mod solver;

pub use eln::{ElnModel, Node};
pub use error::{Error, Result};
pub use kernels::RadialBasis;
pub use lip::FeatureMap;
pub use pdf_match::{fit_eln, CenterStrategy, ElnFitConfig};
pub use scalar::Scalar;
pub use solver::{fixed_point_fit, FitOutcome, LossMode, SolverConfig, TrainedModel};

pub type ElnModel64 = ElnModel<f64>;
pub type ElnModel32 = ElnModel<f32>;
pub type RadialBasis64 = RadialBasis<f64>;
pub type RadialBasis32 = RadialBasis<f32>;
pub type FeatureMap64 = FeatureMap<f64>;
pub type FeatureMap32 = FeatureMap<f32>;
pub type ElnFitConfig64 = ElnFitConfig<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type SolverConfig32 = SolverConfig<f32>;
pub type TrainedModel64 = TrainedModel<f64>;
pub type TrainedModel32 = TrainedModel<f32>;
