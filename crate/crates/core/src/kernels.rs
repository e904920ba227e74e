//! Scalar radial basis functions with analytic derivatives.
//!
//! The Gaussian is always the normalized density
//! `G_σ(e) = exp(-e²/2σ²) / (√(2π) σ)`; the risk-sensitive and p-power kinds
//! are built on top of it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Normalized Gaussian density with standard deviation `width`, evaluated at `x`.
#[inline]
pub fn gaussian<T: Scalar>(x: T, width: T) -> T {
    let z = x / width;
    (-(z * z) / T::of(2.0)).exp() / ((T::PI() + T::PI()).sqrt() * width)
}

/// One loss node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum RadialBasis<T> {
    /// `G_σ(e - c)`.
    Gaussian { center: T, width: T },
    /// `exp(-|e - c| / σ) / (2σ)`.
    Laplacian { center: T, width: T },
    /// `exp(-λ |e|^α)`, unnormalized.
    GeneralizedGaussian { shape: T, scale: T },
    /// `exp(λ (1 - G_σ(e)))`.
    RiskSensitive { risk: T, width: T },
    /// `(1 - G_σ(e))^(p/2)`; needs `σ > 1/√(2π)` so that the base stays positive.
    KernelPPower { power: T, width: T },
}

fn positive<T: Scalar>(name: &str, v: T) -> Result<()> {
    if v.is_finite() && v > T::zero() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn finite<T: Scalar>(name: &str, v: T) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {v}")))
    }
}

impl<T: Scalar> RadialBasis<T> {
    pub fn gaussian(center: T, width: T) -> Result<Self> {
        let b = Self::Gaussian { center, width };
        b.validate()?;
        Ok(b)
    }

    pub fn laplacian(center: T, width: T) -> Result<Self> {
        let b = Self::Laplacian { center, width };
        b.validate()?;
        Ok(b)
    }

    pub fn generalized_gaussian(shape: T, scale: T) -> Result<Self> {
        let b = Self::GeneralizedGaussian { shape, scale };
        b.validate()?;
        Ok(b)
    }

    pub fn risk_sensitive(risk: T, width: T) -> Result<Self> {
        let b = Self::RiskSensitive { risk, width };
        b.validate()?;
        Ok(b)
    }

    pub fn kernel_p_power(power: T, width: T) -> Result<Self> {
        let b = Self::KernelPPower { power, width };
        b.validate()?;
        Ok(b)
    }

    /// Checks the parameter invariants. Deserialized values must pass this before use.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Gaussian { center, width } | Self::Laplacian { center, width } => {
                finite("center", center)?;
                positive("width", width)
            }
            Self::GeneralizedGaussian { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)
            }
            Self::RiskSensitive { risk, width } => {
                positive("risk", risk)?;
                positive("width", width)
            }
            Self::KernelPPower { power, width } => {
                positive("power", power)?;
                positive("width", width)?;
                // 1 - G_σ(0) > 0 keeps the fractional power real.
                let peak = T::one() / ((T::PI() + T::PI()).sqrt() * width);
                if peak < T::one() {
                    Ok(())
                } else {
                    Err(invalid(format!(
                        "kernel p-power width must exceed 1/sqrt(2π) ≈ 0.3989, got {width}"
                    )))
                }
            }
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Self::Gaussian { .. })
    }

    /// Location of the node; kinds without an explicit center sit at 0.
    pub fn center(&self) -> T {
        match *self {
            Self::Gaussian { center, .. } | Self::Laplacian { center, .. } => center,
            _ => T::zero(),
        }
    }

    pub fn eval(&self, e: T) -> Result<T> {
        if !e.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        Ok(self.eval_unchecked(e))
    }

    /// Evaluation without the finiteness check, for inner loops over validated data.
    #[inline]
    pub fn eval_unchecked(&self, e: T) -> T {
        match *self {
            Self::Gaussian { center, width } => gaussian(e - center, width),
            Self::Laplacian { center, width } => {
                (-(e - center).abs() / width).exp() / (T::of(2.0) * width)
            }
            Self::GeneralizedGaussian { shape, scale } => (-scale * e.abs().powf(shape)).exp(),
            Self::RiskSensitive { risk, width } => (risk * (T::one() - gaussian(e, width))).exp(),
            Self::KernelPPower { power, width } => {
                (T::one() - gaussian(e, width)).powf(power / T::of(2.0))
            }
        }
    }

    /// Analytic `dφ/de`.
    pub fn deriv(&self, e: T) -> Result<T> {
        if !e.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        let two = T::of(2.0);
        let d = match *self {
            Self::Gaussian { center, width } => {
                let u = e - center;
                -u / (width * width) * gaussian(u, width)
            }
            Self::Laplacian { center, width } => {
                let u = e - center;
                if u == T::zero() {
                    return Err(Error::DerivativeUndefined);
                }
                -u.signum() / width * (-u.abs() / width).exp() / (two * width)
            }
            Self::GeneralizedGaussian { shape, scale } => {
                if e == T::zero() {
                    if shape > T::one() {
                        return Ok(T::zero());
                    }
                    return Err(Error::DerivativeUndefined);
                }
                let a = e.abs();
                -scale * shape * a.powf(shape - T::one()) * e.signum() * (-scale * a.powf(shape)).exp()
            }
            Self::RiskSensitive { risk, width } => {
                let g = gaussian(e, width);
                (risk * (T::one() - g)).exp() * risk * g * e / (width * width)
            }
            Self::KernelPPower { power, width } => {
                let g = gaussian(e, width);
                let half = power / two;
                half * (T::one() - g).powf(half - T::one()) * g * e / (width * width)
            }
        };
        Ok(d)
    }

    /// Supremum of the node over the real line.
    pub fn upper_bound(&self) -> T {
        match *self {
            Self::Gaussian { width, .. } => T::one() / ((T::PI() + T::PI()).sqrt() * width),
            Self::Laplacian { width, .. } => T::one() / (T::of(2.0) * width),
            Self::GeneralizedGaussian { .. } | Self::KernelPPower { .. } => T::one(),
            // G_σ ≥ 0, approached as |e| → ∞.
            Self::RiskSensitive { risk, .. } => risk.exp(),
        }
    }
}
