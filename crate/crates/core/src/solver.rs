//! Fixed-point training of linear-in-parameter models under an ELN loss.
//!
//! For an all-Gaussian loss the stationarity condition of
//! `(1/N) Σ l(d_i − h_i β) + (γ₂/2)‖β‖²` rearranges into
//! `β = (HᵀΛH − γ₂′I)⁻¹ (HᵀΛd − Hᵀϑ)` with `Λ = diag ψ(e_i)`, `ϑ_i = ξ(e_i)`
//! and `γ₂′ = Nγ₂`. Iterating that map from `β = 0` is the training loop;
//! with an adaptive loss the ELN is refitted to the current errors first.
//! Multi-output targets are handled one column at a time.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::eln::ElnModel;
use crate::error::{invalid, Error, Result};
use crate::itl_zoo::{make_mee, make_qmee};
use crate::kernels::RadialBasis;
use crate::linalg::{add_diagonal, Cholesky, Lu};
use crate::lip::FeatureMap;
use crate::pdf_match::{fit_eln, ElnFitConfig};
use crate::scalar::Scalar;

/// Smallest |e| fed to IRLS weights; keeps kinks at the origin finite.
const IRLS_ERROR_FLOOR: f64 = 1e-6;

/// How the training loss is obtained at each iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", bound(deserialize = "T: Scalar"))]
pub enum LossMode<T> {
    /// A predetermined all-Gaussian ELN (MCC, MCC-VC, MMCC type 1, RMEE, MMKCC, …).
    FixedEln { model: ElnModel<T> },
    /// ELN refitted by PDF matching to the current errors every iteration.
    AdaptiveEln { config: ElnFitConfig<T> },
    /// MEE rebuilt from the current errors every iteration.
    Mee { sigma: T },
    /// QMEE rebuilt from the current errors every iteration.
    Qmee { sigma: T, threshold: T },
    /// Any ELN, trained by iteratively reweighted least squares with `w(e) = l′(e)/e`.
    Irls { model: ElnModel<T> },
    /// Closed-form ridge regression.
    RidgeMse,
}

impl<T: Scalar> LossMode<T> {
    /// Modes whose outputs receive the mean training error as a bias.
    pub fn applies_bias(&self) -> bool {
        matches!(self, Self::AdaptiveEln { .. } | Self::Mee { .. } | Self::Qmee { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiOutputRule {
    /// Separate Λ/ϑ and β column per output; an adaptive ELN is fitted on the pooled errors.
    #[default]
    PerOutputScalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct SolverConfig<T> {
    /// Scaled regularizer γ₂′ = Nγ₂ (the ridge parameter in `RidgeMse` mode).
    pub gamma2: T,
    pub max_iter: usize,
    /// Stop once `‖β(t) − β(t−1)‖² / ‖β(t−1)‖² < tol`.
    pub tol: T,
    pub loss: LossMode<T>,
    #[serde(default)]
    pub multi_output: MultiOutputRule,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(loss: LossMode<T>) -> Self {
        Self {
            gamma2: T::of(0.1),
            max_iter: 50,
            tol: T::of(1e-7),
            loss,
            multi_output: MultiOutputRule::PerOutputScalar,
        }
    }

    pub fn with_gamma2(mut self, gamma2: T) -> Self {
        self.gamma2 = gamma2;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(invalid("maximum iteration count T must be ≥ 1"));
        }
        if !(self.tol > T::zero()) {
            return Err(invalid("tolerance τ must be > 0"));
        }
        if !(self.gamma2 >= T::zero() && self.gamma2.is_finite()) {
            return Err(invalid("γ2′ must be finite and ≥ 0"));
        }
        match &self.loss {
            LossMode::FixedEln { model } if !model.is_all_gaussian() => {
                Err(invalid("fixed-point mode needs an all-Gaussian ELN; use IRLS for other kinds"))
            }
            LossMode::AdaptiveEln { config } => config.validate(),
            LossMode::Mee { sigma } | LossMode::Qmee { sigma, .. } if !(*sigma > T::zero()) => {
                Err(invalid("kernel width σ must be > 0"))
            }
            LossMode::Qmee { threshold, .. } if !(*threshold >= T::zero()) => {
                Err(invalid("quantization threshold must be ≥ 0"))
            }
            _ => Ok(()),
        }
    }
}

/// Result of training on a precomputed design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct FitOutcome<T> {
    /// `K × m` weights.
    pub beta: Array2<T>,
    /// Per-output bias added to predictions.
    pub bias: Array1<T>,
    pub iterations_used: usize,
    pub converged: bool,
    /// Loss used in the final update (absent for ridge).
    pub loss: Option<ElnModel<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct TrainedModel<T> {
    pub feature_map: FeatureMap<T>,
    pub beta: Array2<T>,
    pub bias: Array1<T>,
    pub iterations_used: usize,
    pub converged: bool,
    pub loss: Option<ElnModel<T>>,
}

/// `β = (HᵀH + γI)⁻¹ Hᵀd` for every column of `d`.
pub fn ridge_fit<T: Scalar>(h: ArrayView2<T>, d: ArrayView2<T>, gamma: T) -> Result<Array2<T>> {
    if h.nrows() != d.nrows() {
        return Err(Error::DimensionMismatch { expected: h.nrows(), got: d.nrows() });
    }
    let mut a = h.t().dot(&h);
    add_diagonal(&mut a, gamma);
    let rhs = h.t().dot(&d);
    let mut beta = Array2::zeros((h.ncols(), d.ncols()));
    match Cholesky::factor(a.view()) {
        Ok(ch) => {
            for (mut col, r) in beta.columns_mut().into_iter().zip(rhs.columns()) {
                col.assign(&ch.solve(r));
            }
        }
        Err(_) => {
            let lu = Lu::factor(a.view()).map_err(|_| Error::Singular)?;
            for (mut col, r) in beta.columns_mut().into_iter().zip(rhs.columns()) {
                col.assign(&lu.solve(r));
            }
        }
    }
    Ok(beta)
}

/// One fixed-point update `(HᵀΛH − γ₂′I)⁻¹ (HᵀΛd − Hᵀϑ)` for a single output.
pub fn assemble_step<T: Scalar>(
    h: ArrayView2<T>,
    d: ArrayView1<T>,
    eln: &ElnModel<T>,
    errors: ArrayView1<T>,
    gamma2: T,
) -> Result<Array1<T>> {
    let n = h.nrows();
    if d.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: d.len() });
    }
    if errors.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: errors.len() });
    }
    let mut psi = Array1::zeros(n);
    let mut theta_off = Array1::zeros(n);
    for i in 0..n {
        let (p, x) = eln.psi_xi(errors[i])?;
        psi[i] = p;
        theta_off[i] = x;
    }
    let weighted = &h * &psi.view().insert_axis(Axis(1));
    let mut r = h.t().dot(&weighted);
    add_diagonal(&mut r, -gamma2);
    let rhs = h.t().dot(&(&psi * &d - &theta_off));
    let lu = Lu::factor(r.view()).map_err(|_| Error::SingularFixedPoint)?;
    let beta = lu.solve(rhs.view());
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularFixedPoint);
    }
    Ok(beta)
}

/// IRLS weight `w(e) = l′(e)/e`, with its limit `l″(0)` at the origin.
pub fn irls_weight<T: Scalar>(model: &ElnModel<T>, e: T) -> Result<T> {
    if !e.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    if e != T::zero() {
        return Ok(model.loss_deriv(e)? / e);
    }
    let singular_at_origin = model.nodes().iter().any(|n| match n.basis {
        RadialBasis::Laplacian { center, .. } => center == T::zero(),
        RadialBasis::GeneralizedGaussian { shape, .. } => shape < T::of(2.0),
        _ => false,
    });
    if singular_at_origin {
        return Err(Error::IrlsWeightUndefined);
    }
    let slope = model.loss_deriv(T::zero())?;
    if slope.abs() > T::of(1e-12) * (T::one() + model.loss_bound()) {
        return Err(Error::IrlsWeightUndefined);
    }
    // Second-order expansion of l′ around 0 through a central difference.
    let h = T::of(1e-5) * min_scale(model);
    Ok((model.loss_deriv(h)? - model.loss_deriv(-h)?) / (h + h))
}

fn min_scale<T: Scalar>(model: &ElnModel<T>) -> T {
    model
        .nodes()
        .iter()
        .map(|n| match n.basis {
            RadialBasis::Gaussian { width, .. }
            | RadialBasis::Laplacian { width, .. }
            | RadialBasis::RiskSensitive { width, .. }
            | RadialBasis::KernelPPower { width, .. } => width,
            RadialBasis::GeneralizedGaussian { shape, scale } => scale.powf(-T::one() / shape),
        })
        .fold(T::one(), T::min)
}

/// One IRLS update `(HᵀWH + γ₂′I)⁻¹ HᵀWd`, negative weights clipped to zero.
pub fn irls_step<T: Scalar>(
    h: ArrayView2<T>,
    d: ArrayView1<T>,
    model: &ElnModel<T>,
    errors: ArrayView1<T>,
    gamma2: T,
) -> Result<Array1<T>> {
    let n = h.nrows();
    if d.len() != n || errors.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: d.len().min(errors.len()) });
    }
    let floor = T::of(IRLS_ERROR_FLOOR);
    let mut w = Array1::zeros(n);
    for i in 0..n {
        let e = errors[i];
        let e = if e.abs() < floor { if e < T::zero() { -floor } else { floor } } else { e };
        w[i] = irls_weight(model, e)?.max(T::zero());
    }
    let weighted = &h * &w.view().insert_axis(Axis(1));
    let mut r = h.t().dot(&weighted);
    add_diagonal(&mut r, gamma2);
    let rhs = h.t().dot(&(&w * &d));
    let lu = Lu::factor(r.view()).map_err(|_| Error::SingularFixedPoint)?;
    let beta = lu.solve(rhs.view());
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularFixedPoint);
    }
    Ok(beta)
}

/// `(1/N) Σ l(d_i − h_i β) + (γ₂′/2N)‖β‖²` for one output column.
pub fn regularized_objective<T: Scalar>(
    eln: &ElnModel<T>,
    h: ArrayView2<T>,
    d: ArrayView1<T>,
    beta: ArrayView1<T>,
    gamma2: T,
) -> Result<T> {
    let errors = &d - &h.dot(&beta);
    let n = T::of(h.nrows() as f64);
    Ok(eln.empirical_loss(errors.as_slice().expect("contiguous"))? + gamma2 / (n + n) * beta.dot(&beta))
}

fn pooled_errors<T: Scalar>(errors: &Array2<T>) -> Vec<T> {
    errors.t().iter().copied().collect()
}

/// Algorithm loop on a precomputed `N × K` design matrix and `N × m` targets.
pub fn fit_design<T: Scalar>(h: ArrayView2<T>, d: ArrayView2<T>, cfg: &SolverConfig<T>) -> Result<FitOutcome<T>> {
    cfg.validate()?;
    let n = h.nrows();
    if n == 0 {
        return Err(Error::EmptyInput("training set"));
    }
    if d.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: d.nrows() });
    }
    let (k, m) = (h.ncols(), d.ncols());

    if let LossMode::RidgeMse = cfg.loss {
        let beta = ridge_fit(h, d, cfg.gamma2)?;
        return Ok(FitOutcome { beta, bias: Array1::zeros(m), iterations_used: 1, converged: true, loss: None });
    }

    let mut beta = Array2::<T>::zeros((k, m));
    let mut converged = false;
    let mut iterations = 0;
    let mut last_loss = None;
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let errors = &d - &h.dot(&beta);
        let eln = match &cfg.loss {
            LossMode::FixedEln { model } | LossMode::Irls { model } => model.clone(),
            LossMode::AdaptiveEln { config } => fit_eln(&pooled_errors(&errors), config)?,
            LossMode::Mee { sigma } => make_mee(&pooled_errors(&errors), *sigma)?,
            LossMode::Qmee { sigma, threshold } => make_qmee(&pooled_errors(&errors), *sigma, *threshold)?,
            LossMode::RidgeMse => unreachable!(),
        };
        let mut next = Array2::zeros((k, m));
        for j in 0..m {
            let col = match cfg.loss {
                LossMode::Irls { .. } => irls_step(h, d.column(j), &eln, errors.column(j), cfg.gamma2)?,
                _ => assemble_step(h, d.column(j), &eln, errors.column(j), cfg.gamma2)?,
            };
            next.column_mut(j).assign(&col);
        }
        let prev_norm = beta.iter().map(|v| *v * *v).sum::<T>();
        let change = (&next - &beta).iter().map(|v| *v * *v).sum::<T>();
        beta = next;
        last_loss = Some(eln);
        let done = if prev_norm > T::zero() { change / prev_norm < cfg.tol } else { change == T::zero() };
        if done {
            converged = true;
            break;
        }
    }

    let bias = if cfg.loss.applies_bias() {
        (&d - &h.dot(&beta)).mean_axis(Axis(0)).expect("non-empty")
    } else {
        Array1::zeros(m)
    };
    Ok(FitOutcome { beta, bias, iterations_used: iterations, converged, loss: last_loss })
}

/// Trains a LIP model: builds the design matrix from `x` and runs [`fit_design`].
pub fn fixed_point_fit<T: Scalar>(
    feature_map: &FeatureMap<T>,
    x: ArrayView2<T>,
    d: ArrayView2<T>,
    cfg: &SolverConfig<T>,
) -> Result<TrainedModel<T>> {
    let h = feature_map.design_matrix(x)?;
    let out = fit_design(h.view(), d, cfg)?;
    Ok(TrainedModel {
        feature_map: feature_map.clone(),
        beta: out.beta,
        bias: out.bias,
        iterations_used: out.iterations_used,
        converged: out.converged,
        loss: out.loss,
    })
}

impl<T: Scalar> TrainedModel<T> {
    pub fn predict(&self, x: ArrayView1<T>) -> Result<Array1<T>> {
        let h = self.feature_map.map_row(x)?;
        Ok(h.dot(&self.beta) + &self.bias)
    }

    pub fn predict_batch(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        let h = self.feature_map.design_matrix(x)?;
        Ok(h.dot(&self.beta) + &self.bias)
    }

    /// Index of the largest output.
    pub fn predict_class(&self, x: ArrayView1<T>) -> Result<usize> {
        Ok(argmax(self.predict(x)?.view()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let tm: Self = serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
        if tm.beta.nrows() != tm.feature_map.output_dim() || tm.bias.len() != tm.beta.ncols() {
            return Err(Error::Serialization("weights do not match the feature map".into()));
        }
        Ok(tm)
    }
}

/// Index of the maximum component; ties go to the lower index.
pub fn argmax<T: Scalar>(v: ArrayView1<T>) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
