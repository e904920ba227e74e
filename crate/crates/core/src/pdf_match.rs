//! Training an ELN by matching its loss curve to the negated error density.
//!
//! With Gaussian nodes the objective `∫(l(e) + p(e))² de` reduces to the
//! quadratic `θᵀKθ + 2θᵀξ` with `K_ij = G_{√(σ_i²+σ_j²)}(c_i − c_j)` and
//! `ξ_m = E[G_{σ_m}(e − c_m)]`, minimized by `θ* = −(K + γ₁I)⁻¹ ξ̂`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::eln::{ElnModel, Node};
use crate::error::{invalid, Error, Result};
use crate::kernels::{gaussian, RadialBasis};
use crate::linalg::{add_diagonal, Cholesky};
use crate::rng::{derive_seed, seeded};
use crate::scalar::Scalar;

const KMEANS_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterStrategy {
    /// Every error sample becomes a center; the node count is ignored.
    AllSamples,
    /// `min(M, N)` samples drawn without replacement.
    RandomSample,
    /// Centroids of a seeded 1-D Lloyd iteration.
    KMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct ElnFitConfig<T> {
    pub num_nodes: usize,
    /// Reference kernel width σ.
    pub sigma_ref: T,
    /// Variance of the width perturbation, also the width floor.
    pub epsilon: T,
    /// Ridge term added to the Gram matrix.
    pub gamma1: T,
    pub center_strategy: CenterStrategy,
    pub seed: u64,
}

impl<T: Scalar> Default for ElnFitConfig<T> {
    fn default() -> Self {
        Self {
            num_nodes: 50,
            sigma_ref: T::one(),
            epsilon: T::zero(),
            gamma1: T::of(1e-3),
            center_strategy: CenterStrategy::RandomSample,
            seed: 0,
        }
    }
}

impl<T: Scalar> ElnFitConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.num_nodes < 1 {
            return Err(invalid("node count M must be ≥ 1"));
        }
        if !(self.sigma_ref > T::zero() && self.sigma_ref.is_finite()) {
            return Err(invalid("reference width must be finite and > 0"));
        }
        if !(self.epsilon >= T::zero() && self.epsilon.is_finite()) {
            return Err(invalid("perturbation variance ε must be finite and ≥ 0"));
        }
        if !(self.gamma1 >= T::zero() && self.gamma1.is_finite()) {
            return Err(invalid("γ1 must be finite and ≥ 0"));
        }
        Ok(())
    }
}

pub fn select_centers<T: Scalar>(
    errors: &[T],
    num_nodes: usize,
    strategy: CenterStrategy,
    seed: u64,
) -> Result<Vec<T>> {
    if errors.is_empty() {
        return Err(Error::EmptyInput("error sample"));
    }
    if num_nodes < 1 {
        return Err(invalid("node count M must be ≥ 1"));
    }
    match strategy {
        CenterStrategy::AllSamples => Ok(errors.to_vec()),
        CenterStrategy::RandomSample => {
            let k = num_nodes.min(errors.len());
            let mut rng = seeded(seed);
            Ok(index::sample(&mut rng, errors.len(), k)
                .into_iter()
                .map(|i| errors[i])
                .collect())
        }
        CenterStrategy::KMeans => Ok(kmeans_1d(errors, num_nodes, seed)),
    }
}

/// Lloyd's iteration on scalars with k-means++ seeding.
fn kmeans_1d<T: Scalar>(data: &[T], k: usize, seed: u64) -> Vec<T> {
    let mut rng = seeded(seed);
    let k = k.min(data.len());
    let mut centers: Vec<T> = Vec::with_capacity(k);
    centers.push(data[rng.random_range(0..data.len())]);
    let mut d2: Vec<f64> = data
        .iter()
        .map(|&x| (x - centers[0]).to_f64_lossy().powi(2))
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = data.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            // All remaining mass sits on existing centers.
            break;
        };
        let c = data[next];
        centers.push(c);
        for (w, &x) in d2.iter_mut().zip(data) {
            *w = w.min((x - c).to_f64_lossy().powi(2));
        }
    }

    let mut assign = vec![usize::MAX; data.len()];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (a, &x) in assign.iter_mut().zip(data) {
            let best = nearest(&centers, x);
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        let mut sums = vec![T::zero(); centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (&a, &x) in assign.iter().zip(data) {
            sums[a] += x;
            counts[a] += 1;
        }
        for ((c, s), n) in centers.iter_mut().zip(sums).zip(counts) {
            if n > 0 {
                *c = s / T::of(n as f64);
            }
        }
        if !changed {
            break;
        }
    }
    centers
}

/// Index of the nearest center; ties go to the lower index.
pub(crate) fn nearest<T: Scalar>(centers: &[T], x: T) -> usize {
    let mut best = 0;
    let mut best_d = (x - centers[0]).abs();
    for (i, &c) in centers.iter().enumerate().skip(1) {
        let d = (x - c).abs();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// `σ_i = max(σ_ref + n_i, floor)` with `n_i ~ N(0, ε)` and `floor = max(ε, 1e-3 σ_ref)`.
pub fn draw_widths<T: Scalar>(num_nodes: usize, sigma_ref: T, epsilon: T, seed: u64) -> Result<Vec<T>> {
    if !(sigma_ref > T::zero() && sigma_ref.is_finite()) {
        return Err(invalid("reference width must be finite and > 0"));
    }
    if !(epsilon >= T::zero() && epsilon.is_finite()) {
        return Err(invalid("perturbation variance ε must be finite and ≥ 0"));
    }
    if epsilon == T::zero() {
        return Ok(vec![sigma_ref; num_nodes]);
    }
    let floor = epsilon.max(sigma_ref * T::of(1e-3));
    let std = epsilon.sqrt();
    let mut rng = seeded(seed);
    Ok((0..num_nodes)
        .map(|_| {
            let n: f64 = StandardNormal.sample(&mut rng);
            (sigma_ref + std * T::of(n)).max(floor)
        })
        .collect())
}

/// Closed-form Gram matrix of Gaussian nodes, `K_ij = ∫ φ_i φ_j de`.
pub fn gram_matrix<T: Scalar>(centers: &[T], widths: &[T]) -> Result<Array2<T>> {
    if centers.len() != widths.len() {
        return Err(Error::DimensionMismatch { expected: centers.len(), got: widths.len() });
    }
    if let Some(w) = widths.iter().find(|w| !(**w > T::zero())) {
        return Err(invalid(format!("widths must be > 0, got {w}")));
    }
    let m = centers.len();
    let mut k = Array2::zeros((m, m));
    for i in 0..m {
        for j in i..m {
            let s = (widths[i] * widths[i] + widths[j] * widths[j]).sqrt();
            let v = gaussian(centers[i] - centers[j], s);
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    Ok(k)
}

/// Sample estimate `ξ̂_m = (1/N) Σ_i G_{σ_m}(e_i − c_m)`.
pub fn xi_hat<T: Scalar>(centers: &[T], widths: &[T], errors: &[T]) -> Result<Array1<T>> {
    if centers.len() != widths.len() {
        return Err(Error::DimensionMismatch { expected: centers.len(), got: widths.len() });
    }
    if errors.is_empty() {
        return Err(Error::EmptyInput("error sample"));
    }
    let n = T::of(errors.len() as f64);
    Ok(centers
        .iter()
        .zip(widths)
        .map(|(&c, &w)| errors.iter().map(|&e| gaussian(e - c, w)).sum::<T>() / n)
        .collect())
}

/// `θ* = −(K + γ₁I)⁻¹ ξ̂` via Cholesky.
pub fn solve_theta<T: Scalar>(gram: ArrayView2<T>, xi: ArrayView1<T>, gamma1: T) -> Result<Array1<T>> {
    if gram.nrows() != xi.len() {
        return Err(Error::DimensionMismatch { expected: gram.nrows(), got: xi.len() });
    }
    let mut a = gram.to_owned();
    add_diagonal(&mut a, gamma1);
    let chol = Cholesky::factor(a.view()).map_err(|_| Error::SingularGram)?;
    Ok(-chol.solve(xi))
}

/// Value of the PDF-matching quadratic `θᵀKθ + 2θᵀξ`.
pub fn matching_objective<T: Scalar>(gram: ArrayView2<T>, xi: ArrayView1<T>, theta: ArrayView1<T>) -> T {
    theta.dot(&gram.dot(&theta)) + T::of(2.0) * theta.dot(&xi)
}

/// Removes exact duplicates, keeping first occurrences in order.
fn dedup_in_order<T: Scalar>(values: Vec<T>) -> Vec<T> {
    let mut seen: Vec<T> = Vec::with_capacity(values.len());
    let mut sorted: Vec<T> = Vec::with_capacity(values.len());
    for v in values {
        let pos = sorted.partition_point(|s| *s < v);
        if pos < sorted.len() && sorted[pos] == v {
            continue;
        }
        sorted.insert(pos, v);
        seen.push(v);
    }
    seen
}

/// Fits an all-Gaussian ELN to an error sample.
pub fn fit_eln<T: Scalar>(errors: &[T], cfg: &ElnFitConfig<T>) -> Result<ElnModel<T>> {
    cfg.validate()?;
    if let Some(e) = errors.iter().find(|e| !e.is_finite()) {
        return Err(invalid(format!("error samples must be finite, got {e}")));
    }
    let centers = dedup_in_order(select_centers(
        errors,
        cfg.num_nodes,
        cfg.center_strategy,
        derive_seed(cfg.seed, 0),
    )?);
    let widths = draw_widths(centers.len(), cfg.sigma_ref, cfg.epsilon, derive_seed(cfg.seed, 1))?;
    let gram = gram_matrix(&centers, &widths)?;
    let xi = xi_hat(&centers, &widths, errors)?;
    let theta = solve_theta(gram.view(), xi.view(), cfg.gamma1)?;
    ElnModel::new(
        centers
            .iter()
            .zip(&widths)
            .zip(theta.iter())
            .map(|((&c, &w), &t)| Node::new(RadialBasis::Gaussian { center: c, width: w }, t))
            .collect(),
    )
}
