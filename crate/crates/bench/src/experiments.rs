//! Method registry and the experiment pipelines shared by the CLI and tests.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use eln_core::itl_zoo::{combine, make_gmcc, make_kmpe, make_krsl, make_mcc, make_mcc_vc, make_mmcc, MmccType};
use eln_core::rng::derive_seed_path;
use eln_core::solver::{fixed_point_fit, LossMode, SolverConfig, TrainedModel};
use eln_core::{CenterStrategy, ElnFitConfig, FeatureMap};
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{gen_blobs, linreg_instance, Dataset};
use crate::error::{invalid, BenchError, Result};
use crate::grid::{grid_search, GridSearchResult, GridSearchSpec, Objective, Params};
use crate::labels::{apply_label_noise, LabelNoiseSpec};
use crate::metrics::{accuracy, rmsd};

/// True weights of the synthetic linear model.
pub const BETA_STAR: [f64; 2] = [2.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mse,
    Mcc,
    Mmcc,
    MccVc,
    Gmcc,
    Krsl,
    Kmpe,
    Qmee,
    Eln,
    /// Two-node ELN `θ₁·GMCC + (1 − θ₁)·KRSL`, trained by IRLS.
    ElnMix,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Mse,
        Method::Mcc,
        Method::Mmcc,
        Method::MccVc,
        Method::Gmcc,
        Method::Krsl,
        Method::Kmpe,
        Method::Qmee,
        Method::Eln,
        Method::ElnMix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mse => "mse",
            Method::Mcc => "mcc",
            Method::Mmcc => "mmcc",
            Method::MccVc => "mcc_vc",
            Method::Gmcc => "gmcc",
            Method::Krsl => "krsl",
            Method::Kmpe => "kmpe",
            Method::Qmee => "qmee",
            Method::Eln => "eln",
            Method::ElnMix => "eln_mix",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| invalid(format!("unknown method {s:?}; expected one of mse, mcc, mmcc, mcc_vc, gmcc, krsl, kmpe, qmee, eln, eln_mix")))
    }
}

/// Settings that are not searched per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub center_strategy: CenterStrategy,
}

impl Default for MethodOptions {
    fn default() -> Self {
        Self { max_iter: 50, tol: 1e-7, center_strategy: CenterStrategy::RandomSample }
    }
}

fn get(params: &Params, key: &str) -> Result<f64> {
    params.get(key).copied().ok_or_else(|| invalid(format!("missing hyperparameter {key}")))
}

fn get_or(params: &Params, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

/// Solver configuration for a method and one hyperparameter assignment.
/// `seed` drives the ELN center sampling.
pub fn solver_config(method: Method, params: &Params, opts: &MethodOptions, seed: u64) -> Result<SolverConfig<f64>> {
    let loss = match method {
        Method::Mse => LossMode::RidgeMse,
        Method::Mcc => LossMode::FixedEln { model: make_mcc(get(params, "sigma")?)? },
        Method::Mmcc => LossMode::FixedEln {
            model: make_mmcc(get(params, "sigma1")?, get(params, "sigma2")?, get(params, "lambda")?, MmccType::Gaussian)?,
        },
        Method::MccVc => LossMode::FixedEln { model: make_mcc_vc(get(params, "sigma")?, get(params, "center")?)? },
        Method::Gmcc => LossMode::Irls { model: make_gmcc(get(params, "alpha")?, get(params, "lambda")?)? },
        Method::Krsl => LossMode::Irls { model: make_krsl(get(params, "lambda")?, get(params, "sigma")?)? },
        Method::Kmpe => LossMode::Irls { model: make_kmpe(get(params, "p")?, get(params, "sigma")?)? },
        Method::Qmee => LossMode::Qmee { sigma: get(params, "sigma")?, threshold: get_or(params, "threshold", 0.5) },
        Method::Eln => LossMode::AdaptiveEln {
            config: ElnFitConfig {
                num_nodes: get_or(params, "num_nodes", 50.0) as usize,
                sigma_ref: get(params, "sigma")?,
                epsilon: get_or(params, "epsilon", 0.0),
                gamma1: get_or(params, "gamma1", 1e-3),
                center_strategy: opts.center_strategy,
                seed,
            },
        },
        Method::ElnMix => {
            let theta1 = get(params, "theta1")?;
            let parts = [
                make_gmcc(get(params, "alpha_g")?, get(params, "lambda_g")?)?,
                make_krsl(get(params, "lambda_k")?, get(params, "sigma_k")?)?,
            ];
            LossMode::Irls { model: combine(&parts, &[theta1, 1.0 - theta1])? }
        }
    };
    let cfg = SolverConfig::new(loss)
        .with_gamma2(get(params, "gamma2")?)
        .with_max_iter(opts.max_iter)
        .with_tol(opts.tol);
    cfg.validate()?;
    Ok(cfg)
}

pub fn fit(
    method: Method,
    params: &Params,
    opts: &MethodOptions,
    fm: &FeatureMap<f64>,
    train: &Dataset,
    seed: u64,
) -> Result<TrainedModel<f64>> {
    let cfg = solver_config(method, params, opts, seed)?;
    Ok(fixed_point_fit(fm, train.x.view(), train.y.view(), &cfg)?)
}

/// One repetition of the synthetic linear-regression benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinregRun {
    pub rmsd: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seconds: f64,
}

/// Seed of evaluation run `run` for a noise case.
pub fn linreg_run_seed(master: u64, case: u8, run: usize) -> u64 {
    derive_seed_path(master, &[u64::from(case), run as u64])
}

/// Seed of calibration set `k`; a separate stream from every evaluation run.
pub fn linreg_calibration_seed(master: u64, case: u8, k: usize) -> u64 {
    derive_seed_path(master, &[u64::from(case), 1 << 40, k as u64])
}

pub fn run_linreg(method: Method, params: &Params, opts: &MethodOptions, case: u8, n: usize, seed: u64) -> Result<LinregRun> {
    let ds = linreg_instance(case, n, &BETA_STAR, seed)?;
    let start = Instant::now();
    let tm = fit(method, params, opts, &FeatureMap::linear(BETA_STAR.len()), &ds, derive_seed_path(seed, &[2]))?;
    let seconds = start.elapsed().as_secs_f64();
    let beta: Vec<f64> = tm.beta.column(0).to_vec();
    Ok(LinregRun { rmsd: rmsd(&beta, &BETA_STAR), iterations: tm.iterations_used, converged: tm.converged, seconds })
}

/// `runs` seeded repetitions, reported in run order.
pub fn linreg_runs(
    method: Method,
    params: &Params,
    opts: &MethodOptions,
    case: u8,
    n: usize,
    runs: usize,
    master: u64,
) -> Result<Vec<LinregRun>> {
    (0..runs)
        .into_par_iter()
        .map(|r| run_linreg(method, params, opts, case, n, linreg_run_seed(master, case, r)))
        .collect()
}

/// Cross-validated hyperparameter choice, pooled over `sets` calibration instances.
///
/// Training folds always carry the noisy targets. With `clean_validation` the
/// held-out folds are scored against `Xβ*`; otherwise against the noisy targets,
/// whose variance-100 outliers swamp the differences between grid points.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_linreg(
    method: Method,
    grids: Vec<(String, Vec<f64>)>,
    opts: &MethodOptions,
    case: u8,
    n: usize,
    sets: usize,
    clean_validation: bool,
    master: u64,
) -> Result<GridSearchResult> {
    let datasets = (0..sets)
        .map(|k| {
            let mut ds = linreg_instance(case, n, &BETA_STAR, linreg_calibration_seed(master, case, k))?;
            if !clean_validation {
                ds.y_clean = None;
            }
            Ok(ds)
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = GridSearchSpec::new(grids, Objective::SumSquaredValidationError, derive_seed_path(master, &[u64::from(case), 1 << 41]));
    let fm = FeatureMap::linear(BETA_STAR.len());
    grid_search(&spec, &datasets, |p, train, xv, seed| predict_or_penalize(fit(method, p, opts, &fm, train, seed), xv, 1))
}

/// Predictions for `x`, or +∞ everywhere if training failed (e.g. a singular grid point),
/// so the point simply loses the search.
pub fn predict_or_penalize(model: Result<TrainedModel<f64>>, x: ArrayView2<f64>, outputs: usize) -> Result<Array2<f64>> {
    match model {
        Ok(tm) => Ok(tm.predict_batch(x)?),
        Err(BenchError::Core(_)) => Ok(Array2::from_elem((x.nrows(), outputs), f64::INFINITY)),
        Err(e) => Err(e),
    }
}

/// Two-class Gaussian-blob classification with label noise on the training labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSetup {
    pub n_train: usize,
    pub n_test: usize,
    pub separation: f64,
    pub label_noise: f64,
    pub rbf_width: f64,
}

impl Default for BlobSetup {
    fn default() -> Self {
        Self { n_train: 200, n_test: 200, separation: 2.0, label_noise: 0.3, rbf_width: 1.0 }
    }
}

/// Seed of evaluation run `run` of the blob benchmark.
pub fn blob_run_seed(master: u64, run: usize) -> u64 {
    derive_seed_path(master, &[2 << 40, run as u64])
}

/// Seed of blob calibration instance `k`.
pub fn blob_calibration_seed(master: u64, k: usize) -> u64 {
    derive_seed_path(master, &[3 << 40, k as u64])
}

/// Noisy training set and clean test set for one repetition.
pub fn blob_instance(setup: &BlobSetup, seed: u64) -> Result<(Dataset, Dataset)> {
    let (xtr, ltr) = gen_blobs(setup.n_train, setup.separation, derive_seed_path(seed, &[0]));
    let noisy = apply_label_noise(&ltr, &LabelNoiseSpec::new(setup.label_noise, 2)?, derive_seed_path(seed, &[1]))?;
    let (xte, lte) = gen_blobs(setup.n_test, setup.separation, derive_seed_path(seed, &[2]));
    Ok((Dataset::classification(xtr, noisy, 2)?, Dataset::classification(xte, lte, 2)?))
}

/// Test accuracy of an RBF network (one unit per training point) trained with `method`.
pub fn run_blobs(method: Method, params: &Params, opts: &MethodOptions, setup: &BlobSetup, seed: u64) -> Result<f64> {
    let (train, test) = blob_instance(setup, seed)?;
    let fm = FeatureMap::rbf(train.x.clone(), get_or(params, "rbf_width", setup.rbf_width))?;
    let tm = fit(method, params, opts, &fm, &train, derive_seed_path(seed, &[3]))?;
    let pred = tm.predict_batch(test.x.view())?;
    let labels: Vec<usize> = pred.rows().into_iter().map(eln_core::solver::argmax).collect();
    Ok(accuracy(&labels, test.labels.as_deref().expect("classification set")))
}

/// Stratified five-fold error-rate search on the noisy training sets of `sets`
/// calibration instances. A `rbf_width` grid entry overrides the setup's width.
pub fn calibrate_blobs(
    method: Method,
    grids: Vec<(String, Vec<f64>)>,
    opts: &MethodOptions,
    setup: &BlobSetup,
    sets: usize,
    master: u64,
) -> Result<GridSearchResult> {
    let datasets = (0..sets)
        .map(|k| blob_instance(setup, blob_calibration_seed(master, k)).map(|(train, _)| train))
        .collect::<Result<Vec<_>>>()?;
    let mut spec = GridSearchSpec::new(grids, Objective::ErrorRate, derive_seed_path(master, &[4 << 40]));
    spec.folds = 5;
    spec.stratified = true;
    grid_search(&spec, &datasets, |p, train, xv, seed| {
        let fm = FeatureMap::rbf(train.x.clone(), get_or(p, "rbf_width", setup.rbf_width))?;
        predict_or_penalize(fit(method, p, opts, &fm, train, seed), xv, 2)
    })
}

/// Mean test accuracy over `runs` seeded blob instances.
pub fn blob_runs(method: Method, params: &Params, opts: &MethodOptions, setup: &BlobSetup, runs: usize, master: u64) -> Result<Vec<f64>> {
    (0..runs).into_par_iter().map(|r| run_blobs(method, params, opts, setup, blob_run_seed(master, r))).collect()
}
