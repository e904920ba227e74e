//! Grid-search cross-validation.

use std::collections::BTreeMap;

use eln_core::rng::{derive_seed_path, seeded};
use eln_core::solver::argmax;
use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Result};

pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Sum of squared validation errors per fold, against the clean targets when a
    /// dataset carries them.
    SumSquaredValidationError,
    /// Fraction of misclassified validation rows (argmax over outputs).
    ErrorRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchSpec {
    /// Candidate values per hyperparameter, in search order.
    pub grids: Vec<(String, Vec<f64>)>,
    pub folds: usize,
    pub stratified: bool,
    pub objective: Objective,
    pub seed: u64,
}

impl GridSearchSpec {
    pub fn new(grids: Vec<(String, Vec<f64>)>, objective: Objective, seed: u64) -> Self {
        Self { grids, folds: 10, stratified: false, objective, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(invalid("cross-validation needs at least 2 folds"));
        }
        if let Some((name, _)) = self.grids.iter().find(|(_, v)| v.is_empty()) {
            return Err(invalid(format!("grid for {name} is empty")));
        }
        Ok(())
    }

    /// Cartesian product of the grids; the last parameter varies fastest.
    pub fn points(&self) -> Vec<Params> {
        let mut points = vec![Params::new()];
        for (name, values) in &self.grids {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.insert(name.clone(), v);
                        q
                    })
                })
                .collect();
        }
        points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub params: Params,
    /// One score per (dataset, fold), dataset-major.
    pub fold_scores: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: Params,
    pub best_index: usize,
    pub table: Vec<CvRow>,
}

/// Fold index for every row. Stratified assignment deals each class round-robin.
pub fn fold_assignment(n: usize, folds: usize, labels: Option<&[usize]>, seed: u64) -> Vec<usize> {
    let mut rng = seeded(seed);
    let mut fold = vec![0; n];
    match labels {
        Some(labels) => {
            let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
            let mut offset = 0;
            for c in 0..classes {
                let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
                idx.shuffle(&mut rng);
                for (k, &i) in idx.iter().enumerate() {
                    fold[i] = (offset + k) % folds;
                }
                offset += idx.len();
            }
        }
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            for (k, &i) in idx.iter().enumerate() {
                fold[i] = k % folds;
            }
        }
    }
    fold
}

fn score(objective: Objective, pred: ArrayView2<f64>, valid: &Dataset) -> f64 {
    match objective {
        Objective::SumSquaredValidationError => {
            let target = valid.y_clean.as_ref().unwrap_or(&valid.y);
            pred.iter().zip(target.iter()).map(|(p, t)| (p - t) * (p - t)).sum()
        }
        Objective::ErrorRate => {
            let truth: Vec<usize> = match &valid.labels {
                Some(l) => l.clone(),
                None => valid.y.rows().into_iter().map(argmax).collect(),
            };
            let wrong = pred.rows().into_iter().zip(&truth).filter(|(r, t)| argmax(r.view()) != **t).count();
            wrong as f64 / truth.len().max(1) as f64
        }
    }
}

/// k-fold cross-validation over every grid point, averaged over folds and over
/// all supplied datasets. `trainer(params, train, x_valid, seed)` returns
/// predictions for `x_valid`. Ties go to the earliest grid point.
pub fn grid_search<F>(spec: &GridSearchSpec, datasets: &[Dataset], trainer: F) -> Result<GridSearchResult>
where
    F: Fn(&Params, &Dataset, ArrayView2<f64>, u64) -> Result<Array2<f64>> + Sync,
{
    spec.validate()?;
    if datasets.is_empty() {
        return Err(invalid("grid search needs at least one dataset"));
    }
    let mut splits = Vec::new();
    for (di, ds) in datasets.iter().enumerate() {
        if ds.len() < spec.folds {
            return Err(invalid(format!("{} rows cannot fill {} folds", ds.len(), spec.folds)));
        }
        let labels = if spec.stratified { ds.labels.as_deref() } else { None };
        let assign = fold_assignment(ds.len(), spec.folds, labels, derive_seed_path(spec.seed, &[u64::MAX, di as u64]));
        for f in 0..spec.folds {
            let train: Vec<usize> = (0..ds.len()).filter(|&i| assign[i] != f).collect();
            let valid: Vec<usize> = (0..ds.len()).filter(|&i| assign[i] == f).collect();
            splits.push((di, f, ds.subset(&train), ds.subset(&valid)));
        }
    }

    let points = spec.points();
    let table = points
        .par_iter()
        .enumerate()
        .map(|(gi, params)| {
            let fold_scores = splits
                .iter()
                .map(|(di, f, train, valid)| {
                    let seed = derive_seed_path(spec.seed, &[gi as u64, *di as u64, *f as u64]);
                    let pred = trainer(params, train, valid.x.view(), seed)?;
                    if pred.dim() != valid.y.dim() {
                        return Err(invalid("trainer returned predictions of the wrong shape"));
                    }
                    Ok(score(spec.objective, pred.view(), valid))
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
            Ok(CvRow { params: params.clone(), fold_scores, mean })
        })
        .collect::<Result<Vec<CvRow>>>()?;

    let mut best_index = 0;
    for (i, row) in table.iter().enumerate() {
        if row.mean < table[best_index].mean || (table[best_index].mean.is_nan() && !row.mean.is_nan()) {
            best_index = i;
        }
    }
    Ok(GridSearchResult { best: table[best_index].params.clone(), best_index, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn constant_ds(n: usize) -> Dataset {
        Dataset::new(Array2::zeros((n, 1)), Array2::ones((n, 1))).unwrap()
    }

    #[test]
    fn points_order() {
        let spec = GridSearchSpec::new(
            vec![("a".into(), vec![1.0, 2.0]), ("b".into(), vec![10.0, 20.0, 30.0])],
            Objective::SumSquaredValidationError,
            0,
        );
        let pts = spec.points();
        assert_eq!(pts.len(), 6);
        assert_eq!((pts[0]["a"], pts[0]["b"]), (1.0, 10.0));
        assert_eq!((pts[1]["a"], pts[1]["b"]), (1.0, 20.0));
        assert_eq!((pts[5]["a"], pts[5]["b"]), (2.0, 30.0));
    }

    #[test]
    fn folds_partition_rows() {
        let f = fold_assignment(23, 5, None, 1);
        for k in 0..5 {
            let c = f.iter().filter(|&&x| x == k).count();
            assert!(c == 4 || c == 5);
        }
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i < 10)).collect();
        let f = fold_assignment(40, 5, Some(&labels), 1);
        for k in 0..5 {
            assert_eq!((0..40).filter(|&i| f[i] == k && labels[i] == 1).count(), 2);
        }
    }

    #[test]
    fn single_point_and_ties() {
        let ds = constant_ds(20);
        let spec = GridSearchSpec::new(vec![("c".into(), vec![5.0])], Objective::SumSquaredValidationError, 0);
        let r = grid_search(&spec, std::slice::from_ref(&ds), |p, _, x, _| Ok(Array2::from_elem((x.nrows(), 1), p["c"])))
            .unwrap();
        assert_eq!(r.best["c"], 5.0);
        // Predictions 0 and 2 are equally wrong for targets of 1; the earlier wins.
        let spec = GridSearchSpec::new(vec![("c".into(), vec![2.0, 0.0, 1.0])], Objective::SumSquaredValidationError, 0);
        let r = grid_search(&spec, &[ds], |p, _, x, _| Ok(Array2::from_elem((x.nrows(), 1), p["c"]))).unwrap();
        assert_eq!(r.best["c"], 1.0);
        assert_eq!(r.table[0].mean, r.table[1].mean);
        for row in &r.table {
            assert_eq!(row.fold_scores.len(), 10);
            let m = row.fold_scores.iter().sum::<f64>() / 10.0;
            assert_eq!(m, row.mean);
        }
    }

    #[test]
    fn every_point_sees_every_fold_once() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let calls = AtomicUsize::new(0);
        let spec = GridSearchSpec {
            grids: vec![("a".into(), vec![1.0, 2.0, 3.0])],
            folds: 4,
            stratified: false,
            objective: Objective::SumSquaredValidationError,
            seed: 3,
        };
        grid_search(&spec, &[constant_ds(12), constant_ds(8)], |_, _, x, _| {
            calls.fetch_add(1, Ordering::Relaxed);
            Ok(Array2::zeros((x.nrows(), 1)))
        })
        .unwrap();
        assert_eq!(calls.load(Ordering::Relaxed), 3 * 4 * 2);
    }

    #[test]
    fn rejects_bad_specs() {
        let ds = constant_ds(5);
        let mut spec = GridSearchSpec::new(vec![("a".into(), vec![])], Objective::ErrorRate, 0);
        assert!(grid_search(&spec, std::slice::from_ref(&ds), |_, _, x, _| Ok(Array2::zeros((x.nrows(), 1)))).is_err());
        spec.grids = vec![("a".into(), vec![1.0])];
        spec.folds = 1;
        assert!(grid_search(&spec, std::slice::from_ref(&ds), |_, _, x, _| Ok(Array2::zeros((x.nrows(), 1)))).is_err());
        spec.folds = 10;
        assert!(grid_search(&spec, &[ds], |_, _, x, _| Ok(Array2::zeros((x.nrows(), 1)))).is_err());
    }
}
