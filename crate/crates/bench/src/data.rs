//! Synthetic problems, noise models and tabular data handling.

use std::path::Path;

use eln_core::rng::{derive_seed, seeded};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, BenchError, Result};

/// Inputs, targets (one column per output) and optional class labels.
/// Synthetic sets may also carry the noise-free targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub labels: Option<Vec<usize>>,
    pub y_clean: Option<Array2<f64>>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(invalid(format!("{} input rows but {} target rows", x.nrows(), y.nrows())));
        }
        Ok(Self { x, y, labels: None, y_clean: None })
    }

    /// Classification data with one-hot targets.
    pub fn classification(x: Array2<f64>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        let y = one_hot_matrix(&labels, classes)?;
        let mut ds = Self::new(x, y)?;
        ds.labels = Some(labels);
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            x: self.x.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
            labels: self.labels.as_ref().map(|l| rows.iter().map(|&i| l[i]).collect()),
            y_clean: self.y_clean.as_ref().map(|y| y.select(Axis(0), rows)),
        }
    }
}

/// Inputs uniform on `[−2, 2]^d` and clean targets `y = Xβ*`.
pub fn gen_linear_problem(n: usize, beta_star: &[f64], seed: u64) -> (Array2<f64>, Array1<f64>) {
    let mut rng = seeded(seed);
    let d = beta_star.len();
    let x = Array2::from_shape_simple_fn((n, d), || rng.random_range(-2.0..=2.0));
    let y = x.dot(&Array1::from(beta_star.to_vec()));
    (x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Inner noise distribution. All variances are variances, not standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnerNoise {
    GaussMixture { components: Vec<MixtureComponent> },
    Gauss { mean: f64, variance: f64 },
    Uniform { lo: f64, hi: f64 },
}

/// `v = (1 − η) A + η B` with `η ~ Bernoulli(p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub p_outlier: f64,
    pub inner: InnerNoise,
    pub outlier_mean: f64,
    pub outlier_variance: f64,
}

impl NoiseSpec {
    /// The four benchmark noise environments, each with 10% outliers from N(0, 100).
    pub fn case(case: u8) -> Result<Self> {
        let comp = |weight, mean| MixtureComponent { weight, mean, variance: 0.1 };
        let inner = match case {
            1 => InnerNoise::GaussMixture { components: vec![comp(0.5, -5.0), comp(0.5, 5.0)] },
            2 => InnerNoise::GaussMixture { components: vec![comp(1.0 / 3.0, -3.0), comp(2.0 / 3.0, 5.0)] },
            3 => InnerNoise::Gauss { mean: 0.0, variance: 0.1 },
            4 => InnerNoise::Uniform { lo: 0.0, hi: 1.0 },
            _ => return Err(invalid(format!("noise case must be 1..4, got {case}"))),
        };
        Ok(Self { p_outlier: 0.1, inner, outlier_mean: 0.0, outlier_variance: 100.0 })
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_outlier) {
            return Err(invalid("outlier probability must lie in [0, 1]"));
        }
        if !(self.outlier_variance > 0.0) {
            return Err(invalid("outlier variance must be > 0"));
        }
        match &self.inner {
            InnerNoise::GaussMixture { components } => {
                if components.is_empty() {
                    return Err(invalid("mixture needs at least one component"));
                }
                if components.iter().any(|c| !(c.weight > 0.0) || !(c.variance > 0.0)) {
                    return Err(invalid("mixture weights and variances must be > 0"));
                }
                let total: f64 = components.iter().map(|c| c.weight).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(invalid(format!("mixture weights sum to {total}, not 1")));
                }
            }
            InnerNoise::Gauss { variance, .. } if !(*variance > 0.0) => {
                return Err(invalid("variance must be > 0"));
            }
            InnerNoise::Uniform { lo, hi } if !(lo < hi) => return Err(invalid("uniform noise needs lo < hi")),
            _ => {}
        }
        Ok(())
    }
}

fn gauss<R: Rng>(rng: &mut R, mean: f64, variance: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + variance.sqrt() * z
}

pub fn sample_noise(spec: &NoiseSpec, n: usize, seed: u64) -> Result<Array1<f64>> {
    spec.validate()?;
    let mut rng = seeded(seed);
    let mut out = Array1::zeros(n);
    for v in out.iter_mut() {
        *v = if rng.random::<f64>() < spec.p_outlier {
            gauss(&mut rng, spec.outlier_mean, spec.outlier_variance)
        } else {
            match &spec.inner {
                InnerNoise::Gauss { mean, variance } => gauss(&mut rng, *mean, *variance),
                InnerNoise::Uniform { lo, hi } => rng.random_range(*lo..*hi),
                InnerNoise::GaussMixture { components } => {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = components.len() - 1;
                    for (k, c) in components.iter().enumerate() {
                        acc += c.weight;
                        if u < acc {
                            pick = k;
                            break;
                        }
                    }
                    gauss(&mut rng, components[pick].mean, components[pick].variance)
                }
            }
        };
    }
    Ok(out)
}

/// A noisy linear regression instance `y = Xβ* + v` for the given noise case,
/// keeping `Xβ*` as the clean targets.
pub fn linreg_instance(case: u8, n: usize, beta_star: &[f64], seed: u64) -> Result<Dataset> {
    let (x, clean) = gen_linear_problem(n, beta_star, derive_seed(seed, 0));
    let noise = sample_noise(&NoiseSpec::case(case)?, n, derive_seed(seed, 1))?;
    let mut ds = Dataset::new(x, (&clean + &noise).insert_axis(Axis(1)))?;
    ds.y_clean = Some(clean.insert_axis(Axis(1)));
    Ok(ds)
}

/// Two isotropic Gaussian classes in the plane, centers `(±sep/2, 0)`, unit variance.
/// Labels alternate so both classes have equal size.
pub fn gen_blobs(n: usize, separation: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = seeded(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let mut x = Array2::zeros((n, 2));
    for (i, &l) in labels.iter().enumerate() {
        let cx = if l == 0 { -separation / 2.0 } else { separation / 2.0 };
        x[[i, 0]] = gauss(&mut rng, cx, 1.0);
        x[[i, 1]] = gauss(&mut rng, 0.0, 1.0);
    }
    (x, labels)
}

/// Reads a headed, comma-separated numeric table; the last `n_targets` columns are targets.
pub fn load_csv<P: AsRef<Path>>(path: P, n_targets: usize) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, n_targets)
}

pub fn read_csv<R: std::io::Read>(reader: R, n_targets: usize) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let width = rdr.headers().map_err(|e| BenchError::Csv(e.to_string()))?.len();
    if n_targets == 0 || width <= n_targets {
        return Err(BenchError::Csv(format!("{width} columns cannot hold inputs and {n_targets} target(s)")));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| BenchError::Csv(e.to_string()))?;
        if rec.len() != width {
            return Err(BenchError::Csv(format!("row {} has {} fields, expected {width}", line + 1, rec.len())));
        }
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| BenchError::Csv(format!("row {}: {field:?} is not a number", line + 1)))?;
            if !v.is_finite() {
                return Err(BenchError::Csv(format!("row {}: non-finite value", line + 1)));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(BenchError::Csv("no data rows".into()));
    }
    let all = Array2::from_shape_vec((rows, width), values).expect("shape checked");
    let split = width - n_targets;
    Dataset::new(all.slice(ndarray::s![.., ..split]).to_owned(), all.slice(ndarray::s![.., split..]).to_owned())
}

/// Labels from a single integer-valued target column.
pub fn labels_from_column(y: ArrayView2<f64>) -> Result<Vec<usize>> {
    if y.ncols() != 1 {
        return Err(invalid("class labels need exactly one target column"));
    }
    y.column(0)
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(invalid(format!("class label {v} is not a non-negative integer")))
            }
        })
        .collect()
}

/// Per-column min-max scaling into `[lo, hi]`, fitted on one sample and reusable on another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl Normalizer {
    pub fn fit(x: ArrayView2<f64>, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(invalid("normalization range needs lo < hi"));
        }
        if x.nrows() == 0 {
            return Err(invalid("cannot fit normalization on an empty sample"));
        }
        let min = x.columns().into_iter().map(|c| c.fold(f64::INFINITY, |a, &b| a.min(b))).collect();
        let max = x.columns().into_iter().map(|c| c.fold(f64::NEG_INFINITY, |a, &b| a.max(b))).collect();
        Ok(Self { min, max, lo, hi })
    }

    /// Constant columns map to 0.
    pub fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let range = self.max[j] - self.min[j];
            if range > 0.0 {
                col.mapv_inplace(|v| self.lo + (v - self.min[j]) / range * (self.hi - self.lo));
            } else {
                col.fill(0.0);
            }
        }
        out
    }
}

pub fn one_hot(label: usize, classes: usize) -> Result<Array1<f64>> {
    if label >= classes {
        return Err(invalid(format!("label {label} outside [0, {classes})")));
    }
    let mut v = Array1::zeros(classes);
    v[label] = 1.0;
    Ok(v)
}

pub fn one_hot_matrix(labels: &[usize], classes: usize) -> Result<Array2<f64>> {
    let mut y = Array2::zeros((labels.len(), classes));
    for (i, &l) in labels.iter().enumerate() {
        y.row_mut(i).assign(&one_hot(l, classes)?);
    }
    Ok(y)
}

/// Seeded random split; the first part receives `round(train_fraction · N)` rows.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(invalid("train fraction must lie in (0, 1)"));
    }
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.shuffle(&mut seeded(seed));
    let n_train = ((ds.len() as f64) * train_fraction).round() as usize;
    if n_train == 0 || n_train == ds.len() {
        return Err(invalid("split leaves one side empty"));
    }
    Ok((ds.subset(&idx[..n_train]), ds.subset(&idx[n_train..])))
}
