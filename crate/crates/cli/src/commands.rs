use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use eln_bench::config::GridConfig;
use eln_bench::data::{labels_from_column, load_csv, sample_noise, Dataset, NoiseSpec, Normalizer};
use eln_bench::experiments::{calibrate_linreg, fit, linreg_runs, predict_or_penalize, Method, MethodOptions};
use eln_bench::grid::{grid_search, GridSearchSpec, Objective, Params};
use eln_bench::labels::{apply_label_noise, LabelNoiseSpec};
use eln_bench::metrics::{accuracy, rmse};
use eln_core::rng::derive_seed;
use eln_core::solver::argmax;
use eln_core::{fit_eln, ElnFitConfig, FeatureMap};
use ndarray::{Array2, ArrayView2};
use serde_json::{json, Map, Value};

use crate::args::*;
use crate::output::{open, write_record, write_table, Format, Header};
use crate::svg::render_svg;

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::SynthLinreg(a) => synth_linreg(a),
        Command::Regress(a) => regress(a),
        Command::Classify(a) => classify(a),
        Command::ElnDump(a) => eln_dump(a),
        Command::GridSearch(a) => grid_search_cmd(a),
    }
}

fn grid_config(path: Option<&Path>) -> Result<GridConfig> {
    match path {
        Some(p) => GridConfig::load(p).with_context(|| format!("reading grid file {}", p.display())),
        None => Ok(GridConfig::builtin()),
    }
}

fn options(model: &ModelArgs) -> MethodOptions {
    MethodOptions { max_iter: model.max_iter, tol: model.tol, center_strategy: model.centers.into() }
}

/// Values set on the command line, keyed like the grid file.
fn overrides(model: &ModelArgs) -> Vec<(String, Vec<f64>)> {
    let mut o = Vec::new();
    if !model.sigma.is_empty() {
        o.push(("sigma".to_string(), model.sigma.clone()));
    }
    if !model.gamma2.is_empty() {
        o.push(("gamma2".to_string(), model.gamma2.clone()));
    }
    if let Some(v) = model.gamma1 {
        o.push(("gamma1".to_string(), vec![v]));
    }
    if let Some(v) = model.m {
        o.push(("num_nodes".to_string(), vec![v as f64]));
    }
    if let Some(v) = model.epsilon {
        o.push(("epsilon".to_string(), vec![v]));
    }
    for (k, v) in &model.params {
        o.push((k.clone(), vec![*v]));
    }
    o
}

/// The method's grid from `cfg` with command-line overrides applied. With
/// `strict`, an override the method does not take is an error; otherwise it is
/// skipped (several methods share one command line).
fn method_grids(method: Method, cfg: &GridConfig, model: &ModelArgs, strict: bool) -> Result<Vec<(String, Vec<f64>)>> {
    let mut grids = cfg.grids(method.name())?;
    for (key, values) in overrides(model) {
        match grids.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = values,
            None if strict => bail!("{method} has no hyperparameter {key}"),
            None => {}
        }
    }
    Ok(grids)
}

fn single_point(method: Method, grids: &[(String, Vec<f64>)]) -> Result<Params> {
    let mut p = Params::new();
    for (k, v) in grids {
        ensure!(v.len() == 1, "{method}: {k} has {} candidate values; pass a single value (or use grid-search)", v.len());
        p.insert(k.clone(), v[0]);
    }
    Ok(p)
}

fn params_string(p: &Params) -> String {
    p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn params_json(p: &Params) -> Value {
    Value::Object(p.iter().map(|(k, v)| (k.clone(), json!(v))).collect())
}

fn load(path: &Path, targets: usize) -> Result<Dataset> {
    load_csv(path, targets).with_context(|| format!("reading {}", path.display()))
}

fn feature_map(f: &FeatureArgs, kind: Features, x_train: ArrayView2<f64>, seed: u64) -> Result<FeatureMap<f64>> {
    let dim = x_train.ncols();
    Ok(match kind {
        Features::Linear => FeatureMap::linear(dim),
        Features::Rvflnn => FeatureMap::rvflnn(dim, f.hidden, derive_seed(seed, 11)),
        Features::Rbf => FeatureMap::rbf(x_train.to_owned(), f.width)?,
    })
}

/// Min-max scaling fitted on `train` and applied to both sets.
fn normalize(f: &FeatureArgs, train: &mut Dataset, others: &mut [&mut Array2<f64>]) -> Result<()> {
    if f.no_normalize {
        return Ok(());
    }
    let norm = Normalizer::fit(train.x.view(), -1.0, 1.0)?;
    train.x = norm.apply(train.x.view());
    for x in others.iter_mut() {
        **x = norm.apply(x.view());
    }
    Ok(())
}

fn feature_header(h: Header, f: &FeatureArgs, kind: Features) -> Header {
    let h = h.param("features", format!("{kind:?}").to_lowercase()).param("normalize", !f.no_normalize);
    match kind {
        Features::Linear => h,
        Features::Rvflnn => h.param("hidden", f.hidden),
        Features::Rbf => h.param("width", f.width),
    }
}

fn model_header(h: Header, method: Method, p: &Params, model: &ModelArgs) -> Header {
    h.param("loss", method)
        .param("hyperparameters", params_string(p))
        .param("centers", format!("{:?}", model.centers).to_lowercase())
        .param("max_iter", model.max_iter)
        .param("tol", model.tol)
}

fn synth_linreg(a: &SynthLinregArgs) -> Result<()> {
    ensure!(a.runs >= 1, "--runs must be at least 1");
    ensure!(a.n >= 2, "--n must be at least 2");
    ensure!(a.calibration_sets >= 1, "--calibration-sets must be at least 1");
    let methods: Vec<Method> = if a.loss.is_empty() {
        Method::ALL.into_iter().filter(|m| *m != Method::ElnMix).collect()
    } else {
        a.loss.iter().map(|s| s.parse()).collect::<std::result::Result<_, _>>()?
    };
    let cfg = grid_config(a.config.as_deref())?;
    let opts = options(&a.model);

    let mut rows = Vec::new();
    for &method in &methods {
        let grids = method_grids(method, &cfg, &a.model, false)?;
        let params = if grids.iter().all(|(_, v)| v.len() == 1) {
            single_point(method, &grids)?
        } else {
            calibrate_linreg(method, grids, &opts, a.case, a.n, a.calibration_sets, true, a.common.seed)?.best
        };
        let runs = linreg_runs(method, &params, &opts, a.case, a.n, a.runs, a.common.seed)?;
        let k = runs.len() as f64;
        let mean = runs.iter().map(|r| r.rmsd).sum::<f64>() / k;
        let sd = if runs.len() > 1 { (runs.iter().map(|r| (r.rmsd - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt() } else { 0.0 };
        rows.push(vec![
            json!(method.name()),
            json!(mean),
            json!(sd),
            json!(runs.iter().map(|r| r.iterations as f64).sum::<f64>() / k),
            json!(runs.iter().filter(|r| r.converged).count() as f64 / k),
            json!(runs.iter().map(|r| r.seconds).sum::<f64>() / k),
            json!(params_string(&params)),
        ]);
    }
    let header = Header::new("synth-linreg", a.common.seed)
        .param("case", a.case)
        .param("runs", a.runs)
        .param("n", a.n)
        .param("calibration_sets", a.calibration_sets)
        .param("grids", a.config.as_ref().map_or("builtin".to_string(), |p| p.display().to_string()))
        .param("overrides", overrides(&a.model).iter().map(|(k, v)| format!("{k}={v:?}")).collect::<Vec<_>>().join(";"))
        .param("centers", format!("{:?}", a.model.centers).to_lowercase())
        .param("max_iter", a.model.max_iter)
        .param("tol", a.model.tol);
    let columns = ["method", "mean_rmsd", "sd_rmsd", "mean_iterations", "converged_fraction", "mean_seconds", "params"];
    let mut out = open(a.common.out.as_deref())?;
    write_table(&mut out, &header, a.common.format.unwrap_or(Format::Csv), &columns, &rows)
}

fn regress(a: &RegressArgs) -> Result<()> {
    let method: Method = a.loss.parse()?;
    let cfg = GridConfig::builtin();
    let params = single_point(method, &method_grids(method, &cfg, &a.model, true)?)?;
    let mut train = load(&a.train, a.targets)?;
    let mut test = load(&a.test, a.targets)?;
    ensure!(train.x.ncols() == test.x.ncols(), "train has {} input columns, test has {}", train.x.ncols(), test.x.ncols());
    normalize(&a.features, &mut train, &mut [&mut test.x])?;
    let kind = a.features.features.unwrap_or(Features::Rvflnn);
    let fm = feature_map(&a.features, kind, train.x.view(), a.common.seed)?;
    let tm = fit(method, &params, &options(&a.model), &fm, &train, derive_seed(a.common.seed, 12))?;
    let pred_train = tm.predict_batch(train.x.view())?;
    let pred_test = tm.predict_batch(test.x.view())?;

    let mut rec = Map::new();
    rec.insert("rmse".into(), json!(rmse(pred_test.view(), test.y.view())));
    rec.insert("train_rmse".into(), json!(rmse(pred_train.view(), train.y.view())));
    rec.insert("iterations".into(), json!(tm.iterations_used));
    rec.insert("converged".into(), json!(tm.converged));
    rec.insert("n_train".into(), json!(train.len()));
    rec.insert("n_test".into(), json!(test.len()));
    let header = feature_header(model_header(Header::new("regress", a.common.seed), method, &params, &a.model), &a.features, kind)
        .param("train", a.train.display())
        .param("test", a.test.display())
        .param("targets", a.targets);
    let mut out = open(a.common.out.as_deref())?;
    write_record(&mut out, &header, a.common.format.unwrap_or(Format::Json), rec)
}

fn class_dataset(ds: Dataset, classes: usize, labels: Vec<usize>) -> Result<Dataset> {
    Ok(Dataset::classification(ds.x, labels, classes)?)
}

fn classify(a: &ClassifyArgs) -> Result<()> {
    let method: Method = a.loss.parse()?;
    let cfg = GridConfig::builtin();
    let params = single_point(method, &method_grids(method, &cfg, &a.model, true)?)?;
    let train_raw = load(&a.train, 1)?;
    let test_raw = load(&a.test, 1)?;
    ensure!(train_raw.x.ncols() == test_raw.x.ncols(), "train and test disagree on the number of input columns");
    let train_labels = labels_from_column(train_raw.y.view())?;
    let test_labels = labels_from_column(test_raw.y.view())?;
    let classes = train_labels.iter().chain(&test_labels).max().map_or(0, |m| m + 1).max(2);
    let noisy = if a.label_noise > 0.0 {
        apply_label_noise(&train_labels, &LabelNoiseSpec::new(a.label_noise, classes)?, derive_seed(a.common.seed, 13))?
    } else {
        train_labels
    };
    let mut train = class_dataset(train_raw, classes, noisy)?;
    let mut test_x = test_raw.x;
    normalize(&a.features, &mut train, &mut [&mut test_x])?;
    let kind = a.features.features.unwrap_or(Features::Rbf);
    let fm = feature_map(&a.features, kind, train.x.view(), a.common.seed)?;
    let tm = fit(method, &params, &options(&a.model), &fm, &train, derive_seed(a.common.seed, 12))?;
    let predicted: Vec<usize> = tm.predict_batch(test_x.view())?.rows().into_iter().map(argmax).collect();

    let mut rec = Map::new();
    rec.insert("accuracy".into(), json!(accuracy(&predicted, &test_labels)));
    rec.insert("iterations".into(), json!(tm.iterations_used));
    rec.insert("converged".into(), json!(tm.converged));
    rec.insert("classes".into(), json!(classes));
    rec.insert("n_train".into(), json!(train.len()));
    rec.insert("n_test".into(), json!(test_labels.len()));
    let header = feature_header(model_header(Header::new("classify", a.common.seed), method, &params, &a.model), &a.features, kind)
        .param("train", a.train.display())
        .param("test", a.test.display())
        .param("label_noise", a.label_noise);
    let mut out = open(a.common.out.as_deref())?;
    write_record(&mut out, &header, a.common.format.unwrap_or(Format::Json), rec)
}

/// First column of a CSV with a header row; `#` lines are comments.
fn read_errors(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    lines.next().with_context(|| format!("{}: no header row", path.display()))?;
    let errors = lines
        .map(|(i, l)| {
            let field = l.split(',').next().unwrap_or("").trim();
            field.parse::<f64>().with_context(|| format!("{}:{}: {field:?} is not a number", path.display(), i + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    ensure!(!errors.is_empty(), "{}: no data rows", path.display());
    Ok(errors)
}

/// Gaussian kernel density estimate with Silverman's bandwidth.
fn kde(sample: &[f64], grid: &[f64]) -> Vec<f64> {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = if sample.len() > 1 { sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let h = (1.06 * var.sqrt() * n.powf(-0.2)).max(1e-3);
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * h * n);
    grid.iter().map(|&e| sample.iter().map(|v| (-(e - v).powi(2) / (2.0 * h * h)).exp()).sum::<f64>() * norm).collect()
}

fn eln_dump(a: &ElnDumpArgs) -> Result<()> {
    ensure!(a.lo < a.hi, "--lo must be below --hi");
    ensure!(a.steps >= 2, "--steps must be at least 2");
    ensure!(a.model.sigma.len() <= 1 && a.model.gamma2.is_empty(), "eln-dump takes one --sigma and no --gamma2");
    ensure!(a.model.params.is_empty(), "eln-dump takes no --param");
    let (errors, source) = match (&a.errors, a.case) {
        (Some(p), _) => (read_errors(p)?, p.display().to_string()),
        (None, Some(c)) => (sample_noise(&NoiseSpec::case(c)?, a.n, derive_seed(a.common.seed, 14))?.to_vec(), format!("case {c}, n={}", a.n)),
        (None, None) => bail!("pass --errors FILE or --case N"),
    };
    let cfg = ElnFitConfig {
        num_nodes: a.model.m.unwrap_or(50),
        sigma_ref: a.model.sigma.first().copied().unwrap_or(1.0),
        epsilon: a.model.epsilon.unwrap_or(0.0),
        gamma1: a.model.gamma1.unwrap_or(1e-3),
        center_strategy: a.model.centers.into(),
        seed: derive_seed(a.common.seed, 15),
    };
    let eln = fit_eln(&errors, &cfg)?;
    let grid: Vec<f64> = (0..a.steps).map(|i| a.lo + (a.hi - a.lo) * i as f64 / (a.steps - 1) as f64).collect();
    let loss = grid.iter().map(|&e| eln.loss(e)).collect::<eln_core::Result<Vec<_>>>()?;
    let neg: Vec<f64> = kde(&errors, &grid).into_iter().map(|d| -d).collect();

    let header = Header::new("eln-dump", a.common.seed)
        .param("errors", source)
        .param("m", cfg.num_nodes)
        .param("sigma", cfg.sigma_ref)
        .param("epsilon", cfg.epsilon)
        .param("gamma1", cfg.gamma1)
        .param("centers", format!("{:?}", a.model.centers).to_lowercase())
        .param("nodes", eln.len())
        .param("grid", format!("{}:{}:{}", a.lo, a.hi, a.steps));
    if let Some(path) = &a.svg {
        let title = format!("ELN loss (M={}, sigma={}) vs negated density", eln.len(), cfg.sigma_ref);
        fs::write(path, render_svg(&grid, &loss, &neg, &title)).with_context(|| format!("writing {}", path.display()))?;
    }
    let rows: Vec<Vec<Value>> = (0..grid.len()).map(|i| vec![json!(grid[i]), json!(loss[i]), json!(neg[i])]).collect();
    let mut out = open(a.common.out.as_deref())?;
    write_table(&mut out, &header, a.common.format.unwrap_or(Format::Csv), &["e", "loss", "negated_density"], &rows)
}

fn grid_search_cmd(a: &GridSearchArgs) -> Result<()> {
    let method: Method = a.loss.parse()?;
    let cfg = grid_config(a.config.as_deref())?;
    let grids = method_grids(method, &cfg, &a.model, true)?;
    let raw = load(&a.data, a.targets)?;
    let (data, outputs) = if a.classify {
        let labels = labels_from_column(raw.y.view())?;
        let classes = labels.iter().max().map_or(2, |m| m + 1).max(2);
        (class_dataset(raw, classes, labels)?, classes)
    } else {
        let m = raw.y.ncols();
        (raw, m)
    };
    let objective = if a.classify { Objective::ErrorRate } else { Objective::SumSquaredValidationError };
    let mut spec = GridSearchSpec::new(grids, objective, derive_seed(a.common.seed, 16));
    spec.folds = a.folds;
    spec.stratified = a.classify;
    let kind = a.features.features.unwrap_or(if a.classify { Features::Rbf } else { Features::Rvflnn });
    let opts = options(&a.model);
    let result = grid_search(&spec, std::slice::from_ref(&data), |p, train, xv, seed| {
        let mut train = train.clone();
        let mut xv = xv.to_owned();
        normalize(&a.features, &mut train, &mut [&mut xv]).map_err(|e| eln_bench::BenchError::Invalid(e.to_string()))?;
        let fm = feature_map(&a.features, kind, train.x.view(), seed).map_err(|e| eln_bench::BenchError::Invalid(e.to_string()))?;
        predict_or_penalize(fit(method, p, &opts, &fm, &train, seed), xv.view(), outputs)
    })?;

    let header = feature_header(Header::new("grid-search", a.common.seed), &a.features, kind)
        .param("data", a.data.display())
        .param("loss", method)
        .param("grids", a.config.as_ref().map_or("builtin".to_string(), |p| p.display().to_string()))
        .param("folds", a.folds)
        .param("objective", if a.classify { "error_rate" } else { "sum_squared_validation_error" })
        .param("centers", format!("{:?}", a.model.centers).to_lowercase())
        .param("max_iter", a.model.max_iter)
        .param("tol", a.model.tol);
    if let Some(path) = &a.table {
        let keys: Vec<String> = spec.grids.iter().map(|(k, _)| k.clone()).collect();
        let mut columns: Vec<String> = keys.clone();
        columns.push("mean".into());
        columns.extend((1..=a.folds).map(|f| format!("fold_{f}")));
        let rows: Vec<Vec<Value>> = result
            .table
            .iter()
            .map(|r| {
                let mut row: Vec<Value> = keys.iter().map(|k| json!(r.params[k])).collect();
                row.push(json!(r.mean));
                row.extend(r.fold_scores.iter().map(|s| json!(s)));
                row
            })
            .collect();
        let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
        let mut f = open(Some(path))?;
        write_table(&mut f, &header, Format::Csv, &cols, &rows)?;
    }
    let mut rec = Map::new();
    rec.insert("best".into(), params_json(&result.best));
    rec.insert("best_index".into(), json!(result.best_index));
    rec.insert("best_mean".into(), json!(result.table[result.best_index].mean));
    rec.insert("points".into(), json!(result.table.len()));
    let mut out = open(a.common.out.as_deref())?;
    write_record(&mut out, &header, a.common.format.unwrap_or(Format::Json), rec)?;
    out.flush()?;
    Ok(())
}
