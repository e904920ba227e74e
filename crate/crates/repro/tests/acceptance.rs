//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::time::Instant;

use eln_bench::config::GridConfig;
use eln_bench::data::linreg_instance;
use eln_bench::experiments::*;
use eln_bench::grid::Params;
use eln_bench::labels::{apply_label_noise, LabelNoiseSpec};
use eln_core::eln::ElnModel;
use eln_core::itl_zoo::{make_mcc, make_mee, ovq_quantize};
use eln_core::pdf_match::{gram_matrix, matching_objective, solve_theta, xi_hat};
use eln_core::rng::seeded;
use eln_core::solver::{assemble_step, fit_design, ridge_fit, LossMode, SolverConfig};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

const MASTER_SEED: u64 = 20_240_611;
const N_LINREG: usize = 500;
const RUNS: usize = 100;
const CALIBRATION_SETS: usize = 3;
/// Noisy-label validation needs more data than regression to resolve ~1pp.
/// Ridge is cheap, so the baseline gets the larger budget; this can only help it.
const BLOB_CALIBRATION_SETS_MSE: usize = 20;
const BLOB_CALIBRATION_SETS_ELN: usize = 5;

/// `γ₂′` per noise case for the ELN; its σ is searched.
const ELN_GAMMA2: [f64; 4] = [0.1, 0.1, 0.01, 1.0];

fn normal_pdf(x: f64, s: f64) -> f64 {
    (-x * x / (2.0 * s * s)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * s)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn eln_grid(cfg: &GridConfig, case: u8) -> Vec<(String, Vec<f64>)> {
    let mut g = cfg.grids("eln").expect("eln grid");
    for (k, v) in g.iter_mut() {
        if k == "gamma2" {
            *v = vec![ELN_GAMMA2[case as usize - 1]];
        }
    }
    g
}

fn tuned_mean_rmsd(method: Method, grids: Vec<(String, Vec<f64>)>, case: u8) -> (f64, Params) {
    let opts = MethodOptions::default();
    let best = calibrate_linreg(method, grids, &opts, case, N_LINREG, CALIBRATION_SETS, true, MASTER_SEED)
        .expect("calibration")
        .best;
    let runs = linreg_runs(method, &best, &opts, case, N_LINREG, RUNS, MASTER_SEED).expect("runs");
    (mean(&runs.iter().map(|r| r.rmsd).collect::<Vec<_>>()), best)
}

fn criterion_1() -> (bool, String) {
    let start = Instant::now();
    let cfg = GridConfig::builtin();
    let mut ok = true;
    let mut detail = Vec::new();
    for case in [1u8, 2, 4] {
        let (mse, _) = tuned_mean_rmsd(Method::Mse, cfg.grids("mse").unwrap(), case);
        let (eln, best) = tuned_mean_rmsd(Method::Eln, eln_grid(&cfg, case), case);
        let mut pass = eln < mse / 4.0;
        if case != 4 {
            pass &= (0.08..=0.30).contains(&mse) && eln <= 0.05;
        }
        ok &= pass;
        detail.push(format!("case {case}: MSE {mse:.4}, ELN {eln:.4} (σ={})", best["sigma"]));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs <= 600.0;
    detail.push(format!("{secs:.0}s"));
    (ok, detail.join("; "))
}

fn criterion_2() -> (bool, String) {
    let cfg = GridConfig::builtin();
    let (mcc, _) = tuned_mean_rmsd(Method::Mcc, cfg.grids("mcc").unwrap(), 3);
    let (qmee, _) = tuned_mean_rmsd(Method::Qmee, cfg.grids("qmee").unwrap(), 3);
    let (eln, _) = tuned_mean_rmsd(Method::Eln, eln_grid(&cfg, 3), 3);
    let all = [mcc, qmee, eln];
    let hi = all.iter().copied().fold(f64::MIN, f64::max);
    let lo = all.iter().copied().fold(f64::MAX, f64::min);
    (hi <= 0.05 && hi <= 2.0 * lo, format!("MCC {mcc:.4}, QMEE {qmee:.4}, ELN {eln:.4}"))
}

fn criterion_3() -> (bool, String) {
    let mut rng = seeded(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(1..=200);
        let sigma = rng.random_range(0.1..3.0);
        let e: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let lib = make_mee(&e, sigma).unwrap().empirical_loss(&e).unwrap();
        let w = 2f64.sqrt() * sigma;
        let mut s = 0.0;
        for a in &e {
            for b in &e {
                s += normal_pdf(a - b, w);
            }
        }
        worst = worst.max((lib + s / (n * n) as f64).abs());
    }
    (worst <= 1e-12, format!("max |Δ| = {worst:.2e}"))
}

fn trapezoid(ci: f64, si: f64, cj: f64, sj: f64) -> f64 {
    let lo = ci.min(cj) - 12.0 * si.max(sj);
    let hi = ci.max(cj) + 12.0 * si.max(sj);
    let n = 1_000_000;
    let h = (hi - lo) / n as f64;
    let f = |x: f64| normal_pdf(x - ci, si) * normal_pdf(x - cj, sj);
    let mut acc = 0.5 * (f(lo) + f(hi));
    for k in 1..n {
        acc += f(lo + h * k as f64);
    }
    acc * h
}

fn criterion_4() -> (bool, String) {
    let mut rng = seeded(4);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let s: Vec<f64> = (0..3).map(|_| rng.random_range(0.2..2.0)).collect();
        let k = gram_matrix(&c, &s).unwrap();
        for i in 0..3 {
            for j in i..3 {
                worst = worst.max((k[[i, j]] - trapezoid(c[i], s[i], c[j], s[j])).abs());
            }
        }
    }
    (worst <= 1e-6, format!("max |Δ| = {worst:.2e}"))
}

fn quadratic(k: ArrayView2<f64>, xi: ArrayView1<f64>, theta: ArrayView1<f64>) -> f64 {
    let mut q = 0.0;
    for i in 0..theta.len() {
        for j in 0..theta.len() {
            q += theta[i] * k[[i, j]] * theta[j];
        }
        q += 2.0 * theta[i] * xi[i];
    }
    q
}

fn criterion_5() -> (bool, String) {
    let mut rng = seeded(5);
    let mut violations = 0;
    for _ in 0..20 {
        let m = rng.random_range(2..=6);
        let c: Vec<f64> = (0..m).map(|i| i as f64 * 1.5 + rng.random_range(-0.3..0.3)).collect();
        let s: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..1.5)).collect();
        let e: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..8.0)).collect();
        let k = gram_matrix(&c, &s).unwrap();
        let xi = xi_hat(&c, &s, &e).unwrap();
        let theta = solve_theta(k.view(), xi.view(), 0.0).unwrap();
        let best = quadratic(k.view(), xi.view(), theta.view());
        assert!((best - matching_objective(k.view(), xi.view(), theta.view())).abs() < 1e-12);
        for _ in 0..10_000 {
            let mut d: Array1<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = d.dot(&d).sqrt();
            d *= 0.1 / norm;
            if quadratic(k.view(), xi.view(), (&theta + &d).view()) < best {
                violations += 1;
            }
        }
    }
    (violations == 0, format!("{violations} perturbations improved on θ*"))
}

fn objective(eln: &ElnModel<f64>, h: ArrayView2<f64>, d: ArrayView1<f64>, beta: ArrayView1<f64>, gamma2: f64) -> f64 {
    let n = h.nrows() as f64;
    let mut s = 0.0;
    for i in 0..h.nrows() {
        s += eln.loss(d[i] - h.row(i).dot(&beta)).unwrap();
    }
    s / n + gamma2 / (2.0 * n) * beta.dot(&beta)
}

fn fd_gradient(eln: &ElnModel<f64>, h: ArrayView2<f64>, d: ArrayView1<f64>, beta: ArrayView1<f64>, gamma2: f64) -> Array1<f64> {
    let step = 1e-6;
    (0..beta.len())
        .map(|k| {
            let mut up = beta.to_owned();
            let mut dn = beta.to_owned();
            up[k] += step;
            dn[k] -= step;
            (objective(eln, h, d, up.view(), gamma2) - objective(eln, h, d, dn.view(), gamma2)) / (2.0 * step)
        })
        .collect()
}

fn inf_norm(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn criterion_6() -> (bool, String) {
    let mut checked = 0;
    let mut failed = 0;
    let mut worst: f64 = 0.0;
    for case in 1..=4u8 {
        for run in 0..5 {
            let seed = linreg_run_seed(MASTER_SEED ^ 6, case, run);
            let ds = linreg_instance(case, N_LINREG, &BETA_STAR, seed).unwrap();
            let gamma2 = ELN_GAMMA2[case as usize - 1];
            let modes = [
                LossMode::AdaptiveEln {
                    config: eln_core::ElnFitConfig { sigma_ref: 0.7, seed, ..Default::default() },
                },
                LossMode::FixedEln { model: make_mcc(1.0).unwrap() },
            ];
            for mode in modes {
                // The stopping rule bounds the squared relative step, so the
                // residual gradient scales like √τ; a tight τ isolates the fixed point.
                let cfg = SolverConfig::new(mode).with_gamma2(gamma2).with_tol(1e-12).with_max_iter(500);
                let out = fit_design(ds.x.view(), ds.y.view(), &cfg).unwrap();
                if !out.converged {
                    continue;
                }
                let eln = out.loss.as_ref().unwrap();
                let d = ds.y.column(0);
                let beta = out.beta.column(0);
                let g = inf_norm(&fd_gradient(eln, ds.x.view(), d, beta, gamma2));
                let g0 = inf_norm(&fd_gradient(eln, ds.x.view(), d, Array1::zeros(beta.len()).view(), gamma2));
                let ratio = g / (1.0 + g0);
                worst = worst.max(ratio);
                checked += 1;
                if ratio >= 1e-4 {
                    failed += 1;
                }
            }
        }
    }
    (failed == 0 && checked > 0, format!("{checked} converged fits, {failed} failed, worst relative gradient {worst:.2e}"))
}

fn criterion_7() -> (bool, String) {
    let mut rng = seeded(7);
    let mut worst: f64 = 0.0;
    let eln = make_mcc(1e6).unwrap();
    for _ in 0..10 {
        let k = rng.random_range(2..=6);
        let n = rng.random_range(20..=80);
        let h = Array2::from_shape_simple_fn((n, k), || rng.random_range(-2.0..2.0));
        let d: Array1<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let fp = assemble_step(h.view(), d.view(), &eln, d.view(), 0.0).unwrap();
        let rr = ridge_fit(h.view(), d.view().insert_axis(Axis(1)), 0.0).unwrap();
        let rr = rr.column(0);
        let rel = (&fp - &rr).mapv(|v| v * v).sum().sqrt() / rr.dot(&rr).sqrt();
        worst = worst.max(rel);
    }
    (worst <= 1e-6, format!("max relative deviation {worst:.2e}"))
}

fn criterion_8() -> (bool, String) {
    let mut mcc_worst: f64 = 0.0;
    let mut ridge_best = f64::INFINITY;
    let mcc = SolverConfig::new(LossMode::FixedEln { model: make_mcc(3.0).unwrap() }).with_gamma2(0.01);
    let ridge = SolverConfig::<f64>::new(LossMode::RidgeMse).with_gamma2(0.01);
    let shift = |a: &Array2<f64>, b: &Array2<f64>| (a - b).mapv(|v| v * v).sum().sqrt() / a.mapv(|v| v * v).sum().sqrt();
    for k in 0..10 {
        let ds = linreg_instance(3, N_LINREG, &BETA_STAR, linreg_run_seed(MASTER_SEED ^ 8, 3, k)).unwrap();
        let mut x = ds.x.clone();
        let mut y = ds.y.clone();
        x.push_row(ds.x.row(0)).unwrap();
        y.push_row(ndarray::array![1e6].view()).unwrap();
        let a = fit_design(ds.x.view(), ds.y.view(), &mcc).unwrap().beta;
        let b = fit_design(x.view(), y.view(), &mcc).unwrap().beta;
        mcc_worst = mcc_worst.max(shift(&a, &b));
        let a = fit_design(ds.x.view(), ds.y.view(), &ridge).unwrap().beta;
        let b = fit_design(x.view(), y.view(), &ridge).unwrap().beta;
        ridge_best = ridge_best.min(shift(&a, &b));
    }
    (
        mcc_worst < 0.01 && ridge_best > 0.10,
        format!("MCC max shift {:.2e}, ridge min shift {:.2}", mcc_worst, ridge_best),
    )
}

fn criterion_9() -> (bool, String) {
    let mut rng = seeded(9);
    let mut ok = true;
    for _ in 0..20 {
        let n = rng.random_range(1..=300);
        let e: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let q = ovq_quantize(&e, 0.0).unwrap();
        ok &= q.codebook == e && q.counts.iter().all(|&c| c == 1);
    }
    (ok, "codebook equals the sample, all counts 1".into())
}

fn criterion_10() -> (bool, String) {
    let labels: Vec<usize> = (0..100_000).map(|i| i % 2).collect();
    let noisy = apply_label_noise(&labels, &LabelNoiseSpec::new(0.3, 2).unwrap(), 10).unwrap();
    let rate = noisy.iter().zip(&labels).filter(|(a, b)| a != b).count() as f64 / labels.len() as f64;
    ((rate - 0.3).abs() <= 0.01, format!("flip rate {rate:.4}"))
}

fn criterion_11() -> (bool, String) {
    let opts = MethodOptions::default();
    let cfg = GridConfig::builtin();
    let setup = BlobSetup::default();
    let widths = vec![2f64.powi(-5), 2f64.powi(-3), 0.5, 1.0, 2.0, 8.0, 32.0];
    let mut mse_grid = cfg.grids("mse").unwrap();
    mse_grid.push(("rbf_width".into(), widths));
    let mse_best = calibrate_blobs(Method::Mse, mse_grid, &opts, &setup, BLOB_CALIBRATION_SETS_MSE, MASTER_SEED).unwrap().best;
    let width = mse_best["rbf_width"];
    let eln_grid = vec![
        ("gamma2".to_string(), vec![1e-5, 1e-3, 1e-1, 1e1, 1e3]),
        ("sigma".to_string(), vec![0.7, 1.0, 3.0]),
        ("rbf_width".to_string(), vec![width]),
    ];
    let eln_best = calibrate_blobs(Method::Eln, eln_grid, &opts, &setup, BLOB_CALIBRATION_SETS_ELN, MASTER_SEED).unwrap().best;
    let mse = mean(&blob_runs(Method::Mse, &mse_best, &opts, &setup, 20, MASTER_SEED).unwrap());
    let eln = mean(&blob_runs(Method::Eln, &eln_best, &opts, &setup, 20, MASTER_SEED).unwrap());
    (
        eln - mse >= 0.02,
        format!(
            "ELN {:.2}% vs MSE {:.2}% (RBF width {width}, MSE γ2′ {}, ELN σ {} γ2′ {})",
            100.0 * eln,
            100.0 * mse,
            mse_best["gamma2"],
            eln_best["sigma"],
            eln_best["gamma2"]
        ),
    )
}

/// Outcome and a one-line summary.
type Check = fn() -> (bool, String);

fn main() {
    let criteria: [(&str, Check); 11] = [
        ("linear regression, noise cases 1, 2, 4", criterion_1),
        ("case 3 parity of MCC, QMEE and ELN", criterion_2),
        ("MEE equals the information-potential double sum", criterion_3),
        ("closed-form Gram matrix matches quadrature", criterion_4),
        ("θ* minimizes the matching quadratic", criterion_5),
        ("fixed-point stationarity", criterion_6),
        ("wide-kernel MCC step equals ridge", criterion_7),
        ("outlier insensitivity", criterion_8),
        ("QMEE with zero threshold keeps every sample", criterion_9),
        ("label-noise flip rate", criterion_10),
        ("blob classification, ELN vs ridge", criterion_11),
    ];
    // ACCEPTANCE_ONLY=6,11 restricts the run to the listed criteria.
    let only: Option<Vec<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let mut failures = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let (pass, detail) = check();
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {detail} [{:.1}s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", ran - failures, ran);
    if failures > 0 {
        std::process::exit(1);
    }
}
