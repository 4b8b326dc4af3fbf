//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use alterego_core::allocator::{
    drift_weights, equal_weights, kkt_residuals, solve_long_only_mv, AllocationProblem, Weights,
};
use alterego_core::analytics::{
    bootstrap_median_ci, crisis_split_stats, median, quantile_regression, BootstrapSpec, QuantRegRow,
    QuantileRegSpec, Regime,
};
use alterego_core::cohort::{generate_cohort, CohortSpec};
use alterego_core::engine::{spread_between, StrategyKind, StrategySpec};
use alterego_core::forecast::{
    fit_elastic_net_fixed, fit_ols, rolling_retrain, Mlp, ModelKind, RollingConfig, N_FEATURES,
};
use alterego_core::market::{aggregate_to_monthly, generate_synthetic_market, SyntheticMarketSpec};
use alterego_core::pipeline::{load_investor_returns, load_tracks, run_stage, RunConfig, Stage};
use alterego_core::portfolio::{
    assign_frequency_quartiles, behavioral_metrics, build_holdings, group_by_investor, modified_dietz_return,
    PriceBook,
};
use alterego_core::Month;
use alterego_core::risk::{linear_shrinkage, nonlinear_shrinkage, sample_covariance, ReturnWindow};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Best objective over the simplex-with-slack grid of step 1/steps. For
/// each (w1, w2) grid point the objective is concave in w3, so only the
/// two grid values bracketing the continuous maximizer need evaluating.
fn grid_max(p: &AllocationProblem, steps: i64) -> f64 {
    let h = 1.0 / steps as f64;
    let s = &p.sigma;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=steps {
        for j in 0..=(steps - i) {
            let (w1, w2) = (i as f64 * h, j as f64 * h);
            let rem = steps - i - j;
            let a = p.gamma * s[(2, 2)];
            let b = p.mu[2] - p.gamma * (s[(0, 2)] * w1 + s[(1, 2)] * w2);
            let star = if a > 0.0 { b / a } else if b > 0.0 { f64::INFINITY } else { 0.0 };
            let lo = ((star * steps as f64).floor().max(0.0) as i64).min(rem);
            let hi = (lo + 1).min(rem);
            for k in [lo, hi] {
                let w = DVector::from_vec(vec![w1, w2, k as f64 * h]);
                best = best.max(p.objective(&w));
            }
        }
    }
    best
}

fn allocator_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let (mut worst_gap, mut worst_kkt) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let a = DMatrix::from_fn(3, 3, |_, _| 0.25 * normal(&mut rng));
        let sigma = &a * a.transpose() / 3.0 + DMatrix::from_diagonal_element(3, 3, 0.005);
        let mu = DVector::from_fn(3, |_, _| rng.random_range(-0.05..0.10));
        let p = AllocationProblem {
            assets: vec!["a".into(), "b".into(), "c".into()],
            mu,
            sigma,
            gamma: 1.0,
        };
        let w = solve_long_only_mv(&p).expect("solve");
        worst_kkt = worst_kkt.max(kkt_residuals(&p, &w.w).max());
        worst_gap = worst_gap.max((p.objective(&w.w) - grid_max(&p, 1000)).abs());
    }
    Outcome {
        pass: worst_gap <= 1e-6 && worst_kkt <= 1e-8,
        detail: format!("max |objective gap| {worst_gap:.2e}, max KKT residual {worst_kkt:.2e}"),
    }
}

fn window_from(x: &DMatrix<f64>) -> ReturnWindow {
    let names = (0..x.ncols()).map(|i| format!("A{i}")).collect();
    let cols = x.column_iter().map(|c| c.iter().copied().collect()).collect();
    ReturnWindow::from_columns(names, cols).expect("window")
}

fn shrinkage_monte_carlo() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (n, k) = (40, 60);
    let mut linear_wins = 0;
    for _ in 0..100 {
        // one-factor spiked truth
        let b: Vec<f64> = (0..n).map(|_| 1.0 + 0.3 * normal(&mut rng)).collect();
        let idio: Vec<f64> = (0..n).map(|_| 0.015 * rng.random_range(0.7..1.3)).collect();
        let truth = DMatrix::from_fn(n, n, |i, j| {
            1e-4 * b[i] * b[j] + if i == j { idio[i] * idio[i] } else { 0.0 }
        });
        let x = DMatrix::from_fn(k, n, |_, _| 0.0);
        let x = {
            let mut x = x;
            for t in 0..k {
                let f = 0.01 * normal(&mut rng);
                for i in 0..n {
                    x[(t, i)] = b[i] * f + idio[i] * normal(&mut rng);
                }
            }
            x
        };
        let w = window_from(&x);
        let truth21 = &truth * 21.0;
        let s = sample_covariance(&w).expect("sample");
        let l = linear_shrinkage(&w).expect("linear");
        if (&l.matrix - &truth21).norm() < (&s.matrix - &truth21).norm() {
            linear_wins += 1;
        }
    }
    let (n, k) = (100, 200);
    let mut nl_wins = 0;
    for _ in 0..100 {
        let x = DMatrix::from_fn(k, n, |_, _| normal(&mut rng));
        let s = sample_covariance(&window_from(&x)).expect("sample");
        let nl = nonlinear_shrinkage(&s, k).expect("nonlinear");
        let (a, b) = s.eigen_range();
        let (c, d) = nl.eigen_range();
        if d - c < b - a {
            nl_wins += 1;
        }
    }
    Outcome {
        pass: linear_wins >= 95 && nl_wins >= 95,
        detail: format!("linear beats sample {linear_wins}/100, nonlinear narrows spectrum {nl_wins}/100"),
    }
}

fn crisis_run(out: &Path, threads: usize) -> (RunConfig, Duration) {
    let cfg = RunConfig {
        out: out.to_path_buf(),
        threads: Some(threads),
        ..RunConfig::default()
    };
    let start = Instant::now();
    for stage in Stage::ALL {
        run_stage(stage, &cfg).unwrap_or_else(|e| panic!("{stage}: {e}"));
    }
    (cfg, start.elapsed())
}

fn cash_in_crisis(cfg: &RunConfig) -> Outcome {
    let dir = cfg.backtest_dir(cfg.scopes[0]);
    let tracks = load_tracks(&dir.join("tracks.csv")).expect("tracks");
    let realized = load_investor_returns(&dir.join("investor_returns.csv")).expect("returns");
    let label = StrategySpec::new(StrategyKind::MvMlRollVar, cfg.rebalance).to_string();
    let robo = &tracks[&label];
    let mut by_month: BTreeMap<Month, Vec<f64>> = BTreeMap::new();
    for s in robo.values() {
        for (m, r) in s {
            if cfg.crisis.regime(*m) == Regime::During {
                by_month.entry(*m).or_default().push(*r);
            }
        }
    }
    let zero = by_month.values().filter(|v| median(v) == Some(0.0)).count();
    let share = zero as f64 / by_month.len().max(1) as f64;
    let regimes = crisis_split_stats(&realized, &cfg.crisis).expect("regimes");
    let during = regimes.iter().find(|r| r.regime == Regime::During).and_then(|r| r.summary);
    let investor_median = during.map_or(f64::NAN, |s| s.median);
    Outcome {
        pass: !by_month.is_empty() && share >= 0.8 && investor_median < 0.0,
        detail: format!(
            "robo median exactly 0 in {zero}/{} regime months ({:.0}%), median investor {investor_median:.2}% per year",
            by_month.len(),
            100.0 * share
        ),
    }
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).expect("dir") {
            let p = e.expect("entry").path();
            let rel = p.strip_prefix(root).expect("under root").display().to_string();
            if p.is_dir() {
                if rel != "manifests" {
                    stack.push(p);
                }
            } else {
                out.push((rel, std::fs::read(&p).expect("read")));
            }
        }
    }
    out.sort();
    out
}

fn determinism(first: &Path, scratch: &Path) -> Outcome {
    let second = scratch.join("second");
    let (_, elapsed) = crisis_run(&second, 4);
    let (a, b) = (tree(first), tree(&second));
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let same_files = a.iter().map(|x| &x.0).eq(b.iter().map(|x| &x.0));
    Outcome {
        pass: same_files && differing.is_empty(),
        detail: format!(
            "{} files compared across 1 and 4 threads, {} differ (second run {:.0}s)",
            a.len(),
            if same_files { differing.len() } else { a.len().max(b.len()) },
            elapsed.as_secs_f64()
        ),
    }
}

fn forecast_stack() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // gradient check on a random network and batch
    let net = Mlp::init(N_FEATURES, &mut rng);
    let xs: Vec<Vec<f64>> = (0..16).map(|_| (0..N_FEATURES).map(|_| normal(&mut rng)).collect()).collect();
    let ys: Vec<f64> = (0..16).map(|_| 0.05 * normal(&mut rng)).collect();
    let rows: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let l2 = 1e-3;
    let (_, grad) = net.loss_and_gradient(&rows, &ys, l2);
    let mut worst_grad = 0.0f64;
    for i in 0..net.n_params() {
        let h = 1e-6;
        let mut plus = net.clone();
        plus.params[i] += h;
        let mut minus = net.clone();
        minus.params[i] -= h;
        let numeric = (plus.loss_and_gradient(&rows, &ys, l2).0 - minus.loss_and_gradient(&rows, &ys, l2).0) / (2.0 * h);
        let rel = (numeric - grad[i]).abs() / numeric.abs().max(grad[i].abs()).max(1e-8);
        worst_grad = worst_grad.max(rel);
    }

    // zero-penalty elastic net against OLS
    let x = DMatrix::from_fn(200, 8, |_, _| normal(&mut rng));
    let y = DVector::from_fn(200, |i, _| 0.3 * x[(i, 0)] - 0.2 * x[(i, 3)] + 0.5 * normal(&mut rng));
    let ols = fit_ols(&x, &y, false).expect("ols");
    let mut worst_en = 0.0f64;
    for alpha in [0.0, 0.5, 1.0] {
        let en = fit_elastic_net_fixed(&x, &y, alpha, 0.0).expect("en");
        worst_en = worst_en.max((en.model.intercept - ols.intercept).abs());
        for (a, b) in en.model.coef.iter().zip(&ols.coef) {
            worst_en = worst_en.max((a - b).abs());
        }
    }

    // model selection on a linearly predictable market
    let market = SyntheticMarketSpec {
        n_assets: 50,
        n_etfs: 0,
        n_benchmarks: 0,
        n_days: 252 * 15,
        start: chrono::NaiveDate::from_ymd_opt(1995, 1, 2).expect("date"),
        factor_vol: 0.004,
        idio_vol: 0.005,
        coupling: BTreeMap::from([
            ("dfy".to_string(), 0.03),
            ("tbl".to_string(), -0.03),
            ("infl".to_string(), 0.03),
        ]),
        seed: 41,
        ..SyntheticMarketSpec::default()
    };
    let (daily, predictors) = generate_synthetic_market(&market).expect("market");
    let monthly = aggregate_to_monthly(&daily).expect("monthly");
    let (windows, _) = rolling_retrain(&monthly, &predictors, &RollingConfig { seed: 5, ..RollingConfig::default() })
        .expect("retrain");
    let fits: Vec<_> = windows.iter().flat_map(|w| &w.fits).collect();
    let linear = fits.iter().filter(|f| matches!(f.winner, ModelKind::Ols | ModelKind::En)).count();
    let share = linear as f64 / fits.len().max(1) as f64;
    Outcome {
        pass: worst_grad < 1e-4 && worst_en <= 1e-8 && share >= 0.6,
        detail: format!(
            "gradient rel. error {worst_grad:.1e}, EN(λ=0) vs OLS {worst_en:.1e}, OLS/EN win {linear}/{} fits ({:.0}%)",
            fits.len(),
            100.0 * share
        ),
    }
}

fn bootstrap_coverage() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sims = 500;
    let mut covered = 0;
    for s in 0..sims {
        let values: Vec<f64> = (0..500).map(|_| normal(&mut rng)).collect();
        let spec = BootstrapSpec {
            reps: 1000,
            alpha: 0.05,
            seed: s,
        };
        if bootstrap_median_ci(&values, &spec).expect("ci").contains(0.0) {
            covered += 1;
        }
    }
    let coverage = covered as f64 / sims as f64;
    Outcome {
        pass: (0.92..=0.98).contains(&coverage),
        detail: format!("coverage {covered}/{sims} = {coverage:.3}"),
    }
}

fn behavioral_regression() -> Outcome {
    let cfg = RunConfig::default().resolved();
    let (daily, _) = generate_synthetic_market(&cfg.market).expect("market");
    let tradable: Vec<String> = daily
        .assets()
        .iter()
        .map(|a| a.id.clone())
        .filter(|id| !cfg.benchmarks.contains(id))
        .collect();
    let spec = CohortSpec {
        n_investors: 400,
        disposition_effect: 0.5,
        disposition_heterogeneity: 1.0,
        ..cfg.cohort.clone()
    };
    let (trades, _) = generate_cohort(&spec, &daily, &tradable).expect("cohort");
    let book = PriceBook::from_panel(&daily);
    let mut metrics: Vec<_> = group_by_investor(&trades)
        .values()
        .map(|t| behavioral_metrics(t, &build_holdings(t).expect("ledger"), &book).expect("metrics"))
        .collect();
    assign_frequency_quartiles(&mut metrics);

    // benchmark spreads that rise with the disposition effect and with
    // trading frequency, plus heavy-tailed noise
    let (de_coef, q_coef) = (6.0, [0.0, 2.0, 4.0, 6.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for m in &metrics {
        let Some(de) = m.disposition_effect else { continue };
        let q = m.frequency_quartile.expect("assigned") as usize;
        let noise = 3.0 * normal(&mut rng) / (0.5 + rng.random::<f64>());
        y.push(1.0 + de_coef * de + q_coef[q - 1] + noise);
        rows.push([de, (q == 2) as u8 as f64, (q == 3) as u8 as f64, (q == 4) as u8 as f64]);
    }
    let spec = QuantileRegSpec {
        taus: vec![0.5],
        bootstrap: BootstrapSpec {
            reps: 1000,
            alpha: 0.05,
            seed: 23,
        },
    };
    let names: Vec<String> = ["de", "q2", "q3", "q4"].map(String::from).to_vec();
    let de_only = DMatrix::from_fn(y.len(), 1, |i, _| rows[i][0]);
    let full = DMatrix::from_fn(y.len(), 4, |i, j| rows[i][j]);
    let a = quantile_regression(&y, &de_only, &names[..1], &spec).expect("de regression");
    let b = quantile_regression(&y, &full, &names, &spec).expect("de + frequency regression");
    let find = |rows: &[QuantRegRow], c: &str| rows.iter().find(|r| r.covariate == c).cloned().expect("row");
    let checks = [find(&a, "de"), find(&b, "de"), find(&b, "q2"), find(&b, "q3"), find(&b, "q4")];
    let ok = checks.iter().all(|r| r.coefficient > 0.0 && r.p_value < 0.05);
    Outcome {
        pass: ok,
        detail: checks
            .iter()
            .zip(["de", "de|freq", "q2", "q3", "q4"])
            .map(|(r, n)| format!("{n} {:+.2} (p {:.3})", r.coefficient, r.p_value))
            .collect::<Vec<_>>()
            .join(", ")
            + &format!(" on {} investors", y.len()),
    }
}

fn identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let month: Month = "2008-02".parse().expect("month");
    let mut dietz = 0.0f64;
    let mut drift = 0.0f64;
    let mut ew_exact = true;
    let mut antisym_exact = true;
    for _ in 0..1000 {
        let begin = rng.random_range(1.0..1e6);
        let end = begin * rng.random_range(0.5..1.5);
        let r = modified_dietz_return(month, begin, end, &[]).expect("defined");
        dietz = dietz.max((r - (end / begin - 1.0)).abs());

        let n = rng.random_range(1..8);
        let ids: Vec<String> = (0..n).map(|i| format!("A{i}")).collect();
        let ew = equal_weights(&ids).expect("ew");
        ew_exact &= ew.w.iter().all(|w| *w == 1.0 / n as f64);

        // shares bought at price 1 then marked at 1 + r
        let raw: Vec<f64> = (0..=n).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let w = Weights {
            assets: ids.clone(),
            w: DVector::from_iterator(n, raw[..n].iter().map(|v| v / total)),
        };
        let rets: Vec<f64> = (0..n).map(|_| rng.random_range(-0.3..0.3)).collect();
        let shares: Vec<f64> = w.w.iter().map(|v| v * 1e6).collect();
        let values: Vec<f64> = shares.iter().zip(&rets).map(|(s, r)| s * (1.0 + r)).collect();
        let cash = w.cash() * 1e6;
        let wealth = values.iter().sum::<f64>() + cash;
        let d = drift_weights(&w, &rets).expect("drift");
        for (a, b) in d.w.iter().zip(&values) {
            drift = drift.max((a - b / wealth).abs());
        }
        drift = drift.max((d.cash() - cash / wealth).abs());

        let m0: Month = "2005-01".parse().expect("month");
        let a: BTreeMap<Month, f64> = (0..12).map(|i| (m0.plus(i), 0.05 * normal(&mut rng))).collect();
        let b: BTreeMap<Month, f64> = (0..12).map(|i| (m0.plus(i), 0.05 * normal(&mut rng))).collect();
        let ab = spread_between("x", "s", &a, &b).expect("spread");
        let ba = spread_between("x", "s", &b, &a).expect("spread");
        antisym_exact &= ab.spreads.iter().all(|(m, v)| *v == -ba.spreads[m]) && ab.annualized_pct == -ba.annualized_pct;
    }
    Outcome {
        pass: dietz == 0.0 && drift <= 1e-12 && ew_exact && antisym_exact,
        detail: format!(
            "Dietz no-flow gap {dietz:.1e}, drift vs buy-and-hold {drift:.1e}, EW exact {ew_exact}, spread antisymmetry exact {antisym_exact}"
        ),
    }
}

fn main() {
    let criteria: Vec<(&str, Duration, fn() -> Outcome)> = vec![
        ("1 allocator oracle equivalence", Duration::from_secs(60), allocator_oracle),
        ("3 forecast-stack sanity", Duration::from_secs(600), forecast_stack),
        ("4 shrinkage Monte-Carlo", Duration::from_secs(300), shrinkage_monte_carlo),
        ("5 bootstrap coverage", Duration::from_secs(600), bootstrap_coverage),
        ("6 behavioral-regression recovery", Duration::from_secs(600), behavioral_regression),
        ("8 identity suite", Duration::from_secs(60), identities),
    ];
    let scratch = tempfile::tempdir().expect("scratch dir");
    let first = scratch.path().join("first");
    let mut runs: Vec<(&str, Duration, Box<dyn FnOnce() -> (Outcome, Duration)>)> = criteria
        .into_iter()
        .map(|(name, budget, run)| {
            let f: Box<dyn FnOnce() -> (Outcome, Duration)> = Box::new(move || {
                let start = Instant::now();
                let out = run();
                (out, start.elapsed())
            });
            (name, budget, f)
        })
        .collect();
    let first_ref = first.clone();
    runs.insert(
        1,
        (
            "2 cash-in-crisis reproduction",
            Duration::from_secs(300),
            Box::new(move || {
                let (cfg, elapsed) = crisis_run(&first_ref, 1);
                (cash_in_crisis(&cfg), elapsed)
            }),
        ),
    );
    let scratch_path = scratch.path().to_path_buf();
    runs.insert(
        6,
        (
            "7 pipeline determinism",
            Duration::MAX,
            Box::new(move || {
                let start = Instant::now();
                let out = determinism(&first, &scratch_path);
                (out, start.elapsed())
            }),
        ),
    );
    let mut failed = 0;
    for (name, budget, run) in runs {
        let (out, elapsed) = run();
        let pass = out.pass && elapsed <= budget;
        if !pass {
            failed += 1;
        }
        let limit = if budget == Duration::MAX { "no limit".to_string() } else { format!("{}s", budget.as_secs()) };
        println!(
            "{} criterion {name}: {} ({:.1}s, limit {limit})",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
