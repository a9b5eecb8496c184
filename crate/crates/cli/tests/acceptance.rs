//! Acceptance suite. Eight criteria, one test each, named
//! `criterion_<n>_…`; the harness emits exactly one pass/fail line per
//! criterion, and each test also prints a `criterion <n>: PASS — …`
//! summary (visible with `--nocapture`).
//!
//! Criteria 1–4 share a fixed corpus of 100 seeded random return
//! sequences (n = 200 periods, m = 3 assets, gross returns uniform in
//! [0.5, 2]) and a simplex grid of step 0.05.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, LazyLock};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kcport_core::hindsight::{
    best_crp, best_kcc, best_kcc_series, check_consistency, regret_bound, write_benchmark_csv,
    write_regret_csv,
};
use kcport_core::kelly::{
    k_log_optimal, kt_certificate, simulate_market, BlockDistribution,
};
use kcport_core::market::write_returns_csv;
use kcport_core::trace::write_trace_csv;
use kcport_core::universal::run_kpup;
use kcport_core::{
    generate_grid, grid_weights, Density, Portfolio, PortfolioGrid, ReturnsSequence,
};

const CORPUS_SEQUENCES: u64 = 100;
const CORPUS_PERIODS: usize = 200;
const CORPUS_ASSETS: usize = 3;
const CORPUS_GRID_STEP: f64 = 0.05;

static CORPUS: LazyLock<Vec<ReturnsSequence>> = LazyLock::new(|| {
    (0..CORPUS_SEQUENCES)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..CORPUS_PERIODS * CORPUS_ASSETS)
                .map(|_| 0.5 + 1.5 * rng.random::<f64>())
                .collect();
            ReturnsSequence::new(CORPUS_ASSETS, values).unwrap()
        })
        .collect()
});

static UNIFORM_GRID: LazyLock<Arc<PortfolioGrid>> = LazyLock::new(|| {
    let grid = generate_grid(CORPUS_ASSETS, CORPUS_GRID_STEP).unwrap();
    Arc::new(grid_weights(grid, Density::Uniform))
});

static DIRICHLET_GRID: LazyLock<Arc<PortfolioGrid>> = LazyLock::new(|| {
    let grid = generate_grid(CORPUS_ASSETS, CORPUS_GRID_STEP).unwrap();
    Arc::new(grid_weights(grid, Density::DirichletHalf))
});

/// Independent oracle for the mixture identity: the log of the weighted
/// average of per-grid-point CRP wealths, computed directly from the
/// definition (no shared code with the online update).
fn log_weighted_average_wealth(returns: &ReturnsSequence, grid: &PortfolioGrid) -> f64 {
    let weights = grid.weights().expect("weighted grid");
    let log_wealths: Vec<f64> = grid
        .points()
        .map(|b| {
            returns
                .rows()
                .map(|row| {
                    b.iter()
                        .zip(row)
                        .map(|(w, x)| w * x)
                        .sum::<f64>()
                        .ln()
                })
                .sum()
        })
        .collect();
    let shift = log_wealths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log_wealths
        .iter()
        .zip(weights)
        .map(|(&l, &w)| w * (l - shift).exp())
        .sum();
    shift + sum.ln()
}

#[test]
fn criterion_1_mixture_identity_on_the_seeded_corpus() {
    let start = Instant::now();
    let mut max_err: f64 = 0.0;
    for grid in [&*UNIFORM_GRID, &*DIRICHLET_GRID] {
        for returns in CORPUS.iter() {
            let trace = run_kpup(returns, 1, grid).unwrap();
            let oracle = log_weighted_average_wealth(returns, grid);
            // |Δ log S| ≤ 1e-9 is relative error ≤ ~1e-9 on wealth itself.
            let err = (trace.final_log_wealth() - oracle).abs();
            assert!(
                err <= 1e-9,
                "mixture identity violated: |Δ log S| = {err:.3e}"
            );
            max_err = max_err.max(err);
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(30),
        "criterion 1 exceeded 30 s: {elapsed:?}"
    );
    println!(
        "criterion 1: PASS — mixture identity on 200 runs (100 sequences x 2 densities), \
         max |Δ log S| = {max_err:.3e}, {elapsed:.2?}"
    );
}

#[test]
fn criterion_2_universal_portfolio_regret_bound_holds_for_both_densities() {
    let start = Instant::now();
    let cases = [
        (&*UNIFORM_GRID, Density::Uniform),
        (&*DIRICHLET_GRID, Density::DirichletHalf),
    ];
    let mut summaries = Vec::new();
    for (grid, density) in cases {
        let bound = regret_bound(1, CORPUS_ASSETS, CORPUS_PERIODS, density);
        let mut worst = f64::NEG_INFINITY;
        for returns in CORPUS.iter() {
            let trace = run_kpup(returns, 1, grid).unwrap();
            let (_, best) = best_crp(returns, grid).unwrap();
            let regret = best - trace.final_log_wealth();
            assert!(
                regret <= bound,
                "{density:?}: regret {regret:.6} exceeds bound {bound:.6}"
            );
            worst = worst.max(regret);
        }
        summaries.push(format!(
            "{density:?} worst regret {worst:.4} <= bound {bound:.4}"
        ));
    }
    println!(
        "criterion 2: PASS — zero violations on 100 sequences; {}; {:.2?}",
        summaries.join(", "),
        start.elapsed()
    );
}

#[test]
fn criterion_3_cyclic_regret_bound_holds_for_k_2_3_5() {
    let start = Instant::now();
    let mut summaries = Vec::new();
    for k in [2usize, 3, 5] {
        let bound = regret_bound(k, CORPUS_ASSETS, CORPUS_PERIODS, Density::Uniform);
        let mut worst = f64::NEG_INFINITY;
        for returns in CORPUS.iter() {
            let trace = run_kpup(returns, k, &UNIFORM_GRID).unwrap();
            let benchmark = best_kcc(returns, k, &UNIFORM_GRID, false).unwrap();
            let regret = benchmark.log_wealth - trace.final_log_wealth();
            assert!(
                regret <= bound,
                "k={k}: regret {regret:.6} exceeds bound {bound:.6}"
            );
            worst = worst.max(regret);
        }
        summaries.push(format!("k={k} worst {worst:.4} <= {bound:.4}"));
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(120),
        "criterion 3 exceeded 2 min: {elapsed:?}"
    );
    println!(
        "criterion 3: PASS — zero violations on 100 sequences; {}; {elapsed:.2?}",
        summaries.join(", ")
    );
}

#[test]
fn criterion_4_cyclic_benchmark_is_monotone_under_divisibility() {
    let start = Instant::now();
    for (i, returns) in CORPUS.iter().enumerate() {
        let wealth = |k: usize| -> f64 {
            best_kcc(returns, k, &UNIFORM_GRID, false).unwrap().log_wealth
        };
        let (w2, w4, w8) = (wealth(2), wealth(4), wealth(8));
        // Exact comparison, no tolerance: a 2-cyclic strategy is a
        // 4-cyclic strategy, and a 4-cyclic one is 8-cyclic.
        assert!(w2 <= w4, "sequence {i}: best 2-CC {w2} > best 4-CC {w4}");
        assert!(w4 <= w8, "sequence {i}: best 4-CC {w4} > best 8-CC {w8}");
    }
    println!(
        "criterion 4: PASS — best 2-CC <= 4-CC <= 8-CC exactly on all 100 sequences; {:.2?}",
        start.elapsed()
    );
}

fn binary_distribution() -> BlockDistribution {
    BlockDistribution::new(
        1,
        2,
        vec![(0.5, vec![2.0, 1.0]), (0.5, vec![0.5, 1.0])],
    )
    .unwrap()
}

#[test]
fn criterion_5_kelly_oracle_for_the_binary_market() {
    let start = Instant::now();
    let optimum = k_log_optimal(&binary_distribution(), 1e-10).unwrap();
    let weights = optimum.portfolios[0].weights();
    assert!(
        (weights[0] - 0.5).abs() <= 1e-4 && (weights[1] - 0.5).abs() <= 1e-4,
        "optimal portfolio {weights:?} is not (0.5, 0.5) within 1e-4"
    );
    assert!(
        (optimum.rate - 0.058891).abs() <= 1e-6,
        "rate {} is not 0.058891 within 1e-6",
        optimum.rate
    );
    // Tighter sanity check against the exact closed form 0.5·ln(9/8).
    let exact = 0.5 * 1.125f64.ln();
    assert!((optimum.rate - exact).abs() <= 1e-9);
    println!(
        "criterion 5: PASS — b* = ({:.6}, {:.6}), rate = {:.9} (oracle 0.5·ln 1.125); {:.2?}",
        weights[0],
        weights[1],
        optimum.rate,
        start.elapsed()
    );
}

/// A random k=2, m=3 distribution on four support blocks: entries uniform
/// in [0.5, 2], probabilities uniform in [0.5, 1.5] before normalization.
fn random_distribution(rng: &mut ChaCha8Rng) -> BlockDistribution {
    let raw: Vec<f64> = (0..4).map(|_| 0.5 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let support = raw
        .into_iter()
        .map(|p| {
            let block: Vec<f64> = (0..6).map(|_| 0.5 + 1.5 * rng.random::<f64>()).collect();
            (p / total, block)
        })
        .collect();
    BlockDistribution::new(2, 3, support).unwrap()
}

/// Dirichlet(1)-distributed random portfolio (normalized exponentials).
fn random_portfolio(rng: &mut ChaCha8Rng, m: usize) -> Portfolio {
    let mut weights: Vec<f64> = (0..m)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Portfolio::new(weights).unwrap()
}

#[test]
fn criterion_6_kt_certificate_accepts_optima_and_rejects_perturbations() {
    let start = Instant::now();
    let mut vertex_rejections = 0usize;
    let mut interior_reports = Vec::new();
    for i in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + i);
        let dist = random_distribution(&mut rng);
        let optimum = k_log_optimal(&dist, 1e-10).unwrap();

        let mut test_rng = ChaCha8Rng::seed_from_u64(7000 + i);
        let tests: Vec<Vec<Portfolio>> = (0..1000)
            .map(|_| (0..2).map(|_| random_portfolio(&mut test_rng, 3)).collect())
            .collect();
        let max_kt = kt_certificate(&dist, &optimum.portfolios, &tests).unwrap();
        assert!(
            max_kt <= 1.0 + 1e-9,
            "distribution {i}: certificate {max_kt} exceeds 1 + 1e-9 at the optimum"
        );

        // Perturb 10% toward uniform and re-certify against the same
        // tests plus the optimum itself.
        let perturbed: Vec<Portfolio> = optimum
            .portfolios
            .iter()
            .map(|p| {
                let w: Vec<f64> = p.weights().iter().map(|&w| 0.9 * w + 0.1 / 3.0).collect();
                Portfolio::new(w).unwrap()
            })
            .collect();
        let mut tests_plus = tests;
        tests_plus.push(optimum.portfolios.clone());
        let perturbed_kt = kt_certificate(&dist, &perturbed, &tests_plus).unwrap();
        let at_vertex = optimum
            .portfolios
            .iter()
            .any(|p| p.weights().iter().any(|&w| w <= 1e-7));
        if at_vertex {
            assert!(
                perturbed_kt > 1.0,
                "distribution {i}: vertex optimum, but the perturbed tuple passed ({perturbed_kt})"
            );
            vertex_rejections += 1;
        } else {
            interior_reports.push(format!("#{i} max={perturbed_kt:.9}"));
        }
    }
    println!(
        "criterion 6: PASS — 20 distributions; optima certified <= 1+1e-9 over 1000 tests each; \
         {vertex_rejections} vertex optima rejected the 10% perturbation; interior cases \
         reported tight: [{}]; {:.2?}",
        interior_reports.join(", "),
        start.elapsed()
    );
}

/// The position-asymmetric block market: X_1 ∈ {(2,1),(1,1)} and
/// X_2 ∈ {(0.5,1),(1,1)}, independent and equiprobable.
fn coupled_distribution() -> BlockDistribution {
    BlockDistribution::new(
        2,
        2,
        vec![
            (0.25, vec![2.0, 1.0, 0.5, 1.0]),
            (0.25, vec![2.0, 1.0, 1.0, 1.0]),
            (0.25, vec![1.0, 1.0, 0.5, 1.0]),
            (0.25, vec![1.0, 1.0, 1.0, 1.0]),
        ],
    )
    .unwrap()
}

/// The same market seen by a cycle-blind (k = 1) investor: the two
/// positions mixed into one marginal, duplicates merged.
fn coupled_marginal() -> BlockDistribution {
    BlockDistribution::new(
        1,
        2,
        vec![
            (0.25, vec![2.0, 1.0]),
            (0.5, vec![1.0, 1.0]),
            (0.25, vec![0.5, 1.0]),
        ],
    )
    .unwrap()
}

const C7_SEED: u64 = 42;
const C7_BLOCKS: usize = 100_000;

#[test]
fn criterion_7_two_pup_attains_the_optimal_growth_rate() {
    let start = Instant::now();
    let dist = coupled_distribution();
    let optimum = k_log_optimal(&dist, 1e-10).unwrap();
    let rate2 = 0.25 * std::f64::consts::LN_2;
    assert!((optimum.rate - rate2).abs() <= 1e-9);
    assert!((optimum.rate - 0.173287).abs() <= 1e-6);
    let marginal_optimum = k_log_optimal(&coupled_marginal(), 1e-10).unwrap();
    let rate1 = 0.25 * 1.125f64.ln();
    assert!((marginal_optimum.rate - rate1).abs() <= 1e-9);
    assert!((marginal_optimum.rate - 0.029446).abs() <= 1e-6);

    let returns = simulate_market(&dist, C7_BLOCKS, C7_SEED).unwrap();
    let n = returns.n();
    assert_eq!(n, 2 * C7_BLOCKS);

    // Empirical per-block deviation of the optimal strategy's log return.
    let blocks = C7_BLOCKS as f64;
    let block_logs: Vec<f64> = (0..C7_BLOCKS)
        .map(|t| {
            optimum.portfolios[0].dot(returns.row(2 * t)).ln()
                + optimum.portfolios[1].dot(returns.row(2 * t + 1)).ln()
        })
        .collect();
    let mean = block_logs.iter().sum::<f64>() / blocks;
    let variance = block_logs.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / blocks;
    let sigma = variance.sqrt();
    let bound = regret_bound(2, 2, n, Density::Uniform);
    let tolerance = (4.0 * sigma / blocks.sqrt()).max(bound / (2.0 * blocks));

    let grid = Arc::new(grid_weights(generate_grid(2, 0.01).unwrap(), Density::Uniform));
    let trace2 = run_kpup(&returns, 2, &grid).unwrap();
    let trace1 = run_kpup(&returns, 1, &grid).unwrap();
    // Growth rates at the final block boundary (period n = 2T).
    let w2 = trace2.log_wealth()[n - 1] / n as f64;
    let w1 = trace1.log_wealth()[n - 1] / n as f64;
    assert!(
        (w2 - rate2).abs() <= tolerance,
        "|W2 - 0.25 ln 2| = {:.3e} exceeds max(4σ̂/√T, bound/2T) = {tolerance:.3e}",
        (w2 - rate2).abs()
    );
    assert!(
        w2 - w1 >= 0.10,
        "2-PUP growth {w2:.6} does not exceed 1-PUP growth {w1:.6} by 0.10"
    );
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(300),
        "criterion 7 exceeded 5 min: {elapsed:?}"
    );
    println!(
        "criterion 7: PASS — W2 = {w2:.6} within {tolerance:.2e} of {rate2:.6}; \
         W1 = {w1:.6}; gap {:.4} >= 0.10; {elapsed:.2?}",
        w2 - w1
    );
}

// ---------------------------------------------------------------------
// Criterion 8: determinism. Every computation above is run twice and its
// CSV serialization compared byte for byte, and the CLI binary is invoked
// twice on identical inputs with full output-directory comparison.
// ---------------------------------------------------------------------

fn corpus_fingerprint() -> Vec<u8> {
    let mut buf = Vec::new();
    for returns in CORPUS.iter() {
        for k in [1usize, 2, 3, 5] {
            let trace = run_kpup(returns, k, &UNIFORM_GRID).unwrap();
            write_trace_csv(&mut buf, &trace, None).unwrap();
            let benchmarks = best_kcc_series(returns, k, &UNIFORM_GRID).unwrap();
            let series = check_consistency(&trace, &benchmarks, Density::Uniform).unwrap();
            write_regret_csv(&mut buf, &series).unwrap();
        }
        for k in [2usize, 4, 8] {
            let benchmark = best_kcc(returns, k, &UNIFORM_GRID, false).unwrap();
            write_benchmark_csv(&mut buf, &benchmark).unwrap();
        }
    }
    buf
}

fn kelly_fingerprint() -> Vec<u8> {
    use std::io::Write as _;
    let mut buf = Vec::new();
    for dist in [binary_distribution(), coupled_distribution(), coupled_marginal()] {
        let optimum = k_log_optimal(&dist, 1e-10).unwrap();
        writeln!(buf, "{:.16e}", optimum.rate).unwrap();
        for p in &optimum.portfolios {
            for w in p.weights() {
                writeln!(buf, "{w:.16e}").unwrap();
            }
        }
    }
    for i in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + i);
        let dist = random_distribution(&mut rng);
        let optimum = k_log_optimal(&dist, 1e-10).unwrap();
        writeln!(buf, "{:.16e}", optimum.rate).unwrap();
    }
    // The full criterion-7 pipeline: simulation, 2-PUP trace.
    let dist = coupled_distribution();
    let returns = simulate_market(&dist, C7_BLOCKS, C7_SEED).unwrap();
    let symbols = vec!["A1".to_string(), "A2".to_string()];
    write_returns_csv(&mut buf, &returns, &symbols).unwrap();
    let grid = Arc::new(grid_weights(generate_grid(2, 0.01).unwrap(), Density::Uniform));
    let trace = run_kpup(&returns, 2, &grid).unwrap();
    write_trace_csv(&mut buf, &trace, None).unwrap();
    buf
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut map = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        map.insert(
            entry.file_name().into_string().unwrap(),
            fs::read(entry.path()).unwrap(),
        );
    }
    map
}

fn write_corpus_prices(dir: &Path) -> PathBuf {
    use std::io::Write as _;
    let returns = &CORPUS[0];
    let mut prices = vec![1.0f64; CORPUS_ASSETS];
    let mut text = Vec::new();
    writeln!(text, "date,AAA,BBB,CCC").unwrap();
    let mut day = 0usize;
    let mut write_row = |day: usize, prices: &[f64]| {
        write!(text, "d{day:04}").unwrap();
        for p in prices {
            write!(text, ",{p:.16e}").unwrap();
        }
        writeln!(text).unwrap();
    };
    write_row(day, &prices);
    for row in returns.rows() {
        day += 1;
        for (p, x) in prices.iter_mut().zip(row) {
            *p *= x;
        }
        write_row(day, &prices);
    }
    let path = dir.join("prices.csv");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn criterion_8_every_run_is_byte_identical_when_repeated() {
    let start = Instant::now();
    // Library level: all corpus artifacts and the whole Kelly pipeline.
    assert_eq!(
        corpus_fingerprint(),
        corpus_fingerprint(),
        "corpus artifacts differ between two runs"
    );
    assert_eq!(
        kelly_fingerprint(),
        kelly_fingerprint(),
        "Kelly artifacts differ between two runs"
    );

    // Binary level: two identical invocations of `backtest` and
    // `simulate`, output directories compared byte for byte.
    let tmp = tempfile::tempdir().unwrap();
    let prices = write_corpus_prices(tmp.path());
    let dist_path = tmp.path().join("dist.json");
    fs::write(
        &dist_path,
        r#"{"k": 2, "m": 2, "support": [
            {"prob": 0.25, "block": [[2.0, 1.0], [0.5, 1.0]]},
            {"prob": 0.25, "block": [[2.0, 1.0], [1.0, 1.0]]},
            {"prob": 0.25, "block": [[1.0, 1.0], [0.5, 1.0]]},
            {"prob": 0.25, "block": [[1.0, 1.0], [1.0, 1.0]]}]}"#,
    )
    .unwrap();
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_kcport"))
            .env_remove("KCPORT_THREADS")
            .args(args)
            .output()
            .expect("binary spawns");
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    for (first, second, args) in [
        (
            tmp.path().join("bt1"),
            tmp.path().join("bt2"),
            vec![
                "backtest".to_string(),
                "--input".into(),
                prices.display().to_string(),
                "--k".into(),
                "1,2".into(),
                "--grid-step".into(),
                "0.05".into(),
                "--density".into(),
                "uniform".into(),
            ],
        ),
        (
            tmp.path().join("sim1"),
            tmp.path().join("sim2"),
            vec![
                "simulate".to_string(),
                "--dist".into(),
                dist_path.display().to_string(),
                "--blocks".into(),
                "5000".into(),
                "--seed".into(),
                "42".into(),
                "--k-pup".into(),
                "2".into(),
                "--grid-step".into(),
                "0.02".into(),
            ],
        ),
    ] {
        for dir in [&first, &second] {
            let mut args: Vec<String> = args.clone();
            args.push("--out".into());
            args.push(dir.display().to_string());
            let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
            run(&arg_refs);
        }
        let left = dir_contents(&first);
        let right = dir_contents(&second);
        assert_eq!(
            left.keys().collect::<Vec<_>>(),
            right.keys().collect::<Vec<_>>()
        );
        for (name, bytes) in &left {
            assert_eq!(bytes, &right[name], "{name} differs between invocations");
        }
    }
    println!(
        "criterion 8: PASS — library artifacts and CLI outputs byte-identical across reruns; {:.2?}",
        start.elapsed()
    );
}
