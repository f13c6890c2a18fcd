//! Acceptance suite: one integration test per shipped guarantee. Each test
//! prints a single `acceptance NN PASS/FAIL` line (visible with
//! `--nocapture`, or automatically on failure) so the suite's log reads as a
//! checklist, and the assertion message carries the same detail.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use adasgd::bounds::{self, BoundInputs};
use adasgd::objectives::{norm_sq, SmoothProblem};
use adasgd::optimizer::{known_stepsize, KnownParamConfig};
use adasgd::oracles::{truncate_sample, NoiseParams, OracleKind, RngStream};
use adasgd::verify::{
    binomial_margin, concentration_trial, coverage_experiment, lemma_matrix,
    lower_bound_experiment, rate_fit_experiment, ConcentrationKind, CoverageSpec, CoverageTarget,
    GeneratorSpec, RateAlgorithm, RateMetric,
};
use rand::Rng;
use rand_distr::StandardNormal;
use tempfile::TempDir;

/// Prints the checklist line for one criterion, then enforces it.
fn verdict(number: u32, name: &str, pass: bool, detail: &str) {
    let word = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {number:02} {word} — {name}: {detail}");
    assert!(pass, "acceptance {number:02} {name}: {detail}");
}

/// Convex test quadratic: spread spectrum in [0.1, 1], mixed by a rotation,
/// minimizer at the origin.
fn spread_quadratic() -> SmoothProblem {
    let eigenvalues: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    SmoothProblem::quadratic(&eigenvalues, 1, None, 0.0).expect("valid spectrum")
}

/// The four bounded-affine noise settings every coverage criterion sweeps:
/// small/large additive scale crossed with multiplicative noise off/on.
const NOISE_GRID: [(f64, f64); 4] = [(0.1, 0.0), (0.1, 1.0), (1.0, 0.0), (1.0, 1.0)];

#[test]
fn criterion_01_trajectory_inequality_matrix() {
    let outcome = lemma_matrix(3, 200, 512).expect("matrix runs");
    let total_checks: u64 = outcome.rows.iter().map(|r| r.checks).sum();
    let violations: u64 = outcome.rows.iter().map(|r| r.violations).sum();
    let min_slack = outcome.rows.iter().map(|r| r.min_slack).fold(f64::INFINITY, f64::min);
    verdict(
        1,
        "deterministic trajectory inequalities over the randomized run matrix",
        outcome.pass,
        &format!(
            "{} runs, {total_checks} inequality evaluations, {violations} violations, min slack {min_slack:.3e}",
            outcome.runs
        ),
    );
}

#[test]
fn criterion_02_gap_bound_coverage() {
    let problems: [(&str, SmoothProblem); 2] = [
        ("quadratic", spread_quadratic()),
        ("sine", SmoothProblem::non_convex_sine(10).expect("valid dimension")),
    ];
    let w1 = vec![1.0; 10];
    let mut failing = Vec::new();
    let mut worst = 0.0_f64;
    let mut seed = 201;
    for (label, problem) in &problems {
        for (sigma0, sigma1) in NOISE_GRID {
            let oracle =
                OracleKind::BoundedAffine(NoiseParams::new(sigma0, sigma1).expect("valid noise"));
            let spec = CoverageSpec {
                target: CoverageTarget::AdaptiveGapBound,
                trials: 500,
                horizon: 1 << 12,
                delta: 0.1,
                eta: 1.0,
                gamma: 1.0,
                alpha: None,
            };
            let outcome =
                coverage_experiment(problem, &oracle, &w1, &spec, seed).expect("coverage runs");
            if !outcome.bound.within_margin() {
                failing.push(format!(
                    "{label} sigma0={sigma0} sigma1={sigma1}: frequency {:.4}",
                    outcome.bound.frequency()
                ));
            }
            worst = worst.max(outcome.bound.frequency());
            seed += 1;
        }
    }
    let band = 0.1 + binomial_margin(0.1, 500);
    let detail = if failing.is_empty() {
        format!("8 settings x 500 trials: worst gap-event frequency {worst:.4} (band {band:.4})")
    } else {
        failing.join("; ")
    };
    verdict(
        2,
        "gap-bound coverage on smooth problems under bounded affine noise",
        failing.is_empty(),
        &detail,
    );
}

#[test]
fn criterion_03_convex_distance_and_rate_coverage() {
    let problem = spread_quadratic();
    let w1 = vec![1.0; 10];
    let mut failing = Vec::new();
    let mut worst_dist = 0.0_f64;
    let mut worst_rate = 0.0_f64;
    let mut seed = 301;
    for (sigma0, sigma1) in NOISE_GRID {
        let oracle =
            OracleKind::BoundedAffine(NoiseParams::new(sigma0, sigma1).expect("valid noise"));
        let spec = CoverageSpec {
            target: CoverageTarget::ConvexDistanceBound,
            trials: 500,
            horizon: 1 << 12,
            delta: 0.1,
            eta: 1.0,
            gamma: 1.0,
            alpha: None,
        };
        let outcome =
            coverage_experiment(&problem, &oracle, &w1, &spec, seed).expect("coverage runs");
        if outcome.bound.frequency() > 0.14 || outcome.rate.frequency() > 0.14 {
            failing.push(format!(
                "sigma0={sigma0} sigma1={sigma1}: distance frequency {:.4}, rate frequency {:.4}",
                outcome.bound.frequency(),
                outcome.rate.frequency()
            ));
        }
        worst_dist = worst_dist.max(outcome.bound.frequency());
        worst_rate = worst_rate.max(outcome.rate.frequency());
        seed += 1;
    }
    let detail = if failing.is_empty() {
        format!(
            "4 settings x 500 trials: worst distance-event frequency {worst_dist:.4}, worst rate-event frequency {worst_rate:.4} (cap 0.14)"
        )
    } else {
        failing.join("; ")
    };
    verdict(
        3,
        "distance-bound and averaged-iterate coverage on a convex quadratic",
        failing.is_empty(),
        &detail,
    );
}

#[test]
fn criterion_04_tuned_gap_bound_coverage() {
    let problems: [(&str, SmoothProblem); 2] = [
        ("quadratic", spread_quadratic()),
        ("sine", SmoothProblem::non_convex_sine(10).expect("valid dimension")),
    ];
    let w1 = vec![1.0; 10];
    let mut failing = Vec::new();
    let mut worst = 0.0_f64;
    let mut seed = 401;
    for (label, problem) in &problems {
        for (sigma0, sigma1) in NOISE_GRID {
            let oracle =
                OracleKind::BoundedAffine(NoiseParams::new(sigma0, sigma1).expect("valid noise"));
            let spec = CoverageSpec {
                target: CoverageTarget::TunedGapBound,
                trials: 500,
                horizon: 1 << 12,
                delta: 0.1,
                // The stepsize is the tuned one; eta/gamma only feed the
                // report's adaptive rows.
                eta: 1.0,
                gamma: 1.0,
                alpha: Some(1.0),
            };
            let outcome =
                coverage_experiment(problem, &oracle, &w1, &spec, seed).expect("coverage runs");
            if outcome.bound.frequency() > 0.14 {
                failing.push(format!(
                    "{label} sigma0={sigma0} sigma1={sigma1}: frequency {:.4}",
                    outcome.bound.frequency()
                ));
            }
            worst = worst.max(outcome.bound.frequency());
            seed += 1;
        }
    }
    let detail = if failing.is_empty() {
        format!("8 settings x 500 trials: worst gap-event frequency {worst:.4} (cap 0.14)")
    } else {
        failing.join("; ")
    };
    verdict(4, "tuned-stepsize gap-bound coverage", failing.is_empty(), &detail);
}

#[test]
fn criterion_05_rate_slope_interpolation() {
    let problem = SmoothProblem::quadratic(&[1.0, 2.0], 6, None, 0.0).expect("valid spectrum");
    let w1 = vec![2.0, -1.0];
    let grid: Vec<u64> = (8..=14).map(|k| 1u64 << k).collect();
    let algo = RateAlgorithm::AdaSgd { eta: 1.0, gamma: 1.0 };

    let fit = |oracle: &OracleKind, metric: RateMetric, seed: u64| {
        rate_fit_experiment(&problem, oracle, &algo, metric, &w1, &grid, 100, seed)
            .expect("rate sweep runs")
            .slope
            .expect("metric means stay positive")
    };
    let noiseless = fit(&OracleKind::Exact, RateMetric::AvgIterateGap, 11);
    let multiplicative = fit(
        &OracleKind::BoundedAffine(NoiseParams::new(0.0, 1.0).expect("valid noise")),
        RateMetric::AvgIterateGap,
        17,
    );
    let additive = fit(
        &OracleKind::BoundedAffine(NoiseParams::new(1.0, 0.0).expect("valid noise")),
        RateMetric::MeanGradNormSq,
        19,
    );

    let pass = noiseless <= -0.85
        && multiplicative <= -0.85
        && (-0.65..=-0.35).contains(&additive);
    verdict(
        5,
        "rate-exponent interpolation between the fast and additive-noise regimes",
        pass,
        &format!(
            "noiseless slope {noiseless:.4} (<= -0.85), multiplicative-only slope {multiplicative:.4} (<= -0.85), additive-dominant slope {additive:.4} (in [-0.65, -0.35])"
        ),
    );
}

#[test]
fn criterion_06_offset_drift_lower_bound() {
    // gamma sweeps [sigma, sigma*sqrt(T)]; the curvature sits at half its
    // admissible cap sigma/T^(3/2).
    let outcome = lower_bound_experiment(1.0, &[1.0, 4.0, 16.0, 100.0], 10_000, 5e-7)
        .expect("sweep runs");
    let worst_track = outcome
        .rows
        .iter()
        .map(|r| (r.w_final - r.full_sum).abs() / r.full_sum)
        .fold(0.0_f64, f64::max);
    let min_normalized =
        outcome.rows.iter().map(|r| r.normalized).fold(f64::INFINITY, f64::min);
    let floors = outcome.rows.iter().all(|r| r.w_final >= r.half_sum && r.min_iterate >= 0.0);
    let monotone = outcome.rows.windows(2).all(|w| w[0].w_final > w[1].w_final);
    verdict(
        6,
        "accumulator-offset drift floor under the adversarial oracle",
        outcome.pass && floors && monotone,
        &format!(
            "4 offsets: every drift >= its analytical floor, tracks the full drift sum within {:.2}% (cap 10%), min normalized drift {min_normalized:.4} (>= 0.25), drift monotone in the offset",
            100.0 * worst_track
        ),
    );
}

struct TruncationStats {
    worst_norm: f64,
    hard_cap: f64,
    differ_freq: f64,
    mean_norm: f64,
}

/// Draws isotropic sub-Gaussian noise around a zero gradient (matching the
/// unbounded oracle's per-coordinate scale σ/√(2d)), pushes each draw through
/// the truncation wrapper, and reports the worst output norm, how often the
/// output differs from the inner draw, and the empirical mean norm.
fn truncation_trial(delta: f64, draws: u64, seed: u64) -> TruncationStats {
    const DIM: usize = 3;
    let sigma = 1.0_f64;
    let std = sigma / (2.0 * DIM as f64).sqrt();
    let true_grad = [0.0_f64; DIM];
    let mut rng = RngStream::new(seed, 0);
    let mut worst_norm = 0.0_f64;
    let mut differs = 0_u64;
    let mut mean = [0.0_f64; DIM];
    for _ in 0..draws {
        let inner: Vec<f64> =
            (0..DIM).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect();
        let out = truncate_sample(inner.clone(), &true_grad, sigma, delta, &mut rng, |r| {
            Ok((0..DIM).map(|_| std * r.sample::<f64, _>(StandardNormal)).collect())
        })
        .expect("truncation stays within the retry cap");
        if out != inner {
            differs += 1;
        }
        worst_norm = worst_norm.max(norm_sq(&out).sqrt());
        for (m, o) in mean.iter_mut().zip(&out) {
            *m += o;
        }
    }
    for m in &mut mean {
        *m /= draws as f64;
    }
    TruncationStats {
        worst_norm,
        hard_cap: 3.0 * sigma * (4.0 / delta).ln().sqrt(),
        differ_freq: differs as f64 / draws as f64,
        mean_norm: norm_sq(&mean).sqrt(),
    }
}

#[test]
fn criterion_07_truncated_noise_properties() {
    let mut all = true;
    let mut details = Vec::new();
    for (delta, seed) in [(0.04, 71), (0.1, 72)] {
        let stats = truncation_trial(delta, 100_000, seed);
        let ok = stats.worst_norm < stats.hard_cap
            && stats.differ_freq <= delta + 0.01
            && stats.mean_norm <= 0.02;
        all &= ok;
        details.push(format!(
            "delta={delta}: worst norm {:.4} < cap {:.4}, rewrite rate {:.4} <= {:.4}, mean norm {:.5} <= 0.02",
            stats.worst_norm,
            stats.hard_cap,
            stats.differ_freq,
            delta + 0.01,
            stats.mean_norm
        ));
    }
    verdict(
        7,
        "truncated oracle: hard noise cap, rewrite rate, and centering",
        all,
        &details.join("; "),
    );
}

#[test]
fn criterion_08_concentration_failure_frequency() {
    let batches: [(&str, ConcentrationKind, GeneratorSpec, u64); 4] = [
        ("mgf/rademacher", ConcentrationKind::MgfMartingale { lambda: 1.0 }, GeneratorSpec::Rademacher, 21),
        ("mgf/uniform", ConcentrationKind::MgfMartingale { lambda: 1.0 }, GeneratorSpec::Uniform, 22),
        ("bernstein/rademacher", ConcentrationKind::EmpiricalBernstein, GeneratorSpec::Rademacher, 23),
        ("bernstein/biased-coin", ConcentrationKind::EmpiricalBernstein, GeneratorSpec::BiasedCoin { p: 0.9 }, 24),
    ];
    let mut failing = Vec::new();
    let mut worst = 0.0_f64;
    for (label, kind, generator, seed) in batches {
        let result =
            concentration_trial(kind, generator, 0.05, 100, 10_000, seed).expect("trials run");
        if !result.within_margin() {
            failing.push(format!("{label}: frequency {:.5}", result.frequency()));
        }
        worst = worst.max(result.frequency());
    }
    let band = 0.05 + binomial_margin(0.05, 10_000);
    let detail = if failing.is_empty() {
        format!("4 batches x 10000 sequences: worst failure frequency {worst:.5} (band {band:.5})")
    } else {
        failing.join("; ")
    };
    verdict(8, "concentration inequality failure frequencies", failing.is_empty(), &detail);
}

#[test]
fn criterion_09_closed_form_spot_checks() {
    let inputs = |beta: f64,
                  sigma0: f64,
                  sigma1: f64,
                  gamma: f64,
                  horizon: u64,
                  delta: f64,
                  delta1: f64,
                  alpha: Option<f64>| BoundInputs {
        beta,
        sigma0,
        sigma1,
        eta: 1.0,
        gamma,
        horizon,
        delta,
        delta1,
        d1: 0.0,
        alpha,
    };

    let mut failures = Vec::new();
    let mut check = |label: &str, actual: f64, expected: f64| {
        if !((actual - expected).abs() <= 1e-9 * expected.abs()) {
            failures.push(format!("{label}: got {actual}, want {expected}"));
        }
    };

    // Noiseless two-step sum constant: log2(1 + 8*8/4) = log2(17).
    let a = inputs(1.0, 0.0, 0.0, 2.0, 2, 0.5, 0.0, None);
    check("c1 noiseless", bounds::c1(&a).expect("valid inputs"), 4.087462841250339);
    // One noisy step: log2(1 + 2 + 8) = log2(11).
    let b = inputs(1.0, 1.0, 0.0, 1.0, 1, 0.5, 0.0, None);
    check("c1 additive", bounds::c1(&b).expect("valid inputs"), 3.4594316186372973);

    // Curvature-free gap bound: F = 2 + (3 + 4*C1) with C1 = log2(3), since
    // beta = 0 kills the quadratic terms and log2(T/delta) = 1.
    let c = inputs(0.0, 1.0, 0.0, 1.0, 1, 0.5, 1.0, None);
    let c1_c = bounds::c1(&c).expect("valid inputs");
    check("c1 for the flat case", c1_c, 1.584962500721156);
    let f_c = bounds::f_bound(&c).expect("valid inputs");
    check("gap bound, flat case", f_c, 11.339850002884624);
    check("gap bound self-consistency", f_c, 2.0 + 3.0 + 4.0 * c1_c);

    // Tuned gap bound: 2 + 2 + 3*min{1/4, 1/4}*log2(64) = 8.5.
    let d = inputs(1.0, 1.0, 0.0, 1.0, 16, 0.25, 1.0, Some(1.0));
    check("tuned gap bound", bounds::known_f_bound(&d).expect("valid inputs"), 8.5);

    // Tuned stepsize: min{1/4, 1/10} = 1/10.
    let ks = |beta, sigma0, sigma1, delta, horizon, alpha| {
        known_stepsize(
            &KnownParamConfig::new(beta, sigma0, sigma1, delta, horizon, alpha)
                .expect("valid config"),
        )
    };
    check("tuned stepsize, additive", ks(1.0, 1.0, 0.0, 0.1, 100, 1.0), 0.1);
    // Noiseless branch: 1/(4*beta).
    check("tuned stepsize, noiseless", ks(1.0, 0.0, 0.0, 0.1, 100, 1.0), 0.25);
    // Multiplicative noise with log2(T/delta) = 16: 1/(4*17) = 1/68.
    check(
        "tuned stepsize, multiplicative",
        ks(1.0, 1e-6, 1.0, 2.0_f64.powi(-6), 1024, 1.0),
        1.0 / 68.0,
    );

    let pass = failures.is_empty();
    let detail = if pass {
        "9 closed-form values match to 1e-9 relative".to_string()
    } else {
        failures.join("; ")
    };
    verdict(9, "closed-form bound and stepsize spot checks", pass, &detail);
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

/// Runs the compiled binary on `config`, writing artifacts into `out_dir`.
fn run_binary(config: &Path, out_dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_adasgd"))
        .arg("run-config")
        .arg(config)
        .arg("--output-dir")
        .arg(out_dir)
        .output()
        .expect("binary runs")
}

/// All artifact files in a directory as (name, bytes), sorted by name.
fn dir_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .expect("output dir readable")
        .map(|entry| {
            let entry = entry.expect("dir entry");
            (
                entry.file_name().into_string().expect("utf8 file name"),
                fs::read(entry.path()).expect("artifact readable"),
            )
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    entries
}

#[test]
fn criterion_10_rerun_reproducibility() {
    let tmp = TempDir::new().expect("temp dir");
    let mut all = true;
    let mut files = 0_usize;
    let mut bytes = 0_usize;
    // One deterministic trajectory config and one parallel Monte-Carlo
    // config, each run twice into fresh directories.
    for (i, name) in ["smoke_run.json", "coverage_adaptive_gap.json"].iter().enumerate() {
        let config = repo_config(name);
        let first_dir = tmp.path().join(format!("first_{i}"));
        let second_dir = tmp.path().join(format!("second_{i}"));
        for dir in [&first_dir, &second_dir] {
            let output = run_binary(&config, dir);
            assert_eq!(
                output.status.code(),
                Some(0),
                "{name} should pass; stderr: {}",
                String::from_utf8_lossy(&output.stderr)
            );
        }
        let first = dir_snapshot(&first_dir);
        let second = dir_snapshot(&second_dir);
        all &= first == second;
        files += first.len();
        bytes += first.iter().map(|(_, b)| b.len()).sum::<usize>();
    }
    verdict(
        10,
        "byte-identical artifact reproduction on config re-runs",
        all,
        &format!("2 configs x 2 runs: {files} artifacts ({bytes} bytes) byte-identical"),
    );
}
