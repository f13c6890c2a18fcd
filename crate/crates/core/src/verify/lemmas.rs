//! Deterministic inequality checks applied to recorded trajectories.
//!
//! Every checker in this file asserts a relation that holds with probability
//! one on any run the optimizer can produce (given a matching almost-sure
//! noise bound where one is required), so a single violation beyond
//! floating-point slack is an implementation bug, not bad luck. Checks are
//! applied at every prefix, not just the full horizon: a prefix of a run is
//! itself a run, so each per-horizon statement must also hold along the way.

use super::VerifyError;
use crate::bounds::{c1, BoundInputs};
use crate::objectives::{Point, SmoothProblem};
use crate::optimizer::{decorrelated_stepsizes, run, AdaSgdConfig, AlgorithmConfig, Trajectory};
use crate::oracles::{NoiseParams, OracleKind, RngStream};
use rayon::prelude::*;
use serde::Serialize;

/// Relative slack allowed before an inequality counts as violated. The
/// checked statements are exact, so this only absorbs floating-point
/// round-off.
const TOL_REL: f64 = 1e-9;

/// Outcome of one inequality check over a trajectory or sequence.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaCheck {
    /// True when every observed inequality held within tolerance.
    pub pass: bool,
    /// Smallest observed `rhs − lhs` (infinite when nothing was checked).
    pub min_slack: f64,
    /// Step/prefix index (1-based) at which the smallest slack occurred.
    pub worst_step: Option<u64>,
    /// Number of individual inequalities evaluated.
    pub checks: u64,
}

impl LemmaCheck {
    fn new() -> Self {
        Self { pass: true, min_slack: f64::INFINITY, worst_step: None, checks: 0 }
    }

    /// Records one `lhs ≤ rhs` observation. Non-finite values fail the check.
    fn observe(&mut self, lhs: f64, rhs: f64, step: u64) {
        self.checks += 1;
        let slack = rhs - lhs;
        let tol = TOL_REL * lhs.abs().max(rhs.abs()).max(1.0);
        if !(slack >= -tol) {
            self.pass = false;
        }
        let keyed = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        if keyed < self.min_slack || self.worst_step.is_none() {
            self.min_slack = keyed;
            self.worst_step = Some(step);
        }
    }
}

/// Checks the two weighted-sum bounds of the gradient accumulator: for every
/// prefix of the sequence, with `G_t² = G₀² + Σ_{s≤t} ‖g_s‖²`,
///
/// ```text
/// Σ_{t} ‖g_t‖²/G_t  ≤ 2·sqrt(Σ_t ‖g_t‖²)
/// Σ_{t} ‖g_t‖²/G_t² ≤ 2·log₂(G_T/G₀)
/// ```
///
/// These hold for arbitrary non-negative inputs, independent of where the
/// sequence came from.
pub fn check_accumulator_sum_bounds(
    g_norm_sq: &[f64],
    g0: f64,
) -> Result<LemmaCheck, VerifyError> {
    if !(g0.is_finite() && g0 > 0.0) {
        return Err(VerifyError::InvalidSpec(format!(
            "accumulator offset must be a positive finite number, got {g0}"
        )));
    }
    if let Some(bad) = g_norm_sq.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(VerifyError::InvalidSpec(format!(
            "squared gradient norms must be finite and non-negative, got {bad}"
        )));
    }
    let mut check = LemmaCheck::new();
    let g0_sq = g0 * g0;
    let mut acc = g0_sq;
    let mut raw_sum = 0.0;
    let mut ratio_lin = 0.0;
    let mut ratio_sq = 0.0;
    for (i, &x) in g_norm_sq.iter().enumerate() {
        let t = i as u64 + 1;
        acc += x;
        raw_sum += x;
        ratio_lin += x / acc.sqrt();
        ratio_sq += x / acc;
        check.observe(ratio_lin, 2.0 * raw_sum.sqrt(), t);
        check.observe(ratio_sq, 2.0 * (acc / g0_sq).sqrt().log2(), t);
    }
    Ok(check)
}

/// Checks the adaptive-run regret inequality on every prefix `t`:
///
/// ```text
/// Σ_{s≤t} ∇f(w_s)·g_s ≤ γΔ₁/η + (2Δ̄_t/η + ηβ)·sqrt(Σ_{s≤t} ‖g_s‖²)
/// ```
///
/// a deterministic consequence of `β`-smoothness; no noise assumption is
/// needed. The trajectory must come from an adaptive run with `config`.
pub fn check_gradient_regret(
    trajectory: &Trajectory,
    beta: f64,
    config: &AdaSgdConfig,
) -> LemmaCheck {
    let mut check = LemmaCheck::new();
    let Some(first) = trajectory.steps.first() else {
        return check;
    };
    let delta1 = first.f_gap;
    let mut lhs = 0.0;
    let mut g_sq_sum = 0.0;
    for s in &trajectory.steps {
        lhs += s.grad_dot_g;
        g_sq_sum += s.g_norm_sq;
        let rhs = config.gamma * delta1 / config.eta
            + (2.0 * s.delta_bar / config.eta + config.eta * beta) * g_sq_sum.sqrt();
        check.observe(lhs, rhs, s.t);
    }
    check
}

/// Checks that the accumulated stepsize-ratio sum stays below its closed-form
/// cap on every prefix:
///
/// ```text
/// Σ_{s≤t} ‖g_s‖²/G_s² ≤ c1(inputs at horizon t)
/// ```
///
/// Valid only under an almost-sure affine noise bound, so `inputs` must carry
/// the oracle's almost-sure `(σ₀, σ₁)` (not merely sub-Gaussian scales) and a
/// horizon equal to the trajectory length.
pub fn check_ratio_sum_bound(
    trajectory: &Trajectory,
    inputs: &BoundInputs,
) -> Result<LemmaCheck, VerifyError> {
    if inputs.horizon != trajectory.steps.len() as u64 {
        return Err(VerifyError::InvalidSpec(format!(
            "inputs horizon {} does not match trajectory length {}",
            inputs.horizon,
            trajectory.steps.len()
        )));
    }
    let mut check = LemmaCheck::new();
    let mut ratio_sq = 0.0;
    let mut prefix = inputs.clone();
    for s in &trajectory.steps {
        ratio_sq += s.g_norm_sq / s.g_sq_accum;
        prefix.horizon = s.t;
        check.observe(ratio_sq, c1(&prefix)?, s.t);
    }
    Ok(check)
}

/// Checks the decorrelated-stepsize comparison on an adaptive-run trajectory:
/// pointwise, at every step `s`,
///
/// ```text
/// |η̃_s − η_s| ≤ 2·η̃_s·sqrt(σ₀² + σ₁²‖∇f(w_s)‖²) / G_s
/// ```
///
/// and for every prefix `t`,
///
/// ```text
/// Σ_{s≤t} |η̃_s − η_s|·(∇f(w_s)·g_s)
///   ≤ Δ̄_t/4 + ½·Σ_{s≤t} η̃_s‖∇f(w_s)‖²
///     + 2ησ₀·R_t + 8η²βσ₁²·R_t²      where R_t = Σ_{s≤t} ‖g_s‖²/G_s²
/// ```
///
/// Both require `(σ₀, σ₁)` to be an almost-sure noise bound for the run.
pub fn check_decorrelated_stepsize_bounds(
    trajectory: &Trajectory,
    noise: &NoiseParams,
    beta: f64,
    config: &AdaSgdConfig,
) -> LemmaCheck {
    let mut check = LemmaCheck::new();
    let pairs = decorrelated_stepsizes(trajectory, noise, config);
    let s0_sq = noise.sigma0 * noise.sigma0;
    let s1_sq = noise.sigma1 * noise.sigma1;
    let mut lhs_sum = 0.0;
    let mut tilde_grad_sum = 0.0;
    let mut ratio_sq = 0.0;
    for (s, &(tilde, _)) in trajectory.steps.iter().zip(&pairs) {
        let diff = (tilde - s.eta_t).abs();
        let g_t = s.g_sq_accum.sqrt();
        check.observe(diff, 2.0 * tilde * (s0_sq + s1_sq * s.grad_norm_sq).sqrt() / g_t, s.t);

        lhs_sum += diff * s.grad_dot_g;
        tilde_grad_sum += tilde * s.grad_norm_sq;
        ratio_sq += s.g_norm_sq / s.g_sq_accum;
        let rhs = s.delta_bar / 4.0
            + 0.5 * tilde_grad_sum
            + 2.0 * config.eta * noise.sigma0 * ratio_sq
            + 8.0 * config.eta * config.eta * beta * s1_sq * ratio_sq * ratio_sq;
        check.observe(lhs_sum, rhs, s.t);
    }
    check
}

/// Checks the self-bounding gradient property `‖∇f(w)‖² ≤ 2β(f(w) − f*)` on
/// pre-evaluated `(‖∇f(w)‖², f(w) − f*)` pairs.
pub fn check_self_bounding_records(beta: f64, records: &[(f64, f64)]) -> LemmaCheck {
    let mut check = LemmaCheck::new();
    for (i, &(grad_norm_sq, f_gap)) in records.iter().enumerate() {
        check.observe(grad_norm_sq, 2.0 * beta * f_gap, i as u64 + 1);
    }
    check
}

/// [`check_self_bounding_records`] with the values and gradients evaluated
/// here, at arbitrary sample points of a smooth problem.
pub fn check_self_bounding_gradient(
    problem: &SmoothProblem,
    points: &[Point],
) -> Result<LemmaCheck, VerifyError> {
    let mut records = Vec::with_capacity(points.len());
    for w in points {
        let grad = problem.gradient(w)?;
        let gap = problem.value(w)? - problem.f_star();
        records.push((crate::objectives::norm_sq(&grad), gap));
    }
    Ok(check_self_bounding_records(problem.beta(), &records))
}

/// Checks the distance-based regret inequality on every prefix of a convex
/// adaptive run with a known minimizer:
///
/// ```text
/// Σ_{s≤t} g_s·(w_s − w*) ≤ (d̄_t²/η + η)·sqrt(Σ_{s≤t} ‖g_s‖²) + γd₁²/(2η)
/// ```
pub fn check_distance_regret(
    trajectory: &Trajectory,
    config: &AdaSgdConfig,
) -> Result<LemmaCheck, VerifyError> {
    let mut check = LemmaCheck::new();
    let Some(first) = trajectory.steps.first() else {
        return Ok(check);
    };
    let d1_sq = first.dist_sq.ok_or_else(|| {
        VerifyError::InvalidSpec("distance regret requires a trajectory with minimizer distances".into())
    })?;
    let mut lhs = 0.0;
    let mut g_sq_sum = 0.0;
    for s in &trajectory.steps {
        let dot = s.g_dot_dist.ok_or_else(|| {
            VerifyError::InvalidSpec("trajectory step lacks g·(w − w*) data".into())
        })?;
        let d_bar_sq = s.d_bar_sq.ok_or_else(|| {
            VerifyError::InvalidSpec("trajectory step lacks running max distance".into())
        })?;
        lhs += dot;
        g_sq_sum += s.g_norm_sq;
        let rhs = (d_bar_sq / config.eta + config.eta) * g_sq_sum.sqrt()
            + config.gamma * d1_sq / (2.0 * config.eta);
        check.observe(lhs, rhs, s.t);
    }
    Ok(check)
}

/// Aggregated result of one named check across all matrix runs.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaMatrixRow {
    pub check: &'static str,
    /// Runs on which this check was applicable.
    pub runs: u64,
    /// Total inequality evaluations across those runs.
    pub checks: u64,
    /// Runs with at least one violated inequality.
    pub violations: u64,
    /// Smallest slack seen anywhere (infinite if never applicable).
    pub min_slack: f64,
    /// Run index attaining the smallest slack.
    pub worst_run: Option<u64>,
}

impl LemmaMatrixRow {
    fn new(check: &'static str) -> Self {
        Self { check, runs: 0, checks: 0, violations: 0, min_slack: f64::INFINITY, worst_run: None }
    }

    fn absorb(&mut self, run: u64, c: &LemmaCheck) {
        self.runs += 1;
        self.checks += c.checks;
        if !c.pass {
            self.violations += 1;
        }
        let keyed = if c.min_slack.is_nan() { f64::NEG_INFINITY } else { c.min_slack };
        if keyed < self.min_slack || self.worst_run.is_none() {
            self.min_slack = keyed;
            self.worst_run = Some(run);
        }
    }
}

/// Summary of the deterministic-inequality matrix.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaMatrixOutcome {
    pub seed: u64,
    pub runs: u64,
    pub horizon: u64,
    pub rows: Vec<LemmaMatrixRow>,
    /// True iff no run violated any applicable inequality.
    pub pass: bool,
}

const CHECK_NAMES: [&str; 6] = [
    "accumulator_sum_bounds",
    "gradient_regret",
    "ratio_sum_bound",
    "decorrelated_stepsize_bounds",
    "self_bounding_gradient",
    "distance_regret",
];

struct MatrixCase {
    problem: SmoothProblem,
    w1: Point,
    oracle: OracleKind,
    config: AdaSgdConfig,
}

fn matrix_case(index: u64, horizon: u64) -> Result<MatrixCase, VerifyError> {
    let problems: [(SmoothProblem, Point); 3] = [
        (
            SmoothProblem::quadratic(&[0.5, 1.0, 2.0, 4.0], 7, None, 0.0)?,
            vec![1.0, -1.0, 0.5, 2.0],
        ),
        (SmoothProblem::non_convex_sine(3)?, vec![0.9, -1.7, 0.4]),
        (SmoothProblem::quadratic(&[1.0], 0, None, 0.0)?, vec![2.0]),
    ];
    let oracles: [OracleKind; 6] = [
        OracleKind::Exact,
        OracleKind::BoundedAffine(NoiseParams::new(1.0, 0.0)?),
        OracleKind::BoundedAffine(NoiseParams::new(0.5, 1.0)?),
        OracleKind::BoundedAffine(NoiseParams::new(0.0, 1.0)?),
        OracleKind::SubGaussianAffine(NoiseParams::new(1.0, 0.5)?),
        OracleKind::Truncated {
            inner: Box::new(OracleKind::SubGaussianAffine(NoiseParams::new(1.0, 0.5)?)),
            delta_prime: 0.1,
            horizon,
        },
    ];
    let stepsizes: [(f64, f64); 4] = [(1.0, 1.0), (0.1, 1.0), (1.0, 0.1), (2.0, 5.0)];

    let n_oracle = oracles.len() as u64;
    let n_step = stepsizes.len() as u64;
    let p = (index / (n_oracle * n_step)) as usize % problems.len();
    let o = ((index / n_step) % n_oracle) as usize;
    let s = (index % n_step) as usize;

    let (problem, w1) = problems[p].clone();
    let oracle = oracles[o].clone();
    let (eta, gamma) = stepsizes[s];
    Ok(MatrixCase { problem, w1, oracle, config: AdaSgdConfig::new(eta, gamma)? })
}

/// Runs every applicable deterministic check over `runs` seeded adaptive
/// trajectories, cycling through a grid of problems × oracles × stepsize
/// settings. Checks requiring an almost-sure noise bound are skipped for
/// unbounded oracles, and the distance-based check is skipped on non-convex
/// problems; everything else runs everywhere.
pub fn lemma_matrix(seed: u64, runs: u64, horizon: u64) -> Result<LemmaMatrixOutcome, VerifyError> {
    if runs == 0 || horizon == 0 {
        return Err(VerifyError::InvalidSpec("matrix needs runs ≥ 1 and horizon ≥ 1".into()));
    }
    let per_run: Vec<Vec<(usize, LemmaCheck)>> = (0..runs)
        .into_par_iter()
        .map(|r| -> Result<Vec<(usize, LemmaCheck)>, VerifyError> {
            let case = matrix_case(r, horizon)?;
            case.oracle.validate(&case.problem)?;
            let mut rng = RngStream::new(seed, r);
            let trajectory = run(
                &case.problem,
                &case.oracle,
                &AlgorithmConfig::AdaSgd(case.config.clone()),
                case.w1.clone(),
                horizon,
                &mut rng,
            )?;
            let beta = case.problem.beta();
            let mut out = Vec::with_capacity(6);

            let g_norms: Vec<f64> = trajectory.steps.iter().map(|s| s.g_norm_sq).collect();
            out.push((0, check_accumulator_sum_bounds(&g_norms, case.config.gamma)?));
            out.push((1, check_gradient_regret(&trajectory, beta, &case.config)));

            if let Some(np) = case.oracle.affine_bound_params() {
                let inputs = BoundInputs {
                    beta,
                    sigma0: np.sigma0,
                    sigma1: np.sigma1,
                    eta: case.config.eta,
                    gamma: case.config.gamma,
                    horizon,
                    delta: 0.5,
                    delta1: trajectory.steps[0].f_gap.max(0.0),
                    d1: 0.0,
                    alpha: None,
                };
                out.push((2, check_ratio_sum_bound(&trajectory, &inputs)?));
                out.push((3, check_decorrelated_stepsize_bounds(&trajectory, &np, beta, &case.config)));
            }

            let mut records: Vec<(f64, f64)> =
                trajectory.steps.iter().map(|s| (s.grad_norm_sq, s.f_gap)).collect();
            records.push((trajectory.final_grad_norm_sq, trajectory.final_f_gap));
            out.push((4, check_self_bounding_records(beta, &records)));

            if case.problem.is_convex() && case.problem.minimizer().is_some() {
                out.push((5, check_distance_regret(&trajectory, &case.config)?));
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;

    let mut rows: Vec<LemmaMatrixRow> = CHECK_NAMES.iter().map(|n| LemmaMatrixRow::new(n)).collect();
    for (r, checks) in per_run.iter().enumerate() {
        for (slot, check) in checks {
            rows[*slot].absorb(r as u64, check);
        }
    }
    let pass = rows.iter().all(|row| row.violations == 0);
    Ok(LemmaMatrixOutcome { seed, runs, horizon, rows, pass })
}
