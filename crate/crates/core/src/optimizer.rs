//! SGD loop with either adaptive (accumulated-gradient-normalised) or fixed
//! tuned stepsizes, plus the per-step trajectory record the verification
//! harness consumes.
//!
//! The adaptive update is
//!
//! ```text
//! G_t  = sqrt(γ² + Σ_{s ≤ t} ‖g_s‖²)      (the current draw included)
//! η_t  = η / G_t
//! w_{t+1} = w_t − η_t · g_t
//! ```
//!
//! so the stepsize at step `t` already reflects the gradient it multiplies.
//! The tuned variant uses a constant stepsize chosen from known problem and
//! noise parameters via [`known_stepsize`].

use crate::objectives::{dist_sq, norm_sq, Point, ProblemError, SmoothProblem};
use crate::oracles::{GradientSource, NoiseParams, OracleError, RngStream};
use serde::Serialize;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite value encountered at step {step}: {what}")]
    NumericFailure { step: u64, what: String },
}

/// Adaptive-stepsize parameters: scale `eta` (η) and warmup offset `gamma`
/// (γ), both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaSgdConfig {
    pub eta: f64,
    pub gamma: f64,
}

impl AdaSgdConfig {
    pub fn new(eta: f64, gamma: f64) -> Result<Self, OptimizerError> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(OptimizerError::InvalidConfig("eta must be positive".into()));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(OptimizerError::InvalidConfig("gamma must be positive".into()));
        }
        Ok(Self { eta, gamma })
    }
}

/// Inputs for the tuned constant stepsize: smoothness `beta`, noise scales,
/// confidence `delta`, horizon, and the distance scale `alpha` balancing the
/// two stepsize branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KnownParamConfig {
    pub beta: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub delta: f64,
    pub horizon: u64,
    pub alpha: f64,
}

impl KnownParamConfig {
    pub fn new(
        beta: f64,
        sigma0: f64,
        sigma1: f64,
        delta: f64,
        horizon: u64,
        alpha: f64,
    ) -> Result<Self, OptimizerError> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(OptimizerError::InvalidConfig("beta must be positive".into()));
        }
        if !(sigma0.is_finite() && sigma0 >= 0.0) || !(sigma1.is_finite() && sigma1 >= 0.0) {
            return Err(OptimizerError::InvalidConfig(
                "noise scales must be finite and non-negative".into(),
            ));
        }
        if !(delta > 0.0 && delta < 0.5) {
            return Err(OptimizerError::InvalidConfig(
                "delta must lie in (0, 0.5) for the tuned stepsize".into(),
            ));
        }
        if horizon < 2 {
            return Err(OptimizerError::InvalidConfig("horizon must be at least 2".into()));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(OptimizerError::InvalidConfig("alpha must be positive".into()));
        }
        Ok(Self { beta, sigma0, sigma1, delta, horizon, alpha })
    }
}

/// Which stepsize rule [`run`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AlgorithmConfig {
    AdaSgd(AdaSgdConfig),
    KnownParam(KnownParamConfig),
}

/// Iterate, accumulated squared gradient mass (including γ²), and step count.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub w: Point,
    /// `γ² + Σ_{s ≤ t} ‖g_s‖²` after `t` steps; starts at `γ²`.
    pub g_sq_accum: f64,
    pub t: u64,
}

impl OptimizerState {
    pub fn init(w1: Point, config: &AdaSgdConfig) -> Self {
        Self { w: w1, g_sq_accum: config.gamma * config.gamma, t: 0 }
    }
}

/// One adaptive step: folds `g` into the accumulator, then moves against `g`
/// with the post-accumulation stepsize `η / sqrt(accumulator)`.
pub fn ada_step(
    state: &OptimizerState,
    g: &[f64],
    config: &AdaSgdConfig,
) -> Result<OptimizerState, OptimizerError> {
    if g.len() != state.w.len() {
        return Err(OptimizerError::Problem(ProblemError::DimensionMismatch {
            expected: state.w.len(),
            got: g.len(),
        }));
    }
    let g_sq = norm_sq(g);
    if !g_sq.is_finite() {
        return Err(OptimizerError::NumericFailure {
            step: state.t + 1,
            what: "gradient estimate is non-finite".into(),
        });
    }
    let g_sq_accum = state.g_sq_accum + g_sq;
    let eta_t = config.eta / g_sq_accum.sqrt();
    let w: Point = state.w.iter().zip(g).map(|(wi, gi)| wi - eta_t * gi).collect();
    if w.iter().any(|x| !x.is_finite()) {
        return Err(OptimizerError::NumericFailure {
            step: state.t + 1,
            what: "iterate is non-finite".into(),
        });
    }
    Ok(OptimizerState { w, g_sq_accum, t: state.t + 1 })
}

/// The tuned constant stepsize
/// `min{ 1 / (4β(1 + σ₁²·log₂(T/δ))),  α / (σ₀·√T) }`;
/// the second branch is `+∞` (so the first always wins) when `σ₀ = 0`.
pub fn known_stepsize(config: &KnownParamConfig) -> f64 {
    let t = config.horizon as f64;
    let first =
        1.0 / (4.0 * config.beta * (1.0 + config.sigma1 * config.sigma1 * (t / config.delta).log2()));
    let second = if config.sigma0 == 0.0 {
        f64::INFINITY
    } else {
        config.alpha / (config.sigma0 * t.sqrt())
    };
    first.min(second)
}

/// Per-step record captured before the step is taken, at the pre-step iterate
/// `w_t`: suboptimality gap, gradient norms, the realised stepsize, the
/// post-accumulation gradient mass, and the inner products the deterministic
/// inequality checks need.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: u64,
    /// `f(w_t) − f*`.
    pub f_gap: f64,
    /// `‖∇f(w_t)‖²`.
    pub grad_norm_sq: f64,
    /// `‖w_t − w*‖²`, when the problem exposes a minimizer.
    pub dist_sq: Option<f64>,
    /// The stepsize multiplying `g_t` (constant for the tuned variant).
    pub eta_t: f64,
    /// `γ² + Σ_{s ≤ t} ‖g_s‖²` after the draw at step `t` (adaptive), or
    /// `Σ_{s ≤ t} ‖g_s‖²` for the tuned variant (no γ offset).
    pub g_sq_accum: f64,
    /// `‖g_t − ∇f(w_t)‖²`.
    pub noise_norm_sq: f64,
    /// `‖g_t‖²`.
    pub g_norm_sq: f64,
    /// `∇f(w_t) · g_t`.
    pub grad_dot_g: f64,
    /// `g_t · (w_t − w*)`, when the problem exposes a minimizer.
    pub g_dot_dist: Option<f64>,
    /// Running maximum gap `max_{s ≤ t} (f(w_s) − f*)`.
    pub delta_bar: f64,
    /// Running maximum squared distance `max_{s ≤ t} ‖w_s − w*‖²`.
    pub d_bar_sq: Option<f64>,
}

/// Full record of one optimization run over horizon `T`: `T` step records
/// plus the final iterate's metrics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
    /// `f(w_{T+1}) − f*`.
    pub final_f_gap: f64,
    /// `‖∇f(w_{T+1})‖²`.
    pub final_grad_norm_sq: f64,
    /// `‖w_{T+1} − w*‖²`, when available.
    pub final_dist_sq: Option<f64>,
    pub final_w: Point,
    /// The running average `(1/T)Σ w_t` over steps `1..=T`.
    pub avg_w: Point,
    /// `f(avg_w) − f*`.
    pub avg_f_gap: f64,
    /// Full iterates `w_1, …, w_{T+1}` when iterate recording was requested
    /// (debug aid for small horizons; `None` otherwise to keep memory at
    /// O(T) scalars).
    pub iterates: Option<Vec<Point>>,
}

impl Trajectory {
    /// Largest suboptimality gap over `w_1, …, w_{T+1}`.
    pub fn max_f_gap(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.f_gap)
            .fold(self.final_f_gap, f64::max)
    }

    /// Largest squared distance to the minimizer over `w_1, …, w_{T+1}`;
    /// `None` if the problem has no declared minimizer.
    pub fn max_dist_sq(&self) -> Option<f64> {
        let mut m = self.final_dist_sq?;
        for s in &self.steps {
            m = m.max(s.dist_sq?);
        }
        Some(m)
    }

    /// Mean of `‖∇f(w_t)‖²` over steps `1..=T`.
    pub fn mean_grad_norm_sq(&self) -> f64 {
        let t = self.steps.len().max(1) as f64;
        self.steps.iter().map(|s| s.grad_norm_sq).sum::<f64>() / t
    }

    /// `Σ_{s ≤ T} ‖g_s‖²` plus any γ² offset: the accumulator after the last
    /// step.
    pub fn final_g_sq_accum(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.g_sq_accum)
    }

    /// Writes the trajectory as CSV: one row per step plus a final row for
    /// `w_{T+1}` (with the stepsize and noise columns empty, since no step is
    /// taken there). Floats use shortest round-trip formatting, so files are
    /// byte-stable across runs.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), std::io::Error> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record([
            "t",
            "f_gap",
            "grad_norm_sq",
            "dist_sq",
            "eta_t",
            "g_sq_accum",
            "noise_norm_sq",
        ])?;
        let fmt = |x: f64| x.to_string();
        let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
        for s in &self.steps {
            wtr.write_record([
                s.t.to_string(),
                fmt(s.f_gap),
                fmt(s.grad_norm_sq),
                opt(s.dist_sq),
                fmt(s.eta_t),
                fmt(s.g_sq_accum),
                fmt(s.noise_norm_sq),
            ])?;
        }
        wtr.write_record([
            (self.steps.len() as u64 + 1).to_string(),
            fmt(self.final_f_gap),
            fmt(self.final_grad_norm_sq),
            opt(self.final_dist_sq),
            String::new(),
            fmt(self.final_g_sq_accum()),
            String::new(),
        ])?;
        wtr.flush()
    }
}

/// Runs `horizon` steps of SGD from `w1` with gradients drawn from `source`,
/// recording per-step metrics at each pre-step iterate.
pub fn run<S: GradientSource + ?Sized>(
    problem: &SmoothProblem,
    source: &S,
    algo: &AlgorithmConfig,
    w1: Point,
    horizon: u64,
    rng: &mut RngStream,
) -> Result<Trajectory, OptimizerError> {
    run_full(problem, source, algo, w1, horizon, rng, false)
}

/// [`run`] with optional full-iterate recording.
pub fn run_full<S: GradientSource + ?Sized>(
    problem: &SmoothProblem,
    source: &S,
    algo: &AlgorithmConfig,
    w1: Point,
    horizon: u64,
    rng: &mut RngStream,
    record_iterates: bool,
) -> Result<Trajectory, OptimizerError> {
    if w1.len() != problem.dimension() {
        return Err(OptimizerError::Problem(ProblemError::DimensionMismatch {
            expected: problem.dimension(),
            got: w1.len(),
        }));
    }
    if horizon == 0 {
        return Err(OptimizerError::InvalidConfig("horizon must be at least 1".into()));
    }
    let fixed_eta = match algo {
        AlgorithmConfig::AdaSgd(_) => None,
        AlgorithmConfig::KnownParam(kp) => {
            let eta = known_stepsize(kp);
            if !(eta.is_finite() && eta > 0.0) {
                return Err(OptimizerError::InvalidConfig(format!(
                    "tuned stepsize {eta} is not a positive finite number"
                )));
            }
            Some(eta)
        }
    };
    let mut w = w1;
    let mut g_sq_accum = match algo {
        AlgorithmConfig::AdaSgd(c) => c.gamma * c.gamma,
        AlgorithmConfig::KnownParam(_) => 0.0,
    };
    let minimizer: Option<Point> = problem.minimizer().map(|m| m.to_vec());
    let mut steps = Vec::with_capacity(horizon as usize);
    let mut sum_w = vec![0.0; w.len()];
    let mut iterates: Option<Vec<Point>> = record_iterates.then(Vec::new);
    let mut delta_bar = f64::NEG_INFINITY;
    let mut d_bar_sq: Option<f64> = minimizer.as_ref().map(|_| 0.0);

    for t in 1..=horizon {
        let f_gap = problem.value(&w)? - problem.f_star();
        let grad = problem.gradient(&w)?;
        let grad_norm_sq = norm_sq(&grad);
        let d_sq = minimizer.as_ref().map(|m| dist_sq(&w, m));
        delta_bar = delta_bar.max(f_gap);
        d_bar_sq = d_bar_sq.zip(d_sq).map(|(bar, d)| bar.max(d));
        for (acc, wi) in sum_w.iter_mut().zip(&w) {
            *acc += wi;
        }
        if let Some(hist) = iterates.as_mut() {
            hist.push(w.clone());
        }

        let g = source.draw(problem, &w, rng)?;
        let g_norm_sq = norm_sq(&g);
        if !g_norm_sq.is_finite() {
            return Err(OptimizerError::NumericFailure {
                step: t,
                what: "gradient estimate is non-finite".into(),
            });
        }
        g_sq_accum += g_norm_sq;
        let eta_t = match fixed_eta {
            Some(e) => e,
            None => match algo {
                AlgorithmConfig::AdaSgd(c) => c.eta / g_sq_accum.sqrt(),
                AlgorithmConfig::KnownParam(_) => unreachable!(),
            },
        };
        let noise_norm_sq = dist_sq(&g, &grad);
        let grad_dot_g = grad.iter().zip(&g).map(|(a, b)| a * b).sum();
        let g_dot_dist = minimizer
            .as_ref()
            .map(|m| g.iter().zip(w.iter().zip(m.iter())).map(|(gi, (wi, mi))| gi * (wi - mi)).sum());

        steps.push(StepRecord {
            t,
            f_gap,
            grad_norm_sq,
            dist_sq: d_sq,
            eta_t,
            g_sq_accum,
            noise_norm_sq,
            g_norm_sq,
            grad_dot_g,
            g_dot_dist,
            delta_bar,
            d_bar_sq,
        });

        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= eta_t * gi;
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(OptimizerError::NumericFailure {
                step: t,
                what: "iterate is non-finite".into(),
            });
        }
    }

    let final_f_gap = problem.value(&w)? - problem.f_star();
    let final_grad_norm_sq = norm_sq(&problem.gradient(&w)?);
    let final_dist_sq = minimizer.as_ref().map(|m| dist_sq(&w, m));
    let avg_w: Point = sum_w.iter().map(|x| x / horizon as f64).collect();
    let avg_f_gap = problem.value(&avg_w)? - problem.f_star();
    if let Some(hist) = iterates.as_mut() {
        hist.push(w.clone());
    }
    Ok(Trajectory {
        steps,
        final_f_gap,
        final_grad_norm_sq,
        final_dist_sq,
        final_w: w,
        avg_w,
        avg_f_gap,
        iterates,
    })
}

/// Stepsize surrogates that remove the correlation between `g_t` and `η_t`.
///
/// For each step the pair is
///
/// ```text
/// η̃_t = η / sqrt(G_{t−1}² + σ₀² + (1 + σ₁²)·‖∇f(w_t)‖²)
/// η̂_t = η / sqrt(G_{t−1}² + ‖∇f(w_t)‖²)
/// ```
///
/// both measurable before the draw at step `t`. Requires an adaptive-run
/// trajectory (the tuned variant has no accumulator offset to condition on).
pub fn decorrelated_stepsizes(
    trajectory: &Trajectory,
    noise: &NoiseParams,
    config: &AdaSgdConfig,
) -> Vec<(f64, f64)> {
    let mut prev_g_sq = config.gamma * config.gamma;
    let mut out = Vec::with_capacity(trajectory.steps.len());
    for s in &trajectory.steps {
        let tilde = config.eta
            / (prev_g_sq
                + noise.sigma0 * noise.sigma0
                + (1.0 + noise.sigma1 * noise.sigma1) * s.grad_norm_sq)
                .sqrt();
        let hat = config.eta / (prev_g_sq + s.grad_norm_sq).sqrt();
        out.push((tilde, hat));
        prev_g_sq = s.g_sq_accum;
    }
    out
}
