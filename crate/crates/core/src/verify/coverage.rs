//! Monte-Carlo coverage experiments: do the explicit high-probability bounds
//! actually cover the trajectories they claim to?
//!
//! Each experiment runs independently seeded trajectories and counts how
//! often the observed statistic exceeds its closed-form bound. Since the
//! analysis carries conservative constants, the empirical violation frequency
//! is expected to be far below the stated failure probability; the assertion
//! layer only demands it stays within the three-sigma binomial band around
//! the stated probability.

use super::{binomial_margin, VerifyError};
use crate::bounds::{self, BoundInputs, BoundReport};
use crate::objectives::{dist_sq, SmoothProblem};
use crate::optimizer::{run, AdaSgdConfig, AlgorithmConfig, KnownParamConfig};
use crate::oracles::{OracleKind, RngStream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which guarantee a coverage experiment exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageTarget {
    /// Adaptive runs: suboptimality gap capped by the explicit gap bound
    /// (failure budget δ) and the mean squared gradient norm capped by the
    /// smooth-case rate (budget 3δ). Needs δ ∈ (0, 1/3).
    AdaptiveGapBound,
    /// Adaptive runs on convex problems: squared minimizer distance capped by
    /// the distance bound (budget 3δ) and the averaged-iterate gap capped by
    /// the convex rate (budget 4δ). Needs δ ∈ (0, 1/4).
    ConvexDistanceBound,
    /// Tuned constant-stepsize runs: gap capped by the tuned gap bound and
    /// the mean squared gradient norm by the tuned rate (each budget 2δ).
    /// Needs δ ∈ (0, 1/2).
    TunedGapBound,
}

/// Parameters of one coverage experiment; the problem, oracle, and start
/// point arrive separately.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageSpec {
    pub target: CoverageTarget,
    pub trials: u64,
    pub horizon: u64,
    pub delta: f64,
    /// Adaptive stepsize scale (used by the bound formulas even when the run
    /// itself is tuned, so it must always be positive).
    pub eta: f64,
    /// Adaptive accumulator offset; same caveat as `eta`.
    pub gamma: f64,
    /// Distance scale for the tuned stepsize; required for
    /// [`CoverageTarget::TunedGapBound`].
    pub alpha: Option<f64>,
}

/// Count of bound violations for one monitored statistic.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageResult {
    pub trials: u64,
    pub violations: u64,
    /// Stated failure probability of this event.
    pub delta: f64,
    /// The closed-form threshold the statistic is compared against.
    pub bound: f64,
    /// Largest statistic observed across trials.
    pub worst_empirical: f64,
    /// Stream indices of the violating trials, for replay.
    pub violating_streams: Vec<u64>,
    /// Per-trial statistics, in stream order; kept out of the JSON summary
    /// but available for per-trial CSV artifacts.
    #[serde(skip)]
    pub trial_stats: Vec<f64>,
}

impl CoverageResult {
    /// Builds the count from per-trial statistics: trial `i` violates when
    /// `stats[i] > bound` (NaN counts as a violation).
    pub(crate) fn from_stats(stats: &[f64], bound: f64, delta: f64) -> Self {
        let mut violating_streams = Vec::new();
        let mut worst = f64::NEG_INFINITY;
        for (i, &s) in stats.iter().enumerate() {
            if s > worst || worst.is_nan() {
                worst = s;
            }
            if !(s <= bound) {
                violating_streams.push(i as u64);
            }
        }
        Self {
            trials: stats.len() as u64,
            violations: violating_streams.len() as u64,
            delta,
            bound,
            worst_empirical: worst,
            violating_streams,
            trial_stats: stats.to_vec(),
        }
    }

    /// Empirical violation frequency.
    pub fn frequency(&self) -> f64 {
        self.violations as f64 / self.trials as f64
    }

    /// Whether the frequency sits within the three-sigma binomial band of the
    /// stated failure probability.
    pub fn within_margin(&self) -> bool {
        self.frequency() <= self.delta + binomial_margin(self.delta, self.trials)
    }
}

/// Full result of a coverage experiment: the trajectory-statistic event and
/// the rate event, plus the constants the thresholds came from.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageOutcome {
    pub target: CoverageTarget,
    pub seed: u64,
    pub horizon: u64,
    /// Gap/distance event.
    pub bound: CoverageResult,
    /// Rate event.
    pub rate: CoverageResult,
    /// All derived constants for the run's inputs.
    pub report: BoundReport,
    /// Both events within their binomial bands.
    pub pass: bool,
}

/// Runs `spec.trials` independently seeded trajectories and checks the
/// target's two events against their closed-form thresholds.
///
/// The oracle must admit an almost-sure affine noise bound (the guarantees
/// under test assume one); its effective `(σ₀, σ₁)` feed both the thresholds
/// and, for tuned runs, the stepsize.
pub fn coverage_experiment(
    problem: &SmoothProblem,
    oracle: &OracleKind,
    w1: &[f64],
    spec: &CoverageSpec,
    seed: u64,
) -> Result<CoverageOutcome, VerifyError> {
    if spec.trials < 100 {
        return Err(VerifyError::InvalidSpec(format!(
            "coverage needs at least 100 trials to resolve the failure frequency, got {}",
            spec.trials
        )));
    }
    let max_delta = match spec.target {
        CoverageTarget::AdaptiveGapBound => 1.0 / 3.0,
        CoverageTarget::ConvexDistanceBound => 0.25,
        CoverageTarget::TunedGapBound => 0.5,
    };
    if !(spec.delta > 0.0 && spec.delta < max_delta) {
        return Err(VerifyError::InvalidSpec(format!(
            "delta must lie in (0, {max_delta}) for this target, got {}",
            spec.delta
        )));
    }
    oracle.validate(problem)?;
    let np = oracle.affine_bound_params().ok_or_else(|| {
        VerifyError::InvalidSpec(
            "coverage requires an oracle with an almost-sure affine noise bound".into(),
        )
    })?;
    if spec.target == CoverageTarget::ConvexDistanceBound
        && !(problem.is_convex() && problem.minimizer().is_some())
    {
        return Err(VerifyError::InvalidSpec(
            "the distance bound applies to convex problems with a known minimizer".into(),
        ));
    }

    let delta1 = (problem.value(w1)? - problem.f_star()).max(0.0);
    let d1 = problem.minimizer().map_or(0.0, |m| dist_sq(w1, m).sqrt());
    let inputs = BoundInputs {
        beta: problem.beta(),
        sigma0: np.sigma0,
        sigma1: np.sigma1,
        eta: spec.eta,
        gamma: spec.gamma,
        horizon: spec.horizon,
        delta: spec.delta,
        delta1,
        d1,
        alpha: spec.alpha,
    };
    let report = bounds::report(&inputs)?;

    let (algo, bound_value, bound_delta, rate_value, rate_delta) = match spec.target {
        CoverageTarget::AdaptiveGapBound => (
            AlgorithmConfig::AdaSgd(AdaSgdConfig::new(spec.eta, spec.gamma)?),
            bounds::f_bound(&inputs)?,
            spec.delta,
            bounds::nonconvex_rate_rhs(&inputs)?,
            3.0 * spec.delta,
        ),
        CoverageTarget::ConvexDistanceBound => (
            AlgorithmConfig::AdaSgd(AdaSgdConfig::new(spec.eta, spec.gamma)?),
            bounds::d_bound_sq(&inputs)?,
            3.0 * spec.delta,
            bounds::convex_rate_rhs(&inputs)?,
            4.0 * spec.delta,
        ),
        CoverageTarget::TunedGapBound => {
            let alpha = spec.alpha.ok_or_else(|| {
                VerifyError::InvalidSpec("tuned coverage requires the alpha distance scale".into())
            })?;
            (
                AlgorithmConfig::KnownParam(KnownParamConfig::new(
                    problem.beta(),
                    np.sigma0,
                    np.sigma1,
                    spec.delta,
                    spec.horizon,
                    alpha,
                )?),
                bounds::known_f_bound(&inputs)?,
                2.0 * spec.delta,
                bounds::known_rate_rhs(&inputs)?,
                2.0 * spec.delta,
            )
        }
    };

    let trials: Vec<(f64, f64)> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| -> Result<(f64, f64), VerifyError> {
            let mut rng = RngStream::new(seed, trial);
            let trajectory =
                run(problem, oracle, &algo, w1.to_vec(), spec.horizon, &mut rng)?;
            Ok(match spec.target {
                CoverageTarget::AdaptiveGapBound | CoverageTarget::TunedGapBound => {
                    (trajectory.max_f_gap(), trajectory.mean_grad_norm_sq())
                }
                CoverageTarget::ConvexDistanceBound => (
                    trajectory.max_dist_sq().expect("convex target checked minimizer"),
                    trajectory.avg_f_gap,
                ),
            })
        })
        .collect::<Result<_, _>>()?;

    let bound_stats: Vec<f64> = trials.iter().map(|t| t.0).collect();
    let rate_stats: Vec<f64> = trials.iter().map(|t| t.1).collect();
    let bound = CoverageResult::from_stats(&bound_stats, bound_value, bound_delta.min(1.0));
    let rate = CoverageResult::from_stats(&rate_stats, rate_value, rate_delta.min(1.0));
    let pass = bound.within_margin() && rate.within_margin();
    Ok(CoverageOutcome { target: spec.target, seed, horizon: spec.horizon, bound, rate, report, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::NoiseParams;

    fn spec(target: CoverageTarget) -> CoverageSpec {
        CoverageSpec {
            target,
            trials: 100,
            horizon: 256,
            delta: 0.1,
            eta: 1.0,
            gamma: 1.0,
            alpha: Some(2.0),
        }
    }

    #[test]
    fn noiseless_runs_never_violate() {
        // With an exact oracle every trajectory is identical and deterministic,
        // and the bounds hold with probability one, so violations must be 0
        // for all three targets.
        let problem = SmoothProblem::quadratic(&[1.0, 4.0], 2, None, 0.0).unwrap();
        let w1 = [1.0, -1.0];
        for target in [
            CoverageTarget::AdaptiveGapBound,
            CoverageTarget::ConvexDistanceBound,
            CoverageTarget::TunedGapBound,
        ] {
            let outcome =
                coverage_experiment(&problem, &OracleKind::Exact, &w1, &spec(target), 7).unwrap();
            assert_eq!(outcome.bound.violations, 0, "{target:?}");
            assert_eq!(outcome.rate.violations, 0, "{target:?}");
            assert!(outcome.pass);
        }
    }

    #[test]
    fn start_at_minimizer_never_moves() {
        // d₁ = 0 with an exact oracle: the gradient is zero forever, so the
        // worst empirical distance is exactly 0, trivially below the bound.
        let problem = SmoothProblem::quadratic(&[1.0, 2.0], 4, None, 0.0).unwrap();
        let outcome = coverage_experiment(
            &problem,
            &OracleKind::Exact,
            &[0.0, 0.0],
            &spec(CoverageTarget::ConvexDistanceBound),
            3,
        )
        .unwrap();
        assert_eq!(outcome.bound.worst_empirical, 0.0);
        assert_eq!(outcome.bound.violations, 0);
    }

    #[test]
    fn noisy_adaptive_coverage_within_band() {
        let problem = SmoothProblem::quadratic(&[0.5, 2.0], 5, None, 0.0).unwrap();
        let oracle = OracleKind::BoundedAffine(NoiseParams::new(1.0, 0.0).unwrap());
        let outcome = coverage_experiment(
            &problem,
            &oracle,
            &[2.0, 0.5],
            &spec(CoverageTarget::AdaptiveGapBound),
            11,
        )
        .unwrap();
        assert!(outcome.pass);
        assert!(outcome.bound.worst_empirical > 0.0);
        assert!(outcome.bound.worst_empirical <= outcome.bound.bound);
    }

    #[test]
    fn preconditions_fail_closed() {
        let problem = SmoothProblem::quadratic(&[1.0], 0, None, 0.0).unwrap();
        let mut s = spec(CoverageTarget::AdaptiveGapBound);
        s.trials = 99;
        assert!(coverage_experiment(&problem, &OracleKind::Exact, &[1.0], &s, 0).is_err());

        let mut s = spec(CoverageTarget::AdaptiveGapBound);
        s.delta = 0.4; // ≥ 1/3 leaves no room for the 3δ rate event
        assert!(coverage_experiment(&problem, &OracleKind::Exact, &[1.0], &s, 0).is_err());

        // Unbounded noise has no almost-sure bound to certify.
        let sub = OracleKind::SubGaussianAffine(NoiseParams::new(1.0, 0.0).unwrap());
        assert!(coverage_experiment(
            &problem,
            &sub,
            &[1.0],
            &spec(CoverageTarget::AdaptiveGapBound),
            0
        )
        .is_err());

        // Distance target needs convexity.
        let sine = SmoothProblem::non_convex_sine(2).unwrap();
        assert!(coverage_experiment(
            &sine,
            &OracleKind::Exact,
            &[1.0, 1.0],
            &spec(CoverageTarget::ConvexDistanceBound),
            0
        )
        .is_err());

        // Tuned target needs alpha.
        let mut s = spec(CoverageTarget::TunedGapBound);
        s.alpha = None;
        assert!(coverage_experiment(&problem, &OracleKind::Exact, &[1.0], &s, 0).is_err());
    }

    #[test]
    fn results_are_reproducible() {
        let problem = SmoothProblem::non_convex_sine(2).unwrap();
        let oracle = OracleKind::BoundedAffine(NoiseParams::new(0.5, 0.5).unwrap());
        let s = spec(CoverageTarget::AdaptiveGapBound);
        let a = coverage_experiment(&problem, &oracle, &[1.0, -0.5], &s, 99).unwrap();
        let b = coverage_experiment(&problem, &oracle, &[1.0, -0.5], &s, 99).unwrap();
        assert_eq!(a.bound.worst_empirical.to_bits(), b.bound.worst_empirical.to_bits());
        assert_eq!(a.rate.worst_empirical.to_bits(), b.rate.worst_empirical.to_bits());
        assert_eq!(a.bound.violations, b.bound.violations);
    }
}
