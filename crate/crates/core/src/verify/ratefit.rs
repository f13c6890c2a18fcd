//! Convergence-rate exponent fitting: run the optimizer over a geometric
//! grid of horizons, average a convergence metric over independent trials at
//! each horizon, and fit the log-log slope. The slope separates the `1/T`
//! regime (additive noise absent) from the `1/√T` regime (additive noise
//! dominant) without relying on absolute constants.

use super::VerifyError;
use crate::objectives::SmoothProblem;
use crate::optimizer::{run, AdaSgdConfig, AlgorithmConfig, KnownParamConfig};
use crate::oracles::{OracleKind, RngStream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which per-trajectory scalar is averaged at each horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMetric {
    /// `(1/T)·Σ_{t≤T} ‖∇f(w_t)‖²` — the smooth non-convex criterion.
    MeanGradNormSq,
    /// `f(w̄_T) − f*` at the averaged iterate — the convex criterion.
    AvgIterateGap,
}

/// Which stepsize rule the rate sweep runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateAlgorithm {
    AdaSgd { eta: f64, gamma: f64 },
    /// Tuned constant stepsize, rebuilt per horizon from the problem's
    /// smoothness, the oracle's declared noise scales, and these knobs.
    Tuned { delta: f64, alpha: f64 },
}

/// Fitted rate exponent over a horizon grid.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub grid: Vec<u64>,
    /// Per-horizon mean of the metric over trials.
    pub means: Vec<f64>,
    /// Least-squares slope of `log₂ mean` against `log₂ T`; `None` when some
    /// mean is zero or non-finite (the metric degenerated, so the slope is
    /// undefined).
    pub slope: Option<f64>,
    /// Standard error of the slope under the homoscedastic linear model.
    pub stderr: Option<f64>,
    pub metric: RateMetric,
    pub trials: u64,
}

/// Runs `trials` seeded trajectories at every horizon in `grid` and fits the
/// log-log slope of the averaged metric.
///
/// The grid must have at least 5 strictly increasing horizons spanning at
/// least a factor of 32, so the fit sees a real dynamic range.
pub fn rate_fit_experiment(
    problem: &SmoothProblem,
    oracle: &OracleKind,
    algorithm: &RateAlgorithm,
    metric: RateMetric,
    w1: &[f64],
    grid: &[u64],
    trials: u64,
    seed: u64,
) -> Result<RateFit, VerifyError> {
    if grid.len() < 5 {
        return Err(VerifyError::InvalidSpec(format!(
            "rate grid needs at least 5 horizons, got {}",
            grid.len()
        )));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(VerifyError::InvalidSpec("rate grid must be strictly increasing".into()));
    }
    if grid[0] == 0 || grid[grid.len() - 1] < 32 * grid[0] {
        return Err(VerifyError::InvalidSpec(
            "rate grid must start positive and span at least a factor of 32".into(),
        ));
    }
    if trials == 0 {
        return Err(VerifyError::InvalidSpec("rate fit needs at least one trial".into()));
    }
    oracle.validate(problem)?;

    let means: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(i, &horizon)| -> Result<f64, VerifyError> {
            let algo = match algorithm {
                RateAlgorithm::AdaSgd { eta, gamma } => {
                    AlgorithmConfig::AdaSgd(AdaSgdConfig::new(*eta, *gamma)?)
                }
                RateAlgorithm::Tuned { delta, alpha } => {
                    let np = oracle.declared_noise_params().ok_or_else(|| {
                        VerifyError::InvalidSpec(
                            "tuned runs need an oracle with declared noise scales".into(),
                        )
                    })?;
                    AlgorithmConfig::KnownParam(KnownParamConfig::new(
                        problem.beta(),
                        np.sigma0,
                        np.sigma1,
                        *delta,
                        horizon,
                        *alpha,
                    )?)
                }
            };
            let total: f64 = (0..trials)
                .into_par_iter()
                .map(|trial| -> Result<f64, VerifyError> {
                    let mut rng = RngStream::new(seed, i as u64 * trials + trial);
                    let trajectory = run(problem, oracle, &algo, w1.to_vec(), horizon, &mut rng)?;
                    Ok(match metric {
                        RateMetric::MeanGradNormSq => trajectory.mean_grad_norm_sq(),
                        RateMetric::AvgIterateGap => trajectory.avg_f_gap,
                    })
                })
                .try_reduce(|| 0.0, |a, b| Ok(a + b))?;
            Ok(total / trials as f64)
        })
        .collect::<Result<_, _>>()?;

    let (slope, stderr) = fit_loglog(grid, &means);
    Ok(RateFit { grid: grid.to_vec(), means, slope, stderr, metric, trials })
}

/// Ordinary least squares of `log₂ mean` on `log₂ T`; `None` when a mean is
/// non-positive or non-finite.
fn fit_loglog(grid: &[u64], means: &[f64]) -> (Option<f64>, Option<f64>) {
    if means.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
        return (None, None);
    }
    let n = grid.len() as f64;
    let xs: Vec<f64> = grid.iter().map(|t| (*t as f64).log2()).collect();
    let ys: Vec<f64> = means.iter().map(|m| m.log2()).collect();
    let x_bar = xs.iter().sum::<f64>() / n;
    let y_bar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar) * (x - x_bar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_bar) * (y - y_bar)).sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    (Some(slope), Some(stderr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::NoiseParams;

    const GRID: [u64; 6] = [64, 128, 256, 512, 1024, 2048];

    #[test]
    fn multiplicative_noise_recovers_fast_rate() {
        // With σ₀ = 0 the noise dies out near the minimizer, so the averaged
        // iterate converges at roughly 1/T and the fitted slope should sit
        // near −1 (log factors flatten it slightly).
        let problem = SmoothProblem::quadratic(&[1.0, 2.0], 6, None, 0.0).unwrap();
        let oracle = OracleKind::BoundedAffine(NoiseParams::new(0.0, 0.5).unwrap());
        let fit = rate_fit_experiment(
            &problem,
            &oracle,
            &RateAlgorithm::AdaSgd { eta: 1.0, gamma: 1.0 },
            RateMetric::AvgIterateGap,
            &[2.0, -1.0],
            &GRID,
            40,
            17,
        )
        .unwrap();
        assert!(fit.slope.unwrap() <= -0.85, "slope {:?}", fit.slope);
    }

    #[test]
    fn additive_noise_recovers_slow_rate() {
        // σ₀ = 1 dominates: the mean squared gradient norm decays like 1/√T,
        // so the slope lands in a band around −1/2.
        let problem = SmoothProblem::quadratic(&[1.0, 2.0], 6, None, 0.0).unwrap();
        let oracle = OracleKind::BoundedAffine(NoiseParams::new(1.0, 0.0).unwrap());
        let fit = rate_fit_experiment(
            &problem,
            &oracle,
            &RateAlgorithm::AdaSgd { eta: 1.0, gamma: 1.0 },
            RateMetric::MeanGradNormSq,
            &[2.0, -1.0],
            &GRID,
            40,
            19,
        )
        .unwrap();
        let slope = fit.slope.unwrap();
        assert!((-0.65..=-0.35).contains(&slope), "slope {slope}");
    }

    #[test]
    fn tuned_noiseless_recovers_fast_rate() {
        // Exact oracle and tuned stepsize: plain gradient descent, so the
        // running criterion decays like 1/T (geometric tail dominated by the
        // first steps).
        let problem = SmoothProblem::quadratic(&[1.0, 2.0], 6, None, 0.0).unwrap();
        let fit = rate_fit_experiment(
            &problem,
            &OracleKind::Exact,
            &RateAlgorithm::Tuned { delta: 0.1, alpha: 1.0 },
            RateMetric::MeanGradNormSq,
            &[2.0, -1.0],
            &GRID,
            1,
            23,
        )
        .unwrap();
        assert!(fit.slope.unwrap() <= -0.85, "slope {:?}", fit.slope);
    }

    #[test]
    fn degenerate_metric_reports_undefined_slope() {
        // Starting at the minimizer with an exact oracle: the metric is zero
        // at every horizon, so the log-log slope is undefined.
        let problem = SmoothProblem::quadratic(&[1.0], 0, None, 0.0).unwrap();
        let fit = rate_fit_experiment(
            &problem,
            &OracleKind::Exact,
            &RateAlgorithm::AdaSgd { eta: 1.0, gamma: 1.0 },
            RateMetric::MeanGradNormSq,
            &[0.0],
            &GRID,
            1,
            0,
        )
        .unwrap();
        assert_eq!(fit.slope, None);
        assert_eq!(fit.stderr, None);
        assert!(fit.means.iter().all(|m| *m == 0.0));
    }

    #[test]
    fn grid_preconditions_fail_closed() {
        let problem = SmoothProblem::quadratic(&[1.0], 0, None, 0.0).unwrap();
        let algo = RateAlgorithm::AdaSgd { eta: 1.0, gamma: 1.0 };
        let run = |grid: &[u64], trials: u64| {
            rate_fit_experiment(
                &problem,
                &OracleKind::Exact,
                &algo,
                RateMetric::MeanGradNormSq,
                &[1.0],
                grid,
                trials,
                0,
            )
        };
        assert!(run(&[64, 128, 256, 512], 1).is_err()); // too few points
        assert!(run(&[64, 64, 128, 256, 512, 2048], 1).is_err()); // not increasing
        assert!(run(&[64, 128, 256, 512, 1024], 1).is_err()); // span 16 < 32
        assert!(run(&GRID, 0).is_err()); // no trials
    }
}
