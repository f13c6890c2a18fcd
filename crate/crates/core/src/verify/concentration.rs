//! Monte-Carlo validation of the two concentration inequalities the
//! high-probability analysis rests on: the moment-generating-function bound
//! for martingale difference sequences with predictable scales, and the
//! time-uniform empirical-Bernstein bound for bounded adapted sequences.

use super::{CoverageResult, VerifyError};
use crate::oracles::RngStream;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Which inequality a trial batch tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ConcentrationKind {
    /// Fixed-horizon bound for a martingale difference sequence `Z_t` with
    /// predictable scales `σ_t ≥ |Z_t|`: with probability ≥ 1 − δ,
    ///
    /// ```text
    /// Σ_t Z_t ≤ (3/4)·λ·Σ_t σ_t² + log₂(1/δ)/λ
    /// ```
    ///
    /// for any fixed `λ > 0`.
    MgfMartingale { lambda: f64 },
    /// Time-uniform bound for adapted `|X_t| ≤ 1` with any predictable
    /// `|X̂_t| ≤ 1`: with probability ≤ δ there exists a `t` with
    ///
    /// ```text
    /// |Σ_{s≤t} (X_s − E[X_s | F_{s−1}])| ≥ sqrt(A_t·Σ_{s≤t}(X_s−X̂_s)² + B_t)
    /// A_t = 16·log₂(60·log₂(6t)/δ),   B_t = 16·log₂²(60·log₂(6t)/δ)
    /// ```
    EmpiricalBernstein,
}

/// Distribution of the adapted sequence under test. Each step yields a value
/// `x`, its conditional mean, and a predictable scale bounding `|x − mean|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// `x ≡ 0` with unit scale: the inequalities hold with probability one.
    Zero,
    /// Symmetric `±1`.
    Rademacher,
    /// Uniform on `[−1, 1)`.
    Uniform,
    /// `+1` with probability `p`, else `−1`; mean `2p − 1` (used as the
    /// predictable center, so the drift cancels).
    BiasedCoin { p: f64 },
}

impl GeneratorSpec {
    fn validate(&self) -> Result<(), VerifyError> {
        if let GeneratorSpec::BiasedCoin { p } = self {
            if !(p.is_finite() && *p > 0.0 && *p < 1.0) {
                return Err(VerifyError::InvalidSpec(format!(
                    "coin bias must lie in (0, 1), got {p}"
                )));
            }
        }
        Ok(())
    }

    /// Draws one step: `(x, conditional mean, scale)`.
    fn step(&self, rng: &mut RngStream) -> (f64, f64, f64) {
        match self {
            GeneratorSpec::Zero => (0.0, 0.0, 1.0),
            GeneratorSpec::Rademacher => {
                let x = if rng.random::<bool>() { 1.0 } else { -1.0 };
                (x, 0.0, 1.0)
            }
            GeneratorSpec::Uniform => (rng.random_range(-1.0..1.0), 0.0, 1.0),
            GeneratorSpec::BiasedCoin { p } => {
                let x = if rng.random::<f64>() < *p { 1.0 } else { -1.0 };
                (x, 2.0 * p - 1.0, 2.0 * p.max(1.0 - p))
            }
        }
    }
}

/// Runs `trials` independent sequences of length `horizon` and counts how
/// often the tested inequality fails.
///
/// For the fixed-horizon martingale bound the reported statistic is the final
/// sum `Σ Z_t` against its deterministic threshold. For the time-uniform
/// bound the threshold is data-dependent, so the statistic is the worst
/// margin `max_t (|Σ(X−mean)| − threshold_t)` compared against 0.
pub fn concentration_trial(
    kind: ConcentrationKind,
    generator: GeneratorSpec,
    delta: f64,
    horizon: u64,
    trials: u64,
    seed: u64,
) -> Result<CoverageResult, VerifyError> {
    if trials < 100 {
        return Err(VerifyError::InvalidSpec(format!(
            "concentration needs at least 100 trials to resolve the failure frequency, got {trials}"
        )));
    }
    if horizon == 0 {
        return Err(VerifyError::InvalidSpec("horizon must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(VerifyError::InvalidSpec(format!("delta must lie in (0, 1), got {delta}")));
    }
    if let ConcentrationKind::MgfMartingale { lambda } = kind {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(VerifyError::InvalidSpec(format!(
                "lambda must be a positive finite number, got {lambda}"
            )));
        }
    }
    generator.validate()?;

    let mut stats = Vec::with_capacity(trials as usize);
    let mut bound = 0.0;
    for trial in 0..trials {
        let mut rng = RngStream::new(seed, trial);
        match kind {
            ConcentrationKind::MgfMartingale { lambda } => {
                let mut z_sum = 0.0;
                let mut scale_sq_sum = 0.0;
                for _ in 0..horizon {
                    let (x, mean, scale) = generator.step(&mut rng);
                    check_bounded(x, mean, scale)?;
                    z_sum += x - mean;
                    scale_sq_sum += scale * scale;
                }
                bound = 0.75 * lambda * scale_sq_sum + (1.0 / delta).log2() / lambda;
                stats.push(z_sum);
            }
            ConcentrationKind::EmpiricalBernstein => {
                let mut centered_sum = 0.0;
                let mut var_proxy = 0.0;
                let mut worst_margin = f64::NEG_INFINITY;
                for t in 1..=horizon {
                    let (x, mean, scale) = generator.step(&mut rng);
                    check_bounded(x, mean, scale)?;
                    if x.abs() > 1.0 || mean.abs() > 1.0 {
                        return Err(VerifyError::InvalidSpec(
                            "the time-uniform bound needs |X_t| ≤ 1 and |X̂_t| ≤ 1".into(),
                        ));
                    }
                    centered_sum += x - mean;
                    // Predictable center X̂_t = conditional mean.
                    var_proxy += (x - mean) * (x - mean);
                    let log_term = (60.0 * (6.0 * t as f64).log2() / delta).log2();
                    let a_t = 16.0 * log_term;
                    let b_t = 16.0 * log_term * log_term;
                    let threshold = (a_t * var_proxy + b_t).sqrt();
                    worst_margin = worst_margin.max(centered_sum.abs() - threshold);
                }
                stats.push(worst_margin);
            }
        }
    }
    Ok(CoverageResult::from_stats(&stats, bound, delta))
}

/// The generators must emit increments within their declared predictable
/// scale; anything else voids the inequality's hypotheses.
fn check_bounded(x: f64, mean: f64, scale: f64) -> Result<(), VerifyError> {
    if (x - mean).abs() <= scale {
        Ok(())
    } else {
        Err(VerifyError::InvalidSpec(format!(
            "generator emitted |{x} − {mean}| > scale {scale}"
        )))
    }
}
