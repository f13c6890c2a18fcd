//! Closed-form evaluation of every bound constant and rate right-hand side
//! the verification harness checks trajectories against.
//!
//! All formulas carry explicit constants (no hidden O(·) factors) so that an
//! empirical maximum can be compared against a concrete number. Logarithms
//! are base 2 throughout, with one deliberate exception: the sub-Gaussian
//! variants contain natural-log factors `ln(4T/δ)` inherited from the
//! truncation radius `σ·sqrt(ln(4/δ))` of the bounded-noise reduction.
//!
//! Confidence convention: every formula is evaluated at the per-event
//! confidence `δ` it is stated with. Results that combine several events via
//! a union bound fail with probability a small multiple of `δ`; the
//! [`BoundReport`] exposes both the per-event `δ` and each combined failure
//! probability so downstream assertions can pick the right one.

use crate::optimizer::{known_stepsize, KnownParamConfig};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BoundError {
    #[error("invalid bound input: {0}")]
    InvalidInput(String),
    #[error("missing input: {0}")]
    MissingInput(String),
}

/// Scalar parameters feeding the bound formulas.
///
/// `delta1` is the initial suboptimality `f(w₁) − f*` and `d1` the initial
/// distance `‖w₁ − w*‖`; `delta` is the per-event confidence level. `alpha`
/// (the distance scale balancing the tuned stepsize) is only needed by the
/// known-parameter bounds and may be omitted otherwise.
///
/// Validation accepts any `delta ∈ (0,1)`; the narrower ranges the individual
/// guarantees are stated for (`(0,1/3)` adaptive non-convex, `(0,1/4)`
/// adaptive convex, `(0,1/2)` tuned) are enforced by the experiments that
/// claim those guarantees, not here, so that every formula stays evaluable
/// for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub beta: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub eta: f64,
    pub gamma: f64,
    pub horizon: u64,
    pub delta: f64,
    pub delta1: f64,
    pub d1: f64,
    pub alpha: Option<f64>,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<(), BoundError> {
        let nonneg = [
            (self.beta, "beta"),
            (self.sigma0, "sigma0"),
            (self.sigma1, "sigma1"),
            (self.delta1, "delta1"),
            (self.d1, "d1"),
        ];
        for (v, name) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(BoundError::InvalidInput(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(BoundError::InvalidInput(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(BoundError::InvalidInput(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.horizon == 0 {
            return Err(BoundError::InvalidInput("horizon must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(BoundError::InvalidInput(format!(
                "delta must lie in (0,1), got {}",
                self.delta
            )));
        }
        if let Some(a) = self.alpha {
            if !(a.is_finite() && a > 0.0) {
                return Err(BoundError::InvalidInput(format!(
                    "alpha must be positive, got {a}"
                )));
            }
        }
        Ok(())
    }

    fn t(&self) -> f64 {
        self.horizon as f64
    }

    /// `log₂(T/δ)`.
    fn log_t_delta(&self) -> f64 {
        (self.t() / self.delta).log2()
    }

    /// `log₂(1/δ)`.
    fn log_inv_delta(&self) -> f64 {
        (1.0 / self.delta).log2()
    }

    /// `ln(4T/δ)` — the natural-log factor of the sub-Gaussian reduction.
    fn ln_4t_delta(&self) -> f64 {
        (4.0 * self.t() / self.delta).ln()
    }

    fn alpha_or_err(&self) -> Result<f64, BoundError> {
        self.alpha.ok_or_else(|| {
            BoundError::MissingInput("alpha is required for the known-parameter bounds".into())
        })
    }
}

/// The accumulator log constant
/// `C1 = log₂(1 + (2σ₀²T + 8(1+σ₁²)(η²β²T³ + βΔ₁T)) / γ²)`:
/// a high-probability bound on `Σ_t ‖g_t‖²/G_t²`, and the price of adaptivity
/// appearing in every adaptive-stepsize bound.
pub fn c1(inputs: &BoundInputs) -> Result<f64, BoundError> {
    inputs.validate()?;
    let t = inputs.t();
    let mass = 2.0 * inputs.sigma0 * inputs.sigma0 * t
        + 8.0
            * (1.0 + inputs.sigma1 * inputs.sigma1)
            * (inputs.eta * inputs.eta * inputs.beta * inputs.beta * t * t * t
                + inputs.beta * inputs.delta1 * t);
    Ok((1.0 + mass / (inputs.gamma * inputs.gamma)).log2())
}

/// High-probability bound `F` on the running maximum suboptimality
/// `max_{t ≤ T+1} f(w_t) − f*` of an adaptive run (failure probability `δ`):
///
/// `F = 2Δ₁ + (3·log₂(T/δ) + 4C1)·ησ₀ + (9·log₂²(T/δ) + 16C1²)·η²βσ₁² + η²βC1`.
pub fn f_bound(inputs: &BoundInputs) -> Result<f64, BoundError> {
    let c1 = c1(inputs)?;
    let l = inputs.log_t_delta();
    Ok(2.0 * inputs.delta1
        + (3.0 * l + 4.0 * c1) * inputs.eta * inputs.sigma0
        + (9.0 * l * l + 16.0 * c1 * c1)
            * inputs.eta
            * inputs.eta
            * inputs.beta
            * inputs.sigma1
            * inputs.sigma1
        + inputs.eta * inputs.eta * inputs.beta * c1)
}

/// Sub-Gaussian-noise counterpart of [`c1`]: the bounded-noise reduction
/// replaces `(σ₀, σ₁)` by `3·sqrt(ln(4T/δ))·(σ₀, σ₁)`, giving
/// `C1 = log₂(1 + (18σ₀²T·ln(4T/δ) + (8 + 72σ₁²·ln(4T/δ))(η²β²T³ + βΔ₁T))/γ²)`.
pub fn c1_subgaussian(inputs: &BoundInputs) -> Result<f64, BoundError> {
    inputs.validate()?;
    let t = inputs.t();
    let ln4t = inputs.ln_4t_delta();
    let mass = 18.0 * inputs.sigma0 * inputs.sigma0 * t * ln4t
        + (8.0 + 72.0 * inputs.sigma1 * inputs.sigma1 * ln4t)
            * (inputs.eta * inputs.eta * inputs.beta * inputs.beta * t * t * t
                + inputs.beta * inputs.delta1 * t);
    Ok((1.0 + mass / (inputs.gamma * inputs.gamma)).log2())
}

/// Sub-Gaussian-noise counterpart of [`f_bound`]:
/// `F = 2Δ₁ + (9·log₂(T/δ) + 12C1)·ησ₀·sqrt(ln(4T/δ))
///      + (81·log₂²(T/δ) + 144C1²)·η²βσ₁²·ln(4T/δ) + η²βC1`
/// with `C1` from [`c1_subgaussian`].
pub fn f_bound_subgaussian(inputs: &BoundInputs) -> Result<f64, BoundError> {
    let c1 = c1_subgaussian(inputs)?;
    let l = inputs.log_t_delta();
    let ln4t = inputs.ln_4t_delta();
    Ok(2.0 * inputs.delta1
        + (9.0 * l + 12.0 * c1) * inputs.eta * inputs.sigma0 * ln4t.sqrt()
        + (81.0 * l * l + 144.0 * c1 * c1)
            * inputs.eta
            * inputs.eta
            * inputs.beta
            * inputs.sigma1
            * inputs.sigma1
            * ln4t
        + inputs.eta * inputs.eta * inputs.beta * c1)
}

/// The composite constant `C₂ = 2F/η + ηβ` multiplying `sqrt(Σ‖g_t‖²)` in the
/// non-convex regret bound.
pub fn c2(inputs: &BoundInputs) -> Result<f64, BoundError> {
    Ok(2.0 * f_bound(inputs)? / inputs.eta + inputs.eta * inputs.beta)
}

/// The effective squared noise scale `σ² = σ₀² + 2βσ₁²F` that uniformly
/// dominates `σ₀² + σ₁²‖∇f(w_t)‖²` on the event `{Δ̄ ≤ F}` (via the
/// self-bounding property `‖∇f‖² ≤ 2β(f − f*)`).
pub fn sigma_sq_effective(inputs: &BoundInputs) -> Result<f64, BoundError> {
    Ok(inputs.sigma0 * inputs.sigma0
        + 2.0 * inputs.beta * inputs.sigma1 * inputs.sigma1 * f_bound(inputs)?)
}

/// Right-hand side of the non-convex guarantee (failure probability `3δ`):
/// mean squared gradient norm over `T` adaptive steps is at most
///
/// `(1/T)·[2γΔ₁/η + 4(1+σ₁²)C₂² + 6(σ₀² + 2βσ₁²F)·log₂(1/δ)] + C₂σ₀·sqrt(8)/sqrt(T)`.
pub fn nonconvex_rate_rhs(inputs: &BoundInputs) -> Result<f64, BoundError> {
    let f = f_bound(inputs)?;
    let c2 = 2.0 * f / inputs.eta + inputs.eta * inputs.beta;
    let t = inputs.t();
    let bracket = 2.0 * inputs.gamma * inputs.delta1 / inputs.eta
        + 4.0 * (1.0 + inputs.sigma1 * inputs.sigma1) * c2 * c2
        + 6.0
            * (inputs.sigma0 * inputs.sigma0
                + 2.0 * inputs.beta * inputs.sigma1 * inputs.sigma1 * f)
            * inputs.log_inv_delta();
    Ok(bracket / t + c2 * inputs.sigma0 * 8.0f64.sqrt() / t.sqrt())
}

/// The three concentration constants entering the distance bound:
/// `c = 2·log₂(1 + σ²T/(2γ²)) + 7σ²·log₂(T/δ)/γ²` (with `σ²` from
/// [`sigma_sq_effective`]) and the time-uniform empirical-Bernstein
/// coefficients `a_t = 512·log₂(60·log₂²(6T)/δ)`,
/// `b_t = 512·log₂²(60·log₂²(6T)/δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceTerms {
    pub c: f64,
    pub a_t: f64,
    pub b_t: f64,
}

pub fn distance_terms(inputs: &BoundInputs) -> Result<DistanceTerms, BoundError> {
    let sigma_sq = sigma_sq_effective(inputs)?;
    let t = inputs.t();
    let gamma_sq = inputs.gamma * inputs.gamma;
    let c = 2.0 * (1.0 + sigma_sq * t / (2.0 * gamma_sq)).log2()
        + 7.0 * sigma_sq * inputs.log_t_delta() / gamma_sq;
    let inner = (60.0 * (6.0 * t).log2().powi(2) / inputs.delta).log2();
    Ok(DistanceTerms { c, a_t: 512.0 * inner, b_t: 512.0 * inner * inner })
}

/// High-probability bound `D²` on the running maximum squared distance
/// `max_{t ≤ T+1} ‖w_t − w*‖²` of an adaptive run on a convex problem
/// (failure probability `3δ`):
///
/// `D² = 2d₁² + η²(½ + 2C1 + 8c² + a_t·c + b_t·(σ₀/γ + σ₁)²)`.
pub fn d_bound_sq(inputs: &BoundInputs) -> Result<f64, BoundError> {
    let c1 = c1(inputs)?;
    let terms = distance_terms(inputs)?;
    let mix = inputs.sigma0 / inputs.gamma + inputs.sigma1;
    Ok(2.0 * inputs.d1 * inputs.d1
        + inputs.eta
            * inputs.eta
            * (0.5
                + 2.0 * c1
                + 8.0 * terms.c * terms.c
                + terms.a_t * terms.c
                + terms.b_t * mix * mix))
}

/// Right-hand side of the convex guarantee (failure probability `4δ`): the
/// suboptimality of the averaged iterate is at most
///
/// `(1/T)·[8β(1+σ₁²)(D²/η + η)² + γd₁²/η + 12βσ₁²D²·log₂(1/δ)]
///  + ((D²/η + η)·sqrt(8) + 4D·sqrt(log₂(1/δ)))·σ₀/sqrt(T)`.
pub fn convex_rate_rhs(inputs: &BoundInputs) -> Result<f64, BoundError> {
    let d_sq = d_bound_sq(inputs)?;
    let t = inputs.t();
    let spread = d_sq / inputs.eta + inputs.eta;
    let bracket = 8.0 * inputs.beta * (1.0 + inputs.sigma1 * inputs.sigma1) * spread * spread
        + inputs.gamma * inputs.d1 * inputs.d1 / inputs.eta
        + 12.0
            * inputs.beta
            * inputs.sigma1
            * inputs.sigma1
            * d_sq
            * inputs.log_inv_delta();
    Ok(bracket / t
        + (spread * 8.0f64.sqrt() + 4.0 * d_sq.sqrt() * inputs.log_inv_delta().sqrt())
            * inputs.sigma0
            / t.sqrt())
}

/// Suboptimality bound for tuned-stepsize SGD (failure probability `2δ`):
///
/// `F = 2Δ₁ + 2βα² + 3·min{σ₀²/(4β(1 + σ₁²·log₂(T/δ))), σ₀α/sqrt(T)}·log₂(T/δ)`.
///
/// Conventions: the min-term is `0` when `σ₀ = 0`; when `β = 0` (with
/// `σ₀ > 0`) the first branch is undefined and the second is returned.
pub fn known_f_bound(inputs: &BoundInputs) -> Result<f64, BoundError> {
    inputs.validate()?;
    let alpha = inputs.alpha_or_err()?;
    let l = inputs.log_t_delta();
    let min_term = if inputs.sigma0 == 0.0 {
        0.0
    } else {
        let second = inputs.sigma0 * alpha / inputs.t().sqrt();
        if inputs.beta == 0.0 {
            second
        } else {
            let first = inputs.sigma0 * inputs.sigma0
                / (4.0 * inputs.beta * (1.0 + inputs.sigma1 * inputs.sigma1 * l));
            first.min(second)
        }
    };
    Ok(2.0 * inputs.delta1 + 2.0 * inputs.beta * alpha * alpha + 3.0 * min_term * l)
}

/// Right-hand side of the tuned-stepsize guarantee (failure probability
/// `2δ`): mean squared gradient norm over `T` steps is at most
///
/// `(βα + Δ₁/α)·2σ₀/sqrt(T)
///  + [8βΔ₁(1 + 4σ₁²)·log₂(T/δ) + 24σ₁²β²α²·log₂(1/δ) + 15σ₀²·log₂(1/δ)]/T`.
pub fn known_rate_rhs(inputs: &BoundInputs) -> Result<f64, BoundError> {
    inputs.validate()?;
    let alpha = inputs.alpha_or_err()?;
    let t = inputs.t();
    let l = inputs.log_t_delta();
    let ld = inputs.log_inv_delta();
    let bracket = 8.0
        * inputs.beta
        * inputs.delta1
        * (1.0 + 4.0 * inputs.sigma1 * inputs.sigma1)
        * l
        + 24.0 * inputs.sigma1 * inputs.sigma1 * inputs.beta * inputs.beta * alpha * alpha * ld
        + 15.0 * inputs.sigma0 * inputs.sigma0 * ld;
    Ok((inputs.beta * alpha + inputs.delta1 / alpha) * 2.0 * inputs.sigma0 / t.sqrt()
        + bracket / t)
}

/// Which term of the non-convex rate dominates at the configured horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// The `1/T` bracket dominates (noiseless-like behaviour).
    LowNoise,
    /// The `σ₀/sqrt(T)` term dominates.
    HighNoise,
}

/// Every bound constant evaluated at one set of inputs, serialized alongside
/// experiment outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub c1: f64,
    pub f_bound: f64,
    pub c2: f64,
    pub sigma_sq_effective: f64,
    pub c1_subgaussian: f64,
    pub f_bound_subgaussian: f64,
    pub nonconvex_rate_rhs: f64,
    pub distance_terms: DistanceTerms,
    pub d_bound_sq: f64,
    pub convex_rate_rhs: f64,
    /// Tuned-stepsize values; present only when `alpha` is supplied and the
    /// tuned configuration is admissible (`β > 0`, `δ < ½`).
    pub known_stepsize: Option<f64>,
    pub known_f_bound: Option<f64>,
    pub known_rate_rhs: Option<f64>,
    pub regime: Regime,
    /// Per-event confidence every formula above is evaluated at.
    pub delta: f64,
    /// Union-bound failure probabilities of the combined events.
    pub gap_bound_failure_prob: f64,
    pub nonconvex_rate_failure_prob: f64,
    pub distance_bound_failure_prob: f64,
    pub convex_rate_failure_prob: f64,
    pub known_param_failure_prob: f64,
}

/// Evaluates the full report. Pure: identical inputs give bit-identical
/// reports.
pub fn report(inputs: &BoundInputs) -> Result<BoundReport, BoundError> {
    inputs.validate()?;
    let f = f_bound(inputs)?;
    let c2_val = 2.0 * f / inputs.eta + inputs.eta * inputs.beta;
    let t = inputs.t();
    let sqrt_t_term = c2_val * inputs.sigma0 * 8.0f64.sqrt() / t.sqrt();
    let one_over_t_term = nonconvex_rate_rhs(inputs)? - sqrt_t_term;
    let regime =
        if sqrt_t_term >= one_over_t_term { Regime::HighNoise } else { Regime::LowNoise };
    let (known_eta, known_f, known_rate) = match inputs.alpha {
        Some(alpha) => match KnownParamConfig::new(
            inputs.beta,
            inputs.sigma0,
            inputs.sigma1,
            inputs.delta,
            inputs.horizon.max(2),
            alpha,
        ) {
            Ok(cfg) => (
                Some(known_stepsize(&cfg)),
                Some(known_f_bound(inputs)?),
                Some(known_rate_rhs(inputs)?),
            ),
            Err(_) => (None, None, None),
        },
        None => (None, None, None),
    };
    let capped = |x: f64| x.min(1.0);
    Ok(BoundReport {
        inputs: *inputs,
        c1: c1(inputs)?,
        f_bound: f,
        c2: c2_val,
        sigma_sq_effective: sigma_sq_effective(inputs)?,
        c1_subgaussian: c1_subgaussian(inputs)?,
        f_bound_subgaussian: f_bound_subgaussian(inputs)?,
        nonconvex_rate_rhs: nonconvex_rate_rhs(inputs)?,
        distance_terms: distance_terms(inputs)?,
        d_bound_sq: d_bound_sq(inputs)?,
        convex_rate_rhs: convex_rate_rhs(inputs)?,
        known_stepsize: known_eta,
        known_f_bound: known_f,
        known_rate_rhs: known_rate,
        regime,
        delta: inputs.delta,
        gap_bound_failure_prob: capped(inputs.delta),
        nonconvex_rate_failure_prob: capped(3.0 * inputs.delta),
        distance_bound_failure_prob: capped(3.0 * inputs.delta),
        convex_rate_failure_prob: capped(4.0 * inputs.delta),
        known_param_failure_prob: capped(2.0 * inputs.delta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base() -> BoundInputs {
        BoundInputs {
            beta: 1.0,
            sigma0: 1.0,
            sigma1: 1.0,
            eta: 1.0,
            gamma: 1.0,
            horizon: 16,
            delta: 0.1,
            delta1: 1.0,
            d1: 1.0,
            alpha: None,
        }
    }

    #[test]
    fn c1_hand_values() {
        // σ₀ = σ₁ = 0, Δ₁ = 0, η = β = 1, T = 2, γ = 2:
        // log₂(1 + 8·8/4) = log₂(17) = 4.087462841250339.
        let inputs = BoundInputs {
            beta: 1.0,
            sigma0: 0.0,
            sigma1: 0.0,
            eta: 1.0,
            gamma: 2.0,
            horizon: 2,
            delta: 0.1,
            delta1: 0.0,
            d1: 0.0,
            alpha: None,
        };
        assert_relative_eq!(c1(&inputs).unwrap(), 4.087462841250339, max_relative = 1e-12);

        // σ₀ = 1, σ₁ = 0, Δ₁ = 0, η = β = 1, T = 1, γ = 1:
        // log₂(1 + 2 + 8) = log₂(11) = 3.4594316186372973.
        let inputs = BoundInputs {
            sigma0: 1.0,
            sigma1: 0.0,
            gamma: 1.0,
            horizon: 1,
            ..inputs
        };
        assert_relative_eq!(c1(&inputs).unwrap(), 3.4594316186372973, max_relative = 1e-12);

        // σ₀ = 0 with β = 0: the whole fraction vanishes, C1 = log₂(1) = 0.
        let inputs = BoundInputs { beta: 0.0, sigma0: 0.0, ..inputs };
        assert_eq!(c1(&inputs).unwrap(), 0.0);
    }

    #[test]
    fn f_bound_hand_values() {
        // Δ₁ = 1, σ₀ = 1, σ₁ = 0, η = 1, β = 0, T = 1, δ = 0.5 (so
        // log₂(T/δ) = 1), γ = 1: C1 = log₂(3) and
        // F = 2 + (3 + 4·log₂3) = 11.339850002884624.
        let inputs = BoundInputs {
            beta: 0.0,
            sigma0: 1.0,
            sigma1: 0.0,
            eta: 1.0,
            gamma: 1.0,
            horizon: 1,
            delta: 0.5,
            delta1: 1.0,
            d1: 0.0,
            alpha: None,
        };
        assert_relative_eq!(c1(&inputs).unwrap(), 1.584962500721156, max_relative = 1e-12);
        assert_relative_eq!(
            f_bound(&inputs).unwrap(),
            11.339850002884624,
            max_relative = 1e-12
        );

        // Zero noise: only 2Δ₁ + η²βC1 survives.
        let quiet = BoundInputs { beta: 2.0, sigma0: 0.0, sigma1: 0.0, eta: 0.5, ..base() };
        assert_relative_eq!(
            f_bound(&quiet).unwrap(),
            2.0 * quiet.delta1 + quiet.eta * quiet.eta * quiet.beta * c1(&quiet).unwrap(),
            max_relative = 1e-15
        );

        // Cross-checked general case (β = σ₀ = σ₁ = η = γ = Δ₁ = 1, T = 16,
        // δ = 0.1): C1 = 16.00634799582079, F = 4685.744022117133.
        assert_relative_eq!(c1(&base()).unwrap(), 16.00634799582079, max_relative = 1e-12);
        assert_relative_eq!(
            f_bound(&base()).unwrap(),
            4685.744022117133,
            max_relative = 1e-12
        );
    }

    #[test]
    fn subgaussian_variants_hand_values() {
        // σ₀ = 1, σ₁ = 0, Δ₁ = 0, η = β = 1, T = 1, γ = 1, δ = 0.5:
        // C1 = log₂(1 + 18·ln(8) + 8) = 5.53698375226154.
        let inputs = BoundInputs {
            beta: 1.0,
            sigma0: 1.0,
            sigma1: 0.0,
            eta: 1.0,
            gamma: 1.0,
            horizon: 1,
            delta: 0.5,
            delta1: 0.0,
            d1: 0.0,
            alpha: None,
        };
        assert_relative_eq!(
            c1_subgaussian(&inputs).unwrap(),
            5.53698375226154,
            max_relative = 1e-12
        );

        // Zero noise collapses both noise models to the same value.
        let quiet = BoundInputs { sigma0: 0.0, sigma1: 0.0, ..base() };
        assert_relative_eq!(
            f_bound_subgaussian(&quiet).unwrap(),
            f_bound(&quiet).unwrap(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            c1_subgaussian(&quiet).unwrap(),
            c1(&quiet).unwrap(),
            max_relative = 1e-15
        );

        // Coefficient of the σ₀ term: with β = 0 and γ huge (so C1 ≈ 0),
        // T/δ = 2, the bound reduces to 2Δ₁ + 9·log₂(T/δ)·ησ₀·sqrt(ln(4T/δ))
        // = 9·2·sqrt(ln 8) = 25.956483958815895 at Δ₁ = 0, σ₀ = 2.
        let coef = BoundInputs {
            beta: 0.0,
            sigma0: 2.0,
            sigma1: 0.0,
            eta: 1.0,
            gamma: 1e9,
            horizon: 1,
            delta: 0.5,
            delta1: 0.0,
            d1: 0.0,
            alpha: None,
        };
        assert_relative_eq!(
            f_bound_subgaussian(&coef).unwrap(),
            25.956483958815895,
            max_relative = 1e-9
        );
    }

    #[test]
    fn subgaussian_bound_dominates_bounded_noise_bound() {
        // The reduction inflates noise by 3·sqrt(ln(4T/δ)) ≥ 3, so whenever
        // ln(4T/δ) ≥ 1 the sub-Gaussian F must be at least the bounded one.
        for beta in [0.0, 0.5, 2.0] {
            for sigma0 in [0.0, 0.3, 1.0] {
                for sigma1 in [0.0, 1.0] {
                    for horizon in [4u64, 64, 4096] {
                        for delta in [0.05, 0.3] {
                            let inputs = BoundInputs {
                                beta,
                                sigma0,
                                sigma1,
                                horizon,
                                delta,
                                ..base()
                            };
                            assert!(inputs.ln_4t_delta() >= 1.0);
                            assert!(
                                f_bound_subgaussian(&inputs).unwrap()
                                    >= f_bound(&inputs).unwrap() - 1e-12,
                                "sub-Gaussian bound fell below bounded-noise bound at {inputs:?}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn nonconvex_rate_hand_values() {
        // General cross-checked case: C₂ = 2F + β = 9372.488044234266 and
        // rate RHS = 43940069.06876722.
        assert_relative_eq!(c2(&base()).unwrap(), 9372.488044234266, max_relative = 1e-12);
        assert_relative_eq!(
            nonconvex_rate_rhs(&base()).unwrap(),
            43940069.06876722,
            max_relative = 1e-12
        );
        // All-zero inputs (Δ₁ = σ₀ = σ₁ = β = 0): every term vanishes.
        let zero = BoundInputs {
            beta: 0.0,
            sigma0: 0.0,
            sigma1: 0.0,
            delta1: 0.0,
            d1: 0.0,
            ..base()
        };
        assert_eq!(nonconvex_rate_rhs(&zero).unwrap(), 0.0);
    }

    #[test]
    fn nonconvex_rate_halves_exactly_without_noise_or_curvature() {
        // β = 0, σ₀ = 0: F = 2Δ₁ and the bracket is T-independent, so the
        // bound is exactly proportional to 1/T.
        let at = |horizon| {
            let inputs =
                BoundInputs { beta: 0.0, sigma0: 0.0, horizon, ..base() };
            nonconvex_rate_rhs(&inputs).unwrap()
        };
        assert_relative_eq!(at(2048) / at(1024), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn nonconvex_rate_follows_inverse_sqrt_t_when_noise_dominates() {
        // With σ₀ = 100 and β = 0 the sqrt(T) term dominates at large T;
        // quadrupling T then halves the bound up to the slow log growth of
        // C₂ (ratio 0.5109954927536896 at T = 10⁸, within 5% of ½).
        let at = |horizon| {
            let inputs = BoundInputs {
                beta: 0.0,
                sigma0: 100.0,
                sigma1: 0.0,
                horizon,
                ..base()
            };
            nonconvex_rate_rhs(&inputs).unwrap()
        };
        let ratio = at(400_000_000) / at(100_000_000);
        assert!((ratio - 0.5).abs() <= 0.05 * 0.5, "ratio {ratio}");
        assert_relative_eq!(ratio, 0.5109954927536896, max_relative = 1e-12);
    }

    #[test]
    fn distance_bound_hand_values() {
        // General cross-checked case: σ² = 9372.488044234266,
        // c = 480405.17318173504, a_t = 7509.590599742607,
        // b_t = 110144.43549949712, D² = 1849921130143.0305.
        let terms = distance_terms(&base()).unwrap();
        assert_relative_eq!(
            sigma_sq_effective(&base()).unwrap(),
            9372.488044234266,
            max_relative = 1e-12
        );
        assert_relative_eq!(terms.c, 480405.17318173504, max_relative = 1e-12);
        assert_relative_eq!(terms.a_t, 7509.590599742607, max_relative = 1e-12);
        assert_relative_eq!(terms.b_t, 110144.43549949712, max_relative = 1e-12);
        assert_relative_eq!(
            d_bound_sq(&base()).unwrap(),
            1849921130143.0305,
            max_relative = 1e-12
        );

        // Zero noise: σ² = 0 kills c and the b_t term, leaving
        // D² = 2d₁² + η²(½ + 2C1) = 32.51133680954493 at these inputs.
        let quiet = BoundInputs { sigma0: 0.0, sigma1: 0.0, ..base() };
        let expected = 2.0 * quiet.d1 * quiet.d1
            + quiet.eta * quiet.eta * (0.5 + 2.0 * c1(&quiet).unwrap());
        assert_relative_eq!(d_bound_sq(&quiet).unwrap(), expected, max_relative = 1e-15);
        assert_relative_eq!(
            d_bound_sq(&quiet).unwrap(),
            32.51133680954493,
            max_relative = 1e-12
        );
        assert_eq!(distance_terms(&quiet).unwrap().c, 0.0);
    }

    #[test]
    fn convex_rate_hand_values() {
        // General cross-checked case: 3.422208187759284e24 (the distance
        // bound squares into the bracket, hence the scale).
        assert_relative_eq!(
            convex_rate_rhs(&base()).unwrap(),
            3.422208187759284e24,
            max_relative = 1e-12
        );
        // β = 0, σ₀ = 0: only γd₁²/(ηT) survives — exact halving in T.
        let at = |horizon| {
            let inputs = BoundInputs { beta: 0.0, sigma0: 0.0, horizon, ..base() };
            convex_rate_rhs(&inputs).unwrap()
        };
        assert_relative_eq!(at(2048) / at(1024), 0.5, max_relative = 1e-15);
        let one = BoundInputs { beta: 0.0, sigma0: 0.0, horizon: 1024, ..base() };
        assert_relative_eq!(
            convex_rate_rhs(&one).unwrap(),
            one.gamma * one.d1 * one.d1 / (one.eta * 1024.0),
            max_relative = 1e-15
        );
    }

    #[test]
    fn known_parameter_hand_values() {
        // Δ₁ = 1, β = 1, α = 1, σ₁ = 0, σ₀ = 1, T = 16, δ = 0.25:
        // log₂(64) = 6, F = 2 + 2 + 3·min{¼, ¼}·6 = 8.5.
        let inputs = BoundInputs {
            beta: 1.0,
            sigma0: 1.0,
            sigma1: 0.0,
            eta: 1.0,
            gamma: 1.0,
            horizon: 16,
            delta: 0.25,
            delta1: 1.0,
            d1: 0.0,
            alpha: Some(1.0),
        };
        assert_relative_eq!(known_f_bound(&inputs).unwrap(), 8.5, max_relative = 1e-12);

        // σ₀ = 0: F = 2Δ₁ + 2βα².
        let quiet = BoundInputs { sigma0: 0.0, ..inputs };
        assert_relative_eq!(known_f_bound(&quiet).unwrap(), 4.0, max_relative = 1e-15);

        // β = 0 with σ₀ > 0: second branch σ₀α/sqrt(T) by convention.
        let flat = BoundInputs { beta: 0.0, ..inputs };
        assert_relative_eq!(
            known_f_bound(&flat).unwrap(),
            2.0 + 3.0 * (1.0 / 4.0) * 6.0,
            max_relative = 1e-15
        );

        // Rate at σ₀ = σ₁ = 0 reduces to 8βΔ₁·log₂(T/δ)/T = 8·6/16 = 3.
        assert_relative_eq!(known_rate_rhs(&quiet).unwrap(), 3.0, max_relative = 1e-15);

        // General cross-checked case: β = 2, σ₀ = 1, σ₁ = 1, T = 64,
        // δ = 0.25, Δ₁ = 1, α = ½ → F = 10/3, rate = 11.96875.
        let general = BoundInputs {
            beta: 2.0,
            sigma0: 1.0,
            sigma1: 1.0,
            horizon: 64,
            delta: 0.25,
            alpha: Some(0.5),
            ..inputs
        };
        assert_relative_eq!(
            known_f_bound(&general).unwrap(),
            3.3333333333333335,
            max_relative = 1e-12
        );
        assert_relative_eq!(known_rate_rhs(&general).unwrap(), 11.96875, max_relative = 1e-12);

        // Missing alpha is reported, not defaulted.
        let missing = BoundInputs { alpha: None, ..inputs };
        assert!(matches!(known_f_bound(&missing), Err(BoundError::MissingInput(_))));
    }

    #[test]
    fn bounds_are_monotone_in_noise_initial_gap_and_horizon() {
        let grid = |field: fn(&mut BoundInputs, f64), values: &[f64]| {
            let mut prev_f = f64::NEG_INFINITY;
            let mut prev_d = f64::NEG_INFINITY;
            for &v in values {
                let mut inputs = base();
                field(&mut inputs, v);
                let f = f_bound(&inputs).unwrap();
                let d = d_bound_sq(&inputs).unwrap();
                assert!(f >= prev_f - 1e-12, "f_bound not monotone at {v}");
                assert!(d >= prev_d - 1e-12, "d_bound_sq not monotone at {v}");
                prev_f = f;
                prev_d = d;
            }
        };
        grid(|inp, v| inp.sigma0 = v, &[0.0, 0.1, 0.5, 1.0, 3.0]);
        grid(|inp, v| inp.sigma1 = v, &[0.0, 0.5, 1.0, 2.0]);
        grid(|inp, v| inp.delta1 = v, &[0.0, 0.5, 1.0, 10.0]);
        grid(
            |inp, v| {
                inp.d1 = v;
            },
            &[0.0, 0.5, 2.0],
        );
        grid(|inp, v| inp.horizon = v as u64, &[4.0, 16.0, 256.0, 4096.0]);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let bad = BoundInputs { gamma: 0.0, ..base() };
        assert!(matches!(c1(&bad), Err(BoundError::InvalidInput(_))));
        let bad = BoundInputs { eta: 0.0, ..base() };
        assert!(f_bound(&bad).is_err());
        let bad = BoundInputs { delta: 1.0, ..base() };
        assert!(f_bound(&bad).is_err());
        let bad = BoundInputs { horizon: 0, ..base() };
        assert!(c1(&bad).is_err());
        let bad = BoundInputs { sigma0: -1.0, ..base() };
        assert!(c1(&bad).is_err());
    }

    #[test]
    fn report_is_complete_and_deterministic() {
        let inputs = BoundInputs { alpha: Some(1.0), ..base() };
        let a = report(&inputs).unwrap();
        let b = report(&inputs).unwrap();
        assert_eq!(a, b);
        assert!(a.known_stepsize.is_some());
        assert!(a.known_f_bound.is_some());
        assert_eq!(a.delta, 0.1);
        assert_relative_eq!(a.nonconvex_rate_failure_prob, 0.3, max_relative = 1e-12);
        assert_relative_eq!(a.convex_rate_failure_prob, 0.4, max_relative = 1e-12);
        // σ₀ = 1 at T = 16 with these constants: the 1/T bracket dominates.
        assert_eq!(a.regime, Regime::LowNoise);
        // A noise-dominated configuration flips the tag.
        let noisy = BoundInputs {
            beta: 0.0,
            sigma0: 100.0,
            sigma1: 0.0,
            horizon: 100_000_000,
            alpha: None,
            ..base()
        };
        assert_eq!(report(&noisy).unwrap().regime, Regime::HighNoise);
        // Tuned values degrade to None when the tuned config is inadmissible.
        let flat = BoundInputs { beta: 0.0, alpha: Some(1.0), ..base() };
        let r = report(&flat).unwrap();
        assert!(r.known_stepsize.is_none());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"known_stepsize\":null"));
        assert!(json.contains("\"regime\":"));
    }
}
