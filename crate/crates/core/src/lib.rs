//! SGD with AdaGrad-Norm stepsizes under affine-variance gradient noise,
//! together with the machinery to check its convergence guarantees empirically.
//!
//! The crate is organised around a small pipeline:
//!
//! * [`objectives`] — smooth test problems with exactly known smoothness
//!   constant, minimum value, and minimizer, so that every bound constant can
//!   be evaluated in closed form rather than estimated.
//! * [`oracles`] — seeded stochastic gradient oracles realising the noise
//!   models under study (almost-surely bounded affine noise, sub-Gaussian
//!   affine noise, a truncation reduction from the latter to the former, and a
//!   one-dimensional adversarial two-point oracle).
//! * [`optimizer`] — the two algorithms: AdaGrad-Norm SGD (scalar stepsize
//!   `η / sqrt(γ² + Σ‖g_s‖²)`) and constant-stepsize SGD with a tuned rate,
//!   plus trajectory recording and analysis-only decorrelated stepsizes.
//! * [`bounds`] — closed-form evaluation of every constant appearing in the
//!   high-probability guarantees (`C1`, `F`, `D²`, and the explicit rate
//!   right-hand sides).
//! * [`verify`] — deterministic inequality checkers that must hold on every
//!   trajectory, Monte-Carlo coverage experiments for the high-probability
//!   bounds, rate-exponent fitting, concentration-inequality trials, and the
//!   adversarial lower-bound construction.
//! * [`cli`] — JSON-configured experiment runner with reproducible outputs.
//!
//! Logarithm convention: every bound and stepsize formula uses the base-2
//! logarithm. The natural logarithm appears only inside the truncation radius
//! `σ·sqrt(ln(4/δ))` of [`oracles::truncate_sample`] and the matching noise
//! inflation factors of the sub-Gaussian bound variants. The mixture is
//! intentional and mirrored exactly by the formulas in [`bounds`].

pub mod bounds;
pub mod cli;
pub mod objectives;
pub mod optimizer;
pub mod oracles;
pub mod verify;
