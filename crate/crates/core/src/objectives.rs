//! Smooth test objectives with exactly known constants.
//!
//! Every problem exposes a closed-form value and gradient together with the
//! constants the bound formulas consume — smoothness constant `β`, minimum
//! value `f*`, and (when one exists) a minimizer `w*` — so nothing has to be
//! estimated from samples. Problems are immutable after construction and safe
//! to share across concurrent trials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// A point in `R^d`. Entries are expected to be finite.
pub type Point = Vec<f64>;

/// Errors from problem construction or evaluation.
#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("dimension mismatch: problem expects {expected}, point has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid problem parameter: {0}")]
    InvalidParameter(String),
}

/// Problem family. Variant payloads carry whatever the closed forms need
/// beyond the shared `(β, f*, w*)` constants.
#[derive(Debug, Clone)]
enum Kind {
    /// `½ (w−c)ᵀ A (w−c) + f*` with `A` symmetric positive semi-definite,
    /// stored row-major.
    Quadratic { matrix: Vec<f64>, center: Vec<f64> },
    /// One-dimensional `(β/2) w²`.
    LowerBoundQuad,
    /// `Σᵢ wᵢ² + 3 sin²(wᵢ)`: globally minimised at the origin with value 0,
    /// second derivative `2 + 6 cos(2wᵢ) ∈ [−4, 8]`, hence `β = 8` exactly
    /// and genuine non-convexity.
    NonConvexSine,
}

/// A `β`-smooth objective with known minimum value and optional minimizer.
#[derive(Debug, Clone)]
pub struct SmoothProblem {
    dimension: usize,
    beta: f64,
    f_star: f64,
    minimizer: Option<Point>,
    convex: bool,
    kind: Kind,
}

/// Multiplies the row-major `d×d` matrix `m` by `v`.
fn mat_vec(m: &[f64], v: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for (i, out_i) in out.iter_mut().enumerate() {
        let row = &m[i * d..(i + 1) * d];
        *out_i = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

/// Draws a uniformly random `d×d` orthogonal matrix (rows orthonormal) from
/// the seeded generator: Gaussian entries followed by modified Gram–Schmidt
/// with one re-orthogonalization pass.
fn random_orthogonal(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut q = vec![0.0; d * d];
    for x in q.iter_mut() {
        *x = rng.sample::<f64, _>(rand_distr::StandardNormal);
    }
    for i in 0..d {
        // Two projection sweeps keep the rows orthonormal to roundoff even if
        // the Gaussian draws happen to be poorly conditioned.
        for _ in 0..2 {
            for j in 0..i {
                let dot: f64 = (0..d).map(|k| q[i * d + k] * q[j * d + k]).sum();
                for k in 0..d {
                    q[i * d + k] -= dot * q[j * d + k];
                }
            }
        }
        let norm: f64 = (0..d).map(|k| q[i * d + k] * q[i * d + k]).sum::<f64>().sqrt();
        // A Gaussian row projected onto a (d−1)-dim subspace is zero with
        // probability zero; fall back to a fresh draw if it ever happens.
        if norm < 1e-12 {
            for k in 0..d {
                q[i * d + k] = rng.sample::<f64, _>(rand_distr::StandardNormal);
            }
            return random_orthogonal(d, seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
        }
        for k in 0..d {
            q[i * d + k] /= norm;
        }
    }
    q
}

impl SmoothProblem {
    /// Rotated diagonal quadratic `½ (w−c)ᵀ A (w−c) + f_star` where
    /// `A = Qᵀ diag(eigenvalues) Q` and `Q` is a seeded random orthogonal
    /// matrix. Specifying the spectrum directly makes the smoothness constant
    /// exactly `max eigenvalue` by construction.
    ///
    /// `center` defaults to the origin when `None`. Eigenvalues must be
    /// non-negative (the quadratic must be convex) with a positive maximum.
    pub fn quadratic(
        eigenvalues: &[f64],
        rotation_seed: u64,
        center: Option<Point>,
        f_star: f64,
    ) -> Result<Self, ProblemError> {
        let d = eigenvalues.len();
        if d == 0 {
            return Err(ProblemError::InvalidParameter(
                "eigenvalues must be non-empty".into(),
            ));
        }
        if eigenvalues.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(ProblemError::InvalidParameter(
                "eigenvalues must be finite and non-negative".into(),
            ));
        }
        let beta = eigenvalues.iter().cloned().fold(0.0, f64::max);
        if beta <= 0.0 {
            return Err(ProblemError::InvalidParameter(
                "at least one eigenvalue must be positive".into(),
            ));
        }
        if !f_star.is_finite() {
            return Err(ProblemError::InvalidParameter("f_star must be finite".into()));
        }
        let center = center.unwrap_or_else(|| vec![0.0; d]);
        if center.len() != d {
            return Err(ProblemError::DimensionMismatch { expected: d, got: center.len() });
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(ProblemError::InvalidParameter("center must be finite".into()));
        }
        let q = random_orthogonal(d, rotation_seed);
        // A = Qᵀ Λ Q, assembled row-major and symmetrised to kill the last
        // bits of floating-point asymmetry.
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for (k, lam) in eigenvalues.iter().enumerate() {
                    s += q[k * d + i] * lam * q[k * d + j];
                }
                a[i * d + j] = s;
            }
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = 0.5 * (a[i * d + j] + a[j * d + i]);
                a[i * d + j] = avg;
                a[j * d + i] = avg;
            }
        }
        Ok(Self {
            dimension: d,
            beta,
            f_star,
            minimizer: Some(center.clone()),
            convex: true,
            kind: Kind::Quadratic { matrix: a, center },
        })
    }

    /// One-dimensional `(β/2) w²` with minimum 0 at the origin. Used by the
    /// adversarial lower-bound construction, which needs `β` far below the
    /// noise scale.
    pub fn lower_bound_quad(beta: f64) -> Result<Self, ProblemError> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(ProblemError::InvalidParameter("beta must be positive".into()));
        }
        Ok(Self {
            dimension: 1,
            beta,
            f_star: 0.0,
            minimizer: Some(vec![0.0]),
            convex: true,
            kind: Kind::LowerBoundQuad,
        })
    }

    /// `Σᵢ wᵢ² + 3 sin²(wᵢ)`: a genuinely non-convex objective with exact
    /// smoothness constant 8 and global minimum 0 at the origin.
    pub fn non_convex_sine(dimension: usize) -> Result<Self, ProblemError> {
        if dimension == 0 {
            return Err(ProblemError::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self {
            dimension,
            beta: 8.0,
            f_star: 0.0,
            minimizer: Some(vec![0.0; dimension]),
            convex: false,
            kind: Kind::NonConvexSine,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Smoothness constant: the gradient is `beta`-Lipschitz.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Global minimum value.
    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    /// Global minimizer, when one is tracked.
    pub fn minimizer(&self) -> Option<&[f64]> {
        self.minimizer.as_deref()
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    fn check_dim(&self, w: &[f64]) -> Result<(), ProblemError> {
        if w.len() != self.dimension {
            return Err(ProblemError::DimensionMismatch {
                expected: self.dimension,
                got: w.len(),
            });
        }
        Ok(())
    }

    /// Evaluates `f(w)`.
    pub fn value(&self, w: &[f64]) -> Result<f64, ProblemError> {
        self.check_dim(w)?;
        Ok(match &self.kind {
            Kind::Quadratic { matrix, center } => {
                let diff: Vec<f64> = w.iter().zip(center).map(|(a, b)| a - b).collect();
                let av = mat_vec(matrix, &diff, self.dimension);
                0.5 * diff.iter().zip(&av).map(|(a, b)| a * b).sum::<f64>() + self.f_star
            }
            Kind::LowerBoundQuad => 0.5 * self.beta * w[0] * w[0],
            Kind::NonConvexSine => w.iter().map(|x| x * x + 3.0 * x.sin().powi(2)).sum(),
        })
    }

    /// Evaluates the exact gradient `∇f(w)`.
    pub fn gradient(&self, w: &[f64]) -> Result<Point, ProblemError> {
        self.check_dim(w)?;
        Ok(match &self.kind {
            Kind::Quadratic { matrix, center } => {
                let diff: Vec<f64> = w.iter().zip(center).map(|(a, b)| a - b).collect();
                mat_vec(matrix, &diff, self.dimension)
            }
            Kind::LowerBoundQuad => vec![self.beta * w[0]],
            Kind::NonConvexSine => w.iter().map(|x| 2.0 * x + 3.0 * (2.0 * x).sin()).collect(),
        })
    }

    /// Largest absolute deviation, over coordinates, between the analytic
    /// gradient and a central finite difference with step `h`.
    pub fn finite_diff_check(&self, w: &[f64], h: f64) -> Result<f64, ProblemError> {
        self.check_dim(w)?;
        assert!(h > 0.0, "finite-difference step must be positive");
        let grad = self.gradient(w)?;
        let mut worst = 0.0f64;
        let mut probe = w.to_vec();
        for i in 0..self.dimension {
            probe[i] = w[i] + h;
            let plus = self.value(&probe)?;
            probe[i] = w[i] - h;
            let minus = self.value(&probe)?;
            probe[i] = w[i];
            let fd = (plus - minus) / (2.0 * h);
            worst = worst.max((fd - grad[i]).abs());
        }
        Ok(worst)
    }
}

/// Euclidean norm squared.
pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Squared Euclidean distance between two equal-length vectors.
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
