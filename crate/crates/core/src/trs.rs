//! Regularized trust-region subproblem
//!
//! ```text
//! min_d  gᵀd + ½ dᵀ(H + σI)d   s.t.  ||d|| <= r
//! ```
//!
//! for convex `H`. A pair `(d, λ)` is optimal iff `||d|| <= r`,
//! `λ(||d|| - r) = 0`, `(H + σI + λI)d = -g` and `λ >= 0` (the curvature
//! condition is automatic for convex `H`). The total regularization applied
//! to the Newton system is `μ = σ + λ`.
//!
//! [`solve_trs`] factorizes `H + σI`, returns the interior step when it is
//! feasible, and otherwise solves the secular equation
//! `||(H + σI + λI)⁻¹g|| = r` by Newton's method on `1/||d(λ)|| - 1/r`
//! inside a shrinking bracket. [`eigen_reference_solve`] is an independent
//! eigendecomposition-based solver used to cross-check it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{refined_solve, trace_mean, ShiftedFactor};

const MAX_SECULAR_STEPS: usize = 100;

#[derive(Debug, Clone, Copy)]
pub struct TrsRequest<'a> {
    pub hessian: &'a DMatrix<f64>,
    pub gradient: &'a DVector<f64>,
    pub sigma: f64,
    pub radius: f64,
    /// Relative tolerance on `| ||d|| - r |` for boundary solutions.
    pub tol: f64,
}

impl<'a> TrsRequest<'a> {
    pub fn new(hessian: &'a DMatrix<f64>, gradient: &'a DVector<f64>, sigma: f64, radius: f64) -> Self {
        TrsRequest { hessian, gradient, sigma, radius, tol: 1e-10 }
    }

    fn validate(&self) -> Result<()> {
        let n = self.gradient.len();
        if self.hessian.nrows() != n || self.hessian.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.hessian.nrows() });
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidConfig(format!("radius must be finite and > 0, got {}", self.radius)));
        }
        if !self.gradient.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericalOverflow("trust-region gradient"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrsSolution {
    pub d: DVector<f64>,
    pub lambda: f64,
    pub on_boundary: bool,
    pub n_factorizations: usize,
    pub kkt_residual: f64,
    /// `||(H + σI)⁻¹g||`, the step length before the ball constraint is
    /// imposed.
    pub unconstrained_norm: f64,
}

impl TrsSolution {
    pub fn step_norm(&self) -> f64 {
        self.d.norm()
    }

    /// Total regularization `σ + λ`.
    pub fn mu(&self, sigma: f64) -> f64 {
        sigma + self.lambda
    }
}

/// Residuals of the four optimality conditions, each normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `||(H + σI + λI)d + g|| / (1 + ||g||)`
    pub stationarity: f64,
    /// `λ |r - ||d||| / (r (1 + λ))`
    pub complementarity: f64,
    /// `max(0, ||d|| - r) / r`
    pub feasibility: f64,
    /// `max(0, -λ)`
    pub dual_sign: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.complementarity).max(self.feasibility).max(self.dual_sign)
    }
}

pub fn verify_kkt(req: &TrsRequest<'_>, sol: &TrsSolution) -> KktResiduals {
    let mu = req.sigma + sol.lambda;
    let resid = req.hessian * &sol.d + &sol.d * mu + req.gradient;
    let dn = sol.d.norm();
    KktResiduals {
        stationarity: resid.norm() / (1.0 + req.gradient.norm()),
        complementarity: sol.lambda.abs() * (req.radius - dn).abs() / (req.radius * (1.0 + sol.lambda.abs())),
        feasibility: (dn - req.radius).max(0.0) / req.radius,
        dual_sign: (-sol.lambda).max(0.0),
    }
}

/// Solves `(H + μI)d = -g` with a single Cholesky factorization.
pub fn unconstrained_step(h: &DMatrix<f64>, g: &DVector<f64>, mu: f64) -> Result<DVector<f64>> {
    if h.nrows() != g.len() {
        return Err(Error::DimensionMismatch { expected: g.len(), got: h.nrows() });
    }
    let factor = ShiftedFactor::new(h, mu).ok_or(Error::SingularSystem)?;
    if factor.pivot_ratio() < g.len().max(1) as f64 * f64::EPSILON {
        return Err(Error::SingularSystem);
    }
    Ok(-refined_solve(h, mu, &factor, g))
}

/// Factorizes `H + σI`, adding a tiny diagonal shift when the plain
/// factorization fails on a numerically singular PSD matrix.
fn factor_base(h: &DMatrix<f64>, sigma: f64, attempts: &mut usize) -> Result<(ShiftedFactor, f64)> {
    let delta = 1e-12 * (1.0 + trace_mean(h).abs());
    for extra in [0.0, delta, 100.0 * delta] {
        *attempts += 1;
        if let Some(f) = ShiftedFactor::new(h, sigma + extra) {
            return Ok((f, extra));
        }
    }
    let min_pivot = (0..h.nrows()).map(|i| h[(i, i)] + sigma).fold(f64::INFINITY, f64::min);
    Err(Error::NotConvex { min_pivot })
}

pub fn solve_trs(req: &TrsRequest<'_>) -> Result<TrsSolution> {
    req.validate()?;
    let (h, g, sigma, radius, tol) = (req.hessian, req.gradient, req.sigma, req.radius, req.tol);
    let n = g.len();
    let gnorm = g.norm();
    if gnorm == 0.0 {
        return Ok(TrsSolution {
            d: DVector::zeros(n),
            lambda: 0.0,
            on_boundary: false,
            n_factorizations: 0,
            kkt_residual: 0.0,
            unconstrained_norm: 0.0,
        });
    }

    let mut factorizations = 0usize;
    let (factor, extra) = factor_base(h, sigma, &mut factorizations)?;
    let d0 = -refined_solve(h, sigma + extra, &factor, g);
    let n0 = d0.norm();
    let finish = |d: DVector<f64>, lambda: f64, fact: usize, unc: f64| {
        let dn = d.norm();
        let mut sol = TrsSolution {
            d,
            lambda,
            on_boundary: (dn - radius).abs() <= tol * radius,
            n_factorizations: fact,
            kkt_residual: 0.0,
            unconstrained_norm: unc,
        };
        sol.kkt_residual = verify_kkt(req, &sol).max();
        sol
    };

    if n0 <= radius * (1.0 + tol) {
        return Ok(finish(d0, 0.0, factorizations, n0));
    }

    // Boundary case: the root lies in (0, ||g||/r].
    let (mut lo, mut hi) = (0.0f64, gnorm / radius);
    let mut lambda = 0.0;
    let mut factor = factor;
    let mut d = d0;
    let mut dn = n0;
    let mut best: Option<(f64, DVector<f64>, f64)> = None;

    for _ in 0..MAX_SECULAR_STEPS {
        let w = factor.solve_lower(&d);
        let wn2 = w.norm_squared();
        let mut next = lambda + (dn - radius) / radius * (dn * dn / wn2);
        if !(next.is_finite() && next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        lambda = next;
        let shift = sigma + lambda;
        factorizations += 1;
        factor = match ShiftedFactor::new(h, shift) {
            Some(f) => f,
            None => {
                lo = lambda;
                continue;
            }
        };
        d = -refined_solve(h, shift, &factor, g);
        dn = d.norm();
        let gap = (dn - radius).abs();
        if best.as_ref().is_none_or(|b| gap < b.2) {
            best = Some((lambda, d.clone(), gap));
        }
        if gap <= tol * radius {
            return Ok(finish(d, lambda, factorizations, n0));
        }
        if dn > radius {
            lo = lambda;
        } else {
            hi = lambda;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            // bracket exhausted at working precision
            return Ok(finish(onto_ball(d, radius), lambda, factorizations, n0));
        }
    }
    let best = best.map(|(lambda, d, _)| Box::new(finish(onto_ball(d, radius), lambda, factorizations, n0)));
    Err(Error::MaxIterations { what: "secular equation", limit: MAX_SECULAR_STEPS, best })
}

fn onto_ball(d: DVector<f64>, radius: f64) -> DVector<f64> {
    let dn = d.norm();
    if dn > radius {
        d * (radius / dn)
    } else {
        d
    }
}

/// Brute-force TR₊ solver through a full symmetric eigendecomposition.
///
/// With `H = V diag(e) Vᵀ` and `β = Vᵀg`, the step length is
/// `r(λ) = sqrt(Σ β_i² / (e_i + σ + λ)²)`, which is bisected on
/// `[0, ||g||/r]`.
pub fn eigen_reference_solve(req: &TrsRequest<'_>) -> Result<TrsSolution> {
    req.validate()?;
    let n = req.gradient.len();
    if n > 100 {
        return Err(Error::InvalidConfig(format!("eigen reference solver limited to n <= 100, got {n}")));
    }
    let eig = req.hessian.clone().symmetric_eigen();
    let beta = eig.eigenvectors.transpose() * req.gradient;
    let gnorm = req.gradient.norm();
    let shifts: Vec<f64> = eig.eigenvalues.iter().map(|e| e + req.sigma).collect();
    let scale = 1.0 + eig.eigenvalues.amax();
    let negligible = |i: usize| beta[i].abs() <= 1e-14 * gnorm;

    let len_at = |lambda: f64| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            if negligible(i) {
                continue;
            }
            let den = shifts[i] + lambda;
            if den <= 1e-15 * scale {
                return f64::INFINITY;
            }
            s += (beta[i] / den).powi(2);
        }
        s.sqrt()
    };
    let step_at = |lambda: f64| -> DVector<f64> {
        let coef = DVector::from_fn(n, |i, _| {
            let den = shifts[i] + lambda;
            if negligible(i) || den <= 1e-15 * scale {
                0.0
            } else {
                -beta[i] / den
            }
        });
        &eig.eigenvectors * coef
    };

    let r = req.radius;
    let unconstrained_norm = len_at(0.0);
    let lambda = if gnorm == 0.0 || unconstrained_norm <= r {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0f64, gnorm / r);
        let mut mid = hi;
        for _ in 0..400 {
            mid = 0.5 * (lo + hi);
            let len = len_at(mid);
            if (len - r).abs() <= 1e-12 * r {
                break;
            }
            if len > r {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                mid = hi;
                break;
            }
        }
        mid
    };
    let d = step_at(lambda);
    let mut sol = TrsSolution {
        on_boundary: (d.norm() - r).abs() <= 1e-10 * r,
        d,
        lambda,
        n_factorizations: 1,
        kkt_residual: 0.0,
        unconstrained_norm,
    };
    sol.kkt_residual = verify_kkt(req, &sol).max();
    Ok(sol)
}
