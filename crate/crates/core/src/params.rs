//! Model constants and the closed-form algebraic states of the competition
//! system
//!
//! ```text
//! -Δu1 = μ u1 (1 - u1) - β α u1 u2
//! -Δu2 = σ u2 (1 - u2) - β γ u1 u2      (Neumann ends)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative margin used when checking `β > σ/γ`.
pub const BETA_MARGIN: f64 = 1e-12;

/// The five model constants. Construct through [`Params::new`] so the
/// admissibility inequalities are always enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub dim: u32,
}

impl Params {
    pub fn new(mu: f64, sigma: f64, alpha: f64, gamma: f64, dim: u32) -> Result<Self> {
        let p = Params {
            mu,
            sigma,
            alpha,
            gamma,
            dim,
        };
        p.validate()?;
        Ok(p)
    }

    /// Re-checks the invariants, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        let all = [self.mu, self.sigma, self.alpha, self.gamma];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("all constants must be finite".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "gamma > 0 fails (gamma = {})",
                self.gamma
            )));
        }
        if !(self.alpha > self.gamma) {
            return Err(Error::InvalidParams(format!(
                "alpha > gamma fails (alpha = {}, gamma = {})",
                self.alpha, self.gamma
            )));
        }
        if !(self.mu > 0.0) {
            return Err(Error::InvalidParams(format!(
                "mu > 0 fails (mu = {})",
                self.mu
            )));
        }
        if !(self.sigma >= self.mu) {
            return Err(Error::InvalidParams(format!(
                "sigma >= mu fails (sigma = {}, mu = {})",
                self.sigma, self.mu
            )));
        }
        if self.dim < 2 {
            return Err(Error::InvalidParams(format!(
                "dim >= 2 fails (dim = {})",
                self.dim
            )));
        }
        Ok(())
    }

    /// Lower end σ/γ of the competition-rate range.
    pub fn beta_min(&self) -> f64 {
        self.sigma / self.gamma
    }

    /// Saturation value √(μσ) of the principal linearization eigenvalue.
    pub fn sqrt_mu_sigma(&self) -> f64 {
        (self.mu * self.sigma).sqrt()
    }

    pub fn is_symmetric_growth(&self) -> bool {
        self.sigma == self.mu
    }

    pub fn check_beta(&self, beta: f64) -> Result<()> {
        let lo = self.beta_min();
        if !beta.is_finite() || beta <= lo * (1.0 + BETA_MARGIN) {
            return Err(Error::Domain(format!(
                "beta = {beta} must exceed sigma/gamma = {lo}"
            )));
        }
        Ok(())
    }

    /// `β²αγ - μσ`, positive on the admissible range.
    pub fn det_scale(&self, beta: f64) -> f64 {
        beta * beta * self.alpha * self.gamma - self.mu * self.sigma
    }

    pub fn limit_reaction(&self) -> LimitReaction {
        LimitReaction {
            mu: self.mu,
            gamma: self.gamma,
            alpha: self.alpha,
        }
    }
}

/// The positive constant coexistence state `(a_β, b_β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantState {
    pub a: f64,
    pub b: f64,
    pub beta: f64,
}

pub fn constant_state(p: &Params, beta: f64) -> Result<ConstantState> {
    p.check_beta(beta)?;
    let d = p.det_scale(beta);
    let a = (beta * p.alpha - p.mu) * p.sigma / d;
    let b = (beta * p.gamma - p.sigma) * p.mu / d;
    Ok(ConstantState { a, b, beta })
}

impl ConstantState {
    /// Reaction right-hand sides of both equations evaluated at `(a, b)`.
    pub fn reaction_residual(&self, p: &Params) -> [f64; 2] {
        reaction(p, self.beta, self.a, self.b)
    }

    /// `d a_β / dβ` and `d b_β / dβ`.
    pub fn derivative(&self, p: &Params) -> (f64, f64) {
        let beta = self.beta;
        let d = p.det_scale(beta);
        let d2 = d * d;
        let base = beta * beta * p.alpha * p.gamma + p.mu * p.sigma;
        let da = -p.sigma * p.alpha * (base - 2.0 * beta * p.gamma * p.mu) / d2;
        let db = -p.mu * p.gamma * (base - 2.0 * beta * p.alpha * p.sigma) / d2;
        (da, db)
    }
}

/// Pointwise reaction terms `(μu1(1-u1) - βαu1u2, σu2(1-u2) - βγu1u2)`.
#[inline]
pub fn reaction(p: &Params, beta: f64, u1: f64, u2: f64) -> [f64; 2] {
    [
        p.mu * u1 * (1.0 - u1) - beta * p.alpha * u1 * u2,
        p.sigma * u2 * (1.0 - u2) - beta * p.gamma * u1 * u2,
    ]
}

/// The three semi-trivial and trivial constant states `(0,0)`, `(1,0)`, `(0,1)`.
pub fn trivial_states(_p: &Params) -> [(f64, f64); 3] {
    [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
}

/// Coefficients `(c1, c2)` of the locked-solution map `w ↦ (c1 w, c2 w)`.
pub fn locked_coefficients(p: &Params, beta: f64) -> Result<(f64, f64)> {
    if !p.is_symmetric_growth() {
        return Err(Error::Domain(format!(
            "locked solutions need sigma == mu (sigma = {}, mu = {})",
            p.sigma, p.mu
        )));
    }
    p.check_beta(beta)?;
    let d = beta * beta * p.alpha * p.gamma - p.mu * p.mu;
    Ok(((beta * p.alpha - p.mu) / d, (beta * p.gamma - p.mu) / d))
}

/// Maps a solution `w` of `-Δw = -μw - w²` onto the locked pair of the
/// shifted system around `(a_β, b_β)`.
pub fn locked_pair(p: &Params, beta: f64, w: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (c1, c2) = locked_coefficients(p, beta)?;
    Ok((
        w.iter().map(|x| c1 * x).collect(),
        w.iter().map(|x| c2 * x).collect(),
    ))
}

/// Piecewise logistic nonlinearity of the strong-competition limit:
/// `f(s) = μs(1 - s/γ)` for `s ≥ 0` and `μs(1 + s/α)` for `s ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitReaction {
    pub mu: f64,
    pub gamma: f64,
    pub alpha: f64,
}

impl LimitReaction {
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        if s >= 0.0 {
            self.mu * s * (1.0 - s / self.gamma)
        } else {
            self.mu * s * (1.0 + s / self.alpha)
        }
    }

    /// Derivative; the one-sided values agree at zero.
    #[inline]
    pub fn derivative(&self, s: f64) -> f64 {
        if s >= 0.0 {
            self.mu * (1.0 - 2.0 * s / self.gamma)
        } else {
            self.mu * (1.0 + 2.0 * s / self.alpha)
        }
    }
}

pub fn limit_reaction_eval(lr: &LimitReaction, s: f64) -> f64 {
    lr.eval(s)
}
