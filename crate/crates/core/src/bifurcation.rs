//! Bifurcation points from the constant stem: the roots of `-δ₁(β) = λ_j`,
//! their kernel directions, and the scalar transversality and index checks.

use serde::{Deserialize, Serialize};

use crate::elliptic::RadialProblem;
use crate::error::{Error, Result};
use crate::linearization::{index_spectrum, spectral_split};
use crate::par::{self, Exec};
use crate::params::Params;
use crate::spectrum::EigenPair;

const BISECTION_STEPS: usize = 80;
const SECANT_STEPS: usize = 3;
/// Largest bracket end tried, relative to `σ/γ`.
const BRACKET_CEILING: f64 = 1e15;
pub const INDEX_EPS: f64 = 1e-4;
const INDEX_EPS_MIN: f64 = 1e-10;
/// `|nondeg| < NEAR_ZERO` is flagged rather than judged.
pub const NEAR_ZERO: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub step2_value: f64,
    pub pairing_value: f64,
    pub nondeg_value: f64,
    pub nondeg_near_zero: bool,
    pub index_left: i8,
    pub index_right: i8,
    /// Relative half-width used for the index signs.
    pub index_eps: f64,
}

impl TransversalityReport {
    /// The proved invariants; the sign of `nondeg_value` is not part of it.
    pub fn holds(&self) -> bool {
        self.step2_value < 0.0
            && self.pairing_value != 0.0
            && i32::from(self.index_left) * i32::from(self.index_right) == -1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub j: usize,
    pub beta_j: f64,
    pub lambda_j: f64,
    pub m_j: f64,
    /// `(m_j f_j, f_j)` on the grid.
    pub h0: (Vec<f64>, Vec<f64>),
    pub diagnostics: TransversalityReport,
}

/// `-δ₁(β)`, increasing in `β` from 0 at `σ/γ` towards `√(μσ)`.
pub fn neg_delta1(p: &Params, beta: f64) -> Result<f64> {
    Ok(-spectral_split(p, beta)?.delta1)
}

/// The number `k` of modes with `λ_k < √(μσ) ≤ λ_{k+1}`.
///
/// `spectrum` is ascending and may start with the null mode.
pub fn admissible_mode_count(p: &Params, spectrum: &[EigenPair]) -> Result<usize> {
    let s = p.sqrt_mu_sigma();
    let last = spectrum.last().map_or(f64::NEG_INFINITY, |e| e.lambda);
    if last < s {
        return Err(Error::SpectrumTooShort(format!(
            "largest computed eigenvalue {last} is below sqrt(mu sigma) = {s}; request more modes"
        )));
    }
    Ok(spectrum.iter().filter(|e| e.j > 0 && e.lambda < s).count())
}

/// The unique `β > σ/γ` with `-δ₁(β) = λ`.
pub fn solve_bifurcation_beta(p: &Params, lambda: f64) -> Result<f64> {
    p.validate()?;
    if !(lambda > 0.0) || !(lambda < p.sqrt_mu_sigma()) {
        return Err(Error::Domain(format!(
            "lambda = {lambda} must lie in (0, sqrt(mu sigma) = {})",
            p.sqrt_mu_sigma()
        )));
    }
    let phi = |b: f64| neg_delta1(p, b).map(|v| v - lambda);
    let bmin = p.beta_min();
    let mut lo = bmin * (1.0 + 1e-9);
    if phi(lo)? > 0.0 {
        return Err(Error::Bracketing(format!(
            "-delta1 already exceeds lambda = {lambda} at the left end"
        )));
    }
    let mut hi = 2.0 * lo;
    while phi(hi)? <= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > BRACKET_CEILING * bmin {
            return Err(Error::Bracketing(format!(
                "no sign change of -delta1 - lambda below beta = {hi:e}"
            )));
        }
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (mut flo, mut fhi) = (phi(lo)?, phi(hi)?);
    let mut best = if flo.abs() < fhi.abs() { lo } else { hi };
    let mut fbest = flo.abs().min(fhi.abs());
    for _ in 0..SECANT_STEPS {
        if fhi == flo {
            break;
        }
        let x = lo - flo * (hi - lo) / (fhi - flo);
        if !(x >= lo && x <= hi) {
            break;
        }
        let fx = phi(x)?;
        if fx.abs() < fbest {
            best = x;
            fbest = fx.abs();
        }
        if fx <= 0.0 {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
    }
    Ok(best)
}

/// `(m(β_j) f_j, f_j)`.
pub fn bifurcation_direction(
    p: &Params,
    beta_j: f64,
    eig: &EigenPair,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = spectral_split(p, beta_j)?.m;
    Ok((eig.f.iter().map(|f| m * f).collect(), eig.f.clone()))
}

/// Scalars of the transversality argument at `β_j`.
pub fn transversality_check(
    p: &Params,
    beta_j: f64,
    lambda_j: f64,
) -> Result<TransversalityReport> {
    transversality_with_neighbors(p, beta_j, lambda_j, &[])
}

fn transversality_with_neighbors(
    p: &Params,
    beta_j: f64,
    lambda_j: f64,
    neighbors: &[f64],
) -> Result<TransversalityReport> {
    let sp = spectral_split(p, beta_j)?;
    let (a, b, m) = (sp.state.a, sp.state.b, sp.m);
    let (mu, sigma, alpha, gamma) = (p.mu, p.sigma, p.alpha, p.gamma);
    let base = beta_j * beta_j * alpha * gamma + mu * sigma;
    let step2_value =
        (base - 2.0 * beta_j * mu * gamma) * m - (base - 2.0 * beta_j * alpha * sigma);
    let ratio = (gamma * b) / (alpha * a);
    let pairing_value = -(alpha / gamma) * ratio * m + 1.0;
    let nondeg_value = m * (mu * m + beta_j * alpha) * ratio * m + sigma + beta_j * gamma * m;
    let (index_left, index_right, index_eps) =
        index_jump_check(p, beta_j, lambda_j, INDEX_EPS, neighbors)?;
    Ok(TransversalityReport {
        step2_value,
        pairing_value,
        nondeg_value,
        nondeg_near_zero: nondeg_value.abs() < NEAR_ZERO,
        index_left,
        index_right,
        index_eps,
    })
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Signs of `δ₂(β,1) - λ_j` at `β_j(1 ∓ ε)`. `ε` is halved while the
/// interval contains one of `neighbors`; returns the signs and the `ε` used.
pub fn index_jump_check(
    p: &Params,
    beta_j: f64,
    lambda_j: f64,
    eps: f64,
    neighbors: &[f64],
) -> Result<(i8, i8, f64)> {
    let mut eps = eps;
    let bmin = p.beta_min();
    loop {
        let (l, r) = (beta_j * (1.0 - eps), beta_j * (1.0 + eps));
        let clash = neighbors.iter().any(|&b| b != beta_j && b >= l && b <= r);
        if !clash && l > bmin * (1.0 + 1e-12) {
            let dl = index_spectrum(p, l, 1.0)?.delta2 - lambda_j;
            let dr = index_spectrum(p, r, 1.0)?.delta2 - lambda_j;
            return Ok((sign(dl), sign(dr), eps));
        }
        eps *= 0.5;
        if eps < INDEX_EPS_MIN {
            return Err(Error::Bracketing(format!(
                "no clean interval around beta_j = {beta_j}"
            )));
        }
    }
}

/// All bifurcation points for the given spectrum (null mode allowed).
pub fn bifurcation_points(
    p: &Params,
    spectrum: &[EigenPair],
    exec: Exec,
) -> Result<Vec<BifurcationPoint>> {
    let k = admissible_mode_count(p, spectrum)?;
    let modes: Vec<&EigenPair> = spectrum.iter().filter(|e| e.j >= 1 && e.j <= k).collect();
    let betas: Vec<Result<f64>> = par::map(exec, &modes, |e| solve_bifurcation_beta(p, e.lambda));
    let betas: Vec<f64> = betas.into_iter().collect::<Result<_>>()?;
    let pts: Vec<Result<BifurcationPoint>> = par::map_range(exec, modes.len(), |i| {
        let e = modes[i];
        let beta_j = betas[i];
        let m_j = spectral_split(p, beta_j)?.m;
        Ok(BifurcationPoint {
            j: e.j,
            beta_j,
            lambda_j: e.lambda,
            m_j,
            h0: bifurcation_direction(p, beta_j, e)?,
            diagnostics: transversality_with_neighbors(p, beta_j, e.lambda, &betas)?,
        })
    });
    let pts: Vec<BifurcationPoint> = pts.into_iter().collect::<Result<_>>()?;
    if pts.windows(2).any(|w| !(w[1].beta_j > w[0].beta_j)) {
        return Err(Error::Internal(
            "bifurcation values not increasing in j".into(),
        ));
    }
    Ok(pts)
}

/// Sign changes of `-δ₁(β) - λ` on a geometric grid up to `ceiling·σ/γ`.
pub fn scan_sign_changes(p: &Params, lambda: f64, points: usize, ceiling: f64) -> Result<usize> {
    let b0 = p.beta_min() * (1.0 + 1e-9);
    let ratio = (ceiling / (1.0 + 1e-9)).ln() / (points - 1) as f64;
    let mut prev = None;
    let mut count = 0;
    for i in 0..points {
        let b = b0 * (ratio * i as f64).exp();
        let s = sign(neg_delta1(p, b)? - lambda);
        if let Some(q) = prev {
            if s != q && s != 0 {
                count += 1;
            }
        }
        if s != 0 {
            prev = Some(s);
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    /// Weighted singular values of the discrete linearization, divided by
    /// `λ_1`, ascending (only the first few are kept).
    pub normalized: Vec<f64>,
    pub dimension: usize,
    /// `log10(σ₂/σ₁)`, with `σ₁` floored at machine epsilon.
    pub gap_orders: f64,
}

/// Kernel dimension of the discrete linearization at the constant state,
/// counting normalized singular values below `1e-6` with all others above
/// `1e-2`.
pub fn kernel_dimension(pr: &RadialProblem, beta_j: f64, lambda1: f64) -> Result<KernelReport> {
    let s = pr.constant_state_fields(beta_j)?;
    let sv = pr.weighted_singular_values(&s)?;
    let normalized: Vec<f64> = sv.iter().take(8).map(|x| x / lambda1).collect();
    let small = normalized.iter().filter(|&&x| x < 1e-6).count();
    let dimension = if normalized.iter().any(|&x| (1e-6..=1e-2).contains(&x)) {
        usize::MAX
    } else {
        small
    };
    let gap_orders = if normalized.len() > 1 {
        (normalized[1] / normalized[0].max(f64::EPSILON)).log10()
    } else {
        0.0
    };
    Ok(KernelReport {
        normalized,
        dimension,
        gap_orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ep(j: usize, lambda: f64) -> EigenPair {
        EigenPair {
            j,
            lambda,
            f: vec![],
        }
    }

    #[test]
    fn mode_counts() {
        let p = Params::new(16.0, 16.0, 2.0, 1.0, 2).unwrap();
        let spec = [ep(0, 0.0), ep(1, 14.68197064), ep(2, 49.2184563)];
        assert_eq!(admissible_mode_count(&p, &spec).unwrap(), 1);
        let p64 = Params::new(64.0, 64.0, 2.0, 1.0, 2).unwrap();
        assert!(matches!(
            admissible_mode_count(&p64, &spec),
            Err(Error::SpectrumTooShort(_))
        ));
        let spec3 = [ep(0, 0.0), ep(1, 14.68), ep(2, 49.22), ep(3, 103.50)];
        assert_eq!(admissible_mode_count(&p64, &spec3).unwrap(), 2);
        let p1 = Params::new(1.0, 1.0, 2.0, 1.0, 2).unwrap();
        assert_eq!(admissible_mode_count(&p1, &spec).unwrap(), 0);
    }

    #[test]
    fn root_residual_and_scan() {
        let p = Params::new(16.0, 16.0, 2.0, 1.0, 2).unwrap();
        let lam = 14.68197064212389;
        let b = solve_bifurcation_beta(&p, lam).unwrap();
        assert!(b > p.beta_min());
        assert!((neg_delta1(&p, b).unwrap() - lam).abs() < 1e-12 * lam);
        assert_eq!(scan_sign_changes(&p, lam, 4000, 1e6).unwrap(), 1);
        assert!(solve_bifurcation_beta(&p, 16.0).is_err());
    }

    #[test]
    fn worked_slope() {
        // -δ₁(2) = 3/7 for (1, 1, 2, 1)
        let p = Params::new(1.0, 1.0, 2.0, 1.0, 2).unwrap();
        let b = solve_bifurcation_beta(&p, 3.0 / 7.0).unwrap();
        assert!((b - 2.0).abs() < 1e-12);
        let m = spectral_split(&p, b).unwrap().m;
        assert!((m + 2.0).abs() < 1e-11);
    }

    #[test]
    fn index_signs_flip() {
        let p = Params::new(16.0, 16.0, 2.0, 1.0, 2).unwrap();
        let lam = 14.68197064212389;
        let b = solve_bifurcation_beta(&p, lam).unwrap();
        let r = transversality_check(&p, b, lam).unwrap();
        assert_eq!((r.index_left, r.index_right), (-1, 1));
        assert!(r.step2_value < 0.0);
        assert!(r.pairing_value > 0.0);
        assert!(r.holds());
    }
}
