//! The strong-competition limit: the scalar problem `-Δw = f(w)` with the
//! piecewise logistic `f`, and distances of `γu1 - αu2` to its solution.

use serde::{Deserialize, Serialize};

use crate::continuation::{Branch, BranchPoint};
use crate::elliptic::RadialProblem;
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::linalg::{max_abs, BandMatrix};
use crate::nodal::nodal_count;
use crate::spectrum::EigenPair;

const NEWTON_MAX: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitProfile {
    pub w: Vec<f64>,
    pub j: usize,
    pub roots: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// `-Δw - f(w)` nodewise.
pub fn limit_residual(pr: &RadialProblem, w: &[f64]) -> Result<Vec<f64>> {
    pr.grid.check_len(w.len(), "w")?;
    let lr = pr.params.limit_reaction();
    let mut r = pr.op.apply(w);
    r.iter_mut().zip(w).for_each(|(x, s)| *x -= lr.eval(*s));
    Ok(r)
}

fn newton(pr: &RadialProblem, seed: &[f64], tol: f64) -> Result<(Vec<f64>, f64, usize)> {
    let lr = pr.params.limit_reaction();
    let n = pr.n();
    let mut w = seed.to_vec();
    let mut res = max_abs(&limit_residual(pr, &w)?);
    let mut prev = f64::INFINITY;
    for it in 0..NEWTON_MAX {
        if res < tol || (res < 1e3 * tol && res > 0.5 * prev) {
            return Ok((w, res, it));
        }
        let r = limit_residual(pr, &w)?;
        let mut j = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            let (l, d, rr) = pr.op.row(i);
            j.set(i, i, d - lr.derivative(w[i]));
            if i > 0 {
                j.set(i, i - 1, l);
            }
            if i + 1 < n {
                j.set(i, i + 1, rr);
            }
        }
        let dw = j.factor()?.solve(&r);
        // damp steps that would overshoot the constant roots of f
        let big = max_abs(&dw);
        let limit = 0.5 * pr.params.alpha.max(pr.params.gamma);
        let t = if big > limit { limit / big } else { 1.0 };
        w.iter_mut().zip(&dw).for_each(|(a, d)| *a -= t * d);
        prev = res;
        res = max_abs(&limit_residual(pr, &w)?);
        if !res.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence {
        what: "limit equation",
        iterations: NEWTON_MAX,
        residual: res,
    })
}

/// A solution with `j` simple roots, seeded by `ε f_j` (`ε` defaults to
/// `0.1 min(γ, α)` and may be negative); the seed amplitude is doubled
/// until the result has `j` simple roots and the seed's sign at the centre.
pub fn solve_limit_equation(
    pr: &RadialProblem,
    eig: &EigenPair,
    eps: Option<f64>,
    tol: f64,
) -> Result<LimitProfile> {
    let p = &pr.params;
    if !p.is_symmetric_growth() {
        return Err(Error::Domain("the limit equation needs sigma == mu".into()));
    }
    let j = eig.j;
    if j == 0 || !(p.mu > eig.lambda) {
        return Err(Error::Domain(format!(
            "need mu > lambda_{j} (mu = {}, lambda = {})",
            p.mu, eig.lambda
        )));
    }
    pr.grid.check_len(eig.f.len(), "eigenfunction")?;
    let mut eps = eps.unwrap_or(0.1 * p.gamma.min(p.alpha));
    let mut last = None;
    for _ in 0..3 {
        let seed: Vec<f64> = eig.f.iter().map(|f| eps * f).collect();
        match newton(pr, &seed, tol) {
            Ok((w, residual, iterations)) => {
                let nc = nodal_count(&w, &pr.grid, 1e-8);
                // the seed sign fixes which of the two profiles is wanted
                if nc.in_class(j) && w[0] * eps > 0.0 {
                    return Ok(LimitProfile {
                        w,
                        j,
                        roots: nc.zero_locations,
                        residual,
                        iterations,
                    });
                }
                last = Some(Error::NoConvergence {
                    what: "limit equation (wrong nodal class)",
                    iterations,
                    residual,
                });
            }
            Err(e) => last = Some(e),
        }
        eps *= 2.0;
    }
    Err(last.unwrap())
}

/// `‖w_β - s·w‖∞` with `s = ±1` the sign of `⟨w_β, w⟩`.
pub fn aligned_distance(w_beta: &[f64], w: &[f64], grid: &RadialGrid) -> Result<f64> {
    grid.check_len(w_beta.len(), "w_beta")?;
    grid.check_len(w.len(), "profile")?;
    let s = if grid.inner(w_beta, w) < 0.0 {
        -1.0
    } else {
        1.0
    };
    Ok(w_beta
        .iter()
        .zip(w)
        .fold(0.0_f64, |m, (a, b)| m.max((a - s * b).abs())))
}

pub fn segregation_distance(
    bp: &BranchPoint,
    profile: &LimitProfile,
    grid: &RadialGrid,
) -> Result<f64> {
    aligned_distance(&bp.nodal.w, &profile.w, grid)
}

/// The two `j`-nodal profiles seeded by `+ε f_j` and `-ε f_j`. Unless
/// `α = γ`, `f` is not odd, so the second is not the negative of the first.
pub fn limit_profiles(pr: &RadialProblem, eig: &EigenPair, tol: f64) -> Result<[LimitProfile; 2]> {
    let eps = 0.1 * pr.params.gamma.min(pr.params.alpha);
    Ok([
        solve_limit_equation(pr, eig, Some(eps), tol)?,
        solve_limit_equation(pr, eig, Some(-eps), tol)?,
    ])
}

/// The profile best correlated with `w_β`.
pub fn matching_profile<'a>(
    w_beta: &[f64],
    profiles: &'a [LimitProfile],
    grid: &RadialGrid,
) -> Option<&'a LimitProfile> {
    profiles.iter().max_by(|a, b| {
        grid.inner(w_beta, &a.w)
            .total_cmp(&grid.inner(w_beta, &b.w))
    })
}

/// `(β, ∫u1²u2)` along the branch, ordered by `β`.
pub fn overlap_decay(branch: &Branch) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = branch
        .points
        .iter()
        .map(|p| (p.state.beta, p.overlap))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}
