//! Branch switching at a bifurcation point and pseudo-arclength
//! continuation of the nonconstant branch.
//!
//! The unknown is `X = (u1, u2, β)` with inner product
//! `⟨X, Y⟩ = ∫(x1 y1 + x2 y2) + |B_1| xβ yβ`, i.e. `β` is weighted like a
//! constant field of that value.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bifurcation::BifurcationPoint;
use crate::elliptic::{RadialProblem, StateFields};
use crate::error::{Error, Result};
use crate::grid::ball_volume;
use crate::linalg::{dot, BandMatrix};
use crate::nodal::NodalDiagnostic;
use crate::par::{self, Exec};
use crate::params::{constant_state, trivial_states};

/// Pivot ratio below which bordered systems are solved densely.
const BORDER_PIVOT_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    /// Absolute β ceiling; `None` means `1000·β_j`.
    pub beta_max: Option<f64>,
    pub max_points: usize,
    /// Switch amplitude relative to `max(a, b)` at `β_j`.
    pub amplitude: f64,
    pub ds_min: f64,
    /// Largest step, relative to `|B_1|^{1/2} β_j`.
    pub ds_max: f64,
    pub growth: f64,
    pub tol: f64,
    /// Residual a point must reach to be accepted.
    pub accept_tol: f64,
    pub max_corrector: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            beta_max: None,
            max_points: 500,
            amplitude: 1e-2,
            ds_min: 1e-12,
            ds_max: 0.5,
            growth: 1.3,
            tol: 1e-11,
            accept_tol: 1e-10,
            max_corrector: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub sup_u1: f64,
    pub sup_u2: f64,
    /// `∫|∇u_i|²`.
    pub h1sq_u1: f64,
    pub h1sq_u2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub s: f64,
    pub state: StateFields,
    pub nodal: NodalDiagnostic,
    pub norms: Norms,
    pub residual: f64,
    pub overlap: f64,
    /// Arclength equation residual at acceptance (0 for switch points).
    pub constraint_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    BetaCeiling,
    PointBudget,
    LoopDetected,
    StepFailure {
        detail: String,
    },
    /// The nodal count changed between two accepted β values.
    NodalChange {
        beta_lo: f64,
        beta_hi: f64,
    },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::BetaCeiling => "beta ceiling",
            Termination::PointBudget => "point budget",
            Termination::LoopDetected => "loop detected",
            Termination::StepFailure { .. } => "step failure",
            Termination::NodalChange { .. } => "nodal change",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub j: usize,
    pub direction: i8,
    pub origin: BifurcationPoint,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
    pub rejected_steps: usize,
}

impl Branch {
    pub fn max_beta(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.state.beta)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Solves `[[J, b], [cᵀ, d]] [x; y] = [f; g]`.
///
/// Block elimination with two refinement sweeps when `J` is well
/// conditioned, a dense LU of the full system otherwise.
pub fn solve_bordered(
    j: &BandMatrix,
    b: &[f64],
    c: &[f64],
    d: f64,
    f: &[f64],
    g: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = j.dim();
    if let Ok(lu) = j.clone().factor() {
        if lu.pivot_ratio() >= BORDER_PIVOT_RATIO {
            let z = lu.solve(b);
            let denom = d - dot(c, &z);
            if denom != 0.0 && denom.is_finite() {
                let elim = |f: &[f64], g: f64| {
                    let y1 = lu.solve(f);
                    let y = (g - dot(c, &y1)) / denom;
                    let x: Vec<f64> = y1.iter().zip(&z).map(|(a, zz)| a - zz * y).collect();
                    (x, y)
                };
                let (mut x, mut y) = elim(f, g);
                for _ in 0..2 {
                    let jx = j.matvec(&x);
                    let rf: Vec<f64> = (0..n).map(|i| f[i] - jx[i] - b[i] * y).collect();
                    let rg = g - dot(c, &x) - d * y;
                    let (dx, dy) = elim(&rf, rg);
                    x.iter_mut().zip(&dx).for_each(|(a, e)| *a += e);
                    y += dy;
                }
                return Ok((x, y));
            }
        }
    }
    let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..n {
        for k in i.saturating_sub(2)..(i + 3).min(n) {
            m[(i, k)] = j.get(i, k);
        }
        m[(i, n)] = b[i];
        m[(n, i)] = c[i];
    }
    m[(n, n)] = d;
    let mut rhs = DVector::from_column_slice(f);
    rhs = rhs.push(g);
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("bordered system is singular".into()))?;
    Ok((sol.rows(0, n).iter().copied().collect(), sol[n]))
}

struct Arc<'a> {
    pr: &'a RadialProblem,
    /// interleaved quadrature weights
    wx: Vec<f64>,
    wb: f64,
}

impl<'a> Arc<'a> {
    fn new(pr: &'a RadialProblem) -> Self {
        let wx = pr.grid.weights.iter().flat_map(|w| [*w, *w]).collect();
        Arc {
            pr,
            wx,
            wb: ball_volume(pr.params.dim),
        }
    }

    fn inner(&self, x: &[f64], bx: f64, y: &[f64], by: f64) -> f64 {
        self.wx
            .iter()
            .zip(x.iter().zip(y))
            .map(|(w, (a, b))| w * a * b)
            .sum::<f64>()
            + self.wb * bx * by
    }

    /// Newton on `F(x, β) = 0`, `⟨cx, x⟩ + cb β = g`.
    fn correct(
        &self,
        x0: &[f64],
        beta0: f64,
        cx: &[f64],
        cb: f64,
        g: f64,
        cfg: &ContinuationConfig,
    ) -> Result<(StateFields, f64, f64)> {
        let mut x = x0.to_vec();
        let mut beta = beta0;
        let mut prev = f64::INFINITY;
        for it in 0..=cfg.max_corrector {
            let s = StateFields::from_interleaved(&x, beta);
            let f = self.pr.residual_interleaved(&s)?;
            let res = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let cres = dot(cx, &x) + cb * beta - g;
            let cscale = g.abs().max(1.0);
            if !res.is_finite() {
                break;
            }
            let done_c = cres.abs() <= 1e-12 * cscale;
            if done_c && (res < cfg.tol || (res < cfg.accept_tol && res > 0.5 * prev)) {
                return Ok((s, res, cres));
            }
            if it == cfg.max_corrector {
                break;
            }
            prev = res;
            let jac = self.pr.jacobian(&s)?;
            let fb = self.pr.residual_beta_derivative(&s);
            let (dx, db) = solve_bordered(&jac, &fb, cx, cb, &f, cres)?;
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a -= d);
            beta -= db;
        }
        Err(Error::NoConvergence {
            what: "arclength corrector",
            iterations: cfg.max_corrector,
            residual: prev,
        })
    }
}

fn make_point(
    pr: &RadialProblem,
    s: f64,
    state: StateFields,
    residual: f64,
    cres: f64,
) -> BranchPoint {
    let g = &pr.grid;
    let nodal = NodalDiagnostic::from_fields(&pr.params, state.beta, &state.u1, &state.u2, g);
    let (sup_u1, sup_u2) = state.sup_norms();
    let norms = Norms {
        sup_u1,
        sup_u2,
        h1sq_u1: g.gradient_seminorm_sq(&state.u1),
        h1sq_u2: g.gradient_seminorm_sq(&state.u2),
    };
    let overlap = overlap_integral(pr, &state);
    BranchPoint {
        s,
        state,
        nodal,
        norms,
        residual,
        overlap,
        constraint_residual: cres,
    }
}

/// `∫_{B_1} u1² u2`.
pub fn overlap_integral(pr: &RadialProblem, s: &StateFields) -> f64 {
    let f: Vec<f64> = s.u1.iter().zip(&s.u2).map(|(a, b)| a * a * b).collect();
    pr.grid.integrate(&f)
}

/// Sup-norm distance from the constant state at the same `β` (infinite
/// when `β ≤ σ/γ`).
pub fn stem_distance(pr: &RadialProblem, s: &StateFields) -> f64 {
    match constant_state(&pr.params, s.beta) {
        Ok(c) => s.distance_to_constant(c.a, c.b),
        Err(_) => f64::INFINITY,
    }
}

/// Corrected point off the constant stem near `origin`, with
/// `⟨u - c(β_j), h0⟩ = amp ‖h0‖²` fixing the amplitude. Newton starts from
/// `c(β_j) + amp·h0` at `β = β_j`; `β` is free during the correction.
pub fn branch_switch(
    pr: &RadialProblem,
    origin: &BifurcationPoint,
    amplitude: f64,
    cfg: &ContinuationConfig,
) -> Result<BranchPoint> {
    let arc = Arc::new(pr);
    let c = constant_state(&pr.params, origin.beta_j)?;
    let scale = c.a.max(c.b);
    let mut amp = amplitude * scale;
    let h0 = StateFields {
        u1: origin.h0.0.clone(),
        u2: origin.h0.1.clone(),
        beta: 0.0,
    }
    .interleave();
    pr.grid.check_len(h0.len() / 2, "direction")?;
    let cx: Vec<f64> = h0.iter().zip(&arc.wx).map(|(h, w)| h * w).collect();
    let hh = dot(&cx, &h0);
    let base = StateFields::constant(pr.n(), c.a, c.b, origin.beta_j).interleave();
    let cbase = dot(&cx, &base);
    let mut last_err = None;
    for _ in 0..4 {
        let x0: Vec<f64> = base.iter().zip(&h0).map(|(b, h)| b + amp * h).collect();
        match arc.correct(&x0, origin.beta_j, &cx, 0.0, cbase + amp * hh, cfg) {
            Ok((s, res, cres)) => {
                if stem_distance(pr, &s) > 0.1 * amp.abs() {
                    return Ok(make_point(pr, 0.0, s, res, cres));
                }
                last_err = Some(Error::NoConvergence {
                    what: "branch switch (fell back onto the stem)",
                    iterations: 0,
                    residual: res,
                });
            }
            Err(e) => last_err = Some(e),
        }
        amp *= 2.0;
    }
    Err(last_err.unwrap_or_else(|| Error::Internal("branch switch".into())))
}

/// Traces the branch through `origin` in direction `±h0`.
pub fn continue_branch(
    pr: &RadialProblem,
    origin: &BifurcationPoint,
    direction: i8,
    cfg: &ContinuationConfig,
) -> Result<Branch> {
    if direction != 1 && direction != -1 {
        return Err(Error::Domain("direction must be +1 or -1".into()));
    }
    let p = &pr.params;
    let sgn = f64::from(direction);
    let beta_max = cfg.beta_max.unwrap_or(1e3 * origin.beta_j);
    let arc = Arc::new(pr);
    let p0 = branch_switch(pr, origin, sgn * cfg.amplitude, cfg)?;
    let p1 = branch_switch(pr, origin, sgn * 2.0 * cfg.amplitude, cfg)?;
    let check_nodal = p.is_symmetric_growth();
    let admissible = |bp: &BranchPoint| -> std::result::Result<(), &'static str> {
        if !bp.state.strictly_between_zero_and_one() {
            return Err("positivity");
        }
        if check_nodal && !bp.nodal.nodal.in_class(origin.j) {
            return Err("nodal");
        }
        for (a, b) in trivial_states(p) {
            if bp.state.distance_to_constant(a, b) < 1e-6 {
                return Err("trivial state");
            }
        }
        Ok(())
    };
    for bp in [&p0, &p1] {
        if let Err(why) = admissible(bp) {
            return Err(Error::Domain(format!("switch point fails the {why} check")));
        }
    }
    let mut xa = p0.state.interleave();
    let mut ba = p0.state.beta;
    let mut xb = p1.state.interleave();
    let mut bb = p1.state.beta;
    let dx0: Vec<f64> = xb.iter().zip(&xa).map(|(a, b)| a - b).collect();
    let ds0 = arc.inner(&dx0, bb - ba, &dx0, bb - ba).sqrt();
    let mut p1 = p1;
    p1.s = ds0;
    let mut points = vec![p0, p1];
    let ds_max = cfg.ds_max * ball_volume(p.dim).sqrt() * origin.beta_j;
    let mut ds = ds0;
    let mut rejected = 0;
    let mut s_acc = ds0;
    let termination = loop {
        if points.last().unwrap().state.beta >= beta_max {
            break Termination::BetaCeiling;
        }
        if points.len() >= cfg.max_points {
            break Termination::PointBudget;
        }
        let mut tx: Vec<f64> = xb.iter().zip(&xa).map(|(a, b)| a - b).collect();
        let mut tb = bb - ba;
        let nrm = arc.inner(&tx, tb, &tx, tb).sqrt();
        tx.iter_mut().for_each(|t| *t /= nrm);
        tb /= nrm;
        let cx: Vec<f64> = tx.iter().zip(&arc.wx).map(|(t, w)| t * w).collect();
        let cb = arc.wb * tb;
        let mut failure = String::new();
        let mut nodal_fail = false;
        let accepted = loop {
            if ds < cfg.ds_min {
                break None;
            }
            let xp: Vec<f64> = xb.iter().zip(&tx).map(|(x, t)| x + ds * t).collect();
            let bp_ = bb + ds * tb;
            let g = dot(&cx, &xp) + cb * bp_;
            match arc.correct(&xp, bp_, &cx, cb, g, cfg) {
                Ok((st, res, cres)) => {
                    let cand = make_point(pr, s_acc + ds, st, res, cres);
                    match admissible(&cand) {
                        Ok(()) => break Some(cand),
                        Err(why) => {
                            nodal_fail = why == "nodal";
                            failure = format!("{why} check failed");
                        }
                    }
                }
                Err(e) => {
                    nodal_fail = false;
                    failure = e.to_string();
                }
            }
            rejected += 1;
            ds *= 0.5;
        };
        let Some(cand) = accepted else {
            if nodal_fail {
                break Termination::NodalChange {
                    beta_lo: bb.min(bb + cfg.ds_min * tb),
                    beta_hi: bb.max(bb + cfg.ds_min * tb),
                };
            }
            break Termination::StepFailure { detail: failure };
        };
        s_acc += ds;
        xa = std::mem::replace(&mut xb, cand.state.interleave());
        ba = bb;
        bb = cand.state.beta;
        let first = &points[0].state;
        let looped = points.len() > 10 && {
            let d = cand.state.distance_to_constant(0.0, 0.0).max(1.0);
            let diff = cand
                .state
                .u1
                .iter()
                .zip(&first.u1)
                .chain(cand.state.u2.iter().zip(&first.u2))
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            diff < 1e-6 * d && (cand.state.beta - first.beta).abs() < 1e-6 * first.beta
        };
        points.push(cand);
        if looped {
            break Termination::LoopDetected;
        }
        ds = (ds * cfg.growth).min(ds_max);
    };
    Ok(Branch {
        j: origin.j,
        direction,
        origin: origin.clone(),
        points,
        termination,
        rejected_steps: rejected,
    })
}

/// Both directions of the branch through `origin`.
pub fn trace_both(
    pr: &RadialProblem,
    origin: &BifurcationPoint,
    cfg: &ContinuationConfig,
    exec: Exec,
) -> Vec<Result<Branch>> {
    par::map(exec, &[1i8, -1], |&d| continue_branch(pr, origin, d, cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchDiagnostics {
    pub beta: f64,
    pub overlap: f64,
    pub w: Vec<f64>,
    pub sup_u1: f64,
    pub h1sq_u1: f64,
    pub h1sq_u2: f64,
    pub stem_distance: f64,
    pub limit_distance: Option<f64>,
}

/// Extended report for a converged point; `limit` is an optional limit
/// profile on the same grid.
pub fn branch_diagnostics(
    pr: &RadialProblem,
    bp: &BranchPoint,
    limit: Option<&[f64]>,
) -> Result<BranchDiagnostics> {
    let s = &bp.state;
    let w: Vec<f64> = bp.nodal.w.clone();
    let limit_distance = match limit {
        Some(l) => Some(crate::limit::aligned_distance(&w, l, &pr.grid)?),
        None => None,
    };
    Ok(BranchDiagnostics {
        beta: s.beta,
        overlap: overlap_integral(pr, s),
        w,
        sup_u1: bp.norms.sup_u1,
        h1sq_u1: pr.grid.gradient_seminorm_sq(&s.u1),
        h1sq_u2: pr.grid.gradient_seminorm_sq(&s.u2),
        stem_distance: stem_distance(pr, s),
        limit_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bordered_matches_dense() {
        let n = 12;
        let mut j = BandMatrix::zeros(n, 2, 2);
        for i in 0..n {
            j.set(i, i, 4.0 + i as f64 * 0.1);
            if i + 1 < n {
                j.set(i, i + 1, -1.0);
                j.set(i + 1, i, -0.5);
            }
            if i + 2 < n {
                j.set(i, i + 2, 0.25);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let c: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let xs: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let ys = -2.0;
        let jx = j.matvec(&xs);
        let f: Vec<f64> = (0..n).map(|i| jx[i] + b[i] * ys).collect();
        let g = dot(&c, &xs) + 0.7 * ys;
        let (x, y) = solve_bordered(&j, &b, &c, 0.7, &f, g).unwrap();
        assert!((y - ys).abs() < 1e-12);
        for (a, e) in x.iter().zip(&xs) {
            assert!((a - e).abs() < 1e-11);
        }
    }

    #[test]
    fn singular_block_uses_dense_path() {
        // J singular (zero row/col), bordered system regular
        let n = 4;
        let mut j = BandMatrix::zeros(n, 2, 2);
        for i in 1..n {
            j.set(i, i, 1.0);
        }
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        let mut c = vec![0.0; n];
        c[0] = 1.0;
        let (x, y) = solve_bordered(&j, &b, &c, 0.0, &[3.0, 1.0, 2.0, 3.0], 5.0).unwrap();
        assert!((y - 3.0).abs() < 1e-14);
        assert!((x[0] - 5.0).abs() < 1e-14);
        assert!((x[3] - 3.0).abs() < 1e-14);
    }
}
