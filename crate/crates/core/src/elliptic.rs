//! Discrete steady-state problem on the radial grid: residual, Jacobian,
//! Newton's method, and the linearized spectrum deciding stability.
//!
//! Unknowns are interleaved node by node, `x[2i] = u1(r_i)`,
//! `x[2i + 1] = u2(r_i)`, so the Jacobian is a band matrix with two sub- and
//! two super-diagonals.
//!
//! Stability follows the convention of the underlying eigenvalue problem:
//! a state is *stable* when the eigenvalue with smallest real part has
//! positive real part. This is the opposite sign of the usual
//! `du/dt = J u` convention.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{assemble_neumann_laplacian, build_grid, DiscreteOperator, RadialGrid};
use crate::linalg::{max_abs, BandMatrix};
use crate::params::{constant_state, reaction, Params};

pub const DEFAULT_TOL: f64 = 1e-11;
pub const DEFAULT_MAX_ITER: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFields {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub beta: f64,
}

impl StateFields {
    pub fn constant(n: usize, u1: f64, u2: f64, beta: f64) -> Self {
        StateFields {
            u1: vec![u1; n],
            u2: vec![u2; n],
            beta,
        }
    }

    pub fn len(&self) -> usize {
        self.u1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u1.is_empty()
    }

    pub fn interleave(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 * self.len());
        for (a, b) in self.u1.iter().zip(&self.u2) {
            x.push(*a);
            x.push(*b);
        }
        x
    }

    pub fn from_interleaved(x: &[f64], beta: f64) -> Self {
        let u1 = x.iter().step_by(2).copied().collect();
        let u2 = x.iter().skip(1).step_by(2).copied().collect();
        StateFields { u1, u2, beta }
    }

    pub fn is_finite(&self) -> bool {
        self.u1.iter().chain(&self.u2).all(|x| x.is_finite()) && self.beta.is_finite()
    }

    /// Strictly inside `(0, 1)` at every node, both components.
    pub fn strictly_between_zero_and_one(&self) -> bool {
        self.u1.iter().chain(&self.u2).all(|&x| x > 0.0 && x < 1.0)
    }

    pub fn sup_norms(&self) -> (f64, f64) {
        (max_abs(&self.u1), max_abs(&self.u2))
    }

    /// Sup-norm distance to the constant pair `(c1, c2)`.
    pub fn distance_to_constant(&self, c1: f64, c2: f64) -> f64 {
        let d1 = self.u1.iter().fold(0.0_f64, |m, x| m.max((x - c1).abs()));
        let d2 = self.u2.iter().fold(0.0_f64, |m, x| m.max((x - c2).abs()));
        d1.max(d2)
    }
}

/// Grid, operator and parameters of one discrete problem.
#[derive(Debug, Clone)]
pub struct RadialProblem {
    pub params: Params,
    pub grid: RadialGrid,
    pub op: DiscreteOperator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub state: StateFields,
    pub iterations: usize,
    /// Residual max-norm before each step and after the last one.
    pub history: Vec<f64>,
    pub residual: f64,
    /// Stopped at the roundoff floor instead of reaching `tol`.
    pub at_floor: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Eigenvalues with the smallest real parts, ascending by real part.
    pub leading: Vec<Eigenvalue>,
    /// Leading real part is not positive.
    pub unstable: bool,
}

impl RadialProblem {
    pub fn new(params: Params, n: usize) -> Result<Self> {
        params.validate()?;
        let grid = build_grid(params.dim, n)?;
        let op = assemble_neumann_laplacian(&grid);
        Ok(RadialProblem { params, grid, op })
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    fn check(&self, s: &StateFields) -> Result<()> {
        self.grid.check_len(s.u1.len(), "u1")?;
        self.grid.check_len(s.u2.len(), "u2")
    }

    pub fn constant_state_fields(&self, beta: f64) -> Result<StateFields> {
        let c = constant_state(&self.params, beta)?;
        Ok(StateFields::constant(self.n(), c.a, c.b, beta))
    }

    /// `(-Δ_r u1 - μu1(1-u1) + βαu1u2, -Δ_r u2 - σu2(1-u2) + βγu1u2)`.
    pub fn residual(&self, s: &StateFields) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check(s)?;
        let mut r1 = self.op.apply(&s.u1);
        let mut r2 = self.op.apply(&s.u2);
        for i in 0..self.n() {
            let f = reaction(&self.params, s.beta, s.u1[i], s.u2[i]);
            r1[i] -= f[0];
            r2[i] -= f[1];
        }
        Ok((r1, r2))
    }

    pub fn residual_interleaved(&self, s: &StateFields) -> Result<Vec<f64>> {
        let (r1, r2) = self.residual(s)?;
        Ok(r1.iter().zip(&r2).flat_map(|(a, b)| [*a, *b]).collect())
    }

    pub fn residual_norm(&self, s: &StateFields) -> Result<f64> {
        let (r1, r2) = self.residual(s)?;
        Ok(max_abs(&r1).max(max_abs(&r2)))
    }

    /// Derivative of the interleaved residual with respect to the fields.
    pub fn jacobian(&self, s: &StateFields) -> Result<BandMatrix> {
        self.check(s)?;
        let p = &self.params;
        let n = self.n();
        let mut j = BandMatrix::zeros(2 * n, 2, 2);
        for i in 0..n {
            let (l, d, r) = self.op.row(i);
            let (u1, u2) = (s.u1[i], s.u2[i]);
            for c in 0..2 {
                let row = 2 * i + c;
                j.set(row, row, d);
                if i > 0 {
                    j.set(row, row - 2, l);
                }
                if i + 1 < n {
                    j.set(row, row + 2, r);
                }
            }
            j.add(
                2 * i,
                2 * i,
                -p.mu + 2.0 * p.mu * u1 + s.beta * p.alpha * u2,
            );
            j.set(2 * i, 2 * i + 1, s.beta * p.alpha * u1);
            j.set(2 * i + 1, 2 * i, s.beta * p.gamma * u2);
            j.add(
                2 * i + 1,
                2 * i + 1,
                -p.sigma + 2.0 * p.sigma * u2 + s.beta * p.gamma * u1,
            );
        }
        Ok(j)
    }

    /// Derivative of the interleaved residual with respect to `β`.
    pub fn residual_beta_derivative(&self, s: &StateFields) -> Vec<f64> {
        let p = &self.params;
        s.u1.iter()
            .zip(&s.u2)
            .flat_map(|(a, b)| [p.alpha * a * b, p.gamma * a * b])
            .collect()
    }

    /// Roundoff floor of the residual for fields of size `scale`.
    pub fn residual_floor(&self, scale: f64) -> f64 {
        let p = &self.params;
        let reac = p.mu.max(p.sigma) + 2.0 * p.alpha * p.mu.max(p.sigma);
        16.0 * f64::EPSILON * (self.op.norm_inf() + reac) * scale.max(1e-3)
    }

    pub fn newton_solve(
        &self,
        start: &StateFields,
        tol: f64,
        max_iter: usize,
    ) -> Result<NewtonReport> {
        self.check(start)?;
        let mut s = start.clone();
        let mut history = Vec::new();
        let mut res = self.residual_norm(&s)?;
        history.push(res);
        let mut at_floor = false;
        let mut iterations = 0;
        while res >= tol {
            if iterations >= max_iter {
                return Err(Error::NoConvergence {
                    what: "newton",
                    iterations,
                    residual: res,
                });
            }
            let f = self.residual_interleaved(&s)?;
            let lu = self
                .jacobian(&s)?
                .factor()
                .map_err(|e| Error::Singular(format!("jacobian at beta = {}: {e}", s.beta)))?;
            if lu.pivot_ratio() < 1e-14 {
                return Err(Error::Singular(format!(
                    "jacobian nearly singular at beta = {} (pivot ratio {:.2e})",
                    s.beta,
                    lu.pivot_ratio()
                )));
            }
            let dx = lu.solve(&f);
            let mut x = s.interleave();
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a -= d);
            let next = StateFields::from_interleaved(&x, s.beta);
            if !next.is_finite() {
                return Err(Error::NoConvergence {
                    what: "newton",
                    iterations,
                    residual: f64::INFINITY,
                });
            }
            let new_res = self.residual_norm(&next)?;
            iterations += 1;
            s = next;
            history.push(new_res);
            let floor = self.residual_floor(max_abs(&x));
            if new_res >= tol && new_res > 0.5 * res && new_res < floor {
                at_floor = true;
                res = new_res;
                break;
            }
            res = new_res;
        }
        Ok(NewtonReport {
            state: s,
            iterations,
            history,
            residual: res,
            at_floor,
        })
    }

    /// Dense linearized operator (the Jacobian of the residual).
    pub fn dense_linearization(&self, s: &StateFields) -> Result<DMatrix<f64>> {
        Ok(self.jacobian(s)?.to_dense())
    }

    /// Eigenvalues of the linearized problem with the `count` smallest real
    /// parts.
    pub fn linearized_spectrum(&self, s: &StateFields, count: usize) -> Result<StabilityReport> {
        let res = self.residual_norm(s)?;
        let floor = self.residual_floor(1.0);
        if res > 1e-9_f64.max(10.0 * floor) {
            return Err(Error::Domain(format!(
                "state is not a solution (residual {res:.3e})"
            )));
        }
        let dense = self.dense_linearization(s)?;
        let ev = dense.complex_eigenvalues();
        let mut vals: Vec<Eigenvalue> = ev
            .iter()
            .map(|z| Eigenvalue { re: z.re, im: z.im })
            .collect();
        if vals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NoConvergence {
                what: "dense eigenvalue solver",
                iterations: 0,
                residual: f64::NAN,
            });
        }
        vals.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        vals.truncate(count.max(1));
        let unstable = vals[0].re <= 0.0;
        Ok(StabilityReport {
            leading: vals,
            unstable,
        })
    }

    /// Singular values of the Jacobian in the weighted norm
    /// `‖x‖² = Σ V_i (x1_i² + x2_i²)`, ascending.
    pub fn weighted_singular_values(&self, s: &StateFields) -> Result<Vec<f64>> {
        let mut m = self.dense_linearization(s)?;
        let sq: Vec<f64> = self.grid.volumes.iter().map(|v| v.sqrt()).collect();
        let n2 = 2 * self.n();
        for i in 0..n2 {
            for j in 0..n2 {
                let v = m[(i, j)];
                if v != 0.0 {
                    m[(i, j)] = v * sq[i / 2] / sq[j / 2];
                }
            }
        }
        let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
        sv.sort_by(f64::total_cmp);
        Ok(sv)
    }
}
