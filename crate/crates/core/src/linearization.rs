//! Closed-form 2×2 spectral algebra of the linearization around the
//! constant coexistence state.
//!
//! `A(β)` is the reaction Jacobian (with sign flipped) at `(a_β, b_β)`,
//! `M(β) = A(β)ᵀ` governs the adjoint, and `D(β, λ)` is the matrix of the
//! eigenproblem used for the fixed-point index across `β_j`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{stable_pair, Matrix2};
use crate::params::{constant_state, ConstantState, Params};

/// `A(β) = [[μa, βαa], [βγb, σb]]`.
pub fn interaction_matrix(p: &Params, beta: f64) -> Result<Matrix2> {
    let c = constant_state(p, beta)?;
    Ok(interaction_matrix_at(p, &c))
}

fn interaction_matrix_at(p: &Params, c: &ConstantState) -> Matrix2 {
    let beta = c.beta;
    Matrix2::new(
        p.mu * c.a,
        beta * p.alpha * c.a,
        beta * p.gamma * c.b,
        p.sigma * c.b,
    )
}

/// `M(β) = [[μa, βγb], [βαa, σb]]`.
pub fn adjoint_matrix(p: &Params, beta: f64) -> Result<Matrix2> {
    Ok(interaction_matrix(p, beta)?.transpose())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizationSpectrum {
    pub beta: f64,
    pub state: ConstantState,
    pub delta1: f64,
    pub delta2: f64,
    /// First component of the `δ₁` eigenvector `(m, 1)` of `A(β)`.
    pub m: f64,
    /// Columns are eigenvectors of `A(β)` for `δ₁`, `δ₂`.
    pub q: Matrix2,
    /// Columns are eigenvectors of `M(β)` for `δ₁`, `δ₂`.
    pub p: Matrix2,
}

/// The eigenvalues `δ₁(β) < 0 < δ₂(β)` of `A(β)`, the kernel slope `m` and
/// both diagonalizers.
pub fn spectral_split(p: &Params, beta: f64) -> Result<LinearizationSpectrum> {
    let c = constant_state(p, beta)?;
    let (a, b) = (c.a, c.b);
    let tr = p.mu * a + p.sigma * b;
    let diff = p.mu * a - p.sigma * b;
    let cross = 4.0 * beta * beta * p.alpha * p.gamma * a * b;
    let root = (cross + diff * diff).sqrt();
    let det = a * b * (p.mu * p.sigma - beta * beta * p.alpha * p.gamma);
    let (delta1, delta2) = stable_pair(tr, root, det);
    // (δ - σb) / (βγb) is the eigenvector slope; σb - δ₁ is a sum of
    // positives, so this form never cancels.
    let m = -(p.sigma * b - delta1) / (beta * p.gamma * b);
    let m2 = -(p.sigma * b - delta2) / (beta * p.gamma * b);
    let q = Matrix2::new(m, m2, 1.0, 1.0);
    let pm = Matrix2::new(
        -(p.sigma * b - delta1) / (beta * p.alpha * a),
        -(p.sigma * b - delta2) / (beta * p.alpha * a),
        1.0,
        1.0,
    );
    Ok(LinearizationSpectrum {
        beta,
        state: c,
        delta1,
        delta2,
        m,
        q,
        p: pm,
    })
}

impl LinearizationSpectrum {
    pub fn a_matrix(&self, p: &Params) -> Matrix2 {
        interaction_matrix_at(p, &self.state)
    }

    pub fn lambda_diag(&self) -> Matrix2 {
        Matrix2::diag(self.delta1, self.delta2)
    }

    /// Relative residuals of `AQ = QΛ` and `MP = PΛ`.
    pub fn diagonalizer_residuals(&self, p: &Params) -> (f64, f64) {
        let a = self.a_matrix(p);
        let l = self.lambda_diag();
        let rq = a.mul(&self.q).sub(&self.q.mul(&l)).max_abs() / (a.max_abs() * self.q.max_abs());
        let mt = a.transpose();
        let rp = mt.mul(&self.p).sub(&self.p.mul(&l)).max_abs() / (mt.max_abs() * self.p.max_abs());
        (rq, rp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexSpectrum {
    pub beta: f64,
    pub lambda: f64,
    pub d: Matrix2,
    pub delta1: f64,
    pub delta2: f64,
    pub r: Matrix2,
}

/// Eigen-decomposition of
/// `D(β, λ) = (1/λ) [[-μλ + βαb, -βαa], [-βγb, -σλ + βγa]]`.
pub fn index_spectrum(p: &Params, beta: f64, lambda: f64) -> Result<IndexSpectrum> {
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return Err(crate::error::Error::Domain(format!(
            "index spectrum needs lambda >= 1, got {lambda}"
        )));
    }
    let c = constant_state(p, beta)?;
    let (a, b) = (c.a, c.b);
    let s = beta / lambda;
    let d = Matrix2::new(
        -p.mu + s * p.alpha * b,
        -s * p.alpha * a,
        -s * p.gamma * b,
        -p.sigma + s * p.gamma * a,
    );
    let tr = -(p.mu + p.sigma) + s * (p.alpha * b + p.gamma * a);
    let gap = p.mu - p.sigma - s * (p.alpha * b - p.gamma * a);
    let root = (gap * gap + 4.0 * s * s * p.alpha * p.gamma * a * b).sqrt();
    let det = p.mu * p.sigma - s * (p.sigma * p.alpha * b + p.mu * p.gamma * a);
    let (delta1, delta2) = stable_pair(tr, root, det);
    // eigenvector slopes -(σλ - βγa + λδ)/(βγb); the δ₁ column is written
    // through δ₂ using λ(δ₁ + δ₂) = λ·tr
    let bgb = beta * p.gamma * b;
    let x1 = (p.mu * lambda - beta * p.alpha * b + lambda * delta2) / bgb;
    let x2 = -(p.sigma * lambda - beta * p.gamma * a + lambda * delta2) / bgb;
    Ok(IndexSpectrum {
        beta,
        lambda,
        d,
        delta1,
        delta2,
        r: Matrix2::new(x1, x2, 1.0, 1.0),
    })
}

impl IndexSpectrum {
    pub fn diagonalizer_residual(&self) -> f64 {
        let l = Matrix2::diag(self.delta1, self.delta2);
        self.d.mul(&self.r).sub(&self.r.mul(&l)).max_abs() / (self.d.max_abs() * self.r.max_abs())
    }
}

/// `L_β(β)`, the β-derivative of the linearization, as the matrix `C(β)`.
pub fn beta_derivative_matrix(p: &Params, beta: f64) -> Result<Matrix2> {
    let d = p.det_scale(beta);
    p.check_beta(beta)?;
    let base = beta * beta * p.alpha * p.gamma + p.mu * p.sigma;
    let e1 = base - 2.0 * beta * p.mu * p.gamma;
    let e2 = base - 2.0 * beta * p.alpha * p.sigma;
    let s = p.mu * p.sigma / (d * d);
    Ok(Matrix2::new(
        -p.alpha * e1 * s,
        p.alpha * e2 * s,
        p.gamma * e1 * s,
        -p.gamma * e2 * s,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> Params {
        Params::new(1.0, 1.0, 2.0, 1.0, 2).unwrap()
    }

    #[test]
    fn worked_case() {
        let p = worked();
        let a = interaction_matrix(&p, 2.0).unwrap();
        let expect = Matrix2::new(3.0 / 7.0, 12.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0);
        assert!(a.sub(&expect).max_abs() < 1e-15);
        let m = adjoint_matrix(&p, 2.0).unwrap();
        assert!(m.sub(&expect.transpose()).max_abs() < 1e-15);
        let s = spectral_split(&p, 2.0).unwrap();
        assert!((s.delta1 + 3.0 / 7.0).abs() < 1e-14);
        assert!((s.delta2 - 1.0).abs() < 1e-14);
        assert!((s.m + 2.0).abs() < 1e-14);
        let (rq, rp) = s.diagonalizer_residuals(&p);
        assert!(rq < 1e-14 && rp < 1e-14);
    }

    #[test]
    fn determinant_sign_and_trace() {
        let p = Params::new(0.5, 3.0, 4.0, 2.0, 3).unwrap();
        for beta in [1.6, 2.0, 5.0, 100.0] {
            let a = interaction_matrix(&p, beta).unwrap();
            let c = constant_state(&p, beta).unwrap();
            assert!(a.det() < 0.0);
            assert!((a.trace() - (p.mu * c.a + p.sigma * c.b)).abs() < 1e-14);
        }
    }

    #[test]
    fn limits_of_delta1() {
        let p = Params::new(1.0, 2.0, 3.0, 1.0, 2).unwrap();
        let near = spectral_split(&p, 2.0 * (1.0 + 1e-9)).unwrap();
        assert!(near.delta1.abs() < 1e-7);
        let far = spectral_split(&p, 1e9).unwrap();
        assert!((-far.delta1 - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn index_spectrum_closure_and_limit() {
        let p = worked();
        let s = index_spectrum(&p, 2.0, 1.0).unwrap();
        assert!((s.delta2 - 3.0 / 7.0).abs() < 1e-14);
        let a = interaction_matrix(&p, 2.0).unwrap();
        assert!(s.d.sub(&a.scale(-1.0)).max_abs() < 1e-14);
        let far = index_spectrum(&p, 2.0, 1e9).unwrap();
        assert!((far.delta2 + p.mu).abs() < 1e-8);
        assert!(index_spectrum(&p, 2.0, 0.5).is_err());
        assert!(s.diagonalizer_residual() < 1e-14);
    }

    #[test]
    fn beta_derivative_matches_finite_difference() {
        let p = Params::new(1.0, 1.5, 3.0, 1.0, 2).unwrap();
        let beta = 4.0;
        let c = beta_derivative_matrix(&p, beta).unwrap();
        let h = 1e-6;
        let ap = interaction_matrix(&p, beta + h).unwrap();
        let am = interaction_matrix(&p, beta - h).unwrap();
        let fd = ap.sub(&am).scale(1.0 / (2.0 * h));
        assert!(c.sub(&fd).max_abs() < 1e-7, "{c:?} {fd:?}");
    }
}
