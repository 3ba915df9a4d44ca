//! Staggered radial grid on `[0, 1]` and the finite-volume Neumann
//! Laplacian `-(r^{N-1} u')' / r^{N-1}`.
//!
//! Nodes sit at `r_i = (i + 1/2) h` with `h = 1/(n - 1/2)`, so the first node
//! is at `h/2` and the last one at exactly `r = 1`. Node `i` owns the control
//! volume between the neighbouring faces; the last cell is a half cell ending
//! at the boundary. The flux through `r = 0` vanishes because the face area
//! does, and the flux through `r = 1` is zero by the Neumann condition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub dim: u32,
    pub h: f64,
    /// Node coordinates.
    pub r: Vec<f64>,
    /// Radial control volumes `∫ r^{N-1} dr` over each cell.
    pub volumes: Vec<f64>,
    /// Quadrature weights for `∫_{B_1}`: volumes times the sphere area.
    pub weights: Vec<f64>,
    /// Face coordinates, `faces[i]` is the left face of cell `i`;
    /// `faces[n]` is the outer boundary `r = 1`.
    pub faces: Vec<f64>,
}

/// Surface area of the unit sphere in `R^dim`.
pub fn sphere_area(dim: u32) -> f64 {
    // 2 π^{N/2} / Γ(N/2)
    let gamma_half = gamma_of_half_integer(dim);
    2.0 * std::f64::consts::PI.powf(dim as f64 / 2.0) / gamma_half
}

/// Γ(k/2) for positive integer k.
fn gamma_of_half_integer(k: u32) -> f64 {
    let (mut g, mut x) = if k % 2 == 0 {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    let target = k as f64 / 2.0;
    while x < target - 1e-12 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume `|B_1|` of the unit ball.
pub fn ball_volume(dim: u32) -> f64 {
    sphere_area(dim) / dim as f64
}

pub fn build_grid(dim: u32, n: usize) -> Result<RadialGrid> {
    if n < MIN_NODES {
        return Err(Error::Domain(format!(
            "grid needs at least {MIN_NODES} nodes, got {n}"
        )));
    }
    if dim < 2 {
        return Err(Error::Domain(format!("dimension must be >= 2, got {dim}")));
    }
    let h = 1.0 / (n as f64 - 0.5);
    let mut r: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    r[n - 1] = 1.0;
    let mut faces: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    faces.push(1.0);
    let nd = dim as f64;
    let volumes: Vec<f64> = (0..n)
        .map(|i| (faces[i + 1].powi(dim as i32) - faces[i].powi(dim as i32)) / nd)
        .collect();
    let area = sphere_area(dim);
    let weights = volumes.iter().map(|v| v * area).collect();
    Ok(RadialGrid {
        dim,
        h,
        r,
        volumes,
        weights,
        faces,
    })
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// `∫_{B_1} f` by the grid quadrature.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, x)| w * x).sum()
    }

    /// Weighted inner product `∫_{B_1} u v`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(u.iter().zip(v))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// `∫_{B_1} |∇u|²` from the face differences.
    pub fn gradient_seminorm_sq(&self, u: &[f64]) -> f64 {
        let area = sphere_area(self.dim);
        let n = self.len();
        let mut s = 0.0;
        for i in 0..n - 1 {
            let dr = self.r[i + 1] - self.r[i];
            let g = (u[i + 1] - u[i]) / dr;
            // face i+1 between nodes i and i+1; radial measure over [r_i, r_{i+1}]
            let measure = (self.r[i + 1].powi(self.dim as i32) - self.r[i].powi(self.dim as i32))
                / self.dim as f64;
            s += g * g * measure;
        }
        s * area
    }

    pub fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.len() {
            return Err(Error::GridMismatch(format!(
                "{what} has {len} values, grid has {}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Finite-volume Neumann operator `A = V⁻¹ K` with `K` symmetric
/// tridiagonal. Stored as face conductances so that applying it to a
/// constant field gives exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteOperator {
    /// `cond[i]` couples nodes `i` and `i + 1`: face area over node spacing.
    pub cond: Vec<f64>,
    pub volumes: Vec<f64>,
}

pub fn assemble_neumann_laplacian(grid: &RadialGrid) -> DiscreteOperator {
    let n = grid.len();
    let cond = (0..n - 1)
        .map(|i| {
            let face = grid.faces[i + 1];
            face.powi(grid.dim as i32 - 1) / (grid.r[i + 1] - grid.r[i])
        })
        .collect();
    DiscreteOperator {
        cond,
        volumes: grid.volumes.clone(),
    }
}

impl DiscreteOperator {
    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    /// Applies `-Δ_r` to `u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply_into(u, &mut out);
        out
    }

    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let n = self.len();
        assert_eq!(u.len(), n);
        for i in 0..n {
            let mut flux = 0.0;
            if i + 1 < n {
                flux -= self.cond[i] * (u[i + 1] - u[i]);
            }
            if i > 0 {
                flux += self.cond[i - 1] * (u[i] - u[i - 1]);
            }
            out[i] = flux / self.volumes[i];
        }
    }

    /// Diagonal and off-diagonal of `A` at row `i`: `(left, diag, right)`.
    pub fn row(&self, i: usize) -> (f64, f64, f64) {
        let n = self.len();
        let left = if i > 0 { self.cond[i - 1] } else { 0.0 };
        let right = if i + 1 < n { self.cond[i] } else { 0.0 };
        let v = self.volumes[i];
        (-left / v, (left + right) / v, -right / v)
    }

    /// Symmetric tridiagonal `V^{-1/2} K V^{-1/2}` as (diagonal, off-diagonal).
    pub fn symmetric_tridiagonal(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let diag = (0..n).map(|i| self.row(i).1).collect();
        let off = (0..n - 1)
            .map(|i| -self.cond[i] / (self.volumes[i] * self.volumes[i + 1]).sqrt())
            .collect();
        (diag, off)
    }

    /// Largest row sum of `|A|`.
    pub fn norm_inf(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let (l, d, r) = self.row(i);
                l.abs() + d.abs() + r.abs()
            })
            .fold(0.0, f64::max)
    }
}
