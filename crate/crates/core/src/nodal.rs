//! Sign-change bookkeeping for radial profiles.

use serde::{Deserialize, Serialize};

use crate::grid::RadialGrid;
use crate::linalg::max_abs;
use crate::params::Params;

/// Slope threshold for a simple root, relative to `max |v|`.
pub const SLOPE_TOL: f64 = 1e-6;
/// Endpoint non-vanishing threshold, relative to `max |v|`.
pub const ENDPOINT_TOL: f64 = 1e-8;

/// Strict sign changes of `f`, ignoring entries below `rel_tol · max |f|`.
pub fn sign_changes(f: &[f64], rel_tol: f64) -> usize {
    let thr = rel_tol * max_abs(f);
    let mut last = 0.0_f64;
    let mut count = 0;
    for &x in f {
        if x.abs() <= thr {
            continue;
        }
        if last != 0.0 && x.signum() != last {
            count += 1;
        }
        last = x.signum();
    }
    count
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalCount {
    pub zero_locations: Vec<f64>,
    /// All roots simple, well separated, and both endpoint values nonzero.
    pub simple: bool,
    pub count: usize,
    /// `max |v|` fell below the absolute floor (e.g. a locked solution).
    pub degenerate: bool,
}

impl NodalCount {
    /// Count usable only when the configuration is simple.
    pub fn reliable_count(&self) -> Option<usize> {
        (self.simple && !self.degenerate).then_some(self.count)
    }

    pub fn in_class(&self, j: usize) -> bool {
        self.reliable_count() == Some(j)
    }
}

/// Locates the interior roots of `v` by linear interpolation and classifies
/// them. `abs_floor` is the absolute size below which `v` is treated as
/// identically zero.
pub fn nodal_count(v: &[f64], grid: &RadialGrid, abs_floor: f64) -> NodalCount {
    let n = v.len();
    assert_eq!(n, grid.len());
    let vmax = max_abs(v);
    if !(vmax > abs_floor) {
        return NodalCount {
            zero_locations: Vec::new(),
            simple: false,
            count: 0,
            degenerate: true,
        };
    }
    let tiny = 1e-14 * vmax;
    let slope_tol = SLOPE_TOL * vmax;
    let end_tol = ENDPOINT_TOL * vmax;
    let mut roots = Vec::new();
    let mut root_cells = Vec::new();
    let mut simple = v[0].abs() > end_tol && v[n - 1].abs() > end_tol;
    let mut prev: Option<usize> = None;
    for i in 0..n {
        if v[i].abs() <= tiny {
            continue;
        }
        if let Some(p) = prev {
            if v[p].signum() != v[i].signum() {
                let (ra, rb) = (grid.r[p], grid.r[i]);
                let t = v[p] / (v[p] - v[i]);
                roots.push(ra + t * (rb - ra));
                root_cells.push(p);
                let slope = (v[i] - v[p]) / (rb - ra);
                if i != p + 1 || slope.abs() <= slope_tol {
                    simple = false;
                }
            }
        }
        prev = Some(i);
    }
    if root_cells.windows(2).any(|w| w[1] - w[0] < 2) {
        simple = false;
    }
    NodalCount {
        count: roots.len(),
        zero_locations: roots,
        simple,
        degenerate: false,
    }
}

/// Nodal fields of a state: `v = (βγ-μ)u1 - (βα-μ)u2` and the segregation
/// field `w = γu1 - αu2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalDiagnostic {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub nodal: NodalCount,
}

impl NodalDiagnostic {
    pub fn from_fields(p: &Params, beta: f64, u1: &[f64], u2: &[f64], grid: &RadialGrid) -> Self {
        let c1 = beta * p.gamma - p.mu;
        let c2 = beta * p.alpha - p.mu;
        let v: Vec<f64> = u1.iter().zip(u2).map(|(a, b)| c1 * a - c2 * b).collect();
        let w: Vec<f64> = u1
            .iter()
            .zip(u2)
            .map(|(a, b)| p.gamma * a - p.alpha * b)
            .collect();
        // roundoff level of the combination on a locked state
        let floor = 1e-11 * (c1.abs() + c2.abs());
        let nodal = nodal_count(&v, grid, floor);
        NodalDiagnostic { v, w, nodal }
    }

    pub fn count(&self) -> usize {
        self.nodal.count
    }
}
