//! Eigenpairs of the radial Neumann Laplacian and the Bessel-zero oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DiscreteOperator, RadialGrid};
use crate::linalg::{max_abs, BandMatrix};
use crate::nodal::sign_changes;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub j: usize,
    pub lambda: f64,
    /// Grid values, `max |f| = 1` and `f(r_0) > 0`.
    pub f: Vec<f64>,
}

/// Number of eigenvalues of the symmetric tridiagonal `(d, e)` below `x`.
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let qs = if q == 0.0 {
            f64::EPSILON * (d[i - 1].abs() + e[i - 1].abs()).max(f64::MIN_POSITIVE)
        } else {
            q
        };
        q = d[i] - x - e[i - 1] * e[i - 1] / qs;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th (0-based) eigenvalue of `(d, e)` by bisection.
pub fn bisect_eigenvalue(d: &[f64], e: &[f64], k: usize) -> f64 {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let el = if i > 0 { e[i - 1].abs() } else { 0.0 };
        let er = if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - el - er);
        hi = hi.max(d[i] + el + er);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn inverse_iteration(d: &[f64], e: &[f64], shift: f64, seed: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = d.len();
    let mut a = BandMatrix::zeros(n, 1, 1);
    for i in 0..n {
        a.set(i, i, d[i] - shift);
        if i + 1 < n {
            a.set(i, i + 1, e[i]);
            a.set(i + 1, i, e[i]);
        }
    }
    let lu = match a.factor() {
        Ok(lu) => lu,
        Err(_) => {
            // exact hit on the eigenvalue; nudge the shift
            let mut a = BandMatrix::zeros(n, 1, 1);
            let s = shift * (1.0 + 4.0 * f64::EPSILON) + f64::EPSILON;
            for i in 0..n {
                a.set(i, i, d[i] - s);
                if i + 1 < n {
                    a.set(i, i + 1, e[i]);
                    a.set(i + 1, i, e[i]);
                }
            }
            a.factor()?
        }
    };
    let mut y = seed.to_vec();
    normalize2(&mut y);
    for _ in 0..4 {
        y = lu.solve(&y);
        normalize2(&mut y);
    }
    // Rayleigh quotient and residual
    let sy = tridiag_mul(d, e, &y);
    let rq: f64 = y.iter().zip(&sy).map(|(a, b)| a * b).sum();
    let res = sy
        .iter()
        .zip(&y)
        .map(|(s, v)| (s - rq * v).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = d.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1.0);
    if res > 1e-6 * scale {
        return Err(Error::NoConvergence {
            what: "inverse iteration",
            iterations: 4,
            residual: res,
        });
    }
    Ok((y, rq))
}

fn normalize2(y: &mut [f64]) {
    let s = y.iter().map(|x| x * x).sum::<f64>().sqrt();
    if s > 0.0 {
        y.iter_mut().for_each(|x| *x /= s);
    }
}

fn tridiag_mul(d: &[f64], e: &[f64], y: &[f64]) -> Vec<f64> {
    let n = d.len();
    (0..n)
        .map(|i| {
            let mut s = d[i] * y[i];
            if i > 0 {
                s += e[i - 1] * y[i - 1];
            }
            if i + 1 < n {
                s += e[i] * y[i + 1];
            }
            s
        })
        .collect()
}

/// The first `k + 1` eigenpairs (`j = 0..=k`), ascending.
///
/// The constant null mode is exact for the Neumann operator and is returned
/// as is; the others come from Sturm bisection and inverse iteration on the
/// symmetrized tridiagonal form.
pub fn eigenpairs(op: &DiscreteOperator, grid: &RadialGrid, k: usize) -> Result<Vec<EigenPair>> {
    if k < 1 {
        return Err(Error::Domain("need at least one positive mode".into()));
    }
    let n = grid.len();
    if k + 1 > n {
        return Err(Error::Domain(format!(
            "{} modes requested on {n} nodes",
            k + 1
        )));
    }
    grid.check_len(op.len(), "operator")?;
    let (d, e) = op.symmetric_tridiagonal();
    let sqrt_v: Vec<f64> = op.volumes.iter().map(|v| v.sqrt()).collect();
    let mut out = Vec::with_capacity(k + 1);
    out.push(EigenPair {
        j: 0,
        lambda: 0.0,
        f: vec![1.0; n],
    });
    for j in 1..=k {
        let lam0 = bisect_eigenvalue(&d, &e, j);
        // deterministic seed with j sign changes so inverse iteration starts
        // inside the right nodal class
        let seed: Vec<f64> = grid
            .r
            .iter()
            .zip(&sqrt_v)
            .map(|(r, s)| s * (std::f64::consts::PI * (j as f64 + 0.5) * r).cos() + 1e-3 * s)
            .collect();
        let (y, lam) = inverse_iteration(&d, &e, lam0, &seed)?;
        let mut f: Vec<f64> = y.iter().zip(&sqrt_v).map(|(a, s)| a / s).collect();
        let m = max_abs(&f);
        let sign = if f[0] < 0.0 { -1.0 } else { 1.0 };
        f.iter_mut().for_each(|x| *x *= sign / m);
        let count = sign_changes(&f, 1e-8);
        if count != j {
            return Err(Error::Internal(format!(
                "eigenfunction {j} has {count} sign changes"
            )));
        }
        out.push(EigenPair { j, lambda: lam, f });
    }
    for w in out.windows(2) {
        if !(w[1].lambda > w[0].lambda) {
            return Err(Error::Internal(
                "eigenvalues not strictly increasing".into(),
            ));
        }
    }
    Ok(out)
}

/// Reference Neumann eigenvalues of the radial Laplacian on the unit ball.
///
/// Radial eigenfunctions are `r^{1-N/2} J_{N/2-1}(k r)`; the Neumann
/// condition reduces to `J_{N/2}(k) = 0`, so `λ_j = k_j²` with `k_j` the
/// `j`-th positive zero of `J_{N/2}`. Even `N` uses the trapezoidal rule on
/// Bessel's integral (spectrally accurate for the periodic integrand); odd
/// `N` uses spherical Bessel functions.
pub fn bessel_oracle(dim: u32, j: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::Domain(format!("dimension must be >= 2, got {dim}")));
    }
    if j == 0 {
        return Ok(0.0);
    }
    let g = |x: f64| neumann_condition(dim, x);
    // zeros of J_{N/2} are spaced by roughly π; scan finely enough
    let step = 0.05;
    let mut x = 0.5 + 0.25 * dim as f64;
    let mut gx = g(x);
    let mut found = 0;
    while x < 1e4 {
        let xn = x + step;
        let gn = g(xn);
        if gx == 0.0 || gx.signum() != gn.signum() {
            found += 1;
            if found == j {
                let root = bisect(&g, x, xn)?;
                return Ok(root * root);
            }
        }
        x = xn;
        gx = gn;
    }
    Err(Error::Bracketing(format!(
        "zero {j} of J_{{{dim}/2}} not bracketed"
    )))
}

fn neumann_condition(dim: u32, x: f64) -> f64 {
    if dim % 2 == 0 {
        bessel_j_int(dim / 2, x)
    } else {
        spherical_bessel_j((dim - 1) / 2, x)
    }
}

fn bisect<F: Fn(f64) -> f64>(g: &F, mut a: f64, mut b: f64) -> Result<f64> {
    let mut ga = g(a);
    let gb = g(b);
    if ga.signum() == gb.signum() && ga != 0.0 && gb != 0.0 {
        return Err(Error::Bracketing(format!("no sign change on [{a}, {b}]")));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return Ok(m);
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// `J_n(x) = (1/π) ∫_0^π cos(nτ - x sin τ) dτ` by the trapezoidal rule.
pub fn bessel_j_int(n: u32, x: f64) -> f64 {
    let m = 256;
    let pi = std::f64::consts::PI;
    let h = pi / m as f64;
    let mut s = 0.5 * ((0.0f64).cos() + (n as f64 * pi - x * pi.sin()).cos());
    for k in 1..m {
        let t = k as f64 * h;
        s += (n as f64 * t - x * t.sin()).cos();
    }
    s * h / pi
}

/// Spherical Bessel `j_l(x)` by upward recurrence (fine for `x > l`).
pub fn spherical_bessel_j(l: u32, x: f64) -> f64 {
    let j0 = x.sin() / x;
    if l == 0 {
        return j0;
    }
    let mut jm = j0;
    let mut jc = x.sin() / (x * x) - x.cos() / x;
    for k in 1..l {
        let jn = (2 * k + 1) as f64 / x * jc - jm;
        jm = jc;
        jc = jn;
    }
    jc
}
