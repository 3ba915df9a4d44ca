//! The scalar functions `f, h, g, H, z` behind the monotonicity and
//! non-degeneracy arguments, each evaluated twice (product form and
//! expanded polynomial), plus sign sweeps over random admissible draws.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bifurcation::solve_bifurcation_beta;
use crate::error::{Error, Result};
use crate::linalg::horner_compensated;
use crate::linearization::{index_spectrum, spectral_split};
use crate::par::{self, Exec};
use crate::params::{constant_state, Params};
use crate::spectrum::bessel_oracle;

/// Allowed disagreement of the two evaluations, relative to the combined
/// term magnitudes.
pub const DUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixFunctions {
    pub beta: f64,
    pub lambda: Option<f64>,
    pub f_beta: f64,
    pub h_beta: f64,
    pub g_beta: f64,
    #[serde(rename = "H_beta")]
    pub big_h_beta: Option<f64>,
    pub z_beta: Option<f64>,
    /// Term-magnitude scales, for relative margins.
    pub h_scale: f64,
    pub g_scale: f64,
    #[serde(rename = "H_scale")]
    pub big_h_scale: Option<f64>,
    /// Largest relative disagreement between the two evaluations.
    pub dual_mismatch: f64,
}

fn f_coeffs(p: &Params) -> [f64; 5] {
    let (mu, s, a, g) = (p.mu, p.sigma, p.alpha, p.gamma);
    let ms = mu * s;
    [
        ms * (mu - s) * (mu - s),
        -2.0 * ms * (a - g) * (mu - s),
        ms * (a + g) * (a + g),
        -4.0 * a * g * (a * s + g * mu),
        4.0 * a * a * g * g,
    ]
}

fn h_coeffs(p: &Params) -> [f64; 5] {
    let (mu, s, a, g) = (p.mu, p.sigma, p.alpha, p.gamma);
    let ms = mu * s;
    [
        2.0 * ms * ms * (a - g) * (mu - s),
        -2.0 * ms * (ms * (a + g) * (a + g) + 2.0 * a * g * (mu - s) * (mu - s)),
        6.0 * a * g * ms * (a + g) * (mu + s),
        -2.0 * a * g * ms * (a * a + g * g + 10.0 * a * g),
        4.0 * a * a * g * g * (a * s + g * mu),
    ]
}

fn big_h_coeffs(p: &Params, l: f64) -> [f64; 4] {
    let (mu, s, a, g) = (p.mu, p.sigma, p.alpha, p.gamma);
    [
        -mu * mu * s * s,
        g * mu * s * (mu - l),
        g * mu * (2.0 * g * l + s * a),
        -(l + mu) * a * g * g,
    ]
}

fn z_coeffs(p: &Params, l: f64) -> [f64; 6] {
    let (mu, s, a, g) = (p.mu, p.sigma, p.alpha, p.gamma);
    let sl = s + l;
    [
        sl * sl * sl * s * s * mu * mu,
        -3.0 * g * s * s * mu * mu * sl * sl,
        g * s * mu * sl * (3.0 * g * s * mu - 2.0 * l * a * sl),
        g * g * s * mu * (-g * s * mu + l * a * (5.0 * s + 4.0 * l)),
        l * a * g * g * (l * a * sl - s * (s * a + 3.0 * g * mu)),
        l * a * a * g * g * g * (s - l),
    ]
}

/// `(2√(μσ) k(β), scale)` with `k = (β²αγ+μσ)(α+γ) - 2βαγ(μ+σ)`.
fn g_extra(p: &Params, b: f64, sqrt_f: f64) -> (f64, f64) {
    let (mu, s, a, g) = (p.mu, p.sigma, p.alpha, p.gamma);
    let t1 = (b * b * a * g + mu * s) * (a + g);
    let t2 = 2.0 * b * a * g * (mu + s);
    let c = 2.0 * sqrt_f * (mu * s).sqrt();
    (c * (t1 - t2), c * (t1 + t2))
}

struct Factored {
    f: f64,
    h: f64,
    h_scale: f64,
}

fn factored_fh(p: &Params, b: f64) -> Factored {
    let (mu, s, a, g) = (p.mu, p.sigma, p.alpha, p.gamma);
    let (ba, bg) = (b * a - mu, b * g - s);
    let lin = b * (a - g) - (mu - s);
    let prod = 4.0 * b * b * a * g * ba * bg;
    let f = prod + mu * s * lin * lin;
    let fp = 4.0 * a * g * (2.0 * b * ba * bg + b * b * a * bg + b * b * g * ba)
        + 2.0 * mu * s * (a - g) * lin;
    let d = b * b * a * g - mu * s;
    let h = fp * d - 4.0 * b * a * g * f;
    let fscale = prod.abs() + mu * s * lin * lin;
    let h_scale = fp.abs() * (b * b * a * g + mu * s) + 4.0 * b * a * g * fscale;
    Factored { f, h, h_scale }
}

fn factored_big_h(p: &Params, b: f64, l: f64) -> (f64, f64) {
    let (mu, s, a, g) = (p.mu, p.sigma, p.alpha, p.gamma);
    let e1 = b * b * a * g + mu * s - 2.0 * b * mu * g;
    let e2 = b * b * a * g + mu * s - 2.0 * b * a * s;
    let k = -l / mu - s / (b * g);
    let pre = mu * b * g;
    (pre * (e1 * k - e2), pre * (e1.abs() * k.abs() + e2.abs()))
}

fn factored_z(p: &Params, b: f64, l: f64) -> (f64, f64) {
    let (mu, s, a, g) = (p.mu, p.sigma, p.alpha, p.gamma);
    let e = b * g - s - l;
    let q = l * b * b * a * g + s * mu * e;
    let t1 = q * q * e;
    let t2 = l * b * b * b * a * g * g * s * (b * a - mu) * (b * g - s);
    (-t1 + t2, t1.abs() + t2.abs())
}

fn rel(x: f64, y: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        (x - y).abs()
    } else {
        (x - y).abs() / scale
    }
}

/// All five functions at `β`; `H` and `z` need `λ`.
pub fn evaluate_appendix(p: &Params, beta: f64, lambda: Option<f64>) -> Result<AppendixFunctions> {
    p.check_beta(beta)?;
    evaluate_unchecked(p, beta, lambda)
}

fn evaluate_unchecked(p: &Params, beta: f64, lambda: Option<f64>) -> Result<AppendixFunctions> {
    let fac = factored_fh(p, beta);
    let (f_e, f_sc) = horner_compensated(&f_coeffs(p), beta);
    let (h_e, h_sc) = horner_compensated(&h_coeffs(p), beta);
    let mut mism = rel(fac.f, f_e, f_sc).max(rel(fac.h, h_e, h_sc + fac.h_scale));
    let (gx_e, gx_sc) = g_extra(p, beta, f_e.max(0.0).sqrt());
    let (gx_f, _) = g_extra(p, beta, fac.f.max(0.0).sqrt());
    let g_e = h_e + gx_e;
    let g_f = fac.h + gx_f;
    let g_scale = h_sc + gx_sc;
    mism = mism.max(rel(g_e, g_f, g_scale + fac.h_scale));
    let (mut big_h, mut big_h_scale, mut z) = (None, None, None);
    if let Some(l) = lambda {
        let (hh_e, hh_sc) = horner_compensated(&big_h_coeffs(p, l), beta);
        let (hh_f, hh_fsc) = factored_big_h(p, beta, l);
        let (z_e, z_sc) = horner_compensated(&z_coeffs(p, l), beta);
        let (z_f, z_fsc) = factored_z(p, beta, l);
        mism = mism
            .max(rel(hh_e, hh_f, hh_sc + hh_fsc))
            .max(rel(z_e, z_f, z_sc + z_fsc));
        big_h = Some(hh_e);
        big_h_scale = Some(hh_sc);
        z = Some(z_e);
    }
    if !(mism <= DUAL_TOL) {
        return Err(Error::Internal(format!(
            "product and expanded forms disagree by {mism:.3e} at beta = {beta}"
        )));
    }
    Ok(AppendixFunctions {
        beta,
        lambda,
        f_beta: f_e,
        h_beta: h_e,
        g_beta: g_e,
        big_h_beta: big_h,
        z_beta: z,
        h_scale: h_sc,
        g_scale,
        big_h_scale,
        dual_mismatch: mism,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointValues {
    pub h: f64,
    pub h_closed: f64,
    pub g: f64,
    pub g_closed: f64,
    #[serde(rename = "H")]
    pub big_h: f64,
    #[serde(rename = "H_closed")]
    pub big_h_closed: f64,
}

/// `h`, `g`, `H` at the left end `β = σ/γ`, by the polynomials and by their
/// closed forms.
pub fn endpoint_values(p: &Params, lambda: f64) -> EndpointValues {
    let (mu, s, a, g) = (p.mu, p.sigma, p.alpha, p.gamma);
    let b0 = s / g;
    let (h, _) = horner_compensated(&h_coeffs(p), b0);
    let (f, _) = horner_compensated(&f_coeffs(p), b0);
    let gv = h + g_extra(p, b0, f.max(0.0).sqrt()).0;
    let (big_h, _) = horner_compensated(&big_h_coeffs(p, lambda), b0);
    let k = s * a - g * mu;
    EndpointValues {
        h,
        h_closed: 2.0 * s * s / (g * g) * k * k * (2.0 * s * a - mu * a - mu * g),
        g: gv,
        g_closed: 4.0 * s / g * k * k * (b0 * b0 * a * g - mu * s),
        big_h,
        big_h_closed: s * s / g * lambda * (-s * a + mu * g),
    }
}

/// `d(-δ₁)/dβ = √(μσ) g / (4 (β²αγ - μσ)² √f)`.
pub fn neg_delta1_derivative(p: &Params, beta: f64) -> Result<f64> {
    let af = evaluate_appendix(p, beta, None)?;
    let d = p.det_scale(beta);
    Ok(p.sqrt_mu_sigma() * af.g_beta / (4.0 * d * d * af.f_beta.sqrt()))
}

/// `αb_β - γa_β` directly and by the closed form
/// `[-βαγ(σ-μ) - σμ(α-γ)] / (β²αγ - μσ)`.
pub fn cross_difference(p: &Params, beta: f64) -> Result<(f64, f64)> {
    let c = constant_state(p, beta)?;
    let direct = p.alpha * c.b - p.gamma * c.a;
    let closed = (-beta * p.alpha * p.gamma * (p.sigma - p.mu)
        - p.sigma * p.mu * (p.alpha - p.gamma))
        / p.det_scale(beta);
    Ok((direct, closed))
}

/// `∂δ₂/∂λ` and `∂δ₂/∂β` of the index matrix `D(β, λ)` from its left and
/// right eigenvectors.
pub fn delta2_partials(p: &Params, beta: f64, lambda: f64) -> Result<(f64, f64)> {
    let c = constant_state(p, beta)?;
    let (da, db) = c.derivative(p);
    let t = beta / lambda;
    let (mu, s, al, g) = (p.mu, p.sigma, p.alpha, p.gamma);
    let (d11, d12, d21, d22) = (
        -mu + t * al * c.b,
        -t * al * c.a,
        -t * g * c.b,
        -s + t * g * c.a,
    );
    let diff = d11 - d22;
    let root = (diff * diff + 4.0 * d12 * d21).sqrt();
    // δ₂ - d11 without cancellation
    let e = if diff >= 0.0 {
        d12 * d21 / (0.5 * (diff + root))
    } else {
        0.5 * (-diff + root)
    };
    let (r1, r2) = (d12, e);
    let (l1, l2) = (d21, e);
    let lr = l1 * r1 + l2 * r2;
    let quad = |m11: f64, m12: f64, m21: f64, m22: f64| {
        (l1 * (m11 * r1 + m12 * r2) + l2 * (m21 * r1 + m22 * r2)) / lr
    };
    // dD/dt at fixed (a, b)
    let (k11, k12, k21, k22) = (al * c.b, -al * c.a, -g * c.b, g * c.a);
    let d_dt = quad(k11, k12, k21, k22);
    let d_dlambda = -d_dt * beta / (lambda * lambda);
    let d_dbeta = quad(
        k11 / lambda + t * al * db,
        k12 / lambda - t * al * da,
        k21 / lambda - t * g * db,
        k22 / lambda + t * g * da,
    );
    Ok((d_dlambda, d_dbeta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub lambda: Option<f64>,
}

impl Sample {
    fn new(p: &Params, beta: f64, lambda: Option<f64>) -> Self {
        Sample {
            mu: p.mu,
            sigma: p.sigma,
            alpha: p.alpha,
            gamma: p.gamma,
            beta,
            lambda,
        }
    }
}

/// Pass counts for one inequality. `margin` is signed and relative:
/// positive means satisfied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityStats {
    pub theorem_grade: bool,
    pub checked: u64,
    pub violations: u64,
    pub worst_margin: f64,
    pub worst_sample: Option<Sample>,
}

impl InequalityStats {
    fn new(theorem_grade: bool) -> Self {
        InequalityStats {
            theorem_grade,
            checked: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            worst_sample: None,
        }
    }

    fn record(&mut self, margin: f64, sample: Sample) {
        self.checked += 1;
        if !(margin > 0.0) {
            self.violations += 1;
        }
        if !(margin >= self.worst_margin) {
            self.worst_margin = margin;
            self.worst_sample = Some(sample);
        }
    }

    fn merge(&mut self, o: &InequalityStats) {
        self.checked += o.checked;
        self.violations += o.violations;
        if o.worst_margin < self.worst_margin
            || (o.worst_margin.is_nan() && !self.worst_margin.is_nan())
        {
            self.worst_margin = o.worst_margin;
            self.worst_sample = o.worst_sample;
        }
    }
}

/// Named inequality statistics, keyed for sorted JSON output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub inequalities: BTreeMap<String, InequalityStats>,
    pub max_dual_mismatch: f64,
    /// Largest relative gap between the derivative formula and central
    /// differences, over samples where the difference quotient is
    /// resolvable to better than `1e-8`.
    pub max_derivative_gap: f64,
    pub derivative_samples: u64,
}

impl Report {
    fn stat(&mut self, name: &str, theorem: bool) -> &mut InequalityStats {
        self.inequalities
            .entry(name.to_string())
            .or_insert_with(|| InequalityStats::new(theorem))
    }

    pub fn merge(&mut self, o: &Report) {
        for (k, v) in &o.inequalities {
            self.inequalities
                .entry(k.clone())
                .or_insert_with(|| InequalityStats::new(v.theorem_grade))
                .merge(v);
        }
        self.max_dual_mismatch = self.max_dual_mismatch.max(o.max_dual_mismatch);
        self.max_derivative_gap = self.max_derivative_gap.max(o.max_derivative_gap);
        self.derivative_samples += o.derivative_samples;
    }

    pub fn theorem_violations(&self) -> u64 {
        self.inequalities
            .values()
            .filter(|s| s.theorem_grade)
            .map(|s| s.violations)
            .sum()
    }

    pub fn total_checked(&self) -> u64 {
        self.inequalities.values().map(|s| s.checked).sum()
    }
}

fn neg_delta1(p: &Params, beta: f64) -> Result<f64> {
    Ok(-spectral_split(p, beta)?.delta1)
}

/// `g > 0`, `h > 0`, and the increase of `-δ₁` at each grid point.
pub fn verify_mono_beta(p: &Params, beta_grid: &[f64]) -> Result<Report> {
    let mut rep = Report::default();
    for &b in beta_grid {
        let af = evaluate_appendix(p, b, None)?;
        let s = Sample::new(p, b, None);
        rep.max_dual_mismatch = rep.max_dual_mismatch.max(af.dual_mismatch);
        rep.stat("g_positive", true)
            .record(af.g_beta / af.g_scale, s);
        rep.stat("h_positive", true)
            .record(af.h_beta / af.h_scale, s);
        let deriv = neg_delta1_derivative(p, b)?;
        rep.stat("neg_delta1_derivative_positive", true)
            .record(deriv / (p.sqrt_mu_sigma() / b), s);
        // central difference; resolvable part only
        let step = 1e-4 * b;
        let (lo, hi) = (b - step, b + step);
        if lo > p.beta_min() * (1.0 + 1e-9) {
            let (vl, vh) = (neg_delta1(p, lo)?, neg_delta1(p, hi)?);
            let fd = (vh - vl) / (2.0 * step);
            let noise = 8.0 * f64::EPSILON * vh.abs().max(vl.abs()) / (2.0 * step);
            let margin = (fd + noise) / (deriv.abs() + noise);
            rep.stat("neg_delta1_fd_increase", true).record(margin, s);
            // truncation error of the quotient is O(step²·δ₁'''), which is
            // far below 1e-6 here; only the rounding part is screened
            if noise < 1e-8 * deriv {
                rep.derivative_samples += 1;
                rep.max_derivative_gap = rep.max_derivative_gap.max(((fd - deriv) / deriv).abs());
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstMReport {
    pub step2_value: f64,
    #[serde(rename = "H_value")]
    pub big_h_value: f64,
    /// `m(β_j) < -λ_j/μ - σ/(β_jγ)`.
    pub intermediate_bound: bool,
    /// `β²αγ + μσ - 2βμγ > 0`.
    pub base_positive: bool,
}

impl EstMReport {
    pub fn holds(&self) -> bool {
        self.step2_value < 0.0
            && self.big_h_value < 0.0
            && self.intermediate_bound
            && self.base_positive
    }
}

pub fn verify_est_m_beta(p: &Params, beta_j: f64, lambda_j: f64) -> Result<EstMReport> {
    let sp = spectral_split(p, beta_j)?;
    let (mu, s, a, g) = (p.mu, p.sigma, p.alpha, p.gamma);
    let base = beta_j * beta_j * a * g + mu * s;
    let e1 = base - 2.0 * beta_j * mu * g;
    let step2_value = e1 * sp.m - (base - 2.0 * beta_j * a * s);
    let af = evaluate_appendix(p, beta_j, Some(lambda_j))?;
    Ok(EstMReport {
        step2_value,
        big_h_value: af.big_h_beta.unwrap_or(f64::NAN),
        intermediate_bound: sp.m < -lambda_j / mu - s / (beta_j * g),
        base_positive: e1 > 0.0,
    })
}

/// `δ₁(β,λ) < 0`, `∂δ₂/∂λ < 0`, `∂δ₂/∂β > 0` and `αb_β - γa_β < 0`.
pub fn verify_mono_lambda(p: &Params, beta_grid: &[f64], lambda_grid: &[f64]) -> Result<Report> {
    let mut rep = Report::default();
    for &b in beta_grid {
        let (cd, closed) = cross_difference(p, b)?;
        let scale = p.alpha * constant_state(p, b)?.b + p.gamma * constant_state(p, b)?.a;
        let s0 = Sample::new(p, b, None);
        rep.stat("cross_difference_negative", true)
            .record(-closed / scale, s0);
        rep.stat("cross_difference_direct_negative", true)
            .record(-cd / scale, s0);
        for &l in lambda_grid {
            let s = Sample::new(p, b, Some(l));
            let is = index_spectrum(p, b, l)?;
            rep.stat("index_delta1_negative", true)
                .record(-is.delta1 / is.d.max_abs(), s);
            let (dl, db) = delta2_partials(p, b, l)?;
            let dscale = is.d.max_abs();
            rep.stat("delta2_decreasing_in_lambda", true)
                .record(-dl * l / dscale, s);
            rep.stat("delta2_increasing_in_beta", true)
                .record(db * b / dscale, s);
            // central differences, judged beyond their rounding floor
            let hb = 1e-6 * b;
            let hl = 1e-6 * l;
            if b - hb > p.beta_min() * (1.0 + 1e-9) && l - hl >= 1.0 {
                let fb = (index_spectrum(p, b + hb, l)?.delta2
                    - index_spectrum(p, b - hb, l)?.delta2)
                    / (2.0 * hb);
                let fl = (index_spectrum(p, b, l + hl)?.delta2
                    - index_spectrum(p, b, l - hl)?.delta2)
                    / (2.0 * hl);
                let nb = 16.0 * f64::EPSILON * dscale / (2.0 * hb);
                let nl = 16.0 * f64::EPSILON * dscale / (2.0 * hl);
                rep.stat("delta2_fd_increasing_in_beta", true)
                    .record(if fb > -nb { 1.0 } else { fb / nb }, s);
                rep.stat("delta2_fd_decreasing_in_lambda", true)
                    .record(if fl < nl { 1.0 } else { -fl / nl }, s);
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZReport {
    pub j: usize,
    pub beta_j: f64,
    pub lambda_j: f64,
    pub nondeg_value: f64,
    pub z_value: f64,
    pub flagged: bool,
    /// `|σ + β_jγm - (-λ_j/b)|` relative to `λ_j/b`.
    pub identity_residual: f64,
    /// `λ_jα²γ³(σ - λ_j)`.
    pub leading_coefficient: f64,
}

pub fn verify_z_sign(p: &Params, j: usize, beta_j: f64, lambda_j: f64) -> Result<ZReport> {
    let sp = spectral_split(p, beta_j)?;
    let (a, b, m) = (sp.state.a, sp.state.b, sp.m);
    let (mu, s, al, g) = (p.mu, p.sigma, p.alpha, p.gamma);
    let ratio = (g * b) / (al * a);
    let nondeg_value = m * (mu * m + beta_j * al) * ratio * m + s + beta_j * g * m;
    let lhs = s + beta_j * g * m;
    let rhs = -lambda_j / b;
    let z_value = horner_compensated(&z_coeffs(p, lambda_j), beta_j).0;
    Ok(ZReport {
        j,
        beta_j,
        lambda_j,
        nondeg_value,
        z_value,
        flagged: nondeg_value.abs() < crate::bifurcation::NEAR_ZERO,
        identity_residual: (lhs - rhs).abs() / rhs.abs(),
        leading_coefficient: z_coeffs(p, lambda_j)[5],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub draws: usize,
    pub betas_per_draw: usize,
    pub lambdas_per_beta: usize,
    pub seed: u64,
    /// Every `symmetric_every`-th draw uses `σ = μ` exactly.
    pub symmetric_every: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            draws: 1000,
            betas_per_draw: 100,
            lambdas_per_beta: 3,
            seed: 20240601,
            symmetric_every: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub report: Report,
    pub est_m: InequalityStats,
    pub z_checks: u64,
    pub z_flagged: u64,
    pub nondeg_negative: u64,
    pub max_identity_residual: f64,
    /// Per symmetric draw with at least one negative non-degeneracy value:
    /// the smallest `β_j` beyond which every checked value is positive.
    pub nondeg_sign_thresholds: Vec<(Sample, f64)>,
    pub endpoint_max_rel_error: f64,
    pub theorem_violations: u64,
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen::<f64>() * (hi / lo).ln()).exp() * lo
}

/// Random admissible parameters, log-uniform in `μ`, `σ/μ`, `α/γ`, `γ`.
pub fn draw_params(rng: &mut ChaCha8Rng, symmetric: bool) -> Params {
    let mu = log_uniform(rng, 1e-2, 1e2);
    let sigma = if symmetric {
        mu
    } else {
        mu * log_uniform(rng, 1.0, 1e2)
    };
    let gamma = log_uniform(rng, 1e-2, 1e2);
    let mut ratio = log_uniform(rng, 1.0, 1e2);
    if ratio <= 1.0 {
        ratio = 1.0 + 1e-12;
    }
    Params {
        mu,
        sigma,
        alpha: gamma * ratio,
        gamma,
        dim: 2,
    }
}

struct DrawResult {
    report: Report,
    est_m: InequalityStats,
    z: Vec<ZReport>,
    max_identity: f64,
    endpoint: f64,
    sample: Sample,
}

fn sweep_draw(cfg: &SweepConfig, i: usize, disc: &[f64]) -> Result<DrawResult> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(cfg.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let symmetric = cfg.symmetric_every > 0 && i % cfg.symmetric_every == 0;
    let p = draw_params(&mut rng, symmetric);
    let b0 = p.beta_min();
    let betas: Vec<f64> = (0..cfg.betas_per_draw)
        .map(|_| log_uniform(&mut rng, b0 * (1.0 + 1e-6), b0 * 1e6))
        .collect();
    let lambdas: Vec<f64> = (0..cfg.lambdas_per_beta)
        .map(|_| log_uniform(&mut rng, 1.0, 1e4))
        .collect();
    let mut report = verify_mono_beta(&p, &betas)?;
    report.merge(&verify_mono_lambda(&p, &betas, &lambdas)?);
    // H < 0 for any positive λ below √(μσ)
    let sms = p.sqrt_mu_sigma();
    for &b in &betas {
        let l = sms * rng.gen_range(1e-6..1.0);
        let af = evaluate_appendix(&p, b, Some(l))?;
        report.max_dual_mismatch = report.max_dual_mismatch.max(af.dual_mismatch);
        report.stat("H_negative", true).record(
            -af.big_h_beta.unwrap() / af.big_h_scale.unwrap(),
            Sample::new(&p, b, Some(l)),
        );
    }
    let l_end = sms * 0.5;
    let ev = endpoint_values(&p, l_end);
    let endpoint = [
        rel(ev.h, ev.h_closed, ev.h_closed.abs()),
        rel(ev.g, ev.g_closed, ev.g_closed.abs()),
        rel(ev.big_h, ev.big_h_closed, ev.big_h_closed.abs()),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    // bifurcation points from the disc spectrum
    let mut est_m = InequalityStats::new(true);
    let mut z = Vec::new();
    let mut max_identity: f64 = 0.0;
    for (j, &lj) in disc.iter().enumerate().map(|(k, l)| (k + 1, l)) {
        if lj >= sms {
            break;
        }
        let bj = solve_bifurcation_beta(&p, lj)?;
        let em = verify_est_m_beta(&p, bj, lj)?;
        let scale = (bj * bj * p.alpha * p.gamma + p.mu * p.sigma)
            * (1.0 + spectral_split(&p, bj)?.m.abs());
        let margin = if em.holds() {
            -em.step2_value / scale
        } else {
            -1.0_f64.max(em.step2_value / scale)
        };
        est_m.record(margin, Sample::new(&p, bj, Some(lj)));
        if symmetric {
            let zr = verify_z_sign(&p, j, bj, lj)?;
            max_identity = max_identity.max(zr.identity_residual);
            z.push(zr);
        }
    }
    Ok(DrawResult {
        report,
        est_m,
        z,
        max_identity,
        endpoint,
        sample: Sample::new(&p, p.beta_min(), None),
    })
}

/// Full randomized sweep, reproducible for a given seed regardless of the
/// execution backend.
pub fn appendix_sweep(cfg: &SweepConfig, exec: Exec) -> Result<SweepReport> {
    // disc eigenvalues up to the largest √(μσ) the draws can produce
    let mut disc = Vec::new();
    for j in 1.. {
        let l = bessel_oracle(2, j)?;
        disc.push(l);
        if l > 1.1e3 {
            break;
        }
    }
    let results = par::map_range(exec, cfg.draws, |i| sweep_draw(cfg, i, &disc));
    let mut report = Report::default();
    let mut est_m = InequalityStats::new(true);
    let (mut z_checks, mut z_flagged, mut nondeg_negative) = (0, 0, 0);
    let mut max_identity: f64 = 0.0;
    let mut endpoint: f64 = 0.0;
    let mut thresholds = Vec::new();
    for r in results {
        let r = r?;
        report.merge(&r.report);
        est_m.merge(&r.est_m);
        max_identity = max_identity.max(r.max_identity);
        endpoint = endpoint.max(r.endpoint);
        z_checks += r.z.len() as u64;
        z_flagged += r.z.iter().filter(|z| z.flagged).count() as u64;
        let neg: Vec<&ZReport> = r.z.iter().filter(|z| z.nondeg_value < 0.0).collect();
        nondeg_negative += neg.len() as u64;
        if let Some(last_neg) = neg.iter().map(|z| z.beta_j).reduce(f64::max) {
            let stable_from =
                r.z.iter()
                    .filter(|z| z.beta_j > last_neg)
                    .map(|z| z.beta_j)
                    .reduce(f64::min)
                    .unwrap_or(f64::INFINITY);
            thresholds.push((r.sample, stable_from));
        }
    }
    let theorem_violations = report.theorem_violations() + est_m.violations;
    Ok(SweepReport {
        config: cfg.clone(),
        report,
        est_m,
        z_checks,
        z_flagged,
        nondeg_negative,
        max_identity_residual: max_identity,
        nondeg_sign_thresholds: thresholds,
        endpoint_max_rel_error: endpoint,
        theorem_violations,
    })
}
