//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs as a plain binary (`harness = false`) so the lines
//! are always printed.

use std::process::ExitCode;
use std::time::Instant;

use lvbif::appendix::{appendix_sweep, draw_params, SweepConfig};
use lvbif::bifurcation::{
    admissible_mode_count, bifurcation_points, kernel_dimension, neg_delta1, scan_sign_changes,
};
use lvbif::continuation::{continue_branch, Branch, ContinuationConfig};
use lvbif::elliptic::{RadialProblem, StateFields};
use lvbif::grid::ball_volume;
use lvbif::limit::{limit_profiles, matching_profile, segregation_distance};
use lvbif::linearization::{index_spectrum, interaction_matrix, spectral_split};
use lvbif::par::Exec;
use lvbif::spectrum::{bessel_oracle, eigenpairs};
use lvbif::{constant_state, Params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 512;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

#[allow(clippy::needless_range_loop)]
fn spectral_oracle() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for dim in [2u32, 3] {
        let mut errs = Vec::new();
        for n in [256usize, 512, 1024] {
            let pr = RadialProblem::new(Params::new(1.0, 1.0, 2.0, 1.0, dim).map_err(err)?, n)
                .map_err(err)?;
            let e = eigenpairs(&pr.op, &pr.grid, 3).map_err(err)?;
            let row: Vec<f64> = (1..=3)
                .map(|j| {
                    let o = bessel_oracle(dim, j).unwrap();
                    (e[j].lambda - o).abs() / o
                })
                .collect();
            errs.push(row);
        }
        for j in 0..3 {
            let o1 = (errs[0][j] / errs[1][j]).log2();
            let o2 = (errs[1][j] / errs[2][j]).log2();
            let fine = errs[2][j];
            let good = (1.8..=2.2).contains(&o1) && (1.8..=2.2).contains(&o2) && fine < 1e-5;
            ok &= good;
            notes.push(format!(
                "N={dim} j={} orders {o1:.3}/{o2:.3} rel@1024 {fine:.2e}",
                j + 1
            ));
        }
    }
    check(ok, notes.join("; "))
}

fn closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst_diag, mut worst_index, mut worst_neg) = (0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..1000 {
        let p = draw_params(&mut rng, i % 4 == 0);
        let b0 = p.beta_min();
        let beta = b0 * (rng.gen::<f64>() * 1e6_f64.ln()).exp().max(1.0 + 1e-6);
        let lambda = (rng.gen::<f64>() * 1e4_f64.ln()).exp();
        let sp = spectral_split(&p, beta).map_err(err)?;
        let (rq, rp) = sp.diagonalizer_residuals(&p);
        let is = index_spectrum(&p, beta, lambda).map_err(err)?;
        let one = index_spectrum(&p, beta, 1.0).map_err(err)?;
        let a = interaction_matrix(&p, beta).map_err(err)?;
        let neg = one.d.sub(&a.scale(-1.0)).max_abs() / a.max_abs();
        let swap = (one.delta2 + sp.delta1).abs() / sp.delta2.abs().max(sp.delta1.abs());
        worst_diag = worst_diag.max(rq).max(rp);
        worst_index = worst_index
            .max(is.diagonalizer_residual())
            .max(one.diagonalizer_residual());
        worst_neg = worst_neg.max(neg).max(swap);
    }
    let p = Params::new(1.0, 1.0, 2.0, 1.0, 2).map_err(err)?;
    let c = constant_state(&p, 2.0).map_err(err)?;
    let sp = spectral_split(&p, 2.0).map_err(err)?;
    let worked = [
        (c.a - 3.0 / 7.0).abs(),
        (c.b - 1.0 / 7.0).abs(),
        (sp.delta1 + 3.0 / 7.0).abs(),
        (sp.delta2 - 1.0).abs(),
        (sp.m + 2.0).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    check(
        worst_diag < 1e-12 && worst_index < 1e-12 && worst_neg < 1e-12 && worked < 1e-14,
        format!(
            "A/M diagonalizers {worst_diag:.2e}, D/R {worst_index:.2e}, D(beta,1)=-A and delta2(beta,1)=-delta1 {worst_neg:.2e}, worked case {worked:.1e}"
        ),
    )
}

fn appendix() -> Outcome {
    let cfg = SweepConfig::default();
    let rep = appendix_sweep(&cfg, Exec::default()).map_err(err)?;
    let points = rep.report.total_checked();
    let mut bad: Vec<String> = rep
        .report
        .inequalities
        .iter()
        .filter(|(_, s)| s.theorem_grade && s.violations > 0)
        .map(|(k, s)| format!("{k}: {}", s.violations))
        .collect();
    if rep.est_m.violations > 0 {
        bad.push(format!("est_m: {}", rep.est_m.violations));
    }
    let mono_points = rep.report.inequalities["g_positive"].checked;
    check(
        rep.theorem_violations == 0 && mono_points >= 100_000,
        format!(
            "{} theorem violations over {points} checks ({mono_points} beta samples); dual mismatch {:.1e}; {}",
            rep.theorem_violations,
            rep.report.max_dual_mismatch,
            if bad.is_empty() { "clean".to_string() } else { bad.join(", ") }
        ),
    )
}

fn bifurcation() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (mu, expect) in [(16.0, 1usize), (64.0, 2)] {
        let p = Params::new(mu, mu, 2.0, 1.0, 2).map_err(err)?;
        let pr = RadialProblem::new(p, N).map_err(err)?;
        let e = eigenpairs(&pr.op, &pr.grid, 4).map_err(err)?;
        let k = admissible_mode_count(&p, &e).map_err(err)?;
        let pts = bifurcation_points(&p, &e, Exec::default()).map_err(err)?;
        ok &= k == expect && pts.len() == expect;
        ok &= pts.windows(2).all(|w| w[0].beta_j < w[1].beta_j);
        for bp in &pts {
            let resid = (neg_delta1(&p, bp.beta_j).map_err(err)? - bp.lambda_j).abs() / bp.lambda_j;
            let roots = scan_sign_changes(&p, bp.lambda_j, 10_000, 1e6).map_err(err)?;
            let d = &bp.diagnostics;
            let ker = kernel_dimension(&pr, bp.beta_j, e[1].lambda).map_err(err)?;
            let good = resid < 1e-12
                && roots == 1
                && (d.index_left, d.index_right) == (-1, 1)
                && ker.dimension == 1
                && ker.gap_orders >= 4.0;
            ok &= good;
            notes.push(format!(
                "mu={mu} j={} beta={:.6} resid {resid:.1e} index ({},{}) kernel dim {} gap {:.1} orders",
                bp.j,
                bp.beta_j,
                d.index_left,
                d.index_right,
                if ker.dimension == usize::MAX { "ambiguous".into() } else { ker.dimension.to_string() },
                ker.gap_orders
            ));
        }
    }
    check(ok, notes.join("; "))
}

fn instability() -> Outcome {
    let sets = [
        Params::new(16.0, 16.0, 2.0, 1.0, 2),
        Params::new(64.0, 64.0, 2.0, 1.0, 2),
        Params::new(1.5, 4.0, 3.0, 1.0, 2),
    ];
    let mut worst = 0.0_f64;
    let mut ok = true;
    for p in sets {
        let p = p.map_err(err)?;
        let pr = RadialProblem::new(p, N).map_err(err)?;
        for f in [1.5, 10.0, 100.0] {
            let beta = f * p.beta_min();
            let s = pr.constant_state_fields(beta).map_err(err)?;
            let rep = pr.linearized_spectrum(&s, 3).map_err(err)?;
            let d1 = spectral_split(&p, beta).map_err(err)?.delta1;
            let rel = (rep.leading[0].re - d1).abs() / d1.abs();
            worst = worst.max(rel);
            ok &= rel < 1e-4
                && rep.leading[0].im.abs() <= 1e-8 * d1.abs()
                && rep.leading[0].re < 0.0
                && rep.unstable;
        }
    }
    check(
        ok,
        format!("9 constant states, worst |leading - delta1|/|delta1| = {worst:.2e}, all unstable"),
    )
}

struct BranchRun {
    p: Params,
    pr: RadialProblem,
    branches: Vec<Branch>,
    beta1: f64,
}

fn run_branches() -> Result<BranchRun, String> {
    let p = Params::new(16.0, 16.0, 2.0, 1.0, 2).map_err(err)?;
    let pr = RadialProblem::new(p, N).map_err(err)?;
    let e = eigenpairs(&pr.op, &pr.grid, 3).map_err(err)?;
    let pts = bifurcation_points(&p, &e, Exec::default()).map_err(err)?;
    let origin = pts.first().ok_or("no bifurcation point")?;
    let cfg = ContinuationConfig::default();
    let branches = [1i8, -1]
        .iter()
        .map(|&d| continue_branch(&pr, origin, d, &cfg).map_err(err))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BranchRun {
        p,
        pr,
        beta1: origin.beta_j,
        branches,
    })
}

fn branch_invariants(run: &BranchRun) -> Outcome {
    let bound = run.p.mu * ball_volume(2);
    let mut notes = Vec::new();
    let mut ok = true;
    for b in &run.branches {
        let within: Vec<_> = b.points.iter().take(500).collect();
        let reached = within.iter().map(|q| q.state.beta).fold(0.0, f64::max);
        let bad = within
            .iter()
            .filter(|q| {
                !(q.residual < 1e-10
                    && q.state.strictly_between_zero_and_one()
                    && q.nodal.nodal.in_class(1)
                    && q.norms.h1sq_u1 < bound
                    && q.norms.h1sq_u2 < bound)
            })
            .count();
        let worst_res = within.iter().map(|q| q.residual).fold(0.0, f64::max);
        ok &= bad == 0 && reached >= 10.0 * run.beta1;
        notes.push(format!(
            "direction {:+}: {} points, {bad} invalid, max residual {worst_res:.1e}, reached {:.1} beta_1 ({})",
            b.direction,
            within.len(),
            reached / run.beta1,
            b.termination.label()
        ));
    }
    check(ok, notes.join("; "))
}

fn limit_configuration(run: &BranchRun) -> Outcome {
    let pr = &run.pr;
    let e = eigenpairs(&pr.op, &pr.grid, 1).map_err(err)?;
    let profiles = limit_profiles(pr, &e[1], 1e-11).map_err(err)?;
    let mut ok = profiles.iter().all(|q| q.roots.len() == 1);
    let mut notes = vec![format!(
        "profile roots {:.4} / {:.4}",
        profiles[0].roots[0], profiles[1].roots[0]
    )];
    for b in &run.branches {
        let last = b
            .points
            .iter()
            .max_by(|x, y| x.state.beta.total_cmp(&y.state.beta))
            .unwrap();
        let near2 = b
            .points
            .iter()
            .min_by(|x, y| {
                (x.state.beta - 2.0 * run.beta1)
                    .abs()
                    .total_cmp(&(y.state.beta - 2.0 * run.beta1).abs())
            })
            .unwrap();
        let prof = matching_profile(&last.nodal.w, &profiles, &pr.grid).unwrap();
        let d_last = segregation_distance(last, prof, &pr.grid).map_err(err)?;
        let d_two = segregation_distance(near2, prof, &pr.grid).map_err(err)?;
        let ov = last.overlap / near2.overlap;
        ok &= d_two >= 3.0 * d_last && ov < 0.1;
        notes.push(format!(
            "direction {:+}: distance {d_two:.2e} at {:.2} beta_1 -> {d_last:.2e} at {:.1} beta_1 (x{:.1}), overlap ratio {ov:.2e}",
            b.direction,
            near2.state.beta / run.beta1,
            last.state.beta / run.beta1,
            d_two / d_last
        ));
    }
    check(ok, notes.join("; "))
}

/// Residual coded independently: stencil rows from the geometry, reaction
/// in factored form.
fn oracle_residual(pr: &RadialProblem, s: &StateFields) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let g = &pr.grid;
    let p = &pr.params;
    let n = g.len();
    let k = g.dim as i32 - 1;
    let (mut r1, mut r2, mut scale) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let left = if i > 0 {
            g.faces[i].powi(k) / (g.r[i] - g.r[i - 1])
        } else {
            0.0
        };
        let right = if i + 1 < n {
            g.faces[i + 1].powi(k) / (g.r[i + 1] - g.r[i])
        } else {
            0.0
        };
        let v = (g.faces[i + 1].powi(g.dim as i32) - g.faces[i].powi(g.dim as i32)) / g.dim as f64;
        let lap = |u: &[f64]| {
            let ul = if i > 0 { u[i - 1] } else { u[i] };
            let ur = if i + 1 < n { u[i + 1] } else { u[i] };
            ((left + right) * u[i] - left * ul - right * ur) / v
        };
        let (a, b) = (s.u1[i], s.u2[i]);
        r1[i] = lap(&s.u1) - a * (p.mu - p.mu * a - s.beta * p.alpha * b);
        r2[i] = lap(&s.u2) - b * (p.sigma - p.sigma * b - s.beta * p.gamma * a);
        scale[i] = 2.0 * (left + right) / v * a.abs().max(b.abs())
            + p.mu.max(p.sigma) * (1.0 + a.abs().max(b.abs()))
            + s.beta * p.alpha * (a * b).abs();
    }
    (r1, r2, scale)
}

fn limit_oracle(mu: f64, gamma: f64, alpha: f64, s: f64) -> f64 {
    let cap = if s >= 0.0 { gamma } else { alpha };
    mu * s - mu * s * s.abs() / cap
}

fn double_implementation() -> Outcome {
    let p = Params::new(16.0, 16.0, 2.0, 1.0, 2).map_err(err)?;
    let pr = RadialProblem::new(p, N).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut res_gap, mut lim_gap, mut jac_gap) = (0.0_f64, 0.0_f64, 0.0_f64);
    let lr = p.limit_reaction();
    for _ in 0..20 {
        let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let field = |k: usize, r: f64| {
            0.5 + 0.2 * c[k] * (3.0 * r).cos() + 0.1 * c[k + 1] * r * r + 0.05 * c[k + 2]
        };
        let s = StateFields {
            u1: pr.grid.r.iter().map(|&r| field(0, r)).collect(),
            u2: pr.grid.r.iter().map(|&r| field(3, r)).collect(),
            beta: rng.gen_range(20.0..400.0),
        };
        let (a1, a2) = pr.residual(&s).map_err(err)?;
        let (o1, o2, sc) = oracle_residual(&pr, &s);
        for i in 0..pr.n() {
            res_gap = res_gap
                .max((a1[i] - o1[i]).abs() / sc[i])
                .max((a2[i] - o2[i]).abs() / sc[i]);
        }
        for _ in 0..50 {
            let x = rng.gen_range(-3.0..2.0);
            let y = lr.eval(x);
            let z = limit_oracle(p.mu, p.gamma, p.alpha, x);
            lim_gap = lim_gap.max((y - z).abs() / (p.mu * x.abs() * (1.0 + x.abs())).max(1e-300));
        }
        // directional derivative against central differences
        let dir: Vec<f64> = (0..2 * pr.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = s.interleave();
        let h = 1e-7;
        let xp: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + h * d).collect();
        let xm: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a - h * d).collect();
        let fp = pr
            .residual_interleaved(&StateFields::from_interleaved(&xp, s.beta))
            .map_err(err)?;
        let fm = pr
            .residual_interleaved(&StateFields::from_interleaved(&xm, s.beta))
            .map_err(err)?;
        let jd = pr.jacobian(&s).map_err(err)?.matvec(&dir);
        let nrm = jd.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let gap = fp
            .iter()
            .zip(&fm)
            .zip(&jd)
            .map(|((a, b), j)| ((a - b) / (2.0 * h) - j).abs())
            .fold(0.0, f64::max);
        jac_gap = jac_gap.max(gap / nrm);
    }
    check(
        res_gap < 1e-12 && lim_gap < 1e-12 && jac_gap < 1e-6,
        format!("residual {res_gap:.1e}, limit reaction {lim_gap:.1e}, jacobian vs differences {jac_gap:.1e}"),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut failed = 0;
    let mut report = |k: usize, name: &str, o: Outcome| match &o {
        Ok(m) => println!("criterion {k} PASS  {name}: {m}"),
        Err(m) => {
            failed += 1;
            println!("criterion {k} FAIL  {name}: {m}")
        }
    };
    report(1, "spectral oracle", spectral_oracle());
    report(2, "closed-form consistency", closed_forms());
    report(3, "appendix sweep", appendix());
    report(4, "bifurcation points", bifurcation());
    report(5, "instability", instability());
    match run_branches() {
        Ok(run) => {
            report(6, "branch invariants", branch_invariants(&run));
            report(7, "limit configuration", limit_configuration(&run));
        }
        Err(e) => {
            report(6, "branch invariants", Err(e.clone()));
            report(7, "limit configuration", Err(e));
        }
    }
    report(8, "double implementation", double_implementation());
    println!("acceptance finished in {:.1?}", start.elapsed());
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
