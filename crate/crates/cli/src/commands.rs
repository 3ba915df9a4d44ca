use std::path::Path;

use lvbif::appendix::{appendix_sweep, SweepConfig};
use lvbif::bifurcation::{admissible_mode_count, bifurcation_points, BifurcationPoint};
use lvbif::continuation::{overlap_integral, trace_both, Branch, ContinuationConfig};
use lvbif::elliptic::{RadialProblem, StateFields};
use lvbif::export::{self, json_document, num, CsvTable};
use lvbif::limit::{aligned_distance, limit_profiles, matching_profile};
use lvbif::nodal::NodalDiagnostic;
use lvbif::par::Exec;
use lvbif::spectrum::{bessel_oracle, eigenpairs, EigenPair};
use lvbif::Error;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::Fail;

type Out = Result<Value, Fail>;

fn write(dir: &Path, name: &str, text: &str) -> Result<String, Fail> {
    let path = dir.join(name);
    std::fs::write(&path, text)
        .map_err(|e| Fail::validation(format!("cannot write {}: {e}", path.display())))?;
    Ok(name.to_string())
}

fn read(dir: &Path, name: &str) -> Result<String, Fail> {
    let path = dir.join(name);
    std::fs::read_to_string(&path).map_err(|e| {
        Fail::validation(format!(
            "missing input {} ({e}); run the producing command first",
            path.display()
        ))
    })
}

fn problem(cfg: &RunConfig) -> Result<RadialProblem, Fail> {
    Ok(RadialProblem::new(cfg.params, cfg.grid)?)
}

fn direction_name(d: i8) -> &'static str {
    if d > 0 {
        "plus"
    } else {
        "minus"
    }
}

/// Enough modes that `λ_{k+1} ≥ √(μσ)`, starting from the configured count.
fn admissible_spectrum(cfg: &RadialProblem, start: usize) -> Result<(Vec<EigenPair>, usize), Fail> {
    let mut k = start;
    loop {
        let e = eigenpairs(&cfg.op, &cfg.grid, k)?;
        match admissible_mode_count(&cfg.params, &e) {
            Ok(m) => return Ok((e, m)),
            Err(Error::SpectrumTooShort(_)) if k < cfg.n() / 2 => k *= 2,
            Err(e) => return Err(e.into()),
        }
    }
}

pub fn eigen(cfg: &RunConfig) -> Out {
    let pr = problem(cfg)?;
    let fine = RadialProblem::new(cfg.params, 2 * cfg.grid)?;
    let e = eigenpairs(&pr.op, &pr.grid, cfg.modes)?;
    let ef = eigenpairs(&fine.op, &fine.grid, cfg.modes)?;
    // h_n / h_2n, not exactly 2 on the staggered grid
    let rho = (2.0 * cfg.grid as f64 - 0.5) / (cfg.grid as f64 - 0.5);
    let extrap: Vec<f64> = e
        .iter()
        .zip(&ef)
        .map(|(a, b)| (rho * rho * b.lambda - a.lambda) / (rho * rho - 1.0))
        .collect();
    let oracle: Vec<Option<f64>> = e
        .iter()
        .map(|x| bessel_oracle(cfg.params.dim, x.j).ok())
        .collect();
    let table = export::eigen_table(&e, &extrap, &oracle);
    let worst = e
        .iter()
        .zip(&extrap)
        .zip(&oracle)
        .filter_map(|((x, r), o)| {
            o.filter(|o| *o > 0.0)
                .map(|o| ((x.lambda - o).abs() / o, (r - o).abs() / o))
        })
        .fold((0.0_f64, 0.0_f64), |m, (a, b)| (m.0.max(a), m.1.max(b)));
    let files = vec![
        write(&cfg.out, "eigen.csv", &table.render(&cfg.params)?)?,
        write(
            &cfg.out,
            "eigenfunctions.csv",
            &export::eigenfunction_table(&pr.grid, &e).render(&cfg.params)?,
        )?,
    ];
    Ok(json!({
        "command": "eigen",
        "files": files,
        "modes": cfg.modes,
        "max_rel_diff": worst.0,
        "max_rel_diff_extrapolated": worst.1,
    }))
}

fn compute_points(
    cfg: &RunConfig,
    pr: &RadialProblem,
) -> Result<(Vec<EigenPair>, Vec<BifurcationPoint>), Fail> {
    let (e, _) = admissible_spectrum(pr, cfg.modes.max(cfg.mode + 1))?;
    let pts = bifurcation_points(&cfg.params, &e, Exec::default())?;
    Ok((e, pts))
}

pub fn points(cfg: &RunConfig) -> Out {
    let pr = problem(cfg)?;
    let (_, pts) = compute_points(cfg, &pr)?;
    let note = if pts.is_empty() {
        Some("sqrt(mu*sigma) <= lambda_1: no bifurcation from the constant branch")
    } else {
        None
    };
    if let Some(n) = note {
        eprintln!("note: {n}");
    }
    let rows: Vec<Value> = pts
        .iter()
        .map(|p| json!({"j": p.j, "beta_j": p.beta_j, "lambda_j": p.lambda_j, "m_j": p.m_j, "diagnostics": p.diagnostics}))
        .collect();
    let files = vec![
        write(
            &cfg.out,
            "points.csv",
            &export::points_table(&pts).render(&cfg.params)?,
        )?,
        write(
            &cfg.out,
            "points.json",
            &json_document(&cfg.params, &json!({"points": rows, "note": note}))?,
        )?,
    ];
    Ok(json!({"command": "points", "files": files, "k": pts.len(), "note": note, "points": rows}))
}

pub fn branch(cfg: &RunConfig) -> Out {
    let pr = problem(cfg)?;
    let (_, pts) = compute_points(cfg, &pr)?;
    let origin = pts.iter().find(|p| p.j == cfg.mode).ok_or_else(|| {
        Fail::validation(format!(
            "mode {} is not a bifurcation mode ({} admissible)",
            cfg.mode,
            pts.len()
        ))
    })?;
    let ccfg = ContinuationConfig {
        beta_max: Some(cfg.beta_max.unwrap_or(cfg.beta_max_factor * origin.beta_j)),
        max_points: cfg.max_points,
        amplitude: cfg.amplitude,
        ds_max: cfg.ds_max,
        ..ContinuationConfig::default()
    };
    let branches = trace_both(&pr, origin, &ccfg, Exec::default())
        .into_iter()
        .collect::<Result<Vec<Branch>, _>>()?;
    let j = cfg.mode;
    let mut files = Vec::new();
    let mut dirs = Vec::new();
    for b in &branches {
        let stem = format!("branch_{j}_{}", direction_name(b.direction));
        let summary = write(
            &cfg.out,
            &format!("{stem}.csv"),
            &export::branch_summary(b).render(&cfg.params)?,
        )?;
        let states = write(
            &cfg.out,
            &format!("{stem}_states.csv"),
            &export::branch_states(&pr.grid, b).render(&cfg.params)?,
        )?;
        dirs.push(json!({
            "direction": b.direction,
            "points": b.points.len(),
            "rejected_steps": b.rejected_steps,
            "max_beta": b.max_beta(),
            "termination": b.termination,
            "termination_label": b.termination.label(),
            "summary": summary,
            "states": states,
        }));
        files.push(summary);
        files.push(states);
    }
    let manifest = json!({
        "j": j,
        "beta_j": origin.beta_j,
        "lambda_j": origin.lambda_j,
        "m_j": origin.m_j,
        "grid": cfg.grid,
        "beta_max": ccfg.beta_max,
        "directions": dirs,
    });
    files.push(write(
        &cfg.out,
        &format!("branch_{j}.json"),
        &json_document(&cfg.params, &manifest)?,
    )?);
    Ok(json!({"command": "branch", "files": files, "manifest": manifest}))
}

pub fn limit(cfg: &RunConfig) -> Out {
    let pr = problem(cfg)?;
    let j = cfg.mode;
    let e = eigenpairs(&pr.op, &pr.grid, j)?;
    let profiles = limit_profiles(&pr, &e[j], 1e-11)?;
    let mut prof_table = CsvTable::new(&["r", "w_pos", "w_neg"]);
    for (i, r) in pr.grid.r.iter().enumerate() {
        prof_table.push(vec![num(*r), num(profiles[0].w[i]), num(profiles[1].w[i])]);
    }
    let mut files = vec![write(
        &cfg.out,
        &format!("limit_{j}_profiles.csv"),
        &prof_table.render(&cfg.params)?,
    )?];
    let mut dirs = Vec::new();
    for d in [1i8, -1] {
        let name = format!("branch_{j}_{}_states.csv", direction_name(d));
        let states = export::read_branch_states(&read(&cfg.out, &name)?)?;
        if states.is_empty() {
            return Err(Fail::validation(format!("{name} holds no states")));
        }
        let mut series = Vec::with_capacity(states.len());
        for s in &states {
            pr.grid.check_len(s.u1.len(), "stored state")?;
            let nd = NodalDiagnostic::from_fields(&cfg.params, s.beta, &s.u1, &s.u2, &pr.grid);
            let st = StateFields {
                u1: s.u1.clone(),
                u2: s.u2.clone(),
                beta: s.beta,
            };
            series.push((s.beta, nd.w, overlap_integral(&pr, &st)));
        }
        series.sort_by(|a, b| a.0.total_cmp(&b.0));
        let last_w = &series.last().unwrap().1;
        let prof = matching_profile(last_w, &profiles, &pr.grid).unwrap();
        let which = if prof.w[0] > 0.0 {
            "positive"
        } else {
            "negative"
        };
        let mut t = CsvTable::new(&["beta", "distance", "overlap"]);
        let mut dist = Vec::with_capacity(series.len());
        for (beta, w, ov) in &series {
            let dd = aligned_distance(w, &prof.w, &pr.grid)?;
            dist.push(dd);
            t.push(vec![num(*beta), num(dd), num(*ov)]);
        }
        let tail = dist.len().saturating_sub(dist.len() / 4 + 1);
        let tail_decreasing = dist[tail..].windows(2).all(|w| w[1] <= w[0]);
        let overlap_ratio = series.last().unwrap().2 / series[0].2;
        files.push(write(
            &cfg.out,
            &format!("limit_{j}_{}.csv", direction_name(d)),
            &t.render(&cfg.params)?,
        )?);
        dirs.push(json!({
            "direction": d,
            "profile": which,
            "distance_first": dist[0],
            "distance_last": dist[dist.len() - 1],
            "tail_decreasing": tail_decreasing,
            "overlap_ratio": overlap_ratio,
        }));
    }
    let summary = json!({
        "j": j,
        "profiles": profiles.iter().map(|p| json!({"roots": p.roots, "residual": p.residual, "center": p.w[0]})).collect::<Vec<_>>(),
        "directions": dirs,
    });
    files.push(write(
        &cfg.out,
        &format!("limit_{j}.json"),
        &json_document(&cfg.params, &summary)?,
    )?);
    Ok(json!({"command": "limit", "files": files, "summary": summary}))
}

pub fn verify(cfg: &RunConfig) -> Out {
    let scfg = SweepConfig {
        draws: cfg.draws,
        betas_per_draw: cfg.betas_per_draw,
        seed: cfg.seed,
        ..SweepConfig::default()
    };
    let rep = appendix_sweep(&scfg, Exec::default())?;
    let file = write(&cfg.out, "verify.json", &json_document(&cfg.params, &rep)?)?;
    let worst: serde_json::Map<String, Value> = rep
        .report
        .inequalities
        .iter()
        .map(|(k, s)| (k.clone(), json!({"worst_margin": s.worst_margin, "violations": s.violations, "theorem_grade": s.theorem_grade})))
        .collect();
    if rep.theorem_violations > 0 {
        return Err(Fail::theorem(format!(
            "{} theorem-grade violations; see {}",
            rep.theorem_violations,
            cfg.out.join(file).display()
        )));
    }
    Ok(json!({
        "command": "verify",
        "files": [file],
        "checked": rep.report.total_checked(),
        "theorem_violations": rep.theorem_violations,
        "inequalities": worst,
    }))
}

#[derive(Deserialize)]
struct ManifestDir {
    direction: i8,
    summary: String,
}

#[derive(Deserialize)]
struct Manifest {
    j: usize,
    directions: Vec<ManifestDir>,
}

pub fn report(cfg: &RunConfig) -> Out {
    let mut names: Vec<String> = std::fs::read_dir(&cfg.out)
        .map_err(|e| Fail::validation(format!("cannot list {}: {e}", cfg.out.display())))?
        .filter_map(|d| d.ok()?.file_name().into_string().ok())
        .filter(|n| n.starts_with("branch_") && n.ends_with(".json"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Fail::validation(format!(
            "no branch manifests in {}; run `lvbif branch` first",
            cfg.out.display()
        )));
    }
    let mut t = CsvTable::new(&["j", "direction", "beta", "sup_u1"]);
    let mut count = 0;
    for name in &names {
        let m: Manifest = serde_json::from_str(&read(&cfg.out, name)?)
            .map_err(|e| Fail::validation(format!("malformed manifest {name}: {e}")))?;
        for d in &m.directions {
            let text = read(&cfg.out, &d.summary)?;
            let mut rdr = csv::ReaderBuilder::new()
                .comment(Some(b'#'))
                .from_reader(text.as_bytes());
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Fail::validation(format!("{}: {e}", d.summary)))?;
                t.push(vec![
                    m.j.to_string(),
                    d.direction.to_string(),
                    rec[1].to_string(),
                    rec[2].to_string(),
                ]);
                count += 1;
            }
        }
    }
    let file = write(&cfg.out, "diagram.csv", &t.render(&cfg.params)?)?;
    Ok(json!({"command": "report", "files": [file], "manifests": names, "rows": count}))
}
