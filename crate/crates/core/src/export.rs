//! Plot-ready CSV tables and sorted-key JSON documents.
//!
//! Every CSV starts with one `#` comment line carrying the schema version
//! and the parameters as compact JSON, followed by the header row.

use serde::Serialize;
use serde_json::Value;

use crate::bifurcation::BifurcationPoint;
use crate::continuation::Branch;
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::limit::LimitProfile;
use crate::params::Params;
use crate::spectrum::EigenPair;

pub const SCHEMA_VERSION: &str = "lvbif/1";

/// Shortest round-trip representation; deterministic across runs.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Pretty JSON with keys sorted at every level.
pub fn to_sorted_json<T: Serialize>(v: &T) -> Result<String> {
    let value: Value = serde_json::to_value(v).map_err(|e| Error::Internal(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&value).map_err(|e| Error::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Wraps a payload as `{schema, params, ...payload}`.
pub fn json_document<T: Serialize>(params: &Params, payload: &T) -> Result<String> {
    let mut obj = match serde_json::to_value(payload).map_err(|e| Error::Internal(e.to_string()))? {
        Value::Object(m) => m,
        other => {
            let mut m = serde_json::Map::new();
            m.insert("data".into(), other);
            m
        }
    };
    obj.insert("schema".into(), Value::String(SCHEMA_VERSION.into()));
    obj.insert(
        "params".into(),
        serde_json::to_value(params).map_err(|e| Error::Internal(e.to_string()))?,
    );
    to_sorted_json(&Value::Object(obj))
}

pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, params: &Params) -> Result<String> {
        let pj = serde_json::to_string(
            &serde_json::to_value(params).map_err(|e| Error::Internal(e.to_string()))?,
        )
        .map_err(|e| Error::Internal(e.to_string()))?;
        let mut out = format!("# schema={SCHEMA_VERSION} params={pj}\n").into_bytes();
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut out);
            let io = |e: csv::Error| Error::Internal(e.to_string());
            w.write_record(&self.header).map_err(io)?;
            for r in &self.rows {
                w.write_record(r).map_err(io)?;
            }
            w.flush().map_err(|e| Error::Internal(e.to_string()))?;
        }
        String::from_utf8(out).map_err(|e| Error::Internal(e.to_string()))
    }
}

/// `j, lambda, lambda_extrap, oracle, rel_diff, rel_diff_extrap`; the
/// extrapolated column combines two grid levels.
pub fn eigen_table(eigs: &[EigenPair], extrapolated: &[f64], oracle: &[Option<f64>]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "j",
        "lambda",
        "lambda_extrap",
        "oracle",
        "rel_diff",
        "rel_diff_extrap",
    ]);
    let diff = |x: f64, o: f64| {
        if o > 0.0 {
            (x - o).abs() / o
        } else {
            (x - o).abs()
        }
    };
    for ((e, x), o) in eigs.iter().zip(extrapolated).zip(oracle) {
        let (os, d1, d2) = match o {
            Some(o) => (num(*o), num(diff(e.lambda, *o)), num(diff(*x, *o))),
            None => (String::new(), String::new(), String::new()),
        };
        t.push(vec![e.j.to_string(), num(e.lambda), num(*x), os, d1, d2]);
    }
    t
}

/// `r, f0, f1, ...`.
pub fn eigenfunction_table(grid: &RadialGrid, eigs: &[EigenPair]) -> CsvTable {
    let mut header = vec!["r".to_string()];
    header.extend(eigs.iter().map(|e| format!("f{}", e.j)));
    let mut t = CsvTable {
        header,
        rows: Vec::new(),
    };
    for (i, r) in grid.r.iter().enumerate() {
        let mut row = vec![num(*r)];
        row.extend(eigs.iter().map(|e| num(e.f[i])));
        t.push(row);
    }
    t
}

pub fn points_table(points: &[BifurcationPoint]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "j",
        "lambda_j",
        "beta_j",
        "m_j",
        "step2_value",
        "pairing_value",
        "nondeg_value",
        "index_left",
        "index_right",
    ]);
    for p in points {
        let d = &p.diagnostics;
        t.push(vec![
            p.j.to_string(),
            num(p.lambda_j),
            num(p.beta_j),
            num(p.m_j),
            num(d.step2_value),
            num(d.pairing_value),
            num(d.nondeg_value),
            d.index_left.to_string(),
            d.index_right.to_string(),
        ]);
    }
    t
}

pub fn branch_summary(branch: &Branch) -> CsvTable {
    let mut t = CsvTable::new(&[
        "s", "beta", "sup_u1", "sup_u2", "nodal", "overlap", "h1sq_u1", "h1sq_u2", "residual",
    ]);
    for p in &branch.points {
        let nodal = match p.nodal.nodal.reliable_count() {
            Some(c) => c.to_string(),
            None => "unreliable".to_string(),
        };
        t.push(vec![
            num(p.s),
            num(p.state.beta),
            num(p.norms.sup_u1),
            num(p.norms.sup_u2),
            nodal,
            num(p.overlap),
            num(p.norms.h1sq_u1),
            num(p.norms.h1sq_u2),
            num(p.residual),
        ]);
    }
    t
}

/// Long format `point, beta, r, u1, u2` for every stored point.
pub fn branch_states(grid: &RadialGrid, branch: &Branch) -> CsvTable {
    let mut t = CsvTable::new(&["point", "beta", "r", "u1", "u2"]);
    for (k, p) in branch.points.iter().enumerate() {
        for (i, r) in grid.r.iter().enumerate() {
            t.push(vec![
                k.to_string(),
                num(p.state.beta),
                num(*r),
                num(p.state.u1[i]),
                num(p.state.u2[i]),
            ]);
        }
    }
    t
}

pub fn state_table(grid: &RadialGrid, u1: &[f64], u2: &[f64]) -> CsvTable {
    let mut t = CsvTable::new(&["r", "u1", "u2"]);
    for (i, r) in grid.r.iter().enumerate() {
        t.push(vec![num(*r), num(u1[i]), num(u2[i])]);
    }
    t
}

pub fn profile_table(grid: &RadialGrid, prof: &LimitProfile) -> CsvTable {
    let mut t = CsvTable::new(&["r", "w"]);
    for (i, r) in grid.r.iter().enumerate() {
        t.push(vec![num(*r), num(prof.w[i])]);
    }
    t
}

/// One stored point read back from [`branch_states`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredState {
    pub beta: f64,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

/// Parses the long-format state table.
pub fn read_branch_states(text: &str) -> Result<Vec<StoredState>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let bad = |m: String| Error::Domain(format!("branch state table: {m}"));
    let mut out: Vec<(usize, StoredState)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 5 {
            return Err(bad(format!("expected 5 columns, got {}", rec.len())));
        }
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| bad(format!("{e} in {:?}", &rec[i])))
        };
        let k: usize = rec[0].parse().map_err(|e| bad(format!("{e}")))?;
        let (beta, u1, u2) = (f(1)?, f(3)?, f(4)?);
        match out.last_mut() {
            Some((kk, s)) if *kk == k => {
                s.u1.push(u1);
                s.u2.push(u2);
            }
            _ => out.push((
                k,
                StoredState {
                    beta,
                    u1: vec![u1],
                    u2: vec![u2],
                },
            )),
        }
    }
    Ok(out.into_iter().map(|(_, s)| s).collect())
}
