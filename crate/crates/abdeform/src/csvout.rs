//! Deterministic CSV writers.
//!
//! Values are printed with 17 significant digits so reruns are byte
//! identical and round-trip through f64 exactly. Files are written to a
//! temporary sibling and renamed into place.

use abcore::charges::ChargeSeries;
use abcore::nhd::NhdReport;
use abcore::{ComplexField, Grid};
use anyhow::{Context, Result};
use std::fmt::Write as _;
use std::path::Path;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Atomically write `contents` to `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    if !dir.as_os_str().is_empty() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp_path = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp_path, contents).with_context(|| format!("writing {}", tmp_path.display()))?;
    std::fs::rename(&tmp_path, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Single-field dump: header `x,t,re,im`, row-major over t then x.
pub fn field_csv(f: &ComplexField) -> String {
    let g = f.grid();
    let mut out = String::with_capacity(g.nx() * g.nt() * 64);
    out.push_str("x,t,re,im\n");
    for j in 0..g.nt() {
        let t = g.t(j);
        for i in 0..g.nx() {
            let v = f.at(i, j);
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(g.x(i)),
                fmt_f64(t),
                fmt_f64(v.re),
                fmt_f64(v.im)
            );
        }
    }
    out
}

/// Charge series dump: `t,n,re_q,im_q,re_flux,im_flux`.
pub fn charges_csv(grid: &Grid, series: &[ChargeSeries]) -> String {
    let mut out = String::new();
    out.push_str("t,n,re_q,im_q,re_flux,im_flux\n");
    for j in 0..grid.nt() {
        let t = grid.t(j);
        for sr in series {
            let q = sr.q_of_t[j];
            let fl = sr.flux_of_t[j];
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(t),
                sr.n,
                fmt_f64(q.re),
                fmt_f64(q.im),
                fmt_f64(fl.re),
                fmt_f64(fl.im)
            );
        }
    }
    out
}

/// Deformation-function dump:
/// `x,t,re_v2,im_v2,re_u2,im_u2,re_beta,im_beta`.
pub fn nhd_csv(rep: &NhdReport) -> String {
    let g = rep.v2.grid();
    let mut out = String::with_capacity(g.nx() * g.nt() * 96);
    out.push_str("x,t,re_v2,im_v2,re_u2,im_u2,re_beta,im_beta\n");
    for j in 0..g.nt() {
        let t = g.t(j);
        for i in 0..g.nx() {
            let v = rep.v2.at(i, j);
            let u = rep.u2.at(i, j);
            let b = rep.beta_d.at(i, j);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                fmt_f64(g.x(i)),
                fmt_f64(t),
                fmt_f64(v.re),
                fmt_f64(v.im),
                fmt_f64(u.re),
                fmt_f64(u.im),
                fmt_f64(b.re),
                fmt_f64(b.im)
            );
        }
    }
    out
}

/// Deformed-pair dump for qid runs:
/// `x,t,re_a,im_a,re_b,im_b,re_a1,im_a1`.
pub fn qid_fields_csv(a: &ComplexField, b: &ComplexField, a1: &ComplexField) -> String {
    let g = a.grid();
    let mut out = String::with_capacity(g.nx() * g.nt() * 96);
    out.push_str("x,t,re_a,im_a,re_b,im_b,re_a1,im_a1\n");
    for j in 0..g.nt() {
        let t = g.t(j);
        for i in 0..g.nx() {
            let av = a.at(i, j);
            let bv = b.at(i, j);
            let cv = a1.at(i, j);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                fmt_f64(g.x(i)),
                fmt_f64(t),
                fmt_f64(av.re),
                fmt_f64(av.im),
                fmt_f64(bv.re),
                fmt_f64(bv.im),
                fmt_f64(cv.re),
                fmt_f64(cv.im)
            );
        }
    }
    out
}

/// Generic column table used by the figure emitter.
pub fn table_csv(headers: &[&str], columns: &[Vec<f64>]) -> String {
    let rows = columns.first().map(|c| c.len()).unwrap_or(0);
    debug_assert!(columns.iter().all(|c| c.len() == rows));
    let mut out = String::new();
    out.push_str(&headers.join(","));
    out.push('\n');
    for r in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| fmt_f64(c[r])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
