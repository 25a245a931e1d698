//! Figure-data emission: per-figure CSV series plus a plain-text gnuplot
//! script, with the automated amplitude/parity checks attached.

use crate::csvout::{table_csv, write_atomic};
use abcore::nhd::nhd_from_ansatz;
use abcore::parity::{parity_split, ParityKind};
use abcore::qid::{anomaly_first_order, qid_solution, QidConfig};
use abcore::solutions::{kink_ansatz, one_soliton, two_soliton};
use abcore::{ComplexField, Grid};
use anyhow::{anyhow, bail, Result};
use std::collections::BTreeMap;
use std::path::Path;

/// Identifiers of the emitted figure groups.
pub const FIGURE_NAMES: [&str; 5] = ["f1sol", "f1", "f2", "f3", "f4"];

pub struct FigureOutput {
    pub csv_path: String,
    pub plot_path: String,
    /// named boolean checks feeding the run manifest
    pub checks: BTreeMap<String, bool>,
}

fn x_column(grid: &Grid) -> Vec<f64> {
    grid.x_nodes()
}

fn slice_abs(f: &ComplexField, j: usize) -> Vec<f64> {
    f.t_slice(j).iter().map(|v| v.norm()).collect()
}

fn slice_re(f: &ComplexField, j: usize) -> Vec<f64> {
    f.t_slice(j).iter().map(|v| v.re).collect()
}

fn t_index(grid: &Grid, t: f64) -> usize {
    let j = ((t - grid.t(0)) / grid.ht()).round() as i64;
    j.clamp(0, grid.nt() as i64 - 1) as usize
}

fn nhd_quartet(grid: Grid, a_d: &ComplexField) -> Result<(Vec<&'static str>, Vec<Vec<f64>>)> {
    let rep = nhd_from_ansatz(a_d).map_err(|e| anyhow!("{e}"))?;
    let jc = grid.t_center();
    let headers = vec!["x", "a_d", "abs_v2", "abs_u2", "beta_d"];
    let cols = vec![
        x_column(&grid),
        slice_re(a_d, jc),
        slice_abs(&rep.v2, jc),
        slice_abs(&rep.u2, jc),
        slice_re(&rep.beta_d, jc),
    ];
    Ok((headers, cols))
}

fn plot_script(csv_name: &str, headers: &[&str]) -> String {
    let mut s = String::new();
    s.push_str("# gnuplot script; run with: gnuplot -p <this file>\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set xlabel 'x'\n");
    let plots: Vec<String> = (2..=headers.len())
        .map(|c| format!("'{csv_name}' using 1:{c} with lines"))
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

/// Emit one figure group into `dir`.
pub fn emit_figure(grid: Grid, which: &str, dir: &Path) -> Result<FigureOutput> {
    let mut checks = BTreeMap::new();
    let (headers, cols) = match which {
        "f1sol" => {
            let s = one_soliton(grid, 1.5, 0.0).map_err(|e| anyhow!("{e}"))?;
            nhd_quartet(grid, &s.a)?
        }
        "f1" => {
            let s = two_soliton(grid, 1.1, 1.0, 0.0, 0.0).map_err(|e| anyhow!("{e}"))?;
            nhd_quartet(grid, &s.a)?
        }
        "f2" => {
            let a_d = kink_ansatz(grid, 1.5, 0.0).map_err(|e| anyhow!("{e}"))?;
            nhd_quartet(grid, &a_d)?
        }
        "f3" => {
            // single-soliton quasi-deformation at eps = 0.5: undeformed
            // amplitudes and the scaled first-order anomaly at three times,
            // plus the deformed pair at t = 1
            let eps = 0.5;
            let base = one_soliton(grid, 1.5, 0.0).map_err(|e| anyhow!("{e}"))?;
            let x1 = anomaly_first_order(&base.b).map_err(|e| anyhow!("{e}"))?;
            let run = qid_solution(
                &base,
                &QidConfig {
                    epsilon: eps,
                    ..Default::default()
                },
            )
            .map_err(|e| anyhow!("{e}"))?;
            let headers = vec![
                "x", "a0_t05", "b0_t05", "eps_x1_t05", "a0_t10", "b0_t10", "eps_x1_t10",
                "a0_t15", "b0_t15", "eps_x1_t15", "abs_a1_t10", "abs_a_t10", "b_t10",
            ];
            let mut cols = vec![x_column(&grid)];
            for t in [0.5, 1.0, 1.5] {
                let j = t_index(&grid, t);
                cols.push(slice_re(&base.a, j));
                cols.push(slice_re(&base.b, j));
                cols.push(x1.t_slice(j).iter().map(|v| eps * v.norm()).collect());
            }
            let j1 = t_index(&grid, 1.0);
            cols.push(slice_abs(&run.a1_field, j1));
            cols.push(slice_abs(&run.a, j1));
            cols.push(slice_re(&run.b, j1));
            // the anomaly stays subdominant to the undeformed amplitudes
            checks.insert(
                "anomaly_subdominant_eps_0.5".to_string(),
                eps * x1.max_abs() < base.a.max_abs(),
            );
            (headers, cols)
        }
        "f4" => {
            // two-soliton quasi-deformation at eps = 0.1
            let eps = 0.1;
            let base = two_soliton(grid, 1.1, 1.0, 0.0, 0.0).map_err(|e| anyhow!("{e}"))?;
            let x1 = anomaly_first_order(&base.b).map_err(|e| anyhow!("{e}"))?;
            let run = qid_solution(
                &base,
                &QidConfig {
                    epsilon: eps,
                    ..Default::default()
                },
            )
            .map_err(|e| anyhow!("{e}"))?;
            let jc = grid.t_center();
            let j1 = t_index(&grid, 1.0);
            let headers = vec![
                "x", "abs_a0_t0", "b0_t0", "eps_x1_t0", "abs_a1_t10", "abs_a_t10", "abs_b_t10",
            ];
            let cols = vec![
                x_column(&grid),
                slice_abs(&base.a, jc),
                slice_re(&base.b, jc),
                x1.t_slice(jc).iter().map(|v| eps * v.norm()).collect(),
                slice_abs(&run.a1_field, j1),
                slice_abs(&run.a, j1),
                slice_abs(&run.b, j1),
            ];
            let (_, _, parity) = parity_split(&run.a1_field, ParityKind::SpaceTime);
            checks.insert("a1_even_parity_ratio_le_0.1".to_string(), parity.ratio <= 0.1);
            (headers, cols)
        }
        other => bail!("unknown figure {other:?} (expected one of {FIGURE_NAMES:?})"),
    };

    let csv_name = format!("{which}.csv");
    let plot_name = format!("{which}.plot");
    let csv_path = dir.join(&csv_name);
    let plot_path = dir.join(&plot_name);
    write_atomic(&csv_path, &table_csv(&headers, &cols))?;
    write_atomic(&plot_path, &plot_script(&csv_name, &headers))?;
    Ok(FigureOutput {
        csv_path: csv_path.display().to_string(),
        plot_path: plot_path.display().to_string(),
        checks,
    })
}
