//! Parsing of grid, solution and ansatz specifications from the command line.

use abcore::solutions::{
    kink_ansatz, kk_kak_ansatz, one_soliton, sg_map, two_soliton, AbSolution, KkBranch,
};
use abcore::{ComplexField, Cpx, Grid};
use anyhow::{anyhow, bail, Context, Result};
use std::collections::BTreeMap;

/// Default acceptance grid: X=10, T=5, 2001x1001 (hx = ht = 0.01).
pub const DEFAULT_GRID: &str = "10,5,2001,1001";

pub fn parse_grid(s: &str) -> Result<Grid> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        bail!("grid must be X,T,nx,nt (got {s:?})");
    }
    let x: f64 = parts[0].trim().parse().context("grid X")?;
    let t: f64 = parts[1].trim().parse().context("grid T")?;
    let nx: usize = parts[2].trim().parse().context("grid nx")?;
    let nt: usize = parts[3].trim().parse().context("grid nt")?;
    Grid::new(x, t, nx, nt).map_err(|e| anyhow!("{e}"))
}

pub fn parse_params(s: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    if s.trim().is_empty() {
        return Ok(out);
    }
    for item in s.split(',') {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("parameter {item:?} is not of the form key=value"))?;
        let val: f64 = v
            .trim()
            .parse()
            .with_context(|| format!("parameter {k} value {v:?}"))?;
        out.insert(k.trim().to_string(), val);
    }
    Ok(out)
}

fn get(params: &BTreeMap<String, f64>, keys: &[&str], default: Option<f64>) -> Result<f64> {
    for k in keys {
        if let Some(v) = params.get(*k) {
            return Ok(*v);
        }
    }
    default.ok_or_else(|| anyhow!("missing parameter {:?}", keys[0]))
}

/// Spectral-parameter list `re,im[;re,im...]`.
pub fn parse_lambdas(s: &str) -> Result<Vec<Cpx>> {
    let mut out = Vec::new();
    for item in s.split(';') {
        let (re, im) = item
            .split_once(',')
            .ok_or_else(|| anyhow!("lambda {item:?} is not of the form re,im"))?;
        out.push(Cpx::new(
            re.trim().parse().context("lambda re")?,
            im.trim().parse().context("lambda im")?,
        ));
    }
    if out.is_empty() {
        bail!("no spectral values given");
    }
    Ok(out)
}

pub fn parse_charge_indices(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|p| p.trim().parse::<u32>().with_context(|| format!("charge index {p:?}")))
        .collect()
}

/// Build a catalog solution from a name and parameter map.
pub fn build_solution(grid: Grid, name: &str, params: &BTreeMap<String, f64>) -> Result<AbSolution> {
    match name {
        "one_soliton" => {
            let g = get(params, &["g", "g_hat"], Some(1.5))?;
            let d = get(params, &["d", "delta"], Some(0.0))?;
            one_soliton(grid, g, d).map_err(|e| anyhow!("{e}"))
        }
        "two_soliton" => {
            let a1 = get(params, &["a1"], Some(1.1))?;
            let a2 = get(params, &["a2"], Some(1.0))?;
            let d1 = get(params, &["d1", "d"], Some(0.0))?;
            let d2 = get(params, &["d2"], Some(0.0))?;
            two_soliton(grid, a1, a2, d1, d2).map_err(|e| anyhow!("{e}"))
        }
        "sg_kink" => {
            let v = get(params, &["d", "delta"], Some(0.0))?;
            let psi = ComplexField::from_fn(grid, |x, t| {
                Cpx::new(4.0 * (x + t + v).exp().atan(), 0.0)
            });
            sg_map(&psi, None).map_err(|e| anyhow!("{e}"))
        }
        other => bail!("unknown solution {other:?} (expected one_soliton, two_soliton or sg_kink)"),
    }
}

/// Build a deformation ansatz field from a name and parameter map.
pub fn build_ansatz(grid: Grid, name: &str, params: &BTreeMap<String, f64>) -> Result<ComplexField> {
    match name {
        "one_soliton" | "two_soliton" => Ok(build_solution(grid, name, params)?.a),
        "kink" => {
            let a = get(params, &["a"], Some(1.5))?;
            let d = get(params, &["d", "delta"], Some(0.0))?;
            kink_ansatz(grid, a, d).map_err(|e| anyhow!("{e}"))
        }
        "kk" | "kak" => {
            let a = get(params, &["a"], Some(2.0))?;
            let branch = if name == "kk" { KkBranch::Kk } else { KkBranch::Kak };
            kk_kak_ansatz(grid, a, branch).map_err(|e| anyhow!("{e}"))
        }
        other => bail!("unknown ansatz {other:?}"),
    }
}

/// `name:key=value,...` form used by `verify --solution` and
/// `charges --solution`.
pub fn parse_solution_spec(grid: Grid, spec: &str) -> Result<AbSolution> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n, r),
        None => (spec, ""),
    };
    let params = parse_params(rest)?;
    build_solution(grid, name.trim(), &params)
}
