//! JSON reports and the reproducible run manifest.
//!
//! Reports are deterministic (ordered maps, no timestamps); wall-clock data
//! is quarantined to the manifest.

use abcore::charges::{AsymptoticStatus, BalanceReport};
use abcore::parity::ParityReport;
use abcore::qid::{ChargeVerdict, QidReport};
use abcore::Grid;
use serde::Serialize;
use std::collections::BTreeMap;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct GridInfo {
    pub x_half_width: f64,
    pub t_half_width: f64,
    pub nx: usize,
    pub nt: usize,
}

impl From<&Grid> for GridInfo {
    fn from(g: &Grid) -> Self {
        GridInfo {
            x_half_width: g.x_half_width(),
            t_half_width: g.t_half_width(),
            nx: g.nx(),
            nt: g.nt(),
        }
    }
}

/// Execution record: command line, parameters, grid, wall time and the
/// verdict of every asserted check. Re-running the recorded command
/// reproduces every CSV/JSON output byte for byte (fixed summation order and
/// formatting); only this manifest carries timing.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema: u32,
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub grid: GridInfo,
    pub tool_version: String,
    pub wall_time_ms: u128,
    pub verdicts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, grid: &Grid) -> RunManifest {
        RunManifest {
            schema: SCHEMA_VERSION,
            command: command.to_string(),
            parameters: BTreeMap::new(),
            grid: grid.into(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_ms: 0,
            verdicts: BTreeMap::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn verdict(&mut self, check: &str, pass: bool) {
        self.verdicts
            .insert(check.to_string(), if pass { "pass" } else { "fail" }.to_string());
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.values().all(|v| v == "pass")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaResidual {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub sigma3: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub total: f64,
}

/// `verify` output: per-lambda flatness residuals plus the anomaly norm.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub solution: String,
    pub residuals: Vec<LambdaResidual>,
    pub anomaly_norm: f64,
    pub residual_tolerance: f64,
    pub anomaly_tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NhdJsonReport {
    pub schema: u32,
    pub ansatz: String,
    pub classification: String,
    pub singular_nodes: usize,
    pub u2_route_deviation: f64,
    pub constraint_residuals: BTreeMap<String, f64>,
}

fn parity_json(p: &ParityReport) -> BTreeMap<String, serde_json::Value> {
    let mut m = BTreeMap::new();
    m.insert("even_norm".into(), serde_json::json!(p.even_norm));
    m.insert("odd_norm".into(), serde_json::json!(p.odd_norm));
    m.insert("ratio".into(), serde_json::json!(p.ratio));
    m.insert("dominant".into(), serde_json::json!(format!("{:?}", p.dominant)));
    m
}

fn balance_json(b: &BalanceReport) -> serde_json::Value {
    serde_json::json!({
        "n": b.n,
        "mismatch": b.mismatch,
        "relative_mismatch": b.relative_mismatch,
        "mismatch_with_boundary": b.mismatch_with_boundary,
        "relative_mismatch_with_boundary": b.relative_mismatch_with_boundary,
        "max_rate": b.max_rate,
        "max_flux": b.max_flux,
        "charge_scale": b.charge_scale,
        "explicit_flux_dev": b.explicit_flux_dev,
    })
}

fn asym_json(a: &AsymptoticStatus) -> serde_json::Value {
    match a {
        AsymptoticStatus::TriviallyConserved => serde_json::json!("trivially_conserved"),
        AsymptoticStatus::Ratio(r) => serde_json::json!(r),
    }
}

fn verdict_str(v: ChargeVerdict) -> &'static str {
    match v {
        ChargeVerdict::LocallyConserved => "LocallyConserved",
        ChargeVerdict::AsymptoticallyConserved => "AsymptoticallyConserved",
        ChargeVerdict::NotProtected => "NotProtected",
    }
}

/// Serialize a [`QidReport`] (charge verdicts, balance data, parity reports).
pub fn qid_json(base: &str, epsilon: f64, warning: bool, rep: &QidReport) -> serde_json::Value {
    let mut verdicts = BTreeMap::new();
    for (n, v) in &rep.verdicts {
        verdicts.insert(format!("Q^-{n}"), verdict_str(*v));
    }
    serde_json::json!({
        "schema": SCHEMA_VERSION,
        "base": base,
        "epsilon": epsilon,
        "perturbative_warning": warning,
        "initial_condition": "A1(.,0) = 0; bidirectional march; V anchored on the non-amplifying edge",
        "anomaly_jump_convention": "X1(theta = 0) = 0 by odd symmetry",
        "charge_verdicts": verdicts,
        "balance": rep.balance.iter().map(balance_json).collect::<Vec<_>>(),
        "asymptotic_first_order": rep.asymptotic_first_order.iter()
            .map(|(n, a)| (format!("Q^-{n}"), asym_json(a))).collect::<BTreeMap<_, _>>(),
        "asymptotic_actual": rep.asymptotic_actual.iter()
            .map(|(n, a)| (format!("Q^-{n}"), asym_json(a))).collect::<BTreeMap<_, _>>(),
        "parity": {
            "re_a": parity_json(&rep.parity_re_a),
            "im_a": parity_json(&rep.parity_im_a),
            "b": parity_json(&rep.parity_b),
            "anomaly1": parity_json(&rep.parity_anomaly1),
        },
    })
}

pub fn to_pretty(value: &impl Serialize) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("serializable");
    out.push('\n');
    out
}
