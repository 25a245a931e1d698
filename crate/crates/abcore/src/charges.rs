//! Quasi-conserved charges `Q^{-n} = int_x beta_L^{-n}` and their anomaly
//! fluxes.
//!
//! On the Abelianized side the flatness condition linearizes into
//! `d/dt beta_L^{-n} = d/dx beta_M^{-n} + X f0^{-n}`, so with decaying
//! boundaries `dQ^{-n}/dt = int_x X f0^{-n}`. For exact solutions `X = 0`
//! and every charge is constant; under quasi-deformation only the anomaly
//! flux drives the charge, and space-time parity decides whether the drift
//! cancels asymptotically.

use crate::field::ComplexField;
use crate::laxcurv::anomaly;
use crate::loopalg::{beta_l_kernel, f_kernel, NodeJet};
use crate::prelude::*;
use crate::quadrature::{integrate, simpson_line, Domain};
use crate::solutions::AbSolution;
use crate::stencil::{derivative_line, line_jet};

/// Supported charge indices (the gauge series is tabulated through grade -4).
pub const SUPPORTED_N: [u32; 4] = [1, 2, 3, 4];

/// Per-grade time series of a charge and its anomaly flux.
#[derive(Debug, Clone)]
pub struct ChargeSeries {
    pub n: u32,
    /// `Q^{-n}(t_j) = int_x beta_L^{-n}`
    pub q_of_t: Vec<Cpx>,
    /// `int_x X f0^{-n}` at each t-node
    pub flux_of_t: Vec<Cpx>,
}

fn check_n(n: u32) -> Result<usize> {
    if SUPPORTED_N.contains(&n) {
        Ok(n as usize)
    } else {
        Err(AbError::Parameter(format!(
            "charge index {n} not supported (closed forms exist for n = 1..4)"
        )))
    }
}

/// Build the x-jet of `A+-` along one t-slice.
pub(crate) fn slice_jets(
    a_line: &[Cpx],
    hx: f64,
    kappa: f64,
) -> (Vec<NodeJet>, Vec<Cpx>, Vec<Cpx>) {
    let nx = a_line.len();
    let inv_k = Cpx::new(1.0 / kappa, 0.0);
    let mut ap = Vec::with_capacity(nx);
    let mut am = Vec::with_capacity(nx);
    for &a in a_line {
        ap.push(inv_k * a + a.conj());
        am.push(inv_k * a - a.conj());
    }
    let apj = line_jet(&ap, hx, 3);
    let amj = line_jet(&am, hx, 3);
    let mut jets = Vec::with_capacity(nx);
    for i in 0..nx {
        jets.push(NodeJet {
            ap: ap[i],
            am: am[i],
            ap_x: apj[0][i],
            am_x: amj[0][i],
            ap_xx: apj[1][i],
            am_xx: amj[1][i],
            ap_xxx: apj[2][i],
            am_xxx: amj[2][i],
        });
    }
    (jets, ap, am)
}

/// Charge and flux series for the requested indices.
///
/// The t-slices are processed in order and each x-integral uses composite
/// Simpson with a fixed summation order, so reruns are bit-identical.
pub fn charges(s: &AbSolution, ns: &[u32], kappa: f64) -> Result<Vec<ChargeSeries>> {
    for &n in ns {
        check_n(n)?;
    }
    let grid = *s.a.grid();
    let (nx, nt) = (grid.nx(), grid.nt());
    let x_field = anomaly(s)?;
    let mut out: Vec<ChargeSeries> = ns
        .iter()
        .map(|&n| ChargeSeries {
            n,
            q_of_t: Vec::with_capacity(nt),
            flux_of_t: Vec::with_capacity(nt),
        })
        .collect();
    let mut beta_line = vec![Cpx::new(0.0, 0.0); nx];
    let mut flux_line = vec![Cpx::new(0.0, 0.0); nx];
    for jt in 0..nt {
        let (jets, _, _) = slice_jets(s.a.t_slice(jt), grid.hx(), kappa);
        let x_line = x_field.t_slice(jt);
        for series in out.iter_mut() {
            let idx = series.n as usize;
            for i in 0..nx {
                let beta = beta_l_kernel(&jets[i], kappa);
                beta_line[i] = beta[idx + 1];
                let f = f_kernel(&jets[i], kappa);
                flux_line[i] = x_line[i] * f[idx - 1][0];
            }
            series.q_of_t.push(simpson_line(&beta_line, grid.hx()));
            series.flux_of_t.push(simpson_line(&flux_line, grid.hx()));
        }
    }
    Ok(out)
}

/// Drift of a charge over the given t-index range, relative to its scale.
pub fn relative_drift(series: &ChargeSeries, j_lo: usize, j_hi: usize) -> f64 {
    let q0 = series.q_of_t[(j_lo + j_hi) / 2];
    let mut worst = 0.0f64;
    for j in j_lo..=j_hi {
        worst = worst.max((series.q_of_t[j] - q0).norm());
    }
    worst / (1.0 + q0.norm())
}

/// Outcome of the balance check `dQ^{-n}/dt = int_x X f0^{-n}`.
#[derive(Debug, Clone)]
pub struct BalanceReport {
    pub n: u32,
    /// max interior |dQ/dt - flux|
    pub mismatch: f64,
    pub max_rate: f64,
    pub max_flux: f64,
    /// charge magnitude at t = 0, used as the normalization scale
    pub charge_scale: f64,
    /// mismatch / max(max_rate, max_flux, (1 + charge_scale) / T)
    pub relative_mismatch: f64,
    /// mismatch after restoring the beta_M boundary flux that the continuity
    /// equation carries when the fields do not decay at the spatial edges
    /// (the deformed potential keeps a nonlocal tail there); exact for n = 1
    /// where beta_M = iB/4, negligible corrections for n >= 2
    pub mismatch_with_boundary: f64,
    pub relative_mismatch_with_boundary: f64,
    /// deviation of the f0-route flux from the explicit density forms
    /// (only populated for n = 3, 4)
    pub explicit_flux_dev: Option<f64>,
}

/// Compare the finite-difference rate of each charge against its anomaly
/// flux, pointwise in t over the interior.
pub fn charge_balance(s: &AbSolution, ns: &[u32], kappa: f64) -> Result<Vec<BalanceReport>> {
    let grid = *s.a.grid();
    let nt = grid.nt();
    let band = 2usize;
    let series = charges(s, ns, kappa)?;
    let x_field = anomaly(s)?;
    let mut reports = Vec::with_capacity(series.len());
    let mut rate = vec![Cpx::new(0.0, 0.0); nt];
    for sr in &series {
        derivative_line(&sr.q_of_t, grid.ht(), &mut rate);
        let mut mismatch = 0.0f64;
        let mut mismatch_b = 0.0f64;
        let mut max_rate = 0.0f64;
        let mut max_flux = 0.0f64;
        for j in band..nt - band {
            let boundary = if sr.n == 1 {
                // [beta_M^{-1}]_{-X}^{X} = (i/4)(B(X) - B(-X))
                Cpx::i() * 0.25 * (s.b.at(grid.nx() - 1, j) - s.b.at(0, j))
            } else {
                Cpx::new(0.0, 0.0)
            };
            mismatch = mismatch.max((rate[j] - sr.flux_of_t[j]).norm());
            mismatch_b = mismatch_b.max((rate[j] - sr.flux_of_t[j] - boundary).norm());
            max_rate = max_rate.max(rate[j].norm());
            max_flux = max_flux.max(sr.flux_of_t[j].norm());
        }
        let charge_scale = sr.q_of_t[grid.t_center()].norm();
        let time_scale = (1.0 + charge_scale) / grid.t_half_width();
        let scale = max_rate.max(max_flux).max(time_scale);
        let relative_mismatch = mismatch / scale;
        let relative_mismatch_with_boundary = mismatch_b / scale;

        let explicit_flux_dev = match sr.n {
            3 => Some(explicit_flux_dev(s, &x_field, &sr.flux_of_t, 3)?),
            4 => Some(explicit_flux_dev(s, &x_field, &sr.flux_of_t, 4)?),
            _ => None,
        };
        reports.push(BalanceReport {
            n: sr.n,
            mismatch,
            max_rate,
            max_flux,
            charge_scale,
            relative_mismatch,
            mismatch_with_boundary: mismatch_b,
            relative_mismatch_with_boundary,
            explicit_flux_dev,
        });
    }
    Ok(reports)
}

/// Explicit right-hand sides: `-(1/8) int X |A|^2` for n = 3 and
/// `-(i/16) int X (A_x A* - A*_x A)` for n = 4.
fn explicit_flux_dev(
    s: &AbSolution,
    x_field: &ComplexField,
    flux: &[Cpx],
    n: u32,
) -> Result<f64> {
    let grid = *s.a.grid();
    let nx = grid.nx();
    let mut line = vec![Cpx::new(0.0, 0.0); nx];
    let mut worst = 0.0f64;
    for jt in 0..grid.nt() {
        let a_line = s.a.t_slice(jt);
        let x_line = x_field.t_slice(jt);
        match n {
            3 => {
                for i in 0..nx {
                    line[i] = x_line[i] * (-0.125) * a_line[i].norm_sqr();
                }
            }
            4 => {
                let jets = line_jet(a_line, grid.hx(), 1);
                for i in 0..nx {
                    let cross = jets[0][i] * a_line[i].conj() - jets[0][i].conj() * a_line[i];
                    line[i] = x_line[i] * Cpx::new(0.0, -1.0 / 16.0) * cross;
                }
            }
            _ => unreachable!(),
        }
        let v = simpson_line(&line, grid.hx());
        worst = worst.max((v - flux[jt]).norm());
    }
    Ok(worst)
}

/// Verdict of the rectangle-integral parity test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AsymptoticStatus {
    /// |int int X f0^{-n}| / int int |X f0^{-n}|
    Ratio(f64),
    /// the flux density vanishes identically
    TriviallyConserved,
}

/// Integrate the anomaly flux density over the full symmetric rectangle.
///
/// A parity-protected density is odd under `(x, t) -> (-x, -t)` and the
/// signed integral cancels; the ratio against the absolute integral exposes
/// broken parity.
pub fn asymptotic_conservation(s: &AbSolution, n: u32, kappa: f64) -> Result<AsymptoticStatus> {
    let x_field = anomaly(s)?;
    asymptotic_conservation_with(&x_field, s, n, kappa)
}

/// Same test with an externally supplied anomaly field (the first-order QID
/// check passes `eps * X^1` here while keeping the undeformed `f0`).
pub fn asymptotic_conservation_with(
    x_field: &ComplexField,
    s_for_f0: &AbSolution,
    n: u32,
    kappa: f64,
) -> Result<AsymptoticStatus> {
    let idx = check_n(n)?;
    let grid = *s_for_f0.a.grid();
    let nx = grid.nx();
    let mut dens = ComplexField::zeros(grid);
    let mut abs_dens = ComplexField::zeros(grid);
    for jt in 0..grid.nt() {
        let (jets, _, _) = slice_jets(s_for_f0.a.t_slice(jt), grid.hx(), kappa);
        let x_line = x_field.t_slice(jt);
        for i in 0..nx {
            let f = f_kernel(&jets[i], kappa);
            let v = x_line[i] * f[idx - 1][0];
            dens.set(i, jt, v);
            abs_dens.set(i, jt, Cpx::new(v.norm(), 0.0));
        }
    }
    let signed = integrate(&dens, Domain::FullRect).scalar();
    let total = integrate(&abs_dens, Domain::FullRect).scalar().re;
    if total < 1e-14 {
        return Ok(AsymptoticStatus::TriviallyConserved);
    }
    Ok(AsymptoticStatus::Ratio(signed.norm() / total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solutions::one_soliton;

    #[test]
    fn unsupported_index_is_rejected() {
        let g = Grid::new(10.0, 2.0, 101, 21).unwrap();
        let s = one_soliton(g, 1.5, 0.0).unwrap();
        assert!(matches!(
            charges(&s, &[5], 1.0),
            Err(AbError::Parameter(_))
        ));
        assert!(charges(&s, &[1, 2, 3, 4], 1.0).is_ok());
    }

    #[test]
    fn q1_matches_density_integral() {
        // Q^{-1} = -(i/8) int A0^2 dx = -(i/8) * 8 g = -1.5 i for g = 1.5
        let g = Grid::new(10.0, 2.0, 2001, 21).unwrap();
        let s = one_soliton(g, 1.5, 0.0).unwrap();
        let series = charges(&s, &[1], 1.0).unwrap();
        for j in 0..g.nt() {
            let q = series[0].q_of_t[j];
            assert!(
                (q - Cpx::new(0.0, -1.5)).norm() < 1e-6,
                "Q^-1({j}) = {q}"
            );
        }
    }

    #[test]
    fn two_soliton_mass_charge() {
        // int A0^2 dx = 8 (a1 + a2) exactly on the line (constituent masses
        // add), so Q^{-1} = -i (a1 + a2). The finite box clips tails whose
        // prefactor is amplified by (a1+a2)/(a1-a2) for near-degenerate
        // speeds, leaving ~2e-5 at X = 10.
        use crate::solutions::two_soliton;
        let g = Grid::new(10.0, 2.0, 2001, 21).unwrap();
        let s = two_soliton(g, 1.1, 1.0, 0.0, 0.0).unwrap();
        let series = charges(&s, &[1], 1.0).unwrap();
        for q in &series[0].q_of_t {
            assert!(
                (q - Cpx::new(0.0, -2.1)).norm() < 1e-4,
                "Q^-1 = {q} vs -2.1i"
            );
        }
    }

    #[test]
    fn q1_is_kappa_independent() {
        // beta_L^{-1} = -i |A|^2 / 8 for every kappa
        let g = Grid::new(10.0, 2.0, 401, 11).unwrap();
        let s = one_soliton(g, 1.5, 0.3).unwrap();
        let sp = charges(&s, &[1], 1.0).unwrap();
        let sm = charges(&s, &[1], -1.0).unwrap();
        for (a, b) in sp[0].q_of_t.iter().zip(&sm[0].q_of_t) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn q2_vanishes_for_real_envelope() {
        let g = Grid::new(10.0, 2.0, 401, 21).unwrap();
        let s = one_soliton(g, 1.5, 0.0).unwrap();
        let series = charges(&s, &[2], 1.0).unwrap();
        for q in &series[0].q_of_t {
            assert!(q.norm() < 1e-12);
        }
        for f in &series[0].flux_of_t {
            assert!(f.norm() < 1e-12, "f0^{{-2}} = 0 must kill the flux");
        }
    }

    #[test]
    fn undeformed_charges_are_conserved() {
        let g = Grid::new(10.0, 2.0, 1001, 101).unwrap();
        let s = one_soliton(g, 1.5, 0.0).unwrap();
        let series = charges(&s, &[1, 3, 4], 1.0).unwrap();
        for sr in &series {
            let drift = relative_drift(sr, 0, g.nt() - 1);
            assert!(drift < 1e-6, "n = {}: drift {drift}", sr.n);
        }
    }

    #[test]
    fn undeformed_balance_is_flat() {
        let g = Grid::new(10.0, 2.0, 801, 81).unwrap();
        let s = one_soliton(g, 1.5, 0.0).unwrap();
        let reports = charge_balance(&s, &[1, 3, 4], 1.0).unwrap();
        for r in &reports {
            assert!(r.mismatch < 1e-6, "n = {}: {:?}", r.n, r);
            assert!(r.max_flux < 1e-6);
        }
    }

    #[test]
    fn explicit_flux_forms_agree_with_f0_route() {
        let g = Grid::new(10.0, 2.0, 401, 41).unwrap();
        let s = one_soliton(g, 1.5, 0.3).unwrap();
        let reports = charge_balance(&s, &[3, 4], 1.0).unwrap();
        for r in &reports {
            let dev = r.explicit_flux_dev.unwrap();
            assert!(dev < 1e-12, "n = {}: explicit flux dev {dev}", r.n);
        }
    }

    #[test]
    fn undeformed_solution_is_trivially_conserved() {
        let g = Grid::new(10.0, 2.0, 401, 41).unwrap();
        let s = one_soliton(g, 1.5, 0.0).unwrap();
        // the anomaly of an exact solution is stencil noise; the ratio test
        // must detect the near-zero total and report trivial conservation,
        // or at worst a tiny ratio
        match asymptotic_conservation(&s, 3, 1.0).unwrap() {
            AsymptoticStatus::TriviallyConserved => {}
            AsymptoticStatus::Ratio(r) => assert!(r < 1e-2, "ratio {r}"),
        }
    }
}
