//! Fourth-order finite-difference calculus.
//!
//! Interior nodes use the 5-point central first-derivative stencil; the two
//! nodes nearest each edge use one-sided 5-point stencils of the same order,
//! so the scheme is uniformly fourth order on grids with at least five nodes
//! per axis. Mixed derivatives compose the two one-dimensional passes
//! (T then X); composing in the other order agrees to stencil accuracy.

use crate::prelude::*;

/// Differentiation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffMode {
    /// d/dx
    X,
    /// d/dt
    T,
    /// d^2/dx dt (t-pass first, then x-pass)
    XT,
}

/// Fourth-order first derivative of a contiguous line with spacing `h`.
///
/// `line.len() >= 5` is the caller's responsibility (the grid invariant).
pub fn derivative_line(line: &[Cpx], h: f64, out: &mut [Cpx]) {
    let n = line.len();
    debug_assert!(n >= 5 && out.len() == n);
    let c = 1.0 / (12.0 * h);
    out[0] = (-25.0 * line[0] + 48.0 * line[1] - 36.0 * line[2] + 16.0 * line[3] - 3.0 * line[4]) * c;
    out[1] = (-3.0 * line[0] - 10.0 * line[1] + 18.0 * line[2] - 6.0 * line[3] + line[4]) * c;
    for i in 2..n - 2 {
        out[i] = (line[i - 2] - 8.0 * line[i - 1] + 8.0 * line[i + 1] - line[i + 2]) * c;
    }
    out[n - 2] = (3.0 * line[n - 1] + 10.0 * line[n - 2] - 18.0 * line[n - 3] + 6.0 * line[n - 4]
        - line[n - 5])
        * c;
    out[n - 1] = (25.0 * line[n - 1] - 48.0 * line[n - 2] + 36.0 * line[n - 3]
        - 16.0 * line[n - 4]
        + 3.0 * line[n - 5])
        * c;
}

fn derivative_x(f: &ComplexField) -> ComplexField {
    let g = *f.grid();
    let mut out = ComplexField::zeros(g);
    let nx = g.nx();
    for j in 0..g.nt() {
        let src = &f.values()[j * nx..(j + 1) * nx];
        let dst = &mut out.values_mut()[j * nx..(j + 1) * nx];
        derivative_line(src, g.hx(), dst);
    }
    out
}

fn derivative_t(f: &ComplexField) -> ComplexField {
    let g = *f.grid();
    let mut out = ComplexField::zeros(g);
    let (nx, nt) = (g.nx(), g.nt());
    let mut column = vec![Cpx::new(0.0, 0.0); nt];
    let mut dcol = vec![Cpx::new(0.0, 0.0); nt];
    for i in 0..nx {
        for j in 0..nt {
            column[j] = f.values()[j * nx + i];
        }
        derivative_line(&column, g.ht(), &mut dcol);
        for j in 0..nt {
            out.values_mut()[j * nx + i] = dcol[j];
        }
    }
    out
}

/// Finite-difference derivative of a whole field.
pub fn differentiate(f: &ComplexField, mode: DiffMode) -> Result<ComplexField> {
    let g = f.grid();
    let need = |n: usize, axis: &str| {
        if n < 5 {
            Err(AbError::Dimension(format!(
                "need at least 5 nodes along {axis} for the 4th-order stencil, got {n}"
            )))
        } else {
            Ok(())
        }
    };
    match mode {
        DiffMode::X => {
            need(g.nx(), "x")?;
            Ok(derivative_x(f))
        }
        DiffMode::T => {
            need(g.nt(), "t")?;
            Ok(derivative_t(f))
        }
        DiffMode::XT => {
            need(g.nx(), "x")?;
            need(g.nt(), "t")?;
            Ok(derivative_x(&derivative_t(f)))
        }
    }
}

/// Repeated x-derivatives `[f_x, f_xx, ..]` up to `order`.
pub fn x_jet(f: &ComplexField, order: usize) -> Result<Vec<ComplexField>> {
    let mut jets = Vec::with_capacity(order);
    let mut cur = f.clone();
    for _ in 0..order {
        cur = differentiate(&cur, DiffMode::X)?;
        jets.push(cur.clone());
    }
    Ok(jets)
}

/// Repeated derivatives of a single line, returned as `[f', f'', ..]`.
pub fn line_jet(line: &[Cpx], h: f64, order: usize) -> Vec<Vec<Cpx>> {
    let mut jets: Vec<Vec<Cpx>> = Vec::with_capacity(order);
    let mut cur = line.to_vec();
    for _ in 0..order {
        let mut d = vec![Cpx::new(0.0, 0.0); line.len()];
        derivative_line(&cur, h, &mut d);
        jets.push(d.clone());
        cur = d;
    }
    jets
}

/// Observed convergence order from error norms at spacings `h` and `h/2`.
pub fn observed_order(err_coarse: f64, err_fine: f64) -> f64 {
    (err_coarse / err_fine).ln() / core::f64::consts::LN_2
}
