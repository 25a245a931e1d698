//! Composite Simpson quadrature and cumulative antiderivatives.

use crate::prelude::*;

/// Composite Simpson integral of a sampled line (odd sample count).
pub fn simpson_line(line: &[Cpx], h: f64) -> Cpx {
    let n = line.len();
    debug_assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd sample count");
    let mut acc = line[0] + line[n - 1];
    let mut four = Cpx::new(0.0, 0.0);
    let mut two = Cpx::new(0.0, 0.0);
    for (i, &v) in line.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            four += v;
        } else {
            two += v;
        }
    }
    acc += 4.0 * four + 2.0 * two;
    acc * (h / 3.0)
}

/// Integration domain for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Integral along x at one t-node.
    XLineAt(usize),
    /// Double integral over the full rectangle (Simpson in x, then in t).
    FullRect,
}

/// Result of [`integrate`]: one value per requested line, or a single scalar.
#[derive(Debug, Clone, PartialEq)]
pub enum Integral {
    Scalar(Cpx),
    PerLine(Vec<Cpx>),
}

impl Integral {
    pub fn scalar(&self) -> Cpx {
        match self {
            Integral::Scalar(v) => *v,
            Integral::PerLine(_) => panic!("integral is per-line, not scalar"),
        }
    }
}

pub fn integrate(f: &ComplexField, domain: Domain) -> Integral {
    let g = f.grid();
    match domain {
        Domain::XLineAt(j) => Integral::Scalar(simpson_line(f.t_slice(j), g.hx())),
        Domain::FullRect => {
            let per_t: Vec<Cpx> = (0..g.nt())
                .map(|j| simpson_line(f.t_slice(j), g.hx()))
                .collect();
            Integral::Scalar(simpson_line(&per_t, g.ht()))
        }
    }
}

/// Integral along x at every t-node.
pub fn integrate_x_lines(f: &ComplexField) -> Vec<Cpx> {
    let g = f.grid();
    (0..g.nt()).map(|j| simpson_line(f.t_slice(j), g.hx())).collect()
}

/// Cumulative integral of a line from its first sample, which maps to the
/// convention that antiderivatives vanish at the left edge x = -X.
///
/// Even prefixes use composite Simpson; odd prefixes add a 3-point
/// correction, keeping the whole prefix table fourth order.
pub fn cumulative_line(line: &[Cpx], h: f64, out: &mut [Cpx]) {
    let n = line.len();
    debug_assert!(n >= 3 && out.len() == n);
    out[0] = Cpx::new(0.0, 0.0);
    for i in (2..n).step_by(2) {
        out[i] = out[i - 2] + (line[i - 2] + 4.0 * line[i - 1] + line[i]) * (h / 3.0);
    }
    for i in (1..n).step_by(2) {
        // right-open 3-point rule on [x_{i-1}, x_i] using the node beyond
        let (a, b, c) = (line[i - 1], line[i], line[i + 1]);
        out[i] = out[i - 1] + (5.0 * a + 8.0 * b - c) * (h / 12.0);
    }
}

/// `dx^{-1} f`: cumulative Simpson along x from the left edge, exactly zero
/// at x = -X for every t.
pub fn antiderivative_x(f: &ComplexField) -> ComplexField {
    let g = *f.grid();
    let nx = g.nx();
    let mut out = ComplexField::zeros(g);
    for j in 0..g.nt() {
        let src = &f.values()[j * nx..(j + 1) * nx];
        let dst = &mut out.values_mut()[j * nx..(j + 1) * nx];
        cumulative_line(src, g.hx(), dst);
    }
    out
}
