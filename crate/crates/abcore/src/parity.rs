//! Parity decomposition about the grid origin.

use crate::prelude::*;

/// Reflection used by [`parity_split`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityKind {
    /// (x, t) -> (-x, -t)
    SpaceTime,
    /// (x, t) -> (-x, t)
    SpaceOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominant {
    Even,
    Odd,
    Mixed,
}

/// Outcome of a parity decomposition: discrete L2 norms of the two parts and
/// a classification with the subdominant/dominant ratio.
#[derive(Debug, Clone, Copy)]
pub struct ParityReport {
    pub even_norm: f64,
    pub odd_norm: f64,
    pub dominant: Dominant,
    pub ratio: f64,
}

pub const PARITY_RATIO_THRESHOLD: f64 = 1e-3;

fn classify(even_norm: f64, odd_norm: f64, threshold: f64) -> (Dominant, f64) {
    let (hi, lo, lead) = if even_norm >= odd_norm {
        (even_norm, odd_norm, Dominant::Even)
    } else {
        (odd_norm, even_norm, Dominant::Odd)
    };
    if hi == 0.0 {
        return (Dominant::Even, 0.0);
    }
    let ratio = lo / hi;
    if ratio > threshold {
        (Dominant::Mixed, ratio)
    } else {
        (lead, ratio)
    }
}

/// Split `f` into even and odd parts about the origin. The split is an exact
/// projection: `even + odd == f` sample for sample, and re-splitting the even
/// part leaves no odd remainder.
pub fn parity_split(f: &ComplexField, kind: ParityKind) -> (ComplexField, ComplexField, ParityReport) {
    parity_split_masked(f, kind, |_, _| true)
}

/// [`parity_split`] with a node filter; excluded nodes still get their even
/// and odd samples, but do not contribute to the norms or classification.
/// The anomaly checks use this to drop the band around a derivative jump.
pub fn parity_split_masked(
    f: &ComplexField,
    kind: ParityKind,
    mut keep: impl FnMut(usize, usize) -> bool,
) -> (ComplexField, ComplexField, ParityReport) {
    let g = *f.grid();
    let (nx, nt) = (g.nx(), g.nt());
    let mut even = ComplexField::zeros(g);
    let mut odd = ComplexField::zeros(g);
    let mut even_sq = 0.0;
    let mut odd_sq = 0.0;
    for j in 0..nt {
        let jr = match kind {
            ParityKind::SpaceTime => nt - 1 - j,
            ParityKind::SpaceOnly => j,
        };
        for i in 0..nx {
            let v = f.at(i, j);
            let vr = f.at(nx - 1 - i, jr);
            let e = 0.5 * (v + vr);
            let o = v - e;
            even.set(i, j, e);
            odd.set(i, j, o);
            if keep(i, j) {
                even_sq += e.norm_sqr();
                odd_sq += o.norm_sqr();
            }
        }
    }
    let w = g.hx() * g.ht();
    let even_norm = (even_sq * w).sqrt();
    let odd_norm = (odd_sq * w).sqrt();
    let (dominant, ratio) = classify(even_norm, odd_norm, PARITY_RATIO_THRESHOLD);
    (
        even,
        odd,
        ParityReport {
            even_norm,
            odd_norm,
            dominant,
            ratio,
        },
    )
}
