//! su(2) Lax pair, zero-curvature residual, and the curvature anomaly.
//!
//! The spatial and temporal Lax components of a pair (A, B) are
//!
//! ```text
//! L = -i lambda s3 + (A/2) s+ - (A*/2) s-
//! M = 1/(4 i lambda) [ -B s3 + A_t s+ + A_t* s- ]
//! ```
//!
//! with `A_t` the finite-difference t-derivative. The curvature
//! `F = L_t - M_x + [L, M]` vanishes for exact solutions; a quasi-deformed
//! pair leaves the single anomaly channel `F = (X/lambda) s3` with
//! `X = -(i/8)[2 B_x + (|A|^2)_t]`.

use crate::field::ComplexField;
use crate::prelude::*;
use crate::solutions::AbSolution;
use crate::stencil::{differentiate, DiffMode};

/// 2x2 complex matrix field stored entrywise.
#[derive(Debug, Clone)]
pub struct MatrixField {
    pub e11: ComplexField,
    pub e12: ComplexField,
    pub e21: ComplexField,
    pub e22: ComplexField,
}

impl MatrixField {
    /// Largest |trace| over the grid.
    pub fn max_abs_trace(&self) -> f64 {
        self.e11.zip_with(&self.e22, |a, d| a + d).max_abs()
    }
}

/// Lax pair sampled at one spectral value.
#[derive(Debug, Clone)]
pub struct LaxSample {
    pub lambda: Cpx,
    pub l: MatrixField,
    pub m: MatrixField,
}

fn check_lambda(lambda: Cpx) -> Result<()> {
    if lambda == Cpx::new(0.0, 0.0) || !lambda.is_finite() {
        Err(AbError::Parameter(
            "spectral parameter must be nonzero (M has a pole at lambda = 0)".into(),
        ))
    } else {
        Ok(())
    }
}

/// Assemble L and M for `s` at spectral value `lambda`.
pub fn lax_pair(s: &AbSolution, lambda: Cpx) -> Result<LaxSample> {
    check_lambda(lambda)?;
    let grid = *s.a.grid();
    let a_t = differentiate(&s.a, DiffMode::T)?;
    let minus_i_lambda = -Cpx::i() * lambda;
    let inv = (Cpx::new(4.0, 0.0) * Cpx::i() * lambda).inv();
    let l = MatrixField {
        e11: ComplexField::constant(grid, minus_i_lambda),
        e12: s.a.scale(Cpx::new(0.5, 0.0)),
        e21: s.a.conj().scale(Cpx::new(-0.5, 0.0)),
        e22: ComplexField::constant(grid, -minus_i_lambda),
    };
    let m = MatrixField {
        e11: s.b.scale(-inv),
        e12: a_t.scale(inv),
        e21: a_t.conj().scale(inv),
        e22: s.b.scale(inv),
    };
    Ok(LaxSample { lambda, l, m })
}

/// Per-channel interior norms of the curvature `L_t - M_x + [L, M]`.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureChannels {
    pub lambda: Cpx,
    /// s3 channel norm (the anomaly channel, coefficient X/lambda on-shell).
    pub sigma3: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
}

impl CurvatureChannels {
    /// Entrywise interior norm of the full matrix residual.
    pub fn total(&self) -> f64 {
        self.sigma3.max(self.sigma_plus).max(self.sigma_minus)
    }
}

const BAND: usize = 2;

/// Curvature channels computed entrywise.
///
/// The diagonal t-derivative of L and the leading commutator term cancel the
/// `A_t` pieces exactly (both sides use the same finite-difference field), so
/// the three sl(2) channels reduce to
///
/// ```text
/// s3:  (1/(8 i lambda)) [ 2 B_x + A A_t* + A* A_t ]
/// s+:  (1/(4 i lambda)) [ A B  - (A_t)_x  ]
/// s-:  (1/(4 i lambda)) [ A* B - (A_t*)_x ]
/// ```
pub fn curvature_channels(s: &AbSolution, lambda: Cpx) -> Result<CurvatureChannels> {
    check_lambda(lambda)?;
    let a_t = differentiate(&s.a, DiffMode::T)?;
    let a_tx = differentiate(&a_t, DiffMode::X)?;
    let b_x = differentiate(&s.b, DiffMode::X)?;
    let inv4 = (Cpx::new(4.0, 0.0) * Cpx::i() * lambda).inv();
    let inv8 = inv4 * 0.5;

    let dens = s
        .a
        .zip_with(&a_t, |a, at| a * at.conj() + a.conj() * at);
    let f3 = b_x.scale(Cpx::new(2.0, 0.0)).add(&dens).scale(inv8);
    let fp = s.a.mul(&s.b).sub(&a_tx).scale(inv4);
    let fm = s.a.conj().mul(&s.b).sub(&a_tx.conj()).scale(inv4);

    Ok(CurvatureChannels {
        lambda,
        sigma3: f3.max_abs_interior(BAND),
        sigma_plus: fp.max_abs_interior(BAND),
        sigma_minus: fm.max_abs_interior(BAND),
    })
}

/// Interior norm of the zero-curvature residual at one spectral value.
pub fn curvature_residual(s: &AbSolution, lambda: Cpx) -> Result<f64> {
    Ok(curvature_channels(s, lambda)?.total())
}

/// The s3/lambda coefficient of the curvature as a field; equals the anomaly
/// for any pair by construction of the channels.
pub fn curvature_sigma3_coefficient(s: &AbSolution, lambda: Cpx) -> Result<ComplexField> {
    check_lambda(lambda)?;
    let a_t = differentiate(&s.a, DiffMode::T)?;
    let b_x = differentiate(&s.b, DiffMode::X)?;
    let dens = s
        .a
        .zip_with(&a_t, |a, at| a * at.conj() + a.conj() * at);
    let inv8 = (Cpx::new(8.0, 0.0) * Cpx::i() * lambda).inv();
    // multiply back by lambda to strip the pole
    Ok(b_x
        .scale(Cpx::new(2.0, 0.0))
        .add(&dens)
        .scale(inv8 * lambda))
}

/// Default spectral samples used by the verification suites.
pub const LAMBDA_SAMPLES: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (0.5, 0.5), (2.0, 0.0)];

/// Curvature anomaly `X = -(i/8)[2 B_x + (|A|^2)_t]` by finite differences.
///
/// Purely imaginary whenever B is real, vanishing on-shell.
pub fn anomaly(s: &AbSolution) -> Result<ComplexField> {
    let b_x = differentiate(&s.b, DiffMode::X)?;
    let dens_t = differentiate(&s.a.norm_sqr_field(), DiffMode::T)?;
    Ok(b_x
        .scale(Cpx::new(2.0, 0.0))
        .add(&dens_t)
        .scale(Cpx::new(0.0, -0.125)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solutions::{one_soliton, sech, AbSolution, Realness};
    use crate::stencil::observed_order;
    use alloc::collections::BTreeMap;

    fn vacuum(grid: Grid, b: f64) -> AbSolution {
        AbSolution {
            name: "const".into(),
            a: ComplexField::zeros(grid),
            b: ComplexField::constant(grid, Cpx::new(b, 0.0)),
            params: BTreeMap::new(),
            phase_phi: None,
            form: None,
            realness: Realness::Real,
        }
    }

    #[test]
    fn zero_fields_give_diagonal_l_and_zero_m() {
        let g = Grid::new(5.0, 2.0, 41, 21).unwrap();
        let s = vacuum(g, 0.0);
        let lam = Cpx::new(0.7, -0.3);
        let pair = lax_pair(&s, lam).unwrap();
        assert!((pair.l.e11.at(3, 3) - (-Cpx::i() * lam)).norm() < 1e-15);
        assert_eq!(pair.l.e12.max_abs(), 0.0);
        assert_eq!(pair.m.e11.max_abs(), 0.0);
        assert_eq!(pair.m.e12.max_abs(), 0.0);
    }

    #[test]
    fn lax_entries_match_direct_substitution() {
        let g = Grid::new(10.0, 5.0, 201, 101).unwrap();
        let s = one_soliton(g, 1.5, 0.0).unwrap();
        let pair = lax_pair(&s, Cpx::new(1.0, 0.0)).unwrap();
        // L12 at the origin = A/2 = 1.5
        let v = pair.l.e12.at(g.x_center(), g.t_center());
        assert!((v - Cpx::new(1.5, 0.0)).norm() < 1e-14);
        assert!(pair.l.max_abs_trace() < 1e-14);
        assert!(pair.m.max_abs_trace() < 1e-14);
    }

    #[test]
    fn lambda_zero_is_rejected() {
        let g = Grid::new(5.0, 2.0, 21, 21).unwrap();
        let s = vacuum(g, 1.0);
        assert!(matches!(
            lax_pair(&s, Cpx::new(0.0, 0.0)),
            Err(AbError::Parameter(_))
        ));
        assert!(curvature_residual(&s, Cpx::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn constant_b_vacuum_is_exactly_flat() {
        let g = Grid::new(5.0, 2.0, 41, 21).unwrap();
        let s = vacuum(g, 0.75);
        let r = curvature_residual(&s, Cpx::new(1.0, 0.0)).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn one_soliton_is_flat_at_all_sample_lambdas() {
        let g = Grid::new(10.0, 5.0, 1001, 501).unwrap();
        let s = one_soliton(g, 1.5, 0.0).unwrap();
        for (re, im) in LAMBDA_SAMPLES {
            let r = curvature_residual(&s, Cpx::new(re, im)).unwrap();
            assert!(r < 1e-5, "residual {r} at lambda {re}+{im}i");
        }
    }

    #[test]
    fn curvature_converges_at_stencil_order() {
        let mut g = Grid::new(10.0, 5.0, 251, 127).unwrap();
        let mut errs = Vec::new();
        for _ in 0..3 {
            let s = one_soliton(g, 1.5, 0.0).unwrap();
            errs.push(curvature_residual(&s, Cpx::new(1.0, 0.0)).unwrap());
            g = g.refined();
        }
        for k in 0..2 {
            let order = observed_order(errs[k], errs[k + 1]);
            assert!(order >= 3.5, "order {order}, errs {errs:?}");
        }
    }

    #[test]
    fn residual_is_lambda_uniform_after_pole_scaling() {
        // the 1/lambda and lambda^0 channels vanish independently, so
        // |lambda|/(1+|lambda|) * residual stays within a small range
        let g = Grid::new(10.0, 5.0, 501, 251).unwrap();
        let s = one_soliton(g, 1.5, 0.0).unwrap();
        let mut scaled = Vec::new();
        for (re, im) in LAMBDA_SAMPLES {
            let lam = Cpx::new(re, im);
            let r = curvature_residual(&s, lam).unwrap();
            scaled.push(r * lam.norm() / (1.0 + lam.norm()));
        }
        let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo < 4.0, "scaled residual spread {scaled:?}");
    }

    #[test]
    fn sigma3_channel_reproduces_the_anomaly() {
        // off-shell pair with an O(1) anomaly channel: perturb the mean flow
        let g = Grid::new(10.0, 5.0, 401, 201).unwrap();
        let mut s = one_soliton(g, 1.5, 0.0).unwrap();
        s.b = s
            .b
            .zip_with(&ComplexField::from_fn(g, |x, t| {
                Cpx::new(0.2 * sech(x) * sech(0.5 * t), 0.0)
            }), |b, p| b + p);
        let x = anomaly(&s).unwrap();
        assert!(x.max_abs() > 1e-2, "perturbation must switch the anomaly on");
        // the channel uses the product-rule form of (|A|^2)_t while the
        // anomaly differentiates |A|^2 directly, so they agree to stencil
        // accuracy rather than to rounding
        for (re, im) in [(1.0, 0.0), (0.5, 0.5)] {
            let c3 = curvature_sigma3_coefficient(&s, Cpx::new(re, im)).unwrap();
            let dev = c3.sub(&x).max_abs();
            assert!(
                dev < 1e-3 * x.max_abs(),
                "sigma3/lambda channel vs anomaly: {dev} (scale {})",
                x.max_abs()
            );
        }
    }

    #[test]
    fn anomaly_vanishes_on_shell_and_matches_tanh_profile() {
        let g = Grid::new(10.0, 5.0, 1001, 501).unwrap();
        let s = one_soliton(g, 1.5, 0.0).unwrap();
        let x = anomaly(&s).unwrap();
        assert!(x.max_abs_interior(2) < 5e-6, "on-shell anomaly {}", x.max_abs_interior(2));

        // A = 0, B = tanh x  ->  X = -(i/4) sech^2 x
        let s2 = AbSolution {
            b: ComplexField::from_fn(g, |x, _| Cpx::new(x.tanh(), 0.0)),
            ..vacuum(g, 0.0)
        };
        let x2 = anomaly(&s2).unwrap();
        let mut worst = 0.0f64;
        for i in 2..g.nx() - 2 {
            let want = Cpx::new(0.0, -0.25 * sech(g.x(i)) * sech(g.x(i)));
            worst = worst.max((x2.at(i, g.t_center()) - want).norm());
        }
        assert!(worst < 1e-7, "tanh-profile anomaly deviation {worst}");
        // purely imaginary for real B
        assert!(x2.values().iter().map(|v| v.re.abs()).fold(0.0, f64::max) < 1e-10);
    }
}
