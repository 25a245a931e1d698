//! Acceptance suite: every verification criterion of the toolkit runs here
//! at its stated tolerance on the default grid (X=10, T=5, 2001x1001,
//! hx = ht = 0.01), printing one pass/fail line per check.
//!
//! Two of the published cross-relations are implemented faithfully but are
//! mathematically unattainable for the constructions this toolkit (and the
//! source material) actually uses; they live in
//! `criterion4_order2_cross_relations` and
//! `criterion7_literal_balance_and_counterexample`, each of which documents
//! the obstruction in its assertion message. Everything else is green.

use abcore::charges::{
    asymptotic_conservation_with, charges, relative_drift, AsymptoticStatus,
};
use abcore::laxcurv::{curvature_residual, LAMBDA_SAMPLES};
use abcore::loopalg::{
    bch_conjugate, f_kernel, gauge_kernel, verify_abelianization, ApmFields,
    LoopElement, DEFAULT_FLOOR,
};
use abcore::nhd::{
    nhd_closed_forms, nhd_constraint_residuals, nhd_from_ansatz, NhdCase, NhdClassification,
};
use abcore::parity::{parity_split, Dominant, ParityKind};
use abcore::qid::{
    anomaly1_parity, first_order_plugback_residual, qid_report, qid_solution,
    ChargeVerdict, QidConfig,
};
use abcore::solutions::{
    ab_residuals, kink_ansatz, kk_kak_ansatz, one_soliton, sg_map, two_soliton, AbSolution,
    KkBranch,
};
use abcore::stencil::observed_order;
use abcore::{ComplexField, Cpx, Grid};
use std::sync::OnceLock;
use std::time::Instant;

fn default_grid() -> Grid {
    Grid::default_acceptance()
}

struct Ctx {
    grid: Grid,
    soliton: AbSolution,
    two_sol: AbSolution,
}

fn ctx() -> &'static Ctx {
    static CTX: OnceLock<Ctx> = OnceLock::new();
    CTX.get_or_init(|| {
        let grid = default_grid();
        Ctx {
            grid,
            soliton: one_soliton(grid, 1.5, 0.0).unwrap(),
            two_sol: two_soliton(grid, 1.1, 1.0, 0.0, 0.0).unwrap(),
        }
    })
}

struct QidCtx {
    run: abcore::qid::QidRun,
    report: abcore::qid::QidReport,
}

fn qid_ctx() -> &'static QidCtx {
    static QCTX: OnceLock<QidCtx> = OnceLock::new();
    QCTX.get_or_init(|| {
        let c = ctx();
        let run = qid_solution(
            &c.soliton,
            &QidConfig {
                epsilon: 0.1,
                ..Default::default()
            },
        )
        .unwrap();
        let report = qid_report(&run, 1.0).unwrap();
        QidCtx { run, report }
    })
}

fn check(name: &str, pass: bool, detail: String) -> bool {
    println!(
        "criterion check [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

#[test]
fn criterion1_exact_solution_suite() {
    let started = Instant::now();
    let c = ctx();
    let mut ok = true;

    let r = ab_residuals(&c.soliton).unwrap();
    ok &= check(
        "1: one_soliton r1 <= 1e-6",
        r.r1_norm <= 1e-6,
        format!("r1 = {:.3e}", r.r1_norm),
    );
    ok &= check(
        "1: one_soliton r2 <= 1e-6",
        r.r2_norm <= 1e-6,
        format!("r2 = {:.3e}", r.r2_norm),
    );
    ok &= check(
        "1: one_soliton normalization <= 1e-6",
        r.norm_residual <= 1e-6,
        format!("|A_t|^2+B^2-1 = {:.3e}", r.norm_residual),
    );
    // the combined single higher-order equation carries an extra envelope
    // weight and two more derivatives, so its stencil floor sits higher
    ok &= check(
        "1: one_soliton combined-equation r5 <= 1e-4",
        r.r5_norm <= 1e-4,
        format!("r5 = {:.3e}", r.r5_norm),
    );

    let r2s = ab_residuals(&c.two_sol).unwrap();
    ok &= check(
        "1: two_soliton r1 <= 1e-4",
        r2s.r1_norm <= 1e-4,
        format!("r1 = {:.3e}", r2s.r1_norm),
    );
    ok &= check(
        "1: two_soliton r2 <= 1e-4",
        r2s.r2_norm <= 1e-4,
        format!("r2 = {:.3e}", r2s.r2_norm),
    );

    let psi = ComplexField::from_fn(c.grid, |x, t| Cpx::new(4.0 * (x + t).exp().atan(), 0.0));
    let sg = sg_map(&psi, None).unwrap();
    let rs = ab_residuals(&sg).unwrap();
    ok &= check(
        "1: sg_kink r1 <= 1e-6",
        rs.r1_norm <= 1e-6,
        format!("r1 = {:.3e}", rs.r1_norm),
    );
    ok &= check(
        "1: sg_kink r2 <= 1e-6",
        rs.r2_norm <= 1e-6,
        format!("r2 = {:.3e}", rs.r2_norm),
    );

    let secs = started.elapsed().as_secs_f64();
    ok &= check("1: runtime <= 30 s", secs <= 30.0, format!("{secs:.1} s"));
    assert!(ok, "criterion 1 failed");
}

#[test]
fn criterion2_zero_curvature() {
    let c = ctx();
    let mut ok = true;
    for (re, im) in LAMBDA_SAMPLES {
        let lam = Cpx::new(re, im);
        let r = curvature_residual(&c.soliton, lam).unwrap();
        ok &= check(
            &format!("2: flatness at lambda = {re}+{im}i <= 1e-5"),
            r <= 1e-5,
            format!("residual = {:.3e}", r),
        );
    }
    // the anomaly channel of an exact solution is stencil noise
    let x = abcore::laxcurv::anomaly(&c.soliton).unwrap();
    ok &= check(
        "2: on-shell anomaly norm <= 1e-6",
        x.max_abs_interior(2) <= 1e-6,
        format!("|X| = {:.3e}", x.max_abs_interior(2)),
    );

    // convergence order over two refinements
    let mut errs = Vec::new();
    let mut g = Grid::new(10.0, 5.0, 501, 251).unwrap();
    for _ in 0..3 {
        let s = one_soliton(g, 1.5, 0.0).unwrap();
        errs.push(curvature_residual(&s, Cpx::new(1.0, 0.0)).unwrap());
        g = g.refined();
    }
    for k in 0..2 {
        let order = observed_order(errs[k], errs[k + 1]);
        ok &= check(
            &format!("2: refinement order level {k} >= 3.5"),
            order >= 3.5,
            format!("order = {order:.2} (errors {:.2e} -> {:.2e})", errs[k], errs[k + 1]),
        );
    }
    assert!(ok, "criterion 2 failed");
}

#[test]
fn criterion3_nhd_closed_form_values() {
    let started = Instant::now();
    let c = ctx();
    let mut ok = true;

    // masked max deviation helper (skips the division-guarded tail halo)
    let masked_dev = |got: &ComplexField, want: &ComplexField, mask: &[bool]| -> f64 {
        let g = got.grid();
        let (nx, nt) = (g.nx(), g.nt());
        let mut worst = 0.0f64;
        for j in 2..nt - 2 {
            for i in 2..nx - 2 {
                let lo = i.saturating_sub(2);
                let hi = (i + 2).min(nx - 1);
                if (lo..=hi).any(|ii| mask[j * nx + ii]) {
                    continue;
                }
                worst = worst.max((got.at(i, j) - want.at(i, j)).norm());
            }
        }
        worst
    };

    let rep = nhd_from_ansatz(&c.soliton.a).unwrap();
    let cf = nhd_closed_forms(c.grid, NhdCase::OneSoliton { g_hat: 1.5, delta: 0.0 }).unwrap();
    for (name, got, want) in [
        ("v2", &rep.v2, &cf.v2),
        ("u2", &rep.u2, &cf.u2),
        ("beta_d", &rep.beta_d, &cf.beta_d),
    ] {
        let dev = masked_dev(got, want, &rep.singular_mask);
        ok &= check(
            &format!("3: one_soliton {name} matches closed form <= 1e-4"),
            dev <= 1e-4,
            format!("max dev = {:.3e}", dev),
        );
    }
    ok &= check(
        "3: one_soliton ansatz classified LocalizedValid",
        rep.classification == NhdClassification::LocalizedValid,
        format!("{:?}", rep.classification),
    );

    let a_kink = kink_ansatz(c.grid, 1.5, 0.0).unwrap();
    let repk = nhd_from_ansatz(&a_kink).unwrap();
    let cfk = nhd_closed_forms(c.grid, NhdCase::Kink { a: 1.5, delta: 0.0 }).unwrap();
    for (name, got, want) in [
        ("v2", &repk.v2, &cfk.v2),
        ("u2", &repk.u2, &cfk.u2),
        ("beta_d", &repk.beta_d, &cfk.beta_d),
    ] {
        let dev = masked_dev(got, want, &repk.singular_mask);
        ok &= check(
            &format!("3: kink {name} matches closed form <= 1e-4"),
            dev <= 1e-4,
            format!("max dev = {:.3e}", dev),
        );
    }
    ok &= check(
        "3: kink ansatz classified LocalizedValid",
        repk.classification == NhdClassification::LocalizedValid,
        format!("{:?}", repk.classification),
    );

    let rep2 = nhd_from_ansatz(&c.two_sol.a).unwrap();
    ok &= check(
        "3: two_soliton ansatz classified invalid (singular u2)",
        rep2.classification == NhdClassification::SingularDeformation,
        format!("{:?}", rep2.classification),
    );
    for branch in [KkBranch::Kk, KkBranch::Kak] {
        let a_d = kk_kak_ansatz(c.grid, 2.0, branch).unwrap();
        let repb = nhd_from_ansatz(&a_d).unwrap();
        ok &= check(
            &format!("3: {branch:?} ansatz classified invalid"),
            repb.classification != NhdClassification::LocalizedValid,
            format!("{:?}", repb.classification),
        );
    }

    let secs = started.elapsed().as_secs_f64();
    ok &= check("3: runtime <= 60 s", secs <= 60.0, format!("{secs:.1} s"));
    assert!(ok, "criterion 3 failed");
}

#[test]
fn criterion4_derived_normalization_and_noise_control() {
    // the attainable parts of the constraint-residual criterion: the derived
    // normalization identity holds at stencil accuracy for both admissible
    // ansatz families, and a noise control wrecks every residual
    let c = ctx();
    let mut ok = true;

    let rep = nhd_from_ansatz(&c.soliton.a).unwrap();
    let res = nhd_constraint_residuals(&rep, &c.soliton.a).unwrap();
    ok &= check(
        "4: one_soliton derived normalization <= 1e-4",
        res["derived_normalization"] <= 1e-4,
        format!("residual = {:.3e}", res["derived_normalization"]),
    );

    let a_kink = kink_ansatz(c.grid, 1.5, 0.0).unwrap();
    let repk = nhd_from_ansatz(&a_kink).unwrap();
    let resk = nhd_constraint_residuals(&repk, &a_kink).unwrap();
    ok &= check(
        "4: kink derived-normalization residual <= 1e-3",
        resk["derived_normalization"] <= 1e-3,
        format!("residual = {:.3e}", resk["derived_normalization"]),
    );

    // noise negative control on a coarser lattice (the conclusion is
    // resolution-independent)
    let gsmall = Grid::new(10.0, 5.0, 401, 101).unwrap();
    let s = one_soliton(gsmall, 1.5, 0.0).unwrap();
    let mut seed = 7u64;
    let mut next = || {
        seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((seed >> 33) as f64 / (1u64 << 31) as f64) - 1.0
    };
    let noisy = s.a.map(|v| v + Cpx::new(0.1 * next(), 0.0));
    let repn = nhd_from_ansatz(&noisy).unwrap();
    let resn = nhd_constraint_residuals(&repn, &noisy).unwrap();
    ok &= check(
        "4: noise control residuals O(1) or larger",
        resn["cross_sigma3"] > 1.0 && resn["derived_normalization"] > 1.0,
        format!("cross_sigma3 = {:.3e}, normalization = {:.3e}", resn["cross_sigma3"], resn["derived_normalization"]),
    );
    assert!(ok, "criterion 4 (attainable parts) failed");
}

#[test]
fn criterion4_order2_cross_relations() {
    // Faithful implementation of the published order-lambda^-2 cross
    // relations, asserted at the stated tolerance. They cannot pass: with
    // beta_d real the second dynamical equation forces w2 = v2*, and for a
    // real envelope with imaginary v2 the first/third constraints then
    // demand u2 constant while the second fixes u2 = -v2_x/A_d. The
    // admissible catalog deformations satisfy the second constraint and the
    // derived normalization but leave an O(1) residual i g^2 sech^2 (peak
    // 2.25 for g = 1.5) in the first and in its corollary. See the soliton
    // closed forms: v2 = i g sech, u2 = (i g/2) tanh give
    // 2 u2_x - A w2 - A* v2 = i g^2 sech^2 exactly.
    let c = ctx();
    let mut ok = true;
    let rep = nhd_from_ansatz(&c.soliton.a).unwrap();
    let res = nhd_constraint_residuals(&rep, &c.soliton.a).unwrap();
    ok &= check(
        "4: one_soliton s3 cross relation <= 1e-4 (unattainable, see message)",
        res["cross_sigma3"] <= 1e-4,
        format!("cross_sigma3 = {:.3e} (analytic value g^2 = 2.25)", res["cross_sigma3"]),
    );
    ok &= check(
        "4: one_soliton eliminated cross relation <= 1e-4 (unattainable, see message)",
        res["cross_eliminated"] <= 1e-4,
        format!("cross_eliminated = {:.3e}", res["cross_eliminated"]),
    );
    let a_kink = kink_ansatz(c.grid, 1.5, 0.0).unwrap();
    let repk = nhd_from_ansatz(&a_kink).unwrap();
    let resk = nhd_constraint_residuals(&repk, &a_kink).unwrap();
    ok &= check(
        "4: kink s3 cross relation <= 1e-4 (unattainable, see message)",
        resk["cross_sigma3"] <= 1e-4,
        format!("cross_sigma3 = {:.3e}", resk["cross_sigma3"]),
    );
    assert!(
        ok,
        "the order-lambda^-2 cross relations (first/third constraints and their \
         corollary) are violated by the admissible closed-form deformations \
         themselves: for the soliton the residual is exactly i g^2 sech^2 \
         (peak 2.25), independent of resolution. The reduced pipeline \
         enforces the dynamical equations, the second constraint and the \
         derived normalization; the remaining cross relations are \
         incompatible with w2 = v2* for real envelopes with imaginary v2."
    );
}

#[test]
fn criterion5_abelianization_and_bch() {
    let c = ctx();
    let mut ok = true;
    let rep = verify_abelianization(&c.soliton, 1.0).unwrap();
    for (grade, v) in &rep.image_norm {
        ok &= check(
            &format!("5: Image norm at grade {grade} <= 1e-4"),
            *v <= 1e-4,
            format!("{v:.3e}"),
        );
    }
    for (grade, v) in &rep.kernel_dev {
        ok &= check(
            &format!("5: Kernel deviation at grade {grade} <= 1e-4"),
            *v <= 1e-4,
            format!("{v:.3e}"),
        );
    }
    println!(
        "criterion check [info] 5: grade -4 (truncation-contaminated, reported only): image {:.3e}, kernel {:.3e}",
        rep.image_norm_m4, rep.kernel_dev_m4
    );

    // BCH conjugation of b^{-1} against the closed curvature coefficients
    let ap = ApmFields::new(&c.soliton.a, 1.0).unwrap();
    let bm1 = LoopElement::new(1.0, DEFAULT_FLOOR).with_term(
        -1,
        [Cpx::new(1.0, 0.0), Cpx::new(0.0, 0.0), Cpx::new(0.0, 0.0)],
    );
    let mut seed = 0x5eedu64;
    let mut next = |m: usize| {
        seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (seed >> 33) as usize % m
    };
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let i = next(c.grid.nx());
        let j = next(c.grid.nt());
        let jet = ap.node_jet(i, j);
        let coeffs = gauge_kernel(&jet, 1.0);
        let mut jel = LoopElement::new(1.0, DEFAULT_FLOOR);
        for (n, pair) in coeffs.iter().enumerate() {
            jel.insert(-(n as i32) - 1, [Cpx::new(0.0, 0.0), pair[0], pair[1]]);
        }
        let rotated = bch_conjugate(&bm1, &jel, 8).unwrap();
        let want = f_kernel(&jet, 1.0);
        for (k, &grade) in [-1i32, -2, -3, -4].iter().enumerate() {
            let got = rotated.get(grade);
            for comp in 0..3 {
                worst = worst.max((got[comp] - want[k][comp]).norm());
            }
        }
    }
    ok &= check(
        "5: BCH conjugation reproduces curvature coefficients <= 1e-8 at 50 nodes",
        worst <= 1e-8,
        format!("worst dev = {:.3e}", worst),
    );
    assert!(ok, "criterion 5 failed");
}

#[test]
fn criterion6_charge_conservation() {
    let c = ctx();
    let mut ok = true;
    let series = charges(&c.soliton, &[1, 3, 4], 1.0).unwrap();

    // Q^{-1} = -(i/8) * int A0^2 dx = -1.5 i
    let q1 = series[0].q_of_t[c.grid.t_center()];
    ok &= check(
        "6: Q^-1 = -1.5i within 1e-6",
        (q1 - Cpx::new(0.0, -1.5)).norm() <= 1e-6,
        format!("Q^-1 = {q1}"),
    );

    // drift over t in [-2, 2]
    let j_lo = (c.grid.t_center() as f64 - 2.0 / c.grid.ht()).round() as usize;
    let j_hi = (c.grid.t_center() as f64 + 2.0 / c.grid.ht()).round() as usize;
    for sr in &series {
        let drift = relative_drift(sr, j_lo, j_hi);
        ok &= check(
            &format!("6: Q^-{} relative drift over [-2,2] <= 1e-6", sr.n),
            drift <= 1e-6,
            format!("drift = {:.3e}", drift),
        );
    }

    // f0^{-2} = 0 exactly at every node
    let ap = ApmFields::new(&c.soliton.a, 1.0).unwrap();
    let mut worst = 0.0f64;
    for j in (0..c.grid.nt()).step_by(97) {
        for i in (0..c.grid.nx()).step_by(89) {
            let f = f_kernel(&ap.node_jet(i, j), 1.0);
            worst = worst.max(f[1][0].norm());
        }
    }
    ok &= check("6: f0^-2 = 0 exactly", worst == 0.0, format!("max |f0^-2| = {worst:e}"));
    assert!(ok, "criterion 6 failed");
}

#[test]
fn criterion7_qid_first_order() {
    let started = Instant::now();
    let c = ctx();
    let q = qid_ctx();
    let mut ok = true;

    // plug-back residual of the first-order march
    let resid = first_order_plugback_residual(&c.soliton, &q.run.a1_field).unwrap();
    ok &= check(
        "7: plug-back residual <= 1e-3 relative",
        resid <= 1e-3,
        format!("residual = {:.3e}", resid),
    );

    // anomaly remainder scales at second order in eps
    let band_dev = |run: &abcore::qid::QidRun| -> f64 {
        let x = abcore::laxcurv::anomaly(&run.as_solution()).unwrap();
        let x1s = run.anomaly1.scale(Cpx::new(run.epsilon, 0.0));
        let d = x.sub(&x1s);
        let (nx, nt) = (c.grid.nx(), c.grid.nt());
        let mut worst = 0.0f64;
        for j in 2..nt - 2 {
            for i in 2..nx - 2 {
                if (1.0 + c.soliton.b.at(i, j).re) > 0.01 {
                    worst = worst.max(d.at(i, j).norm());
                }
            }
        }
        worst
    };
    let r1 = band_dev(&q.run);
    let run_half = qid_solution(
        &c.soliton,
        &QidConfig {
            epsilon: 0.05,
            ..Default::default()
        },
    )
    .unwrap();
    let r2 = band_dev(&run_half);
    let order = observed_order(r1, r2);
    ok &= check(
        "7: anomaly remainder eps-order >= 1.8",
        order >= 1.8,
        format!("order = {order:.2} ({r1:.3e} -> {r2:.3e})"),
    );

    // X^1 parity (jump band excluded)
    let par = anomaly1_parity(&q.run, c.grid);
    ok &= check(
        "7: X1 odd-parity ratio <= 1e-3",
        par.dominant == Dominant::Odd && par.ratio <= 1e-3,
        format!("{:?}, ratio = {:.3e}", par.dominant, par.ratio),
    );

    // charge balance: the continuity identity including the beta_M boundary
    // flux carried by the nonlocal tail of the deformed potential
    for rep in &q.report.balance {
        if rep.n == 2 {
            ok &= check(
                "7: Q^-2 flux vanishes identically",
                rep.max_flux == 0.0 && rep.mismatch == 0.0,
                format!("flux = {:.1e}", rep.max_flux),
            );
        }
        if rep.n == 1 || rep.n == 4 {
            ok &= check(
                &format!("7: Q^-{} balance (with boundary flux) <= 1e-2", rep.n),
                rep.relative_mismatch_with_boundary <= 1e-2,
                format!("relative mismatch = {:.3e}", rep.relative_mismatch_with_boundary),
            );
        }
    }

    // asymptotic conservation at first order for the even-parity bases
    for n in [1u32, 3, 4] {
        let st = q.report.asymptotic_first_order[&n];
        let pass = match st {
            AsymptoticStatus::TriviallyConserved => true,
            AsymptoticStatus::Ratio(r) => r <= 1e-3,
        };
        ok &= check(
            &format!("7: one_soliton |S|/R for n={n} <= 1e-3"),
            pass,
            format!("{st:?}"),
        );
    }
    let x1_2s = abcore::qid::anomaly_first_order(&c.two_sol.b)
        .unwrap()
        .scale(Cpx::new(0.1, 0.0));
    for n in [1u32, 3] {
        let st = asymptotic_conservation_with(&x1_2s, &c.two_sol, n, 1.0).unwrap();
        let pass = match st {
            AsymptoticStatus::TriviallyConserved => true,
            AsymptoticStatus::Ratio(r) => r <= 1e-3,
        };
        ok &= check(
            &format!("7: two_soliton |S|/R for n={n} <= 1e-3"),
            pass,
            format!("{st:?}"),
        );
    }

    // parity-breaking detection: a relative shift between the soliton
    // branches breaks space-time parity and loses protection
    let broken = two_soliton(c.grid, 1.1, 1.0, 1.0, 0.0).unwrap();
    let x1_broken = abcore::qid::anomaly_first_order(&broken.b)
        .unwrap()
        .scale(Cpx::new(0.1, 0.0));
    let st = asymptotic_conservation_with(&x1_broken, &broken, 3, 1.0).unwrap();
    let (pass, detail) = match st {
        AsymptoticStatus::Ratio(r) => (r > 1e-2, format!("|S|/R = {r:.3e}")),
        AsymptoticStatus::TriviallyConserved => (false, "trivially conserved".into()),
    };
    ok &= check("7: broken-parity counterexample |S|/R > 1e-2", pass, detail);

    let secs = started.elapsed().as_secs_f64();
    ok &= check("7: runtime <= 300 s", secs <= 300.0, format!("{secs:.1} s"));
    assert!(ok, "criterion 7 (first-order QID) failed");
}

#[test]
fn criterion7_literal_balance_and_counterexample() {
    // Two sub-checks stated in the original criterion are implemented here
    // verbatim and fail for verifiable structural reasons (details in the
    // assertion message).
    let c = ctx();
    let q = qid_ctx();
    let mut ok = true;

    for rep in &q.report.balance {
        if rep.n == 1 || rep.n == 3 {
            ok &= check(
                &format!(
                    "7-literal: Q^-{} balance without boundary flux <= 1e-2",
                    rep.n
                ),
                rep.relative_mismatch <= 1e-2,
                format!("relative mismatch = {:.3e}", rep.relative_mismatch),
            );
        }
    }

    let shifted = one_soliton(c.grid, 1.5, 1.0).unwrap();
    let x1s = abcore::qid::anomaly_first_order(&shifted.b)
        .unwrap()
        .scale(Cpx::new(0.1, 0.0));
    let st = asymptotic_conservation_with(&x1s, &shifted, 3, 1.0).unwrap();
    let (big, detail) = match st {
        AsymptoticStatus::Ratio(r) => (r > 0.1, format!("|S|/R = {r:.3e}")),
        AsymptoticStatus::TriviallyConserved => (false, "trivially conserved".into()),
    };
    ok &= check("7-literal: shifted one_soliton |S|/R = O(1)", big, detail);

    assert!(
        ok,
        "these literal sub-checks cannot pass: (a) the deformed potential's \
         nonlocal tail carries a beta_M boundary flux, so the bare rate-vs- \
         anomaly-flux comparison differs at O(eps) for n = 1 (restoring the \
         boundary term closes it to 1e-13), and the first-order pair's \
         dynamical residual is O(eps), whose gauge rotation contaminates the \
         Kernel at grade -3; (b) a shifted single soliton remains a pure \
         traveling wave, every x-line integral of its odd-in-theta flux \
         density cancels, and the charges stay conserved (|S|/R ~ 1e-7) -- \
         shift or no shift. Parity breaking requires a genuinely \
         two-dimensional input; the relative-shifted two-soliton in \
         criterion7_qid_first_order plays that role and is detected."
    );
}

#[test]
fn criterion7_verdicts() {
    let q = qid_ctx();
    let mut ok = true;
    ok &= check(
        "7: Q^-2 verdict LocallyConserved",
        q.report.verdicts[&2] == ChargeVerdict::LocallyConserved,
        format!("{:?}", q.report.verdicts[&2]),
    );
    for n in [1u32, 3] {
        ok &= check(
            &format!("7: Q^-{n} verdict not NotProtected"),
            q.report.verdicts[&n] != ChargeVerdict::NotProtected,
            format!("{:?}", q.report.verdicts[&n]),
        );
    }
    assert!(ok, "criterion 7 verdict checks failed");
}

#[test]
fn criterion8_figure_data() {
    let c = ctx();
    let dir = std::env::temp_dir().join("abdeform_acceptance_figures");
    let mut ok = true;
    for which in abdeform::figures::FIGURE_NAMES {
        let out = abdeform::figures::emit_figure(c.grid, which, &dir).unwrap();
        let csv = std::fs::read_to_string(&out.csv_path).unwrap();
        let lines = csv.lines().count();
        ok &= check(
            &format!("8: {which}.csv emitted with grid-sized series"),
            lines == c.grid.nx() + 1,
            format!("{lines} lines at {}", out.csv_path),
        );
        ok &= check(
            &format!("8: {which}.plot emitted"),
            std::fs::metadata(&out.plot_path).is_ok(),
            out.plot_path.clone(),
        );
        for (name, pass) in &out.checks {
            ok &= check(&format!("8: {which} check {name}"), *pass, String::new());
        }
    }
    assert!(ok, "criterion 8 failed");
}

#[test]
fn qid_two_soliton_correction_parity() {
    // criterion 8's automated parity check, asserted directly on the run
    let c = ctx();
    let run = qid_solution(
        &c.two_sol,
        &QidConfig {
            epsilon: 0.1,
            ..Default::default()
        },
    )
    .unwrap();
    let (_, _, rep) = parity_split(&run.a1_field, ParityKind::SpaceTime);
    let ok = check(
        "8: two_soliton A1 even-parity ratio <= 0.1",
        rep.ratio <= 0.1 && rep.even_norm >= rep.odd_norm,
        format!("ratio = {:.3e}", rep.ratio),
    );
    assert!(ok);
}

#[test]
fn cli_end_to_end() {
    // subcommand dispatch, exit codes and output determinism
    use std::process::Command;
    let exe = env!("CARGO_BIN_EXE_abdeform");
    let dir = std::env::temp_dir().join("abdeform_acceptance_cli");
    std::fs::create_dir_all(&dir).unwrap();

    // verify on a small grid fails the default tolerances (exit 1) but
    // passes once they are scaled to the resolution
    let json = dir.join("verify.json");
    let status = Command::new(exe)
        .args([
            "--grid", "10,5,401,201",
            "verify",
            "--solution", "one_soliton:g=1.5,d=0",
            "--lambda", "1,0",
            "--json", json.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    let status = Command::new(exe)
        .args([
            "--grid", "10,5,401,201",
            "--tol-scale", "100",
            "verify",
            "--solution", "one_soliton:g=1.5,d=0",
            "--lambda", "1,0",
            "--json", json.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    // nhd: classification is an answer, not a failure
    let njson = dir.join("nhd.json");
    let ncsv = dir.join("nhd.csv");
    let status = Command::new(exe)
        .args([
            "--grid", "10,5,401,201",
            "nhd",
            "--ansatz", "two_soliton",
            "--params", "a1=1.1,a2=1",
            "--csv", ncsv.to_str().unwrap(),
            "--json", njson.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&njson).unwrap()).unwrap();
    assert_eq!(parsed["classification"], "SingularDeformation");
    assert_eq!(parsed["schema"], 1);

    // unknown subcommand -> usage error (exit 2)
    let status = Command::new(exe).arg("bogus").status().unwrap();
    assert_eq!(status.code(), Some(2));
    // bad parameters -> exit 2
    let status = Command::new(exe)
        .args(["--grid", "10,5,400,201", "charges", "--solution", "one_soliton", "--csv", "/tmp/x.csv"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // determinism: identical invocations produce byte-identical CSV
    let c1 = dir.join("charges1.csv");
    let c2 = dir.join("charges2.csv");
    for p in [&c1, &c2] {
        let status = Command::new(exe)
            .args([
                "--grid", "10,2,201,41",
                "charges",
                "--solution", "one_soliton:g=1.5,d=0",
                "--n", "1,3",
                "--csv", p.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let b1 = std::fs::read(&c1).unwrap();
    let b2 = std::fs::read(&c2).unwrap();
    assert_eq!(b1, b2, "charge CSVs must be byte-identical across reruns");
}
