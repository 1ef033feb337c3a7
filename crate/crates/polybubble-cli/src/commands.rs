use polybubble::bubble::coeff_tables;
use polybubble::energy::{b3_b4_lattice_check, const_b1, const_b1_numeric, const_b2, energy_constants, EnergyConstants};
use polybubble::fit::loglog_slope;
use polybubble::lattice::{a1, a2, lattice_sum_cross, lattice_sum_same, zeta};
use polybubble::norms::{build_samples, star_norm, NormWeights, SyntheticCorrector};
use polybubble::pohozaev::{
    boundary_locality_check, pohozaev_exponent_identity, weighted_mass_check, whole_space_pohozaev_ratio, AxisBall,
    AxisymFunction, AxisymTerm,
};
use polybubble::quadrature::{integral_u2, integral_umstar_minus1};
use polybubble::reduced::{case1_t_star, degree_of_gradient, solve_sweep, DegreeRegion, SolveMode};
use polybubble::residual::{annulus_mass_study, nonlinear_estimate_check, residual_scaling_study, StudySetup};
use polybubble::{BalanceLaw, DoubledCircleConfig, Potential, SpaceParams};

use crate::config::RunConfig;
use crate::report::{Comparison, Report, Table};
use crate::CliError;

const DUAL_PATH_TOL: f64 = 1e-8;
const B1_TOL: f64 = 1e-5;
const B2_TOL: f64 = 1e-3;
const EXPONENT_TOL: f64 = 0.05;
const LATTICE_CONST_TOL: f64 = 1e-3;
const CONSISTENCY_TOL: f64 = 0.02;
const POHOZAEV_TOL: f64 = 1e-6;
const SAME_RATIO_TOL: f64 = 0.01;
const CROSS_RATIO_TOL: f64 = 0.02;
const SLOPE_TOL: f64 = 0.2;
const SCAN_MARGIN: f64 = 0.15;
const POSITION_TOL: f64 = 1e-3;
const T_STAR_TOL: f64 = 1e-6;
const SOLVE_TOL: f64 = 1e-9;
const CORRECTOR_TOL: f64 = 1e-12;
const SPREAD_LIMIT: f64 = 4.0;
const MASS_TOL: f64 = 1e-2;

fn nm(cfg: &RunConfig) -> String {
    format!("N={} m={}", cfg.sp.n, cfg.sp.m)
}

fn setup(cfg: &RunConfig) -> StudySetup {
    StudySetup { r0: cfg.r0, y0: cfg.y0.clone(), delta: cfg.delta, samples: cfg.samples, seed: cfg.seed }
}

fn table(name: &str, columns: &[&str], rows: Vec<Vec<String>>) -> Table {
    Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows }
}

pub fn constants(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let sp = &cfg.sp;
    let tag = nm(cfg);
    let tables = coeff_tables(sp)?;
    let product: i128 = (0..2 * sp.m as i128).map(|j| sp.n as i128 - 2 * sp.m as i128 + 2 * j).product();
    rep.check("P", &tag, sp.prefactor_exact() as f64, product as f64, 0.0, Comparison::Abs);
    rep.check("G(0,m)", &tag, tables.g(0, sp.m)? as f64, product as f64, 0.0, Comparison::Abs);

    let u2 = integral_u2(sp)?;
    rep.check("int_U2", format!("{tag} numeric vs closed"), u2.numeric, u2.closed, DUAL_PATH_TOL, Comparison::Rel);
    let up = integral_umstar_minus1(sp)?;
    rep.check("int_U_mstar_minus_1", format!("{tag} numeric vs closed"), up.numeric, up.closed, DUAL_PATH_TOL, Comparison::Rel);

    rep.check("B1", format!("{tag} d/dlambda quadrature vs closed"), const_b1_numeric(sp)?, const_b1(sp)?, B1_TOL, Comparison::Rel);
    let fit = const_b2(sp)?;
    let c = energy_constants(sp, cfg.r0)?;
    rep.check("B2", format!("{tag} fit vs analytic, rms {}", fit.rms), fit.b2, c.b2_analytic, B2_TOL, Comparison::Rel);
    let g = sp.gamma();
    rep.check("B2_exponent_d", &tag, fit.exp_d, -g, EXPONENT_TOL, Comparison::Abs);
    rep.check("B2_exponent_lambda", &tag, fit.exp_lambda, -(g + 1.0), EXPONENT_TOL, Comparison::Abs);

    let k = 4096usize;
    let same = DoubledCircleConfig::new(k, cfg.r0, cfg.lattice_h, vec![])?;
    let a1_exact = lattice_sum_same(g, &same)? * same.s().powf(g) / (k as f64).powf(g);
    rep.check("A1", format!("gamma={g} r={} k={k}", cfg.r0), a1_exact, a1(g, cfg.r0)?, LATTICE_CONST_TOL, Comparison::Rel);
    let h = (k as f64).powf(-0.5);
    let cross = DoubledCircleConfig::new(k, cfg.r0, h, vec![])?;
    let a2_exact = lattice_sum_cross(g, &cross)? * h.powf(g - 1.0) * cross.s() / k as f64;
    rep.check("A2", format!("gamma={g} r={} k={k} h={h}", cfg.r0), a2_exact, a2(g, cfg.r0)?, LATTICE_CONST_TOL, Comparison::Rel);

    let k = 2048usize;
    let rc = DoubledCircleConfig::new(k, cfg.r0, cfg.lattice_h, cfg.y0.clone())?;
    let tot = b3_b4_lattice_check(&rc, &c, sp)?;
    rep.check(
        "B3_B4_lattice",
        format!("k={k} h={}", rc.h_bar),
        tot.b3_term + tot.b4_term,
        tot.exact,
        CONSISTENCY_TOL,
        Comparison::Rel,
    );
    let small = DoubledCircleConfig::new(k, cfg.r0, (k as f64).powf(-0.5), cfg.y0.clone())?;
    let b4_term = c.b4 * k as f64 / (small.h_bar.powf(g - 1.0) * small.s());
    rep.check(
        "B4_cross",
        format!("k={k} h={}", small.h_bar),
        b4_term,
        c.b2 * lattice_sum_cross(g, &small)?,
        CONSISTENCY_TOL,
        Comparison::Rel,
    );
    let p = whole_space_pohozaev_ratio(sp)?;
    rep.check("pohozaev_ratio", &tag, p.ratio(), 1.0, POHOZAEV_TOL, Comparison::Abs);
    Ok(())
}

pub fn lattice(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let g = cfg.sp.gamma();
    let ks = &cfg.lattice_k;
    let (r, h_same) = (cfg.r0, cfg.lattice_h);
    let a1v = a1(g, r)?;
    let a2v = a2(g, r)?;
    let bound_c = 2.0 * zeta(g)? / 4f64.powf(g);
    let mut rows = Vec::new();
    let (mut dev_same, mut dev_cross) = (Vec::new(), Vec::new());
    for &k in ks {
        let kf = k as f64;
        let same = DoubledCircleConfig::new(k, r, h_same, vec![])?;
        let s_exact = lattice_sum_same(g, &same)?;
        let s_pred = a1v * kf.powf(g) / same.s().powf(g);
        let h = kf.powf(-0.5);
        let cross = DoubledCircleConfig::new(k, r, h, vec![])?;
        let c_exact = lattice_sum_cross(g, &cross)?;
        let c_pred = a2v * kf / (h.powf(g - 1.0) * cross.s());
        rep.check("same_ratio", format!("k={k} h={h_same}"), s_exact / s_pred, 1.0, SAME_RATIO_TOL, Comparison::Abs);
        rep.check("cross_ratio", format!("k={k} h={h}"), c_exact / c_pred, 1.0, CROSS_RATIO_TOL, Comparison::Abs);
        rep.check(
            "same_bound",
            format!("k={k} h={h_same}"),
            s_exact * (r * same.s()).powf(g) / kf.powf(g),
            bound_c,
            0.0,
            Comparison::AtMost,
        );
        dev_same.push((s_exact / s_pred - 1.0).abs());
        dev_cross.push((c_exact / c_pred - 1.0).abs());
        rows.push(vec![
            k.to_string(),
            h_same.to_string(),
            s_exact.to_string(),
            s_pred.to_string(),
            (s_exact / s_pred).to_string(),
            h.to_string(),
            c_exact.to_string(),
            c_pred.to_string(),
            (c_exact / c_pred).to_string(),
        ]);
    }
    if ks.len() >= 3 {
        let kf: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
        let sc = loglog_slope(&kf, &dev_cross)?.slope;
        rep.check("cross_deviation_slope", "h = k^-1/2", sc, -1.0, SLOPE_TOL, Comparison::Abs);
        if dev_same.iter().all(|d| *d > 0.0) {
            let ss = loglog_slope(&kf, &dev_same)?.slope;
            rep.check("same_deviation_slope", format!("h={h_same}"), ss, -1.0, SLOPE_TOL, Comparison::AtMost);
        }
    }
    rep.tables.push(table(
        "table",
        &["k", "h_same", "same_exact", "same_predicted", "same_ratio", "h_cross", "cross_exact", "cross_predicted", "cross_ratio"],
        rows,
    ));
    Ok(())
}

pub fn residual_scan(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let cells = cfg.cells()?;
    let st = residual_scaling_study(&cfg.rp, &cfg.sp, &cfg.potential, &cells, &setup(cfg))?;
    let rows = st
        .rows
        .iter()
        .map(|r| {
            vec![r.k.to_string(), r.lambda.to_string(), r.h_bar.to_string(), r.norm.to_string(), st.slope.to_string(), r.flagged.to_string()]
        })
        .collect();
    rep.tables.push(table("scan", &["k", "lambda", "h_bar", "ek_norm", "slope", "flagged"], rows));
    let flagged = st.rows.iter().filter(|r| r.flagged).count();
    rep.check("fd_flagged_rows", format!("{} cells", st.rows.len()), flagged as f64, 0.0, 0.0, Comparison::Abs);
    rep.check(
        "ek_slope",
        format!("{} case {} potential {}", nm(cfg), cfg.rp.case_id(), cfg.potential.name()),
        st.slope,
        st.bound,
        SCAN_MARGIN,
        Comparison::AtMost,
    );
    Ok(())
}

/// Root of `-B1 V t^{-(2m+1)} + C t^{-e}` for the two-term balance laws.
fn closed_form_t(law: BalanceLaw, v: f64, c: &EnergyConstants, sp: &SpaceParams) -> Option<f64> {
    let g = sp.gamma();
    let (coef, e) = match law {
        BalanceLaw::Collapsing { m1 } => return Some(case1_t_star(m1, v, c, sp)),
        BalanceLaw::Separated { a } => (c.b3 * (1.0 - a * a).powf(-g / 2.0), g + 1.0),
        BalanceLaw::Vanishing => (c.b3, g + 1.0),
        BalanceLaw::Critical { .. } => return None,
    };
    Some((coef / (c.b1 * v)).powf(1.0 / (e - 2.0 * sp.mf() - 1.0)))
}

/// Degree of the gradient at a nondegenerate critical point with `q` negative
/// Hessian directions in dimension `d`: `(-1)^q`.
fn predicted_degree(v: &Potential, dim: usize) -> Option<i32> {
    let q = match v {
        Potential::GaussianWell { .. } => 0,
        Potential::Saddle { .. } => 1,
        Potential::GaussianBump { .. } => dim,
        Potential::Constant { .. } | Potential::PowerLaw { .. } => return None,
    };
    Some(if q % 2 == 0 { 1 } else { -1 })
}

pub fn solve(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let ks = cfg.sweep()?;
    let sp = cfg.sp;
    let c = energy_constants(&sp, cfg.r0)?;
    let critical = cfg.potential.declared_critical_point(sp.m);
    let mode = if critical.is_some() { SolveMode::Full } else { SolveMode::FrozenPosition };
    let states = solve_sweep(ks, cfg.rp, &cfg.potential, sp, &c, mode, (cfg.t0, cfg.init_r, &cfg.init_y))?;
    let mut rows = Vec::new();
    for st in &states {
        let y: Vec<String> = st.y2_bar.iter().map(|v| v.to_string()).collect();
        rows.push(vec![
            st.k.to_string(),
            st.t.to_string(),
            st.lambda.to_string(),
            st.r_bar.to_string(),
            y.join(";"),
            st.h_bar.map_or("NaN".into(), |h| h.to_string()),
            st.residual_norm.to_string(),
            st.iterations.to_string(),
            st.converged.to_string(),
            st.used_bisection.to_string(),
            st.jacobian_cond.to_string(),
        ]);
        rep.check("residual", format!("k={}", st.k), st.residual_norm, 0.0, SOLVE_TOL, Comparison::AtMost);
        rep.nonconverged |= !st.converged;
        if let Some((rc, yc)) = &critical {
            let dist = std::iter::once(st.r_bar - rc).chain(st.y2_bar.iter().zip(yc).map(|(a, b)| a - b)).fold(0.0f64, |m, d| m.max(d.abs()));
            rep.check("position_error", format!("k={}", st.k), dist, 0.0, POSITION_TOL, Comparison::Abs);
        }
        if let Potential::Constant { v0 } = &cfg.potential {
            if let Some(t_star) = closed_form_t(cfg.rp.balance_law(), *v0, &c.at_r_bar(st.r_bar, &sp)?, &sp) {
                rep.check("t_star", format!("k={} closed form", st.k), st.t, t_star, T_STAR_TOL, Comparison::Rel);
            }
        }
    }
    rep.tables.push(table(
        "trajectory",
        &["k", "t", "lambda", "r_bar", "y2_bar", "h_bar", "residual", "iterations", "converged", "bisection", "jacobian_cond"],
        rows,
    ));
    if let Some((rc, yc)) = critical {
        let dim = sp.n - 2;
        let region = DegreeRegion {
            center: std::iter::once(rc).chain(yc).collect(),
            radius: cfg.degree_radius,
            segments: cfg.degree_segments,
        };
        let d = degree_of_gradient(&cfg.potential, &region, sp.m)?;
        let predicted = predicted_degree(&cfg.potential, dim).unwrap_or(0);
        rep.check("degree", format!("{} dim={dim}", cfg.potential.name()), d as f64, predicted as f64, 0.0, Comparison::Abs);
    }
    Ok(())
}

/// Two axisymmetric pairs, each compared with a copy changed only inside the ball.
fn locality_pairs(m: usize) -> Vec<(Vec<AxisymTerm>, Vec<AxisymTerm>, AxisymTerm, AxisymTerm)> {
    vec![
        (
            vec![AxisymTerm::AxisBubble { z0: -0.4, lambda: 1.5, amp: 1.0 }],
            vec![
                AxisymTerm::RadialPoly { zc: 0.5, coeffs: vec![0.3, -0.2, 0.05, 0.01], support: None },
                AxisymTerm::AxisBubble { z0: 1.6, lambda: 0.8, amp: 0.5 },
            ],
            AxisymTerm::compact_bump(0.2, 0.6, 2 * m + 6, 0.7),
            AxisymTerm::compact_bump(0.2, 0.5, 2 * m + 5, -0.4),
        ),
        (
            vec![AxisymTerm::RadialPoly { zc: -0.1, coeffs: vec![1.0, 0.4, -0.1], support: None }],
            vec![AxisymTerm::AxisBubble { z0: 0.9, lambda: 2.0, amp: 0.3 }],
            AxisymTerm::compact_bump(0.3, 0.55, 2 * m + 5, 1.2),
            AxisymTerm::compact_bump(0.1, 0.6, 2 * m + 7, 0.25),
        ),
    ]
}

pub fn pohozaev(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let sp = cfg.sp;
    let tag = nm(cfg);
    let p = whole_space_pohozaev_ratio(&sp)?;
    rep.check("pohozaev_ratio", format!("{tag} energy form"), p.ratio(), 1.0, POHOZAEV_TOL, Comparison::Abs);
    rep.check("pohozaev_ratio_direct", format!("{tag} polylaplacian form"), p.ratio_direct(), 1.0, POHOZAEV_TOL, Comparison::Abs);
    let e = pohozaev_exponent_identity(&sp);
    rep.check("exponent_identity", &tag, *e.numer() as f64 / *e.denom() as f64, 0.0, 0.0, Comparison::Abs);
    let ball = AxisBall { zc: 0.2, radius: 1.0 };
    for (i, (u, v, bu, bv)) in locality_pairs(sp.m).into_iter().enumerate() {
        let u1 = AxisymFunction::new(u.clone(), &sp)?;
        let v1 = AxisymFunction::new(v.clone(), &sp)?;
        let u2 = AxisymFunction::new([u, vec![bu]].concat(), &sp)?;
        let v2 = AxisymFunction::new([v, vec![bv]].concat(), &sp)?;
        let chk = boundary_locality_check((&u1, &v1), (&u2, &v2), ball, &sp)?;
        let inputs = format!("pair {} ball z={} R={}", i + 1, ball.zc, ball.radius);
        rep.check("locality_L2", inputs.clone(), chk.second.l2, chk.first.l2, POHOZAEV_TOL, Comparison::Rel);
        rep.check("locality_L1_corrected", inputs, chk.second.l1_corrected, chk.first.l1_corrected, POHOZAEV_TOL, Comparison::Rel);
    }
    if sp.n > 4 * sp.m {
        let k = cfg.k_values.as_ref().and_then(|v| v.first().copied()).unwrap_or(3);
        let lam = cfg.rp.lambda_for(cfg.t0, k, &sp).max(1e4);
        let a = setup(cfg).ansatz(k, lam, &cfg.rp, &sp)?;
        let r0 = cfg.r0;
        let h = move |r: f64, _: &[f64]| 1.0 + 0.5 * (r - r0);
        let w = weighted_mass_check(h, &a, cfg.r0, &cfg.y0, cfg.rho, cfg.mc_samples, cfg.seed)?;
        rep.check(
            "weighted_mass",
            format!("k={k} lambda={lam} rho={} n={}", cfg.rho, cfg.mc_samples),
            w.ratio(),
            1.0,
            MASS_TOL,
            Comparison::Abs,
        );
    }
    Ok(())
}

pub fn norms(cfg: &RunConfig, rep: &mut Report) -> Result<(), CliError> {
    let sp = cfg.sp;
    let st = setup(cfg);
    let k = cfg.k_values.as_ref().and_then(|v| v.first().copied()).unwrap_or(3);
    let lam = cfg.rp.lambda_for(cfg.t0, k, &sp);
    let a = st.ansatz(k, lam, &cfg.rp, &sp)?;
    let tau = cfg.rp.tau(&sp);
    let w = NormWeights::for_ansatz(&a, tau);
    let samples = build_samples(&a, st.r0, &st.y0, st.delta, st.samples, st.seed)?;
    for &eps in &cfg.eps_list {
        let phi = SyntheticCorrector::new(eps, w.clone());
        let n = star_norm(|y| phi.value(y), &w, &samples)?;
        rep.check("corrector_star_norm", format!("k={k} lambda={lam} eps={eps}"), n, eps, CORRECTOR_TOL, Comparison::Rel);
    }
    let chk = nonlinear_estimate_check(&a, tau, &cfg.eps_list, &st)?;
    let mut rows: Vec<Vec<String>> =
        chk.rows.iter().map(|r| vec![r.eps.to_string(), r.norm.to_string(), r.ratio.to_string()]).collect();
    rows.sort_by(|x, y| x[0].cmp(&y[0]));
    rep.tables.push(table("nonlinear", &["eps", "n_phi_norm", "ratio"], rows));
    rep.check(
        "nonlinear_spread",
        format!("k={k} exponent={}", chk.exponent),
        chk.spread,
        SPREAD_LIMIT,
        0.0,
        Comparison::AtMost,
    );
    let lambdas = [1e3, 1e4, 1e5, 1e6];
    let mass = annulus_mass_study(k, &lambdas, &cfg.rp, &sp, &st, cfg.mc_samples)?;
    rep.check("annulus_mass_slope", format!("k={k} lambda 1e3..1e6"), mass.slope, mass.bound, SCAN_MARGIN, Comparison::AtMost);
    Ok(())
}
