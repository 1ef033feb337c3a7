//! Property tests for the invariants: scale covariance, the polyharmonic
//! identity, moving-bubble derivative bounds, configuration symmetry, lattice
//! monotonicity and bounds, balance monotonicity, the nonlinearity bound,
//! solver covariance and degree invariance.

use std::sync::OnceLock;

use polybubble::bubble::{bubble_dlambda, bubble_value, polylaplacian_bubble};
use polybubble::config::{moving_bubble_dlambda, reflect, rotate, same_point_set};
use polybubble::energy::{energy_constants, EnergyConstants};
use polybubble::lattice::{lattice_sum_same, zeta};
use polybubble::reduced::{case1_t_star, degree_of_gradient, normalized_balance, DegreeRegion, ReducedSystem, SolveMode};
use polybubble::residual::n_phi_pointwise;
use polybubble::{BalanceLaw, Bubble, BubbleKernel, DoubledCircleConfig, Potential, Regime, RegimeParams, SpaceParams};
use proptest::prelude::*;

fn admissible() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4).prop_flat_map(|m| ((2 * m + 1)..=20usize, Just(m)))
}

fn consts61() -> &'static EnergyConstants {
    static C: OnceLock<EnergyConstants> = OnceLock::new();
    C.get_or_init(|| energy_constants(&SpaceParams::pipeline(6, 1, 0.5).unwrap(), 1.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bubble_scale_covariance((n, m) in admissible(), lam in 0.01f64..1e3, q in 1e-3f64..1e3, l in 0usize..=4) {
        let sp = SpaceParams::new(n, m).unwrap();
        let k = BubbleKernel::new(&sp).unwrap();
        let l = l.min(m);
        let half = sp.half_gamma();
        let r = q / lam;
        let u = k.value(r, lam);
        let u1 = k.value(q, 1.0);
        prop_assert!((u / (lam.powf(half) * u1) - 1.0).abs() < 1e-12);
        let d = k.polylap(l, r, lam).unwrap();
        let d1 = k.polylap(l, q, 1.0).unwrap();
        if d1 != 0.0 {
            prop_assert!((d / (lam.powf(half + 2.0 * l as f64) * d1) - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn polyharmonic_identity((n, m) in admissible(), lam in 0.1f64..10.0, q in 1e-3f64..1e3, seed in 0u64..1000) {
        let sp = SpaceParams::new(n, m).unwrap();
        let mut y = vec![0.0; n];
        y[(seed as usize) % n] = q / lam;
        let b = Bubble::new(vec![0.0; n], lam).unwrap();
        let lhs = polylaplacian_bubble(m, &y, &b, &sp).unwrap();
        let rhs = bubble_value(&y, &b, &sp).powf(sp.p());
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn dlambda_second_order((n, m) in admissible(), lam in 0.5f64..5.0, q in 0.01f64..20.0) {
        let sp = SpaceParams::new(n, m).unwrap();
        let mut y = vec![0.0; n];
        y[0] = q / lam;
        let an = bubble_dlambda(&y, &Bubble::new(vec![0.0; n], lam).unwrap(), &sp);
        let fd = |h: f64| {
            (bubble_value(&y, &Bubble::new(vec![0.0; n], lam + h).unwrap(), &sp)
                - bubble_value(&y, &Bubble::new(vec![0.0; n], lam - h).unwrap(), &sp))
                / (2.0 * h)
        };
        let e1 = (fd(1e-2 * lam) - an).abs();
        let e2 = (fd(5e-3 * lam) - an).abs();
        let scale = bubble_value(&y, &Bubble::new(vec![0.0; n], lam).unwrap(), &sp) / lam;
        // halving h cuts the error by ~4, or both are at rounding level
        prop_assert!(e2 < 0.3 * e1 || e1 < 1e-9 * scale, "e1={e1} e2={e2}");
    }

    #[test]
    fn moving_bubble_derivative_bound(
        case in 0usize..2,
        log_lam in 2.0f64..6.0,
        j in 1usize..=5,
        upper in any::<bool>(),
        q in 0.0f64..50.0,
        dir in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let sp = SpaceParams::pipeline(6, 1, 0.5).unwrap();
        let (rp, beta, coef) = if case == 0 {
            (RegimeParams::new(Regime::Case1 { m1: 2.0 }, 0.25, 4.0, 0.25).unwrap(), sp.beta1(), 2.0)
        } else {
            (RegimeParams::new(Regime::Case3 { m2: 1.0, a_const: None }, 0.25, 4.0, 0.25).unwrap(), sp.beta2(), 1.0)
        };
        let lam = 10f64.powf(log_lam);
        let (k, r_bar) = (5, 1.0);
        let cfg = rp.config(k, lam, r_bar, vec![0.0; 3], &sp).unwrap();
        prop_assume!(cfg.s() > 0.0 && cfg.h_bar > 0.0);
        let ratio_sh = if case == 0 { cfg.s() / cfg.h_bar } else { cfg.h_bar / cfg.s() };
        prop_assume!(ratio_sh <= 1.0);
        let x = cfg.point(j, upper);
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let y: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + q / lam * di / norm).collect();
        let d = moving_bubble_dlambda(&y, j, upper, lam, r_bar, &[0.0; 3], k, &rp, &sp).unwrap();
        let u = bubble_value(&y, &Bubble::new(x, lam).unwrap(), &sp);
        // |d_lambda U| <= e U / lambda, |grad_x U| <= e lambda U and the centre
        // speed is at most 2 r_bar beta M / lambda^{1+beta} while s/h (case 1)
        // or h/s (case 3) stays below 1
        let e = sp.half_gamma();
        let c_frozen = e * (1.0 + 2.0 * r_bar * beta * coef);
        prop_assert!(d.abs() <= c_frozen * u * lam.powf(-beta) * (1.0 + 1e-12), "ratio {}", d.abs() / (u * lam.powf(-beta)));
    }

    #[test]
    fn configuration_symmetry(k in 2usize..40, r in 0.2f64..3.0, h in 0.01f64..0.999, y2 in prop::collection::vec(-1.0f64..1.0, 0..4)) {
        let cfg = DoubledCircleConfig::new(k, r, h, y2).unwrap();
        let pts = cfg.points();
        let rot: Vec<Vec<f64>> = pts.iter().map(|p| rotate(p, k)).collect();
        let refl: Vec<Vec<f64>> = pts.iter().map(|p| reflect(p)).collect();
        prop_assert!(same_point_set(&pts, &rot, 1e-12));
        prop_assert!(same_point_set(&pts, &refl, 1e-12));
        for p in &pts {
            let first3 = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            prop_assert!((first3 - r).abs() < 1e-12 * r.max(1.0));
            prop_assert!((p[2].abs() - r * h).abs() < 1e-12);
        }
    }

    #[test]
    fn lattice_same_monotone(k in 2usize..200, g in 1.5f64..12.0, r in 0.2f64..3.0, h in 0.01f64..0.95, dr in 0.01f64..0.5, dh in 0.01f64..0.04) {
        let base = lattice_sum_same(g, &DoubledCircleConfig::new(k, r, h, vec![]).unwrap()).unwrap();
        let bigger_r = lattice_sum_same(g, &DoubledCircleConfig::new(k, r + dr, h, vec![]).unwrap()).unwrap();
        // larger h means smaller sqrt(1 - h^2)
        let bigger_h = lattice_sum_same(g, &DoubledCircleConfig::new(k, r, h + dh, vec![]).unwrap()).unwrap();
        prop_assert!(bigger_r < base);
        prop_assert!(bigger_h > base);
    }

    #[test]
    fn normalized_balance_decreasing(t1 in 0.1f64..10.0, dt in 1e-3f64..5.0, v in 0.1f64..10.0, law in 0usize..4) {
        let sp = SpaceParams::pipeline(6, 1, 0.5).unwrap();
        let c = consts61();
        let law = [
            BalanceLaw::Collapsing { m1: 2.0 },
            BalanceLaw::Separated { a: 0.5 },
            BalanceLaw::Vanishing,
            BalanceLaw::Critical { a_const: 1.0 },
        ][law];
        prop_assert!(normalized_balance(t1 + dt, v, law, c, &sp) < normalized_balance(t1, v, law, c, &sp));
    }

    #[test]
    fn nonlinearity_bound(z in 0.0f64..10.0, phi in -20.0f64..20.0, nm in 0usize..4) {
        let (n, m) = [(6, 1), (10, 1), (10, 2), (14, 3)][nm];
        let p = SpaceParams::new(n, m).unwrap().p();
        let nv = n_phi_pointwise(z, phi, p).abs();
        let bound = if p >= 2.0 {
            p * (p - 1.0) / 2.0 * (z + phi.abs()).powf(p - 2.0) * phi * phi
        } else {
            phi.abs().powf(p)
        };
        prop_assert!(nv <= bound * (1.0 + 1e-9) + 1e-300, "N={nv} bound={bound} p={p}");
    }
}

#[test]
fn lattice_same_bound_over_k_sweep() {
    // sin x >= 2x/pi on [0, pi/2] bounds the two-sided sum by 2 zeta(g) (k/(4 r s))^g
    for g in [1.5, 4.0, 6.0] {
        let c = 2.0 * zeta(g).unwrap() / 4f64.powf(g);
        let mut k = 8;
        while k <= 4096 {
            for (r, h) in [(1.0, 0.05), (0.5, 0.6), (2.0, 0.95)] {
                let cfg = DoubledCircleConfig::new(k, r, h, vec![]).unwrap();
                let sum = lattice_sum_same(g, &cfg).unwrap();
                assert!(sum <= c * (k as f64).powf(g) / (r * cfg.s()).powf(g), "g={g} k={k}");
            }
            k *= 2;
        }
    }
}

#[test]
fn balance_has_one_sign_change_in_window() {
    let sp = SpaceParams::pipeline(6, 1, 0.5).unwrap();
    let c = consts61();
    let law = BalanceLaw::Collapsing { m1: 2.0 };
    let grid: Vec<f64> = (0..=2000).map(|i| 0.25 + 3.75 * i as f64 / 2000.0).collect();
    let signs: Vec<bool> = grid.iter().map(|&t| normalized_balance(t, 1.0, law, c, &sp) > 0.0).collect();
    assert_eq!(signs.windows(2).filter(|w| w[0] != w[1]).count(), 1);
}

#[test]
fn solve_covariant_under_potential_scaling() {
    let sp = SpaceParams::pipeline(6, 1, 0.5).unwrap();
    let c = consts61().clone();
    let rp = RegimeParams::new(Regime::Case1 { m1: 2.0 }, 0.1, 8.0, 0.25).unwrap();
    let y0 = vec![0.0; 3];
    let well = Potential::gaussian_well(2.0, 1.0, y0.clone(), 0.5, 0.5, 1).unwrap();
    let solve = |v: &Potential| {
        ReducedSystem::new(6, rp, v.clone(), sp, c.clone(), 1.0, &y0)
            .unwrap()
            .solve(SolveMode::Full, 1.0, 1.05, &[0.02, -0.02, 0.0])
            .unwrap()
    };
    let base = solve(&well);
    assert!(base.converged);
    for scale in [0.5, 2.0] {
        let s = solve(&well.scaled(scale));
        assert!(s.converged, "c={scale}");
        let predicted = base.t * scale.powf(-1.0 / sp.iota);
        assert!((s.t / predicted - 1.0).abs() < 1e-6, "c={scale}: {} vs {predicted}", s.t);
        assert!((s.r_bar - base.r_bar).abs() < 1e-8);
        let closed = case1_t_star(2.0, well.scaled(scale).value(1.0, &y0), &c.at_r_bar(1.0, &sp).unwrap(), &sp);
        assert!((s.t / closed - 1.0).abs() < 1e-6);
    }
}

#[test]
fn degree_invariant_under_refinement_and_scaling() {
    let presets = [
        Potential::gaussian_well(1.0, 1.0, vec![0.0], 0.5, 0.5, 1).unwrap(),
        Potential::GaussianBump { v0: 1.0, r0: 1.0, y0: vec![0.0], width: 0.5 },
        Potential::Saddle { v0: 1.0, r0: 1.0, y0: vec![0.0], kappa: 0.5, m: 1 },
    ];
    for v in &presets {
        let (r_c, y_c) = v.declared_critical_point(1).unwrap();
        let mut seen = Vec::new();
        for segments in [64, 256, 1024] {
            for scale in [1.0, 0.3, 7.0] {
                let region = DegreeRegion { center: vec![r_c, y_c[0]], radius: 0.15, segments };
                seen.push(degree_of_gradient(&v.scaled(scale), &region, 1).unwrap());
            }
        }
        assert!(seen.iter().all(|d| *d == seen[0] && d.abs() == 1), "{}: {seen:?}", v.name());
    }
}
