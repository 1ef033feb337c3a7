//! Energy-expansion constants `B1..B4` and the `lambda`-derivative of the
//! reduced energy.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use crate::bubble::BubbleKernel;
use crate::config::DoubledCircleConfig;
use crate::error::{Error, Result};
use crate::fit::lstsq;
use crate::lattice::{a1, a2, lattice_sum_cross, lattice_sum_same};
use crate::params::SpaceParams;
use crate::quadrature::{
    axisym_integral, integral_u2_closed, integral_up_closed, radial_integral_with, AxisymOptions, Tolerance,
};

/// `B1 = m int U_{0,1}^2` (closed form).
pub fn const_b1(sp: &SpaceParams) -> Result<f64> {
    Ok(sp.mf() * integral_u2_closed(sp)?)
}

/// `B1` as `-(1/2) d/dlambda int U_{0,lambda}^2` at `lambda = 1`, with the
/// integrals done by quadrature and the derivative by central differences.
pub fn const_b1_numeric(sp: &SpaceParams) -> Result<f64> {
    let k = BubbleKernel::new(sp)?;
    let i = |lam: f64| {
        radial_integral_with(|r| k.value(r, lam).powi(2), sp.n, 1.0 / lam, &[], Tolerance::rel(1e-13))
            .require("int U_lambda^2")
    };
    let eps = 1e-3;
    Ok(-0.5 * (i(1.0 + eps)? - i(1.0 - eps)?) / (2.0 * eps))
}

/// `J(d, lambda) = (m*-1) int U_{0,lambda}^{m*-2} dU_{0,lambda}/dlambda U_{d e_3, lambda}`
/// by nested axisymmetric quadrature about the separation axis.
pub fn j_interaction(d: f64, lambda: f64, sp: &SpaceParams) -> Result<f64> {
    let k = BubbleKernel::new(sp)?;
    let p = sp.p();
    let g = |z: f64, rho: f64| {
        let r1 = (z * z + rho * rho).sqrt();
        let r2 = ((z - d) * (z - d) + rho * rho).sqrt();
        let u1 = k.value(r1, lambda);
        p * u1.powf(p - 1.0) * k.dlambda(r1, lambda) * k.value(r2, lambda)
    };
    let opts = AxisymOptions {
        z_breaks: vec![0.0, 0.5 * d, d],
        scale: 1.0 / lambda,
        outer: Tolerance { abs: 0.0, rel: 1e-9, max_intervals: 2000 },
        inner: Tolerance { abs: 0.0, rel: 1e-11, max_intervals: 2000 },
    };
    let r = axisym_integral(g, sp.n, &opts)?;
    r.require("J(d, lambda)")
}

/// Leading coefficient of `J` derived from `U_{d e_3}(y) ~ U_{d e_3}(0)` near the origin:
/// `B2 = ((N-2m)/2) P^{(N-2m)/(4m)} int U_{0,1}^{m*-1}`.
pub fn const_b2_analytic(sp: &SpaceParams) -> f64 {
    sp.half_gamma() * sp.amplitude() * integral_up_closed(sp)
}

/// Separations and scales used for the `B2` fit (all with `lambda d >= 50`).
pub const B2_FIT_D: [f64; 3] = [0.5, 1.0, 2.0];
pub const B2_FIT_LAMBDA: [f64; 3] = [100.0, 200.0, 400.0];
/// RMS log-residual above which the fit is flagged.
pub const B2_FIT_RMS_LIMIT: f64 = 1e-2;

/// `B2` from the power-law fit `J ~ -B2 lambda^{-a_lambda} d^{-a_d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct B2Fit {
    /// `-J lambda^{N-2m+1} d^{N-2m}` at the largest `lambda d` on the grid.
    pub b2: f64,
    /// Fitted exponent in `d` (expected `-(N-2m)`).
    pub exp_d: f64,
    /// Fitted exponent in `lambda` (expected `-(N-2m+1)`).
    pub exp_lambda: f64,
    /// RMS residual of `log(-J)`.
    pub rms: f64,
    pub flagged: bool,
    /// `(d, lambda, J)` samples.
    pub samples: Vec<(f64, f64, f64)>,
}

/// Fit `B2` and its exponents from `J` on the default grid.
pub fn const_b2(sp: &SpaceParams) -> Result<B2Fit> {
    sp.validate_pipeline()?;
    let cells: Vec<(f64, f64)> = B2_FIT_D.iter().flat_map(|&d| B2_FIT_LAMBDA.iter().map(move |&l| (d, l))).collect();
    use rayon::prelude::*;
    let js: Vec<Result<f64>> = cells.par_iter().map(|&(d, l)| j_interaction(d, l, sp)).collect();
    let mut samples = Vec::with_capacity(cells.len());
    for (&(d, l), j) in cells.iter().zip(js) {
        let j = j?;
        if !(j < 0.0) {
            return Err(Error::Precondition(format!("J({d}, {l}) = {j} is not negative")));
        }
        samples.push((d, l, j));
    }
    let rows: Vec<Vec<f64>> = samples.iter().map(|&(d, l, _)| vec![1.0, d.ln(), l.ln()]).collect();
    let b: Vec<f64> = samples.iter().map(|&(_, _, j)| (-j).ln()).collect();
    let (c, rms) = lstsq(&rows, &b)?;
    let g = sp.gamma();
    let &(d, l, j) = samples
        .iter()
        .max_by(|a, b| (a.0 * a.1).total_cmp(&(b.0 * b.1)))
        .expect("non-empty grid");
    Ok(B2Fit {
        b2: -j * l.powf(g + 1.0) * d.powf(g),
        exp_d: c[1],
        exp_lambda: c[2],
        rms,
        flagged: rms > B2_FIT_RMS_LIMIT,
        samples,
    })
}

/// All energy constants at a given `r_bar`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyConstants {
    pub b1: f64,
    pub b1_numeric: f64,
    pub b2: f64,
    pub b2_analytic: f64,
    pub b2_fit: B2Fit,
    pub b3: f64,
    pub b4: f64,
    pub r_bar: f64,
}

impl EnergyConstants {
    /// Same `B1`, `B2` with `B3`, `B4` recomputed at a new `r_bar`.
    pub fn at_r_bar(&self, r_bar: f64, sp: &SpaceParams) -> Result<Self> {
        let (b3, b4) = const_b3_b4(self.b2, r_bar, sp)?;
        Ok(Self { b3, b4, r_bar, ..self.clone() })
    }
}

type BaseEntry = (f64, f64, B2Fit);

fn base_cache() -> &'static RwLock<HashMap<(usize, usize), BaseEntry>> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, usize), BaseEntry>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `B3 = B2 A1(r_bar)`, `B4 = B2 A2(r_bar)`.
pub fn const_b3_b4(b2: f64, r_bar: f64, sp: &SpaceParams) -> Result<(f64, f64)> {
    let g = sp.gamma();
    Ok((b2 * a1(g, r_bar)?, b2 * a2(g, r_bar)?))
}

/// Energy constants for `(N, m)` at `r_bar`. `B1` and the `B2` fit depend only
/// on `(N, m)` and are cached; `B3`, `B4` are closed forms in `r_bar` and are
/// recomputed every call.
pub fn energy_constants(sp: &SpaceParams, r_bar: f64) -> Result<EnergyConstants> {
    sp.validate_pipeline()?;
    let key = (sp.n, sp.m);
    let cached = base_cache().read().expect("cache lock").get(&key).cloned();
    let (b1, b1_numeric, fit) = match cached {
        Some(e) => e,
        None => {
            let e = (const_b1(sp)?, const_b1_numeric(sp)?, const_b2(sp)?);
            base_cache().write().expect("cache lock").insert(key, e.clone());
            e
        }
    };
    let b2 = fit.b2;
    let (b3, b4) = const_b3_b4(b2, r_bar, sp)?;
    Ok(EnergyConstants { b1, b1_numeric, b2, b2_analytic: const_b2_analytic(sp), b2_fit: fit, b3, b4, r_bar })
}

/// Leading expansion of `dI/dlambda`:
/// `2k(-B1 V lambda^{-(2m+1)} + B3 k^g lambda^{-(g+1)} s^{-g} + B4 k lambda^{-(g+1)} h^{-(g-1)} s^{-1})`
/// with `g = N-2m`, `s = sqrt(1-h^2)`.
pub fn di_dlambda_expansion(lambda: f64, k: usize, h_bar: f64, v: f64, c: &EnergyConstants, sp: &SpaceParams) -> f64 {
    let g = sp.gamma();
    let kf = k as f64;
    let s = (1.0 - h_bar * h_bar).sqrt();
    let lg = lambda.powf(-(g + 1.0));
    2.0 * kf
        * (-c.b1 * v * lambda.powf(-(2.0 * sp.mf() + 1.0))
            + c.b3 * kf.powf(g) * lg / s.powf(g)
            + c.b4 * kf * lg / (h_bar.powf(g - 1.0) * s))
}

/// Exact `B2`-weighted interaction sum against the `B3`/`B4` leading terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConsistency {
    pub exact: f64,
    pub b3_term: f64,
    pub b4_term: f64,
    pub rel_err: f64,
}

pub fn b3_b4_lattice_check(cfg: &DoubledCircleConfig, c: &EnergyConstants, sp: &SpaceParams) -> Result<LatticeConsistency> {
    let g = sp.gamma();
    let c = c.at_r_bar(cfg.r_bar, sp)?;
    let exact = c.b2 * (lattice_sum_same(g, cfg)? + lattice_sum_cross(g, cfg)?);
    let kf = cfg.k as f64;
    let b3_term = c.b3 * kf.powf(g) / cfg.s().powf(g);
    let b4_term = c.b4 * kf / (cfg.h_bar.powf(g - 1.0) * cfg.s());
    Ok(LatticeConsistency { exact, b3_term, b4_term, rel_err: ((b3_term + b4_term) / exact - 1.0).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn b1_closed_and_numeric_6_1() {
        let sp = SpaceParams::pipeline(6, 1, 0.5).unwrap();
        let b1 = const_b1(&sp).unwrap();
        assert!((b1 / (96.0 * PI.powi(3)) - 1.0).abs() < 1e-12);
        assert!((const_b1_numeric(&sp).unwrap() / b1 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn b2_analytic_6_1() {
        let sp = SpaceParams::pipeline(6, 1, 0.5).unwrap();
        assert!((const_b2_analytic(&sp) / (4608.0 * PI.powi(3)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn j_is_negative_and_reflection_symmetric() {
        let sp = SpaceParams::pipeline(6, 1, 0.5).unwrap();
        let a = j_interaction(1.0, 60.0, &sp).unwrap();
        let b = j_interaction(-1.0, 60.0, &sp).unwrap();
        assert!(a < 0.0);
        assert!((a / b - 1.0).abs() < 1e-7);
    }

    #[test]
    fn expansion_positive_without_potential() {
        let sp = SpaceParams::pipeline(6, 1, 0.5).unwrap();
        let b2 = const_b2_analytic(&sp);
        let (b3, b4) = const_b3_b4(b2, 1.0, &sp).unwrap();
        let c = EnergyConstants {
            b1: const_b1(&sp).unwrap(),
            b1_numeric: 0.0,
            b2,
            b2_analytic: b2,
            b2_fit: B2Fit { b2, exp_d: 0.0, exp_lambda: 0.0, rms: 0.0, flagged: false, samples: vec![] },
            b3,
            b4,
            r_bar: 1.0,
        };
        assert!(di_dlambda_expansion(1e4, 8, 0.5, 0.0, &c, &sp) > 0.0);
        assert!(di_dlambda_expansion(1e4, 8, 0.5, 1.0, &c, &sp) < 0.0);
    }
}
