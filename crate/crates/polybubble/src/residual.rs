//! Pointwise error term `E_k`, the nonlinearity `N(phi)`, and the empirical
//! scaling studies built on them.

use rayon::prelude::*;

use crate::ansatz::Ansatz;
use crate::config::RegimeParams;
use crate::cutoff::Cutoff;
use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::norms::{build_samples, doublestar_norm, doublestar_norm_of_values, NormWeights, SampleSpec, SyntheticCorrector};
use crate::params::SpaceParams;
use crate::potential::Potential;
use crate::quadrature::{importance_mc, McEstimate, TubeShell};

/// `Z^p - xi sum U_j^p` with `Z = xi Z*`, written so that nothing cancels
/// catastrophically near a dominant bubble.
pub fn interaction_term(a: &Ansatz, y: &[f64]) -> f64 {
    let xi = a.xi(y);
    if xi == 0.0 {
        return 0.0;
    }
    let p = a.sp.p();
    let u = a.bubble_values(y);
    let (imax, umax) = u.iter().copied().enumerate().fold((0, 0.0), |b, (i, v)| if v > b.1 { (i, v) } else { b });
    if umax == 0.0 {
        return 0.0;
    }
    let others: f64 = u.iter().enumerate().filter(|(i, _)| *i != imax).map(|(_, v)| v).sum();
    let others_p: f64 = u.iter().enumerate().filter(|(i, _)| *i != imax).map(|(_, v)| v.powf(p)).sum();
    let excess = umax.powf(p) * (p * (others / umax).ln_1p()).exp_m1() - others_p;
    let sum_p = umax.powf(p) + others_p;
    xi.powf(p) * excess + (xi.powf(p) - xi) * sum_p
}

/// Finite-difference spacing for the commutator at `y`.
pub fn fd_spacing(a: &Ansatz, y: &[f64]) -> f64 {
    let delta = a.cutoff.as_ref().map_or(f64::INFINITY, |c| c.delta);
    let dmin = a.distances(y).into_iter().fold(f64::INFINITY, f64::min);
    (delta / 50.0).min(dmin / 20.0)
}

/// `(-Delta)^m` of `g` at `y` by `m` nested fourth-order Laplacian stencils.
pub fn fd_polylaplacian(g: &(dyn Fn(&[f64]) -> f64 + Sync), y: &[f64], m: usize, h: f64) -> f64 {
    fn lap(g: &(dyn Fn(&[f64]) -> f64 + Sync), y: &mut Vec<f64>, level: usize, h: f64) -> f64 {
        if level == 0 {
            return g(y);
        }
        let center = lap(g, y, level - 1, h);
        let mut acc = -30.0 * y.len() as f64 * center;
        for i in 0..y.len() {
            let yi = y[i];
            for (off, w) in [(-2.0, -1.0), (-1.0, 16.0), (1.0, 16.0), (2.0, -1.0)] {
                y[i] = yi + off * h;
                acc += w * lap(g, y, level - 1, h);
            }
            y[i] = yi;
        }
        acc / (12.0 * h * h)
    }
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    sign * lap(g, &mut y.to_vec(), m, h)
}

/// Cutoff commutator `(-Delta)^m(xi Z*) - xi (-Delta)^m Z*`. Exactly zero when
/// the whole stencil lies where `xi` is constant.
pub fn commutator(a: &Ansatz, y: &[f64]) -> f64 {
    let Some(cut) = a.cutoff.as_ref() else { return 0.0 };
    let h = fd_spacing(a, y);
    let reach = 2.0 * a.sp.m as f64 * h;
    let s = cut.distance(y);
    if s + reach <= cut.delta || s - reach >= 2.0 * cut.delta {
        return 0.0;
    }
    let g = |x: &[f64]| {
        let xi = cut.value(x);
        if xi == 0.0 {
            0.0
        } else {
            xi * a.z_star(x)
        }
    };
    fd_polylaplacian(&g, y, a.sp.m, h) - cut.value(y) * a.sum_powers(y)
}

/// `E_k(y) = [Z^p - xi sum U^p] - V Z - [(-Delta)^m(xi Z*) - xi sum U^p]` with
/// `V` evaluated at `(|y'|, y'')`.
pub fn e_k_value(y: &[f64], a: &Ansatz, v: &Potential) -> f64 {
    let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    let z = a.z(y);
    let vz = if z == 0.0 { 0.0 } else { v.value(r, &y[3..]) * z };
    interaction_term(a, y) - vz - commutator(a, y)
}

/// `(z + phi)_+^p - z^p - p z^{p-1} phi` for `z >= 0`.
pub fn n_phi_pointwise(z: f64, phi: f64, p: f64) -> f64 {
    if z <= 0.0 {
        return phi.max(0.0).powf(p);
    }
    let x = phi / z;
    let zp = z.powf(p);
    if x.abs() < 0.5 {
        // binomial series sum_{j>=2} C(p, j) x^j
        let mut c = p * (p - 1.0) / 2.0;
        let mut xj = x * x;
        let mut sum = 0.0;
        for j in 2..200 {
            let term = c * xj;
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() || c == 0.0 {
                break;
            }
            c *= (p - j as f64) / (j as f64 + 1.0);
            xj *= x;
        }
        zp * sum
    } else if x >= -1.0 {
        zp * ((p * x.ln_1p()).exp_m1() - p * x)
    } else {
        zp * (-1.0 - p * x)
    }
}

/// `N(phi)(y)` for the ansatz and a synthetic corrector.
pub fn n_phi_value(y: &[f64], phi: &SyntheticCorrector, a: &Ansatz) -> f64 {
    n_phi_pointwise(a.z(y), phi.value(y), a.sp.p())
}

/// Geometry and sampling shared by the scaling studies.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySetup {
    /// Cutoff anchor `(r0, y0'')`; the configuration sits at the same point.
    pub r0: f64,
    pub y0: Vec<f64>,
    pub delta: f64,
    pub samples: SampleSpec,
    pub seed: u64,
}

impl StudySetup {
    pub fn ansatz(&self, k: usize, lambda: f64, rp: &RegimeParams, sp: &SpaceParams) -> Result<Ansatz> {
        let cfg = rp.config(k, lambda, self.r0, self.y0.clone(), sp)?;
        let cut = Cutoff::new(self.r0, self.y0.clone(), self.delta, sp.m)?;
        Ansatz::new(&cfg, lambda, Some(cut), sp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub k: usize,
    pub lambda: f64,
    pub h_bar: f64,
    pub norm: f64,
    /// Any non-finite pointwise value was seen.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingStudy {
    pub rows: Vec<ScanRow>,
    pub slope: f64,
    /// `-(2m+1-beta)/2`; the check is `slope <= bound + margin`.
    pub bound: f64,
}

/// `||E_k||_**` for each `(k, lambda)` cell and the log-log slope against `lambda`.
pub fn residual_scaling_study(
    rp: &RegimeParams,
    sp: &SpaceParams,
    v: &Potential,
    cells: &[(usize, f64)],
    setup: &StudySetup,
) -> Result<ScalingStudy> {
    if cells.len() < 2 {
        return Err(Error::InvalidParams("scaling study needs at least two (k, lambda) cells".into()));
    }
    let tau = rp.tau(sp);
    let mut rows = Vec::with_capacity(cells.len());
    for &(k, lambda) in cells {
        let a = setup.ansatz(k, lambda, rp, sp)?;
        let samples = build_samples(&a, setup.r0, &setup.y0, setup.delta, setup.samples, setup.seed)?;
        let values: Vec<f64> = samples.points.par_iter().map(|y| e_k_value(y, &a, v)).collect();
        let flagged = values.iter().any(|x| !x.is_finite());
        let w = NormWeights::for_ansatz(&a, tau);
        let norm = doublestar_norm_of_values(&values, &w, &samples)?;
        rows.push(ScanRow { k, lambda, h_bar: rp.h_bar(lambda, sp)?, norm, flagged });
    }
    let lam: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let nrm: Vec<f64> = rows.iter().map(|r| r.norm).collect();
    let slope = loglog_slope(&lam, &nrm)?.slope;
    Ok(ScalingStudy { rows, slope, bound: -(2.0 * sp.mf() + 1.0 - rp.beta(sp)) / 2.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearRow {
    pub eps: f64,
    pub norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearCheck {
    pub exponent: f64,
    pub rows: Vec<NonlinearRow>,
    pub max_ratio: f64,
    /// `max ratio / min ratio` over the nonzero-`eps` rows.
    pub spread: f64,
}

/// `||N(phi_eps)||_** / eps^{min(2, m*-1)}` across an `eps` sweep.
pub fn nonlinear_estimate_check(a: &Ansatz, tau: f64, eps_list: &[f64], setup: &StudySetup) -> Result<NonlinearCheck> {
    let exponent = a.sp.p().min(2.0);
    let samples = build_samples(a, setup.r0, &setup.y0, setup.delta, setup.samples, setup.seed)?;
    let w = NormWeights::for_ansatz(a, tau);
    let zs: Vec<f64> = samples.points.par_iter().map(|y| a.z(y)).collect();
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let phi = SyntheticCorrector::new(eps, w.clone());
        let vals: Vec<f64> = samples
            .points
            .par_iter()
            .zip(zs.par_iter())
            .map(|(y, z)| n_phi_pointwise(*z, phi.value(y), a.sp.p()))
            .collect();
        let norm = doublestar_norm_of_values(&vals, &w, &samples)?;
        let ratio = if eps == 0.0 { 0.0 } else { norm / eps.powf(exponent) };
        rows.push(NonlinearRow { eps, norm, ratio });
    }
    let nz: Vec<f64> = rows.iter().filter(|r| r.eps != 0.0).map(|r| r.ratio).collect();
    let max_ratio = nz.iter().copied().fold(0.0, f64::max);
    let min_ratio = nz.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(NonlinearCheck { exponent, rows, max_ratio, spread: if nz.is_empty() { 1.0 } else { max_ratio / min_ratio } })
}

/// Monte Carlo `int_{3 delta <= s <= 4 delta} phi^2 + |phi|^{m*}`.
pub fn annulus_mass(phi: &SyntheticCorrector, setup: &StudySetup, n_samples: usize) -> Result<McEstimate> {
    let sp = phi.weights.sp;
    let shell = TubeShell::new(sp.n, setup.r0, setup.y0.clone(), 3.0 * setup.delta, 4.0 * setup.delta)?;
    let ms = sp.m_star();
    Ok(importance_mc(
        &shell,
        |y| {
            let f = phi.value(y).abs();
            f * f + f.powf(ms)
        },
        n_samples,
        setup.seed,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassRow {
    pub lambda: f64,
    pub eps: f64,
    pub mass: McEstimate,
    /// `k lambda^{-(2m+1-beta)}`.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassStudy {
    pub rows: Vec<MassRow>,
    pub slope: f64,
    /// `-(2m+1-beta)`.
    pub bound: f64,
}

/// Annulus mass of `phi` with `||phi||_* = lambda^{-(2m+1-beta)/2}` at fixed `k`.
pub fn annulus_mass_study(
    k: usize,
    lambdas: &[f64],
    rp: &RegimeParams,
    sp: &SpaceParams,
    setup: &StudySetup,
    n_samples: usize,
) -> Result<MassStudy> {
    let e = 2.0 * sp.mf() + 1.0 - rp.beta(sp);
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let a = setup.ansatz(k, lambda, rp, sp)?;
        let eps = lambda.powf(-e / 2.0);
        let phi = SyntheticCorrector::new(eps, NormWeights::for_ansatz(&a, rp.tau(sp)));
        let mass = annulus_mass(&phi, setup, n_samples)?;
        rows.push(MassRow { lambda, eps, mass, scale: k as f64 * lambda.powf(-e) });
    }
    let lam: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let ms: Vec<f64> = rows.iter().map(|r| r.mass.estimate).collect();
    Ok(MassStudy { slope: loglog_slope(&lam, &ms)?.slope, rows, bound: -e })
}

/// Convenience: `||E_k||_**` for a single ansatz.
pub fn e_k_doublestar(a: &Ansatz, v: &Potential, tau: f64, setup: &StudySetup) -> Result<f64> {
    let samples = build_samples(a, setup.r0, &setup.y0, setup.delta, setup.samples, setup.seed)?;
    doublestar_norm(|y| e_k_value(y, a, v), &NormWeights::for_ansatz(a, tau), &samples)
}
