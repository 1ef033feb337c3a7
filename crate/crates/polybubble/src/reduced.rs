//! Reduced equations for `(t, r_bar, y2_bar)`, their root solver and the
//! degree of `grad(r^{2m} V)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::config::{BalanceLaw, RegimeParams};
use crate::energy::EnergyConstants;
use crate::error::{Error, Result};
use crate::params::SpaceParams;
use crate::potential::Potential;

/// Convergence threshold on the normalised residual norm.
pub const SOLVE_TOL: f64 = 1e-9;
const MAX_NEWTON: usize = 100;

/// Result of a reduced solve, successful or not.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub k: usize,
    pub t: f64,
    pub lambda: f64,
    pub r_bar: f64,
    pub y2_bar: Vec<f64>,
    /// `None` when the regime law is outside `(0,1)` at this `lambda`.
    pub h_bar: Option<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub used_bisection: bool,
    /// 2-norm condition number of the finite-difference Jacobian at the last iterate.
    pub jacobian_cond: f64,
    /// `(iteration, residual norm)` for every accepted step.
    pub trajectory: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Solve for `(r_bar, y2_bar, t)` together.
    Full,
    /// Keep `(r_bar, y2_bar)` at the initial guess and solve the balance in `t`.
    /// Used when `r^{2m} V` has no critical point (e.g. constant `V`).
    FrozenPosition,
}

/// Unnormalised balance of the `t`-equation with constants taken at the current `r_bar`.
pub fn balance(t: f64, v: f64, law: BalanceLaw, c: &EnergyConstants, sp: &SpaceParams) -> f64 {
    let g = sp.gamma();
    let a = 2.0 * sp.mf() + 1.0;
    let lead = -c.b1 * v * t.powf(-a);
    match law {
        BalanceLaw::Collapsing { m1 } => lead + c.b3 * m1.powf(g) * t.powf(-(g + 1.0 - sp.alpha())),
        BalanceLaw::Separated { a: h } => lead + c.b3 * (1.0 - h * h).powf(-g / 2.0) * t.powf(-(g + 1.0)),
        BalanceLaw::Vanishing => lead + c.b3 * t.powf(-(g + 1.0)),
        BalanceLaw::Critical { a_const } => {
            lead + c.b3 * t.powf(-(g + 1.0)) + c.b4 * a_const.powf(g - 1.0) * t.powf(-(a + sp.beta2()))
        }
    }
}

/// `t^{2m+1} balance / (B1 V)`: strictly decreasing in `t`, equal to `-1` plus
/// positive interaction terms.
pub fn normalized_balance(t: f64, v: f64, law: BalanceLaw, c: &EnergyConstants, sp: &SpaceParams) -> f64 {
    t.powf(2.0 * sp.mf() + 1.0) * balance(t, v, law, c, sp) / (c.b1 * v)
}

/// Closed-form root `(B3 M1^{N-2m} / (B1 V))^{1/iota}` of the case-1 balance.
pub fn case1_t_star(m1: f64, v: f64, c: &EnergyConstants, sp: &SpaceParams) -> f64 {
    (c.b3 * m1.powf(sp.gamma()) / (c.b1 * v)).powf(1.0 / sp.iota)
}

/// The reduced system at fixed `k`, regime and potential.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub k: usize,
    pub rp: RegimeParams,
    pub potential: Potential,
    pub sp: SpaceParams,
    pub consts: EnergyConstants,
    /// Divisor for the gradient components.
    pub grad_scale: f64,
}

impl ReducedSystem {
    /// `grad_scale` is `|W|` at `(r_ref, y_ref)`, or 1 if that vanishes.
    pub fn new(
        k: usize,
        rp: RegimeParams,
        potential: Potential,
        sp: SpaceParams,
        consts: EnergyConstants,
        r_ref: f64,
        y_ref: &[f64],
    ) -> Result<Self> {
        if y_ref.len() != sp.n - 3 {
            return Err(Error::InvalidParams(format!("y'' must have {} components, got {}", sp.n - 3, y_ref.len())));
        }
        let w = potential.w(r_ref, y_ref, sp.m).abs();
        Ok(Self { k, rp, potential, sp, consts, grad_scale: if w > 0.0 { w } else { 1.0 } })
    }

    fn v_at(&self, r: f64, y: &[f64]) -> Result<f64> {
        let v = self.potential.value(r, y);
        if !(v > 0.0) {
            return Err(Error::Precondition(format!("V({r}, {y:?}) = {v} is not positive")));
        }
        Ok(v)
    }

    /// Normalised balance at `(t, r, y'')`.
    pub fn balance_at(&self, t: f64, r: f64, y: &[f64]) -> Result<f64> {
        let c = self.consts.at_r_bar(r, &self.sp)?;
        Ok(normalized_balance(t, self.v_at(r, y)?, self.rp.balance_law(), &c, &self.sp))
    }

    /// Raw reduced residual `(d_r W, d_{y''} W, balance)` of dimension `N-1`.
    pub fn residual(&self, t: f64, r: f64, y: &[f64]) -> Result<Vec<f64>> {
        let c = self.consts.at_r_bar(r, &self.sp)?;
        let mut f = self.potential.w_grad(r, y, self.sp.m);
        f.push(balance(t, self.v_at(r, y)?, self.rp.balance_law(), &c, &self.sp));
        Ok(f)
    }

    /// Normalised residual: gradient over `grad_scale` and the normalised balance.
    pub fn normalized_residual(&self, t: f64, r: f64, y: &[f64]) -> Result<Vec<f64>> {
        let mut f: Vec<f64> = self.potential.w_grad(r, y, self.sp.m).into_iter().map(|g| g / self.grad_scale).collect();
        f.push(self.balance_at(t, r, y)?);
        Ok(f)
    }

    fn eval_x(&self, x: &[f64], mode: SolveMode, frozen: (f64, &[f64])) -> Result<DVector<f64>> {
        let f = match mode {
            SolveMode::Full => {
                let d = x.len() - 1;
                self.normalized_residual(x[d].exp(), x[0], &x[1..d])?
            }
            SolveMode::FrozenPosition => vec![self.balance_at(x[0].exp(), frozen.0, frozen.1)?],
        };
        Ok(DVector::from_vec(f))
    }

    fn jacobian(&self, x: &[f64], mode: SolveMode, frozen: (f64, &[f64])) -> Result<DMatrix<f64>> {
        let n = x.len();
        let mut j = DMatrix::zeros(n, n);
        for i in 0..n {
            let h = 1e-6 * x[i].abs().max(1.0);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let col = (self.eval_x(&xp, mode, frozen)? - self.eval_x(&xm, mode, frozen)?) / (2.0 * h);
            j.set_column(i, &col);
        }
        Ok(j)
    }

    /// Bisection for the balance root in `t` on `[L0, L1]` at fixed position.
    pub fn bisect_t(&self, r: f64, y: &[f64]) -> Result<f64> {
        let (mut lo, mut hi) = (self.rp.l0, self.rp.l1);
        let (flo, fhi) = (self.balance_at(lo, r, y)?, self.balance_at(hi, r, y)?);
        if flo.signum() == fhi.signum() {
            return Err(Error::Divergent(format!(
                "balance has no sign change on [{lo}, {hi}] at r = {r} ({flo:.3e}, {fhi:.3e})"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.balance_at(mid, r, y)?.signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn newton(&self, x0: Vec<f64>, mode: SolveMode, frozen: (f64, &[f64]), traj: &mut Vec<(usize, f64)>) -> Result<(Vec<f64>, f64, usize)> {
        let t_idx = x0.len() - 1;
        let (lt0, lt1) = (self.rp.l0.ln(), self.rp.l1.ln());
        let mut x = x0;
        let mut f = self.eval_x(&x, mode, frozen)?;
        let mut norm = f.norm();
        let mut it = 0;
        while it < MAX_NEWTON && norm >= SOLVE_TOL {
            it += 1;
            let j = self.jacobian(&x, mode, frozen)?;
            let Some(dx) = j.lu().solve(&(-&f)) else { break };
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-10 {
                let mut xn: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + alpha * d).collect();
                xn[t_idx] = xn[t_idx].clamp(lt0, lt1);
                if mode == SolveMode::Full && xn[0] <= 0.0 {
                    alpha *= 0.5;
                    continue;
                }
                if let Ok(fn_) = self.eval_x(&xn, mode, frozen) {
                    let nn = fn_.norm();
                    if nn < norm {
                        x = xn;
                        f = fn_;
                        norm = nn;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
            traj.push((traj.len() + 1, norm));
        }
        Ok((x, norm, it))
    }

    /// Damped Newton with a finite-difference Jacobian and a bisection
    /// fallback on `t`. Non-convergence is reported in the returned state.
    pub fn solve(&self, mode: SolveMode, t0: f64, r0: f64, y0: &[f64]) -> Result<ReducedState> {
        let frozen = (r0, y0);
        let x0: Vec<f64> = match mode {
            SolveMode::Full => std::iter::once(r0).chain(y0.iter().copied()).chain(std::iter::once(t0.ln())).collect(),
            SolveMode::FrozenPosition => vec![t0.ln()],
        };
        let mut traj = vec![(0, self.eval_x(&x0, mode, frozen)?.norm())];
        let (mut x, mut norm, mut iters) = self.newton(x0, mode, frozen, &mut traj)?;
        let mut used_bisection = false;
        if norm >= SOLVE_TOL {
            used_bisection = true;
            let t_idx = x.len() - 1;
            let (r, y) = match mode {
                SolveMode::Full => (x[0], x[1..t_idx].to_vec()),
                SolveMode::FrozenPosition => (r0, y0.to_vec()),
            };
            if let Ok(t) = self.bisect_t(r, &y) {
                x[t_idx] = t.ln();
                let (x2, n2, i2) = self.newton(x.clone(), mode, frozen, &mut traj)?;
                x = x2;
                norm = n2;
                iters += i2;
            }
        }
        let jac = self.jacobian(&x, mode, frozen)?;
        let sv = jac.singular_values();
        let jacobian_cond = sv.max() / sv.min();
        let t_idx = x.len() - 1;
        let t = x[t_idx].exp();
        let (r_bar, y2_bar) = match mode {
            SolveMode::Full => (x[0], x[1..t_idx].to_vec()),
            SolveMode::FrozenPosition => (r0, y0.to_vec()),
        };
        let lambda = self.rp.lambda_for(t, self.k, &self.sp);
        let in_window = t >= self.rp.l0 && t <= self.rp.l1;
        Ok(ReducedState {
            k: self.k,
            t,
            lambda,
            r_bar,
            y2_bar,
            h_bar: self.rp.h_bar(lambda, &self.sp).ok(),
            residual_norm: norm,
            iterations: iters,
            converged: norm < SOLVE_TOL && in_window,
            used_bisection,
            jacobian_cond,
            trajectory: traj,
        })
    }
}

/// Independent solves over a `k`-sweep, run concurrently and returned in input order.
pub fn solve_sweep(
    ks: &[usize],
    rp: RegimeParams,
    potential: &Potential,
    sp: SpaceParams,
    consts: &EnergyConstants,
    mode: SolveMode,
    init: (f64, f64, &[f64]),
) -> Result<Vec<ReducedState>> {
    let (t0, r0, y0) = init;
    ks.par_iter()
        .map(|&k| {
            let sys = ReducedSystem::new(k, rp, potential.clone(), sp, consts.clone(), r0, y0)?;
            sys.solve(mode, t0, r0, y0)
        })
        .collect()
}

/// Region for the degree computation: the ball of radius `radius` around `center`
/// in `(r, y'')`, with the boundary sampled at `segments` points in dimension 2.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeRegion {
    pub center: Vec<f64>,
    pub radius: f64,
    pub segments: usize,
}

/// Brouwer degree of `grad(r^{2m} V)` on the region.
///
/// Dimension 1 uses the endpoint signs, dimension 2 the winding number of the
/// gradient along the boundary polygon, and higher dimensions the sign of the
/// Hessian determinant at the potential's declared critical point.
pub fn degree_of_gradient(v: &Potential, region: &DegreeRegion, m: usize) -> Result<i32> {
    let d = region.center.len();
    if d == 0 || !(region.radius > 0.0) {
        return Err(Error::InvalidParams("degree region needs dimension >= 1 and positive radius".into()));
    }
    let grad = |x: &[f64]| v.w_grad(x[0], &x[1..], m);
    let check = |x: &[f64], g: &[f64]| -> Result<()> {
        let n: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n <= 1e-14 {
            return Err(Error::Degree(format!("gradient vanishes on the boundary at {x:?}")));
        }
        Ok(())
    };
    match d {
        1 => {
            let lo = [region.center[0] - region.radius];
            let hi = [region.center[0] + region.radius];
            let (gl, gh) = (grad(&lo), grad(&hi));
            check(&lo, &gl)?;
            check(&hi, &gh)?;
            Ok(((gh[0].signum() - gl[0].signum()) / 2.0) as i32)
        }
        2 => {
            let n = region.segments.max(8);
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    vec![region.center[0] + region.radius * th.cos(), region.center[1] + region.radius * th.sin()]
                })
                .collect();
            let gs: Vec<Vec<f64>> = pts.iter().map(|p| grad(p)).collect();
            for (p, g) in pts.iter().zip(&gs) {
                check(p, g)?;
            }
            let mut total = 0.0;
            for i in 0..n {
                let (a, b) = (&gs[i], &gs[(i + 1) % n]);
                let dth = (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
                if dth.abs() > 0.5 * std::f64::consts::PI {
                    return Err(Error::Degree(format!("boundary polygon too coarse near {:?}", pts[i])));
                }
                total += dth;
            }
            Ok((total / (2.0 * std::f64::consts::PI)).round() as i32)
        }
        _ => {
            let (r, y) = v
                .declared_critical_point(m)
                .ok_or_else(|| Error::Degree("dimension >= 3 needs a declared critical point".into()))?;
            let x: Vec<f64> = std::iter::once(r).chain(y.iter().copied()).collect();
            if x.len() != d {
                return Err(Error::Degree(format!("declared critical point has dimension {}, region {d}", x.len())));
            }
            let dist: f64 = x.iter().zip(&region.center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if dist >= region.radius {
                return Err(Error::Degree("declared critical point lies outside the region".into()));
            }
            let h = v.w_hessian(r, &y, m, 1e-5);
            let det = h.determinant();
            let scale = h.iter().map(|a| a.abs()).fold(0.0, f64::max).powi(d as i32);
            if det.abs() <= 1e-10 * scale {
                return Err(Error::Degree("Hessian is degenerate at the declared critical point".into()));
            }
            Ok(det.signum() as i32)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Regime;
    use crate::energy::{const_b1, const_b2_analytic, const_b3_b4, B2Fit};

    fn consts(sp: &SpaceParams) -> EnergyConstants {
        let b2 = const_b2_analytic(sp);
        let (b3, b4) = const_b3_b4(b2, 1.0, sp).unwrap();
        EnergyConstants {
            b1: const_b1(sp).unwrap(),
            b1_numeric: f64::NAN,
            b2,
            b2_analytic: b2,
            b2_fit: B2Fit { b2, exp_d: f64::NAN, exp_lambda: f64::NAN, rms: 0.0, flagged: false, samples: vec![] },
            b3,
            b4,
            r_bar: 1.0,
        }
    }

    #[test]
    fn case1_closed_form_6_1() {
        let sp = SpaceParams::pipeline(6, 1, 0.5).unwrap();
        let c = consts(&sp);
        // B3/B1 = 1/15 with analytic B2, so t* = (16/15)^2.
        let t = case1_t_star(2.0, 1.0, &c, &sp);
        assert!((t - (16.0f64 / 15.0).powi(2)).abs() < 1e-12);
        assert!(normalized_balance(t, 1.0, BalanceLaw::Collapsing { m1: 2.0 }, &c, &sp).abs() < 1e-12);
    }

    #[test]
    fn frozen_solve_hits_closed_form() {
        let sp = SpaceParams::pipeline(6, 1, 0.5).unwrap();
        let c = consts(&sp);
        let rp = RegimeParams::new(Regime::Case1 { m1: 2.0 }, 0.25, 4.0, 0.25).unwrap();
        let y0 = vec![0.0; 3];
        let sys = ReducedSystem::new(4, rp, Potential::Constant { v0: 1.0 }, sp, c.clone(), 1.0, &y0).unwrap();
        let st = sys.solve(SolveMode::FrozenPosition, 3.5, 1.0, &y0).unwrap();
        assert!(st.converged);
        assert!((st.t / case1_t_star(2.0, 1.0, &c, &sp) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degree_in_two_dimensions() {
        let m = 1;
        let well = Potential::gaussian_well(1.0, 1.0, vec![0.0], 0.5, 0.5, m).unwrap();
        let saddle = Potential::Saddle { v0: 1.0, r0: 1.0, y0: vec![0.0], kappa: 0.5, m };
        let region = DegreeRegion { center: vec![1.0, 0.0], radius: 0.2, segments: 256 };
        assert_eq!(degree_of_gradient(&well, &region, m).unwrap(), 1);
        assert_eq!(degree_of_gradient(&saddle, &region, m).unwrap(), -1);
        let pl = Potential::PowerLaw { v0: 1.0, r0: 1.0, c: 1.0 };
        assert_eq!(degree_of_gradient(&pl, &region, m).unwrap(), 0);
    }

    #[test]
    fn degree_refuses_zero_on_boundary() {
        let well = Potential::gaussian_well(1.0, 1.0, vec![0.0], 0.5, 0.5, 1).unwrap();
        let region = DegreeRegion { center: vec![1.2, 0.0], radius: 0.2, segments: 64 };
        assert!(matches!(degree_of_gradient(&well, &region, 1), Err(Error::Degree(_))));
    }
}
