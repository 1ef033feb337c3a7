//! Doubled-circle point configurations, their symmetries and the regime
//! scaling laws tying `h_bar` and the admissible `lambda` window to `k`.

use std::f64::consts::PI;

use crate::bubble::{bubble_grad_center, BubbleKernel, Bubble, dist};
use crate::error::{Error, Result};
use crate::params::SpaceParams;

/// Distance of `(|y'|, y'')` from `(r0, y0'')`, where `y' = (y_1, y_2, y_3)`.
#[inline]
pub fn tube_distance(y: &[f64], r0: f64, y0: &[f64]) -> f64 {
    let rho = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    let mut s = (rho - r0) * (rho - r0);
    for (a, b) in y[3..].iter().zip(y0) {
        s += (a - b) * (a - b);
    }
    s.sqrt()
}

/// `2k` points on two horizontal circles of the sphere of radius `r_bar`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubledCircleConfig {
    pub k: usize,
    pub r_bar: f64,
    pub h_bar: f64,
    pub y2_bar: Vec<f64>,
}

impl DoubledCircleConfig {
    pub fn new(k: usize, r_bar: f64, h_bar: f64, y2_bar: Vec<f64>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParams(format!("k must be at least 2, got {k}")));
        }
        if !(r_bar > 0.0 && r_bar.is_finite()) {
            return Err(Error::InvalidParams(format!("r_bar must be positive, got {r_bar}")));
        }
        if !(h_bar > 0.0 && h_bar < 1.0) {
            return Err(Error::InvalidParams(format!("h_bar must lie in (0,1), got {h_bar}")));
        }
        Ok(Self { k, r_bar, h_bar, y2_bar })
    }

    /// Ambient dimension `N = 3 + dim(y'')`.
    pub fn dim(&self) -> usize {
        3 + self.y2_bar.len()
    }

    /// `sqrt(1 - h_bar^2)`.
    pub fn s(&self) -> f64 {
        (1.0 - self.h_bar * self.h_bar).sqrt()
    }

    /// `x_j^+` (`upper`) or `x_j^-`, `j = 1..=k`.
    pub fn point(&self, j: usize, upper: bool) -> Vec<f64> {
        let th = 2.0 * (j as f64 - 1.0) * PI / self.k as f64;
        let rs = self.r_bar * self.s();
        let mut p = Vec::with_capacity(self.dim());
        p.push(rs * th.cos());
        p.push(rs * th.sin());
        p.push(if upper { 1.0 } else { -1.0 } * self.r_bar * self.h_bar);
        p.extend_from_slice(&self.y2_bar);
        p
    }

    /// All `2k` points: `x_1^+ .. x_k^+` followed by `x_1^- .. x_k^-`.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut v: Vec<Vec<f64>> = (1..=self.k).map(|j| self.point(j, true)).collect();
        v.extend((1..=self.k).map(|j| self.point(j, false)));
        v
    }

    /// `|x_j^+ - x_1^+| = 2 r s sin((j-1) pi / k)`.
    pub fn chord_same(&self, j: usize) -> f64 {
        2.0 * self.r_bar * self.s() * ((j as f64 - 1.0) * PI / self.k as f64).sin()
    }

    /// `|x_j^- - x_1^+| = 2 r [s^2 sin^2((j-1) pi/k) + h^2]^{1/2}`.
    pub fn chord_cross(&self, j: usize) -> f64 {
        let sn = ((j as f64 - 1.0) * PI / self.k as f64).sin();
        let s = self.s();
        2.0 * self.r_bar * (s * s * sn * sn + self.h_bar * self.h_bar).sqrt()
    }

    /// Sector `Omega_j^{+/-}` containing `y`: `(j, y_3 >= 0)`.
    pub fn sector(&self, y: &[f64]) -> (usize, bool) {
        let ang = y[1].atan2(y[0]).rem_euclid(2.0 * PI);
        let j = (ang * self.k as f64 / (2.0 * PI)).round() as usize % self.k + 1;
        (j, y[2] >= 0.0)
    }
}

/// Rotation by `2 pi / k` in the `(y_1, y_2)` plane.
pub fn rotate(y: &[f64], k: usize) -> Vec<f64> {
    let (s, c) = (2.0 * PI / k as f64).sin_cos();
    let mut v = y.to_vec();
    v[0] = c * y[0] - s * y[1];
    v[1] = s * y[0] + c * y[1];
    v
}

/// Reflection `(y_2, y_3) -> (-y_2, -y_3)`.
pub fn reflect(y: &[f64]) -> Vec<f64> {
    let mut v = y.to_vec();
    v[1] = -y[1];
    v[2] = -y[2];
    v
}

/// Whether two point sets agree up to ordering, within `tol` per coordinate.
pub fn same_point_set(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    'outer: for p in a {
        for (i, q) in b.iter().enumerate() {
            if !used[i] && p.iter().zip(q).all(|(x, y)| (x - y).abs() <= tol) {
                used[i] = true;
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// The three concentration regimes for `h_bar` as `lambda -> infinity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `sqrt(1 - h^2) = M1 lambda^{-alpha/(N-2m)}`: `h -> 1`.
    Case1 { m1: f64 },
    /// `h = a + M2 lambda^{-(N-4m)/(N-2m)}` with `a` in `(0,1)`.
    Case2 { a: f64, m2: f64 },
    /// `h = M2 lambda^{-(N-4m)/(N-2m)}`: `h -> 0`. `a_const` overrides the
    /// limit of `(lambda^{beta2} h)^{-1}`, which is `1/M2` by default.
    Case3 { m2: f64, a_const: Option<f64> },
}

/// Regime law plus the window constants `L0 < L1` and neighbourhood radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeParams {
    pub regime: Regime,
    pub l0: f64,
    pub l1: f64,
    pub theta: f64,
}

/// Scalar balance law in the reduced `t`-equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BalanceLaw {
    /// Case 1, circles shrinking onto the `y_3` axis: `-B1 V t^{-(2m+1)} + B3 M1^{N-2m} t^{-(N-2m+1-alpha)}`.
    Collapsing { m1: f64 },
    /// `h -> A` in `(0,1)`: `-B1 V t^{-(2m+1)} + B3 (1-A^2)^{-(N-2m)/2} t^{-(N-2m+1)}`.
    Separated { a: f64 },
    /// `h -> 0` faster than the critical rate: `-B1 V t^{-(2m+1)} + B3 t^{-(N-2m+1)}`.
    Vanishing,
    /// `h -> 0` at the critical rate: adds `B4 A^{N-2m-1} t^{-(2m+1+beta2)}`.
    Critical { a_const: f64 },
}

/// `h_bar` from the regime law and the admissible `lambda` window for `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeScales {
    pub h_bar: f64,
    pub window: (f64, f64),
    pub in_window: bool,
}

impl RegimeParams {
    pub fn new(regime: Regime, l0: f64, l1: f64, theta: f64) -> Result<Self> {
        if !(l0 > 0.0 && l1 > l0) {
            return Err(Error::InvalidParams(format!("need 0 < L0 < L1, got {l0}, {l1}")));
        }
        if !(theta > 0.0) {
            return Err(Error::InvalidParams(format!("theta must be positive, got {theta}")));
        }
        match regime {
            Regime::Case1 { m1 } if !(m1 > 0.0) => {
                return Err(Error::InvalidParams(format!("M1 must be positive, got {m1}")))
            }
            Regime::Case2 { a, m2 } if !(a > 0.0 && a < 1.0 && m2 > 0.0) => {
                return Err(Error::InvalidParams(format!("case 2 needs a in (0,1), M2 > 0, got a={a}, M2={m2}")))
            }
            Regime::Case3 { m2, a_const } if !(m2 > 0.0 && a_const.is_none_or(|x| x > 0.0)) => {
                return Err(Error::InvalidParams(format!("case 3 needs M2 > 0 and A > 0, got M2={m2}")))
            }
            _ => {}
        }
        Ok(Self { regime, l0, l1, theta })
    }

    pub fn case_id(&self) -> u8 {
        match self.regime {
            Regime::Case1 { .. } => 1,
            Regime::Case2 { .. } => 2,
            Regime::Case3 { .. } => 3,
        }
    }

    /// Exponent `rho` of `lambda = t k^rho`.
    pub fn rho(&self, sp: &SpaceParams) -> f64 {
        match self.regime {
            Regime::Case1 { .. } => sp.gamma() / (sp.nf() - 4.0 * sp.mf() - sp.alpha()),
            _ => sp.gamma() / (sp.nf() - 4.0 * sp.mf()),
        }
    }

    /// `tau` used by the weighted norms in this regime.
    pub fn tau(&self, sp: &SpaceParams) -> f64 {
        match self.regime {
            Regime::Case1 { .. } => sp.tau_case1(),
            _ => sp.tau_case23(),
        }
    }

    /// `beta` of the residual estimate in this regime.
    pub fn beta(&self, sp: &SpaceParams) -> f64 {
        match self.regime {
            Regime::Case1 { .. } => sp.beta1(),
            _ => sp.beta2(),
        }
    }

    pub fn lambda_for(&self, t: f64, k: usize, sp: &SpaceParams) -> f64 {
        t * (k as f64).powf(self.rho(sp))
    }

    pub fn window(&self, k: usize, sp: &SpaceParams) -> (f64, f64) {
        let kr = (k as f64).powf(self.rho(sp));
        (self.l0 * kr, self.l1 * kr)
    }

    /// `h_bar` from the leading-order law (corrections set to zero).
    pub fn h_bar(&self, lambda: f64, sp: &SpaceParams) -> Result<f64> {
        let h = match self.regime {
            Regime::Case1 { m1 } => {
                let s = m1 * lambda.powf(-sp.beta1());
                if s >= 1.0 {
                    return Err(Error::InvalidParams(format!(
                        "case 1 law gives sqrt(1-h^2) = {s} >= 1 at lambda = {lambda}"
                    )));
                }
                (1.0 - s * s).sqrt()
            }
            Regime::Case2 { a, m2 } => a + m2 * lambda.powf(-sp.beta2()),
            Regime::Case3 { m2, .. } => m2 * lambda.powf(-sp.beta2()),
        };
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidParams(format!("regime law gives h = {h} outside (0,1) at lambda = {lambda}")));
        }
        Ok(h)
    }

    /// `(dh/dlambda, ds/dlambda)` along the regime law, `s = sqrt(1-h^2)`.
    pub fn dh_ds_dlambda(&self, lambda: f64, sp: &SpaceParams) -> Result<(f64, f64)> {
        let h = self.h_bar(lambda, sp)?;
        let s = (1.0 - h * h).sqrt();
        Ok(match self.regime {
            Regime::Case1 { .. } => {
                let ds = -sp.beta1() * s / lambda;
                (-s * ds / h, ds)
            }
            Regime::Case2 { m2, .. } | Regime::Case3 { m2, .. } => {
                let dh = -sp.beta2() * m2 * lambda.powf(-sp.beta2() - 1.0);
                (dh, -h * dh / s)
            }
        })
    }

    /// Balance law of the reduced `t`-equation for this regime.
    pub fn balance_law(&self) -> BalanceLaw {
        match self.regime {
            Regime::Case1 { m1 } => BalanceLaw::Collapsing { m1 },
            Regime::Case2 { a, .. } => BalanceLaw::Separated { a },
            Regime::Case3 { m2, a_const } => BalanceLaw::Critical { a_const: a_const.unwrap_or(1.0 / m2) },
        }
    }

    /// Configuration at scale `lambda` with the given `(r_bar, y2_bar)`.
    pub fn config(&self, k: usize, lambda: f64, r_bar: f64, y2_bar: Vec<f64>, sp: &SpaceParams) -> Result<DoubledCircleConfig> {
        DoubledCircleConfig::new(k, r_bar, self.h_bar(lambda, sp)?, y2_bar)
    }
}

/// `h_bar` from the regime law and the admissible window; a `lambda` outside
/// the window is flagged, not rejected.
pub fn regime_scales(lambda: f64, k: usize, rp: &RegimeParams, sp: &SpaceParams) -> Result<RegimeScales> {
    let h_bar = rp.h_bar(lambda, sp)?;
    let window = rp.window(k, sp);
    Ok(RegimeScales { h_bar, window, in_window: lambda >= window.0 && lambda <= window.1 })
}

/// Total `lambda`-derivative of `U_{x_j^{+/-}(lambda), lambda}(y)` when the
/// centre moves along the regime law at fixed `(r_bar, y2_bar)`.
#[allow(clippy::too_many_arguments)]
pub fn moving_bubble_dlambda(
    y: &[f64],
    j: usize,
    upper: bool,
    lambda: f64,
    r_bar: f64,
    y2_bar: &[f64],
    k: usize,
    rp: &RegimeParams,
    sp: &SpaceParams,
) -> Result<f64> {
    let cfg = rp.config(k, lambda, r_bar, y2_bar.to_vec(), sp)?;
    let x = cfg.point(j, upper);
    let (dh, ds) = rp.dh_ds_dlambda(lambda, sp)?;
    let th = 2.0 * (j as f64 - 1.0) * PI / k as f64;
    let mut dx = vec![0.0; y.len()];
    dx[0] = r_bar * ds * th.cos();
    dx[1] = r_bar * ds * th.sin();
    dx[2] = if upper { 1.0 } else { -1.0 } * r_bar * dh;
    let kern = BubbleKernel::new(sp)?;
    let b = Bubble::new(x.clone(), lambda)?;
    let partial = kern.dlambda(dist(y, &x), lambda);
    let g = bubble_grad_center(y, &b, sp);
    Ok(partial + g.iter().zip(&dx).map(|(a, b)| a * b).sum::<f64>())
}
