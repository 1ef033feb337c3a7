//! Pohozaev-type checks: the whole-space ratio, boundary locality of the
//! translation and dilation functionals, and the concentrated weighted mass.

use num_rational::Ratio;

use crate::ansatz::Ansatz;
use crate::bubble::BubbleKernel;
use crate::config::tube_distance;
use crate::error::{Error, Result};
use crate::params::SpaceParams;
use crate::quadrature::{
    importance_mc, integral_u2_closed, integral_umstar_closed, integrate, radial_integral_with, sphere_area,
    BubbleMixture, McEstimate, QuadResult, Tolerance,
};

/// Whole-space identity `int U (-Delta)^m U = int U^{m*}` by two routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PohozaevRatio {
    /// `int U (-Delta)^m U` with the closed-form polyharmonic.
    pub direct: f64,
    /// `int ((-Delta)^{m/2} U)^2` (even `m`) or `int |d_r (-Delta)^{(m-1)/2} U|^2` (odd `m`).
    pub energy: f64,
    /// `int U^{m*}` from the Beta closed form.
    pub denominator: f64,
}

impl PohozaevRatio {
    pub fn ratio(&self) -> f64 {
        self.energy / self.denominator
    }

    pub fn ratio_direct(&self) -> f64 {
        self.direct / self.denominator
    }
}

pub fn whole_space_pohozaev_ratio(sp: &SpaceParams) -> Result<PohozaevRatio> {
    let k = BubbleKernel::new(sp)?;
    let m = sp.m;
    let tol = Tolerance::rel(1e-13);
    let direct = radial_integral_with(|r| k.value(r, 1.0) * k.polylap_unchecked(m, r, 1.0), sp.n, 1.0, &[1.0], tol)
        .require("int U (-Delta)^m U")?;
    let energy = if m % 2 == 0 {
        radial_integral_with(|r| k.polylap_unchecked(m / 2, r, 1.0).powi(2), sp.n, 1.0, &[1.0], tol)
    } else {
        let l = (m - 1) / 2;
        radial_integral_with(|r| k.polylap_dr(l, r, 1.0).map_or(f64::NAN, |d| d * d), sp.n, 1.0, &[1.0], tol)
    }
    .require("energy form")?;
    Ok(PohozaevRatio { direct, energy, denominator: integral_umstar_closed(sp) })
}

/// `(2m - N)/2 + N/m*` in exact arithmetic; identically zero.
pub fn pohozaev_exponent_identity(sp: &SpaceParams) -> Ratio<i64> {
    let n = sp.n as i64;
    let m = sp.m as i64;
    Ratio::new(2 * m - n, 2) + Ratio::from_integer(n) / sp.m_star_exact()
}

/// Ingredients of an axisymmetric function about the last coordinate axis,
/// written in `(z, rho)` with `z = y_N` and `rho` the distance to the axis.
#[derive(Debug, Clone, PartialEq)]
pub enum AxisymTerm {
    /// `amp * U_{z0 e_N, lambda}`.
    AxisBubble { z0: f64, lambda: f64, amp: f64 },
    /// `sum_j c_j |y - zc e_N|^{2j}`, set to zero outside `|y - zc e_N| < support` if given.
    RadialPoly { zc: f64, coeffs: Vec<f64>, support: Option<f64> },
}

impl AxisymTerm {
    /// `amp (1 - |y - zc e_N|^2 / R^2)_+^K`.
    pub fn compact_bump(zc: f64, radius: f64, k: usize, amp: f64) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        let mut binom = 1.0;
        for (j, c) in coeffs.iter_mut().enumerate() {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            *c = amp * sign * binom * radius.powi(-2 * j as i32);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        AxisymTerm::RadialPoly { zc, coeffs, support: Some(radius) }
    }

    fn center(&self) -> f64 {
        match self {
            AxisymTerm::AxisBubble { z0, .. } => *z0,
            AxisymTerm::RadialPoly { zc, .. } => *zc,
        }
    }
}

/// `(-Delta)` applied to `sum c_j s^{2j}` in `R^N`.
fn poly_laplacian(c: &[f64], n: usize) -> Vec<f64> {
    (1..c.len()).map(|j| -c[j] * (2 * j) as f64 * (2 * j + n - 2) as f64).collect()
}

/// Sum of axisymmetric terms with the pieces needed by the functionals.
#[derive(Debug, Clone)]
pub struct AxisymFunction {
    pub terms: Vec<AxisymTerm>,
    sp: SpaceParams,
    kernel: BubbleKernel,
    /// `(-Delta)^m` of each polynomial term, aligned with `terms`.
    lap_m: Vec<Vec<f64>>,
}

/// `(u, (-Delta)^m u, d_z u, <y, grad u>)` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisymEval {
    pub u: f64,
    pub lap_m: f64,
    pub dz: f64,
    pub radial: f64,
}

impl AxisymFunction {
    pub fn new(terms: Vec<AxisymTerm>, sp: &SpaceParams) -> Result<Self> {
        let mut lap_m = Vec::with_capacity(terms.len());
        for t in &terms {
            match t {
                AxisymTerm::AxisBubble { lambda, .. } if !(*lambda > 0.0) => {
                    return Err(Error::InvalidParams("axis bubble needs lambda > 0".into()))
                }
                AxisymTerm::RadialPoly { coeffs, support, .. } => {
                    if let Some(r) = support {
                        if coeffs.len() < 2 * sp.m + 5 {
                            return Err(Error::InvalidParams(format!(
                                "compact bump of radius {r} needs exponent >= 2m+4 for the functionals"
                            )));
                        }
                    }
                    let mut c = coeffs.clone();
                    for _ in 0..sp.m {
                        c = poly_laplacian(&c, sp.n);
                    }
                    lap_m.push(c);
                }
                _ => lap_m.push(vec![]),
            }
        }
        Ok(Self { terms, sp: *sp, kernel: BubbleKernel::new(sp)?, lap_m })
    }

    pub fn eval(&self, z: f64, rho: f64) -> AxisymEval {
        let mut out = AxisymEval { u: 0.0, lap_m: 0.0, dz: 0.0, radial: 0.0 };
        for (t, lm) in self.terms.iter().zip(&self.lap_m) {
            let zc = t.center();
            let dzc = z - zc;
            let s2 = dzc * dzc + rho * rho;
            // <y, y - c> for c on the axis
            let ydot = z * dzc + rho * rho;
            match t {
                AxisymTerm::AxisBubble { lambda, amp, .. } => {
                    let r = s2.sqrt();
                    out.u += amp * self.kernel.value(r, *lambda);
                    out.lap_m += amp * self.kernel.polylap_unchecked(self.sp.m, r, *lambda);
                    // dU/dr / r, continuous at r = 0
                    let q = lambda * r;
                    let dr_over_r =
                        -2.0 * self.sp.half_gamma() * lambda * lambda / (1.0 + q * q) * self.kernel.value(r, *lambda);
                    out.dz += amp * dr_over_r * dzc;
                    out.radial += amp * dr_over_r * ydot;
                }
                AxisymTerm::RadialPoly { coeffs, support, .. } => {
                    if support.is_some_and(|r| s2 >= r * r) {
                        continue;
                    }
                    let horner = |c: &[f64]| c.iter().rev().fold(0.0, |acc, x| acc * s2 + x);
                    out.u += horner(coeffs);
                    out.lap_m += horner(lm);
                    // (1/s) d/ds sum c_j s^{2j} = sum 2j c_j s^{2j-2}
                    let d: Vec<f64> = (1..coeffs.len()).map(|j| 2.0 * j as f64 * coeffs[j]).collect();
                    let ds_over_s = horner(&d);
                    out.dz += ds_over_s * dzc;
                    out.radial += ds_over_s * ydot;
                }
            }
        }
        out
    }

    /// Distances from `zc` (on the axis) at which the integrand has kinks or peaks.
    fn breakpoints(&self, zc: f64) -> Vec<f64> {
        let mut b = Vec::new();
        for t in &self.terms {
            b.push((t.center() - zc).abs());
            if let AxisymTerm::RadialPoly { support: Some(r), zc: c, .. } = t {
                b.push((c - zc).abs() + r);
                b.push(((c - zc).abs() - r).abs());
            }
        }
        b
    }
}

/// Ball of radius `radius` centred at `zc e_N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBall {
    pub zc: f64,
    pub radius: f64,
}

/// `int_ball g(z, rho) dy` in polar coordinates about the ball centre.
pub fn ball_integral(g: impl Fn(f64, f64) -> f64, ball: AxisBall, n: usize, s_breaks: &[f64], tol: Tolerance) -> QuadResult {
    let nm2 = (n - 2) as i32;
    let inner = |s: f64| {
        if s == 0.0 {
            return 0.0;
        }
        integrate(
            |th: f64| {
                let (sn, cs) = th.sin_cos();
                let rho = s * sn;
                g(ball.zc + s * cs, rho) * rho.powi(nm2)
            },
            0.0,
            std::f64::consts::PI,
            tol,
        )
        .value
            * s
    };
    let mut b: Vec<f64> = s_breaks.iter().copied().filter(|&x| x > 0.0 && x < ball.radius).collect();
    b.push(0.0);
    b.push(ball.radius);
    b.sort_by(f64::total_cmp);
    b.dedup();
    let mut r = QuadResult::zero();
    for w in b.windows(2) {
        r = r.add(integrate(inner, w[0], w[1], tol));
    }
    let a = sphere_area(n - 1);
    QuadResult { value: a * r.value, abs_err: a * r.abs_err, ..r }
}

/// Values of the axial translation functional `L2` and the volume-corrected
/// dilation functional `L1` for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalityValues {
    pub l2: f64,
    pub l1_corrected: f64,
}

/// `L2(u, v) = int ((-Delta)^m u d_z v + (-Delta)^m v d_z u)` and
/// `L1(u, v) + ((N-2m)/2) int (v (-Delta)^m u + u (-Delta)^m v)` with
/// `L1(u, v) = int ((-Delta)^m u <y, grad v> + (-Delta)^m v <y, grad u>)`, over the ball.
pub fn locality_functionals(u: &AxisymFunction, v: &AxisymFunction, ball: AxisBall, sp: &SpaceParams) -> Result<LocalityValues> {
    let mut br = u.breakpoints(ball.zc);
    br.extend(v.breakpoints(ball.zc));
    let tol = Tolerance { abs: 0.0, rel: 1e-11, max_intervals: 4000 };
    let hg = sp.half_gamma();
    let l2 = ball_integral(
        |z, rho| {
            let (a, b) = (u.eval(z, rho), v.eval(z, rho));
            a.lap_m * b.dz + b.lap_m * a.dz
        },
        ball,
        sp.n,
        &br,
        tol,
    );
    let l1 = ball_integral(
        |z, rho| {
            let (a, b) = (u.eval(z, rho), v.eval(z, rho));
            a.lap_m * b.radial + b.lap_m * a.radial + hg * (b.u * a.lap_m + a.u * b.lap_m)
        },
        ball,
        sp.n,
        &br,
        tol,
    );
    Ok(LocalityValues { l2: l2.value, l1_corrected: l1.value })
}

/// Two pairs and their functional values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalityCheck {
    pub first: LocalityValues,
    pub second: LocalityValues,
}

impl LocalityCheck {
    /// Largest relative disagreement between the two pairs.
    pub fn rel_diff(&self) -> f64 {
        let rd = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
        rd(self.first.l2, self.second.l2).max(rd(self.first.l1_corrected, self.second.l1_corrected))
    }
}

/// Evaluate both functionals on two pairs that must coincide near the boundary.
pub fn boundary_locality_check(
    pair1: (&AxisymFunction, &AxisymFunction),
    pair2: (&AxisymFunction, &AxisymFunction),
    ball: AxisBall,
    sp: &SpaceParams,
) -> Result<LocalityCheck> {
    // Precondition: identical data in a collar of width 5% of the radius.
    for i in 0..=20 {
        let th = std::f64::consts::PI * i as f64 / 20.0;
        for f in [0.95, 0.975, 1.0] {
            let s = f * ball.radius;
            let (z, rho) = (ball.zc + s * th.cos(), s * th.sin());
            for (a, b) in [(pair1.0, pair2.0), (pair1.1, pair2.1)] {
                let (ea, eb) = (a.eval(z, rho), b.eval(z, rho));
                let scale = ea.u.abs().max(ea.lap_m.abs()).max(1.0);
                if (ea.u - eb.u).abs() > 1e-12 * scale || (ea.lap_m - eb.lap_m).abs() > 1e-12 * scale {
                    return Err(Error::Precondition(format!("pairs differ near the boundary at z={z}, rho={rho}")));
                }
            }
        }
    }
    Ok(LocalityCheck {
        first: locality_functionals(pair1.0, pair1.1, ball, sp)?,
        second: locality_functionals(pair2.0, pair2.1, ball, sp)?,
    })
}

/// MC estimate of `int_{D_rho} h Z^2` against `2k lambda^{-2m} h(r_bar, y2_bar) int U^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedMass {
    pub estimate: McEstimate,
    pub predicted: f64,
}

impl WeightedMass {
    pub fn ratio(&self) -> f64 {
        self.estimate.estimate / self.predicted
    }
}

/// `D_rho` is the tube `|(|y'|, y'') - (r_bar, y2_bar)| <= rho`; `h` is a function of `(r, y'')`.
pub fn weighted_mass_check(
    h: impl Fn(f64, &[f64]) -> f64 + Sync,
    a: &Ansatz,
    r_bar: f64,
    y2_bar: &[f64],
    rho: f64,
    n_samples: usize,
    seed: u64,
) -> Result<WeightedMass> {
    let sp = a.sp;
    let q = BubbleMixture::new(a.centers.clone(), a.lambda, &sp)?;
    let estimate = importance_mc(
        &q,
        |y| {
            if tube_distance(y, r_bar, y2_bar) > rho {
                return 0.0;
            }
            let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
            let z = a.z(y);
            h(r, &y[3..]) * z * z
        },
        n_samples,
        seed,
    );
    let predicted = a.centers.len() as f64 * a.lambda.powf(-2.0 * sp.mf()) * h(r_bar, y2_bar) * integral_u2_closed(&sp)?;
    Ok(WeightedMass { estimate, predicted })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_identity_is_zero() {
        for n in 3..=20usize {
            for m in 1..=4usize {
                if let Ok(sp) = SpaceParams::new(n, m) {
                    assert_eq!(pohozaev_exponent_identity(&sp), Ratio::from_integer(0));
                }
            }
        }
    }

    #[test]
    fn ratio_for_6_1() {
        let sp = SpaceParams::new(6, 1).unwrap();
        let r = whole_space_pohozaev_ratio(&sp).unwrap();
        assert!((r.ratio() - 1.0).abs() < 1e-9 && (r.ratio_direct() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn poly_laplacian_against_fd() {
        let sp = SpaceParams::new(5, 1).unwrap();
        let f = AxisymFunction::new(
            vec![AxisymTerm::RadialPoly { zc: 0.3, coeffs: vec![1.0, -2.0, 0.5], support: None }],
            &sp,
        )
        .unwrap();
        let (z, rho) = (0.7, 0.4);
        // Laplacian in (z, rho) coordinates: u_zz + u_rhorho + (N-2)/rho u_rho
        let h = 1e-4;
        let u = |z: f64, r: f64| f.eval(z, r).u;
        let lap = (u(z + h, rho) - 2.0 * u(z, rho) + u(z - h, rho)) / (h * h)
            + (u(z, rho + h) - 2.0 * u(z, rho) + u(z, rho - h)) / (h * h)
            + 3.0 / rho * (u(z, rho + h) - u(z, rho - h)) / (2.0 * h);
        assert!((f.eval(z, rho).lap_m + lap).abs() < 1e-5);
        let dz = (u(z + h, rho) - u(z - h, rho)) / (2.0 * h);
        assert!((f.eval(z, rho).dz - dz).abs() < 1e-7);
    }

    #[test]
    fn ball_integral_volume() {
        let v = ball_integral(|_, _| 1.0, AxisBall { zc: 0.4, radius: 0.7 }, 5, &[], Tolerance::rel(1e-12)).value;
        let exact = sphere_area(5) / 5.0 * 0.7f64.powi(5);
        assert!((v / exact - 1.0).abs() < 1e-11);
    }

    #[test]
    fn precondition_rejects_boundary_change() {
        let sp = SpaceParams::new(6, 1).unwrap();
        let u = AxisymFunction::new(vec![AxisymTerm::AxisBubble { z0: 0.0, lambda: 2.0, amp: 1.0 }], &sp).unwrap();
        let u2 = AxisymFunction::new(
            vec![AxisymTerm::AxisBubble { z0: 0.0, lambda: 2.0, amp: 1.0 }, AxisymTerm::compact_bump(0.0, 2.0, 8, 1.0)],
            &sp,
        )
        .unwrap();
        let r = boundary_locality_check((&u, &u), (&u2, &u), AxisBall { zc: 0.0, radius: 1.0 }, &sp);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
