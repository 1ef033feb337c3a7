//! Bubble family `U_{x,lambda}`, its coefficient tables, iterated Laplacians,
//! scale derivatives and a radial finite-difference oracle.

use crate::error::{Error, Result};
use crate::params::SpaceParams;

/// A bubble: centre `x` and concentration scale `lambda > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bubble {
    pub center: Vec<f64>,
    pub lambda: f64,
}

impl Bubble {
    pub fn new(center: Vec<f64>, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParams(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { center, lambda })
    }

    pub fn unit(n: usize) -> Self {
        Self { center: vec![0.0; n], lambda: 1.0 }
    }
}

/// Euclidean distance between two points of equal dimension.
#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `ln(1 + q^2)` without overflow for large `q`.
#[inline]
pub fn ln1p_sq(q: f64) -> f64 {
    if q > 1e6 {
        2.0 * q.ln() + (1.0 / (q * q)).ln_1p()
    } else {
        (q * q).ln_1p()
    }
}

/// Exact tables `D(i,j)`, `E(i,j)`, `K_j`, `G(i,j)` for `0 <= i <= j <= m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTable {
    pub n: usize,
    pub m: usize,
    d: Vec<Vec<i128>>,
    e: Vec<Vec<i128>>,
    k: Vec<i128>,
    g: Vec<Vec<i128>>,
}

fn binom(n: usize, k: usize) -> i128 {
    let mut c: i128 = 1;
    for i in 0..k {
        c = c * (n - i) as i128 / (i + 1) as i128;
    }
    c
}

impl CoeffTable {
    fn check(&self, j: usize) -> Result<()> {
        if j > self.m {
            return Err(Error::IndexOutOfRange(format!("j={j} exceeds m={}", self.m)));
        }
        Ok(())
    }

    /// `D(i,j)`; zero for negative `i`.
    pub fn d(&self, i: isize, j: usize) -> Result<i128> {
        self.check(j)?;
        if i < 0 {
            return Ok(0);
        }
        let i = i as usize;
        if i > j {
            return Err(Error::IndexOutOfRange(format!("D({i},{j}) needs i <= j")));
        }
        Ok(self.d[j][i])
    }

    /// `E(i,j)`; zero for `i > j`.
    pub fn e(&self, i: usize, j: usize) -> Result<i128> {
        self.check(j)?;
        if i > j {
            return Ok(0);
        }
        Ok(self.e[j][i])
    }

    pub fn k(&self, j: usize) -> Result<i128> {
        self.check(j)?;
        Ok(self.k[j])
    }

    pub fn g(&self, i: usize, j: usize) -> Result<i128> {
        self.check(j)?;
        if i > j {
            return Err(Error::IndexOutOfRange(format!("G({i},{j}) needs i <= j")));
        }
        Ok(self.g[j][i])
    }

    /// Row `G(., l)` as floating point.
    pub fn g_row_f64(&self, l: usize) -> Result<Vec<f64>> {
        self.check(l)?;
        Ok(self.g[l].iter().map(|&x| x as f64).collect())
    }
}

/// `P_{m,N}`.
pub fn sobolev_prefactor(sp: &SpaceParams) -> Result<f64> {
    if sp.n <= 2 * sp.m {
        return Err(Error::InvalidParams(format!("need N > 2m, got N={}, m={}", sp.n, sp.m)));
    }
    Ok(sp.prefactor())
}

/// Build the coefficient tables in exact integer arithmetic.
pub fn coeff_tables(sp: &SpaceParams) -> Result<CoeffTable> {
    if sp.m == 0 || sp.n <= 2 * sp.m {
        return Err(Error::InvalidParams(format!("need m >= 1 and N > 2m, got N={}, m={}", sp.n, sp.m)));
    }
    let (n, m) = (sp.n as i128, sp.m as i128);
    let mm = sp.m;
    let mut d = Vec::with_capacity(mm + 1);
    let mut e = Vec::with_capacity(mm + 1);
    let mut k = Vec::with_capacity(mm + 1);
    let mut g = Vec::with_capacity(mm + 1);
    for j in 0..=mm {
        let ji = j as i128;
        let drow: Vec<i128> = (0..=j)
            .map(|i| {
                let i = i as i128;
                if i == 0 {
                    1
                } else {
                    (ji - i + 1..=ji).map(|h| m - h).product()
                }
            })
            .collect();
        let erow: Vec<i128> = (0..=j)
            .map(|i| (i as i128..ji).map(|h| n + 2 * h).product())
            .collect();
        let kj: i128 = (0..ji).map(|h| n - 2 * m + 2 * h).product();
        let grow: Vec<i128> = (0..=j)
            .map(|i| (1i128 << i) * binom(j, i) * kj * drow[i] * erow[i])
            .collect();
        d.push(drow);
        e.push(erow);
        k.push(kj);
        g.push(grow);
    }
    Ok(CoeffTable { n: sp.n, m: sp.m, d, e, k, g })
}

/// Cached radial closed forms for a fixed `(N, m)`; evaluation is by distance
/// `r = |y - x|` and scale `lambda`.
#[derive(Debug, Clone)]
pub struct BubbleKernel {
    pub sp: SpaceParams,
    amp: f64,
    e: f64,
    g: Vec<Vec<f64>>,
}

impl BubbleKernel {
    pub fn new(sp: &SpaceParams) -> Result<Self> {
        let table = coeff_tables(sp)?;
        let g = (0..=sp.m).map(|l| table.g_row_f64(l)).collect::<Result<Vec<_>>>()?;
        Ok(Self { sp: *sp, amp: sp.amplitude(), e: sp.half_gamma(), g })
    }

    pub fn amplitude(&self) -> f64 {
        self.amp
    }

    /// `U` at distance `r` from the centre.
    #[inline]
    pub fn value(&self, r: f64, lambda: f64) -> f64 {
        let q = lambda * r;
        self.amp * (self.e * (lambda.ln() - ln1p_sq(q))).exp()
    }

    /// `(-Delta)^l U` at distance `r`.
    pub fn polylap(&self, l: usize, r: f64, lambda: f64) -> Result<f64> {
        if l > self.sp.m {
            return Err(Error::IndexOutOfRange(format!("l={l} exceeds m={}", self.sp.m)));
        }
        Ok(self.polylap_unchecked(l, r, lambda))
    }

    #[inline]
    pub(crate) fn polylap_unchecked(&self, l: usize, r: f64, lambda: f64) -> f64 {
        let q = lambda * r;
        let lq = ln1p_sq(q);
        let one_minus_w = (-lq).exp();
        let w = if q > 1e6 { 1.0 - one_minus_w } else { q * q * one_minus_w };
        let mut s = 0.0;
        for (i, &gi) in self.g[l].iter().enumerate() {
            if gi != 0.0 {
                s += gi * w.powi(i as i32) * one_minus_w.powi((l - i) as i32);
            }
        }
        let lf = l as f64;
        self.amp * ((self.e + 2.0 * lf) * lambda.ln() - (self.e + lf) * lq).exp() * s
    }

    /// `dU/dlambda` at fixed centre.
    #[inline]
    pub fn dlambda(&self, r: f64, lambda: f64) -> f64 {
        let q2 = (lambda * r) * (lambda * r);
        let ratio = if q2 > 1e12 { -1.0 + 2.0 / (1.0 + q2) } else { (1.0 - q2) / (1.0 + q2) };
        self.e / lambda * self.value(r, lambda) * ratio
    }

    /// Radial derivative `dU/dr`.
    #[inline]
    pub fn dr(&self, r: f64, lambda: f64) -> f64 {
        let q = lambda * r;
        -2.0 * self.e * lambda * lambda * r / (1.0 + q * q) * self.value(r, lambda)
    }

    /// Radial derivative of `(-Delta)^l U`.
    pub fn polylap_dr(&self, l: usize, r: f64, lambda: f64) -> Result<f64> {
        if l > self.sp.m {
            return Err(Error::IndexOutOfRange(format!("l={l} exceeds m={}", self.sp.m)));
        }
        let q = lambda * r;
        let a = self.e + 2.0 * l as f64;
        let q2 = q * q;
        let mut s = 0.0;
        let mut ds = 0.0;
        for (i, &gi) in self.g[l].iter().enumerate() {
            s += gi * q2.powi(i as i32);
            if i > 0 {
                ds += 2.0 * i as f64 * gi * q.powi(2 * i as i32 - 1);
            }
        }
        let bracket = -2.0 * a * q * s + (1.0 + q2) * ds;
        Ok(self.amp * ((a + 1.0) * lambda.ln() - (a + 1.0) * ln1p_sq(q)).exp() * bracket)
    }
}

/// `U_{x,lambda}(y)`.
pub fn bubble_value(y: &[f64], b: &Bubble, sp: &SpaceParams) -> f64 {
    let r = dist(y, &b.center);
    let e = sp.half_gamma();
    sp.amplitude() * (e * (b.lambda.ln() - ln1p_sq(b.lambda * r))).exp()
}

/// `(-Delta)^l U_{x,lambda}(y)` from the closed form with prefactor.
pub fn polylaplacian_bubble(l: usize, y: &[f64], b: &Bubble, sp: &SpaceParams) -> Result<f64> {
    BubbleKernel::new(sp)?.polylap(l, dist(y, &b.center), b.lambda)
}

/// `dU_{x,lambda}/dlambda` at fixed centre.
pub fn bubble_dlambda(y: &[f64], b: &Bubble, sp: &SpaceParams) -> f64 {
    let r = dist(y, &b.center);
    let q2 = (b.lambda * r).powi(2);
    sp.half_gamma() / b.lambda * bubble_value(y, b, sp) * (1.0 - q2) / (1.0 + q2)
}

/// Gradient of `U_{x,lambda}(y)` with respect to the centre `x`.
pub fn bubble_grad_center(y: &[f64], b: &Bubble, sp: &SpaceParams) -> Vec<f64> {
    let r = dist(y, &b.center);
    let l2 = b.lambda * b.lambda;
    let c = sp.gamma() * l2 * bubble_value(y, b, sp) / (1.0 + l2 * r * r);
    y.iter().zip(&b.center).map(|(yi, xi)| c * (yi - xi)).collect()
}

/// Uniform radial grid on `[0, r_max]` with spacing `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    pub h: f64,
    pub r_max: f64,
}

impl RadialGrid {
    pub fn new(h: f64, r_max: f64) -> Result<Self> {
        if !(h > 0.0 && r_max > 0.0 && h < r_max) {
            return Err(Error::InvalidParams(format!("bad radial grid h={h}, r_max={r_max}")));
        }
        Ok(Self { h, r_max })
    }

    /// Number of nodes `0, h, 2h, ...` not exceeding `r_max`.
    pub fn nodes(&self) -> usize {
        (self.r_max / self.h + 1e-9).floor() as usize + 1
    }

    /// Samples of `f` on the grid extended by `extra` nodes past `r_max`.
    pub fn sample(&self, extra: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.nodes() + extra).map(|i| f(i as f64 * self.h)).collect()
    }
}

/// Apply the radial operator `-u'' - (N-1)u'/r` `l` times with fourth-order
/// central differences. Samples sit at `r_i = i*h`; the profile is extended
/// evenly through `r = 0`. Each application drops the last two nodes.
pub fn radial_fd_polylaplacian(samples: &[f64], h: f64, l: usize, sp: &SpaceParams) -> Result<Vec<f64>> {
    if samples.len() < 2 * l + 6 {
        return Err(Error::GridTooCoarse(format!(
            "{} samples cannot support {l} applications (need {})",
            samples.len(),
            2 * l + 6
        )));
    }
    let nm1 = sp.nf() - 1.0;
    let mut u = samples.to_vec();
    for _ in 0..l {
        let n = u.len();
        let at = |k: isize| u[k.unsigned_abs()];
        let mut out = Vec::with_capacity(n - 2);
        let c2 = 12.0 * h * h;
        for i in 0..n - 2 {
            let k = i as isize;
            let (um2, um1, u0, up1, up2) = (at(k - 2), at(k - 1), at(k), at(k + 1), at(k + 2));
            let d2 = (-up2 + 16.0 * up1 - 30.0 * u0 + 16.0 * um1 - um2) / c2;
            if i == 0 {
                out.push(0.0);
            } else {
                let d1 = (-up2 + 8.0 * up1 - 8.0 * um1 + um2) / (12.0 * h);
                out.push(-(d2 + nm1 * d1 / (i as f64 * h)));
            }
        }
        // The origin value is interpolated in r^2 from the next three nodes so
        // the truncation error stays a smooth even function of r.
        out[0] = 1.5 * out[1] - 0.6 * out[2] + 0.1 * out[3];
        u = out;
    }
    Ok(u)
}

/// Max relative error of the radial finite-difference `(-Delta)^l U_{0,1}`
/// against the closed form on `[0, r_max]`.
pub fn radial_fd_oracle_error(sp: &SpaceParams, l: usize, grid: RadialGrid) -> Result<f64> {
    let kern = BubbleKernel::new(sp)?;
    let samples = grid.sample(2 * l, |r| kern.value(r, 1.0));
    let fd = radial_fd_polylaplacian(&samples, grid.h, l, sp)?;
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (i, v) in fd.iter().take(grid.nodes()).enumerate() {
        let exact = kern.polylap(l, i as f64 * grid.h, 1.0)?;
        err = err.max((v - exact).abs());
        scale = scale.max(exact.abs());
    }
    Ok(err / scale)
}

/// Max-norm on `[0, r_max]` of the discrete linearised operator
/// `(-Delta)^m v - (m*-1) U_{0,Lambda}^{m*-2} v` applied to a radial profile `v`.
pub fn kernel_residual_of(v: impl Fn(f64) -> f64, big_lambda: f64, grid: RadialGrid, sp: &SpaceParams) -> Result<f64> {
    let kern = BubbleKernel::new(sp)?;
    let m = sp.m;
    let samples = grid.sample(2 * m, &v);
    let fd = radial_fd_polylaplacian(&samples, grid.h, m, sp)?;
    let p = sp.p();
    let mut res: f64 = 0.0;
    for (i, lv) in fd.iter().take(grid.nodes()).enumerate() {
        let r = i as f64 * grid.h;
        let u = kern.value(r, big_lambda);
        res = res.max((lv - p * u.powf(p - 1.0) * v(r)).abs());
    }
    Ok(res)
}

/// Residual of the linearised equation at `U_{0,Lambda}` applied to the kernel
/// element `dU/dlambda`.
pub fn linearized_kernel_residual(big_lambda: f64, grid: RadialGrid, sp: &SpaceParams) -> Result<f64> {
    if !(big_lambda > 0.0) {
        return Err(Error::InvalidParams(format!("Lambda must be positive, got {big_lambda}")));
    }
    let kern = BubbleKernel::new(sp)?;
    kernel_residual_of(|r| kern.dlambda(r, big_lambda), big_lambda, grid, sp)
}
