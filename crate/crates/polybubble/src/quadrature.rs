//! Radial and axisymmetric reductions of integrals over `R^N`, Beta/Gamma
//! closed forms, and importance-sampled Monte Carlo.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::bubble::{dist, BubbleKernel};
use crate::config::tube_distance;
use crate::error::{Error, Result};
use crate::params::SpaceParams;

/// Error targets for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    /// Default for one-dimensional integrals.
    pub const ONE_D: Tolerance = Tolerance { abs: 1e-10, rel: 1e-12, max_intervals: 4000 };
    /// Default for nested two-dimensional integrals.
    pub const TWO_D: Tolerance = Tolerance { abs: 1e-8, rel: 1e-10, max_intervals: 2000 };

    pub fn rel(rel: f64) -> Self {
        Tolerance { abs: 0.0, rel, max_intervals: 4000 }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

/// Value, error estimate and convergence flag of an adaptive integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl QuadResult {
    pub(crate) fn zero() -> Self {
        QuadResult { value: 0.0, abs_err: 0.0, converged: true, evaluations: 0 }
    }

    pub(crate) fn add(self, o: QuadResult) -> Self {
        QuadResult {
            value: self.value + o.value,
            abs_err: self.abs_err + o.abs_err,
            converged: self.converged && o.converged,
            evaluations: self.evaluations + o.evaluations,
        }
    }

    /// Turn a non-converged result into an error.
    pub fn require(self, what: &str) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::Quadrature(format!("{what}: value {} with error {}", self.value, self.abs_err)))
        }
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Gauss-Kronrod panel with the QUADPACK error heuristic.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = hl * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let dh = hl.abs();
    let result = resk * hl;
    resabs *= dh;
    resasc *= dh;
    let mut err = ((resk - resg) * hl).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (1.0f64).min((200.0 * err / resasc).powf(1.5));
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Adaptive Gauss-Kronrod integral of `f` over the finite interval `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    if a == b {
        return QuadResult::zero();
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e });
    let mut total = v;
    let mut total_err = e;
    let mut evals = 15;
    while total_err > tol.target(total) && heap.len() < tol.max_intervals {
        let p = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(&f, p.a, mid);
        let (v2, e2) = gk15(&f, mid, p.b);
        evals += 30;
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: p.b, value: v2, err: e2 });
    }
    // Re-sum to shed drift from the running updates.
    let mut value = 0.0;
    let mut err = 0.0;
    for p in heap.iter() {
        value += p.value;
        err += p.err;
    }
    QuadResult { value, abs_err: err, converged: err <= tol.target(value), evaluations: evals }
}

/// Integral over `[a, inf)` through `x = a + scale*tan(theta)`.
pub fn integrate_to_infinity(f: impl Fn(f64) -> f64, a: f64, scale: f64, tol: Tolerance) -> QuadResult {
    integrate(
        |th| {
            let c = th.cos();
            if c <= 0.0 {
                return 0.0;
            }
            let v = f(a + scale * th.tan());
            if v == 0.0 {
                0.0
            } else {
                v * scale / (c * c)
            }
        },
        0.0,
        FRAC_PI_2,
        tol,
    )
}

/// Integral over the whole line split at the sorted breakpoints; both tails
/// use the tangent map with the given length scale.
pub fn integrate_line(f: impl Fn(f64) -> f64, breaks: &[f64], scale: f64, tol: Tolerance) -> QuadResult {
    let mut b: Vec<f64> = breaks.to_vec();
    if b.is_empty() {
        b.push(0.0);
    }
    b.sort_by(f64::total_cmp);
    b.dedup();
    let pieces = b.len() + 1;
    let t = Tolerance { abs: tol.abs / pieces as f64, ..tol };
    let mut r = integrate_to_infinity(|x| f(b[0] - x), 0.0, scale, t);
    for w in b.windows(2) {
        r = r.add(integrate(&f, w[0], w[1], t));
    }
    r.add(integrate_to_infinity(&f, *b.last().expect("non-empty"), scale, t))
}

/// Surface measure of the unit sphere `S^{N-1}`.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

/// `B(a, b)`.
pub fn beta_fn(a: f64, b: f64) -> f64 {
    ln_beta(a, b).exp()
}

/// `int_0^inf (1 + x^2)^{-p} dx = (sqrt(pi)/2) Gamma(p - 1/2)/Gamma(p)` for `p > 1/2`.
pub fn half_line_power_integral(p: f64) -> f64 {
    0.5 * PI.sqrt() * (ln_gamma(p - 0.5) - ln_gamma(p)).exp()
}

/// `|S^{N-1}| * int_0^inf f(r) r^{N-1} dr` for a radial integrand; `scale`
/// is the length scale of the tangent map, `breaks` optional radial
/// breakpoints.
pub fn radial_integral_with(
    f: impl Fn(f64) -> f64,
    n: usize,
    scale: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> QuadResult {
    let nm1 = (n - 1) as i32;
    let g = |r: f64| {
        let v = f(r);
        if v == 0.0 {
            0.0
        } else {
            v * r.powi(nm1)
        }
    };
    let mut b: Vec<f64> = breaks.iter().copied().filter(|&x| x > 0.0).collect();
    b.sort_by(f64::total_cmp);
    b.dedup();
    let mut r = QuadResult::zero();
    let mut lo = 0.0;
    for &x in &b {
        r = r.add(integrate(g, lo, x, tol));
        lo = x;
    }
    r = r.add(integrate_to_infinity(g, lo, scale, tol));
    let s = sphere_area(n);
    QuadResult { value: s * r.value, abs_err: s * r.abs_err, ..r }
}

/// Radial integral with the default scale and tolerance.
pub fn radial_integral(f: impl Fn(f64) -> f64, n: usize) -> QuadResult {
    radial_integral_with(f, n, 1.0, &[], Tolerance::ONE_D)
}

/// Closed form and quadrature values of one integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualPath {
    pub closed: f64,
    pub numeric: f64,
    pub numeric_err: f64,
}

impl DualPath {
    pub fn rel_diff(&self) -> f64 {
        (self.closed - self.numeric).abs() / self.closed.abs()
    }
}

/// `int U_{0,1}^2`, finite only for `N > 4m`.
pub fn integral_u2_closed(sp: &SpaceParams) -> Result<f64> {
    if sp.n <= 4 * sp.m {
        return Err(Error::Divergent(format!("int U^2 needs N > 4m, got N={}, m={}", sp.n, sp.m)));
    }
    let n = sp.nf();
    Ok(sp.prefactor().powf(sp.gamma() / (2.0 * sp.mf()))
        * sphere_area(sp.n)
        * 0.5
        * beta_fn(n / 2.0, n / 2.0 - 2.0 * sp.mf()))
}

/// `int U_{0,1}^2` by closed form and by adaptive radial quadrature.
pub fn integral_u2(sp: &SpaceParams) -> Result<DualPath> {
    let closed = integral_u2_closed(sp)?;
    let k = BubbleKernel::new(sp)?;
    let q = radial_integral_with(|r| k.value(r, 1.0).powi(2), sp.n, 1.0, &[], Tolerance::rel(1e-13));
    Ok(DualPath { closed, numeric: q.require("int U^2")?, numeric_err: q.abs_err })
}

/// `int U_{0,1}^{m*-1}`.
pub fn integral_up_closed(sp: &SpaceParams) -> f64 {
    let n = sp.nf();
    sp.prefactor().powf((n + 2.0 * sp.mf()) / (4.0 * sp.mf())) * sphere_area(sp.n) * 0.5 * beta_fn(n / 2.0, sp.mf())
}

/// `int U_{0,1}^{m*-1}` by closed form and by adaptive radial quadrature.
pub fn integral_umstar_minus1(sp: &SpaceParams) -> Result<DualPath> {
    let closed = integral_up_closed(sp);
    let k = BubbleKernel::new(sp)?;
    let p = sp.p();
    let q = radial_integral_with(|r| k.value(r, 1.0).powf(p), sp.n, 1.0, &[], Tolerance::rel(1e-13));
    Ok(DualPath { closed, numeric: q.require("int U^{m*-1}")?, numeric_err: q.abs_err })
}

/// `int U_{0,1}^{m*}`.
pub fn integral_umstar_closed(sp: &SpaceParams) -> f64 {
    let h = sp.nf() / 2.0;
    sp.prefactor().powf(sp.nf() / (2.0 * sp.mf())) * sphere_area(sp.n) * 0.5 * beta_fn(h, h)
}

/// Options for the nested axisymmetric integral.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisymOptions {
    /// Axial breakpoints (peaks of the integrand).
    pub z_breaks: Vec<f64>,
    /// Length scale for the tangent maps.
    pub scale: f64,
    pub outer: Tolerance,
    pub inner: Tolerance,
}

impl Default for AxisymOptions {
    fn default() -> Self {
        Self {
            z_breaks: vec![0.0],
            scale: 1.0,
            outer: Tolerance::TWO_D,
            inner: Tolerance { abs: 1e-12, rel: 1e-11, max_intervals: 2000 },
        }
    }
}

/// `|S^{N-2}| * int dz int_0^inf g(z, rho) rho^{N-2} drho` for an integrand
/// depending on position only through axial coordinate `z` and transverse
/// radius `rho`.
pub fn axisym_integral(g: impl Fn(f64, f64) -> f64 + Sync, n: usize, opts: &AxisymOptions) -> Result<QuadResult> {
    if n < 2 {
        return Err(Error::InvalidParams("axisymmetric reduction needs N >= 2".into()));
    }
    let nm2 = (n - 2) as i32;
    let inner_ok = std::sync::atomic::AtomicBool::new(true);
    let outer = integrate_line(
        |z| {
            let r = integrate_to_infinity(
                |rho| {
                    let v = g(z, rho);
                    if v == 0.0 {
                        0.0
                    } else {
                        v * rho.powi(nm2)
                    }
                },
                0.0,
                opts.scale,
                opts.inner,
            );
            if !r.converged {
                inner_ok.store(false, std::sync::atomic::Ordering::Relaxed);
            }
            r.value
        },
        &opts.z_breaks,
        opts.scale,
        opts.outer,
    );
    let s = sphere_area(n - 1);
    Ok(QuadResult {
        value: s * outer.value,
        abs_err: s * outer.abs_err,
        converged: outer.converged && inner_ok.into_inner(),
        evaluations: outer.evaluations,
    })
}

/// Sampling density for importance-sampled Monte Carlo.
pub trait Proposal: Sync {
    fn dim(&self) -> usize;
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
    fn density(&self, y: &[f64]) -> f64;
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Number of independent strata; fixed so results do not depend on the thread count.
pub const MC_STRATA: usize = 16;

/// Importance-sampled estimate of `int f` with proposal `q`. Strata use
/// independent ChaCha streams of the master seed and are merged in order.
pub fn importance_mc<P: Proposal, F: Fn(&[f64]) -> f64 + Sync>(q: &P, f: F, n_samples: usize, seed: u64) -> McEstimate {
    if n_samples == 0 {
        return McEstimate { estimate: 0.0, std_error: 0.0, n_samples: 0 };
    }
    let per = n_samples.div_ceil(MC_STRATA);
    let parts: Vec<(usize, f64, f64)> = (0..MC_STRATA)
        .into_par_iter()
        .map(|s| {
            let count = per.min(n_samples.saturating_sub(s * per));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64 + 1);
            let mut mean = 0.0;
            let mut m2 = 0.0;
            for i in 0..count {
                let y = q.sample(&mut rng);
                let d = q.density(&y);
                let w = if d > 0.0 { f(&y) / d } else { 0.0 };
                let delta = w - mean;
                mean += delta / (i + 1) as f64;
                m2 += delta * (w - mean);
            }
            (count, mean, m2)
        })
        .collect();
    let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for (c, mu, s2) in parts {
        if c == 0 {
            continue;
        }
        let tot = n + c;
        let delta = mu - mean;
        mean += delta * c as f64 / tot as f64;
        m2 += s2 + delta * delta * (n as f64) * (c as f64) / tot as f64;
        n = tot;
    }
    let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    McEstimate { estimate: mean, std_error: (var / n as f64).sqrt(), n_samples: n }
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 1e-300 {
            return v.into_iter().map(|x| x / nrm).collect();
        }
    }
}

/// Uniform random direction in `R^d`.
pub fn random_direction(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    random_unit(rng, d)
}

/// Equal-weight mixture of normalised `U_{x_j,lambda}^2` densities (needs `N > 4m`).
#[derive(Debug, Clone)]
pub struct BubbleMixture {
    pub centers: Vec<Vec<f64>>,
    pub lambda: f64,
    kernel: BubbleKernel,
    norm: f64,
    radial: Beta<f64>,
}

impl BubbleMixture {
    pub fn new(centers: Vec<Vec<f64>>, lambda: f64, sp: &SpaceParams) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::EmptySamples);
        }
        let norm = integral_u2_closed(sp)? * lambda.powf(-2.0 * sp.mf());
        let radial = Beta::new(sp.nf() / 2.0, sp.nf() / 2.0 - 2.0 * sp.mf())
            .map_err(|e| Error::InvalidParams(e.to_string()))?;
        Ok(Self { centers, lambda, kernel: BubbleKernel::new(sp)?, norm, radial })
    }
}

impl Proposal for BubbleMixture {
    fn dim(&self) -> usize {
        self.centers[0].len()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let j = rng.random_range(0..self.centers.len());
        let u: f64 = self.radial.sample(rng);
        let r = (u / (1.0 - u)).sqrt() / self.lambda;
        let dir = random_unit(rng, self.dim());
        self.centers[j].iter().zip(dir).map(|(c, d)| c + r * d).collect()
    }

    fn density(&self, y: &[f64]) -> f64 {
        let s: f64 = self.centers.iter().map(|c| self.kernel.value(dist(y, c), self.lambda).powi(2)).sum();
        s / (self.norm * self.centers.len() as f64)
    }
}

/// Uniform density on the shell `r_in <= s <= r_out` where `s` is the distance
/// of `(|y'|, y'')` from `(r0, y0'')`, `y' = (y_1, y_2, y_3)`.
#[derive(Debug, Clone)]
pub struct TubeShell {
    pub n: usize,
    pub r0: f64,
    pub y0: Vec<f64>,
    pub r_in: f64,
    pub r_out: f64,
    volume_d: f64,
}

impl TubeShell {
    pub fn new(n: usize, r0: f64, y0: Vec<f64>, r_in: f64, r_out: f64) -> Result<Self> {
        if n < 3 || y0.len() != n - 3 {
            return Err(Error::InvalidParams(format!("tube shell needs N >= 3 and N-3 anchor coordinates, got N={n}")));
        }
        if !(0.0 <= r_in && r_in < r_out && r_out < r0) {
            return Err(Error::InvalidParams(format!("need 0 <= r_in < r_out < r0, got {r_in}, {r_out}, {r0}")));
        }
        let d = n - 2;
        let volume_d = sphere_area(d) / d as f64 * (r_out.powi(d as i32) - r_in.powi(d as i32));
        Ok(Self { n, r0, y0, r_in, r_out, volume_d })
    }

    /// Lebesgue measure of the shell's preimage in `R^N`.
    pub fn volume(&self) -> f64 {
        let d = self.n - 2;
        let m2 = |t: f64| -> f64 {
            // int over the d-ball of radius t of rho^2, rho = r0 + first coordinate
            let sd = sphere_area(d);
            sd * (self.r0 * self.r0 * t.powi(d as i32) / d as f64 + t.powi(d as i32 + 2) / (d as f64 * (d as f64 + 2.0)))
        };
        4.0 * PI * (m2(self.r_out) - m2(self.r_in))
    }
}

impl Proposal for TubeShell {
    fn dim(&self) -> usize {
        self.n
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let d = self.n - 2;
        let dir = random_unit(rng, d);
        let u: f64 = rng.random();
        let di = d as i32;
        let t = (self.r_in.powi(di) + u * (self.r_out.powi(di) - self.r_in.powi(di))).powf(1.0 / d as f64);
        let rho = self.r0 + t * dir[0];
        let om = random_unit(rng, 3);
        let mut y = Vec::with_capacity(self.n);
        y.extend(om.iter().map(|w| rho * w));
        y.extend(self.y0.iter().zip(&dir[1..]).map(|(c, w)| c + t * w));
        y
    }

    fn density(&self, y: &[f64]) -> f64 {
        let s = tube_distance(y, self.r0, &self.y0);
        if s < self.r_in || s > self.r_out {
            return 0.0;
        }
        let rho2 = y[..3].iter().map(|x| x * x).sum::<f64>();
        1.0 / (self.volume_d * 4.0 * PI * rho2)
    }
}
