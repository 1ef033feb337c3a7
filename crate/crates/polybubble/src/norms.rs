//! Weighted sup-norms `||.||_*`, `||.||_**`, their sample sets, and the
//! synthetic corrector used as a test object.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ansatz::Ansatz;
use crate::error::{Error, Result};
use crate::params::SpaceParams;
use crate::quadrature::{random_direction, Proposal, TubeShell};

/// `log sum_j (1 + lambda d_j)^{-expo}`, evaluated stably.
pub fn log_weight(y: &[f64], centers: &[Vec<f64>], lambda: f64, expo: f64) -> f64 {
    let logs: Vec<f64> = centers
        .iter()
        .map(|c| -expo * (lambda * crate::bubble::dist(y, c)).ln_1p())
        .collect();
    let mx = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    mx + logs.iter().map(|l| (l - mx).exp()).sum::<f64>().ln()
}

/// Weight exponents and prefactors for the two norms.
#[derive(Debug, Clone, PartialEq)]
pub struct NormWeights {
    pub centers: Vec<Vec<f64>>,
    pub lambda: f64,
    pub tau: f64,
    pub sp: SpaceParams,
}

impl NormWeights {
    pub fn new(centers: Vec<Vec<f64>>, lambda: f64, tau: f64, sp: &SpaceParams) -> Self {
        Self { centers, lambda, tau, sp: *sp }
    }

    pub fn for_ansatz(a: &Ansatz, tau: f64) -> Self {
        Self::new(a.centers.clone(), a.lambda, tau, &a.sp)
    }

    /// `log W*(y)`, exponent `(N-2m)/2 + tau`.
    pub fn log_star(&self, y: &[f64]) -> f64 {
        log_weight(y, &self.centers, self.lambda, self.sp.half_gamma() + self.tau)
    }

    /// `log W**(y)`, exponent `(N+2m)/2 + tau`.
    pub fn log_doublestar(&self, y: &[f64]) -> f64 {
        log_weight(y, &self.centers, self.lambda, (self.sp.nf() + 2.0 * self.sp.mf()) / 2.0 + self.tau)
    }

    /// `log(lambda^{-(N-2m)/2} |u| / W*)`.
    pub fn log_star_ratio(&self, y: &[f64], u: f64) -> f64 {
        u.abs().ln() - self.sp.half_gamma() * self.lambda.ln() - self.log_star(y)
    }

    /// `log(lambda^{-(N+2m)/2} |f| / W**)`.
    pub fn log_doublestar_ratio(&self, y: &[f64], f: f64) -> f64 {
        f.abs().ln() - (self.sp.nf() + 2.0 * self.sp.mf()) / 2.0 * self.lambda.ln() - self.log_doublestar(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stratum {
    /// Shell around a bubble centre at fixed `lambda |y - x_j|`.
    Shell,
    /// `delta <= s <= 2 delta`, where the cutoff varies.
    Annulus,
    /// `s > 2 delta`.
    FarField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub strata: Vec<Stratum>,
}

/// Counts for [`build_samples`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSpec {
    pub dirs_per_shell: usize,
    pub annulus: usize,
    pub far_field: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self { dirs_per_shell: 6, annulus: 1500, far_field: 200 }
    }
}

/// `lambda |y - x_j|` values for the per-bubble shells: 0, 0.5, 1, 2, 5, 10,
/// then decades, capped at `lambda * cap`.
pub fn shell_radii(lambda: f64, cap: f64) -> Vec<f64> {
    let top = lambda * cap;
    let mut v: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0].into_iter().filter(|q| *q <= top).collect();
    let mut q = 100.0;
    while q < top {
        v.push(q);
        q *= 10.0;
    }
    v.push(top);
    v
}

/// Shells around every bubble out to `2 delta`, the cutoff annulus around
/// `(r0, y0'')`, and a far-field stratum. Deterministic in `seed`.
pub fn build_samples(a: &Ansatz, r0: f64, y0: &[f64], delta: f64, spec: SampleSpec, seed: u64) -> Result<SampleSet> {
    let n = a.sp.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    let mut strata = Vec::new();
    let radii = shell_radii(a.lambda, 2.0 * delta);
    for c in &a.centers {
        for &q in &radii {
            let count = if q == 0.0 { 1 } else { spec.dirs_per_shell };
            for _ in 0..count {
                let d = random_direction(&mut rng, n);
                points.push(c.iter().zip(&d).map(|(ci, di)| ci + q / a.lambda * di).collect());
                strata.push(Stratum::Shell);
            }
        }
    }
    let ann = TubeShell::new(n, r0, y0.to_vec(), delta, 2.0 * delta)?;
    for _ in 0..spec.annulus {
        points.push(ann.sample(&mut rng));
        strata.push(Stratum::Annulus);
    }
    let far_out = (4.0 * delta).min(0.9 * r0);
    if far_out > 2.0 * delta {
        let far = TubeShell::new(n, r0, y0.to_vec(), 2.0 * delta, far_out)?;
        for _ in 0..spec.far_field {
            points.push(far.sample(&mut rng));
            strata.push(Stratum::FarField);
        }
    }
    for scale in [2.0, 10.0] {
        let d = random_direction(&mut rng, n);
        points.push(d.iter().map(|x| x * scale * r0).collect());
        strata.push(Stratum::FarField);
    }
    Ok(SampleSet { points, strata })
}

fn sup_exp(logs: impl ParallelIterator<Item = f64>) -> f64 {
    let mx = logs.reduce(|| f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        0.0
    } else {
        mx.exp()
    }
}

/// `||u||_*` over the sample set.
pub fn star_norm(u: impl Fn(&[f64]) -> f64 + Sync, w: &NormWeights, samples: &SampleSet) -> Result<f64> {
    if samples.points.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(sup_exp(samples.points.par_iter().map(|y| w.log_star_ratio(y, u(y)))))
}

/// `||f||_**` over the sample set.
pub fn doublestar_norm(f: impl Fn(&[f64]) -> f64 + Sync, w: &NormWeights, samples: &SampleSet) -> Result<f64> {
    if samples.points.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(sup_exp(samples.points.par_iter().map(|y| w.log_doublestar_ratio(y, f(y)))))
}

/// `||f||_**` from precomputed values at the sample points.
pub fn doublestar_norm_of_values(values: &[f64], w: &NormWeights, samples: &SampleSet) -> Result<f64> {
    if samples.points.is_empty() || values.len() != samples.points.len() {
        return Err(Error::EmptySamples);
    }
    Ok(sup_exp(samples.points.par_iter().zip(values.par_iter()).map(|(y, v)| w.log_doublestar_ratio(y, *v))))
}

/// `phi = eps lambda^{(N-2m)/2} W*(y)`, so that `||phi||_* = eps` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorrector {
    pub eps: f64,
    pub weights: NormWeights,
}

impl SyntheticCorrector {
    pub fn new(eps: f64, weights: NormWeights) -> Self {
        Self { eps, weights }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        if self.eps == 0.0 {
            return 0.0;
        }
        let w = &self.weights;
        self.eps * (w.sp.half_gamma() * w.lambda.ln() + w.log_star(y)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DoubledCircleConfig;
    use crate::cutoff::Cutoff;

    fn setup() -> (Ansatz, SampleSet, NormWeights) {
        let sp = SpaceParams::new(6, 1).unwrap();
        let cfg = DoubledCircleConfig::new(3, 1.0, 0.6, vec![0.0; 3]).unwrap();
        let cut = Cutoff::new(1.0, vec![0.0; 3], 0.1, 1).unwrap();
        let a = Ansatz::new(&cfg, 200.0, Some(cut), &sp).unwrap();
        let s = build_samples(&a, 1.0, &[0.0; 3], 0.1, SampleSpec { dirs_per_shell: 3, annulus: 100, far_field: 20 }, 7)
            .unwrap();
        let w = NormWeights::for_ansatz(&a, 0.2);
        (a, s, w)
    }

    #[test]
    fn corrector_has_unit_weight() {
        let (_, s, w) = setup();
        let phi = SyntheticCorrector::new(0.3, w.clone());
        let n = star_norm(|y| phi.value(y), &w, &s).unwrap();
        assert!((n - 0.3).abs() < 1e-12);
        let n2 = star_norm(|y| 2.0 * phi.value(y), &w, &s).unwrap();
        assert!((n2 - 0.6).abs() < 1e-12);
        assert_eq!(star_norm(|_| 0.0, &w, &s).unwrap(), 0.0);
    }

    #[test]
    fn samples_are_deterministic_and_stratified() {
        let (a, s, _) = setup();
        let s2 = build_samples(&a, 1.0, &[0.0; 3], 0.1, SampleSpec { dirs_per_shell: 3, annulus: 100, far_field: 20 }, 7)
            .unwrap();
        assert_eq!(s, s2);
        for st in [Stratum::Shell, Stratum::Annulus, Stratum::FarField] {
            assert!(s.strata.contains(&st));
        }
    }

    #[test]
    fn empty_sample_set_is_an_error() {
        let (_, _, w) = setup();
        let e = SampleSet { points: vec![], strata: vec![] };
        assert_eq!(star_norm(|_| 1.0, &w, &e), Err(Error::EmptySamples));
    }

    #[test]
    fn log_weight_matches_direct_sum() {
        let c = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let y = [0.3, 0.2];
        let direct: f64 = c.iter().map(|x| (1.0 + 10.0 * crate::bubble::dist(&y, x)).powf(-2.5)).sum();
        assert!((log_weight(&y, &c, 10.0, 2.5) - direct.ln()).abs() < 1e-13);
    }
}
