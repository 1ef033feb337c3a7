//! Approximate solution `Z = xi Z*` with `Z* = sum_j U_{x_j, lambda}`.

use crate::bubble::{dist, BubbleKernel};
use crate::config::DoubledCircleConfig;
use crate::cutoff::Cutoff;
use crate::error::{Error, Result};
use crate::params::SpaceParams;

#[derive(Debug, Clone)]
pub struct Ansatz {
    pub centers: Vec<Vec<f64>>,
    pub lambda: f64,
    /// `None` gives `Z = Z*`.
    pub cutoff: Option<Cutoff>,
    pub sp: SpaceParams,
    kernel: BubbleKernel,
}

impl Ansatz {
    /// Bubbles at the `2k` configuration points.
    pub fn new(cfg: &DoubledCircleConfig, lambda: f64, cutoff: Option<Cutoff>, sp: &SpaceParams) -> Result<Self> {
        if cfg.dim() != sp.n {
            return Err(Error::InvalidParams(format!("configuration lives in R^{}, expected R^{}", cfg.dim(), sp.n)));
        }
        Self::from_centers(cfg.points(), lambda, cutoff, sp)
    }

    /// Bubbles at arbitrary centres.
    pub fn from_centers(centers: Vec<Vec<f64>>, lambda: f64, cutoff: Option<Cutoff>, sp: &SpaceParams) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidParams("ansatz needs at least one bubble".into()));
        }
        if centers.iter().any(|c| c.len() != sp.n) {
            return Err(Error::InvalidParams(format!("all centres must lie in R^{}", sp.n)));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParams(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { centers, lambda, cutoff, sp: *sp, kernel: BubbleKernel::new(sp)? })
    }

    pub fn kernel(&self) -> &BubbleKernel {
        &self.kernel
    }

    pub fn distances(&self, y: &[f64]) -> Vec<f64> {
        self.centers.iter().map(|c| dist(y, c)).collect()
    }

    /// `U_{x_j, lambda}(y)` for every bubble.
    pub fn bubble_values(&self, y: &[f64]) -> Vec<f64> {
        self.centers.iter().map(|c| self.kernel.value(dist(y, c), self.lambda)).collect()
    }

    pub fn xi(&self, y: &[f64]) -> f64 {
        self.cutoff.as_ref().map_or(1.0, |c| c.value(y))
    }

    pub fn z_star(&self, y: &[f64]) -> f64 {
        self.bubble_values(y).iter().sum()
    }

    pub fn z(&self, y: &[f64]) -> f64 {
        let xi = self.xi(y);
        if xi == 0.0 {
            0.0
        } else {
            xi * self.z_star(y)
        }
    }

    /// `sum_j U_j^{m*-1}(y) = (-Delta)^m Z*(y)`.
    pub fn sum_powers(&self, y: &[f64]) -> f64 {
        let p = self.sp.p();
        self.bubble_values(y).iter().map(|u| u.powf(p)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_vanishes_outside_support() {
        let sp = SpaceParams::new(6, 1).unwrap();
        let cfg = DoubledCircleConfig::new(3, 1.0, 0.5, vec![0.0; 3]).unwrap();
        let cut = Cutoff::new(1.0, vec![0.0; 3], 0.1, 1).unwrap();
        let a = Ansatz::new(&cfg, 50.0, Some(cut), &sp).unwrap();
        assert_eq!(a.z(&[0.0, 0.0, 1.25, 0.0, 0.0, 0.0]), 0.0);
        let y = cfg.point(1, true);
        assert_eq!(a.z(&y), a.z_star(&y));
    }

    #[test]
    fn z_star_is_sum_of_bubbles() {
        let sp = SpaceParams::new(7, 1).unwrap();
        let a = Ansatz::from_centers(vec![vec![0.0; 7], vec![1.0; 7]], 3.0, None, &sp).unwrap();
        let y = [0.2, 0.1, 0.0, -0.3, 0.4, 0.0, 0.1];
        let b = a.bubble_values(&y);
        assert!((a.z_star(&y) - b[0] - b[1]).abs() < 1e-14 * a.z_star(&y));
    }
}
