//! Dimension/order pair and the exponents derived from it.

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Default slack for the first regime.
pub const DEFAULT_IOTA: f64 = 0.5;

/// The pair `(N, m)` with slack `iota`, plus all derived exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceParams {
    pub n: usize,
    pub m: usize,
    pub iota: f64,
}

impl SpaceParams {
    /// Parameters valid for bubble-only work (`N > 2m`).
    pub fn new(n: usize, m: usize) -> Result<Self> {
        Self::with_iota(n, m, DEFAULT_IOTA)
    }

    pub fn with_iota(n: usize, m: usize, iota: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParams("m must be at least 1".into()));
        }
        if n <= 2 * m {
            return Err(Error::InvalidParams(format!("need N > 2m, got N={n}, m={m}")));
        }
        if !(iota.is_finite() && iota > 0.0) {
            return Err(Error::InvalidParams(format!("iota must be positive, got {iota}")));
        }
        Ok(Self { n, m, iota })
    }

    /// Parameters valid for the full construction: `N > 4m+1` and `0 < iota < N-4m`.
    pub fn pipeline(n: usize, m: usize, iota: f64) -> Result<Self> {
        let sp = Self::with_iota(n, m, iota)?;
        sp.validate_pipeline()?;
        Ok(sp)
    }

    pub fn validate_pipeline(&self) -> Result<()> {
        if self.n <= 4 * self.m + 1 {
            return Err(Error::InvalidParams(format!(
                "full construction needs N > 4m+1, got N={}, m={}",
                self.n, self.m
            )));
        }
        if self.iota >= (self.n - 4 * self.m) as f64 {
            return Err(Error::InvalidParams(format!(
                "iota must lie in (0, N-4m) = (0, {}), got {}",
                self.n - 4 * self.m,
                self.iota
            )));
        }
        Ok(())
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn mf(&self) -> f64 {
        self.m as f64
    }

    /// `N - 2m`, the decay exponent of a bubble.
    pub fn gamma(&self) -> f64 {
        (self.n - 2 * self.m) as f64
    }

    /// `(N-2m)/2`.
    pub fn half_gamma(&self) -> f64 {
        0.5 * self.gamma()
    }

    /// Exact critical exponent `2N/(N-2m)`.
    pub fn m_star_exact(&self) -> Ratio<i64> {
        Ratio::new(2 * self.n as i64, (self.n - 2 * self.m) as i64)
    }

    pub fn m_star(&self) -> f64 {
        2.0 * self.nf() / self.gamma()
    }

    /// Nonlinearity power `m* - 1 = (N+2m)/(N-2m)`.
    pub fn p(&self) -> f64 {
        (self.nf() + 2.0 * self.mf()) / self.gamma()
    }

    /// `P_{m,N}` in exact integer arithmetic.
    pub fn prefactor_exact(&self) -> i128 {
        let (n, m) = (self.n as i128, self.m as i128);
        (-m..m).map(|h| n + 2 * h).product()
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor_exact() as f64
    }

    /// `P^{(N-2m)/(4m)}`, the amplitude of a unit bubble at its centre.
    pub fn amplitude(&self) -> f64 {
        self.prefactor().powf(self.gamma() / (4.0 * self.mf()))
    }

    pub fn alpha(&self) -> f64 {
        (self.n as f64) - 4.0 * self.mf() - self.iota
    }

    /// `tau` for the first regime, `(N-4m-alpha)/(N-2m-alpha) = iota/(2m+iota)`.
    pub fn tau_case1(&self) -> f64 {
        let a = self.alpha();
        (self.nf() - 4.0 * self.mf() - a) / (self.nf() - 2.0 * self.mf() - a)
    }

    /// `tau` for the second and third regimes, `(N-4m)/(N-2m)`.
    pub fn tau_case23(&self) -> f64 {
        (self.nf() - 4.0 * self.mf()) / self.gamma()
    }

    pub fn beta1(&self) -> f64 {
        self.alpha() / self.gamma()
    }

    pub fn beta2(&self) -> f64 {
        (self.nf() - 4.0 * self.mf()) / self.gamma()
    }

    /// `(2m - N)/2 + N/m*` in exact arithmetic; the whole-space Pohozaev
    /// balance forces this to vanish.
    pub fn pohozaev_exponent_exact(&self) -> Ratio<i64> {
        let n = self.n as i64;
        let m = self.m as i64;
        Ratio::new(2 * m - n, 2) + Ratio::from_integer(n) / self.m_star_exact()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefactor_examples() {
        assert_eq!(SpaceParams::new(6, 1).unwrap().prefactor_exact(), 24);
        assert_eq!(SpaceParams::new(10, 2).unwrap().prefactor_exact(), 5760);
        assert_eq!(SpaceParams::new(3, 1).unwrap().prefactor_exact(), 3);
    }

    #[test]
    fn rejects_invalid_pairs() {
        assert!(SpaceParams::new(4, 2).is_err());
        assert!(SpaceParams::new(5, 0).is_err());
        assert!(SpaceParams::pipeline(9, 2, 0.5).is_err());
        assert!(SpaceParams::pipeline(6, 1, 2.0).is_err());
        assert!(SpaceParams::pipeline(6, 1, 0.5).is_ok());
    }

    #[test]
    fn derived_exponents_case_6_1() {
        let sp = SpaceParams::pipeline(6, 1, 0.5).unwrap();
        assert_eq!(sp.m_star_exact(), Ratio::from_integer(3));
        assert!((sp.alpha() - 1.5).abs() < 1e-15);
        assert!((sp.tau_case1() - 0.2).abs() < 1e-15);
        assert!((sp.tau_case1() - sp.iota / (2.0 * sp.mf() + sp.iota)).abs() < 1e-15);
        assert!((sp.beta1() - 0.375).abs() < 1e-15);
        assert!((sp.beta2() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pohozaev_exponent_vanishes() {
        for n in 3..=20 {
            for m in 1..=4 {
                if let Ok(sp) = SpaceParams::new(n, m) {
                    assert_eq!(sp.pohozaev_exponent_exact(), Ratio::from_integer(0));
                }
            }
        }
    }
}
