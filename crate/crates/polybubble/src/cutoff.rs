//! Smooth cutoff `xi(y) = xi_hat(|(|y'|, y'') - (r0, y0'')|)`.

use crate::config::tube_distance;
use crate::error::{Error, Result};

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `xi_hat(s) = 1 - S_n((s - delta)/delta)` with the order-`n` smoothstep
/// `S_n(x) = x^{n+1} sum_{k=0}^n C(n+k, k) C(2n+1, n-k) (-x)^k`, `n = 2m+1`.
/// `xi_hat` is `C^n` on the half-line, identically 1 on `[0, delta]` and 0 on `[2 delta, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cutoff {
    pub r0: f64,
    pub y0: Vec<f64>,
    pub delta: f64,
    pub order: usize,
    /// Monomial coefficients of `S_n` in `x`, lowest degree first.
    coeffs: Vec<f64>,
}

impl Cutoff {
    pub fn new(r0: f64, y0: Vec<f64>, delta: f64, m: usize) -> Result<Self> {
        if !(delta > 0.0 && r0 > 2.0 * delta) {
            return Err(Error::InvalidParams(format!("cutoff needs 0 < 2 delta < r0, got delta={delta}, r0={r0}")));
        }
        let n = 2 * m + 1;
        let mut coeffs = vec![0.0; 2 * n + 2];
        for k in 0..=n {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[n + 1 + k] = sign * binom(n + k, k) * binom(2 * n + 1, n - k);
        }
        Ok(Self { r0, y0, delta, order: n, coeffs })
    }

    /// `j`-th derivative of `S_n` at `x` in `[0, 1/2]` from the monomial form.
    fn smoothstep_deriv(&self, x: f64, j: usize) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(d, _)| *d >= j)
            .map(|(d, &c)| c * (0..j).map(|i| (d - i) as f64).product::<f64>() * x.powi((d - j) as i32))
            .sum()
    }

    /// `j`-th derivative of `xi_hat` at `s`.
    pub fn profile_deriv(&self, s: f64, j: usize) -> f64 {
        let x = (s - self.delta) / self.delta;
        if x <= 0.0 {
            return if j == 0 { 1.0 } else { 0.0 };
        }
        if x >= 1.0 {
            return 0.0;
        }
        let scale = self.delta.powi(-(j as i32));
        // xi_hat(s) = 1 - S(x) = S(1 - x); use whichever argument is below 1/2
        // so the alternating monomial sum does not cancel.
        if x <= 0.5 {
            let v = self.smoothstep_deriv(x, j) * scale;
            if j == 0 {
                1.0 - v
            } else {
                -v
            }
        } else {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * self.smoothstep_deriv(1.0 - x, j) * scale
        }
    }

    /// `xi_hat(s)`.
    pub fn profile(&self, s: f64) -> f64 {
        self.profile_deriv(s, 0)
    }

    /// Tube distance `s(y)`.
    #[inline]
    pub fn distance(&self, y: &[f64]) -> f64 {
        tube_distance(y, self.r0, &self.y0)
    }

    /// `xi(y)`.
    pub fn value(&self, y: &[f64]) -> f64 {
        self.profile(self.distance(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_monotone() {
        for m in 1..=3 {
            let c = Cutoff::new(1.0, vec![], 0.1, m).unwrap();
            assert_eq!(c.profile(0.05), 1.0);
            assert_eq!(c.profile(0.25), 0.0);
            assert!((c.profile(0.1 + 1e-12) - 1.0).abs() < 1e-12);
            assert!(c.profile(0.2 - 1e-12).abs() < 1e-12);
            let mut prev = 1.0;
            for i in 0..=200 {
                let v = c.profile(0.1 + 0.1 * i as f64 / 200.0);
                assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
                prev = v;
            }
            assert!((c.profile(0.15) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_vanish_at_both_ends() {
        let m = 2;
        let c = Cutoff::new(1.0, vec![], 0.1, m).unwrap();
        for j in 1..=c.order {
            for s in [0.1 + 1e-13, 0.2 - 1e-13] {
                let d = c.profile_deriv(s, j) * 0.1f64.powi(j as i32);
                assert!(d.abs() < 1e-6, "j={j} s={s}: {d}");
            }
        }
    }

    #[test]
    fn derivative_matches_fd() {
        let c = Cutoff::new(1.0, vec![0.0], 0.1, 1).unwrap();
        for j in 0..3 {
            let s = 0.137;
            let h = 1e-6;
            let fd = (c.profile_deriv(s + h, j) - c.profile_deriv(s - h, j)) / (2.0 * h);
            let an = c.profile_deriv(s, j + 1);
            assert!((fd - an).abs() < 1e-5 * an.abs().max(1.0), "j={j}: {fd} vs {an}");
        }
    }
}
