//! Exact interaction sums over a doubled-circle configuration and their
//! large-`k` asymptotics.

use std::f64::consts::PI;

use crate::config::DoubledCircleConfig;
use crate::error::{Error, Result};
use crate::params::SpaceParams;
use crate::quadrature::half_line_power_integral;

/// Neumaier-compensated sum.
pub fn compensated_sum(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for x in it {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// Riemann zeta for `s > 1`: direct sum to 64 terms plus an Euler-Maclaurin
/// tail, accurate well below `1e-12` for `s >= 1.5`.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::InvalidParams(format!("zeta needs s > 1, got {s}")));
    }
    const M: f64 = 64.0;
    let head = compensated_sum((1..64).map(|n| (n as f64).powf(-s)));
    let tail = M.powf(1.0 - s) / (s - 1.0) + 0.5 * M.powf(-s) + s * M.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * M.powf(-s - 3.0) / 720.0
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * M.powf(-s - 5.0) / 30240.0;
    Ok(head + tail)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParams(format!("gamma must be positive, got {gamma}")));
    }
    Ok(())
}

/// `sum_{j=2}^k |x_j^+ - x_1^+|^{-gamma}`.
pub fn lattice_sum_same(gamma: f64, cfg: &DoubledCircleConfig) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(compensated_sum((2..=cfg.k).map(|j| cfg.chord_same(j).powf(-gamma))))
}

/// `sum_{j=1}^k |x_j^- - x_1^+|^{-gamma}`.
pub fn lattice_sum_cross(gamma: f64, cfg: &DoubledCircleConfig) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(compensated_sum((1..=cfg.k).map(|j| cfg.chord_cross(j).powf(-gamma))))
}

/// `A1 = 2 zeta(gamma) / (2 pi r)^gamma`.
pub fn a1(gamma: f64, r_bar: f64) -> Result<f64> {
    Ok(2.0 * zeta(gamma)? / (2.0 * PI * r_bar).powf(gamma))
}

/// `A2 = (2/(2r)^gamma) (1/pi) int_0^inf (1+x^2)^{-gamma/2} dx`.
pub fn a2(gamma: f64, r_bar: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(Error::InvalidParams(format!("A2 needs gamma > 1, got {gamma}")));
    }
    Ok(2.0 / (2.0 * r_bar).powf(gamma) / PI * half_line_power_integral(gamma / 2.0))
}

/// Leading same-circle asymptotic: constant and predicted sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SameAsymptotic {
    pub a1: f64,
    pub predicted: f64,
}

/// `A1 k^gamma / (1-h^2)^{gamma/2}` with `gamma = N - 2m`.
pub fn asymptotic_same(cfg: &DoubledCircleConfig, sp: &SpaceParams) -> Result<SameAsymptotic> {
    let g = sp.gamma();
    let a = a1(g, cfg.r_bar)?;
    Ok(SameAsymptotic { a1: a, predicted: a * (cfg.k as f64).powf(g) / cfg.s().powf(g) })
}

/// Cross-circle asymptotic, or the two-sided bracket when `h k` is not large.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossAsymptotic {
    Leading { a2: f64, predicted: f64 },
    /// Bounds on `sum * h^{gamma-1} / k`.
    Bracket { lower: f64, upper: f64 },
}

/// Below this value of `h k` the leading cross asymptotic is not used.
pub const CROSS_REGIME_MIN_HK: f64 = 10.0;

/// `A2 k / (h^{gamma-1} sqrt(1-h^2))` when `h k >= CROSS_REGIME_MIN_HK`,
/// otherwise the bracket for `sum * h^{gamma-1}/k`.
pub fn asymptotic_cross(cfg: &DoubledCircleConfig, sp: &SpaceParams) -> Result<CrossAsymptotic> {
    let g = sp.gamma();
    let hk = cfg.h_bar * cfg.k as f64;
    if hk >= CROSS_REGIME_MIN_HK {
        let a = a2(g, cfg.r_bar)?;
        Ok(CrossAsymptotic::Leading {
            a2: a,
            predicted: a * cfg.k as f64 / (cfg.h_bar.powf(g - 1.0) * cfg.s()),
        })
    } else {
        Ok(cross_bracket(cfg, g))
    }
}

/// Bounds for `sum * h^{gamma-1}/k`: the `j = 1` term alone, and that term plus
/// an integral majorant of the rest.
pub fn cross_bracket(cfg: &DoubledCircleConfig, gamma: f64) -> CrossAsymptotic {
    let hk = cfg.h_bar * cfg.k as f64;
    let base = (2.0 * cfg.r_bar).powf(-gamma);
    let i = half_line_power_integral(gamma / 2.0);
    CrossAsymptotic::Bracket { lower: base / hk, upper: base * (1.0 / hk + i / cfg.s()) }
}
