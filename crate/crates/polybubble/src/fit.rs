//! Least-squares fits used by the scaling studies.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ordinary least-squares line `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParams(format!("line fit needs >= 2 paired points, got {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParams("line fit needs distinct abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    Ok(LineFit { intercept, slope, rms })
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParams("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

/// Least squares `A c ~ b` by SVD; returns coefficients and RMS residual.
pub fn lstsq(rows: &[Vec<f64>], b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = rows.len();
    if n == 0 || n != b.len() {
        return Err(Error::InvalidParams("least squares needs matching non-empty rows".into()));
    }
    let p = rows[0].len();
    let a = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let bv = DVector::from_column_slice(b);
    let svd = a.clone().svd(true, true);
    let c = svd.solve(&bv, 1e-14).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let r = &a * &c - &bv;
    Ok((c.iter().copied().collect(), (r.norm_squared() / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x: Vec<f64> = (1..6).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(-1.5)).collect();
        let f = loglog_slope(&x, &y).unwrap();
        assert!((f.slope + 1.5).abs() < 1e-12 && f.rms < 1e-12);
    }

    #[test]
    fn two_variable_fit() {
        let mut rows = vec![];
        let mut b = vec![];
        for d in [1.0f64, 2.0, 4.0] {
            for l in [10.0f64, 20.0] {
                rows.push(vec![1.0, d.ln(), l.ln()]);
                b.push(0.3 - 4.0 * d.ln() - 5.0 * l.ln());
            }
        }
        let (c, rms) = lstsq(&rows, &b).unwrap();
        assert!((c[1] + 4.0).abs() < 1e-10 && (c[2] + 5.0).abs() < 1e-10 && rms < 1e-10);
    }
}
