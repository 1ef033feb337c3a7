//! Potentials `V(r, y'')` and the reduced function `W = r^{2m} V`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Synthetic potential presets. Each is bounded and nonnegative on the
/// region where it is used.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// `V = v0`.
    Constant { v0: f64 },
    /// `V = v0 (r0/max(r, r0/4))^{2m} (1 - depth exp(-q/width^2))` with
    /// `q = (r-r0)^2 + |y''-y0''|^2`; `W` has a nondegenerate minimum at `(r0, y0'')`.
    GaussianWell { v0: f64, r0: f64, y0: Vec<f64>, depth: f64, width: f64, m: usize },
    /// `V = v0 exp(-q/width^2)`; `W` has a maximum at
    /// `((r0 + sqrt(r0^2 + 4 m width^2))/2, y0'')`.
    GaussianBump { v0: f64, r0: f64, y0: Vec<f64>, width: f64 },
    /// `W = v0 r0^{2m} + kappa(|y''-y0''|^2 - (r-r0)^2)`, clipped at zero, with
    /// the same small-`r` clamp as the well; a saddle at `(r0, y0'')`.
    Saddle { v0: f64, r0: f64, y0: Vec<f64>, kappa: f64, m: usize },
    /// `V = v0 (r0/r)^c`; `W` is monotone in `r` when `c != 2m`.
    PowerLaw { v0: f64, r0: f64, c: f64 },
}

impl Potential {
    pub fn gaussian_well(v0: f64, r0: f64, y0: Vec<f64>, depth: f64, width: f64, m: usize) -> Result<Self> {
        if !(v0 > 0.0 && r0 > 0.0 && (0.0..1.0).contains(&depth) && width > 0.0) {
            return Err(Error::InvalidParams("gaussian well needs v0, r0, width > 0 and depth in [0,1)".into()));
        }
        Ok(Self::GaussianWell { v0, r0, y0, depth, width, m })
    }

    /// Multiply `V` by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut p = self.clone();
        match &mut p {
            Potential::Constant { v0 }
            | Potential::GaussianWell { v0, .. }
            | Potential::GaussianBump { v0, .. }
            | Potential::PowerLaw { v0, .. } => *v0 *= c,
            Potential::Saddle { v0, kappa, .. } => {
                *v0 *= c;
                *kappa *= c;
            }
        }
        p
    }

    fn q(r: f64, r0: f64, y: &[f64], y0: &[f64]) -> f64 {
        (r - r0) * (r - r0) + y.iter().zip(y0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    /// `V(r, y'')`.
    pub fn value(&self, r: f64, y: &[f64]) -> f64 {
        match self {
            Potential::Constant { v0 } => *v0,
            Potential::GaussianWell { v0, r0, y0, depth, width, m } => {
                let rc = r.max(r0 / 4.0);
                let e = (-Self::q(r, *r0, y, y0) / (width * width)).exp();
                v0 * (r0 / rc).powi(2 * *m as i32) * (1.0 - depth * e)
            }
            Potential::GaussianBump { v0, r0, y0, width } => v0 * (-Self::q(r, *r0, y, y0) / (width * width)).exp(),
            Potential::Saddle { v0, r0, y0, kappa, m } => {
                let rc = r.max(r0 / 4.0);
                let wq = Self::saddle_w(*v0, *r0, y0, *kappa, *m, r, y);
                wq.max(0.0) / rc.powi(2 * *m as i32)
            }
            Potential::PowerLaw { v0, r0, c } => v0 * (r0 / r).powf(*c),
        }
    }

    fn saddle_w(v0: f64, r0: f64, y0: &[f64], kappa: f64, m: usize, r: f64, y: &[f64]) -> f64 {
        let yy: f64 = y.iter().zip(y0).map(|(a, b)| (a - b) * (a - b)).sum();
        v0 * r0.powi(2 * m as i32) + kappa * (yy - (r - r0) * (r - r0))
    }

    /// `(dV/dr, dV/dy'')`.
    pub fn grad(&self, r: f64, y: &[f64]) -> (f64, Vec<f64>) {
        match self {
            Potential::Constant { .. } => (0.0, vec![0.0; y.len()]),
            Potential::GaussianWell { v0, r0, y0, depth, width, m } => {
                let w2 = width * width;
                let e = (-Self::q(r, *r0, y, y0) / w2).exp();
                let two_m = 2 * *m as i32;
                let (pre, dpre) = if r > r0 / 4.0 {
                    let p = v0 * (r0 / r).powi(two_m);
                    (p, -(two_m as f64) * p / r)
                } else {
                    (v0 * 4f64.powi(two_m), 0.0)
                };
                let bump = depth * e;
                let dr = dpre * (1.0 - bump) + pre * bump * 2.0 * (r - r0) / w2;
                let dy = y.iter().zip(y0).map(|(a, b)| pre * bump * 2.0 * (a - b) / w2).collect();
                (dr, dy)
            }
            Potential::GaussianBump { r0, y0, width, .. } => {
                let v = self.value(r, y);
                let w2 = width * width;
                (-2.0 * (r - r0) / w2 * v, y.iter().zip(y0).map(|(a, b)| -2.0 * (a - b) / w2 * v).collect())
            }
            Potential::Saddle { v0, r0, y0, kappa, m } => {
                let wq = Self::saddle_w(*v0, *r0, y0, *kappa, *m, r, y);
                if wq <= 0.0 {
                    return (0.0, vec![0.0; y.len()]);
                }
                let two_m = 2 * *m as i32;
                let rc = r.max(r0 / 4.0);
                let inv = rc.powi(-two_m);
                let mut dr = -2.0 * kappa * (r - r0) * inv;
                if r > r0 / 4.0 {
                    dr -= two_m as f64 * wq * inv / r;
                }
                (dr, y.iter().zip(y0).map(|(a, b)| 2.0 * kappa * (a - b) * inv).collect())
            }
            Potential::PowerLaw { c, .. } => (-c * self.value(r, y) / r, vec![0.0; y.len()]),
        }
    }

    /// `W = r^{2m} V`.
    pub fn w(&self, r: f64, y: &[f64], m: usize) -> f64 {
        r.powi(2 * m as i32) * self.value(r, y)
    }

    /// Gradient of `W = r^{2m} V` in `(r, y'')`.
    pub fn w_grad(&self, r: f64, y: &[f64], m: usize) -> Vec<f64> {
        let (dr, dy) = self.grad(r, y);
        let r2m = r.powi(2 * m as i32);
        let mut g = Vec::with_capacity(1 + y.len());
        g.push(2.0 * m as f64 * r.powi(2 * m as i32 - 1) * self.value(r, y) + r2m * dr);
        g.extend(dy.into_iter().map(|d| r2m * d));
        g
    }

    /// Central-difference gradient of `W`; oracle for [`Potential::w_grad`].
    pub fn w_grad_fd(&self, r: f64, y: &[f64], m: usize, h: f64) -> Vec<f64> {
        let mut g = vec![(self.w(r + h, y, m) - self.w(r - h, y, m)) / (2.0 * h)];
        for i in 0..y.len() {
            let mut yp = y.to_vec();
            let mut ym = y.to_vec();
            yp[i] += h;
            ym[i] -= h;
            g.push((self.w(r, &yp, m) - self.w(r, &ym, m)) / (2.0 * h));
        }
        g
    }

    /// Hessian of `W` by central differences of the analytic gradient, symmetrised.
    pub fn w_hessian(&self, r: f64, y: &[f64], m: usize, h: f64) -> DMatrix<f64> {
        let d = 1 + y.len();
        let mut hm = DMatrix::zeros(d, d);
        for i in 0..d {
            let mut xp: Vec<f64> = std::iter::once(r).chain(y.iter().copied()).collect();
            let mut xm = xp.clone();
            xp[i] += h;
            xm[i] -= h;
            let gp = self.w_grad(xp[0], &xp[1..], m);
            let gm = self.w_grad(xm[0], &xm[1..], m);
            for j in 0..d {
                hm[(j, i)] = (gp[j] - gm[j]) / (2.0 * h);
            }
        }
        (&hm + hm.transpose()) * 0.5
    }

    /// The critical point of `W` the preset is built around, if any.
    pub fn declared_critical_point(&self, m: usize) -> Option<(f64, Vec<f64>)> {
        match self {
            Potential::GaussianWell { r0, y0, .. } | Potential::Saddle { r0, y0, .. } => Some((*r0, y0.clone())),
            Potential::GaussianBump { r0, y0, width, .. } => {
                let r = 0.5 * (r0 + (r0 * r0 + 4.0 * m as f64 * width * width).sqrt());
                Some((r, y0.clone()))
            }
            Potential::Constant { .. } | Potential::PowerLaw { .. } => None,
        }
    }

    /// Preset name as used in configuration files.
    pub fn name(&self) -> &'static str {
        match self {
            Potential::Constant { .. } => "constant",
            Potential::GaussianWell { .. } => "gaussian_well",
            Potential::GaussianBump { .. } => "gaussian_bump",
            Potential::Saddle { .. } => "saddle",
            Potential::PowerLaw { .. } => "power_law",
        }
    }
}
