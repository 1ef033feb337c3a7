//! Flat `key = value` run configuration. `#` starts a comment; lists are
//! comma-separated. Unknown or repeated keys are rejected.

use std::collections::BTreeMap;

use polybubble::norms::SampleSpec;
use polybubble::{Potential, Regime, RegimeParams, SpaceParams};

use crate::CliError;

pub const KNOWN_KEYS: &[&str] = &[
    "n",
    "m",
    "iota",
    "case",
    "m1",
    "a",
    "m2",
    "a_const",
    "l0",
    "l1",
    "theta",
    "delta",
    "r0",
    "y0",
    "potential",
    "v0",
    "depth",
    "width",
    "kappa",
    "power_c",
    "k_values",
    "lambda_grid",
    "t0",
    "init_r",
    "init_y",
    "seed",
    "out",
    "lattice_h",
    "lattice_k",
    "samples_dirs",
    "samples_annulus",
    "samples_far",
    "eps_list",
    "rho",
    "mc_samples",
    "degree_radius",
    "degree_segments",
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub sp: SpaceParams,
    pub rp: RegimeParams,
    pub delta: f64,
    pub r0: f64,
    pub y0: Vec<f64>,
    pub potential: Potential,
    /// `None` when the key is absent; `Some(vec![])` when given but empty.
    pub k_values: Option<Vec<usize>>,
    pub lambda_grid: Option<Vec<f64>>,
    pub t0: f64,
    pub init_r: f64,
    pub init_y: Vec<f64>,
    pub seed: u64,
    pub out: Option<String>,
    pub lattice_h: f64,
    pub lattice_k: Vec<usize>,
    pub samples: SampleSpec,
    pub eps_list: Vec<f64>,
    pub rho: f64,
    pub mc_samples: usize,
    pub degree_radius: f64,
    pub degree_segments: usize,
}

struct Raw(BTreeMap<String, String>);

impl Raw {
    fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", no + 1)))?;
            let k = k.trim().to_string();
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(CliError::Config(format!("line {}: unknown key `{k}`", no + 1)));
            }
            if map.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{k}`", no + 1)));
            }
        }
        Ok(Self(map))
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn req(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| CliError::Config(format!("missing config field `{key}`")))
    }

    fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
        v.parse().map_err(|_| CliError::Config(format!("field `{key}`: cannot parse `{v}`")))
    }

    fn req_num<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        Self::num(key, self.req(key)?)
    }

    fn opt_num<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        self.get(key).map_or(Ok(default), |v| Self::num(key, v))
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        self.get(key)
            .map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| Self::num(key, s)).collect())
            .transpose()
    }
}

fn invalid(e: polybubble::Error) -> CliError {
    CliError::Config(e.to_string())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw = Raw::parse(text)?;
        let n: usize = raw.req_num("n")?;
        let m: usize = raw.req_num("m")?;
        let iota: f64 = raw.req_num("iota")?;
        let sp = SpaceParams::pipeline(n, m, iota).map_err(invalid)?;

        let regime = match raw.req("case")? {
            "1" => Regime::Case1 { m1: raw.req_num("m1")? },
            "2" => Regime::Case2 { a: raw.req_num("a")?, m2: raw.req_num("m2")? },
            "3" => Regime::Case3 { m2: raw.req_num("m2")?, a_const: raw.get("a_const").map(|v| Raw::num("a_const", v)).transpose()? },
            other => return Err(CliError::Config(format!("field `case`: expected 1, 2 or 3, got `{other}`"))),
        };
        let rp = RegimeParams::new(regime, raw.opt_num("l0", 0.25)?, raw.opt_num("l1", 4.0)?, raw.opt_num("theta", 0.25)?)
            .map_err(invalid)?;

        let r0: f64 = raw.opt_num("r0", 1.0)?;
        let y0 = raw.list::<f64>("y0")?.unwrap_or_else(|| vec![0.0; n - 3]);
        if y0.len() != n - 3 {
            return Err(CliError::Config(format!("field `y0`: expected {} components, got {}", n - 3, y0.len())));
        }
        let delta: f64 = raw.opt_num("delta", 0.1)?;
        if !(delta > 0.0 && 2.0 * delta < r0) {
            return Err(CliError::Config(format!("field `delta`: need 0 < 2 delta < r0, got delta={delta}, r0={r0}")));
        }

        let potential = match raw.req("potential")? {
            "constant" => Potential::Constant { v0: raw.req_num("v0")? },
            "gaussian_well" => {
                Potential::gaussian_well(raw.req_num("v0")?, r0, y0.clone(), raw.req_num("depth")?, raw.req_num("width")?, m)
                    .map_err(invalid)?
            }
            "gaussian_bump" => Potential::GaussianBump { v0: raw.req_num("v0")?, r0, y0: y0.clone(), width: raw.req_num("width")? },
            "saddle" => Potential::Saddle { v0: raw.req_num("v0")?, r0, y0: y0.clone(), kappa: raw.req_num("kappa")?, m },
            "power_law" => Potential::PowerLaw { v0: raw.req_num("v0")?, r0, c: raw.req_num("power_c")? },
            other => return Err(CliError::Config(format!("field `potential`: unknown preset `{other}`"))),
        };

        let k_values = raw.list::<usize>("k_values")?;
        if let Some(ks) = &k_values {
            if ks.iter().any(|&k| k < 2) {
                return Err(CliError::Config("field `k_values`: every k must be at least 2".into()));
            }
        }
        let lambda_grid = raw.list::<f64>("lambda_grid")?;
        if let (Some(l), Some(k)) = (&lambda_grid, &k_values) {
            if l.len() != k.len() {
                return Err(CliError::Config("field `lambda_grid`: must pair one lambda with each entry of `k_values`".into()));
            }
        }
        let lattice_k = raw.list::<usize>("lattice_k")?.unwrap_or_else(|| vec![256, 512, 1024, 2048, 4096]);
        if lattice_k.is_empty() || lattice_k.iter().any(|&k| k < 2) {
            return Err(CliError::Config("field `lattice_k`: need a non-empty list of k >= 2".into()));
        }
        let init_y = raw.list::<f64>("init_y")?.unwrap_or_else(|| y0.clone());
        if init_y.len() != n - 3 {
            return Err(CliError::Config(format!("field `init_y`: expected {} components", n - 3)));
        }
        let defaults = SampleSpec::default();
        let samples = SampleSpec {
            dirs_per_shell: raw.opt_num("samples_dirs", defaults.dirs_per_shell)?,
            annulus: raw.opt_num("samples_annulus", defaults.annulus)?,
            far_field: raw.opt_num("samples_far", defaults.far_field)?,
        };
        Ok(Self {
            sp,
            rp,
            delta,
            r0,
            y0,
            potential,
            k_values,
            lambda_grid,
            t0: raw.opt_num("t0", 1.0)?,
            init_r: raw.opt_num("init_r", r0)?,
            init_y,
            seed: raw.opt_num("seed", 0)?,
            out: raw.get("out").map(str::to_string),
            lattice_h: raw.opt_num("lattice_h", 0.5)?,
            lattice_k,
            samples,
            eps_list: raw.list("eps_list")?.unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3, 1e-4]),
            rho: raw.opt_num("rho", 3.5 * delta)?,
            mc_samples: raw.opt_num("mc_samples", 20_000)?,
            degree_radius: raw.opt_num("degree_radius", 0.2)?,
            degree_segments: raw.opt_num("degree_segments", 256)?,
        })
    }

    /// The `k` sweep, required to be present and non-empty.
    pub fn sweep(&self) -> Result<&[usize], CliError> {
        match &self.k_values {
            None => Err(CliError::Config("missing config field `k_values`".into())),
            Some(v) if v.is_empty() => Err(CliError::Config("field `k_values`: sweep is empty".into())),
            Some(v) => Ok(v),
        }
    }

    /// `(k, lambda)` cells: the explicit grid if given, else `lambda = t0 k^rho`.
    pub fn cells(&self) -> Result<Vec<(usize, f64)>, CliError> {
        let ks = self.sweep()?;
        Ok(match &self.lambda_grid {
            Some(l) => ks.iter().copied().zip(l.iter().copied()).collect(),
            None => ks.iter().map(|&k| (k, self.rp.lambda_for(self.t0, k, &self.sp))).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "n = 6\nm = 1\niota = 0.5\ncase = 1\nm1 = 2\npotential = constant\nv0 = 1\n";

    #[test]
    fn parses_minimal_config_with_defaults() {
        let c = RunConfig::parse(BASE).unwrap();
        assert_eq!(c.y0, vec![0.0; 3]);
        assert_eq!(c.k_values, None);
        assert!((c.rho - 0.35).abs() < 1e-15);
    }

    #[test]
    fn missing_field_is_named() {
        let e = RunConfig::parse("n = 6\nm = 1\ncase = 1\n").unwrap_err();
        assert!(e.to_string().contains("`iota`"), "{e}");
    }

    #[test]
    fn unknown_and_duplicate_keys_rejected() {
        assert!(RunConfig::parse(&format!("{BASE}ioat = 1\n")).unwrap_err().to_string().contains("unknown key"));
        assert!(RunConfig::parse(&format!("{BASE}n = 7\n")).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn regime_constraints_revalidated() {
        assert!(RunConfig::parse(&BASE.replace("n = 6", "n = 5")).is_err());
        assert!(RunConfig::parse(&format!("{BASE}l0 = 5\n")).is_err());
    }

    #[test]
    fn empty_sweep_detected() {
        let c = RunConfig::parse(&format!("{BASE}k_values =\n")).unwrap();
        assert!(c.sweep().unwrap_err().to_string().contains("empty"));
    }
}
