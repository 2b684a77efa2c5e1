//! Run configuration read from a sectioned TOML file.
//!
//! Exactly one of `[deltas]` or `[slab]` selects the computation. Complex
//! numbers are written `[re, im]`, and every physical quantity carries its
//! unit in the key name.
//!
//! ```toml
//! [slab]
//! n0 = 3.4
//! L_um = 300.0
//! lambda0_nm = 1500.0
//! gamma_hat = 0.02
//! alpha_per_cm = 200.0
//! modes = [1358, 1359, 1360, 1361, 1362]
//! nus = [0.0, 0.1, 0.2, 0.3, 0.5]
//!
//! [output]
//! path = "table.csv"
//! format = "csv"
//! ```

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::delta::DeltaStrategy;
use crate::optics::SlabMedium;
use crate::perturbation::QuadOptions;
use crate::potential::{DeltaArray, Pumping};
use crate::{Error, Result, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Destination file; standard output when absent.
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    /// Integration tolerance of the direct solver.
    pub tol: f64,
    pub quad_order: usize,
    pub quad_refine: usize,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, quad_order: 16, quad_refine: 1, threads: 0 }
    }
}

impl NumericsConfig {
    pub fn quad(&self) -> QuadOptions {
        QuadOptions { order: self.quad_order, refine: self.quad_refine }
    }
}

fn default_points() -> usize {
    2001
}

fn default_strategy() -> DeltaStrategy {
    DeltaStrategy::ScanFixedCouplings
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltasConfig {
    pub centers: Vec<f64>,
    pub couplings: Vec<Complex64>,
    pub k_min: f64,
    pub k_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_strategy")]
    pub strategy: DeltaStrategy,
}

impl DeltasConfig {
    pub fn array(&self) -> Result<DeltaArray> {
        DeltaArray::new(self.centers.clone(), self.couplings.clone())
    }
}

fn default_modes() -> Vec<i64> {
    vec![1358, 1359, 1360, 1361, 1362]
}

fn default_nus() -> Vec<f64> {
    vec![0.0, 0.1, 0.2, 0.3, 0.5]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlabConfig {
    pub n0: f64,
    #[serde(rename = "L_um")]
    pub l_um: f64,
    pub lambda0_nm: f64,
    pub gamma_hat: f64,
    pub alpha_per_cm: f64,
    #[serde(default = "default_modes")]
    pub modes: Vec<i64>,
    #[serde(default = "default_nus")]
    pub nus: Vec<f64>,
}

impl SlabConfig {
    pub fn medium(&self) -> SlabMedium {
        SlabMedium {
            n0: self.n0,
            l_um: self.l_um,
            lambda0_nm: self.lambda0_nm,
            gamma_hat: self.gamma_hat,
            alpha_per_cm: self.alpha_per_cm,
            nu: 0.0,
            pumping: Pumping::Single,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub deltas: Option<DeltasConfig>,
    pub slab: Option<SlabConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
}

/// The single computation a config selects.
#[derive(Debug, Clone, Copy)]
pub enum Command<'a> {
    Deltas(&'a DeltasConfig),
    Slab(&'a SlabConfig),
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidParameter(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn command(&self) -> Result<Command<'_>> {
        match (&self.deltas, &self.slab) {
            (Some(d), None) => Ok(Command::Deltas(d)),
            (None, Some(s)) => Ok(Command::Slab(s)),
            _ => Err(Error::InvalidParameter("config needs exactly one of [deltas] or [slab]".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.command()? {
            Command::Deltas(d) => {
                d.array()?;
                if !(d.k_min > 0.0 && d.k_max > d.k_min) {
                    return Err(Error::InvalidParameter(format!("invalid k range [{}, {}]", d.k_min, d.k_max)));
                }
                if d.points < 2 {
                    return Err(Error::InvalidParameter("points must be at least 2".into()));
                }
            }
            Command::Slab(s) => {
                s.medium().validate()?;
                if s.modes.is_empty() || s.nus.is_empty() {
                    return Err(Error::InvalidParameter("modes and nus must be non-empty".into()));
                }
                if let Some(nu) = s.nus.iter().find(|nu| !(**nu >= 0.0 && nu.is_finite())) {
                    return Err(Error::InvalidParameter(format!("nu = {nu} must be >= 0")));
                }
            }
        }
        let n = &self.numerics;
        if !(n.tol > 0.0 && n.tol < 1.0) || n.quad_order < 2 || n.quad_refine == 0 {
            return Err(Error::InvalidParameter("numerics: tol in (0, 1), quad_order >= 2, quad_refine >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slab_config_round_trip() {
        let cfg = RunConfig::parse(
            r#"
            [slab]
            n0 = 3.4
            L_um = 300.0
            lambda0_nm = 1500.0
            gamma_hat = 0.02
            alpha_per_cm = 200.0
            nus = [0.0, 0.5]

            [output]
            format = "json"
            "#,
        )
        .unwrap();
        let Command::Slab(s) = cfg.command().unwrap() else { panic!("slab expected") };
        assert_eq!(s.medium(), SlabMedium::reference());
        assert_eq!(s.modes, default_modes());
        assert_eq!(cfg.output.format, OutputFormat::Json);
        let again = RunConfig::parse(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn deltas_config() {
        let cfg = RunConfig::parse(
            r#"
            [deltas]
            centers = [0.5]
            couplings = [[0.0, 10.0]]
            k_min = 4.0
            k_max = 6.0
            strategy = { solve_one_coupling = { index = 0 } }
            "#,
        )
        .unwrap();
        let Command::Deltas(d) = cfg.command().unwrap() else { panic!("deltas expected") };
        assert_eq!(d.couplings, vec![Complex64::new(0.0, 10.0)]);
        assert_eq!(d.strategy, DeltaStrategy::SolveOneCoupling { index: 0 });
        assert_eq!(d.points, 2001);
    }

    #[test]
    fn rejects_bad_configs() {
        let unordered = "[deltas]\ncenters = [0.6, 0.2]\ncouplings = [[1.0, 0.0], [1.0, 0.0]]\nk_min = 1.0\nk_max = 2.0\n";
        assert_eq!(RunConfig::parse(unordered), Err(Error::UnorderedCenters { index: 1 }));
        assert!(RunConfig::parse("[output]\nformat = \"csv\"\n").is_err());
        assert!(RunConfig::parse("[slab]\nn0 = 3.4\nL = 300.0\n").is_err());
        let both = format!("{unordered}\n[slab]\nn0 = 3.4\nL_um = 1.0\nlambda0_nm = 1.0\ngamma_hat = 0.1\nalpha_per_cm = 1.0\n");
        assert!(RunConfig::parse(&both).is_err());
    }
}
