//! Run configuration file.
//!
//! ```toml
//! [constants]
//! beta = 0.1
//! a_n = 0.1
//! lambda = 1.7      # optional λ_n override for every n
//! certified = false
//! provenance = "placeholder"
//!
//! [dim.3]           # per-dimension overrides
//! beta = 0.2
//!
//! [quadrature]
//! circle_nodes = 256
//! polar = 32
//! azimuthal = 64
//! mc_samples = 4096
//!
//! [run]
//! seed = 0
//! ```
//!
//! Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use qcdl_core::bounds::{ConstantsConfig, DimensionOverride};
use qcdl_core::{Error, Result, SphericalQuadratureSpec};
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub constants: ConstantsSection,
    #[serde(default)]
    pub dim: BTreeMap<String, DimSection>,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub beta: Option<f64>,
    pub a_n: Option<f64>,
    pub lambda: Option<f64>,
    pub certified: Option<bool>,
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimSection {
    pub beta: Option<f64>,
    pub a_n: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub circle_nodes: Option<usize>,
    pub polar: Option<usize>,
    pub azimuthal: Option<usize>,
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
}

/// Command-line overrides of the constants.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantFlags {
    pub beta: Option<f64>,
    pub a_n: Option<f64>,
    pub lambda: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Placeholder defaults, then the file, then the flags.
    pub fn constants(&self, flags: ConstantFlags) -> Result<ConstantsConfig> {
        let mut cfg = ConstantsConfig::placeholder();
        let c = &self.constants;
        let touched_by_file = c.beta.is_some() || c.a_n.is_some() || !self.dim.is_empty();
        if let Some(v) = c.beta {
            cfg.beta = v;
        }
        if let Some(v) = c.a_n {
            cfg.a_n = v;
        }
        cfg.lambda = c.lambda;
        if touched_by_file {
            cfg.provenance = "config file".into();
        }
        if let Some(p) = &c.provenance {
            cfg.provenance = p.clone();
        }
        cfg.certified = c.certified.unwrap_or(false);
        for (key, section) in &self.dim {
            let n: usize = key
                .parse()
                .map_err(|_| Error::Parse(format!("config: dimension section '{key}' is not an integer")))?;
            cfg.per_dimension.insert(
                n,
                DimensionOverride {
                    beta: section.beta,
                    a_n: section.a_n,
                    lambda: section.lambda,
                },
            );
        }
        if flags.beta.is_some() || flags.a_n.is_some() {
            cfg.provenance = "command line".into();
            cfg.certified = false;
            // a flag wins over per-dimension file values too
            for o in cfg.per_dimension.values_mut() {
                if flags.beta.is_some() {
                    o.beta = None;
                }
                if flags.a_n.is_some() {
                    o.a_n = None;
                }
            }
        }
        if let Some(v) = flags.beta {
            cfg.beta = v;
        }
        if let Some(v) = flags.a_n {
            cfg.a_n = v;
        }
        if let Some(v) = flags.lambda {
            cfg.lambda = Some(v);
            for o in cfg.per_dimension.values_mut() {
                o.lambda = None;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sphere_spec(&self, n: usize, seed: u64) -> Result<SphericalQuadratureSpec> {
        let q = &self.quadrature;
        let spec = match SphericalQuadratureSpec::default_for(n) {
            SphericalQuadratureSpec::ExactCircle { nodes } => SphericalQuadratureSpec::ExactCircle {
                nodes: q.circle_nodes.unwrap_or(nodes),
            },
            SphericalQuadratureSpec::ProductSphere { polar, azimuthal } => {
                SphericalQuadratureSpec::ProductSphere {
                    polar: q.polar.unwrap_or(polar),
                    azimuthal: q.azimuthal.unwrap_or(azimuthal),
                }
            }
            SphericalQuadratureSpec::MonteCarlo { samples, .. } => SphericalQuadratureSpec::MonteCarlo {
                samples: q.mc_samples.unwrap_or(samples),
                seed,
            },
        };
        spec.validate(n)?;
        Ok(spec)
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.run.seed).unwrap_or(0)
    }
}
