//! Filter parameter files.
//!
//! A params file is TOML with an optional subset of these keys:
//!
//! ```toml
//! density = "1/2"            # or 0.5
//! focal_mm = 20
//! layer_count = 6
//! base_sigma = 1.0
//! reference_width = 1024
//! tone_operator = "clamp"    # or "reinhard"
//!
//! [weight_ratio_overrides]
//! "1/2" = 1.5
//! "1/8" = 0.6
//! ```
//!
//! Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::color::ToneOperator;
use crate::error::{Error, Result};
use crate::filter::{Density, FilterConfig};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub density: Option<Density>,
    pub focal_mm: Option<f64>,
    pub layer_count: Option<usize>,
    pub base_sigma: Option<f64>,
    pub reference_width: Option<usize>,
    pub tone_operator: Option<ToneOperator>,
    #[serde(default)]
    pub weight_ratio_overrides: BTreeMap<String, f64>,
}

impl ParamsFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|source| Error::Config {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Copies every key except density and focal length onto `cfg`.
    pub fn apply_shared(&self, cfg: &mut FilterConfig) -> Result<()> {
        if let Some(n) = self.layer_count {
            cfg.layer_count = n;
        }
        if let Some(s) = self.base_sigma {
            cfg.base_sigma = s;
        }
        if let Some(w) = self.reference_width {
            cfg.reference_width = w;
        }
        if let Some(t) = self.tone_operator {
            cfg.tone_operator = t;
        }
        for (density, &ratio) in &self.weight_ratio_overrides {
            cfg.weight_ratios.set(density.parse()?, ratio)?;
        }
        Ok(())
    }

    /// Builds a full config from the file alone; density and focal length must be present.
    pub fn to_config(&self) -> Result<FilterConfig> {
        let density = self
            .density
            .ok_or_else(|| Error::param("params file does not set density"))?;
        let focal = self
            .focal_mm
            .ok_or_else(|| Error::param("params file does not set focal_mm"))?;
        let mut cfg = FilterConfig::new(density, focal);
        self.apply_shared(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
