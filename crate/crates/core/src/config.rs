//! JSON configuration file shared by every command.
//!
//! ```json
//! {
//!   "run": { "topology": { "w_excit": 0.08 }, "duration_ms": 300 },
//!   "sweep": { "widths": [1, 2, 3] },
//!   "classifier": { "bin_width_ms": 10 }
//! }
//! ```
//!
//! Omitted keys take their defaults; unknown keys are rejected. The
//! top-level `classifier` applies to single runs and to the sweep.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::ClassifierParams;
use crate::engine::RunConfig;
use crate::error::{Error, Result};
use crate::io::read_json;
use crate::sweep::SweepConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfigFile {
    pub run: RunConfig,
    pub sweep: SweepSection,
    pub classifier: ClassifierParams,
}

/// Sweep settings; the classifier comes from the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub w_excit: Vec<f64>,
    pub w_inhib: Vec<f64>,
    pub widths: Vec<usize>,
    /// Base run for every cell. Defaults to `run` with voltage recording
    /// off.
    pub template: Option<RunConfig>,
    pub jobs: Option<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        let d = SweepConfig::default();
        Self {
            w_excit: d.w_excit,
            w_inhib: d.w_inhib,
            widths: d.widths,
            template: None,
            jobs: None,
        }
    }
}

impl CliConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let cfg: Self = read_json(file)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = read_json(text.as_bytes())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Validate the run and classifier sections. Sweep grids are checked
    /// when the sweep is built, after command-line overrides.
    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        self.classifier.validate()?;
        if self.sweep.jobs == Some(0) {
            return Err(Error::parameter("sweep.jobs must be at least 1"));
        }
        Ok(())
    }

    pub fn sweep_config(&self) -> SweepConfig {
        let template = self.sweep.template.clone().unwrap_or_else(|| RunConfig {
            record_voltage: false,
            voltage_probes: None,
            ..self.run.clone()
        });
        SweepConfig {
            w_excit: self.sweep.w_excit.clone(),
            w_inhib: self.sweep.w_inhib.clone(),
            widths: self.sweep.widths.clone(),
            template,
            classifier: self.classifier,
            jobs: self.sweep.jobs,
        }
    }
}
