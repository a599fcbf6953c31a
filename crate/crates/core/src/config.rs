//! Run files: one TOML format shared by evaluate, sweep and optimize.
//!
//! ```toml
//! profile = "paper-consistent"   # built-in name or path to a profile file
//!
//! [chip]                         # ChipConfig fields; defaults for the rest
//! rows = 128
//!
//! [tech]                         # overrides applied after the profile
//! e_dram_per_bit = 3.9e-12
//!
//! [grid]                         # sweep axes; a missing axis keeps [chip]
//! rows = [32, 64, 128]
//!
//! [constraints]                  # optimize settings
//! area_cap_mm2 = 100.0
//! ```
//!
//! Unknown keys anywhere are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chip::ChipConfig;
use crate::dse::{Constraints, SweepGrid};
use crate::error::{Error, Result};
use crate::tech::{apply_profile, CalibrationProfile, TechParams, NOMINAL_PROFILE};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub rows: Option<Vec<usize>>,
    pub cols: Option<Vec<usize>>,
    pub batch: Option<Vec<usize>>,
    pub sram_input_mb: Option<Vec<f64>>,
    pub cores: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintsSection {
    pub area_cap_mm2: Option<f64>,
    pub batch_candidates: Option<Vec<usize>>,
    pub rows_candidates: Option<Vec<usize>>,
    pub cols_candidates: Option<Vec<usize>>,
    pub sram_step_mb: Option<f64>,
    pub hiding_eps: Option<f64>,
    pub tie_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub profile: Option<String>,
    pub chip: Option<ChipConfig>,
    pub tech: BTreeMap<String, f64>,
    pub grid: Option<GridSection>,
    pub constraints: Option<ConstraintsSection>,
    /// Directory relative profile paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(chip) = &cfg.chip {
            chip.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn chip(&self) -> ChipConfig {
        self.chip.clone().unwrap_or_default()
    }

    /// Profile named by `override_name`, else by the file, else the
    /// unmodified constants.
    pub fn profile(&self, override_name: Option<&str>) -> Result<CalibrationProfile> {
        let name = override_name
            .or(self.profile.as_deref())
            .unwrap_or(NOMINAL_PROFILE);
        resolve_profile(name, &self.base_dir)
    }

    /// Defaults, then the profile, then `[tech]`.
    pub fn tech(&self, profile: &CalibrationProfile) -> Result<TechParams> {
        let local = CalibrationProfile {
            name: "[tech]".to_string(),
            overrides: self.tech.clone(),
            notes: String::new(),
        };
        apply_profile(&apply_profile(&TechParams::default(), profile)?, &local)
    }

    pub fn grid(&self) -> Result<SweepGrid> {
        let template = self.chip();
        let g = self.grid.clone().unwrap_or_default();
        let grid = SweepGrid {
            rows: g.rows.unwrap_or_else(|| vec![template.rows]),
            cols: g.cols.unwrap_or_else(|| vec![template.cols]),
            batch: g.batch.unwrap_or_else(|| vec![template.batch]),
            sram_input_mb: g
                .sram_input_mb
                .unwrap_or_else(|| vec![template.sram_input_mb]),
            cores: g.cores.unwrap_or_else(|| vec![template.cores]),
            template,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// `[constraints]` over [`Constraints::default`]; `[chip]`, if present,
    /// replaces the starting template.
    pub fn constraints(&self) -> Result<Constraints> {
        let d = Constraints::default();
        let s = self.constraints.clone().unwrap_or_default();
        let c = Constraints {
            template: self.chip.clone().unwrap_or(d.template),
            area_cap_mm2: s.area_cap_mm2.unwrap_or(d.area_cap_mm2),
            batch_candidates: s.batch_candidates.unwrap_or(d.batch_candidates),
            rows_candidates: s.rows_candidates.unwrap_or(d.rows_candidates),
            cols_candidates: s.cols_candidates.unwrap_or(d.cols_candidates),
            sram_step_mb: s.sram_step_mb.unwrap_or(d.sram_step_mb),
            hiding_eps: s.hiding_eps.unwrap_or(d.hiding_eps),
            tie_tol: s.tie_tol.unwrap_or(d.tie_tol),
        };
        c.validate()?;
        Ok(c)
    }
}

/// A built-in profile name, or a path to a profile file.
pub fn resolve_profile(name_or_path: &str, base_dir: &Path) -> Result<CalibrationProfile> {
    if let Some(p) = CalibrationProfile::builtin(name_or_path) {
        return Ok(p);
    }
    let path = base_dir.join(name_or_path);
    let text = std::fs::read_to_string(&path).map_err(|e| {
        Error::Config(format!(
            "profile '{name_or_path}' is not built in and {} could not be read: {e}",
            path.display()
        ))
    })?;
    CalibrationProfile::from_toml_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
