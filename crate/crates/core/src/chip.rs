//! Chip-level configuration: array geometry, clocking, precisions, memory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bits in one MB of SRAM capacity (binary megabyte).
pub const BITS_PER_MB: f64 = 8.0 * 1024.0 * 1024.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChipConfig {
    /// Crossbar rows, N.
    pub rows: usize,
    /// Crossbar columns, M.
    pub cols: usize,
    /// MAC rate.
    pub clock_hz: f64,
    pub cores: u32,
    pub batch: usize,
    pub b_in: u32,
    pub b_w: u32,
    pub b_out: u32,
    pub b_acc: u32,
    pub sram_input_mb: f64,
    pub sram_filter_mb: f64,
    pub sram_output_mb: f64,
    pub sram_acc_mb: f64,
    /// MAC clock to SRAM backend clock.
    pub serdes_ratio: f64,
}

impl Default for ChipConfig {
    /// The reference design point: 128×128, dual core, batch 32, 10 GHz.
    fn default() -> Self {
        ChipConfig {
            rows: 128,
            cols: 128,
            clock_hz: 1e10,
            cores: 2,
            batch: 32,
            b_in: 6,
            b_w: 6,
            b_out: 6,
            b_acc: 24,
            sram_input_mb: 26.3,
            sram_filter_mb: 0.75,
            sram_output_mb: 0.75,
            sram_acc_mb: 0.75,
            serdes_ratio: 10.0,
        }
    }
}

impl ChipConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.rows == 0 || self.cols == 0 {
            return bad(format!(
                "array must be at least 1×1, got {}×{}",
                self.rows, self.cols
            ));
        }
        if self.batch == 0 {
            return bad("batch must be >= 1".into());
        }
        if !matches!(self.cores, 1 | 2) {
            return bad(format!("cores must be 1 or 2, got {}", self.cores));
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return bad(format!("clock_hz must be positive, got {}", self.clock_hz));
        }
        for (name, bits) in [
            ("b_in", self.b_in),
            ("b_w", self.b_w),
            ("b_out", self.b_out),
            ("b_acc", self.b_acc),
        ] {
            if bits == 0 || bits > 64 {
                return bad(format!("{name} must be in 1..=64, got {bits}"));
            }
        }
        for (name, mb) in [
            ("sram_input_mb", self.sram_input_mb),
            ("sram_filter_mb", self.sram_filter_mb),
            ("sram_output_mb", self.sram_output_mb),
            ("sram_acc_mb", self.sram_acc_mb),
        ] {
            if !(mb.is_finite() && mb > 0.0) {
                return bad(format!("{name} must be positive, got {mb}"));
            }
        }
        if !(self.serdes_ratio.is_finite() && self.serdes_ratio > 0.0) {
            return bad(format!(
                "serdes_ratio must be positive, got {}",
                self.serdes_ratio
            ));
        }
        Ok(())
    }

    pub fn total_sram_mb(&self) -> f64 {
        self.sram_input_mb + self.sram_filter_mb + self.sram_output_mb + self.sram_acc_mb
    }

    pub fn input_sram_bits(&self) -> f64 {
        self.sram_input_mb * BITS_PER_MB
    }

    pub fn backend_clock_hz(&self) -> f64 {
        self.clock_hz / self.serdes_ratio
    }

    /// Short label used in error messages and audit entries.
    pub fn label(&self) -> String {
        format!(
            "{}x{} cores={} batch={} sram_in={}MB",
            self.rows, self.cols, self.cores, self.batch, self.sram_input_mb
        )
    }

    /// Parses the `[chip]` section of a config file; missing keys keep
    /// their defaults.
    pub fn from_toml_value(value: toml::Value) -> Result<ChipConfig> {
        let cfg: ChipConfig = value
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
