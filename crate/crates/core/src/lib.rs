//! Performance, power and area model of a coherent optical crossbar
//! accelerator with PCM weight storage.
//!
//! The pipeline is two-step: [`workload`] maps a CNN onto crossbar tiles and
//! counts cycles, reprograms and memory traffic; [`perf`] turns those counts
//! into time, energy, power, area, IPS and IPS/W. [`photonic`] holds the
//! field-level crossbar model and the optical loss budget that sizes the
//! laser, and [`dse`] searches the design space.

pub mod chip;
pub mod config;
pub mod dse;
pub mod error;
pub mod perf;
pub mod photonic;
pub mod tech;
pub mod workload;

pub use chip::ChipConfig;
pub use error::{Error, Result};
pub use perf::{evaluate, PerfReport};
pub use tech::{apply_profile, default_tech_params, CalibrationProfile, TechParams};
pub use workload::{network_runtime, LayerSpec, RuntimeStats};
