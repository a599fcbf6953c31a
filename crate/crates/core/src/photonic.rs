//! Functional model of the coherent PCM crossbar.
//!
//! Fields are real and non-negative: perfect coherence is assumed, with the
//! per-cell thermal phase shifters nulling any phase error. An optional
//! per-cell phase offset scales a cell's contribution by `cos φ` for
//! sensitivity studies.
//!
//! Light enters row `i` with field `v_i·E_laser/√N`. Directional couplers
//! with field cross-coupling `k_in[j]` tap it into the cell bends, the PCM
//! section scales the tapped field by `w[i][j]`, and output couplers
//! `k_out[i]` merge each product into the column bus travelling from row 0
//! towards row `N-1`, where it is detected.

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::chip::ChipConfig;
use crate::error::{Error, Result};
use crate::tech::TechParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplerPlan {
    /// Field cross-coupling per column along each row bus.
    pub k_in: Vec<f64>,
    /// Field cross-coupling per row along each column bus.
    pub k_out: Vec<f64>,
}

impl CouplerPlan {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        Ok(CouplerPlan {
            k_in: synth_input_couplers(cols)?,
            k_out: synth_output_couplers(rows)?,
        })
    }

    pub fn rows(&self) -> usize {
        self.k_out.len()
    }

    pub fn cols(&self) -> usize {
        self.k_in.len()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bus", "index", "k_field", "k_power"])
            .map_err(csv_err)?;
        for (bus, ks) in [("row", &self.k_in), ("column", &self.k_out)] {
            for (idx, k) in ks.iter().enumerate() {
                w.write_record([bus, &idx.to_string(), &k.to_string(), &(k * k).to_string()])
                    .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn bar(k: f64) -> f64 {
    (1.0 - k * k).max(0.0).sqrt()
}

/// Row-bus taps that split a row's power equally over `cols` cells:
/// `k_j² = 1/(M − j)`, ending with a full tap.
pub fn synth_input_couplers(cols: usize) -> Result<Vec<f64>> {
    if cols == 0 {
        return Err(Error::Domain("column count must be >= 1".into()));
    }
    Ok((0..cols)
        .map(|j| (1.0 / (cols - j) as f64).sqrt())
        .collect())
}

/// Column-bus taps under which every row's product arrives at the detector
/// scaled by `1/√N`: `k_i² = 1/(i + 1)` counting rows along the direction of
/// propagation. Row 0 launches the bus with a full tap.
pub fn synth_output_couplers(rows: usize) -> Result<Vec<f64>> {
    if rows == 0 {
        return Err(Error::Domain("row count must be >= 1".into()));
    }
    Ok((0..rows).map(|i| (1.0 / (i + 1) as f64).sqrt()).collect())
}

/// Field delivered into each cell bend per unit field entering the row.
pub fn row_delivery(k_in: &[f64]) -> Vec<f64> {
    let mut remaining = 1.0;
    k_in.iter()
        .map(|&k| {
            let tapped = remaining * k;
            remaining *= bar(k);
            tapped
        })
        .collect()
}

/// Field reaching the column end per unit field leaving each cell bend.
pub fn column_collection(k_out: &[f64]) -> Vec<f64> {
    let n = k_out.len();
    let mut gains = vec![0.0; n];
    let mut through = 1.0;
    for i in (0..n).rev() {
        gains[i] = k_out[i] * through;
        through *= bar(k_out[i]);
    }
    gains
}

/// Rounds `x` to the nearest of `2^bits` evenly spaced levels on [0, 1],
/// halves away from zero.
pub fn quantize(x: f64, bits: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("value {x} outside [0, 1]")));
    }
    if bits == 0 || bits > 52 {
        return Err(Error::Domain(format!(
            "bit width must be in 1..=52, got {bits}"
        )));
    }
    let top = levels(bits) as f64;
    Ok((x * top).round() / top)
}

/// Largest level index for `bits`.
pub fn levels(bits: u32) -> u64 {
    (1u64 << bits) - 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    values: Array2<f64>,
    bits: u32,
}

impl WeightMatrix {
    /// Quantizes raw field transmissions in [0, 1].
    pub fn quantized(raw: &Array2<f64>, bits: u32) -> Result<Self> {
        let mut values = raw.clone();
        for v in values.iter_mut() {
            *v = quantize(*v, bits)?;
        }
        Ok(WeightMatrix { values, bits })
    }

    /// Builds from integer level indices `l ∈ [0, 2^bits − 1]`.
    pub fn from_levels(levels_idx: &Array2<u64>, bits: u32) -> Result<Self> {
        let top = levels(bits);
        if let Some(bad) = levels_idx.iter().find(|&&l| l > top) {
            return Err(Error::Domain(format!("weight level {bad} exceeds {top}")));
        }
        Ok(WeightMatrix {
            values: levels_idx.mapv(|l| l as f64 / top as f64),
            bits,
        })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputVector {
    values: Vec<f64>,
    bits: u32,
}

impl InputVector {
    pub fn quantized(raw: &[f64], bits: u32) -> Result<Self> {
        let values = raw
            .iter()
            .map(|&x| quantize(x, bits))
            .collect::<Result<_>>()?;
        Ok(InputVector { values, bits })
    }

    pub fn from_levels(levels_idx: &[u64], bits: u32) -> Result<Self> {
        let top = levels(bits);
        if let Some(bad) = levels_idx.iter().find(|&&l| l > top) {
            return Err(Error::Domain(format!("input level {bad} exceeds {top}")));
        }
        Ok(InputVector {
            values: levels_idx.iter().map(|&l| l as f64 / top as f64).collect(),
            bits,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Result of a propagated MVM with the per-cell bend fields `E_p(i, j)`.
#[derive(Debug, Clone)]
pub struct MvmTrace {
    pub columns: Vec<f64>,
    pub cell_fields: Array2<f64>,
}

/// Column fields at the detectors, by explicit tap-by-tap propagation.
pub fn crossbar_mvm(
    v: &InputVector,
    w: &WeightMatrix,
    plan: &CouplerPlan,
    e_laser: f64,
) -> Result<Vec<f64>> {
    Ok(crossbar_mvm_traced(v, w, plan, e_laser, None)?.columns)
}

/// Like [`crossbar_mvm`], also returning the per-cell fields. `phase`, if
/// given, holds a residual phase error per cell in radians.
pub fn crossbar_mvm_traced(
    v: &InputVector,
    w: &WeightMatrix,
    plan: &CouplerPlan,
    e_laser: f64,
    phase: Option<&Array2<f64>>,
) -> Result<MvmTrace> {
    let (n, m) = (w.rows(), w.cols());
    if v.len() != n || plan.rows() != n || plan.cols() != m {
        return Err(Error::Domain(format!(
            "dimension mismatch: input {}, weights {n}×{m}, plan {}×{}",
            v.len(),
            plan.rows(),
            plan.cols()
        )));
    }
    if let Some(p) = phase {
        if p.dim() != (n, m) {
            return Err(Error::Domain(format!(
                "phase map is {:?}, expected {n}×{m}",
                p.dim()
            )));
        }
    }

    let row_launch = e_laser / (n as f64).sqrt();
    let mut cell_fields = Array2::zeros((n, m));
    for i in 0..n {
        let mut remaining = v.values()[i] * row_launch;
        for j in 0..m {
            let k = plan.k_in[j];
            cell_fields[[i, j]] = remaining * k * w.values()[[i, j]];
            remaining *= bar(k);
        }
    }

    let mut columns = vec![0.0; m];
    for (j, out) in columns.iter_mut().enumerate() {
        let mut bus = 0.0;
        for i in 0..n {
            let k = plan.k_out[i];
            let mut contrib = cell_fields[[i, j]] * k;
            if let Some(p) = phase {
                contrib *= p[[i, j]].cos();
            }
            bus = bus * bar(k) + contrib;
        }
        *out = bus;
    }
    Ok(MvmTrace {
        columns,
        cell_fields,
    })
}

/// Closed form `E_j = E_laser/(N√M) · Σ_i v_i·w_ij`.
pub fn closed_form_mvm(v: &InputVector, w: &WeightMatrix, e_laser: f64) -> Vec<f64> {
    let (n, m) = (w.rows(), w.cols());
    let scale = e_laser / (n as f64 * (m as f64).sqrt());
    (0..m)
        .map(|j| {
            scale
                * (0..n)
                    .map(|i| v.values()[i] * w.values()[[i, j]])
                    .sum::<f64>()
        })
        .collect()
}

/// Balanced coherent detection against a local oscillator; the photocurrent
/// is proportional to the product of the two fields.
pub fn coherent_detect(e_cols: &[f64], e_lo: f64, responsivity: f64) -> Result<Vec<f64>> {
    if e_lo.is_nan() || e_lo <= 0.0 {
        return Err(Error::Domain(format!(
            "local oscillator field must be > 0, got {e_lo}"
        )));
    }
    Ok(e_cols.iter().map(|&e| responsivity * e_lo * e).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    pub worst_path_db: f64,
    pub crossings_on_path: usize,
    pub waveguide_len_cm: f64,
    /// Insertion losses that do not depend on the array size.
    pub fixed_db: f64,
    pub crossing_db: f64,
    pub waveguide_db: f64,
    /// `10·log10(N·M)`.
    pub distribution_db: f64,
    pub laser_optical_power_w: f64,
    pub laser_wallplug_power_w: f64,
}

/// Worst-case optical path from the laser facet to a detector, and the laser
/// power needed for every column to see `p_rx_min_per_column`.
///
/// The farthest cell sits `M−1` row crossings and `N−1` column hops away.
/// The bus length is `(N + M)` pitches. The 1/(N√M) field prefactor is taken
/// in the power domain for a single full-scale cell contribution after the
/// coherent sum restores its N² gain, leaving `10·log10(N·M)`. The laser must
/// feed all `M` columns at that level.
pub fn loss_budget(cfg: &ChipConfig, tech: &TechParams) -> LossBudget {
    let (n, m) = (cfg.rows, cfg.cols);
    let crossings = (m - 1) + (n - 1);
    let waveguide_len_cm = (n + m) as f64 * tech.unit_cell_pitch_um / 1e4;
    let fixed_db =
        tech.loss_grating_coupler_db + tech.loss_splitter_tree_db + tech.loss_odac_oma_db;
    let crossing_db = crossings as f64 * tech.loss_mmi_crossing_db;
    let waveguide_db = waveguide_len_cm * tech.loss_waveguide_db_per_cm;
    let distribution_db = 10.0 * ((n * m) as f64).log10();
    let worst_path_db = fixed_db + crossing_db + waveguide_db + distribution_db;
    let laser_optical_power_w =
        m as f64 * tech.p_rx_min_per_column * 10f64.powf(worst_path_db / 10.0);
    LossBudget {
        worst_path_db,
        crossings_on_path: crossings,
        waveguide_len_cm,
        fixed_db,
        crossing_db,
        waveguide_db,
        distribution_db,
        laser_optical_power_w,
        laser_wallplug_power_w: laser_optical_power_w / tech.laser_wallplug_eff,
    }
}
