//! Runtime statistics to time, energy, power, area, IPS and IPS/W.
//!
//! Rate-based powers (ADC, TIA, ring tuning, laser) are gated to active
//! compute cycles, so energy per inference does not depend on the core
//! count. Programming energy is per cell written.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chip::ChipConfig;
use crate::error::Result;
use crate::photonic::{loss_budget, LossBudget};
use crate::tech::TechParams;
use crate::workload::{network_runtime, LayerSpec, RuntimeStats};

/// One array load: optional reprogram, then `compute_cycles` of MACs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub layer: usize,
    pub compute_cycles: u64,
    pub program: bool,
}

/// Network-wide tile stream in execution order.
pub fn tile_stream(stats: &RuntimeStats) -> Vec<Tile> {
    stats
        .layers
        .iter()
        .enumerate()
        .flat_map(|(layer, l)| {
            (0..l.tiles.programming_events).map(move |_| Tile {
                layer,
                compute_cycles: l.tiles.vectors_per_tile,
                program: true,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSegment {
    pub layer: usize,
    pub t_compute: f64,
    pub t_program_exposed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub t_compute: f64,
    pub t_program_exposed: f64,
    pub t_total: f64,
    pub segments: Vec<LayerSegment>,
}

impl Timeline {
    fn from_tiles(tiles: &[Tile], compute: impl Fn(&Tile) -> f64, exposed: Vec<f64>) -> Self {
        let mut segments: Vec<LayerSegment> = Vec::new();
        for (tile, stall) in tiles.iter().zip(exposed) {
            match segments.last_mut() {
                Some(seg) if seg.layer == tile.layer => {
                    seg.t_compute += compute(tile);
                    seg.t_program_exposed += stall;
                }
                _ => segments.push(LayerSegment {
                    layer: tile.layer,
                    t_compute: compute(tile),
                    t_program_exposed: stall,
                }),
            }
        }
        let t_compute: f64 = tiles.iter().map(&compute).sum();
        let t_program_exposed: f64 = segments.iter().map(|s| s.t_program_exposed).sum();
        Timeline {
            t_compute,
            t_program_exposed,
            t_total: t_compute + t_program_exposed,
            segments,
        }
    }
}

fn prog_time(tile: &Tile, t_prog: f64) -> f64 {
    if tile.program {
        t_prog
    } else {
        0.0
    }
}

/// One core: every reprogram stalls the array.
pub fn timeline_single_core_tiles(tiles: &[Tile], clock_hz: f64, t_prog: f64) -> Timeline {
    let exposed = tiles.iter().map(|t| prog_time(t, t_prog)).collect();
    Timeline::from_tiles(tiles, |t| t.compute_cycles as f64 / clock_hz, exposed)
}

/// Two cores: tile `i+1` is programmed on the idle core while tile `i`
/// computes. Only the first program and any program longer than the
/// preceding compute are exposed.
pub fn timeline_dual_core_tiles(tiles: &[Tile], clock_hz: f64, t_prog: f64) -> Timeline {
    let compute = |t: &Tile| t.compute_cycles as f64 / clock_hz;
    let exposed = tiles
        .iter()
        .enumerate()
        .map(|(i, tile)| {
            if i == 0 {
                prog_time(tile, t_prog)
            } else {
                (prog_time(tile, t_prog) - compute(&tiles[i - 1])).max(0.0)
            }
        })
        .collect();
    Timeline::from_tiles(tiles, compute, exposed)
}

pub fn timeline_single_core(stats: &RuntimeStats, cfg: &ChipConfig, tech: &TechParams) -> Timeline {
    timeline_single_core_tiles(&tile_stream(stats), cfg.clock_hz, tech.t_pcm_program)
}

pub fn timeline_dual_core(stats: &RuntimeStats, cfg: &ChipConfig, tech: &TechParams) -> Timeline {
    timeline_dual_core_tiles(&tile_stream(stats), cfg.clock_hz, tech.t_pcm_program)
}

pub fn timeline(stats: &RuntimeStats, cfg: &ChipConfig, tech: &TechParams) -> Timeline {
    match cfg.cores {
        1 => timeline_single_core(stats, cfg, tech),
        _ => timeline_dual_core(stats, cfg, tech),
    }
}

pub const ENERGY_CATEGORIES: [&str; 11] = [
    "dram",
    "sram",
    "odac",
    "adc",
    "tia",
    "serdes",
    "clocking",
    "laser",
    "pcm_programming",
    "thermal_tuning",
    "activation",
];

pub const AREA_CATEGORIES: [&str; 6] = [
    "sram",
    "adc",
    "odac",
    "clocking",
    "photonic_array",
    "digital_overhead",
];

/// Joules per batch, by category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dram: f64,
    pub sram: f64,
    pub odac: f64,
    pub adc: f64,
    pub tia: f64,
    pub serdes: f64,
    pub clocking: f64,
    pub laser: f64,
    pub pcm_programming: f64,
    pub thermal_tuning: f64,
    pub activation: f64,
}

impl EnergyBreakdown {
    pub fn entries(&self) -> [(&'static str, f64); 11] {
        [
            ("dram", self.dram),
            ("sram", self.sram),
            ("odac", self.odac),
            ("adc", self.adc),
            ("tia", self.tia),
            ("serdes", self.serdes),
            ("clocking", self.clocking),
            ("laser", self.laser),
            ("pcm_programming", self.pcm_programming),
            ("thermal_tuning", self.thermal_tuning),
            ("activation", self.activation),
        ]
    }

    pub fn total(&self) -> f64 {
        self.entries().iter().map(|(_, v)| v).sum()
    }

    pub fn largest(&self) -> &'static str {
        largest(&self.entries())
    }
}

/// mm², by category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AreaBreakdown {
    pub sram: f64,
    pub adc: f64,
    pub odac: f64,
    pub clocking: f64,
    pub photonic_array: f64,
    pub digital_overhead: f64,
}

impl AreaBreakdown {
    pub fn entries(&self) -> [(&'static str, f64); 6] {
        [
            ("sram", self.sram),
            ("adc", self.adc),
            ("odac", self.odac),
            ("clocking", self.clocking),
            ("photonic_array", self.photonic_array),
            ("digital_overhead", self.digital_overhead),
        ]
    }

    pub fn total(&self) -> f64 {
        self.entries().iter().map(|(_, v)| v).sum()
    }

    pub fn largest(&self) -> &'static str {
        largest(&self.entries())
    }
}

fn largest(entries: &[(&'static str, f64)]) -> &'static str {
    entries
        .iter()
        .fold(entries[0], |best, e| if e.1 > best.1 { *e } else { best })
        .0
}

pub fn energy_model(
    stats: &RuntimeStats,
    timeline: &Timeline,
    cfg: &ChipConfig,
    tech: &TechParams,
) -> EnergyBreakdown {
    let t = &stats.total;
    let cycles = t.compute_cycles as f64;
    let (n, m) = (cfg.rows as f64, cfg.cols as f64);
    let per_cycle = |power: f64| power / cfg.clock_hz;
    let budget = loss_budget(cfg, tech);
    EnergyBreakdown {
        dram: t.traffic.dram_bits() as f64 * tech.e_dram_per_bit,
        sram: t.traffic.sram_bits() as f64 * tech.e_sram_per_bit,
        odac: cycles * n * tech.e_odac_driver,
        adc: cycles * m * per_cycle(tech.p_adc),
        tia: cycles * m * per_cycle(tech.p_tia),
        serdes: cycles * (n * cfg.b_in as f64 + m * cfg.b_out as f64) * tech.e_serdes_per_bit,
        clocking: cycles * (n + m) * tech.e_clock_per_lane_cycle,
        laser: timeline.t_compute * budget.laser_wallplug_power_w,
        pcm_programming: t.cells_programmed as f64 * tech.e_pcm_program_per_cell,
        thermal_tuning: cycles
            * n
            * tech.rings_per_row_tx as f64
            * per_cycle(tech.p_thermal_per_ring),
        activation: t.output_elems as f64 * tech.e_activation_per_output,
    }
}

pub fn area_model(cfg: &ChipConfig, tech: &TechParams) -> AreaBreakdown {
    let cores = cfg.cores as f64;
    let (n, m) = (cfg.rows as f64, cfg.cols as f64);
    let pitch_mm = tech.unit_cell_pitch_um / 1e3;
    AreaBreakdown {
        sram: cfg.total_sram_mb() * tech.a_sram_per_mb,
        adc: cores * m * tech.a_adc,
        odac: cores * n * tech.rings_per_row_tx as f64 * tech.a_odac,
        clocking: cores * (n + m) * tech.a_clock_per_lane,
        photonic_array: cores * (n * pitch_mm) * (m * pitch_mm),
        digital_overhead: tech.a_digital_overhead,
    }
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfReport {
    pub schema_version: u32,
    /// How `ips` is defined.
    pub ips_definition: String,
    /// Batch divided by whole-network batch latency.
    pub ips: f64,
    pub ips_per_w: f64,
    pub power_w: f64,
    pub area_mm2: f64,
    pub energy_per_batch_j: f64,
    pub energy_per_inference_j: f64,
    pub batch: usize,
    pub timeline: Timeline,
    pub energy_j: EnergyBreakdown,
    pub area: AreaBreakdown,
    pub loss_budget: LossBudget,
    pub compute_cycles: u64,
    pub programming_events: u64,
    pub dram_bits: u64,
    pub sram_bits: u64,
}

impl PerfReport {
    /// Average power per category over the batch latency.
    pub fn power_breakdown_w(&self) -> BTreeMap<&'static str, f64> {
        self.energy_j
            .entries()
            .iter()
            .map(|(k, e)| (*k, e / self.timeline.t_total))
            .collect()
    }
}

pub fn report_from_stats(stats: &RuntimeStats, cfg: &ChipConfig, tech: &TechParams) -> PerfReport {
    let tl = timeline(stats, cfg, tech);
    let energy = energy_model(stats, &tl, cfg, tech);
    let area = area_model(cfg, tech);
    let energy_total = energy.total();
    let ips = cfg.batch as f64 / tl.t_total;
    let power_w = energy_total / tl.t_total;
    PerfReport {
        schema_version: REPORT_SCHEMA_VERSION,
        ips_definition: "batch / network batch latency".to_string(),
        ips,
        ips_per_w: ips / power_w,
        power_w,
        area_mm2: area.total(),
        energy_per_batch_j: energy_total,
        energy_per_inference_j: energy_total / cfg.batch as f64,
        batch: cfg.batch,
        timeline: tl,
        energy_j: energy,
        area,
        loss_budget: loss_budget(cfg, tech),
        compute_cycles: stats.total.compute_cycles,
        programming_events: stats.total.programming_events,
        dram_bits: stats.total.traffic.dram_bits(),
        sram_bits: stats.total.traffic.sram_bits(),
    }
}

/// Maps the network, builds the timeline, and totals energy and area.
pub fn evaluate(layers: &[LayerSpec], cfg: &ChipConfig, tech: &TechParams) -> Result<PerfReport> {
    cfg.validate()?;
    tech.validate()?;
    let stats = network_runtime(layers, cfg)?;
    Ok(report_from_stats(&stats, cfg, tech))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tiles(cycles: &[u64]) -> Vec<Tile> {
        cycles
            .iter()
            .map(|&c| Tile {
                layer: 0,
                compute_cycles: c,
                program: true,
            })
            .collect()
    }

    #[test]
    fn single_core_examples() {
        let tl = timeline_single_core_tiles(&tiles(&[1000]), 1e10, 100e-9);
        assert_relative_eq!(tl.t_total, 200e-9, max_relative = 1e-12);
        let pre = [Tile {
            layer: 0,
            compute_cycles: 1000,
            program: false,
        }];
        let tl = timeline_single_core_tiles(&pre, 1e10, 100e-9);
        assert_eq!(tl.t_total, tl.t_compute);
        assert_eq!(tl.t_program_exposed, 0.0);
    }

    #[test]
    fn dual_core_examples() {
        // 150 ns tiles hide the 100 ns program.
        let tl = timeline_dual_core_tiles(&tiles(&[1500; 5]), 1e10, 100e-9);
        assert_relative_eq!(tl.t_program_exposed, 100e-9, max_relative = 1e-12);
        assert_relative_eq!(tl.t_total, 100e-9 + 5.0 * 150e-9, max_relative = 1e-12);
        // 50 ns tiles are programming-bound: one 100 ns slot per tile, then
        // the last tile's compute.
        let tl = timeline_dual_core_tiles(&tiles(&[500; 7]), 1e10, 100e-9);
        assert_relative_eq!(tl.t_total, 7.0 * 100e-9 + 50e-9, max_relative = 1e-12);
    }

    #[test]
    fn energy_one_cycle() {
        let cfg = ChipConfig {
            rows: 1,
            cols: 1,
            cores: 1,
            batch: 1,
            ..Default::default()
        };
        let layers = [LayerSpec {
            name: "u".into(),
            ifmap_h: 1,
            ifmap_w: 1,
            channels: 1,
            filter_h: 1,
            filter_w: 1,
            num_filters: 1,
            stride: 1,
        }];
        let tech = TechParams::default();
        let r = evaluate(&layers, &cfg, &tech).unwrap();
        assert_eq!(r.compute_cycles, 1);
        assert_relative_eq!(r.energy_j.adc, 2.5e-12, max_relative = 1e-12);
        assert_relative_eq!(r.energy_j.tia, 0.225e-12, max_relative = 1e-12);
        assert_relative_eq!(r.energy_j.odac, 168e-15, max_relative = 1e-12);
    }

    #[test]
    fn zero_work_zero_energy() {
        let stats = RuntimeStats::default();
        let tl = timeline_single_core(&stats, &ChipConfig::default(), &TechParams::default());
        let e = energy_model(&stats, &tl, &ChipConfig::default(), &TechParams::default());
        assert!(e.entries().iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn area_examples() {
        let tech = TechParams::default();
        let a = area_model(&ChipConfig::default(), &tech);
        assert_relative_eq!(a.sram, 28.55 * 0.45, max_relative = 1e-12);
        assert_relative_eq!(a.sram, 12.8475, max_relative = 1e-12);
        assert_relative_eq!(a.adc, 12.16, max_relative = 1e-12);
        let unit = ChipConfig {
            rows: 1,
            cols: 1,
            cores: 1,
            ..Default::default()
        };
        assert_relative_eq!(
            area_model(&unit, &tech).photonic_array,
            0.0025,
            max_relative = 1e-12
        );
    }

    #[test]
    fn largest_category() {
        let e = EnergyBreakdown {
            dram: 3.0,
            sram: 5.0,
            laser: 1.0,
            ..Default::default()
        };
        assert_eq!(e.largest(), "sram");
    }
}
