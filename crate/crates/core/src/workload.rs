//! CNN layer mapping onto N×M crossbar tiles and runtime accounting:
//! compute cycles, PCM programming events, SRAM and DRAM bit traffic.
//!
//! Each filter is flattened (im2col) into a column of `filter_h·filter_w·
//! channels` weights. A layer occupies `row_tiles × col_tiles` array loads;
//! every load streams all `out_h·out_w·batch` input vectors, one per MAC
//! cycle. Ifmap dimensions are taken as already padded, so outputs are
//! `⌊(ifmap − filter)/stride⌋ + 1`.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chip::ChipConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub ifmap_h: usize,
    pub ifmap_w: usize,
    pub channels: usize,
    pub filter_h: usize,
    pub filter_w: usize,
    pub num_filters: usize,
    pub stride: usize,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("ifmap_h", self.ifmap_h),
            ("ifmap_w", self.ifmap_w),
            ("channels", self.channels),
            ("filter_h", self.filter_h),
            ("filter_w", self.filter_w),
            ("num_filters", self.num_filters),
            ("stride", self.stride),
        ];
        if let Some((field, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Validation(format!(
                "layer '{}': {field} must be >= 1",
                self.name
            )));
        }
        if self.filter_h > self.ifmap_h || self.filter_w > self.ifmap_w {
            return Err(Error::Validation(format!(
                "layer '{}': filter {}×{} larger than ifmap {}×{}",
                self.name, self.filter_h, self.filter_w, self.ifmap_h, self.ifmap_w
            )));
        }
        Ok(())
    }

    pub fn out_h(&self) -> usize {
        (self.ifmap_h - self.filter_h) / self.stride + 1
    }

    pub fn out_w(&self) -> usize {
        (self.ifmap_w - self.filter_w) / self.stride + 1
    }

    /// Length of one flattened filter.
    pub fn filter_len(&self) -> usize {
        self.filter_h * self.filter_w * self.channels
    }

    pub fn weight_count(&self) -> u64 {
        (self.filter_len() * self.num_filters) as u64
    }

    pub fn ifmap_elems(&self) -> u64 {
        (self.ifmap_h * self.ifmap_w * self.channels) as u64
    }

    pub fn ofmap_elems(&self) -> u64 {
        (self.out_h() * self.out_w() * self.num_filters) as u64
    }
}

/// Parses a topology CSV: header row, then
/// `name, ifmap_h, ifmap_w, channels, filter_h, filter_w, num_filters, stride`.
/// A trailing empty column is tolerated.
pub fn parse_topology<R: Read>(reader: R) -> Result<Vec<LayerSpec>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let header_empty = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .iter()
        .all(str::is_empty);
    if header_empty {
        log::warn!("topology is empty; no layers loaded");
        return Ok(Vec::new());
    }

    let mut layers = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let fields: Vec<&str> = record.iter().collect();
        let fields = match fields.as_slice() {
            [head @ .., ""] if head.len() == 8 => head,
            all => all,
        };
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        if fields.len() != 8 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 8 columns, found {}", fields.len()),
            });
        }
        let num = |idx: usize, what: &str| -> Result<usize> {
            let raw = fields[idx];
            let v: i64 = raw.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("{what}: '{raw}' is not an integer"),
            })?;
            if v < 1 {
                return Err(Error::Validation(format!(
                    "line {line}: {what} must be positive, got {v}"
                )));
            }
            Ok(v as usize)
        };
        let layer = LayerSpec {
            name: fields[0].to_string(),
            ifmap_h: num(1, "ifmap_h")?,
            ifmap_w: num(2, "ifmap_w")?,
            channels: num(3, "channels")?,
            filter_h: num(4, "filter_h")?,
            filter_w: num(5, "filter_w")?,
            num_filters: num(6, "num_filters")?,
            stride: num(7, "stride")?,
        };
        layer
            .validate()
            .map_err(|e| Error::Validation(format!("line {line}: {e}")))?;
        layers.push(layer);
    }
    Ok(layers)
}

pub fn parse_topology_file(path: &Path) -> Result<Vec<LayerSpec>> {
    let file = std::fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    parse_topology(file)
}

/// ResNet-50 v1.5 convolution layers (53), ifmaps pre-padded.
pub const RESNET50_CSV: &str = include_str!("../data/resnet50_v1_5.csv");
/// Three-layer toy network.
pub const TOY_CSV: &str = include_str!("../data/toy3.csv");

pub fn resnet50() -> Vec<LayerSpec> {
    parse_topology(RESNET50_CSV.as_bytes()).expect("bundled topology parses")
}

pub fn toy_network() -> Vec<LayerSpec> {
    parse_topology(TOY_CSV.as_bytes()).expect("bundled topology parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileMap {
    pub row_tiles: u64,
    pub col_tiles: u64,
    pub vectors_per_tile: u64,
    pub programming_events: u64,
}

pub fn tile_layer(layer: &LayerSpec, cfg: &ChipConfig) -> TileMap {
    let row_tiles = layer.filter_len().div_ceil(cfg.rows) as u64;
    let col_tiles = layer.num_filters.div_ceil(cfg.cols) as u64;
    TileMap {
        row_tiles,
        col_tiles,
        vectors_per_tile: (layer.out_h() * layer.out_w() * cfg.batch) as u64,
        programming_events: row_tiles * col_tiles,
    }
}

/// Bits moved, per SRAM bank and DRAM stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Traffic {
    pub sram_input_read: u64,
    pub sram_input_write: u64,
    pub sram_filter_read: u64,
    pub sram_filter_write: u64,
    pub sram_output_read: u64,
    pub sram_output_write: u64,
    pub sram_acc_read: u64,
    pub sram_acc_write: u64,
    pub dram_ifmap_read: u64,
    pub dram_weight_read: u64,
    pub dram_output_write: u64,
}

impl Traffic {
    pub fn sram_read_bits(&self) -> u64 {
        self.sram_input_read + self.sram_filter_read + self.sram_output_read + self.sram_acc_read
    }

    pub fn sram_write_bits(&self) -> u64 {
        self.sram_input_write
            + self.sram_filter_write
            + self.sram_output_write
            + self.sram_acc_write
    }

    pub fn sram_bits(&self) -> u64 {
        self.sram_read_bits() + self.sram_write_bits()
    }

    pub fn dram_read_bits(&self) -> u64 {
        self.dram_ifmap_read + self.dram_weight_read
    }

    pub fn dram_write_bits(&self) -> u64 {
        self.dram_output_write
    }

    pub fn dram_bits(&self) -> u64 {
        self.dram_read_bits() + self.dram_write_bits()
    }

    fn add(&mut self, o: &Traffic) {
        self.sram_input_read += o.sram_input_read;
        self.sram_input_write += o.sram_input_write;
        self.sram_filter_read += o.sram_filter_read;
        self.sram_filter_write += o.sram_filter_write;
        self.sram_output_read += o.sram_output_read;
        self.sram_output_write += o.sram_output_write;
        self.sram_acc_read += o.sram_acc_read;
        self.sram_acc_write += o.sram_acc_write;
        self.dram_ifmap_read += o.dram_ifmap_read;
        self.dram_weight_read += o.dram_weight_read;
        self.dram_output_write += o.dram_output_write;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStats {
    pub name: String,
    pub tiles: TileMap,
    pub compute_cycles: u64,
    pub programming_events: u64,
    pub cells_programmed: u64,
    pub output_elems: u64,
    /// Ifmap arrived over the on-chip output→input path.
    pub input_forwarded: bool,
    /// Ifmap fit in input SRAM.
    pub input_resident: bool,
    pub output_to_dram: bool,
    pub traffic: Traffic,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub compute_cycles: u64,
    pub programming_events: u64,
    pub cells_programmed: u64,
    pub output_elems: u64,
    pub traffic: Traffic,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub layers: Vec<LayerStats>,
    pub total: Totals,
}

impl RuntimeStats {
    fn from_layers(layers: Vec<LayerStats>) -> Self {
        let mut total = Totals::default();
        for l in &layers {
            total.compute_cycles += l.compute_cycles;
            total.programming_events += l.programming_events;
            total.cells_programmed += l.cells_programmed;
            total.output_elems += l.output_elems;
            total.traffic.add(&l.traffic);
        }
        RuntimeStats { layers, total }
    }
}

/// Where a layer's ifmap comes from and where its output goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerContext {
    pub input_forwarded: bool,
    pub output_to_dram: bool,
}

impl LayerContext {
    /// A layer run on its own: ifmap from DRAM, output back to DRAM.
    pub const STANDALONE: LayerContext = LayerContext {
        input_forwarded: false,
        output_to_dram: true,
    };
}

fn ifmap_bits(layer: &LayerSpec, cfg: &ChipConfig) -> u64 {
    layer.ifmap_elems() * cfg.batch as u64 * cfg.b_in as u64
}

fn output_bits(layer: &LayerSpec, cfg: &ChipConfig) -> u64 {
    layer.ofmap_elems() * cfg.batch as u64 * cfg.b_out as u64
}

fn fits_input_sram(bits: u64, cfg: &ChipConfig) -> bool {
    bits as f64 <= cfg.input_sram_bits()
}

/// Runtime of one layer executed on its own.
pub fn layer_runtime(layer: &LayerSpec, cfg: &ChipConfig) -> LayerStats {
    layer_runtime_in(layer, cfg, LayerContext::STANDALONE)
}

pub fn layer_runtime_in(layer: &LayerSpec, cfg: &ChipConfig, ctx: LayerContext) -> LayerStats {
    let tiles = tile_layer(layer, cfg);
    let (n, m) = (cfg.rows as u64, cfg.cols as u64);
    let compute_cycles = tiles.programming_events * tiles.vectors_per_tile;
    let in_bits = ifmap_bits(layer, cfg);
    let out_bits = output_bits(layer, cfg);
    let weight_bits = layer.weight_count() * cfg.b_w as u64;
    let resident = fits_input_sram(in_bits, cfg);

    let dram_ifmap_read = if ctx.input_forwarded {
        0
    } else if resident {
        in_bits
    } else {
        in_bits * tiles.col_tiles
    };
    let acc_bits = if tiles.row_tiles > 1 {
        compute_cycles * m * cfg.b_acc as u64
    } else {
        0
    };

    let traffic = Traffic {
        sram_input_read: compute_cycles * n * cfg.b_in as u64,
        // Forwarded outputs and DRAM fetches are both staged in input SRAM.
        sram_input_write: if ctx.input_forwarded {
            in_bits
        } else {
            dram_ifmap_read
        },
        sram_filter_read: weight_bits,
        sram_filter_write: weight_bits,
        sram_output_read: out_bits,
        sram_output_write: out_bits,
        sram_acc_read: acc_bits,
        sram_acc_write: acc_bits,
        dram_ifmap_read,
        dram_weight_read: weight_bits,
        dram_output_write: if ctx.output_to_dram { out_bits } else { 0 },
    };

    LayerStats {
        name: layer.name.clone(),
        tiles,
        compute_cycles,
        programming_events: tiles.programming_events,
        cells_programmed: tiles.programming_events * n * m,
        output_elems: layer.ofmap_elems() * cfg.batch as u64,
        input_forwarded: ctx.input_forwarded,
        input_resident: resident,
        output_to_dram: ctx.output_to_dram,
        traffic,
    }
}

/// Runtime of a whole network in layer order.
///
/// A layer's output is forwarded on-chip to the next layer's input SRAM when
/// it fits there and the next ifmap is resident; otherwise it is written to
/// DRAM and the next layer fetches from DRAM. The last layer always writes
/// to DRAM.
pub fn network_runtime(layers: &[LayerSpec], cfg: &ChipConfig) -> Result<RuntimeStats> {
    if layers.is_empty() {
        return Err(Error::Domain("network has no layers".into()));
    }
    let forwards: Vec<bool> = layers
        .windows(2)
        .map(|pair| {
            fits_input_sram(output_bits(&pair[0], cfg), cfg)
                && fits_input_sram(ifmap_bits(&pair[1], cfg), cfg)
        })
        .collect();
    let stats = layers
        .iter()
        .enumerate()
        .map(|(idx, layer)| {
            let ctx = LayerContext {
                input_forwarded: idx > 0 && forwards[idx - 1],
                output_to_dram: !forwards.get(idx).copied().unwrap_or(false),
            };
            layer_runtime_in(layer, cfg, ctx)
        })
        .collect();
    Ok(RuntimeStats::from_layers(stats))
}
