//! Design-space sweeps and the three-step optimization flow: smallest batch
//! that hides programming, largest input SRAM under an area cap, then the
//! array size with the best IPS/W.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chip::{ChipConfig, BITS_PER_MB};
use crate::error::{Error, Result};
use crate::perf::{area_model, evaluate, PerfReport, AREA_CATEGORIES, ENERGY_CATEGORIES};
use crate::tech::TechParams;
use crate::workload::{network_runtime, LayerSpec};

pub const DEFAULT_AREA_CAP_MM2: f64 = 100.0;
pub const DEFAULT_SRAM_STEP_MB: f64 = 0.25;
pub const DEFAULT_HIDING_EPS: f64 = 0.01;
pub const DEFAULT_TIE_TOL: f64 = 0.02;

/// Relative slack on the area cap so that a cap computed as
/// `fixed + k·step·a_sram` admits exactly `k` steps.
pub const AREA_SLACK: f64 = 1e-9;

/// `lo, 2·lo, 4·lo, ...` up to and including `hi`.
pub fn powers_of_two(lo: usize, hi: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut v = lo.max(1);
    while v <= hi {
        out.push(v);
        v *= 2;
    }
    out
}

fn within_cap(area: f64, cap: f64) -> bool {
    area <= cap * (1.0 + AREA_SLACK)
}

fn eval_err(cfg: &ChipConfig, e: Error) -> Error {
    Error::Evaluation {
        config: cfg.label(),
        source: Box::new(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub batch: Vec<usize>,
    pub sram_input_mb: Vec<f64>,
    pub cores: Vec<u32>,
    /// Everything not swept.
    pub template: ChipConfig,
}

impl SweepGrid {
    /// A one-point grid at `template`.
    pub fn single(template: ChipConfig) -> Self {
        SweepGrid {
            rows: vec![template.rows],
            cols: vec![template.cols],
            batch: vec![template.batch],
            sram_input_mb: vec![template.sram_input_mb],
            cores: vec![template.cores],
            template,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
            * self.cols.len()
            * self.batch.len()
            * self.sram_input_mb.len()
            * self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cartesian product, rows outermost and cores innermost.
    pub fn configs(&self) -> Vec<ChipConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &rows in &self.rows {
            for &cols in &self.cols {
                for &batch in &self.batch {
                    for &sram_input_mb in &self.sram_input_mb {
                        for &cores in &self.cores {
                            out.push(ChipConfig {
                                rows,
                                cols,
                                batch,
                                sram_input_mb,
                                cores,
                                ..self.template.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for (axis, n) in [
            ("rows", self.rows.len()),
            ("cols", self.cols.len()),
            ("batch", self.batch.len()),
            ("sram_input_mb", self.sram_input_mb.len()),
            ("cores", self.cores.len()),
        ] {
            if n == 0 {
                return Err(Error::Config(format!("grid axis '{axis}' is empty")));
            }
        }
        self.template.validate()?;
        for cfg in self.configs() {
            cfg.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub config: ChipConfig,
    pub report: PerfReport,
}

/// Evaluates every grid point. Evaluations run in parallel; the result is in
/// [`SweepGrid::configs`] order.
pub fn sweep(grid: &SweepGrid, layers: &[LayerSpec], tech: &TechParams) -> Result<Vec<SweepPoint>> {
    grid.validate()?;
    tech.validate()?;
    let configs = grid.configs();
    let results: Vec<Result<PerfReport>> = configs
        .par_iter()
        .map(|cfg| evaluate(layers, cfg, tech).map_err(|e| eval_err(cfg, e)))
        .collect();
    configs
        .into_iter()
        .zip(results)
        .map(|(config, r)| r.map(|report| SweepPoint { config, report }))
        .collect()
}

/// Column names of [`sweep_csv_row`].
pub fn sweep_csv_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "rows",
        "cols",
        "batch",
        "sram_input_mb",
        "cores",
        "ips",
        "ips_per_w",
        "power_w",
        "area_mm2",
        "energy_per_inference_j",
        "t_total_s",
        "t_compute_s",
        "t_program_exposed_s",
        "compute_cycles",
        "programming_events",
        "dram_bits",
        "sram_bits",
        "laser_wallplug_w",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(ENERGY_CATEGORIES.iter().map(|c| format!("energy_{c}_j")));
    h.extend(AREA_CATEGORIES.iter().map(|c| format!("area_{c}_mm2")));
    h
}

/// One CSV row: all swept axes and every scalar of the report.
pub fn sweep_csv_row(cfg: &ChipConfig, r: &PerfReport) -> Vec<String> {
    let mut row = vec![
        cfg.rows.to_string(),
        cfg.cols.to_string(),
        cfg.batch.to_string(),
        cfg.sram_input_mb.to_string(),
        cfg.cores.to_string(),
        r.ips.to_string(),
        r.ips_per_w.to_string(),
        r.power_w.to_string(),
        r.area_mm2.to_string(),
        r.energy_per_inference_j.to_string(),
        r.timeline.t_total.to_string(),
        r.timeline.t_compute.to_string(),
        r.timeline.t_program_exposed.to_string(),
        r.compute_cycles.to_string(),
        r.programming_events.to_string(),
        r.dram_bits.to_string(),
        r.sram_bits.to_string(),
        r.loss_budget.laser_wallplug_power_w.to_string(),
    ];
    row.extend(r.energy_j.entries().iter().map(|(_, v)| v.to_string()));
    row.extend(r.area.entries().iter().map(|(_, v)| v.to_string()));
    row
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Batch,
    Sram,
    Array,
    Recheck,
}

impl Step {
    pub fn name(self) -> &'static str {
        match self {
            Step::Batch => "batch",
            Step::Sram => "sram",
            Step::Array => "array",
            Step::Recheck => "recheck",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub ips: f64,
    pub ips_per_w: f64,
    pub power_w: f64,
    pub dram_bits: u64,
    pub t_total_s: f64,
    pub t_program_exposed_s: f64,
}

impl Metrics {
    fn of(r: &PerfReport) -> Self {
        Metrics {
            ips: r.ips,
            ips_per_w: r.ips_per_w,
            power_w: r.power_w,
            dram_bits: r.dram_bits,
            t_total_s: r.timeline.t_total,
            t_program_exposed_s: r.timeline.t_program_exposed,
        }
    }
}

/// One candidate considered by a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub config: ChipConfig,
    pub area_mm2: f64,
    pub feasible: bool,
    /// Absent for infeasible candidates.
    pub metrics: Option<Metrics>,
    pub note: Option<String>,
}

impl AuditEntry {
    fn evaluated(config: ChipConfig, r: &PerfReport) -> Self {
        AuditEntry {
            area_mm2: r.area_mm2,
            config,
            feasible: true,
            metrics: Some(Metrics::of(r)),
            note: None,
        }
    }

    fn infeasible(config: ChipConfig, area_mm2: f64, note: String) -> Self {
        AuditEntry {
            config,
            area_mm2,
            feasible: false,
            metrics: None,
            note: Some(note),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditStep {
    pub iteration: u32,
    pub step: Step,
    pub candidates: Vec<AuditEntry>,
    pub chosen: Option<usize>,
    pub note: Option<String>,
}

/// Programming is hidden when at most `eps` of the batch latency is stalled
/// on reprogramming.
pub fn hides_programming(r: &PerfReport, eps: f64) -> bool {
    r.timeline.t_program_exposed <= eps * r.timeline.t_total
}

fn evaluate_all(
    layers: &[LayerSpec],
    configs: &[ChipConfig],
    tech: &TechParams,
) -> Result<Vec<PerfReport>> {
    let results: Vec<Result<PerfReport>> = configs
        .par_iter()
        .map(|cfg| evaluate(layers, cfg, tech).map_err(|e| eval_err(cfg, e)))
        .collect();
    results.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchChoice {
    pub batch: usize,
    /// False when no candidate hid programming and the largest was returned.
    pub hidden: bool,
    pub candidates: Vec<AuditEntry>,
}

/// Smallest batch whose dual-core timeline hides programming.
pub fn find_min_hiding_batch(
    layers: &[LayerSpec],
    template: &ChipConfig,
    tech: &TechParams,
    candidates: &[usize],
    eps: f64,
) -> Result<BatchChoice> {
    if candidates.is_empty() {
        return Err(Error::Domain("no batch candidates".into()));
    }
    if candidates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(format!(
            "batch candidates must be ascending: {candidates:?}"
        )));
    }
    let configs: Vec<ChipConfig> = candidates
        .iter()
        .map(|&batch| ChipConfig {
            batch,
            cores: 2,
            ..template.clone()
        })
        .collect();
    let reports = evaluate_all(layers, &configs, tech)?;
    let hit = reports.iter().position(|r| hides_programming(r, eps));
    let idx = hit.unwrap_or_else(|| {
        log::warn!("no batch in {candidates:?} hides programming within {eps}; using the largest");
        candidates.len() - 1
    });
    Ok(BatchChoice {
        batch: candidates[idx],
        hidden: hit.is_some(),
        candidates: configs
            .into_iter()
            .zip(&reports)
            .map(|(c, r)| AuditEntry::evaluated(c, r))
            .collect(),
    })
}

/// Grid steps of input SRAM that fit under `cap`, or an error naming the
/// shortfall.
fn max_sram_steps(template: &ChipConfig, tech: &TechParams, cap: f64, step_mb: f64) -> Result<u64> {
    if !(step_mb.is_finite() && step_mb > 0.0) {
        return Err(Error::Config(format!(
            "sram step must be positive, got {step_mb}"
        )));
    }
    if tech.a_sram_per_mb <= 0.0 {
        return Err(Error::Domain(
            "a_sram_per_mb is zero; SRAM size is unbounded by area".into(),
        ));
    }
    let area_at = |k: u64| {
        area_model(
            &ChipConfig {
                sram_input_mb: k as f64 * step_mb,
                ..template.clone()
            },
            tech,
        )
        .total()
    };
    let fixed = area_at(0);
    let per_step = step_mb * tech.a_sram_per_mb;
    let mut k = ((cap - fixed) / per_step + 1e-9).floor().max(0.0) as u64;
    while k > 0 && !within_cap(area_at(k), cap) {
        k -= 1;
    }
    while within_cap(area_at(k + 1), cap) {
        k += 1;
    }
    if k == 0 {
        return Err(Error::Infeasible {
            step: "sram",
            msg: format!(
                "area cap {cap} mm² leaves no room for {step_mb} MB of input SRAM on {}x{} \
                 (fixed area {fixed:.4} mm²)",
                template.rows, template.cols
            ),
        });
    }
    Ok(k)
}

/// Input-SRAM sizes at which some layer's residency or forwarding flips.
fn residency_thresholds_mb(layers: &[LayerSpec], cfg: &ChipConfig) -> Vec<f64> {
    let batch = cfg.batch as u64;
    let mut t: Vec<f64> = layers
        .iter()
        .flat_map(|l| {
            [
                (l.ifmap_elems() * batch * cfg.b_in as u64) as f64 / BITS_PER_MB,
                (l.ofmap_elems() * batch * cfg.b_out as u64) as f64 / BITS_PER_MB,
            ]
        })
        .collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// Smallest input SRAM (MB) beyond which DRAM traffic no longer decreases.
/// DRAM traffic is a step function of SRAM size that only changes at
/// residency thresholds, so only those need checking.
pub fn critical_input_sram_mb(layers: &[LayerSpec], template: &ChipConfig) -> Result<f64> {
    let thresholds = residency_thresholds_mb(layers, template);
    let dram = |mb: f64| -> Result<u64> {
        let cfg = ChipConfig {
            sram_input_mb: mb,
            ..template.clone()
        };
        Ok(network_runtime(layers, &cfg)?.total.traffic.dram_bits())
    };
    let floor = dram(
        *thresholds
            .last()
            .ok_or_else(|| Error::Domain("network has no layers".into()))?,
    )?;
    for &t in &thresholds {
        if dram(t)? == floor {
            return Ok(t);
        }
    }
    unreachable!("the largest threshold reaches the floor")
}

/// Rounds `mb` up to the step grid.
pub fn round_up_to_step(mb: f64, step_mb: f64) -> f64 {
    (mb / step_mb - 1e-9).ceil() * step_mb
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SramChoice {
    pub input_sram_mb: f64,
    pub area_mm2: f64,
    pub critical_input_sram_mb: f64,
    /// Steps `1..=k+1`; the last is the first over the cap.
    pub candidates: Vec<AuditEntry>,
}

/// Largest input SRAM on the step grid with total area within the cap.
pub fn size_sram(
    layers: &[LayerSpec],
    template: &ChipConfig,
    tech: &TechParams,
    area_cap_mm2: f64,
    step_mb: f64,
) -> Result<SramChoice> {
    let k = max_sram_steps(template, tech, area_cap_mm2, step_mb)?;
    let at = |i: u64| ChipConfig {
        sram_input_mb: i as f64 * step_mb,
        ..template.clone()
    };
    let configs: Vec<ChipConfig> = (1..=k).map(at).collect();
    let reports = evaluate_all(layers, &configs, tech)?;
    let mut candidates: Vec<AuditEntry> = configs
        .into_iter()
        .zip(&reports)
        .map(|(c, r)| AuditEntry::evaluated(c, r))
        .collect();
    let over = at(k + 1);
    let over_area = area_model(&over, tech).total();
    candidates.push(AuditEntry::infeasible(
        over,
        over_area,
        format!("area {over_area:.4} mm² exceeds cap {area_cap_mm2} mm²"),
    ));
    let chosen = &reports[k as usize - 1];
    assert!(
        within_cap(chosen.area_mm2, area_cap_mm2),
        "sized SRAM exceeds the area cap"
    );
    Ok(SramChoice {
        input_sram_mb: k as f64 * step_mb,
        area_mm2: chosen.area_mm2,
        critical_input_sram_mb: critical_input_sram_mb(layers, template)?,
        candidates,
    })
}

/// Index of the selected candidate: best IPS/W, then among those within
/// `tie_tol` of it the largest N·M, then N, then M.
pub fn select_array(candidates: &[AuditEntry], tie_tol: f64) -> Option<usize> {
    let best = candidates
        .iter()
        .filter_map(|c| c.metrics.as_ref().map(|m| m.ips_per_w))
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return None;
    }
    candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            c.metrics
                .as_ref()
                .is_some_and(|m| m.ips_per_w >= best * (1.0 - tie_tol))
        })
        .max_by_key(|(_, c)| (c.config.rows * c.config.cols, c.config.rows, c.config.cols))
        .map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayChoice {
    pub rows: usize,
    pub cols: usize,
    pub report: PerfReport,
    pub candidates: Vec<AuditEntry>,
}

/// Best array size at the template's batch and SRAM sizes.
pub fn pick_array_size(
    layers: &[LayerSpec],
    template: &ChipConfig,
    tech: &TechParams,
    sizes: &[(usize, usize)],
    tie_tol: f64,
) -> Result<ArrayChoice> {
    if sizes.is_empty() {
        return Err(Error::Domain("no array size candidates".into()));
    }
    let configs: Vec<ChipConfig> = sizes
        .iter()
        .map(|&(rows, cols)| ChipConfig {
            rows,
            cols,
            ..template.clone()
        })
        .collect();
    let reports = evaluate_all(layers, &configs, tech)?;
    let candidates: Vec<AuditEntry> = configs
        .into_iter()
        .zip(&reports)
        .map(|(c, r)| AuditEntry::evaluated(c, r))
        .collect();
    let idx = select_array(&candidates, tie_tol).expect("all candidates evaluated");
    Ok(ArrayChoice {
        rows: sizes[idx].0,
        cols: sizes[idx].1,
        report: reports[idx].clone(),
        candidates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constraints {
    /// Starting point; rows, cols, batch and input SRAM are overwritten by
    /// the flow.
    pub template: ChipConfig,
    pub area_cap_mm2: f64,
    pub batch_candidates: Vec<usize>,
    pub rows_candidates: Vec<usize>,
    pub cols_candidates: Vec<usize>,
    pub sram_step_mb: f64,
    pub hiding_eps: f64,
    pub tie_tol: f64,
}

impl Default for Constraints {
    fn default() -> Self {
        let rows = powers_of_two(32, 512);
        Constraints {
            template: ChipConfig {
                rows: rows[0],
                cols: rows[0],
                ..ChipConfig::default()
            },
            area_cap_mm2: DEFAULT_AREA_CAP_MM2,
            batch_candidates: powers_of_two(1, 256),
            cols_candidates: rows.clone(),
            rows_candidates: rows,
            sram_step_mb: DEFAULT_SRAM_STEP_MB,
            hiding_eps: DEFAULT_HIDING_EPS,
            tie_tol: DEFAULT_TIE_TOL,
        }
    }
}

impl Constraints {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.template.validate()?;
        if !(self.area_cap_mm2.is_finite() && self.area_cap_mm2 > 0.0) {
            return bad(format!(
                "area_cap_mm2 must be positive, got {}",
                self.area_cap_mm2
            ));
        }
        if !(self.sram_step_mb.is_finite() && self.sram_step_mb > 0.0) {
            return bad(format!(
                "sram_step_mb must be positive, got {}",
                self.sram_step_mb
            ));
        }
        if !(0.0..1.0).contains(&self.hiding_eps) {
            return bad(format!(
                "hiding_eps must lie in [0, 1), got {}",
                self.hiding_eps
            ));
        }
        if !(0.0..1.0).contains(&self.tie_tol) {
            return bad(format!("tie_tol must lie in [0, 1), got {}", self.tie_tol));
        }
        for (name, axis) in [
            ("batch_candidates", &self.batch_candidates),
            ("rows_candidates", &self.rows_candidates),
            ("cols_candidates", &self.cols_candidates),
        ] {
            if axis.is_empty() {
                return bad(format!("{name} is empty"));
            }
            if axis.contains(&0) {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.batch_candidates.windows(2).any(|w| w[0] >= w[1]) {
            return bad("batch_candidates must be strictly ascending".into());
        }
        Ok(())
    }

    /// Rows × cols, rows outermost.
    pub fn array_candidates(&self) -> Vec<(usize, usize)> {
        self.rows_candidates
            .iter()
            .flat_map(|&r| self.cols_candidates.iter().map(move |&c| (r, c)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub chosen: ChipConfig,
    pub report: PerfReport,
    pub critical_input_sram_mb: f64,
    pub batch_hidden: bool,
    pub iterations: u32,
    pub audit: Vec<AuditStep>,
}

impl OptimizationResult {
    /// Total candidates across all steps.
    pub fn audit_len(&self) -> usize {
        self.audit.iter().map(|s| s.candidates.len()).sum()
    }
}

/// Batch, then SRAM, then array size. After the array is picked, hiding is
/// re-checked on the chosen config; if it fails, the flow reruns once from
/// the chosen array.
pub fn optimize(
    layers: &[LayerSpec],
    tech: &TechParams,
    c: &Constraints,
) -> Result<OptimizationResult> {
    c.validate()?;
    tech.validate()?;
    if layers.is_empty() {
        return Err(Error::Domain("network has no layers".into()));
    }
    let mut audit = Vec::new();
    let mut template = c.template.clone();
    let mut iteration = 0;
    loop {
        let batch =
            find_min_hiding_batch(layers, &template, tech, &c.batch_candidates, c.hiding_eps)?;
        audit.push(AuditStep {
            iteration,
            step: Step::Batch,
            chosen: c.batch_candidates.iter().position(|&b| b == batch.batch),
            note: (!batch.hidden).then(|| "no candidate hides programming".to_string()),
            candidates: batch.candidates,
        });
        template.batch = batch.batch;
        template.cores = 2;

        let sram = size_sram(layers, &template, tech, c.area_cap_mm2, c.sram_step_mb)?;
        audit.push(AuditStep {
            iteration,
            step: Step::Sram,
            chosen: Some(sram.candidates.len() - 2),
            note: Some(format!(
                "critical input SRAM {:.4} MB",
                sram.critical_input_sram_mb
            )),
            candidates: sram.candidates,
        });
        let sram_mb = sram.input_sram_mb;

        // Larger arrays leave less room for SRAM, so each candidate gets the
        // largest size that still fits, capped at the step-2 size.
        let sizes = c.array_candidates();
        let fitted: Vec<std::result::Result<ChipConfig, Box<AuditEntry>>> = sizes
            .iter()
            .map(|&(rows, cols)| {
                let cfg = ChipConfig {
                    rows,
                    cols,
                    ..template.clone()
                };
                match max_sram_steps(&cfg, tech, c.area_cap_mm2, c.sram_step_mb) {
                    Ok(k) => Ok(ChipConfig {
                        sram_input_mb: sram_mb.min(k as f64 * c.sram_step_mb),
                        ..cfg
                    }),
                    Err(e) => {
                        let area = area_model(&cfg, tech).total();
                        Err(Box::new(AuditEntry::infeasible(cfg, area, e.to_string())))
                    }
                }
            })
            .collect();
        let feasible: Vec<ChipConfig> = fitted
            .iter()
            .filter_map(|f| f.as_ref().ok().cloned())
            .collect();
        let mut reports = evaluate_all(layers, &feasible, tech)?.into_iter();
        let candidates: Vec<AuditEntry> = fitted
            .into_iter()
            .map(|f| match f {
                Ok(cfg) => {
                    AuditEntry::evaluated(cfg, &reports.next().expect("one report per config"))
                }
                Err(entry) => *entry,
            })
            .collect();
        let idx = select_array(&candidates, c.tie_tol).ok_or_else(|| Error::Infeasible {
            step: "array",
            msg: format!("no array size fits under {} mm²", c.area_cap_mm2),
        })?;
        let chosen = candidates[idx].config.clone();
        audit.push(AuditStep {
            iteration,
            step: Step::Array,
            chosen: Some(idx),
            note: None,
            candidates,
        });

        let report = evaluate(layers, &chosen, tech).map_err(|e| eval_err(&chosen, e))?;
        let hidden = hides_programming(&report, c.hiding_eps);
        audit.push(AuditStep {
            iteration,
            step: Step::Recheck,
            candidates: vec![AuditEntry::evaluated(chosen.clone(), &report)],
            chosen: Some(0),
            note: Some(
                if hidden {
                    "programming hidden"
                } else {
                    "programming exposed"
                }
                .to_string(),
            ),
        });

        if hidden || iteration == 1 {
            if !hidden {
                log::warn!(
                    "programming still exposed on {} after rerun",
                    chosen.label()
                );
            }
            return Ok(OptimizationResult {
                critical_input_sram_mb: critical_input_sram_mb(layers, &chosen)?,
                chosen,
                report,
                batch_hidden: hidden,
                iterations: iteration + 1,
                audit,
            });
        }
        template = chosen;
        iteration += 1;
    }
}
