//! `xbar`: evaluate, sweep and optimize the optical crossbar accelerator
//! model from the command line.
//!
//! Exit codes: 0 success, 1 configuration error, 2 topology error,
//! 3 evaluation or output error, 4 infeasible optimization step.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use xbar_core::config::RunConfig;
use xbar_core::dse::{self, OptimizationResult};
use xbar_core::perf::REPORT_SCHEMA_VERSION;
use xbar_core::workload::{parse_topology, RESNET50_CSV, TOY_CSV};
use xbar_core::{
    evaluate, CalibrationProfile, ChipConfig, Error, LayerSpec, PerfReport, TechParams,
};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "xbar",
    version,
    about = "Optical crossbar accelerator performance model"
)]
struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reserved; the model is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Topology CSV, or builtin:resnet50 / builtin:toy.
    #[arg(long)]
    topology: String,
    /// Calibration profile: built-in name or profile file. Overrides the
    /// run file's `profile`.
    #[arg(long)]
    profile: Option<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one chip configuration; writes report.json and report.csv.
    Evaluate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate every point of a grid; writes sweep.csv.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the batch, SRAM, array-size flow; writes optimize.json.
    Optimize {
        #[arg(long)]
        constraints: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

/// An error with its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn fail(code: u8) -> impl FnOnce(anyhow::Error) -> Failure {
    move |err| Failure { code, err }
}

fn core_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Parse { .. } | Error::Validation(_) => 2,
        Error::Infeasible { .. } => 4,
        Error::Evaluation { source, .. } => core_code(source),
        _ => 3,
    }
}

fn core_fail(e: Error) -> Failure {
    Failure {
        code: core_code(&e),
        err: e.into(),
    }
}

type CmdResult<T> = Result<T, Failure>;

#[derive(Debug, Clone, Serialize)]
struct RunManifest {
    schema_version: u32,
    tool_version: &'static str,
    command: &'static str,
    profile: String,
    /// sha256 of the resolved chip, tech and command settings.
    config_hash: String,
    /// sha256 of the topology bytes.
    topology_hash: String,
    /// Seconds since the epoch from SOURCE_DATE_EPOCH; absent otherwise so
    /// that reruns are byte-identical.
    timestamp: Option<u64>,
}

impl RunManifest {
    const CSV_COLUMNS: [&'static str; 7] = [
        "schema_version",
        "tool_version",
        "command",
        "profile",
        "config_hash",
        "topology_hash",
        "timestamp",
    ];

    fn new(
        command: &'static str,
        profile: &str,
        resolved: &impl Serialize,
        topology: &[u8],
    ) -> Self {
        let resolved = serde_json::to_vec(resolved).expect("resolved settings serialize");
        RunManifest {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            command,
            profile: profile.to_string(),
            config_hash: sha256(&resolved),
            topology_hash: sha256(topology),
            timestamp: std::env::var("SOURCE_DATE_EPOCH")
                .ok()
                .and_then(|s| s.trim().parse().ok()),
        }
    }

    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.schema_version.to_string(),
            self.tool_version.to_string(),
            self.command.to_string(),
            self.profile.clone(),
            self.config_hash.clone(),
            self.topology_hash.clone(),
            self.timestamp.map(|t| t.to_string()).unwrap_or_default(),
        ]
    }
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Inputs {
    run: RunConfig,
    profile: CalibrationProfile,
    tech: TechParams,
    layers: Vec<LayerSpec>,
    topology_bytes: Vec<u8>,
}

fn load_inputs(config: Option<&Path>, common: &Common) -> CmdResult<Inputs> {
    let run = match config {
        Some(p) => RunConfig::load(p).map_err(core_fail)?,
        None => RunConfig::default(),
    };
    let profile = run.profile(common.profile.as_deref()).map_err(core_fail)?;
    let tech = run.tech(&profile).map_err(core_fail)?;
    let (topology_bytes, layers) = load_topology(&common.topology)?;
    Ok(Inputs {
        run,
        profile,
        tech,
        layers,
        topology_bytes,
    })
}

fn load_topology(spec: &str) -> CmdResult<(Vec<u8>, Vec<LayerSpec>)> {
    let bytes = match spec {
        "builtin:resnet50" => RESNET50_CSV.as_bytes().to_vec(),
        "builtin:toy" => TOY_CSV.as_bytes().to_vec(),
        path => fs::read(path)
            .with_context(|| format!("cannot read topology {path}"))
            .map_err(fail(2))?,
    };
    let layers = parse_topology(bytes.as_slice()).map_err(|e| Failure {
        code: 2,
        err: anyhow!("{spec}: {e}"),
    })?;
    if layers.is_empty() {
        return Err(Failure {
            code: 2,
            err: anyhow!("{spec}: topology has no layers"),
        });
    }
    Ok((bytes, layers))
}

/// Writes via a temporary file in the same directory and renames into
/// place, so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn to_json(value: &impl Serialize) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("report serializes");
    v.push(b'\n');
    v
}

fn to_csv(header: Vec<String>, rows: Vec<Vec<String>>) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(w.into_inner()?)
}

fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = RunManifest::CSV_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(dse::sweep_csv_header());
    h
}

fn csv_row(m: &RunManifest, cfg: &ChipConfig, r: &PerfReport) -> Vec<String> {
    let mut row = m.csv_fields();
    row.extend(dse::sweep_csv_row(cfg, r));
    row
}

fn summary(r: &PerfReport) -> String {
    format!(
        "ips={:.1} ips_per_w={:.1} power_w={:.3} area_mm2={:.3}",
        r.ips, r.ips_per_w, r.power_w, r.area_mm2
    )
}

#[derive(Serialize)]
struct EvaluateOutput<'a> {
    manifest: &'a RunManifest,
    config: &'a ChipConfig,
    tech: &'a TechParams,
    power_breakdown_w: std::collections::BTreeMap<&'static str, f64>,
    report: &'a PerfReport,
}

fn cmd_evaluate(config: Option<&Path>, common: &Common) -> CmdResult<()> {
    let inp = load_inputs(config, common)?;
    let chip = inp.run.chip();
    let manifest = RunManifest::new(
        "evaluate",
        &inp.profile.name,
        &(&chip, &inp.tech),
        &inp.topology_bytes,
    );
    let report = evaluate(&inp.layers, &chip, &inp.tech).map_err(core_fail)?;
    let json = to_json(&EvaluateOutput {
        manifest: &manifest,
        config: &chip,
        tech: &inp.tech,
        power_breakdown_w: report.power_breakdown_w(),
        report: &report,
    });
    let csv = to_csv(csv_header(), vec![csv_row(&manifest, &chip, &report)]).map_err(fail(3))?;
    write_atomic(&common.out.join("report.json"), &json).map_err(fail(3))?;
    write_atomic(&common.out.join("report.csv"), &csv).map_err(fail(3))?;
    println!("{} {}", chip.label(), summary(&report));
    Ok(())
}

fn cmd_sweep(grid_path: &Path, common: &Common) -> CmdResult<()> {
    let inp = load_inputs(Some(grid_path), common)?;
    let grid = inp.run.grid().map_err(core_fail)?;
    let manifest = RunManifest::new(
        "sweep",
        &inp.profile.name,
        &(&grid, &inp.tech),
        &inp.topology_bytes,
    );
    let points = dse::sweep(&grid, &inp.layers, &inp.tech).map_err(core_fail)?;
    let rows = points
        .iter()
        .map(|p| csv_row(&manifest, &p.config, &p.report))
        .collect();
    let csv = to_csv(csv_header(), rows).map_err(fail(3))?;
    write_atomic(&common.out.join("sweep.csv"), &csv).map_err(fail(3))?;
    let best = points
        .iter()
        .max_by(|a, b| a.report.ips_per_w.total_cmp(&b.report.ips_per_w))
        .expect("grid is nonempty");
    println!(
        "{} points; best IPS/W at {} {}",
        points.len(),
        best.config.label(),
        summary(&best.report)
    );
    Ok(())
}

#[derive(Serialize)]
struct OptimizeOutput<'a> {
    manifest: &'a RunManifest,
    constraints: &'a dse::Constraints,
    result: &'a OptimizationResult,
}

fn cmd_optimize(constraints_path: Option<&Path>, common: &Common) -> CmdResult<()> {
    let inp = load_inputs(constraints_path, common)?;
    let constraints = inp.run.constraints().map_err(core_fail)?;
    let manifest = RunManifest::new(
        "optimize",
        &inp.profile.name,
        &(&constraints, &inp.tech),
        &inp.topology_bytes,
    );
    let result = dse::optimize(&inp.layers, &inp.tech, &constraints).map_err(core_fail)?;
    let json = to_json(&OptimizeOutput {
        manifest: &manifest,
        constraints: &constraints,
        result: &result,
    });
    write_atomic(&common.out.join("optimize.json"), &json).map_err(fail(3))?;
    let c = &result.chosen;
    println!(
        "chosen rows={} cols={} batch={} cores={} sram_input_mb={} critical_sram_mb={:.3}",
        c.rows, c.cols, c.batch, c.cores, c.sram_input_mb, result.critical_input_sram_mb
    );
    println!("{}", summary(&result.report));
    Ok(())
}

fn run(cli: Cli) -> CmdResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure {
                code: 1,
                err: anyhow!("--threads {n}: {e}"),
            })?;
    }
    match &cli.command {
        Command::Evaluate { config, common } => cmd_evaluate(config.as_deref(), common),
        Command::Sweep { grid, common } => cmd_sweep(grid, common),
        Command::Optimize {
            constraints,
            common,
        } => cmd_optimize(constraints.as_deref(), common),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, err }) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
