//! Command line front end.
//!
//! Every command writes its outputs atomically into the output directory
//! together with a `<name>.manifest.json` holding the resolved command, so
//! `wdipln rerun --manifest <file>` reproduces the outputs byte for byte.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::circuit::{parse_netlist, AddSubPanel, CircuitGraph, Imbalance, SpectralGrid};
use crate::devices::PROBE_WAVELENGTH_NM;
use crate::mlp::{run_gate_experiment, train, GateTask, NoiseModel, TrainParams};
use crate::neuron::{configure, expected_mac, relative_phase, signed_readout, InputEncoding, NeuronConfig, Topology};
use crate::scaling::{ArchitectureSpec, ScalingReport, ScalingTable, Variant};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Bias-path imbalance of the `hardware` noise preset.
pub const HARDWARE_BIAS_IMBALANCE: Imbalance = Imbalance {
    amplitude: 0.96,
    phase: 0.03,
};

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::TrainingFailed { .. } => EXIT_NUMERICAL,
            Error::Stage { source, .. } => source.exit_code(),
            _ => EXIT_VALIDATION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoisePreset {
    /// Ideal, perfectly balanced splitters.
    None,
    /// Static bias-path imbalance (amplitude 0.96, phase 0.03 rad).
    Hardware,
}

#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "wdipln", version, about = "Photonic linear neuron simulator")]
pub struct Cli {
    /// Output directory [default: current directory]
    #[arg(long, global = true, env = "WDIPLN_OUT_DIR")]
    pub out: Option<PathBuf>,
    /// Seed for every random draw
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Format of tabular outputs
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Splitter imbalance applied to circuits with a bias branch
    #[arg(long, global = true, value_enum, default_value_t = NoisePreset::None)]
    pub noise_preset: NoisePreset,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Sweep a JSON netlist over a wavelength grid
    Sweep(SweepArgs),
    /// Sweep the twelve add/subtract ring configurations
    Addsub(AddSubArgs),
    /// Train a logic gate network and run it on the photonic neuron
    Gates(GatesArgs),
    /// Element count, footprint and electrical I/O estimates
    Scaling(ScalingArgs),
    /// Configure and evaluate one neuron from a JSON config
    Eval(EvalArgs),
    /// Rerun a command from its manifest
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GridArgs {
    /// First wavelength (nm)
    #[arg(long, default_value_t = PROBE_WAVELENGTH_NM - 1.5)]
    pub start_nm: f64,
    /// Last wavelength (nm)
    #[arg(long, default_value_t = PROBE_WAVELENGTH_NM + 1.5)]
    pub stop_nm: f64,
    /// Grid step (pm)
    #[arg(long, default_value_t = 1.0)]
    pub step_pm: f64,
}

impl GridArgs {
    fn grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.start_nm, self.stop_nm, self.step_pm)
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Netlist JSON file
    #[arg(long)]
    pub netlist: PathBuf,
    /// Base name of the output files
    #[arg(long, default_value = "sweep")]
    pub name: String,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AddSubArgs {
    /// Ring rows to run (1: co-resonant, 2: R0 detuned, 3: all distinct)
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3], value_parser = clap::value_parser!(u8).range(1..=3))]
    pub rows: Vec<u8>,
    /// Phase columns to run (1: +R0+R1+R2 .. 4: -R0-R1+R2)
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3, 4], value_parser = clap::value_parser!(u8).range(1..=4))]
    pub columns: Vec<u8>,
    /// Detuning of R0 (below) and R2 (above) the probe (nm)
    #[arg(long, default_value_t = 0.8)]
    pub detuning_nm: f64,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    And,
    Or,
    Xor,
}

impl From<Gate> for GateTask {
    fn from(g: Gate) -> Self {
        match g {
            Gate::And => GateTask::And,
            Gate::Or => GateTask::Or,
            Gate::Xor => GateTask::Xor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GatesArgs {
    /// Logic gate to learn
    #[arg(long, value_enum)]
    pub gate: Gate,
    /// Gradient descent step
    #[arg(long, default_value_t = TrainParams::default().learning_rate)]
    pub learning_rate: f64,
    /// Epochs per restart
    #[arg(long, default_value_t = TrainParams::default().epochs)]
    pub epochs: usize,
    /// Random restarts before giving up
    #[arg(long, default_value_t = TrainParams::default().max_restarts)]
    pub max_restarts: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScalingArgs {
    /// coln-nominal (or coln), coln-thermal, wdipln-naive, wdipln-nominal; all when omitted
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<Variant>,
    /// Layer width
    #[arg(short = 'N', long = "width")]
    pub n: Option<usize>,
    /// Wavelength channels
    #[arg(short = 'M', long = "channels")]
    pub m: Option<usize>,
    /// Pad grid as ROWSxCOLS, adds a pad area estimate for each report
    #[arg(long, value_parser = parse_grid)]
    pub pad_grid: Option<(usize, usize)>,
    /// Pad pitch (um)
    #[arg(long, default_value_t = 150.0)]
    pub pad_pitch_um: f64,
    /// Pad edge length (um)
    #[arg(long, default_value_t = 60.0)]
    pub pad_size_um: f64,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    if s.eq_ignore_ascii_case("coln") {
        return Ok(Variant::ColnNominal);
    }
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    Ok((
        r.trim().parse().map_err(|e| format!("rows: {e}"))?,
        c.trim().parse().map_err(|e| format!("cols: {e}"))?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyArg {
    Coln,
    Ring,
    RingBinary,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::Coln => Topology::Coln,
            TopologyArg::Ring => Topology::Ring(InputEncoding::Continuous),
            TopologyArg::RingBinary => Topology::Ring(InputEncoding::Binary),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Neuron config JSON file
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value_t = TopologyArg::Ring)]
    pub topology: TopologyArg,
    /// Also write the configured circuit as a netlist
    #[arg(long)]
    pub netlist: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    /// Manifest written by an earlier run
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: Cli,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<String>,
    pub duration_s: f64,
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), contents)?;
        self.written.push(name.to_string());
        Ok(())
    }
}

fn apply_preset(g: CircuitGraph, preset: NoisePreset) -> Result<CircuitGraph> {
    match preset {
        NoisePreset::Hardware if g.bias_branch().is_some() => {
            let branches = g.imbalance().to_vec();
            g.with_imbalance(branches, HARDWARE_BIAS_IMBALANCE)
        }
        _ => Ok(g),
    }
}

fn sweep_bytes(g: &CircuitGraph, grid: &SpectralGrid, format: Format) -> Result<(Vec<u8>, &'static str)> {
    let s = g.sweep(grid)?;
    Ok(match format {
        Format::Csv => (s.to_csv_string().into_bytes(), "csv"),
        Format::Json => (serde_json::to_string_pretty(&s)?.into_bytes(), "json"),
    })
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs, out: &mut Outputs) -> Result<String> {
    let text = fs::read_to_string(&a.netlist)?;
    let g = apply_preset(parse_netlist(&text)?, cli.noise_preset)?;
    let (bytes, ext) = sweep_bytes(&g, &a.grid.grid()?, cli.format)?;
    out.write(&format!("{}.{ext}", a.name), &bytes)?;
    Ok(a.name.clone())
}

#[derive(Serialize)]
struct PanelSummary {
    label: String,
    row: usize,
    column: usize,
    probe_nm: f64,
    transmission_db_at_probe: f64,
    field_re: f64,
    field_im: f64,
}

fn cmd_addsub(cli: &Cli, a: &AddSubArgs, out: &mut Outputs) -> Result<String> {
    let grid = a.grid.grid()?;
    let mut summary = Vec::new();
    for p in AddSubPanel::all(PROBE_WAVELENGTH_NM, a.detuning_nm) {
        if !a.rows.contains(&(p.row as u8)) || !a.columns.contains(&(p.column as u8)) {
            continue;
        }
        let g = apply_preset(p.build()?, cli.noise_preset)?;
        let (bytes, ext) = sweep_bytes(&g, &grid, cli.format)?;
        out.write(&format!("addsub_{}.{ext}", p.label), &bytes)?;
        let f = g.evaluate(PROBE_WAVELENGTH_NM)?;
        summary.push(PanelSummary {
            label: p.label.clone(),
            row: p.row,
            column: p.column,
            probe_nm: PROBE_WAVELENGTH_NM,
            transmission_db_at_probe: crate::circuit::to_db(f),
            field_re: f.re,
            field_im: f.im,
        });
    }
    out.write("addsub_summary.json", serde_json::to_string_pretty(&summary)?.as_bytes())?;
    Ok("addsub".to_string())
}

fn cmd_gates(cli: &Cli, a: &GatesArgs, out: &mut Outputs) -> Result<String> {
    let task: GateTask = a.gate.into();
    let params = TrainParams {
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        max_restarts: a.max_restarts,
        ..TrainParams::default()
    };
    let model = train(task, cli.seed, &params)?;
    let noise = match cli.noise_preset {
        NoisePreset::None => None,
        NoisePreset::Hardware => Some(NoiseModel::Static {
            branch: Imbalance::default(),
            bias: HARDWARE_BIAS_IMBALANCE,
        }),
    };
    let log = run_gate_experiment(task, &model, noise.as_ref())?;
    let name = format!("gates_{}", task.name().to_ascii_lowercase());
    out.write(&format!("{name}.json"), log.to_json().as_bytes())?;
    let mut csv = Vec::new();
    log.write_csv(&mut csv)?;
    out.write(&format!("{name}.csv"), &csv)?;
    println!("{} accuracy {:.2}", task.name(), log.accuracy);
    Ok(name)
}

fn cmd_scaling(cli: &Cli, a: &ScalingArgs, out: &mut Outputs) -> Result<String> {
    let variants: Vec<Variant> = a.variant.map_or(Variant::ALL.to_vec(), |v| vec![v]);
    if a.variant.is_none() && a.n.is_none() && a.m.is_none() && a.pad_grid.is_none() {
        let table = ScalingTable::new(&[(8, 1), (8, 8)])?;
        print!("{table}");
        out.write("scaling.txt", table.to_string().as_bytes())?;
        out.write("scaling.json", table.to_json().as_bytes())?;
        return Ok("scaling".to_string());
    }
    let (n, m) = (a.n.unwrap_or(8), a.m.unwrap_or(1));
    let reports = variants
        .iter()
        .map(|&v| {
            let r = ScalingReport::new(ArchitectureSpec::new(v, n, m))?;
            match a.pad_grid {
                Some((rows, cols)) => r.with_pads(a.pad_size_um, a.pad_pitch_um, rows, cols),
                None => Ok(r),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut text = String::from("Component Size Only (no routing considered)\n");
    for r in &reports {
        text.push_str(&format!(
            "{:<22} N={} M={}  elements {:>4}  footprint {:>9} mm^2  I/O {:>4}",
            r.spec.variant.label(),
            n,
            m,
            r.element_count,
            crate::scaling::format_area(r.footprint_mm2),
            r.electrical_io
        ));
        if let Some(p) = r.pad_area_mm2 {
            text.push_str(&format!("  pads {p} mm^2"));
        }
        text.push('\n');
    }
    print!("{text}");
    out.write("scaling.txt", text.as_bytes())?;
    out.write("scaling.json", serde_json::to_string_pretty(&reports)?.as_bytes())?;
    if cli.format == Format::Csv {
        let mut csv = String::from("variant,n,m,elements,footprint_mm2,electrical_io\n");
        for r in &reports {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                serde_json::to_value(r.spec.variant)?.as_str().unwrap_or_default(),
                n,
                m,
                r.element_count,
                r.footprint_mm2,
                r.electrical_io
            ));
        }
        out.write("scaling.csv", csv.as_bytes())?;
    }
    Ok("scaling".to_string())
}

#[derive(Serialize)]
struct EvalReport {
    expected_mac: f64,
    signed_readout: f64,
    relative_phase_rad: f64,
    field_re: f64,
    field_im: f64,
    ring_count: usize,
}

fn cmd_eval(cli: &Cli, a: &EvalArgs, out: &mut Outputs) -> Result<String> {
    let config = NeuronConfig::from_json(&fs::read_to_string(&a.config)?)?;
    let topology: Topology = a.topology.into();
    let g = apply_preset(configure(&config, topology)?, cli.noise_preset)?;
    let r = apply_preset(configure(&config.reference(), topology)?, cli.noise_preset)?;
    let l = config.probe_wavelength_nm;
    let (f, rf) = (g.evaluate(l)?, r.evaluate(l)?);
    let report = EvalReport {
        expected_mac: expected_mac(&config),
        signed_readout: signed_readout(f, rf),
        relative_phase_rad: relative_phase(f, rf),
        field_re: f.re,
        field_im: f.im,
        ring_count: g.ring_count(),
    };
    match cli.format {
        Format::Json => out.write("eval.json", serde_json::to_string_pretty(&report)?.as_bytes())?,
        Format::Csv => {
            let csv = format!(
                "expected_mac,signed_readout,relative_phase_rad,field_re,field_im,ring_count\n{},{},{},{},{},{}\n",
                report.expected_mac,
                report.signed_readout,
                report.relative_phase_rad,
                report.field_re,
                report.field_im,
                report.ring_count
            );
            out.write("eval.csv", csv.as_bytes())?;
        }
    }
    if a.netlist {
        out.write("eval_netlist.json", g.to_json().as_bytes())?;
    }
    println!("expected {} readout {}", report.expected_mac, report.signed_readout);
    Ok("eval".to_string())
}

/// Runs a parsed command line. `argv` is recorded in the manifest.
pub fn run(cli: Cli, argv: Vec<String>) -> Result<RunManifest> {
    if let Command::Rerun(a) = &cli.command {
        let m: RunManifest = serde_json::from_str(&fs::read_to_string(&a.manifest)?)?;
        let mut config = m.config;
        if cli.out.is_some() {
            config.out = cli.out.clone();
        }
        if matches!(config.command, Command::Rerun(_)) {
            return Err(Error::invalid("manifest", "cannot rerun a rerun"));
        }
        return run(config, m.argv);
    }
    let started = Instant::now();
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut out = Outputs {
        dir: dir.clone(),
        written: Vec::new(),
    };
    let (command, name) = match &cli.command {
        Command::Sweep(a) => ("sweep", cmd_sweep(&cli, a, &mut out)?),
        Command::Addsub(a) => ("addsub", cmd_addsub(&cli, a, &mut out)?),
        Command::Gates(a) => ("gates", cmd_gates(&cli, a, &mut out)?),
        Command::Scaling(a) => ("scaling", cmd_scaling(&cli, a, &mut out)?),
        Command::Eval(a) => ("eval", cmd_eval(&cli, a, &mut out)?),
        Command::Rerun(_) => unreachable!("handled above"),
    };
    let manifest = RunManifest {
        command: command.to_string(),
        argv,
        seed: cli.seed,
        config: cli,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: out.written,
        duration_s: started.elapsed().as_secs_f64(),
    };
    write_atomic(
        &dir.join(format!("{name}.manifest.json")),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    Ok(manifest)
}

/// Parses `argv`, runs it and returns the process exit code.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli, argv) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
