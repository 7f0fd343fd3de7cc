//! The `hflc` command line: argument definitions, subcommand drivers and
//! the run manifest written next to every output.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bitsplit::{builtin_scheme, BitGroupScheme};
use crate::container::{
    compress_model, decompress_model, summarize, CompressOptions, CompressedModel,
};
use crate::entropy::{model_report, Averaging, CodebookScope, ReportOptions};
use crate::error::{Error, Result};
use crate::hwsim::{interleave_columns, run_hd_array, ColumnGeometry, RegisterWidth};
use crate::perf::{
    parse_tokens, roofline, simulate_model, ArchConfig, Bound, Composition, Dataflow,
    EnergyTable, ModelShapes,
};
use crate::weights::{encode_checkpoint, load_model, save_raw, TensorFilter, WeightTensor};

pub const ROOFLINE_CSV_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "hflc", version, about = "Lossless bit-group Huffman compression for 16-bit weights")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress a checkpoint (safetensors-style or raw HFWT) into an HFLC file.
    Compress(CompressArgs),
    /// Restore the exact 16-bit tensors from an HFLC file.
    Decompress(DecompressArgs),
    /// Summarize an HFLC file without decompressing it.
    Inspect(InspectArgs),
    /// Per-group entropy and code length of a checkpoint under a split scheme.
    Entropy(EntropyArgs),
    /// Cycle-level hardware decoder simulation of one tensor.
    DecodeSim(DecodeSimArgs),
    /// Baseline vs compressed latency and energy on a systolic array.
    Simulate(SimulateArgs),
    /// Roofline table (CSV) of baseline and compressed operating points.
    Roofline(RooflineArgs),
    /// Re-run the command recorded in a run manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AveragingArg {
    MeanRatio,
    MeanBits,
    ParameterWeighted,
}

impl From<AveragingArg> for Averaging {
    fn from(a: AveragingArg) -> Self {
        match a {
            AveragingArg::MeanRatio => Averaging::MeanRatio,
            AveragingArg::MeanBits => Averaging::MeanBits,
            AveragingArg::ParameterWeighted => Averaging::ParameterWeighted,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScopeArg {
    PerMatrix,
    Global,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DataflowArg {
    Ws,
    Os,
}

impl From<DataflowArg> for Dataflow {
    fn from(d: DataflowArg) -> Self {
        match d {
            DataflowArg::Ws => Dataflow::WeightStationary,
            DataflowArg::Os => Dataflow::OutputStationary,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CompositionArg {
    Overlap,
    Additive,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Fp16,
    Bf16,
}

impl FormatArg {
    fn key(self) -> &'static str {
        match self {
            FormatArg::Fp16 => "fp16",
            FormatArg::Bf16 => "bf16",
        }
    }
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// fp16-1555, bf16-1447 or custom:<toml file>; defaults to the built-in
    /// scheme for the tensors' format.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Tensor name glob; repeat to select several patterns.
    #[arg(long)]
    pub filter: Vec<String>,
    /// Cap codeword length (package-merge).
    #[arg(long)]
    pub length_limit: Option<u32>,
    #[arg(long, value_enum, default_value = "mean-ratio")]
    pub averaging: AveragingArg,
}

#[derive(Debug, Args)]
pub struct DecompressArgs {
    pub input: PathBuf,
    /// Raw HFWT file, or a safetensors-style checkpoint when the name ends in `.safetensors`.
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "mean-ratio")]
    pub averaging: AveragingArg,
    /// Write the JSON summary here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    pub input: PathBuf,
    /// fp16-1555, bf16-1447, 8-8, 4-4-4-4 or custom:<toml file>.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub filter: Vec<String>,
    #[arg(long, value_enum, default_value = "mean-ratio")]
    pub averaging: AveragingArg,
    #[arg(long, value_enum, default_value = "per-matrix")]
    pub scope: ScopeArg,
    #[arg(long)]
    pub length_limit: Option<u32>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecodeSimArgs {
    pub input: PathBuf,
    /// Tensor to decode; may be omitted when the file holds one tensor.
    #[arg(long)]
    pub tensor: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub columns: usize,
    /// JSON-lines trace, one record per decoder per cycle.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Codeword register width in bits (32 or 64).
    #[arg(long, default_value_t = 64, value_parser = register_bits)]
    pub register: u32,
    /// Capacity of each weight-buffer bank, in bits.
    #[arg(long)]
    pub bank_capacity: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn register_bits(s: &str) -> std::result::Result<u32, String> {
    match s {
        "32" => Ok(32),
        "64" => Ok(64),
        _ => Err("register width must be 32 or 64".into()),
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub arch: PathBuf,
    /// Unit-energy table; the built-in calibration table when omitted.
    #[arg(long)]
    pub energy: Option<PathBuf>,
    #[arg(long)]
    pub model_shapes: PathBuf,
    /// `measured`, `16`, or bits/param.
    #[arg(long, default_value = "measured")]
    pub bits: String,
    /// Weight format whose measured bits/param `--bits measured` uses.
    #[arg(long, value_enum, default_value = "fp16")]
    pub format: FormatArg,
    /// Take measured bits/param from this HFLC file instead of the shape file.
    #[arg(long)]
    pub measured_from: Option<PathBuf>,
    /// Overrides the dataflow in the architecture file.
    #[arg(long, value_enum)]
    pub dataflow: Option<DataflowArg>,
    /// Token count or benchmark: arceasy (42 ± 20), mmlu (92 ± 92),
    /// winogrande (25 ± 4). The mean is used.
    #[arg(long, default_value = "mmlu")]
    pub tokens: String,
    #[arg(long, value_enum)]
    pub composition: Option<CompositionArg>,
    /// Write the JSON report here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RooflineArgs {
    /// One or more architecture files (e.g. two bandwidths).
    #[arg(long, required = true)]
    pub arch: Vec<PathBuf>,
    #[arg(long)]
    pub model_shapes: PathBuf,
    #[arg(long, default_value = "measured")]
    pub bits: String,
    #[arg(long, value_enum, default_value = "fp16")]
    pub format: FormatArg,
    #[arg(long)]
    pub measured_from: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub dataflow: Option<DataflowArg>,
    #[arg(long, default_value = "mmlu")]
    pub tokens: String,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one run. Contains no timestamps so that identical runs
/// produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    fn new(subcommand: &str, argv: &[String], config: serde_json::Value) -> Self {
        Self {
            tool: "hflc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            argv: argv.to_vec(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(InputRecord {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Written next to `primary` as `<primary>.manifest.json`.
    fn write_beside(&self, primary: &Path) -> Result<PathBuf> {
        let path = manifest_path(primary);
        write_json(&path, self)?;
        Ok(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    sibling(primary, "manifest.json")
}

fn sibling(primary: &Path, suffix: &str) -> PathBuf {
    let mut s = primary.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    write_bytes(path, to_json(v).as_bytes())
}

/// Writes `text` to `path`, or stdout when no path is given.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_bytes(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn filter_of(patterns: &[String]) -> Result<TensorFilter> {
    if patterns.is_empty() {
        Ok(TensorFilter::all())
    } else {
        TensorFilter::new(patterns)
    }
}

/// Resolves `--scheme`, or the built-in scheme for the selected tensors.
fn resolve_scheme(arg: Option<&str>, selected: &[&WeightTensor]) -> Result<BitGroupScheme> {
    if let Some(a) = arg {
        return BitGroupScheme::from_arg(a);
    }
    let first = selected[0].format;
    if let Some(t) = selected.iter().find(|t| t.format != first) {
        return Err(Error::Config(format!(
            "tensors mix {} and {} ('{}'); pass --scheme or --filter",
            first.name(),
            t.format.name(),
            t.name
        )));
    }
    Ok(builtin_scheme(first))
}

fn warn_skipped(skipped: &[String]) {
    if !skipped.is_empty() {
        eprintln!("skipped non-16-bit tensors: {}", skipped.join(", "));
    }
}

/// Runs a parsed command line. `argv` (without the program name) is
/// recorded in manifests.
pub fn run(cli: Cli, argv: &[String]) -> Result<()> {
    match cli.command {
        Command::Compress(a) => cmd_compress(&a, argv),
        Command::Decompress(a) => cmd_decompress(&a, argv),
        Command::Inspect(a) => cmd_inspect(&a, argv),
        Command::Entropy(a) => cmd_entropy(&a, argv),
        Command::DecodeSim(a) => cmd_decode_sim(&a, argv),
        Command::Simulate(a) => cmd_simulate(&a, argv),
        Command::Roofline(a) => cmd_roofline(&a, argv),
        Command::Replay(a) => cmd_replay(&a),
    }
}

#[derive(Serialize)]
struct CompressReport<'a> {
    entropy: &'a crate::entropy::EntropyReport,
    container: &'a crate::container::ModelSummary,
}

pub fn cmd_compress(a: &CompressArgs, argv: &[String]) -> Result<()> {
    let loaded = load_model(&a.input)?;
    warn_skipped(&loaded.skipped);
    let filter = filter_of(&a.filter)?;
    let selected = filter.select(&loaded.tensors)?;
    let scheme = resolve_scheme(a.scheme.as_deref(), &selected)?;
    let averaging: Averaging = a.averaging.into();
    let options = ReportOptions {
        averaging,
        scope: CodebookScope::PerMatrix,
        length_limit: a.length_limit,
    };
    let report = model_report(&loaded.tensors, &scheme, &filter, options)?;
    let model = compress_model(
        &loaded.tensors,
        &scheme,
        &filter,
        CompressOptions {
            length_limit: a.length_limit,
        },
    )?;
    model.save(&a.output)?;
    let summary = summarize(&model, averaging);
    let report_path = sibling(&a.output, "report.json");
    write_json(
        &report_path,
        &CompressReport {
            entropy: &report,
            container: &summary,
        },
    )?;

    let mut m = RunManifest::new(
        "compress",
        argv,
        serde_json::json!({
            "scheme": scheme.name,
            "widths": scheme.widths(),
            "filter": filter.describe(),
            "length_limit": a.length_limit,
            "averaging": averaging,
            "skipped": loaded.skipped,
        }),
    );
    m.input(&a.input)?;
    m.output(&a.output);
    m.output(&report_path);
    m.write_beside(&a.output)?;
    println!(
        "{} tensors, scheme {}, bits/param {:.2}, ratio {:.2}",
        model.tensors.len(),
        scheme.name,
        summary.bits_per_param,
        summary.compression_ratio
    );
    Ok(())
}

pub fn cmd_decompress(a: &DecompressArgs, argv: &[String]) -> Result<()> {
    let model = CompressedModel::load(&a.input)?;
    let tensors = decompress_model(&model)?;
    let checkpoint = a.output.extension().is_some_and(|e| e == "safetensors");
    if checkpoint {
        write_bytes(&a.output, &encode_checkpoint(&tensors))?;
    } else {
        save_raw(&a.output, &tensors)?;
    }
    let mut m = RunManifest::new(
        "decompress",
        argv,
        serde_json::json!({ "layout": if checkpoint { "safetensors" } else { "hfwt" } }),
    );
    m.input(&a.input)?;
    m.output(&a.output);
    m.write_beside(&a.output)?;
    println!("{} tensors restored, crc ok", tensors.len());
    Ok(())
}

pub fn cmd_inspect(a: &InspectArgs, argv: &[String]) -> Result<()> {
    let model = CompressedModel::load(&a.input)?;
    let summary = summarize(&model, a.averaging.into());
    emit(a.output.as_deref(), &to_json(&summary))?;
    if let Some(out) = &a.output {
        let mut m = RunManifest::new(
            "inspect",
            argv,
            serde_json::json!({ "averaging": summary.averaging }),
        );
        m.input(&a.input)?;
        m.output(out);
        m.write_beside(out)?;
    }
    Ok(())
}

pub fn cmd_entropy(a: &EntropyArgs, argv: &[String]) -> Result<()> {
    let loaded = load_model(&a.input)?;
    warn_skipped(&loaded.skipped);
    let filter = filter_of(&a.filter)?;
    let selected = filter.select(&loaded.tensors)?;
    let scheme = resolve_scheme(a.scheme.as_deref(), &selected)?;
    let options = ReportOptions {
        averaging: a.averaging.into(),
        scope: match a.scope {
            ScopeArg::PerMatrix => CodebookScope::PerMatrix,
            ScopeArg::Global => CodebookScope::Global,
        },
        length_limit: a.length_limit,
    };
    let report = model_report(&loaded.tensors, &scheme, &filter, options)?;
    emit(a.output.as_deref(), &to_json(&report))?;
    if let Some(out) = &a.output {
        let mut m = RunManifest::new(
            "entropy",
            argv,
            serde_json::json!({ "scheme": scheme.name, "widths": scheme.widths(),
                "filter": filter.describe(), "options": options }),
        );
        m.input(&a.input)?;
        m.output(out);
        m.write_beside(out)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct DecodeSimReport {
    tensor: String,
    scheme: String,
    params: u64,
    columns: usize,
    register_bits: u32,
    /// Cycles until the slowest column finishes.
    cycles: u64,
    decoders_per_column: usize,
    equivalence: &'static str,
    per_column: Vec<crate::hwsim::ColumnRun>,
}

pub fn cmd_decode_sim(a: &DecodeSimArgs, argv: &[String]) -> Result<()> {
    let model = CompressedModel::load(&a.input)?;
    let ct = match &a.tensor {
        Some(name) => model
            .tensor(name)
            .ok_or_else(|| Error::EmptySelection(name.clone()))?,
        None if model.tensors.len() == 1 => &model.tensors[0],
        None => {
            return Err(Error::Config(format!(
                "file holds {} tensors; pick one with --tensor",
                model.tensors.len()
            )))
        }
    };
    let geometry = ColumnGeometry {
        columns: a.columns,
        register: if a.register == 32 {
            RegisterWidth::Bits32
        } else {
            RegisterWidth::Bits64
        },
        bank_capacity_bits: a.bank_capacity,
    };
    let runs = run_hd_array(ct, &geometry, a.trace.is_some())?;
    let hw = interleave_columns(&runs, ct.params() as usize);
    let sw = ct.decompress()?;
    if hw != sw.data {
        return Err(Error::Integrity(format!(
            "hardware decode of '{}' differs from software decode",
            ct.name
        )));
    }
    if let Some(path) = &a.trace {
        let mut text = String::new();
        for r in &runs {
            for rec in &r.trace {
                text.push_str(&serde_json::to_string(rec).expect("serializable"));
                text.push('\n');
            }
        }
        write_bytes(path, text.as_bytes())?;
    }
    let report = DecodeSimReport {
        tensor: ct.name.clone(),
        scheme: ct.scheme.name.clone(),
        params: ct.params(),
        columns: a.columns,
        register_bits: a.register,
        cycles: runs.iter().map(|r| r.cycles).max().unwrap_or(0),
        decoders_per_column: runs.first().map_or(0, |r| r.banks.len()),
        equivalence: "MATCH",
        per_column: runs,
    };
    emit(a.output.as_deref(), &to_json(&report))?;
    if let Some(out) = &a.output {
        let mut m = RunManifest::new(
            "decode-sim",
            argv,
            serde_json::json!({ "tensor": report.tensor, "columns": a.columns,
                "register_bits": a.register, "bank_capacity_bits": a.bank_capacity }),
        );
        m.input(&a.input)?;
        m.output(out);
        if let Some(t) = &a.trace {
            m.output(t);
        }
        m.write_beside(out)?;
    }
    Ok(())
}

/// Resolves `--bits`: `measured`, `16`, or a number.
fn resolve_bits(
    bits: &str,
    shapes: &ModelShapes,
    format: FormatArg,
    measured_from: Option<&Path>,
) -> Result<f64> {
    if bits == "measured" {
        return match measured_from {
            Some(p) => Ok(summarize(&CompressedModel::load(p)?, Averaging::default()).bits_per_param),
            None => shapes.measured_bits(format.key()),
        };
    }
    let v: f64 = bits
        .parse()
        .map_err(|_| Error::Config(format!("--bits expects measured, 16 or a number, got '{bits}'")))?;
    if !(v > 0.0 && v <= 16.0) {
        return Err(Error::Config(format!("bits/param {v} outside (0, 16]")));
    }
    Ok(v)
}

fn resolve_arch(path: &Path, dataflow: Option<DataflowArg>) -> Result<ArchConfig> {
    let mut arch = ArchConfig::load(path)?;
    if let Some(d) = dataflow {
        arch.dataflow = d.into();
    }
    Ok(arch)
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    model: &'a str,
    tokens: u64,
    arch: &'a ArchConfig,
    energy_table: &'a EnergyTable,
    report: &'a crate::perf::SimReport,
}

pub fn cmd_simulate(a: &SimulateArgs, argv: &[String]) -> Result<()> {
    let mut arch = resolve_arch(&a.arch, a.dataflow)?;
    if let Some(c) = a.composition {
        arch.composition = match c {
            CompositionArg::Overlap => Composition::Overlap,
            CompositionArg::Additive => Composition::Additive,
        };
    }
    let energy = match &a.energy {
        Some(p) => EnergyTable::load(p)?,
        None => EnergyTable::default(),
    };
    let shapes = ModelShapes::load(&a.model_shapes)?;
    let bits = resolve_bits(&a.bits, &shapes, a.format, a.measured_from.as_deref())?;
    let tokens = parse_tokens(&a.tokens)?;
    let report = simulate_model(&shapes.workloads(tokens, bits), &arch, &energy)?;
    println!(
        "{} {} T={} {:.0} GB/s bits/param {:.2}: latency saving {:.2}%, energy saving {:.2}%{}",
        shapes.name,
        arch.dataflow.name(),
        tokens,
        arch.dram_bandwidth / 1e9,
        bits,
        100.0 * report.savings.latency,
        100.0 * report.savings.energy,
        if report.baseline.memory_bound() { "" } else { " (baseline compute-bound)" }
    );
    if let Some(out) = &a.output {
        write_json(
            out,
            &SimulateOutput {
                model: &shapes.name,
                tokens,
                arch: &arch,
                energy_table: &energy,
                report: &report,
            },
        )?;
        let mut m = RunManifest::new(
            "simulate",
            argv,
            serde_json::json!({ "arch": arch, "energy": energy, "bits_per_param": bits,
                "tokens": tokens, "model": shapes.name }),
        );
        m.input(&a.arch)?;
        if let Some(e) = &a.energy {
            m.input(e)?;
        }
        m.input(&a.model_shapes)?;
        if let Some(p) = &a.measured_from {
            m.input(p)?;
        }
        m.output(out);
        m.write_beside(out)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RooflineRow<'a> {
    csv_version: u32,
    model: &'a str,
    dataflow: &'static str,
    tokens: u64,
    dram_bandwidth: f64,
    variant: &'static str,
    bits_per_param: f64,
    flops: f64,
    dram_bytes: f64,
    arithmetic_intensity: f64,
    peak_ops: f64,
    compute_ceiling: f64,
    attainable: f64,
    bound: &'static str,
}

pub fn cmd_roofline(a: &RooflineArgs, argv: &[String]) -> Result<()> {
    let shapes = ModelShapes::load(&a.model_shapes)?;
    let bits = resolve_bits(&a.bits, &shapes, a.format, a.measured_from.as_deref())?;
    let tokens = parse_tokens(&a.tokens)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut archs = Vec::new();
    for path in &a.arch {
        let arch = resolve_arch(path, a.dataflow)?;
        for (variant, b) in [("baseline", 16.0), ("compressed", bits)] {
            let p = roofline(&arch, &shapes.workloads(tokens, b));
            w.serialize(RooflineRow {
                csv_version: ROOFLINE_CSV_VERSION,
                model: &shapes.name,
                dataflow: arch.dataflow.name(),
                tokens,
                dram_bandwidth: arch.dram_bandwidth,
                variant,
                bits_per_param: b,
                flops: p.flops,
                dram_bytes: p.dram_bytes,
                arithmetic_intensity: p.arithmetic_intensity,
                peak_ops: p.peak_ops,
                compute_ceiling: p.compute_ceiling,
                attainable: p.attainable,
                bound: match p.bound {
                    Bound::Memory => "memory",
                    Bound::Compute => "compute",
                },
            })
            .map_err(|e| Error::Config(e.to_string()))?;
        }
        archs.push(arch);
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    emit(a.output.as_deref(), &String::from_utf8(bytes).expect("utf-8 csv"))?;
    if let Some(out) = &a.output {
        let mut m = RunManifest::new(
            "roofline",
            argv,
            serde_json::json!({ "arch": archs, "bits_per_param": bits, "tokens": tokens,
                "model": shapes.name }),
        );
        for p in &a.arch {
            m.input(p)?;
        }
        m.input(&a.model_shapes)?;
        if let Some(p) = &a.measured_from {
            m.input(p)?;
        }
        m.output(out);
        m.write_beside(out)?;
    }
    Ok(())
}

/// Checks the recorded input hashes, then runs the recorded command again.
pub fn cmd_replay(a: &ReplayArgs) -> Result<()> {
    let m = RunManifest::load(&a.manifest)?;
    for input in &m.inputs {
        let now = sha256_file(Path::new(&input.path))?;
        if now != input.sha256 {
            return Err(Error::Integrity(format!(
                "input '{}' changed since the manifest was written",
                input.path
            )));
        }
    }
    let cli = Cli::try_parse_from(std::iter::once("hflc".to_string()).chain(m.argv.iter().cloned()))
        .map_err(|e| Error::Config(format!("manifest argv: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Error::Config("a manifest cannot replay a replay".into()));
    }
    run(cli, &m.argv)
}
