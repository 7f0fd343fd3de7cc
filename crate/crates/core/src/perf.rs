//! Analytical latency/energy model of a weight-fed systolic array.
//!
//! A layer is one `I (I_H × W_H) · W (W_H × W_W)` product. Compute time
//! comes from the fold/cycle count of the array; memory time from the DRAM
//! bytes moved. The compressed case differs from the baseline only in the
//! bits per weight that cross DRAM and the weight buffer; decoding sits
//! between the weight buffer and the PEs and adds no cycles.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Dataflow {
    #[default]
    #[serde(rename = "WS", alias = "ws")]
    WeightStationary,
    #[serde(rename = "OS", alias = "os")]
    OutputStationary,
}

impl Dataflow {
    pub fn name(self) -> &'static str {
        match self {
            Dataflow::WeightStationary => "WS",
            Dataflow::OutputStationary => "OS",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Composition {
    /// Compute and DRAM streaming overlap (double buffering).
    #[default]
    Overlap,
    /// No overlap: latency is the sum of both.
    Additive,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchConfig {
    pub R: u64,
    pub C: u64,
    /// Hz.
    pub frequency: f64,
    /// Bytes per second.
    pub dram_bandwidth: f64,
    pub weight_buffer: u64,
    pub activation_buffer: u64,
    pub accumulator_buffer: u64,
    #[serde(default)]
    pub dataflow: Dataflow,
    #[serde(default)]
    pub composition: Composition,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            R: 128,
            C: 128,
            frequency: 1e9,
            dram_bandwidth: 64e9,
            weight_buffer: 16 * 1024,
            activation_buffer: 8 * 1024,
            accumulator_buffer: 4 * 1024,
            dataflow: Dataflow::WeightStationary,
            composition: Composition::Overlap,
        }
    }
}

impl ArchConfig {
    pub fn with_bandwidth(mut self, bytes_per_s: f64) -> Self {
        self.dram_bandwidth = bytes_per_s;
        self
    }

    pub fn with_dataflow(mut self, dataflow: Dataflow) -> Self {
        self.dataflow = dataflow;
        self
    }

    /// FLOP/s with every PE busy; a MAC counts as two operations.
    pub fn peak_ops(&self) -> f64 {
        2.0 * (self.R * self.C) as f64 * self.frequency
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.R > 0
            && self.C > 0
            && self.frequency > 0.0
            && self.dram_bandwidth > 0.0
            && self.weight_buffer > 0
            && self.activation_buffer > 0
            && self.accumulator_buffer > 0;
        if !ok {
            return Err(Error::Config("architecture values must all be positive".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let a: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        a.validate()?;
        Ok(a)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        load_toml(path.as_ref(), Self::from_toml_str)
    }
}

/// Unit energies in joules (per MAC, per 16-bit buffer access, per DRAM byte).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyTable {
    pub e_mac: f64,
    pub e_wb_read: f64,
    pub e_ib_read: f64,
    #[serde(default)]
    pub e_acc_access: f64,
    pub e_dram: f64,
}

impl Default for EnergyTable {
    /// Calibration figures for a 16 nm-class design, not measured values.
    fn default() -> Self {
        Self {
            e_mac: 1.0e-12,
            e_wb_read: 0.5e-12,
            e_ib_read: 0.5e-12,
            e_acc_access: 0.5e-12,
            e_dram: 20.0e-12,
        }
    }
}

impl EnergyTable {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let e: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if [e.e_mac, e.e_wb_read, e.e_ib_read, e.e_acc_access, e.e_dram]
            .iter()
            .any(|v| v.is_nan() || *v < 0.0)
        {
            return Err(Error::Config("unit energies must be nonnegative".into()));
        }
        Ok(e)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        load_toml(path.as_ref(), Self::from_toml_str)
    }
}

fn load_toml<T>(path: &Path, parse: impl Fn(&str) -> Result<T>) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatMulWorkload {
    pub I_H: u64,
    /// Shared dimension; `I_W == W_H`.
    pub W_H: u64,
    pub W_W: u64,
    pub weight_bits_per_param: f64,
    pub activation_bits_per_param: f64,
}

impl MatMulWorkload {
    #[allow(non_snake_case)]
    pub fn new(I_H: u64, W_H: u64, W_W: u64, weight_bits_per_param: f64) -> Self {
        Self {
            I_H,
            W_H,
            W_W,
            weight_bits_per_param,
            activation_bits_per_param: 16.0,
        }
    }

    pub fn with_weight_bits(mut self, bits: f64) -> Self {
        self.weight_bits_per_param = bits;
        self
    }

    pub fn macs(&self) -> u64 {
        self.I_H * self.W_H * self.W_W
    }

    pub fn weights(&self) -> u64 {
        self.W_H * self.W_W
    }
}

/// `(S_R, S_C, T)`: the two dims spread over PE rows and columns and the
/// one streamed in time.
pub fn map_dims(w: &MatMulWorkload, dataflow: Dataflow) -> (u64, u64, u64) {
    match dataflow {
        Dataflow::WeightStationary => (w.W_H, w.W_W, w.I_H),
        Dataflow::OutputStationary => (w.I_H, w.W_W, w.W_H),
    }
}

#[allow(non_snake_case)]
pub fn folds(s_r: u64, s_c: u64, R: u64, C: u64) -> (u64, u64) {
    (s_r.div_ceil(R), s_c.div_ceil(C))
}

/// Per fold: `R` cycles to load the stationary operand, then `R + C + T - 2`
/// cycles for the skewed stream to drain through the grid.
#[allow(non_snake_case)]
pub fn compute_cycles(R: u64, C: u64, T: u64, f_r: u64, f_c: u64) -> u64 {
    (2 * R + C + T - 2) * f_r * f_c
}

/// `(WB_RD, IB_RD)` in 16-bit element accesses.
#[allow(non_snake_case)]
pub fn buffer_reads(w: &MatMulWorkload, dataflow: Dataflow, R: u64, C: u64) -> (u64, u64) {
    let ib = w.I_H * w.W_H * w.W_W.div_ceil(C);
    let wb = match dataflow {
        Dataflow::WeightStationary => w.W_H * w.W_W,
        Dataflow::OutputStationary => w.W_W * w.W_H * w.I_H.div_ceil(R),
    };
    (wb, ib)
}

/// Partial-sum traffic to the accumulator buffer: one write per output per
/// row fold under WS; outputs stay in the PEs under OS.
#[allow(non_snake_case)]
pub fn accumulator_accesses(w: &MatMulWorkload, dataflow: Dataflow, R: u64) -> u64 {
    match dataflow {
        Dataflow::WeightStationary => w.I_H * w.W_W * w.W_H.div_ceil(R),
        Dataflow::OutputStationary => w.I_H * w.W_W,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DramBytes {
    pub weights: f64,
    pub activations: f64,
    pub outputs: f64,
}

impl DramBytes {
    pub fn total(&self) -> f64 {
        self.weights + self.activations + self.outputs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyBreakdown {
    pub mac: f64,
    pub weight_buffer: f64,
    pub input_buffer: f64,
    pub accumulator: f64,
    pub dram: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.mac + self.weight_buffer + self.input_buffer + self.accumulator + self.dram
    }
}

/// Latency/energy of one configuration (baseline or compressed).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LayerCost {
    pub macs: u64,
    pub compute_cycles: u64,
    pub weight_buffer_reads: f64,
    pub input_buffer_reads: u64,
    pub accumulator_accesses: u64,
    pub mac_latency: f64,
    pub dram_bytes: DramBytes,
    pub memory_latency: f64,
    pub total_latency: f64,
    pub energy: EnergyBreakdown,
}

impl LayerCost {
    pub fn memory_bound(&self) -> bool {
        self.memory_latency > self.mac_latency
    }

    fn scaled(&self, k: u64) -> Self {
        let f = k as f64;
        Self {
            macs: self.macs * k,
            compute_cycles: self.compute_cycles * k,
            weight_buffer_reads: self.weight_buffer_reads * f,
            input_buffer_reads: self.input_buffer_reads * k,
            accumulator_accesses: self.accumulator_accesses * k,
            mac_latency: self.mac_latency * f,
            dram_bytes: DramBytes {
                weights: self.dram_bytes.weights * f,
                activations: self.dram_bytes.activations * f,
                outputs: self.dram_bytes.outputs * f,
            },
            memory_latency: self.memory_latency * f,
            total_latency: self.total_latency * f,
            energy: EnergyBreakdown {
                mac: self.energy.mac * f,
                weight_buffer: self.energy.weight_buffer * f,
                input_buffer: self.energy.input_buffer * f,
                accumulator: self.energy.accumulator * f,
                dram: self.energy.dram * f,
            },
        }
    }

    fn add(&mut self, o: &Self) {
        self.macs += o.macs;
        self.compute_cycles += o.compute_cycles;
        self.weight_buffer_reads += o.weight_buffer_reads;
        self.input_buffer_reads += o.input_buffer_reads;
        self.accumulator_accesses += o.accumulator_accesses;
        self.mac_latency += o.mac_latency;
        self.dram_bytes.weights += o.dram_bytes.weights;
        self.dram_bytes.activations += o.dram_bytes.activations;
        self.dram_bytes.outputs += o.dram_bytes.outputs;
        self.memory_latency += o.memory_latency;
        self.total_latency += o.total_latency;
        self.energy.mac += o.energy.mac;
        self.energy.weight_buffer += o.energy.weight_buffer;
        self.energy.input_buffer += o.energy.input_buffer;
        self.energy.accumulator += o.energy.accumulator;
        self.energy.dram += o.energy.dram;
    }
}

pub fn layer_cost(w: &MatMulWorkload, arch: &ArchConfig, energy: &EnergyTable) -> LayerCost {
    let (s_r, s_c, t) = map_dims(w, arch.dataflow);
    let (f_r, f_c) = folds(s_r, s_c, arch.R, arch.C);
    let cycles = compute_cycles(arch.R, arch.C, t, f_r, f_c);
    let (wb, ib) = buffer_reads(w, arch.dataflow, arch.R, arch.C);
    let acc = accumulator_accesses(w, arch.dataflow, arch.R);
    // the weight buffer holds coded words, so its traffic shrinks with them
    let wb_scaled = wb as f64 * w.weight_bits_per_param / 16.0;
    let dram = DramBytes {
        weights: w.weights() as f64 * w.weight_bits_per_param / 8.0,
        activations: (w.I_H * w.W_H) as f64 * w.activation_bits_per_param / 8.0,
        outputs: (w.I_H * w.W_W) as f64 * w.activation_bits_per_param / 8.0,
    };
    let mac_latency = cycles as f64 / arch.frequency;
    let memory_latency = dram.total() / arch.dram_bandwidth;
    let total_latency = match arch.composition {
        Composition::Overlap => mac_latency.max(memory_latency),
        Composition::Additive => mac_latency + memory_latency,
    };
    let macs = w.macs();
    LayerCost {
        macs,
        compute_cycles: cycles,
        weight_buffer_reads: wb_scaled,
        input_buffer_reads: ib,
        accumulator_accesses: acc,
        mac_latency,
        dram_bytes: dram,
        memory_latency,
        total_latency,
        energy: EnergyBreakdown {
            mac: macs as f64 * energy.e_mac,
            weight_buffer: wb_scaled * energy.e_wb_read,
            input_buffer: ib as f64 * energy.e_ib_read,
            accumulator: acc as f64 * energy.e_acc_access,
            dram: dram.total() * energy.e_dram,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Savings {
    pub latency: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub dataflow: Dataflow,
    pub composition: Composition,
    pub weight_bits_per_param: f64,
    pub baseline: LayerCost,
    pub compressed: LayerCost,
    /// Fractions: `1 - compressed / baseline`.
    pub savings: Savings,
}

fn savings(base: &LayerCost, comp: &LayerCost) -> Savings {
    let frac = |b: f64, c: f64| if b > 0.0 { 1.0 - c / b } else { 0.0 };
    Savings {
        latency: frac(base.total_latency, comp.total_latency),
        energy: frac(base.energy.total(), comp.energy.total()),
    }
}

/// Baseline (16-bit weights) against `w.weight_bits_per_param`.
pub fn simulate_layer(w: &MatMulWorkload, arch: &ArchConfig, energy: &EnergyTable) -> SimReport {
    simulate_model(&[(*w, 1)], arch, energy).expect("one layer")
}

/// Sums `(layer, repeat count)` pairs; savings are taken on the totals.
pub fn simulate_model(
    layers: &[(MatMulWorkload, u64)],
    arch: &ArchConfig,
    energy: &EnergyTable,
) -> Result<SimReport> {
    if layers.is_empty() {
        return Err(Error::Config("no layers to simulate".into()));
    }
    let bits = layers[0].0.weight_bits_per_param;
    let per_layer: Vec<(LayerCost, LayerCost)> = layers
        .par_iter()
        .map(|(w, k)| {
            let base = layer_cost(&w.with_weight_bits(16.0), arch, energy).scaled(*k);
            let comp = layer_cost(w, arch, energy).scaled(*k);
            (base, comp)
        })
        .collect();
    // sequential sum in layer order keeps results thread-count independent
    let mut baseline = LayerCost::default();
    let mut compressed = LayerCost::default();
    for (b, c) in &per_layer {
        baseline.add(b);
        compressed.add(c);
    }
    Ok(SimReport {
        dataflow: arch.dataflow,
        composition: arch.composition,
        weight_bits_per_param: bits,
        savings: savings(&baseline, &compressed),
        baseline,
        compressed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Memory,
    Compute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RooflinePoint {
    pub flops: f64,
    pub dram_bytes: f64,
    /// FLOP per DRAM byte.
    pub arithmetic_intensity: f64,
    pub peak_ops: f64,
    /// Achievable FLOP/s of the array on this workload (fill and drain
    /// cycles included). Never above `peak_ops`.
    pub compute_ceiling: f64,
    pub attainable: f64,
    pub bound: Bound,
}

/// Roofline position of a set of layers, using the array's effective
/// compute rate for the flat part of the roof.
pub fn roofline(arch: &ArchConfig, layers: &[(MatMulWorkload, u64)]) -> RooflinePoint {
    let (mut flops, mut bytes, mut cycles) = (0.0, 0.0, 0u64);
    for (w, k) in layers {
        let c = layer_cost(w, arch, &EnergyTable::default());
        flops += 2.0 * (c.macs * k) as f64;
        bytes += c.dram_bytes.total() * *k as f64;
        cycles += c.compute_cycles * k;
    }
    let ai = if bytes > 0.0 { flops / bytes } else { f64::INFINITY };
    let ceiling = if cycles > 0 {
        (flops / (cycles as f64 / arch.frequency)).min(arch.peak_ops())
    } else {
        arch.peak_ops()
    };
    let mem = ai * arch.dram_bandwidth;
    let (attainable, bound) = if mem >= ceiling {
        (ceiling, Bound::Compute)
    } else {
        (mem, Bound::Memory)
    };
    RooflinePoint {
        flops,
        dram_bytes: bytes,
        arithmetic_intensity: ai,
        peak_ops: arch.peak_ops(),
        compute_ceiling: ceiling,
        attainable,
        bound,
    }
}

/// Mean input lengths of the evaluation benchmarks, with their spread.
pub const BENCHMARK_TOKENS: [(&str, u64, u64); 3] =
    [("arceasy", 42, 20), ("mmlu", 92, 92), ("winogrande", 25, 4)];

/// Accepts a token count or a benchmark name.
pub fn parse_tokens(arg: &str) -> Result<u64> {
    if let Ok(n) = arg.parse::<u64>() {
        if n == 0 {
            return Err(Error::Config("token count must be positive".into()));
        }
        return Ok(n);
    }
    let key = arg.to_ascii_lowercase().replace(['-', '_'], "");
    BENCHMARK_TOKENS
        .iter()
        .find(|(name, _, _)| *name == key)
        .map(|(_, mean, _)| *mean)
        .ok_or_else(|| Error::Config(format!("unknown benchmark '{arg}'")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixShape {
    pub name: String,
    /// Input features.
    pub w_h: u64,
    /// Output features.
    pub w_w: u64,
    /// Occurrences per decoder block.
    #[serde(default = "one")]
    pub count: u64,
}

fn one() -> u64 {
    1
}

/// Weight matrices of one model (attention and MLP projections).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelShapes {
    pub name: String,
    pub layers: u64,
    /// Measured bits/param of the compressed checkpoint, keyed by format.
    #[serde(default)]
    pub bits_per_param: BTreeMap<String, f64>,
    pub matrix: Vec<MatrixShape>,
}

impl ModelShapes {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if m.layers == 0 || m.matrix.is_empty() {
            return Err(Error::Config(format!("model '{}' has no matrices", m.name)));
        }
        if m.matrix.iter().any(|x| x.w_h == 0 || x.w_w == 0 || x.count == 0) {
            return Err(Error::Config(format!("model '{}' has an empty matrix", m.name)));
        }
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        load_toml(path.as_ref(), Self::from_toml_str)
    }

    pub fn measured_bits(&self, format: &str) -> Result<f64> {
        self.bits_per_param.get(format).copied().ok_or_else(|| {
            Error::Config(format!("no measured {format} bits/param for '{}'", self.name))
        })
    }

    pub fn params(&self) -> u64 {
        self.layers * self.matrix.iter().map(|m| m.w_h * m.w_w * m.count).sum::<u64>()
    }

    /// One workload per matrix kind, with its total repeat count.
    pub fn workloads(&self, tokens: u64, weight_bits: f64) -> Vec<(MatMulWorkload, u64)> {
        self.matrix
            .iter()
            .map(|m| {
                (
                    MatMulWorkload::new(tokens, m.w_h, m.w_w, weight_bits),
                    m.count * self.layers,
                )
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arch() -> ArchConfig {
        ArchConfig::default()
    }

    #[test]
    fn mapping_and_folds() {
        let w = MatMulWorkload::new(92, 4096, 4096, 16.0);
        assert_eq!(map_dims(&w, Dataflow::WeightStationary), (4096, 4096, 92));
        assert_eq!(map_dims(&w, Dataflow::OutputStationary), (92, 4096, 4096));
        assert_eq!(folds(256, 128, 128, 128), (2, 1));
        assert_eq!(folds(1, 1, 128, 128), (1, 1));
        assert_eq!(folds(4096, 4096, 128, 128), (32, 32));
    }

    #[test]
    fn cycle_counts() {
        assert_eq!(compute_cycles(1, 1, 1, 1, 1), 2);
        assert_eq!(compute_cycles(128, 128, 92, 32, 32), 485_376);
        assert_eq!(compute_cycles(8, 4, 3, 2, 6), 2 * compute_cycles(8, 4, 3, 2, 3));
    }

    #[test]
    fn read_counts() {
        let w = MatMulWorkload::new(92, 4096, 4096, 16.0);
        assert_eq!(buffer_reads(&w, Dataflow::WeightStationary, 128, 128).0, 16_777_216);
        assert_eq!(buffer_reads(&w, Dataflow::OutputStationary, 128, 128).0, 4096 * 4096);
        let narrow = MatMulWorkload::new(7, 300, 128, 16.0);
        assert_eq!(buffer_reads(&narrow, Dataflow::WeightStationary, 128, 128).1, 300 * 7);
    }

    #[test]
    fn identity_comparison() {
        let w = MatMulWorkload::new(92, 4096, 4096, 16.0);
        let r = simulate_layer(&w, &arch(), &EnergyTable::default());
        assert_eq!(r.savings.latency, 0.0);
        assert_eq!(r.savings.energy, 0.0);
    }

    #[test]
    fn memory_bound_limit() {
        let w = MatMulWorkload::new(1, 8192, 8192, 14.0);
        let r = simulate_layer(&w, &arch().with_bandwidth(1e9), &EnergyTable::default());
        assert!(r.compressed.memory_bound());
        assert!((r.savings.latency - 0.125).abs() < 1e-3, "{}", r.savings.latency);
    }

    #[test]
    fn compute_bound_limit() {
        let w = MatMulWorkload::new(92, 4096, 4096, 11.0);
        let r = simulate_layer(&w, &arch().with_bandwidth(1e15), &EnergyTable::default());
        assert!(!r.baseline.memory_bound());
        assert_eq!(r.savings.latency, 0.0);
        assert!(r.savings.energy > 0.0);
    }

    #[test]
    fn additive_composition() {
        let mut a = arch();
        a.composition = Composition::Additive;
        let w = MatMulWorkload::new(92, 1024, 1024, 12.0);
        let c = layer_cost(&w, &a, &EnergyTable::default());
        assert!((c.total_latency - c.mac_latency - c.memory_latency).abs() < 1e-15);
    }

    #[test]
    fn roofline_regions() {
        let w = MatMulWorkload::new(92, 4096, 4096, 16.0);
        let fast = roofline(&arch().with_bandwidth(1e15), &[(w, 1)]);
        assert_eq!(fast.bound, Bound::Compute);
        assert_eq!(fast.attainable, fast.compute_ceiling);
        assert!(fast.compute_ceiling <= fast.peak_ops);
        let slow = roofline(&arch().with_bandwidth(1e9), &[(w, 1)]);
        assert_eq!(slow.bound, Bound::Memory);

        let big = MatMulWorkload::new(1, 8192, 8192, 16.0);
        let b = roofline(&arch(), &[(big, 1)]);
        let c = roofline(&arch(), &[(big.with_weight_bits(11.0), 1)]);
        let ratio = c.arithmetic_intensity / b.arithmetic_intensity;
        assert!((ratio - 16.0 / 11.0).abs() < 0.01);
    }

    #[test]
    fn token_presets() {
        assert_eq!(parse_tokens("mmlu").unwrap(), 92);
        assert_eq!(parse_tokens("ArcEasy").unwrap(), 42);
        assert_eq!(parse_tokens("Winogrande").unwrap(), 25);
        assert_eq!(parse_tokens("17").unwrap(), 17);
        assert!(parse_tokens("0").is_err());
        assert!(parse_tokens("hellaswag").is_err());
    }

    #[test]
    fn arch_toml() {
        let a = ArchConfig::from_toml_str(
            "R = 128\nC = 128\nfrequency = 1e9\ndram_bandwidth = 64e9\n\
             weight_buffer = 16384\nactivation_buffer = 8192\naccumulator_buffer = 4096\ndataflow = \"OS\"\n",
        )
        .unwrap();
        assert_eq!(a, arch().with_dataflow(Dataflow::OutputStationary));
        assert_eq!(a.peak_ops(), 2.0 * 128.0 * 128.0 * 1e9);
        assert!(ArchConfig::from_toml_str("R = 0\nC = 1\nfrequency = 1.0\ndram_bandwidth = 1.0\nweight_buffer = 1\nactivation_buffer = 1\naccumulator_buffer = 1\n").is_err());
    }
}
