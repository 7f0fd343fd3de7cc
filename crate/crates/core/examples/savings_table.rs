//! Latency and energy savings for the shipped model shapes, every benchmark
//! preset, both dataflows and both DRAM bandwidths.
//!
//! cargo run --release --example savings_table [-- path/to/configs]

use std::path::PathBuf;

use hflc::perf::{simulate_model, ArchConfig, Dataflow, EnergyTable, ModelShapes, BENCHMARK_TOKENS};

fn main() -> hflc::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs"));
    let energy = EnergyTable::load(dir.join("energy/default.toml"))?;
    let mut files: Vec<_> = std::fs::read_dir(dir.join("models"))
        .map_err(|e| hflc::Error::io(dir.join("models"), e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    files.sort();

    println!("model,dataflow,benchmark,bandwidth_gbs,bits,latency_saving_pct,energy_saving_pct,baseline_memory_bound");
    for f in files {
        let model = ModelShapes::load(&f)?;
        let bits = model.measured_bits("fp16")?;
        for dataflow in [Dataflow::WeightStationary, Dataflow::OutputStationary] {
            for (bench, tokens, _) in BENCHMARK_TOKENS {
                for gbs in [64.0, 128.0, 256.0] {
                    let arch = ArchConfig::default()
                        .with_dataflow(dataflow)
                        .with_bandwidth(gbs * 1e9);
                    let r = simulate_model(&model.workloads(tokens, bits), &arch, &energy)?;
                    println!(
                        "{},{},{},{},{:.2},{:.2},{:.2},{}",
                        model.name,
                        dataflow.name(),
                        bench,
                        gbs,
                        bits,
                        100.0 * r.savings.latency,
                        100.0 * r.savings.energy,
                        r.baseline.memory_bound(),
                    );
                }
            }
        }
    }
    Ok(())
}
