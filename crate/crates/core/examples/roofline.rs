//! Roofline operating points of a model before and after compression as DRAM
//! bandwidth grows. Compression raises arithmetic intensity; whether that
//! helps depends on which side of the ridge the baseline sits.
//!
//! cargo run --example roofline [-- shapes.toml [tokens]]

use std::path::PathBuf;

use hflc::perf::{parse_tokens, roofline, ArchConfig, Dataflow, ModelShapes};

fn main() -> hflc::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/models/llama-3-8b.toml")
    });
    let tokens = parse_tokens(&args.next().unwrap_or_else(|| "mmlu".into()))?;
    let model = ModelShapes::load(&path)?;
    let bits = model.measured_bits("fp16")?;

    println!("{} at {} tokens, {:.2} bits/param compressed", model.name, tokens, bits);
    println!("flow  GB/s  variant     AI(op/B)  attainable(TOP/s)  ceiling  bound");
    for dataflow in [Dataflow::WeightStationary, Dataflow::OutputStationary] {
        for gbs in [32.0, 64.0, 128.0, 256.0] {
            let arch = ArchConfig::default().with_dataflow(dataflow).with_bandwidth(gbs * 1e9);
            for (variant, b) in [("baseline", 16.0), ("compressed", bits)] {
                let p = roofline(&arch, &model.workloads(tokens, b));
                println!(
                    "{:<5} {:>4}  {:<10} {:>9.1}  {:>17.2}  {:>7.2}  {:?}",
                    dataflow.name(),
                    gbs,
                    variant,
                    p.arithmetic_intensity,
                    p.attainable / 1e12,
                    p.compute_ceiling / 1e12,
                    p.bound
                );
            }
        }
    }
    Ok(())
}
