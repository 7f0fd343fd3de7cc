//! Compresses a checkpoint into an HFLC file, reads it back, and checks every
//! tensor is bit-identical.
//!
//! cargo run --release --example compress_checkpoint [-- in.safetensors out.hflc]

use std::path::PathBuf;

use hflc::bitsplit::builtin_scheme;
use hflc::container::{compress_model, decompress_model, summarize, CompressOptions, CompressedModel};
use hflc::entropy::Averaging;
use hflc::weights::{load_model, TensorFilter};

fn main() -> hflc::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/tiny-bf16.safetensors"));
    let output = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("compress_checkpoint.hflc"));

    let model = load_model(&input)?;
    let format = model.tensors[0].format; // load_model rejects empty checkpoints
    let scheme = builtin_scheme(format);
    let compressed = compress_model(&model.tensors, &scheme, &TensorFilter::all(), CompressOptions::default())?;
    compressed.save(&output)?;

    let input_bytes = std::fs::metadata(&input).map_err(|e| hflc::Error::io(&input, e))?.len();
    let output_bytes = std::fs::metadata(&output).map_err(|e| hflc::Error::io(&output, e))?.len();
    let summary = summarize(&compressed, Averaging::MeanRatio);
    for t in &summary.tensors {
        let kinds: Vec<String> = t
            .groups
            .iter()
            .map(|g| format!("{}={:.2}", g.name, g.bits_per_param))
            .collect();
        println!("{:<44} {:>7} params  {}", t.name, t.params, kinds.join(" "));
    }
    println!(
        "{} -> {}: {} -> {} bytes ({:.3}x on disk), scheme {}",
        input.display(),
        output.display(),
        input_bytes,
        output_bytes,
        input_bytes as f64 / output_bytes as f64,
        scheme.name
    );

    let restored = decompress_model(&CompressedModel::load(&output)?)?;
    assert_eq!(restored, model.tensors);
    println!("round trip exact for {} tensors", restored.len());
    Ok(())
}
