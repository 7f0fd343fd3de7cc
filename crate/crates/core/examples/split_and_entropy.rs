//! Entropy of a checkpoint under several bit splits: whole 16-bit words, two
//! bytes, sign/exponent/mantissa-halves, and four nibbles.
//!
//! cargo run --release --example split_and_entropy [-- model.safetensors]

use std::path::PathBuf;

use hflc::bitsplit::{builtin_scheme, BitGroupScheme};
use hflc::entropy::{model_report, word_entropy, ReportOptions};
use hflc::weights::{load_model, TensorFilter};

fn main() -> hflc::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/tiny-fp16.safetensors"));
    let model = load_model(&path)?;
    let format = model.tensors[0].format; // load_model rejects empty checkpoints
    let words: Vec<u16> = model.tensors.iter().flat_map(|t| t.data.iter().copied()).collect();
    println!("{}: {} tensors, {} params, {}", path.display(), model.tensors.len(), words.len(), format.name());
    println!("{:<12} {:>8}  per-group entropy", "split", "H bits");
    println!("{:<12} {:>8.3}", "16", word_entropy(&words)?);

    let options = ReportOptions::default();
    for scheme in [BitGroupScheme::split_8_8(), builtin_scheme(format), BitGroupScheme::split_4_4_4_4()] {
        let r = model_report(&model.tensors, &scheme, &TensorFilter::all(), options)?;
        let groups: Vec<String> = r.per_group_entropy.iter().map(|h| format!("{h:.3}")).collect();
        println!("{:<12} {:>8.3}  [{}]", scheme.name, r.entropy_bits_per_param, groups.join(", "));
    }

    // what the stored container actually costs
    let r = model_report(&model.tensors, &builtin_scheme(format), &TensorFilter::all(), options)?;
    println!(
        "\nhuffman under {}: {:.3} bits/param, ratio {:.3}",
        r.scheme, r.total_bits_per_param, r.compression_ratio
    );
    Ok(())
}
