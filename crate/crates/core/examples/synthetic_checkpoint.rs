//! Writes a small deterministic safetensors-style checkpoint with
//! bell-shaped FP16 or BF16 weights, laid out like a two-block decoder.
//!
//! cargo run --example synthetic_checkpoint -- out.safetensors [fp16|bf16] [hidden]

use half::{bf16, f16};
use hflc::float::FloatFormat;
use hflc::weights::{encode_checkpoint, WeightTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian(rng: &mut ChaCha8Rng) -> f32 {
    // Box-Muller
    let u: f32 = rng.gen_range(f32::EPSILON..1.0);
    let v: f32 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (std::f32::consts::TAU * v).cos()
}

fn main() -> hflc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = args.first().map(String::as_str).unwrap_or("synthetic.safetensors");
    let format = match args.get(1).map(String::as_str) {
        Some("bf16") => FloatFormat::Bf16,
        _ => FloatFormat::Fp16,
    };
    let hidden: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(128);
    let mlp = hidden * 7 / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);

    let mut tensors = Vec::new();
    for layer in 0..2 {
        let mats = [
            ("self_attn.q_proj", hidden, hidden, 0.02),
            ("self_attn.k_proj", hidden / 4, hidden, 0.02),
            ("self_attn.v_proj", hidden / 4, hidden, 0.01),
            ("self_attn.o_proj", hidden, hidden, 0.01),
            ("mlp.gate_proj", mlp, hidden, 0.015),
            ("mlp.up_proj", mlp, hidden, 0.015),
            ("mlp.down_proj", hidden, mlp, 0.01),
        ];
        for (name, rows, cols, std) in mats {
            let data = (0..rows * cols)
                .map(|_| {
                    let x = gaussian(&mut rng) * std;
                    match format {
                        FloatFormat::Fp16 => f16::from_f32(x).to_bits(),
                        FloatFormat::Bf16 => bf16::from_f32(x).to_bits(),
                    }
                })
                .collect();
            tensors.push(WeightTensor::new(
                format!("model.layers.{layer}.{name}.weight"),
                vec![rows, cols],
                format,
                data,
            )?);
        }
        let norm = (0..hidden)
            .map(|_| {
                let x = 1.0 + 0.05 * gaussian(&mut rng);
                match format {
                    FloatFormat::Fp16 => f16::from_f32(x).to_bits(),
                    FloatFormat::Bf16 => bf16::from_f32(x).to_bits(),
                }
            })
            .collect();
        tensors.push(WeightTensor::new(
            format!("model.layers.{layer}.input_layernorm.weight"),
            vec![hidden],
            format,
            norm,
        )?);
    }
    let bytes = encode_checkpoint(&tensors);
    std::fs::write(out, &bytes).map_err(|e| hflc::Error::io(out, e))?;
    let params: usize = tensors.iter().map(|t| t.len()).sum();
    println!("wrote {out}: {} tensors, {params} {} params", tensors.len(), format.name());
    Ok(())
}
