//! Runs the cycle-level decoder on one compressed tensor: a single CAM
//! decoder per group first, then an array of columns fed from banked streams.
//!
//! cargo run --release --example decoder_sim [-- model.safetensors [columns]]

use std::path::PathBuf;

use hflc::bitsplit::builtin_scheme;
use hflc::container::{compress_tensor, CompressOptions};
use hflc::hwsim::{cam_from_codebook, interleave_columns, run_decoder, run_hd_array, ColumnGeometry};
use hflc::weights::load_model;

fn main() -> hflc::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/tiny-fp16.safetensors"));
    let columns: usize = args.next().and_then(|c| c.parse().ok()).unwrap_or(8);

    let model = load_model(&path)?;
    let t = &model.tensors[0];
    let ct = compress_tensor(t, &builtin_scheme(t.format), CompressOptions::default())?;
    println!("{} {:?}, {} params, scheme {}", t.name, t.shape, t.len(), ct.scheme.name);

    for (g, group) in ct.groups.iter().enumerate() {
        let Some(cb) = group.codebook() else { continue };
        let cam = cam_from_codebook(cb)?;
        let run = run_decoder(group.bits(), &cam, t.len())?;
        assert_eq!(run.symbols, ct.group_symbols(g)?);
        println!(
            "  {:<12} {:>2} CAM entries, {:>2}-bit window, {:>8} bits, {} cycles, {} refills",
            ct.scheme.groups[g].name,
            cam.entries().len(),
            cam.window_bits(),
            group.bits().bit_len(),
            run.cycles,
            run.refill_count
        );
    }

    let geometry = ColumnGeometry::new(columns);
    let runs = run_hd_array(&ct, &geometry, false)?;
    let words = interleave_columns(&runs, t.len());
    assert_eq!(words, t.data);
    let slowest = runs.iter().map(|r| r.cycles).max().unwrap_or(0);
    println!("{columns} columns: slowest column {slowest} cycles, output identical to the input tensor");
    for r in runs.iter().take(2) {
        for b in &r.banks {
            println!(
                "  column {} bank {} ({}): {} bits, {} reads{}",
                r.column,
                b.bank,
                b.group,
                b.bits,
                b.reads,
                if b.overflow { ", OVERFLOW" } else { "" }
            );
        }
    }
    Ok(())
}
