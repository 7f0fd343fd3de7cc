//! Builds a canonical Huffman codebook from a small histogram, prints the
//! codewords, then caps the length and shows what that costs.
//!
//! cargo run --example canonical_codebook

use hflc::entropy::entropy;
use hflc::huffman::{build_codebook, build_codebook_with_limit, decode, encode, HuffmanCodebook};

fn show(cb: &HuffmanCodebook, counts: &[u64]) {
    for e in cb.entries() {
        let word: String = (0..e.length).rev().map(|b| if (e.codeword >> b) & 1 == 1 { '1' } else { '0' }).collect();
        println!("  sym {:>2}  count {:>6}  len {:>2}  {}", e.symbol, counts[e.symbol as usize], e.length, word);
    }
    let total: u64 = counts.iter().sum();
    let bits = cb.coded_bits(counts).unwrap();
    println!(
        "  avg {:.4} bits/sym, kraft {:.4}, {} byte codebook",
        bits as f64 / total as f64,
        cb.kraft_sum(),
        cb.serialize().len()
    );
}

fn main() -> hflc::Result<()> {
    // exponent-like skew over a 4-bit alphabet
    let counts: [u64; 16] = [0, 1, 2, 5, 12, 40, 150, 600, 2400, 9000, 16000, 9000, 900, 30, 3, 1];
    println!("entropy {:.4} bits/sym", entropy(&counts)?);

    let cb = build_codebook(&counts)?;
    println!("unrestricted, L_max {}", cb.max_len());
    show(&cb, &counts);

    let capped = build_codebook_with_limit(&counts, Some(8))?;
    println!("length limit 8");
    show(&capped, &counts);

    let stream: Vec<u8> = counts
        .iter()
        .enumerate()
        .flat_map(|(s, &c)| std::iter::repeat(s as u8).take(c as usize))
        .collect();
    let bits = encode(&stream, &capped)?;
    assert_eq!(decode(&bits, &capped, stream.len())?, stream);

    // the wire form is all a decoder needs
    let (back, _) = HuffmanCodebook::deserialize(&capped.serialize())?;
    assert_eq!(back, capped);
    println!("{} symbols -> {} bits, decoded back exactly", stream.len(), bits.bit_len());
    Ok(())
}
