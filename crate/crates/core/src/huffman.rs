//! Canonical Huffman codebooks over small alphabets (≤ 8-bit symbols).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::bits::{BitWriter, Bitstream};
use crate::error::{Error, Result};

/// Longest codeword the codec will emit or accept.
pub const MAX_CODE_LEN: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeEntry {
    pub symbol: u8,
    pub length: u8,
    pub codeword: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanCodebook {
    width: u32,
    /// Sorted by (length, symbol); codewords assigned canonically in that order.
    entries: Vec<CodeEntry>,
    /// Index into `entries` per symbol, `u16::MAX` when absent.
    by_symbol: Vec<u16>,
    max_len: u32,
}

impl HuffmanCodebook {
    /// Builds a canonical codebook from `(symbol, length)` pairs.
    ///
    /// Lengths must satisfy Kraft equality, except for the lone-symbol case
    /// where the single entry has length 1.
    pub fn from_lengths(width: u32, pairs: &[(u8, u8)]) -> Result<Self> {
        if width == 0 || width > 8 {
            return Err(Error::Config(format!("codebook width {width} outside 1..=8")));
        }
        if pairs.is_empty() {
            return Err(Error::Config("codebook has no entries".into()));
        }
        let alphabet = 1usize << width;
        let mut sorted: Vec<(u8, u8)> = pairs.to_vec();
        sorted.sort_by_key(|&(s, l)| (l, s));
        let mut by_symbol = vec![u16::MAX; alphabet];
        for (i, &(s, l)) in sorted.iter().enumerate() {
            if s as usize >= alphabet {
                return Err(Error::Config(format!("symbol {s} exceeds {width}-bit alphabet")));
            }
            if l == 0 || l as u32 > MAX_CODE_LEN {
                return Err(Error::Config(format!("symbol {s}: invalid code length {l}")));
            }
            if by_symbol[s as usize] != u16::MAX {
                return Err(Error::Config(format!("symbol {s} listed twice")));
            }
            by_symbol[s as usize] = i as u16;
        }
        let kraft: u128 = sorted.iter().map(|&(_, l)| 1u128 << (MAX_CODE_LEN - l as u32)).sum();
        let full = 1u128 << MAX_CODE_LEN;
        let single = sorted.len() == 1 && sorted[0].1 == 1;
        if kraft != full && !single {
            return Err(Error::Config(format!(
                "code lengths violate Kraft equality (sum = {kraft}/{full})"
            )));
        }

        let mut entries = Vec::with_capacity(sorted.len());
        let mut code = 0u64;
        let mut prev_len = sorted[0].1 as u32;
        for (i, &(symbol, length)) in sorted.iter().enumerate() {
            let len = length as u32;
            if i > 0 {
                code = (code + 1) << (len - prev_len);
            }
            prev_len = len;
            entries.push(CodeEntry {
                symbol,
                length,
                codeword: code,
            });
        }
        let max_len = entries.last().unwrap().length as u32;
        Ok(Self {
            width,
            entries,
            by_symbol,
            max_len,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn entries(&self) -> &[CodeEntry] {
        &self.entries
    }

    /// Longest codeword length (the decoder's match-window width).
    pub fn max_len(&self) -> u32 {
        self.max_len
    }

    pub fn entry(&self, symbol: u8) -> Option<&CodeEntry> {
        self.by_symbol
            .get(symbol as usize)
            .filter(|&&i| i != u16::MAX)
            .map(|&i| &self.entries[i as usize])
    }

    pub fn length_of(&self, symbol: u8) -> Option<u32> {
        self.entry(symbol).map(|e| e.length as u32)
    }

    /// Per-symbol code length table (0 for symbols without a codeword).
    pub fn lengths(&self) -> Vec<u32> {
        (0..1usize << self.width)
            .map(|s| self.length_of(s as u8).unwrap_or(0))
            .collect()
    }

    /// Σ count·L over a histogram; `None` if a counted symbol has no codeword.
    pub fn coded_bits(&self, counts: &[u64]) -> Option<u64> {
        counts.iter().enumerate().try_fold(0u64, |acc, (s, &c)| {
            if c == 0 {
                Some(acc)
            } else {
                self.length_of(s as u8).map(|l| acc + c * l as u64)
            }
        })
    }

    pub fn kraft_sum(&self) -> f64 {
        self.entries.iter().map(|e| (-(e.length as f64)).exp2()).sum()
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 + 2 * self.entries.len());
        out.push(self.width as u8);
        // 256 entries wraps to 0
        out.push(self.entries.len() as u8);
        for e in &self.entries {
            out.push(e.symbol);
            out.push(e.length);
        }
        out
    }

    /// Parses a serialized codebook, returning it with the number of bytes consumed.
    pub fn deserialize(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < 2 {
            return Err(Error::format(bytes.len(), "truncated codebook header"));
        }
        let width = bytes[0] as u32;
        let count = match bytes[1] {
            0 => 256,
            n => n as usize,
        };
        if width == 0 || width > 8 || count > 1 << width {
            return Err(Error::format(
                0,
                format!("codebook width {width} cannot hold {count} entries"),
            ));
        }
        let end = 2 + 2 * count;
        if bytes.len() < end {
            return Err(Error::format(bytes.len(), "truncated codebook entries"));
        }
        let pairs: Vec<(u8, u8)> = bytes[2..end].chunks_exact(2).map(|p| (p[0], p[1])).collect();
        if pairs.windows(2).any(|w| (w[0].1, w[0].0) >= (w[1].1, w[1].0)) {
            return Err(Error::format(2, "codebook entries not in canonical order"));
        }
        let cb = Self::from_lengths(width, &pairs).map_err(|e| Error::format(2, e.to_string()))?;
        Ok((cb, end))
    }
}

/// Optimal code lengths per symbol (0 for zero counts).
///
/// Ties merge the two lowest-weight nodes, leaves before internal nodes,
/// lower symbol first, then earlier-created subtrees first.
pub fn code_lengths(counts: &[u64]) -> Result<Vec<u32>> {
    let live: Vec<usize> = (0..counts.len()).filter(|&s| counts[s] > 0).collect();
    let mut lengths = vec![0u32; counts.len()];
    match live.len() {
        0 => return Err(Error::EmptyStream),
        1 => {
            lengths[live[0]] = 1;
            return Ok(lengths);
        }
        _ => {}
    }

    // node ids: leaves 0..n_leaves, internal nodes after
    let mut parent: Vec<usize> = vec![usize::MAX; 2 * live.len() - 1];
    let mut heap = BinaryHeap::new();
    for (leaf, &s) in live.iter().enumerate() {
        heap.push(Reverse((counts[s] as u128, 0u8, s, leaf)));
    }
    let mut next = live.len();
    let mut created = 0usize;
    while heap.len() > 1 {
        let Reverse((wa, _, _, a)) = heap.pop().unwrap();
        let Reverse((wb, _, _, b)) = heap.pop().unwrap();
        parent[a] = next;
        parent[b] = next;
        heap.push(Reverse((wa + wb, 1u8, created, next)));
        created += 1;
        next += 1;
    }
    let root = next - 1;
    let mut depth = vec![0u32; next];
    for node in (0..root).rev() {
        depth[node] = depth[parent[node]] + 1;
    }
    for (leaf, &s) in live.iter().enumerate() {
        lengths[s] = depth[leaf];
    }
    Ok(lengths)
}

/// Length-limited optimal code lengths by package-merge.
pub fn limited_code_lengths(counts: &[u64], limit: u32) -> Result<Vec<u32>> {
    let mut live: Vec<usize> = (0..counts.len()).filter(|&s| counts[s] > 0).collect();
    let mut lengths = vec![0u32; counts.len()];
    match live.len() {
        0 => return Err(Error::EmptyStream),
        1 => {
            lengths[live[0]] = 1;
            return Ok(lengths);
        }
        _ => {}
    }
    let n = live.len();
    if limit == 0 || (limit < 64 && (1u64 << limit) < n as u64) {
        return Err(Error::Config(format!(
            "{n} symbols cannot be coded with lengths ≤ {limit}"
        )));
    }
    live.sort_by_key(|&s| (counts[s], s));
    let leaves: Vec<(u128, Vec<u16>)> = live
        .iter()
        .enumerate()
        .map(|(i, &s)| (counts[s] as u128, vec![i as u16]))
        .collect();

    let mut list = leaves.clone();
    for _ in 1..limit {
        let packages: Vec<(u128, Vec<u16>)> = list
            .chunks_exact(2)
            .map(|p| {
                let mut items = p[0].1.clone();
                items.extend_from_slice(&p[1].1);
                (p[0].0 + p[1].0, items)
            })
            .collect();
        let mut merged = Vec::with_capacity(leaves.len() + packages.len());
        let (mut i, mut j) = (0, 0);
        while i < leaves.len() || j < packages.len() {
            let take_leaf = j >= packages.len() || (i < leaves.len() && leaves[i].0 <= packages[j].0);
            if take_leaf {
                merged.push(leaves[i].clone());
                i += 1;
            } else {
                merged.push(packages[j].clone());
                j += 1;
            }
        }
        list = merged;
    }
    for (_, items) in list.iter().take(2 * n - 2) {
        for &i in items {
            lengths[live[i as usize]] += 1;
        }
    }
    Ok(lengths)
}

fn codebook_from_length_table(width: u32, lengths: &[u32]) -> Result<HuffmanCodebook> {
    let pairs: Vec<(u8, u8)> = lengths
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0)
        .map(|(s, &l)| (s as u8, l as u8))
        .collect();
    if pairs.iter().any(|&(_, l)| l as u32 > MAX_CODE_LEN) {
        return Err(Error::Constraint(format!(
            "code length exceeds {MAX_CODE_LEN} bits"
        )));
    }
    HuffmanCodebook::from_lengths(width, &pairs)
}

/// Builds the canonical Huffman codebook for a `2^width`-bin histogram.
pub fn build_codebook(counts: &[u64]) -> Result<HuffmanCodebook> {
    build_codebook_with_limit(counts, None)
}

/// As [`build_codebook`], optionally restricting code lengths to `limit` bits.
pub fn build_codebook_with_limit(counts: &[u64], limit: Option<u32>) -> Result<HuffmanCodebook> {
    let width = alphabet_width(counts.len())?;
    let lengths = match limit {
        None => code_lengths(counts)?,
        Some(l) => limited_code_lengths(counts, l)?,
    };
    codebook_from_length_table(width, &lengths)
}

fn alphabet_width(len: usize) -> Result<u32> {
    if !len.is_power_of_two() || !(2..=256).contains(&len) {
        return Err(Error::Config(format!(
            "histogram of {len} bins is not a 1..8-bit alphabet"
        )));
    }
    Ok(len.trailing_zeros())
}

fn write_code(w: &mut BitWriter, code: u64, len: u32) {
    if len > 32 {
        w.write(code >> 32, len - 32);
        w.write(code & 0xFFFF_FFFF, 32);
    } else {
        w.write(code, len);
    }
}

pub fn encode(stream: &[u8], codebook: &HuffmanCodebook) -> Result<Bitstream> {
    let mut w = BitWriter::with_capacity_bits(stream.len() as u64 * 4);
    for &s in stream {
        let e = codebook
            .entry(s)
            .ok_or(Error::MissingSymbol { symbol: s as u16 })?;
        write_code(&mut w, e.codeword, e.length as u32);
    }
    Ok(w.finish())
}

/// Canonical decoder: per-length code ranges compared against a left-aligned window.
struct CanonicalTable {
    max_len: u32,
    /// For each length l (index l), first canonical code, count, and entry offset.
    first: Vec<u64>,
    count: Vec<u64>,
    offset: Vec<usize>,
}

impl CanonicalTable {
    fn new(cb: &HuffmanCodebook) -> Self {
        let max_len = cb.max_len;
        let mut count = vec![0u64; max_len as usize + 1];
        for e in &cb.entries {
            count[e.length as usize] += 1;
        }
        let mut first = vec![0u64; max_len as usize + 1];
        let mut offset = vec![0usize; max_len as usize + 1];
        let mut code = 0u64;
        let mut idx = 0usize;
        for l in 1..=max_len as usize {
            first[l] = code;
            offset[l] = idx;
            idx += count[l] as usize;
            code = (code + count[l]) << 1;
        }
        Self {
            max_len,
            first,
            count,
            offset,
        }
    }
}

pub fn decode(bits: &Bitstream, codebook: &HuffmanCodebook, n: usize) -> Result<Vec<u8>> {
    let table = CanonicalTable::new(codebook);
    let mut out = Vec::with_capacity(n);
    let mut pos = 0u64;
    let total = bits.bit_len();
    for i in 0..n {
        let window = bits.peek(pos, table.max_len);
        let mut found = None;
        for l in 1..=table.max_len as usize {
            let prefix = window >> (table.max_len as usize - l);
            let c = table.count[l];
            if c > 0 && prefix >= table.first[l] && prefix - table.first[l] < c {
                found = Some((l, (prefix - table.first[l]) as usize + table.offset[l]));
                break;
            }
        }
        let (len, idx) = found.ok_or_else(|| {
            Error::Corruption(format!("no codeword matches at bit {pos} (symbol {i})"))
        })?;
        if pos + len as u64 > total {
            return Err(Error::Corruption(format!(
                "stream ends inside codeword {i} at bit {pos}"
            )));
        }
        out.push(codebook.entries[idx].symbol);
        pos += len as u64;
    }
    if pos != total {
        return Err(Error::Corruption(format!(
            "{} unconsumed bits after {n} symbols",
            total - pos
        )));
    }
    Ok(out)
}
