//! Cycle-level model of the single-cycle Huffman decompressor.
//!
//! Each decoder holds a codeword register fed from its weight-buffer bank.
//! Every cycle the top `L_max` register bits are presented to a CAM; the one
//! matching entry yields the source symbol and its length `L`, and the
//! register shifts left by `L`. With the 64-bit register a 32-bit word is
//! fetched whenever fewer than 32 valid bits remain, so a full match window
//! is always present and the decoder never stalls.

use rayon::prelude::*;
use serde::Serialize;

use crate::bits::{BitWriter, Bitstream};
use crate::container::{CompressedTensor, GroupPayload};
use crate::error::{Error, Result};
use crate::huffman::{decode, HuffmanCodebook};

pub const CAM_ENTRIES: usize = 32;
pub const MAX_WINDOW_BITS: u32 = 32;
const FETCH_BITS: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CamEntry {
    /// Codeword left-aligned in the `L_max`-bit window.
    pub pattern: u32,
    /// 1 for bits that must match, 0 for don't-care.
    pub care: u32,
    pub symbol: u8,
    pub length: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CamTable {
    window_bits: u32,
    entries: Vec<CamEntry>,
}

impl CamTable {
    pub fn window_bits(&self) -> u32 {
        self.window_bits
    }

    pub fn entries(&self) -> &[CamEntry] {
        &self.entries
    }

    /// All entries whose care bits agree with `window`.
    pub fn matches(&self, window: u32) -> impl Iterator<Item = &CamEntry> {
        self.entries
            .iter()
            .filter(move |e| window & e.care == e.pattern)
    }

    /// Parallel compare against every entry; exactly one may hit.
    pub fn lookup(&self, window: u32) -> Result<&CamEntry> {
        let mut hits = self.matches(window);
        let first = hits
            .next()
            .ok_or_else(|| Error::Corruption(format!("CAM miss on window {window:#x}")))?;
        if hits.next().is_some() {
            return Err(Error::Corruption(format!(
                "multiple CAM hits on window {window:#x}"
            )));
        }
        Ok(first)
    }
}

pub fn cam_from_codebook(cb: &HuffmanCodebook) -> Result<CamTable> {
    let lmax = cb.max_len();
    if lmax > MAX_WINDOW_BITS {
        return Err(Error::Constraint(format!(
            "L_max = {lmax} exceeds the {MAX_WINDOW_BITS}-bit match window"
        )));
    }
    if cb.entries().len() > CAM_ENTRIES {
        return Err(Error::Constraint(format!(
            "{} codewords do not fit a {CAM_ENTRIES}-entry CAM",
            cb.entries().len()
        )));
    }
    let window_mask = if lmax == 32 { u32::MAX } else { (1u32 << lmax) - 1 };
    let entries = cb
        .entries()
        .iter()
        .map(|e| {
            let pad = lmax - e.length as u32;
            let care = (window_mask >> pad) << pad;
            CamEntry {
                pattern: (e.codeword as u32) << pad,
                care,
                symbol: e.symbol,
                length: e.length,
            }
        })
        .collect();
    Ok(CamTable {
        window_bits: lmax,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegisterWidth {
    /// Minimal design: after each match, `L` fresh bits are read in.
    Bits32,
    /// 64-bit register refilled 32 bits at a time when below 32 valid bits.
    #[default]
    Bits64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CycleOutput {
    pub symbol: u8,
    pub length: u8,
    pub valid_bits_after: u32,
}

/// One decoder: codeword register, fetch unit, and CAM.
#[derive(Debug)]
pub struct DecoderState<'a> {
    stream: &'a Bitstream,
    cam: &'a CamTable,
    width: RegisterWidth,
    /// Valid bits live at the top of the register.
    register: u64,
    valid_bits: u32,
    fetched: u64,
    consumed: u64,
    pub cycles: u64,
    pub refills: u64,
}

impl<'a> DecoderState<'a> {
    pub fn new(stream: &'a Bitstream, cam: &'a CamTable, width: RegisterWidth) -> Self {
        Self {
            stream,
            cam,
            width,
            register: 0,
            valid_bits: 0,
            fetched: 0,
            consumed: 0,
            cycles: 0,
            refills: 0,
        }
    }

    pub fn valid_bits(&self) -> u32 {
        self.valid_bits
    }

    fn fetch(&mut self, want: u32) {
        let left = self.stream.bit_len() - self.fetched;
        let n = (want as u64).min(left) as u32;
        if n == 0 {
            return;
        }
        let chunk = self.stream.peek(self.fetched, n);
        self.register |= chunk << (64 - self.valid_bits - n);
        self.valid_bits += n;
        self.fetched += n as u64;
        self.refills += 1;
    }

    fn refill(&mut self) {
        match self.width {
            RegisterWidth::Bits64 => {
                if self.valid_bits < FETCH_BITS {
                    self.fetch(FETCH_BITS);
                }
            }
            RegisterWidth::Bits32 => {
                let room = 32 - self.valid_bits;
                self.fetch(room);
            }
        }
    }

    /// Decodes one symbol; one call is one clock cycle.
    pub fn step(&mut self) -> Result<CycleOutput> {
        self.refill();
        let unconsumed = self.stream.bit_len() - self.consumed;
        let lmax = self.cam.window_bits;
        if (self.valid_bits as u64) < unconsumed.min(lmax as u64) {
            return Err(Error::Integrity(format!(
                "register underflow: {} valid bits < window {lmax}",
                self.valid_bits
            )));
        }
        let window = if lmax == 0 {
            0
        } else {
            (self.register >> (64 - lmax)) as u32
        };
        let entry = *self.cam.lookup(window)?;
        let len = entry.length as u32;
        if len > self.valid_bits {
            return Err(Error::Corruption(format!(
                "stream ends inside a codeword at bit {}",
                self.consumed
            )));
        }
        self.register = if len == 64 { 0 } else { self.register << len };
        self.valid_bits -= len;
        self.consumed += len as u64;
        self.cycles += 1;
        Ok(CycleOutput {
            symbol: entry.symbol,
            length: entry.length,
            valid_bits_after: self.valid_bits,
        })
    }

    /// Checks that the whole stream was consumed.
    pub fn finish(&self) -> Result<()> {
        if self.consumed != self.stream.bit_len() {
            return Err(Error::Corruption(format!(
                "{} bits left undecoded",
                self.stream.bit_len() - self.consumed
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecodeRun {
    pub symbols: Vec<u8>,
    pub cycles: u64,
    pub refill_count: u64,
}

pub fn run_decoder(bits: &Bitstream, cam: &CamTable, n: usize) -> Result<DecodeRun> {
    run_decoder_with(bits, cam, n, RegisterWidth::default())
}

pub fn run_decoder_with(
    bits: &Bitstream,
    cam: &CamTable,
    n: usize,
    width: RegisterWidth,
) -> Result<DecodeRun> {
    let mut dec = DecoderState::new(bits, cam, width);
    let mut symbols = Vec::with_capacity(n);
    for _ in 0..n {
        symbols.push(dec.step()?.symbol);
    }
    dec.finish()?;
    Ok(DecodeRun {
        symbols,
        cycles: dec.cycles,
        refill_count: dec.refills,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ColumnGeometry {
    pub columns: usize,
    pub register: RegisterWidth,
    /// Capacity of each of the three banks in one column's weight buffer.
    pub bank_capacity_bits: Option<u64>,
}

impl ColumnGeometry {
    pub fn new(columns: usize) -> Self {
        Self {
            columns,
            register: RegisterWidth::default(),
            bank_capacity_bits: None,
        }
    }
}

pub const BANKS_PER_COLUMN: usize = 3;

#[derive(Debug, Clone, Serialize)]
pub struct BankStats {
    pub bank: usize,
    pub group: String,
    pub bits: u64,
    pub reads: u64,
    pub max_len: u32,
    pub overflow: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub cycle: u64,
    pub column: usize,
    pub group: String,
    pub symbol: u8,
    #[serde(rename = "L")]
    pub length: u8,
    pub valid_bits_after: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnRun {
    pub column: usize,
    pub params: u64,
    pub cycles: u64,
    #[serde(skip)]
    pub weights: Vec<u16>,
    pub banks: Vec<BankStats>,
    /// Bits read from stored (uncoded) planes, e.g. the sign bits.
    pub passthrough_bits: u64,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

/// Parameter indices handled by `column`: `i % columns == column`.
pub fn column_indices(params: usize, columns: usize, column: usize) -> impl Iterator<Item = usize> {
    (column..params).step_by(columns.max(1))
}

/// Load-time arrangement of one coded group: copies each parameter's
/// codeword into the bank of column `i % columns`. Codeword boundaries come
/// from the tensor's codebook; no symbol is re-encoded.
fn split_group_stream(
    bits: &Bitstream,
    codebook: &HuffmanCodebook,
    n: usize,
    columns: usize,
) -> Result<Vec<Bitstream>> {
    if columns == 1 {
        return Ok(vec![bits.clone()]);
    }
    let symbols = decode(bits, codebook, n)?;
    let mut writers: Vec<BitWriter> = (0..columns).map(|_| BitWriter::new()).collect();
    let mut pos = 0u64;
    for (i, &s) in symbols.iter().enumerate() {
        let len = codebook.length_of(s).expect("decoded symbol has a code");
        writers[i % columns].write(bits.peek(pos, len), len);
        pos += len as u64;
    }
    Ok(writers.into_iter().map(BitWriter::finish).collect())
}

/// Bank contents of every column: coded streams per coded group and the
/// column's slice of each stored plane.
struct Arrangement {
    coded: Vec<usize>,
    cams: Vec<CamTable>,
    /// [coded group][column]
    banks: Vec<Vec<Bitstream>>,
    /// (group index, [column] symbols)
    stored: Vec<(usize, Vec<Vec<u8>>)>,
}

fn arrange(ct: &CompressedTensor, columns: usize) -> Result<Arrangement> {
    if columns == 0 {
        return Err(Error::Config("column count must be positive".into()));
    }
    let coded: Vec<usize> = ct.scheme.coded_groups().map(|(i, _)| i).collect();
    if coded.len() > BANKS_PER_COLUMN {
        return Err(Error::Constraint(format!(
            "scheme '{}' has {} coded groups; a column has {BANKS_PER_COLUMN} decoders",
            ct.scheme.name,
            coded.len()
        )));
    }
    let n = ct.params() as usize;
    let mut cams = Vec::new();
    let mut banks = Vec::new();
    for &g in &coded {
        match &ct.groups[g] {
            GroupPayload::Coded { codebook, bits } => {
                cams.push(cam_from_codebook(codebook).map_err(|e| match e {
                    Error::Constraint(m) => Error::Constraint(format!(
                        "tensor '{}' group '{}': {m}",
                        ct.name, ct.scheme.groups[g].name
                    )),
                    other => other,
                })?);
                banks.push(split_group_stream(bits, codebook, n, columns)?);
            }
            GroupPayload::Stored(_) => {
                // empty tensor: nothing to decode
                cams.push(CamTable {
                    window_bits: 0,
                    entries: Vec::new(),
                });
                banks.push(vec![Bitstream::new(); columns]);
            }
        }
    }
    let stored = ct
        .scheme
        .groups
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.compressed)
        .map(|(i, _)| {
            let all = ct.group_symbols(i)?;
            let mut per: Vec<Vec<u8>> = vec![Vec::new(); columns];
            for (j, s) in all.into_iter().enumerate() {
                per[j % columns].push(s);
            }
            Ok((i, per))
        })
        .collect::<Result<_>>()?;
    Ok(Arrangement {
        coded,
        cams,
        banks,
        stored,
    })
}

fn simulate_column(
    ct: &CompressedTensor,
    a: &Arrangement,
    geometry: &ColumnGeometry,
    column: usize,
    trace: bool,
) -> Result<ColumnRun> {
    let n = ct.params() as usize;
    let my_count = column_indices(n, geometry.columns, column).count();
    let mut decoders: Vec<DecoderState> = a
        .banks
        .iter()
        .zip(&a.cams)
        .map(|(b, c)| DecoderState::new(&b[column], c, geometry.register))
        .collect();
    let mut weights = Vec::with_capacity(my_count);
    let mut records = Vec::new();
    for cycle in 0..my_count {
        let mut word = 0u16;
        for (k, dec) in decoders.iter_mut().enumerate() {
            let out = dec.step()?;
            let g = &ct.scheme.groups[a.coded[k]];
            word |= (out.symbol as u16) << g.shift;
            if trace {
                records.push(TraceRecord {
                    cycle: cycle as u64,
                    column,
                    group: g.name.clone(),
                    symbol: out.symbol,
                    length: out.length,
                    valid_bits_after: out.valid_bits_after,
                });
            }
        }
        for (g, planes) in &a.stored {
            word |= (planes[column][cycle] as u16) << ct.scheme.groups[*g].shift;
        }
        weights.push(word);
    }
    for d in &decoders {
        d.finish()?;
        if d.cycles != my_count as u64 {
            return Err(Error::Integrity("decoders fell out of lockstep".into()));
        }
    }
    let banks = a
        .coded
        .iter()
        .enumerate()
        .map(|(k, &g)| {
            let bits = a.banks[k][column].bit_len();
            BankStats {
                bank: k,
                group: ct.scheme.groups[g].name.clone(),
                bits,
                reads: decoders[k].refills,
                max_len: a.cams[k].window_bits,
                overflow: geometry.bank_capacity_bits.is_some_and(|cap| bits > cap),
            }
        })
        .collect();
    let passthrough_bits = a
        .stored
        .iter()
        .map(|(g, p)| p[column].len() as u64 * ct.scheme.groups[*g].width as u64)
        .sum();
    Ok(ColumnRun {
        column,
        params: my_count as u64,
        cycles: my_count as u64,
        weights,
        banks,
        passthrough_bits,
        trace: records,
    })
}

/// Simulates one HD column producing the column's share of `ct`, one
/// reconstructed 16-bit weight per cycle.
///
/// Any scheme with at most three coded groups is accepted; BF16's two coded
/// groups use two of the banks and its mantissa is read like the sign plane.
pub fn run_hd_column(
    ct: &CompressedTensor,
    geometry: &ColumnGeometry,
    column: usize,
    trace: bool,
) -> Result<ColumnRun> {
    if column >= geometry.columns {
        return Err(Error::Config(format!(
            "column {column} outside a {}-column array",
            geometry.columns
        )));
    }
    let a = arrange(ct, geometry.columns)?;
    simulate_column(ct, &a, geometry, column, trace)
}

/// Runs every column of the array in parallel.
pub fn run_hd_array(
    ct: &CompressedTensor,
    geometry: &ColumnGeometry,
    trace: bool,
) -> Result<Vec<ColumnRun>> {
    let a = arrange(ct, geometry.columns)?;
    (0..geometry.columns)
        .into_par_iter()
        .map(|c| simulate_column(ct, &a, geometry, c, trace))
        .collect()
}

/// Reassembles the flat weight order from per-column outputs.
pub fn interleave_columns(runs: &[ColumnRun], params: usize) -> Vec<u16> {
    let columns = runs.len();
    let mut out = vec![0u16; params];
    for run in runs {
        for (k, i) in column_indices(params, columns, run.column).enumerate() {
            out[i] = run.weights[k];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::huffman::{build_codebook, encode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cam_padding() {
        let cb = HuffmanCodebook::from_lengths(2, &[(0, 1), (1, 2), (2, 2)]).unwrap();
        let cam = cam_from_codebook(&cb).unwrap();
        assert_eq!(cam.window_bits(), 2);
        let e = cam.entries();
        assert_eq!((e[0].pattern, e[0].care, e[0].symbol, e[0].length), (0b00, 0b10, 0, 1));
        assert_eq!((e[1].pattern, e[1].care, e[1].symbol, e[1].length), (0b10, 0b11, 1, 2));
        assert_eq!(cam.lookup(0b01).unwrap().symbol, 0);
        assert_eq!(cam.lookup(0b10).unwrap().symbol, 1);
        assert_eq!(cam.lookup(0b11).unwrap().symbol, 2);
    }

    #[test]
    fn uniform_32_symbol_cam() {
        let cb = build_codebook(&[7u64; 32]).unwrap();
        let cam = cam_from_codebook(&cb).unwrap();
        assert_eq!(cam.entries().len(), 32);
        assert!(cam.entries().iter().all(|e| e.length == 5));
    }

    #[test]
    fn oversized_window_rejected() {
        let mut counts = vec![0u64; 64];
        let (mut a, mut b) = (1u64, 1u64);
        for c in counts.iter_mut().take(40) {
            *c = a;
            let t = a + b;
            a = b;
            b = t;
        }
        let cb = build_codebook(&counts).unwrap();
        assert!(cb.max_len() > 32);
        assert!(matches!(cam_from_codebook(&cb), Err(Error::Constraint(_))));
    }

    #[test]
    fn three_symbols_three_cycles() {
        let cb = HuffmanCodebook::from_lengths(2, &[(0, 1), (1, 2), (2, 2)]).unwrap();
        let bits = encode(&[0, 1, 0], &cb).unwrap();
        let cam = cam_from_codebook(&cb).unwrap();
        let run = run_decoder(&bits, &cam, 3).unwrap();
        assert_eq!(run.symbols, vec![0, 1, 0]);
        assert_eq!(run.cycles, 3);
        assert_eq!(run.refill_count, 1);
    }

    #[test]
    fn zero_symbols() {
        let cb = build_codebook(&[1, 1]).unwrap();
        let cam = cam_from_codebook(&cb).unwrap();
        let run = run_decoder(&Bitstream::new(), &cam, 0).unwrap();
        assert_eq!((run.cycles, run.refill_count), (0, 0));
    }

    #[test]
    fn trailing_bits_detected() {
        let cb = build_codebook(&[3, 1]).unwrap();
        let bits = encode(&[0, 0, 1], &cb).unwrap();
        let cam = cam_from_codebook(&cb).unwrap();
        assert!(run_decoder(&bits, &cam, 2).is_err());
        assert!(run_decoder(&bits, &cam, 4).is_err());
    }

    #[test]
    fn matches_software_and_refill_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let live = rng.gen_range(1..=32usize);
            let mut counts = vec![0u64; 32];
            for c in counts.iter_mut().take(live) {
                *c = rng.gen_range(1..1000);
            }
            let cb = build_codebook(&counts).unwrap();
            let n = rng.gen_range(0..2000);
            let stream: Vec<u8> = (0..n).map(|_| rng.gen_range(0..live as u8)).collect();
            let bits = encode(&stream, &cb).unwrap();
            let cam = cam_from_codebook(&cb).unwrap();
            for width in [RegisterWidth::Bits64, RegisterWidth::Bits32] {
                let run = run_decoder_with(&bits, &cam, n, width).unwrap();
                assert_eq!(run.symbols, stream);
                assert_eq!(run.cycles, n as u64);
                if width == RegisterWidth::Bits64 {
                    assert_eq!(run.refill_count, bits.bit_len().div_ceil(32));
                }
            }
        }
    }

    fn sample_tensor(format: crate::float::FloatFormat, n: usize) -> crate::weights::WeightTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data = (0..n)
            .map(|_| {
                let e: u16 = rng.gen_range(10..16);
                let m: u16 = rng.gen_range(0..1024);
                let s: u16 = rng.gen_range(0..2);
                match format {
                    crate::float::FloatFormat::Fp16 => s << 15 | e << 10 | m,
                    crate::float::FloatFormat::Bf16 => s << 15 | (e + 112) << 7 | (m & 0x7f),
                }
            })
            .collect();
        crate::weights::WeightTensor::new("t", vec![n as u64], format, data).unwrap()
    }

    #[test]
    fn hd_columns_match_software() {
        use crate::bitsplit::BitGroupScheme;
        use crate::container::{compress_tensor, CompressOptions};
        use crate::float::FloatFormat;
        for (format, scheme, banks) in [
            (FloatFormat::Fp16, BitGroupScheme::fp16(), 3),
            (FloatFormat::Bf16, BitGroupScheme::bf16(), 2),
        ] {
            let t = sample_tensor(format, 1001);
            let ct = compress_tensor(&t, &scheme, CompressOptions::default()).unwrap();
            for columns in [1, 4, 7] {
                let runs = run_hd_array(&ct, &ColumnGeometry::new(columns), true).unwrap();
                assert_eq!(interleave_columns(&runs, 1001), t.data);
                for r in &runs {
                    assert_eq!(r.cycles, column_indices(1001, columns, r.column).count() as u64);
                    assert_eq!(r.banks.len(), banks);
                    assert_eq!(r.trace.len() as u64, r.cycles * banks as u64);
                }
                let bits: u64 = runs.iter().flat_map(|r| &r.banks).map(|b| b.bits).sum();
                let coded: u64 = ct.groups.iter().filter(|g| g.codebook().is_some()).map(|g| g.bits().bit_len()).sum();
                assert_eq!(bits, coded);
            }
        }
    }

    #[test]
    fn bank_overflow_is_flagged() {
        use crate::bitsplit::BitGroupScheme;
        use crate::container::{compress_tensor, CompressOptions};
        let t = sample_tensor(crate::float::FloatFormat::Fp16, 512);
        let ct = compress_tensor(&t, &BitGroupScheme::fp16(), CompressOptions::default()).unwrap();
        let mut g = ColumnGeometry::new(2);
        g.bank_capacity_bits = Some(800);
        let runs = run_hd_array(&ct, &g, false).unwrap();
        // 256 mantissa symbols of ~5 bits exceed 800 bits, 6 exponents do not
        assert!(runs.iter().all(|r| r.banks.iter().any(|b| b.overflow)));
        assert!(runs.iter().all(|r| r.banks.iter().any(|b| !b.overflow)));
    }
}
