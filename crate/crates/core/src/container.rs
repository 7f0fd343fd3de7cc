//! The HFLC compressed-model container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "HFLC" | version u16 | tensor count u32
//! per tensor:
//!   name (u16 len + UTF-8) | format u8 | scheme id u8 [inline descriptor if 255]
//!   rank u8 | dims u64 × rank | crc32 u32
//!   per group in scheme order:
//!     kind u8 (0 = stored, 1 = coded) | payload bit length u64
//!     [codebook if coded] | payload bytes, zero-padded to a byte boundary
//! ```
//!
//! The inline scheme descriptor is: name (u8 len + UTF-8), format u8
//! (0 FP16, 1 BF16, 255 any), group count u8, then per group width u8,
//! coded u8, name (u8 len + UTF-8).
//!
//! The CRC covers the reconstructed tensor's little-endian bytes.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::bits::Bitstream;
use crate::bitsplit::{
    merge_words, pack_plane, split_words, unpack_plane, BitGroupScheme, GroupSpec,
};
use crate::entropy::{symbol_histogram, Averaging};
use crate::error::{Error, Result};
use crate::float::FloatFormat;
use crate::huffman::{build_codebook_with_limit, decode, encode, HuffmanCodebook};
use crate::weights::{element_count, words_to_le_bytes, ByteReader, TensorFilter, WeightTensor};

pub const MAGIC: &[u8; 4] = b"HFLC";
pub const VERSION: u16 = 1;

const KIND_STORED: u8 = 0;
const KIND_CODED: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupPayload {
    Stored(Bitstream),
    Coded {
        codebook: HuffmanCodebook,
        bits: Bitstream,
    },
}

impl GroupPayload {
    pub fn bits(&self) -> &Bitstream {
        match self {
            GroupPayload::Stored(b) => b,
            GroupPayload::Coded { bits, .. } => bits,
        }
    }

    pub fn codebook(&self) -> Option<&HuffmanCodebook> {
        match self {
            GroupPayload::Coded { codebook, .. } => Some(codebook),
            GroupPayload::Stored(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedTensor {
    pub name: String,
    pub shape: Vec<u64>,
    pub format: FloatFormat,
    pub scheme: BitGroupScheme,
    pub groups: Vec<GroupPayload>,
    pub crc32: u32,
}

impl CompressedTensor {
    pub fn params(&self) -> u64 {
        element_count(&self.shape).unwrap_or(0)
    }

    pub fn payload_bits(&self) -> u64 {
        self.groups.iter().map(|g| g.bits().bit_len()).sum()
    }

    pub fn bits_per_param(&self) -> f64 {
        self.payload_bits() as f64 / self.params().max(1) as f64
    }

    /// Decodes one group's symbol stream.
    pub fn group_symbols(&self, g: usize) -> Result<Vec<u8>> {
        let n = self.params() as usize;
        let group = &self.scheme.groups[g];
        match &self.groups[g] {
            GroupPayload::Stored(plane) => unpack_plane(plane, group.width, n).map_err(|e| {
                Error::Integrity(format!("tensor '{}' group '{}': {e}", self.name, group.name))
            }),
            GroupPayload::Coded { codebook, bits } => decode(bits, codebook, n).map_err(|e| {
                Error::Corruption(format!("tensor '{}' group '{}': {e}", self.name, group.name))
            }),
        }
    }

    pub fn decompress(&self) -> Result<WeightTensor> {
        let streams = (0..self.groups.len())
            .map(|g| self.group_symbols(g))
            .collect::<Result<Vec<_>>>()?;
        let data = merge_words(&streams, &self.scheme)
            .map_err(|e| Error::Integrity(format!("tensor '{}': {e}", self.name)))?;
        let crc = crc32fast::hash(&words_to_le_bytes(&data));
        if crc != self.crc32 {
            return Err(Error::Integrity(format!(
                "tensor '{}': crc32 mismatch (stored {:08x}, computed {crc:08x})",
                self.name, self.crc32
            )));
        }
        WeightTensor::new(self.name.clone(), self.shape.clone(), self.format, data)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedModel {
    pub version: u16,
    pub tensors: Vec<CompressedTensor>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CompressOptions {
    /// Optional code-length cap (package-merge); `None` builds plain Huffman codes.
    pub length_limit: Option<u32>,
}

pub fn compress_tensor(
    t: &WeightTensor,
    scheme: &BitGroupScheme,
    options: CompressOptions,
) -> Result<CompressedTensor> {
    scheme.check_format(t.format)?;
    if scheme.analysis_only {
        return Err(Error::Constraint(format!(
            "scheme '{}' is analysis-only and cannot be stored",
            scheme.name
        )));
    }
    let streams = split_words(&t.data, scheme);
    let groups = scheme
        .groups
        .iter()
        .zip(&streams)
        .map(|(g, stream)| {
            if !g.compressed || stream.is_empty() {
                return Ok(GroupPayload::Stored(pack_plane(stream, g.width)));
            }
            let counts = symbol_histogram(stream, g.width);
            let codebook = build_codebook_with_limit(&counts, options.length_limit)?;
            let bits = encode(stream, &codebook)?;
            Ok(GroupPayload::Coded { codebook, bits })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompressedTensor {
        name: t.name.clone(),
        shape: t.shape.clone(),
        format: t.format,
        scheme: scheme.clone(),
        groups,
        crc32: crc32fast::hash(&t.to_le_bytes()),
    })
}

/// Compresses every tensor selected by `filter`, keeping input order.
pub fn compress_model(
    tensors: &[WeightTensor],
    scheme: &BitGroupScheme,
    filter: &TensorFilter,
    options: CompressOptions,
) -> Result<CompressedModel> {
    let selected = filter.select(tensors)?;
    let compressed = selected
        .par_iter()
        .map(|t| compress_tensor(t, scheme, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(CompressedModel {
        version: VERSION,
        tensors: compressed,
    })
}

pub fn decompress_model(model: &CompressedModel) -> Result<Vec<WeightTensor>> {
    model.tensors.par_iter().map(|t| t.decompress()).collect()
}

impl CompressedModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            write_tensor(&mut out, t);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let magic = r.take(4).map_err(to_format)?;
        if magic != MAGIC {
            return Err(Error::format(0, "missing HFLC magic"));
        }
        let version = r.u16().map_err(to_format)?;
        if version != VERSION {
            return Err(Error::format(4, format!("unsupported HFLC version {version}")));
        }
        let count = r.u32().map_err(to_format)?;
        let mut tensors = Vec::with_capacity(count.min(1 << 16) as usize);
        for _ in 0..count {
            tensors.push(read_tensor(&mut r)?);
        }
        if r.remaining() != 0 {
            return Err(Error::format(r.pos, "trailing bytes after last tensor"));
        }
        let mut names = std::collections::HashSet::new();
        for t in &tensors {
            if !names.insert(t.name.as_str()) {
                return Err(Error::format(0, format!("duplicate tensor '{}'", t.name)));
            }
        }
        Ok(Self { version, tensors })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn tensor(&self, name: &str) -> Option<&CompressedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }
}

fn to_format(e: Error) -> Error {
    match e {
        Error::Parse { offset, msg } => Error::Format { offset, msg },
        other => other,
    }
}

fn write_str16(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u16).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn write_str8(out: &mut Vec<u8>, s: &str) {
    let b = &s.as_bytes()[..s.len().min(255)];
    out.push(b.len() as u8);
    out.extend_from_slice(b);
}

fn write_tensor(out: &mut Vec<u8>, t: &CompressedTensor) {
    write_str16(out, &t.name);
    out.push(t.format.tag());
    let id = t.scheme.id();
    out.push(id);
    if id == BitGroupScheme::CUSTOM_ID {
        write_str8(out, &t.scheme.name);
        out.push(t.scheme.format.map_or(255, |f| f.tag()));
        out.push(t.scheme.groups.len() as u8);
        for g in &t.scheme.groups {
            out.push(g.width as u8);
            out.push(g.compressed as u8);
            write_str8(out, &g.name);
        }
    }
    out.push(t.shape.len() as u8);
    for d in &t.shape {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.extend_from_slice(&t.crc32.to_le_bytes());
    for g in &t.groups {
        match g {
            GroupPayload::Stored(bits) => {
                out.push(KIND_STORED);
                out.extend_from_slice(&bits.bit_len().to_le_bytes());
                out.extend_from_slice(bits.as_bytes());
            }
            GroupPayload::Coded { codebook, bits } => {
                out.push(KIND_CODED);
                out.extend_from_slice(&bits.bit_len().to_le_bytes());
                out.extend_from_slice(&codebook.serialize());
                out.extend_from_slice(bits.as_bytes());
            }
        }
    }
}

fn read_str(r: &mut ByteReader<'_>, len: usize) -> Result<String> {
    let at = r.pos;
    let raw = r.take(len).map_err(to_format)?;
    String::from_utf8(raw.to_vec()).map_err(|_| Error::format(at, "string is not UTF-8"))
}

fn read_scheme(r: &mut ByteReader<'_>) -> Result<BitGroupScheme> {
    let at = r.pos;
    let len = r.u8().map_err(to_format)? as usize;
    let name = read_str(r, len)?;
    let format = match r.u8().map_err(to_format)? {
        255 => None,
        tag => Some(FloatFormat::from_tag(tag).map_err(|e| Error::format(at, e.to_string()))?),
    };
    let count = r.u8().map_err(to_format)?;
    let mut specs = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let width = r.u8().map_err(to_format)? as u32;
        let compressed = match r.u8().map_err(to_format)? {
            0 => false,
            1 => true,
            other => return Err(Error::format(r.pos - 1, format!("bad coded flag {other}"))),
        };
        let len = r.u8().map_err(to_format)? as usize;
        let gname = read_str(r, len)?;
        specs.push(GroupSpec {
            name: gname,
            width,
            compressed,
        });
    }
    BitGroupScheme::new(name, &specs, format, false).map_err(|e| Error::format(at, e.to_string()))
}

fn read_tensor(r: &mut ByteReader<'_>) -> Result<CompressedTensor> {
    let start = r.pos;
    let name_len = r.u16().map_err(to_format)? as usize;
    let name = read_str(r, name_len)?;
    let at = r.pos;
    let format =
        FloatFormat::from_tag(r.u8().map_err(to_format)?).map_err(|e| Error::format(at, e.to_string()))?;
    let at = r.pos;
    let id = r.u8().map_err(to_format)?;
    let scheme = match id {
        BitGroupScheme::CUSTOM_ID => read_scheme(r)?,
        _ => BitGroupScheme::from_id(id)
            .ok_or_else(|| Error::format(at, format!("unknown scheme id {id}")))?,
    };
    scheme
        .check_format(format)
        .map_err(|e| Error::format(at, e.to_string()))?;
    let rank = r.u8().map_err(to_format)? as usize;
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        shape.push(r.u64().map_err(to_format)?);
    }
    let n = element_count(&shape).map_err(|e| Error::format(start, e.to_string()))?;
    let crc32 = r.u32().map_err(to_format)?;

    let mut groups = Vec::with_capacity(scheme.groups.len());
    for g in &scheme.groups {
        let at = r.pos;
        let kind = r.u8().map_err(to_format)?;
        let bit_len = r.u64().map_err(to_format)?;
        let payload = match kind {
            KIND_STORED => {
                if g.compressed && n > 0 {
                    return Err(Error::format(at, format!("group '{}' must be coded", g.name)));
                }
                if Some(bit_len) != n.checked_mul(g.width as u64) {
                    return Err(Error::format(
                        at,
                        format!("stored group '{}' has {bit_len} bits for {n} params", g.name),
                    ));
                }
                GroupPayload::Stored(read_payload(r, bit_len)?)
            }
            KIND_CODED => {
                if !g.compressed {
                    return Err(Error::format(at, format!("group '{}' must be stored", g.name)));
                }
                let cb_at = r.pos;
                let (codebook, used) = HuffmanCodebook::deserialize(r.rest())
                    .map_err(|e| shift_offset(e, cb_at))?;
                if codebook.width() != g.width {
                    return Err(Error::format(
                        cb_at,
                        format!("codebook width {} for {}-bit group", codebook.width(), g.width),
                    ));
                }
                r.take(used).map_err(to_format)?;
                GroupPayload::Coded {
                    codebook,
                    bits: read_payload(r, bit_len)?,
                }
            }
            other => return Err(Error::format(at, format!("unknown group kind {other}"))),
        };
        groups.push(payload);
    }
    Ok(CompressedTensor {
        name,
        shape,
        format,
        scheme,
        groups,
        crc32,
    })
}

fn shift_offset(e: Error, base: usize) -> Error {
    match e {
        Error::Format { offset, msg } => Error::Format {
            offset: offset + base as u64,
            msg,
        },
        other => other,
    }
}

fn read_payload(r: &mut ByteReader<'_>, bit_len: u64) -> Result<Bitstream> {
    let at = r.pos;
    let nbytes = bit_len.div_ceil(8);
    if nbytes > r.remaining() as u64 {
        return Err(Error::format(at, format!("payload of {bit_len} bits runs past end of file")));
    }
    let bytes = r.take(nbytes as usize).map_err(to_format)?.to_vec();
    Bitstream::from_bytes(bytes, bit_len).map_err(|e| Error::format(at, e.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub name: String,
    pub width: u32,
    /// "coded" or "stored".
    pub kind: &'static str,
    pub payload_bits: u64,
    pub bits_per_param: f64,
    pub max_len: Option<u32>,
    pub codebook_entries: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TensorSummary {
    pub name: String,
    pub shape: Vec<u64>,
    pub format: &'static str,
    pub scheme: String,
    pub params: u64,
    pub groups: Vec<GroupSummary>,
    pub payload_bits: u64,
    pub bits_per_param: f64,
    pub compression_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub version: u16,
    pub file_bytes: u64,
    pub payload_bits: u64,
    /// File bytes not occupied by payload (headers, codebooks, padding).
    pub overhead_bytes: u64,
    pub tensors: Vec<TensorSummary>,
    pub averaging: Averaging,
    pub bits_per_param: f64,
    pub compression_ratio: f64,
}

pub fn summarize(model: &CompressedModel, averaging: Averaging) -> ModelSummary {
    let tensors: Vec<TensorSummary> = model
        .tensors
        .iter()
        .map(|t| {
            let n = t.params().max(1) as f64;
            let groups = t
                .scheme
                .groups
                .iter()
                .zip(&t.groups)
                .map(|(g, p)| GroupSummary {
                    name: g.name.clone(),
                    width: g.width,
                    kind: if p.codebook().is_some() { "coded" } else { "stored" },
                    payload_bits: p.bits().bit_len(),
                    bits_per_param: p.bits().bit_len() as f64 / n,
                    max_len: p.codebook().map(|c| c.max_len()),
                    codebook_entries: p.codebook().map(|c| c.entries().len()),
                })
                .collect();
            let bpp = t.bits_per_param();
            TensorSummary {
                name: t.name.clone(),
                shape: t.shape.clone(),
                format: t.format.name(),
                scheme: t.scheme.name.clone(),
                params: t.params(),
                groups,
                payload_bits: t.payload_bits(),
                bits_per_param: bpp,
                compression_ratio: if bpp > 0.0 { 16.0 / bpp } else { f64::INFINITY },
            }
        })
        .collect();
    let file_bytes = model.to_bytes().len() as u64;
    let payload_bits: u64 = tensors.iter().map(|t| t.payload_bits).sum();
    let payload_bytes: u64 = model
        .tensors
        .iter()
        .flat_map(|t| t.groups.iter())
        .map(|g| g.bits().as_bytes().len() as u64)
        .sum();
    let nonempty: Vec<&TensorSummary> = tensors.iter().filter(|t| t.params > 0).collect();
    let (bits_per_param, compression_ratio) = if nonempty.is_empty() {
        (0.0, 0.0)
    } else {
        match averaging {
            Averaging::MeanRatio => {
                let ratio = nonempty.iter().map(|t| t.compression_ratio).sum::<f64>()
                    / nonempty.len() as f64;
                (16.0 / ratio, ratio)
            }
            Averaging::MeanBits => {
                let b = nonempty.iter().map(|t| t.bits_per_param).sum::<f64>() / nonempty.len() as f64;
                (b, 16.0 / b)
            }
            Averaging::ParameterWeighted => {
                let params: u64 = nonempty.iter().map(|t| t.params).sum();
                let b = payload_bits as f64 / params as f64;
                (b, 16.0 / b)
            }
        }
    };
    ModelSummary {
        version: model.version,
        file_bytes,
        payload_bits,
        overhead_bytes: file_bytes - payload_bytes,
        tensors,
        averaging,
        bits_per_param,
        compression_ratio,
    }
}

/// Reads an HFLC file and summarizes it without decompressing.
pub fn inspect(path: impl AsRef<Path>) -> Result<ModelSummary> {
    Ok(summarize(&CompressedModel::load(path)?, Averaging::default()))
}
