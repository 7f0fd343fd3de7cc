//! Weight ingestion.
//!
//! Two containers are understood: the common checkpoint layout (8-byte LE
//! header length, JSON header, raw byte blob) and the crate's own raw
//! `HFWT` layout. Tensor data is kept as little-endian 16-bit words.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::float::FloatFormat;

pub const RAW_MAGIC: &[u8; 4] = b"HFWT";
pub const RAW_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightTensor {
    pub name: String,
    pub shape: Vec<u64>,
    pub format: FloatFormat,
    pub data: Vec<u16>,
}

impl WeightTensor {
    pub fn new(
        name: impl Into<String>,
        shape: Vec<u64>,
        format: FloatFormat,
        data: Vec<u16>,
    ) -> Result<Self> {
        let name = name.into();
        let expected = element_count(&shape)?;
        if expected != data.len() as u64 {
            return Err(Error::Config(format!(
                "tensor '{name}': shape {shape:?} holds {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            name,
            shape,
            format,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        words_to_le_bytes(&self.data)
    }
}

pub fn element_count(shape: &[u64]) -> Result<u64> {
    shape.iter().try_fold(1u64, |acc, &d| {
        acc.checked_mul(d)
            .ok_or_else(|| Error::Config(format!("shape {shape:?} overflows")))
    })
}

pub fn words_to_le_bytes(words: &[u16]) -> Vec<u8> {
    words.iter().flat_map(|w| w.to_le_bytes()).collect()
}

fn words_from_le_bytes(bytes: &[u8]) -> Vec<u16> {
    bytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect()
}

/// Glob-based tensor name selection. An empty pattern list selects everything.
#[derive(Debug, Clone)]
pub struct TensorFilter {
    patterns: Vec<String>,
    set: globset::GlobSet,
}

impl TensorFilter {
    pub fn all() -> Self {
        Self {
            patterns: Vec::new(),
            set: globset::GlobSet::empty(),
        }
    }

    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Result<Self> {
        let mut builder = globset::GlobSetBuilder::new();
        for p in patterns {
            let glob = globset::Glob::new(p.as_ref())
                .map_err(|e| Error::Config(format!("bad filter '{}': {e}", p.as_ref())))?;
            builder.add(glob);
        }
        let set = builder
            .build()
            .map_err(|e| Error::Config(format!("bad filter: {e}")))?;
        Ok(Self {
            patterns: patterns.iter().map(|p| p.as_ref().to_string()).collect(),
            set,
        })
    }

    pub fn matches(&self, name: &str) -> bool {
        self.patterns.is_empty() || self.set.is_match(name)
    }

    pub fn describe(&self) -> String {
        if self.patterns.is_empty() {
            "*".into()
        } else {
            self.patterns.join(",")
        }
    }

    /// Selected tensors in input order; errors if nothing matches.
    pub fn select<'a>(&self, tensors: &'a [WeightTensor]) -> Result<Vec<&'a WeightTensor>> {
        let picked: Vec<&WeightTensor> = tensors.iter().filter(|t| self.matches(&t.name)).collect();
        if picked.is_empty() {
            return Err(Error::EmptySelection(self.describe()));
        }
        Ok(picked)
    }
}

/// Result of reading a checkpoint: the supported tensors, in file order, and
/// the names (with dtype) of tensors that were skipped.
#[derive(Debug, Clone, Default)]
pub struct LoadedModel {
    pub tensors: Vec<WeightTensor>,
    pub skipped: Vec<String>,
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LoadedModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_model(&bytes)
}

/// Parses either container from memory; the `HFWT` magic selects the raw layout.
pub fn parse_model(bytes: &[u8]) -> Result<LoadedModel> {
    let model = if bytes.starts_with(RAW_MAGIC) {
        LoadedModel {
            tensors: decode_raw(bytes)?,
            skipped: Vec::new(),
        }
    } else {
        decode_checkpoint(bytes)?
    };
    if model.tensors.is_empty() {
        return Err(Error::EmptyModel {
            skipped: model.skipped,
        });
    }
    let mut seen = HashSet::new();
    for t in &model.tensors {
        if !seen.insert(t.name.as_str()) {
            return Err(Error::Parse {
                offset: 0,
                msg: format!("duplicate tensor name '{}'", t.name),
            });
        }
    }
    Ok(model)
}

#[derive(Deserialize)]
struct HeaderEntry {
    dtype: String,
    shape: Vec<u64>,
    data_offsets: [u64; 2],
}

fn decode_checkpoint(bytes: &[u8]) -> Result<LoadedModel> {
    if bytes.len() < 8 {
        return Err(Error::Parse {
            offset: bytes.len() as u64,
            msg: "file shorter than 8-byte header length".into(),
        });
    }
    let header_len = u64::from_le_bytes(bytes[..8].try_into().unwrap());
    let header_end = 8u64
        .checked_add(header_len)
        .filter(|&end| end <= bytes.len() as u64)
        .ok_or_else(|| Error::Parse {
            offset: 0,
            msg: format!(
                "header length {header_len} exceeds file size {}",
                bytes.len()
            ),
        })? as usize;
    let header = &bytes[8..header_end];
    let blob = &bytes[header_end..];

    let raw: BTreeMap<String, serde_json::Value> =
        serde_json::from_slice(header).map_err(|e| Error::Parse {
            offset: 8 + json_error_offset(header, &e),
            msg: e.to_string(),
        })?;

    // JSON object order is not preserved by the map; order tensors by their
    // position in the blob, which is the order they were written in.
    let mut entries = Vec::with_capacity(raw.len());
    for (name, value) in raw {
        if name == "__metadata__" {
            continue;
        }
        let entry: HeaderEntry = serde_json::from_value(value).map_err(|e| Error::Parse {
            offset: 8,
            msg: format!("tensor '{name}': {e}"),
        })?;
        entries.push((name, entry));
    }
    entries.sort_by_key(|(name, e)| (e.data_offsets[0], name.clone()));

    let mut model = LoadedModel::default();
    for (name, entry) in entries {
        let format = match entry.dtype.as_str() {
            "F16" => FloatFormat::Fp16,
            "BF16" => FloatFormat::Bf16,
            other => {
                model.skipped.push(format!("{name} ({other})"));
                continue;
            }
        };
        let [start, end] = entry.data_offsets;
        if start > end || end > blob.len() as u64 {
            return Err(Error::Bounds {
                tensor: name,
                start,
                end,
                len: blob.len() as u64,
            });
        }
        let count = element_count(&entry.shape)?;
        if count.checked_mul(2) != Some(end - start) {
            return Err(Error::Parse {
                offset: 8,
                msg: format!(
                    "tensor '{name}': shape {:?} needs {} bytes, offsets span {}",
                    entry.shape,
                    count.saturating_mul(2),
                    end - start
                ),
            });
        }
        let data = words_from_le_bytes(&blob[start as usize..end as usize]);
        model.tensors.push(WeightTensor {
            name,
            shape: entry.shape,
            format,
            data,
        });
    }
    Ok(model)
}

fn json_error_offset(text: &[u8], err: &serde_json::Error) -> u64 {
    let line = err.line();
    let column = err.column();
    if line == 0 {
        return 0;
    }
    let mut offset = 0usize;
    for (i, l) in text.split(|&b| b == b'\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1).min(l.len())) as u64;
        }
        offset += l.len() + 1;
    }
    text.len() as u64
}

/// Serializes tensors in the checkpoint container layout.
pub fn encode_checkpoint(tensors: &[WeightTensor]) -> Vec<u8> {
    let mut header = serde_json::Map::new();
    let mut offset = 0u64;
    for t in tensors {
        let len = 2 * t.data.len() as u64;
        header.insert(
            t.name.clone(),
            serde_json::json!({
                "dtype": match t.format { FloatFormat::Fp16 => "F16", FloatFormat::Bf16 => "BF16" },
                "shape": t.shape,
                "data_offsets": [offset, offset + len],
            }),
        );
        offset += len;
    }
    let mut header = serde_json::to_vec(&serde_json::Value::Object(header)).unwrap();
    while !header.len().is_multiple_of(8) {
        header.push(b' ');
    }
    let mut out = Vec::with_capacity(8 + header.len() + offset as usize);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for t in tensors {
        out.extend_from_slice(&t.to_le_bytes());
    }
    out
}

pub fn encode_raw(tensors: &[WeightTensor]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&RAW_VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.name.len() as u16).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.push(t.format.tag());
        out.push(t.shape.len() as u8);
        for d in &t.shape {
            out.extend_from_slice(&d.to_le_bytes());
        }
        out.extend_from_slice(&t.to_le_bytes());
    }
    out
}

pub fn save_raw(path: impl AsRef<Path>, tensors: &[WeightTensor]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_raw(tensors)).map_err(|e| Error::io(path, e))
}

pub fn decode_raw(bytes: &[u8]) -> Result<Vec<WeightTensor>> {
    let mut r = ByteReader::new(bytes);
    if r.take(4)? != RAW_MAGIC {
        return Err(parse_err(0, "missing HFWT magic"));
    }
    let version = r.u16()?;
    if version != RAW_VERSION {
        return Err(parse_err(4, format!("unsupported raw version {version}")));
    }
    let count = r.u32()?;
    let mut tensors = Vec::with_capacity(count.min(1 << 16) as usize);
    for _ in 0..count {
        let name_len = r.u16()? as usize;
        let at = r.pos;
        let name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| parse_err(at, "tensor name is not UTF-8"))?;
        let at = r.pos;
        let format = FloatFormat::from_tag(r.u8()?).map_err(|e| parse_err(at, e.to_string()))?;
        let rank = r.u8()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u64()?);
        }
        let count = element_count(&shape)?;
        let at = r.pos;
        let nbytes = count
            .checked_mul(2)
            .filter(|&n| n <= (bytes.len() - at) as u64)
            .ok_or(Error::Bounds {
                tensor: name.clone(),
                start: at as u64,
                end: at as u64 + count.saturating_mul(2),
                len: bytes.len() as u64,
            })?;
        let data = words_from_le_bytes(r.take(nbytes as usize)?);
        tensors.push(WeightTensor {
            name,
            shape,
            format,
            data,
        });
    }
    if r.pos != bytes.len() {
        return Err(parse_err(r.pos, "trailing bytes after last tensor"));
    }
    Ok(tensors)
}

fn parse_err(offset: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        offset: offset as u64,
        msg: msg.into(),
    }
}

/// Cursor over a little-endian byte buffer; errors carry the failing offset.
pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                parse_err(self.pos, format!("need {n} bytes, {} left", self.remaining()))
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn rest(&self) -> &'a [u8] {
        &self.buf[self.pos..]
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> WeightTensor {
        WeightTensor::new("w", vec![2, 2], FloatFormat::Fp16, vec![0x3C00, 0xC000, 0x3800, 0x0000])
            .unwrap()
    }

    #[test]
    fn checkpoint_fp16_values() {
        // 1.0, -2.0, 0.5, 0.0 as half floats.
        let mut blob = Vec::new();
        for w in [0x3C00u16, 0xC000, 0x3800, 0x0000] {
            blob.extend_from_slice(&w.to_le_bytes());
        }
        let header = br#"{"w":{"dtype":"F16","shape":[2,2],"data_offsets":[0,8]}}"#;
        let mut file = (header.len() as u64).to_le_bytes().to_vec();
        file.extend_from_slice(header);
        file.extend_from_slice(&blob);
        let model = parse_model(&file).unwrap();
        assert_eq!(model.tensors, vec![sample()]);
    }

    #[test]
    fn zero_tensors_is_empty_model() {
        let header = b"{}";
        let mut file = (header.len() as u64).to_le_bytes().to_vec();
        file.extend_from_slice(header);
        assert!(matches!(parse_model(&file), Err(Error::EmptyModel { .. })));
    }

    #[test]
    fn unsupported_dtypes_are_skipped() {
        let header = br#"{"a":{"dtype":"F32","shape":[1],"data_offsets":[0,4]},"b":{"dtype":"BF16","shape":[1],"data_offsets":[4,6]}}"#;
        let mut file = (header.len() as u64).to_le_bytes().to_vec();
        file.extend_from_slice(header);
        file.extend_from_slice(&[0, 0, 0x80, 0x3F, 0x80, 0x3F]);
        let model = parse_model(&file).unwrap();
        assert_eq!(model.tensors.len(), 1);
        assert_eq!(model.tensors[0].data, vec![0x3F80]);
        assert_eq!(model.skipped, vec!["a (F32)".to_string()]);

        let only_f32 = br#"{"a":{"dtype":"F32","shape":[1],"data_offsets":[0,4]}}"#;
        let mut file = (only_f32.len() as u64).to_le_bytes().to_vec();
        file.extend_from_slice(only_f32);
        file.extend_from_slice(&[0; 4]);
        match parse_model(&file) {
            Err(Error::EmptyModel { skipped }) => assert_eq!(skipped.len(), 1),
            other => panic!("expected empty model, got {other:?}"),
        }
    }

    #[test]
    fn malformed_header_reports_offset() {
        let header = br#"{"w": {"dtype": "F16",, }"#;
        let mut file = (header.len() as u64).to_le_bytes().to_vec();
        file.extend_from_slice(header);
        match parse_model(&file) {
            Err(Error::Parse { offset, .. }) => assert!(offset >= 8 && offset < 8 + header.len() as u64),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn offsets_out_of_range() {
        let header = br#"{"w":{"dtype":"F16","shape":[4],"data_offsets":[0,8]}}"#;
        let mut file = (header.len() as u64).to_le_bytes().to_vec();
        file.extend_from_slice(header);
        file.extend_from_slice(&[0; 4]);
        assert!(matches!(parse_model(&file), Err(Error::Bounds { .. })));
    }

    #[test]
    fn header_length_past_eof() {
        let mut file = 1000u64.to_le_bytes().to_vec();
        file.extend_from_slice(b"{}");
        assert!(matches!(parse_model(&file), Err(Error::Parse { .. })));
    }

    #[test]
    fn raw_round_trip_is_byte_exact() {
        let tensors = vec![
            sample(),
            WeightTensor::new("b", vec![3], FloatFormat::Bf16, vec![0x7FC1, 0x8000, 0x0001]).unwrap(),
        ];
        let bytes = encode_raw(&tensors);
        let back = parse_model(&bytes).unwrap().tensors;
        assert_eq!(back, tensors);
        assert_eq!(encode_raw(&back), bytes);
    }

    #[test]
    fn raw_truncated_is_rejected() {
        let bytes = encode_raw(&[sample()]);
        for cut in [3, 9, bytes.len() - 1] {
            assert!(parse_model(&bytes[..cut]).is_err(), "cut at {cut}");
        }
    }

    #[test]
    fn checkpoint_writer_round_trip() {
        let tensors = vec![
            sample(),
            WeightTensor::new("z", vec![1, 3], FloatFormat::Bf16, vec![1, 2, 3]).unwrap(),
        ];
        let back = parse_model(&encode_checkpoint(&tensors)).unwrap().tensors;
        assert_eq!(back, tensors);
    }

    #[test]
    fn filter_globs() {
        let f = TensorFilter::new(&["*.mlp.*", "*q_proj*"]).unwrap();
        assert!(f.matches("layers.0.mlp.up_proj.weight"));
        assert!(f.matches("layers.3.self_attn.q_proj.weight"));
        assert!(!f.matches("embed_tokens.weight"));
        assert!(TensorFilter::all().matches("anything"));
        let ts = vec![sample()];
        assert!(matches!(
            TensorFilter::new(&["nope*"]).unwrap().select(&ts),
            Err(Error::EmptySelection(_))
        ));
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(WeightTensor::new("x", vec![3], FloatFormat::Fp16, vec![0; 2]).is_err());
    }
}
