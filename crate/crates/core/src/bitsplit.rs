//! Partitioning 16-bit words into bit groups.
//!
//! A scheme lists groups MSB-first; each group covers a contiguous run of
//! bits and is either Huffman coded or stored verbatim.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bits::{BitWriter, Bitstream};
use crate::error::{Error, Result};
use crate::float::FloatFormat;
use crate::weights::WeightTensor;

/// Largest coded group the 32-entry decoder CAM can hold.
pub const CAM_SYMBOL_BITS: u32 = 5;
pub const MAX_GROUP_BITS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitGroup {
    pub name: String,
    pub width: u32,
    /// Position of the group's least significant bit within the word.
    pub shift: u32,
    pub compressed: bool,
}

impl BitGroup {
    pub fn mask(&self) -> u16 {
        (((1u32 << self.width) - 1) as u16) << self.shift
    }

    pub fn extract(&self, word: u16) -> u8 {
        ((word >> self.shift) & ((1u16 << self.width) - 1)) as u8
    }

    pub fn alphabet(&self) -> usize {
        1 << self.width
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BitGroupScheme {
    pub name: String,
    pub groups: Vec<BitGroup>,
    /// Format the scheme was designed for; `None` accepts any 16-bit format.
    pub format: Option<FloatFormat>,
    /// Allows coded groups wider than the CAM limit. Such schemes are only
    /// usable for entropy measurement.
    pub analysis_only: bool,
}

/// Group description used to build custom schemes.
#[derive(Debug, Clone, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    pub width: u32,
    pub compressed: bool,
}

#[derive(Debug, Deserialize)]
struct SchemeFile {
    name: String,
    #[serde(default)]
    format: Option<FloatFormat>,
    #[serde(default)]
    analysis_only: bool,
    group: Vec<GroupSpec>,
}

impl BitGroupScheme {
    pub const FP16_ID: u8 = 0;
    pub const BF16_ID: u8 = 1;
    pub const CUSTOM_ID: u8 = 255;

    /// Builds a scheme from MSB-first group specs and validates it.
    pub fn new(
        name: impl Into<String>,
        specs: &[GroupSpec],
        format: Option<FloatFormat>,
        analysis_only: bool,
    ) -> Result<Self> {
        let name = name.into();
        let total: u32 = specs.iter().map(|g| g.width).sum();
        if total != 16 {
            return Err(Error::Config(format!(
                "scheme '{name}': group widths sum to {total}, expected 16"
            )));
        }
        let mut shift = 16;
        let mut groups = Vec::with_capacity(specs.len());
        for g in specs {
            if g.width == 0 || g.width > MAX_GROUP_BITS {
                return Err(Error::Config(format!(
                    "scheme '{name}': group '{}' width {} outside 1..={MAX_GROUP_BITS}",
                    g.name, g.width
                )));
            }
            if g.compressed && g.width > CAM_SYMBOL_BITS && !analysis_only {
                return Err(Error::Constraint(format!(
                    "scheme '{name}': coded group '{}' is {} bits; the decoder CAM holds at most {} entries",
                    g.name,
                    g.width,
                    1 << CAM_SYMBOL_BITS
                )));
            }
            shift -= g.width;
            groups.push(BitGroup {
                name: g.name.clone(),
                width: g.width,
                shift,
                compressed: g.compressed,
            });
        }
        Ok(Self {
            name,
            groups,
            format,
            analysis_only,
        })
    }

    pub fn fp16() -> Self {
        Self::new(
            "fp16-1555",
            &[
                spec("sign", 1, false),
                spec("exponent", 5, true),
                spec("mantissa-hi", 5, true),
                spec("mantissa-lo", 5, true),
            ],
            Some(FloatFormat::Fp16),
            false,
        )
        .unwrap()
    }

    pub fn bf16() -> Self {
        Self::new(
            "bf16-1447",
            &[
                spec("sign", 1, false),
                spec("exponent-hi", 4, true),
                spec("exponent-lo", 4, true),
                spec("mantissa", 7, false),
            ],
            Some(FloatFormat::Bf16),
            false,
        )
        .unwrap()
    }

    /// The byte-aligned 8-8 split, usable for entropy analysis only.
    pub fn split_8_8() -> Self {
        Self::new(
            "8-8",
            &[spec("high", 8, true), spec("low", 8, true)],
            None,
            true,
        )
        .unwrap()
    }

    pub fn split_4_4_4_4() -> Self {
        Self::new(
            "4-4-4-4",
            &[
                spec("nibble3", 4, true),
                spec("nibble2", 4, true),
                spec("nibble1", 4, true),
                spec("nibble0", 4, true),
            ],
            None,
            false,
        )
        .unwrap()
    }

    /// Parses a `--scheme` argument: `fp16-1555`, `bf16-1447`, `8-8`,
    /// `4-4-4-4`, or `custom:<toml file>`.
    pub fn from_arg(arg: &str) -> Result<Self> {
        match arg {
            "fp16-1555" => Ok(Self::fp16()),
            "bf16-1447" => Ok(Self::bf16()),
            "8-8" => Ok(Self::split_8_8()),
            "4-4-4-4" => Ok(Self::split_4_4_4_4()),
            _ => match arg.strip_prefix("custom:") {
                Some(path) => Self::load(path),
                None => Err(Error::Config(format!("unknown scheme '{arg}'"))),
            },
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SchemeFile =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::new(file.name, &file.group, file.format, file.analysis_only)
    }

    pub fn id(&self) -> u8 {
        if *self == Self::fp16() {
            Self::FP16_ID
        } else if *self == Self::bf16() {
            Self::BF16_ID
        } else {
            Self::CUSTOM_ID
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            Self::FP16_ID => Some(Self::fp16()),
            Self::BF16_ID => Some(Self::bf16()),
            _ => None,
        }
    }

    pub fn widths(&self) -> Vec<u32> {
        self.groups.iter().map(|g| g.width).collect()
    }

    pub fn coded_groups(&self) -> impl Iterator<Item = (usize, &BitGroup)> {
        self.groups.iter().enumerate().filter(|(_, g)| g.compressed)
    }

    pub fn check_format(&self, format: FloatFormat) -> Result<()> {
        match self.format {
            Some(f) if f != format => Err(Error::Config(format!(
                "scheme '{}' is for {} weights, tensor is {}",
                self.name,
                f.name(),
                format.name()
            ))),
            _ => Ok(()),
        }
    }
}

fn spec(name: &str, width: u32, compressed: bool) -> GroupSpec {
    GroupSpec {
        name: name.into(),
        width,
        compressed,
    }
}

pub fn builtin_scheme(format: FloatFormat) -> BitGroupScheme {
    match format {
        FloatFormat::Fp16 => BitGroupScheme::fp16(),
        FloatFormat::Bf16 => BitGroupScheme::bf16(),
    }
}

/// One symbol stream per group, all of the tensor's length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolStreamSet {
    pub scheme: BitGroupScheme,
    pub format: FloatFormat,
    pub streams: Vec<Vec<u8>>,
}

impl SymbolStreamSet {
    pub fn len(&self) -> usize {
        self.streams.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Packs group `g`'s symbols at full width, in parameter order.
    pub fn passthrough_plane(&self, g: usize) -> Bitstream {
        pack_plane(&self.streams[g], self.scheme.groups[g].width)
    }
}

pub fn pack_plane(symbols: &[u8], width: u32) -> Bitstream {
    let mut w = BitWriter::with_capacity_bits(symbols.len() as u64 * width as u64);
    for &s in symbols {
        w.write(s as u64, width);
    }
    w.finish()
}

pub fn unpack_plane(plane: &Bitstream, width: u32, n: usize) -> Result<Vec<u8>> {
    if plane.bit_len() != n as u64 * width as u64 {
        return Err(Error::Integrity(format!(
            "passthrough plane has {} bits, expected {} x {width}",
            plane.bit_len(),
            n
        )));
    }
    let mut r = plane.reader();
    Ok((0..n).map(|_| r.read(width).unwrap() as u8).collect())
}

pub fn split_words(words: &[u16], scheme: &BitGroupScheme) -> Vec<Vec<u8>> {
    scheme
        .groups
        .iter()
        .map(|g| words.iter().map(|&w| g.extract(w)).collect())
        .collect()
}

pub fn split_tensor(t: &WeightTensor, scheme: &BitGroupScheme) -> Result<SymbolStreamSet> {
    scheme.check_format(t.format)?;
    Ok(SymbolStreamSet {
        scheme: scheme.clone(),
        format: t.format,
        streams: split_words(&t.data, scheme),
    })
}

pub fn merge_words(streams: &[Vec<u8>], scheme: &BitGroupScheme) -> Result<Vec<u16>> {
    if streams.len() != scheme.groups.len() {
        return Err(Error::Integrity(format!(
            "{} streams for a {}-group scheme",
            streams.len(),
            scheme.groups.len()
        )));
    }
    let n = streams.first().map_or(0, Vec::len);
    let mut out = vec![0u16; n];
    for (g, stream) in scheme.groups.iter().zip(streams) {
        if stream.len() != n {
            return Err(Error::Integrity(format!(
                "group '{}' has {} symbols, expected {n}",
                g.name,
                stream.len()
            )));
        }
        for (word, &sym) in out.iter_mut().zip(stream) {
            if (sym as usize) >= g.alphabet() {
                return Err(Error::Integrity(format!(
                    "symbol {sym} out of range for {}-bit group '{}'",
                    g.width, g.name
                )));
            }
            *word |= (sym as u16) << g.shift;
        }
    }
    Ok(out)
}

pub fn merge_tensor(
    s: &SymbolStreamSet,
    shape: Vec<u64>,
    name: impl Into<String>,
) -> Result<WeightTensor> {
    let name = name.into();
    let expected = crate::weights::element_count(&shape)?;
    if s.streams.iter().any(|st| st.len() as u64 != expected) {
        return Err(Error::Integrity(format!(
            "tensor '{name}': stream lengths do not match shape {shape:?}"
        )));
    }
    let data = merge_words(&s.streams, &s.scheme)?;
    WeightTensor::new(name, shape, s.format, data)
}
