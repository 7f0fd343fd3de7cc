//! 16-bit floating point layouts.
//!
//! Nothing here converts a weight to a numeric value. A word is only ever
//! sliced into its sign, exponent and mantissa fields, so NaN payloads and
//! signed zeros survive every operation in the crate untouched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FloatFormat {
    Fp16,
    Bf16,
}

/// Sign, exponent and mantissa fields of one 16-bit word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fields {
    pub sign: u16,
    pub exponent: u16,
    pub mantissa: u16,
}

impl FloatFormat {
    pub const SIGN_BITS: u32 = 1;

    pub fn exponent_bits(self) -> u32 {
        match self {
            FloatFormat::Fp16 => 5,
            FloatFormat::Bf16 => 8,
        }
    }

    pub fn mantissa_bits(self) -> u32 {
        match self {
            FloatFormat::Fp16 => 10,
            FloatFormat::Bf16 => 7,
        }
    }

    pub fn bias(self) -> i32 {
        match self {
            FloatFormat::Fp16 => 15,
            FloatFormat::Bf16 => 127,
        }
    }

    /// Byte tag used by both on-disk formats.
    pub fn tag(self) -> u8 {
        match self {
            FloatFormat::Fp16 => 0,
            FloatFormat::Bf16 => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(FloatFormat::Fp16),
            1 => Ok(FloatFormat::Bf16),
            other => Err(Error::Config(format!("unknown float format tag {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FloatFormat::Fp16 => "FP16",
            FloatFormat::Bf16 => "BF16",
        }
    }

    pub fn split(self, word: u16) -> Fields {
        let m = self.mantissa_bits();
        let e = self.exponent_bits();
        Fields {
            sign: word >> 15,
            exponent: (word >> m) & ((1 << e) - 1),
            mantissa: word & ((1 << m) - 1),
        }
    }

    pub fn join(self, fields: Fields) -> u16 {
        let m = self.mantissa_bits();
        (fields.sign << 15) | (fields.exponent << m) | fields.mantissa
    }
}

/// Splits `word` into (sign, exponent, mantissa) for `format`.
pub fn field_split(word: u16, format: FloatFormat) -> Fields {
    format.split(word)
}
