//! Empirical entropy and achieved code length per bit group.

use rayon::prelude::*;
use serde::Serialize;

use crate::bitsplit::{split_words, BitGroupScheme};
use crate::error::{Error, Result};
use crate::huffman::{build_codebook_with_limit, HuffmanCodebook};
use crate::weights::{TensorFilter, WeightTensor};

pub fn symbol_histogram(stream: &[u8], width: u32) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << width];
    for &s in stream {
        counts[s as usize] += 1;
    }
    counts
}

/// Shannon entropy in bits per symbol.
pub fn entropy(counts: &[u64]) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyStream);
    }
    let n = total as f64;
    let h = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>();
    // clamp tiny negative rounding for single-symbol inputs
    Ok(h.max(0.0))
}

/// Entropy of whole 16-bit words, the no-split baseline.
pub fn word_entropy(words: &[u16]) -> Result<f64> {
    let mut counts = vec![0u64; 1 << 16];
    for &w in words {
        counts[w as usize] += 1;
    }
    entropy(&counts)
}

/// How per-matrix results are combined into a model figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    /// Mean of per-matrix compression ratios; bits/param = 16 / mean ratio.
    #[default]
    MeanRatio,
    /// Mean of per-matrix bits/param.
    MeanBits,
    /// Parameter-weighted bits/param.
    ParameterWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CodebookScope {
    #[default]
    PerMatrix,
    /// One codebook per group shared by every selected matrix.
    Global,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ReportOptions {
    pub averaging: Averaging,
    pub scope: CodebookScope,
    /// Optional code-length cap applied when building codebooks.
    pub length_limit: Option<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupStats {
    pub name: String,
    pub width: u32,
    pub coded: bool,
    pub entropy: f64,
    /// Achieved bits per symbol: Huffman average for coded groups, width otherwise.
    pub code_length: f64,
    pub max_len: Option<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TensorReport {
    pub name: String,
    pub params: u64,
    pub groups: Vec<GroupStats>,
    pub entropy_bits_per_param: f64,
    pub bits_per_param: f64,
    pub compression_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyReport {
    pub scheme: String,
    pub options: ReportOptions,
    pub tensors: Vec<TensorReport>,
    pub per_group_entropy: Vec<f64>,
    pub per_group_code_length: Vec<f64>,
    pub entropy_bits_per_param: f64,
    pub total_bits_per_param: f64,
    pub compression_ratio: f64,
}

pub(crate) fn group_stats(
    scheme: &BitGroupScheme,
    histograms: &[Vec<u64>],
    codebooks: &[Option<HuffmanCodebook>],
) -> Result<Vec<GroupStats>> {
    scheme
        .groups
        .iter()
        .zip(histograms)
        .zip(codebooks)
        .map(|((g, counts), cb)| {
            let total: u64 = counts.iter().sum();
            let ent = if total == 0 { 0.0 } else { entropy(counts)? };
            let (code_length, max_len) = match cb {
                Some(cb) if total > 0 => (
                    cb.coded_bits(counts).expect("codebook covers histogram") as f64
                        / total as f64,
                    Some(cb.max_len()),
                ),
                Some(cb) => (0.0, Some(cb.max_len())),
                None => (g.width as f64, None),
            };
            Ok(GroupStats {
                name: g.name.clone(),
                width: g.width,
                coded: g.compressed,
                entropy: ent,
                code_length,
                max_len,
            })
        })
        .collect()
}

fn histograms(t: &WeightTensor, scheme: &BitGroupScheme) -> Vec<Vec<u64>> {
    split_words(&t.data, scheme)
        .iter()
        .zip(&scheme.groups)
        .map(|(s, g)| symbol_histogram(s, g.width))
        .collect()
}

fn codebooks_for(
    scheme: &BitGroupScheme,
    hists: &[Vec<u64>],
    limit: Option<u32>,
) -> Result<Vec<Option<HuffmanCodebook>>> {
    scheme
        .groups
        .iter()
        .zip(hists)
        .map(|(g, h)| {
            if g.compressed && h.iter().any(|&c| c > 0) {
                build_codebook_with_limit(h, limit).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect()
}

fn tensor_report(
    name: &str,
    params: u64,
    scheme: &BitGroupScheme,
    hists: &[Vec<u64>],
    codebooks: &[Option<HuffmanCodebook>],
) -> Result<TensorReport> {
    let groups = group_stats(scheme, hists, codebooks)?;
    let bits: f64 = groups.iter().map(|g| g.code_length).sum();
    let ent: f64 = groups
        .iter()
        .map(|g| if g.coded { g.entropy } else { g.width as f64 })
        .sum();
    Ok(TensorReport {
        name: name.to_string(),
        params,
        groups,
        entropy_bits_per_param: ent,
        bits_per_param: bits,
        compression_ratio: if bits > 0.0 { 16.0 / bits } else { f64::INFINITY },
    })
}

/// Per-matrix and model-level entropy / code-length report.
pub fn model_report(
    tensors: &[WeightTensor],
    scheme: &BitGroupScheme,
    filter: &TensorFilter,
    options: ReportOptions,
) -> Result<EntropyReport> {
    let selected = filter.select(tensors)?;
    for t in &selected {
        scheme.check_format(t.format)?;
    }
    let selected: Vec<&WeightTensor> = selected.into_iter().filter(|t| !t.is_empty()).collect();
    if selected.is_empty() {
        return Err(Error::EmptySelection(format!(
            "{} (all selected tensors are empty)",
            filter.describe()
        )));
    }
    let hists: Vec<Vec<Vec<u64>>> = selected.par_iter().map(|t| histograms(t, scheme)).collect();

    let reports: Vec<TensorReport> = match options.scope {
        CodebookScope::PerMatrix => selected
            .par_iter()
            .zip(&hists)
            .map(|(t, h)| {
                let cbs = codebooks_for(scheme, h, options.length_limit)?;
                tensor_report(&t.name, t.len() as u64, scheme, h, &cbs)
            })
            .collect::<Result<_>>()?,
        CodebookScope::Global => {
            let mut merged: Vec<Vec<u64>> =
                scheme.groups.iter().map(|g| vec![0u64; g.alphabet()]).collect();
            for h in &hists {
                for (m, g) in merged.iter_mut().zip(h) {
                    for (a, b) in m.iter_mut().zip(g) {
                        *a += b;
                    }
                }
            }
            let cbs = codebooks_for(scheme, &merged, options.length_limit)?;
            selected
                .iter()
                .zip(&hists)
                .map(|(t, h)| tensor_report(&t.name, t.len() as u64, scheme, h, &cbs))
                .collect::<Result<_>>()?
        }
    };

    let weights: Vec<f64> = match options.averaging {
        Averaging::ParameterWeighted => reports.iter().map(|r| r.params as f64).collect(),
        _ => vec![1.0; reports.len()],
    };
    let wsum: f64 = weights.iter().sum();
    let mean = |f: &dyn Fn(&TensorReport) -> f64| -> f64 {
        reports.iter().zip(&weights).map(|(r, w)| f(r) * w).sum::<f64>() / wsum
    };
    let per_group_entropy = (0..scheme.groups.len())
        .map(|g| mean(&|r| r.groups[g].entropy))
        .collect();
    let per_group_code_length = (0..scheme.groups.len())
        .map(|g| mean(&|r| r.groups[g].code_length))
        .collect();
    let entropy_bits_per_param = mean(&|r| r.entropy_bits_per_param);
    let (total_bits_per_param, compression_ratio) = match options.averaging {
        Averaging::MeanRatio => {
            let ratio = mean(&|r| r.compression_ratio);
            (16.0 / ratio, ratio)
        }
        _ => {
            let bits = mean(&|r| r.bits_per_param);
            (bits, 16.0 / bits)
        }
    };

    Ok(EntropyReport {
        scheme: scheme.name.clone(),
        options,
        tensors: reports,
        per_group_entropy,
        per_group_code_length,
        entropy_bits_per_param,
        total_bits_per_param,
        compression_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::float::FloatFormat;
    use proptest::prelude::*;

    #[test]
    fn histogram_examples() {
        assert_eq!(symbol_histogram(&[0, 0, 1], 1), vec![2, 1]);
        assert_eq!(symbol_histogram(&[], 2), vec![0; 4]);
        let all: Vec<u8> = (0..32).collect();
        assert_eq!(symbol_histogram(&all, 5), vec![1; 32]);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[0, 7, 0]).unwrap(), 0.0);
        assert!((entropy(&[3; 32]).unwrap() - 5.0).abs() < 1e-12);
        assert!(entropy(&[0, 0]).is_err());
        assert!((entropy(&[8, 4, 2, 2]).unwrap() - 1.75).abs() < 1e-12);
    }

    #[test]
    fn constant_tensor_costs_four_bits() {
        let t = WeightTensor::new("c", vec![64, 64], FloatFormat::Fp16, vec![0x3C00; 4096]).unwrap();
        let r = model_report(&[t], &BitGroupScheme::fp16(), &TensorFilter::all(), ReportOptions::default())
            .unwrap();
        // sign 1 bit + three single-symbol codebooks at 1 bit each
        assert_eq!(r.total_bits_per_param, 4.0);
        assert_eq!(r.compression_ratio, 4.0);
        assert_eq!(r.per_group_entropy, vec![0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn averaging_modes() {
        let a = WeightTensor::new("a", vec![4], FloatFormat::Fp16, vec![0x3C00; 4]).unwrap();
        let data: Vec<u16> = (0..1024u32).map(|i| (i.wrapping_mul(2654435761u32) >> 16) as u16).collect();
        let b = WeightTensor::new("b", vec![1024], FloatFormat::Fp16, data).unwrap();
        let ts = [a, b];
        let f = TensorFilter::all();
        let s = BitGroupScheme::fp16();
        let bits = model_report(&ts, &s, &f, ReportOptions { averaging: Averaging::MeanBits, ..Default::default() }).unwrap();
        let mean_bits = (bits.tensors[0].bits_per_param + bits.tensors[1].bits_per_param) / 2.0;
        assert!((bits.total_bits_per_param - mean_bits).abs() < 1e-12);

        let ratio = model_report(&ts, &s, &f, ReportOptions::default()).unwrap();
        let mean_ratio = (ratio.tensors[0].compression_ratio + ratio.tensors[1].compression_ratio) / 2.0;
        assert!((ratio.compression_ratio - mean_ratio).abs() < 1e-12);

        let weighted = model_report(&ts, &s, &f, ReportOptions { averaging: Averaging::ParameterWeighted, ..Default::default() }).unwrap();
        let expect = (4.0 * bits.tensors[0].bits_per_param + 1024.0 * bits.tensors[1].bits_per_param) / 1028.0;
        assert!((weighted.total_bits_per_param - expect).abs() < 1e-12);
    }

    #[test]
    fn empty_selection_errors() {
        let t = WeightTensor::new("a", vec![1], FloatFormat::Fp16, vec![0]).unwrap();
        let f = TensorFilter::new(&["zzz"]).unwrap();
        assert!(model_report(&[t], &BitGroupScheme::fp16(), &f, ReportOptions::default()).is_err());
    }

    #[test]
    fn analysis_only_split_reports() {
        let data: Vec<u16> = (0..4096u32).map(|i| (i.wrapping_mul(40503) >> 3) as u16).collect();
        let t = WeightTensor::new("a", vec![4096], FloatFormat::Fp16, data.clone()).unwrap();
        let r = model_report(&[t], &BitGroupScheme::split_8_8(), &TensorFilter::all(), ReportOptions::default()).unwrap();
        assert_eq!(r.per_group_entropy.len(), 2);
        // splitting can only add entropy relative to the joint distribution
        let whole = word_entropy(&data).unwrap();
        assert!(r.entropy_bits_per_param + 1e-9 >= whole);
    }

    proptest! {
        #[test]
        fn entropy_invariances(counts in proptest::collection::vec(0u64..500, 2..64), k in 1u64..20) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let h = entropy(&counts).unwrap();
            let width = (counts.len() as f64).log2().ceil();
            prop_assert!(h >= 0.0 && h <= width + 1e-9);
            let scaled: Vec<u64> = counts.iter().map(|c| c * k).collect();
            prop_assert!((entropy(&scaled).unwrap() - h).abs() < 1e-9);
            let mut rev = counts.clone();
            rev.reverse();
            prop_assert!((entropy(&rev).unwrap() - h).abs() < 1e-9);
        }

        #[test]
        fn huffman_within_one_bit(words in proptest::collection::vec(any::<u16>(), 1..3000)) {
            let t = WeightTensor::new("w", vec![words.len() as u64], FloatFormat::Fp16, words).unwrap();
            let r = model_report(&[t], &BitGroupScheme::fp16(), &TensorFilter::all(), ReportOptions::default()).unwrap();
            for g in &r.tensors[0].groups {
                prop_assert!(g.entropy <= g.width as f64 + 1e-9);
                if g.coded {
                    prop_assert!(g.entropy <= g.code_length + 1e-9);
                    prop_assert!(g.code_length < g.entropy + 1.0);
                    prop_assert!(g.code_length <= g.width as f64);
                }
            }
            prop_assert!(r.total_bits_per_param <= 16.0 + 3.0);
        }
    }
}
