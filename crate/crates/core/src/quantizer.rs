//! Quantization genomes and the per-axis color maps they decode to.
//!
//! A genome holds one bit per reference interval on each RGB axis (`N` per
//! axis, `3·N` total, laid out R then G then B). A set bit opens a new bin
//! at that interval; a clear bit merges the interval into the bin opened by
//! the closest set bit before it. The first bit of each axis is always set
//! so that every channel value lands in some bin.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of reference intervals per axis.
pub const DEFAULT_INTERVALS: usize = 8;

/// Largest supported number of reference intervals per axis.
pub const MAX_INTERVALS: usize = 256;

/// The descriptor a quantization feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Descriptor {
    Bic,
    Gch,
}

impl Descriptor {
    pub fn tag(self) -> &'static str {
        match self {
            Descriptor::Bic => "bic",
            Descriptor::Gch => "gch",
        }
    }

    /// Feature dimension for a quantization with `colors` total colors.
    pub fn dimension(self, colors: usize) -> usize {
        match self {
            Descriptor::Bic => 2 * colors,
            Descriptor::Gch => colors,
        }
    }
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Descriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bic" => Ok(Descriptor::Bic),
            "gch" => Ok(Descriptor::Gch),
            other => Err(Error::InvalidArgument(format!(
                "unknown descriptor {other:?} (expected bic or gch)"
            ))),
        }
    }
}

fn check_intervals(intervals: usize) -> Result<()> {
    if intervals == 0 || intervals > MAX_INTERVALS || !intervals.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "reference intervals per axis must be a power of two in 1..={MAX_INTERVALS}, got {intervals}"
        )));
    }
    Ok(())
}

/// A repaired quantization genome.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuantizationGenome {
    bits: Vec<bool>,
    intervals: usize,
}

impl QuantizationGenome {
    /// Builds a genome from raw bits, forcing the leading bit of every axis on.
    ///
    /// The number of reference intervals is inferred as `bits.len() / 3`.
    pub fn repair(mut bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() || !bits.len().is_multiple_of(3) {
            return Err(Error::InvalidGenome(format!(
                "length {} is not a positive multiple of 3",
                bits.len()
            )));
        }
        let intervals = bits.len() / 3;
        check_intervals(intervals).map_err(|e| Error::InvalidGenome(e.to_string()))?;
        for axis in 0..3 {
            bits[axis * intervals] = true;
        }
        Ok(QuantizationGenome { bits, intervals })
    }

    /// Like [`repair`](Self::repair) but also checks the length against `intervals`.
    pub fn repair_with(bits: Vec<bool>, intervals: usize) -> Result<Self> {
        if bits.len() != 3 * intervals {
            return Err(Error::InvalidGenome(format!(
                "expected {} bits for {intervals} intervals per axis, got {}",
                3 * intervals,
                bits.len()
            )));
        }
        Self::repair(bits)
    }

    /// Uniform quantization with `bins_per_axis` bins on every axis.
    pub fn baseline(bins_per_axis: usize, intervals: usize) -> Result<Self> {
        check_intervals(intervals)?;
        if bins_per_axis == 0 || !intervals.is_multiple_of(bins_per_axis) {
            return Err(Error::InvalidArgument(format!(
                "bins per axis {bins_per_axis} does not divide {intervals}"
            )));
        }
        let stride = intervals / bins_per_axis;
        let bits = (0..3 * intervals).map(|i| (i % intervals).is_multiple_of(stride)).collect();
        Self::repair(bits)
    }

    /// Every reference interval in its own bin.
    pub fn all_ones(intervals: usize) -> Result<Self> {
        Self::baseline(intervals, intervals)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// The bits belonging to one axis (0 = R, 1 = G, 2 = B).
    pub fn axis(&self, axis: usize) -> &[bool] {
        &self.bits[axis * self.intervals..(axis + 1) * self.intervals]
    }

    /// Number of bins on each axis.
    pub fn axis_sizes(&self) -> [usize; 3] {
        [0, 1, 2].map(|a| self.axis(a).iter().filter(|&&b| b).count())
    }

    pub fn color_count(&self) -> usize {
        self.axis_sizes().iter().product()
    }

    pub fn dimension(&self, descriptor: Descriptor) -> usize {
        descriptor.dimension(self.color_count())
    }

    /// Returns a copy with one bit flipped and the result repaired.
    pub fn with_flipped(&self, position: usize) -> Self {
        let mut bits = self.bits.clone();
        bits[position] = !bits[position];
        // length is unchanged, so repair cannot fail
        Self::repair(bits).expect("flip preserves genome length")
    }

    pub fn decode(&self) -> ColorMap {
        ColorMap::from_genome(self)
    }

    /// Parses the one-line text form; surrounding whitespace is ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let line = text.trim();
        let bits = line
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidGenome(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::repair(bits)
    }

    /// Text form: `'0'`/`'1'` characters, R then G then B, newline-terminated.
    pub fn to_line(&self) -> String {
        let mut s = self.to_string();
        s.push('\n');
        s
    }
}

impl fmt::Display for QuantizationGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for QuantizationGenome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Per-axis lookup tables from channel value to bin index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorMap {
    tables: [[u16; 256]; 3],
    axis_sizes: [usize; 3],
}

impl ColorMap {
    pub fn from_genome(genome: &QuantizationGenome) -> Self {
        let n = genome.intervals();
        let mut tables = [[0u16; 256]; 3];
        for (axis, table) in tables.iter_mut().enumerate() {
            let segment = genome.axis(axis);
            // prefix[i] = set bits among positions 0..=i
            let mut prefix = Vec::with_capacity(n);
            let mut running = 0u16;
            for &bit in segment {
                running += u16::from(bit);
                prefix.push(running);
            }
            for (value, entry) in table.iter_mut().enumerate() {
                let reference = value * n / 256;
                *entry = prefix[reference] - 1;
            }
        }
        ColorMap {
            tables,
            axis_sizes: genome.axis_sizes(),
        }
    }

    pub fn axis_sizes(&self) -> [usize; 3] {
        self.axis_sizes
    }

    pub fn color_count(&self) -> usize {
        self.axis_sizes.iter().product()
    }

    /// Lookup table for one axis (0 = R, 1 = G, 2 = B).
    pub fn table(&self, axis: usize) -> &[u16; 256] {
        &self.tables[axis]
    }

    /// Per-axis bin indices for a pixel.
    #[inline]
    pub fn axis_indices(&self, r: u8, g: u8, b: u8) -> [usize; 3] {
        [
            usize::from(self.tables[0][usize::from(r)]),
            usize::from(self.tables[1][usize::from(g)]),
            usize::from(self.tables[2][usize::from(b)]),
        ]
    }

    /// Flat bin index, R-major then G then B.
    #[inline]
    pub fn quantize(&self, r: u8, g: u8, b: u8) -> usize {
        let [ri, gi, bi] = self.axis_indices(r, g, b);
        let [_, gs, bs] = self.axis_sizes;
        ri * gs * bs + gi * bs + bi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ones(n: usize) -> Vec<bool> {
        vec![true; n]
    }

    fn axis_pattern(pattern: &[u8]) -> Vec<bool> {
        pattern.iter().map(|&b| b == 1).collect()
    }

    #[test]
    fn repair_all_zero_sets_leading_bits() {
        let g = QuantizationGenome::repair(vec![false; 24]).unwrap();
        let set: Vec<usize> = (0..24).filter(|&i| g.bits()[i]).collect();
        assert_eq!(set, vec![0, 8, 16]);
        assert_eq!(g.axis_sizes(), [1, 1, 1]);
    }

    #[test]
    fn repair_is_noop_on_valid_input() {
        let g = QuantizationGenome::repair(ones(24)).unwrap();
        assert_eq!(g.bits(), ones(24).as_slice());
        assert_eq!(g.axis_sizes(), [8, 8, 8]);
    }

    #[test]
    fn repair_sets_cleared_leading_bit() {
        let mut bits = ones(24);
        bits[0] = false;
        let g = QuantizationGenome::repair(bits).unwrap();
        assert!(g.bits()[0]);
        assert_eq!(g.axis_sizes(), [8, 8, 8]);
    }

    #[test]
    fn repair_rejects_bad_length() {
        assert!(matches!(
            QuantizationGenome::repair_with(vec![true; 23], 8),
            Err(Error::InvalidGenome(_))
        ));
        assert!(QuantizationGenome::repair(vec![true; 22]).is_err());
        assert!(QuantizationGenome::repair(Vec::new()).is_err());
    }

    #[test]
    fn decode_all_ones_is_widest_quantization() {
        let map = QuantizationGenome::all_ones(8).unwrap().decode();
        assert_eq!(map.axis_sizes(), [8, 8, 8]);
        for axis in 0..3 {
            for v in 0..256usize {
                assert_eq!(usize::from(map.table(axis)[v]), v / 32);
            }
        }
    }

    #[test]
    fn decode_pairwise_pattern_is_baseline() {
        let bits: Vec<bool> = [1, 0, 1, 0, 1, 0, 1, 0].repeat(3).iter().map(|&b| b == 1).collect();
        let g = QuantizationGenome::repair(bits).unwrap();
        assert_eq!(g, QuantizationGenome::baseline(4, 8).unwrap());
        let map = g.decode();
        assert_eq!(map.axis_sizes(), [4, 4, 4]);
        assert_eq!(map.color_count(), 64);
        for axis in 0..3 {
            for v in 0..256usize {
                assert_eq!(usize::from(map.table(axis)[v]), v / 64);
            }
        }
    }

    #[test]
    fn decode_two_bin_red_axis() {
        let mut bits = axis_pattern(&[1, 1, 0, 0, 0, 0, 0, 0]);
        bits.extend(ones(16));
        let map = QuantizationGenome::repair(bits).unwrap().decode();
        assert_eq!(map.axis_sizes(), [2, 8, 8]);
        for v in 0..256usize {
            let expected = if v < 32 { 0 } else { 1 };
            assert_eq!(map.table(0)[v], expected, "value {v}");
        }
    }

    #[test]
    fn quantize_pixel_examples() {
        let map = QuantizationGenome::baseline(4, 8).unwrap().decode();
        assert_eq!(map.quantize(0, 0, 0), 0);
        assert_eq!(map.quantize(255, 255, 255), 63);
        assert_eq!(map.quantize(100, 200, 50), 28);
    }

    #[test]
    fn dimension_examples() {
        let base = QuantizationGenome::baseline(4, 8).unwrap();
        assert_eq!(base.dimension(Descriptor::Gch), 64);
        assert_eq!(base.dimension(Descriptor::Bic), 128);
        assert_eq!(QuantizationGenome::all_ones(8).unwrap().dimension(Descriptor::Bic), 1024);
    }

    #[test]
    fn baseline_constructor() {
        let four = QuantizationGenome::baseline(4, 8).unwrap();
        assert_eq!(four.axis(1), axis_pattern(&[1, 0, 1, 0, 1, 0, 1, 0]).as_slice());
        assert_eq!(QuantizationGenome::baseline(8, 8).unwrap().bits(), ones(24).as_slice());
        let one = QuantizationGenome::baseline(1, 8).unwrap();
        assert_eq!(one.axis_sizes(), [1, 1, 1]);
        assert!(matches!(QuantizationGenome::baseline(3, 8), Err(Error::InvalidArgument(_))));
        assert!(QuantizationGenome::baseline(0, 8).is_err());
    }

    #[test]
    fn text_format() {
        let g = QuantizationGenome::baseline(4, 8).unwrap();
        let line = g.to_line();
        assert_eq!(line, "101010101010101010101010\n");
        assert_eq!(QuantizationGenome::parse(&line).unwrap(), g);
        assert!(QuantizationGenome::parse("10102\n").is_err());
    }

    fn raw_bits() -> impl Strategy<Value = Vec<bool>> {
        prop::sample::select(vec![1usize, 2, 4, 8, 16])
            .prop_flat_map(|n| prop::collection::vec(any::<bool>(), 3 * n))
    }

    proptest! {
        #[test]
        fn decode_of_repair_is_total_and_monotone(bits in raw_bits()) {
            let g = QuantizationGenome::repair(bits).unwrap();
            let n = g.intervals();
            let map = g.decode();
            let sizes = map.axis_sizes();
            prop_assert!(map.color_count() >= 1 && map.color_count() <= n * n * n);
            for (axis, &size) in sizes.iter().enumerate() {
                let t = map.table(axis);
                prop_assert_eq!(t[0], 0);
                prop_assert_eq!(usize::from(t[255]), size - 1);
                for v in 1..256 {
                    prop_assert!(t[v] >= t[v - 1]);
                    if t[v] != t[v - 1] {
                        prop_assert_eq!(v % (256 / n), 0);
                    }
                }
            }
            prop_assert_eq!(g.dimension(Descriptor::Bic), 2 * g.dimension(Descriptor::Gch));
        }

        #[test]
        fn flat_index_is_a_bijection(bits in prop::collection::vec(any::<bool>(), 12)) {
            let map = QuantizationGenome::repair(bits).unwrap().decode();
            let [rs, gs, bs] = map.axis_sizes();
            // a representative channel value for each bin on each axis
            let reps: Vec<Vec<u8>> = (0..3)
                .map(|a| {
                    let mut r = Vec::new();
                    for v in 0..=255u8 {
                        if usize::from(map.table(a)[usize::from(v)]) == r.len() {
                            r.push(v);
                        }
                    }
                    r
                })
                .collect();
            let mut seen = vec![false; rs * gs * bs];
            for &r in &reps[0] {
                for &g in &reps[1] {
                    for &b in &reps[2] {
                        let idx = map.quantize(r, g, b);
                        prop_assert!(!seen[idx]);
                        seen[idx] = true;
                    }
                }
            }
            prop_assert!(seen.iter().all(|&s| s));
        }

        #[test]
        fn all_ones_diagonal(v in any::<u8>()) {
            let map = QuantizationGenome::all_ones(8).unwrap().decode();
            prop_assert_eq!(map.quantize(v, v, v), usize::from(v / 32) * (64 + 8 + 1));
        }
    }
}
