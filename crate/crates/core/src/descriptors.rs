//! GCH and BIC color descriptors over an arbitrary [`ColorMap`].

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::quantizer::{ColorMap, Descriptor};

/// An 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(RasterImage {
            width,
            height,
            pixels,
        })
    }

    /// Image filled with a single color.
    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![color; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }
}

/// Output of a descriptor extractor.
///
/// GCH values are reals in `[0, 1]`; BIC values are integer dLog codes stored as `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    descriptor: Descriptor,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(descriptor: Descriptor, values: Vec<f64>) -> Self {
        FeatureVector { descriptor, values }
    }

    pub fn descriptor(&self) -> Descriptor {
        self.descriptor
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// One line of the feature file: tag, dimension, values.
    pub fn to_line(&self) -> String {
        let mut line = format!("{} {}", self.descriptor.tag(), self.values.len());
        for v in &self.values {
            // `{}` on f64 is the shortest round-tripping decimal, so output is stable
            write!(line, " {v}").expect("write to String");
        }
        line
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let mut fields = line.split_whitespace();
        let descriptor: Descriptor = fields
            .next()
            .ok_or_else(|| Error::InvalidInput("empty feature line".into()))?
            .parse()?;
        let dimension: usize = fields
            .next()
            .ok_or_else(|| Error::InvalidInput("missing dimension".into()))?
            .parse()
            .map_err(|e| Error::InvalidInput(format!("bad dimension: {e}")))?;
        let values = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("bad value {f:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != dimension {
            return Err(Error::InvalidInput(format!(
                "declared dimension {dimension} but found {} values",
                values.len()
            )));
        }
        Ok(FeatureVector { descriptor, values })
    }
}

/// Raw pixel counts per quantized color.
pub fn color_histogram(image: &RasterImage, map: &ColorMap) -> Vec<u32> {
    let mut counts = vec![0u32; map.color_count()];
    for &[r, g, b] in image.pixels() {
        counts[map.quantize(r, g, b)] += 1;
    }
    counts
}

/// Global color histogram, normalized by its maximum bin.
pub fn extract_gch(image: &RasterImage, map: &ColorMap) -> Result<FeatureVector> {
    let counts = color_histogram(image, map);
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(Error::InvalidInput("image has no pixels".into()));
    }
    let max = f64::from(max);
    let values = counts.iter().map(|&c| f64::from(c) / max).collect();
    Ok(FeatureVector::new(Descriptor::Gch, values))
}

/// Pixel class under BIC segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelClass {
    Border,
    Interior,
}

/// A pixel is interior when every in-image 4-neighbor has its quantized color.
/// Neighbors outside the raster never demote a pixel.
pub fn classify_pixels(image: &RasterImage, map: &ColorMap) -> Vec<PixelClass> {
    let (w, h) = (image.width(), image.height());
    let quantized: Vec<usize> = image
        .pixels()
        .iter()
        .map(|&[r, g, b]| map.quantize(r, g, b))
        .collect();
    let mut classes = Vec::with_capacity(quantized.len());
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let c = quantized[i];
            let differs = (x > 0 && quantized[i - 1] != c)
                || (x + 1 < w && quantized[i + 1] != c)
                || (y > 0 && quantized[i - w] != c)
                || (y + 1 < h && quantized[i + w] != c);
            classes.push(if differs {
                PixelClass::Border
            } else {
                PixelClass::Interior
            });
        }
    }
    classes
}

/// Border and interior histograms before normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BicCounts {
    pub border: Vec<u32>,
    pub interior: Vec<u32>,
}

impl BicCounts {
    pub fn total(&self) -> u64 {
        self.border
            .iter()
            .chain(&self.interior)
            .map(|&c| u64::from(c))
            .sum()
    }
}

pub fn bic_counts(image: &RasterImage, map: &ColorMap) -> BicCounts {
    let colors = map.color_count();
    let mut border = vec![0u32; colors];
    let mut interior = vec![0u32; colors];
    let classes = classify_pixels(image, map);
    for (&[r, g, b], class) in image.pixels().iter().zip(classes) {
        let bin = map.quantize(r, g, b);
        match class {
            PixelClass::Border => border[bin] += 1,
            PixelClass::Interior => interior[bin] += 1,
        }
    }
    BicCounts { border, interior }
}

/// BIC: border histogram then interior histogram, both divided by their
/// common maximum and dLog coded.
pub fn extract_bic(image: &RasterImage, map: &ColorMap) -> Result<FeatureVector> {
    let counts = bic_counts(image, map);
    let max = counts
        .border
        .iter()
        .chain(&counts.interior)
        .copied()
        .max()
        .unwrap_or(0);
    if max == 0 {
        return Err(Error::InvalidInput("image has no pixels".into()));
    }
    let values = counts
        .border
        .iter()
        .chain(&counts.interior)
        .map(|&c| f64::from(dlog_code_ratio(c, max)))
        .collect();
    Ok(FeatureVector::new(Descriptor::Bic, values))
}

pub fn extract(image: &RasterImage, map: &ColorMap, descriptor: Descriptor) -> Result<FeatureVector> {
    match descriptor {
        Descriptor::Bic => extract_bic(image, map),
        Descriptor::Gch => extract_gch(image, map),
    }
}

/// Discrete log code of a normalized value: with `s = 255·value`, 0 for
/// `s = 0`, 1 for `s ≤ 1`, otherwise `1 + ⌈log2 s⌉` (so 9 covers `(128, 255]`).
pub fn dlog_encode(value: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidInput(format!(
            "dlog input {value} outside [0, 1]"
        )));
    }
    let scaled = value * 255.0;
    if scaled == 0.0 {
        return Ok(0);
    }
    let mut code = 1u8;
    let mut bound = 1.0;
    while scaled > bound {
        code += 1;
        bound *= 2.0;
    }
    Ok(code)
}

/// [`dlog_encode`] of `count / max`, evaluated in exact integer arithmetic.
pub(crate) fn dlog_code_ratio(count: u32, max: u32) -> u8 {
    debug_assert!(count <= max && max > 0);
    if count == 0 {
        return 0;
    }
    let scaled = 255 * u64::from(count);
    let mut code = 1u8;
    let mut bound = u64::from(max);
    while scaled > bound {
        code += 1;
        bound *= 2;
    }
    code
}
