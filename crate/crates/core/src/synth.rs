//! Seeded synthetic datasets built from per-class color ranges.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabeledDataset;
use crate::descriptors::RasterImage;

/// Inclusive per-channel range `lo..=hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColorRange {
    pub lo: [u8; 3],
    pub hi: [u8; 3],
}

impl ColorRange {
    pub fn new(lo: [u8; 3], hi: [u8; 3]) -> Self {
        ColorRange { lo, hi }
    }

    pub fn exact(color: [u8; 3]) -> Self {
        ColorRange { lo: color, hi: color }
    }

    /// `center ± spread` per channel, clamped to 0..=255.
    pub fn around(center: [u8; 3], spread: u8) -> Self {
        ColorRange {
            lo: center.map(|c| c.saturating_sub(spread)),
            hi: center.map(|c| c.saturating_add(spread)),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> [u8; 3] {
        [0, 1, 2].map(|i| rng.gen_range(self.lo[i].min(self.hi[i])..=self.hi[i].max(self.lo[i])))
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticClass {
    pub name: String,
    pub colors: Vec<ColorRange>,
}

/// Recipe for a synthetic dataset. Images are painted in `block × block`
/// tiles; each tile takes a background color with probability
/// `background_fraction`, otherwise one of its class's colors.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub width: usize,
    pub height: usize,
    pub block: usize,
    pub per_class: usize,
    pub background: Vec<ColorRange>,
    pub background_fraction: f64,
    pub classes: Vec<SyntheticClass>,
}

impl SyntheticSpec {
    pub fn generate(&self, seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let block = self.block.max(1);
        let mut items = Vec::new();
        for class in &self.classes {
            for i in 0..self.per_class {
                let bw = self.width.div_ceil(block);
                let bh = self.height.div_ceil(block);
                let tiles: Vec<[u8; 3]> = (0..bw * bh)
                    .map(|_| {
                        let palette = if !self.background.is_empty()
                            && rng.gen_bool(self.background_fraction)
                        {
                            &self.background
                        } else {
                            &class.colors
                        };
                        palette.choose(&mut rng).expect("non-empty palette").sample(&mut rng)
                    })
                    .collect();
                let image = RasterImage::from_fn(self.width, self.height, |x, y| {
                    tiles[(y / block) * bw + x / block]
                })
                .expect("positive size");
                items.push((format!("{}/{}_{i:03}.ppm", class.name, class.name), image, class.name.clone()));
            }
        }
        LabeledDataset::new(items).expect("synthetic dataset has at least 2 unique items")
    }
}

/// Center of baseline (64-wide) bin `i` on one axis.
fn bin_center(i: usize) -> u8 {
    (i * 64 + 32) as u8
}

/// Classes whose colors each stay inside one distinct 64-wide RGB bin, so the
/// 4-per-axis quantization ranks every image perfectly.
pub fn distinct_baseline_bins(classes: usize, per_class: usize, size: usize, seed: u64) -> LabeledDataset {
    assert!(classes <= 64, "at most 64 distinct baseline bins");
    let classes = (0..classes)
        .map(|c| {
            // spread classes over the cube: stride 21 is coprime with 64
            let bin = (c * 21) % 64;
            let center = [bin_center(bin / 16), bin_center((bin / 4) % 4), bin_center(bin % 4)];
            SyntheticClass {
                name: format!("c{c}"),
                colors: vec![ColorRange::around(center, 20)],
            }
        })
        .collect();
    SyntheticSpec {
        width: size,
        height: size,
        block: 1,
        per_class,
        background: Vec::new(),
        background_fraction: 0.0,
        classes,
    }
    .generate(seed)
}

/// Two classes whose colors share every 64-wide bin but fall on opposite
/// sides of the red boundary at 32, plus a third class that is distinct at
/// any resolution. Tiles of shared background noise are mixed in. Every
/// color range stays inside one 32-wide interval per channel.
pub fn fine_separable(per_class: usize, size: usize, seed: u64) -> LabeledDataset {
    let class = |name: &str, colors: Vec<ColorRange>| SyntheticClass {
        name: name.into(),
        colors,
    };
    SyntheticSpec {
        width: size,
        height: size,
        block: 2,
        per_class,
        background: vec![
            ColorRange::new([130, 200, 4], [158, 222, 28]),
            ColorRange::new([200, 130, 228], [222, 158, 250]),
        ],
        background_fraction: 0.35,
        classes: vec![
            class("dark", vec![ColorRange::new([2, 70, 132], [28, 92, 156])]),
            class("light", vec![ColorRange::new([36, 70, 132], [60, 92, 156])]),
            class("other", vec![ColorRange::new([164, 8, 36], [190, 28, 60])]),
        ],
    }
    .generate(seed)
}

/// Classes with random multi-color palettes; no structure is promised.
pub fn random_palettes(classes: usize, per_class: usize, size: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    let classes = (0..classes)
        .map(|c| SyntheticClass {
            name: format!("k{c}"),
            colors: (0..3)
                .map(|_| ColorRange::around([rng.gen(), rng.gen(), rng.gen()], 24))
                .collect(),
        })
        .collect();
    SyntheticSpec {
        width: size,
        height: size,
        block: 2,
        per_class,
        background: vec![ColorRange::new([0, 0, 0], [255, 255, 255])],
        background_fraction: 0.3,
        classes,
    }
    .generate(seed)
}
