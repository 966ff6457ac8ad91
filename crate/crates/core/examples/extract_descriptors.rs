//! Compute BIC and GCH for a small synthetic image under two quantizations.
//!
//!     cargo run --example extract_descriptors

use quantevo::{classify_pixels, extract_bic, extract_gch, PixelClass, QuantizationGenome, RasterImage};

fn main() -> quantevo::Result<()> {
    // left half dark red, right half a slightly lighter red, plus one stray pixel
    let image = RasterImage::from_fn(8, 6, |x, y| match (x, y) {
        (6, 4) => [250, 250, 250],
        (x, _) if x < 4 => [20, 10, 10],
        _ => [45, 10, 10],
    })?;

    for (name, genome) in [
        ("baseline", QuantizationGenome::baseline(4, 8)?),
        ("all ones", QuantizationGenome::all_ones(8)?),
    ] {
        let map = genome.decode();
        let classes = classify_pixels(&image, &map);
        let border = classes.iter().filter(|&&c| c == PixelClass::Border).count();
        println!("{name}: {border} border / {} interior pixels", classes.len() - border);

        let gch = extract_gch(&image, &map)?;
        let bic = extract_bic(&image, &map)?;
        let nonzero = |v: &[f64]| -> Vec<(usize, f64)> {
            v.iter().copied().enumerate().filter(|&(_, x)| x != 0.0).collect()
        };
        println!("  GCH dim {:>4} nonzero {:?}", gch.dimension(), nonzero(gch.values()));
        println!("  BIC dim {:>4} nonzero {:?}", bic.dimension(), nonzero(bic.values()));
    }
    Ok(())
}
