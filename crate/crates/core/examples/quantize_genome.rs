//! Decode a few quantization genomes and map pixels through them.
//!
//!     cargo run --example quantize_genome

use quantevo::{Descriptor, QuantizationGenome};

fn main() -> quantevo::Result<()> {
    let genomes = [
        ("baseline 4x4x4", QuantizationGenome::baseline(4, 8)?),
        ("widest 8x8x8", QuantizationGenome::all_ones(8)?),
        // red axis split only at 32, green and blue untouched
        ("custom", QuantizationGenome::parse("110000001111111111111111")?),
        // leading bits are forced on, so an all-zero string is a single color
        ("repaired zeros", QuantizationGenome::repair(vec![false; 24])?),
    ];
    for (name, genome) in &genomes {
        let map = genome.decode();
        println!(
            "{name:<15} {genome}  axes {:?}  colors {:>3}  BIC dim {:>4}  GCH dim {:>3}",
            map.axis_sizes(),
            map.color_count(),
            genome.dimension(Descriptor::Bic),
            genome.dimension(Descriptor::Gch),
        );
        for px in [[0u8, 0, 0], [100, 200, 50], [255, 255, 255]] {
            println!("    {px:?} -> bin {}", map.quantize(px[0], px[1], px[2]));
        }
    }
    Ok(())
}
