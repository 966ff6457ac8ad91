//! Learn a quantization for a synthetic domain with the genetic search,
//! unconstrained and with a dimension limit.
//!
//!     cargo run --release --example evolve_quantization

use quantevo::{evolve, fitness, synth, Descriptor, GaConfig, QuantizationGenome};

fn main() -> quantevo::Result<()> {
    let data = synth::random_palettes(5, 8, 16, 2);
    let base_cfg = GaConfig {
        population_size: 100,
        generations: 30,
        seed: 7,
        ..GaConfig::default()
    };
    let baseline = QuantizationGenome::baseline(4, 8)?;
    println!(
        "baseline fitness {:.4} (dim {})",
        fitness(&baseline, &data, Descriptor::Bic, &base_cfg)?,
        baseline.dimension(Descriptor::Bic)
    );

    for limit in [None, Some(64)] {
        let cfg = GaConfig {
            dimension_limit: limit,
            ..base_cfg.clone()
        };
        let record = evolve(&data, Descriptor::Bic, &cfg)?;
        let label = limit.map_or("unconstrained".to_string(), |l| format!("limit {l}"));
        println!(
            "{label}: best {} fitness {:.4} dim {} (first seen in generation {})",
            record.best_genome,
            record.best_fitness,
            record.best_dimension(),
            record.best_generation
        );
        for g in record.generations.iter().step_by(10) {
            println!(
                "    gen {:>3} best {:.4} mean {:.4}",
                g.generation, g.best_fitness, g.mean_fitness
            );
        }
    }
    Ok(())
}
