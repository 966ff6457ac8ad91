//! Rank a synthetic collection by L1 distance and score the rankings.
//!
//!     cargo run --example retrieval_metrics

use quantevo::retrieval::{average_precision, rank_every_query};
use quantevo::{extract, mean_average_precision, mean_ffp4, pr_curve, precision_at_k, synth};
use quantevo::{Descriptor, Ffp4Config, QuantizationGenome};

fn main() -> quantevo::Result<()> {
    let data = synth::random_palettes(4, 6, 16, 3);
    let labels = data.labels();
    let map = QuantizationGenome::baseline(4, 8)?.decode();
    let features = data
        .items()
        .iter()
        .map(|item| extract(&item.image, &map, Descriptor::Bic))
        .collect::<quantevo::Result<Vec<_>>>()?;

    let rankings = rank_every_query(&features)?;
    let first = &rankings[0];
    println!("query {}:", data.items()[0].id);
    for &(item, distance) in first.items().iter().take(5) {
        println!("  {:<16} L1 = {distance}", data.items()[item].id);
    }
    println!("  P@5 = {:.3}", precision_at_k(first, &labels, 5)?);
    println!("  AP  = {:.3}", average_precision(first, &labels).unwrap_or(0.0));

    let map_score = mean_average_precision(&rankings, &labels)?;
    println!("MAP  = {:.4}", map_score.value);
    println!("FFP4 = {:.4}", mean_ffp4(&features, &labels, &Ffp4Config::default())?);
    println!("interpolated PR curve:");
    for (recall, precision) in pr_curve(&rankings, &labels)?.value {
        println!("  {recall:.1} {precision:.4}");
    }
    Ok(())
}
