//! Five-fold comparison of learned quantizations against the baseline,
//! with paired t-tests on P@10 and MAP.
//!
//!     cargo run --release --example cross_validation

use quantevo::experiment::default_limit_sweep;
use quantevo::{kfold_split, run_experiment, synth, Descriptor, ExperimentConfig, GaConfig, Method};

fn main() -> quantevo::Result<()> {
    let data = synth::fine_separable(20, 12, 4);
    let plan = kfold_split(data.len(), 5, 11)?;
    println!("fold sizes {:?}", plan.fold_sizes());
    println!("default GCH limit sweep {:?}", default_limit_sweep(Descriptor::Gch));

    let ga = GaConfig {
        population_size: 60,
        generations: 20,
        seed: 11,
        ..GaConfig::default()
    };
    let cfg = ExperimentConfig::new(Descriptor::Gch, ga, vec![Method::Nla, Method::La(32)]);
    let output = run_experiment(&data, &cfg, &plan)?;
    print!("{}", output.report.summary_table());
    for t in &output.report.t_tests {
        println!(
            "{} vs {} on {:?}: t = {:?}, p = {:.4} -> {}",
            t.method,
            t.against,
            t.metric,
            t.result.t,
            t.result.p_value,
            t.result.verdict.label()
        );
    }
    Ok(())
}
