//! Learned color quantization for BIC and GCH color descriptors.
//!
//! A binary genome selects which of `N` reference intervals per RGB axis open
//! a new bin. A genetic search picks the genome that maximizes mean FFP4 of
//! L1 retrieval rankings on a training set, and the resulting quantization
//! drives the descriptor extractors. The [`experiment`] module compares
//! learned quantizations against the uniform 4×4×4 baseline under k-fold
//! cross-validation.

pub mod cli;
pub mod dataset;
pub mod descriptors;
pub mod error;
pub mod experiment;
pub mod ga;
pub mod quantizer;
pub mod retrieval;
pub mod stats;
pub mod synth;

pub use dataset::{decode_ppm, encode_ppm, load_dataset, DatasetManifest, LabeledDataset};
pub use descriptors::{
    classify_pixels, dlog_encode, extract, extract_bic, extract_gch, FeatureVector, PixelClass,
    RasterImage,
};
pub use error::{DecodeError, Error, Result};
pub use experiment::{kfold_split, run_experiment, ExperimentConfig, FoldPlan, Method, MetricsReport};
pub use ga::{evolve, fitness, EvolutionRecord, GaConfig};
pub use quantizer::{ColorMap, Descriptor, QuantizationGenome};
pub use retrieval::{
    ffp4_score, l1_distance, mean_average_precision, mean_ffp4, pr_curve, precision_at_k,
    rank_all, Ffp4Config, Ranking,
};
pub use stats::{paired_t_test, TTestResult, Verdict};
