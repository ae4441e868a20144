//! Reproducible Monte Carlo studies.
//!
//! Each study takes a validated [`StudyConfig`], fans replications out over
//! rayon with one random stream per replication (see
//! [`crate::numerics::stream_rng`]), collects results in replication order
//! and returns typed reports plus a [`StudyOutput`] of CSV tables and JSON
//! metrics. Identical configs give bit-identical outputs regardless of the
//! thread count.

mod config;
mod gp_study;
mod gwn_studies;
mod hist_studies;
mod output;
mod rate_studies;

pub use config::{
    ContractionBackend, ContractionSlopeConfig, CounterexampleConfig, DensityGpBvmConfig, GpTriple,
    GwnBvmConfig, GwnBvmModel, GwnCoverageConfig, HistBvmConfig, LengthscaleRule,
    Prop31BoundaryConfig, StudyConfig, StudyKind, SupnormSlopeConfig,
};
pub use gp_study::{run_density_gp_bvm, GpBvmReport, GpTripleResult};
pub use gwn_studies::{
    run_gwn_bvm, run_gwn_coverage, BvmReplication, BvmReport, ExperimentResult, GwnCoverageReport,
    ReplicationRecord, Variant,
};
pub use hist_studies::{
    run_counterexample, run_hist_bvm, CounterexampleBiasRow, CounterexampleReport,
};
pub use output::{
    build_id, summary, table_file_name, write_outputs, Cell, OutputFormats, StudyOutput, Summary,
    Table, SUMMARY_SCHEMA,
};
pub use rate_studies::{
    l1_to_linear_truth, run_contraction_slope, run_prop31_boundary, run_supnorm_slope, BoundaryRow,
    BoundaryVerdict, Prop31Report, SlopeFit, SlopeReport, SupnormReport,
};

use rayon::prelude::*;

use crate::error::Result;

/// Runs `f` on every replication index in parallel and returns the results in index order.
pub(crate) fn par_reps<T, F>(reps: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..reps).into_par_iter().map(f).collect()
}

/// Validates `cfg` and runs the study it describes.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyOutput> {
    cfg.validate()?;
    Ok(match cfg {
        StudyConfig::GwnCoverage(c) => run_gwn_coverage(c)?.to_output(),
        StudyConfig::GwnBvm(c) => run_gwn_bvm(c)?.to_output(StudyKind::GwnBvm),
        StudyConfig::HistBvm(c) => run_hist_bvm(c)?.to_output(StudyKind::HistBvm),
        StudyConfig::HistCounterexample(c) => run_counterexample(c)?.to_output(),
        StudyConfig::DensityGpBvm(c) => run_density_gp_bvm(c)?.to_output(),
        StudyConfig::ContractionSlope(c) => run_contraction_slope(c)?.to_output(),
        StudyConfig::SupnormSlope(c) => run_supnorm_slope(c)?.to_output(),
        StudyConfig::Prop31Boundary(c) => run_prop31_boundary(c)?.to_output(),
    })
}
