//! Generalized bounded-variation functionals on grid-sampled periodic
//! functions: p-Λ-variation, BV(q(n)↑q) variation and their multivariable
//! forms, the inclusion criterion M(n), the extremal problem behind it, and
//! construction of step-function witnesses when the criterion fails.

pub mod criterion;
mod engine;
pub mod error;
pub mod extremal;
pub mod forge;
#[cfg(feature = "verification")]
pub mod oracle;
pub mod sequences;
pub mod variation_1d;
pub mod variation_multi;

pub use error::{Error, Result};
pub use sequences::{
    validate_sequences, Divergence, LambdaSequence, LambdaSpec, QLimit, QSequence, QSpec, SequenceSpec,
    ValidationReport,
};
pub use variation_1d::{
    assigned_objective, bvq_variation, lambda_p_variation, oscillation, BvqResult, BvqRow, GridFunction1D,
    Interval, IntervalFamily, Method, SampleModel, Strategy, VariationOptions, VariationResult,
};
pub use variation_multi::{
    bvq_variation_all_axes, bvq_variation_axis, bvq_variation_axis_free, effective_oscillation,
    lambda_sharp_variation, lambda_sharp_variation_axis, AxesBvq, GridFunctionND, SharpVariation,
};
pub use criterion::{
    criterion_scan, criterion_value, sufficiency_bound, CriterionReport, KRange, ScanOptions, Verdict,
};
pub use extremal::{candidate_value, solve_extremal, verify_vertex_optimality, ExtremalProblem, ExtremalSolution};
pub use forge::{
    build_witness, find_stage, witness_divergence_check, witness_norm_bound, ForgeConfig, QIndexing, Witness,
    WitnessStage,
};
