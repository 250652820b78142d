//! Sorted-ℓ1 penalized regression with weight sequences that control the
//! false discovery rate, the probability of k or more false selections
//! (k-FWER), and the false discovery proportion (FDP) under orthogonal
//! designs — plus the classical stepdown baselines and a seeded Monte Carlo
//! experiment harness.
//!
//! The numerical core is generic over the scalar type ([`Scalar`], `f32` or
//! `f64`); the `*F64` aliases below cover the common case.
//!
//! Quick tour:
//!
//! * [`sorted_l1`] — the sorted-ℓ1 norm and its exact proximal operator;
//! * [`lambda`] — FDR / k-FWER / FDP weight sequences and the
//!   variance-inflation corrections for non-orthogonal designs;
//! * [`solver`] — accelerated proximal gradient with duality-gap stopping;
//! * [`stepdown`] — the p-value stepdown baselines;
//! * [`metrics`] — selection scoring and Monte Carlo aggregation;
//! * [`simgen`] — seeded generators for the three experiment designs;
//! * [`harness`] — config-driven experiment grids with CSV reports.

// validation uses !(x > lo && x < hi) so NaN fails closed
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod float;
pub mod harness;
pub mod lambda;
pub mod metrics;
pub mod simgen;
pub mod solver;
pub mod sorted_l1;
pub mod special;
pub mod stepdown;

pub use error::{Result, SlopeError};
pub use float::Scalar;

pub use harness::{
    emit_kfwer_heatmap, emit_report, run_experiment, AmplitudeMode, CorrectionKind, DesignKind,
    ExperimentConfig, Method, ReportRow,
};
pub use lambda::{
    gaussian_correction, lambda_bh, lambda_fdp, lambda_kfwer, monte_carlo_correction,
    wishart_weight, MonteCarloCorrected, SequenceSpec,
};
pub use metrics::{aggregate, fdp, score_selection, ExperimentReport, SelectionOutcome};
pub use simgen::{
    compound_symmetry_inv_sqrt, gen_correlated_means, gen_gaussian_design, gen_orthogonal,
    CompoundSymmetry, CorrelatedMeansInstance, RngStream,
};
pub use solver::{
    duality_gap, solve_slope, support_of, Design, Problem, SlopeSolution, SolverOptions,
};
pub use sorted_l1::{
    prox_sorted_l1, sorted_l1_dual_infeasibility, sorted_l1_norm, LambdaSequence, Provenance,
};
pub use special::{std_normal_cdf, std_normal_quantile};
pub use stepdown::{
    fdp_thresholds, kfwer_thresholds, stepdown_select, two_sided_p, ThresholdSequence,
};

/// `f64` aliases for the generic core types.
pub type LambdaSequenceF64 = LambdaSequence<f64>;
pub type ProblemF64 = Problem<f64>;
pub type DesignF64 = Design<f64>;
pub type SlopeSolutionF64 = SlopeSolution<f64>;
pub type SolverOptionsF64 = SolverOptions<f64>;
pub type SequenceSpecF64 = SequenceSpec<f64>;
pub type ExperimentReportF64 = ExperimentReport<f64>;
