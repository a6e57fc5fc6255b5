//! Distance components (DISCO) analysis: a nonparametric generalization of
//! ANOVA/MANOVA that decomposes the total dispersion of alpha-power
//! Euclidean distances into between-sample and within-sample components and
//! tests equality of K multivariate distributions by a permutation test.
//!
//! The index alpha ranges over (0, 2]; alpha = 2 recovers the classical
//! ANOVA decomposition, while any alpha in (0, 2) yields a test that is
//! consistent against general alternatives.

pub mod cli_io;
pub mod core_stats;
pub mod decomposition;
pub mod error;
pub mod factorial;
pub mod inference;
pub mod simulation;

pub use core_stats::{
    d_alpha, gini_mean, linearized_within_sums, pairwise_alpha_distances, DistanceMatrix,
    IndexGroups, ResponseMatrix,
};
pub use decomposition::{
    between_via_pairs, classical_anova, gini_sum_matrix, oneway_disco, oneway_disco_from_data,
    oneway_disco_linearized, AnovaResult, DiscoComponents, GiniSumMatrix,
};
pub use error::{DiscoError, Result};
pub use factorial::{
    cross_levels, multiway_disco, parse_formula, DiscoRow, DiscoTable, Factor, ModelFormula,
};
pub use inference::{
    cell_mean_residuals, conservative_critical_value, disco_test, permutation_pvalue,
    PermutationResult,
};
pub use simulation::{
    estimate_power, sample_gamma_lognormal, sample_noncentral_t, Alternative, PowerConfig,
    PowerResult,
};
