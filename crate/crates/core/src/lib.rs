//! Multiple-source adaptation: combine frozen per-domain predictors with
//! weights derived from a domain posterior (discriminative) or per-domain
//! density estimates (generative), and choose the mixture parameter so the
//! combination performs evenly across the sources.

// Negated comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combine;
pub mod data;
pub mod error;
pub mod kde;
pub mod loss;
pub mod maxent;
pub mod numeric;
pub mod renyi;
pub mod simplex;
pub mod synthbench;
pub mod zsolve;

pub use combine::{
    dmsa_predict, gmsa_predict, induce_densities, map_z_prime, mix_weights, DensityModel, DomainPosterior,
    PredictorSpec, SourcePredictor, SourcePredictorSet,
};
pub use data::{Dataset, Sample};
pub use error::{Error, Result};
pub use kde::{kde_fit, select_bandwidth_cv, KdeDensities, KdeModel};
pub use loss::{LossKind, LossModel, LossSpec, Output};
pub use maxent::{train_maxent, FeatureMap, MaxentModel};
pub use renyi::{renyi_d, renyi_exp, triangle_slack, FiniteDistribution};
pub use simplex::MixtureWeights;
pub use synthbench::{run_synthetic, ExperimentConfig, ExperimentReport};
pub use zsolve::{grid_search_z, iterative_solve_z, z_objective, ZObjectiveContext, ZProblem, ZSolution};
