//! Evaluation: tier proportions of planned paths, margin ranking error,
//! checks of the equivalence and ordering conditions, and an exhaustive
//! verifier for optimal-path alignment.

pub mod nc;
pub mod ranking;
pub mod suite;
pub mod theorem;
pub mod tiers;

pub use nc::{check_nc, check_nc1, check_nc2, label_medians, medians_sorted, NcConfig, NcReport};
pub use ranking::{margin_ranking_error, margin_ranking_error_with, pair_error, Margin, RANKING_POINTS};
pub use theorem::{verify_theorem, TheoremConfig, TheoremInstance, TheoremReport, Witness};
pub use tiers::{field_tier_proportions, tier_proportions, Tier, TierMap, TierReport};

use crate::data::DataError;
use crate::model::ModelError;
use crate::plan::PlanError;
use crate::world::WorldError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("need at least 2 valid points, found {0}")]
    TooFewPoints(usize),
    #[error("exact path costs overflow 128-bit integers")]
    Overflow,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    World(#[from] WorldError),
}
