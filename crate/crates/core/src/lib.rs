//! Simulation and estimation laboratory for click-based learning-to-rank.
//!
//! The crate simulates user click behavior on ranked lists, runs
//! counterfactual relevance estimators and click-model fits against the
//! simulated logs, and verifies at desk scale when those procedures are
//! unbiased or consistent — and when they provably cannot be.

pub mod behavior;
pub mod domain;
pub mod logio;
pub mod numeric;
pub mod seeding;

pub use behavior::{AffineBehavior, BehaviorError, BehaviorModel};
pub use domain::{
    ClickLog, ContextKey, DisplayContext, DomainError, Impression, ItemId, LoggingPolicy, QueryId,
    RankWeights, Ranking, RelevanceTable,
};
