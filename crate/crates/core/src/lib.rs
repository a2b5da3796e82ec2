//! Max-min fair assignment of reviewers to papers.
//!
//! The central routine is [`assign::peer_review_4all`], which builds
//! candidate assignments from incremental max-flow computations and fixes
//! the worst-off papers one group at a time. Baselines, a small exact
//! solver, score models and experiment harnesses live alongside it.

pub mod assign;
pub mod baselines;
pub mod coverage;
pub mod error;
pub mod experiments;
pub mod extreal;
pub mod fixtures;
pub mod flow;
pub mod instance;
pub mod io;
pub mod metrics;
pub mod statmodel;
pub mod transform;

pub use assign::{peer_review_4all, Mode, Pr4aOptions, Pr4aTrace};
pub use error::{Error, Result};
pub use extreal::ExtReal;
pub use instance::{Assignment, Cell, LoadConstraints, SimilarityMatrix};
pub use transform::{NoiseFn, NoiseModel, Transform};
