//! Desk-scale laboratory for learning tabular POMDPs with optimistic maximum
//! likelihood estimation.
//!
//! The crate is organised around five areas:
//!
//! - [`pomdp`]: exact model representation, simulation, trajectory
//!   probabilities, policy evaluation and exact planning.
//! - [`oom`]: observable-operator-model construction (single-step and
//!   m-step), weakly-revealing diagnostics and the operator inequalities.
//! - [`omle`]: the OMLE and multi-step OMLE learners over a finite candidate
//!   grid, with likelihood ledgers, confidence sets and validity diagnostics.
//! - [`eluder`]: exhaustive l1 / l2 eluder-dimension search for finite
//!   function classes and the pigeonhole bound.
//! - [`instances`]: combinatorial locks, random weakly revealing models and
//!   block MDPs.
//!
//! Steps, states, observations and actions are 0-based everywhere.

pub mod eluder;
pub mod error;
pub mod instances;
pub mod linalg;
pub mod omle;
pub mod oom;
pub mod pomdp;

pub use error::{Error, Result};
pub use pomdp::{
    Dims, EnumerationCap, HistoryPolicy, Step, TabularPomdp, Trajectory, TrajectoryDistribution,
};
