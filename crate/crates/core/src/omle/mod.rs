//! Optimistic maximum-likelihood learning over a finite candidate grid.
//!
//! Each episode plans with the most optimistic candidate still inside the
//! likelihood confidence set, executes that plan on the environment, and
//! updates every candidate's log-likelihood. The multi-step variant also
//! executes open-loop action probes spliced into the plan.

mod beta;
mod candidates;
mod confidence;
mod diagnostics;
mod discretize;
mod run;

pub use beta::beta_default;
pub use candidates::{log_likelihood, CandidateSet, LikelihoodLedger, Sample, LIKELIHOOD_FLOOR, MARGIN_TOL};
pub use confidence::{confidence_set_update, optimistic_plan, ConfidenceSet, Plan, PlanCache};
pub use diagnostics::{mle_validity_check, tv_distance, ValidityRow};
pub use discretize::{optimistic_discretize, parameter_vector, DiscretizedModel};
pub use run::{multistep_omle_run, omle_run, EpisodeRecord, RegretTrace, RunConfig};
