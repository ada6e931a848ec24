//! Observable operator models.
//!
//! For a model `theta` and window `m`, the operators are
//! `B_h(o, a) = M_{h+1} T_{h,a} diag(O_h(o|.)) M_h^+` with `b0 = M_1 mu1`,
//! where `M_h` is the m-step emission-action matrix (`M_h = O_h` when
//! `m = 1`). Trajectory probabilities are products of these operators
//! applied to `b0`.

mod bounds;
mod diagnostics;
mod emission_action;
mod operators;

pub use bounds::{operator_norm_11, product_error_decomposition, ProductErrorBound};
pub use diagnostics::{
    find_confusable_mixtures, multistep_margins, multistep_revealing_margin, weakly_revealing_margin,
    weakly_revealing_margins,
};
pub use emission_action::{build_m_step_matrix, EmissionActionMatrix};
pub(crate) use emission_action::decode_digits;
pub use operators::{
    belief_vector, multi_step_operators, single_step_operators, trajectory_probability_oom,
    ObservableOperatorModel, OomDump, DEFAULT_SVD_TOL,
};
