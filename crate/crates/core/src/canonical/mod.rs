//! Canonical form: statements as (in)equalities over constituent
//! probabilities.

mod compile;
mod constraint;
mod normalize;
mod polynomial;

pub use compile::{compile_axioms, compile_statement, compile_system, CompileError};
pub use constraint::{
    eval_constraint, Constraint, ConstraintRelation, ConstraintSystem, Evaluation, Provenance,
    Role, Tolerances, DEFAULT_TOL_EQ, DEFAULT_TOL_INEQ,
};
pub use normalize::normalize;
pub use polynomial::Polynomial;
