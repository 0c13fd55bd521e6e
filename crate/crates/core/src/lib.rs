//! Probability elicitation engine.
//!
//! Statements about an unknown joint distribution over a discrete belief
//! network are compiled into polynomial (in)equalities over the constituent
//! probabilities. Linear consequences are bounded with LP; the full system is
//! explored by uniform rejection sampling on the simplex, yielding
//! second-order distributions for arbitrary prior or conditional queries.

pub mod bounds;
pub mod canonical;
pub mod consistency;
pub mod focus;
pub mod lp;
pub mod model;
pub mod pipeline;
pub mod sampler;
pub mod session;
pub mod statements;

pub use canonical::{Constraint, ConstraintRelation, ConstraintSystem, Polynomial, Tolerances};
pub use model::{Event, Network, Variable};
pub use statements::{Statement, StatementBody, StatementKind};
