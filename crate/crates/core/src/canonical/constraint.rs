use std::fmt;

use serde::{Deserialize, Serialize};

use super::Polynomial;

/// Stored relation of `lhs ⋈ rhs`; `≤` and `<` are stored negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintRelation {
    Eq,
    Ge,
    Gt,
}

impl ConstraintRelation {
    pub fn symbol(self) -> &'static str {
        match self {
            ConstraintRelation::Eq => "=",
            ConstraintRelation::Ge => ">=",
            ConstraintRelation::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Axiom,
    Main,
    Positivity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Source statement id; `None` for axioms.
    pub statement: Option<String>,
    pub role: Role,
}

impl Provenance {
    pub fn axiom() -> Self {
        Self {
            statement: None,
            role: Role::Axiom,
        }
    }

    pub fn of(statement: &str, role: Role) -> Self {
        Self {
            statement: Some(statement.to_string()),
            role,
        }
    }
}

/// Acceptance tolerances for constraint evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Half-width of the band around equalities.
    pub eq: f64,
    /// Slack allowed below zero for non-strict inequalities.
    pub ineq: f64,
}

pub const DEFAULT_TOL_EQ: f64 = 2e-3;
pub const DEFAULT_TOL_INEQ: f64 = 1e-12;

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eq: DEFAULT_TOL_EQ,
            ineq: DEFAULT_TOL_INEQ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub lhs: Polynomial,
    pub relation: ConstraintRelation,
    pub rhs: f64,
    pub provenance: Provenance,
    /// Equality band override from the source statement.
    pub tol_eq: Option<f64>,
    /// For equalities obtained by clearing denominators: the product of the
    /// cleared denominators. The band is scaled by its value so that the
    /// tolerance is measured on the original (conditional) probabilities.
    pub band_scale: Option<Polynomial>,
    /// Set by `normalize` when the axioms already imply the constraint.
    pub redundant: bool,
}

impl Constraint {
    pub fn new(
        lhs: Polynomial,
        relation: ConstraintRelation,
        rhs: f64,
        provenance: Provenance,
    ) -> Self {
        Self {
            lhs,
            relation,
            rhs,
            provenance,
            tol_eq: None,
            band_scale: None,
            redundant: false,
        }
    }

    pub fn strict(&self) -> bool {
        self.relation == ConstraintRelation::Gt
    }

    pub fn degree(&self) -> usize {
        self.lhs.degree()
    }

    pub fn is_linear(&self) -> bool {
        self.degree() <= 1
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        self.lhs.eval(x) - self.rhs
    }

    /// Equality band half-width at `x`.
    pub fn band(&self, x: &[f64], tolerances: &Tolerances) -> f64 {
        let tau = self.tol_eq.unwrap_or(tolerances.eq);
        match &self.band_scale {
            Some(scale) => tau * scale.eval(x).max(0.0),
            None => tau,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.relation.symbol(), self.rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub satisfied: bool,
    pub residual: f64,
}

/// Evaluates one constraint at `x`: equalities within their band, non-strict
/// inequalities with `tolerances.ineq` slack, strict inequalities exactly.
pub fn eval_constraint(constraint: &Constraint, x: &[f64], tolerances: &Tolerances) -> Evaluation {
    let residual = constraint.residual(x);
    let satisfied = match constraint.relation {
        ConstraintRelation::Eq => residual.abs() <= constraint.band(x, tolerances),
        ConstraintRelation::Ge => residual >= -tolerances.ineq,
        ConstraintRelation::Gt => residual > 0.0,
    };
    Evaluation {
        satisfied,
        residual,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSystem {
    pub k: usize,
    pub constraints: Vec<Constraint>,
    pub dedup_applied: bool,
}

impl ConstraintSystem {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Constraints contributed by statement `id`.
    pub fn from_statement<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Constraint> + 'a {
        self.constraints
            .iter()
            .filter(move |c| c.provenance.statement.as_deref() == Some(id))
    }

    /// Copy of the system without the constraints of statement `id`.
    pub fn without_statement(&self, id: &str) -> ConstraintSystem {
        ConstraintSystem {
            k: self.k,
            constraints: self
                .constraints
                .iter()
                .filter(|c| c.provenance.statement.as_deref() != Some(id))
                .cloned()
                .collect(),
            dedup_applied: self.dedup_applied,
        }
    }

    pub fn is_satisfied(&self, x: &[f64], tolerances: &Tolerances) -> bool {
        self.constraints
            .iter()
            .all(|c| eval_constraint(c, x, tolerances).satisfied)
    }

    /// Index of the first violated constraint at `x`.
    pub fn first_violation(&self, x: &[f64], tolerances: &Tolerances) -> Option<usize> {
        self.constraints
            .iter()
            .position(|c| !eval_constraint(c, x, tolerances).satisfied)
    }
}
