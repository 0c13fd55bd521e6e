//! The expert-facing statement vocabulary.
//!
//! A statement is either quantitative (point estimates, intervals and
//! comparisons of prior or conditional probabilities) or qualitative
//! (influences and synergies between variables). Statements are written in
//! a small line-oriented DSL, see [`dsl`].

pub mod dsl;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::Event;

pub use dsl::{
    format_document, format_network, format_query, format_statement, parse_document, parse_query,
    parse_statement_line, Document, DslError, DslErrorKind,
};
pub use validate::{validate, Finding, FindingKind, Severity};

/// Sign of a qualitative influence or synergy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
    Zero,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
            Sign::Zero => '0',
        }
    }
}

/// Comparison relation as written by the expert.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Relation::Lt | Relation::Gt)
    }
}

/// A prior `Pr(target)` or a conditional `Pr(target | given)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProbTerm {
    pub target: Event,
    pub given: Option<Event>,
}

impl ProbTerm {
    pub fn prior(target: Event) -> Self {
        Self {
            target,
            given: None,
        }
    }

    pub fn conditional(target: Event, given: Event) -> Self {
        Self {
            target,
            given: Some(given),
        }
    }

    pub fn is_conditional(&self) -> bool {
        self.given.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StatementBody {
    /// `Pr(term) = p`
    Point { term: ProbTerm, p: f64 },
    /// `lo <= Pr(term) <= hi`
    Interval { term: ProbTerm, lo: f64, hi: f64 },
    /// `a1 * Pr(lhs) rel a2 * Pr(rhs)`
    Comparison {
        lhs_coef: f64,
        lhs: ProbTerm,
        relation: Relation,
        rhs_coef: f64,
        rhs: ProbTerm,
    },
    /// `S±(source, target)`
    Influence {
        sign: Sign,
        source: usize,
        target: usize,
    },
    /// `Y±({first, second}, target)`
    AdditiveSynergy {
        sign: Sign,
        pair: (usize, usize),
        target: usize,
    },
    /// `X±({first, second}, effect)`; the effect is a value of a common child.
    ProductSynergy {
        sign: Sign,
        pair: (usize, usize),
        effect_var: usize,
        effect_value: usize,
    },
}

/// The eight statement kinds, used for reporting and robustness ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StatementKind {
    PointPrior,
    PointConditional,
    IntervalPrior,
    IntervalConditional,
    Comparison,
    Influence,
    AdditiveSynergy,
    ProductSynergy,
}

impl StatementKind {
    pub fn is_qualitative(self) -> bool {
        matches!(
            self,
            StatementKind::Influence
                | StatementKind::AdditiveSynergy
                | StatementKind::ProductSynergy
        )
    }
}

impl fmt::Display for StatementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StatementKind::PointPrior => "point-prior",
            StatementKind::PointConditional => "point-conditional",
            StatementKind::IntervalPrior => "interval-prior",
            StatementKind::IntervalConditional => "interval-conditional",
            StatementKind::Comparison => "comparison",
            StatementKind::Influence => "influence",
            StatementKind::AdditiveSynergy => "additive-synergy",
            StatementKind::ProductSynergy => "product-synergy",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    /// Stable identifier, e.g. `s3`.
    pub id: String,
    /// 1-based source line; 0 when the statement did not come from a file.
    pub line: usize,
    pub body: StatementBody,
    /// Equality tolerance override for this statement.
    pub tol_eq: Option<f64>,
}

impl Statement {
    pub fn new(id: impl Into<String>, body: StatementBody) -> Self {
        Self {
            id: id.into(),
            line: 0,
            body,
            tol_eq: None,
        }
    }

    pub fn kind(&self) -> StatementKind {
        match &self.body {
            StatementBody::Point { term, .. } if term.is_conditional() => {
                StatementKind::PointConditional
            }
            StatementBody::Point { .. } => StatementKind::PointPrior,
            StatementBody::Interval { term, .. } if term.is_conditional() => {
                StatementKind::IntervalConditional
            }
            StatementBody::Interval { .. } => StatementKind::IntervalPrior,
            StatementBody::Comparison { .. } => StatementKind::Comparison,
            StatementBody::Influence { .. } => StatementKind::Influence,
            StatementBody::AdditiveSynergy { .. } => StatementKind::AdditiveSynergy,
            StatementBody::ProductSynergy { .. } => StatementKind::ProductSynergy,
        }
    }

    /// Every variable the statement mentions.
    pub fn variables(&self) -> Vec<usize> {
        let mut vars = Vec::new();
        let mut term_vars = |t: &ProbTerm| {
            vars.extend(t.target.variables());
            if let Some(g) = &t.given {
                vars.extend(g.variables());
            }
        };
        match &self.body {
            StatementBody::Point { term, .. } | StatementBody::Interval { term, .. } => {
                term_vars(term)
            }
            StatementBody::Comparison { lhs, rhs, .. } => {
                term_vars(lhs);
                term_vars(rhs);
            }
            StatementBody::Influence { source, target, .. } => {
                vars.extend([*source, *target]);
            }
            StatementBody::AdditiveSynergy { pair, target, .. } => {
                vars.extend([pair.0, pair.1, *target]);
            }
            StatementBody::ProductSynergy {
                pair, effect_var, ..
            } => {
                vars.extend([pair.0, pair.1, *effect_var]);
            }
        }
        vars.sort_unstable();
        vars.dedup();
        vars
    }
}
