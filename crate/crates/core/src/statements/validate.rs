use serde::{Deserialize, Serialize};

use super::{ProbTerm, Statement, StatementBody};
use crate::model::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    /// The statement cannot be compiled.
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FindingKind {
    NotDirectPredecessor { var: String, child: String },
    SameVariableTwice { var: String },
    OverlappingVariables,
    DuplicateStatement { first: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub statement: String,
    pub line: usize,
    pub severity: Severity,
    pub kind: FindingKind,
    pub message: String,
}

/// Structural checks that need the network but no probabilistic reasoning.
pub fn validate(statements: &[Statement], network: &Network) -> Vec<Finding> {
    let mut findings = Vec::new();
    let name = |v: usize| network.variable(v).name.clone();
    for (idx, s) in statements.iter().enumerate() {
        let mut push = |severity, kind: FindingKind, message: String| {
            findings.push(Finding {
                statement: s.id.clone(),
                line: s.line,
                severity,
                kind,
                message,
            })
        };
        let parent_check =
            |var: usize, child: usize, push: &mut dyn FnMut(Severity, FindingKind, String)| {
                if !network.is_parent(var, child) {
                    push(
                        Severity::Error,
                        FindingKind::NotDirectPredecessor {
                            var: name(var),
                            child: name(child),
                        },
                        format!(
                            "{} is not a direct predecessor of {}",
                            name(var),
                            name(child)
                        ),
                    );
                }
            };
        match &s.body {
            StatementBody::Influence { source, target, .. } => {
                parent_check(*source, *target, &mut push);
            }
            StatementBody::AdditiveSynergy { pair, target, .. } => {
                if pair.0 == pair.1 {
                    push(
                        Severity::Error,
                        FindingKind::SameVariableTwice { var: name(pair.0) },
                        format!("synergy pair names {} twice", name(pair.0)),
                    );
                }
                parent_check(pair.0, *target, &mut push);
                if pair.1 != pair.0 {
                    parent_check(pair.1, *target, &mut push);
                }
            }
            StatementBody::ProductSynergy {
                pair, effect_var, ..
            } => {
                if pair.0 == pair.1 {
                    push(
                        Severity::Error,
                        FindingKind::SameVariableTwice { var: name(pair.0) },
                        format!("synergy pair names {} twice", name(pair.0)),
                    );
                }
                parent_check(pair.0, *effect_var, &mut push);
                if pair.1 != pair.0 {
                    parent_check(pair.1, *effect_var, &mut push);
                }
            }
            StatementBody::Point { term, .. } | StatementBody::Interval { term, .. } => {
                overlap_check(term, &mut push);
            }
            StatementBody::Comparison { lhs, rhs, .. } => {
                overlap_check(lhs, &mut push);
                overlap_check(rhs, &mut push);
            }
        }
        if let Some(first) = statements[..idx]
            .iter()
            .find(|o| o.body == s.body && o.tol_eq == s.tol_eq)
        {
            push(
                Severity::Warning,
                FindingKind::DuplicateStatement {
                    first: first.id.clone(),
                },
                format!("same statement as {}", first.id),
            );
        }
    }
    findings
}

fn overlap_check(term: &ProbTerm, push: &mut dyn FnMut(Severity, FindingKind, String)) {
    if let Some(given) = &term.given {
        if term.target.shares_variable(given) {
            push(
                Severity::Warning,
                FindingKind::OverlappingVariables,
                "conditional mentions the same variable on both sides of `|`".to_string(),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statements::parse_document;

    const HIV: &str = "var H : h > no_h\nvar N : n > no_n\nvar I : i > no_i\nvar C : c > no_c\n\
                       edge N -> H\nedge I -> H\nedge C -> H\nedge I -> C\n";

    fn findings(extra: &str) -> Vec<Finding> {
        let d = parse_document(&format!("{HIV}{extra}")).unwrap();
        validate(&d.statements, &d.network)
    }

    #[test]
    fn influence_must_follow_an_edge() {
        let f = findings("S+(C, N)\n");
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].severity, Severity::Error);
        assert_eq!(
            f[0].kind,
            FindingKind::NotDirectPredecessor {
                var: "C".into(),
                child: "N".into()
            }
        );
        assert!(findings("S+(N, H)\nS-(I, C)\n").is_empty());
    }

    #[test]
    fn duplicate_statement() {
        let f = findings("P(h) = 0.005\nP(h) = 0.005\n");
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].statement, "s2");
        assert_eq!(
            f[0].kind,
            FindingKind::DuplicateStatement { first: "s1".into() }
        );
    }

    #[test]
    fn overlapping_conditional() {
        let f = findings("P(h | h) = 1\n");
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].kind, FindingKind::OverlappingVariables);
        assert_eq!(f[0].severity, Severity::Warning);
    }

    #[test]
    fn synergy_pairs() {
        assert_eq!(
            findings("Y+({I,I},H)\n")[0].kind,
            FindingKind::SameVariableTwice { var: "I".into() }
        );
        assert!(findings("Y-({I,C},H)\nX-({N,I},h)\n").is_empty());
        assert_eq!(findings("X-({N,H},c)\n").len(), 2);
    }
}
