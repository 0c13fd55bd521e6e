//! Verdicts on statement sets and revision suggestions ranked by robustness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{compile_system, normalize, ConstraintSystem};
use crate::model::Network;
use crate::pipeline::{linear_feasible, LinearEvidence, RunConfig};
use crate::sampler::{reduce_equalities, run_rejection, SampleSet, SamplerConfig};
use crate::statements::{Statement, StatementKind};

/// Robustness tiers, most robust first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RobustnessClass {
    Qualitative,
    Comparison,
    Interval,
    PointConditional,
    PointPrior,
}

impl RobustnessClass {
    pub fn of(kind: StatementKind) -> Self {
        match kind {
            StatementKind::Influence
            | StatementKind::AdditiveSynergy
            | StatementKind::ProductSynergy => RobustnessClass::Qualitative,
            StatementKind::Comparison => RobustnessClass::Comparison,
            StatementKind::IntervalPrior | StatementKind::IntervalConditional => {
                RobustnessClass::Interval
            }
            StatementKind::PointConditional => RobustnessClass::PointConditional,
            StatementKind::PointPrior => RobustnessClass::PointPrior,
        }
    }
}

/// Statement positions from most to least robust; within a class, earlier
/// statements rank higher.
pub fn rank_robustness(statements: &[Statement]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..statements.len()).collect();
    order.sort_by_key(|&i| RobustnessClass::of(statements[i].kind()));
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWitnessed,
    InfeasibleProven,
    Suspect,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::ConsistentWitnessed => "consistent-witnessed",
            Verdict::InfeasibleProven => "infeasible-proven",
            Verdict::Suspect => "suspect",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Evidence {
    /// The closed linear polytope is empty.
    LpInfeasible,
    /// Strict linear constraints that hold nowhere on the polytope.
    StrictProbeFailed {
        constraints: Vec<String>,
        statements: Vec<String>,
    },
    /// An accepted sample satisfying every constraint.
    Witness { x: Vec<f64> },
    /// Exact equality reduction found a contradiction the LP tolerance let
    /// through.
    ReductionContradiction { message: String },
    /// No proposal was accepted within the budget.
    ZeroAcceptance {
        draws: u64,
        target: usize,
        seed: u64,
    },
    /// The LP did not converge; nothing is concluded from it.
    LpFailure { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub verdict: Verdict,
    pub evidence: Vec<Evidence>,
    /// Statement ids, least robust first.
    pub suspects: Vec<String>,
}

impl ConsistencyReport {
    pub fn witness(&self) -> Option<&[f64]> {
        self.evidence.iter().find_map(|e| match e {
            Evidence::Witness { x } => Some(x.as_slice()),
            _ => None,
        })
    }
}

fn least_robust_first(statements: &[Statement]) -> Vec<String> {
    rank_robustness(statements)
        .into_iter()
        .rev()
        .map(|i| statements[i].id.clone())
        .collect()
}

/// Applies the evidence hierarchy: a linear certificate proves
/// infeasibility; an accepted sample witnesses consistency; anything else is
/// only suspect.
pub fn diagnose(
    system: &ConstraintSystem,
    statements: &[Statement],
    linear: &LinearEvidence,
    samples: Option<&SampleSet>,
    plan_error: Option<&str>,
) -> ConsistencyReport {
    match linear {
        LinearEvidence::Infeasible => {
            let suspects = least_robust_first(statements)
                .into_iter()
                .filter(|id| system.from_statement(id).any(|c| c.is_linear()))
                .collect();
            return ConsistencyReport {
                verdict: Verdict::InfeasibleProven,
                evidence: vec![Evidence::LpInfeasible],
                suspects,
            };
        }
        LinearEvidence::StrictUnsatisfiable { constraints, .. } => {
            let mut ids: Vec<String> = constraints
                .iter()
                .filter_map(|&i| system.constraints[i].provenance.statement.clone())
                .collect();
            ids.dedup();
            let mut suspects = ids.clone();
            for id in least_robust_first(statements) {
                if !suspects.contains(&id) && system.from_statement(&id).any(|c| c.is_linear()) {
                    suspects.push(id);
                }
            }
            return ConsistencyReport {
                verdict: Verdict::InfeasibleProven,
                evidence: vec![Evidence::StrictProbeFailed {
                    constraints: constraints
                        .iter()
                        .map(|&i| system.constraints[i].to_string())
                        .collect(),
                    statements: ids,
                }],
                suspects,
            };
        }
        _ => {}
    }
    if let Some(x) = samples.and_then(|s| s.accepted.first()) {
        return ConsistencyReport {
            verdict: Verdict::ConsistentWitnessed,
            evidence: vec![Evidence::Witness { x: x.clone() }],
            suspects: Vec::new(),
        };
    }
    let mut evidence = Vec::new();
    if let LinearEvidence::Numerical { message } = linear {
        evidence.push(Evidence::LpFailure {
            message: message.clone(),
        });
    }
    if let Some(message) = plan_error {
        evidence.push(Evidence::ReductionContradiction {
            message: message.to_string(),
        });
    }
    if let Some(s) = samples {
        evidence.push(Evidence::ZeroAcceptance {
            draws: s.draws_total,
            target: s.n_target,
            seed: s.seed,
        });
    }
    ConsistencyReport {
        verdict: Verdict::Suspect,
        evidence,
        suspects: least_robust_first(statements),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub statement: String,
    pub line: usize,
    pub class: RobustnessClass,
    /// What removing the statement achieved.
    pub restores: String,
    /// A sample found after removal, for suspect verdicts.
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RevisionError {
    #[error("the statements are already witnessed consistent")]
    AlreadyConsistent,
}

/// Proposals drawn when re-checking a suspect set without one statement.
pub const SUGGESTION_DRAWS: u64 = 1_000_000;

/// Removes one statement at a time, least robust first, and keeps those
/// whose removal restores feasibility: linear feasibility for proven
/// infeasibility, an accepted sample for suspect sets. The pass stops after
/// the first robustness class that yields a suggestion.
pub fn suggest_revision(
    report: &ConsistencyReport,
    statements: &[Statement],
    network: &Network,
    config: &RunConfig,
) -> Result<Vec<Suggestion>, RevisionError> {
    if report.verdict == Verdict::ConsistentWitnessed {
        return Err(RevisionError::AlreadyConsistent);
    }
    let without = |skip: usize| -> Option<ConstraintSystem> {
        let rest: Vec<Statement> = statements
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, s)| s.clone())
            .collect();
        compile_system(&rest, network).ok().map(|s| normalize(&s))
    };
    let probe = |skip: usize| -> Option<(String, Option<Vec<f64>>)> {
        let system = without(skip)?;
        match report.verdict {
            Verdict::InfeasibleProven => linear_feasible(&system)
                .ok()
                .filter(|ok| *ok)
                .map(|_| ("linear constraints become feasible".to_string(), None)),
            _ => {
                if !linear_feasible(&system).unwrap_or(false) {
                    return None;
                }
                let plan = reduce_equalities(&system).ok()?;
                let cfg = SamplerConfig {
                    n_target: 1,
                    max_draws: config.max_draws.min(SUGGESTION_DRAWS),
                    seed: config.seed,
                    tolerances: config.tolerances,
                };
                let set = run_rejection(&system, &plan, &cfg, None).ok()?;
                let x = set.accepted.into_iter().next()?;
                Some((
                    format!("a sample is accepted after {} proposals", set.draws_total),
                    Some(x),
                ))
            }
        }
    };

    let order: Vec<usize> = rank_robustness(statements).into_iter().rev().collect();
    let mut suggestions = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let class = RobustnessClass::of(statements[order[start]].kind());
        let end = order[start..]
            .iter()
            .position(|&i| RobustnessClass::of(statements[i].kind()) != class)
            .map_or(order.len(), |p| start + p);
        let results: Vec<Option<(String, Option<Vec<f64>>)>> =
            order[start..end].par_iter().map(|&i| probe(i)).collect();
        for (&i, r) in order[start..end].iter().zip(results) {
            if let Some((restores, witness)) = r {
                suggestions.push(Suggestion {
                    statement: statements[i].id.clone(),
                    line: statements[i].line,
                    class,
                    restores,
                    witness,
                });
            }
        }
        if !suggestions.is_empty() {
            break;
        }
        start = end;
    }
    Ok(suggestions)
}
