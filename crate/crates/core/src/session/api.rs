//! Request/response operations behind the HTTP service, with stable error
//! codes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Session, SessionError, SessionStore, SCHEMA_VERSION};
use crate::bounds::BoundsBox;
use crate::canonical::Tolerances;
use crate::consistency::{ConsistencyReport, RobustnessClass, Suggestion, Verdict};
use crate::focus::{assign_statements, decompose, family_check, CrossCliqueFinding};
use crate::model::Variable;
use crate::pipeline::{LinearEvidence, PipelineError, RunConfig};
use crate::sampler::{SamplerError, SecondOrderDistribution};
use crate::statements::{format_statement, DslErrorKind, Finding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    ParseError,
    UnknownName,
    RangeError,
    ValidationError,
    SessionNotFound,
    StatementNotFound,
    NotRun,
    StaleResults,
    SamplesUnavailable,
    NoSamples,
    AllUndefined,
    InvalidArgument,
    Internal,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::ParseError => "parse_error",
            ErrorCode::UnknownName => "unknown_name",
            ErrorCode::RangeError => "range_error",
            ErrorCode::ValidationError => "validation_error",
            ErrorCode::SessionNotFound => "session_not_found",
            ErrorCode::StatementNotFound => "statement_not_found",
            ErrorCode::NotRun => "not_run",
            ErrorCode::StaleResults => "stale_results",
            ErrorCode::SamplesUnavailable => "samples_unavailable",
            ErrorCode::NoSamples => "no_samples",
            ErrorCode::AllUndefined => "all_undefined",
            ErrorCode::InvalidArgument => "invalid_argument",
            ErrorCode::Internal => "internal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub line: Option<usize>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            line: None,
        }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        let (code, line) = match &e {
            SessionError::Parse(d) => (
                match d.kind {
                    DslErrorKind::UnknownName => ErrorCode::UnknownName,
                    DslErrorKind::Range => ErrorCode::RangeError,
                    DslErrorKind::Syntax | DslErrorKind::Network => ErrorCode::ParseError,
                },
                (d.line > 0).then_some(d.line),
            ),
            SessionError::Invalid(f) => (
                ErrorCode::ValidationError,
                f.first().map(|f| f.line).filter(|l| *l > 0),
            ),
            SessionError::Compile(_) | SessionError::Pipeline(PipelineError::Compile(_)) => {
                (ErrorCode::ValidationError, None)
            }
            SessionError::NotFound(_) => (ErrorCode::SessionNotFound, None),
            SessionError::UnknownStatement(_) => (ErrorCode::StatementNotFound, None),
            SessionError::Stale => (ErrorCode::StaleResults, None),
            SessionError::NotRun => (ErrorCode::NotRun, None),
            SessionError::SamplesUnavailable(_) => (ErrorCode::SamplesUnavailable, None),
            SessionError::NoSamples => (ErrorCode::NoSamples, None),
            SessionError::Sampler(SamplerError::AllUndefined) => (ErrorCode::AllUndefined, None),
            SessionError::Sampler(SamplerError::EmptySampleSet) => (ErrorCode::NoSamples, None),
            SessionError::Sampler(SamplerError::InvalidArgument(_))
            | SessionError::Pipeline(PipelineError::Sampler(SamplerError::InvalidArgument(_))) => {
                (ErrorCode::InvalidArgument, None)
            }
            _ => (ErrorCode::Internal, None),
        };
        Self {
            code,
            message,
            line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementView {
    pub id: String,
    pub line: usize,
    pub text: String,
    pub kind: String,
    pub robustness_class: RobustnessClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunView {
    pub digest: String,
    pub seed: u64,
    pub n_target: usize,
    pub max_draws: u64,
    pub bins: usize,
    pub constraint_count: usize,
    pub accepted: usize,
    pub draws_total: u64,
    pub acceptance_rate: f64,
    pub exhausted: bool,
    pub verdict: Option<Verdict>,
    /// Queries with cached distributions.
    pub cached_queries: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub id: String,
    pub schema_version: u32,
    pub digest: String,
    pub k: usize,
    pub variables: Vec<Variable>,
    pub edges: Vec<(String, String)>,
    pub statements: Vec<StatementView>,
    pub warnings: Vec<Finding>,
    /// False when statements changed after the last run.
    pub results_current: bool,
    pub run: Option<RunView>,
}

impl SessionSnapshot {
    pub fn of(s: &Session) -> Self {
        let net = &s.network;
        let run = s.run.as_ref().map(|r| {
            let summary = r.summary.as_ref();
            RunView {
                digest: r.digest.clone(),
                seed: r.config.seed,
                n_target: r.config.n_target,
                max_draws: r.config.max_draws,
                bins: r.config.bins,
                constraint_count: r.constraint_count,
                accepted: summary.map_or(0, |s| s.accepted),
                draws_total: summary.map_or(0, |s| s.draws_total),
                acceptance_rate: summary.map_or(0.0, |s| s.acceptance_rate),
                exhausted: summary.is_some_and(|s| s.exhausted),
                verdict: r.report.as_ref().map(|r| r.verdict),
                cached_queries: r.histograms.keys().cloned().collect(),
            }
        });
        Self {
            id: s.id.clone(),
            schema_version: SCHEMA_VERSION,
            digest: s.digest.clone(),
            k: net.k(),
            variables: net.variables().to_vec(),
            edges: net
                .edges()
                .iter()
                .map(|&(p, c)| (net.variable(p).name.clone(), net.variable(c).name.clone()))
                .collect(),
            statements: s
                .statements
                .iter()
                .map(|st| StatementView {
                    id: st.id.clone(),
                    line: st.line,
                    text: format_statement(net, st),
                    kind: st.kind().to_string(),
                    robustness_class: RobustnessClass::of(st.kind()),
                })
                .collect(),
            warnings: s.warnings.clone(),
            results_current: s.results_current(),
            run,
        }
    }
}

/// Optional run parameters; missing fields take the engine defaults.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunRequest {
    pub n_target: Option<usize>,
    pub max_draws: Option<u64>,
    pub seed: Option<u64>,
    pub bins: Option<usize>,
}

impl RunRequest {
    pub fn config(&self) -> Result<RunConfig, ApiError> {
        let d = RunConfig::default();
        let c = RunConfig {
            n_target: self.n_target.unwrap_or(d.n_target),
            max_draws: self.max_draws.unwrap_or(d.max_draws),
            seed: self.seed.unwrap_or(d.seed),
            bins: self.bins.unwrap_or(d.bins),
            ..d
        };
        let bad = |m: &str| Err(ApiError::new(ErrorCode::InvalidArgument, m));
        if c.n_target == 0 {
            return bad("n_target must be at least 1");
        }
        if c.max_draws < c.n_target as u64 {
            return bad("max_draws must be at least n_target");
        }
        if c.bins == 0 {
            return bad("bins must be at least 1");
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstituentBounds {
    pub index: usize,
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    /// Bounds with equalities widened to their acceptance bands.
    pub sampling_lo: Option<f64>,
    pub sampling_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsView {
    /// `feasible`, `infeasible`, `strict-unsatisfiable` or `numerical`.
    pub status: String,
    pub constituents: Vec<ConstituentBounds>,
    pub message: Option<String>,
}

impl BoundsView {
    pub fn of(session: &Session, linear: &LinearEvidence) -> Self {
        let rows = |b: &BoundsBox, s: Option<&BoundsBox>| {
            (0..b.k())
                .map(|i| ConstituentBounds {
                    index: i,
                    label: session.network.constituent_label(i),
                    lo: b.lo[i],
                    hi: b.hi[i],
                    sampling_lo: s.map(|s| s.lo[i]),
                    sampling_hi: s.map(|s| s.hi[i]),
                })
                .collect()
        };
        match linear {
            LinearEvidence::Feasible {
                bounds,
                sampling_box,
            } => Self {
                status: "feasible".into(),
                constituents: rows(bounds, Some(sampling_box)),
                message: None,
            },
            LinearEvidence::Infeasible => Self {
                status: "infeasible".into(),
                constituents: Vec::new(),
                message: Some("the linear constraints admit no distribution".into()),
            },
            LinearEvidence::StrictUnsatisfiable {
                constraints,
                bounds,
            } => Self {
                status: "strict-unsatisfiable".into(),
                constituents: rows(bounds, None),
                message: Some(format!(
                    "{} strict constraints cannot hold",
                    constraints.len()
                )),
            },
            LinearEvidence::Numerical { message } => Self {
                status: "numerical".into(),
                constituents: Vec::new(),
                message: Some(message.clone()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResults {
    pub distribution: SecondOrderDistribution,
    pub bounds: BoundsView,
    pub report: ConsistencyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyView {
    #[serde(flatten)]
    pub report: ConsistencyReport,
    pub suggestions: Vec<Suggestion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueView {
    pub index: usize,
    pub variables: Vec<String>,
    /// Statements whose variables touch this clique.
    pub statements: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliquesView {
    pub cliques: Vec<CliqueView>,
    pub elimination_order: Vec<String>,
    pub fill_in: Vec<(String, String)>,
    pub family_check: bool,
    pub findings: Vec<CrossCliqueFinding>,
}

impl CliquesView {
    pub fn of(session: &Session) -> Self {
        let net = &session.network;
        let name = |v: usize| net.variable(v).name.clone();
        let (tri, cliques) = decompose(net);
        let assignment = assign_statements(net, &cliques, &session.statements);
        Self {
            cliques: cliques
                .cliques
                .iter()
                .enumerate()
                .map(|(i, c)| CliqueView {
                    index: i,
                    variables: c.iter().map(|&v| name(v)).collect(),
                    statements: assignment.per_clique[i].clone(),
                })
                .collect(),
            elimination_order: tri.order.iter().rev().map(|&v| name(v)).collect(),
            fill_in: tri
                .fill_in
                .iter()
                .map(|&(a, b)| (name(a), name(b)))
                .collect(),
            family_check: family_check(net, &cliques),
            findings: assignment.findings,
        }
    }
}

/// The service operations over a shared store.
#[derive(Clone)]
pub struct Api {
    store: Arc<SessionStore>,
}

impl Api {
    pub fn new(store: Arc<SessionStore>) -> Self {
        Self { store }
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    pub fn create_session(&self, text: &str) -> Result<SessionCreated, ApiError> {
        let s = self.store.create(text, Tolerances::default())?;
        Ok(SessionCreated { id: s.id.clone() })
    }

    pub fn snapshot(&self, id: &str) -> Result<SessionSnapshot, ApiError> {
        let s = self.store.get(id)?;
        Ok(SessionSnapshot::of(&s))
    }

    pub fn add_statement(&self, id: &str, line: &str) -> Result<SessionSnapshot, ApiError> {
        let s = self.store.update(id, |s| s.add_statement(line.trim()))?;
        Ok(SessionSnapshot::of(&s))
    }

    pub fn remove_statement(&self, id: &str, statement: &str) -> Result<SessionSnapshot, ApiError> {
        let s = self.store.update(id, |s| s.remove_statement(statement))?;
        Ok(SessionSnapshot::of(&s))
    }

    pub fn run(&self, id: &str, request: &RunRequest) -> Result<SessionSnapshot, ApiError> {
        let config = request.config()?;
        let s = self.store.update(id, |s| s.run(&config))?;
        Ok(SessionSnapshot::of(&s))
    }

    pub fn results(
        &self,
        id: &str,
        query: &str,
        bins: Option<usize>,
    ) -> Result<QueryResults, ApiError> {
        let snapshot = self.store.get(id)?;
        let bins = match bins {
            Some(0) => {
                return Err(ApiError::new(
                    ErrorCode::InvalidArgument,
                    "bins must be at least 1",
                ))
            }
            Some(b) => b,
            None => snapshot
                .run
                .as_ref()
                .map_or(RunConfig::default().bins, |r| r.config.bins),
        };
        let distribution = match snapshot.cached_result(query, bins)? {
            Some(d) => d,
            None => {
                let mut out = None;
                let s = self.store.update(id, |s| {
                    let (next, d) = s.compute_result(query, bins)?;
                    out = Some(d);
                    Ok(next)
                })?;
                let _ = s;
                out.expect("set by the update")
            }
        };
        let session = self.store.get(id)?;
        let bounds = BoundsView::of(&session, session.bounds()?);
        let report = session.report()?.clone();
        Ok(QueryResults {
            distribution,
            bounds,
            report,
        })
    }

    pub fn bounds(&self, id: &str) -> Result<BoundsView, ApiError> {
        let s = self.store.get(id)?;
        let linear = s.bounds()?;
        Ok(BoundsView::of(&s, linear))
    }

    pub fn cliques(&self, id: &str) -> Result<CliquesView, ApiError> {
        let s = self.store.get(id)?;
        Ok(CliquesView::of(&s))
    }

    pub fn consistency(&self, id: &str) -> Result<ConsistencyView, ApiError> {
        let s = self.store.get(id)?;
        let report = s.report()?.clone();
        let suggestions = s
            .run
            .as_ref()
            .map(|r| r.suggestions.clone())
            .unwrap_or_default();
        Ok(ConsistencyView {
            report,
            suggestions,
        })
    }
}
