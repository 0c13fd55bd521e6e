//! Sessions: a network, its statements and the results of the last run,
//! persisted as versioned JSON.

mod api;
mod store;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bounds::BoundsBox;
use crate::canonical::{CompileError, Tolerances};
use crate::consistency::{suggest_revision, ConsistencyReport, Suggestion, Verdict};
use crate::model::{Network, Variable};
use crate::pipeline::{run_pipeline, LinearEvidence, PipelineError, RunConfig};
use crate::sampler::{QueryEvaluator, SamplerError, SecondOrderDistribution};
use crate::statements::{
    format_network, format_query, format_statement, parse_document, parse_query,
    parse_statement_line, validate, DslError, DslErrorKind, Finding, ProbTerm, Severity, Statement,
    StatementBody,
};

pub use api::{
    Api, ApiError, BoundsView, CliqueView, CliquesView, ConsistencyView, ConstituentBounds,
    ErrorCode, QueryResults, RunRequest, RunView, SessionCreated, SessionSnapshot, StatementView,
};
pub use store::SessionStore;

pub const SCHEMA_VERSION: u32 = 1;
/// Sample matrices up to this many numbers are kept for later queries.
pub const SAMPLE_RETENTION_LIMIT: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Parse(#[from] DslError),
    #[error("{}", .0.iter().map(|f| format!("line {}: {}", f.line, f.message)).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Finding>),
    #[error("no session `{0}`")]
    NotFound(String),
    #[error("no statement `{0}` in this session")]
    UnknownStatement(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("results are stale: statements changed since the last run")]
    Stale,
    #[error("the session has not been run")]
    NotRun,
    #[error("samples were not retained for this run; re-run to query `{0}`")]
    SamplesUnavailable(String),
    #[error("no samples were accepted in the last run")]
    NoSamples,
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("unsupported session schema version {0}")]
    Schema(u32),
    #[error("session file: {0}")]
    Format(#[from] serde_json::Error),
    #[error("session file: {0}")]
    Io(#[from] std::io::Error),
}

/// Summary of the last sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub seed: u64,
    pub n_target: usize,
    pub max_draws: u64,
    pub accepted: usize,
    pub draws_total: u64,
    pub acceptance_rate: f64,
    pub exhausted: bool,
    pub reductions: Vec<String>,
}

/// Everything a run produced, tied to the digest it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResults {
    pub digest: String,
    pub config: RunConfig,
    pub constraint_count: usize,
    pub linear: LinearEvidence,
    pub summary: Option<SampleSummary>,
    /// Cached second-order distributions keyed by `query#bins`.
    pub histograms: BTreeMap<String, SecondOrderDistribution>,
    /// Cleared when the statements change.
    pub report: Option<ConsistencyReport>,
    pub suggestions: Vec<Suggestion>,
    /// Accepted samples at 12 significant digits, one row per sample.
    #[serde(with = "sample_block")]
    pub samples: Option<Vec<Vec<f64>>>,
}

mod sample_block {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn format_row(row: &[f64]) -> String {
        row.iter()
            .map(|v| format!("{v:.11e}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn serialize<S: Serializer>(v: &Option<Vec<Vec<f64>>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref()
            .map(|rows| rows.iter().map(|r| format_row(r)).collect::<Vec<_>>())
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Vec<f64>>>, D::Error> {
        let rows: Option<Vec<String>> = Option::deserialize(d)?;
        rows.map(|rows| {
            rows.iter()
                .map(|r| {
                    r.split_whitespace()
                        .map(|t| t.parse::<f64>().map_err(serde::de::Error::custom))
                        .collect()
                })
                .collect()
        })
        .transpose()
    }
}

/// Rounds to the precision stored on disk, so reloaded samples equal the
/// in-memory ones.
fn round_sample(row: &[f64]) -> Vec<f64> {
    row.iter()
        .map(|v| format!("{v:.11e}").parse().expect("formatted float parses"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: String,
    pub network: Network,
    pub statements: Vec<Statement>,
    pub tolerances: Tolerances,
    /// Soft validation findings for the current statements.
    pub warnings: Vec<Finding>,
    pub digest: String,
    pub run: Option<RunResults>,
    next_statement: usize,
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    variables: Vec<Variable>,
    edges: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct StatementFile {
    id: String,
    line: usize,
    text: String,
}

#[derive(Serialize, Deserialize)]
struct SessionFile {
    schema_version: u32,
    id: String,
    digest: String,
    network: NetworkFile,
    statements: Vec<StatementFile>,
    next_statement: usize,
    tolerances: Tolerances,
    run: Option<RunResults>,
}

fn hard_errors(findings: &[Finding]) -> Vec<Finding> {
    findings
        .iter()
        .filter(|f| f.severity == Severity::Error)
        .cloned()
        .collect()
}

/// SHA-256 over the network, the statements and the tolerances in DSL form.
pub fn compute_digest(
    network: &Network,
    statements: &[Statement],
    tolerances: &Tolerances,
) -> String {
    let mut h = Sha256::new();
    h.update(format_network(network).as_bytes());
    for s in statements {
        h.update(format!("{}: {}\n", s.id, format_statement(network, s)).as_bytes());
    }
    h.update(
        format!(
            "tol_eq={:e} tol_ineq={:e}\n",
            tolerances.eq, tolerances.ineq
        )
        .as_bytes(),
    );
    hex::encode(h.finalize())
}

fn cache_key(query: &str, bins: usize) -> String {
    format!("{query}#{bins}")
}

impl Session {
    /// Parses and validates a DSL document; hard validation errors reject it.
    pub fn create(id: impl Into<String>, text: &str) -> Result<Self, SessionError> {
        Self::create_with(id, text, Tolerances::default())
    }

    pub fn create_with(
        id: impl Into<String>,
        text: &str,
        tolerances: Tolerances,
    ) -> Result<Self, SessionError> {
        let doc = parse_document(text)?;
        let findings = validate(&doc.statements, &doc.network);
        let errors = hard_errors(&findings);
        if !errors.is_empty() {
            return Err(SessionError::Invalid(errors));
        }
        let next_statement = doc.statements.len() + 1;
        let mut s = Self {
            id: id.into(),
            network: doc.network,
            statements: doc.statements,
            tolerances,
            warnings: findings,
            digest: String::new(),
            run: None,
            next_statement,
        };
        s.digest = s.compute_digest();
        Ok(s)
    }

    pub fn compute_digest(&self) -> String {
        compute_digest(&self.network, &self.statements, &self.tolerances)
    }

    /// True when the stored run matches the current statements.
    pub fn results_current(&self) -> bool {
        self.run.as_ref().is_some_and(|r| r.digest == self.digest)
    }

    fn mutated(mut self) -> Self {
        self.warnings = validate(&self.statements, &self.network);
        self.digest = self.compute_digest();
        if let Some(run) = &mut self.run {
            if run.digest != self.digest {
                run.report = None;
                run.suggestions.clear();
            }
        }
        self
    }

    /// Appends one statement given as a DSL line.
    pub fn add_statement(&self, line: &str) -> Result<Self, SessionError> {
        let id = format!("s{}", self.next_statement);
        let mut statement = parse_statement_line(&self.network, line, id)?;
        statement.line = 0;
        let mut candidate = self.statements.clone();
        candidate.push(statement);
        let errors: Vec<Finding> = hard_errors(&validate(&candidate, &self.network));
        if !errors.is_empty() {
            return Err(SessionError::Invalid(errors));
        }
        let mut next = self.clone();
        next.statements = candidate;
        next.next_statement += 1;
        Ok(next.mutated())
    }

    pub fn remove_statement(&self, id: &str) -> Result<Self, SessionError> {
        let pos = self
            .statements
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| SessionError::UnknownStatement(id.to_string()))?;
        let mut next = self.clone();
        next.statements.remove(pos);
        Ok(next.mutated())
    }

    pub fn with_tolerances(&self, tolerances: Tolerances) -> Self {
        let mut next = self.clone();
        next.tolerances = tolerances;
        next.mutated()
    }

    /// Queries cached after every run: the terms the statements mention and
    /// the top value of each variable.
    fn default_queries(&self) -> Vec<ProbTerm> {
        let mut out: Vec<ProbTerm> = Vec::new();
        let mut push = |t: &ProbTerm| {
            if !out.contains(t) {
                out.push(t.clone());
            }
        };
        for s in &self.statements {
            match &s.body {
                StatementBody::Point { term, .. } | StatementBody::Interval { term, .. } => {
                    push(term)
                }
                StatementBody::Comparison { lhs, rhs, .. } => {
                    push(lhs);
                    push(rhs);
                }
                _ => {}
            }
        }
        for v in 0..self.network.len() {
            push(&ProbTerm::prior(crate::model::Event::sure().with(v, 0)));
        }
        out
    }

    /// Runs the full pipeline and stores its artifacts under the current
    /// digest.
    pub fn run(&self, config: &RunConfig) -> Result<Self, SessionError> {
        let mut config = config.clone();
        config.tolerances = self.tolerances;
        let out = run_pipeline(&self.network, &self.statements, &config)?;
        let suggestions = if out.report.verdict == Verdict::ConsistentWitnessed {
            Vec::new()
        } else {
            suggest_revision(&out.report, &self.statements, &self.network, &config)
                .unwrap_or_default()
        };
        let samples: Option<Vec<Vec<f64>>> = out
            .samples
            .as_ref()
            .map(|s| s.accepted.iter().map(|x| round_sample(x)).collect());
        let mut histograms = BTreeMap::new();
        if let Some(rows) = samples.as_ref().filter(|r| !r.is_empty()) {
            for q in self.default_queries() {
                let label = format_query(&self.network, &q);
                let eval = QueryEvaluator::new(&self.network, &q);
                if let Ok(d) = SecondOrderDistribution::from_values(
                    label.clone(),
                    rows.iter().map(|x| eval.eval(x)),
                    config.bins,
                ) {
                    histograms.insert(cache_key(&label, config.bins), d);
                }
            }
        }
        let summary = out.samples.as_ref().map(|s| SampleSummary {
            seed: s.seed,
            n_target: s.n_target,
            max_draws: config.max_draws,
            accepted: s.len(),
            draws_total: s.draws_total,
            acceptance_rate: s.acceptance_rate,
            exhausted: s.exhausted,
            reductions: s.reductions.clone(),
        });
        let retained =
            samples.filter(|rows| rows.len() * self.network.k() <= SAMPLE_RETENTION_LIMIT);
        let mut next = self.clone();
        next.run = Some(RunResults {
            digest: self.digest.clone(),
            config,
            constraint_count: out.system.len(),
            linear: out.linear,
            summary,
            histograms,
            report: Some(out.report),
            suggestions,
            samples: retained,
        });
        Ok(next)
    }

    fn current_run(&self) -> Result<&RunResults, SessionError> {
        let run = self.run.as_ref().ok_or(SessionError::NotRun)?;
        if run.digest != self.digest {
            return Err(SessionError::Stale);
        }
        Ok(run)
    }

    pub fn bounds(&self) -> Result<&LinearEvidence, SessionError> {
        Ok(&self.current_run()?.linear)
    }

    pub fn exact_bounds(&self) -> Result<Option<&BoundsBox>, SessionError> {
        Ok(self.current_run()?.linear.bounds())
    }

    pub fn report(&self) -> Result<&ConsistencyReport, SessionError> {
        self.current_run()?
            .report
            .as_ref()
            .ok_or(SessionError::Stale)
    }

    /// The cached distribution of `query`, if present.
    pub fn cached_result(
        &self,
        query: &str,
        bins: usize,
    ) -> Result<Option<SecondOrderDistribution>, SessionError> {
        let run = self.current_run()?;
        let term = parse_query(&self.network, query)?;
        let label = format_query(&self.network, &term);
        Ok(run.histograms.get(&cache_key(&label, bins)).cloned())
    }

    /// Computes `query` from the retained samples and returns the session
    /// with the result cached.
    pub fn compute_result(
        &self,
        query: &str,
        bins: usize,
    ) -> Result<(Self, SecondOrderDistribution), SessionError> {
        let run = self.current_run()?;
        let term = parse_query(&self.network, query)?;
        let label = format_query(&self.network, &term);
        let key = cache_key(&label, bins);
        if let Some(d) = run.histograms.get(&key) {
            return Ok((self.clone(), d.clone()));
        }
        let rows = run
            .samples
            .as_ref()
            .ok_or_else(|| SessionError::SamplesUnavailable(label.clone()))?;
        if rows.is_empty() {
            return Err(SessionError::NoSamples);
        }
        let eval = QueryEvaluator::new(&self.network, &term);
        let d =
            SecondOrderDistribution::from_values(label, rows.iter().map(|x| eval.eval(x)), bins)?;
        let mut next = self.clone();
        if let Some(r) = &mut next.run {
            r.histograms.insert(key, d.clone());
        }
        Ok((next, d))
    }

    pub fn to_json(&self) -> String {
        let file = SessionFile {
            schema_version: SCHEMA_VERSION,
            id: self.id.clone(),
            digest: self.digest.clone(),
            network: NetworkFile {
                variables: self.network.variables().to_vec(),
                edges: self
                    .network
                    .edges()
                    .iter()
                    .map(|&(p, c)| {
                        (
                            self.network.variable(p).name.clone(),
                            self.network.variable(c).name.clone(),
                        )
                    })
                    .collect(),
            },
            statements: self
                .statements
                .iter()
                .map(|s| StatementFile {
                    id: s.id.clone(),
                    line: s.line,
                    text: format_statement(&self.network, s),
                })
                .collect(),
            next_statement: self.next_statement,
            tolerances: self.tolerances,
            run: self.run.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("session serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, SessionError> {
        let file: SessionFile = serde_json::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(SessionError::Schema(file.schema_version));
        }
        let network = Network::build(file.network.variables, &file.network.edges).map_err(|e| {
            SessionError::Parse(DslError::new(DslErrorKind::Network, 0, 1, e.to_string()))
        })?;
        let mut statements = Vec::with_capacity(file.statements.len());
        for s in &file.statements {
            let mut st = parse_statement_line(&network, &s.text, s.id.clone())?;
            st.line = s.line;
            statements.push(st);
        }
        let warnings = validate(&statements, &network);
        let mut session = Self {
            id: file.id,
            network,
            statements,
            tolerances: file.tolerances,
            warnings,
            digest: String::new(),
            run: file.run,
            next_statement: file.next_statement,
        };
        session.digest = session.compute_digest();
        Ok(session)
    }

    pub fn save(&self, path: &Path) -> Result<(), SessionError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SessionError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
