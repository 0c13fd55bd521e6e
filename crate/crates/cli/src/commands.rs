//! Batch subcommands. Each returns its standard output as a string plus an
//! exit status, so tests can drive them without spawning a process.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use elicit_core::canonical::{compile_axioms, compile_statement, normalize};
use elicit_core::consistency::Verdict;
use elicit_core::pipeline::{analyze_linear, LinearEvidence, RunConfig};
use elicit_core::sampler::{DEFAULT_BINS, DEFAULT_MAX_DRAWS, DEFAULT_N_TARGET};
use elicit_core::session::{CliquesView, Session, SessionError};
use elicit_core::statements::{format_statement, Severity};
use elicit_core::Tolerances;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    UserError = 1,
    InfeasibleProven = 2,
    BudgetExhausted = 3,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    /// Warnings and diagnostics, one per line.
    pub stderr: String,
    pub exit: Exit,
}

impl Outcome {
    fn new(stdout: String, exit: Exit) -> Self {
        Self {
            stdout,
            stderr: String::new(),
            exit,
        }
    }

    fn warn(mut self, line: impl AsRef<str>) -> Self {
        self.stderr.push_str(line.as_ref());
        self.stderr.push('\n');
        self
    }
}

/// A failure reported on standard error with exit status 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserError(pub String);

impl std::fmt::Display for UserError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UserError {}

impl From<SessionError> for UserError {
    fn from(e: SessionError) -> Self {
        UserError(e.to_string())
    }
}

#[derive(Debug, Clone, Args)]
pub struct ToleranceArgs {
    /// Acceptance band for point equalities.
    #[arg(long)]
    pub tol_eq: Option<f64>,
    /// Slack for non-strict inequalities.
    #[arg(long)]
    pub tol_ineq: Option<f64>,
}

impl ToleranceArgs {
    fn apply(&self, session: Session) -> Result<Session, UserError> {
        if self.tol_eq.is_none() && self.tol_ineq.is_none() {
            return Ok(session);
        }
        let mut t = session.tolerances;
        if let Some(eq) = self.tol_eq {
            t.eq = eq;
        }
        if let Some(ineq) = self.tol_ineq {
            t.ineq = ineq;
        }
        if !(t.eq.is_finite() && t.eq >= 0.0 && t.ineq.is_finite() && t.ineq >= 0.0) {
            return Err(UserError(
                "tolerances must be finite and non-negative".into(),
            ));
        }
        Ok(session.with_tolerances(t))
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Accepted samples to collect.
    #[arg(long = "n", default_value_t = DEFAULT_N_TARGET)]
    pub n_target: usize,
    /// Proposal budget.
    #[arg(long, default_value_t = DEFAULT_MAX_DRAWS)]
    pub max_draws: u64,
    /// Histogram bins over [0, 1].
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
}

impl RunArgs {
    pub fn config(&self) -> Result<RunConfig, UserError> {
        if self.n_target == 0 {
            return Err(UserError("--n must be at least 1".into()));
        }
        if self.max_draws < self.n_target as u64 {
            return Err(UserError("--max-draws must be at least --n".into()));
        }
        if self.bins == 0 {
            return Err(UserError("--bins must be at least 1".into()));
        }
        Ok(RunConfig {
            n_target: self.n_target,
            max_draws: self.max_draws,
            seed: self.seed,
            bins: self.bins,
            ..RunConfig::default()
        })
    }
}

/// Reads a DSL document or a saved session file (recognized by a leading `{`).
pub fn load_input(path: &Path) -> Result<Session, UserError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| UserError(format!("{}: {e}", path.display())))?;
    let located = |e: SessionError| UserError(format!("{}: {e}", path.display()));
    if text.trim_start().starts_with('{') {
        return Session::from_json(&text).map_err(located);
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "session".into());
    Session::create_with(id, &text, Tolerances::default()).map_err(located)
}

fn with_warnings(mut out: Outcome, session: &Session) -> Outcome {
    for f in &session.warnings {
        if f.severity != Severity::Error {
            out = out.warn(format!("warning: line {}: {}", f.line, f.message));
        }
    }
    out
}

/// Constraint counts per statement, axioms first.
fn plural(n: usize) -> &'static str {
    if n == 1 {
        "constraint"
    } else {
        "constraints"
    }
}

pub fn check(input: &Path) -> Result<Outcome, UserError> {
    let session = load_input(input)?;
    let net = &session.network;
    let mut out = String::new();
    let axioms = compile_axioms(net.k()).len();
    writeln!(out, "axioms: {axioms} {}", plural(axioms)).unwrap();
    let mut total = axioms;
    for s in &session.statements {
        let n = compile_statement(s, net).len();
        total += n;
        writeln!(out, "{}: {n} {}", format_statement(net, s), plural(n)).unwrap();
    }
    writeln!(out, "total: {total} {} over k={}", plural(total), net.k()).unwrap();
    Ok(with_warnings(Outcome::new(out, Exit::Success), &session))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Per-constituent LP bounds as CSV.
pub fn bounds(input: &Path, tol: &ToleranceArgs) -> Result<Outcome, UserError> {
    let session = tol.apply(load_input(input)?)?;
    let net = &session.network;
    let system = elicit_core::canonical::compile_system(&session.statements, net)
        .map_err(|e| UserError(e.to_string()))?;
    let linear = analyze_linear(&normalize(&system), &session.tolerances);
    let mut out = String::from("index,constituent,lo,hi,sampling_lo,sampling_hi\n");
    let table = |out: &mut String,
                 b: &elicit_core::bounds::BoundsBox,
                 s: Option<&elicit_core::bounds::BoundsBox>| {
        for i in 0..b.k() {
            let (slo, shi) = s.map_or((String::new(), String::new()), |s| {
                (s.lo[i].to_string(), s.hi[i].to_string())
            });
            writeln!(
                out,
                "{i},{},{},{},{slo},{shi}",
                csv_field(&net.constituent_label(i)),
                b.lo[i],
                b.hi[i]
            )
            .unwrap();
        }
    };
    match &linear {
        LinearEvidence::Feasible {
            bounds,
            sampling_box,
        } => {
            table(&mut out, bounds, Some(sampling_box));
            Ok(with_warnings(Outcome::new(out, Exit::Success), &session))
        }
        LinearEvidence::StrictUnsatisfiable {
            constraints,
            bounds,
        } => {
            table(&mut out, bounds, None);
            let o = Outcome::new(out, Exit::InfeasibleProven).warn(format!(
                "infeasible: {} strict constraint(s) cannot hold on the linear polytope",
                constraints.len()
            ));
            Ok(with_warnings(o, &session))
        }
        LinearEvidence::Infeasible => Ok(Outcome::new(String::new(), Exit::InfeasibleProven)
            .warn("infeasible: the linear constraints admit no distribution")),
        LinearEvidence::Numerical { message } => Err(UserError(format!("LP failed: {message}"))),
    }
}

fn run_session(session: &Session, run: &RunArgs) -> Result<Session, UserError> {
    let config = run.config()?;
    Ok(session.run(&config)?)
}

fn run_exit(session: &Session) -> Exit {
    let Some(run) = &session.run else {
        return Exit::Success;
    };
    if run
        .report
        .as_ref()
        .is_some_and(|r| r.verdict == Verdict::InfeasibleProven)
    {
        return Exit::InfeasibleProven;
    }
    if run.summary.as_ref().is_none_or(|s| s.exhausted) {
        return Exit::BudgetExhausted;
    }
    Exit::Success
}

fn run_header(out: &mut String, session: &Session) {
    let Some(run) = &session.run else { return };
    let c = &run.config;
    writeln!(
        out,
        "# seed {}, n {}, max_draws {}, bins {}, tol_eq {}",
        c.seed, c.n_target, c.max_draws, c.bins, session.tolerances.eq
    )
    .unwrap();
    writeln!(out, "# constraints {}", run.constraint_count).unwrap();
    match &run.summary {
        Some(s) => {
            writeln!(
                out,
                "# accepted {} of {} draws, acceptance rate {}",
                s.accepted, s.draws_total, s.acceptance_rate
            )
            .unwrap();
            for r in &s.reductions {
                writeln!(out, "# reduction {r}").unwrap();
            }
        }
        None => writeln!(out, "# no sampling").unwrap(),
    }
    if let Some(report) = &run.report {
        writeln!(out, "# verdict {}", report.verdict).unwrap();
        if !report.suspects.is_empty() {
            writeln!(out, "# suspects {}", report.suspects.join(" ")).unwrap();
        }
    }
    for s in &run.suggestions {
        let text = session
            .statements
            .iter()
            .find(|st| st.id == s.statement)
            .map(|st| format_statement(&session.network, st))
            .unwrap_or_default();
        writeln!(
            out,
            "# suggest revising {} ({text}): {}",
            s.statement, s.restores
        )
        .unwrap();
    }
}

fn exit_notes(out: Outcome, exit: Exit) -> Outcome {
    match exit {
        Exit::InfeasibleProven => out.warn("infeasible: the statements are contradictory"),
        Exit::BudgetExhausted => out.warn("budget exhausted before the sample target was reached"),
        _ => out,
    }
}

/// Runs the pipeline and prints run statistics plus one summary row per
/// query. `--out` saves the session with its samples.
pub fn sample(
    input: &Path,
    run: &RunArgs,
    tol: &ToleranceArgs,
    queries: &[String],
    out_path: Option<&PathBuf>,
) -> Result<Outcome, UserError> {
    let mut session = run_session(&tol.apply(load_input(input)?)?, run)?;
    let mut out = String::new();
    run_header(&mut out, &session);
    let exit = run_exit(&session);
    let has_samples = session
        .run
        .as_ref()
        .and_then(|r| r.summary.as_ref())
        .is_some_and(|s| s.accepted > 0);
    if has_samples {
        for q in queries {
            session = session.compute_result(q, run.bins)?.0;
        }
        out.push_str("query,bins,mean,sd,min,max,defined,undefined\n");
        let run_results = session.run.as_ref().expect("just ran");
        for d in run_results.histograms.values() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                csv_field(&d.query),
                d.bin_count,
                d.mean,
                d.sample_sd,
                d.min,
                d.max,
                d.defined_count,
                d.undefined_count
            )
            .unwrap();
        }
    }
    if let Some(p) = out_path {
        session
            .save(p)
            .map_err(|e| UserError(format!("{}: {e}", p.display())))?;
    }
    Ok(exit_notes(
        with_warnings(Outcome::new(out, exit), &session),
        exit,
    ))
}

/// Histogram of one query as `bin_lo,bin_hi,count,density` rows. A saved
/// session is queried from its stored samples; a DSL file is run first.
pub fn query(
    input: &Path,
    q: &str,
    run: &RunArgs,
    tol: &ToleranceArgs,
) -> Result<Outcome, UserError> {
    let loaded = tol.apply(load_input(input)?)?;
    let session = if loaded.results_current() {
        loaded
    } else {
        run_session(&loaded, run)?
    };
    let exit = run_exit(&session);
    let bins = run.bins;
    let dist = match session.cached_result(q, bins)? {
        Some(d) => d,
        None => match session.compute_result(q, bins) {
            Ok((_, d)) => d,
            Err(SessionError::SamplesUnavailable(_) | SessionError::NoSamples)
                if exit != Exit::Success =>
            {
                let mut o = String::new();
                run_header(&mut o, &session);
                return Ok(exit_notes(Outcome::new(o, exit), exit));
            }
            Err(e) => return Err(e.into()),
        },
    };
    let mut out = String::new();
    writeln!(out, "# query {}", dist.query).unwrap();
    writeln!(
        out,
        "# mean {}, sd {}, min {}, max {}, defined {}, undefined {}",
        dist.mean, dist.sample_sd, dist.min, dist.max, dist.defined_count, dist.undefined_count
    )
    .unwrap();
    out.push_str("bin_lo,bin_hi,count,density\n");
    for b in 0..dist.bin_count {
        let (lo, hi) = dist.bin_edges(b);
        writeln!(
            out,
            "{lo},{hi},{},{}",
            dist.bin_counts[b], dist.densities[b]
        )
        .unwrap();
    }
    Ok(exit_notes(
        with_warnings(Outcome::new(out, exit), &session),
        exit,
    ))
}

/// Maximal cliques of the triangulated moral graph with their statements.
pub fn cliques(input: &Path) -> Result<Outcome, UserError> {
    let session = load_input(input)?;
    let view = CliquesView::of(&session);
    let mut out = String::new();
    for c in &view.cliques {
        write!(out, "clique {}: {}", c.index + 1, c.variables.join(" ")).unwrap();
        if !c.statements.is_empty() {
            write!(out, " [{}]", c.statements.join(" ")).unwrap();
        }
        out.push('\n');
    }
    writeln!(
        out,
        "elimination order: {}",
        view.elimination_order.join(" ")
    )
    .unwrap();
    let fill: Vec<String> = view
        .fill_in
        .iter()
        .map(|(a, b)| format!("{a}-{b}"))
        .collect();
    writeln!(
        out,
        "fill-in: {}",
        if fill.is_empty() {
            "none".to_string()
        } else {
            fill.join(" ")
        }
    )
    .unwrap();
    writeln!(
        out,
        "family check: {}",
        if view.family_check { "pass" } else { "fail" }
    )
    .unwrap();
    let mut o = Outcome::new(out, Exit::Success);
    for f in &view.findings {
        o = o.warn(format!("note: {}", f.message));
    }
    Ok(with_warnings(o, &session))
}
