//! compile → normalize → LP bounds → equality reduction → sampling → verdict.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{extract_linear, probe_strict, BoundsBox, BoundsError, Closure, Polytope};
use crate::canonical::{compile_system, normalize, CompileError, ConstraintSystem, Tolerances};
use crate::consistency::{diagnose, ConsistencyReport};
use crate::model::Network;
use crate::sampler::{
    reduce_equalities, run_rejection, SampleSet, SamplerConfig, SamplerError, SamplingPlan,
    BOX_SLACK, DEFAULT_BINS, DEFAULT_MAX_DRAWS, DEFAULT_N_TARGET,
};
use crate::statements::Statement;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_target: usize,
    pub max_draws: u64,
    pub seed: u64,
    pub bins: usize,
    pub tolerances: Tolerances,
    /// Test proposals against the LP box before the constraints.
    pub quick_reject: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_target: DEFAULT_N_TARGET,
            max_draws: DEFAULT_MAX_DRAWS,
            seed: 0,
            bins: DEFAULT_BINS,
            tolerances: Tolerances::default(),
            quick_reject: true,
        }
    }
}

impl RunConfig {
    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            n_target: self.n_target,
            max_draws: self.max_draws,
            seed: self.seed,
            tolerances: self.tolerances,
        }
    }
}

/// What the linear subset of a system says.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum LinearEvidence {
    /// `bounds` is over the exact closure; `sampling_box` over the polytope
    /// with equalities widened to their acceptance bands.
    Feasible {
        bounds: BoundsBox,
        sampling_box: BoundsBox,
    },
    /// The closed linear polytope is empty.
    Infeasible,
    /// The polytope is non-empty but these strict constraints (positions in
    /// the analysed system) cannot hold anywhere on it.
    StrictUnsatisfiable {
        constraints: Vec<usize>,
        bounds: BoundsBox,
    },
    Numerical {
        message: String,
    },
}

impl LinearEvidence {
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            LinearEvidence::Infeasible | LinearEvidence::StrictUnsatisfiable { .. }
        )
    }

    pub fn bounds(&self) -> Option<&BoundsBox> {
        match self {
            LinearEvidence::Feasible { bounds, .. }
            | LinearEvidence::StrictUnsatisfiable { bounds, .. } => Some(bounds),
            _ => None,
        }
    }
}

/// LP feasibility, strict probe and both bounds boxes for `system`.
pub fn analyze_linear(system: &ConstraintSystem, tolerances: &Tolerances) -> LinearEvidence {
    let linear = extract_linear(system);
    let numerical = |e: BoundsError| LinearEvidence::Numerical {
        message: e.to_string(),
    };
    let exact = match Polytope::new(&linear, Closure::Exact) {
        Ok(p) => p,
        Err(BoundsError::Infeasible) => return LinearEvidence::Infeasible,
        Err(e) => return numerical(e),
    };
    let bounds = match exact.bounds() {
        Ok(b) => b,
        Err(e) => return numerical(e),
    };
    match probe_strict(&linear, &exact) {
        Ok(bad) if !bad.is_empty() => {
            return LinearEvidence::StrictUnsatisfiable {
                constraints: bad,
                bounds,
            }
        }
        Ok(_) => {}
        Err(e) => return numerical(e),
    }
    let sampling_box =
        match Polytope::new(&linear, Closure::Banded(*tolerances)).and_then(|p| p.bounds()) {
            Ok(b) => b,
            Err(e) => return numerical(e),
        };
    LinearEvidence::Feasible {
        bounds,
        sampling_box,
    }
}

/// Linear feasibility only (no bounds), used when probing many variants.
pub fn linear_feasible(system: &ConstraintSystem) -> Result<bool, BoundsError> {
    let linear = extract_linear(system);
    let exact = match Polytope::new(&linear, Closure::Exact) {
        Ok(p) => p,
        Err(BoundsError::Infeasible) => return Ok(false),
        Err(e) => return Err(e),
    };
    Ok(probe_strict(&linear, &exact)?.is_empty())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("sample {sample} lies outside the LP bounds box")]
    Unsound { sample: usize },
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Raw compilation, axioms first.
    pub system: ConstraintSystem,
    /// Deduplicated system used for the LP and for sampling.
    pub normalized: ConstraintSystem,
    pub linear: LinearEvidence,
    pub plan: Option<SamplingPlan>,
    /// Set when the exact equalities contradict each other.
    pub plan_error: Option<String>,
    pub samples: Option<SampleSet>,
    pub report: ConsistencyReport,
}

pub fn run_pipeline(
    network: &Network,
    statements: &[Statement],
    config: &RunConfig,
) -> Result<PipelineOutput, PipelineError> {
    let system = compile_system(statements, network)?;
    let normalized = normalize(&system);
    let linear = analyze_linear(&normalized, &config.tolerances);
    let mut plan = None;
    let mut plan_error = None;
    let mut samples = None;
    if !linear.is_infeasible() {
        match reduce_equalities(&normalized) {
            Ok(p) => {
                let quick = match (&linear, config.quick_reject) {
                    (LinearEvidence::Feasible { sampling_box, .. }, true) => Some(sampling_box),
                    _ => None,
                };
                let set = run_rejection(&normalized, &p, &config.sampler(), quick)?;
                if let LinearEvidence::Feasible { sampling_box, .. } = &linear {
                    if let Some(i) = set
                        .accepted
                        .iter()
                        .position(|x| !sampling_box.contains(x, BOX_SLACK))
                    {
                        return Err(PipelineError::Unsound { sample: i });
                    }
                }
                samples = Some(set);
                plan = Some(p);
            }
            Err(SamplerError::Contradiction(m)) => plan_error = Some(m),
            Err(e) => return Err(e.into()),
        }
    }
    let report = diagnose(
        &normalized,
        statements,
        &linear,
        samples.as_ref(),
        plan_error.as_deref(),
    );
    Ok(PipelineOutput {
        system,
        normalized,
        linear,
        plan,
        plan_error,
        samples,
        report,
    })
}
