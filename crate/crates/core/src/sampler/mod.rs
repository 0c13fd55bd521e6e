//! Uniform sampling on the probability simplex with rejection against a
//! constraint system, and second-order distributions over query values.

mod plan;
mod second_order;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::BoundsBox;
use crate::canonical::{eval_constraint, ConstraintSystem, Tolerances};

pub use plan::{reduce_equalities, Cell, Reduction, ReductionKind, SamplingPlan};
pub use second_order::{expected_value, second_order, QueryEvaluator, SecondOrderDistribution};

/// Proposals per deterministic substream.
pub const CHUNK_DRAWS: u64 = 4096;
pub const DEFAULT_N_TARGET: usize = 10_000;
pub const DEFAULT_MAX_DRAWS: u64 = 10_000_000;
pub const DEFAULT_BINS: usize = 50;
/// Slack applied when testing samples against an LP bounds box.
pub const BOX_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("the exact equalities are contradictory: {0}")]
    Contradiction(String),
    #[error("invalid sampler arguments: {0}")]
    InvalidArgument(String),
    #[error("the sample set is empty")]
    EmptySampleSet,
    #[error("the query is undefined at every sample")]
    AllUndefined,
}

/// `k` coordinates uniform on the unit simplex: normalized unit-rate
/// exponential variates.
pub fn draw_simplex<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let mut x: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let sum: f64 = x.iter().sum();
    for v in &mut x {
        *v /= sum;
    }
    x
}

/// One proposal from `plan`: each cell is a uniform simplex scaled to its mass.
pub fn draw_plan<R: Rng + ?Sized>(plan: &SamplingPlan, rng: &mut R) -> Vec<f64> {
    let mut x = vec![0.0; plan.k];
    for cell in &plan.cells {
        if cell.mass <= 0.0 {
            continue;
        }
        if cell.indices.len() == 1 {
            x[cell.indices[0]] = cell.mass;
            continue;
        }
        let draws = draw_simplex(cell.indices.len(), rng);
        for (&i, v) in cell.indices.iter().zip(draws) {
            x[i] = cell.mass * v;
        }
    }
    x
}

/// The RNG of substream `chunk` for `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_target: usize,
    pub max_draws: u64,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_target: DEFAULT_N_TARGET,
            max_draws: DEFAULT_MAX_DRAWS,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub k: usize,
    pub accepted: Vec<Vec<f64>>,
    /// Proposals drawn up to and including the last accepted one (or the
    /// whole budget when exhausted).
    pub draws_total: u64,
    pub seed: u64,
    pub n_target: usize,
    pub acceptance_rate: f64,
    /// Exact equality reductions applied before rejection.
    pub reductions: Vec<String>,
    /// The budget ran out before `n_target` acceptances.
    pub exhausted: bool,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    /// First `(sample, constraint)` pair where a sample violates `system`.
    pub fn first_violation(
        &self,
        system: &ConstraintSystem,
        tolerances: &Tolerances,
    ) -> Option<(usize, usize)> {
        self.accepted
            .iter()
            .enumerate()
            .find_map(|(s, x)| system.first_violation(x, tolerances).map(|c| (s, c)))
    }
}

fn accepts(
    system: &ConstraintSystem,
    plan: &SamplingPlan,
    x: &[f64],
    tolerances: &Tolerances,
    quick: Option<&BoundsBox>,
) -> bool {
    if let Some(b) = quick {
        if !b.contains(x, BOX_SLACK) {
            return false;
        }
    }
    plan.residual
        .iter()
        .all(|&i| eval_constraint(&system.constraints[i], x, tolerances).satisfied)
}

/// Draws from `plan` until `n_target` proposals satisfy every residual
/// constraint or `max_draws` is spent. Proposals are split into fixed-size
/// substreams evaluated in parallel and merged in substream order, so the
/// result depends only on the arguments. `quick_reject` is an optional sound
/// bounds box checked before the constraints.
pub fn run_rejection(
    system: &ConstraintSystem,
    plan: &SamplingPlan,
    config: &SamplerConfig,
    quick_reject: Option<&BoundsBox>,
) -> Result<SampleSet, SamplerError> {
    if config.n_target == 0 {
        return Err(SamplerError::InvalidArgument(
            "n_target must be at least 1".into(),
        ));
    }
    if config.max_draws < config.n_target as u64 {
        return Err(SamplerError::InvalidArgument(format!(
            "max_draws ({}) is below n_target ({})",
            config.max_draws, config.n_target
        )));
    }
    if plan.k != system.k {
        return Err(SamplerError::InvalidArgument(format!(
            "plan has {} constituents, system has {}",
            plan.k, system.k
        )));
    }
    let total_chunks = config.max_draws.div_ceil(CHUNK_DRAWS);
    let batch = (rayon::current_num_threads() as u64 * 4).max(1);
    let tolerances = config.tolerances;

    let run_chunk = |chunk: u64| -> Vec<(u64, Vec<f64>)> {
        let start = chunk * CHUNK_DRAWS;
        let end = (start + CHUNK_DRAWS).min(config.max_draws);
        let mut rng = chunk_rng(config.seed, chunk);
        let mut out = Vec::new();
        for d in start..end {
            let x = draw_plan(plan, &mut rng);
            if accepts(system, plan, &x, &tolerances, quick_reject) {
                out.push((d, x));
            }
        }
        out
    };

    let mut accepted = Vec::with_capacity(config.n_target.min(1 << 20));
    let mut draws_total = 0u64;
    let mut next = 0u64;
    'outer: while next < total_chunks {
        let upto = (next + batch).min(total_chunks);
        let results: Vec<Vec<(u64, Vec<f64>)>> =
            (next..upto).into_par_iter().map(run_chunk).collect();
        for (offset, found) in results.into_iter().enumerate() {
            for (d, x) in found {
                accepted.push(x);
                if accepted.len() == config.n_target {
                    draws_total = d + 1;
                    break 'outer;
                }
            }
            draws_total = ((next + offset as u64 + 1) * CHUNK_DRAWS).min(config.max_draws);
        }
        next = upto;
    }
    let exhausted = accepted.len() < config.n_target;
    let acceptance_rate = if draws_total == 0 {
        0.0
    } else {
        accepted.len() as f64 / draws_total as f64
    };
    Ok(SampleSet {
        k: system.k,
        accepted,
        draws_total,
        seed: config.seed,
        n_target: config.n_target,
        acceptance_rate,
        reductions: plan.reductions.iter().map(Reduction::describe).collect(),
        exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::compile_system;
    use crate::statements::parse_document;

    fn system(text: &str) -> ConstraintSystem {
        let d = parse_document(text).unwrap();
        compile_system(&d.statements, &d.network).unwrap()
    }

    fn config(n: usize, max: u64, seed: u64) -> SamplerConfig {
        SamplerConfig {
            n_target: n,
            max_draws: max,
            seed,
            tolerances: Tolerances::default(),
        }
    }

    #[test]
    fn draws_lie_on_the_simplex() {
        let mut rng = chunk_rng(7, 0);
        for k in [2, 5, 16] {
            let x = draw_simplex(k, &mut rng);
            assert!(x.iter().all(|v| *v >= 0.0));
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let a = draw_simplex(16, &mut chunk_rng(3, 5));
        let b = draw_simplex(16, &mut chunk_rng(3, 5));
        let c = draw_simplex(16, &mut chunk_rng(3, 6));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn axioms_only_accept_everything() {
        let sys = system("var A : a > b\n");
        let plan = SamplingPlan::identity(&sys);
        let s = run_rejection(&sys, &plan, &config(1000, 10_000, 1), None).unwrap();
        assert_eq!(s.len(), 1000);
        assert_eq!(s.draws_total, 1000);
        assert_eq!(s.acceptance_rate, 1.0);
        assert!(!s.exhausted);
    }

    #[test]
    fn budget_exhaustion_returns_partial_set() {
        let sys = system("var A : a > b\nvar B : c > d\nP(a) = 0.5\nP(c) = 0.5\nP(a, c) = 0.01\n");
        let plan = SamplingPlan::identity(&sys);
        let s = run_rejection(&sys, &plan, &config(100, 5000, 1), None).unwrap();
        assert!(s.exhausted);
        assert_eq!(s.draws_total, 5000);
        assert!(s.len() < 100);
        assert!(s.first_violation(&sys, &Tolerances::default()).is_none());
    }

    #[test]
    fn argument_checks() {
        let sys = system("var A : a > b\n");
        let plan = SamplingPlan::identity(&sys);
        assert!(run_rejection(&sys, &plan, &config(0, 10, 1), None).is_err());
        assert!(run_rejection(&sys, &plan, &config(10, 5, 1), None).is_err());
    }

    #[test]
    fn result_is_independent_of_thread_count() {
        let sys = system("var A : a > b\nvar B : c > d\nP(a) > P(c)\n");
        let plan = reduce_equalities(&sys).unwrap();
        let cfg = config(3000, 1_000_000, 42);
        let multi = run_rejection(&sys, &plan, &cfg, None).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_rejection(&sys, &plan, &cfg, None).unwrap());
        assert_eq!(multi, single);
    }
}
