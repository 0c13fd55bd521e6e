mod common;

use common::{scenario, Mix, HIV};
use elicit_core::canonical::{compile_system, normalize};
use elicit_core::sampler::{
    draw_plan, draw_simplex, reduce_equalities, run_rejection, SamplerConfig, SamplingPlan,
};
use elicit_core::statements::parse_document;
use elicit_core::Tolerances;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(n: usize, max: u64, seed: u64) -> SamplerConfig {
    SamplerConfig {
        n_target: n,
        max_draws: max,
        seed,
        tolerances: Tolerances::default(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Every accepted sample satisfies the whole system, reductions included.
    #[test]
    fn accepted_samples_satisfy_the_system((net, st) in scenario(4, Mix::All), seed in any::<u64>()) {
        let system = normalize(&compile_system(&st, &net).unwrap());
        let Ok(plan) = reduce_equalities(&system) else { return Ok(()) };
        let set = run_rejection(&system, &plan, &config(20, 20_000, seed), None).unwrap();
        prop_assert_eq!(set.first_violation(&system, &Tolerances::default()), None);
        prop_assert!(set.len() <= 20);
        prop_assert_eq!(set.exhausted, set.len() < 20);
        for x in &set.accepted {
            prop_assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(x.iter().all(|v| *v >= 0.0));
        }
    }

    /// Plan proposals honor the zero set and every cell's mass.
    #[test]
    fn plan_proposals_respect_block_masses((net, st) in scenario(4, Mix::Quantitative), seed in any::<u64>()) {
        let system = normalize(&compile_system(&st, &net).unwrap());
        let Ok(plan) = reduce_equalities(&system) else { return Ok(()) };
        let masses: f64 = plan.cells.iter().map(|c| c.mass).sum();
        prop_assert!((masses - 1.0).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let x = draw_plan(&plan, &mut rng);
            for &z in &plan.zero {
                prop_assert_eq!(x[z], 0.0);
            }
            for cell in &plan.cells {
                let s: f64 = cell.indices.iter().map(|&i| x[i]).sum();
                prop_assert!((s - cell.mass.max(0.0)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn simplex_marginal_is_beta_one_k_minus_one() {
    let k = 16;
    let n = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut first: Vec<f64> = Vec::with_capacity(n);
    let mut mean = vec![0.0; k];
    for _ in 0..n {
        let x = draw_simplex(k, &mut rng);
        for (m, v) in mean.iter_mut().zip(&x) {
            *m += v / n as f64;
        }
        first.push(x[0]);
    }
    for m in &mean {
        assert!((m - 1.0 / k as f64).abs() < 0.003, "{m}");
    }
    // Kolmogorov–Smirnov against F(t) = 1 − (1 − t)^(k−1)
    first.sort_by(f64::total_cmp);
    let cdf = |t: f64| 1.0 - (1.0 - t).powi(k as i32 - 1);
    let d = first
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = cdf(t);
            (f - i as f64 / n as f64)
                .abs()
                .max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value is 1.63 / sqrt(n)
    assert!(d < 1.63 / (n as f64).sqrt(), "KS statistic {d}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let doc = parse_document(&format!("{HIV}P(i) > P(n)\nS+(N,H)\n")).unwrap();
    let system = normalize(&compile_system(&doc.statements, &doc.network).unwrap());
    let plan = reduce_equalities(&system).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_rejection(&system, &plan, &config(500, 1_000_000, 42), None).unwrap())
    };
    let one = run(1);
    assert_eq!(one.len(), 500);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
    assert_ne!(
        one.accepted,
        run_rejection(&system, &plan, &config(500, 1_000_000, 43), None)
            .unwrap()
            .accepted
    );
}

#[test]
fn contradictory_equalities_are_never_accepted() {
    let doc = parse_document(&format!("{HIV}P(h) = 0.2\nP(h) = 0.3\n")).unwrap();
    let system = normalize(&compile_system(&doc.statements, &doc.network).unwrap());
    let plan = SamplingPlan::identity(&system);
    for seed in [1, 2, 3] {
        let set = run_rejection(&system, &plan, &config(1, 200_000, seed), None).unwrap();
        assert!(set.is_empty());
        assert!(set.exhausted);
        assert_eq!(set.draws_total, 200_000);
    }
}
