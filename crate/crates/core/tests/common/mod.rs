//! Random networks and statements shared by the property tests.
#![allow(dead_code)]

use elicit_core::canonical::compile_system;
use elicit_core::model::Variable;
use elicit_core::statements::{ProbTerm, Relation, Sign};
use elicit_core::{Event, Network, Statement, StatementBody};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NAMES: [&str; 4] = ["A", "B", "C", "D"];

/// Variables `A..` with values `a0, a1, ..`; `edge_bits` picks forward edges.
pub fn build_network(arities: &[usize], edge_bits: u32) -> Network {
    let vars: Vec<Variable> = arities
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let values: Vec<String> = (0..a)
                .map(|p| format!("{}{p}", NAMES[i].to_lowercase()))
                .collect();
            let refs: Vec<&str> = values.iter().map(String::as_str).collect();
            Variable::new(NAMES[i], &refs)
        })
        .collect();
    let mut edges = Vec::new();
    let mut bit = 0;
    let names = &NAMES[..arities.len()];
    for (i, &parent) in names.iter().enumerate() {
        for &child in &names[i + 1..] {
            if edge_bits & (1 << bit) != 0 {
                edges.push((parent, child));
            }
            bit += 1;
        }
    }
    Network::build(vars, &edges).unwrap()
}

pub fn network() -> impl Strategy<Value = Network> {
    (prop::collection::vec(2usize..=3, 2..=4), any::<u32>())
        .prop_map(|(arities, bits)| build_network(&arities, bits))
}

/// Uniform point on the simplex with every coordinate positive.
pub fn positive_point(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..k)
        .map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-9)
        .collect();
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    x
}

fn random_event(net: &Network, vars: &[usize], rng: &mut impl Rng) -> Event {
    let n = rng.random_range(1..=vars.len().min(2));
    let chosen: Vec<usize> = vars.choose_multiple(rng, n).copied().collect();
    let lits = chosen
        .into_iter()
        .map(|v| (v, rng.random_range(0..net.variable(v).arity())))
        .collect();
    Event::from_indices(net, lits).unwrap()
}

fn random_term(net: &Network, rng: &mut impl Rng, conditional: bool) -> ProbTerm {
    let all: Vec<usize> = (0..net.len()).collect();
    let target = random_event(net, &all, rng);
    let rest: Vec<usize> = all
        .iter()
        .copied()
        .filter(|v| target.value_of(*v).is_none())
        .collect();
    if conditional && !rest.is_empty() {
        ProbTerm::conditional(target, random_event(net, &rest, rng))
    } else {
        ProbTerm::prior(target)
    }
}

fn prob(rng: &mut impl Rng) -> f64 {
    rng.random_range(5..=95) as f64 / 100.0
}

fn sign(rng: &mut impl Rng) -> Sign {
    *[Sign::Positive, Sign::Negative, Sign::Zero]
        .choose(rng)
        .unwrap()
}

/// Pairs of parents sharing a child: `(first, second, child)`.
fn co_parents(net: &Network) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for c in 0..net.len() {
        let ps = net.parents(c);
        for (i, &a) in ps.iter().enumerate() {
            for &b in &ps[i + 1..] {
                out.push((a, b, c));
            }
        }
    }
    out
}

/// Which statement families `random_statement` may produce.
#[derive(Clone, Copy, Debug)]
pub enum Mix {
    All,
    Quantitative,
    /// Linear after compilation: priors, conditionals and comparisons of priors.
    Linear,
}

pub fn random_statement(net: &Network, id: &str, mix: Mix, rng: &mut impl Rng) -> Statement {
    let co = co_parents(net);
    let kinds: &[u8] = match mix {
        Mix::All => &[0, 1, 2, 3, 4, 5, 6],
        Mix::Quantitative => &[0, 1, 2, 3],
        Mix::Linear => &[0, 1, 2, 3],
    };
    loop {
        let kind = *kinds.choose(rng).unwrap();
        let conditional = rng.random_bool(0.5);
        let body = match kind {
            0 => StatementBody::Point {
                term: random_term(net, rng, conditional),
                p: prob(rng),
            },
            1 => {
                let (a, b) = (prob(rng), prob(rng));
                if a == b {
                    continue;
                }
                StatementBody::Interval {
                    term: random_term(net, rng, conditional),
                    lo: a.min(b),
                    hi: a.max(b),
                }
            }
            2 | 3 => {
                let both_prior = matches!(mix, Mix::Linear);
                let lhs = random_term(net, rng, !both_prior && conditional);
                let rhs_conditional = !both_prior && rng.random_bool(0.5);
                let rhs = random_term(net, rng, rhs_conditional);
                if lhs == rhs {
                    continue;
                }
                let relation = *[Relation::Lt, Relation::Le, Relation::Ge, Relation::Gt]
                    .choose(rng)
                    .unwrap();
                StatementBody::Comparison {
                    lhs_coef: rng.random_range(1..=20) as f64 / 10.0,
                    lhs,
                    relation,
                    rhs_coef: if kind == 2 {
                        1.0
                    } else {
                        rng.random_range(1..=20) as f64 / 10.0
                    },
                    rhs,
                }
            }
            4 => {
                let Some(&(source, target)) = net.edges().choose(rng) else {
                    continue;
                };
                StatementBody::Influence {
                    sign: sign(rng),
                    source,
                    target,
                }
            }
            5 => {
                let Some(&(a, b, c)) = co.choose(rng) else {
                    continue;
                };
                StatementBody::AdditiveSynergy {
                    sign: sign(rng),
                    pair: (a, b),
                    target: c,
                }
            }
            _ => {
                let Some(&(a, b, c)) = co.choose(rng) else {
                    continue;
                };
                StatementBody::ProductSynergy {
                    sign: sign(rng),
                    pair: (a, b),
                    effect_var: c,
                    effect_value: rng.random_range(0..net.variable(c).arity()),
                }
            }
        };
        let s = Statement::new(id, body);
        if compile_system(std::slice::from_ref(&s), net).is_ok() {
            return s;
        }
    }
}

pub fn random_statements(net: &Network, n: usize, mix: Mix, seed: u64) -> Vec<Statement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=n)
        .map(|i| random_statement(net, &format!("s{i}"), mix, &mut rng))
        .collect()
}

/// A network plus up to `max` statements drawn from `mix`.
pub fn scenario(max: usize, mix: Mix) -> impl Strategy<Value = (Network, Vec<Statement>)> {
    (network(), 0..=max, any::<u64>()).prop_map(move |(net, n, seed)| {
        let st = random_statements(&net, n, mix, seed);
        (net, st)
    })
}

pub const HIV: &str = "var H : h > no_h\nvar N : n > no_n\nvar I : i > no_i\nvar C : c > no_c\n\
                       edge N -> H\nedge I -> H\nedge C -> H\nedge I -> C\n";
