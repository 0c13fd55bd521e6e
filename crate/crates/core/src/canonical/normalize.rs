use std::collections::HashSet;

use super::{Constraint, ConstraintRelation, ConstraintSystem};

type Key = (
    Vec<(u64, Vec<u32>)>,
    ConstraintRelation,
    u64,
    Option<u64>,
    Option<Vec<(u64, Vec<u32>)>>,
);

fn key(c: &Constraint) -> Key {
    (
        c.lhs.key(),
        c.relation,
        c.rhs.to_bits(),
        c.tol_eq.map(f64::to_bits),
        c.band_scale.as_ref().map(|p| p.key()),
    )
}

/// `0 ⋈ rhs` that holds regardless of `x`.
fn is_tautology(c: &Constraint) -> bool {
    if !c.lhs.is_zero() {
        return false;
    }
    match c.relation {
        ConstraintRelation::Eq => c.rhs == 0.0,
        ConstraintRelation::Ge => 0.0 >= c.rhs,
        ConstraintRelation::Gt => 0.0 > c.rhs,
    }
}

/// True when every point of the probability simplex satisfies the linear
/// inequality `c`. A linear function attains its minimum over the simplex at
/// a vertex, i.e. at its smallest coefficient (0 for absent coordinates).
fn implied_by_axioms(c: &Constraint, k: usize) -> bool {
    if c.relation == ConstraintRelation::Eq {
        return false;
    }
    let Some((coeffs, constant)) = c.lhs.linear_coefficients(k) else {
        return false;
    };
    let min = coeffs.iter().copied().fold(f64::INFINITY, f64::min) + constant;
    match c.relation {
        ConstraintRelation::Ge => min >= c.rhs,
        ConstraintRelation::Gt => min > c.rhs,
        ConstraintRelation::Eq => false,
    }
}

/// Removes duplicate constraints (first occurrence wins) and tautologies,
/// and flags statement constraints the axioms already imply. The feasible
/// set is unchanged.
pub fn normalize(system: &ConstraintSystem) -> ConstraintSystem {
    let mut seen = HashSet::new();
    let mut constraints = Vec::with_capacity(system.constraints.len());
    for c in &system.constraints {
        if is_tautology(c) || !seen.insert(key(c)) {
            continue;
        }
        let mut c = c.clone();
        c.redundant = c.provenance.statement.is_some() && implied_by_axioms(&c, system.k);
        constraints.push(c);
    }
    ConstraintSystem {
        k: system.k,
        constraints,
        dedup_applied: true,
    }
}
