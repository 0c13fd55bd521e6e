//! Per-constituent bounds from the linear part of a constraint system.
//!
//! Only degree ≤ 1 constraints take part; ignoring the rest enlarges the
//! feasible set, so the resulting box stays sound. Strict inequalities enter
//! the LP as their closures and are checked separately by [`probe_strict`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{ConstraintRelation, ConstraintSystem, Tolerances};
use crate::lp::{FeasibleTableau, LinearRow, LpError, LpOptions, RowRelation};

/// A strict constraint whose maximum over the polytope is at most this is
/// reported as unsatisfiable.
pub const STRICT_PROBE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    /// Position in the source system.
    pub source: usize,
    pub coeffs: Vec<f64>,
    pub relation: ConstraintRelation,
    /// Right-hand side with the polynomial's constant term moved across.
    pub rhs: f64,
    /// Equality band half-width as `tau * (band_coeffs · x + band_constant)`;
    /// `None` means a constant band `tau`.
    pub band: Option<(Vec<f64>, f64)>,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSubset {
    pub k: usize,
    pub constraints: Vec<LinearConstraint>,
    /// Equalities whose band scale is nonlinear; they are left out of the
    /// banded polytope.
    pub unbandable: Vec<usize>,
}

impl LinearSubset {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn strict(&self) -> impl Iterator<Item = &LinearConstraint> {
        self.constraints
            .iter()
            .filter(|c| c.relation == ConstraintRelation::Gt)
    }
}

/// Collects the degree ≤ 1 constraints of `system`.
pub fn extract_linear(system: &ConstraintSystem) -> LinearSubset {
    let k = system.k;
    let mut constraints = Vec::new();
    let mut unbandable = Vec::new();
    for (source, c) in system.constraints.iter().enumerate() {
        let Some((coeffs, constant)) = c.lhs.linear_coefficients(k) else {
            continue;
        };
        let band = match &c.band_scale {
            Some(scale) => match scale.linear_coefficients(k) {
                Some(lin) => Some(lin),
                None => {
                    unbandable.push(source);
                    None
                }
            },
            None => None,
        };
        constraints.push(LinearConstraint {
            source,
            coeffs,
            relation: c.relation,
            rhs: c.rhs - constant,
            band,
            tau: c.tol_eq,
        });
    }
    LinearSubset {
        k,
        constraints,
        unbandable,
    }
}

/// Which closed polytope the LP works over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Closure {
    /// Equalities hold exactly; strict relations become non-strict.
    Exact,
    /// Equalities are widened to the acceptance band used by the sampler.
    Banded(Tolerances),
}

fn lp_rows(linear: &LinearSubset, closure: Closure) -> Vec<LinearRow> {
    let mut rows = Vec::with_capacity(linear.len() + 1);
    for c in &linear.constraints {
        match (c.relation, closure) {
            (ConstraintRelation::Eq, Closure::Exact) => {
                rows.push(LinearRow::new(c.coeffs.clone(), RowRelation::Eq, c.rhs))
            }
            (ConstraintRelation::Eq, Closure::Banded(tol)) => {
                if linear.unbandable.contains(&c.source) {
                    continue;
                }
                let tau = c.tau.unwrap_or(tol.eq);
                // |a·x − rhs| ≤ τ·(d·x + e)
                let (d, e) = match &c.band {
                    Some((d, e)) => (d.clone(), *e),
                    None => (vec![0.0; linear.k], 1.0),
                };
                let upper: Vec<f64> = c.coeffs.iter().zip(&d).map(|(a, d)| a - tau * d).collect();
                let lower: Vec<f64> = c.coeffs.iter().zip(&d).map(|(a, d)| a + tau * d).collect();
                rows.push(LinearRow::new(upper, RowRelation::Le, c.rhs + tau * e));
                rows.push(LinearRow::new(lower, RowRelation::Ge, c.rhs - tau * e));
            }
            (_, Closure::Exact) => {
                rows.push(LinearRow::new(c.coeffs.clone(), RowRelation::Ge, c.rhs))
            }
            (_, Closure::Banded(tol)) => {
                let slack = if c.relation == ConstraintRelation::Ge {
                    tol.ineq
                } else {
                    0.0
                };
                rows.push(LinearRow::new(
                    c.coeffs.clone(),
                    RowRelation::Ge,
                    c.rhs - slack,
                ))
            }
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("the linear constraints admit no distribution")]
    Infeasible,
    #[error("LP failure: {0}")]
    Numerical(LpError),
}

impl From<LpError> for BoundsError {
    fn from(e: LpError) -> Self {
        match e {
            LpError::Infeasible => BoundsError::Infeasible,
            other => BoundsError::Numerical(other),
        }
    }
}

/// The feasible polytope after phase one, ready for repeated optimization.
#[derive(Debug, Clone)]
pub struct Polytope {
    k: usize,
    tableau: FeasibleTableau,
}

impl Polytope {
    pub fn new(linear: &LinearSubset, closure: Closure) -> Result<Self, BoundsError> {
        let rows = lp_rows(linear, closure);
        let tableau = FeasibleTableau::new(linear.k, &rows, LpOptions::default())?;
        Ok(Self {
            k: linear.k,
            tableau,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn point(&self) -> Vec<f64> {
        self.tableau.feasible_point()
    }

    pub fn maximize(&self, objective: &[f64]) -> Result<f64, BoundsError> {
        Ok(self.tableau.maximize(objective)?.objective)
    }

    /// Per-constituent minima and maxima: `2k` independent LPs.
    pub fn bounds(&self) -> Result<BoundsBox, BoundsError> {
        let k = self.k;
        let solved: Result<Vec<(f64, f64)>, LpError> = (0..k)
            .into_par_iter()
            .map(|i| {
                let mut e = vec![0.0; k];
                e[i] = 1.0;
                let lo = self.tableau.minimize(&e)?.objective;
                let hi = self.tableau.maximize(&e)?.objective;
                Ok((lo, hi))
            })
            .collect();
        let (lo, hi): (Vec<f64>, Vec<f64>) = solved?
            .into_iter()
            .map(|(lo, hi)| {
                let lo = lo.clamp(0.0, 1.0);
                (lo, hi.clamp(lo, 1.0))
            })
            .unzip();
        Ok(BoundsBox { lo, hi })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundsBox {
    pub fn unit(k: usize) -> Self {
        Self {
            lo: vec![0.0; k],
            hi: vec![1.0; k],
        }
    }

    pub fn k(&self) -> usize {
        self.lo.len()
    }

    /// True when every coordinate lies within its interval widened by `slack`.
    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (lo, hi))| *v >= lo - slack && *v <= hi + slack)
    }

    /// Coordinates where `self` is tighter than or equal to `other`.
    pub fn within(&self, other: &BoundsBox, slack: f64) -> bool {
        self.lo.iter().zip(&other.lo).all(|(a, b)| *a >= b - slack)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| *a <= b + slack)
    }
}

/// Convenience wrapper: polytope plus its bounds box.
pub fn solve_bounds(linear: &LinearSubset, closure: Closure) -> Result<BoundsBox, BoundsError> {
    Polytope::new(linear, closure)?.bounds()
}

/// Sources of strict linear constraints that cannot be strictly satisfied
/// anywhere on `polytope`. Strict constraints that each hold somewhere hold
/// jointly at the average of their witnesses, so an empty result means the
/// linear subset with strictness is feasible.
pub fn probe_strict(linear: &LinearSubset, polytope: &Polytope) -> Result<Vec<usize>, BoundsError> {
    let strict: Vec<&LinearConstraint> = linear.strict().collect();
    let maxima: Result<Vec<f64>, BoundsError> = strict
        .par_iter()
        .map(|c| Ok(polytope.maximize(&c.coeffs)? - c.rhs))
        .collect();
    Ok(strict
        .iter()
        .zip(maxima?)
        .filter(|(_, m)| *m <= STRICT_PROBE_EPS)
        .map(|(c, _)| c.source)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::compile_system;
    use crate::statements::parse_document;

    const HIV: &str = "var H : h > no_h\nvar N : n > no_n\nvar I : i > no_i\nvar C : c > no_c\n\
                       edge N -> H\nedge I -> H\nedge C -> H\nedge I -> C\n";

    fn linear(statements: &str) -> LinearSubset {
        let d = parse_document(&format!("{HIV}{statements}")).unwrap();
        extract_linear(&compile_system(&d.statements, &d.network).unwrap())
    }

    #[test]
    fn extraction_keeps_degree_at_most_one() {
        assert_eq!(linear("").len(), 17);
        let l = linear("P(i | c) = 1\nP(i) > P(n)\nP(h | n) > P(h | i)\n0.1 <= P(n | h) <= 0.25\n");
        // 26 compiled, the single degree-2 main is dropped
        assert_eq!(l.len(), 25);
        let l = linear("Y-({I,C},H)\n");
        assert_eq!(l.len(), 17 + 8);
        assert_eq!(l.strict().count(), 8);
    }

    #[test]
    fn axioms_only_give_unit_box() {
        let b = solve_bounds(&linear(""), Closure::Exact).unwrap();
        assert!(b.lo.iter().all(|v| v.abs() < 1e-12));
        assert!(b.hi.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn point_prior_caps_its_block() {
        let b = solve_bounds(&linear("P(h) = 0.005\n"), Closure::Exact).unwrap();
        for i in 0..8 {
            assert!(b.lo[i].abs() < 1e-12);
            assert!((b.hi[i] - 0.005).abs() < 1e-12);
        }
        for i in 8..16 {
            assert!((b.hi[i] - 0.995).abs() < 1e-12);
        }
        let banded = solve_bounds(
            &linear("P(h) = 0.005\n"),
            Closure::Banded(Tolerances::default()),
        )
        .unwrap();
        assert!((banded.hi[0] - 0.007).abs() < 1e-12);
        assert!(b.within(&banded, 0.0));
    }

    #[test]
    fn contradictory_priors_are_infeasible() {
        let l = linear("P(h) = 0.2\nP(h) = 0.3\n");
        assert_eq!(
            solve_bounds(&l, Closure::Exact),
            Err(BoundsError::Infeasible)
        );
        assert_eq!(
            solve_bounds(&l, Closure::Banded(Tolerances::default())),
            Err(BoundsError::Infeasible)
        );
    }

    #[test]
    fn strict_probe() {
        let l = linear("P(c | i) = 0.5\nP(c) = 0\n");
        let p = Polytope::new(&l, Closure::Exact).unwrap();
        let bad = probe_strict(&l, &p).unwrap();
        assert_eq!(bad.len(), 1);
        let l = linear("P(c | i) = 0.5\n");
        let p = Polytope::new(&l, Closure::Exact).unwrap();
        assert!(probe_strict(&l, &p).unwrap().is_empty());
    }

    #[test]
    fn conditional_band_scales_with_denominator() {
        // Pr(h | n) = 0.5 within 0.002 on the conditional scale.
        let l = linear("P(h | n) = 0.5\nP(n) = 0.1\n");
        let eq = l.constraints.iter().find(|c| c.band.is_some()).unwrap();
        assert_eq!(eq.band.as_ref().unwrap().1, 0.0);
        let b = solve_bounds(&l, Closure::Banded(Tolerances::default())).unwrap();
        // Pr(h,n) ≤ (0.5 + 0.002)·Pr(n) and Pr(n) ≤ 0.102
        let hn_max: f64 = b.hi[0];
        assert!(hn_max <= 0.502 * 0.102 + 1e-9);
    }
}
