//! Exact treatment of linear equalities before rejection sampling.
//!
//! Two patterns are removed from the rejection step:
//! * `Σ_{i∈S} c_i x_i = 0` with all `c_i` of one sign forces `x_i = 0` on `S`;
//! * `c · Σ_{i∈S} x_i = m` fixes the mass of block `S`.
//!
//! Block sets that form a laminar family (nested or disjoint) partition the
//! free constituents into cells of known mass. The uniform law on the simplex
//! conditioned on those masses is a product of scaled uniform simplices, one
//! per cell, so each cell is drawn independently. Equalities that fit neither
//! pattern stay behind as residual constraints.

use serde::{Deserialize, Serialize};

use super::SamplerError;
use crate::canonical::{ConstraintRelation, ConstraintSystem, Role};

const COEF_EPS: f64 = 1e-12;
const MASS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub indices: Vec<usize>,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ReductionKind {
    ZeroForced {
        constituents: usize,
    },
    BlockMass {
        constituents: usize,
        mass: f64,
    },
    /// Already implied exactly by earlier reductions.
    Implied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    /// Position of the equality in the system.
    pub constraint: usize,
    pub statement: Option<String>,
    pub kind: ReductionKind,
}

impl Reduction {
    pub fn describe(&self) -> String {
        let source = self.statement.as_deref().unwrap_or("axioms");
        match &self.kind {
            ReductionKind::ZeroForced { constituents } => {
                format!("{source}: {constituents} constituents forced to zero")
            }
            ReductionKind::BlockMass { constituents, mass } => {
                format!("{source}: block of {constituents} constituents carries mass {mass}")
            }
            ReductionKind::Implied => format!("{source}: implied by earlier reductions"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub k: usize,
    /// Constituents fixed at zero.
    pub zero: Vec<usize>,
    /// Free constituents, partitioned; cells with zero mass stay at zero.
    pub cells: Vec<Cell>,
    /// Constraints still checked by rejection, as positions in the system.
    pub residual: Vec<usize>,
    pub reductions: Vec<Reduction>,
}

impl SamplingPlan {
    /// Plain rejection: one cell holding everything, every non-axiom
    /// constraint residual.
    pub fn identity(system: &ConstraintSystem) -> Self {
        Self {
            k: system.k,
            zero: Vec::new(),
            cells: vec![Cell {
                indices: (0..system.k).collect(),
                mass: 1.0,
            }],
            residual: non_axioms(system).collect(),
            reductions: Vec::new(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.reductions.is_empty()
    }

    /// Number of free coordinates drawn per proposal.
    pub fn free_dimension(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| c.mass > 0.0)
            .map(|c| c.indices.len())
            .sum()
    }
}

fn non_axioms(system: &ConstraintSystem) -> impl Iterator<Item = usize> + '_ {
    system
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| c.provenance.role != Role::Axiom)
        .map(|(i, _)| i)
}

struct LinearEq {
    source: usize,
    coeffs: Vec<f64>,
    rhs: f64,
}

/// Sorted-set relation of `a` to `b`.
#[derive(Debug, PartialEq, Eq)]
enum SetRelation {
    Equal,
    Subset,
    Superset,
    Disjoint,
    Crossing,
}

fn relate(a: &[usize], b: &[usize]) -> SetRelation {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    match (common, common == a.len(), common == b.len()) {
        (0, _, _) if !a.is_empty() && !b.is_empty() => SetRelation::Disjoint,
        (_, true, true) => SetRelation::Equal,
        (_, true, false) => SetRelation::Subset,
        (_, false, true) => SetRelation::Superset,
        _ => SetRelation::Crossing,
    }
}

/// Builds the sampling plan for `system`, or reports that the exact
/// equalities contradict each other.
pub fn reduce_equalities(system: &ConstraintSystem) -> Result<SamplingPlan, SamplerError> {
    let k = system.k;
    let eqs: Vec<LinearEq> = non_axioms(system)
        .filter_map(|i| {
            let c = &system.constraints[i];
            if c.relation != ConstraintRelation::Eq {
                return None;
            }
            let (coeffs, constant) = c.lhs.linear_coefficients(k)?;
            Some(LinearEq {
                source: i,
                coeffs,
                rhs: c.rhs - constant,
            })
        })
        .collect();
    let statement_of = |i: usize| system.constraints[i].provenance.statement.clone();
    let contradiction = |i: usize, why: &str| {
        let c = &system.constraints[i];
        SamplerError::Contradiction(format!(
            "{}: `{}` {why}",
            c.provenance.statement.as_deref().unwrap_or("axioms"),
            c
        ))
    };

    let mut zero = vec![false; k];
    let mut used = vec![false; eqs.len()];
    let mut reductions = Vec::new();
    // Block candidates: (eq position, sorted free support, mass).
    let mut blocks: Vec<(usize, Vec<usize>, f64)>;
    loop {
        let mut changed = false;
        blocks = Vec::new();
        for (e, eq) in eqs.iter().enumerate() {
            if used[e] {
                continue;
            }
            let support: Vec<usize> = (0..k)
                .filter(|&j| !zero[j] && eq.coeffs[j].abs() > COEF_EPS)
                .collect();
            if support.is_empty() {
                if eq.rhs.abs() > MASS_EPS {
                    return Err(contradiction(
                        eq.source,
                        "requires mass on constituents forced to zero",
                    ));
                }
                used[e] = true;
                reductions.push(Reduction {
                    constraint: eq.source,
                    statement: statement_of(eq.source),
                    kind: ReductionKind::Implied,
                });
                continue;
            }
            let first = eq.coeffs[support[0]];
            let same_sign = support
                .iter()
                .all(|&j| eq.coeffs[j].signum() == first.signum());
            if eq.rhs.abs() <= MASS_EPS && same_sign {
                for &j in &support {
                    zero[j] = true;
                }
                used[e] = true;
                changed = true;
                reductions.push(Reduction {
                    constraint: eq.source,
                    statement: statement_of(eq.source),
                    kind: ReductionKind::ZeroForced {
                        constituents: support.len(),
                    },
                });
                continue;
            }
            let uniform = support
                .iter()
                .all(|&j| (eq.coeffs[j] - first).abs() <= COEF_EPS * first.abs().max(1.0));
            if uniform {
                blocks.push((e, support, eq.rhs / first));
            }
        }
        if !changed {
            break;
        }
    }

    for (e, _, mass) in &blocks {
        if !(-MASS_EPS..=1.0 + MASS_EPS).contains(mass) {
            return Err(contradiction(
                eqs[*e].source,
                "fixes a block mass outside [0, 1]",
            ));
        }
    }

    // Laminar family, largest sets first; the root is every free constituent.
    let root: Vec<usize> = (0..k).filter(|&j| !zero[j]).collect();
    if root.is_empty() {
        return Err(SamplerError::Contradiction(
            "every constituent is forced to zero".into(),
        ));
    }
    let mut family: Vec<(Vec<usize>, f64)> = vec![(root, 1.0)];
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.sort_by(|&a, &b| blocks[b].1.len().cmp(&blocks[a].1.len()));
    for bi in order {
        let (e, support, mass) = &blocks[bi];
        let source = eqs[*e].source;
        let mut fits = true;
        let mut duplicate_of = None;
        for (fi, (set, _)) in family.iter().enumerate() {
            match relate(support, set) {
                SetRelation::Equal => {
                    duplicate_of = Some(fi);
                    break;
                }
                SetRelation::Crossing | SetRelation::Superset => {
                    fits = false;
                    break;
                }
                SetRelation::Subset | SetRelation::Disjoint => {}
            }
        }
        if let Some(fi) = duplicate_of {
            if (family[fi].1 - mass).abs() > MASS_EPS {
                return Err(contradiction(
                    source,
                    "conflicts with another mass on the same block",
                ));
            }
            used[*e] = true;
            reductions.push(Reduction {
                constraint: source,
                statement: statement_of(source),
                kind: ReductionKind::Implied,
            });
        } else if fits {
            family.push((support.clone(), mass.max(0.0)));
            used[*e] = true;
            reductions.push(Reduction {
                constraint: source,
                statement: statement_of(source),
                kind: ReductionKind::BlockMass {
                    constituents: support.len(),
                    mass: *mass,
                },
            });
        }
    }

    // Each set's cell is what its children leave uncovered.
    let mut cells = Vec::with_capacity(family.len());
    for (fi, (set, mass)) in family.iter().enumerate() {
        let children: Vec<usize> = (0..family.len())
            .filter(|&c| c != fi && relate(&family[c].0, set) == SetRelation::Subset)
            .filter(|&c| {
                // direct child: no intermediate set between c and fi
                !(0..family.len()).any(|m| {
                    m != fi
                        && m != c
                        && relate(&family[c].0, &family[m].0) == SetRelation::Subset
                        && relate(&family[m].0, set) == SetRelation::Subset
                })
            })
            .collect();
        let mut covered = vec![false; k];
        let mut child_mass = 0.0;
        for &c in &children {
            child_mass += family[c].1;
            for &j in &family[c].0 {
                covered[j] = true;
            }
        }
        let indices: Vec<usize> = set.iter().copied().filter(|&j| !covered[j]).collect();
        let cell_mass = mass - child_mass;
        if cell_mass < -MASS_EPS {
            return Err(SamplerError::Contradiction(format!(
                "nested blocks carry {child_mass} inside a block of mass {mass}"
            )));
        }
        let cell_mass = cell_mass.max(0.0);
        if indices.is_empty() {
            if cell_mass > MASS_EPS {
                return Err(SamplerError::Contradiction(format!(
                    "a block of mass {mass} leaves {cell_mass} with no constituent to carry it"
                )));
            }
            continue;
        }
        cells.push(Cell {
            indices,
            mass: cell_mass,
        });
    }

    let used_sources: Vec<usize> = eqs
        .iter()
        .zip(&used)
        .filter(|(_, u)| **u)
        .map(|(e, _)| e.source)
        .collect();
    let residual = non_axioms(system)
        .filter(|i| !used_sources.contains(i))
        .collect();
    Ok(SamplingPlan {
        k,
        zero: (0..k).filter(|&j| zero[j]).collect(),
        cells,
        residual,
        reductions,
    })
}
