//! Dense two-phase primal simplex over non-negative variables.
//!
//! Phase one finds a basic feasible solution once; any number of objectives
//! can then be optimized from a copy of that tableau. Pricing is Dantzig's
//! most-negative reduced cost, switching to Bland's smallest-index rule
//! after a run of degenerate pivots so that cycling cannot occur.

use thiserror::Error;

/// Pivot elements and reduced costs below this magnitude count as zero.
const PIVOT_EPS: f64 = 1e-11;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowRelation {
    Le,
    Ge,
    Eq,
}

/// `coeffs · x  relation  rhs`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub coeffs: Vec<f64>,
    pub relation: RowRelation,
    pub rhs: f64,
}

impl LinearRow {
    pub fn new(coeffs: Vec<f64>, relation: RowRelation, rhs: f64) -> Self {
        Self {
            coeffs,
            relation,
            rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("the linear constraints are infeasible")]
    Infeasible,
    #[error("the objective is unbounded")]
    Unbounded,
    #[error("simplex did not converge within {0} pivots")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    /// Phase-one objective magnitude accepted as feasible.
    pub feasibility_tol: f64,
    /// Pivot cap per phase; 0 selects a size-based default.
    pub max_pivots: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-9,
            max_pivots: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

/// A tableau holding a basic feasible solution of the constraint rows.
#[derive(Debug, Clone)]
pub struct FeasibleTableau {
    n: usize,
    /// Constraint rows, each `cols + 1` wide (last entry is the rhs).
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Columns that may enter the basis (artificials are excluded after
    /// phase one).
    allowed: Vec<bool>,
    max_pivots: usize,
}

impl FeasibleTableau {
    /// Runs phase one over `n` non-negative variables.
    pub fn new(n: usize, constraints: &[LinearRow], options: LpOptions) -> Result<Self, LpError> {
        let m = constraints.len();
        let mut slack_cols = 0;
        let mut art_cols = 0;
        let normalized: Vec<(Vec<f64>, RowRelation, f64)> = constraints
            .iter()
            .map(|r| {
                debug_assert_eq!(r.coeffs.len(), n);
                if r.rhs < 0.0 {
                    let flipped = match r.relation {
                        RowRelation::Le => RowRelation::Ge,
                        RowRelation::Ge => RowRelation::Le,
                        RowRelation::Eq => RowRelation::Eq,
                    };
                    (r.coeffs.iter().map(|c| -c).collect(), flipped, -r.rhs)
                } else {
                    (r.coeffs.clone(), r.relation, r.rhs)
                }
            })
            .collect();
        for (_, rel, _) in &normalized {
            match rel {
                RowRelation::Le => slack_cols += 1,
                RowRelation::Ge => {
                    slack_cols += 1;
                    art_cols += 1;
                }
                RowRelation::Eq => art_cols += 1,
            }
        }
        let cols = n + slack_cols + art_cols;
        let art_start = n + slack_cols;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut next_slack, mut next_art) = (n, art_start);
        for (coeffs, rel, rhs) in normalized {
            let mut row = vec![0.0; cols + 1];
            row[..n].copy_from_slice(&coeffs);
            row[cols] = rhs;
            match rel {
                RowRelation::Le => {
                    row[next_slack] = 1.0;
                    basis.push(next_slack);
                    next_slack += 1;
                }
                RowRelation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
                RowRelation::Eq => {
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
        }
        let max_pivots = if options.max_pivots == 0 {
            50 * (m + cols) + 1000
        } else {
            options.max_pivots
        };
        let mut tab = Self {
            n,
            rows,
            basis,
            allowed: vec![true; cols],
            max_pivots,
        };

        if art_cols > 0 {
            // Phase one: maximize −Σ artificials.
            let mut cost = vec![0.0; cols];
            for c in cost.iter_mut().skip(art_start) {
                *c = -1.0;
            }
            let mut obj = tab.reduced_costs(&cost);
            tab.optimize(&mut obj)?;
            if obj[cols] < -options.feasibility_tol {
                return Err(LpError::Infeasible);
            }
            tab.drive_out_artificials(art_start);
            for a in tab.allowed.iter_mut().skip(art_start) {
                *a = false;
            }
        }
        Ok(tab)
    }

    fn cols(&self) -> usize {
        self.allowed.len()
    }

    /// Objective row `d_j = c_B · column_j − c_j`, last entry the objective value.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let cols = self.cols();
        let mut obj: Vec<f64> = (0..=cols)
            .map(|j| if j < cols { -cost[j] } else { 0.0 })
            .collect();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(row) {
                    *o += cb * v;
                }
            }
        }
        obj
    }

    fn pivot(&mut self, r: usize, col: usize, obj: &mut [f64]) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[col] = 0.0;
            }
        }
        let f = obj[col];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            obj[col] = 0.0;
        }
        self.basis[r] = col;
    }

    /// Maximizes the objective row in place.
    fn optimize(&mut self, obj: &mut [f64]) -> Result<(), LpError> {
        let cols = self.cols();
        let mut degenerate = 0usize;
        for _ in 0..self.max_pivots {
            let bland = degenerate >= DEGENERATE_RUN;
            let entering = if bland {
                (0..cols).find(|&j| self.allowed[j] && obj[j] < -PIVOT_EPS)
            } else {
                (0..cols)
                    .filter(|&j| self.allowed[j] && obj[j] < -PIVOT_EPS)
                    .min_by(|&a, &b| obj[a].total_cmp(&obj[b]))
            };
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[col];
                if a > PIVOT_EPS {
                    let ratio = row[cols].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - 1e-12
                                || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(LpError::Unbounded);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, col, obj);
        }
        Err(LpError::IterationLimit(self.max_pivots))
    }

    /// Pivots zero-valued artificials out of the basis; rows where that is
    /// impossible are linearly dependent and get dropped.
    fn drive_out_artificials(&mut self, art_start: usize) {
        let mut dummy = vec![0.0; self.cols() + 1];
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] >= art_start {
                let col = (0..art_start)
                    .filter(|&j| self.rows[r][j].abs() > 1e-9)
                    .max_by(|&a, &b| self.rows[r][a].abs().total_cmp(&self.rows[r][b].abs()));
                match col {
                    Some(col) => self.pivot(r, col, &mut dummy),
                    None => {
                        self.rows.remove(r);
                        self.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    fn solution(&self) -> Vec<f64> {
        let cols = self.cols();
        let mut x = vec![0.0; self.n];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < self.n {
                x[b] = row[cols].max(0.0);
            }
        }
        x
    }

    /// The current basic feasible point.
    pub fn feasible_point(&self) -> Vec<f64> {
        self.solution()
    }

    /// Maximizes `objective · x` over the feasible region.
    pub fn maximize(&self, objective: &[f64]) -> Result<LpSolution, LpError> {
        debug_assert_eq!(objective.len(), self.n);
        let mut tab = self.clone();
        let mut cost = vec![0.0; tab.cols()];
        cost[..self.n].copy_from_slice(objective);
        let mut obj = tab.reduced_costs(&cost);
        tab.optimize(&mut obj)?;
        let x = tab.solution();
        let objective = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { objective, x })
    }

    pub fn minimize(&self, objective: &[f64]) -> Result<LpSolution, LpError> {
        let neg: Vec<f64> = objective.iter().map(|c| -c).collect();
        let mut sol = self.maximize(&neg)?;
        sol.objective = -sol.objective;
        Ok(sol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(c: &[f64], rel: RowRelation, rhs: f64) -> LinearRow {
        LinearRow::new(c.to_vec(), rel, rhs)
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        let rows = [
            row(&[1.0, 0.0], RowRelation::Le, 4.0),
            row(&[0.0, 2.0], RowRelation::Le, 12.0),
            row(&[3.0, 2.0], RowRelation::Le, 18.0),
        ];
        let tab = FeasibleTableau::new(2, &rows, LpOptions::default()).unwrap();
        let sol = tab.maximize(&[3.0, 5.0]).unwrap();
        assert!((sol.objective - 36.0).abs() < 1e-9);
        assert!((sol.x[0] - 2.0).abs() < 1e-9 && (sol.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // x + y + z = 1, x >= 0.2, y - z >= 0.1; min and max of z.
        let rows = [
            row(&[1.0, 1.0, 1.0], RowRelation::Eq, 1.0),
            row(&[1.0, 0.0, 0.0], RowRelation::Ge, 0.2),
            row(&[0.0, 1.0, -1.0], RowRelation::Ge, 0.1),
        ];
        let tab = FeasibleTableau::new(3, &rows, LpOptions::default()).unwrap();
        assert!(tab.minimize(&[0.0, 0.0, 1.0]).unwrap().objective.abs() < 1e-12);
        // z max: y = z + 0.1, x = 0.2 → 2z + 0.1 = 0.8 → z = 0.35
        assert!((tab.maximize(&[0.0, 0.0, 1.0]).unwrap().objective - 0.35).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let rows = [
            row(&[1.0, 1.0], RowRelation::Eq, 1.0),
            row(&[1.0, 0.0], RowRelation::Eq, 0.2),
            row(&[1.0, 0.0], RowRelation::Eq, 0.3),
        ];
        assert_eq!(
            FeasibleTableau::new(2, &rows, LpOptions::default()).unwrap_err(),
            LpError::Infeasible
        );
        let rows = [row(&[1.0, -1.0], RowRelation::Ge, 0.0)];
        let tab = FeasibleTableau::new(2, &rows, LpOptions::default()).unwrap();
        assert_eq!(tab.maximize(&[1.0, 0.0]).unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let rows = [
            row(&[1.0, 1.0], RowRelation::Eq, 1.0),
            row(&[2.0, 2.0], RowRelation::Eq, 2.0),
            row(&[1.0, 0.0], RowRelation::Le, 0.7),
        ];
        let tab = FeasibleTableau::new(2, &rows, LpOptions::default()).unwrap();
        assert!((tab.minimize(&[0.0, 1.0]).unwrap().objective - 0.3).abs() < 1e-9);
        assert!((tab.maximize(&[0.0, 1.0]).unwrap().objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_rows() {
        // -x >= -0.4  (x <= 0.4), x + y = 1
        let rows = [
            row(&[-1.0, 0.0], RowRelation::Ge, -0.4),
            row(&[1.0, 1.0], RowRelation::Eq, 1.0),
        ];
        let tab = FeasibleTableau::new(2, &rows, LpOptions::default()).unwrap();
        assert!((tab.maximize(&[1.0, 0.0]).unwrap().objective - 0.4).abs() < 1e-9);
        assert!((tab.minimize(&[0.0, 1.0]).unwrap().objective - 0.6).abs() < 1e-9);
    }
}
