//! Dense-tableau two-phase primal simplex.
//!
//! Pricing is Dantzig (most negative reduced cost) for the first
//! `2 (m + n)` pivots of a solve and Bland's lowest-index rule afterwards,
//! which guarantees termination on degenerate problems.

use super::{Cmp, LinearProgram, Sense};
use crate::error::{Error, Result};
use crate::instance::Outcome;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub outcome: Outcome,
    pub pivots: usize,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row, `z_j - c_j`; last entry is the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    n_cols: usize,
    /// Columns allowed to enter the basis.
    enterable: Vec<bool>,
    pivots: usize,
    bland_after: usize,
    max_pivots: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.n_cols]
    }

    fn set_costs(&mut self, cost: &[f64]) {
        let width = self.n_cols + 1;
        let mut obj = vec![0.0; width];
        for j in 0..self.n_cols {
            obj[j] = -cost[j];
        }
        for (i, row) in self.rows.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(row) {
                    *o += cb * v;
                }
            }
        }
        self.obj = obj;
    }

    fn pivot(&mut self, r: usize, col: usize) -> Result<()> {
        self.pivots += 1;
        if self.pivots > self.max_pivots {
            return Err(Error::PivotLimitExceeded {
                limit: self.max_pivots,
            });
        }
        let p = self.rows[r][col];
        for v in &mut self.rows[r] {
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
        let f = self.obj[col];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.obj[col] = 0.0;
        }
        self.basis[r] = col;
        Ok(())
    }

    fn entering(&self) -> Option<usize> {
        let candidates = (0..self.n_cols).filter(|&j| self.enterable[j] && self.obj[j] < -EPS);
        if self.pivots >= self.bland_after {
            candidates.min()
        } else {
            // Most negative reduced cost, lowest index on ties.
            candidates.fold(None, |best: Option<usize>, j| match best {
                Some(b) if self.obj[b] <= self.obj[j] => Some(b),
                _ => Some(j),
            })
        }
    }

    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows.len() {
            let a = self.rows[i][col];
            if a > EPS {
                let ratio = self.rhs(i) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * br.abs().max(1.0);
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        best.map(|b| b.0)
    }

    fn run(&mut self) -> Result<PhaseEnd> {
        loop {
            let Some(col) = self.entering() else {
                return Ok(PhaseEnd::Optimal);
            };
            let Some(row) = self.leaving(col) else {
                return Ok(PhaseEnd::Unbounded);
            };
            self.pivot(row, col)?;
        }
    }
}

/// Solves an LP, returning its outcome (values in the LP's own sense).
pub fn solve_lp(lp: &LinearProgram, max_pivots: usize) -> Result<Outcome> {
    solve_lp_counted(lp, max_pivots).map(|s| s.outcome)
}

pub fn solve_lp_counted(lp: &LinearProgram, max_pivots: usize) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.objective.len();
    if lp.lower.iter().zip(&lp.upper).any(|(l, u)| l > u) {
        return Ok(LpSolution {
            outcome: Outcome::infeasible(),
            pivots: 0,
        });
    }

    // Shift x = lower + x' and turn finite upper bounds into rows.
    let mut rows: Vec<(Vec<f64>, Cmp, f64)> = Vec::new();
    for con in &lp.constraints {
        let mut dense = vec![0.0; n];
        let mut rhs = con.rhs;
        for &(j, v) in &con.coeffs {
            dense[j] += v;
            rhs -= v * lp.lower[j];
        }
        rows.push((dense, con.cmp, rhs));
    }
    for j in 0..n {
        if lp.upper[j].is_finite() {
            let mut dense = vec![0.0; n];
            dense[j] = 1.0;
            rows.push((dense, Cmp::Le, lp.upper[j] - lp.lower[j]));
        }
    }
    for (dense, cmp, rhs) in &mut rows {
        if *rhs < 0.0 {
            dense.iter_mut().for_each(|v| *v = -*v);
            *rhs = -*rhs;
            *cmp = match cmp {
                Cmp::Le => Cmp::Ge,
                Cmp::Ge => Cmp::Le,
                Cmp::Eq => Cmp::Eq,
            };
        }
    }

    let m = rows.len();
    let n_aux = rows.iter().filter(|r| r.1 != Cmp::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Cmp::Le).count();
    let n_cols = n + n_aux + n_art;
    let art_start = n + n_aux;

    let mut table = vec![vec![0.0; n_cols + 1]; m];
    let mut basis = vec![0; m];
    let (mut aux, mut art) = (n, art_start);
    for (i, (dense, cmp, rhs)) in rows.iter().enumerate() {
        table[i][..n].copy_from_slice(dense);
        table[i][n_cols] = *rhs;
        match cmp {
            Cmp::Le => {
                table[i][aux] = 1.0;
                basis[i] = aux;
                aux += 1;
            }
            Cmp::Ge => {
                table[i][aux] = -1.0;
                aux += 1;
                table[i][art] = 1.0;
                basis[i] = art;
                art += 1;
            }
            Cmp::Eq => {
                table[i][art] = 1.0;
                basis[i] = art;
                art += 1;
            }
        }
    }

    let mut tab = Tableau {
        rows: table,
        obj: Vec::new(),
        basis,
        n_cols,
        enterable: vec![true; n_cols],
        pivots: 0,
        bland_after: 2 * (m + n),
        max_pivots,
    };

    if n_art > 0 {
        let mut cost = vec![0.0; n_cols];
        cost[art_start..].iter_mut().for_each(|c| *c = -1.0);
        tab.set_costs(&cost);
        tab.run()?;
        let scale = rows.iter().map(|r| r.2.abs()).fold(1.0, f64::max);
        if tab.obj[n_cols] < -1e-9 * scale {
            return Ok(LpSolution {
                outcome: Outcome::infeasible(),
                pivots: tab.pivots,
            });
        }
        // Drive remaining artificials out of the basis where possible.
        for i in 0..m {
            if tab.basis[i] >= art_start {
                if let Some(j) = (0..art_start).find(|&j| tab.rows[i][j].abs() > EPS) {
                    tab.pivot(i, j)?;
                }
            }
        }
        for j in art_start..n_cols {
            tab.enterable[j] = false;
        }
    }

    let sign = match lp.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let mut cost = vec![0.0; n_cols];
    for j in 0..n {
        cost[j] = sign * lp.objective[j];
    }
    tab.set_costs(&cost);
    match tab.run()? {
        PhaseEnd::Unbounded => Ok(LpSolution {
            outcome: Outcome::unbounded(),
            pivots: tab.pivots,
        }),
        PhaseEnd::Optimal => {
            let mut x = lp.lower.clone();
            for (i, &bj) in tab.basis.iter().enumerate() {
                if bj < n {
                    x[bj] += tab.rhs(i).max(0.0);
                }
            }
            let value = lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
            Ok(LpSolution {
                outcome: Outcome::optimal(value, x),
                pivots: tab.pivots,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Status;

    fn lp_max(c: &[f64], rows: &[(&[(usize, f64)], Cmp, f64)]) -> LinearProgram {
        let mut lp = LinearProgram::new(Sense::Maximize, c.to_vec());
        for (coeffs, cmp, rhs) in rows {
            lp.add_constraint(coeffs.to_vec(), *cmp, *rhs);
        }
        lp
    }

    #[test]
    fn single_bound() {
        let out = solve_lp(&lp_max(&[1.0], &[(&[(0, 1.0)], Cmp::Le, 3.0)]), 100).unwrap();
        assert_eq!(out, Outcome::optimal(3.0, vec![3.0]));
    }

    #[test]
    fn unbounded_ray() {
        let out = solve_lp(&lp_max(&[1.0], &[(&[(0, -1.0)], Cmp::Le, 0.0)]), 100).unwrap();
        assert_eq!(out.status, Status::Unbounded);
    }

    #[test]
    fn box_vertex() {
        let lp = lp_max(
            &[1.0, 1.0],
            &[(&[(0, 1.0)], Cmp::Le, 1.0), (&[(1, 1.0)], Cmp::Le, 1.0)],
        );
        assert_eq!(solve_lp(&lp, 100).unwrap(), Outcome::optimal(2.0, vec![1.0, 1.0]));
    }

    #[test]
    fn infeasible_negative_rhs() {
        let out = solve_lp(&lp_max(&[1.0], &[(&[(0, 1.0)], Cmp::Le, -1.0)]), 100).unwrap();
        assert_eq!(out.status, Status::Infeasible);
    }

    #[test]
    fn minimize_with_ge_rows() {
        // min 4y s.t. y >= 1, 2y >= 1
        let mut lp = LinearProgram::new(Sense::Minimize, vec![4.0]);
        lp.add_constraint(vec![(0, 1.0)], Cmp::Ge, 1.0);
        lp.add_constraint(vec![(0, 2.0)], Cmp::Ge, 1.0);
        let out = solve_lp(&lp, 100).unwrap();
        assert_eq!(out, Outcome::optimal(4.0, vec![1.0]));
    }

    #[test]
    fn equality_and_bounds() {
        // max x + 2y s.t. x + y = 3, 0 <= x, 1 <= y <= 2
        let mut lp = lp_max(&[1.0, 2.0], &[(&[(0, 1.0), (1, 1.0)], Cmp::Eq, 3.0)]);
        lp.lower = vec![0.0, 1.0];
        lp.upper = vec![f64::INFINITY, 2.0];
        let out = solve_lp(&lp, 100).unwrap();
        assert_eq!(out.value, Some(5.0));
        assert_eq!(out.solution, Some(vec![1.0, 2.0]));
    }

    #[test]
    fn pivot_limit() {
        let lp = lp_max(
            &[1.0, 1.0],
            &[(&[(0, 1.0)], Cmp::Le, 1.0), (&[(1, 1.0)], Cmp::Le, 1.0)],
        );
        assert!(matches!(solve_lp(&lp, 1), Err(Error::PivotLimitExceeded { limit: 1 })));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's cycling example, written as a maximization.
        let lp = lp_max(
            &[0.75, -20.0, 0.5, -6.0],
            &[
                (&[(0, 0.25), (1, -8.0), (2, -1.0), (3, 9.0)], Cmp::Le, 0.0),
                (&[(0, 0.5), (1, -12.0), (2, -0.5), (3, 3.0)], Cmp::Le, 0.0),
                (&[(2, 1.0)], Cmp::Le, 1.0),
            ],
        );
        let out = solve_lp(&lp, 1000).unwrap();
        assert!((out.value.unwrap() - 1.25).abs() < 1e-12);
    }
}
