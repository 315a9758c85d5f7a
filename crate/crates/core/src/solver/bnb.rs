use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::simplex::solve_lp_counted;
use super::{BranchingRule, LinearProgram, NodeSelection, SolveReport, SolverParams};
use crate::error::Result;
use crate::instance::{MilpInstance, Outcome, Status};

struct Node {
    id: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    bound: f64,
}

enum Search {
    Finished {
        incumbent: Option<(f64, Vec<f64>)>,
        root_unbounded: bool,
    },
    Limit {
        incumbent: Option<(f64, Vec<f64>)>,
        best_bound: f64,
    },
}

struct BranchAndBound<'a> {
    inst: &'a MilpInstance,
    params: &'a SolverParams,
    rng: Option<ChaCha8Rng>,
    nodes: usize,
    pivots: usize,
}

/// Exact LP-based branch-and-bound on `inst`.
///
/// Children are created floor-first. Node and pivot counts are
/// deterministic for a fixed `(inst, params)`.
pub fn solve_milp(inst: &MilpInstance, params: &SolverParams) -> Result<SolveReport> {
    params.validate()?;
    inst.validate()?;
    let mut bb = BranchAndBound::new(inst, params);
    let search = bb.search(&inst.c, false)?;
    let report = match search {
        Search::Finished {
            root_unbounded: true,
            ..
        } => {
            // LP relaxation unbounded: the MILP is infeasible or unbounded.
            let zero = vec![0.0; inst.n_vars()];
            match bb.search(&zero, true)? {
                Search::Finished { incumbent, .. } => {
                    let outcome = if incumbent.is_some() {
                        Outcome::unbounded()
                    } else {
                        Outcome::infeasible()
                    };
                    bb.report(false, Some(outcome), None, None)
                }
                Search::Limit { incumbent, .. } => match incumbent {
                    Some(_) => bb.report(false, Some(Outcome::unbounded()), None, None),
                    None => bb.report(true, None, None, None),
                },
            }
        }
        Search::Finished { incumbent, .. } => {
            let outcome = match &incumbent {
                Some((v, x)) => Outcome::optimal(*v, x.clone()),
                None => Outcome::infeasible(),
            };
            let bound = incumbent.as_ref().map(|i| i.0);
            bb.report(false, Some(outcome), bound, incumbent)
        }
        Search::Limit {
            incumbent,
            best_bound,
        } => bb.report(true, None, Some(best_bound), incumbent),
    };
    Ok(report)
}

/// Searches for any integer-feasible point; `Ok(None)` if none exists.
pub(super) fn find_feasible(
    inst: &MilpInstance,
    params: &SolverParams,
) -> Result<(Option<Vec<f64>>, SolveReport)> {
    params.validate()?;
    let mut bb = BranchAndBound::new(inst, params);
    let zero = vec![0.0; inst.n_vars()];
    match bb.search(&zero, true)? {
        Search::Finished { incumbent, .. } => {
            let x = incumbent.map(|i| i.1);
            let outcome = match &x {
                Some(x) => Outcome::optimal(inst.objective(x), x.clone()),
                None => Outcome::infeasible(),
            };
            Ok((x, bb.report(false, Some(outcome), None, None)))
        }
        Search::Limit { incumbent, .. } => {
            let x = incumbent.map(|i| i.1);
            Ok((x, bb.report(true, None, None, None)))
        }
    }
}

/// Runs the optimizing search but stops at the first incumbent.
pub(super) fn first_incumbent(
    inst: &MilpInstance,
    params: &SolverParams,
) -> Result<(Option<Vec<f64>>, SolveReport)> {
    params.validate()?;
    let mut bb = BranchAndBound::new(inst, params);
    match bb.search(&inst.c, true)? {
        Search::Finished {
            incumbent,
            root_unbounded: false,
        } => {
            let x = incumbent.map(|i| i.1);
            Ok((x, bb.report(false, None, None, None)))
        }
        Search::Finished { .. } => Ok((None, bb.report(false, None, None, None))),
        Search::Limit { .. } => Ok((None, bb.report(true, None, None, None))),
    }
}

impl<'a> BranchAndBound<'a> {
    fn new(inst: &'a MilpInstance, params: &'a SolverParams) -> Self {
        let rng = match params.branching_rule {
            BranchingRule::PseudoRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        BranchAndBound {
            inst,
            params,
            rng,
            nodes: 0,
            pivots: 0,
        }
    }

    fn report(
        &self,
        limit_hit: bool,
        outcome: Option<Outcome>,
        best_bound: Option<f64>,
        incumbent: Option<(f64, Vec<f64>)>,
    ) -> SolveReport {
        SolveReport {
            limit_hit,
            outcome,
            effort_nodes: self.nodes,
            effort_pivots: self.pivots,
            best_bound,
            incumbent,
        }
    }

    fn node_lp(&self, objective: &[f64], node: &Node) -> LinearProgram {
        let mut lp = self.inst.lp_relaxation();
        lp.objective = objective.to_vec();
        lp.lower = node.lower.clone();
        lp.upper = node.upper.clone();
        lp
    }

    fn select(&self, open: &[Node], have_incumbent: bool) -> usize {
        let depth_first = match self.params.node_selection {
            NodeSelection::DepthFirst => true,
            NodeSelection::BestBound => false,
            NodeSelection::Hybrid => !have_incumbent,
        };
        if depth_first {
            return open.len() - 1;
        }
        let mut best = 0;
        for (k, node) in open.iter().enumerate().skip(1) {
            let b = &open[best];
            if node.bound > b.bound || node.bound == b.bound && node.id < b.id {
                best = k;
            }
        }
        best
    }

    fn branch_var(&mut self, x: &[f64]) -> Option<usize> {
        let tol = self.params.integrality_tol;
        let frac: Vec<usize> = (0..x.len())
            .filter(|&j| (x[j] - x[j].round()).abs() > tol)
            .collect();
        if frac.is_empty() {
            return None;
        }
        Some(match self.params.branching_rule {
            BranchingRule::FirstFractional => frac[0],
            BranchingRule::MostFractional => {
                let score = |j: usize| {
                    let f = x[j] - x[j].floor();
                    f.min(1.0 - f)
                };
                let mut best = frac[0];
                for &j in &frac[1..] {
                    if score(j) > score(best) {
                        best = j;
                    }
                }
                best
            }
            BranchingRule::PseudoRandom(_) => {
                let rng = self.rng.as_mut().expect("rng seeded for pseudo-random branching");
                frac[rng.random_range(0..frac.len())]
            }
        })
    }

    fn search(&mut self, objective: &[f64], stop_at_first: bool) -> Result<Search> {
        let n = self.inst.n_vars();
        let feas_tol = 1e-9 * self.inst.b.iter().fold(1.0_f64, |m, b| m.max(b.abs()));
        let mut next_id = 0;
        let mut open = vec![Node {
            id: next_id,
            lower: vec![0.0; n],
            upper: vec![self.inst.upper_bound(); n],
            bound: f64::INFINITY,
        }];
        next_id += 1;
        let mut incumbent: Option<(f64, Vec<f64>)> = None;
        let prune_tol = |inc: f64| 1e-9 * inc.abs().max(1.0);

        while !open.is_empty() {
            if self.nodes >= self.params.max_nodes {
                let best_bound = open.iter().map(|n| n.bound).fold(f64::NEG_INFINITY, f64::max);
                let best_bound = match &incumbent {
                    Some((v, _)) => best_bound.max(*v),
                    None => best_bound,
                };
                return Ok(Search::Limit {
                    incumbent,
                    best_bound,
                });
            }
            let idx = self.select(&open, incumbent.is_some());
            let node = open.remove(idx);
            if let Some((inc, _)) = &incumbent {
                if node.bound <= inc + prune_tol(*inc) {
                    continue;
                }
            }
            let lp = self.node_lp(objective, &node);
            let sol = solve_lp_counted(&lp, self.params.max_pivots_per_lp)?;
            self.nodes += 1;
            self.pivots += sol.pivots;
            let outcome = sol.outcome;
            match outcome.status {
                Status::Infeasible => continue,
                Status::Unbounded => {
                    return Ok(Search::Finished {
                        incumbent: None,
                        root_unbounded: true,
                    })
                }
                Status::Optimal => {}
            }
            let value = outcome.value.expect("optimal outcome has a value");
            let x = outcome.solution.expect("optimal outcome has a solution");
            if let Some((inc, _)) = &incumbent {
                if value <= inc + prune_tol(*inc) {
                    continue;
                }
            }
            let mut branch_on = self.branch_var(&x);
            if branch_on.is_none() {
                let rounded: Vec<f64> = x.iter().map(|v| v.round().max(0.0)).collect();
                if self.inst.is_feasible(&rounded, feas_tol) {
                    let obj: f64 = objective.iter().zip(&rounded).map(|(c, x)| c * x).sum();
                    let better = incumbent.as_ref().is_none_or(|(inc, _)| obj > *inc);
                    if better {
                        incumbent = Some((obj, rounded));
                    }
                    if stop_at_first {
                        return Ok(Search::Finished {
                            incumbent,
                            root_unbounded: false,
                        });
                    }
                    continue;
                }
                // Rounding broke feasibility; branch on the largest deviation.
                branch_on = (0..n)
                    .filter(|&j| x[j] != x[j].round())
                    .max_by(|&a, &b| {
                        let da = (x[a] - x[a].round()).abs();
                        let db = (x[b] - x[b].round()).abs();
                        da.total_cmp(&db).then(b.cmp(&a))
                    });
                if branch_on.is_none() {
                    continue;
                }
            }
            let j = branch_on.expect("branch variable chosen");
            let (floor, ceil) = (x[j].floor(), x[j].ceil().max(x[j].floor() + 1.0));
            let mut down = Node {
                id: 0,
                lower: node.lower.clone(),
                upper: node.upper.clone(),
                bound: value,
            };
            down.upper[j] = floor;
            let mut up = Node {
                id: 0,
                lower: node.lower,
                upper: node.upper,
                bound: value,
            };
            up.lower[j] = ceil;
            down.id = next_id;
            up.id = next_id + 1;
            next_id += 2;
            // Depth-first pops from the back, so the floor child goes last.
            open.push(up);
            open.push(down);
        }
        Ok(Search::Finished {
            incumbent,
            root_unbounded: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Mode, SparseMatrix};

    fn inst(mode: Mode, rows: &[&[f64]], b: &[f64], c: &[f64]) -> MilpInstance {
        let a = SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
        MilpInstance::new("t", mode, a, b.to_vec(), c.to_vec()).unwrap()
    }

    // Exhaustive oracle over a box of integer points.
    fn enumerate(i: &MilpInstance, hi: i64) -> Option<(f64, Vec<f64>)> {
        let n = i.n_vars();
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut point = vec![0i64; n];
        loop {
            let x: Vec<f64> = point.iter().map(|&v| v as f64).collect();
            if i.is_feasible(&x, 1e-9) {
                let v = i.objective(&x);
                if best.as_ref().is_none_or(|b| v > b.0) {
                    best = Some((v, x));
                }
            }
            let mut k = 0;
            while k < n {
                point[k] += 1;
                if point[k] <= hi {
                    break;
                }
                point[k] = 0;
                k += 1;
            }
            if k == n {
                return best;
            }
        }
    }

    #[test]
    fn textbook_knapsack_matches_enumeration() {
        let i = inst(
            Mode::GeneralInteger,
            &[&[6.0, 4.0], &[1.0, 2.0]],
            &[24.0, 6.0],
            &[5.0, 4.0],
        );
        let oracle = enumerate(&i, 6).unwrap();
        assert_eq!(oracle, (20.0, vec![4.0, 0.0]));
        for rule in [
            BranchingRule::MostFractional,
            BranchingRule::FirstFractional,
            BranchingRule::PseudoRandom(7),
        ] {
            for sel in [NodeSelection::DepthFirst, NodeSelection::BestBound, NodeSelection::Hybrid] {
                let params = SolverParams {
                    branching_rule: rule,
                    node_selection: sel,
                    ..SolverParams::default()
                };
                let rep = solve_milp(&i, &params).unwrap();
                let out = rep.outcome.unwrap();
                assert_eq!(out.value, Some(20.0));
                assert_eq!(out.solution, Some(vec![4.0, 0.0]));
            }
        }
    }

    #[test]
    fn infeasible_and_floor_cases() {
        let i = inst(Mode::GeneralInteger, &[&[1.0]], &[-1.0], &[1.0]);
        let rep = solve_milp(&i, &SolverParams::default()).unwrap();
        assert_eq!(rep.outcome.unwrap().status, Status::Infeasible);

        let i = inst(Mode::GeneralInteger, &[&[2.0]], &[3.0], &[1.0]);
        let out = solve_milp(&i, &SolverParams::default()).unwrap().outcome.unwrap();
        assert_eq!(out, Outcome::optimal(1.0, vec![1.0]));
    }

    #[test]
    fn unbounded_detected() {
        let i = inst(Mode::GeneralInteger, &[&[-1.0, 1.0]], &[0.0], &[1.0, 0.0]);
        let out = solve_milp(&i, &SolverParams::default()).unwrap().outcome.unwrap();
        assert_eq!(out.status, Status::Unbounded);
    }

    #[test]
    fn lp_unbounded_but_integer_infeasible() {
        // 2x1 - 2x2 = 1 has no integer solution; the LP relaxation is unbounded in x1.
        let i = inst(
            Mode::GeneralInteger,
            &[&[2.0, -2.0], &[-2.0, 2.0]],
            &[1.0, -1.0],
            &[1.0, 0.0],
        );
        let params = SolverParams {
            max_nodes: 2_000,
            ..SolverParams::default()
        };
        let rep = solve_milp(&i, &params).unwrap();
        // The feasibility probe cannot prove infeasibility of an unbounded
        // lattice-free region; it must stop at the node limit instead.
        assert!(rep.limit_hit || rep.outcome.unwrap().status == Status::Infeasible);
    }

    #[test]
    fn node_limit_reports_incumbent() {
        let i = inst(
            Mode::Binary,
            &[&[3.0, 5.0, 7.0, 9.0, 11.0, 13.0]],
            &[20.0],
            &[3.1, 5.2, 7.3, 9.1, 11.2, 13.3],
        );
        let params = SolverParams {
            max_nodes: 2,
            node_selection: NodeSelection::BestBound,
            ..SolverParams::default()
        };
        let rep = solve_milp(&i, &params).unwrap();
        assert!(rep.limit_hit);
        assert!(rep.outcome.is_none());
        assert!(rep.best_bound.is_some());
        assert!(matches!(rep.proven(2), Err(crate::Error::NodeLimitExceeded { limit: 2 })));
    }

    #[test]
    fn effort_is_deterministic() {
        let i = inst(
            Mode::Binary,
            &[&[3.0, 5.0, 7.0, 9.0, 11.0, 13.0], &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]],
            &[24.5, 4.0],
            &[3.1, 5.2, 7.3, 9.1, 11.2, 13.3],
        );
        let params = SolverParams {
            branching_rule: BranchingRule::PseudoRandom(11),
            ..SolverParams::default()
        };
        let a = solve_milp(&i, &params).unwrap();
        let b = solve_milp(&i, &params).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.outcome.as_ref().unwrap().value, enumerate(&i, 1).map(|o| o.0));
    }
}
