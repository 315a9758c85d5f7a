//! Embedded LP and MILP solvers used for labeling, verification and the
//! solver-tuning experiments.

mod bnb;
mod labels;
mod simplex;

pub use bnb::solve_milp;
pub use labels::{classify, classify_with, extract_labels, LabelOptions, XSource};
pub use simplex::{solve_lp, solve_lp_counted, LpSolution};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::instance::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

/// `opt objectiveᵀx s.t. constraints, lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// New LP with `x ≥ 0` and no upper bounds.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.constraints.push(Constraint { coeffs, cmp, rhs });
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        ensure_finite("objective", &self.objective)?;
        ensure_finite("lower", &self.lower)?;
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Validation("bound vectors must match the variable count".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() || c.coeffs.iter().any(|(j, v)| *j >= n || !v.is_finite()) {
                return Err(Error::Validation(format!("malformed constraint {i}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchingRule {
    MostFractional,
    FirstFractional,
    PseudoRandom(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeSelection {
    DepthFirst,
    BestBound,
    /// Depth-first until the first incumbent, best-bound afterwards.
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub branching_rule: BranchingRule,
    pub node_selection: NodeSelection,
    pub max_nodes: usize,
    pub max_pivots_per_lp: usize,
    pub integrality_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            branching_rule: BranchingRule::MostFractional,
            node_selection: NodeSelection::Hybrid,
            max_nodes: 200_000,
            max_pivots_per_lp: 100_000,
            integrality_tol: 1e-6,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_nodes < 1 || self.max_pivots_per_lp < 1 {
            return Err(Error::Validation("solver limits must be at least 1".into()));
        }
        if !(self.integrality_tol > 0.0 && self.integrality_tol < 1e-2) {
            return Err(Error::Validation(format!(
                "integrality_tol {} outside (0, 1e-2)",
                self.integrality_tol
            )));
        }
        Ok(())
    }

    /// Configuration drawn deterministically from `seed`, used by the
    /// tuning-correlation harness.
    pub fn sampled(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let branching_rule = match rng.random_range(0..3) {
            0 => BranchingRule::MostFractional,
            1 => BranchingRule::FirstFractional,
            _ => BranchingRule::PseudoRandom(rng.random()),
        };
        let node_selection = match rng.random_range(0..3) {
            0 => NodeSelection::DepthFirst,
            1 => NodeSelection::BestBound,
            _ => NodeSelection::Hybrid,
        };
        let integrality_tol = 10f64.powf(rng.random_range(-9.0..-4.0));
        SolverParams {
            branching_rule,
            node_selection,
            integrality_tol,
            ..SolverParams::default()
        }
    }
}

/// Result of a branch-and-bound run.
///
/// `outcome` is `None` only when a limit stopped the search before the
/// status was proven; `incumbent` then holds the best solution found.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub outcome: Option<Outcome>,
    pub effort_nodes: usize,
    pub effort_pivots: usize,
    pub limit_hit: bool,
    pub best_bound: Option<f64>,
    pub incumbent: Option<(f64, Vec<f64>)>,
}

impl SolveReport {
    /// The proven outcome, or `NodeLimitExceeded`.
    pub fn proven(&self, limit: usize) -> Result<&Outcome> {
        self.outcome.as_ref().ok_or(Error::NodeLimitExceeded { limit })
    }
}
