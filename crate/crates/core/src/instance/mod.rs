//! Canonical MILP instances, solution tuples and the slack/dual algebra that
//! ties them together.
//!
//! Every instance is stored as `max cᵀx s.t. Ax ≤ b, x ≥ 0, x integral`
//! (plus `x ≤ 1` in binary mode). A [`FTuple`] holds a coefficient matrix
//! together with a primal solution, a dual solution of the linear relaxation
//! and the two slack vectors; [`derive_bc`] turns any such tuple into an
//! instance that is feasible (the tuple's `x` is a witness) and bounded
//! (the tuple's `y` certifies an upper bound by weak duality).

mod io;
mod sparse;

pub use io::{instance_from_json, instance_to_json, InstanceFile, LabelsFile};
pub use sparse::SparseMatrix;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::solver::{Cmp, LinearProgram, Sense};

/// Absolute tolerance used for slack clamping and feasibility checks.
pub const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Mode {
    #[default]
    GeneralInteger,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveSense {
    #[default]
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpInstance {
    pub name: String,
    pub mode: Mode,
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// Sense of the problem before canonicalization. A `Min` problem was
    /// negated at ingestion; [`MilpInstance::reported_objective`] undoes it.
    pub original_sense: ObjectiveSense,
}

impl MilpInstance {
    pub fn new(
        name: impl Into<String>,
        mode: Mode,
        a: SparseMatrix,
        b: Vec<f64>,
        c: Vec<f64>,
    ) -> Result<Self> {
        let inst = MilpInstance {
            name: name.into(),
            mode,
            a,
            b,
            c,
            original_sense: ObjectiveSense::Max,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Canonicalizes `opt cᵀx s.t. rows` where each row is `≤` or `≥`.
    ///
    /// `≥` rows are negated and a `Min` objective is negated.
    pub fn from_general(
        name: impl Into<String>,
        mode: Mode,
        sense: ObjectiveSense,
        n_vars: usize,
        rows: &[(Vec<(usize, f64)>, Cmp, f64)],
        c: &[f64],
    ) -> Result<Self> {
        let mut trip = Vec::new();
        let mut b = Vec::with_capacity(rows.len());
        for (i, (coeffs, cmp, rhs)) in rows.iter().enumerate() {
            let sign = match cmp {
                Cmp::Le => 1.0,
                Cmp::Ge => -1.0,
                Cmp::Eq => {
                    return Err(Error::Validation(
                        "equality constraints are not supported".into(),
                    ))
                }
            };
            trip.extend(coeffs.iter().map(|&(j, v)| (i, j, sign * v)));
            b.push(sign * rhs);
        }
        let a = SparseMatrix::from_triplets(rows.len(), n_vars, &trip)?;
        let c = match sense {
            ObjectiveSense::Max => c.to_vec(),
            ObjectiveSense::Min => c.iter().map(|v| -v).collect(),
        };
        let mut inst = MilpInstance::new(name, mode, a, b, c)?;
        inst.original_sense = sense;
        Ok(inst)
    }

    pub fn n_vars(&self) -> usize {
        self.a.n_cols()
    }

    pub fn n_cons(&self) -> usize {
        self.a.n_rows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_vars() == 0 || self.n_cons() == 0 {
            return Err(Error::Validation(format!(
                "instance must have at least one variable and one constraint, got {}x{}",
                self.n_cons(),
                self.n_vars()
            )));
        }
        ensure_len("b", self.n_cons(), self.b.len())?;
        ensure_len("c", self.n_vars(), self.c.len())?;
        ensure_finite("b", &self.b)?;
        ensure_finite("c", &self.c)?;
        Ok(())
    }

    /// Objective value in the sense the problem was originally posed.
    pub fn reported_objective(&self, canonical_value: f64) -> f64 {
        match self.original_sense {
            ObjectiveSense::Max => canonical_value,
            ObjectiveSense::Min => -canonical_value,
        }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Checks `x ≥ 0`, integrality, the binary cap and `Ax ≤ b` within `tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.n_vars() {
            return false;
        }
        let cap = self.upper_bound();
        let domain_ok = x
            .iter()
            .all(|&v| v >= 0.0 && v.fract() == 0.0 && v <= cap);
        domain_ok
            && self
                .a
                .mul_vec(x)
                .iter()
                .zip(&self.b)
                .all(|(ax, b)| ax - b <= tol)
    }

    /// Upper bound implied by the mode.
    pub fn upper_bound(&self) -> f64 {
        match self.mode {
            Mode::Binary => 1.0,
            Mode::GeneralInteger => f64::INFINITY,
        }
    }

    /// Linear relaxation as a maximization LP.
    pub fn lp_relaxation(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(Sense::Maximize, self.c.clone());
        for i in 0..self.n_cons() {
            lp.add_constraint(self.a.row_entries(i), Cmp::Le, self.b[i]);
        }
        if self.mode == Mode::Binary {
            lp.upper = vec![1.0; self.n_vars()];
        }
        lp
    }
}

/// An element of the generation space: matrix, primal solution, dual
/// solution and slacks.
///
/// In binary mode the dual is split into `y` (one entry per constraint)
/// and `y2` (one entry per `x ≤ 1` bound).
#[derive(Debug, Clone, PartialEq)]
pub struct FTuple {
    pub mode: Mode,
    pub a: SparseMatrix,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub y2: Option<Vec<f64>>,
    pub s: Vec<f64>,
    pub r: Vec<f64>,
}

impl FTuple {
    pub fn n_vars(&self) -> usize {
        self.a.n_cols()
    }

    pub fn n_cons(&self) -> usize {
        self.a.n_rows()
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.n_cons(), self.n_vars());
        ensure_len("x", n, self.x.len())?;
        ensure_len("y", m, self.y.len())?;
        ensure_len("s", n, self.s.len())?;
        ensure_len("r", m, self.r.len())?;
        for (name, v) in [("x", &self.x), ("y", &self.y), ("s", &self.s), ("r", &self.r)] {
            ensure_finite(name, v)?;
        }
        match (self.mode, &self.y2) {
            (Mode::Binary, Some(y2)) => {
                ensure_len("y2", n, y2.len())?;
                ensure_finite("y2", y2)?;
                check_nonneg("y2", y2)?;
            }
            (Mode::Binary, None) => {
                return Err(Error::Validation("binary tuple is missing y2".into()))
            }
            (Mode::GeneralInteger, Some(_)) => {
                return Err(Error::Validation(
                    "general-integer tuple must not carry y2".into(),
                ))
            }
            (Mode::GeneralInteger, None) => {}
        }
        for (j, &v) in self.x.iter().enumerate() {
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::Validation(format!("x[{j}] = {v} is not a nonnegative integer")));
            }
            if self.mode == Mode::Binary && v > 1.0 {
                return Err(Error::Validation(format!("x[{j}] = {v} exceeds the binary cap")));
            }
        }
        check_nonneg("y", &self.y)?;
        check_nonneg("s", &self.s)?;
        check_nonneg("r", &self.r)?;
        Ok(())
    }

    /// Instance `(A, b, c)` with `(b, c)` derived from this tuple.
    pub fn to_instance(&self, name: impl Into<String>) -> Result<MilpInstance> {
        let (b, c) = derive_bc(self)?;
        MilpInstance::new(name, self.mode, self.a.clone(), b, c)
    }

    /// Full dual vector in the layout used by [`to_dual_lp`].
    pub fn dual_vector(&self) -> Vec<f64> {
        let mut out = self.y.clone();
        if let Some(y2) = &self.y2 {
            out.extend_from_slice(y2);
        }
        out
    }
}

fn check_nonneg(what: &'static str, v: &[f64]) -> Result<()> {
    if let Some((i, &val)) = v.iter().enumerate().find(|(_, &x)| x < 0.0) {
        return Err(Error::NegativeFeature {
            what,
            index: i,
            value: val,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Infeasible,
    Unbounded,
    Optimal,
}

/// Solver outcome; `value` and `solution` are present iff `status` is `Optimal`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: Status,
    pub value: Option<f64>,
    pub solution: Option<Vec<f64>>,
}

impl Outcome {
    pub fn infeasible() -> Self {
        Outcome {
            status: Status::Infeasible,
            value: None,
            solution: None,
        }
    }

    pub fn unbounded() -> Self {
        Outcome {
            status: Status::Unbounded,
            value: None,
            solution: None,
        }
    }

    pub fn optimal(value: f64, solution: Vec<f64>) -> Self {
        Outcome {
            status: Status::Optimal,
            value: Some(value),
            solution: Some(solution),
        }
    }
}

/// `b = A·x + r`, `c = Aᵀ·y − s` (binary: `c = Aᵀ·y + y2 − s`).
pub fn derive_bc(t: &FTuple) -> Result<(Vec<f64>, Vec<f64>)> {
    t.validate()?;
    let ax = t.a.mul_vec(&t.x);
    let b = ax.iter().zip(&t.r).map(|(ax, r)| ax + r).collect();
    let mut aty = t.a.mul_transpose_vec(&t.y);
    if let Some(y2) = &t.y2 {
        for (v, y2) in aty.iter_mut().zip(y2) {
            *v += y2;
        }
    }
    let c = aty.iter().zip(&t.s).map(|(v, s)| v - s).collect();
    Ok((b, c))
}

/// Recovers `(s, r)` from a primal-feasible `x` and a dual-feasible `y`.
///
/// `y` follows the dual layout of [`to_dual_lp`]: `m` entries, or `m + n`
/// entries (`y1` then `y2`) in binary mode. Values in `(-TOL, 0)` clamp to 0.
pub fn derive_slacks(inst: &MilpInstance, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (m, n) = (inst.n_cons(), inst.n_vars());
    ensure_len("x", n, x.len())?;
    ensure_len("y", dual_len(inst), y.len())?;
    ensure_finite("x", x)?;
    ensure_finite("y", y)?;
    let ax = inst.a.mul_vec(x);
    let r = clamp_slack("r", inst.b.iter().zip(&ax).map(|(b, ax)| b - ax))?;
    let mut aty = inst.a.mul_transpose_vec(&y[..m]);
    if inst.mode == Mode::Binary {
        for (v, y2) in aty.iter_mut().zip(&y[m..]) {
            *v += y2;
        }
    }
    let s = clamp_slack("s", aty.iter().zip(&inst.c).map(|(v, c)| v - c))?;
    Ok((s, r))
}

fn clamp_slack(what: &'static str, raw: impl Iterator<Item = f64>) -> Result<Vec<f64>> {
    raw.enumerate()
        .map(|(i, v)| {
            if v < -TOL {
                Err(Error::FeasibilityViolation {
                    what,
                    index: i,
                    value: v,
                })
            } else {
                Ok(v.max(0.0))
            }
        })
        .collect()
}

/// Number of dual variables: `m`, or `m + n` in binary mode.
pub fn dual_len(inst: &MilpInstance) -> usize {
    match inst.mode {
        Mode::GeneralInteger => inst.n_cons(),
        Mode::Binary => inst.n_cons() + inst.n_vars(),
    }
}

/// `bᵀy − cᵀx` (binary: `bᵀy1 + 1ᵀy2 − cᵀx`).
pub fn weak_duality_gap(inst: &MilpInstance, x: &[f64], y: &[f64]) -> Result<f64> {
    ensure_len("x", inst.n_vars(), x.len())?;
    ensure_len("y", dual_len(inst), y.len())?;
    let m = inst.n_cons();
    let by: f64 = inst.b.iter().zip(&y[..m]).map(|(b, y)| b * y).sum::<f64>()
        + y[m..].iter().sum::<f64>();
    Ok(by - inst.objective(x))
}

/// Dual of the linear relaxation: `min bᵀy s.t. Aᵀy ≥ c, y ≥ 0`.
///
/// In binary mode the constraint matrix is `[Aᵀ, I]` and the objective
/// `[bᵀ, 1ᵀ]`; the first `m` variables are `y1`, the last `n` are `y2`.
pub fn to_dual_lp(inst: &MilpInstance) -> Result<LinearProgram> {
    inst.validate()?;
    let (m, n) = (inst.n_cons(), inst.n_vars());
    let mut objective = inst.b.clone();
    if inst.mode == Mode::Binary {
        objective.extend(std::iter::repeat_n(1.0, n));
    }
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    let at = inst.a.transpose();
    for j in 0..n {
        let mut row = at.row_entries(j);
        if inst.mode == Mode::Binary {
            row.push((m + j, 1.0));
        }
        lp.add_constraint(row, Cmp::Ge, inst.c[j]);
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn general(a: SparseMatrix, x: &[f64], y: &[f64], s: &[f64], r: &[f64]) -> FTuple {
        FTuple {
            mode: Mode::GeneralInteger,
            a,
            x: x.to_vec(),
            y: y.to_vec(),
            y2: None,
            s: s.to_vec(),
            r: r.to_vec(),
        }
    }

    // Dense reference for derive_bc, written independently of SparseMatrix.
    fn dense_bc(a: &[&[f64]], x: &[f64], y: &[f64], y2: Option<&[f64]>, s: &[f64], r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = a.len();
        let n = x.len();
        let mut b = vec![0.0; m];
        let mut c = vec![0.0; n];
        for i in 0..m {
            for j in 0..n {
                b[i] += a[i][j] * x[j];
                c[j] += a[i][j] * y[i];
            }
            b[i] += r[i];
        }
        for j in 0..n {
            c[j] += y2.map_or(0.0, |v| v[j]) - s[j];
        }
        (b, c)
    }

    #[test]
    fn derive_bc_identity() {
        let t = general(dense(&[&[1.0]]), &[1.0], &[1.0], &[0.0], &[0.0]);
        assert_eq!(derive_bc(&t).unwrap(), (vec![1.0], vec![1.0]));
    }

    #[test]
    fn derive_bc_two_by_two() {
        let rows: &[&[f64]] = &[&[2.0, 0.0], &[0.0, 3.0]];
        let t = general(dense(rows), &[1.0, 1.0], &[1.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]);
        let oracle = dense_bc(rows, &[1.0, 1.0], &[1.0, 1.0], None, &[0.0, 1.0], &[1.0, 0.0]);
        assert_eq!(oracle, (vec![3.0, 3.0], vec![2.0, 2.0]));
        assert_eq!(derive_bc(&t).unwrap(), oracle);
    }

    #[test]
    fn derive_bc_binary() {
        let rows: &[&[f64]] = &[&[1.0, 1.0]];
        let t = FTuple {
            mode: Mode::Binary,
            a: dense(rows),
            x: vec![1.0, 0.0],
            y: vec![1.0],
            y2: Some(vec![0.0, 2.0]),
            s: vec![0.0, 0.0],
            r: vec![0.0],
        };
        let oracle = dense_bc(rows, &[1.0, 0.0], &[1.0], Some(&[0.0, 2.0]), &[0.0, 0.0], &[0.0]);
        assert_eq!(oracle, (vec![1.0], vec![1.0, 3.0]));
        assert_eq!(derive_bc(&t).unwrap(), oracle);
    }

    #[test]
    fn derive_bc_rejects_bad_tuples() {
        let mut t = general(dense(&[&[1.0]]), &[1.0], &[1.0], &[0.0], &[0.0]);
        t.x = vec![1.0, 2.0];
        assert!(matches!(derive_bc(&t), Err(Error::DimensionMismatch { .. })));
        let mut t = general(dense(&[&[1.0]]), &[1.0], &[1.0], &[0.0], &[0.0]);
        t.y = vec![f64::INFINITY];
        assert!(matches!(derive_bc(&t), Err(Error::NonFinite(_))));
        let mut t = general(dense(&[&[1.0]]), &[1.0], &[1.0], &[0.0], &[0.0]);
        t.mode = Mode::Binary;
        t.y2 = Some(vec![0.0]);
        t.x = vec![2.0];
        assert!(matches!(derive_bc(&t), Err(Error::Validation(_))));
    }

    fn inst(rows: &[&[f64]], b: &[f64], c: &[f64]) -> MilpInstance {
        MilpInstance::new("t", Mode::GeneralInteger, dense(rows), b.to_vec(), c.to_vec()).unwrap()
    }

    #[test]
    fn derive_slacks_examples() {
        let i = inst(&[&[1.0]], &[3.0], &[1.0]);
        assert_eq!(derive_slacks(&i, &[2.0], &[1.0]).unwrap(), (vec![0.0], vec![1.0]));
        let i = inst(&[&[1.0, 1.0]], &[2.0], &[1.0, 1.0]);
        assert_eq!(
            derive_slacks(&i, &[1.0, 1.0], &[1.0]).unwrap(),
            (vec![0.0, 0.0], vec![0.0])
        );
        let i = inst(&[&[1.0]], &[0.0], &[5.0]);
        match derive_slacks(&i, &[1.0], &[0.0]) {
            Err(Error::FeasibilityViolation { what: "r", value, .. }) => assert_eq!(value, -1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn derive_slacks_clamps_roundoff() {
        let i = inst(&[&[1.0]], &[1.0 - 1e-12], &[1.0]);
        let (s, r) = derive_slacks(&i, &[1.0], &[1.0]).unwrap();
        assert_eq!(r, vec![0.0]);
        assert_eq!(s, vec![0.0]);
    }

    #[test]
    fn weak_duality_examples() {
        let i = inst(&[&[1.0]], &[1.0], &[1.0]);
        assert_eq!(weak_duality_gap(&i, &[1.0], &[1.0]).unwrap(), 0.0);
        let i = inst(&[&[1.0]], &[2.0], &[1.0]);
        assert_eq!(weak_duality_gap(&i, &[1.0], &[1.0]).unwrap(), 1.0);
        assert!(weak_duality_gap(&i, &[1.0, 0.0], &[1.0]).is_err());
    }

    #[test]
    fn dual_lp_examples() {
        let lp = to_dual_lp(&inst(&[&[1.0]], &[1.0], &[1.0])).unwrap();
        assert_eq!(lp.sense, Sense::Minimize);
        assert_eq!(lp.objective, vec![1.0]);
        assert_eq!(lp.constraints.len(), 1);
        assert_eq!(lp.constraints[0].coeffs, vec![(0, 1.0)]);
        assert_eq!(lp.constraints[0].cmp, Cmp::Ge);
        assert_eq!(lp.constraints[0].rhs, 1.0);

        let lp = to_dual_lp(&inst(&[&[1.0, 2.0]], &[4.0], &[1.0, 1.0])).unwrap();
        assert_eq!(lp.objective, vec![4.0]);
        let rows: Vec<_> = lp.constraints.iter().map(|c| (c.coeffs.clone(), c.rhs)).collect();
        assert_eq!(rows, vec![(vec![(0, 1.0)], 1.0), (vec![(0, 2.0)], 1.0)]);

        let bin = MilpInstance::new("b", Mode::Binary, dense(&[&[1.0]]), vec![1.0], vec![2.0]).unwrap();
        let lp = to_dual_lp(&bin).unwrap();
        assert_eq!(lp.objective, vec![1.0, 1.0]);
        assert_eq!(lp.constraints[0].coeffs, vec![(0, 1.0), (1, 1.0)]);
        assert_eq!(lp.constraints[0].rhs, 2.0);
        assert_eq!(lp.constraints[0].cmp, Cmp::Ge);
    }

    #[test]
    fn canonicalization_negates_ge_rows_and_min_objective() {
        let inst = MilpInstance::from_general(
            "sc",
            Mode::Binary,
            ObjectiveSense::Min,
            2,
            &[(vec![(0, 1.0), (1, 1.0)], Cmp::Ge, 1.0)],
            &[3.0, 4.0],
        )
        .unwrap();
        assert_eq!(inst.a.to_dense(), vec![vec![-1.0, -1.0]]);
        assert_eq!(inst.b, vec![-1.0]);
        assert_eq!(inst.c, vec![-3.0, -4.0]);
        assert_eq!(inst.reported_objective(-3.0), 3.0);
    }
}
