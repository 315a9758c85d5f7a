use serde::{Deserialize, Serialize};

use super::bnb::{find_feasible, first_incumbent, solve_milp};
use super::simplex::solve_lp;
use super::SolverParams;
use crate::error::{Error, Result};
use crate::instance::{derive_slacks, to_dual_lp, FTuple, MilpInstance, Mode, Status};

/// Which primal solution becomes the `x` label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XSource {
    #[default]
    Optimal,
    FirstIncumbent,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelOptions {
    #[serde(default)]
    pub x_source: XSource,
    #[serde(default)]
    pub params: SolverParams,
}

/// Status of `inst` with default solver parameters.
pub fn classify(inst: &MilpInstance) -> Result<Status> {
    classify_with(inst, &SolverParams::default())
}

/// Status of `inst` decided from its LP relaxation plus an integer
/// feasibility probe.
///
/// An infeasible relaxation means an infeasible MILP. An unbounded
/// relaxation means the MILP is unbounded if any integer point exists and
/// infeasible otherwise. A bounded relaxation with an integer point means
/// a finite optimum.
pub fn classify_with(inst: &MilpInstance, params: &SolverParams) -> Result<Status> {
    params.validate()?;
    inst.validate()?;
    let lp = solve_lp(&inst.lp_relaxation(), params.max_pivots_per_lp)?;
    let (found, report) = match lp.status {
        Status::Infeasible => return Ok(Status::Infeasible),
        Status::Unbounded => find_feasible(inst, params)?,
        Status::Optimal => first_incumbent(inst, params)?,
    };
    match (found, lp.status) {
        (Some(_), Status::Unbounded) => Ok(Status::Unbounded),
        (Some(_), _) => Ok(Status::Optimal),
        (None, _) if report.limit_hit => Err(Error::NodeLimitExceeded {
            limit: params.max_nodes,
        }),
        (None, _) => Ok(Status::Infeasible),
    }
}

/// Solves `inst` and its dual relaxation, returning the tuple
/// `(A, x, y, s, r)` whose derived `(b, c)` reproduce the instance.
pub fn extract_labels(inst: &MilpInstance, opts: &LabelOptions) -> Result<FTuple> {
    let fail = |why: String| Error::LabelingFailure(format!("{}: {why}", inst.name));
    let x = match opts.x_source {
        XSource::Optimal => {
            let report = solve_milp(inst, &opts.params)?;
            let outcome = report.proven(opts.params.max_nodes)?;
            match outcome.status {
                Status::Optimal => outcome.solution.clone().expect("optimal has a solution"),
                other => return Err(fail(format!("instance is {other:?}"))),
            }
        }
        XSource::FirstIncumbent => {
            if classify_with(inst, &opts.params)? != Status::Optimal {
                return Err(fail("instance is not feasible-bounded".into()));
            }
            let (x, _) = first_incumbent(inst, &opts.params)?;
            x.ok_or_else(|| fail("no incumbent found".into()))?
        }
    };
    let dual = solve_lp(&to_dual_lp(inst)?, opts.params.max_pivots_per_lp)?;
    let y_full = match dual.status {
        Status::Optimal => dual.solution.expect("optimal has a solution"),
        other => return Err(fail(format!("dual relaxation is {other:?}"))),
    };
    let (s, r) = derive_slacks(inst, &x, &y_full).map_err(|e| fail(e.to_string()))?;
    let m = inst.n_cons();
    let (y, y2) = match inst.mode {
        Mode::GeneralInteger => (y_full, None),
        Mode::Binary => (y_full[..m].to_vec(), Some(y_full[m..].to_vec())),
    };
    let t = FTuple {
        mode: inst.mode,
        a: inst.a.clone(),
        x,
        y,
        y2,
        s,
        r,
    };
    t.validate().map_err(|e| fail(e.to_string()))?;
    Ok(t)
}
