use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::instance::MilpInstance;
use crate::solver::{solve_milp, SolverParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub r: f64,
    /// Two-sided significance.
    pub p: f64,
    pub n: usize,
}

/// Pearson correlation with a two-sided Student-t significance.
///
/// With `t = r·sqrt((n−2)/(1−r²))` the tail mass `2·P(T > |t|)` for `n − 2`
/// degrees of freedom equals the regularized incomplete beta
/// `I_{1−r²}((n−2)/2, 1/2)`, which is what gets evaluated.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<CorrelationReport> {
    let n = xs.len();
    if ys.len() != n {
        return Err(Error::DimensionMismatch {
            what: "correlation samples",
            expected: n,
            found: ys.len(),
        });
    }
    if n < 3 {
        return Err(Error::Validation(format!("correlation needs at least 3 samples, got {n}")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation samples".into()));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantInput);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let x = ((1.0 - r) * (1.0 + r)).max(0.0);
    let p = if x == 0.0 { 0.0 } else { beta_reg(df / 2.0, 0.5, x) };
    Ok(CorrelationReport { r, p, n })
}

/// Branch-and-bound nodes summed over a corpus under one configuration.
pub fn corpus_effort(corpus: &[MilpInstance], params: &SolverParams) -> Result<usize> {
    let mut total = 0;
    for inst in corpus {
        let rep = solve_milp(inst, params)?;
        if rep.limit_hit {
            return Err(Error::NodeLimitExceeded { limit: params.max_nodes });
        }
        total += rep.effort_nodes;
    }
    Ok(total)
}

/// Correlates the per-configuration solver effort on two corpora.
///
/// Configuration `k` is `SolverParams::sampled(seed + k)`.
pub fn tuning_correlation(
    a: &[MilpInstance],
    b: &[MilpInstance],
    n_configs: usize,
    seed: u64,
) -> Result<CorrelationReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let efforts: Vec<(f64, f64)> = (0..n_configs as u64)
        .into_par_iter()
        .map(|k| {
            let params = SolverParams::sampled(seed + k);
            Ok((corpus_effort(a, &params)? as f64, corpus_effort(b, &params)? as f64))
        })
        .collect::<Result<_>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = efforts.into_iter().unzip();
    pearson(&xs, &ys)
}
