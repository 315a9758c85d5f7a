use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{DecoderOutput, Vae};
use crate::error::{Error, Result};
use crate::graph::{corrupt_random, encode_graph, CorruptedGraph, FeatureScaler, VCGraph};
use crate::instance::{FTuple, MilpInstance, Mode};
use crate::nn::standard_normal;

/// Attempts per rewrite step before an assembly failure is surfaced.
pub const RETRY_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferConfig {
    /// Fraction of constraints rewritten, in `(0, 1]`.
    pub gamma: f64,
    pub count: usize,
    pub seed: u64,
}

impl InferConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Validation(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        if self.count < 1 {
            return Err(Error::Validation("count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn iterations(&self, n_cons: usize) -> usize {
        ((self.gamma * n_cons as f64).ceil() as usize).max(1)
    }
}

/// Independent stream for output `index`, so samples do not depend on how
/// many others are drawn or in what order.
pub fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn check_finite(out: &DecoderOutput) -> Result<()> {
    let fields: [(&str, &[f64]); 7] = [
        ("edge_logits", &out.edge_logits),
        ("weight_hat", &out.weight_hat),
        ("x_hat", &out.x_hat),
        ("s_hat", &out.s_hat),
        ("y_hat", &out.y_hat),
        ("r_hat", &out.r_hat),
        ("y2_hat", out.y2_hat.as_deref().unwrap_or(&[])),
    ];
    if !out.degree_hat.is_finite() {
        return Err(Error::AssemblyFailure("degree_hat is not finite".into()));
    }
    for (name, v) in fields {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::AssemblyFailure(format!("{name} has a non-finite entry")));
        }
    }
    Ok(())
}

/// Builds the rewritten tuple from decoder heads.
///
/// The new row is inserted at the removed index with the `d` variables of
/// highest edge logit (ties to the lower index); zero weights are dropped.
/// `x` is rounded and clamped to `[0, cap]`, the dual and slack heads are
/// clamped at 0, and `(b, c)` follow from the tuple, so the instance is
/// feasible and bounded whatever the head values are.
pub fn assemble_instance(
    corrupted: &CorruptedGraph,
    out: &DecoderOutput,
    scaler: &FeatureScaler,
) -> Result<(VCGraph, MilpInstance, FTuple)> {
    let base = &corrupted.base;
    let (m, n) = (base.n_cons() + 1, base.n_vars());
    let bad_len = |what: &str, want: usize, got: usize| {
        Error::AssemblyFailure(format!("{what} has {got} entries, expected {want}"))
    };
    for (what, want, got) in [
        ("edge_logits", n, out.edge_logits.len()),
        ("weight_hat", n, out.weight_hat.len()),
        ("x_hat", n, out.x_hat.len()),
        ("s_hat", n, out.s_hat.len()),
        ("y_hat", m, out.y_hat.len()),
        ("r_hat", m, out.r_hat.len()),
    ] {
        if want != got {
            return Err(bad_len(what, want, got));
        }
    }
    let binary = base.mode == Mode::Binary;
    match (&out.y2_hat, binary) {
        (Some(v), true) if v.len() == n => {}
        (None, false) => {}
        _ => return Err(Error::AssemblyFailure("y2 head does not match the mode".into())),
    }
    check_finite(out)?;

    let d = scaler.degree.invert(out.degree_hat).round().clamp(1.0, n as f64) as usize;
    if d == 0 {
        return Err(Error::AssemblyFailure("degree resolved to 0".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| out.edge_logits[b].total_cmp(&out.edge_logits[a]).then(a.cmp(&b)));
    let mut row: Vec<(usize, f64)> = order[..d]
        .iter()
        .map(|&j| (j, scaler.weight.invert(out.weight_hat[j])))
        .filter(|&(_, w)| w != 0.0)
        .collect();
    if row.is_empty() {
        return Err(Error::AssemblyFailure("every selected weight is zero".into()));
    }
    if row.iter().any(|(_, w)| !w.is_finite()) {
        return Err(Error::AssemblyFailure("denormalized weight is not finite".into()));
    }
    row.sort_by_key(|e| e.0);
    let a = base.matrix()?.with_row_inserted(corrupted.removed_index, &row)?;

    let cap = if binary { 1.0 } else { f64::INFINITY };
    let nonneg = |r: &crate::graph::Range, v: f64| r.invert(v).max(0.0);
    // adding 0.0 maps a rounded −0.0 to 0.0
    let x = out.x_hat.iter().map(|&v| scaler.x.invert(v).round().clamp(0.0, cap) + 0.0).collect();
    let s = out.s_hat.iter().map(|&v| nonneg(&scaler.s, v)).collect();
    // Decoder order is surviving constraints then the new one; the new row
    // goes back to the removed position.
    let ri = corrupted.removed_index;
    let reorder = |v: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| match i.cmp(&ri) {
                std::cmp::Ordering::Less => v[i],
                std::cmp::Ordering::Equal => v[m - 1],
                std::cmp::Ordering::Greater => v[i - 1],
            })
            .collect()
    };
    let y_scaled: Vec<f64> = out.y_hat.iter().map(|&v| nonneg(&scaler.y, v)).collect();
    let r_scaled: Vec<f64> = out.r_hat.iter().map(|&v| nonneg(&scaler.r, v)).collect();
    let y2 = match (&out.y2_hat, &scaler.y2) {
        (Some(v), Some(range)) => Some(v.iter().map(|&u| nonneg(range, u)).collect()),
        (Some(v), None) => Some(v.iter().map(|&u| u.max(0.0)).collect()),
        _ => None,
    };
    let t = FTuple {
        mode: base.mode,
        a,
        x,
        y: reorder(&y_scaled),
        y2,
        s,
        r: reorder(&r_scaled),
    };
    let inst = t.to_instance("assembled")?;
    let graph = encode_graph(&t)?;
    Ok((graph, inst, t))
}

/// Rewrites `ceil(gamma·m)` randomly chosen constraints of `source` one at
/// a time, calling `decode` for head values at each step.
pub fn rewrite_constraints<F>(
    source: &FTuple,
    gamma: f64,
    scaler: &FeatureScaler,
    rng: &mut ChaCha8Rng,
    mut decode: F,
) -> Result<(MilpInstance, FTuple)>
where
    F: FnMut(&CorruptedGraph, &mut ChaCha8Rng) -> Result<DecoderOutput>,
{
    let mut graph = encode_graph(source)?;
    let steps = InferConfig {
        gamma,
        count: 1,
        seed: 0,
    };
    steps.validate()?;
    let mut current: Option<(MilpInstance, FTuple)> = None;
    for _ in 0..steps.iterations(graph.n_cons()) {
        let mut attempt = 0;
        let (g, inst, t) = loop {
            let corrupted = corrupt_random(&graph, rng)?;
            let out = decode(&corrupted, rng)?;
            match assemble_instance(&corrupted, &out, scaler) {
                Ok(done) => break done,
                Err(e @ Error::AssemblyFailure(_)) => {
                    attempt += 1;
                    if attempt >= RETRY_CAP {
                        return Err(e);
                    }
                }
                Err(e) => return Err(e),
            }
        };
        graph = g;
        current = Some((inst, t));
    }
    Ok(current.expect("at least one rewrite step"))
}

/// Generates `cfg.count` instances; output `k` rewrites source `k mod len`.
pub fn sample_instances(sources: &[FTuple], vae: &Vae, cfg: &InferConfig) -> Result<Vec<(MilpInstance, FTuple)>> {
    cfg.validate()?;
    if sources.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if sources.iter().any(|t| t.mode != vae.config.mode) {
        return Err(Error::Validation("source mode differs from the model mode".into()));
    }
    let z = vae.config.latent;
    (0..cfg.count)
        .into_par_iter()
        .map(|k| {
            let src = &sources[k % sources.len()];
            let mut rng = instance_rng(cfg.seed, k);
            let (mut inst, t) = rewrite_constraints(src, cfg.gamma, &vae.scaler, &mut rng, |c, rng| {
                let zc = standard_normal(rng, c.base.n_cons() + 1, z);
                let zv = standard_normal(rng, c.base.n_vars(), z);
                vae.decode_with(c, zc, zv)
            })?;
            inst.name = format!("gen-{k:05}");
            Ok((inst, t))
        })
        .collect()
}
