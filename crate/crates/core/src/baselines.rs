//! Comparison generators: from-scratch sampling with degree-pressure
//! matrices, and the constraint-rewriting loop driven by uniformly random
//! decoder outputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FeatureScaler, Range};
use crate::instance::{FTuple, MilpInstance, Mode, SparseMatrix};
use crate::vae::{instance_rng, rewrite_constraints, DecoderOutput, InferConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BowlyConfig {
    /// Variables.
    pub n: usize,
    /// Constraints.
    pub m: usize,
    pub rho: f64,
    pub p_v: f64,
    pub p_c: f64,
    pub mu_a: f64,
    pub sigma_a: f64,
}

impl BowlyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.m < 1 {
            return Err(Error::Validation("n and m must be at least 1".into()));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::Validation(format!("rho {} outside (0, 1]", self.rho)));
        }
        if !(0.0..=1.0).contains(&self.p_v) || !(0.0..=1.0).contains(&self.p_c) {
            return Err(Error::Validation("p_v and p_c must lie in [0, 1]".into()));
        }
        if !self.mu_a.is_finite() || !(self.sigma_a >= 0.0 && self.sigma_a.is_finite()) {
            return Err(Error::Validation("weight distribution needs finite mu and sigma ≥ 0".into()));
        }
        if self.mu_a == 0.0 && self.sigma_a == 0.0 {
            return Err(Error::Validation("N(0, 0) weights would all be zero".into()));
        }
        Ok(())
    }

    /// Set-cover preset: density from {0.15, …, 0.35}, weights fixed at −1.
    pub fn set_cover<R: Rng>(m: usize, n: usize, rng: &mut R) -> Self {
        let rho = [0.15, 0.20, 0.25, 0.30, 0.35][rng.random_range(0..5)];
        BowlyConfig {
            n,
            m,
            rho,
            p_v: rng.random(),
            p_c: rng.random(),
            mu_a: -1.0,
            sigma_a: 0.0,
        }
    }

    /// Combinatorial-auction preset: density 0.05, weights N(1, σ) with σ ~ U(0.1, 0.3).
    pub fn comb_auction<R: Rng>(m: usize, n: usize, rng: &mut R) -> Self {
        BowlyConfig {
            n,
            m,
            rho: 0.05,
            p_v: rng.random(),
            p_c: rng.random(),
            mu_a: 1.0,
            sigma_a: rng.random_range(0.1..0.3),
        }
    }
}

fn argmax(v: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, x) in v.enumerate() {
        if x > best.1 {
            best = (k, x);
        }
    }
    best.0
}

/// Constraint matrix by degree pressure, Bernoulli placement and isolated
/// node repair. Every row and column ends with at least one nonzero.
pub fn bowly_matrix<R: Rng>(cfg: &BowlyConfig, rng: &mut R) -> Result<SparseMatrix> {
    cfg.validate()?;
    let (n, m) = (cfg.n, cfg.m);
    let mut dv = vec![0.0f64; n];
    let mut dc = vec![0.0f64; m];
    dv[rng.random_range(0..n)] = 1.0;
    dc[rng.random_range(0..m)] = 1.0;
    let mut e = 1.0;
    let target = cfg.rho * m as f64 * n as f64;
    while e < target {
        let s: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let t: Vec<f64> = (0..m).map(|_| rng.random()).collect();
        let i = argmax(dv.iter().zip(&s).map(|(d, s)| cfg.p_v * d / e + s));
        dv[i] += 1.0;
        let j = argmax(dc.iter().zip(&t).map(|(d, t)| cfg.p_c * d / e + t));
        dc[j] += 1.0;
        e += 1.0;
    }

    let mut present = vec![vec![false; n]; m];
    let mut var_deg = vec![0usize; n];
    let mut con_deg = vec![0usize; m];
    for i in 0..n {
        for j in 0..m {
            let r: f64 = rng.random();
            if r < dv[i] * dc[j] / e {
                present[j][i] = true;
                var_deg[i] += 1;
                con_deg[j] += 1;
            }
        }
    }
    loop {
        let iso_v: Vec<usize> = (0..n).filter(|&i| var_deg[i] == 0).collect();
        let iso_c: Vec<usize> = (0..m).filter(|&j| con_deg[j] == 0).collect();
        if iso_v.is_empty() && iso_c.is_empty() {
            break;
        }
        let i = if iso_v.is_empty() { rng.random_range(0..n) } else { iso_v[rng.random_range(0..iso_v.len())] };
        let j = if iso_c.is_empty() { rng.random_range(0..m) } else { iso_c[rng.random_range(0..iso_c.len())] };
        if !present[j][i] {
            present[j][i] = true;
            var_deg[i] += 1;
            con_deg[j] += 1;
        }
    }

    let normal = Normal::new(cfg.mu_a, cfg.sigma_a).expect("validated sigma");
    let mut trip = Vec::new();
    for (j, row) in present.iter().enumerate() {
        for (i, &p) in row.iter().enumerate() {
            if p {
                let w = loop {
                    let w = normal.sample(rng);
                    if w != 0.0 && w.is_finite() {
                        break w;
                    }
                };
                trip.push((j, i, w));
            }
        }
    }
    SparseMatrix::from_triplets(m, n, &trip)
}

fn sample_integer<R: Rng>(r: &Range, cap: f64, rng: &mut R) -> f64 {
    let lo = r.min.ceil().max(0.0);
    let hi = r.max.floor().min(cap);
    if hi <= lo {
        lo.min(cap).max(0.0)
    } else {
        rng.random_range(lo as i64..=hi as i64) as f64
    }
}

/// Instance with a degree-pressure matrix and solution/slack values drawn
/// uniformly from the corpus ranges.
pub fn bowly_instance<R: Rng>(cfg: &BowlyConfig, ranges: &FeatureScaler, rng: &mut R) -> Result<(MilpInstance, FTuple)> {
    let a = bowly_matrix(cfg, rng)?;
    bowly_tuple(a, ranges, rng)
}

/// Draws `x, y, s, r` (and `y2`) for a fixed matrix and derives `(b, c)`.
pub fn bowly_tuple<R: Rng>(a: SparseMatrix, ranges: &FeatureScaler, rng: &mut R) -> Result<(MilpInstance, FTuple)> {
    let (m, n) = (a.n_rows(), a.n_cols());
    let mode = ranges.mode;
    let cap = if mode == Mode::Binary { 1.0 } else { f64::INFINITY };
    let nonneg = |r: &Range, rng: &mut R| r.sample(rng).max(0.0);
    let x = (0..n).map(|_| sample_integer(&ranges.x, cap, rng)).collect();
    let y = (0..m).map(|_| nonneg(&ranges.y, rng)).collect();
    let s = (0..n).map(|_| nonneg(&ranges.s, rng)).collect();
    let r = (0..m).map(|_| nonneg(&ranges.r, rng)).collect();
    let y2 = ranges.y2.map(|range| (0..n).map(|_| nonneg(&range, rng)).collect());
    let t = FTuple {
        mode,
        a,
        x,
        y,
        y2,
        s,
        r,
    };
    let inst = t.to_instance("bowly")?;
    Ok((inst, t))
}

/// Every decoder field uniform in `[0, 1]`, i.e. uniform over the corpus
/// range once denormalized.
pub fn random_decoder_output<R: Rng>(m_slots: usize, n: usize, binary: bool, rng: &mut R) -> DecoderOutput {
    let mut u = |k: usize| (0..k).map(|_| rng.random::<f64>()).collect::<Vec<_>>();
    DecoderOutput {
        degree_hat: u(1)[0],
        edge_logits: u(n),
        weight_hat: u(n),
        x_hat: u(n),
        s_hat: u(n),
        y_hat: u(m_slots),
        r_hat: u(m_slots),
        y2_hat: binary.then(|| u(n)),
    }
}

/// The sampling pipeline with random decoder outputs in place of a
/// trained model.
pub fn random_decoder_sample(
    sources: &[FTuple],
    cfg: &InferConfig,
    scaler: &FeatureScaler,
) -> Result<Vec<(MilpInstance, FTuple)>> {
    cfg.validate()?;
    if sources.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    (0..cfg.count)
        .into_par_iter()
        .map(|k| {
            let src = &sources[k % sources.len()];
            let mut rng = instance_rng(cfg.seed, k);
            let binary = src.mode == Mode::Binary;
            let (mut inst, t) = rewrite_constraints(src, cfg.gamma, scaler, &mut rng, |c, rng| {
                Ok(random_decoder_output(c.base.n_cons() + 1, c.base.n_vars(), binary, rng))
            })?;
            inst.name = format!("random-{k:05}");
            Ok((inst, t))
        })
        .collect()
}

/// `count` from-scratch instances shaped like the sources' first element.
pub fn bowly_sample(
    sources: &[FTuple],
    count: usize,
    seed: u64,
    scaler: &FeatureScaler,
    preset: fn(usize, usize, &mut ChaCha8Rng) -> BowlyConfig,
) -> Result<Vec<(MilpInstance, FTuple)>> {
    let first = sources.first().ok_or(Error::EmptyCorpus)?;
    let (m, n) = (first.n_cons(), first.n_vars());
    (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let cfg = preset(m, n, &mut rng);
            let (mut inst, t) = bowly_instance(&cfg, scaler, &mut rng)?;
            inst.name = format!("bowly-{k:05}");
            Ok((inst, t))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rho: f64, sigma: f64) -> BowlyConfig {
        BowlyConfig {
            n: 20,
            m: 10,
            rho,
            p_v: 0.5,
            p_c: 0.5,
            mu_a: -1.0,
            sigma_a: sigma,
        }
    }

    #[test]
    fn no_isolated_nodes() {
        for seed in 0..30 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = bowly_matrix(&cfg(0.05, 0.5), &mut rng).unwrap();
            assert!(a.row_degrees().iter().all(|&d| d >= 1));
            assert!(a.col_degrees().iter().all(|&d| d >= 1));
        }
    }

    #[test]
    fn full_density_is_dense() {
        let mut densities = Vec::new();
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = bowly_matrix(&cfg(1.0, 0.5), &mut rng).unwrap();
            densities.push(a.nnz() as f64 / 200.0);
        }
        assert!(densities.iter().all(|&d| d >= 0.5), "{densities:?}");
    }

    #[test]
    fn zero_sigma_gives_constant_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = bowly_matrix(&cfg(0.3, 0.0), &mut rng).unwrap();
        assert!(a.values().iter().all(|&w| w == -1.0));
    }

    #[test]
    fn degenerate_ranges_give_zero_rhs_and_objective() {
        let zero = Range { min: 0.0, max: 0.0 };
        let scaler = FeatureScaler {
            mode: Mode::GeneralInteger,
            x: zero,
            y: zero,
            s: zero,
            r: zero,
            y2: None,
            weight: zero,
            degree: zero,
        };
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, 3.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (inst, _) = bowly_tuple(a, &scaler, &mut rng).unwrap();
        assert!(inst.b.iter().chain(&inst.c).all(|&v| v == 0.0));
    }
}
