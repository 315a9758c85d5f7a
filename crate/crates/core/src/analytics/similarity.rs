use serde::{Deserialize, Serialize};

use super::stats::StatProfile;
use crate::error::{Error, Result};

pub const BINS: usize = 10;

/// Bin counts of `values` over `[lo, hi]`, following numpy: equal-width
/// bins, the last one closed on the right, and a zero-width range widened
/// to `[lo − 0.5, hi + 0.5]`. Values outside the range are dropped.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let (lo, hi) = if lo == hi { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
    let step = (hi - lo) / bins as f64;
    let edge = |k: usize| if k == bins { hi } else { lo + k as f64 * step };
    let mut counts = vec![0.0; bins];
    for &v in values {
        if !(v >= lo && v <= hi) {
            continue;
        }
        let mut k = ((v - lo) * (bins as f64 / (hi - lo))).floor() as usize;
        k = k.min(bins - 1);
        if v < edge(k) {
            k -= 1;
        } else if k + 1 < bins && v >= edge(k + 1) {
            k += 1;
        }
        counts[k] += 1.0;
    }
    counts
}

fn rel_entr(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * (p / q).ln()
    }
}

/// Jensen-Shannon distance (square root of the divergence, natural log).
/// Both inputs are normalized to sum 1 first.
pub fn js_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            what: "histogram",
            expected: p.len(),
            found: q.len(),
        });
    }
    let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
    if !(sp > 0.0 && sq > 0.0) || p.iter().chain(q).any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Validation("histograms need non-negative finite mass".into()));
    }
    let mut div = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let (a, b) = (a / sp, b / sq);
        let m = 0.5 * (a + b);
        div += rel_entr(a, m) + rel_entr(b, m);
    }
    Ok((div / 2.0).max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    /// Distance to the original per metric.
    pub distances: [f64; 9],
    pub scores: [f64; 9],
    /// Mean of the nine scores.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResult {
    /// One report per candidate, in input order.
    pub reports: Vec<SimilarityReport>,
    /// Every distance was equal, so scores are set to 1 by convention.
    pub degenerate: bool,
}

/// Scores each candidate corpus against `original`.
///
/// For every metric the value range is pooled over all corpora and split
/// into [`BINS`] bins. Distances are then rescaled to scores with the
/// largest and smallest distance taken jointly over all candidates and
/// metrics.
pub fn js_similarity(original: &[StatProfile], candidates: &[Vec<StatProfile>]) -> Result<SimilarityResult> {
    js_similarity_bins(original, candidates, BINS)
}

/// [`js_similarity`] with a different bin count.
pub fn js_similarity_bins(
    original: &[StatProfile],
    candidates: &[Vec<StatProfile>],
    bins: usize,
) -> Result<SimilarityResult> {
    if bins < 1 {
        return Err(Error::Validation("histograms need at least one bin".into()));
    }
    if candidates.is_empty() {
        return Err(Error::Validation("similarity needs at least one candidate corpus".into()));
    }
    if original.is_empty() || candidates.iter().any(|c| c.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    let column = |corpus: &[StatProfile], k: usize| corpus.iter().map(|p| p.values()[k]).collect::<Vec<_>>();
    let mut distances = vec![[0.0; 9]; candidates.len()];
    for k in 0..9 {
        let orig = column(original, k);
        let cols: Vec<Vec<f64>> = candidates.iter().map(|c| column(c, k)).collect();
        let all = orig.iter().chain(cols.iter().flatten());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("statistic {k}")));
        }
        let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
        let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
        let h0 = histogram(&orig, lo, hi, bins);
        for (c, col) in cols.iter().enumerate() {
            distances[c][k] = js_distance(&h0, &histogram(col, lo, hi, bins))?;
        }
    }
    let flat = distances.iter().flatten();
    let dmax = flat.clone().copied().fold(f64::NEG_INFINITY, f64::max);
    let dmin = flat.copied().fold(f64::INFINITY, f64::min);
    let degenerate = dmax == dmin;
    let reports = distances
        .into_iter()
        .map(|d| {
            let scores = d.map(|v| if degenerate { 1.0 } else { (dmax - v) / (dmax - dmin) });
            SimilarityReport {
                distances: d,
                scores,
                score: scores.iter().sum::<f64>() / 9.0,
            }
        })
        .collect();
    Ok(SimilarityResult { reports, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numpy_bin_edges() {
        let v = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
        // numpy.histogram(v, bins=10, range=(0, 1))
        assert_eq!(histogram(&v, 0.0, 1.0, 10), vec![1.0, 1.0, 2.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        assert_eq!(histogram(&[3.0, 3.0], 3.0, 3.0, 10)[5], 2.0);
    }

    #[test]
    fn disjoint_supports() {
        let d = js_distance(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert!((d - 2f64.ln().sqrt()).abs() <= 1e-12);
        assert_eq!(js_distance(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 0.0);
    }
}
