//! Variable-constraint bipartite graphs, the constraint-removal corruption
//! and min-max feature scaling.
//!
//! Constraint nodes carry `[0, y, r, mask]`; variable nodes carry
//! `[1, x, s, mask]` or `[1, x, s, y2, mask]` in binary mode. `mask` is 1
//! when the solution/slack columns hold real values and 0 once erased.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{derive_bc, FTuple, MilpInstance, Mode, SparseMatrix, TOL};

pub const CONS_Y: usize = 1;
pub const CONS_R: usize = 2;
pub const CONS_MASK: usize = 3;
pub const CONS_WIDTH: usize = 4;
pub const VAR_X: usize = 1;
pub const VAR_S: usize = 2;
pub const VAR_Y2: usize = 3;

pub fn var_width(mode: Mode) -> usize {
    match mode {
        Mode::GeneralInteger => 4,
        Mode::Binary => 5,
    }
}

pub fn var_mask(mode: Mode) -> usize {
    var_width(mode) - 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VCGraph {
    pub mode: Mode,
    pub cons_feats: Vec<Vec<f64>>,
    pub var_feats: Vec<Vec<f64>>,
    /// `(constraint, variable, weight)` for each nonzero of `A`.
    pub edges: Vec<(usize, usize, f64)>,
}

impl VCGraph {
    pub fn n_cons(&self) -> usize {
        self.cons_feats.len()
    }

    pub fn n_vars(&self) -> usize {
        self.var_feats.len()
    }

    pub fn matrix(&self) -> Result<SparseMatrix> {
        SparseMatrix::from_triplets(self.n_cons(), self.n_vars(), &self.edges)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialization cannot fail")
    }
}

pub fn encode_graph(t: &FTuple) -> Result<VCGraph> {
    t.validate()?;
    let cons_feats = (0..t.n_cons())
        .map(|i| vec![0.0, t.y[i], t.r[i], 1.0])
        .collect();
    let var_feats = (0..t.n_vars())
        .map(|j| {
            let mut f = vec![1.0, t.x[j], t.s[j]];
            if let Some(y2) = &t.y2 {
                f.push(y2[j]);
            }
            f.push(1.0);
            f
        })
        .collect();
    Ok(VCGraph {
        mode: t.mode,
        cons_feats,
        var_feats,
        edges: t.a.triplets(),
    })
}

fn read_nonneg(what: &'static str, index: usize, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("{what}[{index}]")));
    }
    if v < -TOL {
        return Err(Error::NegativeFeature {
            what,
            index,
            value: v,
        });
    }
    Ok(v.max(0.0))
}

/// Rebuilds the tuple from the graph and derives `(b, c)`.
pub fn decode_instance(g: &VCGraph) -> Result<(FTuple, MilpInstance)> {
    let a = g.matrix()?;
    let mut x = Vec::with_capacity(g.n_vars());
    let mut s = Vec::with_capacity(g.n_vars());
    let mut y2 = Vec::new();
    for (j, f) in g.var_feats.iter().enumerate() {
        if f.len() != var_width(g.mode) {
            return Err(Error::ShapeMismatch(format!("variable node {j} has {} features", f.len())));
        }
        x.push(read_nonneg("x", j, f[VAR_X])?);
        s.push(read_nonneg("s", j, f[VAR_S])?);
        if g.mode == Mode::Binary {
            y2.push(read_nonneg("y2", j, f[VAR_Y2])?);
        }
    }
    let mut y = Vec::with_capacity(g.n_cons());
    let mut r = Vec::with_capacity(g.n_cons());
    for (i, f) in g.cons_feats.iter().enumerate() {
        if f.len() != CONS_WIDTH {
            return Err(Error::ShapeMismatch(format!("constraint node {i} has {} features", f.len())));
        }
        y.push(read_nonneg("y", i, f[CONS_Y])?);
        r.push(read_nonneg("r", i, f[CONS_R])?);
    }
    let t = FTuple {
        mode: g.mode,
        a,
        x,
        y,
        y2: (g.mode == Mode::Binary).then_some(y2),
        s,
        r,
    };
    let (b, c) = derive_bc(&t)?;
    let inst = MilpInstance::new("decoded", g.mode, t.a.clone(), b, c)?;
    Ok((t, inst))
}

/// A graph with one constraint removed and every solution/slack feature
/// erased, plus the values needed to reconstruct it.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptedGraph {
    pub base: VCGraph,
    pub removed_index: usize,
    pub removed_degree: usize,
    /// `(variable, weight)` pairs of the removed row.
    pub removed_edges: Vec<(usize, f64)>,
    /// `y` and `r` of the surviving constraints in `base` order, followed
    /// by those of the removed constraint.
    pub target_y: Vec<f64>,
    pub target_r: Vec<f64>,
    pub target_x: Vec<f64>,
    pub target_s: Vec<f64>,
    pub target_y2: Option<Vec<f64>>,
}

pub fn corrupt(g: &VCGraph, cons_idx: usize) -> Result<CorruptedGraph> {
    let m = g.n_cons();
    if m < 2 {
        return Err(Error::LastConstraint);
    }
    if cons_idx >= m {
        return Err(Error::Validation(format!("constraint {cons_idx} out of range (m = {m})")));
    }
    let mut removed_edges = Vec::new();
    let mut edges = Vec::with_capacity(g.edges.len());
    for &(i, j, w) in &g.edges {
        match i.cmp(&cons_idx) {
            std::cmp::Ordering::Equal => removed_edges.push((j, w)),
            std::cmp::Ordering::Less => edges.push((i, j, w)),
            std::cmp::Ordering::Greater => edges.push((i - 1, j, w)),
        }
    }
    removed_edges.sort_by_key(|e| e.0);

    let mut target_y = Vec::with_capacity(m);
    let mut target_r = Vec::with_capacity(m);
    let mut cons_feats = Vec::with_capacity(m - 1);
    for (i, f) in g.cons_feats.iter().enumerate() {
        if i != cons_idx {
            target_y.push(f[CONS_Y]);
            target_r.push(f[CONS_R]);
            cons_feats.push(vec![f[0], 0.0, 0.0, 0.0]);
        }
    }
    target_y.push(g.cons_feats[cons_idx][CONS_Y]);
    target_r.push(g.cons_feats[cons_idx][CONS_R]);

    let binary = g.mode == Mode::Binary;
    let target_x = g.var_feats.iter().map(|f| f[VAR_X]).collect();
    let target_s = g.var_feats.iter().map(|f| f[VAR_S]).collect();
    let target_y2 = binary.then(|| g.var_feats.iter().map(|f| f[VAR_Y2]).collect());
    let var_feats = g
        .var_feats
        .iter()
        .map(|f| {
            let mut e = vec![0.0; f.len()];
            e[0] = f[0];
            e
        })
        .collect();

    Ok(CorruptedGraph {
        base: VCGraph {
            mode: g.mode,
            cons_feats,
            var_feats,
            edges,
        },
        removed_index: cons_idx,
        removed_degree: removed_edges.len(),
        removed_edges,
        target_y,
        target_r,
        target_x,
        target_s,
        target_y2,
    })
}

/// Removes a uniformly chosen constraint.
pub fn corrupt_random<R: Rng>(g: &VCGraph, rng: &mut R) -> Result<CorruptedGraph> {
    if g.n_cons() < 2 {
        return Err(Error::LastConstraint);
    }
    let idx = rng.random_range(0..g.n_cons());
    corrupt(g, idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn of(values: impl IntoIterator<Item = f64>) -> Option<Range> {
        values.into_iter().fold(None, |acc, v| match acc {
            None => Some(Range { min: v, max: v }),
            Some(r) => Some(Range {
                min: r.min.min(v),
                max: r.max.max(v),
            }),
        })
    }

    /// Maps `[min, max]` onto `[0, 1]`; a degenerate range maps to 0.
    pub fn apply(&self, v: f64) -> f64 {
        if self.max > self.min {
            (v - self.min) / (self.max - self.min)
        } else {
            0.0
        }
    }

    /// Inverse of [`Range::apply`]; a degenerate range returns `min`.
    pub fn invert(&self, u: f64) -> f64 {
        if self.max > self.min {
            self.min + u * (self.max - self.min)
        } else {
            self.min
        }
    }

    /// Uniform draw in `[min, max]`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.max > self.min {
            rng.random_range(self.min..=self.max)
        } else {
            self.min
        }
    }
}

/// Per-feature min/max ranges observed in a training corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mode: Mode,
    pub x: Range,
    pub y: Range,
    pub s: Range,
    pub r: Range,
    pub y2: Option<Range>,
    pub weight: Range,
    /// Degree of constraint nodes.
    pub degree: Range,
}

impl FeatureScaler {
    pub fn fit(corpus: &[FTuple]) -> Result<FeatureScaler> {
        let first = corpus.first().ok_or(Error::EmptyCorpus)?;
        let mode = first.mode;
        if corpus.iter().any(|t| t.mode != mode) {
            return Err(Error::Validation("corpus mixes binary and general-integer tuples".into()));
        }
        let flat = |f: fn(&FTuple) -> &[f64]| Range::of(corpus.iter().flat_map(|t| f(t).iter().copied()));
        let zero = Range { min: 0.0, max: 0.0 };
        let scaler = FeatureScaler {
            mode,
            x: flat(|t| &t.x).unwrap_or(zero),
            y: flat(|t| &t.y).unwrap_or(zero),
            s: flat(|t| &t.s).unwrap_or(zero),
            r: flat(|t| &t.r).unwrap_or(zero),
            y2: (mode == Mode::Binary).then(|| {
                Range::of(corpus.iter().flat_map(|t| t.y2.iter().flatten().copied())).unwrap_or(zero)
            }),
            weight: Range::of(corpus.iter().flat_map(|t| t.a.values().iter().copied())).unwrap_or(zero),
            degree: Range::of(corpus.iter().flat_map(|t| t.a.row_degrees().into_iter().map(|d| d as f64)))
                .unwrap_or(zero),
        };
        Ok(scaler)
    }

    /// Scales feature columns and edge weights of the nodes whose mask is set.
    pub fn scale_graph(&self, g: &VCGraph) -> VCGraph {
        let mut out = g.clone();
        for f in &mut out.cons_feats {
            if f[CONS_MASK] != 0.0 {
                f[CONS_Y] = self.y.apply(f[CONS_Y]);
                f[CONS_R] = self.r.apply(f[CONS_R]);
            }
        }
        let mask = var_mask(g.mode);
        for f in &mut out.var_feats {
            if f[mask] != 0.0 {
                f[VAR_X] = self.x.apply(f[VAR_X]);
                f[VAR_S] = self.s.apply(f[VAR_S]);
                if let Some(y2) = &self.y2 {
                    f[VAR_Y2] = y2.apply(f[VAR_Y2]);
                }
            }
        }
        for e in &mut out.edges {
            e.2 = self.weight.apply(e.2);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tuple(rows: &[&[f64]], binary: bool) -> FTuple {
        let a = SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
        let (m, n) = (a.n_rows(), a.n_cols());
        FTuple {
            mode: if binary { Mode::Binary } else { Mode::GeneralInteger },
            a,
            x: (0..n).map(|j| (j % 2) as f64).collect(),
            y: (0..m).map(|i| 0.5 * i as f64).collect(),
            y2: binary.then(|| vec![0.25; n]),
            s: vec![1.0; n],
            r: (0..m).map(|i| i as f64).collect(),
        }
    }

    #[test]
    fn single_edge_graph() {
        let g = encode_graph(&tuple(&[&[1.0]], false)).unwrap();
        assert_eq!((g.n_cons(), g.n_vars(), g.edges.clone()), (1, 1, vec![(0, 0, 1.0)]));
    }

    #[test]
    fn edges_follow_nonzeros() {
        let t = tuple(&[&[1.0, 0.0, 2.0], &[0.0, 3.0, 4.0], &[5.0, 6.0, 7.0]], true);
        assert_eq!(t.a.nnz(), 7);
        let g = encode_graph(&t).unwrap();
        assert_eq!(g.edges.len(), 7);
        let (back, inst) = decode_instance(&g).unwrap();
        assert_eq!(back, t);
        assert_eq!((inst.b, inst.c), derive_bc(&t).unwrap());
    }

    #[test]
    fn negative_feature_rejected() {
        let mut g = encode_graph(&tuple(&[&[1.0]], false)).unwrap();
        g.cons_feats[0][CONS_R] = -1e-3;
        assert!(matches!(decode_instance(&g), Err(Error::NegativeFeature { what: "r", .. })));
        g.cons_feats[0][CONS_R] = -1e-12;
        assert_eq!(decode_instance(&g).unwrap().0.r, vec![0.0]);
    }

    #[test]
    fn corrupt_removes_row_and_erases() {
        let t = tuple(&[&[1.0, 2.0], &[0.0, 3.0]], true);
        let g = encode_graph(&t).unwrap();
        let c = corrupt(&g, 0).unwrap();
        assert_eq!(c.base.n_cons(), 1);
        assert_eq!(c.removed_edges, vec![(0, 1.0), (1, 2.0)]);
        assert_eq!(c.removed_degree, 2);
        assert_eq!(c.base.edges, vec![(0, 1, 3.0)]);
        assert!(c.base.var_feats.iter().all(|f| f[1..].iter().all(|&v| v == 0.0) && f[0] == 1.0));
        assert!(c.base.cons_feats.iter().all(|f| f == &vec![0.0, 0.0, 0.0, 0.0]));
        assert_eq!(c.target_y, vec![0.5, 0.0]);
        assert_eq!(c.target_r, vec![1.0, 0.0]);
        assert!(matches!(
            corrupt(&encode_graph(&tuple(&[&[1.0]], false)).unwrap(), 0),
            Err(Error::LastConstraint)
        ));
    }

    #[test]
    fn corruption_index_is_uniform() {
        let rows: Vec<Vec<f64>> = (0..5).map(|_| vec![1.0, 1.0]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let g = encode_graph(&tuple(&refs, false)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 10_000;
        let mut counts = [0usize; 5];
        for _ in 0..draws {
            counts[corrupt_random(&g, &mut rng).unwrap().removed_index] += 1;
        }
        let p = 0.2;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn scaler_rules() {
        let r = Range { min: 0.0, max: 10.0 };
        assert_eq!(r.apply(5.0), 0.5);
        let d = Range { min: 3.0, max: 3.0 };
        assert_eq!((d.apply(3.0), d.invert(0.0)), (0.0, 3.0));
        assert!(matches!(FeatureScaler::fit(&[]), Err(Error::EmptyCorpus)));
    }
}
