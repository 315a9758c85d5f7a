use std::rc::Rc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{Linear, Mlp, ParamStore};
use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnnConfig {
    pub hidden: usize,
    /// Number of (variable→constraint, constraint→variable) convolution pairs.
    pub rounds: usize,
}

impl Default for GnnConfig {
    fn default() -> Self {
        GnnConfig { hidden: 32, rounds: 1 }
    }
}

/// Node features and edge lists of a bipartite graph, ready for the network.
#[derive(Debug, Clone)]
pub struct GraphInput {
    pub cons: Tensor,
    pub vars: Tensor,
    pub edge_cons: Rc<[usize]>,
    pub edge_vars: Rc<[usize]>,
    /// `E × 1` edge weights.
    pub edge_w: Tensor,
}

impl GraphInput {
    pub fn new(cons: Tensor, vars: Tensor, edges: &[(usize, usize, f64)]) -> Result<Self> {
        for &(i, j, w) in edges {
            if i >= cons.rows || j >= vars.rows || !w.is_finite() {
                return Err(Error::ShapeMismatch(format!("edge ({i}, {j}) outside the graph")));
            }
        }
        Ok(GraphInput {
            cons,
            vars,
            edge_cons: edges.iter().map(|e| e.0).collect(),
            edge_vars: edges.iter().map(|e| e.1).collect(),
            edge_w: Tensor::from_vec(edges.len(), 1, edges.iter().map(|e| e.2).collect()),
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NodeEmbeddings {
    pub h_cons: Var,
    pub h_vars: Var,
}

#[derive(Debug, Clone)]
struct HalfConv {
    src: Linear,
    dst: Linear,
    edge: Linear,
    msg: Linear,
    out: Mlp,
}

impl HalfConv {
    fn new<R: Rng>(store: &mut ParamStore, name: &str, h: usize, rng: &mut R) -> Self {
        HalfConv {
            src: Linear::new(store, &format!("{name}.src"), h, h, rng),
            dst: Linear::new(store, &format!("{name}.dst"), h, h, rng),
            edge: Linear::new(store, &format!("{name}.edge"), 1, h, rng),
            msg: Linear::new(store, &format!("{name}.msg"), h, h, rng),
            out: Mlp::new(store, &format!("{name}.out"), &[2 * h, h, h], false, rng),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        h_src: Var,
        h_dst: Var,
        src_idx: &Rc<[usize]>,
        dst_idx: &Rc<[usize]>,
        edge_w: Var,
    ) -> Var {
        let n_dst = tape.value(h_dst).rows;
        let ps = self.src.forward(tape, store, h_src);
        let pd = self.dst.forward(tape, store, h_dst);
        let pe = self.edge.forward(tape, store, edge_w);
        let gs = tape.gather_rows(ps, src_idx.clone());
        let gd = tape.gather_rows(pd, dst_idx.clone());
        let pre = tape.add(gs, gd);
        let pre = tape.add(pre, pe);
        let act = tape.relu(pre);
        let msg = self.msg.forward(tape, store, act);
        let agg = tape.scatter_add_rows(msg, dst_idx.clone(), n_dst);
        let cat = tape.concat_cols(&[agg, h_dst]);
        self.out.forward(tape, store, cat)
    }
}

/// Bipartite message-passing backbone with edge-weight-conditioned messages
/// and sum aggregation.
#[derive(Debug, Clone)]
pub struct BipartiteGnn {
    pub config: GnnConfig,
    cons_embed: Mlp,
    var_embed: Mlp,
    rounds: Vec<(HalfConv, HalfConv)>,
}

impl BipartiteGnn {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        cons_width: usize,
        var_width: usize,
        config: GnnConfig,
        rng: &mut R,
    ) -> Self {
        let h = config.hidden;
        let cons_embed = Mlp::new(store, &format!("{name}.cons_embed"), &[cons_width, h, h], true, rng);
        let var_embed = Mlp::new(store, &format!("{name}.var_embed"), &[var_width, h, h], true, rng);
        let rounds = (0..config.rounds)
            .map(|k| {
                (
                    HalfConv::new(store, &format!("{name}.v2c{k}"), h, rng),
                    HalfConv::new(store, &format!("{name}.c2v{k}"), h, rng),
                )
            })
            .collect();
        BipartiteGnn {
            config,
            cons_embed,
            var_embed,
            rounds,
        }
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, g: &GraphInput) -> Result<NodeEmbeddings> {
        let cw = store.tensor(self.cons_embed.layers[0].w).rows;
        let vw = store.tensor(self.var_embed.layers[0].w).rows;
        if g.cons.cols != cw || g.vars.cols != vw {
            return Err(Error::ShapeMismatch(format!(
                "node features {}/{} vs network inputs {cw}/{vw}",
                g.cons.cols, g.vars.cols
            )));
        }
        let cons = tape.constant(g.cons.clone());
        let vars = tape.constant(g.vars.clone());
        let ew = tape.constant(g.edge_w.clone());
        let mut hc = self.cons_embed.forward(tape, store, cons);
        let mut hv = self.var_embed.forward(tape, store, vars);
        for (v2c, c2v) in &self.rounds {
            hc = v2c.forward(tape, store, hv, hc, &g.edge_vars, &g.edge_cons, ew);
            hv = c2v.forward(tape, store, hc, hv, &g.edge_cons, &g.edge_vars, ew);
        }
        Ok(NodeEmbeddings {
            h_cons: hc,
            h_vars: hv,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_input(rng: &mut ChaCha8Rng, m: usize, n: usize) -> (GraphInput, Vec<(usize, usize, f64)>) {
        let cons = Tensor::from_vec(m, 3, (0..3 * m).map(|_| rng.random()).collect());
        let vars = Tensor::from_vec(n, 4, (0..4 * n).map(|_| rng.random()).collect());
        let mut edges = Vec::new();
        for i in 0..m {
            for j in 0..n {
                if rng.random_bool(0.5) {
                    edges.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
        }
        (GraphInput::new(cons, vars, &edges).unwrap(), edges)
    }

    #[test]
    fn variable_permutation_permutes_embeddings() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut store = ParamStore::new();
        let gnn = BipartiteGnn::new(&mut store, "g", 3, 4, GnnConfig { hidden: 8, rounds: 2 }, &mut rng);
        let (g, edges) = random_input(&mut rng, 3, 5);
        let perm = [3usize, 0, 4, 1, 2];
        let mut pv = Tensor::zeros(5, 4);
        for (new, &old) in perm.iter().enumerate() {
            pv.data[new * 4..new * 4 + 4].copy_from_slice(g.vars.row(old));
        }
        let inv: Vec<usize> = (0..5).map(|old| perm.iter().position(|&p| p == old).unwrap()).collect();
        let pedges: Vec<_> = edges.iter().map(|&(i, j, w)| (i, inv[j], w)).collect();
        let pg = GraphInput::new(g.cons.clone(), pv, &pedges).unwrap();

        let mut t1 = Tape::new();
        let e1 = gnn.forward(&mut t1, &store, &g).unwrap();
        let mut t2 = Tape::new();
        let e2 = gnn.forward(&mut t2, &store, &pg).unwrap();
        let (h1, h2) = (t1.value(e1.h_vars), t2.value(e2.h_vars));
        for (new, &old) in perm.iter().enumerate() {
            for (a, b) in h2.row(new).iter().zip(h1.row(old)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let (c1, c2) = (t1.value(e1.h_cons), t2.value(e2.h_cons));
        for (a, b) in c1.data.iter().zip(&c2.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn edgeless_graph_uses_raw_features_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::new();
        let gnn = BipartiteGnn::new(&mut store, "g", 3, 4, GnnConfig::default(), &mut rng);
        let cons = Tensor::from_vec(2, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let vars = Tensor::from_vec(1, 4, vec![1.0, 0.5, 0.25, 0.0]);
        let g = GraphInput::new(cons.clone(), vars.clone(), &[]).unwrap();
        // Adding an unrelated variable must not change constraint embeddings.
        let vars2 = Tensor::from_vec(2, 4, vec![1.0, 0.5, 0.25, 0.0, 1.0, 0.9, 0.9, 1.0]);
        let g2 = GraphInput::new(cons, vars2, &[]).unwrap();
        let mut t1 = Tape::new();
        let e1 = gnn.forward(&mut t1, &store, &g).unwrap();
        let mut t2 = Tape::new();
        let e2 = gnn.forward(&mut t2, &store, &g2).unwrap();
        assert_eq!(t1.value(e1.h_cons), t2.value(e2.h_cons));
        assert_eq!(t1.value(e1.h_vars).row(0), t2.value(e2.h_vars).row(0));
    }
}
