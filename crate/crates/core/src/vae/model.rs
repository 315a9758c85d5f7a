use std::rc::Rc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{var_width, CorruptedGraph, FeatureScaler, VCGraph, CONS_WIDTH};
use crate::instance::Mode;
use crate::nn::{
    decode_checkpoint, encode_checkpoint, BipartiteGnn, GnnConfig, GraphInput, Mlp, ParamStore, Tape, Tensor, Var,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub mode: Mode,
    pub gnn: GnnConfig,
    pub latent: usize,
    pub head_hidden: usize,
}

impl ModelConfig {
    pub fn new(mode: Mode) -> Self {
        ModelConfig {
            mode,
            gnn: GnnConfig::default(),
            latent: 16,
            head_hidden: 32,
        }
    }
}

/// Per-node Gaussian posterior; rows are constraints then variables.
#[derive(Debug, Clone, Copy)]
pub struct EncoderOutput {
    pub mu: Var,
    pub logvar: Var,
}

/// Decoder heads as tape values, all in scaled space.
///
/// Constraint-side heads have one row per surviving constraint followed by
/// one row for the regenerated constraint.
#[derive(Debug, Clone, Copy)]
pub struct HeadVars {
    pub degree: Var,
    pub edge_logits: Var,
    pub weight: Var,
    pub x: Var,
    pub s: Var,
    pub y: Var,
    pub r: Var,
    pub y2: Option<Var>,
}

/// Decoder predictions as plain vectors, in scaled space.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderOutput {
    pub degree_hat: f64,
    pub edge_logits: Vec<f64>,
    pub weight_hat: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub s_hat: Vec<f64>,
    pub y_hat: Vec<f64>,
    pub r_hat: Vec<f64>,
    pub y2_hat: Option<Vec<f64>>,
}

impl DecoderOutput {
    pub fn read(tape: &Tape, h: &HeadVars) -> Self {
        let col = |v: Var| tape.value(v).data.clone();
        DecoderOutput {
            degree_hat: tape.value(h.degree).item(),
            edge_logits: col(h.edge_logits),
            weight_hat: col(h.weight),
            x_hat: col(h.x),
            s_hat: col(h.s),
            y_hat: col(h.y),
            r_hat: col(h.r),
            y2_hat: h.y2.map(col),
        }
    }
}

#[derive(Debug, Clone)]
struct Heads {
    degree: Mlp,
    edge: Mlp,
    weight: Mlp,
    x: Mlp,
    s: Mlp,
    y: Mlp,
    r: Mlp,
    y2: Option<Mlp>,
}

/// Encoder, decoder and the feature scaler fitted on the training corpus.
#[derive(Debug, Clone)]
pub struct Vae {
    pub config: ModelConfig,
    pub scaler: FeatureScaler,
    pub store: ParamStore,
    encoder: BipartiteGnn,
    mu_head: Mlp,
    logvar_head: Mlp,
    decoder: BipartiteGnn,
    heads: Heads,
}

pub(crate) fn graph_input(g: &VCGraph, extra_cons_rows: usize) -> Result<GraphInput> {
    let mut cons = Tensor::from_rows(&g.cons_feats, CONS_WIDTH);
    for _ in 0..extra_cons_rows {
        cons.data.extend(std::iter::repeat_n(0.0, CONS_WIDTH));
        cons.rows += 1;
    }
    let vars = Tensor::from_rows(&g.var_feats, var_width(g.mode));
    GraphInput::new(cons, vars, &g.edges)
}

impl Vae {
    pub fn new(config: ModelConfig, scaler: FeatureScaler, seed: u64) -> Result<Self> {
        if config.latent < 1 || config.head_hidden < 1 || config.gnn.hidden < 1 {
            return Err(Error::Validation("model widths must be at least 1".into()));
        }
        if scaler.mode != config.mode {
            return Err(Error::Validation("scaler and model modes differ".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let (h, z, k) = (config.gnn.hidden, config.latent, config.head_hidden);
        let vw = var_width(config.mode);
        let encoder = BipartiteGnn::new(&mut store, "enc", CONS_WIDTH, vw, config.gnn, &mut rng);
        let mu_head = Mlp::new(&mut store, "enc.mu", &[h, k, z], false, &mut rng);
        let logvar_head = Mlp::new(&mut store, "enc.logvar", &[h, k, z], false, &mut rng);
        let decoder = BipartiteGnn::new(&mut store, "dec", CONS_WIDTH, vw, config.gnn, &mut rng);
        let u = h + z;
        let mut head = |name: &str, input: usize| Mlp::new(&mut store, &format!("dec.{name}"), &[input, k, 1], false, &mut rng);
        let heads = Heads {
            degree: head("degree", 2 * u),
            edge: head("edge", 2 * u),
            weight: head("weight", 2 * u),
            x: head("x", u),
            s: head("s", u),
            y: head("y", u),
            r: head("r", u),
            y2: (config.mode == Mode::Binary).then(|| head("y2", u)),
        };
        Ok(Vae {
            config,
            scaler,
            store,
            encoder,
            mu_head,
            logvar_head,
            decoder,
            heads,
        })
    }

    /// Posterior parameters for every node of the scaled, uncorrupted graph.
    pub fn encode_latent(&self, tape: &mut Tape, scaled: &VCGraph) -> Result<EncoderOutput> {
        let input = graph_input(scaled, 0)?;
        let emb = self.encoder.forward(tape, &self.store, &input)?;
        let h = tape.concat_rows(&[emb.h_cons, emb.h_vars]);
        let mu = self.mu_head.forward(tape, &self.store, h);
        let logvar = self.logvar_head.forward(tape, &self.store, h);
        Ok(EncoderOutput { mu, logvar })
    }

    /// Decoder heads on a scaled corrupted graph.
    ///
    /// `z_cons` has one row per surviving constraint plus one for the
    /// regenerated constraint; `z_vars` one row per variable.
    pub fn decode_heads(&self, tape: &mut Tape, base_scaled: &VCGraph, z_cons: Var, z_vars: Var) -> Result<HeadVars> {
        let m = base_scaled.n_cons() + 1;
        let n = base_scaled.n_vars();
        let zl = self.config.latent;
        if tape.value(z_cons).shape() != (m, zl) || tape.value(z_vars).shape() != (n, zl) {
            return Err(Error::ShapeMismatch(format!(
                "latents {:?}/{:?} for a graph with {m} constraint slots and {n} variables",
                tape.value(z_cons).shape(),
                tape.value(z_vars).shape()
            )));
        }
        let input = graph_input(base_scaled, 1)?;
        let emb = self.decoder.forward(tape, &self.store, &input)?;
        let uc = tape.concat_cols(&[emb.h_cons, z_cons]);
        let uv = tape.concat_cols(&[emb.h_vars, z_vars]);
        let slot_rows: Rc<[usize]> = std::iter::repeat_n(m - 1, n).collect();
        let slot = tape.gather_rows(uc, slot_rows);
        let pair = tape.concat_cols(&[uv, slot]);
        let pooled = tape.mean_rows(uv);
        let slot1 = tape.gather_rows(uc, Rc::from(vec![m - 1]));
        let dsum = tape.concat_cols(&[pooled, slot1]);
        let (s, hd) = (&self.store, &self.heads);
        Ok(HeadVars {
            degree: hd.degree.forward(tape, s, dsum),
            edge_logits: hd.edge.forward(tape, s, pair),
            weight: hd.weight.forward(tape, s, pair),
            x: hd.x.forward(tape, s, uv),
            s: hd.s.forward(tape, s, uv),
            y: hd.y.forward(tape, s, uc),
            r: hd.r.forward(tape, s, uc),
            y2: hd.y2.as_ref().map(|m| m.forward(tape, s, uv)),
        })
    }

    /// Decodes with latents drawn by the caller (standard normal at inference).
    pub fn decode_with(&self, corrupted: &CorruptedGraph, z_cons: Tensor, z_vars: Tensor) -> Result<DecoderOutput> {
        let mut tape = Tape::new();
        let base = self.scaler.scale_graph(&corrupted.base);
        let zc = tape.constant(z_cons);
        let zv = tape.constant(z_vars);
        let heads = self.decode_heads(&mut tape, &base, zc, zv)?;
        Ok(DecoderOutput::read(&tape, &heads))
    }

    fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": "vae",
            "config": self.config,
            "scaler": self.scaler,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode_checkpoint(&self.metadata(), &self.store)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (meta, store) = decode_checkpoint(bytes)?;
        let bad = |msg: String| Error::Format { offset: 0, msg };
        if meta.get("kind").and_then(|k| k.as_str()) != Some("vae") {
            return Err(bad("checkpoint is not a generator model".into()));
        }
        let config: ModelConfig =
            serde_json::from_value(meta["config"].clone()).map_err(|e| bad(format!("config: {e}")))?;
        let scaler: FeatureScaler =
            serde_json::from_value(meta["scaler"].clone()).map_err(|e| bad(format!("scaler: {e}")))?;
        let mut vae = Vae::new(config, scaler, 0)?;
        vae.store.load_from(&store)?;
        Ok(vae)
    }
}
