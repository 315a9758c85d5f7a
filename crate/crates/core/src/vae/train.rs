use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{EncoderOutput, HeadVars, ModelConfig, Vae};
use crate::error::{Error, Result};
use crate::graph::{corrupt_random, encode_graph, CorruptedGraph, FeatureScaler, VCGraph};
use crate::instance::{FTuple, Mode};
use crate::nn::{standard_normal, Adam, AdamConfig, GnnConfig, Gradients, Tape, Tensor, Var};

pub const HUBER_DELTA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub alpha: f64,
    pub lr: f64,
    pub seed: u64,
    pub latent: usize,
    pub hidden: usize,
    pub rounds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 4,
            alpha: 5.0,
            lr: 1e-3,
            seed: 123,
            latent: 16,
            hidden: 32,
            rounds: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 || self.batch_size < 1 {
            return Err(Error::Validation("epochs and batch_size must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Validation(format!("alpha {} must be positive", self.alpha)));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Validation(format!("lr {} must be non-negative", self.lr)));
        }
        if self.latent < 1 || self.hidden < 1 || self.rounds < 1 {
            return Err(Error::Validation("latent, hidden and rounds must be at least 1".into()));
        }
        Ok(())
    }

    pub fn model_config(&self, mode: Mode) -> ModelConfig {
        ModelConfig {
            mode,
            gnn: GnnConfig {
                hidden: self.hidden,
                rounds: self.rounds,
            },
            latent: self.latent,
            head_hidden: self.hidden,
        }
    }
}

/// Reconstruction targets of one corruption, in scaled space.
#[derive(Debug, Clone, PartialEq)]
pub struct Targets {
    pub degree: f64,
    pub edges: Vec<f64>,
    /// `(variable, scaled weight)` of the removed row.
    pub weights: Vec<(usize, f64)>,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub y: Vec<f64>,
    pub r: Vec<f64>,
    pub y2: Option<Vec<f64>>,
}

impl Targets {
    pub fn new(c: &CorruptedGraph, scaler: &FeatureScaler) -> Self {
        let n = c.base.n_vars();
        let mut edges = vec![0.0; n];
        for &(j, _) in &c.removed_edges {
            edges[j] = 1.0;
        }
        let map = |r: &crate::graph::Range, v: &[f64]| v.iter().map(|&x| r.apply(x)).collect::<Vec<_>>();
        Targets {
            degree: scaler.degree.apply(c.removed_degree as f64),
            edges,
            weights: c.removed_edges.iter().map(|&(j, w)| (j, scaler.weight.apply(w))).collect(),
            x: map(&scaler.x, &c.target_x),
            s: map(&scaler.s, &c.target_s),
            y: map(&scaler.y, &c.target_y),
            r: map(&scaler.r, &c.target_r),
            y2: match (&scaler.y2, &c.target_y2) {
                (Some(range), Some(v)) => Some(map(range, v)),
                _ => None,
            },
        }
    }
}

/// Sum of the mean Huber losses of every decoder head.
pub fn reconstruction_loss(tape: &mut Tape, h: &HeadVars, t: &Targets) -> Var {
    let col = |v: &[f64]| Tensor::column(v);
    let mut terms = vec![
        tape.huber(h.degree, Tensor::scalar(t.degree), HUBER_DELTA),
        tape.huber(h.edge_logits, col(&t.edges), HUBER_DELTA),
        tape.huber(h.x, col(&t.x), HUBER_DELTA),
        tape.huber(h.s, col(&t.s), HUBER_DELTA),
        tape.huber(h.y, col(&t.y), HUBER_DELTA),
        tape.huber(h.r, col(&t.r), HUBER_DELTA),
    ];
    if !t.weights.is_empty() {
        let idx: Rc<[usize]> = t.weights.iter().map(|w| w.0).collect();
        let picked = tape.gather_rows(h.weight, idx);
        let target: Vec<f64> = t.weights.iter().map(|w| w.1).collect();
        terms.push(tape.huber(picked, col(&target), HUBER_DELTA));
    }
    if let (Some(hy2), Some(ty2)) = (h.y2, &t.y2) {
        terms.push(tape.huber(hy2, col(ty2), HUBER_DELTA));
    }
    let mut acc = terms[0];
    for &t in &terms[1..] {
        acc = tape.add(acc, t);
    }
    acc
}

/// Loss value split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    /// Unweighted reconstruction sum (before multiplying by alpha).
    pub reconstruction: f64,
    pub kl: f64,
}

/// Records `alpha · reconstruction + KL` for one corruption of `graph`.
///
/// `noise` is the standard-normal draw for the reparameterized latents,
/// one row per node (constraints first).
pub fn elbo_on_tape(
    vae: &Vae,
    tape: &mut Tape,
    graph: &VCGraph,
    corrupted: &CorruptedGraph,
    noise: Tensor,
    alpha: f64,
) -> Result<(Var, LossParts)> {
    let scaled = vae.scaler.scale_graph(graph);
    let EncoderOutput { mu, logvar } = vae.encode_latent(tape, &scaled)?;
    let z = tape.reparameterize(mu, logvar, noise);
    let m = graph.n_cons();
    let n = graph.n_vars();
    let ri = corrupted.removed_index;
    let cons_rows: Rc<[usize]> = (0..m).filter(|&i| i != ri).chain(std::iter::once(ri)).collect();
    let var_rows: Rc<[usize]> = (m..m + n).collect();
    let zc = tape.gather_rows(z, cons_rows);
    let zv = tape.gather_rows(z, var_rows);
    let base = vae.scaler.scale_graph(&corrupted.base);
    let heads = vae.decode_heads(tape, &base, zc, zv)?;
    let targets = Targets::new(corrupted, &vae.scaler);
    let recon = reconstruction_loss(tape, &heads, &targets);
    let kl = tape.kl_std_normal(mu, logvar);
    let weighted = tape.scale(recon, alpha);
    let total = tape.add(weighted, kl);
    let parts = LossParts {
        total: tape.value(total).item(),
        reconstruction: tape.value(recon).item(),
        kl: tape.value(kl).item(),
    };
    Ok((total, parts))
}

/// Samples a corruption and latent noise from `rng`, then returns the loss
/// and its gradients with respect to every model parameter.
pub fn elbo_loss<R: Rng>(vae: &Vae, graph: &VCGraph, alpha: f64, rng: &mut R) -> Result<(LossParts, Gradients)> {
    let corrupted = corrupt_random(graph, rng)?;
    let noise = standard_normal(rng, graph.n_cons() + graph.n_vars(), vae.config.latent);
    let mut tape = Tape::new();
    let (total, parts) = elbo_on_tape(vae, &mut tape, graph, &corrupted, noise, alpha)?;
    Ok((parts, tape.backward(total)))
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub vae: Vae,
    /// Mean sample loss per epoch, measured before each batch's update.
    pub epoch_loss: Vec<f64>,
}

/// Minibatch training with Adam.
///
/// Each epoch shuffles the corpus, splits it into batches of
/// `batch_size`, and takes one step per batch on the batch-mean loss. Every
/// sample gets a fresh corruption and latent draw.
pub fn train(tuples: &[FTuple], cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    let scaler = FeatureScaler::fit(tuples)?;
    let graphs: Vec<VCGraph> = tuples.iter().map(encode_graph).collect::<Result<_>>()?;
    if graphs.iter().any(|g| g.n_cons() < 2) {
        return Err(Error::LastConstraint);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut vae = Vae::new(cfg.model_config(scaler.mode), scaler, rng.random())?;
    let mut adam = Adam::new(
        &vae.store,
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
    );
    let mut order: Vec<usize> = (0..graphs.len()).collect();
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut acc: Option<Vec<Tensor>> = None;
            for &k in batch {
                let (parts, grads) = elbo_loss(&vae, &graphs[k], cfg.alpha, &mut rng)?;
                total += parts.total;
                let dense = grads.dense(&vae.store);
                match &mut acc {
                    None => acc = Some(dense),
                    Some(a) => a.iter_mut().zip(&dense).for_each(|(a, g)| a.add_assign(g)),
                }
            }
            let inv = 1.0 / batch.len() as f64;
            let mean: Vec<Tensor> = acc.expect("non-empty batch").iter().map(|g| g.scaled(inv)).collect();
            adam.step(&mut vae.store, &mean);
        }
        epoch_loss.push(total / graphs.len() as f64);
    }
    Ok(TrainOutput { vae, epoch_loss })
}
