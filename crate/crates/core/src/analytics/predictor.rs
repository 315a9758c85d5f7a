use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Range;
use crate::instance::MilpInstance;
use crate::nn::{
    decode_checkpoint, encode_checkpoint, Adam, AdamConfig, BipartiteGnn, GnnConfig, GraphInput, Mlp, ParamStore,
    Tape, Tensor, Var,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub hidden: usize,
    pub rounds: usize,
    pub seed: u64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            epochs: 100,
            batch_size: 4,
            lr: 1e-3,
            hidden: 32,
            rounds: 1,
            seed: 0,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 || self.batch_size < 1 || self.hidden < 1 || self.rounds < 1 {
            return Err(Error::Validation("predictor sizes must be at least 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Validation(format!("lr {} must be non-negative", self.lr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct InputScaling {
    b: Range,
    c: Range,
    weight: Range,
    /// Labels are divided by this before regression.
    label_scale: f64,
}

/// Bipartite GNN, global mean pooling over all nodes, then an MLP.
#[derive(Debug, Clone)]
pub struct ObjectivePredictor {
    pub config: PredictorConfig,
    pub store: ParamStore,
    scaling: InputScaling,
    gnn: BipartiteGnn,
    head: Mlp,
}

fn range_of(values: impl Iterator<Item = f64>) -> Range {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.is_finite() {
        Range { min: lo, max: hi }
    } else {
        Range { min: 0.0, max: 0.0 }
    }
}

impl ObjectivePredictor {
    fn build(config: PredictorConfig, scaling: InputScaling) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let gnn_cfg = GnnConfig {
            hidden: config.hidden,
            rounds: config.rounds,
        };
        let gnn = BipartiteGnn::new(&mut store, "pred", 2, 2, gnn_cfg, &mut rng);
        let h = config.hidden;
        let head = Mlp::new(&mut store, "pred.head", &[h, h, 1], false, &mut rng);
        ObjectivePredictor {
            config,
            store,
            scaling,
            gnn,
            head,
        }
    }

    fn input(&self, inst: &MilpInstance) -> Result<GraphInput> {
        let s = &self.scaling;
        let cons = Tensor::from_rows(&inst.b.iter().map(|&b| vec![0.0, s.b.apply(b)]).collect::<Vec<_>>(), 2);
        let vars = Tensor::from_rows(&inst.c.iter().map(|&c| vec![1.0, s.c.apply(c)]).collect::<Vec<_>>(), 2);
        let edges: Vec<_> = inst.a.triplets().into_iter().map(|(i, j, w)| (i, j, s.weight.apply(w))).collect();
        GraphInput::new(cons, vars, &edges)
    }

    fn forward(&self, tape: &mut Tape, g: &GraphInput) -> Result<Var> {
        let emb = self.gnn.forward(tape, &self.store, g)?;
        let all = tape.concat_rows(&[emb.h_cons, emb.h_vars]);
        let pooled = tape.mean_rows(all);
        Ok(self.head.forward(tape, &self.store, pooled))
    }

    pub fn predict(&self, inst: &MilpInstance) -> Result<f64> {
        let g = self.input(inst)?;
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, &g)?;
        Ok(tape.value(out).item() * self.scaling.label_scale)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let meta = serde_json::json!({
            "kind": "predictor",
            "config": self.config,
            "scaling": self.scaling,
        });
        encode_checkpoint(&meta, &self.store)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (meta, store) = decode_checkpoint(bytes)?;
        let bad = |msg: String| Error::Format { offset: 0, msg };
        if meta.get("kind").and_then(|k| k.as_str()) != Some("predictor") {
            return Err(bad("checkpoint is not an objective predictor".into()));
        }
        let config: PredictorConfig =
            serde_json::from_value(meta["config"].clone()).map_err(|e| bad(format!("config: {e}")))?;
        let scaling: InputScaling =
            serde_json::from_value(meta["scaling"].clone()).map_err(|e| bad(format!("scaling: {e}")))?;
        let mut p = ObjectivePredictor::build(config, scaling);
        p.store.load_from(&store)?;
        Ok(p)
    }
}

/// Fits the predictor to `(instance, optimal value)` pairs by mean squared
/// error on scaled labels. Returns the model and the per-epoch mean loss.
pub fn train_objective_predictor(
    corpus: &[(MilpInstance, f64)],
    cfg: &PredictorConfig,
) -> Result<(ObjectivePredictor, Vec<f64>)> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if corpus.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::Validation("objective label missing or non-finite".into()));
    }
    let label_scale = corpus.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let scaling = InputScaling {
        b: range_of(corpus.iter().flat_map(|(i, _)| i.b.iter().copied())),
        c: range_of(corpus.iter().flat_map(|(i, _)| i.c.iter().copied())),
        weight: range_of(corpus.iter().flat_map(|(i, _)| i.a.values().iter().copied())),
        label_scale: if label_scale > 0.0 { label_scale } else { 1.0 },
    };
    let mut model = ObjectivePredictor::build(*cfg, scaling);
    let inputs: Vec<GraphInput> = corpus.iter().map(|(i, _)| model.input(i)).collect::<Result<_>>()?;
    let targets: Vec<f64> = corpus.iter().map(|(_, v)| v / scaling.label_scale).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut adam = Adam::new(
        &model.store,
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
    );
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut acc: Option<Vec<Tensor>> = None;
            for &k in batch {
                let mut tape = Tape::new();
                let out = model.forward(&mut tape, &inputs[k])?;
                let target = tape.constant(Tensor::scalar(targets[k]));
                let diff = tape.sub(out, target);
                let sq = tape.mul(diff, diff);
                total += tape.value(sq).item();
                let dense = tape.backward(sq).dense(&model.store);
                match &mut acc {
                    None => acc = Some(dense),
                    Some(a) => a.iter_mut().zip(&dense).for_each(|(a, g)| a.add_assign(g)),
                }
            }
            let inv = 1.0 / batch.len() as f64;
            let mean: Vec<Tensor> = acc.expect("non-empty batch").iter().map(|g| g.scaled(inv)).collect();
            adam.step(&mut model.store, &mean);
        }
        losses.push(total / corpus.len() as f64);
    }
    Ok((model, losses))
}

pub fn predict_objective(model: &ObjectivePredictor, inst: &MilpInstance) -> Result<f64> {
    model.predict(inst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelMse {
    pub value: f64,
    /// Rows skipped because the true value is 0.
    pub excluded: usize,
}

/// `mean((pred − truth)² / truth²)` over rows with a nonzero truth.
pub fn rel_mse(preds: &[f64], truths: &[f64]) -> Result<RelMse> {
    if preds.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            what: "predictions",
            expected: truths.len(),
            found: preds.len(),
        });
    }
    let mut sum = 0.0;
    let mut used = 0;
    for (&p, &t) in preds.iter().zip(truths) {
        if t == 0.0 {
            continue;
        }
        sum += (p - t) * (p - t) / (t * t);
        used += 1;
    }
    let excluded = truths.len() - used;
    if excluded > 0 {
        eprintln!("warning: rel_mse skipped {excluded} row(s) with a zero true value");
    }
    if used == 0 {
        return Err(Error::Validation("no rows with a nonzero true value".into()));
    }
    Ok(RelMse {
        value: sum / used as f64,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rel_mse_basics() {
        assert_eq!(rel_mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap().value, 0.0);
        let r = rel_mse(&[2.0, 5.0], &[1.0, 0.0]).unwrap();
        assert_eq!((r.value, r.excluded), (1.0, 1));
    }
}
