//! Small reverse-mode autodiff over dense matrices, MLPs, the bipartite
//! GNN backbone, Adam and checkpoint I/O.

mod adam;
mod checkpoint;
mod gnn;
mod gradcheck;
mod params;
mod tape;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, MAGIC, VERSION};
pub use gnn::{BipartiteGnn, GnnConfig, GraphInput, NodeEmbeddings};
pub use gradcheck::{check_gradients, GradCheckReport};
pub use params::{Linear, Mlp, ParamId, ParamStore};
pub use tape::{huber_value, Gradients, Tape, Var};
pub use tensor::Tensor;

use rand::Rng;
use rand_distr::StandardNormal;

/// `rows × cols` tensor of independent standard normal draws.
pub fn standard_normal<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Tensor {
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect())
}

#[cfg(test)]
mod tests {
    use std::rc::Rc;

    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
        Tensor::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    #[test]
    fn huber_branches() {
        let mut t = Tape::new();
        let p = t.constant(Tensor::scalar(0.5));
        let h = t.huber(p, Tensor::scalar(0.0), 1.0);
        assert_eq!(t.value(h).item(), 0.125);
        let p = t.constant(Tensor::scalar(2.0));
        let h = t.huber(p, Tensor::scalar(0.0), 1.0);
        assert_eq!(t.value(h).item(), 1.5);
    }

    #[test]
    fn kl_closed_forms() {
        let mut t = Tape::new();
        let mu = t.constant(Tensor::zeros(3, 2));
        let lv = t.constant(Tensor::zeros(3, 2));
        let k = t.kl_std_normal(mu, lv);
        assert_eq!(t.value(k).item(), 0.0);
        let mu = t.constant(Tensor::scalar(1.0));
        let lv = t.constant(Tensor::scalar(0.0));
        let k = t.kl_std_normal(mu, lv);
        assert_eq!(t.value(k).item(), 0.5);
    }

    #[test]
    fn reparameterize_cases() {
        let mut t = Tape::new();
        let mu = t.constant(Tensor::scalar(0.3));
        let lv = t.constant(Tensor::scalar(-0.7));
        let z = t.reparameterize(mu, lv, Tensor::scalar(0.0));
        assert_eq!(t.value(z).item(), 0.3);
        let mu = t.constant(Tensor::scalar(0.0));
        let lv = t.constant(Tensor::scalar(0.0));
        let z = t.reparameterize(mu, lv, Tensor::scalar(1.0));
        assert_eq!(t.value(z).item(), 1.0);
    }

    #[test]
    fn reparameterize_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let (mu, lv) = (0.4, 0.6_f64);
        let sd = (lv / 2.0).exp();
        let mut t = Tape::new();
        let muv = t.constant(Tensor::from_vec(n, 1, vec![mu; n]));
        let lvv = t.constant(Tensor::from_vec(n, 1, vec![lv; n]));
        let z = t.reparameterize(muv, lvv, standard_normal(&mut rng, n, 1));
        let zs = &t.value(z).data;
        let mean = zs.iter().sum::<f64>() / n as f64;
        let var = zs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - mu).abs() < 3.0 * sd / (n as f64).sqrt());
        // Standard error of the sample standard deviation is about sd/√(2n).
        assert!((var.sqrt() - sd).abs() < 3.0 * sd / (2.0 * n as f64).sqrt());
    }

    #[test]
    fn every_op_matches_finite_differences() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut store = ParamStore::new();
            let a = store.add("a", random(&mut rng, 3, 4));
            let b = store.add("b", random(&mut rng, 4, 2));
            let bias = store.add("bias", random(&mut rng, 1, 2));
            let c = store.add("c", random(&mut rng, 3, 2));
            let lv = store.add("lv", random(&mut rng, 3, 2));
            let target = random(&mut rng, 4, 2);
            let noise = random(&mut rng, 3, 2);
            let idx: Rc<[usize]> = Rc::from(vec![2usize, 0, 2, 1]);
            let rep = check_gradients(&store, 1e-5, 1e-6, |t, s| {
                let (a, b, bias, c, lv) = (t.param(s, a), t.param(s, b), t.param(s, bias), t.param(s, c), t.param(s, lv));
                let ab = t.matmul(a, b);
                let ab = t.add_bias(ab, bias);
                let e = t.exp(c);
                let m = t.mul(ab, e);
                let d = t.sub(m, c);
                let d = t.scale(d, 1.7);
                let r = t.relu(d);
                let r = t.add(r, d);
                let cat = t.concat_cols(&[r, c]);
                let rows = t.concat_rows(&[cat, cat]);
                let g = t.gather_rows(rows, idx.clone());
                let sc = t.scatter_add_rows(g, idx.clone(), 3);
                let z = t.reparameterize(c, lv, noise.clone());
                let pooled = t.mean_rows(sc);
                let s1 = t.sum(pooled);
                let sl = t.gather_rows(sc, Rc::from(vec![0usize, 1, 2, 0]));
                let sl = t.concat_cols(&[sl]);
                let half = t_ones(t, 4, 2);
                let first = t.matmul(sl, half);
                let h = t.huber(first, target.clone(), 0.5);
                let k = t.kl_std_normal(z, lv);
                let out = t.add(h, k);
                t.add(out, s1)
            });
            assert!(rep.max_rel_err <= 1e-4, "seed {seed}: {rep:?}");
        }
    }

    fn t_ones(t: &mut Tape, r: usize, c: usize) -> Var {
        t.constant(Tensor::from_vec(r, c, vec![0.5; r * c]))
    }
}
