use std::rc::Rc;

use super::params::{ParamId, ParamStore};
use super::tensor::Tensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Exp(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    GatherRows(Var, Rc<[usize]>),
    ScatterAddRows(Var, Rc<[usize]>),
    MeanRows(Var),
    Sum(Var),
    Huber { pred: Var, target: Rc<Tensor>, delta: f64 },
    Kl { mu: Var, logvar: Var },
}

/// Reverse-mode autodiff recorder.
///
/// Values are computed eagerly as ops are recorded; [`Tape::backward`]
/// walks the records in reverse.
#[derive(Debug, Default)]
pub struct Tape {
    values: Vec<Tensor>,
    ops: Vec<Op>,
}

/// Gradients of a scalar with respect to every parameter used on the tape.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub by_param: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Dense gradients aligned with the store, zeros for unused parameters.
    pub fn dense(&self, store: &ParamStore) -> Vec<Tensor> {
        (0..store.len())
            .map(|k| match self.by_param.get(k).and_then(|g| g.clone()) {
                Some(g) => g,
                None => {
                    let (r, c) = store.tensor(ParamId(k)).shape();
                    Tensor::zeros(r, c)
                }
            })
            .collect()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.values.push(value);
        self.ops.push(op);
        Var(self.values.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.values[v.0]
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Constant)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.tensor(id).clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    /// Adds a `1 × c` row to every row of `a`.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(bias));
        assert_eq!((1, av.cols), bv.shape(), "bias shape");
        let mut out = av.clone();
        for row in out.data.chunks_mut(av.cols.max(1)) {
            for (o, b) in row.iter_mut().zip(&bv.data) {
                *o += b;
            }
        }
        self.push(out, Op::AddBias(a, bias))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        self.push(out, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.shape(), bv.shape(), "sub shape");
        let data = av.data.iter().zip(&bv.data).map(|(x, y)| x - y).collect();
        self.push(Tensor::from_vec(av.rows, av.cols, data), Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.shape(), bv.shape(), "mul shape");
        let data = av.data.iter().zip(&bv.data).map(|(x, y)| x * y).collect();
        self.push(Tensor::from_vec(av.rows, av.cols, data), Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let v = self.value(a).scaled(k);
        self.push(v, Op::Scale(a, k))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::exp);
        self.push(v, Op::Exp(a))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows;
        let cols: usize = parts.iter().map(|p| self.value(*p).cols).sum();
        let mut out = Tensor::zeros(rows, cols);
        for i in 0..rows {
            let mut off = 0;
            for p in parts {
                let pv = self.value(*p);
                assert_eq!(pv.rows, rows, "concat_cols row count");
                out.data[i * cols + off..i * cols + off + pv.cols].copy_from_slice(pv.row(i));
                off += pv.cols;
            }
        }
        self.push(out, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let cols = self.value(parts[0]).cols;
        let mut data = Vec::new();
        for p in parts {
            let pv = self.value(*p);
            assert_eq!(pv.cols, cols, "concat_rows column count");
            data.extend_from_slice(&pv.data);
        }
        let rows = data.len() / cols.max(1);
        self.push(Tensor::from_vec(rows, cols, data), Op::ConcatRows(parts.to_vec()))
    }

    /// `out[k] = a[idx[k]]`.
    pub fn gather_rows(&mut self, a: Var, idx: Rc<[usize]>) -> Var {
        let av = self.value(a);
        let mut out = Tensor::zeros(idx.len(), av.cols);
        for (k, &i) in idx.iter().enumerate() {
            out.data[k * av.cols..(k + 1) * av.cols].copy_from_slice(av.row(i));
        }
        self.push(out, Op::GatherRows(a, idx))
    }

    /// `out[idx[k]] += a[k]` into `n_out` rows.
    pub fn scatter_add_rows(&mut self, a: Var, idx: Rc<[usize]>, n_out: usize) -> Var {
        let av = self.value(a);
        assert_eq!(av.rows, idx.len(), "scatter index length");
        let mut out = Tensor::zeros(n_out, av.cols);
        for (k, &i) in idx.iter().enumerate() {
            let dst = &mut out.data[i * av.cols..(i + 1) * av.cols];
            for (o, v) in dst.iter_mut().zip(av.row(k)) {
                *o += v;
            }
        }
        self.push(out, Op::ScatterAddRows(a, idx))
    }

    /// Column means as a `1 × c` row.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let mut out = Tensor::zeros(1, av.cols);
        for i in 0..av.rows {
            for (o, v) in out.data.iter_mut().zip(av.row(i)) {
                *o += v;
            }
        }
        let n = av.rows.max(1) as f64;
        let out = out.scaled(1.0 / n);
        self.push(out, Op::MeanRows(a))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data.iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    /// Mean Huber loss of `pred` against a constant target.
    pub fn huber(&mut self, pred: Var, target: Tensor, delta: f64) -> Var {
        let pv = self.value(pred);
        assert_eq!(pv.shape(), target.shape(), "huber shape");
        let n = pv.len().max(1) as f64;
        let total: f64 = pv
            .data
            .iter()
            .zip(&target.data)
            .map(|(p, t)| huber_value(p - t, delta))
            .sum();
        self.push(
            Tensor::scalar(total / n),
            Op::Huber {
                pred,
                target: Rc::new(target),
                delta,
            },
        )
    }

    /// `½ Σ (exp(logvar) + mu² − 1 − logvar)` summed per row, averaged over rows.
    pub fn kl_std_normal(&mut self, mu: Var, logvar: Var) -> Var {
        let (m, l) = (self.value(mu), self.value(logvar));
        assert_eq!(m.shape(), l.shape(), "kl shape");
        let rows = m.rows.max(1) as f64;
        let total: f64 = m
            .data
            .iter()
            .zip(&l.data)
            .map(|(mu, lv)| 0.5 * (lv.exp() + mu * mu - 1.0 - lv))
            .sum();
        self.push(Tensor::scalar(total / rows), Op::Kl { mu, logvar })
    }

    /// `mu + exp(logvar / 2) · noise`.
    pub fn reparameterize(&mut self, mu: Var, logvar: Var, noise: Tensor) -> Var {
        let half = self.scale(logvar, 0.5);
        let std = self.exp(half);
        let eps = self.constant(noise);
        let scaled = self.mul(std, eps);
        self.add(mu, scaled)
    }

    /// Gradients of the scalar `out` with respect to all recorded parameters.
    pub fn backward(&self, out: Var) -> Gradients {
        assert_eq!(self.value(out).len(), 1, "backward from a non-scalar");
        let mut grads: Vec<Option<Tensor>> = vec![None; self.values.len()];
        grads[out.0] = Some(Tensor::scalar(1.0));
        let mut by_param: Vec<Option<Tensor>> = Vec::new();

        for k in (0..=out.0).rev() {
            let Some(g) = grads[k].take() else { continue };
            match &self.ops[k] {
                Op::Constant => {}
                Op::Param(id) => {
                    if by_param.len() <= id.0 {
                        by_param.resize(id.0 + 1, None);
                    }
                    accumulate(&mut by_param[id.0], g);
                }
                Op::MatMul(a, b) => {
                    let ga = g.matmul_t(self.value(*b));
                    let gb = self.value(*a).t_matmul(&g);
                    accumulate(&mut grads[a.0], ga);
                    accumulate(&mut grads[b.0], gb);
                }
                Op::AddBias(a, bias) => {
                    let mut gb = Tensor::zeros(1, g.cols);
                    for i in 0..g.rows {
                        for (o, v) in gb.data.iter_mut().zip(g.row(i)) {
                            *o += v;
                        }
                    }
                    accumulate(&mut grads[bias.0], gb);
                    accumulate(&mut grads[a.0], g);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads[b.0], g.clone());
                    accumulate(&mut grads[a.0], g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads[b.0], g.scaled(-1.0));
                    accumulate(&mut grads[a.0], g);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let ga = zip_map(&g, bv, |g, b| g * b);
                    let gb = zip_map(&g, av, |g, a| g * a);
                    accumulate(&mut grads[a.0], ga);
                    accumulate(&mut grads[b.0], gb);
                }
                Op::Scale(a, s) => accumulate(&mut grads[a.0], g.scaled(*s)),
                Op::Relu(a) => {
                    let ga = zip_map(&g, self.value(*a), |g, x| if x > 0.0 { g } else { 0.0 });
                    accumulate(&mut grads[a.0], ga);
                }
                Op::Exp(a) => {
                    let ga = zip_map(&g, &self.values[k], |g, e| g * e);
                    accumulate(&mut grads[a.0], ga);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let cols = self.value(*p).cols;
                        let mut gp = Tensor::zeros(g.rows, cols);
                        for i in 0..g.rows {
                            gp.data[i * cols..(i + 1) * cols]
                                .copy_from_slice(&g.row(i)[off..off + cols]);
                        }
                        off += cols;
                        accumulate(&mut grads[p.0], gp);
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let (rows, cols) = self.value(*p).shape();
                        let gp = Tensor::from_vec(rows, cols, g.data[off..off + rows * cols].to_vec());
                        off += rows * cols;
                        accumulate(&mut grads[p.0], gp);
                    }
                }
                Op::GatherRows(a, idx) => {
                    let (rows, cols) = self.value(*a).shape();
                    let mut ga = Tensor::zeros(rows, cols);
                    for (r, &i) in idx.iter().enumerate() {
                        for (o, v) in ga.data[i * cols..(i + 1) * cols].iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                    accumulate(&mut grads[a.0], ga);
                }
                Op::ScatterAddRows(a, idx) => {
                    let cols = g.cols;
                    let mut ga = Tensor::zeros(idx.len(), cols);
                    for (r, &i) in idx.iter().enumerate() {
                        ga.data[r * cols..(r + 1) * cols].copy_from_slice(g.row(i));
                    }
                    accumulate(&mut grads[a.0], ga);
                }
                Op::MeanRows(a) => {
                    let (rows, cols) = self.value(*a).shape();
                    let inv = 1.0 / rows.max(1) as f64;
                    let mut ga = Tensor::zeros(rows, cols);
                    for i in 0..rows {
                        for (o, v) in ga.data[i * cols..(i + 1) * cols].iter_mut().zip(&g.data) {
                            *o = v * inv;
                        }
                    }
                    accumulate(&mut grads[a.0], ga);
                }
                Op::Sum(a) => {
                    let (rows, cols) = self.value(*a).shape();
                    let ga = Tensor::from_vec(rows, cols, vec![g.item(); rows * cols]);
                    accumulate(&mut grads[a.0], ga);
                }
                Op::Huber {
                    pred,
                    target,
                    delta,
                } => {
                    let pv = self.value(*pred);
                    let scale = g.item() / pv.len().max(1) as f64;
                    let ga = zip_map(pv, target, |p, t| scale * (p - t).clamp(-*delta, *delta));
                    accumulate(&mut grads[pred.0], ga);
                }
                Op::Kl { mu, logvar } => {
                    let (m, l) = (self.value(*mu), self.value(*logvar));
                    let scale = g.item() / m.rows.max(1) as f64;
                    accumulate(&mut grads[mu.0], m.scaled(scale));
                    accumulate(&mut grads[logvar.0], l.map(|lv| scale * 0.5 * (lv.exp() - 1.0)));
                }
            }
        }
        Gradients { by_param }
    }
}

pub fn huber_value(residual: f64, delta: f64) -> f64 {
    let a = residual.abs();
    if a <= delta {
        0.5 * residual * residual
    } else {
        delta * (a - 0.5 * delta)
    }
}

fn accumulate(slot: &mut Option<Tensor>, g: Tensor) {
    match slot {
        Some(acc) => acc.add_assign(&g),
        None => *slot = Some(g),
    }
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    assert_eq!(a.shape(), b.shape(), "elementwise shape");
    Tensor::from_vec(
        a.rows,
        a.cols,
        a.data.iter().zip(&b.data).map(|(x, y)| f(*x, *y)).collect(),
    )
}
