use serde::{Deserialize, Serialize};

use crate::instance::MilpInstance;

/// Metric names in [`StatProfile::values`] order.
pub const METRICS: [&str; 9] = [
    "density_mean",
    "cons_degree_mean",
    "cons_degree_std",
    "var_degree_mean",
    "var_degree_std",
    "b_mean",
    "b_std",
    "c_mean",
    "c_std",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatProfile {
    pub density_mean: f64,
    pub cons_degree_mean: f64,
    pub cons_degree_std: f64,
    pub var_degree_mean: f64,
    pub var_degree_std: f64,
    pub b_mean: f64,
    pub b_std: f64,
    pub c_mean: f64,
    pub c_std: f64,
}

impl StatProfile {
    pub fn values(&self) -> [f64; 9] {
        [
            self.density_mean,
            self.cons_degree_mean,
            self.cons_degree_std,
            self.var_degree_mean,
            self.var_degree_std,
            self.b_mean,
            self.b_std,
            self.c_mean,
            self.c_std,
        ]
    }

    pub fn from_values(v: [f64; 9]) -> Self {
        StatProfile {
            density_mean: v[0],
            cons_degree_mean: v[1],
            cons_degree_std: v[2],
            var_degree_mean: v[3],
            var_degree_std: v[4],
            b_mean: v[5],
            b_std: v[6],
            c_mean: v[7],
            c_std: v[8],
        }
    }
}

/// Population mean and standard deviation.
fn moments(v: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.clone().sum::<f64>() / n;
    let var = v.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Statistics of one instance, on the canonical (max, ≤) data.
pub fn instance_stats(inst: &MilpInstance) -> StatProfile {
    let (m, n) = (inst.n_cons(), inst.n_vars());
    let rd = inst.a.row_degrees();
    let cd = inst.a.col_degrees();
    let (cons_degree_mean, cons_degree_std) = moments(rd.iter().map(|&d| d as f64));
    let (var_degree_mean, var_degree_std) = moments(cd.iter().map(|&d| d as f64));
    let (b_mean, b_std) = moments(inst.b.iter().copied());
    let (c_mean, c_std) = moments(inst.c.iter().copied());
    StatProfile {
        density_mean: inst.a.nnz() as f64 / (m * n) as f64,
        cons_degree_mean,
        cons_degree_std,
        var_degree_mean,
        var_degree_std,
        b_mean,
        b_std,
        c_mean,
        c_std,
    }
}

/// Metric-wise mean over a corpus.
pub fn mean_profile(profiles: &[StatProfile]) -> Option<StatProfile> {
    if profiles.is_empty() {
        return None;
    }
    let mut acc = [0.0; 9];
    for p in profiles {
        for (a, v) in acc.iter_mut().zip(p.values()) {
            *a += v;
        }
    }
    Some(StatProfile::from_values(acc.map(|a| a / profiles.len() as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Mode, SparseMatrix};

    #[test]
    fn hand_counted_profile() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let inst = MilpInstance::new("t", Mode::GeneralInteger, a, vec![0.0, 0.0], vec![1.0, 3.0]).unwrap();
        let p = instance_stats(&inst);
        assert_eq!(p.density_mean, 0.75);
        assert_eq!(p.cons_degree_mean, 1.5);
        assert_eq!(p.cons_degree_std, 0.5);
        assert_eq!(p.var_degree_mean, 1.5);
        assert_eq!((p.b_mean, p.b_std), (0.0, 0.0));
        assert_eq!((p.c_mean, p.c_std), (2.0, 1.0));
    }
}
