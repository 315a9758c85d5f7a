use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var};

/// Outcome of a finite-difference gradient check.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// `name[index]` of the worst coordinate.
    pub worst: String,
    pub checked: usize,
}

/// Compares the tape gradient of `f` with central differences on every
/// scalar of every parameter in `store`.
///
/// The relative error of a coordinate is `|a − n| / max(|a|, |n|, floor)`.
pub fn check_gradients<F>(store: &ParamStore, eps: f64, floor: f64, mut f: F) -> GradCheckReport
where
    F: FnMut(&mut Tape, &ParamStore) -> Var,
{
    let mut tape = Tape::new();
    let out = f(&mut tape, store);
    let analytic = tape.backward(out).dense(store);

    let mut probe = store.clone();
    let mut eval = |p: &ParamStore| {
        let mut t = Tape::new();
        let v = f(&mut t, p);
        t.value(v).item()
    };
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: String::new(),
        checked: 0,
    };
    for k in 0..store.len() {
        let id = ParamId(k);
        for i in 0..store.tensor(id).len() {
            let orig = store.tensor(id).data[i];
            probe.tensor_mut(id).data[i] = orig + eps;
            let up = eval(&probe);
            probe.tensor_mut(id).data[i] = orig - eps;
            let down = eval(&probe);
            probe.tensor_mut(id).data[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let a = analytic[k].data[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            report.checked += 1;
            if rel > report.max_rel_err || report.worst.is_empty() {
                report.max_rel_err = report.max_rel_err.max(rel);
                report.worst = format!("{}[{i}]", store.names()[k]);
            }
        }
    }
    report
}
