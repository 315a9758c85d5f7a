use std::path::Path;

use milpgen::analytics::{histogram, js_distance};
use milpgen::instance::{
    derive_bc, derive_slacks, instance_from_json, instance_to_json, to_dual_lp, weak_duality_gap, FTuple, MilpInstance,
    Mode, SparseMatrix, Status,
};
use milpgen::solver::{classify, extract_labels, solve_lp, solve_milp, LabelOptions, SolverParams};
use proptest::prelude::*;

fn tuple_strategy(mode: Mode) -> impl Strategy<Value = FTuple> {
    (1usize..6, 1usize..7).prop_flat_map(move |(m, n)| {
        let cap = if mode == Mode::Binary { 1 } else { 5 };
        (
            proptest::collection::vec(proptest::option::weighted(0.6, -4i32..6), m * n),
            proptest::collection::vec(0..=cap, n),
            proptest::collection::vec(0.0..3.0f64, m),
            proptest::collection::vec(0.0..2.0f64, n),
            proptest::collection::vec(0.0..2.0f64, n),
            proptest::collection::vec(0.0..4.0f64, m),
        )
            .prop_map(move |(entries, x, y, y2, s, r)| {
                let trip: Vec<(usize, usize, f64)> = entries
                    .iter()
                    .enumerate()
                    .filter_map(|(k, e)| e.filter(|&v| v != 0).map(|v| (k / n, k % n, v as f64)))
                    .collect();
                FTuple {
                    mode,
                    a: SparseMatrix::from_triplets(m, n, &trip).unwrap(),
                    x: x.into_iter().map(f64::from).collect(),
                    y,
                    y2: (mode == Mode::Binary).then_some(y2),
                    s,
                    r,
                }
            })
    })
}

fn any_tuple() -> impl Strategy<Value = FTuple> {
    prop_oneof![tuple_strategy(Mode::Binary), tuple_strategy(Mode::GeneralInteger)]
}

fn binary_instance() -> impl Strategy<Value = MilpInstance> {
    (1usize..5, 1usize..9).prop_flat_map(|(m, n)| {
        (
            proptest::collection::vec(-3i32..5, m * n),
            proptest::collection::vec(-2i32..7, m),
            proptest::collection::vec(-4i32..8, n),
        )
            .prop_map(move |(a, b, c)| {
                let trip: Vec<(usize, usize, f64)> = a
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(k, &v)| (k / n, k % n, v as f64))
                    .collect();
                MilpInstance::new(
                    "prop",
                    Mode::Binary,
                    SparseMatrix::from_triplets(m, n, &trip).unwrap(),
                    b.into_iter().map(f64::from).collect(),
                    c.into_iter().map(f64::from).collect(),
                )
                .unwrap()
            })
    })
}

fn enumerate(inst: &MilpInstance) -> Option<f64> {
    let n = inst.n_vars();
    (0u32..1 << n)
        .filter_map(|mask| {
            let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
            inst.is_feasible(&x, 0.0).then(|| inst.objective(&x))
        })
        .reduce(f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tuple_instances_are_feasible_bounded(t in any_tuple()) {
        let inst = t.to_instance("t").unwrap();
        prop_assert!(inst.is_feasible(&t.x, 1e-9));
        prop_assert_eq!(classify(&inst).unwrap(), Status::Optimal);
    }

    #[test]
    fn duality_gap_is_slack_product(t in any_tuple()) {
        let inst = t.to_instance("t").unwrap();
        let gap = weak_duality_gap(&inst, &t.x, &t.dual_vector()).unwrap();
        let expect: f64 = t.s.iter().zip(&t.x).map(|(s, x)| s * x).sum::<f64>()
            + t.r.iter().zip(&t.y).map(|(r, y)| r * y).sum::<f64>()
            + t.y2.as_ref().map_or(0.0, |y2| y2.iter().zip(&t.x).map(|(v, x)| v * (1.0 - x)).sum());
        prop_assert!((gap - expect).abs() <= 1e-9 * (1.0 + expect.abs()), "{} vs {}", gap, expect);
        prop_assert!(gap >= -1e-9);
    }

    #[test]
    fn slacks_invert_derive_bc(t in any_tuple()) {
        let inst = t.to_instance("t").unwrap();
        let (s, r) = derive_slacks(&inst, &t.x, &t.dual_vector()[..]).unwrap();
        let back = FTuple { s, r, ..t.clone() };
        let (b, c) = derive_bc(&back).unwrap();
        for (u, v) in inst.b.iter().zip(&b).chain(inst.c.iter().zip(&c)) {
            prop_assert!((u - v).abs() <= 1e-9);
        }
    }

    #[test]
    fn labels_reproduce_instance(t in any_tuple()) {
        let inst = t.to_instance("t").unwrap();
        let labels = extract_labels(&inst, &LabelOptions::default()).unwrap();
        let (b, c) = derive_bc(&labels).unwrap();
        for (u, v) in inst.b.iter().zip(&b).chain(inst.c.iter().zip(&c)) {
            prop_assert!((u - v).abs() <= 1e-9);
        }
        // the MILP optimum is at least as good as the tuple's own x
        prop_assert!(inst.objective(&labels.x) >= inst.objective(&t.x) - 1e-9);
    }

    #[test]
    fn branch_and_bound_matches_enumeration(inst in binary_instance()) {
        let out = solve_milp(&inst, &SolverParams::default()).unwrap().outcome.unwrap();
        match enumerate(&inst) {
            Some(v) => {
                prop_assert_eq!(out.status, Status::Optimal);
                prop_assert_eq!(out.value, Some(v));
            }
            None => prop_assert_eq!(out.status, Status::Infeasible),
        }
    }

    #[test]
    fn lp_strong_duality(t in any_tuple()) {
        let inst = t.to_instance("t").unwrap();
        let p = solve_lp(&inst.lp_relaxation(), 10_000).unwrap();
        let d = solve_lp(&to_dual_lp(&inst).unwrap(), 10_000).unwrap();
        prop_assert_eq!(p.status, Status::Optimal);
        prop_assert_eq!(d.status, Status::Optimal);
        let (pv, dv) = (p.value.unwrap(), d.value.unwrap());
        prop_assert!((pv - dv).abs() <= 1e-7 * (1.0 + pv.abs()), "{} vs {}", pv, dv);
    }

    #[test]
    fn json_round_trip(t in any_tuple()) {
        let inst = t.to_instance("t").unwrap();
        let text = instance_to_json(&inst, Some(&t));
        let (back, labels) = instance_from_json(&text, Path::new("mem")).unwrap();
        prop_assert_eq!(back, inst);
        prop_assert_eq!(labels, Some(t));
    }

    #[test]
    fn histogram_counts_everything(v in proptest::collection::vec(-5.0..5.0f64, 1..60), bins in 1usize..15) {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let h = histogram(&v, lo, hi, bins);
        prop_assert_eq!(h.len(), bins);
        prop_assert_eq!(h.iter().sum::<f64>(), v.len() as f64);
    }

    #[test]
    fn js_distance_is_a_bounded_symmetric_metric(
        p in proptest::collection::vec(0.0..10.0f64, 6),
        q in proptest::collection::vec(0.0..10.0f64, 6),
    ) {
        prop_assume!(p.iter().sum::<f64>() > 0.0 && q.iter().sum::<f64>() > 0.0);
        let d = js_distance(&p, &q).unwrap();
        prop_assert!((d - js_distance(&q, &p).unwrap()).abs() <= 1e-15);
        prop_assert!((0.0..=std::f64::consts::LN_2.sqrt() + 1e-12).contains(&d));
        prop_assert!(js_distance(&p, &p).unwrap().abs() <= 1e-12);
    }
}
