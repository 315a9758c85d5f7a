use std::ffi::{CStr, CString};
use std::ptr;

use milpgen_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(milpgen_last_error_message()) }.to_string_lossy().into_owned()
}

fn set_cover(seed: u64) -> *mut MilpgenInstance {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { milpgen_gen_set_cover(8, 12, 0.3, seed, &mut h) }, MilpgenError::Ok);
    assert!(!h.is_null());
    h
}

#[test]
fn generate_solve_and_free() {
    let h = set_cover(3);
    let (mut m, mut n, mut nnz) = (0, 0, 0);
    unsafe {
        assert_eq!(milpgen_instance_dims(h, &mut m, &mut n, &mut nnz), MilpgenError::Ok);
        assert_eq!((m, n), (8, 12));
        assert!(nnz > 0);

        let mut status = MilpgenStatus::Infeasible;
        assert_eq!(milpgen_classify(h, &mut status), MilpgenError::Ok);
        assert_eq!(status, MilpgenStatus::Optimal);

        let mut res = std::mem::zeroed::<MilpgenSolveResult>();
        assert_eq!(milpgen_solve(h, &mut res), MilpgenError::Ok);
        assert!(res.proven && !res.limit_hit);
        assert_eq!(res.status, MilpgenStatus::Optimal);
        // set cover minimizes a positive cost: at least one column is chosen
        assert!(res.value > 0.0);

        let mut b = vec![0.0; m];
        assert_eq!(milpgen_instance_rhs(h, b.as_mut_ptr(), m), MilpgenError::Ok);
        assert!(b.iter().all(|&v| v == -1.0));
        assert_eq!(milpgen_instance_rhs(h, b.as_mut_ptr(), m - 1), MilpgenError::Validation);

        milpgen_instance_free(h);
    }
}

#[test]
fn json_round_trip_keeps_labels() {
    let h = set_cover(5);
    unsafe {
        assert_eq!(milpgen_instance_label(h), MilpgenError::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(milpgen_instance_to_json(h, &mut s), MilpgenError::Ok);
        let json = CStr::from_ptr(s).to_str().unwrap().to_owned();
        assert!(json.contains("\"labels\""));

        let mut back = ptr::null_mut();
        assert_eq!(milpgen_instance_from_json(s, &mut back), MilpgenError::Ok);
        milpgen_string_free(s);

        let mut s2 = ptr::null_mut();
        assert_eq!(milpgen_instance_to_json(back, &mut s2), MilpgenError::Ok);
        assert_eq!(CStr::from_ptr(s2).to_str().unwrap(), json);
        milpgen_string_free(s2);
        milpgen_instance_free(back);
        milpgen_instance_free(h);
    }
}

#[test]
fn tuple_construction_gives_bounded_instance() {
    // A = [[1, 2], [0, 1]], x = (1, 0), slack r = (0, 1)
    let rows = [0usize, 0, 1];
    let cols = [0usize, 1, 1];
    let vals = [1.0, 2.0, 1.0];
    let x = [1.0, 0.0];
    let y = [0.5, 0.0];
    let y2 = [0.0, 0.0];
    let s = [0.0, 1.0];
    let r = [0.0, 1.0];
    let mut h = ptr::null_mut();
    unsafe {
        let rc = milpgen_instance_from_tuple(
            true, 2, 2, 3, rows.as_ptr(), cols.as_ptr(), vals.as_ptr(), x.as_ptr(), y.as_ptr(),
            y2.as_ptr(), s.as_ptr(), r.as_ptr(), &mut h,
        );
        assert_eq!(rc, MilpgenError::Ok, "{}", last_error());
        let mut b = [0.0; 2];
        milpgen_instance_rhs(h, b.as_mut_ptr(), 2);
        assert_eq!(b, [1.0, 1.0]);
        let mut c = [0.0; 2];
        milpgen_instance_objective(h, c.as_mut_ptr(), 2);
        assert_eq!(c, [0.5, 0.0]);
        let mut status = MilpgenStatus::Infeasible;
        milpgen_classify(h, &mut status);
        assert_eq!(status, MilpgenStatus::Optimal);
        let mut st = std::mem::zeroed::<MilpgenStats>();
        assert_eq!(milpgen_instance_stats(h, &mut st), MilpgenError::Ok);
        assert!((st.density_mean - 0.75).abs() < 1e-12);
        milpgen_instance_free(h);

        // y2 must be absent for general-integer tuples
        let rc = milpgen_instance_from_tuple(
            false, 2, 2, 3, rows.as_ptr(), cols.as_ptr(), vals.as_ptr(), x.as_ptr(), y.as_ptr(),
            y2.as_ptr(), s.as_ptr(), r.as_ptr(), &mut h,
        );
        assert_eq!(rc, MilpgenError::Validation);
    }
}

#[test]
fn errors_set_codes_and_messages() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(milpgen_instance_from_json(ptr::null(), &mut h), MilpgenError::NullPointer);
        assert!(last_error().contains("null"));

        let bad = CString::new("{not json").unwrap();
        assert_eq!(milpgen_instance_from_json(bad.as_ptr(), &mut h), MilpgenError::Parse);
        assert!(h.is_null());
        assert!(!last_error().is_empty());

        let invalid = [0xffu8, 0xfe, 0];
        assert_eq!(
            milpgen_instance_from_json(invalid.as_ptr().cast(), &mut h),
            MilpgenError::InvalidUtf8
        );

        assert_eq!(milpgen_gen_set_cover(0, 5, 0.2, 0, &mut h), MilpgenError::Validation);

        let missing = CString::new("/nonexistent/model.ckpt").unwrap();
        let mut model = ptr::null_mut();
        assert_eq!(milpgen_model_load(missing.as_ptr(), &mut model), MilpgenError::Io);

        let mut status = MilpgenStatus::Optimal;
        assert_eq!(milpgen_classify(ptr::null(), &mut status), MilpgenError::NullPointer);

        milpgen_instance_free(ptr::null_mut());
        milpgen_model_free(ptr::null_mut());
        milpgen_string_free(ptr::null_mut());
    }
}

#[test]
fn sample_requires_labels() {
    let h = set_cover(9);
    unsafe {
        let mut out = [ptr::null_mut(); 1];
        let srcs = [h as *const MilpgenInstance];
        // no model yet: null handle is rejected before the sources are read
        assert_eq!(
            milpgen_sample(ptr::null(), srcs.as_ptr(), 1, 0.1, 1, 0, out.as_mut_ptr()),
            MilpgenError::NullPointer
        );
        milpgen_instance_free(h);
    }
}

#[test]
fn version_is_nonempty() {
    let v = unsafe { CStr::from_ptr(milpgen_version()) };
    assert!(!v.to_bytes().is_empty());
}

#[test]
fn trained_model_samples_through_handles() {
    use milpgen::dataset::{gen_set_cover, ScConfig};
    use milpgen::solver::{extract_labels, LabelOptions};
    use milpgen::vae::{train, TrainConfig};

    let tuples: Vec<_> = (0..3)
        .map(|k| {
            let inst = gen_set_cover(&ScConfig::new(6, 10, 0.3, k)).unwrap();
            extract_labels(&inst, &LabelOptions::default()).unwrap()
        })
        .collect();
    let cfg = TrainConfig { epochs: 2, ..TrainConfig::default() };
    let out = train(&tuples, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    std::fs::write(&path, out.vae.to_bytes()).unwrap();

    unsafe {
        let cpath = CString::new(path.to_str().unwrap()).unwrap();
        let mut model = ptr::null_mut();
        assert_eq!(milpgen_model_load(cpath.as_ptr(), &mut model), MilpgenError::Ok, "{}", last_error());

        let unlabeled = set_cover(1);
        let srcs = [unlabeled as *const MilpgenInstance];
        let mut slots = [ptr::null_mut(); 3];
        assert_eq!(
            milpgen_sample(model, srcs.as_ptr(), 1, 0.2, 3, 7, slots.as_mut_ptr()),
            MilpgenError::Validation
        );
        assert!(last_error().contains("no labels"));

        assert_eq!(milpgen_instance_label(unlabeled), MilpgenError::Ok);
        assert_eq!(milpgen_sample(model, srcs.as_ptr(), 1, 0.2, 3, 7, slots.as_mut_ptr()), MilpgenError::Ok);
        for h in slots {
            assert!(!h.is_null());
            let mut status = MilpgenStatus::Infeasible;
            assert_eq!(milpgen_classify(h, &mut status), MilpgenError::Ok);
            assert_eq!(status, MilpgenStatus::Optimal);
            milpgen_instance_free(h);
        }
        milpgen_instance_free(unlabeled);
        milpgen_model_free(model);
    }
}
