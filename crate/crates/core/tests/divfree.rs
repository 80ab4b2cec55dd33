use std::collections::BTreeMap;

use llns::divfree::{decompose, det, frame, leray_matrix, recompose, to_f64, FourierField, Frame, FrameRule, WaveVector};
use llns::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn box_vectors<const D: usize>(r: i32) -> Vec<[i32; D]> {
    let side = (2 * r + 1) as usize;
    (0..side.pow(D as u32))
        .map(|mut i| {
            std::array::from_fn(|_| {
                let c = (i % side) as i32 - r;
                i /= side;
                c
            })
        })
        .filter(|k: &[i32; D]| k.iter().any(|&c| c != 0))
        .collect()
}

fn check_frames<const D: usize>(r: i32) {
    for k in box_vectors::<D>(r) {
        let w = WaveVector::new(k).unwrap();
        let kf = to_f64(&k);
        let p = leray_matrix(&k).unwrap();
        // P̂ is a symmetric idempotent annihilating k
        for i in 0..D {
            let pk: f64 = (0..D).map(|j| p[i][j] * kf[j]).sum();
            assert!(pk.abs() < 1e-12, "P̂k ≠ 0 at {k:?}");
            for j in 0..D {
                assert!((p[i][j] - p[j][i]).abs() < 1e-15);
                let pp: f64 = (0..D).map(|m| p[i][m] * p[m][j]).sum();
                assert!((pp - p[i][j]).abs() < 1e-12, "P̂² ≠ P̂ at {k:?}");
            }
        }
        for rule in [FrameRule::FirstCanonical, FrameRule::LastCanonical] {
            let f = Frame::with_rule(&w, rule);
            let g = Frame::with_rule(&w.neg(), rule);
            let mut m = [[0.0; D]; D];
            for a in 0..D - 1 {
                let v = f.vector(a);
                assert_eq!(v, g.vector(a), "frame not even at {k:?}");
                let vk: f64 = (0..D).map(|j| v[j] * kf[j]).sum();
                assert!(vk.abs() < 1e-12);
                for b in 0..D - 1 {
                    let ip: f64 = (0..D).map(|j| v[j] * f.vector(b)[j]).sum();
                    assert!((ip - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
                m[a] = *v;
            }
            let n = kf.iter().map(|c| c * c).sum::<f64>().sqrt();
            m[D - 1] = std::array::from_fn(|j| kf[j] / n);
            if w.is_positive() {
                assert!((det(&m) - 1.0).abs() < 1e-12, "frame of {k:?} is not right-handed");
            }
            // Σ_α a aᵀ = P̂
            for i in 0..D {
                for j in 0..D {
                    let s: f64 = (0..D - 1).map(|a| f.vector(a)[i] * f.vector(a)[j]).sum();
                    assert!((s - p[i][j]).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn frames_and_projection_on_a_box_d2() {
    check_frames::<2>(6);
}

#[test]
fn frames_and_projection_on_a_box_d3() {
    check_frames::<3>(4);
}

#[test]
fn zero_wave_vector_is_rejected() {
    assert!(matches!(WaveVector::new([0, 0, 0]), Err(Error::ZeroWaveVector)));
    assert!(leray_matrix(&[0, 0]).is_err());
}

#[test]
fn gradient_field_is_rejected() {
    let mut f: FourierField<3> = BTreeMap::new();
    let c = Complex64::new(0.3, -1.2);
    f.insert([1, 2, -1], [c, c * 2.0, -c]);
    match decompose(&f) {
        Err(Error::NotDivergenceFree { k, defect }) => {
            assert_eq!(k, vec![1, 2, -1]);
            assert!((defect - 1.0).abs() < 1e-12);
        }
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn frame_examples() {
    let f = frame(&WaveVector::new([0, 0, 1]).unwrap());
    assert_eq!(*f.vector(0), [1.0, 0.0, 0.0]);
    assert_eq!(*f.vector(1), [0.0, 1.0, 0.0]);
    let f = frame(&WaveVector::new([0, 1]).unwrap());
    assert_eq!(*f.vector(0), [1.0, 0.0]);
}

fn arb_mode() -> impl Strategy<Value = ([i32; 3], [f64; 4])> {
    (
        prop::array::uniform3(-5i32..=5).prop_filter("nonzero", |k| k.iter().any(|&c| c != 0)),
        prop::array::uniform4(-10.0f64..10.0),
    )
}

proptest! {
    #[test]
    fn recompose_then_decompose_round_trips(modes in prop::collection::vec(arb_mode(), 1..12)) {
        let mut coeffs = BTreeMap::new();
        for (k, c) in modes {
            coeffs.insert(k, vec![Complex64::new(c[0], c[1]), Complex64::new(c[2], c[3])]);
        }
        let field = recompose(&coeffs).unwrap();
        let back = decompose(&field).unwrap();
        for (k, c) in &coeffs {
            for (a, b) in c.iter().zip(&back[k]) {
                prop_assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()));
            }
        }
    }
}
