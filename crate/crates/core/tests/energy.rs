use loewner_core::energy::{arc_energy, loop_energy, loop_energy_driving_default, LiouvilleResolution};
use loewner_core::{CurvePolyline, MobiusComplex};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use std::f64::consts::TAU;

fn sampled(n: usize, f: impl Fn(Complex64) -> Complex64) -> CurvePolyline {
    let pts = (0..n).map(|k| f(Complex64::from_polar(1.0, TAU * k as f64 / n as f64))).collect();
    CurvePolyline::from_complex(pts, true, vec![0]).unwrap()
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.max(b).max(0.1)
}

#[test]
fn circle_energy_vanishes() {
    let c = sampled(400, |z| z);
    let l = loop_energy(&c, LiouvilleResolution::default()).unwrap();
    let d = loop_energy_driving_default(&c, 0).unwrap();
    assert!(l.value < 1e-3, "{l:?}");
    assert!(d.value < 1e-3, "{d:?}");
}

#[test]
fn mobius_images_of_circle_have_small_energy() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let c = sampled(400, |z| z);
    for _ in 0..5 {
        let mut r = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let m = MobiusComplex::new(Complex64::new(1.0, 0.0) + 0.3 * r(), 0.3 * r(), 0.3 * r(), Complex64::new(1.0, 0.0) + 0.3 * r()).unwrap();
        let img = c.transformed(&m);
        let d = loop_energy_driving_default(&img, 0).unwrap();
        assert!(d.value < 1e-3, "{}", d.value);
    }
}

#[test]
fn polynomial_curve_methods_agree_under_refinement() {
    let mut gaps = Vec::new();
    for n in [200, 400, 800] {
        let c = sampled(n, |z| z + 0.1 * z * z);
        let l = loop_energy(&c, LiouvilleResolution::default()).unwrap();
        let d = loop_energy_driving_default(&c, 0).unwrap();
        assert!((l.value - 0.00125).abs() < 5e-5, "{}", l.value);
        gaps.push(relative_gap(l.value, d.value));
    }
    assert!(gaps.iter().all(|&g| g < 0.05), "{gaps:?}");
    assert!(gaps[2] < gaps[0], "{gaps:?}");
}

#[test]
fn larger_perturbation_methods_agree() {
    let c = sampled(400, |z| z + 0.3 * z * z);
    let l = loop_energy(&c, LiouvilleResolution::default()).unwrap();
    let d = loop_energy_driving_default(&c, 0).unwrap();
    assert!(relative_gap(l.value, d.value) < 0.05, "{} {}", l.value, d.value);
}

#[test]
fn root_choice_does_not_matter() {
    let c = sampled(400, |z| z + 0.2 * z * z);
    let a = loop_energy_driving_default(&c, 0).unwrap().value;
    let b = loop_energy_driving_default(&c, 133).unwrap().value;
    assert!((a - b).abs() < 0.05 * a.max(0.01), "{a} {b}");
}

#[test]
fn circular_arc_has_zero_arc_energy() {
    let pts = (0..=100).map(|k| Complex64::from_polar(2.0, 0.3 + 2.0 * k as f64 / 100.0)).collect();
    let arc = CurvePolyline::from_complex(pts, false, vec![]).unwrap();
    let e = arc_energy(&arc, LiouvilleResolution::default()).unwrap().value;
    assert!(e < 1e-3, "{e}");
}
