use loewner_core::weld::{fit_mobius_pieces, welding_from_curve};
use loewner_core::{CurvePolyline, MobiusComplex};
use num_complex::Complex64;
use std::f64::consts::TAU;

fn circle(n: usize, marks: Vec<usize>) -> CurvePolyline {
    let pts = (0..n).map(|k| Complex64::from_polar(1.0, TAU * k as f64 / n as f64)).collect();
    CurvePolyline::from_complex(pts, true, marks).unwrap()
}

#[test]
fn circle_welding_is_identity() {
    let w = welding_from_curve(&circle(300, vec![]), 0).unwrap();
    let err = w.theta.iter().zip(&w.image).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-3, "{err}");
}

#[test]
fn mobius_image_has_same_welding() {
    let n = 300;
    let c: CurvePolyline = {
        let pts = (0..n)
            .map(|k| {
                let z = Complex64::from_polar(1.0, TAU * k as f64 / n as f64);
                z + 0.2 * z * z
            })
            .collect();
        CurvePolyline::from_complex(pts, true, vec![0, 75, 150, 225]).unwrap()
    };
    let m = MobiusComplex::new(
        Complex64::new(1.0, 0.3),
        Complex64::new(0.2, -0.1),
        Complex64::new(0.1, 0.2),
        Complex64::new(1.5, 0.0),
    )
    .unwrap();
    let a = welding_from_curve(&c, 0).unwrap();
    let b = welding_from_curve(&c.transformed(&m), 0).unwrap();
    let d = a.sup_distance(&b);
    assert!(d < 1e-2, "{d}");
    // reversing the orientation gives the same welding
    let r = welding_from_curve(&c.reversed(), 0).unwrap();
    assert!(a.sup_distance(&r) < 1e-2);
}

#[test]
fn circle_pieces_are_mobius() {
    let w = welding_from_curve(&circle(240, vec![0, 60, 120, 180]), 0).unwrap();
    for (_, r) in fit_mobius_pieces(&w).unwrap() {
        assert!(r < 1e-8, "{r}");
    }
}
