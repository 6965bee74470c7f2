//! Fixtures shared by the benches.

use loewner_core::curve::CurvePolyline;
use loewner_core::loewner::DrivingFunction;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// `n` points on the image of the unit circle under `z + a z²`, marked every `n / marks` points.
pub fn perturbed_circle(n: usize, a: f64, marks: usize) -> CurvePolyline {
    let z = (0..n)
        .map(|k| {
            let w = Complex64::from_polar(1.0, TAU * k as f64 / n as f64);
            w + a * w * w
        })
        .collect();
    CurvePolyline::from_complex(z, true, (0..marks).map(|k| k * n / marks).collect()).unwrap()
}

pub fn sine_driving(samples: usize) -> DrivingFunction {
    let times: Vec<f64> = (0..=samples).map(|k| k as f64 / samples as f64).collect();
    let values = times.iter().map(|t| (3.0 * t).sin()).collect();
    DrivingFunction::new(times, values).unwrap()
}
