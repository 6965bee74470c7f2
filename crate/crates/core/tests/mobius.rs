use loewner_core::mobius::{angle_diff, orientation_triple};
use loewner_core::{cross_ratio, MobiusComplex, MobiusReal, SpherePoint};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use std::f64::consts::TAU;

fn complex() -> impl Strategy<Value = C> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C::new(a, b))
}

fn mobius() -> impl Strategy<Value = MobiusComplex> {
    (complex(), complex(), complex(), complex())
        .prop_filter_map("det", |(a, b, c, d)| if (a * d - b * c).norm() > 0.1 { MobiusComplex::new(a, b, c, d).ok() } else { None })
}

fn real() -> impl Strategy<Value = MobiusReal> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
        .prop_filter_map("det", |(a, b, c, d)| if a * d - b * c > 0.05 { MobiusReal::new(a, b, c, d).ok() } else { None })
}

fn separated(t: [f64; 3]) -> bool {
    (0..3).all(|i| angle_diff(t[i], t[(i + 1) % 3]).abs() > 0.05)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn composition_and_inverse(m in mobius(), n in mobius(), z in complex()) {
        let p = SpherePoint::Finite(z);
        prop_assert!(m.compose(&n).apply(p).chordal(&m.apply(n.apply(p))) < 1e-9);
        prop_assert!(m.inverse().apply(m.apply(p)).chordal(&p) < 1e-9);
    }

    #[test]
    fn cross_ratio_is_invariant(m in mobius(), z in prop::array::uniform4(complex())) {
        let pts = z.map(SpherePoint::Finite);
        prop_assume!((0..4).all(|i| (i + 1..4).all(|j| (z[i] - z[j]).norm() > 0.1)));
        let before = cross_ratio(pts);
        let after = cross_ratio(pts.map(|p| m.apply(p)));
        prop_assert!(before.chordal(&after) < 1e-8);
    }

    #[test]
    fn real_maps_compose_on_angles(m in real(), n in real(), t in 0.0..TAU) {
        let direct = m.apply_angle(n.apply_angle(t));
        prop_assert!(angle_diff(m.compose(&n).apply_angle(t), direct).abs() < 1e-9);
        prop_assert!(angle_diff(m.inverse().apply_angle(m.apply_angle(t)), t).abs() < 1e-9);
    }

    #[test]
    fn real_maps_preserve_orientation(m in real(), t in prop::array::uniform3(0.0..TAU)) {
        prop_assume!(separated(t));
        let image = t.map(|s| m.apply_angle(s));
        prop_assume!(separated(image));
        prop_assert_eq!(orientation_triple(t).unwrap(), orientation_triple(image).unwrap());
    }

    #[test]
    fn angle_triple_recovers_the_map(m in real(), x in prop::array::uniform3(0.0..TAU), probe in 0.0..TAU) {
        prop_assume!(separated(x));
        let y = x.map(|t| m.apply_angle(t));
        prop_assume!(separated(y));
        let f = MobiusReal::from_angle_triple(x, y).unwrap();
        prop_assert!(angle_diff(f.apply_angle(probe), m.apply_angle(probe)).abs() < 1e-7);
    }
}
