use loewner_core::ads::{bilinear_22, is_positive_curve, isometry_act, plane_boundary_check, welding_graph, AdSBoundaryPoint, SpacelikePlane, ID, U, V, W};
use loewner_core::energy::{arc_energy, loop_energy, loop_energy_driving_default, LiouvilleResolution};
use loewner_core::loewner::{chord_energy_in_domain, dirichlet_energy, extract_driving, trace, Domain, DrivingFunction};
use loewner_core::mobius::angle_diff;
use loewner_core::optcurve::{geodesic_residual, minimize_curve, schwarzian_pairs, CurveProblem, CurveSolution};
use loewner_core::optweld::{minimize_welding, WeldProblem, WeldSolution};
use loewner_core::weld::{c1_break_report, fit_mobius_pieces, welding_from_curve, WeldingSamples};
use loewner_core::{hausdorff, CurvePolyline, MobiusComplex, MobiusReal, SpherePoint};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sampled(n: usize, marks: Vec<usize>, f: impl Fn(C) -> C) -> CurvePolyline {
    let pts = (0..n).map(|k| f(C::from_polar(1.0, TAU * k as f64 / n as f64))).collect();
    CurvePolyline::from_complex(pts, true, marks).unwrap()
}

fn polygon(v: &[C], per_edge: usize) -> CurvePolyline {
    let mut pts = Vec::new();
    let mut marks = Vec::new();
    for k in 0..v.len() {
        marks.push(pts.len());
        let (a, b) = (v[k], v[(k + 1) % v.len()]);
        for j in 0..per_edge {
            pts.push(a + (b - a) * (j as f64 / per_edge as f64));
        }
    }
    CurvePolyline::from_complex(pts, true, marks).unwrap()
}

fn finite(points: &[C]) -> Vec<SpherePoint> {
    points.iter().map(|&z| SpherePoint::Finite(z)).collect()
}

fn monotone(trace: &[f64]) -> f64 {
    trace.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

fn random_mobius(rng: &mut ChaCha8Rng, scale: f64) -> MobiusComplex {
    let mut r = || C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let one = C::new(1.0, 0.0);
    MobiusComplex::new(one + scale * r(), scale * r(), scale * r(), one + scale * r()).unwrap()
}

fn random_real(rng: &mut ChaCha8Rng) -> MobiusReal {
    loop {
        let (a, b, c, d) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if a * d - b * c > 0.05 {
            return MobiusReal::new(a, b, c, d).unwrap();
        }
    }
}

fn generic_vertices() -> Vec<C> {
    vec![C::new(0.0, 0.0), C::new(2.0, 0.0), C::new(1.0, 2.0), C::new(-1.0, 1.0)]
}

fn generic_problem(vertices: &[C], init: CurvePolyline) -> CurveProblem {
    let mut p = CurveProblem::new(finite(vertices), init).unwrap();
    p.tol = 2e-4;
    p.max_sweeps = 40;
    p
}

fn quarters() -> Vec<f64> {
    vec![0.0, PI / 2.0, PI, 1.5 * PI]
}

fn sup_error(w: &WeldingSamples, f: impl Fn(f64) -> f64) -> f64 {
    w.theta.iter().zip(&w.image).map(|(&t, &h)| angle_diff(h, f(t)).abs()).fold(0.0, f64::max)
}

fn driving_round_trip() -> Outcome {
    let start = Instant::now();
    let w = DrivingFunction::from_fn(1.0, 400, |t| 0.8 * t.sin()).unwrap();
    let err = |steps| {
        let d = extract_driving(&trace(&w, steps).unwrap()).unwrap();
        d.times.iter().zip(&d.values).map(|(&t, &v)| (v - 0.8 * t.sin()).abs()).fold(0.0, f64::max)
    };
    let e1 = err(2000);
    let secs = start.elapsed().as_secs_f64();
    let e2 = err(4000);
    check(e1 < 1e-2 && e2 < 0.55 * e1 && secs < 30.0, format!("sup error {e1:.2e} at 2000 steps, {e2:.2e} at 4000, {secs:.1} s"))
}

fn exact_energies() -> Outcome {
    let zero = DrivingFunction::from_fn(1.0, 100, |_| 0.0).unwrap();
    let line = DrivingFunction::from_fn(1.0, 100, |t| 2.0 * t).unwrap();
    let (a, b) = (dirichlet_energy(&zero), dirichlet_energy(&line));
    check(a == 0.0 && (b - 2.0).abs() < 1e-14, format!("I(0) = {a}, I(2t) = {b}"))
}

fn circle_law() -> Outcome {
    let c = sampled(400, vec![0], |z| z);
    let l = loop_energy(&c, LiouvilleResolution::default()).unwrap().value;
    let d = loop_energy_driving_default(&c, 0).unwrap().value;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let worst = (0..20)
        .map(|_| loop_energy_driving_default(&c.transformed(&random_mobius(&mut rng, 0.3)), 0).unwrap().value)
        .fold(0.0, f64::max);
    check(l < 1e-3 && d < 1e-3 && worst < 1e-3, format!("circle {l:.1e} / {d:.1e}, worst of 20 Möbius images {worst:.1e}"))
}

fn cross_method() -> Outcome {
    let mut gaps = Vec::new();
    for n in [200, 400, 800] {
        let c = sampled(n, vec![0], |z| z + 0.1 * z * z);
        let l = loop_energy(&c, LiouvilleResolution::default()).unwrap().value;
        let d = loop_energy_driving_default(&c, 0).unwrap().value;
        gaps.push((l - d).abs() / l.max(d).max(0.1));
    }
    let shown: Vec<String> = gaps.iter().map(|g| format!("{g:.2e}")).collect();
    check(gaps.iter().all(|&g| g < 0.05) && gaps[2] < gaps[0], format!("relative gaps at 200/400/800 samples {}", shown.join(", ")))
}

fn additivity() -> Outcome {
    let c = sampled(400, vec![0, 150], |z| z + 0.3 * z * z);
    let il = loop_energy(&c, LiouvilleResolution::default()).unwrap().value;
    let arc = CurvePolyline::new(c.arc_points(0), false, vec![]).unwrap();
    let chord = CurvePolyline::new(c.rest_indices(0).into_iter().map(|i| c.points[i]).collect(), false, vec![]).unwrap();
    let ia = arc_energy(&arc, LiouvilleResolution::default()).unwrap().value;
    let (tail, head) = (arc.points[0], arc.points[arc.len() - 1]);
    let ic = chord_energy_in_domain(&chord, &Domain::ArcComplement(arc), head, tail).unwrap();
    let rel = (il - ia - ic).abs() / il;
    check(rel < 0.05, format!("I^L {il:.5}, I^A {ia:.5}, I^C {ic:.5}, relative defect {rel:.1e}"))
}

fn circle_recovery() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut v = Vec::new();
    for k in 0..4 {
        let m = C::from_polar(1.0, TAU * k as f64 / 4.0);
        v.push(m);
        v.push(m * C::new(1.0, 1.0) + C::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)));
    }
    let square = polygon(&v, 25);
    let init = CurvePolyline { marks: square.marks.iter().step_by(2).copied().collect(), ..square };
    let roots: Vec<C> = (0..4).map(|k| C::from_polar(1.0, TAU * k as f64 / 4.0)).collect();
    let s = minimize_curve(&CurveProblem::new(finite(&roots), init).unwrap()).unwrap();
    let e = *s.energy_trace.last().unwrap();
    let circle: Vec<C> = (0..1000).map(|k| C::from_polar(1.0, TAU * k as f64 / 1000.0)).collect();
    let d = hausdorff(&s.curve.finite_points().unwrap(), true, &circle, true);
    let secs = start.elapsed().as_secs_f64();
    check(
        e < 1e-3 && d < 1e-2 && s.sweeps <= 20 && secs < 120.0,
        format!("energy {e:.1e}, Hausdorff {d:.1e}, {} sweeps, {secs:.0} s", s.sweeps),
    )
}

fn generic_points(s: &CurveSolution) -> Outcome {
    let up = monotone(&s.energy_trace);
    let res = geodesic_residual(&s.curve).unwrap().into_iter().fold(0.0, f64::max);
    let w = welding_from_curve(&s.curve, 0).unwrap();
    let pieces = fit_mobius_pieces(&w).unwrap();
    let fit = pieces.iter().map(|p| p.1).fold(0.0, f64::max);
    let jumps = c1_break_report(&w, &pieces.iter().map(|p| p.0).collect::<Vec<_>>()).unwrap();
    let jump = jumps.iter().copied().fold(0.0, f64::max);
    check(
        up < 1e-3 && res < 1e-3 && fit < 1e-3 && jump < 1e-2,
        format!("largest energy increase {up:.1e}, geodesic residual {res:.1e}, Möbius fit {fit:.1e}, C¹ jump {jump:.1e}"),
    )
}

fn schwarzian_certificate(s: &CurveSolution) -> Outcome {
    let pairs = schwarzian_pairs(&s.curve, 20, 2.0).unwrap();
    let gap = pairs.iter().map(|p| p.relative_gap()).fold(0.0, f64::max);
    check(gap < 0.1, format!("{} samples, largest relative gap {gap:.3}", pairs.len()))
}

fn identity_and_mobius_constraints() -> Outcome {
    let s = minimize_welding(&WeldProblem::new(quarters(), quarters()).unwrap()).unwrap();
    let e = *s.energy_trace.last().unwrap();
    let err = sup_error(&s.welding, |t| t);
    let rho = MobiusReal::new(1.4, 0.3, -0.2, 0.8).unwrap();
    let y = quarters().iter().map(|&t| rho.apply_angle(t).rem_euclid(TAU)).collect();
    let r = minimize_welding(&WeldProblem::new(quarters(), y).unwrap()).unwrap();
    let er = *r.energy_trace.last().unwrap();
    let err_rho = sup_error(&r.welding, |t| rho.apply_angle(t));
    check(
        e < 1e-3 && err < 1e-2 && err_rho < 1e-2,
        format!("identity: energy {e:.1e}, welding error {err:.1e}; ρ: energy {er:.1e}, welding error {err_rho:.1e}"),
    )
}

fn generic_constraints(s: &WeldSolution) -> Outcome {
    let up = monotone(&s.energy_trace);
    let res = s.fits.iter().map(|f| f.residual).fold(0.0, f64::max);
    let joint = s.fits.iter().map(|f| (f.joint_angle - PI).abs()).fold(0.0, f64::max);
    check(
        up < 1e-3 && res < 1e-3 && joint < 0.05,
        format!("largest energy increase {up:.1e}, circle fit {res:.1e}, joint angle off π by {joint:.1e}"),
    )
}

fn ads_algebra(curve: &CurveSolution, weld: &WeldSolution) -> Outcome {
    let basis = [ID, V, W, U];
    let q = [-1.0, 1.0, 1.0, -1.0];
    let table = (0..16).all(|k| bilinear_22(&basis[k / 4], &basis[k % 4]) == if k / 4 == k % 4 { q[k / 4] } else { 0.0 });
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut boundary = 0.0f64;
    let mut equivariance = 0.0f64;
    for _ in 0..10_000 {
        let alpha = random_real(&mut rng);
        let x = rng.gen_range(0.0..TAU);
        boundary = boundary.max(plane_boundary_check(&alpha, x));
        let (a, b) = (random_real(&mut rng), random_real(&mut rng));
        let p = AdSBoundaryPoint::new(x, alpha.inverse().apply_angle(x));
        let moved = isometry_act(&a, &b, &p);
        let direct = AdSBoundaryPoint::new(a.apply_angle(p.x), b.apply_angle(p.y));
        let d = (0..4).map(|i| (moved.representative[i / 2][i % 2] - direct.representative[i / 2][i % 2]).abs()).fold(0.0, f64::max);
        let on_plane = SpacelikePlane::new(alpha).act(&a, &b).pairing(&moved).abs();
        equivariance = equivariance.max(d).max(on_plane);
    }
    let w7 = welding_from_curve(&curve.curve, 0).unwrap();
    let pos7 = is_positive_curve(&welding_graph(&w7)).unwrap().positive;
    let pos10 = is_positive_curve(&welding_graph(&weld.welding)).unwrap().positive;
    check(
        table && boundary < 1e-12 && equivariance < 1e-12 && pos7 && pos10,
        format!("signature table {table}, boundary {boundary:.1e}, equivariance {equivariance:.1e}, positive weldings {pos7}/{pos10}"),
    )
}

fn mobius_invariance(s: &CurveSolution) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let m = random_mobius(&mut rng, 0.15);
    let v: Vec<C> = generic_vertices().iter().map(|&z| m.apply_c(z)).collect();
    let init = polygon(&generic_vertices(), 30).transformed(&m);
    let t = minimize_curve(&generic_problem(&v, init)).unwrap();
    let expect = s.curve.transformed(&m).finite_points().unwrap();
    let d = hausdorff(&t.curve.finite_points().unwrap(), true, &expect, true);
    check(d < 1e-2, format!("Hausdorff to the transformed minimizer {d:.1e}"))
}

fn run(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    });
    let secs = start.elapsed().as_secs_f64();
    match &outcome {
        Ok(d) => println!("PASS {id:>2} {name}: {d} [{secs:.1} s]"),
        Err(d) => println!("FAIL {id:>2} {name}: {d} [{secs:.1} s]"),
    }
    outcome.is_ok()
}

fn main() {
    let generic = generic_problem(&generic_vertices(), polygon(&generic_vertices(), 30));
    let curve = minimize_curve(&generic).unwrap();
    let weld = minimize_welding(&WeldProblem::new(quarters(), vec![0.1, 1.9, 3.3, 4.9]).unwrap()).unwrap();
    let results = [
        run(1, "driving round trip", driving_round_trip),
        run(2, "exact energies", exact_energies),
        run(3, "circle law", circle_law),
        run(4, "cross-method identity", cross_method),
        run(5, "additivity", additivity),
        run(6, "circle recovery", circle_recovery),
        run(7, "generic points", || generic_points(&curve)),
        run(8, "Schwarzian certificate", || schwarzian_certificate(&curve)),
        run(9, "identity and Möbius constraints", identity_and_mobius_constraints),
        run(10, "generic constraints", || generic_constraints(&weld)),
        run(11, "AdS algebra", || ads_algebra(&curve, &weld)),
        run(12, "Möbius invariance", || mobius_invariance(&curve)),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|r| !r.1).map(|r| r.0 + 1).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria {failed:?}");
        std::process::exit(1);
    }
}
