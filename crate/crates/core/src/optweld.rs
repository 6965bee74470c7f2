use crate::confmap::map_arc_complement;
use crate::curve::{check_simple_points, resample_cubic_at, signed_area2, CurvePolyline};
use crate::energy::loop_energy_driving_default;
use crate::error::{Error, Result};
use crate::mobius::{angle_diff, circline_through, Circline, MobiusComplex};
use crate::sphere::SpherePoint;
use crate::weld::{pinned_angles, welding_with_pins, WeldPins, WeldingSamples};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

type C = Complex64;

/// Weldings with h(x_k) = y_k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeldProblem {
    /// Strictly increasing angles in [0, 2π).
    pub x: Vec<f64>,
    /// Cyclically increasing angles in [0, 2π).
    pub y: Vec<f64>,
    pub initial_curve: Option<CurvePolyline>,
    /// Stop once every arc is within this distance of its best-fit circle.
    pub tol: f64,
    pub max_sweeps: usize,
    pub arc_samples: usize,
}

impl WeldProblem {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let p = WeldProblem { x, y, initial_curve: None, tol: 1e-3, max_sweeps: 30, arc_samples: 80 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_constraints(&self.x, &self.y)?;
        if !(self.tol > 0.0) || self.max_sweeps == 0 || self.arc_samples < 8 {
            return Err(Error::InvalidInput("tol > 0, max_sweeps ≥ 1, arc_samples ≥ 8 required".into()));
        }
        if let Some(c) = &self.initial_curve {
            if !c.closed || c.marks.len() != self.x.len() {
                return Err(Error::InvalidInput("initial curve must be closed with one mark per constraint".into()));
            }
        }
        Ok(())
    }

    pub fn pins(&self) -> WeldPins {
        WeldPins { indices: None, domain: [self.x[0], self.x[1], self.x[2]], image: [self.y[0], self.y[1], self.y[2]] }
    }
}

fn check_constraints(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::InvalidInput("need matching x and y with at least 3 angles".into()));
    }
    WeldingSamples::new(x.to_vec(), y.to_vec(), None).map(|_| ()).map_err(|e| match e {
        Error::Schema { pointer, message } => {
            let pointer = pointer.replace("/theta", "/x").replace("/image", "/y");
            Error::Schema { pointer, message }
        }
        e => e,
    })
}

/// Periodic cubic spline through (t_k, v_k) with period 2π; t strictly increasing
/// within one period.
struct PeriodicSpline {
    t: Vec<f64>,
    v: Vec<f64>,
    m: Vec<f64>,
}

impl PeriodicSpline {
    fn new(t: &[f64], v: &[f64]) -> Result<Self> {
        let n = t.len();
        let h = |k: usize| if k + 1 < n { t[k + 1] - t[k] } else { t[0] + TAU - t[n - 1] };
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = DVector::<f64>::zeros(n);
        for k in 0..n {
            let (hp, hk) = (h((k + n - 1) % n), h(k));
            a[(k, (k + n - 1) % n)] += hp;
            a[(k, k)] += 2.0 * (hp + hk);
            a[(k, (k + 1) % n)] += hk;
            b[k] = 6.0 * ((v[(k + 1) % n] - v[k]) / hk - (v[k] - v[(k + n - 1) % n]) / hp);
        }
        let m = a.lu().solve(&b).ok_or_else(|| Error::Numerical("singular spline system".into()))?;
        Ok(PeriodicSpline { t: t.to_vec(), v: v.to_vec(), m: m.iter().copied().collect() })
    }

    /// Value on interval k at offset s ∈ [0, h_k].
    fn eval(&self, k: usize, s: f64) -> f64 {
        let n = self.t.len();
        let j = (k + 1) % n;
        let h = if k + 1 < n { self.t[k + 1] - self.t[k] } else { self.t[0] + TAU - self.t[n - 1] };
        let (a, b) = ((h - s) / h, s / h);
        a * self.v[k] + b * self.v[j] + ((a * a * a - a) * self.m[k] + (b * b * b - b) * self.m[j]) * h * h / 6.0
    }
}

/// Star-shaped curve through marks at angles `phi` with log-radii `rho`.
fn star_curve(phi: &[f64], rho: &[f64], per_arc: usize) -> Result<CurvePolyline> {
    let n = phi.len();
    let base = phi[0];
    let t: Vec<f64> = phi.iter().map(|p| (p - base).rem_euclid(TAU)).collect();
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Numerical("mark angles lost their cyclic order".into()));
    }
    let spline = PeriodicSpline::new(&t, rho)?;
    let mut pts = Vec::with_capacity(n * per_arc);
    let mut marks = Vec::with_capacity(n);
    let fr = graded_fractions(per_arc + 1);
    for k in 0..n {
        marks.push(pts.len());
        let h = if k + 1 < n { t[k + 1] - t[k] } else { TAU - t[k] };
        for &f in &fr[..per_arc] {
            let s = h * f;
            pts.push(C::from_polar(spline.eval(k, s).exp(), base + t[k] + s));
        }
    }
    CurvePolyline::from_complex(pts, true, marks)
}

/// Constraint mismatch of a curve: (θ(z_k) − x_k, h(z_k) − y_k) for k ≥ 3.
fn constraint_residual(curve: &CurvePolyline, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let pins = WeldPins { indices: None, domain: [x[0], x[1], x[2]], image: [y[0], y[1], y[2]] };
    let (theta, image) = pinned_angles(curve, &pins)?;
    let mut r = Vec::with_capacity(2 * (x.len() - 3));
    for k in 3..x.len() {
        let m = curve.marks[k];
        r.push(angle_diff(theta[m], x[k]));
        r.push(angle_diff(image[m], y[k]));
    }
    Ok(r)
}

/// Levenberg–Marquardt with a forward-difference Jacobian. `eval` builds a curve and
/// its residual from parameters.
fn least_squares<F>(mut p: Vec<f64>, eval: F) -> Result<(Vec<f64>, CurvePolyline, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<(CurvePolyline, Vec<f64>)>,
{
    let (mut curve, mut r) = eval(&p)?;
    let cost = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let mut lambda = 1e-3;
    for _ in 0..60 {
        if r.iter().all(|v| v.abs() < 1e-10) {
            break;
        }
        let m = p.len();
        let mut jac = DMatrix::<f64>::zeros(r.len(), m);
        for j in 0..m {
            let h = 1e-7;
            let mut q = p.clone();
            q[j] += h;
            let (_, rq) = eval(&q)?;
            for i in 0..r.len() {
                jac[(i, j)] = (rq[i] - r[i]) / h;
            }
        }
        let jt = jac.transpose();
        let g = &jt * DVector::from_column_slice(&r);
        let jtj = &jt * &jac;
        let mut improved = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for d in 0..m {
                a[(d, d)] += lambda * (1.0 + jtj[(d, d)]);
            }
            let Some(step) = a.lu().solve(&(-&g)) else { break };
            let q: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if let Ok((c, rq)) = eval(&q) {
                if cost(&rq) < cost(&r) {
                    p = q;
                    r = rq;
                    curve = c;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok((p, curve, r))
}

/// Simple closed curve whose welding sends x_k to y_k, found by Levenberg–Marquardt
/// on the positions of marks 4..n of a star-shaped spline curve, the first three
/// marks being pinned at e^{ix_k}.
pub fn initial_constrained_curve(x: &[f64], y: &[f64], per_arc: usize) -> Result<CurvePolyline> {
    check_constraints(x, y)?;
    let n = x.len();
    let build = |p: &[f64]| -> Result<CurvePolyline> {
        let mut phi = x[..3].to_vec();
        let mut rho = vec![0.0; 3];
        for k in 3..n {
            rho.push(p[2 * (k - 3)]);
            phi.push(p[2 * (k - 3) + 1]);
        }
        let c = star_curve(&phi, &rho, per_arc)?;
        c.check_simple()?;
        Ok(c)
    };
    let p: Vec<f64> = (3..n).flat_map(|k| [0.0, x[k]]).collect();
    let mut curve = build(&p)?;
    if n == 3 {
        return Ok(curve);
    }
    let (_, c, r) = least_squares(p, |q| {
        let c = build(q)?;
        let r = constraint_residual(&c, x, y)?;
        Ok((c, r))
    })?;
    curve = c;
    let worst = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if worst > 1e-2 {
        return Err(Error::Numerical(format!("constraint residual {worst:.3e} after construction")));
    }
    Ok(curve)
}

/// Circular arc M(ℝ₊) from M(0) to M(∞), uniform in angle, endpoints included.
fn circular_image_of_positive_axis(m: &MobiusComplex, fractions: &[f64]) -> Result<Vec<C>> {
    let count = fractions.len();
    let fin = |p: SpherePoint| p.finite().ok_or_else(|| Error::Numerical("straightened arc passes through ∞".into()));
    let a = fin(m.apply(SpherePoint::new(0.0, 0.0)))?;
    let mid = fin(m.apply(SpherePoint::new(1.0, 0.0)))?;
    let b = fin(m.apply(SpherePoint::Infinity))?;
    let out = match circline_through(a.into(), mid.into(), b.into())? {
        Circline::Circle { center, radius } => {
            let ta = (a - center).arg();
            let span_ccw = ((b - center).arg() - ta).rem_euclid(TAU);
            let to_mid = ((mid - center).arg() - ta).rem_euclid(TAU);
            let span = if to_mid < span_ccw { span_ccw } else { span_ccw - TAU };
            let mut v: Vec<C> =
                (0..count).map(|j| center + C::from_polar(radius, ta + span * fractions[j])).collect();
            v[0] = a;
            v[count - 1] = b;
            v
        }
        Circline::Line { .. } => fractions.iter().map(|&f| a + (b - a) * f).collect(),
    };
    Ok(out)
}

/// Fractions in [0, 1] with spacing shrinking like (1/n)³ at both ends.
pub(crate) fn graded_fractions(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            let (a, b) = (s.powi(3), (1.0 - s).powi(3));
            a / (a + b)
        })
        .collect()
}

/// Replaces arc k by a circular arc through the straightening map, keeping every
/// arc at `arc_samples` intervals.
pub fn straighten_arc(curve: &CurvePolyline, k: usize, arc_samples: usize) -> Result<CurvePolyline> {
    let n = curve.marks.len();
    if !curve.closed || n < 3 || k >= n {
        return Err(Error::InvalidInput("need a closed curve with at least 3 marks and a valid arc index".into()));
    }
    let z = curve.finite_points()?;
    let arc: Vec<C> = curve.arc_indices(k).into_iter().map(|i| z[i]).collect();
    let last = arc.len() - 1;
    let phi = map_arc_complement(&CurvePolyline::from_complex(arc, false, vec![0, last])?)?;
    let straighten = |p: C| -> Result<C> {
        let u = phi.eval(p)?;
        Ok(u * u)
    };
    let mark_image = |j: usize| -> Result<SpherePoint> {
        if j == k {
            Ok(SpherePoint::new(0.0, 0.0))
        } else if j == (k + 1) % n {
            Ok(SpherePoint::Infinity)
        } else {
            Ok(SpherePoint::Finite(straighten(z[curve.marks[j]])?))
        }
    };
    let targets = [SpherePoint::new(1.0, 0.0), SpherePoint::new(0.0, 1.0), SpherePoint::new(-1.0, 0.0)];
    let m = MobiusComplex::from_triple([mark_image(0)?, mark_image(1)?, mark_image(2)?], targets)?;
    let fin = |p: SpherePoint| p.finite().ok_or_else(|| Error::Numerical("normalized curve passes through ∞".into()));
    let fractions = graded_fractions(arc_samples + 1);
    let mut pts = Vec::with_capacity(n * arc_samples);
    let mut marks = Vec::with_capacity(n);
    for j in 0..n {
        marks.push(pts.len());
        let piece = if j == k {
            circular_image_of_positive_axis(&m, &fractions)?
        } else {
            let idx = curve.arc_indices(j);
            let mut p = Vec::with_capacity(idx.len());
            p.push(fin(m.apply(mark_image(j)?))?);
            for &i in &idx[1..idx.len() - 1] {
                p.push(fin(m.apply(SpherePoint::Finite(straighten(z[i])?)))?);
            }
            p.push(fin(m.apply(mark_image((j + 1) % n)?))?);
            resample_cubic_at(&p, &fractions)
        };
        pts.extend_from_slice(&piece[..piece.len() - 1]);
    }
    if signed_area2(&pts) <= 0.0 {
        return Err(Error::Numerical("straightened curve changed orientation".into()));
    }
    check_simple_points(&pts, true)?;
    CurvePolyline::from_complex(pts, true, marks)
}

/// One straightening step with the welding recomputed from the new curve, pinned at
/// the first three breakpoints of `w`.
pub fn arc_straighten_step(
    curve: &CurvePolyline,
    k: usize,
    w: &WeldingSamples,
    arc_samples: usize,
) -> Result<(CurvePolyline, WeldingSamples)> {
    let b = w
        .breakpoints
        .as_ref()
        .filter(|b| b.x.len() >= 3)
        .ok_or_else(|| Error::InvalidInput("welding needs at least 3 breakpoints".into()))?;
    let pins = WeldPins { indices: None, domain: [b.x[0], b.x[1], b.x[2]], image: [b.y[0], b.y[1], b.y[2]] };
    let next = straighten_arc(curve, k, arc_samples)?;
    let w = welding_with_pins(&next, 0, &pins)?;
    Ok((next, w))
}

/// Best-fit circline of one arc, its sup distance residual and the joint angle at the
/// arc's starting mark.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcFit {
    pub circline: Circline,
    pub residual: f64,
    /// Angle between the incoming and outgoing tangents; π at a smooth joint.
    pub joint_angle: f64,
}

/// Algebraic least-squares circline a|z|² + b·x + c·y + d = 0 through points.
pub fn fit_circline(z: &[C]) -> Result<Circline> {
    if z.len() < 3 {
        return Err(Error::InvalidInput("need at least 3 points".into()));
    }
    let centre = z.iter().sum::<C>() / z.len() as f64;
    let scale = z.iter().map(|p| (p - centre).norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::DegenerateTriple(0, 1));
    }
    let mut a = DMatrix::<f64>::zeros(z.len(), 4);
    for (i, p) in z.iter().enumerate() {
        let q = (p - centre) / scale;
        a[(i, 0)] = q.norm_sqr();
        a[(i, 1)] = q.re;
        a[(i, 2)] = q.im;
        a[(i, 3)] = 1.0;
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let (imin, _) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let v = vt.row(imin);
    let (qa, qb, qc, qd) = (v[0], v[1], v[2], v[3]);
    let lin = (qb * qb + qc * qc).sqrt();
    if qa.abs() < 1e-10 * lin {
        let normal = C::new(qb, qc) / lin;
        let point = centre - normal * (qd / lin) * scale;
        return Ok(Circline::Line { point, direction: normal * C::new(0.0, 1.0) });
    }
    let c = C::new(-qb / (2.0 * qa), -qc / (2.0 * qa));
    let r2 = c.norm_sqr() - qd / qa;
    if !(r2 > 0.0) {
        return Err(Error::Numerical("imaginary circle fit".into()));
    }
    Ok(Circline::Circle { center: centre + c * scale, radius: r2.sqrt() * scale })
}

fn tangent(c: &Circline, p: C, along: C) -> C {
    let t = match *c {
        Circline::Circle { center, .. } => (p - center) * C::new(0.0, 1.0),
        Circline::Line { direction, .. } => direction,
    };
    let t = t / t.norm();
    if (t * along.conj()).re < 0.0 {
        -t
    } else {
        t
    }
}

/// Per-arc circle fits and joint angles of a closed marked curve.
pub fn circular_fit_report(curve: &CurvePolyline) -> Result<Vec<ArcFit>> {
    if !curve.closed || curve.marks.len() < 2 {
        return Err(Error::InvalidInput("need a closed curve with at least 2 marks".into()));
    }
    let z = curve.finite_points()?;
    let n = curve.marks.len();
    let arcs: Vec<Vec<C>> = (0..n).map(|k| curve.arc_indices(k).into_iter().map(|i| z[i]).collect()).collect();
    let fits: Vec<Circline> = arcs.iter().map(|a| fit_circline(a)).collect::<Result<_>>()?;
    Ok((0..n)
        .map(|k| {
            let arc = &arcs[k];
            let prev = &arcs[(k + n - 1) % n];
            let p = arc[0];
            let t_out = tangent(&fits[k], p, arc[1] - p);
            let t_in = tangent(&fits[(k + n - 1) % n], p, p - prev[prev.len() - 2]);
            let turn = (t_out / t_in).arg().abs();
            ArcFit {
                circline: fits[k],
                residual: arc.iter().map(|&q| fits[k].distance(q)).fold(0.0, f64::max),
                joint_angle: PI - turn,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeldSolution {
    pub welding: WeldingSamples,
    pub curve: CurvePolyline,
    /// Loop energy of the initial curve and after every sweep.
    pub energy_trace: Vec<f64>,
    pub fits: Vec<ArcFit>,
    pub sweeps: usize,
    /// Whether the final C¹ piecewise circular solve succeeded.
    pub polished: bool,
    pub converged: bool,
}

fn max_fit_residual(fits: &[ArcFit]) -> f64 {
    fits.iter().map(|f| f.residual).fold(0.0, f64::max)
}

/// Cyclic arc straightening until every arc is circular within `tol`.
pub fn minimize_welding(problem: &WeldProblem) -> Result<WeldSolution> {
    problem.validate()?;
    let mut curve = match &problem.initial_curve {
        Some(c) => c.clone(),
        None => initial_constrained_curve(&problem.x, &problem.y, problem.arc_samples)?,
    };
    let mut welding = welding_with_pins(&curve, 0, &problem.pins())?;
    let mut energy_trace = vec![loop_energy_driving_default(&curve, 0)?.value];
    let mut fits = circular_fit_report(&curve)?;
    let mut sweeps = 0;
    while sweeps < problem.max_sweeps && max_fit_residual(&fits) >= problem.tol {
        for k in 0..curve.marks.len() {
            let (c, w) = arc_straighten_step(&curve, k, &welding, problem.arc_samples)?;
            curve = c;
            welding = w;
        }
        sweeps += 1;
        energy_trace.push(loop_energy_driving_default(&curve, 0)?.value);
        fits = circular_fit_report(&curve)?;
    }
    let polished = match polish_circular(&curve, &problem.x, &problem.y, problem.arc_samples) {
        Ok(c) => {
            curve = c;
            welding = welding_with_pins(&curve, 0, &problem.pins())?;
            energy_trace.push(loop_energy_driving_default(&curve, 0)?.value);
            fits = circular_fit_report(&curve)?;
            true
        }
        Err(_) => false,
    };
    let converged = max_fit_residual(&fits) < problem.tol;
    Ok(WeldSolution { welding, curve, energy_trace, fits, sweeps, polished, converged })
}

/// Closed curve of circular arcs through `z`, leaving z_0 in direction `tau0` with a
/// continuous tangent at every other mark. Also returns the tangent mismatch at z_0.
pub fn circular_chain(z: &[C], tau0: f64, per_arc: usize) -> Result<(CurvePolyline, f64)> {
    let n = z.len();
    let fr = graded_fractions(per_arc + 1);
    let mut pts = Vec::with_capacity(n * per_arc);
    let mut marks = Vec::with_capacity(n);
    let mut tau = tau0;
    for k in 0..n {
        marks.push(pts.len());
        let (a, b) = (z[k], z[(k + 1) % n]);
        let chord = b - a;
        let alpha = angle_diff(chord.arg(), tau);
        let sa = alpha.sin();
        for &f in &fr[..per_arc] {
            let r = if sa.abs() < 1e-12 { f } else { (alpha * f).sin() / sa };
            pts.push(a + C::from_polar(chord.norm() * r, tau + alpha * f));
        }
        tau += 2.0 * alpha;
    }
    check_simple_points(&pts, true)?;
    Ok((CurvePolyline::from_complex(pts, true, marks)?, angle_diff(tau, tau0)))
}

/// Nearby C¹ piecewise circular curve meeting the welding constraints. Marks 0, 1, 2
/// stay fixed; the remaining marks and the tangent at mark 0 are solved for.
fn polish_circular(curve: &CurvePolyline, x: &[f64], y: &[f64], per_arc: usize) -> Result<CurvePolyline> {
    let n = x.len();
    let z = curve.finite_points()?;
    let marks: Vec<C> = curve.marks.iter().map(|&m| z[m]).collect();
    let arc0 = curve.arc_indices(0);
    let (a, mid, b) = (z[arc0[0]], z[arc0[arc0.len() / 2]], z[*arc0.last().unwrap()]);
    let tau0 = (b - a).arg() - ((b - mid) / (mid - a)).arg();
    let mut p: Vec<f64> = marks[3..].iter().flat_map(|w| [w.re, w.im]).collect();
    p.push(tau0);
    let build = |p: &[f64]| -> Result<(CurvePolyline, Vec<f64>)> {
        let mut w = marks[..3].to_vec();
        w.extend((3..n).map(|k| C::new(p[2 * (k - 3)], p[2 * (k - 3) + 1])));
        let (c, closure) = circular_chain(&w, p[p.len() - 1], per_arc)?;
        if signed_area2(&c.finite_points()?) <= 0.0 {
            return Err(Error::Numerical("circular chain is clockwise".into()));
        }
        let mut r = vec![closure];
        r.extend(constraint_residual(&c, x, y)?);
        Ok((c, r))
    };
    let (_, c, r) = least_squares(p, build)?;
    let worst = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if worst > 1e-6 {
        return Err(Error::Numerical(format!("circular polish stalled at {worst:.3e}")));
    }
    Ok(c)
}
