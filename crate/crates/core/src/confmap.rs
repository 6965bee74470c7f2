use crate::curve::{check_simple_points, signed_area2, CurvePolyline};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::mobius::MobiusComplex;
use crate::sphere::SpherePoint;
use crate::zipper::{hsqrt, push_merged, zip_arc, zip_closed};
use num_complex::Complex64;

type C = Complex64;

const CUT_TOL: f64 = 1e-12;

/// Invertible conformal building block of a chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Elementary {
    Mobius(MobiusComplex),
    /// w ↦ √(w² + s) on ℍ, with the root taken in the closed upper half-plane.
    SlitSqrt(f64),
    /// w ↦ σ w².
    Square(f64),
    /// ζ ↦ √(σ ζ) with Im ≥ 0; the cut is σζ ∈ [0, ∞).
    UpperSqrt(f64),
}

impl Elementary {
    pub fn inverse(&self) -> Elementary {
        match *self {
            Elementary::Mobius(m) => Elementary::Mobius(m.inverse()),
            Elementary::SlitSqrt(s) => Elementary::SlitSqrt(-s),
            Elementary::Square(s) => Elementary::UpperSqrt(s),
            Elementary::UpperSqrt(s) => Elementary::Square(s),
        }
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, z: C) -> C {
        match *self {
            Elementary::Mobius(m) => m.apply_c(z),
            Elementary::SlitSqrt(s) => hsqrt(z * z + s, z.re),
            Elementary::Square(s) => z * z * s,
            Elementary::UpperSqrt(s) => hsqrt(z * s, 1.0),
        }
    }

    fn check(&self, z: C) -> Result<()> {
        match *self {
            Elementary::SlitSqrt(_) if z.im < -CUT_TOL * (1.0 + z.norm()) => {
                Err(Error::BranchViolation { map: "slit square root", re: z.re, im: z.im })
            }
            Elementary::UpperSqrt(s) => {
                let u = z * s;
                if u.re > 0.0 && u.im.abs() <= CUT_TOL * u.norm() {
                    Err(Error::BranchViolation { map: "upper square root", re: z.re, im: z.im })
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, z: C) -> Result<C> {
        self.check(z)?;
        Ok(self.eval_unchecked(z))
    }

    /// Value and first three derivatives at z.
    #[inline]
    pub fn derivs(&self, z: C) -> Result<[C; 4]> {
        self.check(z)?;
        Ok(match *self {
            Elementary::Mobius(m) => {
                let inv = 1.0 / (m.c * z + m.d);
                let det = m.det();
                let d1 = det * inv * inv;
                [(m.a * z + m.b) * inv, d1, -2.0 * m.c * d1 * inv, 6.0 * m.c * m.c * d1 * inv * inv]
            }
            Elementary::SlitSqrt(s) => {
                let f = hsqrt(z * z + s, z.re);
                let fi = 1.0 / f;
                let f3 = fi * fi * fi;
                [f, z * fi, s * f3, -3.0 * s * z * f3 * fi * fi]
            }
            Elementary::Square(s) => [z * z * s, z * (2.0 * s), C::new(2.0 * s, 0.0), C::new(0.0, 0.0)],
            Elementary::UpperSqrt(s) => {
                let f = hsqrt(z * s, 1.0);
                let fi = 1.0 / f;
                let f3 = fi * fi * fi;
                [f, 0.5 * s * fi, -0.25 * f3, 0.375 * s * f3 * fi * fi]
            }
        })
    }

    pub fn apply_sphere(&self, p: SpherePoint) -> Result<SpherePoint> {
        match (self, p) {
            (Elementary::Mobius(m), _) => Ok(m.apply(p)),
            (_, SpherePoint::Infinity) => Ok(SpherePoint::Infinity),
            (_, SpherePoint::Finite(z)) => Ok(SpherePoint::from_complex(self.eval(z)?)),
        }
    }
}

/// Conformal map given as a composition of elementary maps, applied first to last.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ConformalChart {
    maps: Vec<Elementary>,
}

impl ConformalChart {
    pub fn identity() -> Self {
        ConformalChart { maps: Vec::new() }
    }

    pub fn from_maps(maps: Vec<Elementary>) -> Self {
        let mut out = Vec::with_capacity(maps.len());
        for m in maps {
            push_merged(&mut out, m);
        }
        ConformalChart { maps: out }
    }

    pub fn mobius(m: MobiusComplex) -> Self {
        ConformalChart { maps: vec![Elementary::Mobius(m)] }
    }

    pub fn maps(&self) -> &[Elementary] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Post-composes with `e`.
    pub fn then(mut self, e: Elementary) -> Self {
        push_merged(&mut self.maps, e);
        self
    }

    /// Pre-composes with `m`.
    pub fn after(self, m: MobiusComplex) -> Self {
        let mut maps = Vec::with_capacity(self.maps.len() + 1);
        maps.push(Elementary::Mobius(m));
        maps.extend(self.maps);
        Self::from_maps(maps)
    }

    /// self followed by other.
    pub fn compose_with(mut self, other: &ConformalChart) -> Self {
        for &e in &other.maps {
            push_merged(&mut self.maps, e);
        }
        self
    }

    pub fn inverse(&self) -> ConformalChart {
        ConformalChart { maps: self.maps.iter().rev().map(|e| e.inverse()).collect() }
    }

    pub fn eval(&self, z: C) -> Result<C> {
        let mut v = z;
        for e in &self.maps {
            v = e.eval(v)?;
        }
        Ok(v)
    }

    pub fn jet(&self, z: C) -> Result<Jet> {
        let mut j = Jet::identity(z);
        for e in &self.maps {
            j = j.chain(e.derivs(j.v)?);
        }
        Ok(j)
    }

    pub fn apply(&self, p: SpherePoint) -> Result<SpherePoint> {
        let mut v = p;
        for e in &self.maps {
            v = e.apply_sphere(v)?;
        }
        Ok(v)
    }

    pub fn derivative(&self, z: C) -> Result<C> {
        Ok(self.jet(z)?.d1)
    }
}

fn check_chart_arc(arc: &CurvePolyline) -> Result<()> {
    if arc.closed {
        return Err(Error::InvalidInput("expected an open arc".into()));
    }
    arc.validate()?;
    if arc.points[0].chordal(&arc.points[arc.len() - 1]) < 1e-12 {
        return Err(Error::InvalidInput("arc endpoints coincide".into()));
    }
    arc.check_simple()
}

/// Chart from Ĉ∖arc onto ℍ sending the tail to 0 and the head to ∞.
pub fn map_arc_complement(arc: &CurvePolyline) -> Result<ConformalChart> {
    check_chart_arc(arc)?;
    let (z, pre) = arc.finite_frame();
    let chain = zip_arc(&z)?;
    let chart = ConformalChart { maps: chain };
    Ok(if pre == MobiusComplex::identity() { chart } else { chart.after(pre) })
}

/// Disk charts of a closed curve and the zipper they come from.
#[derive(Clone, Debug)]
pub struct DiskCharts {
    /// 𝔻 → bounded side, f(0) = `center`.
    pub f: ConformalChart,
    /// 𝔻* → unbounded side, g(∞) = ∞.
    pub g: ConformalChart,
    /// Interior point used as f(0).
    pub center: C,
    /// Zipper map of the counterclockwise curve: bounded side → ℍ.
    pub zipper: ConformalChart,
    /// Whether the input had to be reversed to make it counterclockwise.
    pub reversed: bool,
}

/// Möbius map of 𝔻 onto the half-plane containing q, with 0 ↦ q.
pub(crate) fn disk_to_half_plane(q: C) -> MobiusComplex {
    let one = C::new(1.0, 0.0);
    MobiusComplex::normalized_unchecked(-q.conj(), q, -one, one)
}

pub(crate) fn oriented_points(curve: &CurvePolyline) -> Result<(Vec<C>, bool)> {
    if !curve.closed {
        return Err(Error::InvalidInput("expected a closed curve".into()));
    }
    curve.validate()?;
    let z = curve.finite_points()?;
    check_simple_points(&z, true)?;
    let area = signed_area2(&z);
    if area > 0.0 {
        Ok((z, false))
    } else {
        let n = z.len();
        Ok(((0..n).map(|i| z[(n - i) % n]).collect(), true))
    }
}

/// Interior point of a counterclockwise polygon, far from the boundary.
pub(crate) fn interior_point(z: &[C], zip: &ConformalChart) -> C {
    let n = z.len() as f64;
    let centroid = z.iter().sum::<C>() / n;
    if winding_inside(z, centroid) {
        return centroid;
    }
    zip.inverse().eval(C::new(0.0, 1.0)).unwrap_or(centroid)
}

pub(crate) fn winding_inside(z: &[C], p: C) -> bool {
    let n = z.len();
    let mut total = 0.0;
    for i in 0..n {
        total += ((z[(i + 1) % n] - p) / (z[i] - p)).arg();
    }
    total.abs() > std::f64::consts::PI
}

/// f: 𝔻 → Ω (bounded side) and g: 𝔻* → Ω* with g(∞) = ∞, from one zipper run.
pub fn disk_charts_from_curve(curve: &CurvePolyline) -> Result<DiskCharts> {
    let (z, reversed) = oriented_points(curve)?;
    let zip = zip_closed(&z, false)?;
    let zipper = ConformalChart { maps: zip.chain };
    let inv = zipper.inverse();
    let center = interior_point(&z, &zipper);
    let q0 = zipper.eval(center)?;
    let qinf = match zipper.apply(SpherePoint::Infinity)? {
        SpherePoint::Finite(q) => q,
        SpherePoint::Infinity => return Err(Error::Chart("∞ is on the curve".into())),
    };
    if !(q0.im > 0.0 && qinf.im < 0.0) {
        return Err(Error::Chart("zipper sides inconsistent with orientation".into()));
    }
    let f = ConformalChart::mobius(disk_to_half_plane(q0)).compose_with(&inv);
    let one = C::new(1.0, 0.0);
    let recip = MobiusComplex::normalized_unchecked(C::new(0.0, 0.0), one, one, C::new(0.0, 0.0));
    let g = ConformalChart::mobius(disk_to_half_plane(qinf)).after(recip).compose_with(&inv);
    Ok(DiskCharts { f, g, center, zipper, reversed })
}

/// Pullback of iℝ₊ under a chart sending a ↦ 0 and b ↦ ∞, sampled geometrically in height.
pub fn hyperbolic_geodesic(
    chart: &ConformalChart,
    a: SpherePoint,
    b: SpherePoint,
    samples: usize,
) -> Result<CurvePolyline> {
    if samples < 3 {
        return Err(Error::InvalidInput("need at least 3 samples".into()));
    }
    let ia = chart.apply(a)?;
    let ib = chart.apply(b)?;
    if ia.chordal(&SpherePoint::new(0.0, 0.0)) > 1e-6 || ib.chordal(&SpherePoint::Infinity) > 1e-6 {
        return Err(Error::Chart("chart does not send the endpoints to 0 and ∞".into()));
    }
    let inv = chart.inverse();
    let inner = samples - 2;
    let span = 8.0f64;
    let mut points = vec![a];
    for k in 0..inner {
        let s = -span + 2.0 * span * (k as f64 + 0.5) / inner as f64;
        let y = 10f64.powf(s);
        points.push(inv.apply(SpherePoint::new(0.0, y))?);
    }
    points.push(b);
    let n = points.len();
    CurvePolyline::new(points, false, vec![0, n - 1])
}

/// Geodesic of the arc complement of `rest` between its endpoints, as finite points,
/// from the head of `rest` back to its tail, resampled by arclength with `budget` points.
pub(crate) fn complement_geodesic(rest: &[C], budget: usize) -> Result<Vec<C>> {
    let chain = ConformalChart { maps: zip_arc(rest)? };
    let inv = chain.inverse();
    // traversed from the head of `rest` (∞) down to its tail (0)
    let dense = 16 * budget;
    let span = 7.0f64;
    let mut pts = Vec::with_capacity(dense + 2);
    let tail = rest[0];
    let head = rest[rest.len() - 1];
    pts.push(head);
    for k in (0..dense).rev() {
        let s = -span + 2.0 * span * (k as f64 + 0.5) / dense as f64;
        let y = 10f64.powf(s);
        pts.push(inv.eval(C::new(0.0, y))?);
    }
    pts.push(tail);
    let fr = clustered_fractions(budget);
    let coarse = crate::curve::resample_at(&pts, &fr);
    // project interior samples back onto the exact geodesic
    let mut out = Vec::with_capacity(coarse.len());
    out.push(head);
    for &p in &coarse[1..coarse.len() - 1] {
        let y = chain.eval(p)?;
        out.push(inv.eval(C::new(0.0, y.norm()))?);
    }
    out.push(tail);
    Ok(out)
}

/// Arclength fractions with mild clustering at both ends.
pub(crate) fn clustered_fractions(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            let c = 0.5 - 0.5 * (std::f64::consts::PI * s).cos();
            0.6 * s + 0.4 * c
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn circle(n: usize, r: f64, centre: C) -> Vec<C> {
        (0..n).map(|k| centre + C::from_polar(r, TAU * k as f64 / n as f64)).collect()
    }

    #[test]
    fn elementary_inverse_round_trip() {
        let m = MobiusComplex::new(c(1.0, 0.5), c(0.2, 0.0), c(0.3, -0.1), c(1.0, 0.0)).unwrap();
        let es = [Elementary::Mobius(m), Elementary::SlitSqrt(2.0), Elementary::SlitSqrt(-0.5)];
        for e in es {
            for z in [c(0.3, 0.7), c(-1.2, 0.1), c(2.0, 3.0)] {
                let w = e.eval(z).unwrap();
                let back = e.inverse().eval(w).unwrap();
                assert!((back - z).norm() < 1e-12, "{e:?} {z} {back}");
            }
        }
        let sq = Elementary::Square(-1.0);
        for z in [c(0.3, 0.7), c(-1.2, 0.1)] {
            let back = sq.inverse().eval(sq.eval(z).unwrap()).unwrap();
            assert!((back - z).norm() < 1e-12);
        }
    }

    #[test]
    fn elementary_derivatives_match_differences() {
        let m = MobiusComplex::new(c(1.0, 0.5), c(0.2, 0.0), c(0.3, -0.1), c(1.0, 0.0)).unwrap();
        let es = [
            Elementary::Mobius(m),
            Elementary::SlitSqrt(2.0),
            Elementary::SlitSqrt(-0.5),
            Elementary::Square(-1.0),
            Elementary::UpperSqrt(-1.0),
            Elementary::UpperSqrt(1.0),
        ];
        let h = 1e-4;
        for e in es {
            let z = c(0.4, 0.8);
            let d = e.derivs(z).unwrap();
            let f = |x: C| e.derivs(x).unwrap();
            let fd1 = (f(z + h)[0] - f(z - h)[0]) / (2.0 * h);
            let fd2 = (f(z + h)[1] - f(z - h)[1]) / (2.0 * h);
            let fd3 = (f(z + h)[2] - f(z - h)[2]) / (2.0 * h);
            assert!((fd1 - d[1]).norm() < 1e-6 * (1.0 + d[1].norm()), "{e:?}");
            assert!((fd2 - d[2]).norm() < 1e-6 * (1.0 + d[2].norm()), "{e:?}");
            assert!((fd3 - d[3]).norm() < 1e-6 * (1.0 + d[3].norm()), "{e:?}");
        }
    }

    #[test]
    fn vertical_segment_complement() {
        let arc = CurvePolyline::from_complex(vec![c(0.0, 0.0), c(0.0, 1.0)], false, vec![0, 1]).unwrap();
        let ch = map_arc_complement(&arc).unwrap();
        assert!(ch.eval(c(0.0, 2.0)).unwrap().re.abs() < 1e-12);
        // agrees with the slit map up to scale and Möbius normalization
        let w = ch.eval(c(0.7, -0.3)).unwrap();
        assert!(w.im > 0.0);
        assert!(ch.apply(SpherePoint::new(0.0, 0.0)).unwrap().chordal(&SpherePoint::new(0.0, 0.0)) < 1e-12);
        assert!(ch.apply(SpherePoint::new(0.0, 1.0)).unwrap().is_infinite());
    }

    #[test]
    fn negative_axis_complement_is_square_root() {
        let mut pts: Vec<SpherePoint> = (0..30).map(|k| SpherePoint::new(-(k as f64), 0.0)).collect();
        pts.push(SpherePoint::Infinity);
        let arc = CurvePolyline::new(pts, false, vec![0, 30]).unwrap();
        let ch = map_arc_complement(&arc).unwrap();
        let base = ch.eval(c(1.0, 0.0)).unwrap() / c(0.0, 1.0);
        for z in [c(2.0, 1.0), c(-3.0, 0.5), c(0.1, -4.0)] {
            let ratio = ch.eval(z).unwrap() / (c(0.0, 1.0) * z.sqrt());
            assert!((ratio - base).norm() < 1e-9 * base.norm(), "{z} {ratio} {base}");
        }
        assert!(base.im.abs() < 1e-9 && base.re > 0.0);
    }

    #[test]
    fn circle_charts_are_mobius() {
        let curve = CurvePolyline::from_complex(circle(64, 1.0, c(0.0, 0.0)), true, vec![0]).unwrap();
        let dc = disk_charts_from_curve(&curve).unwrap();
        for z in [c(0.3, 0.1), c(-0.5, 0.6), c(0.0, -0.9)] {
            let s = dc.f.jet(z).unwrap().schwarzian();
            assert!(s.norm() < 1e-8, "{s}");
            let w = dc.f.eval(z).unwrap();
            assert!((w.norm() - z.norm()).abs() < 1e-10);
            let s = dc.g.jet(1.0 / z).unwrap().schwarzian();
            assert!(s.norm() < 1e-8);
        }
        assert!(dc.g.apply(SpherePoint::Infinity).unwrap().chordal(&SpherePoint::Infinity) < 1e-9);
    }

    #[test]
    fn chart_round_trip_and_difference_derivative() {
        let pts: Vec<C> = (0..200)
            .map(|k| {
                let e = C::from_polar(1.0, TAU * k as f64 / 200.0);
                e + 0.1 * e * e
            })
            .collect();
        let curve = CurvePolyline::from_complex(pts, true, vec![0]).unwrap();
        let dc = disk_charts_from_curve(&curve).unwrap();
        let finv = dc.f.inverse();
        for k in 0..100 {
            let z = C::from_polar(0.9 * ((k % 10) as f64 + 0.5) / 10.0, 0.37 * k as f64);
            let w = dc.f.eval(z).unwrap();
            assert!((finv.eval(w).unwrap() - z).norm() < 1e-9);
            let h = 1e-5;
            let fd = (dc.f.eval(z + h).unwrap() - dc.f.eval(z - h).unwrap()) / (2.0 * h);
            let d = dc.f.derivative(z).unwrap();
            assert!((fd - d).norm() < 1e-5 * d.norm());
        }
    }

    #[test]
    fn geodesics_in_half_plane() {
        let id = ConformalChart::identity();
        let g = hyperbolic_geodesic(&id, SpherePoint::new(0.0, 0.0), SpherePoint::Infinity, 20).unwrap();
        assert!(g.points.iter().filter_map(|p| p.finite()).all(|z| z.re.abs() < 1e-14));
        let m = MobiusComplex::new(c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)).unwrap();
        let g = hyperbolic_geodesic(&ConformalChart::mobius(m), SpherePoint::new(-1.0, 0.0), SpherePoint::new(1.0, 0.0), 30)
            .unwrap();
        for p in &g.points {
            let z = p.finite().unwrap();
            assert!((z.norm() - 1.0).abs() < 1e-12 && z.im >= 0.0);
        }
    }
}
