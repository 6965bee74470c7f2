use crate::error::{Error, Result};
use crate::mobius::MobiusComplex;
use crate::sphere::{chordal_c, SpherePoint};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C = Complex64;

/// Ordered sample of a Jordan curve or arc, with marked point indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePolyline {
    pub points: Vec<SpherePoint>,
    pub closed: bool,
    pub marks: Vec<usize>,
}

impl CurvePolyline {
    pub fn new(points: Vec<SpherePoint>, closed: bool, marks: Vec<usize>) -> Result<Self> {
        let c = CurvePolyline { points, closed, marks };
        c.validate()?;
        Ok(c)
    }

    pub fn from_complex(points: Vec<C>, closed: bool, marks: Vec<usize>) -> Result<Self> {
        Self::new(points.into_iter().map(SpherePoint::Finite).collect(), closed, marks)
    }

    /// Checks sizes, distinct consecutive points and mark indices (not simplicity).
    pub fn validate(&self) -> Result<()> {
        let n = self.points.len();
        let min = if self.closed { 3 } else { 2 };
        if n < min {
            return Err(Error::InvalidInput(format!("curve needs at least {min} points, got {n}")));
        }
        for (i, p) in self.points.iter().enumerate() {
            if let SpherePoint::Finite(z) = p {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::InvalidInput(format!("point {i} is not finite")));
                }
            }
        }
        let segs = if self.closed { n } else { n - 1 };
        for i in 0..segs {
            let j = (i + 1) % n;
            if self.points[i].chordal(&self.points[j]) < 1e-14 {
                return Err(Error::InvalidInput(format!("points {i} and {j} coincide")));
            }
        }
        for w in self.marks.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidInput("marks must be strictly increasing".into()));
            }
        }
        if let Some(&m) = self.marks.last() {
            if m >= n {
                return Err(Error::InvalidInput(format!("mark {m} out of range")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn has_infinity(&self) -> bool {
        self.points.iter().any(|p| p.is_infinite())
    }

    /// Finite coordinates, or an error if the curve passes through ∞.
    pub fn finite_points(&self) -> Result<Vec<C>> {
        self.points
            .iter()
            .map(|p| p.finite().ok_or_else(|| Error::InvalidInput("curve passes through ∞".into())))
            .collect()
    }

    pub fn mark_point(&self, k: usize) -> SpherePoint {
        self.points[self.marks[k]]
    }

    /// Segment-pair intersection test at sampling resolution.
    pub fn check_simple(&self) -> Result<()> {
        let (z, _) = self.finite_frame();
        check_simple_points(&z, self.closed)
    }

    /// Finite copy of the points; when the curve passes through ∞ a Möbius map moving ∞
    /// off the curve is applied and returned.
    pub fn finite_frame(&self) -> (Vec<C>, MobiusComplex) {
        if !self.has_infinity() {
            return (self.points.iter().map(|p| p.finite().unwrap()).collect(), MobiusComplex::identity());
        }
        let m = far_inversion(&self.points);
        let z = self.points.iter().map(|p| m.apply(*p).finite().unwrap()).collect();
        (z, m)
    }

    /// Twice the signed area of a finite closed polygon (positive when counterclockwise).
    pub fn signed_area2(&self) -> Result<f64> {
        Ok(signed_area2(&self.finite_points()?))
    }

    pub fn transformed(&self, m: &MobiusComplex) -> CurvePolyline {
        CurvePolyline {
            points: self.points.iter().map(|p| m.apply(*p)).collect(),
            closed: self.closed,
            marks: self.marks.clone(),
        }
    }

    /// Same closed curve traversed backwards, keeping point 0 first.
    pub fn reversed(&self) -> CurvePolyline {
        let n = self.points.len();
        if self.closed {
            let points = (0..n).map(|i| self.points[(n - i) % n]).collect();
            let mut marks: Vec<usize> = self.marks.iter().map(|&m| (n - m) % n).collect();
            marks.sort_unstable();
            CurvePolyline { points, closed: true, marks }
        } else {
            let points = self.points.iter().rev().copied().collect();
            let mut marks: Vec<usize> = self.marks.iter().map(|&m| n - 1 - m).collect();
            marks.sort_unstable();
            CurvePolyline { points, closed: false, marks }
        }
    }

    /// Closed curve starting at point `start`.
    pub fn rotated(&self, start: usize) -> CurvePolyline {
        let n = self.points.len();
        let points = (0..n).map(|i| self.points[(i + start) % n]).collect();
        let mut marks: Vec<usize> = self.marks.iter().map(|&m| (m + n - start) % n).collect();
        marks.sort_unstable();
        CurvePolyline { points, closed: self.closed, marks }
    }

    /// Number of arcs between consecutive marks.
    pub fn arc_count(&self) -> usize {
        if self.closed {
            self.marks.len()
        } else {
            self.marks.len().saturating_sub(1)
        }
    }

    /// Point indices of arc k, from mark k to mark k+1 inclusive (cyclically).
    pub fn arc_indices(&self, k: usize) -> Vec<usize> {
        let n = self.points.len();
        let m = self.marks.len();
        let s = self.marks[k];
        let e = self.marks[(k + 1) % m];
        let len = if self.closed { (e + n - s) % n } else { e - s };
        let len = if len == 0 { n } else { len };
        (0..=len).map(|i| (s + i) % n).collect()
    }

    pub fn arc_points(&self, k: usize) -> Vec<SpherePoint> {
        self.arc_indices(k).into_iter().map(|i| self.points[i]).collect()
    }

    /// Points of the complement of arc k, from mark k+1 around to mark k.
    pub fn rest_indices(&self, k: usize) -> Vec<usize> {
        let m = self.marks.len();
        let n = self.points.len();
        let s = self.marks[(k + 1) % m];
        let e = self.marks[k];
        let len = (e + n - s) % n;
        (0..=len).map(|i| (s + i) % n).collect()
    }

    /// Euclidean arc length of a finite curve.
    pub fn length(&self) -> Result<f64> {
        let z = self.finite_points()?;
        Ok(polyline_length(&z, self.closed))
    }
}

pub(crate) fn polyline_length(z: &[C], closed: bool) -> f64 {
    let mut l: f64 = z.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    if closed && z.len() > 1 {
        l += (z[0] - z[z.len() - 1]).norm();
    }
    l
}

pub(crate) fn signed_area2(z: &[C]) -> f64 {
    let n = z.len();
    (0..n).map(|i| (z[i].conj() * z[(i + 1) % n]).im).sum()
}

/// Inversion z ↦ 1/(z - q) with q far from the finite points.
pub(crate) fn far_inversion(points: &[SpherePoint]) -> MobiusComplex {
    let fin: Vec<C> = points.iter().filter_map(|p| p.finite()).collect();
    let centre = if fin.is_empty() { C::new(0.0, 0.0) } else { fin.iter().sum::<C>() / fin.len() as f64 };
    let scale = fin.iter().map(|z| (z - centre).norm()).fold(1.0, f64::max);
    let mut best = (centre, -1.0);
    for k in 0..64 {
        for r in [0.05, 0.2, 0.5, 1.0] {
            let q = centre + C::from_polar(r * scale, k as f64 * 0.4 + r);
            let d = fin.iter().map(|z| (z - q).norm()).fold(f64::INFINITY, f64::min);
            if d > best.1 {
                best = (q, d);
            }
        }
    }
    let one = C::new(1.0, 0.0);
    MobiusComplex::normalized_unchecked(C::new(0.0, 0.0), one, one, -best.0)
}

fn orient(a: C, b: C, c: C) -> f64 {
    ((b - a).conj() * (c - a)).im
}

fn segments_cross(p1: C, p2: C, q1: C, q2: C) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: C, b: C, c: C, d: f64| {
        d == 0.0 && c.re >= a.re.min(b.re) && c.re <= a.re.max(b.re) && c.im >= a.im.min(b.im) && c.im <= a.im.max(b.im)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Pairwise test of non-adjacent segments, sorted by bounding box.
pub(crate) fn check_simple_points(z: &[C], closed: bool) -> Result<()> {
    let n = z.len();
    let segs = if closed { n } else { n - 1 };
    let mut order: Vec<(f64, f64, usize)> = (0..segs)
        .map(|i| {
            let (a, b) = (z[i], z[(i + 1) % n]);
            (a.re.min(b.re), a.re.max(b.re), i)
        })
        .collect();
    order.sort_by(|u, v| u.0.total_cmp(&v.0));
    for (ia, &(_, hi, i)) in order.iter().enumerate() {
        for &(lo, _, j) in &order[ia + 1..] {
            if lo > hi {
                break;
            }
            let (i, j) = (i.min(j), i.max(j));
            if j == i + 1 || (closed && i == 0 && j == segs - 1) {
                continue;
            }
            if segments_cross(z[i], z[(i + 1) % n], z[j], z[(j + 1) % n]) {
                return Err(Error::SelfIntersection(i, j));
            }
        }
    }
    Ok(())
}

/// Chordal distance from a point to a finite polyline.
pub(crate) fn point_polyline_distance(p: C, poly: &[C], closed: bool) -> f64 {
    let n = poly.len();
    let segs = if closed { n } else { n - 1 };
    let mut best = f64::INFINITY;
    for i in 0..segs {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let ab = b - a;
        let t = if ab.norm_sqr() > 0.0 { (((p - a) * ab.conj()).re / ab.norm_sqr()).clamp(0.0, 1.0) } else { 0.0 };
        best = best.min(chordal_c(p, a + ab * t));
    }
    if n == 1 {
        best = chordal_c(p, poly[0]);
    }
    best
}

/// Hausdorff distance in the chordal metric between two finite polylines.
pub fn hausdorff(a: &[C], a_closed: bool, b: &[C], b_closed: bool) -> f64 {
    let ab = a.iter().map(|&p| point_polyline_distance(p, b, b_closed)).fold(0.0, f64::max);
    let ba = b.iter().map(|&p| point_polyline_distance(p, a, a_closed)).fold(0.0, f64::max);
    ab.max(ba)
}

/// Resamples an open polyline at the given arclength fractions (0 and 1 included).
pub(crate) fn resample_at(z: &[C], fractions: &[f64]) -> Vec<C> {
    let mut cum = Vec::with_capacity(z.len());
    cum.push(0.0);
    for w in z.windows(2) {
        cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(fractions.len());
    let mut seg = 0;
    for &f in fractions {
        let s = f * total;
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 { ((s - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(z[seg] + (z[seg + 1] - z[seg]) * t);
    }
    out
}

/// Like `resample_at` but along the cubic Hermite interpolant in chord length, with
/// three-point tangents.
pub(crate) fn resample_cubic_at(z: &[C], fractions: &[f64]) -> Vec<C> {
    let n = z.len();
    if n < 3 {
        return resample_at(z, fractions);
    }
    let mut cum = Vec::with_capacity(n);
    cum.push(0.0);
    for w in z.windows(2) {
        cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = cum[n - 1];
    let slope = |i: usize| (z[i + 1] - z[i]) / (cum[i + 1] - cum[i]).max(1e-300);
    let mut tan = vec![C::new(0.0, 0.0); n];
    for i in 1..n - 1 {
        let (h0, h1) = (cum[i] - cum[i - 1], cum[i + 1] - cum[i]);
        tan[i] = (slope(i - 1) * h1 + slope(i) * h0) / (h0 + h1).max(1e-300);
    }
    tan[0] = 2.0 * slope(0) - tan[1];
    tan[n - 1] = 2.0 * slope(n - 2) - tan[n - 2];
    let mut out = Vec::with_capacity(fractions.len());
    let mut seg = 0;
    for &f in fractions {
        let s = f * total;
        while seg + 2 < n && cum[seg + 1] < s {
            seg += 1;
        }
        let h = cum[seg + 1] - cum[seg];
        if h <= 0.0 {
            out.push(z[seg]);
            continue;
        }
        let t = ((s - cum[seg]) / h).clamp(0.0, 1.0);
        let (t2, t3) = (t * t, t * t * t);
        out.push(
            z[seg] * (2.0 * t3 - 3.0 * t2 + 1.0)
                + tan[seg] * (h * (t3 - 2.0 * t2 + t))
                + z[seg + 1] * (3.0 * t2 - 2.0 * t3)
                + tan[seg + 1] * (h * (t3 - t2)),
        );
    }
    out
}

/// Closed curve resampled to about `n` points by arclength, keeping marks as vertices.
pub fn resample_closed(curve: &CurvePolyline, n: usize) -> Result<CurvePolyline> {
    let z = curve.finite_points()?;
    let total = polyline_length(&z, true);
    let marks = if curve.marks.is_empty() { vec![0] } else { curve.marks.clone() };
    let tmp = CurvePolyline { points: curve.points.clone(), closed: true, marks: marks.clone() };
    let mut points = Vec::with_capacity(n);
    let mut new_marks = Vec::new();
    for k in 0..marks.len() {
        let idx = tmp.arc_indices(k);
        let arc: Vec<C> = idx.iter().map(|&i| z[i]).collect();
        let len = polyline_length(&arc, false);
        let m = ((n as f64 * len / total).round() as usize).max(2);
        let fr: Vec<f64> = (0..m).map(|i| i as f64 / m as f64).collect();
        new_marks.push(points.len());
        points.extend(resample_at(&arc, &fr).into_iter().map(SpherePoint::Finite));
    }
    let out = CurvePolyline { points, closed: true, marks: new_marks };
    if curve.marks.is_empty() {
        return Ok(CurvePolyline { marks: vec![], ..out });
    }
    let shift = out.marks[0];
    Ok(if shift == 0 { out } else { out.rotated(shift) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn circle(n: usize) -> Vec<C> {
        (0..n).map(|k| C::from_polar(1.0, TAU * k as f64 / n as f64)).collect()
    }

    #[test]
    fn simplicity() {
        assert!(check_simple_points(&circle(50), true).is_ok());
        let bow = vec![C::new(0.0, 0.0), C::new(1.0, 1.0), C::new(1.0, 0.0), C::new(0.0, 1.0)];
        assert!(matches!(check_simple_points(&bow, true), Err(Error::SelfIntersection(0, 2))));
    }

    #[test]
    fn reverse_and_rotate_keep_marks() {
        let c = CurvePolyline::from_complex(circle(8), true, vec![0, 2, 5]).unwrap();
        let r = c.reversed();
        assert_eq!(r.marks, vec![0, 3, 6]);
        assert_eq!(r.points[3], c.points[5]);
        let s = c.rotated(2);
        assert_eq!(s.marks, vec![0, 3, 6]);
        assert_eq!(s.points[0], c.points[2]);
        assert_eq!(c.arc_indices(2), vec![5, 6, 7, 0]);
        assert_eq!(c.rest_indices(0), vec![2, 3, 4, 5, 6, 7, 0]);
    }

    #[test]
    fn hausdorff_of_circles() {
        let a = circle(400);
        let b: Vec<C> = a.iter().map(|z| z * 1.01).collect();
        let h = hausdorff(&a, true, &b, true);
        assert!((h - 0.01).abs() < 1e-3);
    }

    #[test]
    fn resample_keeps_marks() {
        let c = CurvePolyline::from_complex(circle(40), true, vec![0, 10, 20, 30]).unwrap();
        let r = resample_closed(&c, 100).unwrap();
        for (k, &m) in r.marks.iter().enumerate() {
            assert_eq!(r.points[m], c.points[c.marks[k]]);
        }
        assert_eq!(r.len(), 100);
    }
}
