//! Geodesic zipper: composition of hydrodynamically normalized circular-arc slit maps.

use crate::confmap::Elementary;
use crate::error::{Error, Result};
use crate::mobius::MobiusComplex;
use num_complex::Complex64;

type C = Complex64;

/// Square root with Im ≥ 0; on the cut the sign follows `tie`.
#[inline]
pub(crate) fn hsqrt(u: C, tie: f64) -> C {
    let s = u.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && s.re * tie < 0.0) {
        -s
    } else {
        s
    }
}

/// Normalized map removing the arc of the circle orthogonal to ℝ at 0 that ends at `a`.
/// It fixes ∞ with g(z) = z + 2dt/z + O(z⁻²) and sends the tip to `dw`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct GeoStep {
    beta: f64,
    c2: f64,
    m2: [f64; 4],
    pub dt: f64,
    pub dw: f64,
}

impl GeoStep {
    pub fn new(a: C) -> GeoStep {
        let (x, y) = (a.re, a.im);
        let n2 = a.norm_sqr();
        let beta = x / n2;
        let c = n2 / y;
        let q = x / y;
        let r = (1.0 + q * q).sqrt();
        let k1 = 1.5 * q * c;
        let k2 = 1.0 + 1.5 * q * q;
        GeoStep {
            beta,
            c2: c * c,
            m2: [k2, r * k1, beta * r * r, r * r * r],
            dt: (x * x + 2.0 * y * y) / 8.0,
            dw: 1.5 * x,
        }
    }

    #[inline]
    fn outer(&self, v: C) -> C {
        (v * self.m2[0] + self.m2[1]) / (v * self.m2[2] + self.m2[3])
    }

    #[inline]
    fn outer_real(&self, v: f64) -> f64 {
        (self.m2[0] * v + self.m2[1]) / (self.m2[2] * v + self.m2[3])
    }

    /// Point of the slit domain (relative to the base) to ℍ.
    #[inline]
    pub fn apply(&self, z: C) -> C {
        let w = z / (1.0 - self.beta * z);
        let v = hsqrt(w * w + self.c2, w.re);
        self.outer(v)
    }

    /// Real point other than the base.
    #[inline]
    pub fn apply_real(&self, x: f64) -> f64 {
        let w = x / (1.0 - self.beta * x);
        if w.is_infinite() {
            return self.m2[0] / self.m2[2];
        }
        let v = (w * w + self.c2).sqrt().copysign(w);
        self.outer_real(v)
    }

    /// Images of the base point from its left and right sides.
    pub fn base_split(&self) -> (f64, f64) {
        let c = self.c2.sqrt();
        (self.outer_real(-c), self.outer_real(c))
    }

    /// The step as elementary maps, conjugated by the translation to `base`.
    pub fn elementary(&self, base: f64) -> [Elementary; 3] {
        let t = C::new(base, 0.0);
        let m1 = MobiusComplex::normalized_unchecked(
            C::new(1.0, 0.0),
            -t,
            C::new(-self.beta, 0.0),
            C::new(1.0 + self.beta * base, 0.0),
        );
        let m = self.m2;
        let m2 = MobiusComplex::normalized_unchecked(
            C::new(m[0] + base * m[2], 0.0),
            C::new(m[1] + base * m[3], 0.0),
            C::new(m[2], 0.0),
            C::new(m[3], 0.0),
        );
        [Elementary::Mobius(m1), Elementary::SlitSqrt(self.c2), Elementary::Mobius(m2)]
    }
}

/// Result of unzipping a chain of points in ℍ starting from a base on ℝ.
#[derive(Clone, Debug, Default)]
pub(crate) struct Unzipped {
    pub chain: Vec<Elementary>,
    /// Driving value after each step.
    pub w: Vec<f64>,
    /// Capacity increment of each step.
    pub dt: Vec<f64>,
    /// Boundary images of the base and processed points, left side.
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// Unzips `pts` (images in ℍ of the points after the base, in order).
/// `index_offset` is the index of `pts[0]` in the caller's numbering, for error reports.
/// When `track` is false the boundary images are not maintained.
pub(crate) fn unzip_chordal(
    pts: &mut [C],
    base: f64,
    index_offset: usize,
    track: bool,
) -> Result<Unzipped> {
    let m = pts.len();
    let mut out = Unzipped {
        chain: Vec::with_capacity(3 * m),
        w: Vec::with_capacity(m),
        dt: Vec::with_capacity(m),
        left: vec![base; if track { m + 1 } else { 0 }],
        right: vec![base; if track { m + 1 } else { 0 }],
    };
    let mut w = base;
    for j in 0..m {
        let a = pts[j] - w;
        let scale = a.norm().max(1e-300);
        if !(a.im > 1e-14 * scale) || !a.re.is_finite() {
            return Err(Error::TipLeftHalfPlane { index: j + index_offset, imag: a.im });
        }
        let step = GeoStep::new(a);
        if track {
            for k in 0..j {
                out.left[k] = w + step.apply_real(out.left[k] - w);
                out.right[k] = w + step.apply_real(out.right[k] - w);
            }
            let (l, r) = step.base_split();
            out.left[j] = w + l;
            out.right[j] = w + r;
        }
        for q in pts[j + 1..].iter_mut() {
            *q = w + step.apply(*q - w);
        }
        for e in step.elementary(w) {
            push_merged(&mut out.chain, e);
        }
        w += step.dw;
        out.w.push(w);
        out.dt.push(step.dt);
    }
    if track {
        out.left[m] = w;
        out.right[m] = w;
    }
    Ok(out)
}

/// Appends a map, merging consecutive Möbius factors.
pub(crate) fn push_merged(chain: &mut Vec<Elementary>, e: Elementary) {
    if let Elementary::Mobius(m) = e {
        if let Some(Elementary::Mobius(prev)) = chain.last_mut() {
            *prev = m.compose(prev);
            return;
        }
    }
    chain.push(e);
}

/// Möbius map sending `head` to 0 and `tail` to ∞. With a third point of the curve
/// nearby, the circle through the three points goes to ℝ with the third point on ℝ₊,
/// so the arc from `tail` to `head` avoiding it maps to ℝ₋; otherwise the segment does.
pub(crate) fn opening_mobius(tail: C, head: C, third: Option<C>) -> MobiusComplex {
    let one = C::new(1.0, 0.0);
    let mut lambda = one;
    if let Some(n) = third {
        let t = (n - head) / (n - tail);
        if t.norm() > 0.0 && t.norm().is_finite() {
            lambda = t.conj() / t.norm();
        }
    }
    MobiusComplex::normalized_unchecked(lambda, -lambda * head, one, -tail)
}

/// Third point for the opening circle when the turn between the two segments is mild.
fn mild_turn(first: C, second: C, third: C, before: bool) -> Option<C> {
    let (u, v) = if before { (second - first, first - third) } else { (second - first, third - second) };
    ((v * u.conj()).re > 0.0).then_some(third)
}

/// Opening map of the first segment: Möbius followed by the upper square root.
pub(crate) fn opening(tail: C, head: C, next: Option<C>) -> [Elementary; 2] {
    [Elementary::Mobius(opening_mobius(tail, head, next)), Elementary::UpperSqrt(-1.0)]
}

/// Zipper of a closed polygon z_0..z_{N-1}. The forward chain maps the left side of
/// the curve onto ℍ and the right side onto ℍ*, with z_0 ↦ ∞ and z_{N-1} ↦ 0.
#[derive(Clone, Debug)]
pub(crate) struct ClosedZip {
    pub chain: Vec<Elementary>,
    /// Boundary images of z_1..z_{N-1} from the left and right sides.
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

pub(crate) fn zip_closed(z: &[C], track: bool) -> Result<ClosedZip> {
    let n = z.len();
    if n < 3 {
        return Err(Error::InvalidInput("closed curve needs at least 3 points".into()));
    }
    let open = opening(z[0], z[1], mild_turn(z[0], z[1], z[n - 1], true));
    let mut chain = Vec::with_capacity(3 * n);
    for e in open {
        push_merged(&mut chain, e);
    }
    let mut pts: Vec<C> = z[2..].iter().map(|&p| eval_elems(&open, p)).collect();
    let un = unzip_chordal(&mut pts, 0.0, 2, track)?;
    for e in un.chain {
        push_merged(&mut chain, e);
    }
    let wf = *un.w.last().unwrap_or(&0.0);
    push_merged(&mut chain, Elementary::Mobius(MobiusComplex::translation(C::new(-wf, 0.0))));
    chain.push(Elementary::Square(-1.0));
    let fin = |x: f64| -(x - wf) * (x - wf);
    Ok(ClosedZip {
        chain,
        left: un.left.iter().map(|&x| fin(x)).collect(),
        right: un.right.iter().map(|&x| fin(x)).collect(),
    })
}

/// Zipper of an open arc p_0..p_m: the forward chain maps Ĉ∖arc onto ℍ with
/// p_0 ↦ 0 and p_m ↦ ∞.
pub(crate) fn zip_arc(p: &[C]) -> Result<Vec<Elementary>> {
    let m = p.len();
    if m < 2 {
        return Err(Error::InvalidInput("arc needs at least 2 points".into()));
    }
    let open = opening(p[0], p[1], p.get(2).and_then(|&q| mild_turn(p[0], p[1], q, false)));
    let mut chain = Vec::with_capacity(3 * m);
    for e in open {
        push_merged(&mut chain, e);
    }
    let mut pts: Vec<C> = p[2..].iter().map(|&q| eval_elems(&open, q)).collect();
    let un = unzip_chordal(&mut pts, 0.0, 2, false)?;
    for e in un.chain {
        push_merged(&mut chain, e);
    }
    let wf = *un.w.last().unwrap_or(&0.0);
    let one = C::new(1.0, 0.0);
    push_merged(
        &mut chain,
        Elementary::Mobius(MobiusComplex::normalized_unchecked(
            C::new(0.0, 0.0),
            -one,
            one,
            C::new(-wf, 0.0),
        )),
    );
    Ok(chain)
}

fn eval_elems(chain: &[Elementary], z: C) -> C {
    chain.iter().fold(z, |acc, e| e.eval_unchecked(acc))
}
