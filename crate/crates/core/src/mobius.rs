use crate::error::{Error, Result};
use crate::sphere::SpherePoint;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

type C = Complex64;

const DEGENERATE_TOL: f64 = 1e-14;

/// Wraps an angle into [0, 2π).
pub fn wrap_angle(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed difference a - b wrapped to (-π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Boundary coordinate x ∈ ℝ of an angle, through e^{iθ} = (x - i)/(x + i).
/// Returns infinity for θ = 0.
pub fn angle_to_real(theta: f64) -> f64 {
    let s = (theta / 2.0).sin();
    if s == 0.0 {
        f64::INFINITY
    } else {
        -(theta / 2.0).cos() / s
    }
}

pub fn real_to_angle(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    wrap_angle(2.0 * 1.0f64.atan2(-x))
}

/// Unit projective vector (u, v) with x = u / v.
pub fn angle_to_vector(theta: f64) -> [f64; 2] {
    [(theta / 2.0).cos(), -(theta / 2.0).sin()]
}

pub fn vector_to_angle(v: [f64; 2]) -> f64 {
    wrap_angle(2.0 * (-v[1]).atan2(v[0]))
}

/// Möbius map of the sphere with ad - bc = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusComplex {
    pub a: C,
    pub b: C,
    pub c: C,
    pub d: C,
}

impl MobiusComplex {
    pub fn identity() -> Self {
        let one = C::new(1.0, 0.0);
        let zero = C::new(0.0, 0.0);
        MobiusComplex { a: one, b: zero, c: zero, d: one }
    }

    pub fn new(a: C, b: C, c: C, d: C) -> Result<Self> {
        let det = a * d - b * c;
        let scale = a.norm().max(b.norm()).max(c.norm()).max(d.norm());
        if !(det.norm() > 1e-300) || det.norm() <= 1e-15 * scale * scale {
            return Err(Error::InvalidInput("singular Möbius matrix".into()));
        }
        Ok(Self::normalized_unchecked(a, b, c, d))
    }

    /// Normalizes without checking the determinant.
    pub(crate) fn normalized_unchecked(a: C, b: C, c: C, d: C) -> Self {
        let s = (a * d - b * c).sqrt();
        let mut m = MobiusComplex { a: a / s, b: b / s, c: c / s, d: d / s };
        for e in [m.a, m.b, m.c, m.d] {
            if e.norm() > 0.0 {
                if e.re < 0.0 || (e.re == 0.0 && e.im < 0.0) {
                    m = MobiusComplex { a: -m.a, b: -m.b, c: -m.c, d: -m.d };
                }
                break;
            }
        }
        m
    }

    pub fn from_real(m: &MobiusReal) -> Self {
        MobiusComplex {
            a: C::new(m.a, 0.0),
            b: C::new(m.b, 0.0),
            c: C::new(m.c, 0.0),
            d: C::new(m.d, 0.0),
        }
    }

    pub fn det(&self) -> C {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, z: SpherePoint) -> SpherePoint {
        match z {
            SpherePoint::Infinity => {
                if self.c.norm() == 0.0 {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::Finite(self.a / self.c)
                }
            }
            SpherePoint::Finite(z) => {
                let den = self.c * z + self.d;
                if den.norm() == 0.0 {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::from_complex((self.a * z + self.b) / den)
                }
            }
        }
    }

    /// Finite-arithmetic evaluation; poles give non-finite values.
    #[inline]
    pub fn apply_c(&self, z: C) -> C {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    pub fn derivative(&self, z: C) -> C {
        let den = self.c * z + self.d;
        self.det() / (den * den)
    }

    /// self ∘ other
    pub fn compose(&self, o: &MobiusComplex) -> MobiusComplex {
        Self::normalized_unchecked(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn inverse(&self) -> MobiusComplex {
        Self::normalized_unchecked(self.d, -self.b, -self.c, self.a)
    }

    /// Map sending p1, p2, p3 to 0, 1, ∞.
    fn to_standard(p: [SpherePoint; 3]) -> Result<MobiusComplex> {
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            if p[i].chordal(&p[j]) < DEGENERATE_TOL {
                return Err(Error::DegenerateTriple(i, j));
            }
        }
        let one = C::new(1.0, 0.0);
        let zero = C::new(0.0, 0.0);
        // z ↦ (z - p1)(p2 - p3) / ((z - p3)(p2 - p1)) with the obvious limits at ∞
        let (a, b, c, d) = match (p[0], p[1], p[2]) {
            (SpherePoint::Infinity, SpherePoint::Finite(p2), SpherePoint::Finite(p3)) => {
                (zero, p2 - p3, one, -p3)
            }
            (SpherePoint::Finite(p1), SpherePoint::Infinity, SpherePoint::Finite(p3)) => {
                (one, -p1, one, -p3)
            }
            (SpherePoint::Finite(p1), SpherePoint::Finite(p2), SpherePoint::Infinity) => {
                (one, -p1, zero, p2 - p1)
            }
            (SpherePoint::Finite(p1), SpherePoint::Finite(p2), SpherePoint::Finite(p3)) => {
                (p2 - p3, -p1 * (p2 - p3), p2 - p1, -p3 * (p2 - p1))
            }
            _ => unreachable!(),
        };
        Ok(Self::normalized_unchecked(a, b, c, d))
    }

    /// Unique Möbius map with m(p_i) = q_i.
    pub fn from_triple(p: [SpherePoint; 3], q: [SpherePoint; 3]) -> Result<MobiusComplex> {
        let mp = Self::to_standard(p)?;
        let mq = Self::to_standard(q).map_err(|e| match e {
            Error::DegenerateTriple(i, j) => Error::DegenerateTriple(i + 3, j + 3),
            e => e,
        })?;
        Ok(mq.inverse().compose(&mp))
    }

    pub fn translation(t: C) -> MobiusComplex {
        let one = C::new(1.0, 0.0);
        MobiusComplex { a: one, b: t, c: C::new(0.0, 0.0), d: one }
    }

    /// Image of a circline, through three of its points.
    pub fn map_circline(&self, c: &Circline) -> Circline {
        let pts = c.three_points();
        circline_through(self.apply(pts[0]), self.apply(pts[1]), self.apply(pts[2]))
            .expect("Möbius maps are injective")
    }
}

/// Cross-ratio (z1, z2; z3, z4) = (z1 - z3)(z2 - z4) / ((z1 - z4)(z2 - z3)).
pub fn cross_ratio(z: [SpherePoint; 4]) -> SpherePoint {
    // image of z1 under the map sending z3, z2, z4 to 0, 1, ∞
    match MobiusComplex::to_standard([z[2], z[1], z[3]]) {
        Ok(m) => m.apply(z[0]),
        Err(_) => SpherePoint::Finite(C::new(f64::NAN, f64::NAN)),
    }
}

/// Element of PSL(2,ℝ), acting on ℍ² and on ℝP¹ (stored as angles).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusReal {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MobiusReal {
    pub fn identity() -> Self {
        MobiusReal { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    /// Requires a positive determinant.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
        if !(det > 1e-15 * scale * scale) || !det.is_finite() {
            return Err(Error::InvalidInput(format!(
                "real Möbius map needs positive determinant, got {det}"
            )));
        }
        Ok(Self::normalized_unchecked(a, b, c, d))
    }

    pub(crate) fn normalized_unchecked(a: f64, b: f64, c: f64, d: f64) -> Self {
        let s = (a * d - b * c).sqrt();
        let mut m = MobiusReal { a: a / s, b: b / s, c: c / s, d: d / s };
        for e in [m.a, m.b, m.c, m.d] {
            if e != 0.0 {
                if e < 0.0 {
                    m = MobiusReal { a: -m.a, b: -m.b, c: -m.c, d: -m.d };
                }
                break;
            }
        }
        m
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn compose(&self, o: &MobiusReal) -> MobiusReal {
        Self::normalized_unchecked(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn inverse(&self) -> MobiusReal {
        Self::normalized_unchecked(self.d, -self.b, -self.c, self.a)
    }

    pub fn apply_h(&self, z: C) -> C {
        (z * self.a + self.b) / (z * self.c + self.d)
    }

    pub fn apply_vector(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    /// Action on ℝP¹ in the angle coordinate.
    pub fn apply_angle(&self, theta: f64) -> f64 {
        vector_to_angle(self.apply_vector(angle_to_vector(theta)))
    }

    /// Derivative of the induced circle map in the angle coordinate.
    pub fn angle_derivative(&self, theta: f64) -> f64 {
        let w = self.apply_vector(angle_to_vector(theta));
        self.det() / (w[0] * w[0] + w[1] * w[1])
    }

    /// Rotation by angle t of the circle model.
    pub fn rotation(t: f64) -> MobiusReal {
        // conjugate of z ↦ e^{it} z by the Cayley map
        let (s, c) = (t / 2.0).sin_cos();
        MobiusReal::normalized_unchecked(c, s, -s, c)
    }

    /// Unique map sending the angles x_i to y_i; both triples must share orientation.
    pub fn from_angle_triple(x: [f64; 3], y: [f64; 3]) -> Result<MobiusReal> {
        let ox = orientation_triple(x)?;
        let oy = orientation_triple(y)?;
        if ox != oy {
            return Err(Error::InvalidInput("triples have opposite orientation".into()));
        }
        let p = x.map(|t| real_point(angle_to_real(t)));
        let q = y.map(|t| real_point(angle_to_real(t)));
        let m = MobiusComplex::from_triple(p, q)?;
        // real up to the common phase
        let entries = [m.a, m.b, m.c, m.d];
        let big = entries
            .iter()
            .copied()
            .max_by(|u, v| u.norm().total_cmp(&v.norm()))
            .unwrap();
        let phase = big / big.norm();
        let r = entries.map(|e| (e / phase).re);
        MobiusReal::new(r[0], r[1], r[2], r[3])
    }
}

fn real_point(x: f64) -> SpherePoint {
    if x.is_infinite() {
        SpherePoint::Infinity
    } else {
        SpherePoint::new(x, 0.0)
    }
}

/// +1 if the angles are counterclockwise on the circle, -1 otherwise.
pub fn orientation_triple(t: [f64; 3]) -> Result<i32> {
    let d2 = wrap_angle(t[1] - t[0]);
    let d3 = wrap_angle(t[2] - t[0]);
    for (i, j, d) in [(0, 1, d2), (0, 2, d3), (1, 2, wrap_angle(t[2] - t[1]))] {
        if d < DEGENERATE_TOL || TAU - d < DEGENERATE_TOL {
            return Err(Error::DegenerateTriple(i, j));
        }
    }
    Ok(if d2 < d3 { 1 } else { -1 })
}

/// Generalized circle of the sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Circline {
    Circle { center: C, radius: f64 },
    Line { point: C, direction: C },
}

impl Circline {
    /// Euclidean distance from a finite point.
    pub fn distance(&self, z: C) -> f64 {
        match *self {
            Circline::Circle { center, radius } => ((z - center).norm() - radius).abs(),
            Circline::Line { point, direction } => ((z - point) * direction.conj()).im.abs(),
        }
    }

    /// Approximate chordal distance from a sphere point.
    pub fn chordal_distance(&self, p: SpherePoint) -> f64 {
        match (p, self) {
            (SpherePoint::Infinity, Circline::Line { .. }) => 0.0,
            (SpherePoint::Infinity, Circline::Circle { center, radius }) => {
                SpherePoint::Infinity.chordal(&SpherePoint::Finite(center + radius))
            }
            (SpherePoint::Finite(z), _) => 2.0 * self.distance(z) / (1.0 + z.norm_sqr()),
        }
    }

    pub fn three_points(&self) -> [SpherePoint; 3] {
        match *self {
            Circline::Circle { center, radius } => [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]
                .map(|t| SpherePoint::Finite(center + C::from_polar(radius, t))),
            Circline::Line { point, direction } => [
                SpherePoint::Finite(point),
                SpherePoint::Finite(point + direction),
                SpherePoint::Infinity,
            ],
        }
    }
}

/// Unique circline through three distinct points.
pub fn circline_through(p1: SpherePoint, p2: SpherePoint, p3: SpherePoint) -> Result<Circline> {
    let p = [p1, p2, p3];
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        if p[i].chordal(&p[j]) < DEGENERATE_TOL {
            return Err(Error::DegenerateTriple(i, j));
        }
    }
    let finite: Vec<C> = p.iter().filter_map(|q| q.finite()).collect();
    if finite.len() == 2 {
        let dir = finite[1] - finite[0];
        return Ok(Circline::Line { point: finite[0], direction: dir / dir.norm() });
    }
    let (a, b, c) = (finite[0], finite[1], finite[2]);
    let ab = b - a;
    let ac = c - a;
    let cross = ab.re * ac.im - ab.im * ac.re;
    let scale = ab.norm() * ac.norm();
    if cross.abs() <= 1e-13 * scale {
        let far = if ab.norm() >= ac.norm() { ab } else { ac };
        return Ok(Circline::Line { point: a, direction: far / far.norm() });
    }
    let d = 2.0 * cross;
    let ux = (ac.im * ab.norm_sqr() - ab.im * ac.norm_sqr()) / d;
    let uy = (ab.re * ac.norm_sqr() - ac.re * ab.norm_sqr()) / d;
    let u = C::new(ux, uy);
    Ok(Circline::Circle { center: a + u, radius: u.norm() })
}
