use crate::error::{Error, Result};
use crate::mobius::{angle_diff, angle_to_vector, circline_through, orientation_triple, vector_to_angle, Circline, MobiusComplex, MobiusReal};
use crate::sphere::SpherePoint;
use crate::weld::WeldingSamples;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

type C = Complex64;

/// Real 2×2 matrix, row major.
pub type Mat2 = [[f64; 2]; 2];

pub const ID: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
pub const V: Mat2 = [[0.0, 1.0], [1.0, 0.0]];
pub const W: Mat2 = [[1.0, 0.0], [0.0, -1.0]];
pub const U: Mat2 = [[0.0, -1.0], [1.0, 0.0]];

/// ⟨A, B⟩ = −½ Tr(A adj B), the polarization of q(A) = −det A.
pub fn bilinear_22(a: &Mat2, b: &Mat2) -> f64 {
    -0.5 * (a[0][0] * b[1][1] - a[0][1] * b[1][0] - a[1][0] * b[0][1] + a[1][1] * b[0][0])
}

pub fn quadratic_22(a: &Mat2) -> f64 {
    bilinear_22(a, a)
}

pub fn matrix_of(m: &MobiusReal) -> Mat2 {
    [[m.a, m.b], [m.c, m.d]]
}

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Unit Frobenius norm, first entry above noise made positive.
fn normalize(mut a: Mat2) -> Mat2 {
    let norm = a.iter().flatten().map(|e| e * e).sum::<f64>().sqrt();
    let scale = 1.0 / norm;
    let first = a.iter().flatten().copied().find(|e| e.abs() > 1e-14 * norm).unwrap_or(1.0);
    let s = if first < 0.0 { -scale } else { scale };
    for row in a.iter_mut() {
        for e in row.iter_mut() {
            *e *= s;
        }
    }
    a
}

/// Point (x, y) of the boundary, stored with a rank-1 matrix whose image is the line x
/// and whose kernel is the line y.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdSBoundaryPoint {
    pub x: f64,
    pub y: f64,
    pub representative: Mat2,
}

impl AdSBoundaryPoint {
    pub fn new(x: f64, y: f64) -> Self {
        let u = angle_to_vector(x);
        let v = angle_to_vector(y);
        let w = [-v[1], v[0]];
        let a = [[u[0] * w[0], u[0] * w[1]], [u[1] * w[0], u[1] * w[1]]];
        AdSBoundaryPoint { x, y, representative: normalize(a) }
    }

    /// Image and kernel lines of the representative, as angles.
    pub fn image_kernel(&self) -> (f64, f64) {
        let a = &self.representative;
        let (c0, c1) = ([a[0][0], a[1][0]], [a[0][1], a[1][1]]);
        let col = if c0[0].hypot(c0[1]) >= c1[0].hypot(c1[1]) { c0 } else { c1 };
        let (r0, r1) = (a[0], a[1]);
        let row = if r0[0].hypot(r0[1]) >= r1[0].hypot(r1[1]) { r0 } else { r1 };
        (vector_to_angle(col), vector_to_angle([row[1], -row[0]]))
    }

    pub fn determinant(&self) -> f64 {
        let a = &self.representative;
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }
}

/// (α, β)·p = (αx, βy), with representative αAβ⁻¹.
pub fn isometry_act(alpha: &MobiusReal, beta: &MobiusReal, p: &AdSBoundaryPoint) -> AdSBoundaryPoint {
    let a = mul(&mul(&matrix_of(alpha), &p.representative), &matrix_of(&beta.inverse()));
    AdSBoundaryPoint { x: alpha.apply_angle(p.x), y: beta.apply_angle(p.y), representative: normalize(a) }
}

/// Graph of a sampled welding.
pub fn welding_graph(w: &WeldingSamples) -> Vec<AdSBoundaryPoint> {
    w.theta.iter().zip(&w.image).map(|(&x, &y)| AdSBoundaryPoint::new(x, y)).collect()
}

/// Space-like plane {A : ⟨α, A⟩ = 0}; its boundary is the graph of α⁻¹.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacelikePlane {
    pub alpha: MobiusReal,
}

impl SpacelikePlane {
    pub fn new(alpha: MobiusReal) -> Self {
        SpacelikePlane { alpha }
    }

    /// The plane whose boundary passes through three points of a positive triple.
    pub fn through(p: [&AdSBoundaryPoint; 3]) -> Result<Self> {
        let m = MobiusReal::from_angle_triple(p.map(|q| q.x), p.map(|q| q.y))?;
        Ok(SpacelikePlane { alpha: m.inverse() })
    }

    /// Möbius map whose graph is the boundary.
    pub fn boundary_map(&self) -> MobiusReal {
        self.alpha.inverse()
    }

    pub fn pairing(&self, p: &AdSBoundaryPoint) -> f64 {
        bilinear_22(&matrix_of(&self.alpha), &p.representative)
    }

    pub fn act(&self, alpha: &MobiusReal, beta: &MobiusReal) -> Self {
        SpacelikePlane { alpha: alpha.compose(&self.alpha).compose(&beta.inverse()) }
    }
}

/// |⟨α, A⟩| for the boundary point (x, α⁻¹x).
pub fn plane_boundary_check(alpha: &MobiusReal, x: f64) -> f64 {
    let p = AdSBoundaryPoint::new(x, alpha.inverse().apply_angle(x));
    SpacelikePlane::new(*alpha).pairing(&p).abs()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Positivity {
    pub positive: bool,
    /// Lexicographically first violating triple among those checked.
    pub witness: Option<[usize; 3]>,
}

const EXHAUSTIVE_LIMIT: usize = 200;
const RANDOM_TRIPLES: usize = 200_000;

fn check_distinct(v: &[f64], what: &str) -> Result<()> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    for k in 0..idx.len() {
        let (i, j) = (idx[k], idx[(k + 1) % idx.len()]);
        if angle_diff(v[i], v[j]).abs() < 1e-14 {
            return Err(Error::InvalidInput(format!("samples {i} and {j} share the {what} coordinate")));
        }
    }
    Ok(())
}

fn triple_ok(s: &[AdSBoundaryPoint], t: [usize; 3]) -> bool {
    let ox = orientation_triple(t.map(|i| s[i].x));
    let oy = orientation_triple(t.map(|i| s[i].y));
    matches!((ox, oy), (Ok(a), Ok(b)) if a == b)
}

/// Every triple has (x₁,x₂,x₃) and (y₁,y₂,y₃) in the same cyclic order. All triples
/// up to 200 samples; consecutive triples plus a fixed pseudo-random set beyond.
pub fn is_positive_curve(samples: &[AdSBoundaryPoint]) -> Result<Positivity> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::InvalidInput("need at least 3 samples".into()));
    }
    check_distinct(&samples.iter().map(|p| p.x).collect::<Vec<_>>(), "x")?;
    check_distinct(&samples.iter().map(|p| p.y).collect::<Vec<_>>(), "y")?;
    let witness = if n <= EXHAUSTIVE_LIMIT {
        (0..n).into_par_iter().find_map_first(|i| {
            for j in i + 1..n {
                for k in j + 1..n {
                    if !triple_ok(samples, [i, j, k]) {
                        return Some([i, j, k]);
                    }
                }
            }
            None
        })
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut triples: Vec<[usize; 3]> = (0..n).map(|i| [i, (i + 1) % n, (i + 2) % n]).collect();
        for _ in 0..RANDOM_TRIPLES {
            triples.push([rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)]);
        }
        let mut bad: Vec<[usize; 3]> = triples
            .into_par_iter()
            .filter_map(|mut t| {
                t.sort_unstable();
                (t[0] != t[1] && t[1] != t[2] && !triple_ok(samples, t)).then_some(t)
            })
            .collect();
        bad.sort_unstable();
        bad.first().copied()
    };
    Ok(Positivity { positive: witness.is_none(), witness })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ambient {
    AdS3,
    H3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Face {
    Spacelike(SpacelikePlane),
    /// Hemisphere over a circline of the sphere at infinity.
    Hemisphere(Circline),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum IdealPoint {
    AdS(AdSBoundaryPoint),
    Sphere(SpherePoint),
}

/// Faces are listed piece by piece, then one per triangle of the triangulation.
/// Bending lines join consecutive breakpoints, then the diagonals of the fan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PleatedPlane {
    pub ambient: Ambient,
    pub faces: Vec<Face>,
    pub bending: Vec<[IdealPoint; 2]>,
    pub triangulation: Vec<[usize; 3]>,
}

/// Fan triangulation from vertex 0 and its edges: boundary edges first, then diagonals.
pub fn fan(n: usize) -> (Vec<[usize; 3]>, Vec<[usize; 2]>) {
    let tris = (1..n.saturating_sub(1)).map(|i| [0, i, i + 1]).collect();
    let mut edges: Vec<[usize; 2]> = match n {
        0 | 1 => vec![],
        2 => vec![[0, 1]],
        _ => (0..n).map(|k| [k, (k + 1) % n]).collect(),
    };
    edges.extend((2..n.saturating_sub(1)).map(|i| [0, i]));
    (tris, edges)
}

const PIECE_TOL: f64 = 1e-2;

/// Pleated plane in AdS³ spanned by the graph of a piecewise Möbius welding.
/// Piece k covers [x_k, x_{k+1}].
pub fn pleat_from_welding(pieces: &[MobiusReal], breakpoints: &[AdSBoundaryPoint]) -> Result<PleatedPlane> {
    if pieces.len() == 1 {
        return Ok(PleatedPlane {
            ambient: Ambient::AdS3,
            faces: vec![Face::Spacelike(SpacelikePlane::new(pieces[0].inverse()))],
            bending: vec![],
            triangulation: vec![],
        });
    }
    let n = breakpoints.len();
    if pieces.len() != n || n < 2 {
        return Err(Error::InvalidInput(format!("{} pieces for {n} breakpoints", pieces.len())));
    }
    for (k, m) in pieces.iter().enumerate() {
        for p in [&breakpoints[k], &breakpoints[(k + 1) % n]] {
            let d = angle_diff(m.apply_angle(p.x), p.y).abs();
            if d > PIECE_TOL {
                return Err(Error::InvalidInput(format!("piece {k} misses a breakpoint by {d:.3e}")));
            }
        }
    }
    if n >= 3 {
        if let Some(t) = is_positive_curve(breakpoints)?.witness {
            return Err(Error::InvalidInput(format!("breakpoints {t:?} are not positive")));
        }
    }
    let (tris, edges) = fan(n);
    let mut faces: Vec<Face> = pieces.iter().map(|m| Face::Spacelike(SpacelikePlane::new(m.inverse()))).collect();
    for t in &tris {
        faces.push(Face::Spacelike(SpacelikePlane::through(t.map(|i| &breakpoints[i]))?));
    }
    let bending = edges.iter().map(|e| e.map(|i| IdealPoint::AdS(breakpoints[i]))).collect();
    Ok(PleatedPlane { ambient: Ambient::AdS3, faces, bending, triangulation: tris })
}

/// Oriented circular arc from `start` through `mid` to `end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircularArc {
    pub start: C,
    pub mid: C,
    pub end: C,
}

impl CircularArc {
    pub fn circline(&self) -> Result<Circline> {
        circline_through(self.start.into(), self.mid.into(), self.end.into())
    }

    /// Tangent directions at the start and at the end.
    pub fn tangents(&self) -> (f64, f64) {
        let half = ((self.end - self.mid) / (self.mid - self.start)).arg();
        let t0 = (self.end - self.start).arg() - half;
        (t0, t0 + 2.0 * half)
    }

    pub fn transformed(&self, m: &MobiusComplex) -> Result<CircularArc> {
        let f = |z: C| {
            m.apply(SpherePoint::Finite(z)).finite().ok_or_else(|| Error::InvalidInput("arc sent through ∞".into()))
        };
        Ok(CircularArc { start: f(self.start)?, mid: f(self.mid)?, end: f(self.end)? })
    }
}

/// Arcs of a marked curve, each through its marks and its middle sample.
pub fn arcs_of_curve(curve: &crate::curve::CurvePolyline) -> Result<Vec<CircularArc>> {
    let z = curve.finite_points()?;
    Ok((0..curve.marks.len())
        .map(|k| {
            let idx = curve.arc_indices(k);
            CircularArc { start: z[idx[0]], mid: z[idx[idx.len() / 2]], end: z[*idx.last().unwrap()] }
        })
        .collect())
}

const JOINT_TOL: f64 = 0.2;

/// Pleated plane in ℍ³ bounded by a closed C¹ chain of circular arcs.
pub fn pleat_from_circular(arcs: &[CircularArc]) -> Result<PleatedPlane> {
    let n = arcs.len();
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 arcs".into()));
    }
    for k in 0..n {
        let (a, b) = (&arcs[k], &arcs[(k + 1) % n]);
        let gap = (a.end - b.start).norm();
        if gap > 1e-8 * (1.0 + a.end.norm()) {
            return Err(Error::InvalidInput(format!("arc {k} does not end where arc {} starts", (k + 1) % n)));
        }
        let turn = angle_diff(b.tangents().0, a.tangents().1).abs();
        if turn > JOINT_TOL {
            return Err(Error::InvalidInput(format!("joint {} turns by {turn:.3} rad", (k + 1) % n)));
        }
    }
    let circles = arcs.iter().map(|a| a.circline()).collect::<Result<Vec<_>>>()?;
    let one_circle = arcs.iter().all(|a| {
        [a.start, a.mid, a.end].iter().all(|&z| circles[0].chordal_distance(SpherePoint::Finite(z)) < 1e-9)
    });
    if one_circle {
        return Ok(PleatedPlane { ambient: Ambient::H3, faces: vec![Face::Hemisphere(circles[0])], bending: vec![], triangulation: vec![] });
    }
    let pts: Vec<SpherePoint> = arcs.iter().map(|a| SpherePoint::Finite(a.start)).collect();
    let (tris, edges) = fan(n);
    let mut faces: Vec<Face> = circles.into_iter().map(Face::Hemisphere).collect();
    for t in &tris {
        faces.push(Face::Hemisphere(circline_through(pts[t[0]], pts[t[1]], pts[t[2]])?));
    }
    let bending = edges.iter().map(|e| e.map(|i| IdealPoint::Sphere(pts[i]))).collect();
    Ok(PleatedPlane { ambient: Ambient::H3, faces, bending, triangulation: tris })
}
