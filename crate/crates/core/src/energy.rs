use crate::confmap::{complement_geodesic, disk_charts_from_curve, ConformalChart, Elementary};
use crate::curve::{check_simple_points, polyline_length, CurvePolyline};
use crate::error::{Error, Result};
use crate::loewner::chord_energy_points;
use crate::mobius::MobiusComplex;
use crate::sphere::SpherePoint;
use crate::zipper::zip_arc;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

type C = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyMethod {
    RootedDriving,
    Liouville,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub value: f64,
    pub method: EnergyMethod,
    pub resolution: BTreeMap<String, f64>,
    pub estimated_error: f64,
}

impl EnergyReport {
    fn new(raw: f64, method: EnergyMethod, resolution: &[(&str, f64)], err: f64) -> Self {
        let value = raw.max(0.0);
        EnergyReport {
            value,
            method,
            resolution: resolution.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            estimated_error: err.abs() + (value - raw),
        }
    }
}

/// Quadrature parameters for the Liouville action.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiouvilleResolution {
    /// Number of dyadic radial bands [1 - 2^-j, 1 - 2^-(j+1)].
    pub levels: usize,
    /// Angular samples on the innermost band, doubled per band up to `max_angular`.
    pub angular: usize,
    pub max_angular: usize,
}

impl Default for LiouvilleResolution {
    fn default() -> Self {
        LiouvilleResolution { levels: 8, angular: 64, max_angular: 2048 }
    }
}

const GL_NODES: [f64; 6] = [
    -0.932_469_514_203_152,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152,
];
const GL_WEIGHTS: [f64; 6] = [
    0.171_324_492_379_170_3,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691,
    0.467_913_934_572_691,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_3,
];

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Per-band integrals of `density` over the unit disk, ∫ density dA.
fn disk_bands(res: &LiouvilleResolution, density: &(dyn Fn(C) -> Result<f64> + Sync)) -> Result<Vec<f64>> {
    let mut rows = Vec::new();
    for j in 0..res.levels {
        let r0 = 1.0 - 0.5f64.powi(j as i32);
        let r1 = 1.0 - 0.5f64.powi(j as i32 + 1);
        let m = (res.angular << j).min(res.max_angular).max(8);
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let r = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * x;
            rows.push((j, r, 0.5 * (r1 - r0) * w, m));
        }
    }
    let vals: Vec<(usize, f64)> = rows
        .par_iter()
        .map(|&(j, r, w, m)| {
            let mut acc = Vec::with_capacity(m);
            for k in 0..m {
                let z = C::from_polar(r, std::f64::consts::TAU * (k as f64 + 0.5) / m as f64);
                acc.push(density(z)?);
            }
            Ok((j, pairwise_sum(&acc) * std::f64::consts::TAU / m as f64 * r * w))
        })
        .collect::<Result<_>>()?;
    let mut bands = vec![0.0; res.levels];
    for (j, v) in vals {
        bands[j] += v;
    }
    Ok(bands)
}

/// Total with the geometric tail beyond the last band, and an error estimate.
fn extrapolate_bands(bands: &[f64]) -> (f64, f64) {
    let n = bands.len();
    let sum = pairwise_sum(bands);
    if n < 2 {
        return (sum, sum.abs());
    }
    let last = bands[n - 1];
    let prev = bands[n - 2];
    let tail = last;
    (sum + tail, (last - 0.5 * prev).abs() + 0.1 * tail.abs())
}

fn reciprocal() -> MobiusComplex {
    let one = C::new(1.0, 0.0);
    let zero = C::new(0.0, 0.0);
    MobiusComplex::normalized_unchecked(zero, one, one, zero)
}

/// Universal Liouville action of the curve with disk charts f: 𝔻 → Ω and
/// g: 𝔻* → Ω*, g(∞) = ∞.
pub fn liouville_action(f: &ConformalChart, g: &ConformalChart, res: LiouvilleResolution) -> Result<EnergyReport> {
    if res.levels < 2 || res.angular < 8 {
        return Err(Error::InvalidInput("need at least 2 radial levels and 8 angular samples".into()));
    }
    let centre = match f.apply(SpherePoint::new(0.0, 0.0))? {
        SpherePoint::Finite(c) => c,
        SpherePoint::Infinity => return Err(Error::InvalidInput("f(0) must be finite".into())),
    };
    if g.apply(SpherePoint::Infinity)?.chordal(&SpherePoint::Infinity) > 1e-8 {
        return Err(Error::InvalidInput("g must fix ∞".into()));
    }
    let one = C::new(1.0, 0.0);
    let shift = MobiusComplex::normalized_unchecked(C::new(0.0, 0.0), one, one, -centre);
    let gt = g.clone().after(reciprocal()).then(Elementary::Mobius(shift));

    let fd = |z: C| -> Result<f64> { Ok(f.jet(z)?.pre_schwarzian().norm_sqr()) };
    let gd = |w: C| -> Result<f64> {
        let j = gt.jet(w)?;
        Ok((j.pre_schwarzian() - 2.0 * j.d1 / j.v + 2.0 / w).norm_sqr())
    };
    let (fi, fe) = extrapolate_bands(&disk_bands(&res, &fd)?);
    let (gi, ge) = extrapolate_bands(&disk_bands(&res, &gd)?);
    let f0 = f.jet(C::new(0.0, 0.0))?.d1;
    let g_inf = 1.0 / gt.jet(C::new(0.0, 0.0))?.d1;
    let pi = std::f64::consts::PI;
    let raw = (fi + gi) / pi + 4.0 * (f0.norm() / g_inf.norm()).ln();
    Ok(EnergyReport::new(
        raw,
        EnergyMethod::Liouville,
        &[
            ("radial_levels", res.levels as f64),
            ("angular_samples", res.angular as f64),
            ("max_angular_samples", res.max_angular as f64),
        ],
        (fe + ge) / pi,
    ))
}

/// Loop energy of a closed curve by the Liouville action of its zipper disk charts.
pub fn loop_energy(curve: &CurvePolyline, res: LiouvilleResolution) -> Result<EnergyReport> {
    let curve = bounded_representative(curve)?;
    let charts = disk_charts_from_curve(&curve)?;
    let mut r = liouville_action(&charts.f, &charts.g, res)?;
    r.resolution.insert("curve_samples".into(), curve.len() as f64);
    Ok(r)
}

/// A Möbius image of the curve avoiding ∞, or the curve itself if it already does.
fn bounded_representative(curve: &CurvePolyline) -> Result<CurvePolyline> {
    if !curve.has_infinity() {
        return Ok(curve.clone());
    }
    let (_, m) = curve.finite_frame();
    Ok(curve.transformed(&m))
}

/// Rooted chordal energy of γ[ε, 1] in Ĉ∖γ[0, ε], with ε measured in arclength.
fn rooted_energy(z: &[C], eps: f64) -> Result<f64> {
    let n = z.len();
    let mut acc = 0.0;
    let mut k = 0;
    let mut seg = (z[1] - z[0]).norm();
    while acc + seg <= eps {
        acc += seg;
        k += 1;
        seg = (z[(k + 1) % n] - z[k]).norm();
    }
    let p = z[k] + (z[(k + 1) % n] - z[k]) * ((eps - acc) / seg);
    let tol = 1e-9 * seg;
    let mut arc = vec![p];
    if (p - z[k]).norm() > tol {
        arc.push(z[k]);
    }
    arc.extend(z[..k].iter().rev());
    let chain = ConformalChart::from_maps(zip_arc(&arc)?);
    let start = if (z[k + 1] - p).norm() > tol { k + 1 } else { k + 2 };
    let mut pts = vec![C::new(0.0, 0.0)];
    for q in &z[start..] {
        pts.push(chain.eval(*q)?);
    }
    chord_energy_points(&pts)
}

/// Loop energy from the driving function of the curve rooted at `root`, with the
/// first arc of length ε cut off; evaluated at ε and ε/2 and extrapolated linearly.
pub fn loop_energy_driving(curve: &CurvePolyline, root: usize, epsilon: f64) -> Result<EnergyReport> {
    if !curve.closed {
        return Err(Error::InvalidInput("expected a closed curve".into()));
    }
    curve.validate()?;
    if root >= curve.len() {
        return Err(Error::InvalidInput(format!("root index {root} out of range")));
    }
    let curve = bounded_representative(curve)?;
    let z0 = curve.finite_points()?;
    check_simple_points(&z0, true)?;
    let n = z0.len();
    let z: Vec<C> = (0..n).map(|i| z0[(i + root) % n]).collect();
    let len = polyline_length(&z, true);
    if !(epsilon > 0.0 && epsilon <= len / 10.0) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, {}]", len / 10.0)));
    }
    let coarse = rooted_energy(&z, epsilon)?;
    let fine = rooted_energy(&z, 0.5 * epsilon)?;
    Ok(EnergyReport::new(
        2.0 * fine - coarse,
        EnergyMethod::RootedDriving,
        &[("epsilon", epsilon), ("root", root as f64), ("curve_samples", n as f64)],
        fine - coarse,
    ))
}

/// Rooted-driving loop energy with ε = L/50.
pub fn loop_energy_driving_default(curve: &CurvePolyline, root: usize) -> Result<EnergyReport> {
    let z = bounded_representative(curve)?.finite_points()?;
    loop_energy_driving(curve, root, polyline_length(&z, true) / 50.0)
}

/// Closes an open arc with the hyperbolic geodesic of its complement, running from
/// the head back to the tail. The result is a closed curve with marks at both endpoints.
pub fn close_with_geodesic(arc: &CurvePolyline, budget: usize) -> Result<CurvePolyline> {
    if arc.closed {
        return Err(Error::InvalidInput("expected an open arc".into()));
    }
    arc.validate()?;
    arc.check_simple()?;
    let (z, m) = arc.finite_frame();
    let geo = complement_geodesic(&z, budget.max(8))?;
    let mut pts = z.clone();
    pts.extend_from_slice(&geo[1..geo.len() - 1]);
    let head = z.len() - 1;
    let closed = CurvePolyline::from_complex(pts, true, vec![0, head])?;
    let mut back = closed.transformed(&m.inverse());
    back.marks = vec![0, head];
    Ok(back)
}

/// Arc energy: loop energy of the arc closed by its complementary geodesic.
pub fn arc_energy(arc: &CurvePolyline, res: LiouvilleResolution) -> Result<EnergyReport> {
    let closed = close_with_geodesic(arc, (2 * arc.len()).max(64))?;
    loop_energy(&closed, res)
}

/// Schwarzian f'''/f' − (3/2)(f''/f')² of the chart at a finite point.
pub fn schwarzian(chart: &ConformalChart, z: SpherePoint) -> Result<C> {
    match z {
        SpherePoint::Finite(z) => Ok(chart.jet(z)?.schwarzian()),
        SpherePoint::Infinity => Err(Error::InvalidInput("Schwarzian at ∞ is not supported".into())),
    }
}
