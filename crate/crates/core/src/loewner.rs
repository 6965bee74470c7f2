use crate::confmap::{map_arc_complement, ConformalChart};
use crate::curve::{check_simple_points, CurvePolyline};
use crate::error::{Error, Result};
use crate::mobius::MobiusComplex;
use crate::sphere::SpherePoint;
use crate::zipper::{hsqrt, unzip_chordal, zip_closed};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C = Complex64;

/// Driving function sampled on a capacity-time grid, linear in between.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrivingFunction {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl DrivingFunction {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let d = DrivingFunction { times, values };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.values.len() {
            return Err(Error::InvalidInput("times and values differ in length".into()));
        }
        if self.times.len() < 2 {
            return Err(Error::InvalidInput("driving function needs at least 2 samples".into()));
        }
        if self.times[0] != 0.0 {
            return Err(Error::InvalidInput("time grid must start at 0".into()));
        }
        if self.values[0] != 0.0 {
            return Err(Error::InvalidInput("driving function must start at 0".into()));
        }
        for (i, w) in self.times.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidInput(format!("times not increasing at index {}", i + 1)));
            }
        }
        if self.values.iter().chain(&self.times).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        Ok(())
    }

    /// Samples of f on a uniform grid of n intervals over [0, t_end].
    pub fn from_fn(t_end: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let times: Vec<f64> = (0..=n).map(|i| t_end * i as f64 / n as f64).collect();
        let w0 = f(0.0);
        let values = times.iter().map(|&t| f(t) - w0).collect();
        Self::new(times, values)
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Piecewise-linear value, clamped to the grid.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        self.values[i] + (self.values[i + 1] - self.values[i]) * (t - t0) / (t1 - t0)
    }

    /// Samples from index `i` on, shifted to start at (0, 0).
    pub fn tail_from(&self, i: usize) -> Result<DrivingFunction> {
        let (t0, w0) = (self.times[i], self.values[i]);
        Self::new(
            self.times[i..].iter().map(|t| t - t0).collect(),
            self.values[i..].iter().map(|w| w - w0).collect(),
        )
    }

    pub fn head_to(&self, i: usize) -> Result<DrivingFunction> {
        Self::new(self.times[..=i].to_vec(), self.values[..=i].to_vec())
    }
}

/// ½ ∫ W'(t)² dt of the piecewise-linear interpolant.
pub fn dirichlet_energy(w: &DrivingFunction) -> f64 {
    0.5 * w
        .times
        .windows(2)
        .zip(w.values.windows(2))
        .map(|(t, v)| (v[1] - v[0]).powi(2) / (t[1] - t[0]))
        .sum::<f64>()
}

/// Curve in (ℍ; 0, ∞) driven by `w`, from uniform vertical-slit steps driven at the
/// midpoint of each sub-interval. Point k is the tip at capacity time k·T/N.
pub fn trace(w: &DrivingFunction, steps_per_unit: usize) -> Result<CurvePolyline> {
    w.validate()?;
    if steps_per_unit < 100 {
        return Err(Error::InvalidInput("steps_per_unit must be at least 100".into()));
    }
    let t_end = w.end_time();
    let n = ((t_end * steps_per_unit as f64).ceil() as usize).max(1);
    let dt = t_end / n as f64;
    let u: Vec<f64> = (0..n).map(|k| w.value_at((k as f64 + 0.5) * dt)).collect();
    let four_dt = 4.0 * dt;
    let height = 2.0 * dt.sqrt();
    let mut points = Vec::with_capacity(n + 1);
    points.push(SpherePoint::new(0.0, 0.0));
    for k in 0..n {
        let mut z = C::new(u[k], height);
        for j in (0..k).rev() {
            let s = z - u[j];
            z = u[j] + hsqrt(s * s - four_dt, s.re);
        }
        if !(z.im > 0.0) {
            return Err(Error::TipLeftHalfPlane { index: k + 1, imag: z.im });
        }
        points.push(SpherePoint::Finite(z));
    }
    let z: Vec<C> = points.iter().map(|p| p.finite().unwrap()).collect();
    check_simple_points(&z, false)?;
    CurvePolyline::new(points, false, vec![0, n])
}

/// Driving function of a chord of (ℍ; 0, ∞) given by its samples, starting on ℝ.
/// A final point at ∞ is ignored.
pub fn extract_driving(chord: &CurvePolyline) -> Result<DrivingFunction> {
    let mut pts: Vec<SpherePoint> = chord.points.clone();
    if pts.last().map(|p| p.is_infinite()).unwrap_or(false) {
        pts.pop();
    }
    let z: Vec<C> = pts
        .iter()
        .map(|p| p.finite().ok_or_else(|| Error::InvalidInput("chord passes through ∞".into())))
        .collect::<Result<_>>()?;
    if z.len() < 2 {
        return Err(Error::InvalidInput("chord needs at least 2 finite points".into()));
    }
    let scale = z.iter().map(|p| p.norm()).fold(1e-300, f64::max);
    if z[0].im.abs() > 1e-9 * scale {
        return Err(Error::InvalidInput("chord does not start on the real line".into()));
    }
    check_simple_points(&z, false)?;
    driving_from_points(&z)
}

pub(crate) fn driving_from_points(z: &[C]) -> Result<DrivingFunction> {
    let base = z[0].re;
    let mut pts: Vec<C> = z[1..].iter().map(|p| p - base).collect();
    let un = unzip_chordal(&mut pts, 0.0, 1, false)?;
    let mut times = Vec::with_capacity(pts.len() + 1);
    let mut values = Vec::with_capacity(pts.len() + 1);
    times.push(0.0);
    values.push(0.0);
    let mut t = 0.0;
    for (dt, w) in un.dt.iter().zip(&un.w) {
        t += dt;
        times.push(t);
        values.push(*w);
    }
    DrivingFunction::new(times, values)
}

/// Energy ½Σ ΔW²/Δt of the chord through `z`, without building the driving function.
pub(crate) fn chord_energy_points(z: &[C]) -> Result<f64> {
    Ok(dirichlet_energy(&driving_from_points(z)?))
}

/// Simply connected domain with two marked prime ends.
#[derive(Clone, Debug)]
pub enum Domain {
    UpperHalfPlane,
    /// Complement on the sphere of an open arc; prime ends are its endpoints.
    ArcComplement(CurvePolyline),
    /// Bounded side of a closed curve; prime ends are vertices of the curve.
    JordanInterior(CurvePolyline),
}

fn near(p: SpherePoint, q: SpherePoint) -> bool {
    p.chordal(&q) < 1e-9
}

fn swap_ends() -> MobiusComplex {
    let one = C::new(1.0, 0.0);
    MobiusComplex::normalized_unchecked(C::new(0.0, 0.0), -one, one, C::new(0.0, 0.0))
}

/// Chart of (domain; a, b) onto (ℍ; 0, ∞).
pub fn domain_chart(domain: &Domain, a: SpherePoint, b: SpherePoint) -> Result<ConformalChart> {
    let off = || Error::InvalidInput("endpoints are not prime ends of the domain".into());
    match domain {
        Domain::UpperHalfPlane => {
            let real = |p: SpherePoint| p.finite().map(|z| z.im.abs() < 1e-12).unwrap_or(true);
            if !real(a) || !real(b) || near(a, b) {
                return Err(off());
            }
            let z = C::new(0.0, 0.0);
            let one = C::new(1.0, 0.0);
            let m = match (a, b) {
                (SpherePoint::Finite(a), SpherePoint::Infinity) => MobiusComplex::translation(-a),
                (SpherePoint::Infinity, SpherePoint::Finite(b)) => {
                    MobiusComplex::normalized_unchecked(z, -one, one, -b)
                }
                (SpherePoint::Finite(a), SpherePoint::Finite(b)) => {
                    let s = (a.re - b.re).signum();
                    MobiusComplex::normalized_unchecked(s * one, -s * a, one, -b)
                }
                _ => return Err(off()),
            };
            Ok(ConformalChart::mobius(m))
        }
        Domain::ArcComplement(arc) => {
            let chart = map_arc_complement(arc)?;
            let (tail, head) = (arc.points[0], arc.points[arc.len() - 1]);
            if near(a, tail) && near(b, head) {
                Ok(chart)
            } else if near(a, head) && near(b, tail) {
                Ok(chart.then(crate::confmap::Elementary::Mobius(swap_ends())))
            } else {
                Err(off())
            }
        }
        Domain::JordanInterior(curve) => {
            let (z, _) = crate::confmap::oriented_points(curve)?;
            let ia = z.iter().position(|&p| near(SpherePoint::Finite(p), a)).ok_or_else(off)?;
            let ib = z.iter().position(|&p| near(SpherePoint::Finite(p), b)).ok_or_else(off)?;
            if ia == ib {
                return Err(off());
            }
            let n = z.len();
            let rot: Vec<C> = (0..n).map(|i| z[(i + ia) % n]).collect();
            let zip = zip_closed(&rot, true)?;
            let jb = (ib + n - ia) % n;
            let xb = zip.left[jb - 1];
            let one = C::new(1.0, 0.0);
            let m = MobiusComplex::normalized_unchecked(C::new(0.0, 0.0), -one, one, C::new(-xb, 0.0));
            Ok(ConformalChart::from_maps(zip.chain).then(crate::confmap::Elementary::Mobius(m)))
        }
    }
}

/// Chordal energy of a chord from a to b after mapping with `chart` to (ℍ; 0, ∞).
pub fn chord_energy_with_chart(chord: &CurvePolyline, chart: &ConformalChart) -> Result<f64> {
    let n = chord.len();
    if n < 3 {
        return Err(Error::InvalidInput("chord needs at least 3 points".into()));
    }
    let start = chart.apply(chord.points[0])?;
    let end = chart.apply(chord.points[n - 1])?;
    if start.chordal(&SpherePoint::new(0.0, 0.0)) > 1e-6 || end.chordal(&SpherePoint::Infinity) > 1e-6 {
        return Err(Error::InvalidInput("chord endpoints are off the prescribed prime ends".into()));
    }
    let mut z = vec![C::new(0.0, 0.0)];
    for p in &chord.points[1..n - 1] {
        match chart.apply(*p)? {
            SpherePoint::Finite(w) => z.push(w),
            SpherePoint::Infinity => return Err(Error::InvalidInput("chord meets b early".into())),
        }
    }
    chord_energy_points(&z)
}

/// Chordal Loewner energy of `chord` in (domain; a, b).
pub fn chord_energy_in_domain(
    chord: &CurvePolyline,
    domain: &Domain,
    a: SpherePoint,
    b: SpherePoint,
) -> Result<f64> {
    let n = chord.len();
    if !near(chord.points[0], a) || !near(chord.points[n - 1], b) {
        return Err(Error::InvalidInput("chord endpoints are off the prescribed prime ends".into()));
    }
    let chart = domain_chart(domain, a, b)?;
    chord_energy_with_chart(chord, &chart)
}
