use crate::confmap::{complement_geodesic, disk_charts_from_curve};
use crate::curve::{check_simple_points, hausdorff, CurvePolyline};
use crate::energy::loop_energy_driving_default;
use crate::error::{Error, Result};
use crate::mobius::MobiusComplex;
use crate::sphere::SpherePoint;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

type C = Complex64;

/// Curves through `points` in the class of `initial`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveProblem {
    pub points: Vec<SpherePoint>,
    pub initial: CurvePolyline,
    /// Stop once every arc is within this chordal Hausdorff distance of its geodesic.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Samples per replaced arc.
    pub arc_samples: usize,
}

impl CurveProblem {
    pub fn new(points: Vec<SpherePoint>, initial: CurvePolyline) -> Result<Self> {
        let p = CurveProblem { points, initial, tol: 1e-3, max_sweeps: 20, arc_samples: 100 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.points.len();
        if n < 2 {
            return Err(Error::InvalidInput("need at least 2 marked points".into()));
        }
        if !self.initial.closed {
            return Err(Error::InvalidInput("initial curve must be closed".into()));
        }
        self.initial.validate()?;
        if self.initial.marks.len() != n {
            return Err(Error::InvalidInput(format!(
                "initial curve has {} marks for {n} points",
                self.initial.marks.len()
            )));
        }
        for (k, p) in self.points.iter().enumerate() {
            if self.initial.mark_point(k).chordal(p) > 1e-9 {
                return Err(Error::InvalidInput(format!("mark {k} of the initial curve is not point {k}")));
            }
        }
        if !(self.tol > 0.0) || self.max_sweeps == 0 || self.arc_samples < 8 {
            return Err(Error::InvalidInput("tol > 0, max_sweeps ≥ 1, arc_samples ≥ 8 required".into()));
        }
        Ok(())
    }
}

/// Finite copy of the curve and the Möbius map that brings it back.
fn finite_working(curve: &CurvePolyline) -> (CurvePolyline, Vec<C>, Option<MobiusComplex>) {
    if !curve.has_infinity() {
        let z = curve.finite_points().unwrap_or_default();
        return (curve.clone(), z, None);
    }
    let (z, m) = curve.finite_frame();
    let c = curve.transformed(&m);
    (c, z, Some(m.inverse()))
}

fn restore(curve: CurvePolyline, back: Option<MobiusComplex>) -> CurvePolyline {
    match back {
        Some(m) => curve.transformed(&m),
        None => curve,
    }
}

fn check_marks(curve: &CurvePolyline, k: usize) -> Result<()> {
    if !curve.closed || curve.marks.len() < 2 {
        return Err(Error::InvalidInput("need a closed curve with at least 2 marks".into()));
    }
    if k >= curve.marks.len() {
        return Err(Error::InvalidInput(format!("arc index {k} out of range")));
    }
    Ok(())
}

/// Geodesic of Ω_k joining mark k to mark k+1, for a finite curve.
fn arc_geodesic(curve: &CurvePolyline, z: &[C], k: usize, samples: usize) -> Result<Vec<C>> {
    let rest: Vec<C> = curve.rest_indices(k).into_iter().map(|i| z[i]).collect();
    complement_geodesic(&rest, samples)
}

/// Replaces arc k by the hyperbolic geodesic of the complement of the other arcs.
pub fn geodesic_replacement_step(curve: &CurvePolyline, k: usize) -> Result<CurvePolyline> {
    let samples = curve.arc_indices(k).len().max(8);
    replace_arc(curve, k, samples)
}

pub fn replace_arc(curve: &CurvePolyline, k: usize, samples: usize) -> Result<CurvePolyline> {
    check_marks(curve, k)?;
    let (work, z, back) = finite_working(curve);
    let geo = arc_geodesic(&work, &z, k, samples)?;
    let m = work.marks.len();
    let mut pts: Vec<C> = Vec::with_capacity(z.len() + geo.len());
    let mut marks = Vec::with_capacity(m);
    for j in 0..m {
        marks.push(pts.len());
        if j == k {
            pts.extend_from_slice(&geo[..geo.len() - 1]);
        } else {
            let idx = work.arc_indices(j);
            pts.extend(idx[..idx.len() - 1].iter().map(|&i| z[i]));
        }
    }
    check_simple_points(&pts, true)?;
    let out = CurvePolyline::from_complex(pts, true, marks)?;
    Ok(restore(out, back))
}

/// Chordal Hausdorff distance between each arc and the geodesic of its complement.
pub fn geodesic_residual(curve: &CurvePolyline) -> Result<Vec<f64>> {
    check_marks(curve, 0)?;
    let (work, z, _) = finite_working(curve);
    (0..work.marks.len())
        .into_par_iter()
        .map(|k| {
            let arc: Vec<C> = work.arc_indices(k).into_iter().map(|i| z[i]).collect();
            let geo = arc_geodesic(&work, &z, k, 2 * arc.len().max(8))?;
            Ok(hausdorff(&arc, false, &geo, false))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSolution {
    pub curve: CurvePolyline,
    /// Loop energy of the initial curve and after every sweep.
    pub energy_trace: Vec<f64>,
    /// Per-arc geodesic residuals at the returned curve.
    pub residuals: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

fn trace_energy(curve: &CurvePolyline) -> Result<f64> {
    Ok(loop_energy_driving_default(curve, 0)?.value)
}

/// Cyclic geodesic replacement until every arc has the geodesic property within `tol`.
pub fn minimize_curve(problem: &CurveProblem) -> Result<CurveSolution> {
    problem.validate()?;
    let mut curve = problem.initial.clone();
    curve.check_simple()?;
    let mut energy_trace = vec![trace_energy(&curve)?];
    let mut residuals = geodesic_residual(&curve)?;
    let mut sweeps = 0;
    while sweeps < problem.max_sweeps && residuals.iter().cloned().fold(0.0, f64::max) >= problem.tol {
        for k in 0..curve.marks.len() {
            curve = replace_arc(&curve, k, problem.arc_samples)?;
        }
        sweeps += 1;
        energy_trace.push(trace_energy(&curve)?);
        residuals = geodesic_residual(&curve)?;
    }
    let converged = residuals.iter().all(|&r| r < problem.tol);
    Ok(CurveSolution { curve, energy_trace, residuals, sweeps, converged })
}

/// Schwarzians of the two disk charts' inverses on both sides of a curve point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchwarzianPair {
    pub point: C,
    pub inside: C,
    pub outside: C,
}

impl SchwarzianPair {
    pub fn relative_gap(&self) -> f64 {
        (self.inside - self.outside).norm() / self.inside.norm().max(self.outside.norm()).max(1e-300)
    }
}

/// S[f⁻¹] and S[g⁻¹] extrapolated to `per_arc` points on each arc, away from the marks.
/// Each value is linearly extrapolated from two points at distances δ and 2δ along
/// the normal, with δ a multiple `offset` of the local sample spacing.
pub fn schwarzian_pairs(curve: &CurvePolyline, per_arc: usize, offset: f64) -> Result<Vec<SchwarzianPair>> {
    check_marks(curve, 0)?;
    if curve.has_infinity() {
        return Err(Error::InvalidInput("curve must avoid ∞".into()));
    }
    let charts = disk_charts_from_curve(curve)?;
    let z = curve.finite_points()?;
    let n = z.len();
    let orient = if charts.reversed { -1.0 } else { 1.0 };
    let mut out = Vec::new();
    for k in 0..curve.marks.len() {
        let idx = curve.arc_indices(k);
        let len = idx.len();
        for j in 0..per_arc {
            let s = 0.15 + 0.7 * (j as f64 + 0.5) / per_arc as f64;
            let i = idx[((s * (len - 1) as f64).round() as usize).clamp(1, len - 2)];
            let (prev, next) = (z[(i + n - 1) % n], z[(i + 1) % n]);
            let t = next - prev;
            let h = 0.5 * t.norm();
            let normal = C::new(0.0, orient) * t / t.norm();
            let d = offset * h;
            let s_in = |dist: f64| -> Result<C> { Ok(charts.zipper.jet(z[i] + normal * dist)?.schwarzian()) };
            let inside = 2.0 * s_in(d)? - s_in(2.0 * d)?;
            let outside = 2.0 * s_in(-d)? - s_in(-2.0 * d)?;
            out.push(SchwarzianPair { point: z[i], inside, outside });
        }
    }
    Ok(out)
}
