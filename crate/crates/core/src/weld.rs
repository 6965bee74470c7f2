use crate::confmap::oriented_points;
use crate::curve::{resample_closed, CurvePolyline};
use crate::error::{Error, Result};
use crate::mobius::{angle_diff, angle_to_vector, real_to_angle, wrap_angle, MobiusReal};
use crate::zipper::zip_closed;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Marked pairs h(x_k) = y_k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Breakpoints {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Samples of an orientation-preserving circle homeomorphism.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeldingSamples {
    pub theta: Vec<f64>,
    pub image: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Breakpoints>,
}

fn check_cyclic(v: &[f64], field: &str, strict_start: bool) -> Result<()> {
    let schema = |i: usize, msg: &str| Error::Schema { pointer: format!("/{field}/{i}"), message: msg.into() };
    for (i, &t) in v.iter().enumerate() {
        if !t.is_finite() || !(0.0..TAU).contains(&t) {
            return Err(schema(i, "angle must lie in [0, 2π)"));
        }
    }
    let mut turns = 0.0;
    for i in 0..v.len() {
        let j = (i + 1) % v.len();
        let d = v[j] - v[i];
        if strict_start && j != 0 && d <= 0.0 {
            return Err(schema(j, "angles must be strictly increasing"));
        }
        let d = d.rem_euclid(TAU);
        if d == 0.0 {
            return Err(schema(j, "repeated angle"));
        }
        turns += d;
    }
    if (turns - TAU).abs() > 1e-9 {
        return Err(schema(0, "angles must wind once around the circle in increasing order"));
    }
    Ok(())
}

impl WeldingSamples {
    pub fn new(theta: Vec<f64>, image: Vec<f64>, breakpoints: Option<Breakpoints>) -> Result<Self> {
        let w = WeldingSamples { theta, image, breakpoints };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.len() != self.image.len() {
            return Err(Error::Schema { pointer: "/image".into(), message: "length differs from theta".into() });
        }
        if self.theta.len() < 3 {
            return Err(Error::Schema { pointer: "/theta".into(), message: "need at least 3 samples".into() });
        }
        check_cyclic(&self.theta, "theta", true)?;
        check_cyclic(&self.image, "image", false)?;
        if let Some(b) = &self.breakpoints {
            if b.x.len() != b.y.len() {
                return Err(Error::Schema { pointer: "/breakpoints/y".into(), message: "length differs from x".into() });
            }
            if b.x.len() >= 3 {
                check_cyclic(&b.x, "breakpoints/x", false)?;
                check_cyclic(&b.y, "breakpoints/y", false)?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Piecewise-linear interpolation in angle, cyclically.
    pub fn eval(&self, t: f64) -> f64 {
        let t = wrap_angle(t);
        let n = self.theta.len();
        let i = self.theta.partition_point(|&s| s <= t);
        let (i0, i1) = if i == 0 || i == n { (n - 1, 0) } else { (i - 1, i) };
        let span = (self.theta[i1] - self.theta[i0]).rem_euclid(TAU);
        let off = (t - self.theta[i0]).rem_euclid(TAU);
        let step = (self.image[i1] - self.image[i0]).rem_euclid(TAU);
        wrap_angle(self.image[i0] + step * off / span)
    }

    /// β∘h∘α⁻¹, sampled at α(theta).
    pub fn conjugated(&self, alpha: &MobiusReal, beta: &MobiusReal) -> WeldingSamples {
        let theta: Vec<f64> = self.theta.iter().map(|&t| alpha.apply_angle(t)).collect();
        let image: Vec<f64> = self.image.iter().map(|&t| beta.apply_angle(t)).collect();
        let breakpoints = self.breakpoints.as_ref().map(|b| Breakpoints {
            x: b.x.iter().map(|&t| alpha.apply_angle(t)).collect(),
            y: b.y.iter().map(|&t| beta.apply_angle(t)).collect(),
        });
        sorted(theta, image, breakpoints)
    }

    pub fn inverse(&self) -> WeldingSamples {
        let breakpoints = self.breakpoints.as_ref().map(|b| Breakpoints { x: b.y.clone(), y: b.x.clone() });
        sorted(self.image.clone(), self.theta.clone(), breakpoints)
    }

    /// Sup over samples of the angular distance between h and `other`.
    pub fn sup_distance(&self, other: &WeldingSamples) -> f64 {
        self.theta
            .iter()
            .zip(&self.image)
            .map(|(&t, &y)| angle_diff(other.eval(t), y).abs())
            .fold(0.0, f64::max)
    }

    /// Max |h(x_k) − y_k| over the breakpoints.
    pub fn constraint_residual(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(&a, &b)| angle_diff(self.eval(a), b).abs()).fold(0.0, f64::max)
    }
}

/// Rotates the samples so theta starts at its smallest value.
fn sorted(theta: Vec<f64>, image: Vec<f64>, breakpoints: Option<Breakpoints>) -> WeldingSamples {
    let n = theta.len();
    let start = (0..n).min_by(|&a, &b| theta[a].total_cmp(&theta[b])).unwrap_or(0);
    let theta = (0..n).map(|i| theta[(i + start) % n]).collect();
    let image = (0..n).map(|i| image[(i + start) % n]).collect();
    let breakpoints = breakpoints.map(|b| {
        let m = b.x.len();
        let s = (0..m).min_by(|&i, &j| b.x[i].total_cmp(&b.x[j])).unwrap_or(0);
        Breakpoints { x: (0..m).map(|i| b.x[(i + s) % m]).collect(), y: (0..m).map(|i| b.y[(i + s) % m]).collect() }
    });
    WeldingSamples { theta, image, breakpoints }
}

/// Three curve samples pinned to prescribed angles on both circles.
#[derive(Clone, Debug, PartialEq)]
pub struct WeldPins {
    /// Indices into the counterclockwise, root-first curve; `None` picks the first
    /// three marks, or three evenly spaced samples.
    pub indices: Option<[usize; 3]>,
    pub domain: [f64; 3],
    pub image: [f64; 3],
}

impl Default for WeldPins {
    fn default() -> Self {
        let t = [0.0, TAU / 3.0, 2.0 * TAU / 3.0];
        WeldPins { indices: None, domain: t, image: t }
    }
}

/// Counterclockwise copy of a closed curve starting at its first mark.
pub fn ccw_rooted(curve: &CurvePolyline) -> Result<CurvePolyline> {
    let (_, reversed) = oriented_points(curve)?;
    let c = if reversed { curve.reversed() } else { curve.clone() };
    let root = c.marks.first().copied().unwrap_or(0);
    Ok(if root == 0 { c } else { c.rotated(root) })
}

/// Welding g⁻¹∘f of a closed curve, sampled at the curve vertices.
pub fn welding_from_curve(curve: &CurvePolyline, n_samples: usize) -> Result<WeldingSamples> {
    welding_with_pins(curve, n_samples, &WeldPins::default())
}

pub fn welding_with_pins(curve: &CurvePolyline, n_samples: usize, pins: &WeldPins) -> Result<WeldingSamples> {
    if !curve.closed {
        return Err(Error::InvalidInput("expected a closed curve".into()));
    }
    if curve.has_infinity() {
        return Err(Error::InvalidInput("curve must avoid ∞".into()));
    }
    let c = ccw_rooted(curve)?;
    let c = if n_samples == 0 || n_samples == c.len() { c } else { resample_closed(&c, n_samples)? };
    let (theta, image) = pinned_angles(&c, pins)?;
    let breakpoints = (!c.marks.is_empty()).then(|| Breakpoints {
        x: c.marks.iter().map(|&m| theta[m]).collect(),
        y: c.marks.iter().map(|&m| image[m]).collect(),
    });
    let w = sorted(theta, image, breakpoints);
    w.validate()?;
    Ok(w)
}

/// Welding angles of every sample of a counterclockwise, root-first curve, in curve order.
pub(crate) fn pinned_angles(c: &CurvePolyline, pins: &WeldPins) -> Result<(Vec<f64>, Vec<f64>)> {
    let z = c.finite_points()?;
    let n = z.len();
    let zip = zip_closed(&z, true)?;
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    for j in 1..n {
        x[j] = real_to_angle(zip.left[j - 1]);
        y[j] = real_to_angle(zip.right[j - 1]);
    }
    let idx = match pins.indices {
        Some(i) => i,
        None if c.marks.len() >= 3 => [c.marks[0], c.marks[1], c.marks[2]],
        None => [0, n / 3, 2 * n / 3],
    };
    if idx.iter().any(|&i| i >= n) || idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
        return Err(Error::InvalidInput("pin indices must be distinct samples".into()));
    }
    let alpha = MobiusReal::from_angle_triple([x[idx[0]], x[idx[1]], x[idx[2]]], pins.domain)?;
    let beta = MobiusReal::from_angle_triple([y[idx[0]], y[idx[1]], y[idx[2]]], pins.image)?;
    Ok((x.iter().map(|&t| alpha.apply_angle(t)).collect(), y.iter().map(|&t| beta.apply_angle(t)).collect()))
}

/// Indices of the samples on the closed piece from breakpoint k to k+1.
fn piece_samples(w: &WeldingSamples, k: usize) -> Vec<usize> {
    let b = w.breakpoints.as_ref().unwrap();
    let m = b.x.len();
    let (s, e) = (b.x[k], b.x[(k + 1) % m]);
    let span = if m == 1 { TAU } else { (e - s).rem_euclid(TAU) };
    let tol = 1e-12;
    (0..w.len())
        .filter(|&i| {
            let off = (w.theta[i] - s).rem_euclid(TAU);
            off <= span + tol || off >= TAU - tol
        })
        .collect()
}

/// Least-squares Möbius fit of angle pairs: linear projective estimate refined by
/// Gauss–Newton on the angular residuals.
pub fn fit_mobius(theta: &[f64], image: &[f64]) -> Result<(MobiusReal, f64)> {
    let n = theta.len();
    if n < 5 {
        return Err(Error::InvalidInput(format!("need at least 5 samples per piece, got {n}")));
    }
    let mut a = DMatrix::<f64>::zeros(n, 4);
    for i in 0..n {
        let u = angle_to_vector(theta[i]);
        let p = angle_to_vector(image[i]);
        a.set_row(i, &nalgebra::RowVector4::new(-p[1] * u[0], -p[1] * u[1], p[0] * u[0], p[0] * u[1]));
    }
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let (imin, _) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let v = vt.row(imin);
    let mut m = [v[0], v[1], v[2], v[3]];
    let det = m[0] * m[3] - m[1] * m[2];
    if !(det.abs() > 1e-14) {
        return Err(Error::Numerical("degenerate Möbius fit".into()));
    }
    if det < 0.0 {
        return Err(Error::Numerical("samples are orientation reversing".into()));
    }
    let s = det.sqrt();
    m.iter_mut().for_each(|x| *x /= s);

    let resid = |m: &[f64; 4]| -> Vec<f64> {
        let r = MobiusReal::normalized_unchecked(m[0], m[1], m[2], m[3]);
        theta.iter().zip(image).map(|(&t, &y)| angle_diff(r.apply_angle(t), y)).collect()
    };
    let mut r = resid(&m);
    let mut cost: f64 = r.iter().map(|x| x * x).sum();
    for _ in 0..20 {
        let mut jac = DMatrix::<f64>::zeros(n, 4);
        for i in 0..n {
            let u = angle_to_vector(theta[i]);
            let v = [m[0] * u[0] + m[1] * u[1], m[2] * u[0] + m[3] * u[1]];
            let q = 2.0 / (v[0] * v[0] + v[1] * v[1]);
            jac.set_row(i, &nalgebra::RowVector4::new(q * v[1] * u[0], q * v[1] * u[1], -q * v[0] * u[0], -q * v[0] * u[1]));
        }
        let rhs = DVector::from_vec(r.iter().map(|x| -x).collect());
        let step = match jac.svd(true, true).solve(&rhs, 1e-12) {
            Ok(s) => s,
            Err(_) => break,
        };
        let mut cand = [m[0] + step[0], m[1] + step[1], m[2] + step[2], m[3] + step[3]];
        let d = cand[0] * cand[3] - cand[1] * cand[2];
        if !(d > 0.0) {
            break;
        }
        cand.iter_mut().for_each(|x| *x /= d.sqrt());
        let rc = resid(&cand);
        let cc: f64 = rc.iter().map(|x| x * x).sum();
        if !(cc < cost) {
            break;
        }
        let done = cost - cc <= 1e-14 * cost;
        m = cand;
        r = rc;
        cost = cc;
        if done {
            break;
        }
    }
    let sup = r.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    Ok((MobiusReal::new(m[0], m[1], m[2], m[3])?, sup))
}

/// Möbius fit of each piece between consecutive breakpoints, with its sup angle residual.
pub fn fit_mobius_pieces(w: &WeldingSamples) -> Result<Vec<(MobiusReal, f64)>> {
    let b = w
        .breakpoints
        .as_ref()
        .filter(|b| !b.x.is_empty())
        .ok_or_else(|| Error::InvalidInput("welding has no breakpoints".into()))?;
    (0..b.x.len())
        .map(|k| {
            let idx = piece_samples(w, k);
            let t: Vec<f64> = idx.iter().map(|&i| w.theta[i]).collect();
            let y: Vec<f64> = idx.iter().map(|&i| w.image[i]).collect();
            fit_mobius(&t, &y)
        })
        .collect()
}

/// |log(h'₊/h'₋)| at each breakpoint x_k, from the pieces meeting there
/// (piece k starts at x_k).
pub fn c1_break_report(w: &WeldingSamples, pieces: &[MobiusReal]) -> Result<Vec<f64>> {
    let b = w.breakpoints.as_ref().ok_or_else(|| Error::InvalidInput("welding has no breakpoints".into()))?;
    let m = b.x.len();
    if pieces.len() != m {
        return Err(Error::InvalidInput(format!("expected {m} pieces, got {}", pieces.len())));
    }
    Ok((0..m)
        .map(|k| {
            let x = b.x[k];
            let right = pieces[k].angle_derivative(x);
            let left = pieces[(k + m - 1) % m].angle_derivative(x);
            (right / left).ln().abs()
        })
        .collect())
}

/// Welding pinned so that three domain angles go to three image angles of `reference`:
/// returns β∘h∘α⁻¹ with α fixing `at` and β chosen so the values at `at` agree.
pub fn align_to(w: &WeldingSamples, reference: &WeldingSamples, at: [f64; 3]) -> Result<WeldingSamples> {
    let from = [w.eval(at[0]), w.eval(at[1]), w.eval(at[2])];
    let to = [reference.eval(at[0]), reference.eval(at[1]), reference.eval(at[2])];
    let beta = MobiusReal::from_angle_triple(from, to)?;
    Ok(w.conjugated(&MobiusReal::identity(), &beta))
}

/// Samples of a Möbius welding at n equally spaced angles.
pub fn mobius_welding(rho: &MobiusReal, n: usize) -> WeldingSamples {
    let theta: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
    let image = theta.iter().map(|&t| rho.apply_angle(t)).collect();
    WeldingSamples { theta, image, breakpoints: None }
}
