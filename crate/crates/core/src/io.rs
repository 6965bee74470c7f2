//! JSON file formats.
//!
//! Curves are `{"closed": bool, "points": [[re, im] | "inf", ...], "marks": [int, ...]}`,
//! driving functions `{"times": [...], "values": [...]}` and weldings
//! `{"theta": [...], "image": [...], "breakpoints": {"x": [...], "y": [...]}}`.
//! Reports are written with their serde layout. Parse errors carry a JSON pointer.

use crate::curve::CurvePolyline;
use crate::error::{Error, Result};
use crate::loewner::DrivingFunction;
use crate::sphere::SpherePoint;
use crate::weld::{Breakpoints, WeldingSamples};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::Path;

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema { pointer: pointer.into(), message: message.into() }
}

pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| schema("", format!("malformed JSON: {e}")))
}

fn object<'a>(v: &'a Value, at: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| schema(at, "expected an object"))
}

fn field<'a>(o: &'a Map<String, Value>, at: &str, key: &str) -> Result<&'a Value> {
    o.get(key).ok_or_else(|| schema(format!("{at}/{key}"), "missing field"))
}

fn array<'a>(v: &'a Value, at: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| schema(at, "expected an array"))
}

fn number(v: &Value, at: &str) -> Result<f64> {
    v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| schema(at, "expected a finite number"))
}

fn numbers(v: &Value, at: &str) -> Result<Vec<f64>> {
    array(v, at)?.iter().enumerate().map(|(i, x)| number(x, &format!("{at}/{i}"))).collect()
}

fn point(v: &Value, at: &str) -> Result<SpherePoint> {
    if v.as_str() == Some("inf") {
        return Ok(SpherePoint::Infinity);
    }
    let a = array(v, at)?;
    if a.len() != 2 {
        return Err(schema(at, "expected [re, im] or \"inf\""));
    }
    Ok(SpherePoint::Finite(Complex64::new(number(&a[0], &format!("{at}/0"))?, number(&a[1], &format!("{at}/1"))?)))
}

pub fn points_from_value(v: &Value, at: &str) -> Result<Vec<SpherePoint>> {
    array(v, at)?.iter().enumerate().map(|(i, p)| point(p, &format!("{at}/{i}"))).collect()
}

pub fn points_to_value(points: &[SpherePoint]) -> Value {
    Value::Array(
        points
            .iter()
            .map(|p| match p {
                SpherePoint::Infinity => json!("inf"),
                SpherePoint::Finite(z) => json!([z.re, z.im]),
            })
            .collect(),
    )
}

pub fn curve_from_value(v: &Value) -> Result<CurvePolyline> {
    let o = object(v, "")?;
    let closed = field(o, "", "closed")?.as_bool().ok_or_else(|| schema("/closed", "expected a boolean"))?;
    let points = points_from_value(field(o, "", "points")?, "/points")?;
    let marks = match o.get("marks") {
        None => vec![],
        Some(m) => array(m, "/marks")?
            .iter()
            .enumerate()
            .map(|(i, x)| x.as_u64().map(|k| k as usize).ok_or_else(|| schema(format!("/marks/{i}"), "expected an index")))
            .collect::<Result<_>>()?,
    };
    for (i, &m) in marks.iter().enumerate() {
        if m >= points.len() {
            return Err(schema(format!("/marks/{i}"), "index out of range"));
        }
        if i > 0 && m <= marks[i - 1] {
            return Err(schema(format!("/marks/{i}"), "marks must increase"));
        }
    }
    let c = CurvePolyline { points, closed, marks };
    c.validate().map_err(|e| match e {
        Error::Schema { .. } => e,
        other => schema("/points", other.to_string()),
    })?;
    Ok(c)
}

pub fn curve_to_value(c: &CurvePolyline) -> Value {
    json!({"closed": c.closed, "points": points_to_value(&c.points), "marks": c.marks})
}

pub fn driving_from_value(v: &Value) -> Result<DrivingFunction> {
    let o = object(v, "")?;
    let times = numbers(field(o, "", "times")?, "/times")?;
    let values = numbers(field(o, "", "values")?, "/values")?;
    if times.len() != values.len() {
        return Err(schema("/values", "length differs from times"));
    }
    if times.first() != Some(&0.0) {
        return Err(schema("/times/0", "time grid must start at 0"));
    }
    if let Some(i) = (1..times.len()).find(|&i| times[i] <= times[i - 1]) {
        return Err(schema(format!("/times/{i}"), "times must increase"));
    }
    if values[0] != 0.0 {
        return Err(schema("/values/0", "driving function must start at 0"));
    }
    DrivingFunction::new(times, values).map_err(|e| schema("", e.to_string()))
}

pub fn driving_to_value(w: &DrivingFunction) -> Value {
    json!({"times": w.times, "values": w.values})
}

pub fn welding_from_value(v: &Value) -> Result<WeldingSamples> {
    let o = object(v, "")?;
    let theta = numbers(field(o, "", "theta")?, "/theta")?;
    let image = numbers(field(o, "", "image")?, "/image")?;
    let breakpoints = match o.get("breakpoints") {
        None | Some(Value::Null) => None,
        Some(b) => {
            let bo = object(b, "/breakpoints")?;
            Some(Breakpoints {
                x: numbers(field(bo, "/breakpoints", "x")?, "/breakpoints/x")?,
                y: numbers(field(bo, "/breakpoints", "y")?, "/breakpoints/y")?,
            })
        }
    };
    WeldingSamples::new(theta, image, breakpoints)
}

pub fn welding_to_value(w: &WeldingSamples) -> Value {
    let mut v = json!({"theta": w.theta, "image": w.image});
    if let Some(b) = &w.breakpoints {
        v["breakpoints"] = json!({"x": b.x, "y": b.y});
    }
    v
}

/// Welding constraints `{"x": [...], "y": [...]}`.
pub fn constraints_from_value(v: &Value) -> Result<(Vec<f64>, Vec<f64>)> {
    let o = object(v, "")?;
    Ok((numbers(field(o, "", "x")?, "/x")?, numbers(field(o, "", "y")?, "/y")?))
}

/// Marked points `{"points": [...]}` or a bare array.
pub fn marked_points_from_value(v: &Value) -> Result<Vec<SpherePoint>> {
    match v {
        Value::Array(_) => points_from_value(v, ""),
        _ => points_from_value(field(object(v, "")?, "", "points")?, "/points"),
    }
}

pub fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Numerical(format!("serialization: {e}")))
}

pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn read_value(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    parse_json(&text)
}

pub fn read_curve(path: &Path) -> Result<CurvePolyline> {
    curve_from_value(&read_value(path)?)
}

pub fn read_driving(path: &Path) -> Result<DrivingFunction> {
    driving_from_value(&read_value(path)?)
}

pub fn read_welding(path: &Path) -> Result<WeldingSamples> {
    welding_from_value(&read_value(path)?)
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidInput(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn write_value(path: &Path, v: &Value) -> Result<()> {
    write_atomic(path, to_text(v).as_bytes())
}

/// Flat SVG polylines, y axis pointing up.
pub fn svg_polylines(lines: &[(Vec<[f64; 2]>, bool)]) -> String {
    let all = lines.iter().flat_map(|l| l.0.iter());
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in all {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    if !x0.is_finite() {
        (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
    }
    let pad = 0.05 * (x1 - x0).max(y1 - y0).max(1e-9);
    let (w, h) = (x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad);
    let stroke = w.max(h) / 400.0;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\" width=\"600\" height=\"{}\">\n",
        x0 - pad,
        -(y1 + pad),
        w,
        h,
        (600.0 * h / w).round()
    );
    for (pts, closed) in lines {
        let tag = if *closed { "polygon" } else { "polyline" };
        let coords: Vec<String> = pts.iter().map(|p| format!("{},{}", p[0], -p[1])).collect();
        s.push_str(&format!(
            "<{tag} points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"{stroke}\"/>\n",
            coords.join(" ")
        ));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_round_trip() {
        let text = r#"{"closed": true, "points": [[0.0, 0.0], [1.5, -0.25], "inf"], "marks": [0, 2]}"#;
        let c = curve_from_value(&parse_json(text).unwrap()).unwrap();
        assert_eq!(c.points[2], SpherePoint::Infinity);
        let out = to_text(&curve_to_value(&c));
        let again = curve_from_value(&parse_json(&out).unwrap()).unwrap();
        assert_eq!(to_text(&curve_to_value(&again)), out);
    }

    #[test]
    fn errors_point_at_fields() {
        let bad = r#"{"times": [0.0, 0.5, 0.5], "values": [0.0, 1.0, 2.0]}"#;
        match driving_from_value(&parse_json(bad).unwrap()) {
            Err(Error::Schema { pointer, .. }) => assert_eq!(pointer, "/times/2"),
            other => panic!("{other:?}"),
        }
        let bad = r#"{"closed": true, "points": [[0, 0], [1, "x"]]}"#;
        match curve_from_value(&parse_json(bad).unwrap()) {
            Err(Error::Schema { pointer, .. }) => assert_eq!(pointer, "/points/1/1"),
            other => panic!("{other:?}"),
        }
    }
}
