//! CSV serialization of domains and polylines.
//!
//! Domains use the header `state,side,x,y` (chart coordinates) or
//! `state,side,u,t` (surface coordinates on a disk of revolution). Sentinel
//! domains are a single row with empty coordinates. Floats are written with
//! the shortest representation that parses back to the same value.

use std::io::{Read, Write};

use super::{CurveError, DomainState, Side, SimpleDomain};
use crate::geom::{MetricChart, Vec2};

#[derive(Debug, Clone, Copy)]
pub enum Coords<'a> {
    Chart,
    /// `(u, t)` through the given disk of revolution.
    Surface(&'a MetricChart),
}

fn csv_err<E: std::fmt::Display>(e: E) -> CurveError {
    CurveError::Csv(e.to_string())
}

fn state_str(s: DomainState) -> &'static str {
    match s {
        DomainState::Empty => "empty",
        DomainState::Full => "full",
        DomainState::Proper => "proper",
    }
}

fn to_coords(p: Vec2, coords: Coords) -> Result<(f64, f64), CurveError> {
    match coords {
        Coords::Chart => Ok((p.x, p.y)),
        Coords::Surface(c) => c.to_surface(p).ok_or_else(|| CurveError::Csv("surface coordinates need a disk of revolution".into())),
    }
}

pub fn write_domain_csv<W: Write>(w: W, dom: &SimpleDomain, coords: Coords) -> Result<(), CurveError> {
    let mut wr = csv::Writer::from_writer(w);
    let (a, b) = match coords {
        Coords::Chart => ("x", "y"),
        Coords::Surface(_) => ("u", "t"),
    };
    wr.write_record(["state", "side", a, b]).map_err(csv_err)?;
    let st = state_str(dom.state());
    if dom.is_proper() {
        for p in dom.curve() {
            let (x, y) = to_coords(*p, coords)?;
            wr.write_record([st, dom.side().as_str(), &x.to_string(), &y.to_string()]).map_err(csv_err)?;
        }
    } else {
        wr.write_record([st, "", "", ""]).map_err(csv_err)?;
    }
    wr.flush().map_err(csv_err)
}

struct Columns {
    state: Option<usize>,
    side: Option<usize>,
    a: usize,
    b: usize,
    surface: bool,
}

fn columns(headers: &csv::StringRecord) -> Result<Columns, CurveError> {
    let find = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let (a, b, surface) = match (find("x"), find("y"), find("u"), find("t")) {
        (Some(a), Some(b), _, _) => (a, b, false),
        (_, _, Some(a), Some(b)) => (a, b, true),
        _ => return Err(CurveError::Csv("header needs x,y or u,t columns".into())),
    };
    Ok(Columns { state: find("state"), side: find("side"), a, b, surface })
}

fn parse_f64(s: &str) -> Result<f64, CurveError> {
    s.trim().parse::<f64>().map_err(|e| CurveError::Csv(format!("`{s}`: {e}")))
}

fn read_rows<R: Read>(r: R, chart: Option<&MetricChart>) -> Result<(Vec<(String, String, Option<Vec2>)>, bool), CurveError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let cols = columns(rd.headers().map_err(csv_err)?)?;
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let get = |i: Option<usize>| i.and_then(|i| rec.get(i)).unwrap_or("").to_ascii_lowercase();
        let (sa, sb) = (rec.get(cols.a).unwrap_or(""), rec.get(cols.b).unwrap_or(""));
        let p = if sa.is_empty() && sb.is_empty() {
            None
        } else {
            let (a, b) = (parse_f64(sa)?, parse_f64(sb)?);
            Some(if cols.surface {
                let c = chart.ok_or_else(|| CurveError::Csv("u,t columns need a disk of revolution".into()))?;
                c.from_surface(a, b).ok_or_else(|| CurveError::Csv("u,t columns need a disk of revolution".into()))?
            } else {
                Vec2::new(a, b)
            })
        };
        rows.push((get(cols.state), get(cols.side), p));
    }
    Ok((rows, cols.surface))
}

/// Reads a domain; `chart` is required for `u,t` files.
pub fn read_domain_csv<R: Read>(r: R, chart: Option<&MetricChart>) -> Result<SimpleDomain, CurveError> {
    let (rows, _) = read_rows(r, chart)?;
    let first = rows.first().ok_or(CurveError::EmptyCurve)?;
    match first.0.as_str() {
        "empty" => return Ok(SimpleDomain::empty()),
        "full" => return Ok(SimpleDomain::full()),
        "proper" | "" => {}
        other => return Err(CurveError::Csv(format!("unknown state `{other}`"))),
    }
    let side = match first.1.as_str() {
        "left" | "" => Side::Left,
        "right" => Side::Right,
        other => return Err(CurveError::Csv(format!("unknown side `{other}`"))),
    };
    let pts = rows.into_iter().map(|r| r.2.ok_or_else(|| CurveError::Csv("missing coordinates".into()))).collect::<Result<Vec<_>, _>>()?;
    SimpleDomain::proper(pts, side)
}

/// Reads the coordinate columns of any curve or domain CSV.
pub fn read_polyline_csv<R: Read>(r: R, chart: Option<&MetricChart>) -> Result<Vec<Vec2>, CurveError> {
    let (rows, _) = read_rows(r, chart)?;
    let pts: Vec<Vec2> = rows.into_iter().filter_map(|r| r.2).collect();
    if pts.is_empty() {
        return Err(CurveError::EmptyCurve);
    }
    Ok(pts)
}

pub fn write_polyline_csv<W: Write>(w: W, pts: &[Vec2]) -> Result<(), CurveError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["x", "y"]).map_err(csv_err)?;
    for p in pts {
        wr.write_record([p.x.to_string(), p.y.to_string()]).map_err(csv_err)?;
    }
    wr.flush().map_err(csv_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SimpleDomain {
        let a = Vec2::polar(0.3);
        let b = Vec2::polar(2.9);
        let mut pts: Vec<Vec2> = (0..=30).map(|i| a.lerp(b, i as f64 / 30.0)).collect();
        for (i, p) in pts.iter_mut().enumerate().skip(1).take(29) {
            p.y += 0.01 * (i as f64 * 0.7).sin() / 3.0;
        }
        SimpleDomain::proper(pts, Side::Right).unwrap()
    }

    #[test]
    fn chart_roundtrip_is_exact() {
        let d = sample();
        let mut buf = Vec::new();
        write_domain_csv(&mut buf, &d, Coords::Chart).unwrap();
        let back = read_domain_csv(buf.as_slice(), None).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn surface_roundtrip() {
        let c = MetricChart::spherical_cap(1.0).unwrap();
        let d = sample();
        let mut buf = Vec::new();
        write_domain_csv(&mut buf, &d, Coords::Surface(&c)).unwrap();
        assert!(std::str::from_utf8(&buf).unwrap().starts_with("state,side,u,t"));
        let back = read_domain_csv(buf.as_slice(), Some(&c)).unwrap();
        for (p, q) in back.curve().iter().zip(d.curve()) {
            assert!((*p - *q).norm() < 1e-12);
        }
        assert_eq!(back.side(), d.side());
    }

    #[test]
    fn sentinels_roundtrip() {
        for d in [SimpleDomain::empty(), SimpleDomain::full()] {
            let mut buf = Vec::new();
            write_domain_csv(&mut buf, &d, Coords::Chart).unwrap();
            assert_eq!(read_domain_csv(buf.as_slice(), None).unwrap(), d);
        }
    }

    #[test]
    fn plain_polyline() {
        let text = "x,y\n1,0\n0,0.5\n-1,0\n";
        let p = read_polyline_csv(text.as_bytes(), None).unwrap();
        assert_eq!(p.len(), 3);
        assert!(read_polyline_csv("a,b\n1,2\n".as_bytes(), None).is_err());
    }
}
