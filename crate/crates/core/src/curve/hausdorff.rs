use rayon::prelude::*;

use super::CurveError;
use crate::geom::Vec2;

/// Sampling step along each polyline, in chart units.
const STEP: f64 = 1e-3;

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let l2 = d.norm2();
    if l2 == 0.0 {
        return p.dist(a);
    }
    let s = ((p - a).dot(d) / l2).clamp(0.0, 1.0);
    p.dist(a + d * s)
}

fn point_polyline_distance(p: Vec2, poly: &[Vec2]) -> f64 {
    if poly.len() == 1 {
        return p.dist(poly[0]);
    }
    poly.windows(2).map(|w| point_segment_distance(p, w[0], w[1])).fold(f64::INFINITY, f64::min)
}

fn one_sided(a: &[Vec2], b: &[Vec2]) -> f64 {
    let mut samples = vec![a[0]];
    for w in a.windows(2) {
        let n = ((w[0].dist(w[1]) / STEP).ceil() as usize).max(1);
        for i in 1..=n {
            samples.push(w[0].lerp(w[1], i as f64 / n as f64));
        }
    }
    samples.par_iter().map(|&p| point_polyline_distance(p, b)).reduce(|| 0.0, f64::max)
}

/// Symmetric Hausdorff distance between polylines in chart coordinates.
pub fn hausdorff(a: &[Vec2], b: &[Vec2]) -> Result<f64, CurveError> {
    if a.is_empty() || b.is_empty() {
        return Err(CurveError::EmptyCurve);
    }
    Ok(one_sided(a, b).max(one_sided(b, a)))
}
