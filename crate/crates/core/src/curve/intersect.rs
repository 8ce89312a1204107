use crate::geom::{segment_intersection, MetricChart, SegmentGrid, Vec2};

/// First pair of segments `(i, j)`, `i < j`, that meet. Adjacent segments
/// count only when they fold back onto each other.
pub fn first_self_intersection(pts: &[Vec2], tol: f64) -> Option<(usize, usize)> {
    let n = pts.len();
    if n < 3 {
        return None;
    }
    let mut extent: f64 = 0.0;
    for w in pts.windows(2) {
        extent = extent.max(w[0].dist(w[1]));
    }
    let mut grid = SegmentGrid::new((4.0 * extent).max(1e-3));
    for j in 0..n - 1 {
        let (a, b) = (pts[j], pts[j + 1]);
        let mut hit = None;
        if j >= 1 {
            let d0 = pts[j] - pts[j - 1];
            let d1 = b - a;
            if d0.cross(d1).abs() <= tol * d0.norm() * d1.norm() && d0.dot(d1) < 0.0 {
                return Some((j - 1, j));
            }
        }
        grid.query(a, b, |i| {
            if hit.is_some() || i + 1 >= j {
                return;
            }
            if segments_touch(pts[i], pts[i + 1], a, b, tol) {
                hit = Some((i, j));
            }
        });
        if hit.is_some() {
            return hit;
        }
        grid.insert(a, b, j);
    }
    None
}

pub fn is_embedded(pts: &[Vec2], tol: f64) -> bool {
    first_self_intersection(pts, tol).is_none()
}

fn segments_touch(a: Vec2, b: Vec2, c: Vec2, d: Vec2, tol: f64) -> bool {
    if segment_intersection(a, b, c, d).is_some() {
        return true;
    }
    use super::point_segment_distance as psd;
    psd(a, c, d) <= tol || psd(b, c, d) <= tol || psd(c, a, b) <= tol || psd(d, a, b) <= tol
}

/// Resamples to `n + 1` vertices equally spaced in g-length (segment lengths
/// by the midpoint rule), interpolating linearly in the chart. Endpoints are
/// copied bitwise.
pub fn resample_uniform(chart: &MetricChart, pts: &[Vec2], n: usize) -> Vec<Vec2> {
    let lens = super::segment_lengths(chart, pts);
    let mut cum = Vec::with_capacity(pts.len());
    cum.push(0.0);
    for l in &lens {
        cum.push(cum.last().unwrap() + l);
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n + 1);
    out.push(pts[0]);
    let mut seg = 0;
    for i in 1..n {
        let s = total * i as f64 / n as f64;
        while seg + 1 < lens.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let frac = if lens[seg] > 0.0 { (s - cum[seg]) / lens[seg] } else { 0.0 };
        out.push(pts[seg].lerp(pts[seg + 1], frac.clamp(0.0, 1.0)));
    }
    out.push(pts[pts.len() - 1]);
    out
}
