//! Fixed-step RK4 geodesic integration with boundary and self-crossing events.

use std::collections::HashMap;

use serde::Serialize;

use super::{GeomError, MetricChart, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HitKind {
    BoundaryHit,
    LengthExceeded,
    SelfIntersection,
}

/// A transversal crossing of the trace with an earlier part of itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfCrossing {
    pub point: Vec2,
    /// Arclength of the later passage.
    pub s_late: f64,
    /// Arclength of the earlier passage.
    pub s_early: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Arclength step; `None` picks `min(1e-3, curvature_scale / 10)`.
    pub step: Option<f64>,
    pub stop_on_self_intersection: bool,
    /// Keep every crossing (only meaningful when not stopping on the first).
    pub record_crossings: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { step: None, stop_on_self_intersection: true, record_crossings: false }
    }
}

/// An arclength-parametrized geodesic sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub points: Vec<Vec2>,
    pub velocities: Vec<Vec2>,
    pub arclength: Vec<f64>,
    pub hit: HitKind,
    pub crossings: Vec<SelfCrossing>,
}

impl Trajectory {
    pub fn length(&self) -> f64 {
        *self.arclength.last().unwrap_or(&0.0)
    }

    pub fn start(&self) -> Vec2 {
        self.points[0]
    }

    pub fn end(&self) -> Vec2 {
        *self.points.last().unwrap()
    }

    pub fn start_tangent(&self) -> Vec2 {
        self.velocities[0]
    }

    pub fn end_tangent(&self) -> Vec2 {
        *self.velocities.last().unwrap()
    }

    pub fn self_intersects(&self) -> bool {
        self.hit == HitKind::SelfIntersection || !self.crossings.is_empty()
    }
}

#[derive(Clone, Copy)]
struct State {
    p: Vec2,
    v: Vec2,
}

fn rk4(chart: &MetricChart, y: State, h: f64) -> State {
    let a1 = chart.geodesic_accel(y.p, y.v);
    let p2 = y.p + y.v * (0.5 * h);
    let v2 = y.v + a1 * (0.5 * h);
    let a2 = chart.geodesic_accel(p2, v2);
    let p3 = y.p + v2 * (0.5 * h);
    let v3 = y.v + a2 * (0.5 * h);
    let a3 = chart.geodesic_accel(p3, v3);
    let p4 = y.p + v3 * h;
    let v4 = y.v + a3 * h;
    let a4 = chart.geodesic_accel(p4, v4);
    State {
        p: y.p + (y.v + v2 * 2.0 + v3 * 2.0 + v4) * (h / 6.0),
        v: y.v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0),
    }
}

/// Default integration step for a chart.
pub(crate) fn default_step(chart: &MetricChart) -> f64 {
    (chart.curvature_scale() / 10.0).min(1e-3)
}

/// Traces the geodesic from `p` with g-unit velocity `v` until it reaches the
/// boundary circle, crosses itself, or exceeds `max_len`.
pub fn geodesic_trace(chart: &MetricChart, p: Vec2, v: Vec2, max_len: f64) -> Result<Trajectory, GeomError> {
    geodesic_trace_with(chart, p, v, max_len, &TraceOptions::default())
}

pub fn geodesic_trace_with(
    chart: &MetricChart,
    p: Vec2,
    v: Vec2,
    max_len: f64,
    opts: &TraceOptions,
) -> Result<Trajectory, GeomError> {
    if !(max_len > 0.0) {
        return Err(GeomError::InvalidTrace(format!("max_len = {max_len}")));
    }
    if p.norm() > 1.0 + 1e-9 {
        return Err(GeomError::LeftChart(p.x, p.y));
    }
    let speed = chart.norm(p, v);
    if (speed - 1.0).abs() > 1e-12 {
        return Err(GeomError::NotUnitTangent(speed));
    }
    let h = opts.step.unwrap_or_else(|| default_step(chart));
    if !(h > 1e-12) {
        return Err(GeomError::StepUnderflow(h));
    }
    let start_on_boundary = (p.norm() - 1.0).abs() < 1e-9;

    let mut points = vec![p];
    let mut velocities = vec![v];
    let mut arclength = vec![0.0];
    let mut crossings = Vec::new();
    let mut grid = SegmentGrid::new(0.02);
    let mut y = State { p, v };
    let mut s = 0.0;

    loop {
        let remaining = max_len - s;
        let (step, capped) = if remaining <= h { (remaining, true) } else { (h, false) };
        let mut next = rk4(chart, y, step);
        let mut next_s = s + step;
        if !next.p.is_finite() || !next.v.is_finite() {
            return Err(GeomError::LeftChart(y.p.x, y.p.y));
        }
        let mut hit = None;
        if next.p.norm() > 1.0 && next_s > 1e-9 {
            // bisect the step length until the boundary is located to 1e-10
            let (mut lo, mut hi) = (0.0, step);
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                if rk4(chart, y, mid).p.norm() > 1.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let mut st = rk4(chart, y, hi);
            st.p = st.p / st.p.norm();
            next = st;
            next_s = s + hi;
            hit = Some(HitKind::BoundaryHit);
        } else if capped {
            hit = Some(HitKind::LengthExceeded);
        }

        let seg_index = points.len() - 1;
        let a = y.p;
        let b = next.p;
        let mut found: Vec<(f64, f64, usize, Vec2)> = Vec::new();
        grid.query(a, b, |j| {
            if j + 1 >= seg_index {
                return;
            }
            if let Some((tn, to, x)) = segment_intersection(a, b, points[j], points[j + 1]) {
                if j == 0 && start_on_boundary && to < 1e-9 {
                    return;
                }
                found.push((tn, to, j, x));
            }
        });
        found.sort_by(|l, r| l.0.total_cmp(&r.0));
        for &(tn, to, j, x) in &found {
            crossings.push(SelfCrossing {
                point: x,
                s_late: s + tn * (next_s - s),
                s_early: arclength[j] + to * (arclength[j + 1] - arclength[j]),
            });
            if opts.stop_on_self_intersection {
                break;
            }
        }
        if opts.stop_on_self_intersection && !found.is_empty() {
            let (tn, _, _, x) = found[0];
            let part = tn * (next_s - s);
            let st = rk4(chart, y, part);
            points.push(x);
            velocities.push(st.v);
            arclength.push(s + part);
            return Ok(Trajectory { points, velocities, arclength, hit: HitKind::SelfIntersection, crossings });
        }
        if !opts.record_crossings {
            crossings.clear();
        }

        grid.insert(a, b, seg_index);
        points.push(next.p);
        velocities.push(next.v);
        arclength.push(next_s);
        y = next;
        s = next_s;
        if y.p.norm() > 1.5 {
            return Err(GeomError::LeftChart(y.p.x, y.p.y));
        }
        if let Some(hit) = hit {
            return Ok(Trajectory { points, velocities, arclength, hit, crossings });
        }
    }
}

/// The geodesic from `p` with unit velocity `v`, sampled at `n + 1` points of
/// exactly uniform arclength spacing `length / n`.
///
/// No events are checked; the caller supplies a length known to stay inside
/// the chart (for instance from a previous [`geodesic_trace`]).
pub fn geodesic_segment(chart: &MetricChart, p: Vec2, v: Vec2, length: f64, n: usize) -> Vec<Vec2> {
    let ds = length / n as f64;
    let sub = (ds / default_step(chart)).ceil().max(1.0) as usize;
    let h = ds / sub as f64;
    let mut y = State { p, v };
    let mut out = Vec::with_capacity(n + 1);
    out.push(p);
    for _ in 0..n {
        for _ in 0..sub {
            y = rk4(chart, y, h);
        }
        out.push(y.p);
    }
    out
}

/// Intersection of segments `a b` and `c d` as `(t on ab, u on cd, point)`.
pub(crate) fn segment_intersection(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> Option<(f64, f64, Vec2)> {
    let r = b - a;
    let q = d - c;
    let denom = r.cross(q);
    // near-parallel pairs give roundoff-dominated parameters
    if !(denom.abs() > 1e-12 * r.norm() * q.norm()) {
        return None;
    }
    let w = c - a;
    let t = w.cross(q) / denom;
    let u = w.cross(r) / denom;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some((t, u, a + r * t))
    } else {
        None
    }
}

/// Uniform spatial hash of segment bounding boxes.
pub(crate) struct SegmentGrid {
    cell: f64,
    map: HashMap<(i64, i64), Vec<usize>>,
    stamp: Vec<u32>,
    epoch: u32,
}

impl SegmentGrid {
    pub(crate) fn new(cell: f64) -> Self {
        SegmentGrid { cell, map: HashMap::new(), stamp: Vec::new(), epoch: 0 }
    }

    fn cells(&self, a: Vec2, b: Vec2) -> impl Iterator<Item = (i64, i64)> {
        let c = self.cell;
        let x0 = (a.x.min(b.x) / c).floor() as i64;
        let x1 = (a.x.max(b.x) / c).floor() as i64;
        let y0 = (a.y.min(b.y) / c).floor() as i64;
        let y1 = (a.y.max(b.y) / c).floor() as i64;
        (x0..=x1).flat_map(move |i| (y0..=y1).map(move |j| (i, j)))
    }

    pub(crate) fn insert(&mut self, a: Vec2, b: Vec2, index: usize) {
        let cells: Vec<_> = self.cells(a, b).collect();
        for key in cells {
            self.map.entry(key).or_default().push(index);
        }
        if self.stamp.len() <= index {
            self.stamp.resize(index + 1, 0);
        }
    }

    /// Calls `f` once for every stored segment whose cells meet the box of `a b`.
    pub(crate) fn query<F: FnMut(usize)>(&mut self, a: Vec2, b: Vec2, mut f: F) {
        self.epoch = self.epoch.wrapping_add(1);
        let cells: Vec<_> = self.cells(a, b).collect();
        for key in cells {
            if let Some(list) = self.map.get(&key) {
                for &j in list {
                    if self.stamp[j] != self.epoch {
                        self.stamp[j] = self.epoch;
                        f(j);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ConformalFactor;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn launch(chart: &MetricChart, t: f64, alpha: f64) -> (Vec2, Vec2) {
        let tan = chart.boundary_tangent(t);
        let n = chart.inward_normal(t);
        (chart.boundary_point(t), tan * alpha.cos() + n * alpha.sin())
    }

    #[test]
    fn flat_diameter() {
        let c = MetricChart::flat();
        let (p, v) = launch(&c, 0.0, FRAC_PI_2);
        let tr = geodesic_trace(&c, p, v, 10.0).unwrap();
        assert_eq!(tr.hit, HitKind::BoundaryHit);
        assert!((tr.length() - 2.0).abs() < 1e-9);
        assert!((tr.end() - Vec2::new(-1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn flat_tangent_chord() {
        let c = MetricChart::flat();
        let (p, v) = launch(&c, 0.0, FRAC_PI_3);
        let tr = geodesic_trace(&c, p, v, 10.0).unwrap();
        assert!((tr.length() - 3f64.sqrt()).abs() < 1e-9);
        assert!((c.boundary_param(tr.end()) - 2.0 * FRAC_PI_3).abs() < 1e-9);
    }

    #[test]
    fn length_cap() {
        let c = MetricChart::flat();
        let (p, v) = launch(&c, 0.0, FRAC_PI_2);
        let tr = geodesic_trace(&c, p, v, 0.5).unwrap();
        assert_eq!(tr.hit, HitKind::LengthExceeded);
        assert!((tr.length() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_unit_velocity() {
        let c = MetricChart::flat();
        let r = geodesic_trace(&c, Vec2::ZERO, Vec2::new(2.0, 0.0), 1.0);
        assert!(matches!(r, Err(GeomError::NotUnitTangent(_))));
    }

    #[test]
    fn unit_speed_preserved_on_conformal_chart() {
        let phi = ConformalFactor::Expr(crate::geom::Expr::parse("0.3*x*x - 0.2*y + 0.1*x*y").unwrap());
        let c = MetricChart::conformal(phi).unwrap();
        let (p, v) = launch(&c, 0.7, 1.1);
        let tr = geodesic_trace(&c, p, v, 20.0).unwrap();
        for (q, w) in tr.points.iter().zip(&tr.velocities) {
            assert!((c.norm(*q, *w) - 1.0).abs() < 1e-8 * (1.0 + tr.length()));
        }
    }

    #[test]
    fn crossing_diagonals() {
        let a = Vec2::new(0.0, 0.0);
        let b = Vec2::new(1.0, 1.0);
        let c = Vec2::new(0.0, 1.0);
        let d = Vec2::new(1.0, 0.0);
        let (t, u, x) = segment_intersection(a, b, c, d).unwrap();
        assert!((t - 0.5).abs() < 1e-15 && (u - 0.5).abs() < 1e-15);
        assert!((x - Vec2::new(0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn uniform_segment_matches_trace() {
        let c = MetricChart::spherical_cap(1.0).unwrap();
        let (p, v) = launch(&c, 0.3, 0.9);
        let tr = geodesic_trace(&c, p, v, 10.0).unwrap();
        let seg = geodesic_segment(&c, p, v, tr.length(), 400);
        assert!((seg[400] - tr.end()).norm() < 1e-8);
    }
}
