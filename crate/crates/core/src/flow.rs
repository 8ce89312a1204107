//! Curve shortening flow with fixed endpoints for polylines in a chart.
//!
//! Each step solves the linearized gradient flow of the discrete length
//! `sum |x_{j+1} - x_j|_{g(midpoint)}` with mass `w_i g(x_i)`: the
//! second-difference part is implicit (a block tridiagonal solve), the
//! metric-derivative part explicit.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::curve::{discrete_curvature, first_self_intersection, polyline_length, resample_uniform, segment_lengths, CurveError, EMBED_TOL};
use crate::geom::linalg::Mat2;
use crate::geom::{MetricChart, Vec2};

/// Allowed length increase per step.
pub const LENGTH_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("length increased by {0:e} in one step")]
    LengthIncrease(f64),
    #[error("curve lost embeddedness at step {step} (segments {i} and {j})")]
    EmbeddednessLost { step: usize, i: usize, j: usize },
    #[error("vertex {index} left the disk at step {step}")]
    LeftDisk { step: usize, index: usize },
    #[error("time budget exhausted at t = {} with max curvature {:e}", .0.time, .0.max_curvature)]
    TimeBudgetExhausted(Box<FlowState>),
    #[error("singular linear system at step {0}")]
    Singular(usize),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

impl FlowError {
    /// True for the step-size violations grouped under `StepTooLarge`.
    pub fn is_step_too_large(&self) -> bool {
        matches!(self, FlowError::StepTooLarge { .. } | FlowError::LengthIncrease(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub time: f64,
    pub length: f64,
    pub max_curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowState {
    pub curve: Vec<Vec2>,
    pub time: f64,
    pub length_history: Vec<f64>,
    pub step_count: usize,
    pub converged: bool,
    pub max_curvature: f64,
    pub trace: Vec<TraceRecord>,
}

impl FlowState {
    pub fn new(chart: &MetricChart, curve: Vec<Vec2>) -> Self {
        let len = polyline_length(chart, &curve);
        let max_curvature = max_curvature(chart, &curve);
        FlowState { curve, time: 0.0, length_history: vec![len], step_count: 0, converged: false, max_curvature, trace: Vec::new() }
    }

    pub fn length(&self) -> f64 {
        *self.length_history.last().unwrap()
    }

    /// Writes the `(time, length, max_curvature)` trace as CSV.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["time", "length", "max_curvature"])?;
        for r in &self.trace {
            wr.write_record([r.time.to_string(), r.length.to_string(), r.max_curvature.to_string()])?;
        }
        wr.flush()
    }
}

fn max_curvature(chart: &MetricChart, curve: &[Vec2]) -> f64 {
    discrete_curvature(chart, curve).into_iter().fold(0.0, f64::max)
}

/// Minimum g-length of a segment, the `h` of the step restriction.
pub fn min_spacing(chart: &MetricChart, curve: &[Vec2]) -> f64 {
    segment_lengths(chart, curve).into_iter().fold(f64::INFINITY, f64::min)
}

/// Largest admissible time step `h^2 / 2`.
pub fn max_step(chart: &MetricChart, curve: &[Vec2]) -> f64 {
    let h = min_spacing(chart, curve);
    0.5 * h * h
}

fn to_mat(s: crate::geom::Sym2) -> Mat2 {
    Mat2::from_sym(s)
}

fn scale(m: Mat2, s: f64) -> Mat2 {
    Mat2::new(m.a * s, m.b * s, m.c * s, m.d * s)
}

fn add(m: Mat2, o: Mat2) -> Mat2 {
    Mat2::new(m.a + o.a, m.b + o.b, m.c + o.c, m.d + o.d)
}

/// One flow step of size `dt`. Endpoints are copied bitwise.
pub fn csf_step(chart: &MetricChart, st: &FlowState, dt: f64) -> Result<FlowState, FlowError> {
    let x = &st.curve;
    let n = x.len();
    let limit = max_step(chart, x);
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
        return Err(FlowError::StepTooLarge { dt, limit });
    }
    let step = st.step_count + 1;
    let mut next = x.clone();
    if n > 2 {
        let mut gs = Vec::with_capacity(n - 1);
        let mut ls = Vec::with_capacity(n - 1);
        let mut qs = Vec::with_capacity(n - 1);
        for j in 0..n - 1 {
            let d = x[j + 1] - x[j];
            let m = (x[j] + x[j + 1]) * 0.5;
            let g = chart.metric(m);
            let l = g.quad(d).sqrt();
            let [gx, gy] = chart.metric_derivatives(m);
            gs.push(to_mat(g));
            qs.push(Vec2::new(gx.quad(d), gy.quad(d)) * (0.25 / l));
            ls.push(l);
        }
        let m = n - 2;
        let mut diag = Vec::with_capacity(m);
        let mut lower = Vec::with_capacity(m);
        let mut upper = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for i in 1..n - 1 {
            let w = 0.5 * (ls[i - 1] + ls[i]);
            let mass = scale(to_mat(chart.metric(x[i])), w / dt);
            let a = scale(gs[i - 1], 1.0 / ls[i - 1]);
            let b = scale(gs[i], 1.0 / ls[i]);
            diag.push(add(mass, add(a, b)));
            lower.push(scale(a, -1.0));
            upper.push(scale(b, -1.0));
            // force -grad L with its tangential part removed
            let f = -(a.apply(x[i] - x[i - 1]) + b.apply(x[i] - x[i + 1]) + qs[i - 1] + qs[i]);
            let t = chart.normalize(x[i], x[i + 1] - x[i - 1]);
            let r = f - to_mat(chart.metric(x[i])).apply(t) * f.dot(t);
            rhs.push(r);
        }
        // block Thomas elimination
        let mut cp = vec![Mat2::default(); m];
        let mut dp = vec![Vec2::ZERO; m];
        for i in 0..m {
            let (den, r) = if i == 0 {
                (diag[0], rhs[0])
            } else {
                (diag[i].sub(&lower[i].mul(&cp[i - 1])), rhs[i] - lower[i].apply(dp[i - 1]))
            };
            let det = den.a * den.d - den.b * den.c;
            if !(det.abs() > 0.0) || !det.is_finite() {
                return Err(FlowError::Singular(step));
            }
            let inv = den.inverse();
            cp[i] = inv.mul(&upper[i]);
            dp[i] = inv.apply(r);
        }
        let mut sol = vec![Vec2::ZERO; m];
        sol[m - 1] = dp[m - 1];
        for i in (0..m - 1).rev() {
            sol[i] = dp[i] - cp[i].apply(sol[i + 1]);
        }
        for i in 1..n - 1 {
            next[i] = x[i] + sol[i - 1];
        }
    }
    for (index, p) in next.iter().enumerate().take(n - 1).skip(1) {
        if !p.is_finite() || p.norm() >= 1.0 {
            return Err(FlowError::LeftDisk { step, index });
        }
    }
    let old_len = st.length();
    let mut new_len = polyline_length(chart, &next);
    let lens = segment_lengths(chart, &next);
    let (lo, hi) = lens.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &l| (a.min(l), b.max(l)));
    if n > 3 && hi > 1.5 * lo {
        let r = resample_uniform(chart, &next, n - 1);
        let rl = polyline_length(chart, &r);
        if rl <= new_len {
            next = r;
            new_len = rl;
        }
    }
    if new_len > old_len + LENGTH_SLACK {
        return Err(FlowError::LengthIncrease(new_len - old_len));
    }
    if let Some((i, j)) = first_self_intersection(&next, EMBED_TOL) {
        return Err(FlowError::EmbeddednessLost { step, i, j });
    }
    let mut history = st.length_history.clone();
    history.push(new_len);
    Ok(FlowState {
        curve: next,
        time: st.time + dt,
        length_history: history,
        step_count: step,
        converged: false,
        max_curvature: f64::NAN,
        trace: st.trace.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Stop once the max discrete geodesic curvature drops below this.
    pub tol: f64,
    /// Time budget; `None` means `50 L0^2`.
    pub max_time: Option<f64>,
    /// Record a trace entry every this many steps (0 disables).
    pub trace_every: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { tol: 1e-6, max_time: None, trace_every: 0 }
    }
}

/// Flows until the curvature tolerance is met or the time budget runs out.
pub fn csf_run(chart: &MetricChart, curve: Vec<Vec2>, opts: &FlowOptions) -> Result<FlowState, FlowError> {
    if curve.len() < 2 {
        return Err(CurveError::TooFewVertices(curve.len()).into());
    }
    if let Some((i, j)) = first_self_intersection(&curve, EMBED_TOL) {
        return Err(FlowError::EmbeddednessLost { step: 0, i, j });
    }
    let mut st = FlowState::new(chart, curve);
    let max_time = opts.max_time.unwrap_or(50.0 * st.length() * st.length());
    // avoid storing an O(steps) history twice over
    let mut history = std::mem::take(&mut st.length_history);
    st.length_history = vec![*history.last().unwrap()];
    let check_every = 8;
    loop {
        let out_of_time = st.time >= max_time;
        if out_of_time || st.step_count % check_every == 0 {
            st.max_curvature = max_curvature(chart, &st.curve);
            if opts.trace_every > 0 && st.step_count % (opts.trace_every * check_every) == 0 {
                st.trace.push(TraceRecord { time: st.time, length: st.length(), max_curvature: st.max_curvature });
            }
            if st.max_curvature < opts.tol {
                st.converged = true;
                st.length_history = history;
                return Ok(st);
            }
            if out_of_time {
                st.length_history = history;
                return Err(FlowError::TimeBudgetExhausted(Box::new(st)));
            }
        }
        let dt = max_step(chart, &st.curve).min(max_time - st.time);
        let mut next = csf_step(chart, &st, dt)?;
        history.push(next.length());
        next.length_history = vec![next.length()];
        st = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::hausdorff;

    fn diameter(n: usize) -> Vec<Vec2> {
        (0..=n).map(|i| Vec2::new(1.0 - 2.0 * i as f64 / n as f64, 0.0)).collect()
    }

    #[test]
    fn straight_chord_is_fixed() {
        let c = MetricChart::flat();
        let st = FlowState::new(&c, diameter(32));
        let dt = max_step(&c, &st.curve);
        let next = csf_step(&c, &st, dt).unwrap();
        for (a, b) in next.curve.iter().zip(&st.curve) {
            assert!(a.dist(*b) < 1e-12);
        }
    }

    #[test]
    fn arc_moves_toward_chord() {
        let c = MetricChart::flat();
        // arc of the circle of radius 1/2 about (0, -0.3) joining its chord
        let center = Vec2::new(0.0, -0.3);
        let start = (0.3f64 / 0.5).asin();
        let n = 40;
        let pts: Vec<Vec2> = (0..=n)
            .map(|i| center + Vec2::polar(start + (std::f64::consts::PI - 2.0 * start) * i as f64 / n as f64) * 0.5)
            .collect();
        // put the endpoints on the unit circle by scaling the whole picture
        let s = 1.0 / pts[0].norm();
        let pts: Vec<Vec2> = pts.iter().map(|p| *p * s).collect();
        let st = FlowState::new(&c, pts.clone());
        let next = csf_step(&c, &st, max_step(&c, &pts)).unwrap();
        assert!(next.length() < st.length());
        for i in 1..n {
            assert!(next.curve[i].y < pts[i].y, "vertex {i}");
        }
    }

    #[test]
    fn oversized_step_is_rejected() {
        let c = MetricChart::flat();
        let zig: Vec<Vec2> = (0..=20).map(|i| Vec2::new(-0.5 + 0.05 * i as f64, if i % 2 == 0 { 0.0 } else { 0.04 })).collect();
        let st = FlowState::new(&c, zig.clone());
        let r = csf_step(&c, &st, 10.0 * max_step(&c, &zig));
        assert!(r.unwrap_err().is_step_too_large());
    }

    #[test]
    fn s_curve_converges_to_diameter() {
        let c = MetricChart::flat();
        let n = 64;
        let pts: Vec<Vec2> = (0..=n)
            .map(|i| {
                let s = i as f64 / n as f64;
                Vec2::new(1.0 - 2.0 * s, 0.3 * (2.0 * std::f64::consts::PI * s).sin())
            })
            .collect();
        let st = csf_run(&c, pts.clone(), &FlowOptions::default()).unwrap();
        assert!(st.converged);
        assert_eq!(st.curve[0], pts[0]);
        assert_eq!(st.curve[n], pts[n]);
        let d = hausdorff(&st.curve, &[Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0)]).unwrap();
        assert!(d < 1e-4, "{d}");
        for w in st.length_history.windows(2) {
            assert!(w[1] <= w[0] + LENGTH_SLACK);
        }
    }

    #[test]
    fn geodesic_input_converges_immediately() {
        let c = MetricChart::flat();
        let st = csf_run(&c, diameter(16), &FlowOptions::default()).unwrap();
        assert!(st.step_count <= 1);
    }
}
