//! Line sweepouts of the disk, their endpoint degree, flow tightening and
//! one-sided width estimates.
//!
//! Slice `(s, t)` of the line family is the region cut off by the chord whose
//! endpoints sit at boundary parameters `beta_s -+ pi t`, on the side of the
//! boundary arc around `beta_s`. Its relative boundary is the geodesic between
//! those endpoints, obtained by flowing the straight chart chord.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::capillary::find_capillary_geodesics;
use crate::curve::{hausdorff, l_theta, CurveError, DomainState, Side, SimpleDomain};
use crate::flow::{csf_run, FlowError, FlowOptions};
use crate::geom::linalg::angle_diff;
use crate::geom::{MetricChart, Vec2};

/// Adjacent slices must be within `CONTINUITY / grid_n` in Hausdorff distance.
pub const CONTINUITY: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinmaxError {
    #[error("grid_n = {0} is below the minimum 32")]
    GridTooSmall(usize),
    #[error("arity must be 1 or 2, got {0}")]
    InvalidArity(u8),
    #[error("row {row}: endpoint degree {degree}, expected 1")]
    DegreeCheckFailed { row: usize, degree: i64 },
    #[error("slices ({s0}, {t0}) and ({s1}, {t1}) are {dist} apart")]
    ContinuityCheckFailed { s0: usize, t0: usize, s1: usize, t1: usize, dist: f64 },
    #[error("column {0} does not run from the empty set to the disk")]
    BoundaryCondition(usize),
    #[error("row {0} contains an empty or full slice")]
    RowHasSentinel(usize),
    #[error("row index {0} is not strictly interior")]
    RowOutOfRange(usize),
    #[error("slice ({s}, {t}): {source}")]
    Flow { s: usize, t: usize, source: FlowError },
    #[error("slice ({s}, {t}): L^theta rose by {rise}")]
    TighteningIncrease { s: usize, t: usize, rise: f64 },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Construction parameters of a line family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFamily {
    /// Direction of the arity-1 family and offset of the arity-2 rotation.
    pub direction: f64,
    /// Segments per slice polyline.
    pub vertices: usize,
    /// Curvature tolerance when flowing chart chords to geodesics.
    pub flow_tol: f64,
}

impl Default for LineFamily {
    fn default() -> Self {
        LineFamily { direction: 0.0, vertices: 32, flow_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweepout {
    pub arity: u8,
    pub grid_n: usize,
    /// Direction `beta_s` of every row of slices (one for arity 1).
    pub directions: Vec<f64>,
    /// `slices[s][t]` for `t = 0..=grid_n`.
    pub slices: Vec<Vec<SimpleDomain>>,
}

impl Sweepout {
    pub fn slice(&self, s: usize, t: usize) -> &SimpleDomain {
        &self.slices[s][t]
    }

    pub fn s_count(&self) -> usize {
        self.slices.len()
    }

    /// `L^theta` of every slice, indexed like `slices`.
    pub fn values(&self, chart: &MetricChart, theta: f64) -> Result<Vec<Vec<f64>>, MinmaxError> {
        self.slices
            .par_iter()
            .map(|row| row.iter().map(|d| Ok(l_theta(chart, d, theta)?.l_theta)).collect())
            .collect()
    }

    /// Mirror image under `(x, y) -> (x, -y)`; reverses the endpoint degree.
    pub fn reflected(&self) -> Sweepout {
        let slices = self
            .slices
            .iter()
            .map(|row| {
                row.iter()
                    .map(|d| match d.state() {
                        DomainState::Proper => {
                            let c: Vec<Vec2> = d.curve().iter().map(|p| Vec2::new(p.x, -p.y)).collect();
                            SimpleDomain::proper(c, d.side().flip()).expect("reflection keeps validity")
                        }
                        _ => d.clone(),
                    })
                    .collect()
            })
            .collect();
        Sweepout { arity: self.arity, grid_n: self.grid_n, directions: self.directions.iter().map(|b| -b).collect(), slices }
    }
}

fn geodesic_chord(chart: &MetricChart, a: f64, b: f64, fam: &LineFamily) -> Result<Vec<Vec2>, FlowError> {
    let pa = chart.boundary_point(a);
    let pb = chart.boundary_point(b);
    let n = fam.vertices.max(2);
    let chord: Vec<Vec2> = (0..=n).map(|i| pa.lerp(pb, i as f64 / n as f64)).collect();
    let chord = {
        let mut c = chord;
        c[0] = pa;
        c[n] = pb;
        c
    };
    let opts = FlowOptions { tol: fam.flow_tol, max_time: None, trace_every: 0 };
    match csf_run(chart, chord, &opts) {
        Ok(st) => Ok(st.curve),
        Err(FlowError::TimeBudgetExhausted(st)) => Ok(st.curve),
        Err(e) => Err(e),
    }
}

fn line_slice(chart: &MetricChart, beta: f64, t: f64, fam: &LineFamily, s: usize, ti: usize) -> Result<SimpleDomain, MinmaxError> {
    if t <= 0.0 {
        return Ok(SimpleDomain::empty());
    }
    if t >= 1.0 {
        return Ok(SimpleDomain::full());
    }
    let phi = PI * t;
    let curve = geodesic_chord(chart, beta - phi, beta + phi, fam).map_err(|source| MinmaxError::Flow { s, t: ti, source })?;
    Ok(SimpleDomain::proper(curve, Side::Right)?)
}

/// Builds and verifies the line sweepout with default construction parameters.
pub fn build_line_sweepout(chart: &MetricChart, arity: u8, grid_n: usize) -> Result<Sweepout, MinmaxError> {
    build_line_sweepout_with(chart, arity, grid_n, &LineFamily::default())
}

/// Arity 2 uses `2 grid_n` directions so that neighbouring rows stay within
/// the continuity bound.
pub fn build_line_sweepout_with(chart: &MetricChart, arity: u8, grid_n: usize, fam: &LineFamily) -> Result<Sweepout, MinmaxError> {
    if grid_n < 32 {
        return Err(MinmaxError::GridTooSmall(grid_n));
    }
    let directions: Vec<f64> = match arity {
        1 => vec![fam.direction],
        2 => (0..2 * grid_n).map(|i| fam.direction + PI * i as f64 / grid_n as f64).collect(),
        a => return Err(MinmaxError::InvalidArity(a)),
    };
    let cells: Vec<(usize, usize)> = (0..directions.len()).flat_map(|s| (0..=grid_n).map(move |t| (s, t))).collect();
    let built: Vec<SimpleDomain> = cells
        .par_iter()
        .map(|&(s, t)| line_slice(chart, directions[s], t as f64 / grid_n as f64, fam, s, t))
        .collect::<Result<_, _>>()?;
    let slices = built.chunks(grid_n + 1).map(|c| c.to_vec()).collect();
    let sw = Sweepout { arity, grid_n, directions, slices };
    verify_sweepout(&sw)?;
    Ok(sw)
}

fn slice_distance(a: &SimpleDomain, b: &SimpleDomain) -> Option<f64> {
    if a.is_proper() && b.is_proper() {
        hausdorff(a.curve(), b.curve()).ok()
    } else {
        None
    }
}

/// Checks boundary conditions, discrete continuity and (arity 2) degree.
pub fn verify_sweepout(sw: &Sweepout) -> Result<(), MinmaxError> {
    let n = sw.grid_n;
    for (s, row) in sw.slices.iter().enumerate() {
        if row.len() != n + 1 || row[0].state() != DomainState::Empty || row[n].state() != DomainState::Full {
            return Err(MinmaxError::BoundaryCondition(s));
        }
    }
    let limit = CONTINUITY / n as f64;
    let rows = sw.s_count();
    let mut pairs = Vec::new();
    for s in 0..rows {
        for t in 0..n {
            pairs.push((s, t, s, t + 1));
            if sw.arity == 2 {
                pairs.push((s, t, (s + 1) % rows, t));
            }
        }
    }
    let bad = pairs.par_iter().find_map_first(|&(s0, t0, s1, t1)| {
        let d = slice_distance(&sw.slices[s0][t0], &sw.slices[s1][t1])?;
        (d > limit).then_some(MinmaxError::ContinuityCheckFailed { s0, t0, s1, t1, dist: d })
    });
    if let Some(e) = bad {
        return Err(e);
    }
    if sw.arity == 2 {
        for row in 1..n {
            let degree = endpoint_degree(sw, row)?;
            if degree != 1 {
                return Err(MinmaxError::DegreeCheckFailed { row, degree });
            }
        }
    }
    Ok(())
}

/// Winding number of `s -> e(Phi_{s,t})` around the boundary circle.
pub fn endpoint_degree(sw: &Sweepout, t_row: usize) -> Result<i64, MinmaxError> {
    if t_row == 0 || t_row >= sw.grid_n {
        return Err(MinmaxError::RowOutOfRange(t_row));
    }
    let rows = sw.s_count();
    let ends: Vec<f64> = (0..rows)
        .map(|s| sw.slices[s][t_row].endpoint().map_err(|_| MinmaxError::RowHasSentinel(t_row)))
        .collect::<Result<_, _>>()?;
    let mut total = 0.0;
    for s in 0..rows {
        let d = angle_diff(ends[s], ends[(s + 1) % rows]);
        if d.abs() >= PI - 1e-12 {
            return Err(MinmaxError::ContinuityCheckFailed { s0: s, t0: t_row, s1: (s + 1) % rows, t1: t_row, dist: d.abs() });
        }
        total += d;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Budget for tightening flows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowBudget {
    pub tol: f64,
    /// Common time budget for every slice.
    pub max_time: f64,
}

impl Default for FlowBudget {
    fn default() -> Self {
        FlowBudget { tol: 1e-6, max_time: 10.0 }
    }
}

/// Flows every proper slice with fixed endpoints. A slice that runs out of
/// time keeps its flowed curve.
pub fn tighten_sweepout(chart: &MetricChart, sw: &Sweepout, theta: f64, budget: FlowBudget) -> Result<Sweepout, MinmaxError> {
    let opts = FlowOptions { tol: budget.tol, max_time: Some(budget.max_time), trace_every: 0 };
    let cells: Vec<(usize, usize)> = (0..sw.s_count()).flat_map(|s| (0..=sw.grid_n).map(move |t| (s, t))).collect();
    let tightened: Vec<SimpleDomain> = cells
        .par_iter()
        .map(|&(s, t)| {
            let d = &sw.slices[s][t];
            if !d.is_proper() {
                return Ok(d.clone());
            }
            let curve = match csf_run(chart, d.curve().to_vec(), &opts) {
                Ok(st) => st.curve,
                Err(FlowError::TimeBudgetExhausted(st)) => st.curve,
                Err(source) => return Err(MinmaxError::Flow { s, t, source }),
            };
            let out = d.with_curve(curve)?;
            let before = l_theta(chart, d, theta)?.l_theta;
            let after = l_theta(chart, &out, theta)?.l_theta;
            if after > before + 1e-9 {
                return Err(MinmaxError::TighteningIncrease { s, t, rise: after - before });
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    let slices = tightened.chunks(sw.grid_n + 1).map(|c| c.to_vec()).collect();
    let out = Sweepout { arity: sw.arity, grid_n: sw.grid_n, directions: sw.directions.clone(), slices };
    verify_sweepout(&out)?;
    Ok(out)
}

/// Sup of a row of slice values, refined by the parabola through the
/// discrete maximum and its neighbours.
pub fn row_sup(values: &[f64]) -> f64 {
    let (j, &vj) = values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty row");
    if j == 0 || j + 1 == values.len() {
        return vj;
    }
    let (a, b) = (values[j - 1], values[j + 1]);
    let curv = a - 2.0 * vj + b;
    if curv < 0.0 {
        vj - (b - a) * (b - a) / (8.0 * curv)
    } else {
        vj
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidthOptions {
    pub grid_n: usize,
    pub family: LineFamily,
    pub budget: FlowBudget,
    /// Rows of the two-parameter family used as one-parameter sweepouts.
    pub directions: usize,
    /// Basepoints for the capillary geodesic search; 0 skips it.
    pub search_grid: usize,
}

impl Default for WidthOptions {
    fn default() -> Self {
        WidthOptions { grid_n: 64, family: LineFamily::default(), budget: FlowBudget::default(), directions: 8, search_grid: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthReport {
    pub theta: f64,
    pub w1_upper: f64,
    pub w2_upper: f64,
    pub lower_bound: f64,
    pub candidate_critical_values: Vec<f64>,
    /// `(direction, sup)` of every one-parameter family tried.
    pub w1_families: Vec<(f64, f64)>,
    pub grid_n: usize,
    pub diagnostics: Vec<String>,
}

/// One-sided width estimates from the tightened line family.
///
/// The one-parameter families are rows of the two-parameter one, so the
/// nesting `w1 <= w2` holds by construction.
pub fn estimate_widths(chart: &MetricChart, theta: f64, opts: &WidthOptions) -> Result<WidthReport, MinmaxError> {
    l_theta(chart, &SimpleDomain::empty(), theta)?;
    let sw = build_line_sweepout_with(chart, 2, opts.grid_n, &opts.family)?;
    let sw = tighten_sweepout(chart, &sw, theta, opts.budget)?;
    summarize_widths(chart, theta, &sw, opts)
}

/// Width estimates from an already tightened two-parameter line sweepout.
pub fn summarize_widths(chart: &MetricChart, theta: f64, sw: &Sweepout, opts: &WidthOptions) -> Result<WidthReport, MinmaxError> {
    let values = sw.values(chart, theta)?;
    let sups: Vec<f64> = values.iter().map(|r| row_sup(r)).collect();
    let w2_upper = sups.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rows = sw.s_count();
    let picks = opts.directions.clamp(1, rows);
    let w1_families: Vec<(f64, f64)> = (0..picks).map(|i| i * rows / picks).map(|s| (sw.directions[s], sups[s])).collect();
    let w1_upper = w1_families.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    let lower_bound = theta.cos() * chart.boundary_length();

    let mut candidate_critical_values = Vec::new();
    if opts.search_grid >= 16 {
        if let Ok(found) = find_capillary_geodesics(chart, theta, opts.search_grid) {
            for g in found.geodesics {
                let v = g.measure.l_theta;
                if !candidate_critical_values.iter().any(|c: &f64| (c - v).abs() < 1e-9) {
                    candidate_critical_values.push(v);
                }
            }
            candidate_critical_values.sort_by(f64::total_cmp);
        }
    }

    let mut diagnostics = Vec::new();
    if !(lower_bound < w1_upper) {
        diagnostics.push(format!("lower bound {lower_bound} is not below w1 {w1_upper}"));
    }
    if w1_upper > w2_upper + 1e-9 {
        diagnostics.push(format!("w1 {w1_upper} exceeds w2 {w2_upper}"));
    }
    if let Some(min) = candidate_critical_values.first() {
        if *min > w1_upper + 1e-3 {
            diagnostics.push(format!("smallest critical value {min} is above w1 {w1_upper}"));
        }
    }
    Ok(WidthReport {
        theta,
        w1_upper,
        w2_upper,
        lower_bound,
        candidate_critical_values,
        w1_families,
        grid_n: sw.grid_n,
        diagnostics,
    })
}
