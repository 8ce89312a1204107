//! Geodesic lassos: shots that return to their own basepoint.
//!
//! For each basepoint the closing condition (arrival = basepoint) is solved
//! in the launch angle; criticality (equal boundary angles at both ends) is
//! then root-found along the basepoint circle.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{closing_gap, shoot_with, CapillaryError, Shot};
use crate::geom::linalg::wrap_angle;
use crate::geom::{MetricChart, TraceOptions, Vec2};

/// Classification threshold on `|<gamma'(0) - gamma'(L), v>|`.
pub const LASSO_CRITICAL_TOL: f64 = 1e-5;

/// Crossings closer than this (in arclength) to either end are the basepoint
/// itself, not an interior self-intersection.
const END_ZONE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LassoGrid {
    pub basepoints: usize,
    pub angles: usize,
}

impl Default for LassoGrid {
    fn default() -> Self {
        LassoGrid { basepoints: 16, angles: 96 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LassoRecord {
    pub basepoint: f64,
    pub launch_angle: f64,
    pub length: f64,
    /// `|<gamma'(0) - gamma'(L), T>|`, zero for a critical lasso.
    pub criticality_residual: f64,
    /// Boundary angle of the initial tangent.
    pub alpha0: f64,
    /// Boundary angle of the reversed final tangent.
    pub alpha_l: f64,
    /// Chart distance between the start and end points.
    pub closing_error: f64,
    pub critical: bool,
    #[serde(skip)]
    pub path: Vec<Vec2>,
}

impl LassoRecord {
    /// `cos(alpha0) - cos(alpha_l)`, the signed criticality defect.
    pub fn signed_residual(&self) -> f64 {
        self.alpha0.cos() - self.alpha_l.cos()
    }
}

fn lasso_options() -> TraceOptions {
    TraceOptions { step: None, stop_on_self_intersection: false, record_crossings: true }
}

fn shoot(chart: &MetricChart, p: f64, alpha: f64, max_len: f64) -> Option<Shot> {
    shoot_with(chart, p, alpha, max_len, &lasso_options()).ok()
}

fn gap(chart: &MetricChart, p: f64, alpha: f64, max_len: f64) -> Option<f64> {
    closing_gap(&shoot(chart, p, alpha, max_len)?)
}

fn record(chart: &MetricChart, shot: &Shot) -> Option<LassoRecord> {
    let q = shot.arrival?;
    let len = shot.length();
    let simple = shot.trajectory.crossings.iter().all(|c| c.s_early < END_ZONE || c.s_late > len - END_ZONE);
    if !simple {
        return None;
    }
    let p = shot.basepoint;
    let start = shot.trajectory.start();
    let tan = chart.boundary_tangent(p);
    let d = shot.trajectory.start_tangent() - shot.trajectory.end_tangent();
    Some(LassoRecord {
        basepoint: p,
        launch_angle: shot.launch_angle,
        length: len,
        criticality_residual: chart.inner(start, d, tan).abs(),
        alpha0: shot.launch_angle,
        alpha_l: shot.arrival_angle?,
        closing_error: start.dist(chart.boundary_point(q)),
        critical: false,
        path: shot.trajectory.points.clone(),
    })
    .map(|mut r| {
        r.critical = r.criticality_residual < LASSO_CRITICAL_TOL;
        r
    })
}

/// Solves the closing condition in the launch angle on `[lo, hi]`, which
/// must bracket a sign change of the closing gap. Returns the simple lasso
/// if the root closes within `1e-5`.
pub fn close_lasso(chart: &MetricChart, p: f64, lo: f64, hi: f64, max_len: f64) -> Option<LassoRecord> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = gap(chart, p, a, max_len)?;
    let fb = gap(chart, p, b, max_len)?;
    if fa == 0.0 {
        b = a;
    } else if (fa > 0.0) == (fb > 0.0) {
        return None;
    }
    while b - a > 1e-14 {
        let m = 0.5 * (a + b);
        let fm = gap(chart, p, m, max_len)?;
        if fm.abs() < 1e-14 {
            a = m;
            b = m;
            break;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let shot = shoot(chart, p, 0.5 * (a + b), max_len)?;
    let r = record(chart, &shot)?;
    (r.closing_error < 1e-5).then_some(r)
}

/// Closing root near `guess`, searched in growing brackets.
fn close_near(chart: &MetricChart, p: f64, guess: f64, max_len: f64) -> Option<LassoRecord> {
    for w in [0.005, 0.02, 0.06] {
        let lo = (guess - w).max(1e-9);
        let hi = (guess + w).min(PI - 1e-9);
        if let Some(r) = close_lasso(chart, p, lo, hi, max_len) {
            return Some(r);
        }
    }
    None
}

/// All simple closing lassos from basepoint `p` found on an angle grid.
fn closings_at(chart: &MetricChart, p: f64, angles: usize, max_len: f64) -> Vec<LassoRecord> {
    let alphas: Vec<f64> = (0..angles).map(|j| PI * (j as f64 + 0.5) / angles as f64).collect();
    let gaps: Vec<Option<f64>> = alphas.iter().map(|&a| gap(chart, p, a, max_len)).collect();
    let mut out = Vec::new();
    for j in 0..angles - 1 {
        let (Some(ga), Some(gb)) = (gaps[j], gaps[j + 1]) else { continue };
        // a jump across the antipode of the basepoint is a wrap, not a root
        if ga.abs() > 1.0 || gb.abs() > 1.0 {
            continue;
        }
        if (ga > 0.0) != (gb > 0.0) || ga == 0.0 {
            if let Some(r) = close_lasso(chart, p, alphas[j], alphas[j + 1], max_len) {
                out.push(r);
            }
        }
    }
    out
}

/// Bisects the signed residual along the basepoint between two closings of
/// the same branch.
fn refine_critical(chart: &MetricChart, a: &LassoRecord, b: &LassoRecord, b_base: f64, max_len: f64) -> Option<LassoRecord> {
    let (mut pa, mut pb) = (a.basepoint, b_base);
    let (mut ra, mut aa, mut ab) = (a.signed_residual(), a.launch_angle, b.launch_angle);
    let mut best: Option<LassoRecord> = None;
    for _ in 0..60 {
        let pm = 0.5 * (pa + pb);
        let r = close_near(chart, wrap_angle(pm), 0.5 * (aa + ab), max_len)?;
        let rm = r.signed_residual();
        let done = r.critical || pb - pa < 1e-12;
        if (rm > 0.0) == (ra > 0.0) {
            pa = pm;
            ra = rm;
            aa = r.launch_angle;
        } else {
            pb = pm;
            ab = r.launch_angle;
        }
        best = Some(r);
        if done {
            break;
        }
    }
    best.filter(|r| r.critical)
}

/// Scans `(basepoint x launch angle)` for simple lassos of length at most
/// `length_bound` and returns the critical ones.
///
/// An empty result is numerical evidence only.
pub fn find_critical_lassos(chart: &MetricChart, length_bound: f64, grid: LassoGrid) -> Result<Vec<LassoRecord>, CapillaryError> {
    if !(length_bound > 0.0) {
        return Err(CapillaryError::InvalidBound(length_bound));
    }
    let nb = grid.basepoints.max(1);
    let na = grid.angles.max(2);
    let bases: Vec<f64> = (0..nb).map(|i| 2.0 * PI * i as f64 / nb as f64).collect();
    let per_base: Vec<Vec<LassoRecord>> = bases.par_iter().map(|&p| closings_at(chart, p, na, length_bound)).collect();

    let mut found: Vec<LassoRecord> = per_base.iter().flatten().filter(|r| r.critical).cloned().collect();
    // sign changes of the residual along each branch between adjacent basepoints
    let pairs: Vec<(LassoRecord, LassoRecord, f64)> = (0..nb)
        .flat_map(|i| {
            let next = (i + 1) % nb;
            let b_base = if next == 0 { 2.0 * PI } else { bases[next] };
            let mut v = Vec::new();
            for a in per_base[i].iter().filter(|r| !r.critical) {
                let partner = per_base[next]
                    .iter()
                    .filter(|r| !r.critical && (r.launch_angle - a.launch_angle).abs() < 0.2)
                    .min_by(|x, y| (x.launch_angle - a.launch_angle).abs().total_cmp(&(y.launch_angle - a.launch_angle).abs()));
                if let Some(b) = partner {
                    if (a.signed_residual() > 0.0) != (b.signed_residual() > 0.0) {
                        v.push((a.clone(), b.clone(), b_base));
                    }
                }
            }
            v
        })
        .collect();
    let refined: Vec<LassoRecord> =
        pairs.par_iter().filter_map(|(a, b, bb)| refine_critical(chart, a, b, *bb, length_bound)).collect();
    found.extend(refined);
    found.retain(|r| r.length <= length_bound);
    found.sort_by(|a, b| a.basepoint.total_cmp(&b.basepoint).then(a.launch_angle.total_cmp(&b.launch_angle)));
    found.dedup_by(|a, b| (a.basepoint - b.basepoint).abs() < 1e-7 && (a.launch_angle - b.launch_angle).abs() < 1e-7);
    Ok(found)
}
