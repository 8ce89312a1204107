//! Capillary geodesics and geodesic lassos located by shooting from the
//! boundary, plus the second variation spectrum of a capillary chord.

mod lasso;
mod spectrum;
mod star;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::curve::{first_variation_residual, l_theta, CapillaryMeasure, CurveError, FirstVariation, Side, SimpleDomain};
use crate::geom::linalg::{angle_diff, wrap_angle};
use crate::geom::{geodesic_segment, geodesic_trace_with, GeomError, HitKind, MetricChart, TraceOptions, Trajectory, Vec2};

pub use lasso::{close_lasso, find_critical_lassos, LassoGrid, LassoRecord, LASSO_CRITICAL_TOL};
pub use spectrum::{jacobi_form, morse_index, morse_index_with, SpectrumReport, DEFAULT_NODES};
pub use star::{star_hypothesis_check, StarBound, StarReport, StarVerdict};

/// Threshold on both parts of the first-variation residual.
pub const RESIDUAL_TOL: f64 = 1e-5;

/// Defects below this on every sample mark a rotationally degenerate family.
pub const FAMILY_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapillaryError {
    #[error("launch angle {0} outside (0, pi)")]
    InvalidAngle(f64),
    #[error("contact angle {0} outside (0, pi/2)")]
    InvalidTheta(f64),
    #[error("grid of {got} points is below the minimum {min}")]
    GridTooSmall { got: usize, min: usize },
    #[error("shot from {p} does not return to the boundary ({hit:?})")]
    NoArrival { p: f64, hit: HitKind },
    #[error("no capillary geodesic found on {samples} basepoints ({arrivals} arrivals)")]
    NoneFound { samples: usize, arrivals: usize },
    #[error("first-variation residual {0} above threshold")]
    ResidualTooLarge(f64),
    #[error("non-positive length bound {0}")]
    InvalidBound(f64),
    #[error("width estimate for the lasso bound failed: {0}")]
    WidthEstimate(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

fn check_theta(theta: f64) -> Result<(), CapillaryError> {
    if theta > 0.0 && theta < PI / 2.0 {
        Ok(())
    } else {
        Err(CapillaryError::InvalidTheta(theta))
    }
}

/// A geodesic launched from the boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Shot {
    pub basepoint: f64,
    /// Angle to the counterclockwise boundary tangent.
    pub launch_angle: f64,
    pub trajectory: Trajectory,
    /// Boundary parameter of the arrival point.
    pub arrival: Option<f64>,
    /// Angle between the reversed arrival tangent and the clockwise boundary
    /// tangent, so that a flat chord arrives at its launch angle.
    pub arrival_angle: Option<f64>,
    pub self_intersects: bool,
}

impl Shot {
    pub fn length(&self) -> f64 {
        self.trajectory.length()
    }
}

/// Default length cap for boundary shots.
pub fn shot_length_cap(chart: &MetricChart) -> f64 {
    4.0 * chart.boundary_length()
}

/// g-unit launch direction at boundary parameter `p` and interior angle `alpha`.
pub fn launch_direction(chart: &MetricChart, p: f64, alpha: f64) -> Vec2 {
    chart.boundary_tangent(p) * alpha.cos() + chart.inward_normal(p) * alpha.sin()
}

/// Arrival angle of a unit velocity `v` reaching boundary parameter `q`.
pub fn arrival_angle(chart: &MetricChart, q: f64, v: Vec2) -> f64 {
    let p = chart.boundary_point(q);
    chart.inner(p, v, chart.boundary_tangent(q)).clamp(-1.0, 1.0).acos()
}

fn check_alpha(alpha: f64) -> Result<(), CapillaryError> {
    if alpha > 0.0 && alpha < PI {
        Ok(())
    } else {
        Err(CapillaryError::InvalidAngle(alpha))
    }
}

/// Traces from boundary parameter `p` at interior angle `alpha`, stopping at
/// the boundary, at the first self-intersection or after `max_len`.
pub fn shoot_from_boundary(chart: &MetricChart, p: f64, alpha: f64, max_len: f64) -> Result<Shot, CapillaryError> {
    shoot_with(chart, p, alpha, max_len, &TraceOptions::default())
}

pub(crate) fn shoot_with(
    chart: &MetricChart,
    p: f64,
    alpha: f64,
    max_len: f64,
    opts: &TraceOptions,
) -> Result<Shot, CapillaryError> {
    check_alpha(alpha)?;
    let p = wrap_angle(p);
    let start = chart.boundary_point(p);
    let v = launch_direction(chart, p, alpha);
    let trajectory = geodesic_trace_with(chart, start, v, max_len, opts)?;
    let (arrival, arrival_angle) = if trajectory.hit == HitKind::BoundaryHit {
        let q = chart.boundary_param(trajectory.end());
        (Some(q), Some(arrival_angle(chart, q, trajectory.end_tangent())))
    } else {
        (None, None)
    };
    let self_intersects = trajectory.self_intersects();
    Ok(Shot { basepoint: p, launch_angle: alpha, trajectory, arrival, arrival_angle, self_intersects })
}

/// Signed `arrival angle - theta` for the shot at angle `theta` from `p`.
pub fn capillary_defect(chart: &MetricChart, p: f64, theta: f64) -> Result<f64, CapillaryError> {
    check_theta(theta)?;
    let shot = shoot_from_boundary(chart, p, theta, shot_length_cap(chart))?;
    match shot.arrival_angle {
        Some(a) => Ok(a - theta),
        None => Err(CapillaryError::NoArrival { p: shot.basepoint, hit: shot.trajectory.hit }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapillaryGeodesic {
    pub domain: SimpleDomain,
    pub theta: f64,
    pub measure: CapillaryMeasure,
    pub residual: FirstVariation,
    pub basepoint: f64,
}

impl CapillaryGeodesic {
    /// g-length of the chord.
    pub fn length(&self) -> f64 {
        self.measure.interior_len
    }
}

/// Uniform arclength spacing of the polylines built from shots.
const SAMPLE_SPACING: f64 = 5e-4;

/// Resamples the shot from `p` at `alpha` as a domain whose relative boundary
/// is the traced chord, on the side left of the launch direction.
pub fn domain_from_shot(chart: &MetricChart, shot: &Shot) -> Result<SimpleDomain, CapillaryError> {
    let len = shot.length();
    let n = ((len / SAMPLE_SPACING).ceil() as usize).max(200);
    let p0 = shot.trajectory.start();
    let v0 = shot.trajectory.start_tangent();
    let mut pts = geodesic_segment(chart, p0, v0, len, n);
    // slide the last vertex along the final chord onto the circle; a radial
    // projection would leave a normal kink
    let e = pts[n];
    let d = e - pts[n - 1];
    let (a2, b1, c0) = (d.norm2(), e.dot(d), e.norm2() - 1.0);
    let tau = (-b1 + (b1 * b1 - a2 * c0).max(0.0).sqrt()) / a2;
    let end = e + d * tau;
    pts[n] = end / end.norm();
    pts[0] = p0;
    Ok(SimpleDomain::proper(pts, Side::Left)?)
}

/// Builds the capillary geodesic launched from `p` at angle `theta`.
pub fn capillary_geodesic_at(chart: &MetricChart, p: f64, theta: f64) -> Result<CapillaryGeodesic, CapillaryError> {
    check_theta(theta)?;
    let shot = shoot_from_boundary(chart, p, theta, shot_length_cap(chart))?;
    if shot.arrival.is_none() {
        return Err(CapillaryError::NoArrival { p: shot.basepoint, hit: shot.trajectory.hit });
    }
    let domain = domain_from_shot(chart, &shot)?;
    let measure = l_theta(chart, &domain, theta)?;
    let residual = first_variation_residual(chart, &domain, theta)?;
    Ok(CapillaryGeodesic { domain, theta, measure, residual, basepoint: shot.basepoint })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefectSample {
    pub basepoint: f64,
    /// `None` where the shot does not arrive.
    pub defect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapillarySearch {
    pub theta: f64,
    pub geodesics: Vec<CapillaryGeodesic>,
    /// Every sampled defect vanished: a rotationally degenerate family, one
    /// representative per sample.
    pub degenerate_family: bool,
    pub samples: Vec<DefectSample>,
}

fn refine_root(chart: &MetricChart, theta: f64, mut a: f64, mut fa: f64, mut b: f64) -> Option<f64> {
    // bisection on the basepoint; `b > a` may exceed 2 pi
    while b - a > 1e-8 {
        let m = 0.5 * (a + b);
        let fm = capillary_defect(chart, m, theta).ok()?;
        if fm == 0.0 {
            return Some(m);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Samples the defect on `grid_n` basepoints, isolates sign changes and
/// refines them to `1e-8` in the basepoint.
pub fn find_capillary_geodesics(chart: &MetricChart, theta: f64, grid_n: usize) -> Result<CapillarySearch, CapillaryError> {
    check_theta(theta)?;
    if grid_n < 16 {
        return Err(CapillaryError::GridTooSmall { got: grid_n, min: 16 });
    }
    let ps: Vec<f64> = (0..grid_n).map(|i| 2.0 * PI * i as f64 / grid_n as f64).collect();
    let samples: Vec<DefectSample> =
        ps.par_iter().map(|&p| DefectSample { basepoint: p, defect: capillary_defect(chart, p, theta).ok() }).collect();
    let arrivals = samples.iter().filter(|s| s.defect.is_some()).count();
    let degenerate_family = arrivals == grid_n && samples.iter().all(|s| s.defect.unwrap().abs() <= FAMILY_TOL);

    let roots: Vec<f64> = if degenerate_family {
        ps.clone()
    } else {
        let brackets: Vec<(f64, f64, f64)> = (0..grid_n)
            .filter_map(|i| {
                let a = samples[i];
                let b = samples[(i + 1) % grid_n];
                let (fa, fb) = (a.defect?, b.defect?);
                if fa == 0.0 {
                    return Some((a.basepoint, fa, a.basepoint));
                }
                if (fa > 0.0) != (fb > 0.0) && fb != 0.0 {
                    let hi = a.basepoint + 2.0 * PI / grid_n as f64;
                    return Some((a.basepoint, fa, hi));
                }
                None
            })
            .collect();
        brackets
            .par_iter()
            .filter_map(|&(a, fa, b)| if a == b { Some(a) } else { refine_root(chart, theta, a, fa, b) })
            .collect()
    };

    let geodesics: Vec<CapillaryGeodesic> = roots
        .par_iter()
        .filter_map(|&p| capillary_geodesic_at(chart, wrap_angle(p), theta).ok())
        .filter(|g| g.residual.max() < RESIDUAL_TOL)
        .collect();
    if geodesics.is_empty() {
        return Err(CapillaryError::NoneFound { samples: grid_n, arrivals });
    }
    Ok(CapillarySearch { theta, geodesics, degenerate_family, samples })
}

/// Signed boundary-parameter offset of the arrival from the basepoint.
pub(crate) fn closing_gap(shot: &Shot) -> Option<f64> {
    shot.arrival.map(|q| angle_diff(shot.basepoint, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    #[test]
    fn flat_shots_follow_the_tangent_chord_rule() {
        let c = MetricChart::flat();
        for p in [0.0, 1.0, 4.0] {
            let s = shoot_from_boundary(&c, p, PI / 2.0, 10.0).unwrap();
            assert!((s.arrival_angle.unwrap() - PI / 2.0).abs() < 1e-9);
            assert!(angle_diff(s.arrival.unwrap(), p + PI).abs() < 1e-9);
            assert!((s.length() - 2.0).abs() < 1e-9);
        }
        let s = shoot_from_boundary(&c, 0.0, FRAC_PI_3, 10.0).unwrap();
        assert!((s.arrival_angle.unwrap() - FRAC_PI_3).abs() < 1e-9);
        assert!(angle_diff(s.arrival.unwrap(), 2.0 * FRAC_PI_3).abs() < 1e-9);
        assert!(!s.self_intersects);
    }

    #[test]
    fn flat_defect_vanishes() {
        let c = MetricChart::flat();
        for theta in [FRAC_PI_3, FRAC_PI_4] {
            for i in 0..32 {
                let d = capillary_defect(&c, 2.0 * PI * i as f64 / 32.0, theta).unwrap();
                assert!(d.abs() < 1e-6, "theta {theta} i {i}: {d}");
            }
        }
    }

    #[test]
    fn flat_search_reports_the_family() {
        let c = MetricChart::flat();
        let r = find_capillary_geodesics(&c, FRAC_PI_3, 16).unwrap();
        assert!(r.degenerate_family);
        assert_eq!(r.geodesics.len(), 16);
        let g = &r.geodesics[3];
        let short = l_theta(&c, &g.domain.complement(), FRAC_PI_3).unwrap();
        assert!((short.l_theta - (3f64.sqrt() + FRAC_PI_3)).abs() < 1e-4);
        assert!((g.length() - 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn zero_conformal_factor_matches_flat() {
        let flat = MetricChart::flat();
        let conf = MetricChart::conformal_expr("0").unwrap();
        let a = find_capillary_geodesics(&flat, FRAC_PI_6, 16).unwrap();
        let b = find_capillary_geodesics(&conf, FRAC_PI_6, 16).unwrap();
        assert_eq!(a.degenerate_family, b.degenerate_family);
        assert_eq!(a.geodesics.len(), b.geodesics.len());
        for (x, y) in a.geodesics.iter().zip(&b.geodesics) {
            assert!((x.measure.l_theta - y.measure.l_theta).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_arguments() {
        let c = MetricChart::flat();
        assert!(matches!(capillary_defect(&c, 0.0, 1.7), Err(CapillaryError::InvalidTheta(_))));
        assert!(matches!(shoot_from_boundary(&c, 0.0, 0.0, 1.0), Err(CapillaryError::InvalidAngle(_))));
        assert!(matches!(find_capillary_geodesics(&c, 0.5, 8), Err(CapillaryError::GridTooSmall { .. })));
    }
}
