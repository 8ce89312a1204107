//! The capped-cone disk whose boundary turns by `k < pi`, and the exact cone
//! development used as a geodesic oracle.
//!
//! The cone `r = c u` with `c = k / sqrt(4 pi^2 - k^2)` unrolls isometrically
//! onto a planar sector of angle `k`: the surface point `(u, t)` goes to polar
//! coordinates `(l, phi) = (u sqrt(1 + c^2), t k / 2 pi)`. Geodesics that stay
//! in the cone region are straight segments in the development.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::capillary::{close_lasso, shoot_from_boundary, shot_length_cap, CapillaryError, LassoRecord};
use crate::geom::revolution::cone_slope;
use crate::geom::{GeomError, HitKind, Meridian, MetricChart, SelfCrossing, Trajectory, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("turning angle k = {0} outside (0, pi)")]
    InvalidK(f64),
    #[error("no spherical cap blends into the cone: {0}")]
    BlendFailure(String),
    #[error("development segment reaches u = {min_u:.6} below the cone region (u0 = {u0:.6})")]
    LeavesConeRegion { min_u: f64, u0: f64 },
    #[error("launch angle {0} outside (0, pi)")]
    InvalidAngle(f64),
    #[error("no lasso closes near launch angle {0}")]
    LassoNotFound(f64),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Capillary(#[from] CapillaryError),
}

/// Checks of the profile conditions on samples of `u in (s, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileCheck {
    pub samples: usize,
    pub min_dr: f64,
    pub max_ddr: f64,
    /// `max |r(u) - c u|` over samples with `u >= u0`.
    pub cone_deviation: f64,
    pub total_turning: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharpnessDisk {
    k: f64,
    c: f64,
    u0: f64,
    meridian: Meridian,
    chart: MetricChart,
    check: ProfileCheck,
}

/// Builds the capped cone for `k` and verifies its profile on 1000 samples.
pub fn build_sharpness_disk(k: f64) -> Result<SharpnessDisk, ConeError> {
    let meridian = Meridian::capped_cone(k).ok_or(ConeError::InvalidK(k))?;
    let c = cone_slope(k);
    let u0 = (k / 2.0).cos() / 2.0;
    if !(meridian.tip_u() > 0.0 && meridian.tip_u() < u0 && meridian.cap_radius() > 0.0) {
        return Err(ConeError::BlendFailure(format!("{meridian:?}")));
    }
    let chart = MetricChart::revolution(meridian)?.with_label(format!("sharpness disk k={k:.10}"));
    let check = profile_check(&meridian, c, u0, 1000);
    let ok = check.min_dr > 0.0 && check.max_ddr <= 1e-9 && check.cone_deviation < 1e-12 && (check.total_turning - k).abs() < 1e-3;
    if !ok {
        return Err(ConeError::BlendFailure(format!("{check:?}")));
    }
    Ok(SharpnessDisk { k, c, u0, meridian, chart, check })
}

fn profile_check(m: &Meridian, c: f64, u0: f64, n: usize) -> ProfileCheck {
    let s = m.tip_u();
    let mut min_dr = f64::INFINITY;
    let mut max_ddr = f64::NEG_INFINITY;
    let mut dev: f64 = 0.0;
    for i in 1..=n {
        let u = s + (1.0 - s) * i as f64 / n as f64;
        let sigma = m.sigma_of_u(u);
        let p = m.profile(sigma);
        min_dr = min_dr.min(p.dr);
        max_ddr = max_ddr.max(p.ddr);
        if u >= u0 {
            dev = dev.max((p.r - c * u).abs());
        }
    }
    ProfileCheck { samples: n, min_dr, max_ddr, cone_deviation: dev, total_turning: TAU * m.dr(m.total_len()) }
}

impl SharpnessDisk {
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn slope(&self) -> f64 {
        self.c
    }

    /// Start of the cone region.
    pub fn u0(&self) -> f64 {
        self.u0
    }

    /// Axis point `s` of the cap.
    pub fn tip_u(&self) -> f64 {
        self.meridian.tip_u()
    }

    pub fn meridian(&self) -> &Meridian {
        &self.meridian
    }

    pub fn chart(&self) -> &MetricChart {
        &self.chart
    }

    pub fn profile_check(&self) -> &ProfileCheck {
        &self.check
    }

    /// Generator length `l(u) = u sqrt(1 + c^2)` of the development.
    pub fn development_radius(&self, u: f64) -> f64 {
        u * (1.0 + self.c * self.c).sqrt()
    }

    /// Opening angle of the developed sector, `2 pi c / sqrt(1 + c^2)`.
    pub fn sector_angle(&self) -> f64 {
        TAU * self.c / (1.0 + self.c * self.c).sqrt()
    }

    /// Length `2 l(1) sin(k/2)` of the boundary lasso at contact angle `k/2`.
    pub fn lasso_length(&self) -> f64 {
        2.0 * self.development_radius(1.0) * (self.k / 2.0).sin()
    }

    /// Largest launch angle below `pi/2` whose development stays in the cone
    /// region (the range is symmetric about `pi/2`).
    pub fn max_cone_angle(&self) -> f64 {
        self.u0.acos()
    }
}

/// Straight development segment from boundary parameter `p` at contact angle
/// `alpha`, rolled back onto the chart. Stops at the first self-crossing.
pub fn unroll_geodesic_oracle(disk: &SharpnessDisk, p: f64, alpha: f64) -> Result<Trajectory, ConeError> {
    unroll(disk, p, alpha, true)
}

/// Like [`unroll_geodesic_oracle`] but runs to the boundary and records every
/// crossing.
pub fn unroll_geodesic_full(disk: &SharpnessDisk, p: f64, alpha: f64) -> Result<Trajectory, ConeError> {
    unroll(disk, p, alpha, false)
}

fn unroll(disk: &SharpnessDisk, p: f64, alpha: f64, stop: bool) -> Result<Trajectory, ConeError> {
    if !(alpha > 0.0 && alpha < PI) {
        return Err(ConeError::InvalidAngle(alpha));
    }
    let k = disk.k;
    let l1 = (1.0 + disk.c * disk.c).sqrt();
    // distance from the apex to the developed line is l1 |cos alpha|
    let min_u = alpha.cos().abs();
    if min_u < disk.u0 {
        return Err(ConeError::LeavesConeRegion { min_u, u0: disk.u0 });
    }
    let d = l1 * min_u;
    let half_sweep = alpha.min(PI - alpha);
    let phi0 = p * k / TAU;
    let start = Vec2::polar(phi0) * l1;
    let e_r = Vec2::polar(phi0);
    let e_phi = e_r.perp();
    let w = e_phi * alpha.cos() - e_r * alpha.sin();
    let total = 2.0 * l1 * alpha.sin();
    let mid = l1 * alpha.sin();

    // crossings: points symmetric about the foot of the perpendicular whose
    // polar angles differ by a multiple of k
    let mut crossings = Vec::new();
    let mut m = 1;
    while (m as f64) * k / 2.0 < half_sweep {
        let off = d * (m as f64 * k / 2.0).tan();
        let s_late = mid + off;
        let s_early = mid - off;
        crossings.push(SelfCrossing { point: roll(disk, phi0, start + w * s_late), s_late, s_early });
        m += 1;
    }
    let (end_s, hit) = match (stop, crossings.first()) {
        (true, Some(c)) => (c.s_late, HitKind::SelfIntersection),
        _ => (total, HitKind::BoundaryHit),
    };
    if stop && !crossings.is_empty() {
        crossings.truncate(1);
    }

    let n = ((end_s / 1e-3).ceil() as usize).max(2);
    let mut points = Vec::with_capacity(n + 1);
    let mut velocities = Vec::with_capacity(n + 1);
    let mut arclength = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let s = end_s * i as f64 / n as f64;
        let x = start + w * s;
        let mut pt = roll(disk, phi0, x);
        if i == n && hit == HitKind::BoundaryHit {
            pt = pt / pt.norm();
        }
        points.push(pt);
        velocities.push(roll_velocity(disk, phi0, x, w));
        arclength.push(s);
    }
    Ok(Trajectory { points, velocities, arclength, hit, crossings })
}

/// Polar angle of `x`, continued from `phi0` (segments subtend less than pi).
fn unwrap_angle(phi0: f64, x: Vec2) -> f64 {
    let e = Vec2::polar(phi0);
    phi0 + e.cross(x).atan2(e.dot(x))
}

fn roll(disk: &SharpnessDisk, phi0: f64, x: Vec2) -> Vec2 {
    let q = (1.0 + disk.c * disk.c).sqrt();
    let t = unwrap_angle(phi0, x) * TAU / disk.k;
    disk.chart.from_surface(x.norm() / q, t).expect("revolution chart")
}

fn roll_velocity(disk: &SharpnessDisk, phi0: f64, x: Vec2, w: Vec2) -> Vec2 {
    let m = &disk.meridian;
    let q = (1.0 + disk.c * disk.c).sqrt();
    let l = x.norm();
    let dl = x.dot(w) / l;
    let dphi = x.cross(w) / (l * l);
    let t = unwrap_angle(phi0, x) * TAU / disk.k;
    let dt = dphi * TAU / disk.k;
    // on the cone region sigma and l differ by a constant
    let smax = m.total_len();
    let rho = m.sigma_of_u(l / q) / smax;
    let drho = dl / smax;
    Vec2::polar(t) * drho + Vec2::polar(t).perp() * (rho * dt)
}

/// One boundary shot of the sharpness verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShotSummary {
    pub basepoint: f64,
    pub self_intersects: bool,
    pub arrival: Option<f64>,
    pub arrival_angle: Option<f64>,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpnessReport {
    pub k: f64,
    pub epsilon: f64,
    pub angle_theta: f64,
    /// The lasso closed by ODE shooting near launch angle `k/2`.
    pub lasso: LassoRecord,
    /// Length of the development lasso, `2 l(1) sin(k/2)`.
    pub oracle_lasso_length: f64,
    /// Length of the rolled-back development segment at `k/2`.
    pub oracle_trace_length: f64,
    pub all_shots_self_intersect: bool,
    pub shots: Vec<ShotSummary>,
    /// Spread of arrival angles over the shots that arrive.
    pub arrival_angle_spread: Option<f64>,
    pub boundary_turning: f64,
}

/// Basepoints shot at `theta = k/2 + epsilon`.
pub const VERIFY_SHOTS: usize = 64;

/// Closes the lasso near `k/2` from basepoint 0 and shoots at
/// `theta = k/2 + epsilon` from [`VERIFY_SHOTS`] basepoints.
pub fn verify_sharpness(disk: &SharpnessDisk, epsilon: f64) -> Result<SharpnessReport, ConeError> {
    let k = disk.k;
    let theta = k / 2.0 + epsilon;
    if !(theta > 0.0 && theta < PI / 2.0) {
        return Err(ConeError::InvalidAngle(theta));
    }
    let chart = &disk.chart;
    let cap = shot_length_cap(chart);
    let half = k / 2.0;
    let lasso = [0.02, 0.05, 0.1]
        .iter()
        .find_map(|w| close_lasso(chart, 0.0, half - w, half + w, cap))
        .ok_or(ConeError::LassoNotFound(half))?;
    let oracle = unroll_geodesic_oracle(disk, 0.0, half)?;
    let shots: Vec<ShotSummary> = (0..VERIFY_SHOTS)
        .into_par_iter()
        .map(|i| {
            let p = TAU * i as f64 / VERIFY_SHOTS as f64;
            let s = shoot_from_boundary(chart, p, theta, cap)?;
            Ok(ShotSummary {
                basepoint: p,
                self_intersects: s.self_intersects,
                arrival: s.arrival,
                arrival_angle: s.arrival_angle,
                length: s.length(),
            })
        })
        .collect::<Result<_, CapillaryError>>()?;
    let all_shots_self_intersect = shots.iter().all(|s| s.self_intersects);
    let angles: Vec<f64> = shots.iter().filter_map(|s| s.arrival_angle).collect();
    let arrival_angle_spread = (!angles.is_empty()).then(|| {
        let lo = angles.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = angles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    });
    Ok(SharpnessReport {
        k,
        epsilon,
        angle_theta: theta,
        lasso,
        oracle_lasso_length: disk.lasso_length(),
        oracle_trace_length: oracle.length(),
        all_shots_self_intersect,
        shots,
        arrival_angle_spread,
        boundary_turning: chart.total_boundary_curvature(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::geodesic_trace;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn half_turn_constants() {
        let d = build_sharpness_disk(FRAC_PI_2).unwrap();
        assert!((d.slope() - 1.0 / (2.0 * 3.75f64.sqrt())).abs() < 1e-15);
        assert!((d.sector_angle() - FRAC_PI_2).abs() < 1e-12);
        assert!((d.lasso_length() - 1.4605934866804426).abs() < 1e-12);
        let kappa = d.chart().boundary_geodesic_curvature(Vec2::new(1.0, 0.0)).unwrap();
        assert!((kappa - 1.0 / (1.0 + d.slope().powi(2)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_k() {
        assert!(matches!(build_sharpness_disk(0.0), Err(ConeError::InvalidK(_))));
        assert!(matches!(build_sharpness_disk(PI), Err(ConeError::InvalidK(_))));
    }

    fn launch(chart: &MetricChart, t: f64, alpha: f64) -> (Vec2, Vec2) {
        let v = chart.boundary_tangent(t) * alpha.cos() + chart.inward_normal(t) * alpha.sin();
        (chart.boundary_point(t), v)
    }

    #[test]
    fn ode_lasso_returns_to_start() {
        let d = build_sharpness_disk(FRAC_PI_2).unwrap();
        let (p, v) = launch(d.chart(), 0.4, FRAC_PI_2 / 2.0);
        let tr = geodesic_trace(d.chart(), p, v, 10.0).unwrap();
        assert_eq!(tr.hit, HitKind::BoundaryHit);
        assert!((tr.end() - p).norm() < 1e-4, "{:?}", tr.end());
        assert!((tr.length() - d.lasso_length()).abs() < 1e-6);
    }

    #[test]
    fn oracle_matches_ode_endpoints() {
        let d = build_sharpness_disk(FRAC_PI_2).unwrap();
        for &(t, a) in &[(0.0, 0.5), (1.3, 0.9), (2.0, 0.3), (4.0, 2.5), (5.5, 1.15)] {
            let or = unroll_geodesic_oracle(&d, t, a).unwrap();
            let (p, v) = launch(d.chart(), t, a);
            assert!((or.start_tangent() - v).norm() < 1e-9);
            let tr = geodesic_trace(d.chart(), p, v, 10.0).unwrap();
            assert_eq!(tr.hit, or.hit, "t={t} a={a}");
            assert!((tr.end() - or.end()).norm() < 1e-5, "t={t} a={a} {}", (tr.end() - or.end()).norm());
            assert!((tr.length() - or.length()).abs() < 1e-5);
        }
    }

    #[test]
    fn oracle_declines_cap_trajectories() {
        let d = build_sharpness_disk(FRAC_PI_2).unwrap();
        let a = d.max_cone_angle() + 0.01;
        assert!(matches!(unroll_geodesic_oracle(&d, 0.0, a), Err(ConeError::LeavesConeRegion { .. })));
    }

    #[test]
    fn self_intersection_just_past_half_turning() {
        let d = build_sharpness_disk(FRAC_PI_2).unwrap();
        let or = unroll_geodesic_oracle(&d, 0.0, FRAC_PI_2 / 2.0 + 0.05).unwrap();
        assert_eq!(or.hit, HitKind::SelfIntersection);
        let or = unroll_geodesic_oracle(&d, 0.0, FRAC_PI_2 / 2.0 - 0.05).unwrap();
        assert_eq!(or.hit, HitKind::BoundaryHit);
    }

    #[test]
    fn sharpness_past_half_turning() {
        let d = build_sharpness_disk(FRAC_PI_2).unwrap();
        let r = verify_sharpness(&d, 0.05).unwrap();
        assert!(r.all_shots_self_intersect);
        assert!((r.lasso.alpha0 - FRAC_PI_4).abs() < 1e-3 && (r.lasso.alpha_l - FRAC_PI_4).abs() < 1e-3);
        assert!((r.lasso.length - r.oracle_lasso_length).abs() < 1e-3);
        assert!((r.oracle_trace_length - r.oracle_lasso_length).abs() < 1e-9);
        assert!(r.lasso.critical);
    }

    #[test]
    fn sharpness_below_half_turning_arrives() {
        let d = build_sharpness_disk(FRAC_PI_2).unwrap();
        let r = verify_sharpness(&d, -0.3).unwrap();
        assert!(!r.all_shots_self_intersect);
        assert!(r.shots.iter().all(|s| s.arrival.is_some()));
        assert!(r.arrival_angle_spread.unwrap() < 1e-6);
    }
}
