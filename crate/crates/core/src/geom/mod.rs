//! Riemannian 2-disks with strictly convex boundary, presented on the closed
//! unit disk of a coordinate chart.
//!
//! Every chart kind lives on `{|p| <= 1}` and the boundary parameter is the
//! polar angle `t in [0, 2pi)` of the boundary point `(cos t, sin t)`. Lengths,
//! angles and curvatures are always measured in the metric `g`, never in the
//! chart's Euclidean structure.

mod audit;
pub mod conformal;
pub mod expr;
pub mod linalg;
pub mod metric_file;
pub mod revolution;
mod trace;

use std::f64::consts::{PI, TAU};

use serde::Serialize;
use thiserror::Error;

pub use audit::{gauss_bonnet_audit, gauss_bonnet_audit_at, GaussBonnetAudit};
pub use conformal::{ConformalFactor, GridField};
pub use expr::{Expr, Jet};
pub use linalg::{Sym2, Vec2};
pub use revolution::Meridian;
pub use trace::{
    geodesic_segment, geodesic_trace, geodesic_trace_with, HitKind, SelfCrossing, TraceOptions, Trajectory,
};
pub(crate) use trace::{segment_intersection, SegmentGrid};

/// Tolerance for deciding that a chart point lies on the unit circle.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("curvature requested at the revolution axis point")]
    TipSingularity,
    #[error("non-finite curvature at ({0}, {1})")]
    NonFiniteCurvature(f64, f64),
    #[error("point ({0}, {1}) is not on the boundary circle")]
    NotOnBoundary(f64, f64),
    #[error("geodesic left the chart at ({0}, {1})")]
    LeftChart(f64, f64),
    #[error("integration step underflow ({0:e})")]
    StepUnderflow(f64),
    #[error("initial tangent is not unit length in the metric (|v|_g = {0})")]
    NotUnitTangent(f64),
    #[error("invalid trace request: {0}")]
    InvalidTrace(String),
    #[error("boundary is not strictly convex: kappa = {kappa} at t = {t}")]
    NonConvexBoundary { t: f64, kappa: f64 },
    #[error("invalid revolution profile: {0}")]
    InvalidProfile(String),
    #[error("quadrature refinement did not reduce the Gauss-Bonnet residual ({coarse:e} -> {fine:e})")]
    QuadratureFailure { coarse: f64, fine: f64 },
    #[error("metric file: {0}")]
    MetricFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChartKind {
    FlatUnitDisk,
    ConformalDisk,
    RevolutionDisk,
}

#[derive(Debug, Clone, PartialEq)]
enum Model {
    Flat,
    Conformal(ConformalFactor),
    Revolution(Meridian),
}

/// A Riemannian metric on the closed unit disk of a chart.
///
/// Immutable once built; every query is a pure function of the chart.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricChart {
    model: Model,
    boundary_length: f64,
    label: String,
}

impl MetricChart {
    /// The flat unit disk: `K = 0`, `kappa = 1`, boundary length `2 pi`.
    pub fn flat() -> Self {
        MetricChart { model: Model::Flat, boundary_length: TAU, label: "flat".into() }
    }

    /// `e^{2 phi}(dx^2 + dy^2)`; fails unless the boundary is strictly convex.
    pub fn conformal(phi: ConformalFactor) -> Result<Self, GeomError> {
        let chart = Self::conformal_unchecked(phi);
        chart.check_convexity(512)?;
        Ok(chart)
    }

    /// Like [`MetricChart::conformal`] without the convexity scan. Curvature
    /// queries work; shooting and flows assume convexity and may misbehave.
    pub fn conformal_unchecked(phi: ConformalFactor) -> Self {
        let label = phi.describe();
        let mut chart = MetricChart { model: Model::Conformal(phi), boundary_length: 0.0, label };
        chart.boundary_length = chart.boundary_arc_length(0.0, TAU);
        chart
    }

    /// Parses `phi` from an expression in `x`, `y`.
    pub fn conformal_expr(src: &str) -> Result<Self, GeomError> {
        let e = Expr::parse(src).map_err(|e| GeomError::MetricFile(format!("phi: {e}")))?;
        Self::conformal(ConformalFactor::Expr(e))
    }

    /// Disk of revolution with the given meridian.
    pub fn revolution(meridian: Meridian) -> Result<Self, GeomError> {
        if !(meridian.cap_radius() > 0.0 && meridian.cap_angle() > 0.0 && meridian.cap_angle() <= PI / 2.0) {
            return Err(GeomError::InvalidProfile(format!("{meridian:?}")));
        }
        if meridian.line_len() < 0.0 {
            return Err(GeomError::InvalidProfile("negative cone length".into()));
        }
        let rb = meridian.r(meridian.total_len());
        let chart = MetricChart {
            model: Model::Revolution(meridian),
            boundary_length: TAU * rb,
            label: format!(
                "revolution (cap R={:.6}, angle={:.6}, cone length={:.6})",
                meridian.cap_radius(),
                meridian.cap_angle(),
                meridian.line_len()
            ),
        };
        chart.check_convexity(64)?;
        Ok(chart)
    }

    /// Round spherical cap of unit radius and angular radius `angle < pi/2`.
    pub fn spherical_cap(angle: f64) -> Result<Self, GeomError> {
        if !(angle > 0.0 && angle < PI / 2.0) {
            return Err(GeomError::InvalidProfile(format!("cap angle {angle} outside (0, pi/2)")));
        }
        Self::revolution(Meridian::new(1.0, angle, 0.0, 0.0))
    }

    pub fn kind(&self) -> ChartKind {
        match self.model {
            Model::Flat => ChartKind::FlatUnitDisk,
            Model::Conformal(_) => ChartKind::ConformalDisk,
            Model::Revolution(_) => ChartKind::RevolutionDisk,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_length
    }

    pub fn meridian(&self) -> Option<&Meridian> {
        match &self.model {
            Model::Revolution(m) => Some(m),
            _ => None,
        }
    }

    pub fn conformal_factor(&self) -> Option<&ConformalFactor> {
        match &self.model {
            Model::Conformal(c) => Some(c),
            _ => None,
        }
    }

    /// True when the metric is invariant under rotations of the chart.
    pub fn is_rotationally_symmetric(&self) -> bool {
        matches!(self.model, Model::Flat | Model::Revolution(_))
    }

    /// Metric tensor `g_ij` at `p`.
    pub fn metric(&self, p: Vec2) -> Sym2 {
        match &self.model {
            Model::Flat => Sym2::scalar(1.0),
            Model::Conformal(phi) => Sym2::scalar((2.0 * phi.jet(p.x, p.y).v).exp()),
            Model::Revolution(m) => revolution_metric(m, p),
        }
    }

    /// Partial derivatives `(d_x g, d_y g)` at `p`.
    pub fn metric_derivatives(&self, p: Vec2) -> [Sym2; 2] {
        match &self.model {
            Model::Flat => [Sym2::ZERO, Sym2::ZERO],
            Model::Conformal(phi) => {
                let j = phi.jet(p.x, p.y);
                let e = (2.0 * j.v).exp();
                [Sym2::scalar(2.0 * j.dx * e), Sym2::scalar(2.0 * j.dy * e)]
            }
            Model::Revolution(m) => {
                // the closed form is only C^1 across the cap/cone junction;
                // central differences are accurate to ~1e-10 here
                let h = 1e-6;
                let dx = (revolution_metric(m, p + Vec2::new(h, 0.0)) - revolution_metric(m, p - Vec2::new(h, 0.0)))
                    * (0.5 / h);
                let dy = (revolution_metric(m, p + Vec2::new(0.0, h)) - revolution_metric(m, p - Vec2::new(0.0, h)))
                    * (0.5 / h);
                [dx, dy]
            }
        }
    }

    /// Geodesic acceleration `-Gamma(v, v)` in chart components.
    pub fn geodesic_accel(&self, p: Vec2, v: Vec2) -> Vec2 {
        match &self.model {
            Model::Flat => Vec2::ZERO,
            Model::Conformal(phi) => {
                let j = phi.jet(p.x, p.y);
                let grad = Vec2::new(j.dx, j.dy);
                grad * v.norm2() - v * (2.0 * grad.dot(v))
            }
            Model::Revolution(_) => {
                let g = self.metric(p);
                let [gx, gy] = self.metric_derivatives(p);
                christoffel_accel(g, gx, gy, v)
            }
        }
    }

    /// `|v|_g` at `p`.
    pub fn norm(&self, p: Vec2, v: Vec2) -> f64 {
        self.metric(p).quad(v).sqrt()
    }

    pub fn inner(&self, p: Vec2, u: Vec2, v: Vec2) -> f64 {
        self.metric(p).inner(u, v)
    }

    pub fn normalize(&self, p: Vec2, v: Vec2) -> Vec2 {
        v / self.norm(p, v)
    }

    /// g-length of the straight chart segment `a -> b` (midpoint rule).
    pub fn segment_length(&self, a: Vec2, b: Vec2) -> f64 {
        self.norm((a + b) * 0.5, b - a)
    }

    pub fn boundary_point(&self, t: f64) -> Vec2 {
        Vec2::polar(t)
    }

    /// Boundary parameter of a chart point (its polar angle in `[0, 2pi)`).
    pub fn boundary_param(&self, p: Vec2) -> f64 {
        linalg::wrap_angle(p.angle())
    }

    /// `|d/dt (cos t, sin t)|_g`
    pub fn boundary_speed(&self, t: f64) -> f64 {
        match &self.model {
            Model::Flat => 1.0,
            Model::Revolution(m) => m.r(m.total_len()),
            Model::Conformal(phi) => {
                let p = Vec2::polar(t);
                phi.jet(p.x, p.y).v.exp()
            }
        }
    }

    /// g-length of the counterclockwise boundary arc from `t0` to `t0 + span`.
    pub fn boundary_arc_length(&self, t0: f64, span: f64) -> f64 {
        match &self.model {
            Model::Flat => span,
            Model::Revolution(_) => span * self.boundary_speed(0.0),
            Model::Conformal(_) => {
                if span <= 0.0 {
                    return 0.0;
                }
                let panels = ((span / TAU) * 64.0).ceil().max(2.0) as usize;
                linalg::integrate(|t| self.boundary_speed(t), t0, t0 + span, panels, 8)
            }
        }
    }

    /// g-unit counterclockwise boundary tangent at parameter `t`.
    pub fn boundary_tangent(&self, t: f64) -> Vec2 {
        let p = Vec2::polar(t);
        self.normalize(p, p.perp())
    }

    /// g-unit inward normal at boundary parameter `t`.
    pub fn inward_normal(&self, t: f64) -> Vec2 {
        let p = Vec2::polar(t);
        let tan = self.boundary_tangent(t);
        let g = self.metric(p);
        let n = -p;
        let n = n - tan * g.inner(n, tan);
        n / g.quad(n).sqrt()
    }

    /// Gaussian curvature `K(p)`.
    pub fn gaussian_curvature(&self, p: Vec2) -> Result<f64, GeomError> {
        let k = match &self.model {
            Model::Flat => 0.0,
            Model::Conformal(phi) => {
                let j = phi.jet(p.x, p.y);
                -(-2.0 * j.v).exp() * j.laplacian()
            }
            Model::Revolution(m) => {
                let rho = p.norm();
                if rho < 1e-12 {
                    return Err(GeomError::TipSingularity);
                }
                m.curvature(rho * m.total_len())
            }
        };
        if !k.is_finite() {
            return Err(GeomError::NonFiniteCurvature(p.x, p.y));
        }
        Ok(k)
    }

    /// `K(p)` with the axis point of a disk of revolution resolved by its limit.
    pub fn curvature_or_limit(&self, p: Vec2) -> f64 {
        match self.gaussian_curvature(p) {
            Ok(k) => k,
            Err(_) => match &self.model {
                Model::Revolution(m) => m.curvature(0.0),
                _ => f64::NAN,
            },
        }
    }

    /// Geodesic curvature of the boundary at parameter `t`, signed with
    /// respect to the inward normal (positive means convex).
    pub fn boundary_curvature_at(&self, t: f64) -> f64 {
        match &self.model {
            Model::Flat => 1.0,
            Model::Revolution(m) => m.boundary_curvature(),
            Model::Conformal(phi) => {
                let p = Vec2::polar(t);
                let j = phi.jet(p.x, p.y);
                (-j.v).exp() * (1.0 + p.x * j.dx + p.y * j.dy)
            }
        }
    }

    /// Geodesic curvature of the boundary at a boundary point.
    pub fn boundary_geodesic_curvature(&self, p: Vec2) -> Result<f64, GeomError> {
        if (p.norm() - 1.0).abs() > BOUNDARY_TOL {
            return Err(GeomError::NotOnBoundary(p.x, p.y));
        }
        Ok(self.boundary_curvature_at(self.boundary_param(p)))
    }

    /// Samples `kappa` on `n` boundary points; errors on the first `kappa <= 0`.
    pub fn check_convexity(&self, n: usize) -> Result<f64, GeomError> {
        let mut min = f64::INFINITY;
        for i in 0..n {
            let t = TAU * i as f64 / n as f64;
            let kappa = self.boundary_curvature_at(t);
            if !(kappa > 0.0) {
                return Err(GeomError::NonConvexBoundary { t, kappa });
            }
            min = min.min(kappa);
        }
        Ok(min)
    }

    /// Minimum of `K` over a polar sample grid (tip limit included).
    pub fn min_sampled_curvature(&self, n_radial: usize, n_angular: usize) -> f64 {
        let mut min = self.curvature_or_limit(Vec2::ZERO);
        for i in 1..=n_radial {
            let rho = i as f64 / n_radial as f64;
            for j in 0..n_angular {
                let t = TAU * j as f64 / n_angular as f64;
                min = min.min(self.curvature_or_limit(Vec2::polar(t) * rho));
            }
        }
        min
    }

    /// Total boundary geodesic curvature `int kappa ds`.
    pub fn total_boundary_curvature(&self) -> f64 {
        match &self.model {
            Model::Flat => TAU,
            Model::Revolution(m) => TAU * m.dr(m.total_len()),
            Model::Conformal(_) => {
                linalg::integrate(|t| self.boundary_curvature_at(t) * self.boundary_speed(t), 0.0, TAU, 64, 8)
            }
        }
    }

    /// Chart point of surface coordinates `(u, t)` on a disk of revolution.
    pub fn from_surface(&self, u: f64, t: f64) -> Option<Vec2> {
        let m = self.meridian()?;
        let sigma = m.sigma_of_u(u);
        Some(Vec2::polar(t) * (sigma / m.total_len()))
    }

    /// Surface coordinates `(u, t)` of a chart point on a disk of revolution.
    pub fn to_surface(&self, p: Vec2) -> Option<(f64, f64)> {
        let m = self.meridian()?;
        Some((m.u(p.norm() * m.total_len()), linalg::wrap_angle(p.angle())))
    }

    /// Natural step scale for integrators: `1/sqrt(max K)` or 1.
    pub fn curvature_scale(&self) -> f64 {
        match &self.model {
            Model::Flat => 1.0,
            Model::Revolution(m) => m.cap_radius().min(1.0),
            Model::Conformal(_) => {
                let mut kmax: f64 = 0.0;
                for i in 0..=8 {
                    let rho = i as f64 / 8.0;
                    for j in 0..16 {
                        let p = Vec2::polar(TAU * j as f64 / 16.0) * rho;
                        kmax = kmax.max(self.curvature_or_limit(p).abs());
                    }
                }
                if kmax > 1.0 {
                    1.0 / kmax.sqrt()
                } else {
                    1.0
                }
            }
        }
    }
}

fn revolution_metric(m: &Meridian, p: Vec2) -> Sym2 {
    let smax = m.total_len();
    let sigma = p.norm() * smax;
    let s = m.ratio(sigma);
    let q = m.ratio_defect(sigma);
    Sym2::scalar(smax * smax * s * s) + Sym2::outer(p) * (smax.powi(4) * q)
}

/// `-g^{-1}(Dg[v] v - 1/2 (v^T d_l g v)_l)`: the Christoffel contraction.
pub(crate) fn christoffel_accel(g: Sym2, gx: Sym2, gy: Sym2, v: Vec2) -> Vec2 {
    let dgv = gx * v.x + gy * v.y;
    let t1 = dgv.apply(v);
    let t2 = Vec2::new(0.5 * gx.quad(v), 0.5 * gy.quad(v));
    -g.solve(t1 - t2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_curvatures() {
        let c = MetricChart::flat();
        assert_eq!(c.gaussian_curvature(Vec2::new(0.3, 0.1)).unwrap(), 0.0);
        assert_eq!(c.boundary_geodesic_curvature(Vec2::polar(1.2)).unwrap(), 1.0);
        assert_eq!(c.boundary_length(), TAU);
        assert!(matches!(
            c.boundary_geodesic_curvature(Vec2::new(0.5, 0.0)),
            Err(GeomError::NotOnBoundary(..))
        ));
    }

    #[test]
    fn conformal_curvature_at_origin() {
        // K = -e^{-2phi} Lap(phi) = -(1)(-2) = 2 at the origin
        let phi = ConformalFactor::Expr(Expr::parse("-(x^2 + y^2)/2").unwrap());
        let c = MetricChart::conformal_unchecked(phi.clone());
        assert!((c.gaussian_curvature(Vec2::ZERO).unwrap() - 2.0).abs() < 1e-15);
        // kappa = e^{-phi}(1 + d_r phi) = 0 on the unit circle: not strictly convex
        assert!(matches!(MetricChart::conformal(phi), Err(GeomError::NonConvexBoundary { .. })));
    }

    #[test]
    fn zero_conformal_factor_is_flat() {
        let c = MetricChart::conformal_expr("0").unwrap();
        assert_eq!(c.boundary_geodesic_curvature(Vec2::polar(0.4)).unwrap(), 1.0);
        assert!((c.boundary_length() - TAU).abs() < 1e-12);
        assert_eq!(c.gaussian_curvature(Vec2::new(0.2, 0.2)).unwrap(), 0.0);
    }

    #[test]
    fn stereographic_cap_has_unit_curvature() {
        let c = MetricChart::conformal_expr("ln(2*0.6) - ln(1 + 0.36*(x^2+y^2))").unwrap();
        for p in [Vec2::ZERO, Vec2::new(0.4, -0.3), Vec2::new(0.0, 0.9)] {
            assert!((c.gaussian_curvature(p).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn revolution_tip_is_singular_for_curvature_query() {
        let c = MetricChart::spherical_cap(1.0).unwrap();
        assert_eq!(c.gaussian_curvature(Vec2::ZERO), Err(GeomError::TipSingularity));
        assert!((c.gaussian_curvature(Vec2::new(0.3, 0.2)).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn revolution_metric_is_rotation_invariant() {
        let c = MetricChart::spherical_cap(1.2).unwrap();
        let p = Vec2::new(0.3, 0.4);
        let v = Vec2::new(-0.2, 0.7);
        let rot = |w: Vec2, a: f64| Vec2::new(w.x * a.cos() - w.y * a.sin(), w.x * a.sin() + w.y * a.cos());
        let a = 0.9;
        assert!((c.norm(p, v) - c.norm(rot(p, a), rot(v, a))).abs() < 1e-13);
    }

    #[test]
    fn christoffel_conformal_matches_generic() {
        let c = MetricChart::conformal_expr("0.2*x - 0.1*y^2 + 0.05*x*y").unwrap();
        let p = Vec2::new(0.3, -0.2);
        let v = Vec2::new(0.6, 0.8);
        let [gx, gy] = c.metric_derivatives(p);
        let generic = christoffel_accel(c.metric(p), gx, gy, v);
        let fast = c.geodesic_accel(p, v);
        assert!((generic - fast).norm() < 1e-13);
    }
}
