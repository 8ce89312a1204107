//! Simple domains of the disk: the empty set, the whole disk, or the region
//! on one side of an embedded polyline with both endpoints on the boundary.

mod fdist;
mod hausdorff;
mod intersect;
pub mod io;
mod measure;

use std::f64::consts::TAU;

use serde::Serialize;
use thiserror::Error;

use crate::geom::linalg::wrap_angle;
use crate::geom::{MetricChart, Vec2};

pub use fdist::{f_distance, FMode, DICTIONARY_SIZE};
pub use hausdorff::{hausdorff, point_segment_distance};
pub use intersect::{first_self_intersection, is_embedded, resample_uniform};
pub use measure::{
    contact_angles, curvature_vectors, discrete_curvature, first_variation_residual, l_theta, polyline_length,
    segment_lengths, CapillaryMeasure, FirstVariation,
};

/// Chart-coordinate tolerance for embeddedness.
pub const EMBED_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("contact angle {0} outside (0, pi/2)")]
    InvalidTheta(f64),
    #[error("empty and full domains have no endpoints")]
    NoEndpoints,
    #[error("terminal segment shorter than 1e-9 at endpoint {0}")]
    DegenerateTangent(usize),
    #[error("empty curve")]
    EmptyCurve,
    #[error("a relative boundary needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("endpoint {index} is off the boundary (|p| = {norm})")]
    EndpointOffBoundary { index: usize, norm: f64 },
    #[error("vertex {index} is not strictly inside the disk (|p| = {norm})")]
    VertexOutsideDisk { index: usize, norm: f64 },
    #[error("segments {0} and {1} intersect")]
    NotEmbedded(usize, usize),
    #[error("non-finite vertex {0}")]
    NonFinite(usize),
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DomainState {
    Empty,
    Full,
    Proper,
}

/// Which side of the directed polyline `first -> last` the domain occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimpleDomain {
    state: DomainState,
    curve: Vec<Vec2>,
    side: Side,
}

impl SimpleDomain {
    pub fn empty() -> Self {
        SimpleDomain { state: DomainState::Empty, curve: Vec::new(), side: Side::Left }
    }

    pub fn full() -> Self {
        SimpleDomain { state: DomainState::Full, curve: Vec::new(), side: Side::Left }
    }

    /// Validates and wraps a relative boundary. Endpoints within 1e-9 of the
    /// unit circle are projected onto it.
    pub fn proper(mut curve: Vec<Vec2>, side: Side) -> Result<Self, CurveError> {
        let n = curve.len();
        if n < 3 {
            return Err(CurveError::TooFewVertices(n));
        }
        for (i, p) in curve.iter().enumerate() {
            if !p.is_finite() {
                return Err(CurveError::NonFinite(i));
            }
        }
        for index in [0, n - 1] {
            let norm = curve[index].norm();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(CurveError::EndpointOffBoundary { index, norm });
            }
            if (norm - 1.0).abs() > 4.0 * f64::EPSILON {
                curve[index] = curve[index] / norm;
            }
        }
        for (index, p) in curve.iter().enumerate().take(n - 1).skip(1) {
            let norm = p.norm();
            if norm >= 1.0 {
                return Err(CurveError::VertexOutsideDisk { index, norm });
            }
        }
        if let Some((i, j)) = first_self_intersection(&curve, EMBED_TOL) {
            return Err(CurveError::NotEmbedded(i, j));
        }
        Ok(SimpleDomain { state: DomainState::Proper, curve, side })
    }

    pub fn state(&self) -> DomainState {
        self.state
    }

    pub fn is_proper(&self) -> bool {
        self.state == DomainState::Proper
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// The relative boundary (empty for the sentinels).
    pub fn curve(&self) -> &[Vec2] {
        &self.curve
    }

    /// `D^2 \ Omega` (up to the shared relative boundary).
    pub fn complement(&self) -> SimpleDomain {
        match self.state {
            DomainState::Empty => SimpleDomain::full(),
            DomainState::Full => SimpleDomain::empty(),
            DomainState::Proper => SimpleDomain { state: DomainState::Proper, curve: self.curve.clone(), side: self.side.flip() },
        }
    }

    /// `(q1, q2)`: the wetted boundary arc runs counterclockwise from `q1` to `q2`.
    pub fn endpoint_pair(&self) -> Result<(f64, f64), CurveError> {
        if !self.is_proper() {
            return Err(CurveError::NoEndpoints);
        }
        let ta = wrap_angle(self.curve[0].angle());
        let tb = wrap_angle(self.curve[self.curve.len() - 1].angle());
        Ok(match self.side {
            Side::Left => (tb, ta),
            Side::Right => (ta, tb),
        })
    }

    /// The endpoint function `e(Omega) = q1`.
    pub fn endpoint(&self) -> Result<f64, CurveError> {
        Ok(self.endpoint_pair()?.0)
    }

    /// `(start, span)` of the wetted arc in boundary parameter; `span` is
    /// `0` for the empty domain and `2 pi` for the full disk.
    pub fn wetted_arc(&self) -> (f64, f64) {
        match self.state {
            DomainState::Empty => (0.0, 0.0),
            DomainState::Full => (0.0, TAU),
            DomainState::Proper => {
                let (q1, q2) = self.endpoint_pair().expect("proper");
                (q1, wrap_angle(q2 - q1))
            }
        }
    }

    /// g-length of the relative boundary.
    pub fn interior_length(&self, chart: &MetricChart) -> f64 {
        polyline_length(chart, &self.curve)
    }

    /// g-length of the wetted boundary arc.
    pub fn boundary_length(&self, chart: &MetricChart) -> f64 {
        match self.state {
            DomainState::Empty => 0.0,
            DomainState::Full => chart.boundary_length(),
            DomainState::Proper => {
                let (q1, span) = self.wetted_arc();
                chart.boundary_arc_length(q1, span)
            }
        }
    }

    /// Same domain with the polyline traversed backwards.
    pub fn reversed(&self) -> SimpleDomain {
        match self.state {
            DomainState::Proper => {
                let mut c = self.curve.clone();
                c.reverse();
                SimpleDomain { state: DomainState::Proper, curve: c, side: self.side.flip() }
            }
            _ => self.clone(),
        }
    }

    /// Replaces the relative boundary keeping the side convention.
    pub fn with_curve(&self, curve: Vec<Vec2>) -> Result<SimpleDomain, CurveError> {
        SimpleDomain::proper(curve, self.side)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn diameter() -> Vec<Vec2> {
        (0..=10).map(|i| Vec2::new(1.0 - 0.2 * i as f64, 0.0)).collect()
    }

    #[test]
    fn diameter_endpoints() {
        // traversed from (1,0) to (-1,0) the upper half lies on the right
        let up = SimpleDomain::proper(diameter(), Side::Right).unwrap();
        let (q1, q2) = up.endpoint_pair().unwrap();
        assert!(q1.abs() < 1e-15 && (q2 - PI).abs() < 1e-15);
        let (a, b) = up.complement().endpoint_pair().unwrap();
        assert!((a - PI).abs() < 1e-15 && b.abs() < 1e-15);
    }

    #[test]
    fn reversal_preserves_domain() {
        let d = SimpleDomain::proper(diameter(), Side::Left).unwrap();
        assert_eq!(d.endpoint_pair().unwrap(), d.reversed().endpoint_pair().unwrap());
    }

    #[test]
    fn short_side_of_chord() {
        // chord from t = 0 to t = 2pi/3; the short arc lies to the right
        let a = Vec2::polar(0.0);
        let b = Vec2::polar(2.0 * PI / 3.0);
        let c: Vec<Vec2> = (0..=20).map(|i| a.lerp(b, i as f64 / 20.0)).collect();
        let d = SimpleDomain::proper(c, Side::Right).unwrap();
        let (q1, q2) = d.endpoint_pair().unwrap();
        assert!(q1.abs() < 1e-15 && (q2 - 2.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sentinels_have_no_endpoints() {
        assert_eq!(SimpleDomain::empty().endpoint_pair(), Err(CurveError::NoEndpoints));
        assert_eq!(SimpleDomain::full().endpoint_pair(), Err(CurveError::NoEndpoints));
    }

    #[test]
    fn validation() {
        let mut c = diameter();
        c[0] = Vec2::new(0.9, 0.0);
        assert!(matches!(SimpleDomain::proper(c, Side::Left), Err(CurveError::EndpointOffBoundary { .. })));
        let bow = vec![Vec2::new(1.0, 0.0), Vec2::new(-0.5, 0.5), Vec2::new(0.0, -0.5), Vec2::new(0.0, 1.0)];
        assert!(matches!(SimpleDomain::proper(bow, Side::Left), Err(CurveError::NotEmbedded(..))));
        let mut c = diameter();
        c[3] = Vec2::new(0.3, 1.2);
        assert!(matches!(SimpleDomain::proper(c, Side::Left), Err(CurveError::VertexOutsideDisk { .. })));
    }
}
