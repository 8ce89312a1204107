use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use super::{CurveError, DomainState, SimpleDomain};
use crate::geom::{MetricChart, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapillaryMeasure {
    pub interior_len: f64,
    pub boundary_len: f64,
    pub l_theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstVariation {
    pub max_interior_h: f64,
    /// `|<eta, nu_bar> + cos theta|` at `q1` and at `q2`.
    pub angle_defect: (f64, f64),
}

impl FirstVariation {
    pub fn max(&self) -> f64 {
        self.max_interior_h.max(self.angle_defect.0).max(self.angle_defect.1)
    }
}

/// g-lengths of the chart segments, each by the midpoint rule.
pub fn segment_lengths(chart: &MetricChart, pts: &[Vec2]) -> Vec<f64> {
    pts.windows(2).map(|w| chart.segment_length(w[0], w[1])).collect()
}

pub fn polyline_length(chart: &MetricChart, pts: &[Vec2]) -> f64 {
    pts.windows(2).map(|w| chart.segment_length(w[0], w[1])).sum()
}

pub(crate) fn check_theta(theta: f64) -> Result<(), CurveError> {
    if theta > 0.0 && theta < FRAC_PI_2 {
        Ok(())
    } else {
        Err(CurveError::InvalidTheta(theta))
    }
}

/// `L^theta(Omega) = |interior boundary| + cos(theta) |wetted arc|`.
pub fn l_theta(chart: &MetricChart, dom: &SimpleDomain, theta: f64) -> Result<CapillaryMeasure, CurveError> {
    check_theta(theta)?;
    let interior_len = dom.interior_length(chart);
    let boundary_len = dom.boundary_length(chart);
    Ok(CapillaryMeasure { interior_len, boundary_len, l_theta: interior_len + theta.cos() * boundary_len })
}

/// Gradient of the discrete length `sum |x_{j+1} - x_j|_{g(midpoint)}` with
/// respect to every vertex.
pub(crate) fn length_gradient(chart: &MetricChart, pts: &[Vec2]) -> (Vec<Vec2>, Vec<f64>) {
    let n = pts.len();
    let mut grad = vec![Vec2::ZERO; n];
    let mut lens = Vec::with_capacity(n.saturating_sub(1));
    for j in 0..n.saturating_sub(1) {
        let d = pts[j + 1] - pts[j];
        let m = (pts[j] + pts[j + 1]) * 0.5;
        let g = chart.metric(m);
        let l = g.quad(d).sqrt();
        lens.push(l);
        if l == 0.0 {
            continue;
        }
        let [gx, gy] = chart.metric_derivatives(m);
        let q = Vec2::new(gx.quad(d), gy.quad(d)) * (0.25 / l);
        let gd = g.apply(d) / l;
        grad[j + 1] += gd + q;
        grad[j] += q - gd;
    }
    (grad, lens)
}

/// Curvature vectors `-g^{-1} grad L / w_i` at interior vertices, where `w_i`
/// is the mean length of the two adjacent segments. Entry `i` corresponds to
/// vertex `i + 1`.
pub fn curvature_vectors(chart: &MetricChart, pts: &[Vec2]) -> Vec<Vec2> {
    if pts.len() < 3 {
        return Vec::new();
    }
    let (grad, lens) = length_gradient(chart, pts);
    (1..pts.len() - 1)
        .map(|i| {
            let w = 0.5 * (lens[i - 1] + lens[i]);
            -chart.metric(pts[i]).solve(grad[i]) / w
        })
        .collect()
}

/// Discrete geodesic curvature at interior vertices: the g-norm of the part
/// of [`curvature_vectors`] normal to the central-difference tangent. The
/// tangential part only reflects uneven vertex spacing.
pub fn discrete_curvature(chart: &MetricChart, pts: &[Vec2]) -> Vec<f64> {
    curvature_vectors(chart, pts)
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let p = pts[k + 1];
            let d = pts[k + 2] - pts[k];
            if d.norm() == 0.0 {
                return chart.norm(p, *h);
            }
            let t = chart.normalize(p, d);
            chart.norm(p, *h - t * chart.inner(p, *h, t))
        })
        .collect()
}

/// g-unit tangent at an end of the polyline from the one-sided second-order
/// difference, pointing away from the curve (outward conormal `eta`).
fn outward_tangent(chart: &MetricChart, pts: &[Vec2], at_end: bool) -> Result<Vec2, CurveError> {
    let n = pts.len();
    let (p0, p1, p2, idx) = if at_end { (pts[n - 1], pts[n - 2], pts[n - 3], n - 1) } else { (pts[0], pts[1], pts[2], 0) };
    let h1 = chart.segment_length(p0, p1);
    let h2 = chart.segment_length(p1, p2);
    if h1 < 1e-9 {
        return Err(CurveError::DegenerateTangent(idx));
    }
    // derivative at s = 0 of the parabola through (0, p0), (h1, p1), (h1 + h2, p2)
    let s2 = h1 + h2;
    let d = (p1 - p0) * (s2 / (h1 * h2)) - (p2 - p0) * (h1 / (s2 * h2));
    let d = if d.is_finite() && d.norm() > 0.0 { d } else { p1 - p0 };
    Ok(-chart.normalize(p0, d))
}

/// Contact angles `(theta at q1, theta at q2)` defined by
/// `<eta, nu_bar> = -cos theta`, with `nu_bar` the outward conormal of the
/// wetted arc.
pub fn contact_angles(chart: &MetricChart, dom: &SimpleDomain) -> Result<(f64, f64), CurveError> {
    let (c1, c2) = contact_cosines(chart, dom)?;
    Ok((c1.clamp(-1.0, 1.0).acos(), c2.clamp(-1.0, 1.0).acos()))
}

/// `(-<eta, nu_bar>)` at `q1` and `q2`.
fn contact_cosines(chart: &MetricChart, dom: &SimpleDomain) -> Result<(f64, f64), CurveError> {
    if dom.state() != DomainState::Proper {
        return Err(CurveError::NoEndpoints);
    }
    let pts = dom.curve();
    let eta_a = outward_tangent(chart, pts, false)?;
    let eta_b = outward_tangent(chart, pts, true)?;
    let (q1, q2) = dom.endpoint_pair()?;
    let ta = chart.boundary_param(pts[0]);
    // the wetted arc leaves q1 counterclockwise and arrives at q2 counterclockwise
    let nu1 = -chart.boundary_tangent(q1);
    let nu2 = chart.boundary_tangent(q2);
    let (eta1, p1, eta2, p2) = if (ta - q1).abs() < 1e-12 || (ta - q1).abs() > 2.0 * PI - 1e-12 {
        (eta_a, pts[0], eta_b, pts[pts.len() - 1])
    } else {
        (eta_b, pts[pts.len() - 1], eta_a, pts[0])
    };
    Ok((-chart.inner(p1, eta1, nu1), -chart.inner(p2, eta2, nu2)))
}

/// Interior curvature and contact-angle defects for angle `theta`.
pub fn first_variation_residual(chart: &MetricChart, dom: &SimpleDomain, theta: f64) -> Result<FirstVariation, CurveError> {
    let (c1, c2) = contact_cosines(chart, dom)?;
    let max_interior_h = discrete_curvature(chart, dom.curve()).into_iter().fold(0.0, f64::max);
    let ct = theta.cos();
    Ok(FirstVariation { max_interior_h, angle_defect: ((c1 - ct).abs(), (c2 - ct).abs()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Side;
    use std::f64::consts::{FRAC_PI_3, TAU};

    fn chord(t0: f64, t1: f64, n: usize) -> Vec<Vec2> {
        let a = Vec2::polar(t0);
        let b = Vec2::polar(t1);
        (0..=n).map(|i| a.lerp(b, i as f64 / n as f64)).collect()
    }

    #[test]
    fn capillary_chord_long_side() {
        let c = MetricChart::flat();
        let a = FRAC_PI_3;
        let d = SimpleDomain::proper(chord(0.0, 2.0 * a, 50), Side::Left).unwrap();
        let m = l_theta(&c, &d, a).unwrap();
        assert!((m.interior_len - 3f64.sqrt()).abs() < 1e-12);
        assert!((m.boundary_len - (TAU - 2.0 * a)).abs() < 1e-12);
        let (t1, t2) = contact_angles(&c, &d).unwrap();
        assert!((t1 - a).abs() < 1e-9 && (t2 - a).abs() < 1e-9);
        let r = first_variation_residual(&c, &d, a).unwrap();
        assert!(r.max() < 1e-8, "{r:?}");
        let (s1, s2) = contact_angles(&c, &d.complement()).unwrap();
        assert!((s1 - (PI - a)).abs() < 1e-9 && (s2 - (PI - a)).abs() < 1e-9);
        let short = l_theta(&c, &d.complement(), a).unwrap();
        assert!((short.l_theta - (3f64.sqrt() + FRAC_PI_3)).abs() < 1e-12);
    }

    #[test]
    fn diameter_meets_at_right_angles() {
        let c = MetricChart::flat();
        let d = SimpleDomain::proper(chord(0.0, PI, 40), Side::Right).unwrap();
        let r = first_variation_residual(&c, &d, FRAC_PI_3).unwrap();
        assert!((r.angle_defect.0 - 0.5).abs() < 1e-12 && (r.angle_defect.1 - 0.5).abs() < 1e-12);
        assert!(r.max_interior_h < 1e-8);
    }

    #[test]
    fn circle_arc_curvature() {
        // circle of radius 1/2 centred at (1, 0), the part inside the unit disk
        let c = MetricChart::flat();
        let start = (-0.25f64).acos();
        let n = 400;
        let pts: Vec<Vec2> = (0..=n)
            .map(|i| {
                let phi = start + (TAU - 2.0 * start) * i as f64 / n as f64;
                Vec2::new(1.0, 0.0) + Vec2::polar(phi) * 0.5
            })
            .collect();
        let d = SimpleDomain::proper(pts, Side::Left).unwrap();
        let r = first_variation_residual(&c, &d, FRAC_PI_3).unwrap();
        assert!((r.max_interior_h - 2.0).abs() < 1e-2, "{r:?}");
    }

    #[test]
    fn sentinel_measures() {
        let c = MetricChart::flat();
        let e = l_theta(&c, &SimpleDomain::empty(), FRAC_PI_3).unwrap();
        assert_eq!((e.interior_len, e.boundary_len, e.l_theta), (0.0, 0.0, 0.0));
        let f = l_theta(&c, &SimpleDomain::full(), FRAC_PI_3).unwrap();
        assert!((f.l_theta - PI).abs() < 1e-12 && (f.boundary_len - TAU).abs() < 1e-15);
        assert!(matches!(l_theta(&c, &SimpleDomain::full(), 1.6), Err(CurveError::InvalidTheta(_))));
    }

    #[test]
    fn curvature_gradient_matches_finite_differences() {
        let c = MetricChart::conformal_expr("0.2*x*x - 0.1*x*y + 0.3*y").unwrap();
        let pts: Vec<Vec2> = (0..6).map(|i| Vec2::new(-0.5 + 0.2 * i as f64, 0.1 * (i as f64).sin())).collect();
        let (grad, _) = length_gradient(&c, &pts);
        let h = 1e-6;
        for i in 0..pts.len() {
            for k in 0..2 {
                let mut p = pts.clone();
                let e = if k == 0 { Vec2::new(h, 0.0) } else { Vec2::new(0.0, h) };
                p[i] += e;
                let lp = polyline_length(&c, &p);
                p[i] -= e * 2.0;
                let lm = polyline_length(&c, &p);
                let fd = (lp - lm) / (2.0 * h);
                assert!((fd - grad[i].component(k)).abs() < 1e-8, "vertex {i} dir {k}");
            }
        }
    }
}
