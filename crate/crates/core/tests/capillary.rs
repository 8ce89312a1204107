use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};

use capgeo::capillary::{
    capillary_defect, capillary_geodesic_at, find_capillary_geodesics, morse_index, shoot_from_boundary, shot_length_cap,
};
use capgeo::curve::{contact_angles, l_theta};
use capgeo::{CapillaryError, MetricChart};

// even Jacobi mode on a flat chord: mu tanh(mu L / 2) = 1 / sin(theta)
fn even_mode(theta: f64) -> f64 {
    let l = 2.0 * theta.sin();
    let (mut lo, mut hi) = (1e-9, 50.0);
    for _ in 0..200 {
        let mu = 0.5 * (lo + hi);
        if mu * (mu * l / 2.0).tanh() < 1.0 / theta.sin() {
            lo = mu;
        } else {
            hi = mu;
        }
    }
    let mu = 0.5 * (lo + hi);
    -mu * mu
}

#[test]
fn flat_negative_eigenvalue_matches_the_even_mode() {
    let c = MetricChart::flat();
    for theta in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3] {
        let g = capillary_geodesic_at(&c, 2.0, theta).unwrap();
        let r = morse_index(&c, &g).unwrap();
        let want = even_mode(theta);
        assert!((r.eigenvalues[0] - want).abs() < 1e-4 * want.abs(), "{} vs {want}", r.eigenvalues[0]);
        assert!(r.eigenvalues[1].abs() < r.zero_tol);
    }
}

#[test]
fn flat_chord_measure() {
    let c = MetricChart::flat();
    let theta = FRAC_PI_3;
    let g = capillary_geodesic_at(&c, 0.4, theta).unwrap();
    let m = l_theta(&c, &g.domain, theta).unwrap();
    // chord of length 2 sin(theta) cutting off the arc 2 pi - 2 theta or 2 theta
    let arc = m.boundary_len;
    assert!((arc - 2.0 * theta).abs() < 1e-6 || (arc - (2.0 * PI - 2.0 * theta)).abs() < 1e-6, "{arc}");
    let (a, b) = contact_angles(&c, &g.domain).unwrap();
    assert!((a - theta).abs() < 1e-6 && (b - theta).abs() < 1e-6);
}

#[test]
fn conformal_search_finds_isolated_geodesics() {
    let c = MetricChart::conformal_expr("0.3*x*x - 0.2*y").unwrap();
    let r = find_capillary_geodesics(&c, FRAC_PI_4, 32).unwrap();
    assert!(!r.degenerate_family);
    assert!(!r.geodesics.is_empty());
    for g in &r.geodesics {
        assert!(g.residual.max() < 1e-5);
        assert!(capillary_defect(&c, g.basepoint, FRAC_PI_4).unwrap().abs() < 1e-6);
    }
}

#[test]
fn shots_report_arrivals() {
    let c = MetricChart::flat();
    let s = shoot_from_boundary(&c, 1.0, 0.5, shot_length_cap(&c)).unwrap();
    assert!(!s.self_intersects);
    assert!((s.arrival_angle.unwrap() - 0.5).abs() < 1e-9);
    assert!((s.length() - 2.0 * 0.5f64.sin()).abs() < 1e-9);
}

#[test]
fn invalid_inputs() {
    let c = MetricChart::flat();
    assert!(matches!(find_capillary_geodesics(&c, 0.0, 32), Err(CapillaryError::InvalidTheta(_))));
    assert!(matches!(find_capillary_geodesics(&c, 1.0, 4), Err(CapillaryError::GridTooSmall { .. })));
    assert!(matches!(shoot_from_boundary(&c, 0.0, PI, 1.0), Err(CapillaryError::InvalidAngle(_))));
}
