use std::f64::consts::TAU;

use serde::Serialize;

use super::linalg::{integrate, Vec2};
use super::{GeomError, MetricChart, Model};

/// Radius (in meridian arclength) of the axis neighbourhood left out of the
/// curvature quadrature on disks of revolution.
pub const TIP_RADIUS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussBonnetAudit {
    pub total_k: f64,
    pub total_kappa: f64,
    pub residual: f64,
    /// Curvature mass of the excluded axis disk, estimated from `K` at the tip.
    pub tip_mass_estimate: Option<f64>,
    /// The same mass recovered as `2 pi - int kappa - int_rest K`.
    pub tip_mass_recovered: Option<f64>,
    pub resolution: usize,
}

pub fn gauss_bonnet_audit(chart: &MetricChart) -> Result<GaussBonnetAudit, GeomError> {
    gauss_bonnet_audit_at(chart, 32)
}

/// Audit with `resolution` quadrature panels, checked against `2 * resolution`.
pub fn gauss_bonnet_audit_at(chart: &MetricChart, resolution: usize) -> Result<GaussBonnetAudit, GeomError> {
    let resolution = resolution.max(4);
    let coarse = audit_once(chart, resolution);
    let fine = audit_once(chart, 2 * resolution);
    if fine.residual > 2.0 * coarse.residual + 1e-12 {
        return Err(GeomError::QuadratureFailure { coarse: coarse.residual, fine: fine.residual });
    }
    Ok(fine)
}

fn audit_once(chart: &MetricChart, n: usize) -> GaussBonnetAudit {
    match &chart.model {
        Model::Flat => GaussBonnetAudit {
            total_k: 0.0,
            total_kappa: TAU,
            residual: 0.0,
            tip_mass_estimate: None,
            tip_mass_recovered: None,
            resolution: n,
        },
        Model::Conformal(phi) => {
            // K dA = -Lap(phi) dx dy; trapezoid in angle is spectral for periodic data
            let nt = 8 * n;
            let total_k = integrate(
                |rho| {
                    let mut acc = 0.0;
                    for j in 0..nt {
                        let p = Vec2::polar(TAU * j as f64 / nt as f64) * rho;
                        acc -= phi.jet(p.x, p.y).laplacian();
                    }
                    acc * TAU / nt as f64 * rho
                },
                0.0,
                1.0,
                n,
                8,
            );
            let mut total_kappa = 0.0;
            for j in 0..nt {
                let t = TAU * j as f64 / nt as f64;
                total_kappa += chart.boundary_curvature_at(t) * chart.boundary_speed(t);
            }
            total_kappa *= TAU / nt as f64;
            GaussBonnetAudit {
                total_k,
                total_kappa,
                residual: (total_k + total_kappa - TAU).abs(),
                tip_mass_estimate: None,
                tip_mass_recovered: None,
                resolution: n,
            }
        }
        Model::Revolution(m) => {
            let s0 = m.cap_len();
            let sl = m.total_len();
            let kr = |s: f64| m.curvature(s) * m.r(s);
            let mut rest = integrate(kr, TIP_RADIUS.min(s0), s0, n, 8);
            if sl > s0 {
                rest += integrate(kr, s0, sl, n, 8);
            }
            rest *= TAU;
            let rr = m.cap_radius();
            let tip_est = m.curvature(0.0) * TAU * rr * rr * (1.0 - (TIP_RADIUS.min(s0) / rr).cos());
            let total_kappa = chart.total_boundary_curvature();
            let total_k = rest + tip_est;
            GaussBonnetAudit {
                total_k,
                total_kappa,
                residual: (total_k + total_kappa - TAU).abs(),
                tip_mass_estimate: Some(tip_est),
                tip_mass_recovered: Some(TAU - total_kappa - rest),
                resolution: n,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_audit() {
        let a = gauss_bonnet_audit(&MetricChart::flat()).unwrap();
        assert_eq!(a.total_k, 0.0);
        assert!(a.residual < 1e-8);
    }

    #[test]
    fn conformal_audit_closes() {
        let c = MetricChart::conformal_expr("0.2*x - 0.15*(x^2+y^2) + 0.1*sin(2*y)").unwrap();
        let a = gauss_bonnet_audit(&c).unwrap();
        assert!(a.residual < 1e-9, "{a:?}");
    }

    #[test]
    fn spherical_cap_audit() {
        let angle = 1.0;
        let c = MetricChart::spherical_cap(angle).unwrap();
        let a = gauss_bonnet_audit(&c).unwrap();
        assert!((a.total_k - TAU * (1.0 - angle.cos())).abs() < 1e-10);
        assert!(a.residual < 1e-9);
        let est = a.tip_mass_estimate.unwrap();
        assert!((est - a.tip_mass_recovered.unwrap()).abs() < 1e-10);
    }
}
