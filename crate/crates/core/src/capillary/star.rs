//! The no-short-critical-lasso hypothesis: a Gauss-Bonnet sufficient
//! condition plus a numerical lasso scan.

use std::f64::consts::PI;

use serde::Serialize;

use super::{check_theta, find_critical_lassos, CapillaryError, LassoGrid, LassoRecord};
use crate::geom::MetricChart;
use crate::minmax::{estimate_widths, WidthOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StarVerdict {
    /// `K >= 0` and total boundary curvature at least `pi` rule lassos out.
    ProvenByGB,
    /// The sufficient condition fails but the scan found nothing.
    NumericallyClear,
    LassoFound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StarBound {
    Explicit(f64),
    /// Twice the two-parameter width estimate at the given grid.
    FromWidths { grid_n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarReport {
    pub gb_sufficient: bool,
    pub scan_found_lasso: bool,
    pub verdict: StarVerdict,
    pub min_curvature: f64,
    pub total_boundary_curvature: f64,
    pub length_bound: f64,
    pub lassos: Vec<LassoRecord>,
}

pub fn star_hypothesis_check(
    chart: &MetricChart,
    theta: f64,
    bound: StarBound,
    grid: LassoGrid,
) -> Result<StarReport, CapillaryError> {
    check_theta(theta)?;
    let min_curvature = chart.min_sampled_curvature(64, 64);
    let total = chart.total_boundary_curvature();
    let gb_sufficient = min_curvature >= -1e-9 && total >= PI - 1e-6;
    let length_bound = match bound {
        StarBound::Explicit(b) => b,
        StarBound::FromWidths { grid_n } => {
            let opts = WidthOptions { grid_n, ..WidthOptions::default() };
            2.0 * estimate_widths(chart, theta, &opts).map_err(|e| CapillaryError::WidthEstimate(e.to_string()))?.w2_upper
        }
    };
    let lassos = find_critical_lassos(chart, length_bound, grid)?;
    let scan_found_lasso = !lassos.is_empty();
    let verdict = if scan_found_lasso {
        StarVerdict::LassoFound
    } else if gb_sufficient {
        StarVerdict::ProvenByGB
    } else {
        StarVerdict::NumericallyClear
    };
    Ok(StarReport { gb_sufficient, scan_found_lasso, verdict, min_curvature, total_boundary_curvature: total, length_bound, lassos })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_disk_is_proven() {
        let c = MetricChart::flat();
        let r = star_hypothesis_check(&c, 1.0, StarBound::Explicit(10.0), LassoGrid { basepoints: 4, angles: 48 }).unwrap();
        assert!(r.gb_sufficient && !r.scan_found_lasso);
        assert_eq!(r.verdict, StarVerdict::ProvenByGB);
    }
}
