use std::f64::consts::{FRAC_PI_3, PI};

use capgeo::minmax::{build_line_sweepout, row_sup, tighten_sweepout, FlowBudget};
use capgeo::{MetricChart, Sweepout, Vec2};

fn perturbed(sw: &Sweepout, amp: f64) -> Sweepout {
    let mut out = sw.clone();
    for row in out.slices.iter_mut() {
        for d in row.iter_mut() {
            if !d.is_proper() {
                continue;
            }
            let c = d.curve();
            let n = c.len() - 1;
            let (a, b) = (c[0], c[n]);
            let mut normal = (b - a).perp() / (b - a).norm();
            if normal.dot(a.lerp(b, 0.5)) > 0.0 {
                normal = normal * -1.0;
            }
            let bent: Vec<Vec2> = c
                .iter()
                .enumerate()
                .map(|(i, p)| if i == 0 || i == n { *p } else { *p + normal * (amp * (PI * i as f64 / n as f64).sin()) })
                .collect();
            *d = d.with_curve(bent).unwrap();
        }
    }
    out
}

#[test]
fn tightening_recovers_a_perturbed_family() {
    let c = MetricChart::flat();
    let theta = FRAC_PI_3;
    let target = 3f64.sqrt() + 2.0 * PI / 3.0;
    let sw = build_line_sweepout(&c, 1, 32).unwrap();
    let bent = perturbed(&sw, 0.05);
    let before = row_sup(&bent.values(&c, theta).unwrap()[0]);
    assert!(before > target + 1e-3);
    let tight = tighten_sweepout(&c, &bent, theta, FlowBudget::default()).unwrap();
    let after = row_sup(&tight.values(&c, theta).unwrap()[0]);
    assert!((after - target).abs() < 1e-3, "{after}");
}

#[test]
fn conformal_sweepout_is_valid() {
    let c = MetricChart::conformal_expr("0.2*(x*x + y*y)").unwrap();
    let sw = build_line_sweepout(&c, 1, 32).unwrap();
    let v = sw.values(&c, FRAC_PI_3).unwrap();
    assert!(v[0][0] == 0.0);
    assert!((v[0][32] - 0.5 * c.boundary_length()).abs() < 1e-9);
}
