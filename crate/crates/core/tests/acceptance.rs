//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the binary exits non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};
use std::time::{Duration, Instant};

use capgeo::capillary::{
    capillary_geodesic_at, find_capillary_geodesics, jacobi_form, morse_index_with, shoot_from_boundary,
    shot_length_cap, star_hypothesis_check, LassoGrid, StarBound, StarVerdict, DEFAULT_NODES,
};
use capgeo::cone::{build_sharpness_disk, unroll_geodesic_oracle, verify_sharpness};
use capgeo::curve::{contact_angles, hausdorff};
use capgeo::flow::{csf_run, FlowOptions, LENGTH_SLACK};
use capgeo::geom::gauss_bonnet_audit;
use capgeo::minmax::{build_line_sweepout, endpoint_degree, summarize_widths, tighten_sweepout, FlowBudget, WidthOptions};
use capgeo::{CapillaryError, MetricChart, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn conformal_disks() -> Vec<MetricChart> {
    ["0.2*(x*x + y*y)", "0.3*x*x - 0.2*y"]
        .iter()
        .map(|s| MetricChart::conformal_expr(s).expect("convex test disk"))
        .collect()
}

fn gauss_bonnet() -> Outcome {
    let mut charts = vec![MetricChart::flat()];
    charts.extend(conformal_disks());
    for k in [FRAC_PI_3, FRAC_PI_2, 2.5] {
        charts.push(build_sharpness_disk(k).expect("sharpness disk").chart().clone());
    }
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    for c in &charts {
        let t = Instant::now();
        match gauss_bonnet_audit(c) {
            Ok(a) => worst = worst.max(a.residual.abs()),
            Err(e) => return outcome(false, format!("audit of {} failed: {e}", c.label())),
        }
        slowest = slowest.max(secs(t.elapsed()));
    }
    outcome(
        worst < 1e-3 && slowest < 5.0,
        format!("{} disks, max residual {worst:.2e}, slowest {slowest:.2} s", charts.len()),
    )
}

/// A random embedded polyline with endpoints on the unit circle.
pub fn random_curve(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec2> {
    loop {
        let a = rng.gen_range(0.0..2.0 * PI);
        let b = a + rng.gen_range(0.4..1.6) * PI;
        let (pa, pb) = (Vec2::polar(a), Vec2::polar(b));
        let normal = (pb - pa).perp() / (pb - pa).norm();
        let amps: Vec<f64> = (1..=4).map(|m| rng.gen_range(-0.12..0.12) / m as f64).collect();
        let pts: Vec<Vec2> = (0..=n)
            .map(|i| {
                let s = i as f64 / n as f64;
                let bump: f64 = amps.iter().enumerate().map(|(m, c)| c * ((m + 1) as f64 * PI * s).sin()).sum();
                pa.lerp(pb, s) + normal * bump
            })
            .collect();
        let inside = pts[1..n].iter().all(|p| p.norm() < 1.0 - 1e-6);
        if inside && capgeo::curve::is_embedded(&pts, 1e-10) {
            let mut pts = pts;
            pts[0] = pa;
            pts[n] = pb;
            return pts;
        }
    }
}

fn flow_contract() -> Outcome {
    let chart = MetricChart::flat();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let t = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..20 {
        let c = random_curve(&mut rng, 64);
        let (pa, pb) = (c[0], c[c.len() - 1]);
        let st = match csf_run(&chart, c, &FlowOptions::default()) {
            Ok(st) => st,
            Err(e) => return outcome(false, format!("curve {i}: {e}")),
        };
        if st.curve[0] != pa || st.curve[st.curve.len() - 1] != pb {
            return outcome(false, format!("curve {i}: endpoints moved"));
        }
        if st.length_history.windows(2).any(|w| w[1] > w[0] + LENGTH_SLACK) {
            return outcome(false, format!("curve {i}: length increased"));
        }
        worst = worst.max(hausdorff(&st.curve, &[pa, pb]).expect("polylines"));
    }
    let el = secs(t.elapsed());
    outcome(worst < 1e-4 && el < 60.0, format!("20 curves, max distance to chord {worst:.2e}, {el:.1} s"))
}

fn flat_defect() -> Outcome {
    let chart = MetricChart::flat();
    let (mut defect, mut len, mut contact) = (0.0f64, 0.0f64, 0.0f64);
    for theta in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3] {
        for i in 0..32 {
            let p = 2.0 * PI * i as f64 / 32.0;
            match capgeo::capillary::capillary_defect(&chart, p, theta) {
                Ok(d) => defect = defect.max(d.abs()),
                Err(e) => return outcome(false, format!("defect at {p}: {e}")),
            }
        }
        let found = match find_capillary_geodesics(&chart, theta, 32) {
            Ok(f) => f,
            Err(e) => return outcome(false, format!("search at {theta}: {e}")),
        };
        for g in &found.geodesics {
            len = len.max((g.length() - 2.0 * theta.sin()).abs());
            let (a, b) = contact_angles(&chart, &g.domain).expect("proper domain");
            contact = contact.max((a - theta).abs()).max((b - theta).abs());
        }
    }
    outcome(
        defect < 1e-6 && len < 1e-5 && contact < 1e-6,
        format!("max |defect| {defect:.2e}, chord length error {len:.2e}, contact angle error {contact:.2e}"),
    )
}

fn morse_index() -> Outcome {
    let chart = MetricChart::flat();
    let (mut q_max, mut drift) = (0.0f64, 0.0f64);
    for theta in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3] {
        let g = capillary_geodesic_at(&chart, 0.7, theta).expect("flat chord");
        let a = morse_index_with(&chart, &g, DEFAULT_NODES).expect("spectrum");
        let b = morse_index_with(&chart, &g, 2 * DEFAULT_NODES - 1).expect("spectrum");
        if a.index != 1 || a.nullity != 1 {
            return outcome(false, format!("theta {theta:.4}: index {} nullity {}", a.index, a.nullity));
        }
        let l = g.length();
        q_max = q_max.max(jacobi_form(&chart, &g, |s| s - l / 2.0, DEFAULT_NODES).abs());
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues).take(3) {
            drift = drift.max((x - y).abs());
        }
    }
    outcome(
        q_max < 1e-6 && drift < 1e-4,
        format!("index 1, nullity 1 at three angles, |Q(J, J)| {q_max:.2e}, eigenvalue drift {drift:.2e}"),
    )
}

fn widths() -> Outcome {
    let chart = MetricChart::flat();
    let theta = FRAC_PI_3;
    let t = Instant::now();
    let opts = WidthOptions::default();
    let sw = match build_line_sweepout(&chart, 2, opts.grid_n)
        .and_then(|sw| tighten_sweepout(&chart, &sw, theta, FlowBudget::default()))
    {
        Ok(sw) => sw,
        Err(e) => return outcome(false, format!("sweepout: {e}")),
    };
    let r = match summarize_widths(&chart, theta, &sw, &opts) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("widths: {e}")),
    };
    let bad_row = (1..sw.grid_n).find(|&t| endpoint_degree(&sw, t).ok() != Some(1));
    let el = secs(t.elapsed());
    let target = 3f64.sqrt() + 2.0 * PI / 3.0;
    let pass = (r.lower_bound - PI).abs() < 1e-9
        && (r.w1_upper - target).abs() < 1e-3
        && PI < r.w1_upper
        && r.w1_upper <= r.w2_upper
        && r.w2_upper <= r.w1_upper + 1e-3
        && bad_row.is_none()
        && el < 300.0;
    outcome(
        pass,
        format!(
            "lower {:.6}, w1 {:.6} (target {target:.6}), w2 {:.6}, degree-1 rows {}, {el:.1} s",
            r.lower_bound,
            r.w1_upper,
            r.w2_upper,
            if bad_row.is_none() { "all".to_string() } else { format!("fail at {}", bad_row.unwrap()) }
        ),
    )
}

fn sharpness() -> Outcome {
    let t = Instant::now();
    let disk = build_sharpness_disk(FRAC_PI_2).expect("sharpness disk");
    let r = match verify_sharpness(&disk, 0.05) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("verification: {e}")),
    };
    let none = matches!(
        find_capillary_geodesics(disk.chart(), FRAC_PI_4 + 0.05, 32),
        Err(CapillaryError::NoneFound { .. })
    );
    let el = secs(t.elapsed());
    let pass = (r.lasso.launch_angle - FRAC_PI_4).abs() < 1e-3
        && (r.lasso.length - r.oracle_lasso_length).abs() < 1e-3
        && r.all_shots_self_intersect
        && none
        && (r.boundary_turning - FRAC_PI_2).abs() < 1e-3
        && el < 120.0;
    outcome(
        pass,
        format!(
            "lasso angle {:.6}, length {:.6} (oracle {:.6}), all shots self-intersect {}, none found {none}, turning {:.6}, {el:.1} s",
            r.lasso.launch_angle, r.lasso.length, r.oracle_lasso_length, r.all_shots_self_intersect, r.boundary_turning
        ),
    )
}

fn star() -> Outcome {
    let t = Instant::now();
    let flat = star_hypothesis_check(&MetricChart::flat(), FRAC_PI_3, StarBound::Explicit(10.0), LassoGrid::default());
    let disk = build_sharpness_disk(FRAC_PI_2).expect("sharpness disk");
    let cone = star_hypothesis_check(disk.chart(), FRAC_PI_4, StarBound::Explicit(10.0), LassoGrid::default());
    let el = secs(t.elapsed());
    match (flat, cone) {
        (Ok(f), Ok(c)) => outcome(
            f.verdict == StarVerdict::ProvenByGB && f.lassos.is_empty() && c.verdict == StarVerdict::LassoFound && el < 180.0,
            format!("flat {:?}, sharpness disk {:?} ({} lassos), {el:.1} s", f.verdict, c.verdict, c.lassos.len()),
        ),
        (Err(e), _) | (_, Err(e)) => outcome(false, format!("check failed: {e}")),
    }
}

fn oracle_equivalence() -> Outcome {
    let disk = build_sharpness_disk(FRAC_PI_2).expect("sharpness disk");
    let chart = disk.chart();
    let cap = shot_length_cap(chart);
    let top = disk.max_cone_angle() - 0.02;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let p = rng.gen_range(0.0..2.0 * PI);
        let a = rng.gen_range(0.05..top);
        let alpha = if rng.gen_bool(0.5) { a } else { PI - a };
        let ode = match shoot_from_boundary(chart, p, alpha, cap) {
            Ok(s) => s.trajectory,
            Err(e) => return outcome(false, format!("shot {i}: {e}")),
        };
        let oracle = match unroll_geodesic_oracle(&disk, p, alpha) {
            Ok(t) => t,
            Err(e) => return outcome(false, format!("oracle {i}: {e}")),
        };
        worst = worst.max(hausdorff(&ode.points, &oracle.points).expect("polylines"));
    }
    outcome(worst < 1e-5, format!("100 shots, max Hausdorff distance {worst:.2e}"))
}

fn seeded_summary(seed: u64) -> String {
    let chart = MetricChart::flat();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flows: Vec<serde_json::Value> = (0..3)
        .map(|_| {
            let st = csf_run(&chart, random_curve(&mut rng, 48), &FlowOptions::default()).expect("flow");
            serde_json::json!({
                "steps": st.step_count,
                "length": st.length(),
                "curve": st.curve.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
            })
        })
        .collect();
    let conformal = &conformal_disks()[1];
    let search = find_capillary_geodesics(conformal, FRAC_PI_3, 32).expect("search");
    serde_json::to_string(&serde_json::json!({ "flows": flows, "search": search })).expect("json")
}

fn determinism() -> Outcome {
    let a = seeded_summary(99);
    let b = seeded_summary(99);
    outcome(a == b, format!("two runs, {} bytes each, identical {}", a.len(), a == b))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("gauss-bonnet audit", gauss_bonnet),
        ("flow contract", flow_contract),
        ("flat capillary defect", flat_defect),
        ("morse index", morse_index),
        ("width estimates", widths),
        ("sharpness at half turning", sharpness),
        ("lasso hypothesis verdicts", star),
        ("oracle equivalence", oracle_equivalence),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} {:<28} {}  {} [{:.1} s]",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            secs(t.elapsed())
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
