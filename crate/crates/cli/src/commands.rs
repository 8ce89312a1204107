use std::f64::consts::PI;
use std::fs::File;
use std::path::Path;

use capgeo::capillary::{
    capillary_defect, find_capillary_geodesics, morse_index, shoot_from_boundary, shot_length_cap, star_hypothesis_check,
    LassoGrid, StarBound,
};
use capgeo::cone::{build_sharpness_disk, verify_sharpness};
use capgeo::curve::io::{read_polyline_csv, write_domain_csv, write_polyline_csv, Coords};
use capgeo::curve::{is_embedded, EMBED_TOL};
use capgeo::flow::{csf_run, FlowOptions};
use capgeo::geom::gauss_bonnet_audit;
use capgeo::geom::metric_file::load_metric;
use capgeo::minmax::{estimate_widths, FlowBudget, LineFamily, WidthOptions};
use capgeo::{CapillaryError, FlowError, GeomError, MetricChart, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::report::{csv_row, sig10, OutDir};
use crate::svg::{color, Plot};
use crate::{Cli, CliError, Command};

fn metric(path: &Path) -> Result<MetricChart, CliError> {
    match load_metric(path) {
        Ok(c) => Ok(c),
        Err(GeomError::MetricFile(m)) => Err(CliError::Config(m)),
        Err(e) => Err(e.into()),
    }
}

fn flush(mut w: csv::Writer<File>) -> Result<(), CliError> {
    w.flush()?;
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let out = OutDir::create(&cli.out)?;
    match &cli.command {
        Command::Audit { metric: m } => audit(&out, &metric(&m.metric)?, cli.plot),
        Command::Flow { metric: m, curve, seed, vertices, tol } => {
            flow(&out, &metric(&m.metric)?, curve.as_deref(), *seed, *vertices, *tol, cli.plot)
        }
        Command::Shoot { metric: m, p, alpha } => shoot(&out, &metric(&m.metric)?, *p, *alpha, cli.plot),
        Command::Find { metric: m, theta, grid } => find(&out, &metric(&m.metric)?, *theta, *grid, cli.plot),
        Command::Lassos { metric: m, theta, grid, angles, bound } => {
            lassos(&out, &metric(&m.metric)?, *theta, *grid, *angles, *bound, cli.plot)
        }
        Command::Width { metric: m, theta, grid, tol } => width(&out, &metric(&m.metric)?, *theta, *grid, *tol),
        Command::Sharpness { k, eps } => sharpness(&out, *k, *eps, cli.plot),
    }
}

fn audit(out: &OutDir, chart: &MetricChart, plot: bool) -> Result<(), CliError> {
    let a = gauss_bonnet_audit(chart)?;
    let min_kappa = chart.check_convexity(720)?;
    let mut w = out.csv("boundary_curvature.csv")?;
    csv_row(&mut w, ["t", "kappa"])?;
    for i in 0..360 {
        let t = 2.0 * PI * i as f64 / 360.0;
        csv_row(&mut w, [t.to_string(), chart.boundary_curvature_at(t).to_string()])?;
    }
    flush(w)?;
    if plot {
        let boundary: Vec<Vec2> = (0..=360).map(|i| chart.boundary_point(2.0 * PI * i as f64 / 360.0)).collect();
        let mut p = Plot::new(&format!("{}: boundary", chart.label()));
        p.polyline(&boundary, color(0), 2.0);
        out.text("audit.svg", &p.finish())?;
    }
    out.summary(&json!({
        "command": "audit",
        "anchor": "Gauss-Bonnet identity: total curvature plus boundary turning equals 2 pi",
        "metric": chart.label(),
        "total_curvature": a.total_k,
        "total_boundary_curvature": a.total_kappa,
        "residual": a.residual,
        "tip_mass_estimate": a.tip_mass_estimate,
        "tip_mass_recovered": a.tip_mass_recovered,
        "min_boundary_curvature": min_kappa,
        "convex": true,
    }))
}

fn random_curve(seed: u64, n: usize) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let a = rng.gen_range(0.0..2.0 * PI);
        let b = a + rng.gen_range(0.4..1.6) * PI;
        let (pa, pb) = (Vec2::polar(a), Vec2::polar(b));
        let normal = (pb - pa).perp() / (pb - pa).norm();
        let amps: Vec<f64> = (1..=4).map(|m| rng.gen_range(-0.12..0.12) / m as f64).collect();
        let mut pts: Vec<Vec2> = (0..=n)
            .map(|i| {
                let s = i as f64 / n as f64;
                let bump: f64 = amps.iter().enumerate().map(|(m, c)| c * ((m + 1) as f64 * PI * s).sin()).sum();
                pa.lerp(pb, s) + normal * bump
            })
            .collect();
        pts[0] = pa;
        pts[n] = pb;
        if pts[1..n].iter().all(|p| p.norm() < 1.0 - 1e-6) && is_embedded(&pts, EMBED_TOL) {
            return pts;
        }
    }
}

fn flow(
    out: &OutDir,
    chart: &MetricChart,
    curve: Option<&Path>,
    seed: u64,
    vertices: usize,
    tol: f64,
    plot: bool,
) -> Result<(), CliError> {
    if !(tol > 0.0) {
        return Err(CliError::Config(format!("--tol must be positive, got {tol}")));
    }
    let (initial, source) = match curve {
        Some(path) => {
            let f = File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            (read_polyline_csv(f, Some(chart))?, json!(path.display().to_string()))
        }
        None => {
            if vertices < 3 {
                return Err(CliError::Config(format!("--vertices must be at least 3, got {vertices}")));
            }
            (random_curve(seed, vertices), json!({ "random_seed": seed, "vertices": vertices }))
        }
    };
    let initial_len = capgeo::curve::polyline_length(chart, &initial);
    let opts = FlowOptions { tol, max_time: None, trace_every: 1 };
    let (st, failure) = match csf_run(chart, initial.clone(), &opts) {
        Ok(st) => (st, None),
        Err(FlowError::TimeBudgetExhausted(st)) => {
            let e = FlowError::TimeBudgetExhausted(st.clone());
            (*st, Some(e))
        }
        Err(e) => return Err(e.into()),
    };
    write_polyline_csv(out.file("initial.csv")?, &initial)?;
    write_polyline_csv(out.file("curve.csv")?, &st.curve)?;
    st.write_trace_csv(out.file("trace.csv")?)?;
    if plot {
        let mut p = Plot::new(&format!("{}: curve shortening flow", chart.label()));
        p.polyline(&initial, "#999999", 1.5);
        p.polyline(&st.curve, color(0), 2.0);
        out.text("flow.svg", &p.finish())?;
    }
    out.summary(&json!({
        "command": "flow",
        "anchor": "curve shortening flow with fixed endpoints decreases length and converges to a geodesic",
        "metric": chart.label(),
        "source": source,
        "converged": st.converged,
        "steps": st.step_count,
        "time": st.time,
        "initial_length": initial_len,
        "final_length": st.length(),
        "max_curvature": st.max_curvature,
        "tol": tol,
    }))?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn shoot(out: &OutDir, chart: &MetricChart, p: f64, alpha: f64, plot: bool) -> Result<(), CliError> {
    let s = shoot_from_boundary(chart, p, alpha, shot_length_cap(chart))?;
    let tr = &s.trajectory;
    let mut w = out.csv("trajectory.csv")?;
    csv_row(&mut w, ["s", "x", "y"])?;
    for (q, a) in tr.points.iter().zip(&tr.arclength) {
        csv_row(&mut w, [a.to_string(), q.x.to_string(), q.y.to_string()])?;
    }
    flush(w)?;
    if plot {
        let mut pl = Plot::new(&format!("{}: shot from {:.4}", chart.label(), p));
        pl.polyline(&tr.points, color(0), 2.0);
        pl.dot(tr.start(), color(1));
        out.text("shoot.svg", &pl.finish())?;
    }
    out.summary(&json!({
        "command": "shoot",
        "anchor": "geodesic shooting from the boundary",
        "metric": chart.label(),
        "basepoint": sig10(s.basepoint),
        "launch_angle": sig10(alpha),
        "hit": format!("{:?}", tr.hit),
        "self_intersects": s.self_intersects,
        "length": s.length(),
        "arrival": s.arrival.map(sig10),
        "arrival_angle": s.arrival_angle.map(sig10),
    }))
}

fn find(out: &OutDir, chart: &MetricChart, theta: f64, grid: usize, plot: bool) -> Result<(), CliError> {
    let anchor = "capillary geodesics as zeros of the contact-angle defect, with the Morse index of the second variation";
    let ps: Vec<f64> = (0..grid.max(1)).map(|i| 2.0 * PI * i as f64 / grid.max(1) as f64).collect();
    let search = match find_capillary_geodesics(chart, theta, grid) {
        Ok(s) => s,
        Err(CapillaryError::NoneFound { samples, arrivals }) => {
            let mut w = out.csv("defects.csv")?;
            csv_row(&mut w, ["basepoint", "defect"])?;
            for p in &ps {
                let d = capillary_defect(chart, *p, theta).ok();
                csv_row(&mut w, [p.to_string(), d.map(|d| d.to_string()).unwrap_or_default()])?;
            }
            flush(w)?;
            return out.summary(&json!({
                "command": "find",
                "anchor": anchor,
                "metric": chart.label(),
                "theta": sig10(theta),
                "grid": grid,
                "none_found": true,
                "samples": samples,
                "arrivals": arrivals,
                "count": 0,
                "geodesics": [],
            }));
        }
        Err(e) => return Err(e.into()),
    };
    let spectra = search.geodesics.par_iter().map(|g| morse_index(chart, g)).collect::<Result<Vec<_>, _>>()?;

    let mut w = out.csv("defects.csv")?;
    csv_row(&mut w, ["basepoint", "defect"])?;
    for s in &search.samples {
        csv_row(&mut w, [s.basepoint.to_string(), s.defect.map(|d| d.to_string()).unwrap_or_default()])?;
    }
    flush(w)?;
    let mut w = out.csv("geodesics.csv")?;
    csv_row(&mut w, ["id", "x", "y"])?;
    for (i, g) in search.geodesics.iter().enumerate() {
        for p in g.domain.curve() {
            csv_row(&mut w, [i.to_string(), p.x.to_string(), p.y.to_string()])?;
        }
    }
    flush(w)?;
    if plot {
        let mut pl = Plot::new(&format!("{}: capillary geodesics, theta {:.4}", chart.label(), theta));
        for (i, g) in search.geodesics.iter().enumerate() {
            pl.polyline(g.domain.curve(), color(i), 1.5);
        }
        out.text("find.svg", &pl.finish())?;
    }
    let geodesics: Vec<Value> = search
        .geodesics
        .iter()
        .zip(&spectra)
        .map(|(g, r)| {
            json!({
                "basepoint": sig10(g.basepoint),
                "length": g.length(),
                "l_theta": g.measure.l_theta,
                "residual": g.residual.max(),
                "index": r.index,
                "nullity": r.nullity,
                "eigenvalues": r.eigenvalues.iter().take(4).collect::<Vec<_>>(),
            })
        })
        .collect();
    let uniform = |f: fn(&capgeo::SpectrumReport) -> usize| {
        let v: Vec<usize> = spectra.iter().map(f).collect();
        if v.windows(2).all(|w| w[0] == w[1]) {
            v.first().copied()
        } else {
            None
        }
    };
    out.summary(&json!({
        "command": "find",
        "anchor": anchor,
        "metric": chart.label(),
        "theta": sig10(theta),
        "grid": grid,
        "none_found": false,
        "s1_family": search.degenerate_family,
        "count": search.geodesics.len(),
        "index": uniform(|r| r.index),
        "nullity": uniform(|r| r.nullity),
        "geodesics": geodesics,
    }))
}

fn lassos(
    out: &OutDir,
    chart: &MetricChart,
    theta: f64,
    grid: usize,
    angles: usize,
    bound: Option<f64>,
    plot: bool,
) -> Result<(), CliError> {
    let b = match bound {
        Some(b) => StarBound::Explicit(b),
        None => StarBound::FromWidths { grid_n: 32 },
    };
    let r = star_hypothesis_check(chart, theta, b, LassoGrid { basepoints: grid, angles })?;
    let mut w = out.csv("lassos.csv")?;
    csv_row(&mut w, ["basepoint", "launch_angle", "length", "criticality_residual", "alpha0", "alpha_l"])?;
    for l in &r.lassos {
        csv_row(
            &mut w,
            [l.basepoint, l.launch_angle, l.length, l.criticality_residual, l.alpha0, l.alpha_l].map(|x| x.to_string()),
        )?;
    }
    flush(w)?;
    if plot {
        let mut pl = Plot::new(&format!("{}: critical lassos", chart.label()));
        for (i, l) in r.lassos.iter().take(6).enumerate() {
            pl.polyline(&l.path, color(i), 1.5);
        }
        out.text("lassos.svg", &pl.finish())?;
    }
    out.summary(&json!({
        "command": "lassos",
        "anchor": "no critical geodesic lasso shorter than twice the width",
        "metric": chart.label(),
        "theta": sig10(theta),
        "grid": { "basepoints": grid, "angles": angles },
        "verdict": r.verdict,
        "gb_sufficient": r.gb_sufficient,
        "scan_found_lasso": r.scan_found_lasso,
        "min_curvature": r.min_curvature,
        "total_boundary_curvature": r.total_boundary_curvature,
        "length_bound": r.length_bound,
        "count": r.lassos.len(),
    }))
}

fn width(out: &OutDir, chart: &MetricChart, theta: f64, grid: usize, tol: f64) -> Result<(), CliError> {
    if !(tol > 0.0) {
        return Err(CliError::Config(format!("--tol must be positive, got {tol}")));
    }
    let opts = WidthOptions {
        grid_n: grid,
        family: LineFamily { flow_tol: tol, ..LineFamily::default() },
        budget: FlowBudget { tol, ..FlowBudget::default() },
        ..WidthOptions::default()
    };
    let r = estimate_widths(chart, theta, &opts)?;
    let mut w = out.csv("families.csv")?;
    csv_row(&mut w, ["direction", "sup"])?;
    for (d, s) in &r.w1_families {
        csv_row(&mut w, [d.to_string(), s.to_string()])?;
    }
    flush(w)?;
    out.summary(&json!({
        "command": "width",
        "anchor": "min-max width bounds: cos(theta) |boundary| < w1 <= w2",
        "metric": chart.label(),
        "theta": sig10(theta),
        "grid": grid,
        "lower_bound": r.lower_bound,
        "w1_upper": r.w1_upper,
        "w2_upper": r.w2_upper,
        "nested": r.w1_upper <= r.w2_upper,
        "above_lower_bound": r.w1_upper > r.lower_bound,
        "candidate_critical_values": r.candidate_critical_values,
        "diagnostics": r.diagnostics,
    }))
}

fn sharpness(out: &OutDir, k: f64, eps: f64, plot: bool) -> Result<(), CliError> {
    let disk = build_sharpness_disk(k)?;
    let r = verify_sharpness(&disk, eps)?;
    let theta = k / 2.0 + eps;
    let none_found = matches!(
        find_capillary_geodesics(disk.chart(), theta, 32),
        Err(CapillaryError::NoneFound { .. })
    );
    let mut w = out.csv("shots.csv")?;
    csv_row(&mut w, ["basepoint", "self_intersects", "arrival", "arrival_angle", "length"])?;
    for s in &r.shots {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        csv_row(
            &mut w,
            [s.basepoint.to_string(), s.self_intersects.to_string(), opt(s.arrival), opt(s.arrival_angle), s.length.to_string()],
        )?;
    }
    flush(w)?;
    let lasso_dom = capgeo::SimpleDomain::proper(r.lasso.path.clone(), capgeo::Side::Left);
    if let Ok(d) = &lasso_dom {
        write_domain_csv(out.file("lasso.csv")?, d, Coords::Chart)?;
    } else {
        write_polyline_csv(out.file("lasso.csv")?, &r.lasso.path)?;
    }
    if plot {
        let mut pl = Plot::new(&format!("capped cone k = {k:.4}: lasso and shots at theta {theta:.4}"));
        for i in 0..8 {
            let p = 2.0 * PI * i as f64 / 8.0;
            if let Ok(s) = shoot_from_boundary(disk.chart(), p, theta, shot_length_cap(disk.chart())) {
                pl.polyline(&s.trajectory.points, "#bbbbbb", 1.0);
            }
        }
        pl.polyline(&r.lasso.path, color(1), 2.0);
        out.text("sharpness.svg", &pl.finish())?;
    }
    out.summary(&json!({
        "command": "sharpness",
        "anchor": "sharpness of the contact-angle condition at half the boundary turning of a capped cone",
        "k": sig10(k),
        "epsilon": sig10(eps),
        "theta": sig10(theta),
        "boundary_turning": r.boundary_turning,
        "lasso": {
            "basepoint": sig10(r.lasso.basepoint),
            "angle": sig10(r.lasso.launch_angle),
            "length": r.lasso.length,
            "oracle_length": r.oracle_lasso_length,
            "criticality_residual": r.lasso.criticality_residual,
            "critical": r.lasso.critical,
        },
        "all_shots_self_intersect": r.all_shots_self_intersect,
        "shots": r.shots.len(),
        "arrival_angle_spread": r.arrival_angle_spread,
        "none_found": none_found,
    }))
}
