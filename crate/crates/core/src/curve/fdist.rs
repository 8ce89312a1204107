//! A fixed-dictionary lower bound for the bounded-Lipschitz varifold distance.
//!
//! A varifold here is a finite sum of weighted (point, unoriented direction)
//! atoms. Test functions are products `P_a(x) P_b(y) D_c(w)` with
//! `P in {1, cos(pi s), sin(pi s), cos(2 pi s)}` and
//! `D in {1, cos 2w, sin 2w, cos 4w}` (`w` the chart angle of the tangent, so
//! `D` is invariant under `w -> w + pi`), each divided by `max(1, Lip f)`.

use std::f64::consts::PI;

use super::measure::check_theta;
use super::{CurveError, DomainState, SimpleDomain};
use crate::geom::{MetricChart, Vec2};

pub const DICTIONARY_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FMode {
    /// Only the interior boundary `d^i Omega`.
    Interior,
    /// `d^i Omega + cos(theta) d^b Omega`.
    Capillary(f64),
}

struct Atom {
    p: Vec2,
    w: f64,
    mass: f64,
}

fn position_basis(k: usize, s: f64) -> (f64, f64) {
    // value and Lipschitz constant
    match k {
        0 => (1.0, 0.0),
        1 => ((PI * s).cos(), PI),
        2 => ((PI * s).sin(), PI),
        _ => ((2.0 * PI * s).cos(), 2.0 * PI),
    }
}

fn direction_basis(k: usize, w: f64) -> (f64, f64) {
    match k {
        0 => (1.0, 0.0),
        1 => ((2.0 * w).cos(), 2.0),
        2 => ((2.0 * w).sin(), 2.0),
        _ => ((4.0 * w).cos(), 4.0),
    }
}

fn moments(atoms: &[Atom]) -> [f64; DICTIONARY_SIZE] {
    let mut out = [0.0; DICTIONARY_SIZE];
    for atom in atoms {
        let px: Vec<_> = (0..4).map(|k| position_basis(k, atom.p.x)).collect();
        let py: Vec<_> = (0..4).map(|k| position_basis(k, atom.p.y)).collect();
        let dw: Vec<_> = (0..4).map(|k| direction_basis(k, atom.w)).collect();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let lip = px[a].1.hypot(py[b].1) + dw[c].1;
                    let f = px[a].0 * py[b].0 * dw[c].0 / lip.max(1.0);
                    out[(a * 4 + b) * 4 + c] += f * atom.mass;
                }
            }
        }
    }
    out
}

fn interior_atoms(chart: &MetricChart, dom: &SimpleDomain, out: &mut Vec<Atom>) {
    for w in dom.curve().windows(2) {
        let d = w[1] - w[0];
        out.push(Atom { p: (w[0] + w[1]) * 0.5, w: d.angle(), mass: chart.segment_length(w[0], w[1]) });
    }
}

fn boundary_atoms(chart: &MetricChart, dom: &SimpleDomain, weight: f64, out: &mut Vec<Atom>) {
    let (q1, span) = dom.wetted_arc();
    if span <= 0.0 {
        return;
    }
    let n = ((span / 0.01).ceil() as usize).max(64);
    let h = span / n as f64;
    for i in 0..n {
        let t = q1 + (i as f64 + 0.5) * h;
        let p = Vec2::polar(t);
        out.push(Atom { p, w: p.perp().angle(), mass: weight * chart.boundary_speed(t) * h });
    }
}

fn atoms(chart: &MetricChart, dom: &SimpleDomain, mode: FMode) -> Vec<Atom> {
    let mut out = Vec::new();
    if dom.state() == DomainState::Proper {
        interior_atoms(chart, dom, &mut out);
    }
    if let FMode::Capillary(theta) = mode {
        boundary_atoms(chart, dom, theta.cos(), &mut out);
    }
    out
}

/// `max_f |V_A(f) - V_B(f)|` over the 64-function dictionary.
pub fn f_distance(chart: &MetricChart, a: &SimpleDomain, b: &SimpleDomain, mode: FMode) -> Result<f64, CurveError> {
    if let FMode::Capillary(theta) = mode {
        check_theta(theta)?;
    }
    let ma = moments(&atoms(chart, a, mode));
    let mb = moments(&atoms(chart, b, mode));
    Ok(ma.iter().zip(&mb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}
