//! Spectrum of the second variation of `L^theta` at a capillary chord.
//!
//! `Q(f, f) = int (f'^2 - K f^2) ds - (kappa(p1) f(p1)^2 + kappa(p2) f(p2)^2) / sin(theta)`
//! is discretized with piecewise-linear elements on a uniform arclength mesh.
//! Both the form and the mass matrix are tridiagonal, so eigenvalues are
//! located by inertia counting of `A - sigma M` and bisection.

use serde::Serialize;

use super::{CapillaryError, CapillaryGeodesic, RESIDUAL_TOL};
use crate::curve::segment_lengths;
use crate::geom::linalg::gauss_legendre;
use crate::geom::{MetricChart, Vec2};

pub const DEFAULT_NODES: usize = 2001;

/// Number of eigenvalues reported beyond the index and nullity.
const EXTRA_EIGENVALUES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub index: usize,
    pub nullity: usize,
    pub zero_tol: f64,
    pub length: f64,
    pub nodes: usize,
    /// Arclength of every mesh node.
    #[serde(skip)]
    pub node_arclength: Vec<f64>,
    /// Mass-normalized eigenfunctions of the three lowest eigenvalues.
    #[serde(skip)]
    pub eigenfunctions: Vec<Vec<f64>>,
}

struct Pencil {
    /// diagonal and superdiagonal of the form
    a: Vec<f64>,
    b: Vec<f64>,
    /// diagonal and superdiagonal of the mass
    m: Vec<f64>,
    c: Vec<f64>,
}

impl Pencil {
    fn len(&self) -> usize {
        self.a.len()
    }

    /// Number of eigenvalues below `sigma` (Sylvester inertia of `A - sigma M`).
    fn count_below(&self, sigma: f64) -> usize {
        let mut count = 0;
        let mut d = 0.0;
        for i in 0..self.len() {
            let mut di = self.a[i] - sigma * self.m[i];
            if i > 0 {
                let off = self.b[i - 1] - sigma * self.c[i - 1];
                di -= off * off / d;
            }
            if di == 0.0 {
                di = -f64::EPSILON * (self.a[i].abs() + sigma.abs() * self.m[i]).max(f64::MIN_POSITIVE);
            }
            if di < 0.0 {
                count += 1;
            }
            d = di;
        }
        count
    }

    fn mass_apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.m[i] * x[i];
                if i > 0 {
                    y += self.c[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.c[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Solves `(A - sigma M) x = r` by the Thomas algorithm.
    fn shifted_solve(&self, sigma: f64, r: &[f64]) -> Vec<f64> {
        let n = self.len();
        let off: Vec<f64> = (0..n - 1).map(|i| self.b[i] - sigma * self.c[i]).collect();
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        for i in 0..n {
            let mut den = self.a[i] - sigma * self.m[i];
            let mut rhs = r[i];
            if i > 0 {
                den -= off[i - 1] * cp[i - 1];
                rhs -= off[i - 1] * dp[i - 1];
            }
            if den == 0.0 {
                den = f64::EPSILON;
            }
            if i + 1 < n {
                cp[i] = off[i] / den;
            }
            dp[i] = rhs / den;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        x
    }

    fn form_value(&self, x: &[f64]) -> f64 {
        let mut q = 0.0;
        for i in 0..self.len() {
            q += self.a[i] * x[i] * x[i];
            if i + 1 < self.len() {
                q += 2.0 * self.b[i] * x[i] * x[i + 1];
            }
        }
        q
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection on the count.
    fn eigenvalue(&self, k: usize, scale: f64) -> f64 {
        let mut lo = -scale;
        while self.count_below(lo) > k {
            lo *= 2.0;
        }
        let mut hi = scale;
        while self.count_below(hi) <= k {
            hi *= 2.0;
        }
        while hi - lo > 1e-14 * scale.max(hi.abs()) {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn eigenvector(&self, lambda: f64, scale: f64) -> Vec<f64> {
        let n = self.len();
        let shift = lambda - 1e-9 * scale;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 101) as f64 / 101.0).collect();
        for _ in 0..4 {
            let y = self.shifted_solve(shift, &self.mass_apply(&x));
            let norm = y.iter().zip(self.mass_apply(&y)).map(|(a, b)| a * b).sum::<f64>().sqrt();
            x = y.into_iter().map(|v| v / norm).collect();
        }
        let pivot = x.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(1.0);
        if pivot < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        x
    }
}

/// Position along a polyline at g-arclength `s`.
fn locate(curve: &[Vec2], cum: &[f64], s: f64) -> Vec2 {
    let j = match cum.binary_search_by(|c| c.total_cmp(&s)) {
        Ok(j) => j.min(curve.len() - 2),
        Err(j) => j.saturating_sub(1).min(curve.len() - 2),
    };
    let span = cum[j + 1] - cum[j];
    let t = if span > 0.0 { ((s - cum[j]) / span).clamp(0.0, 1.0) } else { 0.0 };
    curve[j].lerp(curve[j + 1], t)
}

fn assemble(chart: &MetricChart, geo: &CapillaryGeodesic, nodes: usize) -> (Pencil, f64, Vec<f64>) {
    let curve = geo.domain.curve();
    let mut cum = vec![0.0];
    for l in segment_lengths(chart, curve) {
        cum.push(cum.last().unwrap() + l);
    }
    let len = *cum.last().unwrap();
    let n = nodes;
    let h = len / (n - 1) as f64;
    let s_nodes: Vec<f64> = (0..n).map(|i| len * i as f64 / (n - 1) as f64).collect();
    let gl = gauss_legendre(3);
    let mut p = Pencil { a: vec![0.0; n], b: vec![0.0; n - 1], m: vec![0.0; n], c: vec![0.0; n - 1] };
    for e in 0..n - 1 {
        // K-weighted mass on the element
        let (mut k00, mut k01, mut k11) = (0.0, 0.0, 0.0);
        for &(x, w) in &gl {
            let t = 0.5 * (x + 1.0);
            let s = s_nodes[e] + t * h;
            let k = chart.curvature_or_limit(locate(curve, &cum, s));
            let wt = 0.5 * w * h * k;
            k00 += wt * (1.0 - t) * (1.0 - t);
            k01 += wt * (1.0 - t) * t;
            k11 += wt * t * t;
        }
        p.a[e] += 1.0 / h - k00;
        p.a[e + 1] += 1.0 / h - k11;
        p.b[e] += -1.0 / h - k01;
        p.m[e] += h / 3.0;
        p.m[e + 1] += h / 3.0;
        p.c[e] += h / 6.0;
    }
    let sin = geo.theta.sin();
    let first = chart.boundary_param(curve[0]);
    let last = chart.boundary_param(curve[curve.len() - 1]);
    p.a[0] -= chart.boundary_curvature_at(first) / sin;
    p.a[n - 1] -= chart.boundary_curvature_at(last) / sin;
    (p, len, s_nodes)
}

fn check(geo: &CapillaryGeodesic) -> Result<(), CapillaryError> {
    let r = geo.residual.max();
    if !(r < RESIDUAL_TOL) {
        return Err(CapillaryError::ResidualTooLarge(r));
    }
    Ok(())
}

pub fn morse_index(chart: &MetricChart, geo: &CapillaryGeodesic) -> Result<SpectrumReport, CapillaryError> {
    morse_index_with(chart, geo, DEFAULT_NODES)
}

/// Index and nullity on a mesh of `nodes >= 200` nodes.
pub fn morse_index_with(chart: &MetricChart, geo: &CapillaryGeodesic, nodes: usize) -> Result<SpectrumReport, CapillaryError> {
    check(geo)?;
    if nodes < 200 {
        return Err(CapillaryError::GridTooSmall { got: nodes, min: 200 });
    }
    let (p, len, node_arclength) = assemble(chart, geo, nodes);
    let scale = 1.0 / (len * len);
    let zero_tol = 1e-4 * scale;
    let below_neg = p.count_below(-zero_tol);
    let below_pos = p.count_below(zero_tol);
    let index = below_neg;
    let nullity = below_pos - below_neg;
    let count = (below_pos + EXTRA_EIGENVALUES).min(nodes);
    let eigenvalues: Vec<f64> = (0..count).map(|k| p.eigenvalue(k, scale)).collect();
    let eigenfunctions = eigenvalues.iter().take(3).map(|&l| p.eigenvector(l, scale)).collect();
    Ok(SpectrumReport { eigenvalues, index, nullity, zero_tol, length: len, nodes, node_arclength, eigenfunctions })
}

/// Discrete `Q(f, f)` for `f` given as a function of arclength, interpolated
/// on `nodes` nodes.
pub fn jacobi_form<F: Fn(f64) -> f64>(chart: &MetricChart, geo: &CapillaryGeodesic, f: F, nodes: usize) -> f64 {
    let (p, _, s) = assemble(chart, geo, nodes.max(2));
    let x: Vec<f64> = s.iter().map(|&s| f(s)).collect();
    p.form_value(&x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capillary::capillary_geodesic_at;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    /// Smallest root of `mu tanh(mu L / 2) = 1 / sin(theta)`: the even
    /// negative mode `cosh(mu (s - L/2))`, with eigenvalue `-mu^2`.
    fn even_mode(len: f64, theta: f64) -> f64 {
        let target = 1.0 / theta.sin();
        let (mut lo, mut hi) = (1e-9, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * (mid * len / 2.0).tanh() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        -lo * lo
    }

    #[test]
    fn flat_chord_index_one_nullity_one() {
        let c = MetricChart::flat();
        for theta in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3] {
            let g = capillary_geodesic_at(&c, 0.7, theta).unwrap();
            let r = morse_index(&c, &g).unwrap();
            assert_eq!((r.index, r.nullity), (1, 1), "theta {theta}: {:?}", &r.eigenvalues[..3]);
            let oracle = even_mode(2.0 * theta.sin(), theta);
            assert!((r.eigenvalues[0] - oracle).abs() < 1e-5 * oracle.abs(), "{} vs {oracle}", r.eigenvalues[0]);
            assert!(r.eigenvalues[1].abs() < 1e-8);
        }
    }

    #[test]
    fn pi_over_three_scaled_eigenvalue() {
        let c = MetricChart::flat();
        let g = capillary_geodesic_at(&c, 0.0, FRAC_PI_3).unwrap();
        let r = morse_index(&c, &g).unwrap();
        let l = r.length;
        assert!((r.eigenvalues[0] * l * l - (-5.756915359562562)).abs() < 1e-4);
    }

    #[test]
    fn jacobi_and_constant_test_functions() {
        let c = MetricChart::flat();
        let theta = FRAC_PI_3;
        let g = capillary_geodesic_at(&c, 1.1, theta).unwrap();
        let l = g.length();
        let q = jacobi_form(&c, &g, |s| s - l / 2.0, 401);
        assert!(q.abs() < 1e-6, "{q}");
        let one = jacobi_form(&c, &g, |_| 1.0, 401);
        assert!((one + 2.0 / theta.sin()).abs() < 1e-9);
    }

    #[test]
    fn eigenvalues_settle_under_refinement() {
        let c = MetricChart::flat();
        let g = capillary_geodesic_at(&c, 0.0, FRAC_PI_4).unwrap();
        let a = morse_index_with(&c, &g, DEFAULT_NODES).unwrap();
        let b = morse_index_with(&c, &g, 2 * DEFAULT_NODES - 1).unwrap();
        for k in 0..3 {
            assert!((a.eigenvalues[k] - b.eigenvalues[k]).abs() < a.zero_tol, "{k}");
        }
        for w in a.eigenvalues.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn eigenfunctions_are_mass_normalized() {
        let c = MetricChart::flat();
        let g = capillary_geodesic_at(&c, 0.0, FRAC_PI_4).unwrap();
        let r = morse_index_with(&c, &g, 401).unwrap();
        let f = &r.eigenfunctions[0];
        // lowest mode is even and of one sign
        assert!(f.iter().all(|v| *v > 0.0));
        assert!((f[0] - f[f.len() - 1]).abs() < 1e-8);
    }
}
