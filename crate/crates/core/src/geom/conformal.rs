//! Conformal factors `phi` for metrics `e^{2 phi} (dx^2 + dy^2)` on the unit disk.

use super::expr::{Expr, Jet};

/// Samples of `phi` on a uniform `n x n` grid covering `[-1, 1]^2`, row-major
/// in `y` (row `j` is `y = -1 + 2j/(n-1)`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    n: usize,
    values: Vec<f64>,
}

impl GridField {
    /// Returns `None` when `values.len() != n * n` or `n < 4`.
    pub fn new(n: usize, values: Vec<f64>) -> Option<Self> {
        (n >= 4 && values.len() == n * n && values.iter().all(|v| v.is_finite())).then_some(GridField { n, values })
    }

    /// Samples a closed-form field; mostly useful for tests.
    pub fn sample<F: Fn(f64, f64) -> f64>(n: usize, f: F) -> Self {
        let mut values = Vec::with_capacity(n * n);
        let h = 2.0 / (n - 1) as f64;
        for j in 0..n {
            for i in 0..n {
                values.push(f(-1.0 + i as f64 * h, -1.0 + j as f64 * h));
            }
        }
        GridField { n, values }
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn at(&self, i: isize, j: isize) -> f64 {
        // linear extrapolation one cell past the edge
        let n = self.n as isize;
        let clamp = |k: isize| k.clamp(0, n - 1);
        let raw = |a: isize, b: isize| self.values[(clamp(b) * n + clamp(a)) as usize];
        let ext = |k: isize, lo: isize, hi: isize| -> (isize, isize, f64) {
            if k < lo {
                (lo, lo + 1, (lo - k) as f64)
            } else if k > hi {
                (hi, hi - 1, (k - hi) as f64)
            } else {
                (k, k, 0.0)
            }
        };
        let (ia, ib, si) = ext(i, 0, n - 1);
        let (ja, jb, sj) = ext(j, 0, n - 1);
        let base = raw(ia, ja);
        let gi = if si > 0.0 { base - raw(ib, ja) } else { 0.0 };
        let gj = if sj > 0.0 { base - raw(ia, jb) } else { 0.0 };
        base + si * gi + sj * gj
    }

    /// Bicubic Catmull-Rom interpolation with first and second derivatives.
    pub fn jet(&self, x: f64, y: f64) -> Jet {
        let h = 2.0 / (self.n - 1) as f64;
        let fx = ((x + 1.0) / h).clamp(0.0, (self.n - 1) as f64);
        let fy = ((y + 1.0) / h).clamp(0.0, (self.n - 1) as f64);
        let i0 = (fx.floor() as isize).min(self.n as isize - 2);
        let j0 = (fy.floor() as isize).min(self.n as isize - 2);
        let u = fx - i0 as f64;
        let v = fy - j0 as f64;
        let wu = catmull_rom(u);
        let wv = catmull_rom(v);
        let mut out = Jet::default();
        for b in 0..4 {
            for a in 0..4 {
                let p = self.at(i0 - 1 + a as isize, j0 - 1 + b as isize);
                out.v += wu.0[a] * wv.0[b] * p;
                out.dx += wu.1[a] * wv.0[b] * p;
                out.dy += wu.0[a] * wv.1[b] * p;
                out.dxx += wu.2[a] * wv.0[b] * p;
                out.dxy += wu.1[a] * wv.1[b] * p;
                out.dyy += wu.0[a] * wv.2[b] * p;
            }
        }
        out.dx /= h;
        out.dy /= h;
        out.dxx /= h * h;
        out.dxy /= h * h;
        out.dyy /= h * h;
        out
    }
}

/// Catmull-Rom weights and their first two derivatives at local coordinate `u`.
fn catmull_rom(u: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let u2 = u * u;
    let u3 = u2 * u;
    (
        [
            0.5 * (-u3 + 2.0 * u2 - u),
            0.5 * (3.0 * u3 - 5.0 * u2 + 2.0),
            0.5 * (-3.0 * u3 + 4.0 * u2 + u),
            0.5 * (u3 - u2),
        ],
        [
            0.5 * (-3.0 * u2 + 4.0 * u - 1.0),
            0.5 * (9.0 * u2 - 10.0 * u),
            0.5 * (-9.0 * u2 + 8.0 * u + 1.0),
            0.5 * (3.0 * u2 - 2.0 * u),
        ],
        [
            0.5 * (-6.0 * u + 4.0),
            0.5 * (18.0 * u - 10.0),
            0.5 * (-18.0 * u + 8.0),
            0.5 * (6.0 * u - 2.0),
        ],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConformalFactor {
    Expr(Expr),
    Grid(GridField),
}

impl ConformalFactor {
    pub fn jet(&self, x: f64, y: f64) -> Jet {
        match self {
            ConformalFactor::Expr(e) => e.jet(x, y),
            ConformalFactor::Grid(g) => g.jet(x, y),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ConformalFactor::Expr(e) => format!("phi = {e}"),
            ConformalFactor::Grid(g) => format!("phi sampled on {0}x{0} grid", g.resolution()),
        }
    }
}
