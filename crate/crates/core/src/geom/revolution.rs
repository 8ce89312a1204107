//! Meridians of disks of revolution `(u, r(u) cos t, r(u) sin t)`.
//!
//! A meridian is a circular arc of radius `R` leaving the axis at `u = s`
//! (so `r'(s) = +inf`), optionally continued by the tangent straight segment.
//! Everything is parametrized by meridian arclength `sigma` measured from
//! the tip; the chart used by [`super::MetricChart`] is the geodesic-polar
//! disk `p = (sigma / sigma_max) (cos t, sin t)`.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Meridian {
    cap_radius: f64,
    cap_angle: f64,
    line_len: f64,
    tip_u: f64,
}

/// `r(u)` together with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub u: f64,
    pub r: f64,
    pub dr: f64,
    pub ddr: f64,
}

impl Meridian {
    /// `cap_angle` in `(0, pi/2]` for a spherical cap meeting a cone.
    pub fn new(cap_radius: f64, cap_angle: f64, line_len: f64, tip_u: f64) -> Self {
        Meridian { cap_radius, cap_angle, line_len, tip_u }
    }

    /// Spherical cap blended into the cone `r = c u`, `c = k / sqrt(4 pi^2 - k^2)`,
    /// at `u0 = cos(k/2) / 2`, cut off at `u = 1`. Requires `k in (0, pi)`.
    pub fn capped_cone(k: f64) -> Option<Self> {
        if !(k > 0.0 && k < std::f64::consts::PI) {
            return None;
        }
        let c = cone_slope(k);
        let u0 = (k / 2.0).cos() / 2.0;
        let q = (1.0 + c * c).sqrt();
        let radius = c * u0 * q;
        Some(Meridian::new(radius, 1.0f64.atan2(c), (1.0 - u0) * q, u0 * (1.0 + c * c) - radius))
    }

    pub fn cap_radius(&self) -> f64 {
        self.cap_radius
    }

    pub fn cap_angle(&self) -> f64 {
        self.cap_angle
    }

    pub fn line_len(&self) -> f64 {
        self.line_len
    }

    pub fn tip_u(&self) -> f64 {
        self.tip_u
    }

    /// Arclength from the tip to the end of the cap.
    pub fn cap_len(&self) -> f64 {
        self.cap_radius * self.cap_angle
    }

    pub fn total_len(&self) -> f64 {
        self.cap_len() + self.line_len
    }

    pub fn junction_u(&self) -> f64 {
        self.tip_u + self.cap_radius * (1.0 - self.cap_angle.cos())
    }

    pub fn boundary_u(&self) -> f64 {
        self.u(self.total_len())
    }

    pub fn u(&self, sigma: f64) -> f64 {
        let s0 = self.cap_len();
        if sigma <= s0 {
            self.tip_u + self.cap_radius * (1.0 - (sigma / self.cap_radius).cos())
        } else {
            self.junction_u() + (sigma - s0) * self.cap_angle.sin()
        }
    }

    pub fn sigma_of_u(&self, u: f64) -> f64 {
        let uj = self.junction_u();
        if u <= uj {
            let c = (1.0 - (u - self.tip_u) / self.cap_radius).clamp(-1.0, 1.0);
            self.cap_radius * c.acos()
        } else {
            self.cap_len() + (u - uj) / self.cap_angle.sin()
        }
    }

    pub fn r(&self, sigma: f64) -> f64 {
        let s0 = self.cap_len();
        if sigma <= s0 {
            self.cap_radius * (sigma / self.cap_radius).sin()
        } else {
            self.cap_radius * self.cap_angle.sin() + (sigma - s0) * self.cap_angle.cos()
        }
    }

    /// `dr/dsigma`
    pub fn dr(&self, sigma: f64) -> f64 {
        if sigma <= self.cap_len() {
            (sigma / self.cap_radius).cos()
        } else {
            self.cap_angle.cos()
        }
    }

    /// `d^2 r / dsigma^2`
    pub fn ddr(&self, sigma: f64) -> f64 {
        if sigma <= self.cap_len() {
            -(sigma / self.cap_radius).sin() / self.cap_radius
        } else {
            0.0
        }
    }

    /// Profile `r(u)` and its `u`-derivatives at meridian arclength `sigma > 0`.
    pub fn profile(&self, sigma: f64) -> ProfileSample {
        let (us, uss) = if sigma <= self.cap_len() {
            let a = sigma / self.cap_radius;
            (a.sin(), a.cos() / self.cap_radius)
        } else {
            (self.cap_angle.sin(), 0.0)
        };
        let rs = self.dr(sigma);
        let rss = self.ddr(sigma);
        ProfileSample {
            u: self.u(sigma),
            r: self.r(sigma),
            dr: rs / us,
            ddr: (rss * us - rs * uss) / (us * us * us),
        }
    }

    /// Gaussian curvature from the profile, `K = -r'' / (r (1 + r'^2)^2)`.
    pub fn curvature(&self, sigma: f64) -> f64 {
        if sigma <= 0.0 {
            return 1.0 / (self.cap_radius * self.cap_radius);
        }
        let p = self.profile(sigma);
        let q = 1.0 + p.dr * p.dr;
        -p.ddr / (p.r * q * q)
    }

    /// `r(sigma) / sigma`, regular at the tip.
    pub fn ratio(&self, sigma: f64) -> f64 {
        let x = sigma / self.cap_radius;
        if sigma <= self.cap_len() && x < 1e-4 {
            1.0 - x * x / 6.0 + x.powi(4) / 120.0
        } else {
            self.r(sigma) / sigma
        }
    }

    /// `(1 - (r/sigma)^2) / sigma^2`, regular at the tip.
    pub fn ratio_defect(&self, sigma: f64) -> f64 {
        let x = sigma / self.cap_radius;
        if sigma <= self.cap_len() && x < 1e-2 {
            let x2 = x * x;
            (1.0 / 3.0 - 2.0 * x2 / 45.0 + x2 * x2 / 315.0) / (self.cap_radius * self.cap_radius)
        } else {
            let s = self.r(sigma) / sigma;
            (1.0 - s * s) / (sigma * sigma)
        }
    }

    /// Geodesic curvature of the boundary parallel, `r_sigma / r`.
    pub fn boundary_curvature(&self) -> f64 {
        let l = self.total_len();
        self.dr(l) / self.r(l)
    }
}

/// Slope `c = k / sqrt(4 pi^2 - k^2)` of the cone whose boundary turns by `k`.
pub fn cone_slope(k: f64) -> f64 {
    k / (4.0 * std::f64::consts::PI.powi(2) - k * k).sqrt()
}
