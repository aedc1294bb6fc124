//! Ellipse and 2D Gaussian domain types.
//!
//! An ellipse `(mu_x, mu_y, sigma_l, sigma_s, theta)` is the unit Mahalanobis
//! contour of the Gaussian with mean `(mu_x, mu_y)` and covariance
//! `R(theta)^T diag(sigma_l^2, sigma_s^2) R(theta)`, where
//! `R(theta) = [[cos, sin], [-sin, cos]]` maps image coordinates into the
//! frame whose x' axis carries `sigma_l`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Smallest semi-axis accepted by [`Ellipse::new`], in pixels.
pub const MIN_AXIS: f64 = 1e-3;

/// Aspect ratios within this distance of 1 are treated as circles.
pub const CIRCLE_TOLERANCE: f64 = 1e-6;

pub type Mat2 = [[f64; 2]; 2];

/// `[[cos θ, sin θ], [−sin θ, cos θ]]`.
pub fn rotation_matrix(theta: f64) -> Result<Mat2> {
    if !theta.is_finite() {
        return Err(Error::invalid(format!("rotation angle {theta} is not finite")));
    }
    let (s, c) = theta.sin_cos();
    Ok([[c, s], [-s, c]])
}

/// Maps an angle onto the half-open interval (−π/2, π/2], modulo π.
pub fn normalize_angle(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::invalid(format!("angle {theta} is not finite")));
    }
    Ok(wrap_half_pi(theta))
}

pub(crate) fn wrap_half_pi(theta: f64) -> f64 {
    if theta > -FRAC_PI_2 && theta <= FRAC_PI_2 {
        return theta;
    }
    let r = theta.rem_euclid(PI);
    // rem_euclid may round up to exactly π for tiny negative inputs
    if r > FRAC_PI_2 {
        r - PI
    } else {
        r
    }
}

/// A rotated ellipse. `sigma_l` lies along the rotated x' axis and `sigma_s`
/// along y'; the two are not required to be ordered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    mu_x: f64,
    mu_y: f64,
    sigma_l: f64,
    sigma_s: f64,
    theta: f64,
}

impl Ellipse {
    /// Builds an ellipse, normalizing `theta` into (−π/2, π/2].
    ///
    /// Semi-axes below [`MIN_AXIS`] are rejected, not clamped.
    pub fn new(mu_x: f64, mu_y: f64, sigma_l: f64, sigma_s: f64, theta: f64) -> Result<Self> {
        if !(mu_x.is_finite() && mu_y.is_finite()) {
            return Err(Error::invalid(format!("ellipse center ({mu_x}, {mu_y}) is not finite")));
        }
        for (name, v) in [("sigma_l", sigma_l), ("sigma_s", sigma_s)] {
            if !v.is_finite() || v < MIN_AXIS {
                return Err(Error::DegenerateEllipse(format!(
                    "{name} = {v} is below the {MIN_AXIS} px floor"
                )));
            }
        }
        let theta = normalize_angle(theta)?;
        Ok(Self { mu_x, mu_y, sigma_l, sigma_s, theta })
    }

    pub fn circle(mu_x: f64, mu_y: f64, radius: f64) -> Result<Self> {
        Self::new(mu_x, mu_y, radius, radius, 0.0)
    }

    pub fn mu_x(&self) -> f64 {
        self.mu_x
    }

    pub fn mu_y(&self) -> f64 {
        self.mu_y
    }

    pub fn sigma_l(&self) -> f64 {
        self.sigma_l
    }

    pub fn sigma_s(&self) -> f64 {
        self.sigma_s
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn center(&self) -> [f64; 2] {
        [self.mu_x, self.mu_y]
    }

    /// Longer over shorter semi-axis, always ≥ 1.
    pub fn aspect_ratio(&self) -> f64 {
        self.sigma_l.max(self.sigma_s) / self.sigma_l.min(self.sigma_s)
    }

    pub fn is_circular(&self) -> bool {
        self.aspect_ratio() - 1.0 <= CIRCLE_TOLERANCE
    }

    /// The same ellipse with the axes swapped and the angle turned by 90°.
    pub fn flipped(&self) -> Self {
        Self {
            sigma_l: self.sigma_s,
            sigma_s: self.sigma_l,
            theta: wrap_half_pi(self.theta + FRAC_PI_2),
            ..*self
        }
    }

    /// Representation with `sigma_l >= sigma_s`; circles get `theta = 0`.
    pub fn canonical(&self) -> Self {
        let e = if self.sigma_l < self.sigma_s { self.flipped() } else { *self };
        if e.is_circular() {
            Self { theta: 0.0, ..e }
        } else {
            e
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self { mu_x: self.mu_x + dx, mu_y: self.mu_y + dy, ..*self }
    }

    /// Rotates the ellipse counter-clockwise (in x-right, y-up terms) by
    /// `angle` about `pivot`.
    pub fn rotated_about(&self, pivot: [f64; 2], angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let dx = self.mu_x - pivot[0];
        let dy = self.mu_y - pivot[1];
        Self {
            mu_x: pivot[0] + c * dx - s * dy,
            mu_y: pivot[1] + s * dx + c * dy,
            theta: wrap_half_pi(self.theta + angle),
            ..*self
        }
    }

    /// Entries `[[P, Q], [Q, S]]` of the inverse covariance.
    pub fn precision(&self) -> Mat2 {
        let (s, c) = self.theta.sin_cos();
        let il = 1.0 / (self.sigma_l * self.sigma_l);
        let is = 1.0 / (self.sigma_s * self.sigma_s);
        let p = c * c * il + s * s * is;
        let q = c * s * (il - is);
        let r = s * s * il + c * c * is;
        [[p, q], [q, r]]
    }

    /// `(p − μ)ᵀ Σ⁻¹ (p − μ)`; ≤ 1 inside the ellipse.
    pub fn mahalanobis_sq(&self, p: [f64; 2]) -> f64 {
        let (s, c) = self.theta.sin_cos();
        let dx = p[0] - self.mu_x;
        let dy = p[1] - self.mu_y;
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        u * u / (self.sigma_l * self.sigma_l) + v * v / (self.sigma_s * self.sigma_s)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.mahalanobis_sq(p) <= 1.0
    }

    pub fn area(&self) -> f64 {
        PI * self.sigma_l * self.sigma_s
    }

    pub fn to_gaussian(&self) -> Gaussian2D {
        ellipse_to_gaussian(self)
    }

    pub fn bbox(&self) -> BBox {
        ellipse_bbox(self)
    }
}

/// Mean and covariance of a bivariate normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian2D {
    mu: [f64; 2],
    sigma: Mat2,
}

impl Gaussian2D {
    pub fn new(mu: [f64; 2], sigma: Mat2) -> Result<Self> {
        if !mu.iter().chain(sigma.iter().flatten()).all(|v| v.is_finite()) {
            return Err(Error::invalid("gaussian parameters must be finite"));
        }
        let scale = sigma.iter().flatten().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
        if (sigma[0][1] - sigma[1][0]).abs() > 1e-9 * scale {
            return Err(Error::DegenerateCovariance(format!(
                "covariance is not symmetric: {} vs {}",
                sigma[0][1], sigma[1][0]
            )));
        }
        let det = sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[1][0];
        if !(sigma[0][0] > 0.0 && det > 0.0) {
            return Err(Error::DegenerateCovariance(format!(
                "covariance is not positive definite (det = {det})"
            )));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> [f64; 2] {
        self.mu
    }

    pub fn sigma(&self) -> Mat2 {
        self.sigma
    }

    pub fn det(&self) -> f64 {
        self.sigma[0][0] * self.sigma[1][1] - self.sigma[0][1] * self.sigma[1][0]
    }

    /// Closed-form eigenvalues `(λ_max, λ_min)` of the covariance.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let [[a, b], [_, c]] = self.sigma;
        let mean = 0.5 * (a + c);
        let root = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        let hi = mean + root;
        // det / λ_max avoids cancellation for eccentric covariances
        (hi, self.det() / hi)
    }

    pub fn pdf(&self, p: [f64; 2]) -> f64 {
        gaussian_pdf(self, p)
    }
}

pub fn ellipse_to_gaussian(e: &Ellipse) -> Gaussian2D {
    let (s, c) = e.theta.sin_cos();
    let l2 = e.sigma_l * e.sigma_l;
    let s2 = e.sigma_s * e.sigma_s;
    let xx = c * c * l2 + s * s * s2;
    let xy = c * s * (l2 - s2);
    let yy = s * s * l2 + c * c * s2;
    Gaussian2D { mu: e.center(), sigma: [[xx, xy], [xy, yy]] }
}

/// Inverse of [`ellipse_to_gaussian`], returning the canonical ellipse.
pub fn gaussian_to_ellipse(g: &Gaussian2D) -> Result<Ellipse> {
    let (hi, lo) = g.eigenvalues();
    if lo.is_nan() || lo <= 0.0 {
        return Err(Error::DegenerateCovariance(format!("eigenvalue {lo} is not positive")));
    }
    let [[a, b], [_, c]] = g.sigma;
    let sigma_l = hi.sqrt();
    let sigma_s = lo.sqrt();
    let theta = if sigma_l / sigma_s - 1.0 <= CIRCLE_TOLERANCE {
        0.0
    } else {
        0.5 * (2.0 * b).atan2(a - c)
    };
    Ellipse::new(g.mu[0], g.mu[1], sigma_l, sigma_s, theta)
}

pub fn gaussian_pdf(g: &Gaussian2D, p: [f64; 2]) -> f64 {
    let det = g.det();
    let [[a, b], [_, c]] = g.sigma;
    let dx = p[0] - g.mu[0];
    let dy = p[1] - g.mu[1];
    let quad = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
    (-0.5 * quad).exp() / (2.0 * PI * det.sqrt())
}

/// Axis-aligned box given by center and full width/height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::invalid("box center must be finite"));
        }
        if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
            return Err(Error::invalid(format!("box size {w}x{h} must be positive")));
        }
        Ok(Self { cx, cy, w, h })
    }

    pub fn x_min(&self) -> f64 {
        self.cx - 0.5 * self.w
    }

    pub fn x_max(&self) -> f64 {
        self.cx + 0.5 * self.w
    }

    pub fn y_min(&self) -> f64 {
        self.cy - 0.5 * self.h
    }

    pub fn y_max(&self) -> f64 {
        self.cy + 0.5 * self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = (self.x_max().min(other.x_max()) - self.x_min().max(other.x_min())).max(0.0);
        let h = (self.y_max().min(other.y_max()) - self.y_min().max(other.y_min())).max(0.0);
        w * h
    }

    /// Smallest box covering both.
    pub fn union_hull(&self, other: &BBox) -> BBox {
        let x0 = self.x_min().min(other.x_min());
        let x1 = self.x_max().max(other.x_max());
        let y0 = self.y_min().min(other.y_min());
        let y1 = self.y_max().max(other.y_max());
        BBox { cx: 0.5 * (x0 + x1), cy: 0.5 * (y0 + y1), w: x1 - x0, h: y1 - y0 }
    }
}

/// Tight axis-aligned box around the ellipse.
pub fn ellipse_bbox(e: &Ellipse) -> BBox {
    let (s, c) = e.theta.sin_cos();
    let l2 = e.sigma_l * e.sigma_l;
    let s2 = e.sigma_s * e.sigma_s;
    let half_w = (l2 * c * c + s2 * s * s).sqrt();
    let half_h = (l2 * s * s + s2 * c * c).sqrt();
    BBox { cx: e.mu_x, cy: e.mu_y, w: 2.0 * half_w, h: 2.0 * half_h }
}
