//! KL divergence localization loss between a target and a proposal ellipse.
//!
//! `D_KL(N_t || N_p) = ½[tr(Σp⁻¹Σt) + Δμᵀ Σp⁻¹ Δμ + ln(|Σp|/|Σt|) − 2]`,
//! evaluated term by term from the ellipse parameters. With
//! `Δθ = θp − θt` and `Δ = μp − μt`:
//!
//! - trace: `cos²Δθ (l_t²/l_p² + s_t²/s_p²) + sin²Δθ (l_t²/s_p² + s_t²/l_p²)`
//! - mahalanobis: `(cosθp Δx + sinθp Δy)²/l_p² + (cosθp Δy − sinθp Δx)²/s_p²`
//! - log-det: `ln(l_p²/l_t²) + ln(s_p²/s_t²)`

use crate::anchor_codec::EncodedEllipse;
use crate::error::{Error, Result};
use crate::geometry::Ellipse;

/// The three closed-form pieces of the KL divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlTerms {
    pub trace: f64,
    pub mahalanobis: f64,
    pub log_det: f64,
}

impl KlTerms {
    pub fn total(&self) -> f64 {
        0.5 * (self.trace + self.mahalanobis + self.log_det - 2.0)
    }
}

/// Rates of change of a loss with respect to the five proposal parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParamGradient {
    pub d_mu_x: f64,
    pub d_mu_y: f64,
    pub d_sigma_l: f64,
    pub d_sigma_s: f64,
    pub d_theta: f64,
}

impl ParamGradient {
    pub fn as_array(&self) -> [f64; 5] {
        [self.d_mu_x, self.d_mu_y, self.d_sigma_l, self.d_sigma_s, self.d_theta]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

// Shared intermediate quantities of the loss and its gradient.
struct Pieces {
    cos_d: f64,
    sin_d: f64,
    lt2: f64,
    st2: f64,
    lp2: f64,
    sp2: f64,
    // Δμ rotated into the proposal frame
    u: f64,
    v: f64,
}

impl Pieces {
    fn new(target: &Ellipse, proposal: &Ellipse) -> Self {
        let (sin_d, cos_d) = (proposal.theta() - target.theta()).sin_cos();
        let (sp, cp) = proposal.theta().sin_cos();
        let dx = proposal.mu_x() - target.mu_x();
        let dy = proposal.mu_y() - target.mu_y();
        Self {
            cos_d,
            sin_d,
            lt2: target.sigma_l() * target.sigma_l(),
            st2: target.sigma_s() * target.sigma_s(),
            lp2: proposal.sigma_l() * proposal.sigma_l(),
            sp2: proposal.sigma_s() * proposal.sigma_s(),
            u: cp * dx + sp * dy,
            v: cp * dy - sp * dx,
        }
    }
}

pub fn kl_terms(target: &Ellipse, proposal: &Ellipse) -> KlTerms {
    let k = Pieces::new(target, proposal);
    let c2 = k.cos_d * k.cos_d;
    let s2 = k.sin_d * k.sin_d;
    let trace = c2 * (k.lt2 / k.lp2 + k.st2 / k.sp2) + s2 * (k.lt2 / k.sp2 + k.st2 / k.lp2);
    let mahalanobis = k.u * k.u / k.lp2 + k.v * k.v / k.sp2;
    let log_det = 2.0
        * ((proposal.sigma_l() / target.sigma_l()).ln()
            + (proposal.sigma_s() / target.sigma_s()).ln());
    KlTerms { trace, mahalanobis, log_det }
}

/// `D_KL(target || proposal)` in nats.
pub fn kl_divergence(target: &Ellipse, proposal: &Ellipse) -> f64 {
    kl_terms(target, proposal).total()
}

/// The θ = 0 specialization with half-widths `w = σl` and half-heights `h = σs`.
///
/// Both inputs must have `theta == 0` exactly.
pub fn kl_divergence_axis_aligned(target: &Ellipse, proposal: &Ellipse) -> Result<f64> {
    check_axis_aligned(target, proposal)?;
    let (wt, ht) = (target.sigma_l(), target.sigma_s());
    let (wp, hp) = (proposal.sigma_l(), proposal.sigma_s());
    let dx = proposal.mu_x() - target.mu_x();
    let dy = proposal.mu_y() - target.mu_y();
    let (wp2, hp2) = (wp * wp, hp * hp);
    Ok(0.5
        * (wt * wt / wp2 + ht * ht / hp2 + dx * dx / wp2 + dy * dy / hp2
            + (wp2 / (wt * wt)).ln()
            + (hp2 / (ht * ht)).ln()
            - 2.0))
}

fn check_axis_aligned(target: &Ellipse, proposal: &Ellipse) -> Result<()> {
    if target.theta() != 0.0 || proposal.theta() != 0.0 {
        return Err(Error::invalid(format!(
            "axis-aligned KL needs theta = 0, got {} and {}",
            target.theta(),
            proposal.theta()
        )));
    }
    Ok(())
}

/// Analytic gradient of [`kl_divergence`] with respect to the proposal.
pub fn kl_gradient(target: &Ellipse, proposal: &Ellipse) -> ParamGradient {
    let k = Pieces::new(target, proposal);
    let (sp, cp) = proposal.theta().sin_cos();
    let (a, b) = (proposal.sigma_l(), proposal.sigma_s());
    let c2 = k.cos_d * k.cos_d;
    let s2 = k.sin_d * k.sin_d;

    // ∂u/∂μx = cp, ∂v/∂μx = −sp, ∂u/∂μy = sp, ∂v/∂μy = cp
    let d_mu_x = k.u * cp / k.lp2 - k.v * sp / k.sp2;
    let d_mu_y = k.u * sp / k.lp2 + k.v * cp / k.sp2;
    let d_sigma_l = 1.0 / a - (c2 * k.lt2 + s2 * k.st2 + k.u * k.u) / (k.lp2 * a);
    let d_sigma_s = 1.0 / b - (c2 * k.st2 + s2 * k.lt2 + k.v * k.v) / (k.sp2 * b);
    // ∂u/∂θp = v, ∂v/∂θp = −u
    let inv_diff = 1.0 / k.sp2 - 1.0 / k.lp2;
    let d_theta = k.cos_d * k.sin_d * (k.lt2 - k.st2) * inv_diff - k.u * k.v * inv_diff;

    ParamGradient { d_mu_x, d_mu_y, d_sigma_l, d_sigma_s, d_theta }
}

/// Gradient of [`kl_divergence_axis_aligned`]; `d_theta` is identically zero.
pub fn kl_gradient_axis_aligned(target: &Ellipse, proposal: &Ellipse) -> Result<ParamGradient> {
    check_axis_aligned(target, proposal)?;
    let (wt, ht) = (target.sigma_l(), target.sigma_s());
    let (wp, hp) = (proposal.sigma_l(), proposal.sigma_s());
    let dx = proposal.mu_x() - target.mu_x();
    let dy = proposal.mu_y() - target.mu_y();
    Ok(ParamGradient {
        d_mu_x: dx / (wp * wp),
        d_mu_y: dy / (hp * hp),
        d_sigma_l: 1.0 / wp - (wt * wt + dx * dx) / (wp * wp * wp),
        d_sigma_s: 1.0 / hp - (ht * ht + dy * dy) / (hp * hp * hp),
        d_theta: 0.0,
    })
}

/// Huber-style smoothed L1 with transition at |d| = 1.
pub fn smoothed_l1(pred: f64, tgt: f64) -> Result<f64> {
    if !(pred.is_finite() && tgt.is_finite()) {
        return Err(Error::invalid(format!("smoothed L1 inputs {pred}, {tgt} must be finite")));
    }
    Ok(smoothed_l1_unchecked(pred - tgt))
}

pub(crate) fn smoothed_l1_unchecked(d: f64) -> f64 {
    let ad = d.abs();
    if ad < 1.0 {
        0.5 * d * d
    } else {
        ad - 0.5
    }
}

/// Derivative of the smoothed L1 with respect to the residual.
pub(crate) fn smoothed_l1_slope(d: f64) -> f64 {
    d.clamp(-1.0, 1.0)
}

/// Sum of smoothed L1 over `(tx, ty, tw, th, t_tan)`.
pub fn rpn_regression_loss(pred: &EncodedEllipse, tgt: &EncodedEllipse) -> Result<f64> {
    pred.as_array()
        .iter()
        .zip(tgt.as_array())
        .map(|(&p, t)| smoothed_l1(p, t))
        .sum()
}
