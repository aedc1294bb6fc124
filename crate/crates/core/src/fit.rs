//! Gradient-descent localization harness: the KL loss against the
//! smoothed-L1 regression baseline on single ellipse instances.
//!
//! Both fitters run plain gradient descent with Armijo backtracking (the step
//! starts at `learning_rate` every iteration and is halved until the
//! sufficient-decrease condition holds), so the loss sequence never increases.

use rayon::prelude::*;

use crate::anchor_codec::{best_anchor, decode, encode, Anchor, AnchorGridConfig, EncodedEllipse};
use crate::detection_eval::angle_error;
use crate::error::{Error, Result};
use crate::geometry::{wrap_half_pi, Ellipse};
use crate::kl_loss::{kl_divergence, kl_gradient, smoothed_l1_slope, smoothed_l1_unchecked, ParamGradient};
use crate::raster_metrics::{ellipse_iou_unchecked, DEFAULT_IOU_CELLS, MIN_IOU_CELLS};

pub const ARMIJO_C: f64 = 1e-4;
/// Losses above this abort the fit.
pub const DIVERGENCE_LIMIT: f64 = 1e6;
const MIN_STEP: f64 = 1e-20;
const GRAD_TOL_SQ: f64 = 1e-30;

/// Coordinates the KL fitter descends in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamSpace {
    /// `(μx, μy, ln σl, ln σs, θ)`, θ renormalized after every step.
    Raw,
    /// `(tx, ty, tw, th, tan θ)` relative to the anchor.
    AnchorEncoded(Anchor),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once an accepted step lowers the loss by less than this.
    pub convergence_eps: f64,
    pub parameter_space: ParamSpace,
    /// Raster resolution of the per-iteration IoU.
    pub iou_cells: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_iters: 500,
            convergence_eps: 1e-12,
            parameter_space: ParamSpace::Raw,
            iou_cells: DEFAULT_IOU_CELLS,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        if self.convergence_eps.is_nan() || self.convergence_eps < 0.0 {
            return Err(Error::invalid("convergence_eps must be non-negative"));
        }
        if self.iou_cells < MIN_IOU_CELLS {
            return Err(Error::invalid(format!("iou_cells must be at least {MIN_IOU_CELLS}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitStep {
    pub loss: f64,
    pub ellipse: Ellipse,
    /// Raster IoU against the target.
    pub iou: f64,
    /// Line-search step that produced this iterate; 0 for the start.
    pub step_size: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    /// One entry per visited iterate, starting with the initialization.
    pub steps: Vec<FitStep>,
    pub final_ellipse: Ellipse,
    pub converged: bool,
}

impl FitTrace {
    pub fn final_step(&self) -> &FitStep {
        self.steps.last().expect("a trace always holds the initial iterate")
    }

    pub fn losses(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.loss).collect()
    }

    /// Number of accepted descent steps.
    pub fn iterations(&self) -> usize {
        self.steps.len() - 1
    }
}

/// A smooth objective over five coordinates with a map back to ellipses.
trait Objective {
    fn eval(&self, x: &[f64; 5]) -> Result<(f64, [f64; 5])>;
    fn ellipse(&self, x: &[f64; 5]) -> Result<Ellipse>;
    fn project(&self, x: [f64; 5]) -> [f64; 5] {
        x
    }
}

/// An ellipse-level loss seen through a parameterization.
struct EllipseObjective<F> {
    loss: F,
    space: ParamSpace,
}

impl<F> EllipseObjective<F>
where
    F: Fn(&Ellipse) -> Result<(f64, ParamGradient)>,
{
    fn coords(&self, e: &Ellipse) -> Result<[f64; 5]> {
        Ok(match self.space {
            ParamSpace::Raw => [e.mu_x(), e.mu_y(), e.sigma_l().ln(), e.sigma_s().ln(), e.theta()],
            ParamSpace::AnchorEncoded(a) => encode(e, &a)?.as_array(),
        })
    }
}

impl<F> Objective for EllipseObjective<F>
where
    F: Fn(&Ellipse) -> Result<(f64, ParamGradient)>,
{
    fn eval(&self, x: &[f64; 5]) -> Result<(f64, [f64; 5])> {
        let e = self.ellipse(x)?;
        let (loss, g) = (self.loss)(&e)?;
        let grad = match self.space {
            ParamSpace::Raw => [
                g.d_mu_x,
                g.d_mu_y,
                g.d_sigma_l * e.sigma_l(),
                g.d_sigma_s * e.sigma_s(),
                g.d_theta,
            ],
            ParamSpace::AnchorEncoded(a) => [
                g.d_mu_x * a.w,
                g.d_mu_y * a.h,
                g.d_sigma_l * e.sigma_l(),
                g.d_sigma_s * e.sigma_s(),
                g.d_theta / (1.0 + x[4] * x[4]),
            ],
        };
        Ok((loss, grad))
    }

    fn ellipse(&self, x: &[f64; 5]) -> Result<Ellipse> {
        match self.space {
            ParamSpace::Raw => Ellipse::new(x[0], x[1], x[2].exp(), x[3].exp(), x[4]),
            ParamSpace::AnchorEncoded(a) => decode(&EncodedEllipse::from_array(*x), &a),
        }
    }

    fn project(&self, mut x: [f64; 5]) -> [f64; 5] {
        if self.space == ParamSpace::Raw {
            x[4] = wrap_half_pi(x[4]);
        }
        x
    }
}

/// Summed smoothed L1 between encoded vectors.
struct RegressionObjective {
    target: [f64; 5],
    anchor: Anchor,
}

impl Objective for RegressionObjective {
    fn eval(&self, x: &[f64; 5]) -> Result<(f64, [f64; 5])> {
        let mut loss = 0.0;
        let mut grad = [0.0; 5];
        for k in 0..5 {
            let d = x[k] - self.target[k];
            loss += smoothed_l1_unchecked(d);
            grad[k] = smoothed_l1_slope(d);
        }
        Ok((loss, grad))
    }

    fn ellipse(&self, x: &[f64; 5]) -> Result<Ellipse> {
        decode(&EncodedEllipse::from_array(*x), &self.anchor)
    }
}

fn descend(obj: &impl Objective, x0: [f64; 5], target: &Ellipse, cfg: &FitConfig) -> Result<FitTrace> {
    cfg.validate()?;
    let mut x = obj.project(x0);
    let (mut loss, mut grad) = obj.eval(&x)?;
    let mut steps = Vec::new();
    let mut converged = false;
    let mut step_size = 0.0;
    loop {
        let ellipse = obj.ellipse(&x)?;
        let iou = ellipse_iou_unchecked(&ellipse, target, cfg.iou_cells);
        steps.push(FitStep { loss, ellipse, iou, step_size });
        if !loss.is_finite() || loss > DIVERGENCE_LIMIT {
            return Err(Error::Diverged {
                trace: Box::new(FitTrace { steps, final_ellipse: ellipse, converged: false }),
            });
        }
        if converged || steps.len() >= cfg.max_iters {
            break;
        }
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        if g2 <= GRAD_TOL_SQ {
            converged = true;
            break;
        }

        let mut t = cfg.learning_rate;
        let accepted = loop {
            let mut cand = x;
            for k in 0..5 {
                cand[k] -= t * grad[k];
            }
            let cand = obj.project(cand);
            // candidates outside the valid ellipse domain count as rejections
            if let Ok((l, g)) = obj.eval(&cand) {
                if l <= loss - ARMIJO_C * t * g2 {
                    break Some((cand, l, g, t));
                }
            }
            t *= 0.5;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some((cand, new_loss, new_grad, t)) = accepted else {
            converged = true;
            break;
        };
        if loss - new_loss < cfg.convergence_eps {
            converged = true;
        }
        x = cand;
        loss = new_loss;
        grad = new_grad;
        step_size = t;
    }
    let final_ellipse = steps.last().expect("at least one step").ellipse;
    Ok(FitTrace { steps, final_ellipse, converged })
}

/// Minimizes an arbitrary ellipse loss from `init` in `cfg.parameter_space`.
///
/// `loss` returns the value and its gradient with respect to the raw
/// ellipse parameters; the chain rule into the descent coordinates is
/// applied here.
pub fn minimize<F>(loss: F, target: &Ellipse, init: &Ellipse, cfg: &FitConfig) -> Result<FitTrace>
where
    F: Fn(&Ellipse) -> Result<(f64, ParamGradient)>,
{
    let obj = EllipseObjective { loss, space: cfg.parameter_space };
    let x0 = obj.coords(init)?;
    descend(&obj, x0, target, cfg)
}

/// Gradient descent on `D_KL(target || proposal)` starting from `init`.
pub fn fit_kl(target: &Ellipse, init: &Ellipse, cfg: &FitConfig) -> Result<FitTrace> {
    minimize(|p| Ok((kl_divergence(target, p), kl_gradient(target, p))), target, init, cfg)
}

/// Gradient descent on the summed smoothed L1 between the encoded proposal
/// and the encoded target, over the five encoded coordinates.
///
/// `cfg.parameter_space` is ignored; regression always works relative to `anchor`.
pub fn fit_regression(target: &Ellipse, init: &Ellipse, anchor: &Anchor, cfg: &FitConfig) -> Result<FitTrace> {
    let obj = RegressionObjective { target: encode(target, anchor)?.as_array(), anchor: *anchor };
    descend(&obj, encode(init, anchor)?.as_array(), target, cfg)
}

/// Where both fitters start.
#[derive(Debug, Clone, PartialEq)]
pub enum InitRule {
    /// Inscribed circle (ellipse for non-square anchors) of the target's
    /// best box-IoU anchor, at θ = 0.
    AnchorCircle(AnchorGridConfig),
    /// Start at the target itself.
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlSpace {
    Raw,
    AnchorEncoded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    pub convergence_eps: f64,
    pub kl_space: KlSpace,
    pub iou_cells: usize,
    /// Aspect-ratio bins `[lo, hi)` of the angle-error table; the last bin
    /// is closed on the right.
    pub aspect_bins: Vec<(f64, f64)>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_iters: 500,
            convergence_eps: 1e-12,
            kl_space: KlSpace::AnchorEncoded,
            iou_cells: DEFAULT_IOU_CELLS,
            aspect_bins: vec![(1.0, 1.2), (1.2, 1.5), (1.5, 2.0), (2.0, 3.0)],
        }
    }
}

impl CompareConfig {
    fn fit_config(&self, space: ParamSpace) -> FitConfig {
        FitConfig {
            learning_rate: self.learning_rate,
            max_iters: self.max_iters,
            convergence_eps: self.convergence_eps,
            parameter_space: space,
            iou_cells: self.iou_cells,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodOutcome {
    pub final_ellipse: Ellipse,
    pub final_loss: f64,
    pub final_iou: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    /// Longer-axis angle error in degrees.
    pub angle_error_deg: f64,
}

impl MethodOutcome {
    fn from_result(result: Result<FitTrace>, target: &Ellipse) -> Result<Self> {
        let (trace, diverged) = match result {
            Ok(t) => (t, false),
            Err(Error::Diverged { trace }) => (*trace, true),
            Err(e) => return Err(e),
        };
        let last = trace.final_step();
        Ok(Self {
            final_ellipse: trace.final_ellipse,
            final_loss: last.loss,
            final_iou: last.iou,
            iterations: trace.iterations(),
            converged: trace.converged,
            diverged,
            angle_error_deg: angle_error(&trace.final_ellipse, target),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub index: usize,
    pub target: Ellipse,
    pub init: Ellipse,
    pub anchor: Anchor,
    pub kl: MethodOutcome,
    pub regression: MethodOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSummary {
    pub mean_iou: f64,
    pub median_iou: f64,
    pub frac_iou_50: f64,
    pub frac_iou_70: f64,
    pub frac_iou_90: f64,
    pub mean_iterations: f64,
    pub diverged: usize,
}

impl MethodSummary {
    fn of(outcomes: &[&MethodOutcome]) -> Self {
        let n = outcomes.len().max(1) as f64;
        let ious: Vec<f64> = outcomes.iter().map(|o| o.final_iou).collect();
        let frac = |thr: f64| ious.iter().filter(|&&v| v >= thr).count() as f64 / n;
        Self {
            mean_iou: ious.iter().sum::<f64>() / n,
            median_iou: median(&ious),
            frac_iou_50: frac(0.5),
            frac_iou_70: frac(0.7),
            frac_iou_90: frac(0.9),
            mean_iterations: outcomes.iter().map(|o| o.iterations as f64).sum::<f64>() / n,
            diverged: outcomes.iter().filter(|o| o.diverged).count(),
        }
    }
}

/// Angle-error statistics of one aspect-ratio bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub kl_median_deg: f64,
    pub kl_mean_deg: f64,
    pub regression_median_deg: f64,
    pub regression_mean_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub kl: MethodSummary,
    pub regression: MethodSummary,
    pub angle_bins: Vec<AngleBin>,
}

/// Median of a sample; NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn compare_one(index: usize, target: &Ellipse, anchors: Option<&[Anchor]>, cfg: &CompareConfig) -> Result<CompareRow> {
    let (anchor, init) = match anchors {
        Some(anchors) => {
            let a = anchors[best_anchor(anchors, target)?];
            (a, a.inscribed_ellipse()?)
        }
        None => {
            let b = target.bbox();
            (Anchor::new(b.cx, b.cy, b.w, b.h)?, *target)
        }
    };
    let kl_space = match cfg.kl_space {
        KlSpace::Raw => ParamSpace::Raw,
        KlSpace::AnchorEncoded => ParamSpace::AnchorEncoded(anchor),
    };
    let kl = MethodOutcome::from_result(fit_kl(target, &init, &cfg.fit_config(kl_space)), target)?;
    let regression = MethodOutcome::from_result(
        fit_regression(target, &init, &anchor, &cfg.fit_config(ParamSpace::Raw)),
        target,
    )?;
    Ok(CompareRow { index, target: *target, init, anchor, kl, regression })
}

/// Fits every target with both losses from identical inits.
///
/// Runs in parallel on the current rayon pool; the report does not depend on
/// the number of threads.
pub fn compare(targets: &[Ellipse], init_rule: &InitRule, cfg: &CompareConfig) -> Result<CompareReport> {
    if targets.is_empty() {
        return Err(Error::invalid("compare needs at least one target"));
    }
    let anchors = match init_rule {
        InitRule::AnchorCircle(grid) => Some(grid.generate()?),
        InitRule::Target => None,
    };
    let rows: Vec<CompareRow> = targets
        .par_iter()
        .enumerate()
        .map(|(i, t)| compare_one(i, t, anchors.as_deref(), cfg))
        .collect::<Result<_>>()?;

    let kl = MethodSummary::of(&rows.iter().map(|r| &r.kl).collect::<Vec<_>>());
    let regression = MethodSummary::of(&rows.iter().map(|r| &r.regression).collect::<Vec<_>>());
    let last = cfg.aspect_bins.len().saturating_sub(1);
    let angle_bins = cfg
        .aspect_bins
        .iter()
        .enumerate()
        .map(|(k, &(lo, hi))| {
            let members: Vec<&CompareRow> = rows
                .iter()
                .filter(|r| {
                    let a = r.target.aspect_ratio();
                    a >= lo && (a < hi || (k == last && a <= hi))
                })
                .collect();
            let kl_err: Vec<f64> = members.iter().map(|r| r.kl.angle_error_deg).collect();
            let reg_err: Vec<f64> = members.iter().map(|r| r.regression.angle_error_deg).collect();
            AngleBin {
                lo,
                hi,
                count: members.len(),
                kl_median_deg: median(&kl_err),
                kl_mean_deg: mean(&kl_err),
                regression_median_deg: median(&reg_err),
                regression_mean_deg: mean(&reg_err),
            }
        })
        .collect();
    Ok(CompareReport { rows, kl, regression, angle_bins })
}

impl CompareReport {
    /// Per-target CSV; angles of the final ellipses in radians, errors in degrees.
    pub fn rows_csv(&self) -> String {
        let mut out = String::from(
            "index,target_mu_x,target_mu_y,target_sigma_l,target_sigma_s,target_theta_rad,aspect_ratio,\
             anchor_cx,anchor_cy,anchor_w,anchor_h,\
             kl_final_iou,kl_final_loss,kl_iterations,kl_converged,kl_diverged,kl_angle_error_deg,\
             reg_final_iou,reg_final_loss,reg_iterations,reg_converged,reg_diverged,reg_angle_error_deg\n",
        );
        for r in &self.rows {
            let t = &r.target;
            out += &format!(
                "{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},",
                r.index,
                t.mu_x(),
                t.mu_y(),
                t.sigma_l(),
                t.sigma_s(),
                t.theta(),
                t.aspect_ratio(),
                r.anchor.cx,
                r.anchor.cy,
                r.anchor.w,
                r.anchor.h
            );
            for (k, o) in [&r.kl, &r.regression].into_iter().enumerate() {
                out += &format!(
                    "{:.9},{:.9e},{},{},{},{:.9}{}",
                    o.final_iou,
                    o.final_loss,
                    o.iterations,
                    o.converged,
                    o.diverged,
                    o.angle_error_deg,
                    if k == 0 { "," } else { "\n" }
                );
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "method,mean_iou,median_iou,frac_iou_ge_0.5,frac_iou_ge_0.7,frac_iou_ge_0.9,mean_iterations,diverged\n",
        );
        for (name, s) in [("kl", &self.kl), ("regression", &self.regression)] {
            out += &format!(
                "{name},{:.9},{:.9},{:.9},{:.9},{:.9},{:.3},{}\n",
                s.mean_iou, s.median_iou, s.frac_iou_50, s.frac_iou_70, s.frac_iou_90, s.mean_iterations, s.diverged
            );
        }
        out
    }

    pub fn angle_table_csv(&self) -> String {
        let mut out = String::from(
            "aspect_lo,aspect_hi,count,kl_median_angle_error_deg,kl_mean_angle_error_deg,\
             reg_median_angle_error_deg,reg_mean_angle_error_deg\n",
        );
        for b in &self.angle_bins {
            out += &format!(
                "{:.3},{:.3},{},{:.6},{:.6},{:.6},{:.6}\n",
                b.lo, b.hi, b.count, b.kl_median_deg, b.kl_mean_deg, b.regression_median_deg, b.regression_mean_deg
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6};

    fn e(mx: f64, my: f64, l: f64, s: f64, t: f64) -> Ellipse {
        Ellipse::new(mx, my, l, s, t).unwrap()
    }

    #[test]
    fn init_at_target_converges_immediately() {
        let t = e(10.0, 20.0, 8.0, 3.0, 0.4);
        let tr = fit_kl(&t, &t, &FitConfig::default()).unwrap();
        assert!(tr.converged);
        assert_eq!(tr.steps.len(), 1);
        assert!(tr.steps[0].loss < 1e-12);

        let a = Anchor::new(10.0, 20.0, 16.0, 16.0).unwrap();
        let tr = fit_regression(&t, &t, &a, &FitConfig::default()).unwrap();
        assert_eq!(tr.steps[0].loss, 0.0);
        assert_eq!(tr.iterations(), 0);
    }

    #[test]
    fn kl_fit_reaches_rotated_target() {
        let t = e(0.0, 0.0, 20.0, 10.0, FRAC_PI_6);
        let init = e(0.0, 0.0, 16.0, 16.0, 0.0);
        let tr = fit_kl(&t, &init, &FitConfig::default()).unwrap();
        assert!(tr.final_step().iou >= 0.95, "{:?}", tr.final_step());
        let losses = tr.losses();
        assert!(losses.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn kl_fit_from_flipped_start() {
        let t = e(0.0, 0.0, 20.0, 10.0, FRAC_PI_6);
        let init = e(0.0, 0.0, 10.0, 20.0, -FRAC_PI_3);
        let tr = fit_kl(&t, &init, &FitConfig::default()).unwrap();
        assert!(tr.final_step().loss < 1e-4, "{}", tr.final_step().loss);
        // the fit stays in the flipped representation
        let f = tr.final_ellipse;
        assert!(f.sigma_l() < f.sigma_s());
        assert!(angle_error(&f, &t) < 0.1);
        let _ = FRAC_PI_2;
    }

    #[test]
    fn regression_reaches_encoded_target() {
        let a = Anchor::new(100.0, 100.0, 32.0, 32.0).unwrap();
        let t = e(104.0, 97.0, 24.0, 9.0, 1.2);
        let cfg = FitConfig { max_iters: 2000, ..FitConfig::default() };
        let tr = fit_regression(&t, &a.inscribed_ellipse().unwrap(), &a, &cfg).unwrap();
        assert!(tr.converged);
        let got = encode(&tr.final_ellipse, &a).unwrap().as_array();
        let want = encode(&t, &a).unwrap().as_array();
        for k in 0..5 {
            assert!((got[k] - want[k]).abs() < 1e-4, "{k}: {} vs {}", got[k], want[k]);
        }
    }

    #[test]
    fn divergence_is_reported_with_trace() {
        let t = e(0.0, 0.0, 1000.0, 1000.0, 0.0);
        let init = e(0.0, 0.0, 0.01, 0.01, 0.0);
        match fit_kl(&t, &init, &FitConfig::default()) {
            Err(Error::Diverged { trace }) => assert_eq!(trace.steps.len(), 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let t = e(0.0, 0.0, 5.0, 3.0, 0.0);
        let bad = FitConfig { learning_rate: 0.0, ..FitConfig::default() };
        assert!(matches!(fit_kl(&t, &t, &bad), Err(Error::InvalidInput(_))));
        let bad = FitConfig { max_iters: 0, ..FitConfig::default() };
        assert!(fit_kl(&t, &t, &bad).is_err());
    }

    #[test]
    fn compare_from_targets_is_perfect() {
        let targets = [e(50.0, 50.0, 20.0, 8.0, 0.7), e(200.0, 100.0, 12.0, 10.0, -1.0)];
        let report = compare(&targets, &InitRule::Target, &CompareConfig::default()).unwrap();
        assert_eq!(report.kl.mean_iou, 1.0);
        assert_eq!(report.regression.mean_iou, 1.0);
        assert!(compare(&[], &InitRule::Target, &CompareConfig::default()).is_err());
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
