//! Seeded synthetic lesion scenes and a simulated detector.
//!
//! Every image draws from its own ChaCha stream keyed by `(seed, image index)`,
//! so results do not depend on generation order or thread count.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

use crate::detection_eval::GroundTruth;
use crate::error::{Error, Result};
use crate::geometry::{ellipse_bbox, Ellipse, MIN_AXIS};
use crate::raster_metrics::Detection;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AspectDistribution {
    /// ln(aspect) uniform on [ln lo, ln hi].
    LogUniform { lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
    Fixed(f64),
}

impl AspectDistribution {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::LogUniform { lo, hi } | Self::Uniform { lo, hi } => lo >= 1.0 && hi >= lo && hi.is_finite(),
            Self::Fixed(a) => a >= 1.0 && a.is_finite(),
        };
        ok.then_some(()).ok_or_else(|| Error::invalid(format!("invalid aspect distribution {self:?}")))
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            Self::LogUniform { lo, hi } => log_uniform(rng, lo, hi),
            Self::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Self::Fixed(a) => a,
        }
    }

    fn max(&self) -> f64 {
        match *self {
            Self::LogUniform { hi, .. } | Self::Uniform { hi, .. } => hi,
            Self::Fixed(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleDistribution {
    /// Uniform on (−π/2, π/2].
    Uniform,
    /// Normal in degrees, wrapped into (−π/2, π/2].
    NormalDegrees { mean: f64, std: f64 },
    FixedDegrees(f64),
}

impl AngleDistribution {
    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            Self::Uniform => FRAC_PI_2 - PI * rng.random::<f64>(),
            Self::NormalDegrees { mean, std } => {
                (mean + std * rng.sample::<f64, _>(rand_distr::StandardNormal)).to_radians()
            }
            Self::FixedDegrees(d) => d.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub image_w: f64,
    pub image_h: f64,
    /// Inclusive range of lesions drawn per image.
    pub lesions_per_image: (usize, usize),
    /// Semi-major axis range in pixels, sampled log-uniformly.
    pub scale_range: (f64, f64),
    pub aspect: AspectDistribution,
    pub angle: AngleDistribution,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            image_w: 512.0,
            image_h: 512.0,
            lesions_per_image: (1, 3),
            scale_range: (8.0, 64.0),
            aspect: AspectDistribution::LogUniform { lo: 1.0, hi: 3.0 },
            angle: AngleDistribution::Uniform,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.scale_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("scale range {lo}..{hi} is empty")));
        }
        if lo / self.aspect.max() < MIN_AXIS {
            return Err(Error::invalid("smallest semi-minor axis falls below the geometry floor"));
        }
        if self.lesions_per_image.0 > self.lesions_per_image.1 {
            return Err(Error::invalid("lesions_per_image range is empty"));
        }
        self.aspect.validate()?;
        if !(self.image_w > 0.0 && self.image_h > 0.0) {
            return Err(Error::invalid("image size must be positive"));
        }
        // the largest lesion must fit at any angle
        if 2.0 * hi > self.image_w.min(self.image_h) {
            return Err(Error::invalid(format!(
                "semi-major axis {hi} does not fit in a {}x{} image",
                self.image_w, self.image_h
            )));
        }
        Ok(())
    }
}

pub(crate) fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

pub(crate) fn image_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn image_id(index: usize) -> String {
    format!("img{index:05}")
}

/// One ellipse with the given shape distributions, placed so its box stays
/// inside the image.
fn random_ellipse(
    rng: &mut impl Rng,
    image_w: f64,
    image_h: f64,
    scale_range: (f64, f64),
    aspect: &AspectDistribution,
    angle: &AngleDistribution,
) -> Result<Ellipse> {
    let major = log_uniform(rng, scale_range.0, scale_range.1);
    let minor = major / aspect.sample(rng);
    let theta = angle.sample(rng);
    let shape = Ellipse::new(0.0, 0.0, major, minor, theta)?;
    let b = ellipse_bbox(&shape);
    let cx = 0.5 * b.w + (image_w - b.w) * rng.random::<f64>();
    let cy = 0.5 * b.h + (image_h - b.h) * rng.random::<f64>();
    Ok(shape.translated(cx, cy))
}

fn generate_image(cfg: &SceneConfig, index: usize) -> Result<Vec<GroundTruth>> {
    let mut rng = image_stream(cfg.seed, index as u64);
    let (lo, hi) = cfg.lesions_per_image;
    let n = rng.random_range(lo..=hi);
    let id = image_id(index);
    (0..n)
        .map(|_| {
            let e = random_ellipse(&mut rng, cfg.image_w, cfg.image_h, cfg.scale_range, &cfg.aspect, &cfg.angle)?;
            Ok(GroundTruth::new(e, id.clone()))
        })
        .collect()
}

/// Ground truths for `n_images` images, ids `img00000`, `img00001`, ...
pub fn generate_scenes(cfg: &SceneConfig, n_images: usize) -> Result<Vec<GroundTruth>> {
    cfg.validate()?;
    let per_image: Vec<Vec<GroundTruth>> =
        (0..n_images).into_par_iter().map(|i| generate_image(cfg, i)).collect::<Result<_>>()?;
    Ok(per_image.into_iter().flatten().collect())
}

/// One ellipse per image from the default scene distributions: the target
/// set of the localization comparison.
pub fn localization_targets(n: usize, seed: u64) -> Result<Vec<Ellipse>> {
    let cfg = SceneConfig { lesions_per_image: (1, 1), seed, ..SceneConfig::default() };
    Ok(generate_scenes(&cfg, n)?.into_iter().map(|g| g.ellipse).collect())
}

/// How detection scores are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreModel {
    /// True positives score 1, false positives 0.
    Fixed,
    /// `sigmoid(±separation/2 + N(0, 1))`, plus for kept lesions and minus
    /// for spurious detections.
    Logistic { separation: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionConfig {
    /// Center jitter, as a fraction of the semi-major axis.
    pub center_noise_sigma: f64,
    /// Log-scale jitter of each semi-axis.
    pub axis_noise_sigma: f64,
    pub angle_noise_sigma_deg: f64,
    pub miss_rate: f64,
    /// Expected spurious detections per image (Poisson mean).
    pub fp_rate: f64,
    pub score_model: ScoreModel,
    /// Area in which spurious detections are placed.
    pub image_w: f64,
    pub image_h: f64,
    /// Semi-major range of spurious detections.
    pub fp_scale_range: (f64, f64),
    pub seed: u64,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        Self {
            center_noise_sigma: 0.05,
            axis_noise_sigma: 0.05,
            angle_noise_sigma_deg: 5.0,
            miss_rate: 0.1,
            fp_rate: 2.0,
            score_model: ScoreModel::Logistic { separation: 2.0 },
            image_w: 512.0,
            image_h: 512.0,
            fp_scale_range: (8.0, 64.0),
            seed: 0,
        }
    }
}

impl CorruptionConfig {
    /// Detector that reproduces its input exactly.
    pub fn noiseless(seed: u64) -> Self {
        Self {
            center_noise_sigma: 0.0,
            axis_noise_sigma: 0.0,
            angle_noise_sigma_deg: 0.0,
            miss_rate: 0.0,
            fp_rate: 0.0,
            score_model: ScoreModel::Fixed,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.miss_rate) {
            return Err(Error::invalid(format!("miss_rate {} is not a probability", self.miss_rate)));
        }
        let sigmas = [self.center_noise_sigma, self.axis_noise_sigma, self.angle_noise_sigma_deg, self.fp_rate];
        if sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::invalid("noise sigmas and fp_rate must be non-negative"));
        }
        if let ScoreModel::Logistic { separation } = self.score_model {
            if !separation.is_finite() {
                return Err(Error::invalid("score separation must be finite"));
            }
        }
        let (lo, hi) = self.fp_scale_range;
        if !(lo >= MIN_AXIS * 3.0 && lo <= hi && 2.0 * hi <= self.image_w.min(self.image_h)) {
            return Err(Error::invalid("fp_scale_range does not fit the image"));
        }
        Ok(())
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn draw_score(model: ScoreModel, true_positive: bool, rng: &mut impl Rng) -> f64 {
    match model {
        ScoreModel::Fixed => {
            if true_positive {
                1.0
            } else {
                0.0
            }
        }
        ScoreModel::Logistic { separation } => {
            let shift = if true_positive { 0.5 * separation } else { -0.5 * separation };
            sigmoid(shift + rng.sample::<f64, _>(rand_distr::StandardNormal))
        }
    }
}

fn gauss(rng: &mut impl Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        0.0
    } else {
        Normal::new(0.0, sd).expect("sd validated").sample(rng)
    }
}

fn perturb(gt: &Ellipse, cfg: &CorruptionConfig, rng: &mut impl Rng) -> Result<Ellipse> {
    let major = gt.sigma_l().max(gt.sigma_s());
    let dx = gauss(rng, cfg.center_noise_sigma * major);
    let dy = gauss(rng, cfg.center_noise_sigma * major);
    let sl = gt.sigma_l() * gauss(rng, cfg.axis_noise_sigma).exp();
    let ss = gt.sigma_s() * gauss(rng, cfg.axis_noise_sigma).exp();
    let dt = gauss(rng, cfg.angle_noise_sigma_deg).to_radians();
    Ellipse::new(gt.mu_x() + dx, gt.mu_y() + dy, sl.max(MIN_AXIS), ss.max(MIN_AXIS), gt.theta() + dt)
}

/// Simulated detector output for the given ground truths.
///
/// Images are those present in `gts`, visited in sorted id order; each one
/// keeps or drops its lesions, perturbs the kept ones, then appends a
/// Poisson number of spurious detections.
pub fn corrupt(gts: &[GroundTruth], cfg: &CorruptionConfig) -> Result<Vec<Detection>> {
    cfg.validate()?;
    let mut by_image: BTreeMap<&str, Vec<&GroundTruth>> = BTreeMap::new();
    for g in gts {
        by_image.entry(g.image_id.as_str()).or_default().push(g);
    }
    let images: Vec<(&str, Vec<&GroundTruth>)> = by_image.into_iter().collect();
    let per_image: Vec<Vec<Detection>> = images
        .par_iter()
        .enumerate()
        .map(|(index, (id, lesions))| corrupt_image(id, lesions, cfg, index as u64))
        .collect::<Result<_>>()?;
    Ok(per_image.into_iter().flatten().collect())
}

fn corrupt_image(id: &str, lesions: &[&GroundTruth], cfg: &CorruptionConfig, index: u64) -> Result<Vec<Detection>> {
    let mut rng = image_stream(cfg.seed, index);
    let mut out = Vec::with_capacity(lesions.len());
    for g in lesions {
        if rng.random::<f64>() < cfg.miss_rate {
            continue;
        }
        let ellipse = perturb(&g.ellipse, cfg, &mut rng)?;
        let score = draw_score(cfg.score_model, true, &mut rng);
        out.push(Detection { ellipse, score, image_id: id.to_string() });
    }
    if cfg.fp_rate > 0.0 {
        let n_fp = Poisson::new(cfg.fp_rate).expect("fp_rate validated").sample(&mut rng) as usize;
        let aspect = AspectDistribution::LogUniform { lo: 1.0, hi: 3.0 };
        for _ in 0..n_fp {
            let ellipse = random_ellipse(
                &mut rng,
                cfg.image_w,
                cfg.image_h,
                cfg.fp_scale_range,
                &aspect,
                &AngleDistribution::Uniform,
            )?;
            let score = draw_score(cfg.score_model, false, &mut rng);
            out.push(Detection { ellipse, score, image_id: id.to_string() });
        }
    }
    Ok(out)
}
