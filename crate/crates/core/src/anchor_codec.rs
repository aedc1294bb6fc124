//! Anchor grids, anchor-relative ellipse encoding and anchor assignment.

use crate::error::{Error, Result};
use crate::geometry::{ellipse_bbox, BBox, Ellipse};

/// Largest encodable |tan θ|, i.e. tan(89.5°).
pub const TAN_CLAMP: f64 = 114.588_650_129_309_2;

pub const DEFAULT_POSITIVE_IOU: f64 = 0.7;
pub const DEFAULT_NEGATIVE_IOU: f64 = 0.3;

/// Reference box a proposal is encoded against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl Anchor {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        let b = BBox::new(cx, cy, w, h)?;
        Ok(Self { cx: b.cx, cy: b.cy, w: b.w, h: b.h })
    }

    pub fn bbox(&self) -> BBox {
        BBox { cx: self.cx, cy: self.cy, w: self.w, h: self.h }
    }

    /// The ellipse inscribed in the anchor box, at θ = 0.
    pub fn inscribed_ellipse(&self) -> Result<Ellipse> {
        Ellipse::new(self.cx, self.cy, 0.5 * self.w, 0.5 * self.h, 0.0)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.cx.is_finite()
            && self.cy.is_finite()
            && self.w.is_finite()
            && self.h.is_finite()
            && self.w > 0.0
            && self.h > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("degenerate anchor {self:?}")))
        }
    }
}

/// Anchor-relative targets `(tx, ty, tw, th, tan θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodedEllipse {
    pub tx: f64,
    pub ty: f64,
    pub tw: f64,
    pub th: f64,
    pub t_tan: f64,
}

impl EncodedEllipse {
    pub fn new(tx: f64, ty: f64, tw: f64, th: f64, t_tan: f64) -> Self {
        Self { tx, ty, tw, th, t_tan }
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.tx, self.ty, self.tw, self.th, self.t_tan]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Grid layout shared by the CLI and the fitting harness.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorGridConfig {
    pub image_w: f64,
    pub image_h: f64,
    pub stride: f64,
    pub scales: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl Default for AnchorGridConfig {
    fn default() -> Self {
        Self {
            image_w: 512.0,
            image_h: 512.0,
            stride: 8.0,
            scales: vec![16.0, 24.0, 32.0, 48.0, 96.0],
            ratios: vec![1.0],
        }
    }
}

impl AnchorGridConfig {
    pub fn generate(&self) -> Result<Vec<Anchor>> {
        generate_anchor_grid(self.image_w, self.image_h, self.stride, &self.scales, &self.ratios)
    }
}

/// One anchor per (cell, scale, ratio), cells in row-major order.
pub fn generate_anchor_grid(
    image_w: f64,
    image_h: f64,
    stride: f64,
    scales: &[f64],
    ratios: &[f64],
) -> Result<Vec<Anchor>> {
    if !(stride > 0.0 && stride.is_finite()) {
        return Err(Error::invalid(format!("stride {stride} must be positive")));
    }
    if scales.is_empty() || ratios.is_empty() {
        return Err(Error::invalid("anchor scales and ratios must be nonempty"));
    }
    if scales.iter().chain(ratios).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid("anchor scales and ratios must be positive"));
    }
    let cols = (image_w / stride).floor();
    let rows = (image_h / stride).floor();
    if !(cols >= 1.0 && rows >= 1.0) {
        return Err(Error::invalid(format!(
            "image {image_w}x{image_h} yields an empty grid at stride {stride}"
        )));
    }
    let (cols, rows) = (cols as usize, rows as usize);
    let mut anchors = Vec::with_capacity(cols * rows * scales.len() * ratios.len());
    for j in 0..rows {
        let cy = j as f64 * stride + 0.5 * stride;
        for i in 0..cols {
            let cx = i as f64 * stride + 0.5 * stride;
            for &s in scales {
                for &r in ratios {
                    let sr = r.sqrt();
                    anchors.push(Anchor { cx, cy, w: s * sr, h: s / sr });
                }
            }
        }
    }
    Ok(anchors)
}

pub fn encode(gt: &Ellipse, anchor: &Anchor) -> Result<EncodedEllipse> {
    anchor.validate()?;
    Ok(EncodedEllipse {
        tx: (gt.mu_x() - anchor.cx) / anchor.w,
        ty: (gt.mu_y() - anchor.cy) / anchor.h,
        tw: (2.0 * gt.sigma_l() / anchor.w).ln(),
        th: (2.0 * gt.sigma_s() / anchor.h).ln(),
        t_tan: gt.theta().tan().clamp(-TAN_CLAMP, TAN_CLAMP),
    })
}

pub fn decode(enc: &EncodedEllipse, anchor: &Anchor) -> Result<Ellipse> {
    anchor.validate()?;
    if !enc.is_finite() {
        return Err(Error::invalid(format!("encoded ellipse {enc:?} is not finite")));
    }
    Ellipse::new(
        anchor.cx + enc.tx * anchor.w,
        anchor.cy + enc.ty * anchor.h,
        0.5 * anchor.w * enc.tw.exp(),
        0.5 * anchor.h * enc.th.exp(),
        enc.t_tan.atan(),
    )
}

/// Axis-aligned intersection over union.
pub fn box_iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorLabel {
    Positive { gt: usize },
    Negative,
    Ignore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorAssignment {
    pub labels: Vec<AnchorLabel>,
    /// Highest box IoU of each anchor over all ground truths (0 without gts).
    pub max_iou: Vec<f64>,
}

impl AnchorAssignment {
    pub fn positives(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.labels.iter().enumerate().filter_map(|(i, l)| match l {
            AnchorLabel::Positive { gt } => Some((i, *gt)),
            _ => None,
        })
    }
}

/// Labels anchors against the tight boxes of the ground-truth ellipses.
///
/// An anchor is positive when its IoU with some gt box reaches `hi`, or when
/// it is the best anchor of some gt (lowest index on ties, IoU > 0). It is
/// negative below `lo` and ignored otherwise. Positives record their argmax gt.
pub fn assign_anchors(
    anchors: &[Anchor],
    gts: &[Ellipse],
    hi: f64,
    lo: f64,
) -> Result<AnchorAssignment> {
    if anchors.is_empty() {
        return Err(Error::invalid("anchor list is empty"));
    }
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::invalid(format!("thresholds need 0 <= lo <= hi <= 1, got {lo}, {hi}")));
    }
    let gt_boxes: Vec<BBox> = gts.iter().map(ellipse_bbox).collect();

    let mut best_anchor = vec![(0usize, 0.0f64); gts.len()];
    let mut max_iou = Vec::with_capacity(anchors.len());
    let mut argmax_gt = Vec::with_capacity(anchors.len());
    for (ai, a) in anchors.iter().enumerate() {
        let ab = a.bbox();
        let mut best = (usize::MAX, 0.0f64);
        for (gi, gb) in gt_boxes.iter().enumerate() {
            let iou = box_iou(&ab, gb);
            if best.0 == usize::MAX || iou > best.1 {
                best = (gi, iou);
            }
            if iou > best_anchor[gi].1 {
                best_anchor[gi] = (ai, iou);
            }
        }
        max_iou.push(best.1);
        argmax_gt.push(best.0);
    }

    let mut labels: Vec<AnchorLabel> = max_iou
        .iter()
        .zip(&argmax_gt)
        .map(|(&m, &g)| {
            if g != usize::MAX && m >= hi {
                AnchorLabel::Positive { gt: g }
            } else if m < lo {
                AnchorLabel::Negative
            } else {
                AnchorLabel::Ignore
            }
        })
        .collect();
    for &(ai, iou) in &best_anchor {
        if iou > 0.0 {
            labels[ai] = AnchorLabel::Positive { gt: argmax_gt[ai] };
        }
    }
    Ok(AnchorAssignment { labels, max_iou })
}

/// Index of the anchor with the highest box IoU against `gt` (lowest index on ties).
pub fn best_anchor(anchors: &[Anchor], gt: &Ellipse) -> Result<usize> {
    if anchors.is_empty() {
        return Err(Error::invalid("anchor list is empty"));
    }
    let gb = ellipse_bbox(gt);
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, a) in anchors.iter().enumerate() {
        let iou = box_iou(&a.bbox(), &gb);
        if iou > best.1 {
            best = (i, iou);
        }
    }
    Ok(best.0)
}
