//! Detection matching, FROC curves, sensitivity-vs-IoU sweeps and angle error.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::geometry::Ellipse;
use crate::raster_metrics::{ellipse_iou_unchecked, Detection, DEFAULT_IOU_CELLS};

/// FP-per-image grid of the standard FROC readout.
pub const DEFAULT_FP_GRID: [f64; 6] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub ellipse: Ellipse,
    pub image_id: String,
}

impl GroundTruth {
    pub fn new(ellipse: Ellipse, image_id: impl Into<String>) -> Self {
        Self { ellipse, image_id: image_id.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchFlag {
    TruePositive,
    FalsePositive,
}

impl MatchFlag {
    pub fn is_tp(self) -> bool {
        self == MatchFlag::TruePositive
    }
}

/// Sensitivity against average false positives per image.
#[derive(Debug, Clone, PartialEq)]
pub struct FrocCurve {
    /// `(avg_fp_per_image, sensitivity)`, fp strictly increasing.
    pub points: Vec<(f64, f64)>,
}

impl FrocCurve {
    /// Best sensitivity whose FP rate does not exceed `fp_budget`.
    pub fn sensitivity_at(&self, fp_budget: f64) -> f64 {
        self.points
            .iter()
            .take_while(|(fp, _)| *fp <= fp_budget)
            .map(|&(_, s)| s)
            .fold(0.0, f64::max)
    }

    /// Step-function readout at each grid value.
    pub fn readout(&self, fp_grid: &[f64]) -> FrocCurve {
        FrocCurve { points: fp_grid.iter().map(|&f| (f, self.sensitivity_at(f))).collect() }
    }
}

fn ellipse_key(e: &Ellipse) -> [f64; 5] {
    [e.mu_x(), e.mu_y(), e.sigma_l(), e.sigma_s(), e.theta()]
}

/// Processing order: score descending, then image id, then ellipse
/// parameters, then input index. Depends only on the multiset of detections.
pub fn processing_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&dets[a], &dets[b]);
        db.score
            .total_cmp(&da.score)
            .then_with(|| da.image_id.cmp(&db.image_id))
            .then_with(|| {
                ellipse_key(&da.ellipse)
                    .iter()
                    .zip(ellipse_key(&db.ellipse))
                    .map(|(x, y)| x.total_cmp(&y))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
            .then(a.cmp(&b))
    });
    order
}

/// Greedy one-to-one matching in processing order; flags follow input order.
///
/// Each detection takes its highest-IoU unmatched ground truth in the same
/// image and is a true positive iff that IoU reaches `iou_thresh`.
pub fn match_detections(dets: &[Detection], gts: &[GroundTruth], iou_thresh: f64) -> Vec<MatchFlag> {
    let order = processing_order(dets);
    let flags_sorted = match_in_order(dets, &order, gts, iou_thresh);
    let mut flags = vec![MatchFlag::FalsePositive; dets.len()];
    for (k, &i) in order.iter().enumerate() {
        flags[i] = flags_sorted[k];
    }
    flags
}

fn gts_by_image(gts: &[GroundTruth]) -> HashMap<&str, Vec<usize>> {
    let mut by_image: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, g) in gts.iter().enumerate() {
        by_image.entry(g.image_id.as_str()).or_default().push(i);
    }
    by_image
}

fn match_in_order(
    dets: &[Detection],
    order: &[usize],
    gts: &[GroundTruth],
    iou_thresh: f64,
) -> Vec<MatchFlag> {
    let by_image = gts_by_image(gts);
    let mut taken = vec![false; gts.len()];
    order
        .iter()
        .map(|&i| {
            let d = &dets[i];
            let Some(candidates) = by_image.get(d.image_id.as_str()) else {
                return MatchFlag::FalsePositive;
            };
            let mut best: Option<(usize, f64)> = None;
            for &g in candidates.iter().filter(|&&g| !taken[g]) {
                let iou = ellipse_iou_unchecked(&d.ellipse, &gts[g].ellipse, DEFAULT_IOU_CELLS);
                if best.is_none_or(|(_, b)| iou > b) {
                    best = Some((g, iou));
                }
            }
            match best {
                Some((g, iou)) if iou >= iou_thresh => {
                    taken[g] = true;
                    MatchFlag::TruePositive
                }
                _ => MatchFlag::FalsePositive,
            }
        })
        .collect()
}

/// Distinct image ids across detections and ground truths.
pub fn count_images(dets: &[Detection], gts: &[GroundTruth]) -> usize {
    dets.iter()
        .map(|d| d.image_id.as_str())
        .chain(gts.iter().map(|g| g.image_id.as_str()))
        .collect::<BTreeSet<_>>()
        .len()
}

/// Every operating point reachable by a score threshold, as a staircase.
///
/// `n_images` defaults to the number of distinct image ids seen; a larger
/// value accounts for images that have neither detections nor lesions.
pub fn operating_points(
    dets: &[Detection],
    gts: &[GroundTruth],
    iou_thresh: f64,
    n_images: Option<usize>,
) -> Result<FrocCurve> {
    if gts.is_empty() {
        return Err(Error::invalid("FROC needs at least one ground truth"));
    }
    let seen = count_images(dets, gts);
    let n_images = match n_images {
        Some(n) if n < seen => {
            return Err(Error::invalid(format!("n_images {n} is below the {seen} images present")))
        }
        Some(n) => n,
        None => seen,
    };
    let order = processing_order(dets);
    let flags = match_in_order(dets, &order, gts, iou_thresh);

    // A prefix of the processing order is exactly what survives a score
    // threshold, and greedy matching of a prefix is the prefix of the matching.
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    for (k, &i) in order.iter().enumerate() {
        if flags[k].is_tp() {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_score = order.get(k + 1).is_none_or(|&n| dets[n].score != dets[i].score);
        if last_of_score {
            push_point(&mut points, fp as f64 / n_images as f64, tp as f64 / gts.len() as f64);
        }
    }
    Ok(FrocCurve { points })
}

fn push_point(points: &mut Vec<(f64, f64)>, fp: f64, sens: f64) {
    match points.last_mut() {
        Some(last) if last.0 == fp => last.1 = last.1.max(sens),
        _ => points.push((fp, sens)),
    }
}

fn validate_grid(fp_grid: &[f64]) -> Result<()> {
    if fp_grid.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
        return Err(Error::invalid("FP grid values must be positive"));
    }
    if fp_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("FP grid must be strictly ascending"));
    }
    Ok(())
}

/// Sensitivity at each FP-per-image budget in `fp_grid`.
pub fn froc(
    dets: &[Detection],
    gts: &[GroundTruth],
    iou_thresh: f64,
    fp_grid: &[f64],
) -> Result<FrocCurve> {
    froc_with_images(dets, gts, iou_thresh, fp_grid, None)
}

pub fn froc_with_images(
    dets: &[Detection],
    gts: &[GroundTruth],
    iou_thresh: f64,
    fp_grid: &[f64],
    n_images: Option<usize>,
) -> Result<FrocCurve> {
    validate_grid(fp_grid)?;
    Ok(operating_points(dets, gts, iou_thresh, n_images)?.readout(fp_grid))
}

/// `(iou_threshold, sensitivity at fp_budget)` for each threshold.
pub fn sensitivity_vs_iou(
    dets: &[Detection],
    gts: &[GroundTruth],
    thresholds: &[f64],
    fp_budget: f64,
) -> Result<Vec<(f64, f64)>> {
    if thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(Error::invalid("IoU thresholds must lie in (0, 1]"));
    }
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("IoU thresholds must be ascending"));
    }
    thresholds
        .iter()
        .map(|&t| Ok((t, operating_points(dets, gts, t, None)?.sensitivity_at(fp_budget))))
        .collect()
}

/// Angle in degrees between the longer axes, modulo 180°, in [0, 90].
pub fn angle_error(pred: &Ellipse, gt: &Ellipse) -> f64 {
    let (p, g) = (pred.canonical(), gt.canonical());
    if p.is_circular() || g.is_circular() {
        return 0.0;
    }
    let d = (p.theta() - g.theta()).rem_euclid(std::f64::consts::PI);
    d.min(std::f64::consts::PI - d).to_degrees().clamp(0.0, 90.0)
}
