//! Rasterized and Monte Carlo ellipse IoU, and greedy non-maximum suppression.
//!
//! A raster cell belongs to an ellipse iff its center satisfies
//! `(p − μ)ᵀ Σ⁻¹ (p − μ) ≤ 1`. For a fixed row that inequality is a quadratic
//! in x, so every ellipse covers one contiguous run of cells per row and the
//! counts are taken from those runs rather than by visiting each cell.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anchor_codec::box_iou;
use crate::error::{Error, Result};
use crate::geometry::{ellipse_bbox, Ellipse};

pub const DEFAULT_IOU_CELLS: usize = 256;
pub const MIN_IOU_CELLS: usize = 64;
pub const MIN_MC_SAMPLES: usize = 10_000;

/// A scored ellipse proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub ellipse: Ellipse,
    pub score: f64,
    pub image_id: String,
}

impl Detection {
    pub fn new(ellipse: Ellipse, score: f64, image_id: impl Into<String>) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::invalid(format!("detection score {score} is outside [0, 1]")));
        }
        Ok(Self { ellipse, score, image_id: image_id.into() })
    }
}

/// Square-celled raster window; cell `(i, j)` has its center at
/// `origin + ((i + ½)·cell, (j + ½)·cell)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterGrid {
    pub origin: [f64; 2],
    pub cell: f64,
    pub width: usize,
    pub height: usize,
}

impl RasterGrid {
    pub fn new(origin: [f64; 2], cell: f64, width: usize, height: usize) -> Result<Self> {
        let g = Self { origin, cell, width, height };
        g.validate()?;
        Ok(g)
    }

    /// Grid over the hull of both boxes with the longer side split into
    /// `cells_per_axis` cells.
    pub fn covering(e1: &Ellipse, e2: &Ellipse, cells_per_axis: usize) -> Self {
        let hull = ellipse_bbox(e1).union_hull(&ellipse_bbox(e2));
        let cell = hull.w.max(hull.h) / cells_per_axis as f64;
        let width = ((hull.w / cell).ceil() as usize).clamp(1, cells_per_axis);
        let height = ((hull.h / cell).ceil() as usize).clamp(1, cells_per_axis);
        Self { origin: [hull.x_min(), hull.y_min()], cell, width, height }
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.cell,
            self.origin[1] + (j as f64 + 0.5) * self.cell,
        ]
    }

    pub fn total_cells(&self) -> usize {
        self.width * self.height
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("raster grid has zero cells"));
        }
        if !(self.cell > 0.0 && self.cell.is_finite()) {
            return Err(Error::invalid(format!("raster cell size {} must be positive", self.cell)));
        }
        if !(self.origin[0].is_finite() && self.origin[1].is_finite()) {
            return Err(Error::invalid("raster origin must be finite"));
        }
        Ok(())
    }

    /// Half-open column range `[lo, hi)` covered by `e` in row `j`.
    fn row_span(&self, e: &Ellipse, j: usize) -> (usize, usize) {
        let y = self.origin[1] + (j as f64 + 0.5) * self.cell;
        let dy = y - e.mu_y();
        let [[p, q], _] = e.precision();
        let det_inv = 1.0 / (e.sigma_l() * e.sigma_l() * e.sigma_s() * e.sigma_s());
        // P dx² + 2Q dy dx + S dy² ≤ 1
        let disc = p - dy * dy * det_inv;
        if disc < 0.0 {
            return (0, 0);
        }
        let root = disc.sqrt();
        let x_lo = e.mu_x() + (-q * dy - root) / p;
        let x_hi = e.mu_x() + (-q * dy + root) / p;
        let i_lo = ((x_lo - self.origin[0]) / self.cell - 0.5).ceil();
        let i_hi = ((x_hi - self.origin[0]) / self.cell - 0.5).floor();
        let lo = i_lo.max(0.0);
        let hi = (i_hi + 1.0).min(self.width as f64);
        if hi <= lo {
            (0, 0)
        } else {
            (lo as usize, hi as usize)
        }
    }
}

/// Row-major binary raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<bool>,
}

impl Mask {
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.width + i]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Binary portable greymap (P5), inside cells white. Row 0 is written last
    /// so that y grows upward in viewers.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        for j in (0..self.height).rev() {
            out.extend((0..self.width).map(|i| if self.get(i, j) { 255u8 } else { 0 }));
        }
        out
    }
}

pub fn rasterize_ellipse(e: &Ellipse, grid: &RasterGrid) -> Result<Mask> {
    grid.validate()?;
    let mut cells = vec![false; grid.total_cells()];
    for j in 0..grid.height {
        let (lo, hi) = grid.row_span(e, j);
        cells[j * grid.width + lo..j * grid.width + hi].fill(true);
    }
    Ok(Mask { width: grid.width, height: grid.height, cells })
}

/// Cell counts of two ellipses on a shared grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlapCounts {
    pub first: usize,
    pub second: usize,
    pub both: usize,
}

impl OverlapCounts {
    pub fn union(&self) -> usize {
        self.first + self.second - self.both
    }

    pub fn iou(&self) -> f64 {
        match self.union() {
            0 => 0.0,
            u => self.both as f64 / u as f64,
        }
    }
}

pub fn overlap_counts(e1: &Ellipse, e2: &Ellipse, grid: &RasterGrid) -> OverlapCounts {
    let mut c = OverlapCounts { first: 0, second: 0, both: 0 };
    for j in 0..grid.height {
        let (a0, a1) = grid.row_span(e1, j);
        let (b0, b1) = grid.row_span(e2, j);
        c.first += a1 - a0;
        c.second += b1 - b0;
        c.both += a1.min(b1).saturating_sub(a0.max(b0));
    }
    c
}

/// Raster IoU on a grid spanning both ellipses' bounding boxes.
///
/// Disjoint bounding boxes short-circuit to exactly 0.
pub fn ellipse_iou(e1: &Ellipse, e2: &Ellipse, cells_per_axis: usize) -> Result<f64> {
    if cells_per_axis < MIN_IOU_CELLS {
        return Err(Error::invalid(format!(
            "cells_per_axis {cells_per_axis} is below the minimum {MIN_IOU_CELLS}"
        )));
    }
    Ok(ellipse_iou_unchecked(e1, e2, cells_per_axis))
}

pub(crate) fn ellipse_iou_unchecked(e1: &Ellipse, e2: &Ellipse, cells_per_axis: usize) -> f64 {
    if ellipse_bbox(e1).intersection_area(&ellipse_bbox(e2)) <= 0.0 {
        return 0.0;
    }
    let grid = RasterGrid::covering(e1, e2, cells_per_axis);
    overlap_counts(e1, e2, &grid).iou()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McIou {
    pub iou: f64,
    pub std_err: f64,
    /// Samples that fell inside at least one ellipse.
    pub hits: usize,
}

/// Rejection-sampling IoU estimate over the hull of both bounding boxes.
pub fn ellipse_iou_mc(e1: &Ellipse, e2: &Ellipse, n_samples: usize, seed: u64) -> Result<McIou> {
    if n_samples < MIN_MC_SAMPLES {
        return Err(Error::invalid(format!(
            "n_samples {n_samples} is below the minimum {MIN_MC_SAMPLES}"
        )));
    }
    let hull = ellipse_bbox(e1).union_hull(&ellipse_bbox(e2));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut either, mut both) = (0usize, 0usize);
    for _ in 0..n_samples {
        let p = [
            hull.x_min() + rng.random::<f64>() * hull.w,
            hull.y_min() + rng.random::<f64>() * hull.h,
        ];
        let (a, b) = (e1.contains(p), e2.contains(p));
        if a || b {
            either += 1;
        }
        if a && b {
            both += 1;
        }
    }
    if either == 0 {
        return Ok(McIou { iou: 0.0, std_err: 0.0, hits: 0 });
    }
    // binomial proportion among samples landing in the union
    let iou = both as f64 / either as f64;
    let std_err = (iou * (1.0 - iou) / either as f64).sqrt();
    Ok(McIou { iou, std_err, hits: either })
}

/// Overlap measure used to decide suppression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NmsOverlap {
    /// IoU of the tight axis-aligned boxes.
    #[default]
    BoundingBox,
    /// Raster ellipse IoU at the given resolution.
    Ellipse { cells_per_axis: usize },
}

/// Greedy suppression with bounding-box IoU.
pub fn nms(dets: &[Detection], iou_thresh: f64) -> Result<Vec<Detection>> {
    nms_with(dets, iou_thresh, NmsOverlap::BoundingBox)
}

/// Greedy descending-score suppression within each image.
///
/// Output is sorted by descending score; equal scores keep input order.
pub fn nms_with(dets: &[Detection], iou_thresh: f64, overlap: NmsOverlap) -> Result<Vec<Detection>> {
    if !(iou_thresh > 0.0 && iou_thresh <= 1.0) {
        return Err(Error::invalid(format!("NMS threshold {iou_thresh} must lie in (0, 1]")));
    }
    if let NmsOverlap::Ellipse { cells_per_axis } = overlap {
        if cells_per_axis < MIN_IOU_CELLS {
            return Err(Error::invalid(format!("cells_per_axis {cells_per_axis} is too small")));
        }
    }
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));

    let overlap_of = |a: &Detection, b: &Detection| match overlap {
        NmsOverlap::BoundingBox => box_iou(&ellipse_bbox(&a.ellipse), &ellipse_bbox(&b.ellipse)),
        NmsOverlap::Ellipse { cells_per_axis } => {
            ellipse_iou_unchecked(&a.ellipse, &b.ellipse, cells_per_axis)
        }
    };

    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let suppressed = kept.iter().any(|&k| {
            dets[k].image_id == dets[i].image_id && overlap_of(&dets[k], &dets[i]) > iou_thresh
        });
        if !suppressed {
            kept.push(i);
        }
    }
    Ok(kept.into_iter().map(|i| dets[i].clone()).collect())
}
