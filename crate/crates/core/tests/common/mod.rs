//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::f64::consts::PI;

use gpn::detection_eval::GroundTruth;
use gpn::raster_metrics::{ellipse_iou, Detection};
use gpn::Ellipse;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

/// Center in [−c, c]², axes log-uniform in [lo, hi], angle uniform.
pub fn random_ellipse(rng: &mut impl Rng, c: f64, lo: f64, hi: f64) -> Ellipse {
    Ellipse::new(
        rng.random_range(-c..c),
        rng.random_range(-c..c),
        log_uniform(rng, lo, hi),
        log_uniform(rng, lo, hi),
        rng.random_range(-PI..PI),
    )
    .unwrap()
}

/// A proposal near `t`: center offset, axis scale and angle jitter.
pub fn perturbed(rng: &mut impl Rng, t: &Ellipse, spread: f64) -> Ellipse {
    let major = t.sigma_l().max(t.sigma_s());
    Ellipse::new(
        t.mu_x() + spread * major * rng.random_range(-1.0..1.0),
        t.mu_y() + spread * major * rng.random_range(-1.0..1.0),
        t.sigma_l() * (spread * rng.random_range(-1.0..1.0)).exp(),
        t.sigma_s() * (spread * rng.random_range(-1.0..1.0)).exp(),
        t.theta() + spread * rng.random_range(-PI..PI),
    )
    .unwrap()
}

pub type M2 = [[f64; 2]; 2];

pub fn matmul(a: M2, b: M2) -> M2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

pub fn transpose(a: M2) -> M2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// Covariance Rᵀ diag(σl², σs²) R built by explicit matrix products.
pub fn covariance(e: &Ellipse) -> M2 {
    let (c, s) = (e.theta().cos(), e.theta().sin());
    let r = [[c, s], [-s, c]];
    let d = [[e.sigma_l().powi(2), 0.0], [0.0, e.sigma_s().powi(2)]];
    matmul(matmul(transpose(r), d), r)
}

fn inverse(a: M2) -> (M2, f64) {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    ([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]], det)
}

fn log_density(mu: [f64; 2], inv: M2, det: f64, x: [f64; 2]) -> f64 {
    let d = [x[0] - mu[0], x[1] - mu[1]];
    let q = d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1]) + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]);
    -0.5 * q - (2.0 * PI).ln() - 0.5 * det.ln()
}

fn std_normal(rng: &mut impl Rng) -> f64 {
    // Box–Muller
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Sample mean of ln(f_t/f_p) under the target, with its standard error.
pub fn mc_kl(t: &Ellipse, p: &Ellipse, n: usize, seed: u64) -> (f64, f64) {
    let st = covariance(t);
    let (it, dt) = inverse(st);
    let (ip, dp) = inverse(covariance(p));
    let l00 = st[0][0].sqrt();
    let l10 = st[1][0] / l00;
    let l11 = (st[1][1] - l10 * l10).sqrt();
    let mut rng = rng(seed);
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..n {
        let (z0, z1) = (std_normal(&mut rng), std_normal(&mut rng));
        let x = [t.mu_x() + l00 * z0, t.mu_y() + l10 * z0 + l11 * z1];
        let v = log_density(t.center(), it, dt, x) - log_density(p.center(), ip, dp, x);
        sum += v;
        sum2 += v * v;
    }
    let mean = sum / n as f64;
    let var = (sum2 / n as f64 - mean * mean).max(0.0);
    (mean, (var / n as f64).sqrt())
}

/// Central differences of `f` over (μx, μy, σl, σs, θ).
pub fn fd_gradient(f: impl Fn(&Ellipse) -> f64, e: &Ellipse, h: f64) -> [f64; 5] {
    let base = [e.mu_x(), e.mu_y(), e.sigma_l(), e.sigma_s(), e.theta()];
    let mut g = [0.0; 5];
    for k in 0..5 {
        let mut plus = base;
        let mut minus = base;
        plus[k] += h;
        minus[k] -= h;
        let ep = Ellipse::new(plus[0], plus[1], plus[2], plus[3], plus[4]).unwrap();
        let em = Ellipse::new(minus[0], minus[1], minus[2], minus[3], minus[4]).unwrap();
        g[k] = (f(&ep) - f(&em)) / (2.0 * h);
    }
    g
}

/// Per-cell inside test on an explicit grid over the union hull.
pub fn brute_iou(e1: &Ellipse, e2: &Ellipse, cells: usize) -> f64 {
    let (b1, b2) = (e1.bbox(), e2.bbox());
    let x0 = b1.x_min().min(b2.x_min());
    let x1 = b1.x_max().max(b2.x_max());
    let y0 = b1.y_min().min(b2.y_min());
    let y1 = b1.y_max().max(b2.y_max());
    let cell = (x1 - x0).max(y1 - y0) / cells as f64;
    let nx = ((x1 - x0) / cell).ceil() as usize;
    let ny = ((y1 - y0) / cell).ceil() as usize;
    let inside = |e: &Ellipse, p: [f64; 2]| {
        let q = gpn::geometry::ellipse_to_gaussian(e);
        let s = q.sigma();
        let (inv, _) = inverse(s);
        let d = [p[0] - e.mu_x(), p[1] - e.mu_y()];
        d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1]) + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]) <= 1.0
    };
    let (mut inter, mut uni) = (0usize, 0usize);
    for j in 0..ny {
        for i in 0..nx {
            let p = [x0 + (i as f64 + 0.5) * cell, y0 + (j as f64 + 0.5) * cell];
            let (a, b) = (inside(e1, p), inside(e2, p));
            inter += (a && b) as usize;
            uni += (a || b) as usize;
        }
    }
    if uni == 0 {
        0.0
    } else {
        inter as f64 / uni as f64
    }
}

fn ellipse_key(e: &Ellipse) -> [f64; 5] {
    [e.mu_x(), e.mu_y(), e.sigma_l(), e.sigma_s(), e.theta()]
}

/// Greedy one-to-one matching written from scratch; returns (tp, fp).
///
/// `iou(d, g)` gives the overlap of detection `d` and ground truth `g`.
pub fn oracle_match(
    dets: &[Detection],
    keep: &[usize],
    gts: &[GroundTruth],
    iou: &dyn Fn(usize, usize) -> f64,
    iou_thresh: f64,
) -> (usize, usize) {
    let mut idx = keep.to_vec();
    idx.sort_by(|&a, &b| {
        let (x, y) = (&dets[a], &dets[b]);
        y.score
            .total_cmp(&x.score)
            .then_with(|| x.image_id.cmp(&y.image_id))
            .then_with(|| {
                let (kx, ky) = (ellipse_key(&x.ellipse), ellipse_key(&y.ellipse));
                (0..5)
                    .map(|k| kx[k].total_cmp(&ky[k]))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then(a.cmp(&b))
    });
    let mut used = vec![false; gts.len()];
    let (mut tp, mut fp) = (0, 0);
    for i in idx {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if used[g] || gt.image_id != dets[i].image_id {
                continue;
            }
            let v = iou(i, g);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        match best {
            Some((g, v)) if v >= iou_thresh => {
                used[g] = true;
                tp += 1;
            }
            _ => fp += 1,
        }
    }
    (tp, fp)
}

/// FROC readout by re-matching from scratch at every distinct score threshold.
pub fn oracle_froc(
    dets: &[Detection],
    gts: &[GroundTruth],
    iou_thresh: f64,
    fp_grid: &[f64],
    n_images: usize,
) -> Vec<f64> {
    let table: Vec<Vec<f64>> = dets
        .iter()
        .map(|d| {
            gts.iter()
                .map(|g| {
                    if g.image_id == d.image_id {
                        ellipse_iou(&d.ellipse, &g.ellipse, 256).unwrap()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let iou = |d: usize, g: usize| table[d][g];
    let mut thresholds: Vec<f64> = dets.iter().map(|d| d.score).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut points = vec![(0.0, 0.0)];
    for &t in &thresholds {
        let keep: Vec<usize> = (0..dets.len()).filter(|&i| dets[i].score >= t).collect();
        let (tp, fp) = oracle_match(dets, &keep, gts, &iou, iou_thresh);
        points.push((fp as f64 / n_images as f64, tp as f64 / gts.len() as f64));
    }
    fp_grid
        .iter()
        .map(|&f| points.iter().filter(|(fp, _)| *fp <= f).map(|&(_, s)| s).fold(0.0, f64::max))
        .collect()
}

pub fn distinct_images(dets: &[Detection], gts: &[GroundTruth]) -> usize {
    dets.iter()
        .map(|d| d.image_id.as_str())
        .chain(gts.iter().map(|g| g.image_id.as_str()))
        .collect::<BTreeSet<_>>()
        .len()
}
