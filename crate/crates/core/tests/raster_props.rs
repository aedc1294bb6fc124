mod common;

use std::f64::consts::PI;

use gpn::anchor_codec::box_iou;
use gpn::geometry::ellipse_bbox;
use gpn::raster_metrics::{ellipse_iou, nms, nms_with, Detection, NmsOverlap, RasterGrid, overlap_counts};
use gpn::Ellipse;
use proptest::prelude::*;
use rand::Rng;

use common::{brute_iou, perturbed, random_ellipse, rng};

#[test]
fn raster_matches_per_cell_oracle() {
    let mut r = rng(21);
    for _ in 0..200 {
        let a = random_ellipse(&mut r, 30.0, 1.0, 20.0);
        let b = perturbed(&mut r, &a, 0.5);
        let fast = ellipse_iou(&a, &b, 128).unwrap();
        let slow = brute_iou(&a, &b, 128);
        let grid = RasterGrid::covering(&a, &b, 128);
        let union = overlap_counts(&a, &b, &grid).union().max(1) as f64;
        // cells sitting exactly on a boundary may round either way
        assert!((fast - slow).abs() <= 2.0 / union, "{fast} vs {slow}");
    }
}

#[test]
fn resolution_convergence() {
    let mut r = rng(22);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a = random_ellipse(&mut r, 30.0, 2.0, 20.0);
        let b = perturbed(&mut r, &a, 0.4);
        let d = (ellipse_iou(&a, &b, 256).unwrap() - ellipse_iou(&a, &b, 512).unwrap()).abs();
        worst = worst.max(d);
    }
    assert!(worst < 0.005, "max difference {worst}");
}

fn scored(r: &mut impl Rng, n: usize, images: usize) -> Vec<Detection> {
    (0..n)
        .map(|_| {
            let e = random_ellipse(r, 60.0, 3.0, 25.0);
            // coarse scores force ties
            let score = (r.random_range(0..10) as f64) / 10.0;
            Detection::new(e, score, format!("img{}", r.random_range(0..images))).unwrap()
        })
        .collect()
}

#[test]
fn nms_subset_separation_and_idempotence() {
    let mut r = rng(23);
    for round in 0..50 {
        let dets = scored(&mut r, 40, 3);
        let thr = [0.3, 0.5, 0.7][round % 3];
        let kept = nms(&dets, thr).unwrap();
        assert!(kept.iter().all(|k| dets.contains(k)));
        for (i, a) in kept.iter().enumerate() {
            for b in &kept[i + 1..] {
                if a.image_id == b.image_id {
                    assert!(box_iou(&ellipse_bbox(&a.ellipse), &ellipse_bbox(&b.ellipse)) <= thr);
                }
            }
        }
        assert_eq!(nms(&kept, thr).unwrap(), kept);
        let kept_e = nms_with(&dets, thr, NmsOverlap::Ellipse { cells_per_axis: 64 }).unwrap();
        assert_eq!(nms_with(&kept_e, thr, NmsOverlap::Ellipse { cells_per_axis: 64 }).unwrap(), kept_e);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn iou_is_exactly_symmetric(seed in 0u64..u64::MAX, spread in 0.05f64..2.0) {
        let mut r = rng(seed);
        let a = random_ellipse(&mut r, 30.0, 0.5, 20.0);
        let b = perturbed(&mut r, &a, spread);
        let ab = ellipse_iou(&a, &b, 256).unwrap();
        prop_assert_eq!(ab, ellipse_iou(&b, &a, 256).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn iou_of_an_ellipse_with_itself_is_one(seed in 0u64..u64::MAX) {
        let mut r = rng(seed);
        let a = random_ellipse(&mut r, 30.0, 0.5, 20.0);
        prop_assert_eq!(ellipse_iou(&a, &a, 256).unwrap(), 1.0);
        prop_assert_eq!(ellipse_iou(&a, &a.flipped(), 256).unwrap(), 1.0);
    }

    #[test]
    fn iou_survives_rigid_motion(seed in 0u64..u64::MAX, dx in -200.0f64..200.0, dy in -200.0f64..200.0, angle in -PI..PI) {
        let mut r = rng(seed);
        let a = random_ellipse(&mut r, 30.0, 2.0, 20.0);
        let b = perturbed(&mut r, &a, 0.4);
        let before = ellipse_iou(&a, &b, 256).unwrap();
        let pivot = [r.random_range(-30.0..30.0), r.random_range(-30.0..30.0)];
        let after = ellipse_iou(
            &a.rotated_about(pivot, angle).translated(dx, dy),
            &b.rotated_about(pivot, angle).translated(dx, dy),
            256,
        ).unwrap();
        prop_assert!((before - after).abs() < 0.01, "{} vs {}", before, after);
    }

    #[test]
    fn disjoint_boxes_give_zero(seed in 0u64..u64::MAX) {
        let mut r = rng(seed);
        let a = random_ellipse(&mut r, 10.0, 1.0, 10.0);
        let far = Ellipse::new(a.mu_x() + 100.0, a.mu_y(), a.sigma_l(), a.sigma_s(), a.theta()).unwrap();
        prop_assert_eq!(ellipse_iou(&a, &far, 256).unwrap(), 0.0);
    }
}
