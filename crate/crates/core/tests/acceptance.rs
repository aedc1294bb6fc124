//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line and
//! fails when its criterion is not met.

mod common;

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use gpn::anchor_codec::{decode, encode, generate_anchor_grid, AnchorGridConfig};
use gpn::detection_eval::{froc_with_images, DEFAULT_FP_GRID};
use gpn::fit::{compare, CompareConfig, CompareReport, InitRule};
use gpn::kl_loss::{kl_divergence, kl_divergence_axis_aligned, kl_gradient};
use gpn::raster_metrics::{ellipse_iou, ellipse_iou_mc};
use gpn::synth::{corrupt, generate_scenes, localization_targets, CorruptionConfig, SceneConfig, ScoreModel};
use gpn::Ellipse;
use rand::Rng;

use common::{distinct_images, fd_gradient, mc_kl, oracle_froc, perturbed, random_ellipse, rng};

fn print_line(n: u32, pass: bool, elapsed: Duration, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n}: {verdict} ({:.2} s) {detail}", elapsed.as_secs_f64());
}

#[test]
fn criterion_01_kl_matches_monte_carlo() {
    let start = Instant::now();
    let mut r = rng(101);
    let mut worst_z: f64 = 0.0;
    let mut failures = 0;
    let mut n = 0;
    while n < 100 {
        let t = random_ellipse(&mut r, 50.0, 1.0, 20.0);
        let p = perturbed(&mut r, &t, 0.5);
        let kl = kl_divergence(&t, &p);
        if kl >= 5.0 {
            continue;
        }
        let (mc, se) = mc_kl(&t, &p, 1_000_000, 1000 + n);
        let z = (mc - kl).abs() / se.max(f64::MIN_POSITIVE);
        worst_z = worst_z.max(z);
        failures += (z > 3.0) as usize;
        n += 1;
    }
    let elapsed = start.elapsed();
    let pass = failures == 0 && elapsed.as_secs_f64() < 60.0;
    print_line(1, pass, elapsed, &format!("100 pairs, worst |closed-form − MC| = {worst_z:.2} SE"));
    assert!(pass, "{failures} pairs outside 3 SE");
}

#[test]
fn criterion_02_axis_aligned_form_agrees() {
    let start = Instant::now();
    let mut r = rng(102);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut axis_aligned = || {
            let l = common::log_uniform(&mut r, 0.5, 50.0);
            let s = common::log_uniform(&mut r, 0.5, 50.0);
            Ellipse::new(r.random_range(-100.0..100.0), r.random_range(-100.0..100.0), l, s, 0.0).unwrap()
        };
        let (t, p) = (axis_aligned(), axis_aligned());
        let d = (kl_divergence(&t, &p) - kl_divergence_axis_aligned(&t, &p).unwrap()).abs();
        worst = worst.max(d);
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-10 && elapsed.as_secs_f64() < 1.0;
    print_line(2, pass, elapsed, &format!("1000 pairs, max difference {worst:.3e}"));
    assert!(pass);
}

#[test]
fn criterion_03_gradient_matches_finite_differences() {
    let start = Instant::now();
    let mut r = rng(103);
    let mut worst_excess: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..1000 {
        let t = random_ellipse(&mut r, 20.0, 1.0, 10.0);
        let p = perturbed(&mut r, &t, 0.5);
        let analytic = kl_gradient(&t, &p).as_array();
        let numeric = fd_gradient(|q| kl_divergence(&t, q), &p, 1e-6);
        for k in 0..5 {
            let tol = 1e-5f64.max(1e-4 * numeric[k].abs());
            let err = (analytic[k] - numeric[k]).abs();
            worst_excess = worst_excess.max(err / tol);
            failures += (err > tol) as usize;
        }
    }
    let elapsed = start.elapsed();
    let pass = failures == 0 && elapsed.as_secs_f64() < 5.0;
    print_line(3, pass, elapsed, &format!("1000 pairs, worst error / tolerance = {worst_excess:.3}"));
    assert!(pass, "{failures} components out of tolerance");
}

#[test]
fn criterion_04_flip_and_rigid_motion_invariance() {
    let start = Instant::now();
    let mut r = rng(104);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let t = random_ellipse(&mut r, 50.0, 1.0, 20.0);
        let p = perturbed(&mut r, &t, 0.5);
        let kl = kl_divergence(&t, &p);
        for (a, b) in [(t.flipped(), p), (t, p.flipped()), (t.flipped(), p.flipped())] {
            worst = worst.max((kl_divergence(&a, &b) - kl).abs() / kl.max(1.0));
        }
    }
    for _ in 0..1000 {
        let t = random_ellipse(&mut r, 50.0, 1.0, 20.0);
        let p = perturbed(&mut r, &t, 0.5);
        let kl = kl_divergence(&t, &p);
        let (dx, dy) = (r.random_range(-100.0..100.0), r.random_range(-100.0..100.0));
        let (pivot, angle) = ([r.random_range(-50.0..50.0), r.random_range(-50.0..50.0)], r.random_range(-PI..PI));
        let moved = kl_divergence(
            &t.rotated_about(pivot, angle).translated(dx, dy),
            &p.rotated_about(pivot, angle).translated(dx, dy),
        );
        worst = worst.max((moved - kl).abs() / kl.max(1.0));
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-9 && elapsed.as_secs_f64() < 1.0;
    print_line(4, pass, elapsed, &format!("2000 pairs, max deviation {worst:.3e}"));
    assert!(pass);
}

#[test]
fn criterion_05_raster_iou_matches_monte_carlo() {
    let start = Instant::now();
    let mut r = rng(105);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let t = random_ellipse(&mut r, 50.0, 3.0, 30.0);
        let p = perturbed(&mut r, &t, 0.4);
        let raster = ellipse_iou(&t, &p, 256).unwrap();
        let mc = ellipse_iou_mc(&t, &p, 200_000, 5000 + i).unwrap();
        let tol = 0.01f64.max(3.0 * mc.std_err);
        let err = (raster - mc.iou).abs();
        worst = worst.max(err);
        failures += (err > tol) as usize;
    }
    let circles = ellipse_iou(&Ellipse::circle(0.0, 0.0, 1.0).unwrap(), &Ellipse::circle(0.0, 0.0, 2.0).unwrap(), 256)
        .unwrap();
    let elapsed = start.elapsed();
    let pass = failures == 0 && (circles - 0.25).abs() <= 0.01 && elapsed.as_secs_f64() < 30.0;
    print_line(5, pass, elapsed, &format!("100 pairs, max |raster − MC| = {worst:.4}; concentric circles {circles:.4}"));
    assert!(pass, "{failures} pairs out of tolerance, circles {circles}");
}

#[test]
fn criterion_06_codec_round_trip_and_grid_count() {
    let start = Instant::now();
    let mut r = rng(106);
    let anchors = AnchorGridConfig::default().generate().unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let a = anchors[r.random_range(0..anchors.len())];
        let e = Ellipse::new(
            a.cx + r.random_range(-0.5..0.5) * a.w,
            a.cy + r.random_range(-0.5..0.5) * a.h,
            a.w * common::log_uniform(&mut r, 0.1, 2.0),
            a.h * common::log_uniform(&mut r, 0.1, 2.0),
            r.random_range(-1.55..1.55),
        )
        .unwrap();
        let back = decode(&encode(&e, &a).unwrap(), &a).unwrap();
        let d = [
            back.mu_x() - e.mu_x(),
            back.mu_y() - e.mu_y(),
            back.sigma_l() - e.sigma_l(),
            back.sigma_s() - e.sigma_s(),
            back.theta() - e.theta(),
        ];
        worst = d.iter().fold(worst, |m, v| m.max(v.abs()));
    }
    let grid = generate_anchor_grid(512.0, 512.0, 8.0, &[16.0, 24.0, 32.0, 48.0, 96.0], &[1.0]).unwrap();
    let elapsed = start.elapsed();
    let pass = worst < 1e-9 && grid.len() == 20480 && anchors.len() == 20480;
    print_line(6, pass, elapsed, &format!("1000 round trips, max error {worst:.3e}; {} anchors", grid.len()));
    assert!(pass);
}

#[test]
fn criterion_07_froc_matches_threshold_sweep() {
    let start = Instant::now();
    let mut mismatches = 0;
    for run in 0..20u64 {
        let mut r = rng(700 + run);
        let n_images = r.random_range(5..=50);
        let scenes = SceneConfig { lesions_per_image: (1, 3), seed: run, ..SceneConfig::default() };
        let gts = generate_scenes(&scenes, n_images).unwrap();
        // Alternate continuous scores with the tie-heavy fixed model.
        let score_model =
            if run % 2 == 0 { ScoreModel::Logistic { separation: 2.0 } } else { ScoreModel::Fixed };
        let cfg = CorruptionConfig {
            center_noise_sigma: 0.1,
            angle_noise_sigma_deg: 10.0,
            miss_rate: 0.2,
            fp_rate: 1.5,
            score_model,
            seed: 7000 + run,
            ..CorruptionConfig::default()
        };
        let dets = corrupt(&gts, &cfg).unwrap();
        let fast = froc_with_images(&dets, &gts, 0.5, &DEFAULT_FP_GRID, None).unwrap();
        let slow = oracle_froc(&dets, &gts, 0.5, &DEFAULT_FP_GRID, distinct_images(&dets, &gts));
        let fast: Vec<f64> = fast.points.iter().map(|p| p.1).collect();
        mismatches += (fast != slow) as usize;
    }
    let gts = generate_scenes(&SceneConfig { seed: 77, ..SceneConfig::default() }, 30).unwrap();
    let perfect = corrupt(&gts, &CorruptionConfig::noiseless(1)).unwrap();
    let curve = froc_with_images(&perfect, &gts, 0.5, &DEFAULT_FP_GRID, None).unwrap();
    let all_one = curve.points.iter().all(|p| p.1 == 1.0);
    let elapsed = start.elapsed();
    let pass = mismatches == 0 && all_one && elapsed.as_secs_f64() < 10.0;
    print_line(7, pass, elapsed, &format!("20 runs, {mismatches} mismatches; perfect detector all 1.0: {all_one}"));
    assert!(pass);
}

fn compare_seed_7() -> &'static (CompareReport, Duration) {
    static REPORT: OnceLock<(CompareReport, Duration)> = OnceLock::new();
    REPORT.get_or_init(|| {
        let start = Instant::now();
        let targets = localization_targets(500, 7).unwrap();
        let report =
            compare(&targets, &InitRule::AnchorCircle(AnchorGridConfig::default()), &CompareConfig::default()).unwrap();
        (report, start.elapsed())
    })
}

#[test]
fn criterion_08_kl_localizes_better_than_regression() {
    let (report, elapsed) = compare_seed_7();
    let (kl, reg) = (&report.kl, &report.regression);
    let margin = kl.frac_iou_70 - reg.frac_iou_70;
    let pass = kl.mean_iou >= reg.mean_iou && margin >= 0.05 && elapsed.as_secs_f64() < 300.0;
    report_line_8(pass, *elapsed, kl.mean_iou, reg.mean_iou, kl.frac_iou_70, reg.frac_iou_70);
    assert!(pass, "KL mean IoU {} vs {}, IoU≥0.7 fraction {} vs {}", kl.mean_iou, reg.mean_iou, kl.frac_iou_70, reg.frac_iou_70);
}

fn report_line_8(pass: bool, elapsed: Duration, kl_mean: f64, reg_mean: f64, kl_70: f64, reg_70: f64) {
    print_line(
        8,
        pass,
        elapsed,
        &format!(
            "mean IoU kl {kl_mean:.5} vs regression {reg_mean:.5}; IoU≥0.7 kl {kl_70:.3} vs regression {reg_70:.3} (need +0.05)"
        ),
    );
}

#[test]
fn criterion_09_angle_error_falls_with_aspect_ratio() {
    let (report, elapsed) = compare_seed_7();
    let bin = |lo: f64, hi: f64| report.angle_bins.iter().find(|b| b.lo == lo && b.hi == hi).copied().unwrap();
    let (round, elongated) = (bin(1.0, 1.2), bin(2.0, 3.0));
    let pass = elongated.kl_median_deg < round.kl_median_deg;
    print_line(
        9,
        pass,
        *elapsed,
        &format!(
            "kl median angle error {:.4}° for aspect [2, 3] ({} targets) vs {:.4}° for [1, 1.2] ({} targets)",
            elongated.kl_median_deg, elongated.count, round.kl_median_deg, round.count
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_compare_is_deterministic() {
    let start = Instant::now();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let targets = localization_targets(500, 7).unwrap();
            let r = compare(&targets, &InitRule::AnchorCircle(AnchorGridConfig::default()), &CompareConfig::default())
                .unwrap();
            (r.rows_csv(), r.summary_csv(), r.angle_table_csv())
        })
    };
    let (reference, _) = compare_seed_7();
    let shared = (reference.rows_csv(), reference.summary_csv(), reference.angle_table_csv());
    let single = run(1);
    let multi = run(4);
    let elapsed = start.elapsed();
    let pass = single == multi && single == shared;
    print_line(10, pass, elapsed, "compare reports byte-identical across runs and 1 vs 4 threads");
    assert!(pass);
}

#[test]
fn flip_is_an_identity_of_the_ellipse_set() {
    // Guards the invariance test above against a vacuous flip.
    let e = Ellipse::new(0.0, 0.0, 5.0, 2.0, 0.3).unwrap();
    let f = e.flipped();
    assert_eq!(f.sigma_l(), 2.0);
    assert!((f.theta() - (0.3 + FRAC_PI_2 - PI)).abs() < 1e-15);
}
