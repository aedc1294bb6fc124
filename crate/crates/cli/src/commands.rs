use std::io::Write;
use std::path::Path;

use gpn::anchor_codec::{assign_anchors, best_anchor, decode, encode, Anchor, AnchorGridConfig, AnchorLabel};
use gpn::detection_eval::froc_with_images;
use gpn::fit::{compare, fit_kl, fit_regression, CompareConfig, FitConfig, FitTrace, InitRule, KlSpace, ParamSpace};
use gpn::kl_loss::kl_terms;
use gpn::raster_metrics::{ellipse_iou, ellipse_iou_mc, nms_with, rasterize_ellipse, NmsOverlap, RasterGrid};
use gpn::records::{
    read_detections, read_ellipses, read_ground_truths, read_records, write_detections, write_ground_truths,
    write_records, AnchorRecord, EllipseRecord, EncodedRecord,
};
use gpn::synth::{
    corrupt, generate_scenes, localization_targets, AngleDistribution, AspectDistribution, CorruptionConfig,
    SceneConfig, ScoreModel,
};
use gpn::Ellipse;
use serde_json::json;

use crate::args::{Cli, Command, DetectorArgs, GridArgs, Method, OptimizerArgs, SceneArgs, Space};
use crate::io::{create, open, write_file};
use crate::{CliError, CliResult};

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Kl { target, proposal, terms } => kl(&target, &proposal, terms),
        Command::Iou { a, b, cells, mc_samples, seed, dump_masks, out } => {
            iou(&a, &b, cells, mc_samples, seed, dump_masks.as_deref(), out.as_deref())
        }
        Command::Encode { input, anchor, grid, out } => encode_cmd(&input, anchor.as_deref(), &grid, out.as_deref()),
        Command::Decode { input, anchor, out } => decode_cmd(&input, anchor.as_deref(), out.as_deref()),
        Command::Anchors { grid, gts, hi, lo, out } => anchors(&grid, gts.as_deref(), hi, lo, out.as_deref()),
        Command::Nms { dets, iou, ellipse_overlap, cells, out } => {
            let overlap =
                if ellipse_overlap { NmsOverlap::Ellipse { cells_per_axis: cells } } else { NmsOverlap::BoundingBox };
            let kept = nms_with(&read_detections(open(&dets)?)?, iou, overlap)?;
            write_detections(create(out.as_deref())?, &kept)?;
            Ok(())
        }
        Command::Synth { n, seed, scene, out_gts, out_dets, detector, detector_seed } => {
            let gts = generate_scenes(&scene_config(&scene, seed), n)?;
            write_ground_truths(create(Some(&out_gts))?, &gts)?;
            if let Some(path) = out_dets {
                let dets = corrupt(&gts, &corruption_config(&detector, detector_seed.unwrap_or(seed)))?;
                write_detections(create(Some(&path))?, &dets)?;
            }
            Ok(())
        }
        Command::Corrupt { gts, seed, detector, out } => {
            let dets = corrupt(&read_ground_truths(open(&gts)?)?, &corruption_config(&detector, seed))?;
            write_detections(create(out.as_deref())?, &dets)?;
            Ok(())
        }
        Command::Fit { target, init, method, opt, space, anchor, out } => {
            fit(&target, &init, method, &opt, space, anchor.as_deref(), out.as_deref())
        }
        Command::Compare { n, seed, opt, kl_space, init_at_target, grid, threads, out_dir } => {
            let run = || compare_cmd(n, seed, &opt, kl_space, init_at_target, &grid, out_dir.as_deref());
            match threads {
                Some(t) => rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| CliError::Input(e.to_string()))?
                    .install(run),
                None => run(),
            }
        }
        Command::Froc { dets, gts, iou, fp_grid, n_images, out } => {
            let dets = read_detections(open(&dets)?)?;
            let gts = read_ground_truths(open(&gts)?)?;
            let curve = froc_with_images(&dets, &gts, iou, &fp_grid, n_images)?;
            let mut w = create(out.as_deref())?;
            writeln!(w, "fp_per_image,sensitivity")?;
            for (f, s) in curve.points {
                writeln!(w, "{f:?},{s:?}")?;
            }
            Ok(())
        }
    }
}

/// Pairs two record lists elementwise; a single record pairs with every other.
fn pair_up<'a>(a: &'a [Ellipse], b: &'a [Ellipse]) -> CliResult<Vec<(&'a Ellipse, &'a Ellipse)>> {
    match (a.len(), b.len()) {
        (0, _) | (_, 0) => Err(CliError::Input("no ellipse records to pair".into())),
        (1, _) => Ok(b.iter().map(|y| (&a[0], y)).collect()),
        (_, 1) => Ok(a.iter().map(|x| (x, &b[0])).collect()),
        (n, m) if n == m => Ok(a.iter().zip(b).collect()),
        (n, m) => Err(CliError::Input(format!("cannot pair {n} records with {m}"))),
    }
}

fn parse_anchor(v: &[f64]) -> CliResult<Anchor> {
    match v {
        [cx, cy, w, h] => Ok(Anchor::new(*cx, *cy, *w, *h)?),
        _ => Err(CliError::Input("an anchor needs exactly cx,cy,w,h".into())),
    }
}

fn grid_config(g: &GridArgs) -> AnchorGridConfig {
    AnchorGridConfig {
        image_w: g.image_w,
        image_h: g.image_h,
        stride: g.stride,
        scales: g.scales.clone(),
        ratios: g.ratios.clone(),
    }
}

fn scene_config(s: &SceneArgs, seed: u64) -> SceneConfig {
    SceneConfig {
        image_w: s.image_w,
        image_h: s.image_h,
        lesions_per_image: (s.lesions_min, s.lesions_max),
        scale_range: (s.scale_min, s.scale_max),
        aspect: AspectDistribution::LogUniform { lo: s.aspect_min, hi: s.aspect_max },
        angle: s.angle_deg.map_or(AngleDistribution::Uniform, AngleDistribution::FixedDegrees),
        seed,
    }
}

fn corruption_config(d: &DetectorArgs, seed: u64) -> CorruptionConfig {
    CorruptionConfig {
        center_noise_sigma: d.center_noise,
        axis_noise_sigma: d.axis_noise,
        angle_noise_sigma_deg: d.angle_noise_deg,
        miss_rate: d.miss_rate,
        fp_rate: d.fp_rate,
        score_model: if d.fixed_scores {
            ScoreModel::Fixed
        } else {
            ScoreModel::Logistic { separation: d.score_separation }
        },
        seed,
        ..CorruptionConfig::default()
    }
}

fn kl(target: &Path, proposal: &Path, terms: bool) -> CliResult<()> {
    let targets = read_ellipses(open(target)?)?;
    let proposals = read_ellipses(open(proposal)?)?;
    let mut w = create(None)?;
    for (t, p) in pair_up(&targets, &proposals)? {
        let k = kl_terms(t, p);
        if terms {
            let rec = json!({"kl": k.total(), "trace": k.trace, "mahalanobis": k.mahalanobis, "log_det": k.log_det});
            writeln!(w, "{rec}")?;
        } else {
            writeln!(w, "{:?}", k.total())?;
        }
    }
    Ok(())
}

fn iou(
    a: &Path,
    b: &Path,
    cells: usize,
    mc_samples: usize,
    seed: u64,
    dump_masks: Option<&Path>,
    out: Option<&Path>,
) -> CliResult<()> {
    let xs = read_ellipses(open(a)?)?;
    let ys = read_ellipses(open(b)?)?;
    let mut w = create(out)?;
    for (i, (x, y)) in pair_up(&xs, &ys)?.into_iter().enumerate() {
        let raster = ellipse_iou(x, y, cells)?;
        let mc = ellipse_iou_mc(x, y, mc_samples, seed.wrapping_add(i as u64))?;
        writeln!(w, "{}", json!({"pair": i, "iou_raster": raster, "iou_mc": mc.iou, "mc_std_err": mc.std_err}))?;
        if let Some(dir) = dump_masks {
            std::fs::create_dir_all(dir)?;
            let grid = RasterGrid::covering(x, y, cells);
            for (tag, e) in [("a", x), ("b", y)] {
                let mask = rasterize_ellipse(e, &grid)?;
                write_file(&dir.join(format!("pair{i:04}_{tag}.pgm")), &mask.to_pgm())?;
            }
        }
    }
    Ok(())
}

fn encode_cmd(input: &Path, anchor: Option<&[f64]>, grid: &GridArgs, out: Option<&Path>) -> CliResult<()> {
    let records: Vec<EllipseRecord> = read_records(open(input)?)?;
    let fixed = anchor.map(parse_anchor).transpose()?;
    let grid_anchors = if fixed.is_none() { grid_config(grid).generate()? } else { Vec::new() };
    let mut encoded = Vec::with_capacity(records.len());
    for rec in &records {
        let e = rec.ellipse()?;
        let a = match fixed {
            Some(a) => a,
            None => grid_anchors[best_anchor(&grid_anchors, &e)?],
        };
        encoded.push(EncodedRecord::new(&encode(&e, &a)?, rec.image_id.clone(), Some(&a)));
    }
    write_records(create(out)?, &encoded)?;
    Ok(())
}

fn decode_cmd(input: &Path, anchor: Option<&[f64]>, out: Option<&Path>) -> CliResult<()> {
    let records: Vec<EncodedRecord> = read_records(open(input)?)?;
    let fallback = anchor.map(parse_anchor).transpose()?;
    let mut decoded = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let a = match (rec.anchor, fallback) {
            (Some(a), _) => a.anchor()?,
            (None, Some(a)) => a,
            (None, None) => {
                return Err(CliError::Input(format!("record {} has no anchor and --anchor is not set", i + 1)))
            }
        };
        decoded.push(EllipseRecord::from_ellipse(&decode(&rec.encoded(), &a)?, rec.image_id.clone(), None));
    }
    write_records(create(out)?, &decoded)?;
    Ok(())
}

fn anchors(grid: &GridArgs, gts: Option<&Path>, hi: f64, lo: f64, out: Option<&Path>) -> CliResult<()> {
    let anchors = grid_config(grid).generate()?;
    let mut w = create(out)?;
    let Some(gts) = gts else {
        write_records(w, &anchors.iter().map(AnchorRecord::from).collect::<Vec<_>>())?;
        return Ok(());
    };
    let gts = read_ellipses(open(gts)?)?;
    let assignment = assign_anchors(&anchors, &gts, hi, lo)?;
    for (i, (a, label)) in anchors.iter().zip(&assignment.labels).enumerate() {
        let (label, gt) = match label {
            AnchorLabel::Positive { gt } => ("positive", Some(*gt)),
            AnchorLabel::Negative => ("negative", None),
            AnchorLabel::Ignore => ("ignore", None),
        };
        let rec = json!({
            "index": i, "cx": a.cx, "cy": a.cy, "w": a.w, "h": a.h,
            "label": label, "gt": gt, "max_iou": assignment.max_iou[i],
        });
        writeln!(w, "{rec}")?;
    }
    Ok(())
}

fn fit_config(opt: &OptimizerArgs, space: ParamSpace) -> FitConfig {
    FitConfig {
        learning_rate: opt.lr,
        max_iters: opt.max_iters,
        convergence_eps: opt.eps,
        parameter_space: space,
        iou_cells: opt.cells,
    }
}

fn write_trace(w: &mut dyn Write, pair: usize, trace: &FitTrace) -> CliResult<()> {
    for (k, s) in trace.steps.iter().enumerate() {
        let e = &s.ellipse;
        writeln!(
            w,
            "{pair},{k},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            s.loss,
            s.iou,
            e.mu_x(),
            e.mu_y(),
            e.sigma_l(),
            e.sigma_s(),
            e.theta()
        )?;
    }
    Ok(())
}

fn fit(
    target: &Path,
    init: &Path,
    method: Method,
    opt: &OptimizerArgs,
    space: Space,
    anchor: Option<&[f64]>,
    out: Option<&Path>,
) -> CliResult<()> {
    let targets = read_ellipses(open(target)?)?;
    let inits = read_ellipses(open(init)?)?;
    let fixed = anchor.map(parse_anchor).transpose()?;
    let mut w = create(out)?;
    writeln!(w, "pair,iter,loss,iou,mu_x,mu_y,sigma_l,sigma_s,theta_rad")?;
    for (i, (t, p)) in pair_up(&targets, &inits)?.into_iter().enumerate() {
        let anchor = match fixed {
            Some(a) => a,
            None => {
                let b = p.bbox();
                Anchor::new(b.cx, b.cy, b.w, b.h)?
            }
        };
        let result = match method {
            Method::Kl => {
                let space = match space {
                    Space::Raw => ParamSpace::Raw,
                    Space::Encoded => ParamSpace::AnchorEncoded(anchor),
                };
                fit_kl(t, p, &fit_config(opt, space))
            }
            Method::Regression => fit_regression(t, p, &anchor, &fit_config(opt, ParamSpace::Raw)),
        };
        match result {
            Ok(trace) => write_trace(&mut w, i, &trace)?,
            Err(gpn::Error::Diverged { trace }) => {
                write_trace(&mut w, i, &trace)?;
                w.flush()?;
                return Err(CliError::Numerical(format!("pair {i} diverged after {} steps", trace.steps.len())));
            }
            Err(e) => return Err(e.into()),
        }
    }
    w.flush()?;
    Ok(())
}

fn compare_cmd(
    n: usize,
    seed: u64,
    opt: &OptimizerArgs,
    kl_space: Space,
    init_at_target: bool,
    grid: &GridArgs,
    out_dir: Option<&Path>,
) -> CliResult<()> {
    let targets = localization_targets(n, seed)?;
    let cfg = CompareConfig {
        learning_rate: opt.lr,
        max_iters: opt.max_iters,
        convergence_eps: opt.eps,
        kl_space: match kl_space {
            Space::Raw => KlSpace::Raw,
            Space::Encoded => KlSpace::AnchorEncoded,
        },
        iou_cells: opt.cells,
        ..CompareConfig::default()
    };
    let rule = if init_at_target { InitRule::Target } else { InitRule::AnchorCircle(grid_config(grid)) };
    let report = compare(&targets, &rule, &cfg)?;
    match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            write_file(&dir.join("rows.csv"), report.rows_csv().as_bytes())?;
            write_file(&dir.join("summary.csv"), report.summary_csv().as_bytes())?;
            write_file(&dir.join("angle_errors.csv"), report.angle_table_csv().as_bytes())?;
        }
        None => {
            let mut w = create(None)?;
            write!(w, "{}\n{}", report.summary_csv(), report.angle_table_csv())?;
        }
    }
    Ok(())
}
