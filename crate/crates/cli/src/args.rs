use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Gaussian proposal localization toolkit: ellipses as 2D Gaussians, KL loss,
/// anchor codec, ellipse IoU, NMS, FROC and a fitting harness.
///
/// Record files hold one JSON object per line; `-` reads standard input.
#[derive(Debug, Parser)]
#[command(name = "gpn", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// KL divergence D(target || proposal) for each record pair.
    Kl {
        /// Target ellipse records.
        #[arg(long)]
        target: PathBuf,
        /// Proposal ellipse records.
        #[arg(long)]
        proposal: PathBuf,
        /// Print the trace, Mahalanobis and log-determinant terms as JSON.
        #[arg(long)]
        terms: bool,
    },
    /// Raster and Monte Carlo IoU for each record pair.
    Iou {
        /// First ellipse records.
        #[arg(long)]
        a: PathBuf,
        /// Second ellipse records.
        #[arg(long)]
        b: PathBuf,
        /// Raster cells along the longer side of the union hull.
        #[arg(long, default_value_t = 256)]
        cells: usize,
        /// Monte Carlo samples per pair.
        #[arg(long, default_value_t = 100_000)]
        mc_samples: usize,
        /// Random seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the raster masks of each pair as PGM images into this directory.
        #[arg(long)]
        dump_masks: Option<PathBuf>,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode ellipses relative to an anchor (given, or best-IoU from a grid).
    Encode {
        /// Input records.
        #[arg(long)]
        input: PathBuf,
        /// Fixed anchor `cx,cy,w,h`; otherwise the best grid anchor per ellipse.
        #[arg(long, value_delimiter = ',', num_args = 4, allow_hyphen_values = true)]
        anchor: Option<Vec<f64>>,
        #[command(flatten)]
        grid: GridArgs,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode encoded records back to ellipses.
    Decode {
        /// Input records.
        #[arg(long)]
        input: PathBuf,
        /// Anchor `cx,cy,w,h` for records that do not carry one.
        #[arg(long, value_delimiter = ',', num_args = 4, allow_hyphen_values = true)]
        anchor: Option<Vec<f64>>,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the anchor grid, optionally labelled against ground truths.
    Anchors {
        #[command(flatten)]
        grid: GridArgs,
        /// Ground-truth records to assign anchors against.
        #[arg(long)]
        gts: Option<PathBuf>,
        /// Positive threshold on box IoU.
        #[arg(long, default_value_t = 0.7)]
        hi: f64,
        /// Negative threshold on box IoU.
        #[arg(long, default_value_t = 0.3)]
        lo: f64,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy per-image non-maximum suppression.
    Nms {
        /// Detection records.
        #[arg(long)]
        dets: PathBuf,
        /// IoU threshold.
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
        /// Suppress by raster ellipse IoU instead of bounding-box IoU.
        #[arg(long)]
        ellipse_overlap: bool,
        /// Raster cells along the longer side of the union hull.
        #[arg(long, default_value_t = 256)]
        cells: usize,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic ground truths and, optionally, simulated detections.
    Synth {
        /// Number of images.
        #[arg(long)]
        n: usize,
        /// Random seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        scene: SceneArgs,
        /// Where to write the ground truths.
        #[arg(long)]
        out_gts: PathBuf,
        /// Also run the simulated detector and write its output here.
        #[arg(long)]
        out_dets: Option<PathBuf>,
        #[command(flatten)]
        detector: DetectorArgs,
        /// Detector seed; defaults to the scene seed.
        #[arg(long)]
        detector_seed: Option<u64>,
    },
    /// Simulated detector: perturb, drop and add spurious detections.
    Corrupt {
        /// Ground-truth records.
        #[arg(long)]
        gts: PathBuf,
        /// Random seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        detector: DetectorArgs,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a proposal to a target by gradient descent and print the trace as CSV.
    Fit {
        /// Target ellipse records.
        #[arg(long)]
        target: PathBuf,
        /// Initial proposal records.
        #[arg(long)]
        init: PathBuf,
        /// Loss to minimize.
        #[arg(long, value_enum, default_value_t = Method::Kl)]
        method: Method,
        #[command(flatten)]
        opt: OptimizerArgs,
        /// KL parameter space.
        #[arg(long, value_enum, default_value_t = Space::Raw)]
        space: Space,
        /// Anchor `cx,cy,w,h` for encoded fitting; defaults to the init's bounding box.
        #[arg(long, value_delimiter = ',', num_args = 4, allow_hyphen_values = true)]
        anchor: Option<Vec<f64>>,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// KL versus smoothed-L1 regression on seeded synthetic targets.
    Compare {
        /// Number of targets.
        #[arg(long, default_value_t = 500)]
        n: usize,
        /// Random seed.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        opt: OptimizerArgs,
        /// Parameter space of the KL fitter.
        #[arg(long, value_enum, default_value_t = Space::Encoded)]
        kl_space: Space,
        /// Start both fitters at the target instead of the anchor circle.
        #[arg(long)]
        init_at_target: bool,
        #[command(flatten)]
        grid: GridArgs,
        /// Worker threads; the report does not depend on this.
        #[arg(long)]
        threads: Option<usize>,
        /// Write rows.csv, summary.csv and angle_errors.csv here instead of
        /// printing the summary and angle table.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Sensitivity at each false-positive-per-image budget.
    Froc {
        /// Detection records.
        #[arg(long)]
        dets: PathBuf,
        /// Ground-truth records.
        #[arg(long)]
        gts: PathBuf,
        /// IoU threshold.
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
        /// False-positive-per-image budgets, ascending.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0])]
        fp_grid: Vec<f64>,
        /// Number of images, if some have neither detections nor lesions.
        #[arg(long)]
        n_images: Option<usize>,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Kl,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Space {
    Raw,
    Encoded,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Image width in pixels.
    #[arg(long, default_value_t = 512.0)]
    pub image_w: f64,
    /// Image height in pixels.
    #[arg(long, default_value_t = 512.0)]
    pub image_h: f64,
    /// Anchor stride in pixels.
    #[arg(long, default_value_t = 8.0)]
    pub stride: f64,
    /// Anchor scales in pixels.
    #[arg(long, value_delimiter = ',', default_values_t = vec![16.0, 24.0, 32.0, 48.0, 96.0])]
    pub scales: Vec<f64>,
    /// Anchor aspect ratios (w/h).
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0])]
    pub ratios: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    /// Image width in pixels.
    #[arg(long, default_value_t = 512.0)]
    pub image_w: f64,
    /// Image height in pixels.
    #[arg(long, default_value_t = 512.0)]
    pub image_h: f64,
    /// Fewest lesions per image.
    #[arg(long, default_value_t = 1)]
    pub lesions_min: usize,
    /// Most lesions per image.
    #[arg(long, default_value_t = 3)]
    pub lesions_max: usize,
    /// Smallest semi-major axis in pixels.
    #[arg(long, default_value_t = 8.0)]
    pub scale_min: f64,
    /// Largest semi-major axis in pixels.
    #[arg(long, default_value_t = 64.0)]
    pub scale_max: f64,
    /// Aspect ratio range, sampled log-uniformly.
    #[arg(long, default_value_t = 1.0)]
    pub aspect_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub aspect_max: f64,
    /// Fix every lesion angle (degrees) instead of drawing it uniformly.
    #[arg(long, allow_hyphen_values = true)]
    pub angle_deg: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DetectorArgs {
    /// Center jitter as a fraction of the semi-major axis.
    #[arg(long, default_value_t = 0.05)]
    pub center_noise: f64,
    /// Log-scale jitter of each semi-axis.
    #[arg(long, default_value_t = 0.05)]
    pub axis_noise: f64,
    /// Angle jitter in degrees.
    #[arg(long, default_value_t = 5.0)]
    pub angle_noise_deg: f64,
    /// Probability of dropping each lesion.
    #[arg(long, default_value_t = 0.1)]
    pub miss_rate: f64,
    /// Expected spurious detections per image.
    #[arg(long, default_value_t = 2.0)]
    pub fp_rate: f64,
    /// Score separation of the logistic score model.
    #[arg(long, default_value_t = 2.0)]
    pub score_separation: f64,
    /// Score hits 1 and spurious detections 0.
    #[arg(long)]
    pub fixed_scores: bool,
}

#[derive(Debug, Args)]
pub struct OptimizerArgs {
    /// Initial step size of the line search.
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    /// Iteration budget per fit.
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Stop once a step lowers the loss by less than this.
    #[arg(long, default_value_t = 1e-12)]
    pub eps: f64,
    /// Raster resolution of the reported IoU.
    #[arg(long, default_value_t = 256)]
    pub cells: usize,
}
