//! `astroproc` — synthetic galaxy analysis pipeline.
//!
//! One command per analysis stage plus `pipeline`, which runs every stage in
//! order and writes an auditable manifest. All randomness is seeded through
//! explicit flags; given identical flags and seeds, artifacts are
//! byte-identical regardless of `--threads`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use astroproc::denoise::{estimate_noise_sigma, nlm_denoise_with_sigma, NlmParams, PatchWeighting};
use astroproc::differential::{
    cap_mask, gradient, gradient_magnitude, gradient_orientation, shape_index,
};
use astroproc::filterbank::{extract_patches, kmeans_filterbank, lgn_image, DoGParams, FilterBank};
use astroproc::image::Image;
use astroproc::morphology::{h_maxima, Connectivity, ExtremaMask};
use astroproc::restore::{gaussian_psf, log_spaced_grid, self_tuned_wiener, wiener_deconvolve, RestoreReport, WienerSpec};
use astroproc::segment::{
    chan_vese, markers_from_histogram, random_walker, split_overlapping, ChanVeseParams,
    ChanVeseResult, LabelMap,
};
use astroproc::spectrum::{default_nbins, power_spectrum_2d, radial_average, Spectrum};

use astroproc_cli::io::{
    encode_ppm_hsv, read_image, write_image, RasterFormat,
};
use astroproc_cli::manifest::{image_sha256, Manifest};
use astroproc_cli::synth::{salt_pepper, synth_galaxy, NoiseSpec, SynthGalaxySpec};
use astroproc_cli::{Error, Result};

#[derive(Parser)]
#[command(name = "astroproc", version, about = "Astronomical image analysis pipeline")]
struct Cli {
    /// Worker threads for internally parallel stages. Output is identical
    /// for any value.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic elliptical galaxy image.
    Synth(SynthArgs),
    /// Regional maxima with contrast at least h (h-maxima transform).
    Hmaxima(HmaximaArgs),
    /// Shape-index map from the Hessian eigenvalues.
    ShapeIndex(ShapeIndexArgs),
    /// Gradient magnitude and orientation.
    Gradients(GradientsArgs),
    /// K-means patch filter bank, optionally on the center-surround image.
    Filterbank(FilterbankArgs),
    /// Non-local means denoising with noise-level estimation.
    Denoise(DenoiseArgs),
    /// Wiener deconvolution with a fixed or self-tuned noise-to-signal ratio.
    Deconvolve(DeconvolveArgs),
    /// Chan-Vese level-set segmentation.
    SegmentCv(SegmentCvArgs),
    /// Random-walker segmentation seeded from histogram tails.
    SegmentRw(SegmentRwArgs),
    /// Split overlapping objects via distance transform and watershed.
    WatershedSplit(WatershedSplitArgs),
    /// 2-D power spectrum and azimuthally averaged radial profile.
    PowerSpectrum(PowerSpectrumArgs),
    /// Run every stage in order, writing one artifact set plus a manifest.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Image width in pixels.
    #[arg(long = "w", default_value_t = 128)]
    width: usize,
    /// Image height in pixels.
    #[arg(long = "h", default_value_t = 128)]
    height: usize,
    /// Profile center x (default: image center).
    #[arg(long)]
    center_x: Option<f64>,
    /// Profile center y (default: image center).
    #[arg(long)]
    center_y: Option<f64>,
    /// Minor/major axis ratio in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    axis_ratio: f64,
    /// Major-axis orientation in radians.
    #[arg(long, default_value_t = 0.0)]
    angle: f64,
    /// Exponential scale length in pixels (default: 4 * max(w, h), a soft
    /// frame-filling glow).
    #[arg(long)]
    scale_length: Option<f64>,
    /// Central surface brightness in (0, 1].
    #[arg(long, default_value_t = 0.55)]
    peak: f64,
    /// Noise model: none, gauss:SIGMA, or sp:AMOUNT.
    #[arg(long, default_value = "none")]
    noise: String,
    /// RNG seed; required whenever noise is requested.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (.f32 or .pgm).
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct HmaximaArgs {
    input: PathBuf,
    /// Contrast height, as a fraction of the dynamic range after rescaling.
    #[arg(long = "h", default_value_t = 0.05)]
    contrast: f64,
    /// Pixel connectivity: 4 or 8.
    #[arg(long, default_value_t = 8)]
    conn: u8,
    /// Skip the rescale to [0, 1]; h is then in raw intensity units.
    #[arg(long)]
    no_rescale: bool,
    /// Output mask (.pgm or .f32; marked pixels are 1).
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct ShapeIndexArgs {
    input: PathBuf,
    /// Gaussian smoothing scale in pixels.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Shape-index map output (.f32 keeps raw values in [-1, 1] with 2.0
    /// marking undefined; .pgm maps [-1, 1] to [0, 1]).
    #[arg(short, long)]
    out: PathBuf,
    /// Also write the spherical-cap mask selected around --cap-target.
    #[arg(long)]
    cap_out: Option<PathBuf>,
    /// Shape-index value to select.
    #[arg(long, default_value_t = 1.0)]
    cap_target: f64,
    /// Half-width of the selection band.
    #[arg(long, default_value_t = 0.05)]
    cap_tol: f64,
}

#[derive(Args)]
struct GradientsArgs {
    input: PathBuf,
    /// Gradient-magnitude output.
    #[arg(long)]
    mag: Option<PathBuf>,
    /// Gradient-orientation output (radians in (-pi, pi]).
    #[arg(long)]
    orient: Option<PathBuf>,
    /// HSV-encoded orientation visualization (.ppm, hue = angle).
    #[arg(long)]
    hsv: Option<PathBuf>,
}

#[derive(Args)]
struct FilterbankArgs {
    input: PathBuf,
    /// Number of filters to learn.
    #[arg(long, default_value_t = 16)]
    k: usize,
    /// Patch side length (odd).
    #[arg(long, default_value_t = 11)]
    patch: usize,
    /// Patch sampling stride.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// K-means RNG seed.
    #[arg(long)]
    seed: u64,
    /// Lloyd iteration cap.
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    /// Learn from the center-surround (difference-of-Gaussians) image
    /// instead of the raw image.
    #[arg(long)]
    lgn: bool,
    /// Base scale (variance) of the center-surround transform.
    #[arg(long, default_value_t = 1.0)]
    dog_t: f64,
    /// Scale increment of the center-surround transform.
    #[arg(long, default_value_t = 1.0)]
    dog_dt: f64,
    /// Tiled montage of the learned filters.
    #[arg(long)]
    montage: PathBuf,
    /// Optional CSV dump: filter,row,col,weight.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct DenoiseArgs {
    input: PathBuf,
    /// fast = uniform patch weighting, slow = Gaussian patch weighting.
    #[arg(long, default_value = "fast")]
    mode: String,
    /// Filtering strength; defaults to 1.15 * sigma (fast) or
    /// 0.8 * sigma (slow) from the estimated noise level.
    #[arg(long = "h")]
    strength: Option<f64>,
    #[arg(long, default_value_t = 3)]
    patch_radius: usize,
    #[arg(long, default_value_t = 10)]
    search_radius: usize,
    /// Spatial Gaussian width for slow mode.
    #[arg(long, default_value_t = 1.5)]
    sigma_patch: f64,
    /// Write the estimated noise sigma to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct DeconvolveArgs {
    input: PathBuf,
    /// Gaussian PSF standard deviation in pixels.
    #[arg(long, default_value_t = 2.0)]
    psf_sigma: f64,
    /// PSF kernel radius (default: ceil(3 * psf_sigma)).
    #[arg(long)]
    psf_radius: Option<usize>,
    /// Fix the noise-to-signal ratio instead of self-tuning.
    #[arg(long)]
    nsr: Option<f64>,
    /// Self-tuning grid lower bound.
    #[arg(long, default_value_t = 1e-4)]
    grid_lo: f64,
    /// Self-tuning grid upper bound.
    #[arg(long, default_value_t = 1.0)]
    grid_hi: f64,
    /// Self-tuning grid size.
    #[arg(long, default_value_t = 25)]
    grid_points: usize,
    /// CSV report of (nsr, whiteness score) candidates.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct SegmentCvArgs {
    input: PathBuf,
    /// Boundary-length weight.
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    /// Inside fidelity weight.
    #[arg(long, default_value_t = 1.0)]
    lambda1: f64,
    /// Outside fidelity weight.
    #[arg(long, default_value_t = 2.0)]
    lambda2: f64,
    /// Artificial time step.
    #[arg(long, default_value_t = 0.5)]
    dt: f64,
    /// Convergence threshold on the mean level-set change.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Per-iteration energy CSV (iteration,energy).
    #[arg(long)]
    energy_csv: Option<PathBuf>,
    /// Output mask (1 = brighter region).
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct SegmentRwArgs {
    input: PathBuf,
    /// Edge-weight sharpness on [0, 1]-normalized intensities.
    #[arg(long, default_value_t = 90.0)]
    beta: f64,
    /// Low histogram-tail quantile (label 1, background).
    #[arg(long, default_value_t = 0.05)]
    low_q: f64,
    /// High histogram-tail quantile (label 2, object).
    #[arg(long, default_value_t = 0.95)]
    high_q: f64,
    /// Write per-label probability images to PREFIX<label>.f32.
    #[arg(long)]
    prob_prefix: Option<String>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct WatershedSplitArgs {
    input: PathBuf,
    /// Foreground threshold on the rescaled image.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Minimum separation between distance-transform peaks.
    #[arg(long, default_value_t = 5.0)]
    min_distance: f64,
    /// Write the Euclidean distance field.
    #[arg(long)]
    distance_out: Option<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct PowerSpectrumArgs {
    input: PathBuf,
    /// DC-centered 2-D power image.
    #[arg(long)]
    power_out: Option<PathBuf>,
    /// Radial profile CSV: bin,freq,power,count.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Radial bin count (default: floor(min(W, H) / 2)).
    #[arg(long)]
    nbins: Option<usize>,
    /// Invert the grayscale (1 - I) before transforming.
    #[arg(long)]
    invert: bool,
    /// Apply a Hann window before transforming (leakage control).
    #[arg(long)]
    hann: bool,
}

#[derive(Args)]
struct PipelineArgs {
    /// Input image; omit with --demo.
    input: Option<PathBuf>,
    /// Output directory for stage artifacts and the manifest.
    #[arg(long)]
    outdir: PathBuf,
    /// Seed for the stages that use randomness (k-means, noise injection).
    #[arg(long)]
    seed: Option<u64>,
    /// Run on the built-in synthetic galaxy.
    #[arg(long)]
    demo: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == 0 {
        eprintln!("usage error: --threads must be >= 1");
        return ExitCode::from(2);
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("failed to build thread pool: {e}");
            return ExitCode::from(3);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(args) => cmd_synth(args),
        Command::Hmaxima(args) => cmd_hmaxima(args),
        Command::ShapeIndex(args) => cmd_shape_index(args),
        Command::Gradients(args) => cmd_gradients(args),
        Command::Filterbank(args) => cmd_filterbank(args),
        Command::Denoise(args) => cmd_denoise(args),
        Command::Deconvolve(args) => cmd_deconvolve(args),
        Command::SegmentCv(args) => cmd_segment_cv(args),
        Command::SegmentRw(args) => cmd_segment_rw(args),
        Command::WatershedSplit(args) => cmd_watershed_split(args),
        Command::PowerSpectrum(args) => cmd_power_spectrum(args),
        Command::Pipeline(args) => cmd_pipeline(args),
    }
}

/// Resolve an output format from the file extension.
fn format_for(path: &Path) -> Result<RasterFormat> {
    RasterFormat::from_extension(path).ok_or_else(|| {
        Error::Usage(format!(
            "cannot infer format for {} (use a .pgm or .f32 extension)",
            path.display()
        ))
    })
}

fn save_image(path: &Path, img: &Image) -> Result<()> {
    write_image(path, img, format_for(path)?)
}

fn save_mask(path: &Path, mask: &ExtremaMask) -> Result<()> {
    let img = Image::from_fn(mask.width(), mask.height(), |x, y| f64::from(mask.get(x, y)))?;
    save_image(path, &img)
}

/// Labels are written exactly through .f32; .pgm scales them over the full
/// 8-bit range for visualization.
fn save_labels(path: &Path, labels: &LabelMap) -> Result<()> {
    let max = labels.labels().iter().copied().max().unwrap_or(0).max(1);
    let img = match format_for(path)? {
        RasterFormat::F32Raw => {
            Image::from_fn(labels.width(), labels.height(), |x, y| f64::from(labels.get(x, y)))?
        }
        RasterFormat::Pgm8 => Image::from_fn(labels.width(), labels.height(), |x, y| {
            f64::from(labels.get(x, y)) / f64::from(max)
        })?,
    };
    save_image(path, &img)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text.as_bytes())?;
    Ok(())
}

fn parse_noise(text: &str) -> Result<NoiseSpec> {
    if text == "none" {
        return Ok(NoiseSpec::None);
    }
    if let Some(rest) = text.strip_prefix("gauss:") {
        let sigma: f64 = rest
            .parse()
            .map_err(|_| Error::Usage(format!("invalid noise sigma {rest:?}")))?;
        return Ok(NoiseSpec::Gaussian { sigma });
    }
    if let Some(rest) = text.strip_prefix("sp:") {
        let amount: f64 = rest
            .parse()
            .map_err(|_| Error::Usage(format!("invalid salt-pepper amount {rest:?}")))?;
        return Ok(NoiseSpec::SaltPepper { amount });
    }
    Err(Error::Usage(format!(
        "unknown noise spec {text:?} (expected none, gauss:SIGMA, or sp:AMOUNT)"
    )))
}

fn parse_conn(value: u8) -> Result<Connectivity> {
    match value {
        4 => Ok(Connectivity::Four),
        8 => Ok(Connectivity::Eight),
        other => Err(Error::Usage(format!("connectivity must be 4 or 8, got {other}"))),
    }
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let noise = parse_noise(&args.noise)?;
    let seed = match (noise, args.seed) {
        (NoiseSpec::None, s) => s.unwrap_or(0),
        (_, Some(s)) => s,
        (_, None) => {
            return Err(Error::Usage("--seed is required when noise is requested".to_string()))
        }
    };
    let spec = SynthGalaxySpec {
        width: args.width,
        height: args.height,
        center: (
            args.center_x.unwrap_or((args.width as f64 - 1.0) / 2.0),
            args.center_y.unwrap_or((args.height as f64 - 1.0) / 2.0),
        ),
        axis_ratio: args.axis_ratio,
        position_angle: args.angle,
        scale_length: args
            .scale_length
            .unwrap_or(4.0 * args.width.max(args.height) as f64),
        peak: args.peak,
        noise,
        seed,
    };
    let img = synth_galaxy(&spec)?;
    save_image(&args.out, &img)
}

fn cmd_hmaxima(args: HmaximaArgs) -> Result<()> {
    let conn = parse_conn(args.conn)?;
    let img = read_image(&args.input)?;
    let working = if args.no_rescale { img } else { img.rescale_unit() };
    let mask = h_maxima(&working, args.contrast, conn)?;
    save_mask(&args.out, &mask)
}

fn cmd_shape_index(args: ShapeIndexArgs) -> Result<()> {
    let img = read_image(&args.input)?;
    let si = shape_index(&img, args.sigma)?;
    match format_for(&args.out)? {
        RasterFormat::F32Raw => save_image(&args.out, si.values())?,
        RasterFormat::Pgm8 => save_image(&args.out, &si.values().map(|s| (s + 1.0) / 2.0))?,
    }
    if let Some(cap_path) = &args.cap_out {
        let caps = cap_mask(&si, args.cap_target, args.cap_tol)?;
        save_mask(cap_path, &caps)?;
    }
    Ok(())
}

fn cmd_gradients(args: GradientsArgs) -> Result<()> {
    if args.mag.is_none() && args.orient.is_none() && args.hsv.is_none() {
        return Err(Error::Usage(
            "nothing to do: pass at least one of --mag, --orient, --hsv".to_string(),
        ));
    }
    let img = read_image(&args.input)?;
    let gf = gradient(&img)?;
    let magnitude = gradient_magnitude(&gf);
    let orientation = gradient_orientation(&gf);
    if let Some(path) = &args.mag {
        save_image(path, &magnitude)?;
    }
    if let Some(path) = &args.orient {
        save_image(path, &orientation)?;
    }
    if let Some(path) = &args.hsv {
        let bytes = encode_ppm_hsv(&orientation, Some(&magnitude.rescale_unit()));
        std::fs::write(path, bytes)?;
    }
    Ok(())
}

/// Tile the learned filters into one image, each rescaled to [0, 1], with a
/// one-pixel separator (level 0.5).
fn bank_montage(bank: &FilterBank) -> Result<Image> {
    let k = bank.k();
    let cols = (k as f64).sqrt().ceil() as usize;
    let rows = k.div_ceil(cols);
    let side = bank.patch();
    let (w, h) = (cols * (side + 1) - 1, rows * (side + 1) - 1);
    let mut out = Image::from_vec(w, h, vec![0.5; w * h])?;
    for (idx, kernel) in bank.centroids().iter().enumerate() {
        let (lo, hi) = kernel
            .weights()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let (r, c) = (idx / cols, idx % cols);
        for j in 0..side {
            for i in 0..side {
                let v = kernel.get(i, j);
                let norm = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
                out.set(c * (side + 1) + i, r * (side + 1) + j, norm);
            }
        }
    }
    Ok(out)
}

fn cmd_filterbank(args: FilterbankArgs) -> Result<()> {
    let img = read_image(&args.input)?;
    let source = if args.lgn {
        lgn_image(&img, &DoGParams { t: args.dog_t, dt: args.dog_dt })?
    } else {
        img
    };
    let patches = extract_patches(&source, args.patch, args.stride)?;
    if patches.is_empty() {
        return Err(Error::Data("no usable patches (input has no variance)".to_string()));
    }
    let bank = kmeans_filterbank(&patches, args.k, args.seed, args.max_iter)?;
    save_image(&args.montage, &bank_montage(&bank)?)?;
    if let Some(csv_path) = &args.csv {
        let mut csv = String::from("filter,row,col,weight\n");
        for (idx, kernel) in bank.centroids().iter().enumerate() {
            for row in 0..kernel.height() {
                for col in 0..kernel.width() {
                    csv.push_str(&format!("{idx},{row},{col},{}\n", kernel.get(col, row)));
                }
            }
        }
        write_text(csv_path, &csv)?;
    }
    Ok(())
}

fn cmd_denoise(args: DenoiseArgs) -> Result<()> {
    let img = read_image(&args.input)?;
    let sigma = estimate_noise_sigma(&img)?;
    let (weighting, default_factor) = match args.mode.as_str() {
        "fast" => (PatchWeighting::Uniform, 1.15),
        "slow" => (PatchWeighting::GaussianSpatial { sigma_patch: args.sigma_patch }, 0.8),
        other => return Err(Error::Usage(format!("unknown mode {other:?} (fast or slow)"))),
    };
    let h = args.strength.unwrap_or(default_factor * sigma);
    if !(h > 0.0) {
        return Err(Error::Data(format!(
            "non-positive filtering strength {h} (estimated sigma {sigma}); pass --h explicitly"
        )));
    }
    let params = NlmParams {
        patch_radius: args.patch_radius,
        search_radius: args.search_radius,
        h,
        weighting,
    };
    let out = nlm_denoise_with_sigma(&img, &params, sigma)?;
    save_image(&args.out, &out)?;
    println!("noise sigma estimate: {sigma}");
    if let Some(report) = &args.report {
        write_text(report, &format!("{sigma}\n"))?;
    }
    Ok(())
}

fn restore_report_csv(report: &RestoreReport) -> String {
    let mut csv = String::from("nsr,score\n");
    for (nsr, score) in &report.candidates {
        csv.push_str(&format!("{nsr},{score}\n"));
    }
    csv
}

fn cmd_deconvolve(args: DeconvolveArgs) -> Result<()> {
    let img = read_image(&args.input)?;
    let radius = args.psf_radius.unwrap_or((3.0 * args.psf_sigma).ceil() as usize);
    let psf = gaussian_psf(args.psf_sigma, radius)?;
    let restored = match args.nsr {
        Some(nsr) => {
            let spec = WienerSpec::new(psf, nsr)?;
            let out = wiener_deconvolve(&img, &spec)?;
            if let Some(report) = &args.report {
                write_text(report, &format!("nsr,score\n{nsr},\n"))?;
            }
            out
        }
        None => {
            if !(args.grid_lo > 0.0 && args.grid_hi > args.grid_lo && args.grid_points >= 2) {
                return Err(Error::Usage(
                    "grid must satisfy 0 < lo < hi with at least 2 points".to_string(),
                ));
            }
            let grid = log_spaced_grid(args.grid_lo, args.grid_hi, args.grid_points);
            let (out, report) = self_tuned_wiener(&img, &psf, &grid)?;
            println!("self-tuned nsr: {}", report.chosen_nsr);
            if let Some(path) = &args.report {
                write_text(path, &restore_report_csv(&report))?;
            }
            out
        }
    };
    save_image(&args.out, &restored)
}

fn energy_csv(result: &ChanVeseResult) -> String {
    let mut csv = String::from("iteration,energy\n");
    for (i, e) in result.energy_trace.iter().enumerate() {
        csv.push_str(&format!("{},{e}\n", i + 1));
    }
    csv
}

fn cmd_segment_cv(args: SegmentCvArgs) -> Result<()> {
    let img = read_image(&args.input)?.rescale_unit();
    let params = ChanVeseParams {
        mu: args.mu,
        lambda1: args.lambda1,
        lambda2: args.lambda2,
        dt: args.dt,
        tol: args.tol,
        max_iter: args.max_iter,
    };
    let result = chan_vese(&img, &params)?;
    println!("chan-vese converged in {} iterations", result.iterations_run);
    save_labels(&args.out, &result.mask)?;
    if let Some(path) = &args.energy_csv {
        write_text(path, &energy_csv(&result))?;
    }
    Ok(())
}

fn cmd_segment_rw(args: SegmentRwArgs) -> Result<()> {
    let img = read_image(&args.input)?;
    let markers = markers_from_histogram(&img, args.low_q, args.high_q)?;
    let (labels, probabilities) = random_walker(&img, &markers, args.beta)?;
    save_labels(&args.out, &labels)?;
    if let Some(prefix) = &args.prob_prefix {
        for (idx, plane) in probabilities.iter().enumerate() {
            let path = PathBuf::from(format!("{prefix}{}.f32", idx + 1));
            save_image(&path, plane)?;
        }
    }
    Ok(())
}

fn cmd_watershed_split(args: WatershedSplitArgs) -> Result<()> {
    let img = read_image(&args.input)?.rescale_unit();
    let mut mask = LabelMap::new(img.width(), img.height())?;
    for y in 0..img.height() {
        for x in 0..img.width() {
            if img.get(x, y) >= args.threshold {
                mask.set(x, y, 1);
            }
        }
    }
    let (labels, distance) = split_overlapping(&mask, args.min_distance)?;
    save_labels(&args.out, &labels)?;
    if let Some(path) = &args.distance_out {
        save_image(path, &distance)?;
    }
    Ok(())
}

fn spectrum_csv(s: &Spectrum) -> String {
    let mut csv = String::from("bin,freq,power,count\n");
    for b in 0..s.radial_freq.len() {
        csv.push_str(&format!("{b},{},{},{}\n", s.radial_freq[b], s.radial_power[b], s.counts[b]));
    }
    csv
}

fn hann_window(img: &Image) -> Image {
    let (w, h) = (img.width(), img.height());
    let win = |i: usize, n: usize| {
        if n == 1 {
            1.0
        } else {
            let t = i as f64 / (n as f64 - 1.0);
            0.5 * (1.0 - (2.0 * std::f64::consts::PI * t).cos())
        }
    };
    Image::from_fn(w, h, |x, y| img.get(x, y) * win(x, w) * win(y, h)).expect("valid dims")
}

fn cmd_power_spectrum(args: PowerSpectrumArgs) -> Result<()> {
    if args.power_out.is_none() && args.csv.is_none() {
        return Err(Error::Usage("nothing to do: pass --power-out and/or --csv".to_string()));
    }
    let mut img = read_image(&args.input)?;
    if args.invert {
        img = img.map(|v| 1.0 - v);
    }
    if args.hann {
        img = hann_window(&img);
    }
    let power = power_spectrum_2d(&img);
    if let Some(path) = &args.power_out {
        save_image(path, &power)?;
    }
    if let Some(path) = &args.csv {
        let nbins = args.nbins.unwrap_or_else(|| default_nbins(img.width(), img.height()));
        let spectrum = radial_average(&power, nbins)?;
        write_text(path, &spectrum_csv(&spectrum))?;
    }
    Ok(())
}

/// Built-in demo scene: a 96x96 elliptical galaxy with mild Gaussian noise.
fn demo_galaxy(seed: u64) -> Result<Image> {
    synth_galaxy(&SynthGalaxySpec {
        width: 96,
        height: 96,
        center: (47.5, 47.5),
        axis_ratio: 0.7,
        position_angle: 0.6,
        scale_length: 12.0,
        peak: 0.9,
        noise: NoiseSpec::Gaussian { sigma: 0.1 },
        seed,
    })
}

/// Demo scene for the overlap-splitting stage: two blended galaxies.
fn demo_pair(seed: u64) -> Result<Image> {
    let a = synth_galaxy(&SynthGalaxySpec {
        width: 96,
        height: 96,
        center: (38.0, 48.0),
        axis_ratio: 1.0,
        position_angle: 0.0,
        scale_length: 9.0,
        peak: 0.9,
        noise: NoiseSpec::None,
        seed,
    })?;
    let b = synth_galaxy(&SynthGalaxySpec {
        width: 96,
        height: 96,
        center: (60.0, 48.0),
        axis_ratio: 1.0,
        position_angle: 0.0,
        scale_length: 9.0,
        peak: 0.85,
        noise: NoiseSpec::None,
        seed,
    })?;
    Ok(Image::from_fn(96, 96, |x, y| (a.get(x, y) + b.get(x, y)).min(1.0))?)
}

fn cmd_pipeline(args: PipelineArgs) -> Result<()> {
    let (input, seed) = if args.demo {
        let seed = args.seed.unwrap_or(7);
        (demo_galaxy(seed)?, seed)
    } else {
        let path = args
            .input
            .as_ref()
            .ok_or_else(|| Error::Usage("pipeline needs an input image or --demo".to_string()))?;
        let seed = args
            .seed
            .ok_or_else(|| Error::Usage("--seed is required without --demo".to_string()))?;
        (read_image(path)?, seed)
    };
    std::fs::create_dir_all(&args.outdir)?;
    let manifest = Manifest::create(&args.outdir)?;
    let input_hash = image_sha256(&input);
    let out = |name: &str| args.outdir.join(name);

    let path = out("input.f32");
    save_image(&path, &input)?;
    manifest.record(
        "input",
        &input_hash,
        &path,
        serde_json::json!({"demo": args.demo, "seed": seed}),
    )?;

    // Extrema analysis.
    let rescaled = input.rescale_unit();
    let mask = h_maxima(&rescaled, 0.05, Connectivity::Eight)?;
    let path = out("hmaxima.pgm");
    save_mask(&path, &mask)?;
    manifest.record(
        "hmaxima",
        &input_hash,
        &path,
        serde_json::json!({"h": 0.05, "connectivity": 8, "rescaled": true}),
    )?;

    // Shape index.
    let si = shape_index(&input, 1.0)?;
    let path = out("shape_index.f32");
    save_image(&path, si.values())?;
    manifest.record("shape-index", &input_hash, &path, serde_json::json!({"sigma": 1.0}))?;

    // Gradients.
    let gf = gradient(&input)?;
    let magnitude = gradient_magnitude(&gf);
    let orientation = gradient_orientation(&gf);
    let path = out("gradient_magnitude.f32");
    save_image(&path, &magnitude)?;
    manifest.record("gradients/magnitude", &input_hash, &path, serde_json::json!({}))?;
    let path = out("gradient_orientation.f32");
    save_image(&path, &orientation)?;
    manifest.record("gradients/orientation", &input_hash, &path, serde_json::json!({}))?;
    let path = out("gradient_orientation.ppm");
    std::fs::write(&path, encode_ppm_hsv(&orientation, Some(&magnitude.rescale_unit())))?;
    manifest.record("gradients/hsv", &input_hash, &path, serde_json::json!({}))?;

    // Center-surround image and the two filter banks.
    let dog = DoGParams { t: 1.0, dt: 1.0 };
    let lgn = lgn_image(&input, &dog)?;
    let path = out("lgn.f32");
    save_image(&path, &lgn)?;
    manifest.record("lgn", &input_hash, &path, serde_json::json!({"t": 1.0, "dt": 1.0}))?;
    for (stage, source, name) in [("filterbank/raw", &input, "bank_raw.f32"), ("filterbank/lgn", &lgn, "bank_lgn.f32")] {
        let patches = extract_patches(source, 11, 1)?;
        let bank = kmeans_filterbank(&patches, 16, seed, 50)?;
        let path = out(name);
        save_image(&path, &bank_montage(&bank)?)?;
        manifest.record(
            stage,
            &image_sha256(source),
            &path,
            serde_json::json!({"k": 16, "patch": 11, "stride": 1, "seed": seed, "max_iter": 50}),
        )?;
    }

    // Non-local means denoising.
    let sigma = estimate_noise_sigma(&input)?;
    let nlm = NlmParams { patch_radius: 3, search_radius: 10, h: 1.15 * sigma, weighting: PatchWeighting::Uniform };
    let denoised = nlm_denoise_with_sigma(&input, &nlm, sigma)?;
    let path = out("denoised.f32");
    save_image(&path, &denoised)?;
    write_text(&out("sigma_estimate.txt"), &format!("{sigma}\n"))?;
    manifest.record(
        "denoise",
        &input_hash,
        &path,
        serde_json::json!({"sigma_estimate": sigma, "h": 1.15 * sigma, "patch_radius": 3, "search_radius": 10, "mode": "fast"}),
    )?;

    // Self-tuned restoration.
    let psf = gaussian_psf(2.0, 6)?;
    let grid = log_spaced_grid(1e-4, 1.0, 25);
    let (restored, report) = self_tuned_wiener(&input, &psf, &grid)?;
    let path = out("restored.f32");
    save_image(&path, &restored)?;
    write_text(&out("restore_report.csv"), &restore_report_csv(&report))?;
    manifest.record(
        "restore",
        &input_hash,
        &path,
        serde_json::json!({"psf_sigma": 2.0, "psf_radius": 6, "chosen_nsr": report.chosen_nsr, "grid_points": 25}),
    )?;

    // Chan-Vese segmentation.
    let cv = chan_vese(&rescaled, &ChanVeseParams::default())?;
    let path = out("cv_mask.pgm");
    save_labels(&path, &cv.mask)?;
    write_text(&out("cv_energy.csv"), &energy_csv(&cv))?;
    manifest.record(
        "segment-cv",
        &input_hash,
        &path,
        serde_json::json!({"mu": 0.5, "lambda1": 1.0, "lambda2": 2.0, "dt": 0.5, "tol": 1e-3, "max_iter": 200, "iterations_run": cv.iterations_run}),
    )?;

    // Random walker on the salt-and-pepper scenario.
    let rw_input = salt_pepper(&rescaled, 0.05, seed.wrapping_add(1))?;
    let path = out("rw_input.f32");
    save_image(&path, &rw_input)?;
    manifest.record(
        "segment-rw/input",
        &input_hash,
        &path,
        serde_json::json!({"noise": "sp:0.05", "seed": seed.wrapping_add(1)}),
    )?;
    let markers = markers_from_histogram(&rw_input, 0.05, 0.95)?;
    let (rw_labels, _) = random_walker(&rw_input, &markers, 90.0)?;
    let path = out("rw_labels.pgm");
    save_labels(&path, &rw_labels)?;
    manifest.record(
        "segment-rw",
        &image_sha256(&rw_input),
        &path,
        serde_json::json!({"beta": 90.0, "low_q": 0.05, "high_q": 0.95}),
    )?;

    // Power spectrum.
    let power = power_spectrum_2d(&input);
    let path = out("power2d.f32");
    save_image(&path, &power)?;
    let spectrum = radial_average(&power, default_nbins(input.width(), input.height()))?;
    write_text(&out("radial_spectrum.csv"), &spectrum_csv(&spectrum))?;
    manifest.record(
        "power-spectrum",
        &input_hash,
        &path,
        serde_json::json!({"nbins": default_nbins(input.width(), input.height()), "invert": false, "hann": false}),
    )?;

    // Overlap splitting on a two-object scene.
    let split_scene = if args.demo { demo_pair(seed)? } else { rescaled.clone() };
    let mut split_mask = LabelMap::new(split_scene.width(), split_scene.height())?;
    let threshold = 0.2;
    for y in 0..split_scene.height() {
        for x in 0..split_scene.width() {
            if split_scene.get(x, y) >= threshold {
                split_mask.set(x, y, 1);
            }
        }
    }
    let (split_labels, distance) = split_overlapping(&split_mask, 7.0)?;
    let path = out("split_labels.pgm");
    save_labels(&path, &split_labels)?;
    save_image(&out("split_distance.f32"), &distance)?;
    manifest.record(
        "watershed-split",
        &image_sha256(&split_scene),
        &path,
        serde_json::json!({"threshold": threshold, "min_distance": 7.0, "two_object_demo": args.demo}),
    )?;

    println!("pipeline complete: {} stages in {}", 14, args.outdir.display());
    Ok(())
}
