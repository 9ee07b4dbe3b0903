//! `tldenoise` command-line front end.
//!
//! Exit status: 0 on success, 1 on runtime failures (I/O, numerical), 2 on
//! usage and configuration errors. Diagnostics and progress go to stderr;
//! stdout only carries requested results.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tldenoise::pipeline::{run_multipass_with_progress, BmValues, DenoiseConfig, Mode};
use tldenoise::video::synth::{self, ClipKind};
use tldenoise::video::{self, Container, Video};

#[derive(Parser)]
#[command(name = "tldenoise", version, about = "Online transform-learning video denoiser")]
struct Cli {
    /// Worker threads for block matching (results do not depend on it).
    #[arg(long, global = true, env = "TLDENOISE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise a grayscale video.
    Denoise(DenoiseArgs),
    /// Add seeded i.i.d. Gaussian noise.
    AddNoise(AddNoiseArgs),
    /// PSNR of a test video against a reference.
    Psnr(PsnrArgs),
    /// Write a deterministic synthetic clip.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Y4m,
    /// Numbered P5 files; the path is a pattern such as `frame%03d.pgm`.
    Pgm,
    /// Headerless 8-bit frames; needs --width and --height.
    Raw,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    A1,
    A2,
    Dct3d,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Static,
    Translate,
    Rotate,
}

#[derive(Clone, Copy, ValueEnum)]
enum BmValuesArg {
    Precleaned,
    Noisy,
}

#[derive(Args)]
struct FormatArgs {
    #[arg(long, value_enum, default_value = "y4m")]
    format: Format,
    /// Frame width for raw input.
    #[arg(long)]
    width: Option<usize>,
    /// Frame height for raw input.
    #[arg(long)]
    height: Option<usize>,
}

impl FormatArgs {
    fn container(&self, format: Format) -> Result<Container, String> {
        Ok(match format {
            Format::Y4m => Container::Y4m,
            Format::Pgm => Container::PgmSequence,
            Format::Raw => match (self.width, self.height) {
                (Some(width), Some(height)) => Container::RawGray { width, height },
                _ => return Err("raw format needs --width and --height".into()),
            },
        })
    }
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    io: FormatArgs,
    /// Noise standard deviation on the 0..255 scale.
    #[arg(long)]
    sigma: f64,
    #[arg(long, value_enum, default_value = "a1")]
    mode: ModeArg,
    #[arg(long)]
    output: PathBuf,
    /// Output container; defaults to the input one.
    #[arg(long, value_enum)]
    output_format: Option<Format>,
    /// Clean reference video (same container as the input).
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Frame-wise PSNR CSV; needs --ref.
    #[arg(long, requires = "reference")]
    metrics_csv: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

/// Overrides for individual configuration fields.
#[derive(Args)]
struct Overrides {
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    /// Mini-batch size.
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    passes: Option<usize>,
    #[arg(long)]
    h1: Option<usize>,
    #[arg(long)]
    h2: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    preclean: Option<bool>,
    #[arg(long, value_enum)]
    bm_values: Option<BmValuesArg>,
    #[arg(long)]
    sparsity_weights: Option<bool>,
    #[arg(long)]
    reset_between_passes: Option<bool>,
    #[arg(long)]
    alternations: Option<usize>,
}

#[derive(Args)]
struct AddNoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    io: FormatArgs,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum)]
    output_format: Option<Format>,
}

#[derive(Args)]
struct PsnrArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[command(flatten)]
    io: FormatArgs,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// `SIDE` or `HEIGHTxWIDTH`.
    #[arg(long, default_value = "64", value_parser = parse_size)]
    size: (usize, usize),
    #[arg(long, default_value_t = 40)]
    frames: usize,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    io: FormatArgs,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .ok()
            .filter(|v| *v > 0)
            .ok_or_else(|| format!("bad size `{s}`"))
    };
    match s.split_once(['x', 'X']) {
        Some((h, w)) => Ok((parse(h)?, parse(w)?)),
        None => {
            let v = parse(s)?;
            Ok((v, v))
        }
    }
}

/// Errors that should map to exit status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn build_config(args: &DenoiseArgs) -> Result<DenoiseConfig> {
    let mode = match args.mode {
        ModeArg::A1 => Mode::A1,
        ModeArg::A2 => Mode::A2,
        ModeArg::Dct3d => Mode::Dct3d,
    };
    let mut c = DenoiseConfig::new(args.sigma).with_mode(mode);
    let o = &args.overrides;
    macro_rules! apply {
        ($($field:ident),*) => {
            $(if let Some(v) = o.$field { c.$field = v; })*
        };
    }
    apply!(
        n1,
        n2,
        m,
        alpha0,
        lambda0,
        rho,
        passes,
        h1,
        h2,
        seed,
        stride,
        preclean,
        sparsity_weights,
        reset_between_passes,
        alternations
    );
    // M follows the patch size unless given explicitly.
    c.batch_size = o.batch_size.unwrap_or(15 * c.m * c.n1 * c.n2);
    if let Some(v) = o.bm_values {
        c.bm_values = match v {
            BmValuesArg::Precleaned => BmValues::Precleaned,
            BmValuesArg::Noisy => BmValues::Noisy,
        };
    }
    c.validate().map_err(|e| usage(e.to_string()))?;
    Ok(c)
}

fn read(path: &Path, container: &Container) -> Result<Video> {
    video::read_video(path, container).with_context(|| format!("reading {}", path.display()))
}

fn write(v: &Video, path: &Path, container: &Container) -> Result<()> {
    video::write_video(v, path, container).with_context(|| format!("writing {}", path.display()))
}

fn write_csv(report: &video::PsnrReport, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    video::write_psnr_csv(report, &mut out)?;
    out.flush()?;
    Ok(())
}

fn denoise(args: DenoiseArgs) -> Result<()> {
    let config = build_config(&args)?;
    let input_c = args.io.container(args.io.format).map_err(usage)?;
    let output_c = args
        .io
        .container(args.output_format.unwrap_or(args.io.format))
        .map_err(usage)?;
    eprintln!("config {}", config.to_json());

    let noisy = read(&args.input, &input_c)?;
    let reference = match &args.reference {
        Some(p) => Some(read(p, &input_c)?),
        None => None,
    };
    let total = noisy.frame_count();
    let denoised = run_multipass_with_progress(&noisy, &config, |p| {
        if p.frames_done == p.frames_total || p.frames_done % 10 == 0 {
            eprintln!(
                "pass {}/{} sigma {:.3}: {}/{} frames",
                p.pass, p.passes, p.sigma, p.frames_done, total
            );
        }
    })?;
    write(&denoised, &args.output, &output_c)?;

    if let Some(reference) = reference {
        let before = video::psnr(&reference, &noisy)?;
        let after = video::psnr(&reference, &denoised)?;
        eprintln!(
            "psnr input {} dB, output {} dB",
            video::format_db(before.video_db),
            video::format_db(after.video_db)
        );
        if let Some(path) = &args.metrics_csv {
            write_csv(&after, path)?;
        }
    }
    Ok(())
}

fn add_noise(args: AddNoiseArgs) -> Result<()> {
    if !(args.sigma >= 0.0) || !args.sigma.is_finite() {
        return Err(usage(format!("sigma = {} must be finite and >= 0", args.sigma)));
    }
    let input_c = args.io.container(args.io.format).map_err(usage)?;
    let output_c = args
        .io
        .container(args.output_format.unwrap_or(args.io.format))
        .map_err(usage)?;
    let clean = read(&args.input, &input_c)?;
    let noisy = video::add_gaussian_noise(&clean, args.sigma, args.seed)?;
    write(&noisy, &args.output, &output_c)
}

fn psnr(args: PsnrArgs) -> Result<()> {
    let c = args.io.container(args.io.format).map_err(usage)?;
    let reference = read(&args.reference, &c)?;
    let test = read(&args.test, &c)?;
    let report = video::psnr(&reference, &test)?;
    println!("{}", video::format_db(report.video_db));
    if let Some(path) = &args.csv {
        write_csv(&report, path)?;
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let c = args.io.container(args.io.format).map_err(usage)?;
    let kind = match args.kind {
        KindArg::Static => ClipKind::Static,
        KindArg::Translate => ClipKind::Translate,
        KindArg::Rotate => ClipKind::Rotate,
    };
    let (h, w) = args.size;
    let clip = synth::generate(kind, h, w, args.frames).map_err(|e| usage(e.to_string()))?;
    write(&clip, &args.output, &c)
}

fn run(cli: Cli) -> Result<()> {
    tldenoise::linalg::use_sequential_kernels();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    match cli.command {
        Command::Denoise(a) => denoise(a),
        Command::AddNoise(a) => add_noise(a),
        Command::Psnr(a) => psnr(a),
        Command::Synth(a) => synth(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
