//! `lanekit`: lane detection, profiling, backend comparison and benchmarks.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 when the work
//! itself fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lanekit_bench::{
    accel_selftest, array_add_bench, compare_backends, compare_images, profile_pipeline, BackendSpec, ProfileOptions,
};
use lanekit_core::pipeline::generate_outputs;
use lanekit_core::synth::{corpus_image, CORPUS_SEEDS};
use lanekit_core::{load_pgm, render_overlay, save_pgm, BackendKind, OffloadMode, Pipeline, Settings};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "lanekit", version, about = "Lane detection with Canny + Hough on float, fixed-point or accelerator backends")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect lines in a PGM image and write them as JSON.
    Detect(DetectArgs),
    /// Time each pipeline phase on one image.
    Profile(ProfileArgs),
    /// Cost-model speedup of backends against a baseline.
    Compare(CompareArgs),
    /// Parallel array-add microbenchmark.
    Bench(BenchArgs),
    /// Check the accelerator simulator against host arithmetic.
    AccelSelftest(SelftestArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Float,
    Fixed,
    Accel,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Float => BackendKind::ScalarFloat,
            BackendArg::Fixed => BackendKind::ScalarFixed,
            BackendArg::Accel => BackendKind::AccelOffload,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Perpixel,
    Batched,
}

impl From<ModeArg> for OffloadMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Perpixel => OffloadMode::PerPixel,
            ModeArg::Batched => OffloadMode::Batched,
        }
    }
}

#[derive(Args)]
struct ConfigArgs {
    /// Key-value config file (see core/config/default.conf).
    #[arg(long, env = "LANEKIT_CONFIG")]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set canny.hysteresis_high=90`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Accelerator offload mode.
    #[arg(long, value_enum)]
    accel_mode: Option<ModeArg>,
}

#[derive(Args)]
struct OutputImageArgs {
    /// Skip writing the edge map and overlay images (the default).
    #[arg(long, overrides_with = "output_image")]
    no_output_image: bool,
    /// Write `<stem>_edges.pgm` and `<stem>_lines.ppm` into --out-dir.
    #[arg(long, overrides_with = "no_output_image")]
    output_image: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    input: PathBuf,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Write lines here instead of stdout.
    #[arg(long)]
    lines: Option<PathBuf>,
    /// Write the input with detected segments drawn in red (PPM).
    #[arg(long)]
    overlay: Option<PathBuf>,
    /// Write the binary edge map (PGM).
    #[arg(long)]
    edges: Option<PathBuf>,
    #[command(flatten)]
    images: OutputImageArgs,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct ProfileArgs {
    input: PathBuf,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Report file, `.json` or `.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    images: OutputImageArgs,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// PGM images; the bundled road scenes when omitted.
    inputs: Vec<PathBuf>,
    /// Baseline backend, `id[@MHz]` with id one of float, fixed, accel,
    /// accel/perpixel, accel/batched.
    #[arg(long, default_value = "fixed")]
    baseline: String,
    /// Backend to compare against the baseline. Repeatable.
    #[arg(long, default_value = "accel")]
    target: Vec<String>,
    /// Clock for specs without an `@MHz` suffix.
    #[arg(long, default_value_t = lanekit_bench::compare::DEFAULT_MHZ)]
    freq: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Elements per array.
    #[arg(long, default_value_t = 100_000_000)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    workers: usize,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Random matmul instances per dataflow.
    #[arg(long, default_value_t = 500)]
    cases: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

/// Where a failure came from, which decides the exit status.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

#[derive(Clone, Copy)]
enum ReportFormat {
    Json,
    Csv,
}

fn report_format(path: &Path) -> Result<ReportFormat, Failure> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(ReportFormat::Json),
        Some("csv") => Ok(ReportFormat::Csv),
        _ => Err(Failure::Usage(format!("--out {}: expected a .json or .csv file", path.display()))),
    }
}

fn settings(cfg: &ConfigArgs, backend: Option<BackendArg>) -> Result<Settings, Failure> {
    let mut s = match &cfg.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    for kv in &cfg.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set {kv:?}: expected KEY=VALUE")))?;
        s.set(k.trim(), v.trim())
            .map_err(|e| Failure::Usage(format!("--set {kv:?}: {}", set_error(e))))?;
    }
    if let Some(b) = backend {
        s.backend = b.into();
    }
    if let Some(m) = cfg.accel_mode {
        s.accel_mode = m.into();
    }
    s.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(s)
}

fn set_error(e: lanekit_core::config::SetError) -> String {
    match e {
        lanekit_core::config::SetError::UnknownKey => "unknown key".into(),
        lanekit_core::config::SetError::BadValue(m) => m,
    }
}

#[derive(Serialize)]
struct LineRecord {
    x1: i32,
    y1: i32,
    x2: i32,
    y2: i32,
    rho: i32,
    theta: u32,
    votes: u32,
}

#[derive(Serialize)]
struct LinesFile {
    schema: u32,
    lines: Vec<LineRecord>,
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn detect(a: DetectArgs) -> Result<(), Failure> {
    let s = settings(&a.config, a.backend)?;
    let img = load_pgm(&a.input)?;
    let mut pipeline = Pipeline::from_settings(&s)?;
    let det = pipeline.detect(&img)?;
    let file = LinesFile {
        schema: 1,
        lines: det
            .lines
            .iter()
            .map(|l| LineRecord {
                x1: l.segment.x1,
                y1: l.segment.y1,
                x2: l.segment.x2,
                y2: l.segment.y2,
                rho: l.polar.rho,
                theta: l.polar.theta,
                votes: l.polar.votes,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&file)? + "\n";
    write_or_print(a.lines.as_deref(), &json)?;
    if let Some(p) = &a.overlay {
        render_overlay(&img, &det.segments(), p)?;
    }
    if let Some(p) = &a.edges {
        save_pgm(&det.edges.out, p)?;
    }
    if a.images.output_image {
        fs::create_dir_all(&a.images.out_dir)?;
        generate_outputs(&img, &det, &a.images.out_dir, &stem(&a.input))?;
    }
    if a.lines.is_some() {
        eprintln!("{} line(s) from {}", det.lines.len(), a.input.display());
    }
    Ok(())
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned())
}

fn profile(a: ProfileArgs) -> Result<(), Failure> {
    let fmt = a.out.as_deref().map(report_format).transpose()?;
    if a.repeats == 0 {
        return Err(Failure::Usage("--repeats must be >= 1".into()));
    }
    let s = settings(&a.config, a.backend)?;
    let opts = ProfileOptions {
        repeats: a.repeats,
        emit_output: a.images.output_image,
        output_dir: a.images.out_dir,
    };
    let r = profile_pipeline(&a.input, &s, s.backend, &opts)?;
    print!("{}", r.to_text());
    if let (Some(path), Some(fmt)) = (&a.out, fmt) {
        let body = match fmt {
            ReportFormat::Json => r.to_json() + "\n",
            ReportFormat::Csv => r.to_csv()?,
        };
        write_or_print(Some(path), &body)?;
    }
    Ok(())
}

fn compare(a: CompareArgs) -> Result<(), Failure> {
    let fmt = a.out.as_deref().map(report_format).transpose()?;
    if !(a.freq.is_finite() && a.freq > 0.0) {
        return Err(Failure::Usage(format!("--freq {}: must be positive", a.freq)));
    }
    let parse = |s: &str| BackendSpec::parse(s, a.freq).map_err(|e| Failure::Usage(e.to_string()));
    let mut specs = vec![parse(&a.baseline)?];
    for t in &a.target {
        specs.push(parse(t)?);
    }
    let s = settings(&a.config, None)?;
    let table = if a.inputs.is_empty() {
        let images: Vec<_> = (0..CORPUS_SEEDS.len()).map(corpus_image).collect();
        compare_images(&images, &s, &specs, 0)?
    } else {
        compare_backends(&a.inputs, &s, &specs, 0)?
    };
    print!("{}", table.to_text());
    if let (Some(path), Some(fmt)) = (&a.out, fmt) {
        let body = match fmt {
            ReportFormat::Json => table.to_json() + "\n",
            ReportFormat::Csv => table.to_csv()?,
        };
        write_or_print(Some(path), &body)?;
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let fmt = a.out.as_deref().map(report_format).transpose()?;
    if a.workers == 0 || !a.n.is_multiple_of(a.workers) {
        return Err(Failure::Usage(format!("--n {} is not divisible by --workers {}", a.n, a.workers)));
    }
    if a.repeats == 0 {
        return Err(Failure::Usage("--repeats must be >= 1".into()));
    }
    let r = array_add_bench(a.n, a.workers, a.repeats)?;
    print!("{}", r.to_text());
    if let (Some(path), Some(fmt)) = (&a.out, fmt) {
        let body = match fmt {
            ReportFormat::Json => r.to_json() + "\n",
            ReportFormat::Csv => r.to_csv()?,
        };
        write_or_print(Some(path), &body)?;
    }
    if !r.matches_oracle {
        return Err(Failure::Runtime("parallel sum differs from the sequential sum".into()));
    }
    Ok(())
}

fn selftest(a: SelftestArgs) -> Result<(), Failure> {
    let fmt = a.out.as_deref().map(report_format).transpose()?;
    if matches!(fmt, Some(ReportFormat::Csv)) {
        return Err(Failure::Usage("accel-selftest writes .json reports only".into()));
    }
    let s = settings(&a.config, None)?;
    let r = accel_selftest(&s.accel, a.cases, a.seed)?;
    print!("{}", r.to_text());
    if let Some(path) = &a.out {
        write_or_print(Some(path), &(r.to_json() + "\n"))?;
    }
    if !r.passed() {
        return Err(Failure::Runtime("accelerator results differ from host arithmetic".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Detect(a) => detect(a),
        Command::Profile(a) => profile(a),
        Command::Compare(a) => compare(a),
        Command::Bench(a) => bench(a),
        Command::AccelSelftest(a) => selftest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nRun `lanekit --help` for usage.");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
