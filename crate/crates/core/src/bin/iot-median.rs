use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use iot_median::instrument::{csv_row, CSV_HEADER};
use iot_median::{
    counters_report, filter_image, gen_image, huang_filter, oracle_filter, percentile_rank, read_pgm,
    write_pgm, Error, FilterConfig, FrequencyProfile, GrayImage, ImageKind, OpCounters, OracleKind,
    ProfileSource, ReportFormat, TopologyChoice, UpdatePolicy,
};

#[derive(Parser)]
#[command(name = "iot-median", version, about = "Running median and order-statistic filters for gray images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter one image with one configuration.
    Filter {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        filter: FilterArgs,
        /// Output PGM path.
        #[arg(long, short)]
        output: PathBuf,
        /// Use a reference algorithm instead of the tree filter.
        #[arg(long, value_enum, default_value_t = Oracle::None)]
        oracle: Oracle,
        /// Write the operation counters as CSV.
        #[arg(long)]
        counters: Option<PathBuf>,
        /// Print the phase table to stdout.
        #[arg(long)]
        report: bool,
    },
    /// Sweep window sizes and emit one counters CSV row per run.
    Bench {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        filter: FilterArgs,
        /// Comma-separated window sizes.
        #[arg(long, value_delimiter = ',', default_value = "11,21,31,41,51")]
        windows: Vec<usize>,
        /// Also run a reference algorithm at each size (only huang is counted).
        #[arg(long, value_enum, default_value_t = Oracle::None)]
        oracle: Oracle,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        counters: Option<PathBuf>,
    },
    /// Filter with the tree and a reference algorithm and report the largest
    /// pixel difference. Exits with 1 if it exceeds the tolerated error.
    Compare {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long, value_enum, default_value_t = Oracle::Sort)]
        oracle: Oracle,
        /// Write the tree filter's counters as CSV.
        #[arg(long)]
        counters: Option<PathBuf>,
    },
    /// Write a synthetic test image.
    Gen {
        #[command(flatten)]
        source: Source,
        #[arg(long, short)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct Source {
    /// Input PGM (P5) image.
    #[arg(long, short, conflicts_with = "gen")]
    input: Option<PathBuf>,
    /// Synthetic image kind, used instead of --input.
    #[arg(long, value_enum)]
    gen: Option<GenKind>,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    /// Bit depth of generated images.
    #[arg(long, default_value_t = 8)]
    depth: u8,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// normal_noise mean (default half the range).
    #[arg(long)]
    mean: Option<f64>,
    /// normal_noise deviation (default a sixth of the range).
    #[arg(long)]
    sigma: Option<f64>,
    /// sine_diag period along the diagonal.
    #[arg(long, default_value_t = 100.0)]
    period: f64,
    /// constant value.
    #[arg(long, default_value_t = 0)]
    value: u16,
    /// smooth_noise blur radius.
    #[arg(long, default_value_t = 4)]
    radius: usize,
}

#[derive(Args)]
struct FilterArgs {
    /// Odd window side.
    #[arg(long, short, default_value_t = 3)]
    window: usize,
    /// 1-based rank within the window (default: median).
    #[arg(long, conflicts_with = "percentile")]
    rank: Option<u32>,
    /// Percentile in [0, 100], converted to rank ceil(p/100 * n^2).
    #[arg(long)]
    percentile: Option<f64>,
    /// Largest tolerated error in gray values; 1 is exact.
    #[arg(long, default_value_t = 1)]
    max_error: u32,
    #[arg(long, value_enum, default_value_t = Mode::Uniform)]
    mode: Mode,
    /// `auto` or a file of whitespace-separated weights (adaptive mode only).
    #[arg(long)]
    profile: Option<String>,
    /// Horizontal bands filtered in parallel.
    #[arg(long, default_value_t = 1)]
    bands: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Uniform,
    Adaptive,
    Unconditional,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Oracle {
    None,
    Sort,
    Quickselect,
    Huang,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum GenKind {
    NormalNoise,
    SineDiag,
    Constant,
    TwoMode,
    SmoothNoise,
    Equalized,
}

/// Failure classes mapped to exit statuses.
enum Failure {
    Usage(String),
    Violation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("iot-median: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("iot-median: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> CmdResult {
    match command {
        Command::Filter {
            source,
            filter,
            output,
            oracle,
            counters,
            report,
        } => cmd_filter(&source, &filter, &output, oracle, counters.as_deref(), report),
        Command::Bench {
            source,
            filter,
            windows,
            oracle,
            counters,
        } => cmd_bench(&source, &filter, &windows, oracle, counters.as_deref()),
        Command::Compare {
            source,
            filter,
            oracle,
            counters,
        } => cmd_compare(&source, &filter, oracle, counters.as_deref()),
        Command::Gen { source, output } => {
            if source.input.is_some() || source.gen.is_none() {
                return Err(Failure::Usage("gen needs --gen <kind>".into()));
            }
            write_pgm(&load(&source)?, output)?;
            Ok(())
        }
    }
}

fn load(source: &Source) -> Result<GrayImage, Failure> {
    match (&source.input, source.gen) {
        (Some(path), None) => Ok(read_pgm(path)?),
        (None, Some(kind)) => {
            let kind = match kind {
                GenKind::NormalNoise => ImageKind::NormalNoise {
                    mean: source.mean,
                    sigma: source.sigma,
                },
                GenKind::SineDiag => ImageKind::SineDiag { period: source.period },
                GenKind::Constant => ImageKind::Constant { value: source.value },
                GenKind::TwoMode => ImageKind::TwoMode,
                GenKind::SmoothNoise => ImageKind::SmoothNoise { radius: source.radius },
                GenKind::Equalized => ImageKind::Equalized,
            };
            Ok(gen_image(kind, source.width, source.height, source.depth, source.seed)?)
        }
        (None, None) => Err(Failure::Usage("one of --input or --gen is required".into())),
        (Some(_), Some(_)) => Err(Failure::Usage("--input and --gen are mutually exclusive".into())),
    }
}

fn config_for(args: &FilterArgs, window: usize) -> Result<FilterConfig, Failure> {
    let mut cfg = FilterConfig::median(window)
        .with_max_error(args.max_error)
        .with_bands(args.bands);
    if let Some(r) = args.rank {
        cfg = cfg.with_rank(r);
    } else if let Some(p) = args.percentile {
        cfg = cfg.with_rank(percentile_rank(window, p)?);
    }
    match args.mode {
        Mode::Uniform => {}
        Mode::Unconditional => cfg = cfg.with_update(UpdatePolicy::Unconditional),
        Mode::Adaptive => {
            let source = match args.profile.as_deref() {
                None | Some("auto") => ProfileSource::Auto,
                Some(path) => ProfileSource::Given(FrequencyProfile::parse(&fs::read_to_string(path)?)?),
            };
            cfg = cfg.with_topology(TopologyChoice::Adaptive(source));
        }
    }
    if args.profile.is_some() && !matches!(args.mode, Mode::Adaptive) {
        return Err(Failure::Usage("--profile requires --mode adaptive".into()));
    }
    Ok(cfg)
}

fn mode_label(args: &FilterArgs) -> &'static str {
    match args.mode {
        Mode::Uniform => "iot_uniform",
        Mode::Adaptive => "iot_adaptive",
        Mode::Unconditional => "iot_unconditional",
    }
}

fn oracle_kind(oracle: Oracle) -> Option<OracleKind> {
    match oracle {
        Oracle::None => None,
        Oracle::Sort => Some(OracleKind::FullSort),
        Oracle::Quickselect => Some(OracleKind::Quickselect),
        Oracle::Huang => Some(OracleKind::Huang),
    }
}

fn write_csv(path: Option<&Path>, rows: &[(String, OpCounters)]) -> CmdResult {
    let text = counters_report(rows, ReportFormat::Csv);
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_filter(
    source: &Source,
    args: &FilterArgs,
    output: &Path,
    oracle: Oracle,
    counters: Option<&Path>,
    report: bool,
) -> CmdResult {
    let image = load(source)?;
    let cfg = config_for(args, args.window)?;
    let rank = cfg.effective_rank();
    let (out, label, tally) = match oracle_kind(oracle) {
        None => {
            let (out, c) = filter_image(&image, &cfg)?;
            (out, mode_label(args).to_string(), Some(c))
        }
        Some(OracleKind::Huang) => {
            let (out, c) = huang_filter(&image, args.window, rank)?;
            (out, "huang".to_string(), Some(c))
        }
        Some(kind) => (oracle_filter(&image, args.window, rank, kind)?, format!("{kind:?}").to_lowercase(), None),
    };
    write_pgm(&out, output)?;
    if let Some(c) = tally {
        let rows = [(label, c)];
        if let Some(path) = counters {
            write_csv(Some(path), &rows)?;
        }
        if report {
            print!("{}", counters_report(&rows, ReportFormat::Human));
        }
    } else if counters.is_some() || report {
        return Err(Failure::Usage("this oracle is not instrumented; drop --counters/--report".into()));
    }
    Ok(())
}

fn cmd_bench(source: &Source, args: &FilterArgs, windows: &[usize], oracle: Oracle, counters: Option<&Path>) -> CmdResult {
    if windows.is_empty() {
        return Err(Failure::Usage("--windows is empty".into()));
    }
    if args.rank.is_some() {
        return Err(Failure::Usage("bench sweeps window sizes; use --percentile instead of --rank".into()));
    }
    let image = load(source)?;
    let mut rows = Vec::new();
    for &n in windows {
        let cfg = config_for(args, n)?;
        let start = Instant::now();
        let (_, c) = filter_image(&image, &cfg)?;
        eprintln!("{} n={n}: {:.3} s", mode_label(args), start.elapsed().as_secs_f64());
        rows.push((format!("{}_n{n}", mode_label(args)), c));
        if let Some(kind) = oracle_kind(oracle) {
            let start = Instant::now();
            if kind == OracleKind::Huang {
                let (_, c) = huang_filter(&image, n, cfg.effective_rank())?;
                rows.push((format!("huang_n{n}"), c));
            } else {
                oracle_filter(&image, n, cfg.effective_rank(), kind)?;
            }
            eprintln!("{} n={n}: {:.3} s", format!("{kind:?}").to_lowercase(), start.elapsed().as_secs_f64());
        }
    }
    write_csv(counters, &rows)
}

fn cmd_compare(source: &Source, args: &FilterArgs, oracle: Oracle, counters: Option<&Path>) -> CmdResult {
    let kind = oracle_kind(oracle).ok_or_else(|| Failure::Usage("compare needs an oracle other than none".into()))?;
    let image = load(source)?;
    let cfg = config_for(args, args.window)?;
    let (out, c) = filter_image(&image, &cfg)?;
    let reference = oracle_filter(&image, args.window, cfg.effective_rank(), kind)?;
    let max_diff = out
        .data()
        .iter()
        .zip(reference.data())
        .map(|(&a, &b)| a.abs_diff(b))
        .max()
        .unwrap_or(0);
    if let Some(path) = counters {
        fs::write(path, format!("{CSV_HEADER}\n{}\n", csv_row(mode_label(args), &c)))?;
    }
    println!("max_abs_diff={max_diff} max_error={}", args.max_error);
    let allowed = if args.max_error <= 1 { 0 } else { args.max_error };
    if u32::from(max_diff) > allowed {
        return Err(Failure::Violation(format!(
            "difference {max_diff} exceeds tolerance {allowed}"
        )));
    }
    Ok(())
}
