use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mtspec::basis::uniform_window;
use mtspec::bench::{monte_carlo_ease, EstimatorConfig, MonteCarloConfig, RawEstimate};
use mtspec::boundary::{continuum_boundary_kernel, solve_boundary_coeffs};
use mtspec::moments::FreeCoefficient;
use mtspec::pipeline::{adaptive_estimate, PipelineConfig, RiceNoise};
use mtspec::synth::{generate, ProcessSpec};
use mtspec::taper::{log_multitaper_with, multitaper_spectrum, BiasCorrection, TimeSeries};

mod files;

use files::{read_series, stdout_write, write_csv, CliError};

#[derive(Parser)]
#[command(name = "mtspec", version, about = "Adaptive smoothing of log multitaper spectral estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multitaper spectrum and its bias-corrected logarithm on the canonical grid.
    Spectrum(SpectrumArgs),
    /// Data-adaptive smoothed log spectrum.
    Adaptive(AdaptiveArgs),
    /// Sample an optimal boundary kernel.
    BoundaryKernel(BoundaryArgs),
    /// Monte Carlo error of an estimator on a synthetic process.
    Bench(BenchArgs),
    /// Write a synthetic series as CSV.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct Source {
    /// CSV file with one sample per line and an optional header.
    #[arg(conflicts_with = "synth", required_unless_present = "synth")]
    input: Option<PathBuf>,
    /// Synthetic process instead of a file: white[:var], ar:a1,.., ma:b1,.., band:f,lo,hi.
    #[arg(long, requires = "n")]
    synth: Option<ProcessSpec>,
    /// Length of the synthetic series.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Source {
    fn load(&self) -> Result<TimeSeries, CliError> {
        match (&self.input, &self.synth) {
            (Some(path), None) => read_series(path),
            (None, Some(spec)) => Ok(generate(spec, self.n.unwrap_or(0), self.seed)?),
            _ => Err(CliError::Usage("give either an input file or --synth".into())),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Correction {
    Digamma,
    DigammaOverK,
}

impl From<Correction> for BiasCorrection {
    fn from(c: Correction) -> Self {
        match c {
            Correction::Digamma => BiasCorrection::Digamma,
            Correction::DigammaOverK => BiasCorrection::DigammaOverK,
        }
    }
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 1)]
    tapers: usize,
    /// Write only the log spectrum: `f,theta_hat`.
    #[arg(long)]
    log: bool,
    #[arg(long, value_enum, default_value = "digamma")]
    correction: Correction,
    /// Output CSV (standard output if omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RiceNoiseArg {
    SingleTaper,
    Independent,
}

#[derive(Args)]
struct PipelineArgs {
    /// Number of tapers (default round(N^(8/15))).
    #[arg(long)]
    tapers: Option<usize>,
    /// Declared discontinuities, comma separated.
    #[arg(long, value_delimiter = ',')]
    disc: Vec<f64>,
    /// Treat f = 0 as a boundary instead of reflecting.
    #[arg(long)]
    boundary_zero: bool,
    /// Treat f = 1/2 as a boundary instead of reflecting.
    #[arg(long)]
    boundary_half: bool,
    #[arg(long, value_enum, default_value = "digamma")]
    correction: Correction,
    /// Noise model of the Rice criterion.
    #[arg(long, value_enum, default_value = "single-taper")]
    rice_noise: RiceNoiseArg,
    /// Regularization constant of the halfwidth cap.
    #[arg(long, default_value_t = 2.0)]
    c_reg: f64,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            tapers: self.tapers,
            correction: self.correction.into(),
            rice_noise: match self.rice_noise {
                RiceNoiseArg::SingleTaper => RiceNoise::single_taper(),
                RiceNoiseArg::Independent => RiceNoise::independent(),
            },
            c_reg: self.c_reg,
            discontinuities: self.disc.clone(),
            boundary_at_zero: self.boundary_zero,
            boundary_at_half: self.boundary_half,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct AdaptiveArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Output CSV `f,theta_hat,h_of_f` (standard output if omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// JSON diagnostics file.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Keep stage timings in the diagnostics.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct BoundaryArgs {
    /// Derivative order, 0 or 2.
    #[arg(short, long, default_value_t = 0)]
    q: usize,
    /// Standardized estimation point in [−1, 0].
    #[arg(long, allow_hyphen_values = true)]
    ftilde: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Number of samples of the continuum kernel on [−1, 1].
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// Also solve the discrete kernel and report the largest difference.
    #[arg(long)]
    compare: bool,
    /// Points per unit halfwidth of the discrete kernel.
    #[arg(long, default_value_t = 200)]
    grid: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RawArg {
    SingleTaper,
    Multitaper,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    synth: ProcessSpec,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run the adaptive pipeline (default).
    #[arg(long, conflicts_with = "fixed")]
    pipeline: bool,
    /// Run a (0,2) smoother at this global halfwidth instead.
    #[arg(long)]
    fixed: Option<f64>,
    /// Raw estimate smoothed by --fixed.
    #[arg(long, value_enum, default_value = "multitaper")]
    raw: RawArg,
    #[command(flatten)]
    pipeline_args: PipelineArgs,
    /// Frequency bands left out of the integrated error, as lo:hi.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    /// Report JSON (standard output if omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Per-frequency MSE as CSV `f,mse,mse_se`.
    #[arg(long)]
    mse_csv: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    synth: ProcessSpec,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MTSPEC_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("MTSPEC_THREADS must be a count, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Spectrum(a) => spectrum(a),
        Command::Adaptive(a) => adaptive(a),
        Command::BoundaryKernel(a) => boundary_kernel(a),
        Command::Bench(a) => bench(a),
        Command::Generate(a) => {
            let ts = generate(&a.synth, a.n, a.seed)?;
            let rows = ts.samples().iter().map(|x| vec![*x]).collect::<Vec<_>>();
            write_csv(a.output.as_deref(), &["x"], &rows)
        }
    }
}

fn spectrum(a: SpectrumArgs) -> Result<(), CliError> {
    let ts = a.source.load()?;
    let est = multitaper_spectrum(&ts, a.tapers)?;
    let theta = log_multitaper_with(&est, a.correction.into())?;
    let freqs = est.grid.frequencies();
    if a.log {
        let rows: Vec<Vec<f64>> = freqs.iter().zip(&theta.values).map(|(f, t)| vec![*f, *t]).collect();
        write_csv(a.output.as_deref(), &["f", "theta_hat"], &rows)
    } else {
        let rows: Vec<Vec<f64>> = freqs
            .iter()
            .zip(&est.values)
            .zip(&theta.values)
            .map(|((f, s), t)| vec![*f, *s, *t])
            .collect();
        write_csv(a.output.as_deref(), &["f", "S_hat", "theta_hat"], &rows)
    }
}

fn adaptive(a: AdaptiveArgs) -> Result<(), CliError> {
    let cfg = a.pipeline.config();
    cfg.validate()?;
    let ts = a.source.load()?;
    let out = adaptive_estimate(&ts, &cfg)?;
    let rows: Vec<Vec<f64>> = out
        .estimate
        .grid
        .frequencies()
        .iter()
        .zip(&out.estimate.values)
        .zip(&out.estimate.h)
        .map(|((f, t), h)| vec![*f, *t, *h])
        .collect();
    write_csv(a.output.as_deref(), &["f", "theta_hat", "h_of_f"], &rows)?;
    if let Some(path) = &a.diagnostics {
        let mut diagnostics = out.diagnostics;
        if !a.timings {
            diagnostics.timings.clear();
        }
        write_json(Some(path), &diagnostics)?;
    }
    Ok(())
}

fn boundary_kernel(a: BoundaryArgs) -> Result<(), CliError> {
    if a.q != 0 && a.q != 2 {
        return Err(CliError::Usage(format!("-q must be 0 or 2, got {}", a.q)));
    }
    if a.points < 2 || a.grid < 1 {
        return Err(CliError::Usage("--points needs at least 2 and --grid at least 1".into()));
    }
    let cont = continuum_boundary_kernel(a.q, a.ftilde, a.beta)?;
    if !a.compare {
        let rows: Vec<Vec<f64>> = (0..a.points)
            .map(|i| -1.0 + 2.0 * i as f64 / (a.points - 1) as f64)
            .map(|z| vec![z, cont.eval(z)])
            .collect();
        return write_csv(a.output.as_deref(), &["z", "G"], &rows);
    }
    let (z, m) = uniform_window(a.grid);
    let bk = solve_boundary_coeffs(a.q, a.q + 2, &z, &m, a.ftilde, FreeCoefficient::Beta(a.beta))?;
    let gamma = cont.gamma();
    let mut worst: f64 = 0.0;
    let rows: Vec<Vec<f64>> = z
        .iter()
        .zip(&bk.shape)
        .zip(&m)
        .map(|((&z, &s), &m)| {
            let (c, d) = (cont.eval(z), s / gamma);
            worst = worst.max((c - d).abs());
            vec![z, c, d, s * m]
        })
        .collect();
    write_csv(a.output.as_deref(), &["z", "continuum", "discrete", "weight"], &rows)?;
    eprintln!("max |discrete - continuum| = {worst:.6e}");
    Ok(())
}

fn parse_band(s: &str) -> Result<[f64; 2], CliError> {
    let bad = || CliError::Usage(format!("--exclude expects lo:hi, got {s:?}"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(bad());
    }
    Ok([lo, hi])
}

fn bench(a: BenchArgs) -> Result<(), CliError> {
    if a.reps < 2 {
        return Err(CliError::Usage(format!("--reps must be at least 2, got {}", a.reps)));
    }
    let estimator = match a.fixed.filter(|_| !a.pipeline) {
        Some(h) => EstimatorConfig::FixedHalfwidth {
            raw: match a.raw {
                RawArg::SingleTaper => RawEstimate::SingleTaper,
                RawArg::Multitaper => {
                    let cfg = a.pipeline_args.config();
                    RawEstimate::Multitaper(cfg.tapers_for(a.n)?)
                }
            },
            h,
        },
        None => {
            let cfg = a.pipeline_args.config();
            cfg.validate()?;
            EstimatorConfig::Pipeline(cfg)
        }
    };
    let mut mc = MonteCarloConfig::new(a.n, a.reps, a.seed);
    mc.exclude = a.exclude.iter().map(|s| parse_band(s)).collect::<Result<_, _>>()?;
    let report = monte_carlo_ease(&a.synth, &estimator, &mc)?;
    if let Some(path) = &a.mse_csv {
        let rows: Vec<Vec<f64>> = report
            .frequencies
            .iter()
            .zip(&report.mse)
            .zip(&report.mse_se)
            .map(|((f, m), s)| vec![*f, *m, *s])
            .collect();
        write_csv(Some(path), &["f", "mse", "mse_se"], &rows)?;
    }
    write_json(a.output.as_deref(), &report)
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    match path {
        Some(p) => File::create(p)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => stdout_write(text.as_bytes()),
    }
}
