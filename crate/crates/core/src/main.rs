use acfbands::bands::BandKind;
use acfbands::bartlett::BandwidthRule;
use acfbands::error::{Error, Result};
use acfbands::io::{read_series, ColumnSelector, CsvTable};
use acfbands::plot::render_svg;
use acfbands::quantile::{QuantileOptions, DEFAULT_PROB_TOL, DEFAULT_SEED};
use acfbands::regression::SigmaMode;
use acfbands::report::{
    parse_band_kind, parse_bandwidth, residual_report, series_report, BandReport, ResidualRequest,
    SeriesRequest,
};
use acfbands::sim::{
    run_study, Dgp, SimConfig, Study, DEFAULT_BURN_IN, DEFAULT_REPS, SIM_PROB_TOL,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Simultaneous significance and confidence bands for sample autocorrelations.
#[derive(Parser)]
#[command(name = "acfbands", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bands for the sample ACF of one CSV column.
    Acf(AcfArgs),
    /// Bands for the residual ACF of a (possibly dynamic) regression.
    ResidualBands(ResidualArgs),
    /// Monte Carlo rejection or coverage rates.
    Simulate(SimulateArgs),
    /// Render a JSON report as SVG.
    Plot(PlotArgs),
}

fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed '{s}': {e}"))
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(a) if a > 0.0 && a < 1.0 => Ok(a),
        _ => Err(format!("alpha must be in (0, 1), got '{s}'")),
    }
}

fn parse_bw(s: &str) -> std::result::Result<BandwidthRule, String> {
    parse_bandwidth(s).map_err(|e| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<BandKind, String> {
    parse_band_kind(s).map_err(|e| e.to_string())
}

#[derive(Args)]
struct QuantileArgs {
    /// Seed for the quasi-Monte Carlo quantile.
    #[arg(long, env = "ACFBANDS_SEED", value_parser = parse_seed, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Target absolute error of each box probability.
    #[arg(long, default_value_t = DEFAULT_PROB_TOL)]
    prob_tol: f64,
}

impl QuantileArgs {
    fn options(&self) -> QuantileOptions {
        QuantileOptions {
            prob_tol: self.prob_tol,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// JSON report path; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write one row per lag as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also write an SVG plot.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct AcfArgs {
    #[arg(long, short)]
    input: PathBuf,
    /// Column name or 0-based index.
    #[arg(long, default_value = "0")]
    column: ColumnSelector,
    #[arg(long, default_value_t = 0.1, value_parser = parse_alpha)]
    alpha: f64,
    /// Largest lag H; defaults to floor(10 log10 T).
    #[arg(long)]
    max_lag: Option<usize>,
    /// Comma-separated: sig-sim, sig-pw, conf-supt, conf-bonf, conf-pw.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind, default_value = "sig-sim,sig-pw")]
    bands: Vec<BandKind>,
    /// Kernel bandwidth for confidence bands: sqrt[:m], cbrt[:c] or fixed:L.
    #[arg(long, value_parser = parse_bw, default_value = "sqrt")]
    bandwidth: BandwidthRule,
    #[command(flatten)]
    quantile: QuantileArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Hom,
    Het,
}

#[derive(Args)]
struct ResidualArgs {
    #[arg(long, short)]
    input: PathBuf,
    /// Dependent variable column (name or 0-based index).
    #[arg(long)]
    y_column: ColumnSelector,
    /// Comma-separated regressor columns.
    #[arg(long, value_delimiter = ',')]
    x_columns: Vec<ColumnSelector>,
    /// Own lags p of the dependent variable.
    #[arg(long, default_value_t = 0)]
    lags_endog: usize,
    /// Lags r of each regressor (lags 0..=r enter).
    #[arg(long, default_value_t = 0)]
    lags_exog: usize,
    /// Use the first difference of the dependent variable.
    #[arg(long)]
    difference: bool,
    /// Plug-in for the residual covariance.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Report only the naive band.
    #[arg(long)]
    naive: bool,
    #[arg(long, default_value_t = 0.1, value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long)]
    max_lag: Option<usize>,
    #[command(flatten)]
    quantile: QuantileArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyArg {
    Significance,
    Confidence,
    Dynamic,
    BandwidthSweep,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    study: StudyArg,
    /// AR(1) coefficient, or the first AR(2) coefficient with --phi2.
    #[arg(
        long,
        alias = "phi1",
        default_value_t = 0.0,
        allow_negative_numbers = true
    )]
    phi: f64,
    /// Second AR coefficient; switches to an AR(2) process.
    #[arg(long, allow_negative_numbers = true)]
    phi2: Option<f64>,
    #[arg(long = "T")]
    t: usize,
    #[arg(long = "H")]
    h: usize,
    #[arg(long, default_value_t = 0.1, value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    /// Seed for the simulated series and the quantile.
    #[arg(long, env = "ACFBANDS_SEED", value_parser = parse_seed, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_parser = parse_bw, default_value = "sqrt")]
    bandwidth: BandwidthRule,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
    #[arg(long, default_value_t = SIM_PROB_TOL)]
    prob_tol: f64,
    /// Write the JSON result here; `-` prints it to stdout instead of the table.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// JSON report written by `acf` or `residual-bands`.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}

fn emit(report: &BandReport, out: &OutputArgs) -> Result<()> {
    let json = report.to_json()?;
    match &out.output {
        Some(p) => write_file(p, &(json + "\n"))?,
        None => println!("{json}"),
    }
    if let Some(p) = &out.csv {
        write_file(p, &report.to_csv())?;
    }
    if let Some(p) = &out.svg {
        write_file(p, &render_svg(report))?;
    }
    Ok(())
}

fn cmd_acf(a: &AcfArgs) -> Result<()> {
    let values = read_series(&a.input, &a.column)?;
    let req = SeriesRequest {
        alpha: a.alpha,
        max_lag: a.max_lag,
        bands: a.bands.clone(),
        bandwidth: a.bandwidth,
        quantile: a.quantile.options(),
    };
    req.quantile.validate()?;
    emit(&series_report(values, &req)?, &a.out)
}

fn cmd_residual(a: &ResidualArgs) -> Result<()> {
    if a.naive && matches!(a.mode, Some(ModeArg::Het)) {
        return Err(Error::InvalidInput(
            "--naive ignores the residual covariance estimate and conflicts with --mode het".into(),
        ));
    }
    let table = CsvTable::from_path(&a.input)?;
    let y = table.column(&a.y_column)?;
    let exog = a
        .x_columns
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<Vec<_>>>()?;
    let req = ResidualRequest {
        alpha: a.alpha,
        max_lag: a.max_lag,
        lags_endog: a.lags_endog,
        lags_exog: a.lags_exog,
        differenced: a.difference,
        mode: match a.mode {
            Some(ModeArg::Het) => SigmaMode::Het,
            _ => SigmaMode::Hom,
        },
        naive_only: a.naive,
        quantile: a.quantile.options(),
    };
    req.quantile.validate()?;
    emit(&residual_report(&y, &exog, &req)?, &a.out)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let study = match a.study {
        StudyArg::Significance => Study::Significance,
        StudyArg::Confidence => Study::Confidence,
        StudyArg::Dynamic => Study::Dynamic,
        StudyArg::BandwidthSweep => Study::BandwidthSweep,
    };
    let dgp = match a.phi2 {
        Some(phi2) => Dgp::Ar2 { phi1: a.phi, phi2 },
        None => Dgp::Ar1 { phi: a.phi },
    };
    let mut cfg = SimConfig::new(study, dgp, a.t, a.h);
    cfg.alpha = a.alpha;
    cfg.reps = a.reps;
    cfg.seed = a.seed;
    cfg.bandwidth = a.bandwidth;
    cfg.burn_in = a.burn_in;
    cfg.quantile = QuantileOptions {
        prob_tol: a.prob_tol,
        seed: a.seed,
    };
    cfg.validate()?;
    let res = run_study(&cfg)?;
    let json = serde_json::to_string_pretty(&res)? + "\n";
    match a.json.as_deref() {
        Some(p) if p == Path::new("-") => print!("{json}"),
        Some(p) => {
            write_file(p, &json)?;
            print!("{}", res.to_table());
        }
        None => print!("{}", res.to_table()),
    }
    Ok(())
}

fn cmd_plot(a: &PlotArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.report)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", a.report.display())))?;
    let report = BandReport::from_json(&text)?;
    write_file(&a.output, &render_svg(&report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Acf(a) => cmd_acf(a),
        Command::ResidualBands(a) => cmd_residual(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
