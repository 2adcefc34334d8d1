use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand};
use otoc_core::analysis::calibration::{calibrate_hamiltonian, CalibrationOptions, QuenchData};
use otoc_core::campaign::tools::run_ramsey;
use otoc_core::campaign::{
    analyze_dataset, run_entropy_campaign, run_otoc_campaign, write_otoc_report, AnalysisOptions, CampaignConfig,
    RunOptions,
};
use otoc_core::noise::NoiseSpec;
use otoc_core::protocol::MeasurementDataset;
use otoc_core::Error;

#[derive(Parser)]
#[command(name = "otoc", version, about = "Randomized-measurement OTOC campaigns on long-range spin chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an OTOC campaign and write the dataset and its analysis.
    Run(CampaignArgs),
    /// Re-analyze a stored dataset (jackknife errors, convergence, velocity).
    Analyze(AnalyzeArgs),
    /// Randomized z-basis campaign and second Renyi entropies.
    Entropy(CampaignArgs),
    /// Fit j0 and alpha to single-excitation quench data.
    Calibrate(CalibrateArgs),
    /// Ramsey contrast of the dephasing model.
    Ramsey(RamseyArgs),
}

#[derive(Args)]
struct CampaignArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (all cores by default). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Continue from the dataset already in the output directory.
    #[arg(long)]
    resume: bool,
    /// Output directory; falls back to `output_dir` in the config, then `otoc-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only simulate the first N unitaries.
    #[arg(long)]
    limit: Option<u32>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// dataset.csv or dataset.json
    dataset: PathBuf,
    /// Comma-separated orders, e.g. `0,2`.
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<usize>>,
    /// Sites used in the velocity fit.
    #[arg(long, value_delimiter = ',')]
    sites: Option<Vec<usize>>,
    #[arg(long, default_value_t = otoc_core::analysis::velocity::DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Skip the exact-trace comparison.
    #[arg(long)]
    no_exact: bool,
    /// Defaults to the directory of the dataset.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// CSV with columns t_s,sz_1,...,sz_N.
    #[arg(long)]
    data: PathBuf,
    /// Campaign config whose [hamiltonian] is the starting guess.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 5)]
    flipped_site: usize,
    #[arg(long, default_value_t = 500)]
    max_iterations: usize,
}

#[derive(Args)]
struct RamseyArgs {
    /// Take the [noise] section from this config instead of the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 50.0)]
    max_ms: f64,
    #[arg(long, default_value_t = 0.1)]
    step_ms: f64,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the contrast curve here as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Config(_) | Error::TooManySpins { .. }) => 2,
        Some(Error::Io(_)) => 4,
        Some(Error::FitFailed { .. } | Error::InsufficientStatistics(_) | Error::NotHermitian(_)) => 5,
        Some(_) => 3,
        None if err.chain().any(|e| e.is::<std::io::Error>()) => 4,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Run(args) => run(args),
        Command::Analyze(args) => analyze(args),
        Command::Entropy(args) => entropy(args),
        Command::Calibrate(args) => calibrate(args),
        Command::Ramsey(args) => ramsey(args),
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> anyhow::Result<CampaignConfig> {
    let mut cfg = CampaignConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
        cfg.resolve()?;
    }
    Ok(cfg)
}

fn prepare(args: &CampaignArgs) -> anyhow::Result<(CampaignConfig, PathBuf, RunOptions)> {
    let cfg = load_config(&args.config, args.seed)?;
    let dir = args.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("otoc-out"));
    let opts = RunOptions { workers: args.workers, resume: args.resume, unitary_limit: args.limit, ..Default::default() };
    Ok((cfg, dir, opts))
}

fn run(args: CampaignArgs) -> anyhow::Result<()> {
    let (cfg, dir, opts) = prepare(&args)?;
    let outcome = run_otoc_campaign(&cfg, &dir, &opts)?;
    let r = &outcome.report;
    println!("{} unitaries written to {}", r.n_unitaries_completed, dir.display());
    for d in &r.deviations {
        println!("O_{}: max |O_n - O| = {:.4} (site {}, t = {} s)", d.order, d.max_abs_deviation, d.site, d.time);
    }
    print_velocity(r);
    Ok(())
}

fn print_velocity(r: &otoc_core::campaign::OtocReport) {
    match (&r.velocity, &r.velocity_error) {
        (Some(v), _) => {
            let spread = v.delta_v2.map(|d| format!(" +- {d:.0}")).unwrap_or_default();
            println!("v2 = {:.0}{spread} sites/s, collapse residual {:.4}", v.v2, v.collapse_residual());
        }
        (None, Some(e)) => println!("no velocity fit: {e}"),
        (None, None) => {}
    }
}

fn analyze(args: AnalyzeArgs) -> anyhow::Result<()> {
    let data = MeasurementDataset::read(&args.dataset).with_context(|| format!("reading {}", args.dataset.display()))?;
    let opts = AnalysisOptions {
        orders: args.orders,
        velocity_sites: args.sites,
        threshold: args.threshold,
        exact: !args.no_exact,
        ..Default::default()
    };
    let report = analyze_dataset(&data, &opts)?;
    let dir = match args.out {
        Some(d) => d,
        None => args.dataset.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    write_otoc_report(&report, &data, &dir)?;
    println!("report for {} unitaries written to {}", report.n_unitaries_completed, dir.display());
    print_velocity(&report);
    Ok(())
}

fn entropy(args: CampaignArgs) -> anyhow::Result<()> {
    let (cfg, dir, opts) = prepare(&args)?;
    let outcome = run_entropy_campaign(&cfg, &dir, &opts)?;
    for row in &outcome.table.rows {
        let s = match (row.entropy, row.std_error) {
            (Some(s), Some(e)) => format!("{s:.3} +- {e:.3}"),
            _ => row.status.clone(),
        };
        println!("t = {} s, |A| = {}: S2 = {s}", row.t_s, row.partition.len());
    }
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> anyhow::Result<()> {
    let cfg = load_config(&args.config, None)?;
    let text = std::fs::read_to_string(&args.data).with_context(|| format!("reading {}", args.data.display()))?;
    let data = QuenchData::from_csv_str(&text)?;
    let opts = CalibrationOptions { max_iterations: args.max_iterations, ..Default::default() };
    let fit = calibrate_hamiltonian(&data, &cfg.hamiltonian_spec()?, args.flipped_site, &opts)?;
    println!("{}", serde_json::to_string_pretty(&fit)?);
    eprintln!(
        "j0 = 2pi x {:.3} Hz (+- {:.3}), alpha = {:.4} (+- {:.4})",
        fit.j0_hz(),
        fit.covariance[0][0].sqrt() / std::f64::consts::TAU,
        fit.alpha,
        fit.covariance[1][1].sqrt()
    );
    Ok(())
}

fn ramsey(args: RamseyArgs) -> anyhow::Result<()> {
    let noise = match &args.config {
        Some(path) => load_config(path, None)?.noise_spec()?.unwrap_or_default(),
        None => NoiseSpec::default(),
    };
    let report = run_ramsey(&noise, args.max_ms * 1e-3, args.step_ms * 1e-3, args.samples, args.seed)?;
    if let Some(path) = &args.out {
        let mut out = String::from("t_s,contrast\n");
        for (t, c) in report.curve.times.iter().zip(&report.curve.contrast) {
            out.push_str(&format!("{t},{c}\n"));
        }
        std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    }
    let ms: Vec<String> = report.revivals_s.iter().map(|t| format!("{:.1}", t * 1e3)).collect();
    println!("revivals at [{}] ms", ms.join(", "));
    match report.one_over_e_s {
        Some(t) => println!("1/e crossing at {:.1} ms", t * 1e3),
        None => println!("no 1/e crossing within {} ms", args.max_ms),
    }
    println!("white noise alone: 1/e at {:.1} ms", report.white_only_one_over_e_s * 1e3);
    Ok(())
}
