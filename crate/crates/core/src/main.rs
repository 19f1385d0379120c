use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use credcov::credible::{radius_for, NormKind};
use credcov::fourier::{default_grid_size, Grid, Synthesizer};
use credcov::harness::{
    emit_report, run_coverage, run_cox_freedman_demo, run_eb_study, run_rate_study, write_report, CoverageReport,
    ExperimentConfig, NormChoice, PriorAlpha, ReportFormat, RunOptions, Tabular,
};
use credcov::inference::{contraction_rate, posterior_update, PriorSpec};
use credcov::rng::{tags, RandomStream};
use credcov::sequence::{default_n_trunc, CoefficientSequence, KappaSpec, ModelConfig};
use credcov::truth::{generate_truth, TruthFamily, TruthSpec};
use credcov::Error;

#[derive(Parser)]
#[command(name = "credcov", version, about = "Credible sets and their frequentist coverage in the Gaussian sequence model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the credible radius for given alpha, n and gamma.
    Radius(ExperimentArgs),
    /// Coverage of the inflated credible set over replications.
    Coverage(ExperimentArgs),
    /// Radius and rate ratio along the n grid.
    Rates(ExperimentArgs),
    /// Oversmoothed versus undersmoothed fixed priors with M = 1.
    CoxFreedman {
        #[command(flatten)]
        args: ExperimentArgs,
        /// Prior smoothness of the second arm.
        #[arg(long, default_value_t = 0.25)]
        other_alpha: f64,
    },
    /// Plug-in empirical-Bayes coverage study.
    EbStudy(ExperimentArgs),
    /// Dump a truth's coefficients, or its values on a grid with --grid-size.
    Truth(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L2,
    Sup,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<f64>>,
    /// Prior smoothness, or `eb` for empirical Bayes.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Inflation factor M.
    #[arg(long)]
    inflation: Option<f64>,
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
    /// poly:alpha,c | alt:alpha,c | holder:alpha,R,seed | bump:center,width,height
    #[arg(long, value_parser = parse_from_str::<TruthFamily>)]
    truth: Option<TruthFamily>,
    #[arg(long)]
    reps: Option<usize>,
    /// Monte Carlo draws per radius.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    grid_size: Option<usize>,
    /// direct | poly:p
    #[arg(long, value_parser = parse_from_str::<KappaSpec>)]
    kappa: Option<KappaSpec>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_from_str<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(n) = &self.n {
            cfg.n_grid = n.clone();
        }
        if let Some(a) = &self.alpha {
            cfg.prior_alpha = match a.trim() {
                "eb" => PriorAlpha::EmpiricalBayes,
                v => PriorAlpha::Fixed {
                    alpha: v
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("--alpha expects a number or eb, got {v:?}")))?,
                },
            };
        }
        if let Some(g) = self.gamma {
            cfg.gamma = g;
        }
        if let Some(m) = self.inflation {
            cfg.inflation_m = m;
        }
        if let Some(norm) = self.norm {
            cfg.norm_kind = match norm {
                NormArg::L2 => NormChoice::L2,
                NormArg::Sup => NormChoice::Sup,
            };
        }
        if let Some(t) = self.truth {
            cfg.truth = t;
        }
        if let Some(r) = self.reps {
            cfg.reps = r;
        }
        if let Some(d) = self.draws {
            cfg.draws = d;
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if self.grid_size.is_some() {
            cfg.grid_size = self.grid_size;
        }
        if let Some(k) = self.kappa {
            cfg.kappa = k;
        }
        Ok(cfg)
    }

    fn options(&self) -> RunOptions {
        RunOptions { workers: self.workers }
    }

    fn format(&self) -> ReportFormat {
        match self.format {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Returns whether all checks passed.
fn run(command: Command) -> Result<bool, Error> {
    match command {
        Command::Radius(args) => radius(&args).map(|()| true),
        Command::Truth(args) => truth(&args).map(|()| true),
        Command::Coverage(args) => {
            let report = run_coverage(&args.config()?, args.options())?;
            summarize(&report);
            finish(&report, &args)
        }
        Command::Rates(args) => {
            let report = run_rate_study(&args.config()?, args.options())?;
            for row in &report.table {
                eprintln!(
                    "n={:<10} mean_radius={:.6} rate_ratio={:.4} mean_error={:.6}",
                    row.n, row.mean_radius, row.rate_ratio, row.mean_error
                );
            }
            finish(&report, &args)
        }
        Command::CoxFreedman { args, other_alpha } => {
            let report = run_cox_freedman_demo(&args.config()?, other_alpha, args.options())?;
            for arm in &report.arms {
                eprintln!("arm alpha={} ({:?})", arm.alpha, arm.role);
                summarize(&arm.report);
            }
            finish(&report, &args)
        }
        Command::EbStudy(args) => {
            let report = run_eb_study(&args.config()?, args.options())?;
            summarize(&report.coverage);
            for r in &report.reference {
                eprintln!(
                    "n={:<10} plug-in radius {:.6} vs alpha={} radius {:.6} (ratio {:.3})",
                    r.n, r.plugin_mean_radius, r.reference_alpha, r.reference_radius, r.ratio
                );
            }
            finish(&report, &args)
        }
    }
}

fn summarize(report: &CoverageReport) {
    for c in &report.cells {
        let alpha = c
            .alpha_hat
            .as_ref()
            .map(|a| format!(" alpha_hat median={:.3} iqr={:.3}", a.median, a.interquartile_width))
            .unwrap_or_default();
        eprintln!(
            "n={:<10} coverage={:.3} mean_radius={:.6} rate_ratio={:.4}{alpha}",
            c.n, c.coverage_rate, c.mean_radius, c.rate_ratio
        );
    }
}

fn finish<R: Tabular>(report: &R, args: &ExperimentArgs) -> Result<bool, Error> {
    for check in report.checks() {
        eprintln!(
            "[{}] {}: {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    write_out(report, args.out.as_deref(), args.format())?;
    Ok(report.passed())
}

fn write_out<R: Tabular + ?Sized>(report: &R, out: Option<&Path>, format: ReportFormat) -> Result<(), Error> {
    match out {
        Some(path) => emit_report(report, path, format),
        None => write_report(report, &mut io::stdout().lock(), format),
    }
}

#[derive(Serialize)]
struct RadiusRow {
    n: f64,
    alpha: f64,
    gamma: f64,
    norm_kind: &'static str,
    radius: f64,
    std_error: f64,
    draws: usize,
    grid_size: Option<usize>,
    rate_ratio: f64,
}

fn radius(args: &ExperimentArgs) -> Result<(), Error> {
    let cfg = args.config()?;
    let PriorAlpha::Fixed { alpha } = cfg.prior_alpha else {
        return Err(Error::InvalidConfig("radius needs a numeric --alpha".into()));
    };
    let prior = PriorSpec::new(alpha, cfg.alpha_bounds)?;
    let stream = RandomStream::new(cfg.master_seed, 0).derive(tags::RADIUS);
    let run = || {
        cfg.n_grid
            .iter()
            .map(|&n| {
                let model = ModelConfig::with_default_trunc(n, cfg.kappa)?;
                let state = posterior_update(&CoefficientSequence::zeros(model.n_trunc), &prior, &model)?;
                let (norm_kind, grid_size) = match cfg.norm_kind {
                    NormChoice::L2 => (NormKind::L2, None),
                    NormChoice::Sup => {
                        let g = cfg
                            .grid_size
                            .unwrap_or_else(|| default_grid_size(alpha, n, model.n_trunc));
                        (NormKind::SupGrid { grid: Grid::new(g)? }, Some(g))
                    }
                };
                let est = radius_for(&state, cfg.gamma, norm_kind, cfg.draws, stream)?;
                Ok(RadiusRow {
                    n,
                    alpha,
                    gamma: cfg.gamma,
                    norm_kind: cfg.norm_kind.label(),
                    radius: est.radius,
                    std_error: est.std_error,
                    draws: est.draws,
                    grid_size,
                    rate_ratio: est.radius / contraction_rate(alpha, n),
                })
            })
            .collect::<Result<Vec<_>, Error>>()
    };
    let rows = match args.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    write_rows(&rows, args)
}

#[derive(Serialize)]
struct CoefficientRow {
    i: usize,
    theta: f64,
}

#[derive(Serialize)]
struct ValueRow {
    x: f64,
    f: f64,
}

fn truth(args: &ExperimentArgs) -> Result<(), Error> {
    let cfg = args.config()?;
    let n_max = cfg.n_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(n_max.is_finite() && n_max > 1.0) {
        return Err(Error::InvalidConfig("--n must be positive".into()));
    }
    let theta = generate_truth(&TruthSpec::new(cfg.truth, default_n_trunc(n_max)))?;
    match cfg.grid_size {
        Some(g) => {
            let grid = Grid::new(g)?;
            let values = Synthesizer::new(grid).synthesize(theta.as_slice());
            let rows: Vec<ValueRow> = values
                .iter()
                .enumerate()
                .map(|(j, &f)| ValueRow { x: grid.point(j), f })
                .collect();
            write_rows(&rows, args)
        }
        None => {
            let rows: Vec<CoefficientRow> = theta
                .as_slice()
                .iter()
                .enumerate()
                .map(|(k, &theta)| CoefficientRow { i: k + 1, theta })
                .collect();
            write_rows(&rows, args)
        }
    }
}

fn write_rows<T: Serialize>(rows: &[T], args: &ExperimentArgs) -> Result<(), Error> {
    let mut buf = Vec::new();
    match args.format() {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut buf);
            for row in rows {
                w.serialize(row).map_err(|e| Error::Serialization(e.to_string()))?;
            }
            w.flush().map_err(|source| Error::Io {
                path: "<buffer>".into(),
                source,
            })?;
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut buf, rows).map_err(|e| Error::Serialization(e.to_string()))?;
            buf.push(b'\n');
        }
    }
    match &args.out {
        Some(path) => fs::write(path, &buf).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        }),
        None => io::stdout().write_all(&buf).map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}
