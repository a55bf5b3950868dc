//! `klconc`: run KL-loss experiments, evaluate bounds, verify claims, plot.

mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use klconc::bounds::BoundInputs;
use klconc::harness::{
    figure1_experiment, run_kl_trials, run_suite, with_threads, DistSpec, ExperimentConfig, Suite,
    SuiteOptions, FIGURE1_N, FIGURE1_REPS,
};
use klconc::report::{self, Format, Table};
use klconc::Error;

#[derive(Parser, Debug)]
#[command(
    name = "klconc",
    version,
    about = "Concentration of the KL loss of the Laplace estimator"
)]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true, env = "KLCONC_THREADS")]
    threads: Option<usize>,

    /// Table format for written output.
    #[arg(long, global = true, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TableFormat {
    Csv,
    Tsv,
}

impl From<TableFormat> for Format {
    fn from(f: TableFormat) -> Self {
        match f {
            TableFormat::Csv => Format::Csv,
            TableFormat::Tsv => Format::Tsv,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo summary of the KL loss of the add-t estimator.
    Simulate(SimulateArgs),
    /// Closed-form bounds at (k, n, delta).
    Bounds(BoundsArgs),
    /// Sample std of the Laplace KL loss on uniform(k) versus sqrt(k/2)/n.
    Figure1(Figure1Args),
    /// Empirically verify the stated bounds and identities.
    Check(CheckArgs),
    /// Plot columns of a table as a standalone SVG.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// uniform, zipf, twopoint or file:PATH (one weight per line).
    #[arg(long)]
    dist: String,
    /// Alphabet size (taken from the file for file:PATH).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Additive constant of the estimator; 1 is Laplace.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Also report the fraction of trials above mean + deviation bound.
    #[arg(long)]
    delta: Option<f64>,
    /// Zipf exponent.
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    /// Mass of the heavy symbol for twopoint.
    #[arg(long, default_value_t = 0.5)]
    mass: f64,
    /// Skip per-trial buffering and quantiles.
    #[arg(long)]
    no_quantiles: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long)]
    k: u64,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Figure1Args {
    /// Comma-separated alphabet sizes.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    ks: Vec<u64>,
    #[arg(long, default_value_t = FIGURE1_N)]
    n: u64,
    #[arg(long, default_value_t = FIGURE1_REPS)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a log-log plot of both series.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, default_value = "all", value_parser = Suite::NAMES)]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    prob: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    x: String,
    /// Comma-separated y columns, one series each.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    y: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    logx: bool,
    #[arg(long)]
    logy: bool,
}

/// A failure together with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } | Error::Parse { .. } | Error::ThreadPool(_) => {
                Failure::runtime(e.to_string())
            }
            _ => Failure::usage(e.to_string()),
        }
    }
}

fn parse_dist(args: &SimulateArgs) -> Result<DistSpec, Failure> {
    if let Some(path) = args.dist.strip_prefix("file:") {
        let dist = DistSpec::File(PathBuf::from(path));
        if let Some(k) = args.k {
            let p = dist.resolve()?;
            if p.k() != k {
                return Err(Failure::usage(format!(
                    "--k {k} disagrees with {} weights in {path}",
                    p.k()
                )));
            }
        }
        return Ok(dist);
    }
    let k = args
        .k
        .ok_or_else(|| Failure::usage(format!("--k is required for --dist {}", args.dist)))?;
    match args.dist.as_str() {
        "uniform" => Ok(DistSpec::Uniform { k }),
        "zipf" => Ok(DistSpec::Zipf { k, s: args.s }),
        "twopoint" => Ok(DistSpec::TwoPoint { k, mass: args.mass }),
        other => Err(Failure::usage(format!(
            "unknown --dist {other:?}; expected uniform, zipf, twopoint or file:PATH"
        ))),
    }
}

fn simulate(args: &SimulateArgs, threads: Option<usize>, format: Format) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::new(parse_dist(args)?, args.n, args.reps, args.seed);
    cfg.t = args.t;
    cfg.delta = args.delta;
    cfg.quantiles = !args.no_quantiles;
    let summary = with_threads(threads, || run_kl_trials(&cfg))??;
    eprintln!("wall time {:.3}s", summary.wall_seconds);
    report::emit(
        &report::simulate_table(&summary).render(format),
        args.out.as_deref(),
    )?;
    Ok(())
}

fn bounds(args: &BoundsArgs, format: Format) -> Result<(), Failure> {
    let b = BoundInputs::new(args.k, args.n, args.delta)?;
    eprintln!("note: bgpv_deviation is an order-of-magnitude rate evaluated with constant 1");
    report::emit(
        &report::bounds_table(&b).render(format),
        args.out.as_deref(),
    )?;
    Ok(())
}

fn figure1(args: &Figure1Args, threads: Option<usize>, format: Format) -> Result<(), Failure> {
    if args.ks.is_empty() {
        return Err(Failure::usage("--ks must list at least one alphabet size"));
    }
    let rows = with_threads(threads, || {
        figure1_experiment(&args.ks, args.n, args.reps, args.seed)
    })??;
    let table = report::figure1_table(&rows);
    report::emit(&table.render(format), args.out.as_deref())?;
    if let Some(path) = &args.svg {
        let series = ["sample_std", "heuristic_std"]
            .iter()
            .map(|name| series_of(&table, "k", name))
            .collect::<Result<Vec<_>, _>>()?;
        let axes = svg::Axes {
            x_label: "k".into(),
            y_label: "std of KL loss".into(),
            log_x: true,
            log_y: true,
        };
        write_file(path, &svg::render(&series, &axes))?;
    }
    Ok(())
}

fn check(args: &CheckArgs, threads: Option<usize>) -> Result<(), Failure> {
    let suite: Suite = args.suite.parse()?;
    let opts = SuiteOptions {
        seed: args.seed,
        k: args.k,
        n: args.n,
        reps: args.reps,
        delta: args.delta,
        prob: args.prob,
        lambda: args.lambda,
    };
    let lines = with_threads(threads, || run_suite(suite, &opts))??;
    for line in &lines {
        println!("{line}");
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    if failed == 0 {
        println!("ALL PASS ({} checks)", lines.len());
        Ok(())
    } else {
        println!("FAIL ({failed} of {} checks)", lines.len());
        Err(Failure::runtime(format!("{failed} check(s) failed")))
    }
}

fn series_of(table: &Table, x: &str, y: &str) -> Result<svg::Series, Failure> {
    let xs = table.column(x)?;
    let ys = table.column(y)?;
    Ok(svg::Series {
        name: y.to_string(),
        points: xs
            .into_iter()
            .zip(ys)
            .filter_map(|(a, b)| Some((a?, b?)))
            .collect(),
    })
}

fn plot(args: &PlotArgs, format: Format) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| Failure::runtime(format!("{}: {e}", args.input.display())))?;
    let table = Table::parse(&text, format, &args.input)?;
    if table.rows.is_empty() {
        return Err(Failure::usage(format!(
            "{} has no data rows",
            args.input.display()
        )));
    }
    let series = args
        .y
        .iter()
        .map(|y| series_of(&table, &args.x, y))
        .collect::<Result<Vec<_>, _>>()?;
    let axes = svg::Axes {
        x_label: args.x.clone(),
        y_label: args.y.join(", "),
        log_x: args.logx,
        log_y: args.logy,
    };
    write_file(&args.out, &svg::render(&series, &axes))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(2);
    }
    let format = cli.format.into();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a, cli.threads, format),
        Command::Bounds(a) => bounds(a, format),
        Command::Figure1(a) => figure1(a, cli.threads, format),
        Command::Check(a) => check(a, cli.threads),
        Command::Plot(a) => plot(a, format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
