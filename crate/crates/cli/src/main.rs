use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use telegraph_core::estimators::{
    filtered_sample, lambda_argmax, lambda_dot, lambda_least_squares, lambda_score_root, sigma_hat,
    v_hat, EstimatorOptions, LogReturns, Method,
};
use telegraph_core::io::{
    estimates_to_csv, estimates_to_json, estimates_to_table, replications_to_csv, summaries_to_csv,
    summaries_to_json, summaries_to_table, EstimateRecord, PathFile,
};
use telegraph_core::montecarlo::{run_experiment_with, ExperimentSpec};
use telegraph_core::{
    decompose, lambda_oracle, replication_rng, simulate_path, to_geometric, GeometricParams,
    ModelParams,
};

#[derive(Parser, Debug)]
#[command(
    name = "telegraph",
    version,
    about = "Telegraph process simulation and rate estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one path and write its grid sample
    Simulate(SimulateArgs),
    /// Estimate parameters from a grid sample file
    Estimate(EstimateArgs),
    /// Run a Monte Carlo experiment
    Mc(McArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
    Table,
}

#[derive(Args, Debug, Clone)]
struct GeometricArgs {
    /// Volatility of the geometric process
    #[arg(long)]
    sigma: Option<f64>,
    /// Known drift of the geometric process
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Initial price
    #[arg(long)]
    s0: Option<f64>,
}

impl GeometricArgs {
    fn params(&self) -> Result<Option<GeometricParams>> {
        match (self.mu, self.sigma, self.s0) {
            (None, None, None) => Ok(None),
            (Some(mu), Some(sigma), s0) => {
                check_positive("--sigma", sigma)?;
                let s0 = s0.unwrap_or(1.0);
                check_positive("--s0", s0)?;
                if !mu.is_finite() {
                    bail!("--mu must be finite, got {mu}");
                }
                Ok(Some(GeometricParams::new(mu, sigma, s0)?))
            }
            _ => bail!("--mu and --sigma must be given together (--s0 defaults to 1)"),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct OptionArgs {
    /// Search cap for the least-squares estimator
    #[arg(long = "lambda-cap", default_value_t = 3.0)]
    lambda_cap: f64,
    /// Search cap for the log-return variance estimator
    #[arg(long = "lambda-dot-cap", default_value_t = 10.0)]
    lambda_dot_cap: f64,
    /// Bracket expansion limit for the score root and argmax
    #[arg(long = "lambda-max", default_value_t = 1e4)]
    lambda_max: f64,
    /// Absolute tolerance on lambda
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

impl OptionArgs {
    fn options(&self) -> Result<EstimatorOptions> {
        check_positive("--lambda-cap", self.lambda_cap)?;
        check_positive("--lambda-dot-cap", self.lambda_dot_cap)?;
        check_positive("--lambda-max", self.lambda_max)?;
        check_positive("--tol", self.tol)?;
        let opts = EstimatorOptions {
            lambda_cap: self.lambda_cap,
            lambda_dot_cap: self.lambda_dot_cap,
            lambda_max: self.lambda_max,
            tol: self.tol,
            ..EstimatorOptions::default()
        };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Switching rate
    #[arg(long)]
    lambda: f64,
    /// Speed
    #[arg(long, default_value_t = 1.0)]
    v: f64,
    /// Time horizon
    #[arg(long = "T", default_value_t = 500.0)]
    horizon: f64,
    /// Number of grid intervals
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    geometric: GeometricArgs,
    /// Random seed
    #[arg(long, env = "TELEGRAPH_SEED", default_value_t = 0)]
    seed: u64,
    /// Output file (standard output when omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Grid sample file written by `simulate`
    #[arg(short, long)]
    input: PathBuf,
    /// Known speed
    #[arg(long)]
    v: Option<f64>,
    /// Estimate the speed from the largest increment
    #[arg(long = "estimate-v")]
    estimate_v: bool,
    /// Estimators to run (comma separated)
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[command(flatten)]
    geometric: GeometricArgs,
    #[command(flatten)]
    opts: OptionArgs,
    /// Estimate from states filtered out of the price column
    #[arg(long)]
    filter: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args, Debug)]
struct McArgs {
    /// Switching rates to simulate (comma separated)
    #[arg(long = "lambda-grid", value_delimiter = ',', required = true)]
    lambda_grid: Vec<f64>,
    /// Grid sizes (comma separated)
    #[arg(long = "n-grid", value_delimiter = ',', default_values_t = vec![50usize, 100, 500, 1000])]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    v: f64,
    #[arg(long = "T", default_value_t = 500.0)]
    horizon: f64,
    /// Number of replications
    #[arg(long = "N", default_value_t = 10_000)]
    replications: usize,
    #[arg(long, env = "TELEGRAPH_SEED", default_value_t = 0)]
    seed: u64,
    /// Estimators to run (comma separated)
    #[arg(long, value_delimiter = ',', default_values_t = vec!["score_root".to_string(), "least_squares".to_string()])]
    methods: Vec<String>,
    #[command(flatten)]
    geometric: GeometricArgs,
    #[command(flatten)]
    opts: OptionArgs,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Render the summary as text tables (same as --format table)
    #[arg(long)]
    table: bool,
    /// Also write every replication-level estimate to this CSV file
    #[arg(long)]
    dump: Option<PathBuf>,
}

fn check_positive(flag: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        bail!("{flag} must be a positive finite number, got {x}");
    }
    Ok(())
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for name in names {
        let m: Method = name
            .trim()
            .parse()
            .with_context(|| format!("--methods: unknown method `{name}`"))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        bail!("--methods: no estimator selected");
    }
    Ok(out)
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    check_positive("--lambda", args.lambda)?;
    check_positive("--v", args.v)?;
    check_positive("--T", args.horizon)?;
    if args.n == 0 {
        bail!("--n must be at least 1");
    }
    let mut params = ModelParams::new(args.lambda, args.v)?;
    if let Some(geo) = args.geometric.params()? {
        params = params.with_geometric(geo);
    }
    let mut rng = replication_rng(args.seed, 0);
    let path = simulate_path(&params, args.horizon, &mut rng)?;
    let sample = path.sample_on_grid(args.n)?;
    let geo = match params.geometric {
        Some(_) => Some(to_geometric(&sample, &params)?),
        None => None,
    };
    let file = PathFile::from_samples(&sample, geo.as_ref());
    let text = match args.format {
        Format::Csv | Format::Table => file.to_csv(),
        Format::Json => file.to_json()? + "\n",
    };
    emit(args.output.as_deref(), &text)?;
    let stats = format!(
        "N(T) = {}\nlambda_oracle = {}\n",
        path.event_count(),
        lambda_oracle(&path)
    );
    if args.output.is_some() {
        print!("{stats}");
    } else {
        eprint!("{stats}");
    }
    Ok(())
}

fn read_path_file(path: &Path) -> Result<PathFile> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let parsed = if text.trim_start().starts_with('{') {
        PathFile::from_json(&text)
    } else {
        PathFile::from_csv(&text)
    };
    parsed.with_context(|| format!("in {}", path.display()))
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    let opts = args.opts.options()?;
    let file = read_path_file(&args.input)?;
    let geo = args.geometric.params()?;
    let has_prices = file.prices.is_some();

    let methods = match &args.methods {
        Some(names) => parse_methods(names)?,
        None => {
            let mut m = vec![Method::ScoreRoot, Method::Argmax, Method::LeastSquares];
            if has_prices && geo.is_some() {
                m.extend([Method::SigmaHat, Method::LambdaDot]);
            }
            m
        }
    };
    if methods.contains(&Method::Oracle) {
        bail!("--methods: the oracle needs the continuous path and is only available in `mc`");
    }
    let needs_returns = methods.iter().any(|m| m.is_geometric()) || args.filter;
    let returns = if needs_returns {
        let prices = file
            .prices
            .as_ref()
            .context("sigma_hat, lambda_dot and --filter need a price column `s`")?;
        let mu = args
            .geometric
            .mu
            .context("sigma_hat, lambda_dot and --filter need --mu")?;
        Some(LogReturns::from_prices(prices, file.delta, mu)?)
    } else {
        None
    };
    let sigma = returns.as_ref().map(sigma_hat);

    if let Some(v) = args.v {
        check_positive("--v", v)?;
    }
    let mut sample = if args.filter {
        let s = sigma.filter(|s| s.valid).context(
            "--filter: the volatility estimate does not exist for this sample (mu <= mean(Y)/delta)",
        )?;
        filtered_sample(returns.as_ref().expect("returns"), s.estimate, args.v)?
    } else {
        let placeholder = args.v.or(file.v).unwrap_or(1.0);
        file.grid_sample(Some(placeholder))?
    };
    if args.estimate_v {
        sample = sample.with_v(v_hat(&sample))?;
    } else if args.v.is_none() && file.v.is_none() && !args.filter {
        bail!("the speed is unknown: pass --v or --estimate-v");
    }
    let v = sample.v();

    let needs_decomp = methods
        .iter()
        .any(|m| matches!(m, Method::ScoreRoot | Method::Argmax));
    let decomp = if needs_decomp {
        Some(decompose(&sample).with_context(|| format!("in {}", args.input.display()))?)
    } else {
        None
    };

    let mut records = Vec::new();
    for m in &methods {
        let est = match m {
            Method::ScoreRoot => lambda_score_root(decomp.as_ref().expect("decomposed"), &opts)?,
            Method::Argmax => lambda_argmax(decomp.as_ref().expect("decomposed"), &opts)?,
            Method::LeastSquares => lambda_least_squares(&sample, &opts)?,
            Method::SigmaHat => sigma.expect("returns"),
            Method::LambdaDot => lambda_dot(
                returns.as_ref().expect("returns"),
                sigma.as_ref().expect("returns"),
                v,
                &opts,
            )?,
            Method::Oracle => unreachable!(),
        };
        records.push(EstimateRecord::from(&est));
    }

    let text = match args.format {
        Format::Csv => estimates_to_csv(&records),
        Format::Json => estimates_to_json(&records)? + "\n",
        Format::Table => {
            let mut t = format!(
                "n = {}, delta = {}, v = {}{}\n",
                sample.n(),
                sample.delta(),
                v,
                decomp
                    .as_ref()
                    .map(|d| format!(", n_plus = {}", d.n_plus()))
                    .unwrap_or_default()
            );
            t.push_str(&estimates_to_table(&records));
            t
        }
    };
    emit(args.output.as_deref(), &text)
}

fn cmd_mc(args: McArgs) -> Result<()> {
    for &l in &args.lambda_grid {
        check_positive("--lambda-grid", l)?;
    }
    if args.n_grid.contains(&0) {
        bail!("--n-grid entries must be at least 1");
    }
    check_positive("--v", args.v)?;
    check_positive("--T", args.horizon)?;
    if args.replications == 0 {
        bail!("--N must be at least 1");
    }
    if args.jobs == Some(0) {
        bail!("--jobs must be at least 1");
    }
    let methods = parse_methods(&args.methods)?;
    let geometric = args.geometric.params()?;
    if methods.iter().any(|m| m.is_geometric()) && geometric.is_none() {
        bail!("--methods: sigma_hat and lambda_dot need --mu and --sigma");
    }
    let spec = ExperimentSpec {
        lambda_grid: args.lambda_grid.clone(),
        n_grid: args.n_grid.clone(),
        horizon: args.horizon,
        v: args.v,
        replications: args.replications,
        seed: args.seed,
        geometric,
        options: args.opts.options()?,
        methods,
    };
    let out = run_experiment_with(&spec, args.jobs, args.dump.is_some())?;
    let format = if args.table {
        Format::Table
    } else {
        args.format
    };
    let text = match format {
        Format::Csv => summaries_to_csv(&out.summaries),
        Format::Json => summaries_to_json(&out.summaries)? + "\n",
        Format::Table => summaries_to_table(&out.summaries),
    };
    emit(args.output.as_deref(), &text)?;
    if let Some(path) = &args.dump {
        fs::write(path, replications_to_csv(&out.replications))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Mc(a) => cmd_mc(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
