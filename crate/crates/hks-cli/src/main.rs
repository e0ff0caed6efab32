//! `hks` - higher-order Kolmogorov-Smirnov two-sample testing from the
//! command line.
//!
//! Exit codes: 0 success, 1 validation error (including usage errors),
//! 2 i/o error, 3 numerical error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use hks::dist::DistributionSpec;
use hks::experiments;
use hks::nulls::{self, GpReference};
use hks::oracles;
use hks::{baselines, CsvFormat, Error, HksConfig, Method, TwoSamples};

#[derive(Parser)]
#[command(
    name = "hks",
    version,
    about = "Higher-order Kolmogorov-Smirnov two-sample tests",
    long_about = None,
    after_help = "Distribution specs: normal:MEAN,SD | uniform:A,B | t:DF | \
                  piecewise:B0,..,BL;H1,..,HL | mix:W1*SPEC1+W2*SPEC2\n\
                  Note normal takes the standard deviation: variance 1.44 is normal:0,1.2"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a statistic with a permutation p-value
    Test(TestArgs),
    /// Run an ROC experiment from a config file
    Roc(RocArgs),
    /// Simulate the asymptotic null (Gaussian-process supremum draws)
    #[command(name = "null-sim")]
    NullSim(NullSimArgs),
    /// Emit the witness function of the exact statistic as CSV
    Witness(WitnessArgs),
    /// Compute the reference baseline statistics
    Baselines(BaselinesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Grid,
    Wang,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Exact => Method::Exact,
            MethodArg::Grid => Method::Grid,
            MethodArg::Wang => Method::Wang,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    /// One value per line per file
    OneCol,
    /// Two-column labeled CSV (header `sample,value`, labels x/y)
    Labeled,
}

impl From<FormatArg> for CsvFormat {
    fn from(f: FormatArg) -> CsvFormat {
        match f {
            FormatArg::OneCol => CsvFormat::OneColumn,
            FormatArg::Labeled => CsvFormat::Labeled,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// CSV file with the first sample
    #[arg(long = "x")]
    x: PathBuf,
    /// CSV file with the second sample
    #[arg(long = "y")]
    y: PathBuf,
    /// Input layout
    #[arg(long, value_enum, default_value = "one-col")]
    format: FormatArg,
}

impl InputArgs {
    fn read(&self) -> Result<TwoSamples, Error> {
        hks::ingest_samples(&self.x, &self.y, self.format.into())
    }
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Statistic order (k >= 0)
    #[arg(long, allow_negative_numbers = true)]
    k: i64,
    #[arg(long, value_enum, default_value = "exact")]
    method: MethodArg,
    /// Maximization tolerance for k >= 6 (default 1/N)
    #[arg(long)]
    eps: Option<f64>,
    /// Permutation replicates for the p-value (0 disables)
    #[arg(long, default_value_t = 999)]
    perms: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the JSON result to this file
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct RocArgs {
    /// TOML experiment config
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct NullSimArgs {
    /// Reference distribution spec (e.g. normal:0,1)
    #[arg(long)]
    dist: String,
    #[arg(long, allow_negative_numbers = true)]
    k: i64,
    /// Discretization grid size
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Number of supremum draws
    #[arg(long, default_value_t = 100_000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WitnessArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, allow_negative_numbers = true)]
    k: i64,
    /// Plotting grid size
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselinesArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Gaussian MMD bandwidth ("auto" for the median heuristic)
    #[arg(long, default_value = "auto")]
    bandwidth: String,
    /// Polynomial MMD degree
    #[arg(long, default_value_t = 2)]
    degree: usize,
    /// Permutation replicates for p-values (0 disables)
    #[arg(long, default_value_t = 0)]
    perms: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the JSON result to this file
    #[arg(long)]
    json: Option<PathBuf>,
}

fn validate_k(k: i64) -> Result<usize, Error> {
    usize::try_from(k).map_err(|_| Error::Validation(format!("--k must be >= 0, got {k}")))
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Validation(_) => 1,
        Error::Parse { .. } | Error::Io(_) => 2,
        Error::Numerical(_) => 3,
    }
}

fn emit_json(value: &serde_json::Value, file: Option<&PathBuf>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numerical(format!("serialization failed: {e}")))?;
    println!("{text}");
    if let Some(path) = file {
        fs::write(path, text)?;
    }
    Ok(())
}

fn cmd_test(args: &TestArgs) -> Result<(), Error> {
    let k = validate_k(args.k)?;
    let s = args.input.read()?;
    let mut cfg = HksConfig {
        order: k,
        method: args.method.into(),
        eps: None,
    };
    if let Some(e) = args.eps {
        cfg = cfg.with_eps(e);
    }
    let eps_resolved = cfg.resolve_eps(s.m() + s.n());
    let mut result = cfg.compute(&s)?;
    if args.perms > 0 {
        let (_, p) = nulls::permutation_null(&s, &cfg, args.perms, args.seed)?;
        result.p_value = Some(p);
    }
    let out = json!({
        "statistic": result.statistic,
        "k": result.order,
        "method": result.method,
        "witness": {
            "t": result.witness_knot,
            "side": result.witness_side,
            "sign": result.witness_sign,
        },
        "p_value": result.p_value,
        "m": s.m(),
        "n": s.n(),
        "seed": args.seed,
        "config": {
            "x": args.input.x.display().to_string(),
            "y": args.input.y.display().to_string(),
            "format": match args.input.format { FormatArg::OneCol => "one-col", FormatArg::Labeled => "labeled" },
            "method": match args.method { MethodArg::Exact => "exact", MethodArg::Grid => "grid", MethodArg::Wang => "wang" },
            "eps": eps_resolved,
            "perms": args.perms,
        },
    });
    emit_json(&out, args.json.as_ref())
}

fn cmd_roc(args: &RocArgs) -> Result<(), Error> {
    let cfg = experiments::ExperimentConfig::from_file(&args.config)?;
    let report = experiments::run_roc(&cfg)?;
    let out = json!({
        "p": report.p_spec,
        "q": report.q_spec,
        "m": report.config.m,
        "n": report.config.n,
        "reps": report.config.reps,
        "seed": report.config.seed,
        "density_provenance": report.density_provenance,
        "version": report.version,
        "output": report.config.output,
        "tests": report.tests.iter().map(|t| json!({"name": t.name, "auc": t.auc})).collect::<Vec<_>>(),
    });
    emit_json(&out, None)
}

fn cmd_null_sim(args: &NullSimArgs) -> Result<(), Error> {
    let k = validate_k(args.k)?;
    let spec = DistributionSpec::parse(&args.dist)?;
    let null = nulls::asymptotic_null(
        &GpReference::Spec(spec.clone()),
        k,
        args.grid,
        args.draws,
        args.seed,
    )?;
    let mut text = format!(
        "# dist={} k={k} grid={} draws={} seed={}\n",
        spec.spec_string(),
        args.grid,
        args.draws,
        args.seed
    );
    for v in null.samples() {
        text.push_str(&format!("{v}\n"));
    }
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn cmd_witness(args: &WitnessArgs) -> Result<(), Error> {
    let k = validate_k(args.k)?;
    let s = args.input.read()?;
    let w = oracles::witness_function(&s, k, args.grid.max(2))?;
    let mut text = format!(
        "# t_star={} side={} sign={} statistic={} zero_gap={}\n",
        w.t_star,
        match w.side {
            hks::WitnessSide::Plus => "plus",
            hks::WitnessSide::Minus => "minus",
        },
        w.sign,
        w.statistic,
        w.zero_gap
    );
    text.push_str("t,value\n");
    for (x, v) in &w.curve {
        text.push_str(&format!("{x},{v}\n"));
    }
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn cmd_baselines(args: &BaselinesArgs) -> Result<(), Error> {
    let s = args.input.read()?;
    let bandwidth = if args.bandwidth == "auto" {
        baselines::Bandwidth::Auto
    } else {
        let v: f64 = args.bandwidth.parse().map_err(|_| {
            Error::Validation(format!(
                "--bandwidth must be a number or \"auto\", got {:?}",
                args.bandwidth
            ))
        })?;
        baselines::Bandwidth::Fixed(v)
    };
    let degree = args.degree;
    if degree < 1 {
        return Err(Error::validation("--degree must be >= 1"));
    }

    type StatFn = Box<dyn Fn(&TwoSamples) -> Result<f64, Error> + Sync>;
    let stats: Vec<(&str, StatFn)> = vec![
        (
            "energy",
            Box::new(|s: &TwoSamples| Ok(baselines::energy_distance(s)?.statistic)),
        ),
        (
            "mmd_gaussian",
            Box::new(move |s: &TwoSamples| Ok(baselines::mmd_gaussian(s, bandwidth)?.statistic)),
        ),
        (
            "mmd_polynomial",
            Box::new(move |s: &TwoSamples| Ok(baselines::mmd_polynomial(s, degree)?.statistic)),
        ),
        (
            "anderson_darling",
            Box::new(|s: &TwoSamples| Ok(baselines::anderson_darling(s)?.statistic)),
        ),
    ];
    let mut entries = serde_json::Map::new();
    for (name, f) in &stats {
        let statistic = f(&s)?;
        let p_value = if args.perms > 0 {
            let (_, p) = nulls::permutation_null_with(&s, f, args.perms, args.seed)?;
            Some(p)
        } else {
            None
        };
        entries.insert(
            name.to_string(),
            json!({"statistic": statistic, "p_value": p_value}),
        );
    }
    let out = json!({
        "m": s.m(),
        "n": s.n(),
        "seed": args.seed,
        "tests": entries,
        "config": {
            "x": args.input.x.display().to_string(),
            "y": args.input.y.display().to_string(),
            "bandwidth": args.bandwidth,
            "degree": args.degree,
            "perms": args.perms,
        },
    });
    emit_json(&out, args.json.as_ref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Roc(args) => cmd_roc(args),
        Command::NullSim(args) => cmd_null_sim(args),
        Command::Witness(args) => cmd_witness(args),
        Command::Baselines(args) => cmd_baselines(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
