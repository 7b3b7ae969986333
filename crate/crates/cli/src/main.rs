//! `skorokhod`: reflection, the integral operator and its iterations,
//! structural verification and fluid-queue simulation from the command line.
//!
//! Exit status: 0 on success, 1 when a requested check fails, 2 on invalid
//! input or configuration, 3 on I/O failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use skorokhod::io::{read_breakpoints, write_function_csv, write_reflection_csv, write_trace_csv, TraceSummary};
use skorokhod::simulate::{random_path, run_stationary, Scenario, SourceModel};
use skorokhod::suite::{run_suite, SuiteConfig, SuiteReport};
use skorokhod::{
    iterate_phi_on, iterate_theta_on, reflect, theta_on_grid, Cumulative, Error, IterationTrace, PiecewiseLinear,
    SignedPath, SCHEMA_VERSION,
};

#[derive(Parser)]
#[command(name = "skorokhod", version, about = "One-sided reflection of piecewise-linear fluid paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reflect X = A - C: content, regulator and σ* on the refined grid.
    Reflect(PathArgs),
    /// Apply Θ once to the function given by --function.
    Theta(PathArgs),
    /// Iterate Q_1 = A, Q_{k+1} = Θ(Q_k).
    Iterate(PathArgs),
    /// Iterate B_1 = C, B_{k+1} = Φ(B_k).
    PhiIterate(PathArgs),
    /// Run every structural check on the given path or on random ones.
    Verify(VerifyArgs),
    /// Long-horizon fluid-queue experiment.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

/// Options shared by every command. Values given here override the
/// `--config` file, which overrides the defaults.
#[derive(Args)]
struct Common {
    /// JSON file with default values for these options.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Split every grid cell into this many equal parts.
    #[arg(long)]
    oversample: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PathArgs {
    /// Arrival cumulative A (CSV `t,value` or JSON breakpoints).
    #[arg(long)]
    arrivals: Option<PathBuf>,
    /// Service cumulative C.
    #[arg(long)]
    services: Option<PathBuf>,
    /// Argument of Θ, for `theta`.
    #[arg(long)]
    function: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    paths: PathArgs,
    /// Check this many random paths instead of reading one.
    #[arg(long)]
    generate: Option<usize>,
    /// Largest knot count per cumulative for generated paths.
    #[arg(long, default_value_t = 200)]
    max_knots: usize,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    source_model: Option<String>,
    #[arg(long)]
    arrival_rate: Option<f64>,
    #[arg(long)]
    service_rate: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    warmup_fraction: Option<f64>,
    #[arg(long)]
    on_mean: Option<f64>,
    #[arg(long)]
    off_mean: Option<f64>,
    #[command(flatten)]
    common: Common,
}

/// Contents of a `--config` file for the path commands.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    arrivals: Option<PathBuf>,
    services: Option<PathBuf>,
    function: Option<PathBuf>,
    output: Option<PathBuf>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    oversample: Option<usize>,
    seed: Option<u64>,
    format: Option<Format>,
}

enum Failure {
    Checks(String),
    Input(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(e) => Failure::Io(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::from(Error::from(e))
    }
}

/// Options after merging flags, config file and defaults.
struct Settings {
    arrivals: Option<PathBuf>,
    services: Option<PathBuf>,
    function: Option<PathBuf>,
    output: Option<PathBuf>,
    tol: f64,
    max_iter: usize,
    oversample: usize,
    seed: u64,
    format: Option<Format>,
}

fn read_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T, Failure> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))
        }
    }
}

fn settings(args: &PathArgs) -> Result<Settings, Failure> {
    let file: RunConfig = read_config(args.common.config.as_deref())?;
    let c = &args.common;
    let s = Settings {
        arrivals: args.arrivals.clone().or(file.arrivals),
        services: args.services.clone().or(file.services),
        function: args.function.clone().or(file.function),
        output: c.output.clone().or(file.output),
        tol: c.tol.or(file.tol).unwrap_or(1e-9),
        max_iter: c.max_iter.or(file.max_iter).unwrap_or(10_000),
        oversample: c.oversample.or(file.oversample).unwrap_or(1),
        seed: c.seed.or(file.seed).unwrap_or(0),
        format: c.format.or(file.format),
    };
    if !(s.tol > 0.0 && s.tol.is_finite()) {
        return Err(Failure::Input(format!("--tol must be positive, got {}", s.tol)));
    }
    if s.oversample == 0 {
        return Err(Failure::Input("--oversample must be at least 1".into()));
    }
    Ok(s)
}

fn with_path(p: &Path, e: Error) -> Failure {
    match Failure::from(e) {
        Failure::Io(msg) => Failure::Io(format!("{}: {msg}", p.display())),
        Failure::Input(msg) => Failure::Input(format!("{}: {msg}", p.display())),
        other => other,
    }
}

fn load_function(p: &Path) -> Result<PiecewiseLinear<f64>, Failure> {
    read_breakpoints(p)
        .and_then(|b| b.into_function())
        .map_err(|e| with_path(p, e))
}

fn load_path(s: &Settings) -> Result<SignedPath<f64>, Failure> {
    let (a, c) = match (&s.arrivals, &s.services) {
        (Some(a), Some(c)) => (a, c),
        _ => return Err(Failure::Input("both --arrivals and --services are required".into())),
    };
    let cumulative = |p: &Path| Cumulative::from_function(load_function(p)?).map_err(|e| with_path(p, e));
    Ok(SignedPath::new(cumulative(a)?, cumulative(c)?)?)
}

fn sink(output: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match output {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json(output: Option<&Path>, value: &impl Serialize) -> Result<(), Failure> {
    let mut w = sink(output)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ReflectionJson<'a> {
    spec: &'static str,
    t: &'a [f64],
    qstar: &'a [f64],
    regulator: Vec<f64>,
    sigma_star: Vec<f64>,
}

fn cmd_reflect(args: &PathArgs) -> Result<(), Failure> {
    let s = settings(args)?;
    let x = load_path(&s)?;
    let r = reflect(&x);
    match s.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = sink(s.output.as_deref())?;
            write_reflection_csv(&mut w, &r, &x)?;
            w.flush()?;
        }
        Format::Json => {
            let q = r.qstar();
            emit_json(
                s.output.as_deref(),
                &ReflectionJson {
                    spec: SCHEMA_VERSION,
                    t: q.knots(),
                    qstar: q.values(),
                    regulator: q.knots().iter().map(|&t| r.regulator().at(t)).collect(),
                    sigma_star: r.sigma_star_on_grid(&x),
                },
            )?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct FunctionJson<'a> {
    spec: &'static str,
    knots: &'a [f64],
    values: &'a [f64],
}

fn cmd_theta(args: &PathArgs) -> Result<(), Failure> {
    let s = settings(args)?;
    let x = load_path(&s)?;
    let path = s
        .function
        .as_deref()
        .ok_or_else(|| Failure::Input("--function is required".into()))?;
    let q = load_function(path)?;
    let grid = x.grid().merged(q.knots()).oversample(s.oversample);
    let image = theta_on_grid(&q, &x, &grid)?;
    match s.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = sink(s.output.as_deref())?;
            write_function_csv(&mut w, &image)?;
            w.flush()?;
        }
        Format::Json => emit_json(
            s.output.as_deref(),
            &FunctionJson {
                spec: SCHEMA_VERSION,
                knots: image.knots(),
                values: image.values(),
            },
        )?,
    }
    Ok(())
}

fn emit_trace(s: &Settings, trace: &IterationTrace<f64>) -> Result<(), Failure> {
    if !trace.converged {
        eprintln!(
            "warning: {} did not converge to tolerance {:e} within {} steps",
            trace.label, trace.tolerance, s.max_iter
        );
    }
    match s.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = sink(s.output.as_deref())?;
            write_trace_csv(&mut w, trace)?;
            w.flush()?;
        }
        Format::Json => emit_json(s.output.as_deref(), &TraceSummary::new(trace))?,
    }
    Ok(())
}

fn cmd_iterate(args: &PathArgs, phi: bool) -> Result<(), Failure> {
    let s = settings(args)?;
    let x = load_path(&s)?;
    let grid = reflect(&x).iteration_grid(&x).oversample(s.oversample);
    let trace = if phi {
        iterate_phi_on(&x, &grid, s.tol, s.max_iter)?
    } else {
        iterate_theta_on(&x, &grid, s.tol, s.max_iter)?
    };
    emit_trace(&s, &trace)
}

fn write_report_csv(w: &mut dyn Write, report: &SuiteReport) -> io::Result<()> {
    writeln!(w, "check,passed,metric,threshold,statement")?;
    for c in &report.checks {
        writeln!(
            w,
            "{},{},{},{},\"{}\"",
            c.name,
            c.passed,
            c.metric,
            c.threshold,
            c.statement.replace('"', "\"\"")
        )?;
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let s = settings(&args.paths)?;
    let paths: Vec<SignedPath<f64>> = match args.generate {
        Some(n) => (0..n as u64)
            .map(|i| random_path(s.seed.wrapping_add(i), args.max_knots))
            .collect(),
        None => vec![load_path(&s)?],
    };
    let cfg = SuiteConfig {
        max_iter: s.max_iter,
        seed: s.seed,
        ..SuiteConfig::default()
    };
    let report = run_suite(&paths, &cfg)?;
    match s.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(s.output.as_deref(), &report)?,
        Format::Csv => {
            let mut w = sink(s.output.as_deref())?;
            write_report_csv(&mut w, &report)?;
            w.flush()?;
        }
    }
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(Failure::Checks(format!("failed checks: {}", failed.join(", "))))
    }
}

fn scenario(args: &SimulateArgs) -> Result<Scenario, Failure> {
    let mut value: serde_json::Value = match args.common.config.as_deref() {
        Some(p) => read_config::<serde_json::Value>(Some(p))?,
        None => serde_json::json!({}),
    };
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Failure::Input("scenario config must be a JSON object".into()))?;
    let mut set = |key: &str, v: Option<serde_json::Value>| {
        if let Some(v) = v {
            obj.insert(key.to_string(), v);
        }
    };
    set("source_model", args.source_model.clone().map(Into::into));
    set("arrival_rate", args.arrival_rate.map(Into::into));
    set("service_rate", args.service_rate.map(Into::into));
    set("horizon", args.horizon.map(Into::into));
    set("grid_step", args.grid_step.map(Into::into));
    set("warmup_fraction", args.warmup_fraction.map(Into::into));
    set("on_mean", args.on_mean.map(Into::into));
    set("off_mean", args.off_mean.map(Into::into));
    set("seed", args.common.seed.map(Into::into));
    obj.entry("seed").or_insert(0.into());
    obj.entry("source_model")
        .or_insert(serde_json::to_value(SourceModel::OnOff).expect("plain enum"));
    Ok(serde_json::from_value(value)?)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    if args.common.format == Some(Format::Csv) {
        return Err(Failure::Input("simulate reports JSON only".into()));
    }
    let sc = scenario(args)?;
    let report = run_stationary(&sc)?;
    emit_json(args.common.output.as_deref(), &report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Reflect(a) => cmd_reflect(a),
        Command::Theta(a) => cmd_theta(a),
        Command::Iterate(a) => cmd_iterate(a, false),
        Command::PhiIterate(a) => cmd_iterate(a, true),
        Command::Verify(a) => cmd_verify(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
