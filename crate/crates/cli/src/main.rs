//! `estermann verify <suite>` runs check suites and streams JSON-lines
//! reports; `estermann eval <target>` prints single values.
//!
//! Exit codes: 0 success (skips allowed), 1 a check failed or a numerical
//! error, 2 usage or configuration error, 3 argument at a pole, 4 quadrature
//! or series failed to decay.

mod config;
mod eval;
mod parse;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use estermann::report::{worst_deviation, Tally};
use estermann::suites::{run_suite, Suite};
use estermann::{AdditiveTwist, CheckReport, ContourSpec, Error, ShiftTriple, TestFunction, C64};

use config::{ContourFile, FileConfig, Overrides};
use eval::Evaluation;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_POLE: u8 = 3;
const EXIT_DECAY: u8 = 4;

#[derive(Parser)]
#[command(name = "estermann", version, about = "Checks for shifted GL(3) Estermann functions and Voronoi summation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a check suite and write one JSON report per case.
    Verify(VerifyArgs),
    /// Evaluate a single quantity.
    Eval(EvalArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// identities, hurwitz-fe, continuation, polar, estermann-fe, voronoi,
    /// corollary, kernels or all.
    suite: String,
    /// TOML configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Moduli, e.g. `2` or `1..4` or `1,3,5`.
    #[arg(long = "K", value_name = "LIST")]
    moduli: Option<String>,
    /// Shift triple `α,β,γ` (repeatable).
    #[arg(long, value_name = "TRIPLE")]
    shifts: Vec<String>,
    /// Comma-separated s values, e.g. `0.5,0.5+2i`.
    #[arg(long = "s", value_name = "LIST", allow_hyphen_values = true)]
    s_values: Option<String>,
    /// Test function: exp, texp, t2exp, pow:a, bump, bump:lo,hi.
    #[arg(long)]
    phi: Option<String>,
    #[command(flatten)]
    tolerances: ToleranceFlags,
    #[command(flatten)]
    contour: ContourFlags,
    /// Hard cap on the dual-sum length.
    #[arg(long)]
    dual_cap: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Write reports here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Default)]
struct ToleranceFlags {
    #[arg(long, value_name = "TOL")]
    tol_identities: Option<f64>,
    #[arg(long, value_name = "TOL")]
    tol_hurwitz_fe: Option<f64>,
    #[arg(long, value_name = "TOL")]
    tol_continuation: Option<f64>,
    #[arg(long, value_name = "TOL")]
    tol_polar: Option<f64>,
    #[arg(long, value_name = "TOL")]
    tol_polar_h_independence: Option<f64>,
    #[arg(long, value_name = "TOL")]
    tol_estermann_fe: Option<f64>,
    #[arg(long, value_name = "TOL")]
    tol_voronoi: Option<f64>,
    #[arg(long, value_name = "TOL")]
    tol_perron: Option<f64>,
    #[arg(long, value_name = "TOL")]
    tol_corollary: Option<f64>,
    #[arg(long, value_name = "TOL")]
    tol_even_tau3: Option<f64>,
    #[arg(long, value_name = "TOL")]
    tol_kernels: Option<f64>,
}

impl ToleranceFlags {
    fn pairs(&self) -> Vec<(String, f64)> {
        let all = [
            ("identities", self.tol_identities),
            ("hurwitz-fe", self.tol_hurwitz_fe),
            ("continuation", self.tol_continuation),
            ("polar", self.tol_polar),
            ("polar-h-independence", self.tol_polar_h_independence),
            ("estermann-fe", self.tol_estermann_fe),
            ("voronoi", self.tol_voronoi),
            ("perron", self.tol_perron),
            ("corollary", self.tol_corollary),
            ("even-tau3", self.tol_even_tau3),
            ("kernels", self.tol_kernels),
        ];
        all.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))).collect()
    }
}

#[derive(Args, Default, Clone, Copy)]
struct ContourFlags {
    /// Abscissa of the vertical contour.
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    /// Initial truncation height of the contour.
    #[arg(long)]
    height: Option<f64>,
    /// Trapezoid step on the contour.
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Tau,
    Kloosterman,
    Estermann,
    #[value(name = "G")]
    G,
    #[value(name = "F-kernel")]
    FKernel,
    #[value(name = "H-kernel")]
    HKernel,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(value_enum)]
    target: Target,
    /// Shift triple `α,β,γ`.
    #[arg(long, default_value = "0,0,0")]
    shifts: String,
    /// Argument of τ.
    #[arg(long)]
    n: Option<u64>,
    /// Kloosterman arguments S(a, b; c).
    #[arg(long, allow_hyphen_values = true)]
    a: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<i64>,
    #[arg(long)]
    c: Option<u64>,
    /// Complex point, e.g. `0.5+2i`.
    #[arg(long = "s", allow_hyphen_values = true)]
    s: Option<String>,
    #[arg(long = "H", allow_hyphen_values = true)]
    h: Option<i64>,
    #[arg(long = "K")]
    k: Option<u64>,
    /// Kernel modulus |x|.
    #[arg(long)]
    x: Option<f64>,
    /// Kernel phase as a multiple of π, e.g. `1.5pi`.
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    theta: String,
    #[arg(long, default_value = "exp")]
    phi: String,
    #[command(flatten)]
    contour: ContourFlags,
    /// Print a JSON record instead of text.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify(args) => verify(args),
        Command::Eval(args) => run_eval(args),
    }
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    eprintln!("run `estermann --help` for usage");
    ExitCode::from(EXIT_CONFIG)
}

fn verify(args: VerifyArgs) -> ExitCode {
    let suites: Vec<Suite> = if args.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        match args.suite.parse() {
            Ok(s) => vec![s],
            Err(e) => return config_error(e),
        }
    };
    let file = match &args.config {
        Some(path) => match FileConfig::load(path) {
            Ok(f) => f,
            Err(e) => return config_error(e),
        },
        None => FileConfig::default(),
    };
    let flags = Overrides {
        moduli: args.moduli,
        shifts: args.shifts,
        s: args.s_values,
        phi: args.phi,
        tolerances: args.tolerances.pairs(),
        contour: ContourFile { sigma: args.contour.sigma, height: args.contour.height, step: args.contour.step },
        dual_cap: args.dual_cap,
        threads: args.threads,
        output: args.output,
    };
    let run = match config::merge(file, flags) {
        Ok(r) => r,
        Err(e) => return config_error(e),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = run.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => return config_error(e),
    };

    let to_stdout = run.output.is_none();
    let mut sink: Box<dyn Write> = match &run.output {
        Some(path) => match File::create(path) {
            Ok(f) => Box::new(BufWriter::new(f)),
            Err(e) => return config_error(format!("cannot create {}: {e}", path.display())),
        },
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };

    let mut rows = Vec::new();
    let mut any_fail = false;
    for suite in suites {
        let start = Instant::now();
        let reports = pool.install(|| run_suite(suite, &run.suite));
        let elapsed = start.elapsed().as_secs_f64();
        if let Err(e) = write_reports(&mut sink, &reports) {
            eprintln!("error: writing reports: {e}");
            return ExitCode::from(EXIT_FAIL);
        }
        let tally = Tally::of(&reports);
        any_fail |= tally.failed > 0;
        rows.push((suite, tally, worst_deviation(&reports), elapsed));
    }
    if let Err(e) = sink.flush() {
        eprintln!("error: writing reports: {e}");
        return ExitCode::from(EXIT_FAIL);
    }
    drop(sink);

    let table = summary_table(&rows);
    if to_stdout {
        eprint!("{table}");
    } else {
        print!("{table}");
    }
    if any_fail {
        ExitCode::from(EXIT_FAIL)
    } else {
        ExitCode::SUCCESS
    }
}

fn write_reports(sink: &mut dyn Write, reports: &[CheckReport]) -> io::Result<()> {
    for r in reports {
        serde_json::to_writer(&mut *sink, r)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

fn summary_table(rows: &[(Suite, Tally, f64, f64)]) -> String {
    let mut out =
        format!("{:<14} {:>6} {:>6} {:>8} {:>12} {:>9}\n", "suite", "pass", "fail", "skipped", "worst dev", "time (s)");
    for (suite, t, worst, secs) in rows {
        out.push_str(&format!(
            "{:<14} {:>6} {:>6} {:>8} {:>12.3e} {:>9.2}\n",
            suite.name(),
            t.passed,
            t.failed,
            t.skipped,
            worst,
            secs
        ));
    }
    out
}

fn run_eval(args: EvalArgs) -> ExitCode {
    let json = args.json;
    match evaluate(args) {
        Ok(e) => {
            print_evaluation(&e, json);
            ExitCode::SUCCESS
        }
        Err(EvalError::Usage(msg)) => config_error(msg),
        Err(EvalError::Numeric(err)) => {
            eprintln!("error: {err}");
            let code = match &err {
                e if e.is_pole() => EXIT_POLE,
                e if e.is_decay_failure() => EXIT_DECAY,
                Error::InvalidArgument(_) | Error::NotCoprime { .. } | Error::OutOfDomain(_) => EXIT_CONFIG,
                _ => EXIT_FAIL,
            };
            ExitCode::from(code)
        }
    }
}

enum EvalError {
    Usage(String),
    Numeric(Error),
}

impl From<Error> for EvalError {
    fn from(e: Error) -> Self {
        EvalError::Numeric(e)
    }
}

impl From<String> for EvalError {
    fn from(e: String) -> Self {
        EvalError::Usage(e)
    }
}

fn need<T>(value: Option<T>, flag: &str, target: &str) -> Result<T, EvalError> {
    value.ok_or_else(|| EvalError::Usage(format!("`eval {target}` needs --{flag}")))
}

fn evaluate(args: EvalArgs) -> Result<Evaluation, EvalError> {
    let shifts: ShiftTriple = parse::shifts(&args.shifts)?;
    let s = || -> Result<C64, EvalError> { Ok(parse::complex(&need(args.s.clone(), "s", "this target")?)?) };
    let phi = || -> Result<TestFunction, EvalError> { Ok(args.phi.parse::<TestFunction>()?) };
    let contour = |phi: &TestFunction| -> Result<ContourSpec, EvalError> {
        let c = args.contour;
        let spec = ContourSpec::new(
            c.sigma.unwrap_or_else(|| phi.kernel_sigma()),
            c.height.unwrap_or(ContourSpec::DEFAULT_HEIGHT),
            c.step.unwrap_or(ContourSpec::DEFAULT_STEP),
        )?;
        Ok(spec)
    };
    Ok(match args.target {
        Target::Tau => eval::tau(&shifts, need(args.n, "n", "tau")?)?,
        Target::Kloosterman => eval::kloosterman_sum(
            need(args.a, "a", "kloosterman")?,
            need(args.b, "b", "kloosterman")?,
            need(args.c, "c", "kloosterman")?,
        )?,
        Target::Estermann => {
            let twist = AdditiveTwist::new(need(args.h, "H", "estermann")?, need(args.k, "K", "estermann")?)?;
            eval::estermann(s()?, twist, &shifts)?
        }
        Target::G => eval::g_factor(s()?, need(args.k, "K", "G")?, &shifts)?,
        Target::FKernel => {
            let phi = phi()?;
            let theta = parse::phase(&args.theta)?;
            eval::f_kernel_at(&shifts, need(args.x, "x", "F-kernel")?, theta, &phi, &contour(&phi)?)?
        }
        Target::HKernel => {
            let phi = phi()?;
            eval::h_kernel_at(need(args.x, "x", "H-kernel")?, &phi, &contour(&phi)?)?
        }
    })
}

fn fmt_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.14e} {sign} {:.14e}i", z.re, z.im.abs())
}

fn print_evaluation(e: &Evaluation, json: bool) {
    if json {
        println!("{}", serde_json::to_string(e).expect("evaluation serializes"));
        return;
    }
    println!("{} = {}", e.target, fmt_complex(e.value));
    match e.error_estimate {
        Some(err) => println!("error estimate: {err:.3e} ({})", e.estimate_source),
        None => println!("error estimate: unavailable"),
    }
}
