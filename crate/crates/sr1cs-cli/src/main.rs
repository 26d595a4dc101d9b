//! `sr1cs`: reproducible SR1 experiments on generated quadratics and logistic
//! regression, rate-envelope tables and the property suites.
//!
//! Exit status is 0 on success, 1 on a solver, I/O or verification failure
//! and 2 on a usage error.

// `!(x > 0.0)` is used on purpose: it rejects NaN together with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "sr1cs", version, about = "SR1 quasi-Newton experiments with the correction strategy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// SR1 with the exact Hessian on a generated quadratic.
    Quad(QuadArgs),
    /// A solver on regularized logistic regression.
    Logistic(LogisticArgs),
    /// Rate envelopes and starting moments for given constants.
    Bounds(BoundsArgs),
    /// Seeded property suites.
    Verify(VerifyArgs),
    /// A synthetic logistic dataset in LIBSVM format.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Precision {
    F64,
    F256,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Form {
    Direct,
    Factored,
}

#[derive(Args, Debug)]
struct QuadArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    kappa: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Iteration cap; defaults to n + 1.
    #[arg(long)]
    iters: Option<usize>,
    /// Stop once ‖∇f‖ ≤ tol·‖∇f(x₀)‖.
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    /// Trace CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Envelope CSV path; defaults to the trace path with `.envelopes.csv`.
    #[arg(long)]
    envelopes: Option<PathBuf>,
    /// Record σ, V, ν and θ in the trace.
    #[arg(long)]
    diagnostics: bool,
    #[arg(long, value_enum, default_value_t = Precision::F256)]
    precision: Precision,
    #[arg(long, value_enum, default_value_t = Form::Factored)]
    form: Form,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Sr1,
    #[value(name = "sr1_cs")]
    Sr1Cs,
    Bfgs,
    Newton,
}

#[derive(Args, Debug)]
struct LogisticArgs {
    /// LIBSVM dataset; a synthetic one is generated when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Synthetic sample count.
    #[arg(long, default_value_t = 200)]
    m: usize,
    /// Synthetic dimension.
    #[arg(long, default_value_t = 30)]
    n: usize,
    /// Synthetic label separation.
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
    /// Regularization; defaults to 1/(10m).
    #[arg(long)]
    gamma: Option<f64>,
    /// Self-concordance constant of the correction strategy.
    #[arg(long = "m-const", default_value_t = 1.0)]
    m_const: f64,
    #[arg(long, value_enum, default_value_t = Method::Sr1Cs)]
    method: Method,
    /// Newton steps before the quasi-Newton phase.
    #[arg(long, default_value_t = 3)]
    warm_start: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    envelopes: Option<PathBuf>,
    #[arg(long)]
    diagnostics: bool,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    kappa: f64,
    #[arg(long, default_value_t = 100)]
    k_max: usize,
    /// `λ_f(x₀)`, for the local-condition verdict.
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long = "m-const")]
    m_const: Option<f64>,
    /// Envelope CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Lemmas,
    Quadratic,
    General,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FaultArg {
    None,
    HalfUpdate,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    suite: SuiteArg,
    /// Cases per suite; defaults to 1000, 50 and 10 for the lemma,
    /// quadratic and general suites.
    #[arg(long)]
    cases: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write the JSON summary here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Corrupts the SR1 update in the lemma suite, to check that it is caught.
    #[arg(long, value_enum, default_value_t = FaultArg::None, hide = true)]
    fault: FaultArg,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Quad(a) => commands::quad(a),
        Command::Logistic(a) => commands::logistic(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Verify(a) => commands::verify(a),
        Command::Gen(a) => commands::gen(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<commands::UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
