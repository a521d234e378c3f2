//! `debias`: estimation, tuning reports, benchmarks and oracle queries.
//!
//! Exit codes: 0 success, 2 domain or precondition error (including bad
//! settings), 3 resource exceeded, 4 i/o or malformed input.

mod config;
mod error;
mod input;
mod output;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use debias_bench::pipeline::{run_estimate, run_tune, EstimateConfig, FunctionSpec, RunSource};
use debias_bench::plot::scatter_svg;
use debias_bench::study::{run_variance_study, StudySource, VarianceStudyConfig};
use debias_bench::toy_bench::{run_toy_lvm_bench, BenchMethod, ToyLvmBenchConfig};
use debias_bench::toy_lvm::ToyLvmSpec;
use debias_core::oracle::{
    conditional_expectation_variance, cycling_cov_bound, cycling_cross_moment, prop1_bounds, prop2_bound, prop3_bound,
    reciprocal_tail_expectation, simple_cross_moment, simple_variance_limit, MomentParams,
};
use debias_core::tuning::{choose_p, wnv_bound, wnv_minimize, x0_star, BoundKind, WnvParams};
use debias_core::{CoefficientKind, Expansion, ExpansionKind, TruncationLaw};
use serde::Serialize;
use serde_json::json;

use config::{
    resolve, Auto, EstimateSettings, Format, FunctionChoice, SourceChoice, StudySettings, ToyBenchSettings,
    TuneSettings,
};
use error::{CliError, CliResult};
use output::{print_json, write_meta, write_rows};

#[derive(Parser)]
#[command(name = "debias", version, about = "Unbiased estimation of f(E[X]) by randomly truncated Taylor series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pilot run: estimate (m, var), choose x0 by bootstrap and p by the p rule.
    Tune(TuneFlags),
    /// Independent replicates of the sum (or gradient) estimator.
    Estimate(EstimateFlags),
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Closed-form moments and bounds.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Summed log-likelihood on toy-model data: Taylor estimators against MLMC.
    ToyLvm(ToyBenchFlags),
    /// Empirical moments of the sum estimators over a grid of p.
    VarianceStudy(StudyFlags),
}

#[derive(Args, Serialize)]
struct TuneFlags {
    /// JSON config file; flags override its values.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// gaussian:<mean>,<var> | toy-lvm:<d>,<theta>[,y...] | stdin
    #[arg(long)]
    source: Option<SourceChoice>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    n_boot: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct EstimateFlags {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// log | reciprocal | custom:<file>
    #[arg(long)]
    function: Option<FunctionChoice>,
    /// simple | cycling | mvue
    #[arg(long)]
    estimator: Option<CoefficientKind>,
    /// auto | <value>
    #[arg(long)]
    x0: Option<Auto>,
    /// auto | <value>
    #[arg(long)]
    p: Option<Auto>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    n_boot: Option<usize>,
    #[arg(long, alias = "reps")]
    replicates: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    r_max: Option<usize>,
    /// gaussian:<mean>,<var> | toy-lvm:<d>,<theta>[,y...] | stdin
    #[arg(long)]
    source: Option<SourceChoice>,
    /// Gradient estimator on a pair source (toy-lvm, or stdin lines `X g_1 ... g_d`).
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    gradient: bool,
    /// Record table path (default stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Metadata path (default `<output>.meta.json`, or stderr).
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ToyBenchFlags {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    /// Number of observations.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    /// Expected latent draws per observation.
    #[arg(long)]
    budget: Option<f64>,
    /// Comma separated subset of simple,cycling,mvue,mlmc.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<BenchMethod>>,
    #[arg(long, alias = "reps")]
    replicates: Option<u64>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    p_tilde: Option<f64>,
    /// Largest MLMC cost allowed for one observation.
    #[arg(long)]
    max_cost: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Scatter plot of estimate against cost.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct StudyFlags {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// log | reciprocal
    #[arg(long)]
    function: Option<FunctionChoice>,
    /// gaussian:<mean>,<var> | toy-lvm:<d>,<theta>[,y...]
    #[arg(long)]
    source: Option<SourceChoice>,
    /// auto (the exact minimiser) | <value>
    #[arg(long)]
    x0: Option<Auto>,
    /// Comma separated grid of p.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<CoefficientKind>>,
    #[arg(long, alias = "reps")]
    replicates: Option<u64>,
    #[arg(long)]
    seed: u64,
    /// Pilot size charged in the work-normalised variance.
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    r_max: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Args)]
struct MomentArgs {
    #[arg(long, allow_hyphen_values = true)]
    m: f64,
    #[arg(long)]
    var: f64,
    #[arg(long)]
    x0: f64,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// p -> 0 limit of E[var(f^S | R)] for the reciprocal expansion.
    SimpleVarianceLimit(MomentArgs),
    /// E[1/R | R >= k] and its bound.
    ReciprocalTail {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        k: usize,
    },
    /// var / x0^2 + (m / x0 - 1)^2.
    Beta2(MomentArgs),
    /// (m^2 + var) / m.
    X0Star {
        #[arg(long, allow_hyphen_values = true)]
        m: f64,
        #[arg(long)]
        var: f64,
    },
    /// min(1 - beta2, 1 / (n0 + 1)).
    ChooseP {
        #[arg(long)]
        beta2: f64,
        #[arg(long)]
        n0: usize,
    },
    /// cov(U^S_k, U^S_l).
    SimpleCrossMoment {
        #[command(flatten)]
        moments: MomentArgs,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
    },
    /// E[U^C_{r,k} U^C_{r,l}] and the covariance bound.
    CyclingCrossMoment {
        #[command(flatten)]
        moments: MomentArgs,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
    },
    /// Variance bounds of the sum estimators at one p.
    Bounds {
        #[command(flatten)]
        moments: MomentArgs,
        #[arg(long)]
        p: f64,
        /// log | reciprocal
        #[arg(long, default_value = "reciprocal")]
        function: FunctionChoice,
    },
    /// Work-normalised variance bound at p, or its minimiser when p is omitted.
    Wnv {
        #[arg(long, value_enum)]
        kind: WnvKind,
        #[arg(long)]
        n0: usize,
        #[arg(long)]
        beta0: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Closed-form moments of one toy-model observation.
    ToyLvm {
        #[arg(long)]
        d: usize,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        /// Comma separated observation (default theta in every coordinate).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Option<Vec<f64>>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum WnvKind {
    Simple,
    Cycling,
}

fn toy_spec(d: usize, theta: f64, y: Option<Vec<f64>>) -> CliResult<ToyLvmSpec> {
    Ok(ToyLvmSpec::new(d, theta, y.unwrap_or_else(|| vec![theta; d]))?)
}

fn run_source(choice: Option<&SourceChoice>, gradient: bool) -> CliResult<RunSource> {
    match choice {
        None => Err(CliError::Config("no sample source given (--source)".into())),
        Some(SourceChoice::Gaussian { mean, var }) => Ok(RunSource::Gaussian { mean: *mean, var: *var }),
        Some(SourceChoice::ToyLvm { d, theta, y }) => Ok(RunSource::ToyLvm(toy_spec(*d, *theta, y.clone())?)),
        Some(SourceChoice::Stdin) => {
            let stdin = io::stdin().lock();
            if gradient {
                let (dim, xs, gs) = input::read_pairs(stdin)?;
                Ok(RunSource::ReplayPairs { dim, xs, gs })
            } else {
                Ok(RunSource::Replay(input::read_samples(stdin)?))
            }
        }
    }
}

fn function_spec(choice: &FunctionChoice) -> CliResult<FunctionSpec> {
    Ok(match choice {
        FunctionChoice::Log => FunctionSpec::Log,
        FunctionChoice::Reciprocal => FunctionSpec::Reciprocal,
        FunctionChoice::Custom(path) => {
            let (c, gammas) = input::read_coefficients(path)?;
            FunctionSpec::Custom { c, gammas }
        }
    })
}

fn cmd_tune(flags: TuneFlags) -> CliResult<()> {
    let s: TuneSettings = resolve(flags.config.as_deref(), &flags)?;
    let source = run_source(s.source.as_ref(), false)?;
    let cfg = EstimateConfig { n0: s.n0, alpha: s.alpha, n_boot: s.n_boot, seed: s.seed, ..EstimateConfig::default() };
    let summary = run_tune(&cfg, &source)?;
    print_json(&json!({ "config": s, "summary": summary }))
}

fn cmd_estimate(flags: EstimateFlags) -> CliResult<()> {
    let s: EstimateSettings = resolve(flags.config.as_deref(), &flags)?;
    let source = run_source(s.source.as_ref(), s.gradient)?;
    let cfg = EstimateConfig {
        function: function_spec(&s.function)?,
        estimator: s.estimator,
        gradient: s.gradient,
        x0: s.x0.value(),
        p: s.p.value(),
        n0: s.n0,
        alpha: s.alpha,
        n_boot: s.n_boot,
        replicates: s.replicates,
        seed: s.seed,
        r_max: s.r_max,
    };
    let run = run_estimate(&cfg, &source)?;
    write_rows(&run.records, s.output.as_deref(), s.format)?;
    let failures = run.failures();
    write_meta(
        "estimate",
        &s,
        json!({
            "tuning": { "x0": run.x0, "p": run.p, "pilot": run.pilot },
            "pilot_cost": run.pilot_cost,
            "total_cost": run.total_cost,
            "failures": failures,
        }),
        s.output.as_deref(),
        s.meta.as_deref(),
    )?;
    match run.first_error {
        Some(err) if failures == s.replicates => Err(err.into()),
        _ => Ok(()),
    }
}

fn cmd_bench_toy(flags: ToyBenchFlags) -> CliResult<()> {
    let s: ToyBenchSettings = resolve(flags.config.as_deref(), &flags)?;
    let cfg = ToyLvmBenchConfig {
        d: s.d,
        n: s.n,
        theta: s.theta,
        budget: s.budget,
        methods: s.methods.clone(),
        replicates: s.replicates,
        seed: s.seed,
        p_tilde: s.p_tilde,
        max_cost: s.max_cost,
        data: None,
    };
    let out = run_toy_lvm_bench(&cfg)?;
    write_rows(&out.records, s.output.as_deref(), s.format)?;
    if let Some(path) = &s.svg {
        let title = format!("toy LVM, d = {}, n = {}, budget {}", s.d, s.n, s.budget);
        std::fs::write(path, scatter_svg(&out.records, &title, Some(out.truth)))
            .map_err(|e| io::Error::new(e.kind(), format!("cannot write {}: {e}", path.display())))?;
    }
    write_meta(
        "bench toy-lvm",
        &s,
        json!({
            "truth": out.truth,
            "theta_star": out.theta_star,
            "taylor_p": out.taylor_p,
            "mlmc_level": out.mlmc_level,
            "mlmc_expected_cost": out.mlmc_expected_cost,
            "data": out.data,
        }),
        s.output.as_deref(),
        s.meta.as_deref(),
    )
}

fn cmd_bench_study(flags: StudyFlags) -> CliResult<()> {
    let s: StudySettings = resolve(flags.config.as_deref(), &flags)?;
    let function = match s.function {
        FunctionChoice::Log => ExpansionKind::Log,
        FunctionChoice::Reciprocal => ExpansionKind::Reciprocal,
        FunctionChoice::Custom(_) => {
            return Err(CliError::Config("variance study supports log and reciprocal only".into()))
        }
    };
    let source = match &s.source {
        SourceChoice::Gaussian { mean, var } => StudySource::Gaussian { m: *mean, var: *var },
        SourceChoice::ToyLvm { d, theta, y } => StudySource::ToyLvm { spec: toy_spec(*d, *theta, y.clone())? },
        SourceChoice::Stdin => return Err(CliError::Config("variance study needs a source with known moments".into())),
    };
    let rows = run_variance_study(&VarianceStudyConfig {
        function,
        source,
        x0: s.x0.value(),
        p_grid: s.p.clone(),
        estimators: s.estimators.clone(),
        replicates: s.replicates,
        seed: s.seed,
        n0: s.n0,
        r_max: s.r_max,
    })?;
    write_rows(&rows, s.output.as_deref(), s.format)?;
    write_meta("bench variance-study", &s, json!({}), s.output.as_deref(), s.meta.as_deref())
}

fn moment_params(a: &MomentArgs) -> CliResult<MomentParams<f64>> {
    Ok(MomentParams::new(a.m, a.var, a.x0)?)
}

fn cmd_oracle(cmd: OracleCommand) -> CliResult<()> {
    let value = match cmd {
        OracleCommand::SimpleVarianceLimit(a) => json!({ "value": simple_variance_limit(&moment_params(&a)?)? }),
        OracleCommand::ReciprocalTail { p, k } => {
            let (exact, bound) = reciprocal_tail_expectation(p, k)?;
            json!({ "exact": exact, "bound": bound })
        }
        OracleCommand::Beta2(a) => json!({ "value": moment_params(&a)?.beta2() }),
        OracleCommand::X0Star { m, var } => json!({ "value": x0_star(m, var)? }),
        OracleCommand::ChooseP { beta2, n0 } => json!({ "value": choose_p(beta2, n0)? }),
        OracleCommand::SimpleCrossMoment { moments, k, l } => {
            json!({ "value": simple_cross_moment(&moment_params(&moments)?, k, l)? })
        }
        OracleCommand::CyclingCrossMoment { moments, r, k, l } => {
            let mp = moment_params(&moments)?;
            json!({
                "value": cycling_cross_moment(&mp, r, k, l)?,
                "cov_bound": cycling_cov_bound(&mp, r, k, l)?,
            })
        }
        OracleCommand::Bounds { moments, p, function } => {
            let mp = moment_params(&moments)?;
            let exp = match function {
                FunctionChoice::Log => Expansion::log(mp.x0)?,
                FunctionChoice::Reciprocal => Expansion::reciprocal(mp.x0)?,
                FunctionChoice::Custom(_) => return Err(CliError::Config("bounds need log or reciprocal".into())),
            };
            let target = exp
                .target(mp.m)
                .filter(|t| t.is_finite())
                .ok_or_else(|| CliError::Core(debias_core::Error::domain(format!("f(m) undefined at m = {}", mp.m))))?;
            let (c, beta0, beta) = (exp.c(), mp.beta0(), mp.beta());
            let law = TruncationLaw::new(p)?;
            let (lo, hi) = prop1_bounds(p, beta0, c, target, exp.coefficient(0)?)?;
            json!({
                "beta0": beta0,
                "beta2": mp.beta2(),
                "var_conditional_mean": conditional_expectation_variance(&exp, &law, mp.m)?,
                "var_conditional_mean_bounds": [lo, hi],
                "simple_var_bound": prop2_bound(p, beta, c)?,
                "cycling_var_bound": prop3_bound(p, beta0, beta, c)?,
            })
        }
        OracleCommand::Wnv { kind, n0, beta0, beta, c, p } => {
            let kind = match kind {
                WnvKind::Simple => BoundKind::Simple,
                WnvKind::Cycling => BoundKind::Cycling,
            };
            let params = WnvParams::new(kind, n0, beta0, beta, c)?;
            match p {
                Some(p) => json!({ "p": p, "bound": wnv_bound(&params, p)? }),
                None => {
                    let p_star = wnv_minimize(&params)?;
                    json!({ "p_star": p_star, "bound": wnv_bound(&params, p_star)? })
                }
            }
        }
        OracleCommand::ToyLvm { d, theta, y } => {
            let spec = toy_spec(d, theta, y)?;
            let mo = spec.moments();
            json!({
                "m": mo.m,
                "var": mo.var,
                "x0_star": mo.x0_star,
                "beta2_at_x0_star": mo.beta2_at_x0star,
                "log_m": spec.log_m(),
                "grad_log_m": spec.grad_log_m(),
            })
        }
    };
    print_json(&value)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Tune(f) => cmd_tune(f),
        Command::Estimate(f) => cmd_estimate(f),
        Command::Bench(BenchCommand::ToyLvm(f)) => cmd_bench_toy(f),
        Command::Bench(BenchCommand::VarianceStudy(f)) => cmd_bench_study(f),
        Command::Oracle(q) => cmd_oracle(q),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
