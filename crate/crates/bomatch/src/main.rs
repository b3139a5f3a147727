use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bomatch::format::{
    self, instance_id, ratio_csv, ratio_json, read_instance, read_ranks, sweep_csv, write_instance, write_text,
    AuditDoc, FormatError, RatioRow, RunDoc, SweepCsvRow,
};
use bomatch::lanes::Lanes;
use bomatch::verify::{run_all, Scale};
use bomatch_core::audit::{audit, Checks};
use bomatch_core::engines::{draw_ranks, run_with, Algorithm, RunOptions};
use bomatch_core::harness::{audit_trials, estimate_ratio_against_bound, sweep_mu, SweepConfig};
use bomatch_core::instance::{
    gen_example_no_surpass, gen_example_three, gen_planted, gen_random, gen_upper_triangular, Instance, PlantedParams,
    ProblemClass, RandomParams,
};
use bomatch_core::oracle::best_optimum;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Branch-and-bound budget for exact GENERAL optima before falling back to
/// the upper bound.
const NODE_LIMIT: u64 = 2_000_000;

#[derive(Parser)]
#[command(name = "bomatch", version, about = "Budget-oblivious online matching experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Run one algorithm once.
    Run(RunArgs),
    /// Estimate E[W] / OPT over many rank draws.
    Ratio(RatioArgs),
    /// Audit rank draws for no-surpassing violations and the removal lemmas.
    Audit(AuditArgs),
    /// Sweep mu(I) on planted GENERAL instances.
    Sweep(SweepArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Family {
    UpperTriangular,
    ExampleThree,
    ExampleNoSurpass,
    Random,
    Planted,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Smoke,
    Full,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[command(flatten)]
    common: Common,
    /// Class for `random` and `planted` (obm, single_valued, general).
    #[arg(long)]
    class: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Budget scale of `example_three`; per-bidder budget of `planted` GENERAL.
    #[arg(long = "W")]
    w: Option<u64>,
    #[arg(long)]
    alpha: Option<u64>,
    /// Number of queries of `example_no_surpass`; largest cap of `planted` SINGLE-VALUED.
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    density: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    instance: PathBuf,
    algorithm: String,
    #[command(flatten)]
    common: Common,
    /// JSON array of per-bidder ranks, used instead of a seeded draw.
    #[arg(long)]
    ranks: Option<PathBuf>,
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct RatioArgs {
    instance: PathBuf,
    algorithm: String,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct AuditArgs {
    instance: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Number of seeded rank draws to audit.
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long)]
    ranks: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated mu targets.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.02,0.01")]
    mu: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long, default_value_t = 6)]
    m: usize,
    /// Per-bidder budget.
    #[arg(long = "W", default_value_t = 100)]
    w: u64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "smoke")]
    scale: ScaleArg,
    #[arg(long, default_value_t = 20_240_611)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Core(#[from] bomatch_core::Error),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Ratio(a) => cmd_ratio(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_text(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| FormatError::Io {
                    path: "<stdout>".into(),
                    source,
                })?;
        }
    }
    Ok(())
}

fn lanes(jobs: usize) -> Result<Lanes, CliError> {
    Lanes::new(jobs).map_err(|e| usage(format!("--jobs {jobs}: {e}")))
}

fn parse_algorithm(name: &str) -> Result<Algorithm, CliError> {
    Algorithm::parse(name).ok_or_else(|| {
        let known: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
        usage(format!(
            "unknown algorithm {name:?}; expected one of {}",
            known.join(", ")
        ))
    })
}

fn need<T>(value: Option<T>, flag: &str, family: &str) -> Result<T, CliError> {
    value.ok_or_else(|| usage(format!("--family {family} needs {flag}")))
}

fn describe(instance: &Instance) -> String {
    let id = instance_id(instance);
    match instance.class {
        ProblemClass::General => format!("{id} mu={}", instance.mu()),
        _ => id,
    }
}

fn cmd_gen(a: GenArgs) -> Result<ExitCode, CliError> {
    let seed = a.common.seed;
    let class = a
        .class
        .as_deref()
        .map(|c| ProblemClass::parse(c).ok_or_else(|| usage(format!("unknown class {c:?}"))))
        .transpose()?;
    let instance = match a.family {
        Family::UpperTriangular => gen_upper_triangular(need(a.n, "--n", "upper_triangular")?)?,
        Family::ExampleNoSurpass => gen_example_no_surpass(
            need(a.alpha, "--alpha", "example_no_surpass")?,
            need(a.k, "--k", "example_no_surpass")? as usize,
        )?,
        Family::ExampleThree => {
            let dir = a.common.out.unwrap_or_else(|| PathBuf::from("."));
            let (i1, i2, i3) = gen_example_three(need(a.w, "--W", "example_three")?)?;
            let mut lines = String::new();
            for (name, inst) in [("I1.json", &i1), ("I2.json", &i2), ("I3.json", &i3)] {
                write_instance(inst, &dir.join(name))?;
                lines.push_str(&format!("{name} {}\n", describe(inst)));
            }
            emit(None, &lines)?;
            return Ok(ExitCode::SUCCESS);
        }
        Family::Random => {
            let mut p = RandomParams::new(
                class.unwrap_or(ProblemClass::Obm),
                need(a.n, "--n", "random")?,
                need(a.m, "--m", "random")?,
                seed,
            );
            if let Some(d) = a.density {
                p.density = d;
            }
            gen_random(&p)?
        }
        Family::Planted => {
            let class = class.unwrap_or(ProblemClass::General);
            let mut p = PlantedParams::new(class, a.m.unwrap_or(6), seed);
            p.n = a.n;
            if let Some(mu) = a.mu {
                p.mu_target = mu;
            }
            if let Some(d) = a.density {
                p.density = d;
            }
            match class {
                ProblemClass::General => p.budget = a.w.unwrap_or(p.budget),
                ProblemClass::SingleValued => p.budget = a.k.unwrap_or(p.budget),
                ProblemClass::Obm => {}
            }
            gen_planted(&p)?
        }
    };
    match &a.common.out {
        Some(path) => {
            write_instance(&instance, path)?;
            emit(None, &format!("{}\n", describe(&instance)))?;
        }
        None => {
            emit(None, &format::instance_to_json(&instance))?;
            eprintln!("{}", describe(&instance));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(a: RunArgs) -> Result<ExitCode, CliError> {
    let instance = read_instance(&a.instance)?;
    let algorithm = parse_algorithm(&a.algorithm)?;
    let ranks = match &a.ranks {
        Some(path) => read_ranks(path)?,
        None => draw_ranks(&instance, a.common.seed),
    };
    let opts = RunOptions {
        trace: a.trace,
        without: None,
    };
    let outcome = run_with(algorithm, &instance, Some(&ranks), opts)?;
    let seed = if a.ranks.is_some() { None } else { Some(a.common.seed) };
    let doc = RunDoc::new(&outcome, instance_id(&instance), seed);
    emit(a.common.out.as_deref(), &doc.to_json())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_ratio(a: RatioArgs) -> Result<ExitCode, CliError> {
    let instance = read_instance(&a.instance)?;
    let algorithm = parse_algorithm(&a.algorithm)?;
    let opt = best_optimum(&instance, NODE_LIMIT)?;
    let map = lanes(a.jobs)?;
    let mut est = estimate_ratio_against_bound(&instance, algorithm, &opt, a.trials, a.common.seed, &map)?;
    est.instance_id = Some(instance_id(&instance));
    let rows = [RatioRow::from(&est)];
    let text = match a.format {
        Format::Csv => ratio_csv(&rows, a.common.seed)?,
        Format::Json => ratio_json(&rows),
    };
    emit(a.common.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_audit(a: AuditArgs) -> Result<ExitCode, CliError> {
    let instance = read_instance(&a.instance)?;
    let (seed, reports) = match &a.ranks {
        Some(path) => (None, vec![audit(&instance, &read_ranks(path)?, Checks::ALL)?]),
        None => {
            let map = lanes(a.jobs)?;
            let reports = audit_trials(&instance, a.trials, a.common.seed, Checks::ALL, &map)?;
            (Some(a.common.seed), reports)
        }
    };
    let doc = AuditDoc::new(instance_id(&instance), instance.class, seed, &reports);
    let text = match a.format {
        Format::Json => doc.to_json(),
        Format::Csv => doc.to_csv()?,
    };
    emit(a.common.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(a: SweepArgs) -> Result<ExitCode, CliError> {
    if a.mu.is_empty() {
        return Err(usage("--mu needs at least one target"));
    }
    let seed = a.common.seed;
    let mut cfg = SweepConfig::new(a.mu, seed);
    cfg.trials = a.trials;
    cfg.base.m = a.m;
    cfg.base.budget = a.w;
    cfg.base.n = a.n;
    if let Some(d) = a.density {
        cfg.base.density = d;
    }
    let map = lanes(a.jobs)?;
    let rows: Vec<SweepCsvRow> = sweep_mu(&cfg, &map)?.iter().map(SweepCsvRow::from).collect();
    let text = match a.format {
        Format::Csv => sweep_csv(&rows, seed)?,
        Format::Json => {
            let mut s = serde_json::to_string(&rows).expect("sweep rows serialize");
            s.push('\n');
            s
        }
    };
    emit(a.common.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode, CliError> {
    let scale = match a.scale {
        ScaleArg::Smoke => Scale::Smoke,
        ScaleArg::Full => Scale::Full,
    };
    let map = lanes(a.jobs)?;
    let reports = run_all(scale, a.seed, &map);
    let mut text = String::new();
    for r in &reports {
        text.push_str(&r.to_string());
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    text.push_str(&format!(
        "{} of {} criteria passed\n",
        reports.len() - failed,
        reports.len()
    ));
    emit(None, &text)?;
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
