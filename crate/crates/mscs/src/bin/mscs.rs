//! Command-line front end: exhaustive screening, adaptive sampling, and the
//! Monte Carlo harness. Machine-first output (JSON/CSV); anything
//! nondeterministic (timings) goes to stderr.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mscs::adaptive::{run_mscs_as, AsConfig};
use mscs::error::Error;
use mscs::io::{
    read_dataset_csv_path, write_importance_csv, write_json_report, write_mc_summary_csv,
    write_survivors_csv, write_trajectory_csv,
};
use mscs::likelihood::Family;
use mscs::mscs::{build_mscs, inclusion_importance};
use mscs::simulate::{mc_coverage, ScenarioSpec, Setting};
use mscs::space::ModelSpace;

const EXIT_USAGE: u8 = 64;
const EXIT_IO: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "mscs", version, about = "Model selection confidence sets")]
struct Cli {
    /// worker threads (default: MSCS_WORKERS env var, else available
    /// parallelism)
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// directory for output artifacts
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Screen every model in the space and report the confidence set.
    Exhaustive(ExhaustiveArgs),
    /// Adaptive stochastic search over subset spaces (large p).
    Sample(SampleArgs),
    /// Monte Carlo coverage/cardinality study on the benchmark designs.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ExhaustiveArgs {
    /// input CSV (header row; y or y1..yp, x1..xp)
    data: PathBuf,
    #[arg(long)]
    family: Family,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// model space: subsets or partitions (default: the family's native
    /// space)
    #[arg(long)]
    space: Option<SpaceKind>,
    /// comma-separated 1-based variables forced into every model
    #[arg(long)]
    forced: Option<String>,
}

#[derive(Args)]
struct SampleArgs {
    data: PathBuf,
    #[arg(long)]
    family: Family,
    #[arg(long)]
    forced: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "B", default_value_t = 300)]
    b: usize,
    #[arg(long, default_value_t = 0.25)]
    zeta: f64,
    #[arg(long, default_value_t = 0.2)]
    xi: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha_star: f64,
    #[arg(long, default_value_t = 10)]
    stall_d: usize,
    /// stop exactly at this iteration instead of waiting for the stall rule
    #[arg(long)]
    stop_at_iter: Option<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    final_draw: usize,
    #[arg(long, default_value_t = 0.01)]
    clamp_lo: f64,
    #[arg(long, default_value_t = 0.99)]
    clamp_hi: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
}

#[derive(Args)]
struct SimulateArgs {
    /// benchmark model: 1 location, 2 block covariance, 3 logistic,
    /// 4 poisson
    #[arg(long)]
    model: u8,
    /// 1 constant signal, 2 decreasing signal, 3 large-p design
    #[arg(long, default_value_t = 1)]
    setting: u8,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    psi: Option<f64>,
    #[arg(long, default_value_t = 500)]
    runs: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// comma-separated significance levels
    #[arg(long, default_value = "0.10,0.05,0.01")]
    alpha: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SpaceKind {
    Subsets,
    Partitions,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own exit code for usage errors is 2; remap to 64 and
            // let --help/--version exit 0
            let _ = e.print();
            return if e.exit_code() == 0 { ExitCode::SUCCESS } else { ExitCode::from(EXIT_USAGE) };
        }
    };

    if let Some(workers) = cli.workers.or_else(workers_from_env) {
        if rayon::ThreadPoolBuilder::new().num_threads(workers).build_global().is_err() {
            eprintln!("warning: worker pool already initialized");
        }
    }
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create output directory: {e}");
        return ExitCode::from(EXIT_IO);
    }

    let started = Instant::now();
    let code = match &cli.command {
        Command::Exhaustive(args) => cmd_exhaustive(&cli, args),
        Command::Sample(args) => cmd_sample(&cli, args),
        Command::Simulate(args) => cmd_simulate(&cli, args),
    };
    eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
    match code {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn workers_from_env() -> Option<usize> {
    std::env::var("MSCS_WORKERS").ok()?.parse().ok()
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::ModelContext { source, .. } => exit_code_for(source),
        Error::Io(_) | Error::Csv(_) | Error::InvalidDataset(_) => EXIT_IO,
        Error::FitDiverged { .. } | Error::MaxItersExceeded { .. } => EXIT_NONCONVERGENCE,
        Error::InvalidSpec(_) | Error::InvalidConfig(_) => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

fn usage(msg: &str) -> Result<ExitCode, Error> {
    eprintln!("error: {msg}");
    Ok(ExitCode::from(EXIT_USAGE))
}

fn parse_forced(arg: &Option<String>, p: usize) -> Result<BTreeSet<usize>, String> {
    let Some(s) = arg else { return Ok(BTreeSet::new()) };
    let mut forced = BTreeSet::new();
    for tok in s.split(',').filter(|t| !t.trim().is_empty()) {
        match tok.trim().parse::<usize>() {
            Ok(j) if (1..=p).contains(&j) => {
                forced.insert(j);
            }
            _ => return Err(format!("--forced entries must be variables in 1..={p}, got {tok:?}")),
        }
    }
    Ok(forced)
}

fn build_space(family: Family, kind: Option<SpaceKind>, p: usize, forced: BTreeSet<usize>) -> Result<ModelSpace, String> {
    let partitions = match kind {
        Some(SpaceKind::Partitions) => true,
        Some(SpaceKind::Subsets) => false,
        None => family.uses_partitions(),
    };
    if partitions {
        if !family.uses_partitions() {
            return Err(format!("family {family} works on subset spaces"));
        }
        if !forced.is_empty() {
            return Err("--forced applies to subset spaces only".into());
        }
        Ok(ModelSpace::all_partitions(p))
    } else {
        if family.uses_partitions() {
            return Err(format!("family {family} works on partition spaces"));
        }
        Ok(ModelSpace::all_subsets_forced(p, forced))
    }
}

fn cmd_exhaustive(cli: &Cli, args: &ExhaustiveArgs) -> Result<ExitCode, Error> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return usage("--alpha must be in (0, 1)");
    }
    let data = read_dataset_csv_path(&args.data, args.family)?;
    let forced = match parse_forced(&args.forced, data.p) {
        Ok(f) => f,
        Err(msg) => return usage(&msg),
    };
    let space = match build_space(args.family, args.space, data.p, forced) {
        Ok(s) => s,
        Err(msg) => return usage(&msg),
    };

    let result = build_mscs(&data, &space, args.alpha)?;
    let importance = inclusion_importance(&result);

    let config = serde_json::json!({
        "family": args.family,
        "alpha": args.alpha,
        "space": space,
        "input": args.data,
    });
    write_json_report(std::fs::File::create(cli.out.join("mscs.json"))?, 0, &config, &result)?;
    write_survivors_csv(std::fs::File::create(cli.out.join("survivors.csv"))?, &result)?;
    write_importance_csv(std::fs::File::create(cli.out.join("importance.csv"))?, &importance)?;

    println!("models tested: {}", result.records.len());
    println!("survivors: {}", result.survivor_count());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sample(cli: &Cli, args: &SampleArgs) -> Result<ExitCode, Error> {
    let config = AsConfig {
        b: args.b,
        zeta: args.zeta,
        xi: args.xi,
        alpha_star: args.alpha_star,
        stall_d: args.stall_d,
        max_iters: args.max_iters,
        stop_at_iter: args.stop_at_iter,
        omega0: 0.5,
        clamp: (args.clamp_lo, args.clamp_hi),
        final_draw: args.final_draw,
        seed: args.seed,
    };
    if config.validate().is_err() {
        return usage("invalid sampler configuration (check --zeta, --xi, --alpha-star, --clamp-lo/hi)");
    }
    let data = read_dataset_csv_path(&args.data, args.family)?;
    let forced = match parse_forced(&args.forced, data.p) {
        Ok(f) => f,
        Err(msg) => return usage(&msg),
    };
    let space = match build_space(args.family, Some(SpaceKind::Subsets), data.p, forced) {
        Ok(s) => s,
        Err(msg) => return usage(&msg),
    };

    let result = run_mscs_as(&data, &space, &config)?;

    let survivors_only = mscs::mscs::MscsResult {
        alpha: config.alpha_star,
        space: space.clone(),
        records: result.members.clone(),
        exhaustive: false,
    };
    let importance = inclusion_importance(&survivors_only);

    write_json_report(std::fs::File::create(cli.out.join("as.json"))?, args.seed, &config, &result)?;
    write_trajectory_csv(std::fs::File::create(cli.out.join("trajectory.csv"))?, &result)?;
    write_importance_csv(std::fs::File::create(cli.out.join("importance.csv"))?, &importance)?;

    println!("iterations: {}", result.iterations);
    println!("members found: {}", result.members.len());
    println!("hit_rate: {:.6}", result.hit_rate);
    if !result.converged {
        eprintln!("warning: sampler stopped without satisfying the stall rule; outputs are partial");
        return Ok(ExitCode::from(EXIT_NONCONVERGENCE));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Result<ExitCode, Error> {
    let setting = match args.setting {
        1 => Setting::One,
        2 => Setting::Two,
        3 => Setting::LargeP,
        _ => return usage("--setting must be 1, 2 or 3"),
    };
    let alphas: Vec<f64> = match args
        .alpha
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
    {
        Ok(v) => v,
        Err(_) => return usage("--alpha must be comma-separated numbers"),
    };
    let spec = ScenarioSpec {
        model_id: args.model,
        setting,
        n: args.n,
        p: args.p,
        psi: args.psi,
        seed: args.seed,
        runs: args.runs,
        alphas,
    };
    if let Err(e) = spec.validate() {
        return usage(&e.to_string());
    }
    let space = spec.model_space();
    let summary = mc_coverage(&spec, &space)?;

    write_json_report(std::fs::File::create(cli.out.join("summary.json"))?, spec.seed, &spec, &summary)?;
    write_mc_summary_csv(std::fs::File::create(cli.out.join("summary.csv"))?, &summary)?;

    println!("completed runs: {} (discarded {})", summary.completed_runs, summary.discarded_runs);
    for cell in &summary.cells {
        println!(
            "alpha={:<5} coverage={:.4} mean_cardinality={:.3}",
            cell.alpha, cell.coverage, cell.mean_cardinality
        );
    }
    Ok(ExitCode::SUCCESS)
}
