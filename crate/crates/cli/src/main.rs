//! `fairslice`: divide an interval cake among agents with piecewise constant
//! valuations, exactly, and certify what each division satisfies.
//!
//! Every command reads and writes JSON with rationals as strings, so outputs
//! can be piped back in without losing a bit. Errors land on stderr as a
//! machine-readable envelope; exit codes are 0 for success, 1 when `check`
//! finds a property violation, 2 for bad input, 3 for internal failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use fairslice_core::model::{materialize, Allocation, Coordinates, Layout};
use fairslice_core::rational::rat_from_f64;
use fairslice_core::report::{
    check_report, compare_report, equilibrium_json, error_json, exit_code, manipulation_report,
    run_report,
};
use fairslice_core::{
    find_manipulation, generate, parse_allocation, parse_profile, run_ccea, run_csd,
    run_csd_sampled, run_fixtures, run_mea, serialize_allocation, serialize_profile, Error,
    Evaluation, GenSpec, Mechanism, MechanismOutput, MisreportSpace, Profile, Property, Rat,
    SearchStrategy, SolveMode, Verdict,
};

#[derive(Parser)]
#[command(
    name = "fairslice",
    version,
    about = "Exact fair division of an interval cake under piecewise constant valuations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Divide a cake and report utilities, Nash product, and property verdicts
    Run(RunArgs),
    /// Judge an existing division against selected properties
    Check(CheckArgs),
    /// Run two algorithms on the same input and report utility discrepancies
    Compare(CompareArgs),
    /// Search a misreport space for profitable deviations
    Manipulate(ManipulateArgs),
    /// Generate a random profile on a rational breakpoint grid
    Gen(GenArgs),
    /// Run the bundled golden fixtures and report each verdict
    Fixtures,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Alg {
    /// Claim-weighted simultaneous eating
    Ccea,
    /// Market equilibrium with equal budgets
    Mea,
    /// Serial dictatorship averaged over every serve order
    Csd,
    /// Serial dictatorship under one fixed serve order
    Crsd,
    /// Serial dictatorship under one seeded random serve order
    Cmsd,
    /// Everyone receives an equal slice of every cell
    Uniform,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CoordsArg {
    /// Positions on the cake as given
    Original,
    /// Positions after discarding undesired cake and rescaling to unit length
    Rescaled,
}

#[derive(Args)]
struct RunArgs {
    /// Division rule
    #[arg(long, value_enum)]
    alg: Alg,
    /// Profile JSON path
    #[arg(long)]
    profile: PathBuf,
    /// Write the report here instead of stdout
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Coordinate system for the reported division (ccea and mea only)
    #[arg(long, value_enum, default_value = "original")]
    coords: CoordsArg,
    /// Demand a certified rational equilibrium instead of accepting a
    /// residual (mea)
    #[arg(long)]
    exact: bool,
    /// Clearing residual the iterative market solver may leave; property
    /// checks run with the same slack [default: 1e-9] (mea)
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for the random serve order (cmsd) or sampled orders (csd)
    #[arg(long)]
    seed: Option<u64>,
    /// Serve order as zero-based agent indices, e.g. 1,0,2 (crsd)
    #[arg(long, value_delimiter = ',')]
    perm: Option<Vec<usize>>,
    /// Average this many sampled serve orders instead of all n! (csd)
    #[arg(long)]
    sample: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    /// Profile JSON path
    #[arg(long)]
    profile: PathBuf,
    /// Allocation JSON path, as written by `run`
    #[arg(long)]
    allocation: PathBuf,
    /// Properties to judge: `all` or a comma list like ef,r-prop,po
    #[arg(long, default_value = "all", value_delimiter = ',')]
    props: Vec<String>,
    /// Write the report here instead of stdout
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// First algorithm
    #[arg(value_enum)]
    alg1: Alg,
    /// Second algorithm
    #[arg(value_enum)]
    alg2: Alg,
    /// Compare on this profile
    #[arg(long, conflicts_with = "trials")]
    profile: Option<PathBuf>,
    /// Compare across this many generated profiles instead
    #[arg(long)]
    trials: Option<usize>,
    /// Agents per generated profile
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Most positive blocks per generated agent
    #[arg(long, default_value_t = 4)]
    max_blocks: usize,
    /// Generated positive levels are drawn from 1..=ladder
    #[arg(long, default_value_t = 4)]
    ladder: u32,
    /// Restrict generated agents to a single positive level
    #[arg(long)]
    pw_uniform: bool,
    /// First generator seed; trial k uses seed + k. Also feeds cmsd
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Demand certified rational equilibria (mea; this is already the
    /// default under compare)
    #[arg(long)]
    exact: bool,
    /// Use the iterative market solver with this residual tolerance (mea)
    #[arg(long)]
    tol: Option<f64>,
    /// Serve order for crsd participants
    #[arg(long, value_delimiter = ',')]
    perm: Option<Vec<usize>>,
    /// Write the report here instead of stdout
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ManipulateArgs {
    /// Mechanism under attack
    #[arg(long, value_enum)]
    alg: Alg,
    /// Profile JSON path; densities in it are the true valuations
    #[arg(long)]
    profile: PathBuf,
    /// Deviating agents (zero-based); comma-separate for a coalition
    #[arg(long, value_delimiter = ',', required = true)]
    agent: Vec<usize>,
    /// Uniform mesh resolution added to the misreport breakpoint grid
    #[arg(long, default_value_t = 10)]
    grid: u32,
    /// Misreported density levels run over the integers 0..=ladder
    #[arg(long, default_value_t = 5)]
    ladder: u32,
    /// Most candidate reports to evaluate
    #[arg(long, default_value_t = 100_000)]
    budget: usize,
    /// Draw candidates from a seeded stream instead of sweeping exhaustively
    #[arg(long)]
    sampled: Option<u64>,
    /// Demand certified rational equilibria (mea)
    #[arg(long)]
    exact: bool,
    /// Iterative market solver tolerance (mea)
    #[arg(long)]
    tol: Option<f64>,
    /// Serve order (crsd)
    #[arg(long, value_delimiter = ',')]
    perm: Option<Vec<usize>>,
    /// Serve-order seed (cmsd)
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Number of agents
    #[arg(long)]
    n: usize,
    /// Most positive blocks per agent
    #[arg(long, default_value_t = 4)]
    max_blocks: usize,
    /// Positive density levels are drawn from 1..=ladder
    #[arg(long, default_value_t = 4)]
    ladder: u32,
    /// Give every agent a single positive level
    #[arg(long)]
    pw_uniform: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the profile here instead of stdout
    #[arg(short, long)]
    out: Option<PathBuf>,
}

/// Anything that stops a command: a library error or a misused flag.
enum Failure {
    Core(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = configure_threads() {
        return report_failure(f);
    }
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Check(args) => cmd_check(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Manipulate(args) => cmd_manipulate(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Fixtures => cmd_fixtures(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => report_failure(f),
    }
}

/// FAIRSLICE_THREADS caps how many worker threads batch commands fan out to.
fn configure_threads() -> Result<(), Failure> {
    let raw = match std::env::var("FAIRSLICE_THREADS") {
        Ok(raw) => raw,
        Err(_) => return Ok(()),
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| usage(format!("FAIRSLICE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Core(Error::Internal(format!("thread pool: {e}"))))
}

fn report_failure(f: Failure) -> ExitCode {
    let (doc, code) = match f {
        Failure::Core(e) => {
            let code = exit_code(&e) as u8;
            (error_json(&e), code)
        }
        Failure::Usage(msg) => {
            (json!({ "error": { "kind": "usage", "message": msg, "exitCode": 2 } }), 2)
        }
    };
    eprintln!("{}", serde_json::to_string_pretty(&doc).expect("error envelope serializes"));
    ExitCode::from(code)
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn load_profile(path: &Path) -> Result<Profile, Failure> {
    Ok(parse_profile(&read_file(path)?)?)
}

fn emit_text(text: &str, out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_value(doc: &Value, out: Option<&PathBuf>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(doc).expect("report serializes");
    text.push('\n');
    emit_text(&text, out)
}

fn allocation_value(alloc: &Allocation, profile: &Profile) -> Value {
    serde_json::from_str(&serialize_allocation(alloc, profile))
        .expect("allocation JSON round-trips")
}

/// Solver tolerance: the flag if given, else 1e-9. Must be a finite,
/// non-negative number.
fn tolerance_of(tol: Option<f64>) -> Result<f64, Failure> {
    let t = tol.unwrap_or(1e-9);
    if !t.is_finite() || t < 0.0 {
        return Err(usage(format!("--tol must be a finite non-negative number, got {t}")));
    }
    Ok(t)
}

/// Translates flag combinations into a mechanism, rejecting flags that do
/// not belong to the chosen algorithm. `mea_default_exact` is true for
/// commands whose point is agreement up to zero discrepancy.
fn mechanism_for(
    alg: Alg,
    exact: bool,
    tol: Option<f64>,
    perm: Option<&[usize]>,
    seed: Option<u64>,
    mea_default_exact: bool,
) -> Result<Mechanism, Failure> {
    if exact && alg != Alg::Mea {
        return Err(usage("--exact only applies to mea"));
    }
    if tol.is_some() && alg != Alg::Mea {
        return Err(usage("--tol only applies to mea"));
    }
    if perm.is_some() && alg != Alg::Crsd {
        return Err(usage("--perm only applies to crsd"));
    }
    if seed.is_some() && alg != Alg::Cmsd {
        return Err(usage("--seed here only applies to cmsd"));
    }
    Ok(match alg {
        Alg::Ccea => Mechanism::Ccea,
        Alg::Mea => {
            if exact || (mea_default_exact && tol.is_none()) {
                Mechanism::Mea(SolveMode::Exact)
            } else {
                let tolerance = tolerance_of(tol)?;
                Mechanism::Mea(SolveMode::Iterative { tolerance, max_iterations: 20_000 })
            }
        }
        Alg::Csd => Mechanism::Csd,
        Alg::Crsd => {
            let order = perm.ok_or_else(|| usage("crsd needs --perm, e.g. --perm 1,0,2"))?;
            Mechanism::Crsd(order.to_vec())
        }
        Alg::Cmsd => Mechanism::Cmsd(seed.unwrap_or(0)),
        Alg::Uniform => Mechanism::UniformSplit,
    })
}

fn cmd_run(args: RunArgs) -> Result<u8, Failure> {
    let profile = load_profile(&args.profile)?;
    if args.coords == CoordsArg::Rescaled && !matches!(args.alg, Alg::Ccea | Alg::Mea) {
        return Err(usage("--coords rescaled only applies to ccea and mea"));
    }
    if args.sample.is_some() && args.alg != Alg::Csd {
        return Err(usage("--sample only applies to csd"));
    }
    if args.seed.is_some() && !matches!(args.alg, Alg::Cmsd | Alg::Csd) {
        return Err(usage("--seed only applies to cmsd and sampled csd"));
    }
    if args.tol.is_some() && args.alg != Alg::Mea {
        return Err(usage("--tol only applies to mea"));
    }
    if args.exact && args.alg != Alg::Mea {
        return Err(usage("--exact only applies to mea"));
    }
    if args.perm.is_some() && args.alg != Alg::Crsd {
        return Err(usage("--perm only applies to crsd"));
    }

    let doc = match args.alg {
        Alg::Ccea => {
            let run = run_ccea(&profile)?;
            let output = MechanismOutput::Concrete(run.allocation.clone());
            let ev = output.evaluation(&profile)?;
            let reports = ev.check_all()?;
            let mut doc = run_report("ccea", &profile, &output, &ev, &reports);
            if args.coords == CoordsArg::Rescaled {
                let rescaled = materialize(
                    &run.partition,
                    &run.assignment,
                    Layout::Contiguous,
                    Coordinates::Rescaled,
                );
                doc["allocation"] = allocation_value(&rescaled, &profile);
            }
            doc
        }
        Alg::Mea => {
            let tolerance = tolerance_of(args.tol)?;
            let mode = if args.exact {
                SolveMode::Exact
            } else {
                SolveMode::Iterative { tolerance, max_iterations: 20_000 }
            };
            let run = run_mea(&profile, mode)?;
            let output = MechanismOutput::Concrete(run.allocation.clone());
            let mut ev = output.evaluation(&profile)?;
            if !run.equilibrium.exact {
                // Verdicts must not flip on solver noise below the tolerance.
                let slack = rat_from_f64(tolerance)
                    .ok_or_else(|| usage("--tol does not convert to a rational"))?;
                ev = ev.with_slack(slack);
            }
            let reports = ev.check_all()?;
            let mut doc = run_report("mea", &profile, &output, &ev, &reports);
            doc["equilibrium"] = equilibrium_json(&run);
            if args.coords == CoordsArg::Rescaled {
                let rescaled = materialize(
                    &run.partition,
                    &run.equilibrium.assignment,
                    Layout::Contiguous,
                    Coordinates::Rescaled,
                );
                doc["allocation"] = allocation_value(&rescaled, &profile);
            }
            doc
        }
        Alg::Csd => {
            let run = match args.sample {
                Some(k) => run_csd_sampled(&profile, k, args.seed.unwrap_or(0))?,
                None => run_csd(&profile)?,
            };
            let n_permutations = run.n_permutations;
            let exact = run.exact;
            let output =
                MechanismOutput::Lottery { part: run.partition, shares: run.assignment };
            let ev = output.evaluation(&profile)?;
            let reports = ev.check_all()?;
            let mut doc = run_report("csd", &profile, &output, &ev, &reports);
            doc["permutations"] = json!(n_permutations);
            doc["exact"] = json!(exact);
            doc
        }
        Alg::Crsd | Alg::Cmsd | Alg::Uniform => {
            let mech = mechanism_for(
                args.alg,
                args.exact,
                args.tol,
                args.perm.as_deref(),
                args.seed,
                false,
            )?;
            let output = mech.run(&profile)?;
            let ev = output.evaluation(&profile)?;
            let reports = ev.check_all()?;
            let mut doc = run_report(&mech.label(), &profile, &output, &ev, &reports);
            if let Mechanism::Cmsd(seed) = mech {
                doc["seed"] = json!(seed);
            }
            doc
        }
    };
    emit_value(&doc, args.out.as_ref())?;
    Ok(0)
}

fn parse_props(specs: &[String]) -> Result<Vec<Property>, Failure> {
    if specs.len() == 1 && specs[0] == "all" {
        return Ok(Property::all().to_vec());
    }
    specs
        .iter()
        .map(|code| {
            Property::all()
                .into_iter()
                .find(|p| p.code() == code)
                .ok_or_else(|| {
                    let known: Vec<&str> =
                        Property::all().iter().map(|p| p.code()).collect();
                    usage(format!(
                        "unknown property {code:?}; use all or any of {}",
                        known.join(", ")
                    ))
                })
        })
        .collect()
}

fn cmd_check(args: CheckArgs) -> Result<u8, Failure> {
    let profile = load_profile(&args.profile)?;
    let allocation = parse_allocation(&read_file(&args.allocation)?, &profile)?;
    let ev = Evaluation::from_allocation(&profile, &allocation)?;
    let props = parse_props(&args.props)?;
    let mut reports = Vec::with_capacity(props.len());
    for p in props {
        reports.push(ev.check(p)?);
    }
    let failed = reports.iter().any(|r| r.verdict == Verdict::Fail);
    let doc = check_report(&profile, &ev, &reports);
    emit_value(&doc, args.out.as_ref())?;
    Ok(if failed { 1 } else { 0 })
}

fn cmd_compare(args: CompareArgs) -> Result<u8, Failure> {
    // Mode flags attach to whichever participant they concern.
    let involved = |alg: Alg| args.alg1 == alg || args.alg2 == alg;
    if args.exact && !involved(Alg::Mea) {
        return Err(usage("--exact needs a mea participant"));
    }
    if args.tol.is_some() && !involved(Alg::Mea) {
        return Err(usage("--tol needs a mea participant"));
    }
    if args.perm.is_some() && !involved(Alg::Crsd) {
        return Err(usage("--perm needs a crsd participant"));
    }
    let mech = |alg: Alg| {
        mechanism_for(
            alg,
            args.exact && alg == Alg::Mea,
            if alg == Alg::Mea { args.tol } else { None },
            if alg == Alg::Crsd { args.perm.as_deref() } else { None },
            if alg == Alg::Cmsd { Some(args.seed) } else { None },
            true,
        )
    };
    let mech1 = mech(args.alg1)?;
    let mech2 = mech(args.alg2)?;

    let doc = match (&args.profile, args.trials) {
        (Some(path), None) => {
            let profile = load_profile(path)?;
            let u1 = mech1.run(&profile)?.true_utility(&profile);
            let u2 = mech2.run(&profile)?.true_utility(&profile);
            compare_report(&mech1.label(), &mech2.label(), &profile, &u1, &u2)
        }
        (None, Some(trials)) => {
            if trials == 0 {
                return Err(usage("--trials must be at least 1"));
            }
            use rayon::prelude::*;
            // Worst per-agent gap across all trials; order fixed by seed.
            let gaps: Vec<(u64, Rat)> = (0..trials)
                .into_par_iter()
                .map(|k| -> Result<(u64, Rat), Error> {
                    let seed = args.seed.wrapping_add(k as u64);
                    let spec = GenSpec {
                        n_agents: args.n,
                        max_blocks: args.max_blocks,
                        value_ladder: args.ladder,
                        piecewise_uniform: args.pw_uniform,
                        seed,
                    };
                    let profile = generate(&spec)?;
                    let u1 = mech1.run(&profile)?.true_utility(&profile);
                    let u2 = mech2.run(&profile)?.true_utility(&profile);
                    let gap = u1
                        .iter()
                        .zip(&u2)
                        .map(|(a, b)| (a - b).abs())
                        .max()
                        .unwrap_or_else(Rat::zero);
                    Ok((seed, gap))
                })
                .collect::<Result<_, _>>()
                .map_err(Failure::Core)?;
            let (worst_seed, max_gap) = gaps
                .iter()
                .max_by(|a, b| a.1.cmp(&b.1))
                .map(|(s, g)| (*s, g.clone()))
                .expect("at least one trial");
            json!({
                "algorithms": [mech1.label(), mech2.label()],
                "trials": trials,
                "generator": {
                    "n": args.n,
                    "maxBlocks": args.max_blocks,
                    "valueLadder": args.ladder,
                    "piecewiseUniform": args.pw_uniform,
                    "firstSeed": args.seed,
                },
                "maxDiscrepancy": {
                    "exact": fairslice_core::format_rat(&max_gap),
                    "decimal": fairslice_core::format_decimal(&max_gap),
                },
                "worstSeed": worst_seed,
            })
        }
        _ => return Err(usage("compare needs exactly one of --profile or --trials")),
    };
    emit_value(&doc, args.out.as_ref())?;
    Ok(0)
}

fn cmd_manipulate(args: ManipulateArgs) -> Result<u8, Failure> {
    let profile = load_profile(&args.profile)?;
    let mech = mechanism_for(
        args.alg,
        args.exact,
        args.tol,
        args.perm.as_deref(),
        args.seed,
        false,
    )?;
    let truthful = mech.run(&profile)?;
    let space =
        MisreportSpace::for_instance(&profile, &truthful.cut_points(), args.grid, args.ladder)?;
    let strategy = match args.sampled {
        Some(seed) => SearchStrategy::Sampled { seed },
        None => SearchStrategy::Exhaustive,
    };
    let outcome =
        find_manipulation(&mech, &profile, &args.agent, &space, strategy, args.budget)?;
    let doc = manipulation_report(&mech.label(), &profile, space.size(), &outcome);
    emit_value(&doc, args.out.as_ref())?;
    Ok(0)
}

fn cmd_gen(args: GenArgs) -> Result<u8, Failure> {
    let spec = GenSpec {
        n_agents: args.n,
        max_blocks: args.max_blocks,
        value_ladder: args.ladder,
        piecewise_uniform: args.pw_uniform,
        seed: args.seed,
    };
    let profile = generate(&spec)?;
    let mut text = serialize_profile(&profile);
    if !text.ends_with('\n') {
        text.push('\n');
    }
    emit_text(&text, args.out.as_ref())?;
    Ok(0)
}

fn cmd_fixtures() -> Result<u8, Failure> {
    let results = run_fixtures();
    let mut ok = 0;
    for r in &results {
        if r.passed {
            ok += 1;
            println!("ok   {:<24} {}", r.id, r.detail);
        } else {
            println!("FAIL {:<24} {}", r.id, r.detail);
        }
    }
    println!("{ok}/{} fixtures passed", results.len());
    // A red fixture means the build itself is broken, not the input.
    Ok(if ok == results.len() { 0 } else { 3 })
}
