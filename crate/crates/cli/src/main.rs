//! `resmon` — command-line front end for the resource-monotone library.
//!
//! Subcommands: `compute` (monotones of a JSON object over a free cone),
//! `verify` (seeded property suites), `game` (advantage-ratio evaluation),
//! `distill-bound` (error/overhead bounds), and `gen` (seeded random
//! instances). All input and output is the JSON the core library defines.
//!
//! Exit codes: 0 success, 1 usage (bad flags, unreadable or invalid JSON,
//! shape mismatches), 2 ill-posed problem, 3 numerical failure or a
//! property violation found by `verify`.

mod io;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use resmon_core::distill::{
    error_bound, free_overlap_channel, free_overlap_state, FidelityBound, FidelityMode,
    overhead_bound,
};
use resmon_core::divergence::rmax_slots;
use resmon_core::engine::SolverOpts;
use resmon_core::games::{evaluate_game, GameInstance};
use resmon_core::monotones::{
    bounds_report, free_weight, gen_robustness, proj_robustness_channel,
    proj_robustness_measurement, proj_robustness_state,
};
use resmon_core::objects::{random_channel, random_povm_set, random_state};
use resmon_core::Extended;

use io::{emit, load_game_instance, load_object, resolve_freeset, Failure, KindArg, LoadedObject};

#[derive(Parser)]
#[command(name = "resmon", version, about = "Resource monotones over convex free sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a monotone of one JSON object over a free set.
    Compute(ComputeArgs),
    /// Run a named property suite on seeded random instances.
    Verify(VerifyArgs),
    /// Evaluate a discrimination/exclusion advantage game.
    Game(GameArgs),
    /// Distillation error and overhead bounds for a resource against a target.
    DistillBound(DistillArgs),
    /// Generate a seeded random object as JSON.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MonotoneArg {
    /// Projective robustness Ω.
    Omega,
    /// Generalized robustness R.
    Robustness,
    /// Free weight W.
    Weight,
    /// Max-relative-entropy robustness against a second object (--relative-to).
    Rmax,
    /// The sandwich report: R·W⁻¹ ≤ Ω ≤ both one-sided products.
    Bounds,
}

#[derive(Args)]
struct TolArgs {
    /// Feasibility-residual tolerance for accepting solver output.
    #[arg(long, default_value_t = 1e-7)]
    feas_tol: f64,
    /// Primal–dual gap tolerance (relative).
    #[arg(long, default_value_t = 1e-6)]
    gap_tol: f64,
    /// Eigenvalue cutoff for support projectors in R_max computations.
    #[arg(long, default_value_t = 1e-9)]
    rank_tol: f64,
}

impl TolArgs {
    fn solver_opts(&self) -> SolverOpts {
        SolverOpts {
            feas_tol: self.feas_tol,
            gap_tol: self.gap_tol,
            ..SolverOpts::default()
        }
    }

    fn echo(&self) -> serde_json::Value {
        json!({
            "feas_tol": self.feas_tol,
            "gap_tol": self.gap_tol,
            "rank_tol": self.rank_tol,
        })
    }
}

#[derive(Args)]
struct ComputeArgs {
    /// Path to the object's JSON file.
    #[arg(long)]
    object: PathBuf,
    /// How to parse the object.
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Free set: a registry keyword (incoherent, replacement, trivial_povm,
    /// jointly_measurable), inline JSON, or a path to a cone JSON file.
    #[arg(long)]
    freeset: String,
    /// Which monotone to compute.
    #[arg(long, value_enum)]
    monotone: MonotoneArg,
    /// Second object for --monotone rmax (same kind as --object).
    #[arg(long)]
    relative_to: Option<PathBuf>,
    #[command(flatten)]
    tols: TolArgs,
    /// Write the JSON result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name.
    #[arg(value_enum)]
    suite: suites::Suite,
    /// Number of random instances (default: the suite's published count).
    #[arg(long)]
    trials: Option<usize>,
    /// Seed for the instance stream.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    tols: TolArgs,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GameArgs {
    /// Path to a GameInstance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Free set the adversary optimises over (keyword, inline JSON, or path).
    #[arg(long)]
    freeset: String,
    #[command(flatten)]
    tols: TolArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OverlapModeArg {
    /// Exact reduction for replacement targets over replacement cones.
    ExactReplacement,
    /// Seeded sampled minimax (an upper bound; pure-output targets only).
    Sampled,
}

#[derive(Args)]
struct DistillArgs {
    /// Path to the resource object's JSON file (the noisy input N).
    #[arg(long)]
    object: PathBuf,
    /// Object kind: state or channel.
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Path to the target's JSON file (pure state, or pure-output channel).
    #[arg(long)]
    target: PathBuf,
    /// Free set (keyword, inline JSON, or path).
    #[arg(long)]
    freeset: String,
    /// Distillation error for the overhead bound; omit to skip that bound.
    #[arg(long)]
    eps: Option<f64>,
    /// How to evaluate the channel-target free overlap.
    #[arg(long, value_enum, default_value_t = OverlapModeArg::ExactReplacement)]
    overlap_mode: OverlapModeArg,
    /// Pure-input samples per round in sampled mode.
    #[arg(long, default_value_t = 40)]
    samples: usize,
    /// Local refinement rounds in sampled mode.
    #[arg(long, default_value_t = 3)]
    refine: usize,
    /// Seed for the sampled input net.
    #[arg(long, default_value_t = 7)]
    sample_seed: u64,
    #[command(flatten)]
    tols: TolArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// What to generate.
    #[arg(value_enum)]
    kind: GenKind,
    /// Hilbert-space dimension (state, povm-set).
    #[arg(long)]
    dim: Option<usize>,
    /// Channel input dimension.
    #[arg(long)]
    dim_in: Option<usize>,
    /// Channel output dimension.
    #[arg(long)]
    dim_out: Option<usize>,
    /// Number of settings (povm-set).
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Number of outcomes per setting (povm-set).
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Sharpness of the noisy projective construction (povm-set), in (0,1).
    #[arg(long)]
    eta: Option<f64>,
    /// RNG seed; identical seeds give byte-identical output.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    State,
    Channel,
    PovmSet,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are successful terminations; everything else is
            // a usage error under the exit-code contract
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Compute(a) => cmd_compute(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Game(a) => cmd_game(a),
        Command::DistillBound(a) => cmd_distill(a),
        Command::Gen(a) => cmd_gen(a),
    }
}

fn cmd_compute(a: ComputeArgs) -> Result<(), Failure> {
    let obj = load_object(&a.object, a.kind)?;
    let spec = resolve_freeset(&a.freeset, &obj)?;
    let opts = a.tols.solver_opts();
    let mut result = match a.monotone {
        MonotoneArg::Omega => {
            let rep = match &obj {
                LoadedObject::State(rho) => proj_robustness_state(&spec, rho, &opts)?,
                LoadedObject::Channel(ch) => proj_robustness_channel(&spec, ch, &opts)?,
                LoadedObject::Povm(ms) => proj_robustness_measurement(&spec, ms, &opts)?,
            };
            io::proj_report_json("omega", &rep)
        }
        MonotoneArg::Robustness => {
            let rep = gen_robustness(&spec, &obj.slots(), &opts)?;
            io::tag_report("robustness", serde_json::to_value(&rep).expect("serializable"))
        }
        MonotoneArg::Weight => {
            let rep = free_weight(&spec, &obj.slots(), &opts)?;
            io::tag_report("weight", serde_json::to_value(&rep).expect("serializable"))
        }
        MonotoneArg::Rmax => {
            let rel_path = a.relative_to.as_ref().ok_or_else(|| Failure {
                code: 1,
                message: "--monotone rmax needs --relative-to <file>".into(),
            })?;
            let rel = load_object(rel_path, a.kind)?;
            let value = rmax_slots(&obj.slots(), &rel.slots(), a.tols.rank_tol)?;
            json!({ "monotone": "rmax", "value": value })
        }
        MonotoneArg::Bounds => {
            let rep = bounds_report(&spec, &obj.slots(), &opts)?;
            io::tag_report("bounds", serde_json::to_value(&rep).expect("serializable"))
        }
    };
    result["tolerances"] = a.tols.echo();
    emit(&result, a.out.as_deref())
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Failure> {
    let opts = a.tols.solver_opts();
    let outcome = suites::run_suite(a.suite, a.trials, a.seed, &opts)?;
    let mut report = outcome.report;
    report["tolerances"] = a.tols.echo();
    emit(&report, a.out.as_deref())?;
    if outcome.pass {
        Ok(())
    } else {
        Err(Failure {
            code: 3,
            message: format!(
                "suite {} found violations beyond tolerance",
                outcome.name
            ),
        })
    }
}

fn cmd_game(a: GameArgs) -> Result<(), Failure> {
    let gi: GameInstance = load_game_instance(&a.instance)?;
    let obj = io::game_object(&gi)?;
    let spec = resolve_freeset(&a.freeset, &obj)?;
    let opts = a.tols.solver_opts();
    let rr = evaluate_game(&gi, &spec, &opts)?;
    let mut result = serde_json::to_value(&rr).expect("serializable");
    result["tolerances"] = a.tols.echo();
    emit(&result, a.out.as_deref())
}

fn cmd_distill(a: DistillArgs) -> Result<(), Failure> {
    let obj = load_object(&a.object, a.kind)?;
    let target = load_object(&a.target, a.kind)?;
    let spec = resolve_freeset(&a.freeset, &obj)?;
    let opts = a.tols.solver_opts();
    let (omega_rep, overlap, overlap_bound) = match (&obj, &target) {
        (LoadedObject::State(rho), LoadedObject::State(phi)) => {
            let rep = proj_robustness_state(&spec, rho, &opts)?;
            let f = free_overlap_state(phi, &spec, &opts)?;
            (rep, f, FidelityBound::Exact)
        }
        (LoadedObject::Channel(ch), LoadedObject::Channel(t)) => {
            let rep = proj_robustness_channel(&spec, ch, &opts)?;
            let mode = match a.overlap_mode {
                OverlapModeArg::ExactReplacement => FidelityMode::ExactReplacement,
                OverlapModeArg::Sampled => FidelityMode::Sampled {
                    samples: a.samples,
                    refine_rounds: a.refine,
                    seed: a.sample_seed,
                },
            };
            let est = free_overlap_channel(t, &spec, mode, &opts)?;
            (rep, est.value, est.bound)
        }
        _ => {
            return Err(Failure {
                code: 1,
                message: "distill-bound supports --kind state or channel".into(),
            })
        }
    };
    let eps_bound = error_bound(&omega_rep.value, overlap)?;
    let overhead = match a.eps {
        Some(eps) => Some(overhead_bound(&omega_rep.value, overlap, eps)?),
        None => None,
    };
    let mut result = json!({
        "omega": omega_rep.value,
        "overlap": overlap,
        "overlap_bound": overlap_bound,
        "error_bound": eps_bound,
        "overhead_bound": overhead,
        "eps": a.eps,
    });
    if omega_rep.value == Extended::Infinite {
        result["reason"] = json!(omega_rep.reason);
    }
    result["tolerances"] = a.tols.echo();
    emit(&result, a.out.as_deref())
}

fn gen_dim(v: Option<usize>, flag: &str) -> Result<usize, Failure> {
    let d = v.ok_or_else(|| Failure {
        code: 1,
        message: format!("gen needs --{flag}"),
    })?;
    if !(2..=4).contains(&d) {
        return Err(Failure {
            code: 1,
            message: format!("--{flag} must be between 2 and 4 (desk scale), got {d}"),
        });
    }
    Ok(d)
}

fn cmd_gen(a: GenArgs) -> Result<(), Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let value = match a.kind {
        GenKind::State => {
            let d = gen_dim(a.dim, "dim")?;
            serde_json::to_value(random_state(d, &mut rng)).expect("serializable")
        }
        GenKind::Channel => {
            let d_in = gen_dim(a.dim_in, "dim-in")?;
            let d_out = gen_dim(a.dim_out, "dim-out")?;
            serde_json::to_value(random_channel(d_in, d_out, &mut rng)).expect("serializable")
        }
        GenKind::PovmSet => {
            let d = gen_dim(a.dim, "dim")?;
            if !(1..=4).contains(&a.m) || !(2..=4).contains(&a.n) {
                return Err(Failure {
                    code: 1,
                    message: format!(
                        "povm-set needs --m in 1..=4 and --n in 2..=4, got m={} n={}",
                        a.m, a.n
                    ),
                });
            }
            if let Some(eta) = a.eta {
                if !(0.0..1.0).contains(&eta) {
                    return Err(Failure {
                        code: 1,
                        message: format!("--eta must lie in [0,1), got {eta}"),
                    });
                }
            }
            serde_json::to_value(random_povm_set(d, a.m, a.n, a.eta, &mut rng))
                .expect("serializable")
        }
    };
    emit(&value, a.out.as_deref())
}
