//! `fpp-lab`: reproducible first-passage percolation experiments.
//!
//! Every experiment subcommand resolves a flat parameter map (flags win
//! over `--config`, which accepts either a `key=value` file or a
//! `manifest.json` from a previous run), executes with deterministic
//! per-replica seeding on a fixed worker pool, and writes CSV artifacts
//! plus a manifest sufficient to reproduce the run bit-for-bit.
//!
//! Exit codes: 0 success, 2 assumption violation, 3 resource refusal,
//! 64 usage error, 74 input/output error.

mod config;
mod errors;
mod experiments;
mod output;
mod plotdata;
mod runner;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use errors::CliResult;
use output::OutDir;

#[derive(Parser)]
#[command(
    name = "fpp-lab",
    version = env!("FPP_LAB_GIT_DESCRIBE"),
    about = "Simulation laboratory for first-passage percolation on the cubic lattice"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Config file: flat key=value lines, or a manifest.json from a
    /// previous run; command-line flags override it
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory for CSV artifacts and the run manifest
    /// [default: runs/<experiment>]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads [default: $FPP_LAB_WORKERS, else all logical CPUs]
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed; every replica seed is derived from it
    #[arg(long)]
    seed: Option<u64>,
    /// Replicas per sampled point
    #[arg(long)]
    replicas: Option<u64>,
}

fn ov(key: &str, value: Option<impl ToString>) -> (String, Option<String>) {
    (key.to_string(), value.map(|v| v.to_string()))
}

#[derive(Args)]
struct EstimateMuArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Weight law literal, e.g. uniform:0:1 or atoms:0:0.1,1:0.9
    #[arg(long)]
    dist: Option<String>,
    /// Direction components, comma-separated; normalized to unit length
    #[arg(long)]
    xi: Option<String>,
    /// Scale grid: comma-separated strictly increasing integers
    #[arg(long)]
    n: Option<String>,
    /// Critical probability for the zero-atom gate [default: exact planar value]
    #[arg(long)]
    pc: Option<f64>,
    /// Skip the zero-atom gate (deliberate supercritical studies)
    #[arg(long)]
    no_gate: bool,
}

impl EstimateMuArgs {
    fn into_parts(self) -> (CommonArgs, Vec<(String, Option<String>)>) {
        let overrides = vec![
            ov("dist", self.dist),
            ov("xi", self.xi),
            ov("n", self.n),
            ov("pc", self.pc),
            ov("gate", self.no_gate.then_some("off")),
        ];
        (self.common, overrides)
    }
}

#[derive(Args)]
struct ConvergenceGapArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Weight law literal
    #[arg(long)]
    dist: Option<String>,
    /// Direction components, comma-separated
    #[arg(long)]
    xi: Option<String>,
    /// Scale grid: comma-separated strictly increasing integers
    #[arg(long)]
    n: Option<String>,
    /// Exact reference time constant; omitted: use mean/n at the largest scale
    #[arg(long)]
    mu_ref: Option<f64>,
}

impl ConvergenceGapArgs {
    fn into_parts(self) -> (CommonArgs, Vec<(String, Option<String>)>) {
        let overrides = vec![
            ov("dist", self.dist),
            ov("xi", self.xi),
            ov("n", self.n),
            ov("mu_ref", self.mu_ref),
        ];
        (self.common, overrides)
    }
}

/// Shared flags of the truncation diagnostics.
#[derive(Args)]
struct TruncArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Weight law literal
    #[arg(long)]
    dist: Option<String>,
    /// Direction components, comma-separated
    #[arg(long)]
    xi: Option<String>,
    /// Scales: a grid for coupling/expectation-gap, one integer for concentration
    #[arg(long)]
    n: Option<String>,
    /// Truncation exponent delta [default: 1/(d+4)]
    #[arg(long)]
    delta: Option<f64>,
    /// Truncation threshold [default: maximize the subcriticality margin]
    #[arg(long)]
    kappa: Option<f64>,
    /// Critical probability the extreme-weight tails must stay below
    #[arg(long)]
    pc: Option<f64>,
    /// Deviation grid for the concentration tail, comma-separated
    #[arg(long)]
    u: Option<String>,
}

impl TruncArgs {
    fn into_parts(self) -> (CommonArgs, Vec<(String, Option<String>)>) {
        let overrides = vec![
            ov("dist", self.dist),
            ov("xi", self.xi),
            ov("n", self.n),
            ov("delta", self.delta),
            ov("kappa", self.kappa),
            ov("pc", self.pc),
            ov("u", self.u),
        ];
        (self.common, overrides)
    }
}

#[derive(Args)]
struct VarianceScanArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Weight law literal; must be supported in [1,inf) with an atom at 1
    #[arg(long)]
    dist: Option<String>,
    /// Angles in radians, comma-separated
    #[arg(long)]
    theta: Option<String>,
    /// Scale grid: comma-separated strictly increasing integers
    #[arg(long)]
    n: Option<String>,
    /// Flat-arc boundary angle; flags each scanned angle inside/outside
    #[arg(long)]
    theta_q: Option<f64>,
    /// Oriented threshold the atom mass must exceed [default: 0.6447; 0 disables]
    #[arg(long)]
    vec_pc: Option<f64>,
}

impl VarianceScanArgs {
    fn into_parts(self) -> (CommonArgs, Vec<(String, Option<String>)>) {
        let overrides = vec![
            ov("dist", self.dist),
            ov("theta", self.theta),
            ov("n", self.n),
            ov("theta_q", self.theta_q),
            ov("vec_pc", self.vec_pc),
        ];
        (self.common, overrides)
    }
}

#[derive(Args)]
struct LambdaArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Weight law literal
    #[arg(long)]
    dist: Option<String>,
    /// Direction components, comma-separated
    #[arg(long)]
    xi: Option<String>,
    /// Target scale n
    #[arg(long)]
    n: Option<String>,
    /// Step radius M [default: balanced against n]
    #[arg(long)]
    m: Option<i64>,
    /// Time-constant estimate entering lambda = min cost - n*mu
    #[arg(long)]
    mu: Option<f64>,
    /// Also solve at scale l*n and run the two-scale consistency check
    #[arg(long)]
    l: Option<i64>,
}

impl LambdaArgs {
    fn into_parts(self) -> (CommonArgs, Vec<(String, Option<String>)>) {
        let overrides = vec![
            ov("dist", self.dist),
            ov("xi", self.xi),
            ov("n", self.n),
            ov("m", self.m),
            ov("mu", self.mu),
            ov("l", self.l),
        ];
        (self.common, overrides)
    }
}

#[derive(Args)]
struct SkeletonDemoArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Weight law literal
    #[arg(long)]
    dist: Option<String>,
    /// Direction components, comma-separated
    #[arg(long)]
    xi: Option<String>,
    /// Geodesic scale n
    #[arg(long)]
    n: Option<String>,
    /// Skeleton radius M
    #[arg(long)]
    m: Option<i64>,
}

impl SkeletonDemoArgs {
    fn into_parts(self) -> (CommonArgs, Vec<(String, Option<String>)>) {
        let overrides = vec![
            ov("dist", self.dist),
            ov("xi", self.xi),
            ov("n", self.n),
            ov("m", self.m),
        ];
        (self.common, overrides)
    }
}

#[derive(Args)]
struct OrientedSpeedArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Bond probabilities, comma-separated
    #[arg(long)]
    q: Option<String>,
    /// Number of generations to grow
    #[arg(long)]
    horizon: Option<u32>,
}

impl OrientedSpeedArgs {
    fn into_parts(self) -> (CommonArgs, Vec<(String, Option<String>)>) {
        let overrides = vec![ov("q", self.q), ov("horizon", self.horizon)];
        (self.common, overrides)
    }
}

#[derive(Args)]
struct VecPcArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of generations to grow
    #[arg(long)]
    horizon: Option<u32>,
}

impl VecPcArgs {
    fn into_parts(self) -> (CommonArgs, Vec<(String, Option<String>)>) {
        let overrides = vec![ov("horizon", self.horizon)];
        (self.common, overrides)
    }
}

#[derive(Args)]
struct PcArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Lattice dimension
    #[arg(long)]
    d: Option<usize>,
    /// Half-width of the crossing box
    #[arg(long)]
    radius: Option<i64>,
    /// Bond probabilities to tabulate, comma-separated
    #[arg(long)]
    p: Option<String>,
}

impl PcArgs {
    fn into_parts(self) -> (CommonArgs, Vec<(String, Option<String>)>) {
        let overrides = vec![ov("d", self.d), ov("radius", self.radius), ov("p", self.p)];
        (self.common, overrides)
    }
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Weight law literal
    #[arg(long)]
    dist: Option<String>,
    /// Lattice dimension
    #[arg(long)]
    d: Option<usize>,
    /// Critical probability to gate the zero atom against
    #[arg(long)]
    pc: Option<f64>,
}

impl ValidateArgs {
    fn into_parts(self) -> (CommonArgs, Vec<(String, Option<String>)>) {
        let overrides = vec![ov("dist", self.dist), ov("d", self.d), ov("pc", self.pc)];
        (self.common, overrides)
    }
}

#[derive(Args)]
struct EmitPlotdataArgs {
    /// Run directory holding the CSV artifacts
    dir: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate the directional time constant over a grid of scales
    EstimateMu(EstimateMuArgs),
    /// Fit how fast E[T(0,n xi)] - n*mu shrinks relative to n
    ConvergenceGap(ConvergenceGapArgs),
    /// Estimate P(plain and truncated passage times differ) across scales
    Coupling(TruncArgs),
    /// Tabulate the upper deviation tail of the truncated passage time
    Concentration(TruncArgs),
    /// Estimate |E plain - E truncated| with a paired design
    ExpectationGap(TruncArgs),
    /// Regress directional passage-time variance on log n per angle
    VarianceScan(VarianceScanArgs),
    /// Solve the window minimization exactly over estimated step costs
    Lambda(LambdaArgs),
    /// Grow oriented percolation and estimate its right-edge speed
    OrientedSpeed(OrientedSpeedArgs),
    /// Bisect the oriented-percolation critical parameter
    VecPc(VecPcArgs),
    /// Bisect the bond-percolation critical probability via box crossings
    Pc(PcArgs),
    /// Extract one geodesic and decompose it into radius-M anchors
    SkeletonDemo(SkeletonDemoArgs),
    /// Check a weight law against the standing assumptions
    Validate(ValidateArgs),
    /// Derive gnuplot-ready files and a summary from a run directory
    EmitPlotdata(EmitPlotdataArgs),
}

type ExperimentFn = fn(&mut RunConfig, &rayon::ThreadPool, &OutDir) -> CliResult<()>;

fn run_experiment(
    name: &str,
    common: CommonArgs,
    mut overrides: Vec<(String, Option<String>)>,
    f: ExperimentFn,
) -> CliResult<()> {
    overrides.push(ov("seed", common.seed));
    overrides.push(ov("replicas", common.replicas));
    let mut cfg = RunConfig::from_sources(name, common.config.as_deref(), overrides)?;
    let pool = runner::build_pool(common.workers)?;
    let out = OutDir::new(
        common
            .out
            .unwrap_or_else(|| PathBuf::from("runs").join(name)),
    );
    let started = Instant::now();
    f(&mut cfg, &pool, &out)?;
    let manifest = out.write_manifest(&cfg, started.elapsed().as_secs_f64())?;
    println!("wrote {}", manifest.display());
    Ok(())
}

fn dispatch(cmd: Cmd) -> CliResult<()> {
    match cmd {
        Cmd::EstimateMu(a) => {
            let (c, o) = a.into_parts();
            run_experiment("estimate-mu", c, o, experiments::estimate_mu)
        }
        Cmd::ConvergenceGap(a) => {
            let (c, o) = a.into_parts();
            run_experiment("convergence-gap", c, o, experiments::convergence_gap)
        }
        Cmd::Coupling(a) => {
            let (c, o) = a.into_parts();
            run_experiment("coupling", c, o, experiments::coupling)
        }
        Cmd::Concentration(a) => {
            let (c, o) = a.into_parts();
            run_experiment("concentration", c, o, experiments::concentration)
        }
        Cmd::ExpectationGap(a) => {
            let (c, o) = a.into_parts();
            run_experiment("expectation-gap", c, o, experiments::expectation_gap)
        }
        Cmd::VarianceScan(a) => {
            let (c, o) = a.into_parts();
            run_experiment("variance-scan", c, o, experiments::variance_scan)
        }
        Cmd::Lambda(a) => {
            let (c, o) = a.into_parts();
            run_experiment("lambda", c, o, experiments::lambda)
        }
        Cmd::OrientedSpeed(a) => {
            let (c, o) = a.into_parts();
            run_experiment("oriented-speed", c, o, experiments::oriented_speed)
        }
        Cmd::VecPc(a) => {
            let (c, o) = a.into_parts();
            run_experiment("vec-pc", c, o, experiments::vec_pc)
        }
        Cmd::Pc(a) => {
            let (c, o) = a.into_parts();
            run_experiment("pc", c, o, experiments::pc)
        }
        Cmd::SkeletonDemo(a) => {
            let (c, o) = a.into_parts();
            run_experiment("skeleton-demo", c, o, experiments::skeleton_demo)
        }
        Cmd::Validate(a) => {
            let (c, o) = a.into_parts();
            run_experiment("validate", c, o, experiments::validate)
        }
        Cmd::EmitPlotdata(a) => plotdata::emit(&a.dir),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors; everything else
            // is a usage problem.
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = dispatch(cli.cmd) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
