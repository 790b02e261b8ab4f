//! The experiment subcommands: resolve parameters (recording every
//! default into the config so the manifest is complete), fan replicas out
//! over the worker pool, aggregate in replica order, and write CSVs.
//!
//! Seed discipline: every replica seed is a stable hash of (master seed,
//! stream tag, replica index) — the same streams the core library's
//! sequential drivers use — so results are independent of scheduling and
//! identical to a single-threaded run.

use fpp_core::lattice::LatticeSpec;
use fpp_core::passage::{check_unit_direction, directional_passage};
use fpp_core::percolation::{
    crossing_indicator, estimate_pc, estimate_vec_pc, exact_pc, oriented_run,
    oriented_speed_from_runs, CROSSING_TAG, ORIENTED_TAG,
};
use fpp_core::rng::derive_seed;
use fpp_core::scaling::{
    check_grid, check_time_constant_gate, check_variance_gate, default_parameters,
    directional_time_replica, fold_theta, gap_report_from_series, generate_u_vectors,
    kesten_window_check, replica_seed, skeletonize, solve_lambda, theta_scan_from_points,
    time_constant_from_series, u_cost_replica, u_costs_from_samples, variance_tag,
    EstimateSeries, LambdaProblem, LambdaSolution, MuReference, ScalePoint, ThetaScan,
    VarianceScanOptions, COST_TAG, MU_TAG,
};
use fpp_core::stats::wilson_interval;
use fpp_core::truncation::{
    choose_kappa, concentration_from_values, coupling_from_flags, gap_from_pairs,
    set_time_pair_replica, times_differ, truncated_set_time_replica, KappaChoice,
    CONCENTRATION_TAG, COUPLING_TAG, GAP_TAG,
};
use fpp_core::weights::validate_assumptions;
use fpp_core::{WeightDistribution, WeightField};

use crate::config::{parse_direction, RunConfig};
use crate::errors::{CliError, CliResult};
use crate::output::{fmt_components, fmt_f64, fmt_opt, OutDir};
use crate::runner::run_replicas;

/// Seed-stream tag for the demo geodesic; not shared with any estimator.
const SKELETON_TAG: &str = "cli.skeleton";

pub const RESULTS_HEADER: [&str; 10] = [
    "experiment", "d", "dist", "xi_or_theta", "n", "replicas", "mean", "var", "ci", "extra",
];
pub const TRUNC_HEADER: [&str; 9] = [
    "n", "delta", "kappa", "replicas", "p_neq", "ci_low", "ci_high", "gap", "gap_ci",
];
pub const CONCENTRATION_HEADER: [&str; 6] = ["n", "delta", "kappa", "replicas", "u", "tail"];
pub const PC_HEADER: [&str; 3] = ["p", "crossing_prob", "ci"];
pub const ORIENTED_HEADER: [&str; 5] = ["q", "survival", "speed", "ci_low", "ci_high"];
pub const SKELETON_HEADER: [&str; 3] = ["i", "tau", "site"];

// ---------------------------------------------------------------- shared

fn resolve_dist(cfg: &RunConfig) -> CliResult<WeightDistribution> {
    Ok(WeightDistribution::parse(cfg.require("dist")?)?)
}

fn resolve_xi(cfg: &mut RunConfig) -> CliResult<Vec<f64>> {
    let raw = cfg.default_param("xi", "1,0");
    parse_direction(cfg, "xi", &raw)
}

/// The critical probability to gate against: `--pc` if given, else the
/// exact planar value; other dimensions must say what they mean.
fn resolve_pc(cfg: &mut RunConfig, d: usize) -> CliResult<f64> {
    if let Some(pc) = cfg.optional_parsed::<f64>("pc")? {
        return Ok(pc);
    }
    match exact_pc(d) {
        Some(pc) => {
            cfg.set_param("pc", fmt_f64(pc));
            Ok(pc)
        }
        None => Err(CliError::usage(format!(
            "no exact critical probability is known at d={d}; pass --pc"
        ))),
    }
}

/// Compute a directional series with the pool; same seed streams and
/// aggregation as the core library's sequential driver.
fn directional_series(
    pool: &rayon::ThreadPool,
    dist: &WeightDistribution,
    xi: &[f64],
    n_grid: &[i64],
    replicas: u64,
    master: u64,
    tag: &str,
) -> CliResult<EstimateSeries> {
    check_unit_direction(xi)?;
    check_grid(n_grid, replicas)?;
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let values = run_replicas(pool, &format!("n={n}"), replicas, |r| {
            directional_time_replica(dist, xi, n, replica_seed(master, tag, n, r))
        })?;
        points.push(ScalePoint::from_values(n, &values));
    }
    Ok(EstimateSeries {
        d: xi.len(),
        dist: dist.to_string(),
        xi: xi.to_vec(),
        master_seed: master,
        points,
    })
}

#[allow(clippy::too_many_arguments)] // row layout is the interface
fn results_row(
    experiment: &str,
    d: usize,
    dist: &str,
    direction: &str,
    n: i64,
    replicas: u64,
    mean: f64,
    var: f64,
    ci: f64,
    extra: String,
) -> Vec<String> {
    vec![
        experiment.to_string(),
        d.to_string(),
        dist.to_string(),
        direction.to_string(),
        n.to_string(),
        replicas.to_string(),
        fmt_f64(mean),
        fmt_f64(var),
        fmt_f64(ci),
        extra,
    ]
}

// ---------------------------------------------------------- estimate-mu

pub fn estimate_mu(cfg: &mut RunConfig, pool: &rayon::ThreadPool, out: &OutDir) -> CliResult<()> {
    let dist = resolve_dist(cfg)?;
    let xi = resolve_xi(cfg)?;
    let d = xi.len();
    let n_grid: Vec<i64> = cfg.default_list("n", "8,16,32,64")?;
    let replicas: u64 = cfg.default_parsed("replicas", 100u64)?;
    let master: u64 = cfg.default_parsed("seed", 1u64)?;
    let gate = cfg.default_param("gate", "on");
    let pc_gate = match gate.as_str() {
        "on" => Some(resolve_pc(cfg, d)?),
        "off" => None,
        other => {
            return Err(CliError::usage(format!(
                "parameter 'gate': expected 'on' or 'off', got '{other}'"
            )))
        }
    };
    check_time_constant_gate(&dist, d, pc_gate)?;
    let series = directional_series(pool, &dist, &xi, &n_grid, replicas, master, MU_TAG)?;
    let est = time_constant_from_series(series)?;
    let direction = fmt_components(&xi);
    let rows: Vec<Vec<String>> = est
        .series
        .points
        .iter()
        .map(|p| {
            results_row(
                &cfg.experiment,
                d,
                &est.series.dist,
                &direction,
                p.n,
                p.replicas,
                p.mean,
                p.var,
                p.ci_half,
                format!("ratio={}", fmt_f64(p.mean / p.n as f64)),
            )
        })
        .collect();
    let path = out.write_csv("results.csv", &RESULTS_HEADER, &rows)?;
    println!(
        "estimate-mu: dist={} xi={direction} d={d} replicas={replicas} seed={master}",
        est.series.dist
    );
    for p in &est.series.points {
        println!(
            "  n={}: mean={} var={} ci={} ratio={}",
            p.n,
            fmt_f64(p.mean),
            fmt_f64(p.var),
            fmt_f64(p.ci_half),
            fmt_f64(p.mean / p.n as f64)
        );
    }
    println!(
        "mu_min = {} +/- {} (attained at n={})",
        fmt_f64(est.mu_min),
        fmt_f64(est.mu_min_ci_half),
        est.mu_min_at
    );
    println!(
        "mu_largest = {} +/- {}",
        fmt_f64(est.mu_largest),
        fmt_f64(est.mu_largest_ci_half)
    );
    println!("wrote {}", path.display());
    Ok(())
}

// ------------------------------------------------------ convergence-gap

pub fn convergence_gap(
    cfg: &mut RunConfig,
    pool: &rayon::ThreadPool,
    out: &OutDir,
) -> CliResult<()> {
    let dist = resolve_dist(cfg)?;
    let xi = resolve_xi(cfg)?;
    let d = xi.len();
    let n_grid: Vec<i64> = cfg.default_list("n", "8,16,32,64,128")?;
    let replicas: u64 = cfg.default_parsed("replicas", 100u64)?;
    let master: u64 = cfg.default_parsed("seed", 1u64)?;
    let reference = match cfg.optional_parsed::<f64>("mu_ref")? {
        Some(mu) => MuReference::Exact(mu),
        None => MuReference::LargestN,
    };
    let series = directional_series(pool, &dist, &xi, &n_grid, replicas, master, MU_TAG)?;
    let report = gap_report_from_series(series, reference)?;
    let direction = fmt_components(&xi);
    let rows: Vec<Vec<String>> = report
        .series
        .points
        .iter()
        .zip(&report.gaps)
        .map(|(p, &(_, gap))| {
            results_row(
                &cfg.experiment,
                d,
                &report.series.dist,
                &direction,
                p.n,
                p.replicas,
                p.mean,
                p.var,
                p.ci_half,
                format!("gap={}", fmt_f64(gap)),
            )
        })
        .collect();
    let path = out.write_csv("results.csv", &RESULTS_HEADER, &rows)?;
    println!(
        "convergence-gap: dist={} xi={direction} d={d} replicas={replicas} seed={master}",
        report.series.dist
    );
    println!(
        "reference mu ({}) = {} +/- {}",
        report.reference_label,
        fmt_f64(report.mu_used),
        fmt_f64(report.mu_ci_half)
    );
    for &(n, gap) in &report.gaps {
        println!("  n={n}: gap={}", fmt_f64(gap));
    }
    println!(
        "positive gaps: {} of {} ({} excluded from the fit)",
        report.positive_gaps,
        report.gaps.len(),
        report.excluded_gaps
    );
    match &report.fit {
        Some(fit) => {
            let (lo, hi) = fit.slope_ci();
            println!(
                "fitted gap exponent = {} (95% CI {} .. {})",
                fmt_f64(fit.slope),
                fmt_f64(lo),
                fmt_f64(hi)
            );
        }
        None => println!("no usable positive gaps; fit skipped"),
    }
    println!(
        "sublinear benchmark exponent 1 - 1/(6d+12) = {}",
        fmt_f64(report.theorem_exponent)
    );
    if let Some(beta) = report.corollary_beta {
        println!("planar variance benchmark beta = {}", fmt_f64(beta));
    }
    if let Some(s) = &report.sensitivity {
        println!(
            "sensitivity: exponent = {} at mu={} and {} at mu={}",
            fmt_opt(s.exponent_minus),
            fmt_f64(s.mu_minus),
            fmt_opt(s.exponent_plus),
            fmt_f64(s.mu_plus)
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

// ------------------------------------------------------ truncation runs

struct TruncSetup {
    dist: WeightDistribution,
    xi: Vec<f64>,
    delta: f64,
    choice: KappaChoice,
    replicas: u64,
    master: u64,
}

fn resolve_trunc(cfg: &mut RunConfig) -> CliResult<TruncSetup> {
    let dist = resolve_dist(cfg)?;
    let xi = resolve_xi(cfg)?;
    let d = xi.len();
    let pc = resolve_pc(cfg, d)?;
    let delta: f64 = cfg.default_parsed("delta", fmt_f64(1.0 / (d as f64 + 4.0)))?;
    let replicas: u64 = cfg.default_parsed("replicas", 200u64)?;
    let master: u64 = cfg.default_parsed("seed", 1u64)?;
    let choice = match cfg.optional_parsed::<f64>("kappa")? {
        Some(kappa) => {
            if !(kappa > 0.0 && kappa < 1.0) {
                return Err(CliError::usage(format!(
                    "parameter 'kappa': must lie in (0,1), got {kappa}"
                )));
            }
            let p_low = dist.prob_lt(kappa);
            let p_high = dist.prob_gt(1.0 / kappa);
            KappaChoice { kappa, p_low, p_high, margin: pc - p_low.max(p_high) }
        }
        None => {
            let choice = choose_kappa(&dist, pc)?;
            cfg.set_param("kappa", fmt_f64(choice.kappa));
            choice
        }
    };
    Ok(TruncSetup { dist, xi, delta, choice, replicas, master })
}

fn print_kappa(choice: &KappaChoice) {
    println!(
        "kappa = {} (P(w<kappa) = {}, P(w>1/kappa) = {}, margin = {})",
        fmt_f64(choice.kappa),
        fmt_f64(choice.p_low),
        fmt_f64(choice.p_high),
        fmt_f64(choice.margin)
    );
    if choice.margin <= 0.0 {
        println!("warning: margin is not positive; the truncation premise is off");
    }
}

pub fn coupling(cfg: &mut RunConfig, pool: &rayon::ThreadPool, out: &OutDir) -> CliResult<()> {
    let s = resolve_trunc(cfg)?;
    let n_grid: Vec<i64> = cfg.default_list("n", "8,16,32")?;
    check_grid(&n_grid, s.replicas)?;
    println!(
        "coupling: dist={} xi={} delta={} replicas={} seed={}",
        s.dist,
        fmt_components(&s.xi),
        fmt_f64(s.delta),
        s.replicas,
        s.master
    );
    print_kappa(&s.choice);
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in &n_grid {
        let flags = run_replicas(pool, &format!("n={n}"), s.replicas, |r| {
            let pair = set_time_pair_replica(
                &s.dist,
                &s.xi,
                n,
                s.delta,
                s.choice.kappa,
                derive_seed(s.master, COUPLING_TAG, r),
            )?;
            Ok(times_differ(pair.plain, pair.truncated))
        })?;
        let est = coupling_from_flags(s.choice.clone(), n, s.delta, &flags);
        println!(
            "  n={n}: p_neq={} 95% CI [{}, {}] ({} of {} replicas differ)",
            fmt_f64(est.p_neq),
            fmt_f64(est.ci.0),
            fmt_f64(est.ci.1),
            est.differing,
            est.replicas
        );
        rows.push(vec![
            n.to_string(),
            fmt_f64(s.delta),
            fmt_f64(s.choice.kappa),
            est.replicas.to_string(),
            fmt_f64(est.p_neq),
            fmt_f64(est.ci.0),
            fmt_f64(est.ci.1),
            String::new(),
            String::new(),
        ]);
    }
    let path = out.write_csv("coupling.csv", &TRUNC_HEADER, &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn expectation_gap(
    cfg: &mut RunConfig,
    pool: &rayon::ThreadPool,
    out: &OutDir,
) -> CliResult<()> {
    let s = resolve_trunc(cfg)?;
    let n_grid: Vec<i64> = cfg.default_list("n", "8,16,32")?;
    check_grid(&n_grid, s.replicas)?;
    println!(
        "expectation-gap: dist={} xi={} delta={} replicas={} seed={}",
        s.dist,
        fmt_components(&s.xi),
        fmt_f64(s.delta),
        s.replicas,
        s.master
    );
    print_kappa(&s.choice);
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in &n_grid {
        let pairs = run_replicas(pool, &format!("n={n}"), s.replicas, |r| {
            set_time_pair_replica(
                &s.dist,
                &s.xi,
                n,
                s.delta,
                s.choice.kappa,
                derive_seed(s.master, GAP_TAG, r),
            )
        })?;
        let est = gap_from_pairs(s.choice.clone(), n, s.delta, &pairs);
        println!(
            "  n={n}: |E plain - E truncated| = {} +/- {} (means {} vs {}, mean |diff| {})",
            fmt_f64(est.gap),
            fmt_f64(est.ci_half),
            fmt_f64(est.mean_plain),
            fmt_f64(est.mean_truncated),
            fmt_f64(est.mean_abs_diff)
        );
        rows.push(vec![
            n.to_string(),
            fmt_f64(s.delta),
            fmt_f64(s.choice.kappa),
            est.replicas.to_string(),
            String::new(),
            String::new(),
            String::new(),
            fmt_f64(est.gap),
            fmt_f64(est.ci_half),
        ]);
    }
    let path = out.write_csv("expectation_gap.csv", &TRUNC_HEADER, &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn concentration(
    cfg: &mut RunConfig,
    pool: &rayon::ThreadPool,
    out: &OutDir,
) -> CliResult<()> {
    let s = resolve_trunc(cfg)?;
    let n: i64 = cfg.default_parsed("n", 64i64)?;
    let u_grid: Vec<f64> = cfg.default_list("u", "0,0.05,0.1,0.2,0.4,0.8")?;
    if u_grid.iter().any(|u| !u.is_finite() || *u < 0.0) {
        return Err(CliError::usage("parameter 'u': entries must be finite and >= 0".to_string()));
    }
    println!(
        "concentration: dist={} xi={} n={n} delta={} replicas={} seed={}",
        s.dist,
        fmt_components(&s.xi),
        fmt_f64(s.delta),
        s.replicas,
        s.master
    );
    print_kappa(&s.choice);
    let values = run_replicas(pool, "tail", s.replicas, |r| {
        truncated_set_time_replica(
            &s.dist,
            &s.xi,
            n,
            s.delta,
            s.choice.kappa,
            derive_seed(s.master, CONCENTRATION_TAG, r),
        )
    })?;
    let scan = concentration_from_values(s.choice.clone(), n, s.delta, &u_grid, &values);
    println!(
        "deviation scale n^(1/2+3delta) = {}; mean truncated time = {}",
        fmt_f64(scan.scale),
        fmt_f64(scan.mean)
    );
    let mut rows = Vec::with_capacity(scan.points.len());
    for &(u, tail) in &scan.points {
        println!("  u={}: tail={}", fmt_f64(u), fmt_f64(tail));
        rows.push(vec![
            n.to_string(),
            fmt_f64(s.delta),
            fmt_f64(s.choice.kappa),
            scan.replicas.to_string(),
            fmt_f64(u),
            fmt_f64(tail),
        ]);
    }
    let path = out.write_csv("concentration.csv", &CONCENTRATION_HEADER, &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

// ------------------------------------------------------- variance-scan

pub fn variance_scan(
    cfg: &mut RunConfig,
    pool: &rayon::ThreadPool,
    out: &OutDir,
) -> CliResult<()> {
    let dist = resolve_dist(cfg)?;
    let theta_list: Vec<f64> = cfg.default_list("theta", "0")?;
    let n_grid: Vec<i64> = cfg.default_list("n", "16,32,64")?;
    let replicas: u64 = cfg.default_parsed("replicas", 200u64)?;
    let master: u64 = cfg.default_parsed("seed", 1u64)?;
    let theta_q: Option<f64> = cfg.optional_parsed("theta_q")?;
    // Literature corridor for the planar oriented threshold; set 0 to
    // require only a positive atom at the minimum.
    let vec_pc: f64 = cfg.default_parsed("vec_pc", "0.6447")?;
    check_grid(&n_grid, replicas)?;
    if replicas < 2 {
        return Err(CliError::usage("variance estimation needs at least two replicas".to_string()));
    }
    let options = VarianceScanOptions { theta_q, vec_pc: Some(vec_pc) };
    let q = check_variance_gate(&dist, &options)?;
    println!(
        "variance-scan: dist={dist} atom-at-1 mass q={} replicas={replicas} seed={master}",
        fmt_f64(q)
    );
    let mut scans: Vec<ThetaScan> = Vec::with_capacity(theta_list.len());
    for (ti, &theta) in theta_list.iter().enumerate() {
        let folded = fold_theta(theta);
        let xi = [folded.cos(), folded.sin()];
        let tag = variance_tag(ti);
        let mut points = Vec::with_capacity(n_grid.len());
        for &n in &n_grid {
            let values = run_replicas(pool, &format!("theta={theta} n={n}"), replicas, |r| {
                directional_time_replica(&dist, &xi, n, replica_seed(master, &tag, n, r))
            })?;
            points.push(ScalePoint::from_values(n, &values));
        }
        scans.push(theta_scan_from_points(theta, theta_q, points));
    }
    let mut rows = Vec::new();
    for scan in &scans {
        let inside = match scan.inside_flat_edge {
            Some(true) => "yes",
            Some(false) => "no",
            None => "na",
        };
        let slope = fmt_opt(scan.fit.as_ref().map(|f| f.slope));
        for p in &scan.points {
            rows.push(results_row(
                &cfg.experiment,
                2,
                &dist.to_string(),
                &fmt_f64(scan.theta),
                p.n,
                p.replicas,
                p.mean,
                p.var,
                p.ci_half,
                format!("theta_folded={};slope={slope};inside={inside}", fmt_f64(scan.theta_folded)),
            ));
        }
        match &scan.fit {
            Some(fit) => {
                let (lo, hi) = fit.slope_ci();
                println!(
                    "theta={} (folded {}): variance-vs-log-n slope = {} (95% CI {} .. {}), inside flat arc: {inside}",
                    fmt_f64(scan.theta),
                    fmt_f64(scan.theta_folded),
                    fmt_f64(fit.slope),
                    fmt_f64(lo),
                    fmt_f64(hi)
                );
            }
            None => println!(
                "theta={} (folded {}): slope fit skipped (degenerate grid)",
                fmt_f64(scan.theta),
                fmt_f64(scan.theta_folded)
            ),
        }
        for p in &scan.points {
            println!("  n={}: var={} mean={}", p.n, fmt_f64(p.var), fmt_f64(p.mean));
        }
    }
    let path = out.write_csv("results.csv", &RESULTS_HEADER, &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

// -------------------------------------------------------------- lambda

fn format_steps(sol: &LambdaSolution, u: &[fpp_core::Site]) -> String {
    let parts: Vec<String> = sol
        .multiset
        .iter()
        .enumerate()
        .filter(|(_, &count)| count > 0)
        .map(|(k, &count)| format!("{count}x({})", fmt_components(&u[k])))
        .collect();
    if parts.is_empty() {
        "empty".to_string()
    } else {
        parts.join("+")
    }
}

pub fn lambda(cfg: &mut RunConfig, pool: &rayon::ThreadPool, out: &OutDir) -> CliResult<()> {
    let dist = resolve_dist(cfg)?;
    let xi = resolve_xi(cfg)?;
    let d = xi.len();
    let n: i64 = cfg.default_parsed("n", 16i64)?;
    let m: i64 = match cfg.optional_parsed::<i64>("m")? {
        Some(m) => m,
        None => {
            let (_, m) = default_parameters(d, n.max(1))?;
            cfg.set_param("m", m);
            m
        }
    };
    let mu: f64 = cfg.require_parsed("mu")?;
    let replicas: u64 = cfg.default_parsed("replicas", 100u64)?;
    let master: u64 = cfg.default_parsed("seed", 1u64)?;
    if replicas == 0 {
        return Err(CliError::usage("step-cost estimation needs at least one replica".to_string()));
    }
    let u = generate_u_vectors(m, d)?;
    println!(
        "lambda: dist={dist} xi={} d={d} n={n} m={m} mu={} steps={} replicas={replicas} seed={master}",
        fmt_components(&xi),
        fmt_f64(mu),
        u.len()
    );
    let samples = run_replicas(pool, "step costs", replicas, |r| {
        u_cost_replica(&dist, d, m, replica_seed(master, COST_TAG, m, r))
    })?;
    let est = u_costs_from_samples(u, &samples)?;
    let worst_ci = est.ci_halves.iter().cloned().fold(0.0f64, f64::max);
    println!("largest step-cost CI half-width = {}", fmt_f64(worst_ci));
    let problem = LambdaProblem::new(m, n, xi.clone(), est.u.clone(), est.costs.clone(), mu)?;
    let sol = solve_lambda(&problem)?;
    println!(
        "min window cost = {}  lambda = {}  displacement = ({})  states explored = {}",
        fmt_f64(sol.min_cost),
        fmt_f64(sol.lambda),
        fmt_components(&sol.displacement),
        sol.states_explored
    );
    println!("optimal step multiset: {}", format_steps(&sol, &problem.u));
    let extra = format!(
        "lambda={};m={m};mu={};states={};displacement={};steps={}",
        fmt_f64(sol.lambda),
        fmt_f64(mu),
        sol.states_explored,
        fmt_components(&sol.displacement),
        format_steps(&sol, &problem.u)
    );
    let rows = vec![results_row(
        &cfg.experiment,
        d,
        &dist.to_string(),
        &fmt_components(&xi),
        n,
        replicas,
        sol.min_cost,
        0.0,
        0.0,
        extra,
    )];
    let path = out.write_csv("results.csv", &RESULTS_HEADER, &rows)?;
    if let Some(l) = cfg.optional_parsed::<i64>("l")? {
        let big = LambdaProblem::new(
            m,
            n.checked_mul(l)
                .ok_or_else(|| CliError::usage(format!("l*n overflows with l={l}, n={n}")))?,
            xi,
            problem.u.clone(),
            problem.costs.clone(),
            mu,
        )?;
        let sol_l = solve_lambda(&big)?;
        let report = kesten_window_check(sol.lambda, sol_l.lambda, n, l, m, d, dist.mean())?;
        println!(
            "two-scale check at l={l}: lambda({n}) = {}, lambda({}) = {}",
            fmt_f64(sol.lambda),
            n * l,
            fmt_f64(sol_l.lambda)
        );
        println!(
            "  smallest feasible C1 = {} (upper bound {}, lower bound {}); using C1 = {}: upper {} lower {}",
            fmt_f64(report.min_feasible_c1),
            fmt_f64(report.bound_from_upper),
            fmt_f64(report.bound_from_lower),
            fmt_f64(report.c1_used),
            if report.upper_holds { "holds" } else { "FAILS" },
            if report.lower_holds { "holds" } else { "FAILS" }
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

// -------------------------------------------------------- skeleton-demo

pub fn skeleton_demo(cfg: &mut RunConfig, _pool: &rayon::ThreadPool, out: &OutDir) -> CliResult<()> {
    let dist = resolve_dist(cfg)?;
    let xi = resolve_xi(cfg)?;
    let d = xi.len();
    let n: i64 = cfg.default_parsed("n", 64i64)?;
    let m: i64 = cfg.default_parsed("m", 8i64)?;
    let master: u64 = cfg.default_parsed("seed", 1u64)?;
    if n < 1 {
        return Err(CliError::usage(format!("parameter 'n': need n >= 1, got {n}")));
    }
    let spec = LatticeSpec::covering_segment(n, &xi)?;
    let field = WeightField::sample(spec, dist.clone(), derive_seed(master, SKELETON_TAG, 0));
    let res = directional_passage(&field, &xi, n, true)?;
    let geodesic = res
        .geodesic
        .filter(|p| !p.is_empty())
        .ok_or_else(|| fpp_core::Error::domain("no geodesic returned at this scale".to_string()))?;
    let sk = skeletonize(&geodesic, m)?;
    let bound = n as f64 / (d as f64 * m as f64) - 1.0;
    println!(
        "skeleton-demo: dist={dist} xi={} n={n} m={m} seed={master}",
        fmt_components(&xi)
    );
    println!(
        "passage time = {} over {} vertices; jumps Q = {} (lower bound n/(d*m) - 1 = {})",
        fmt_f64(res.time),
        geodesic.len(),
        sk.q,
        fmt_f64(bound)
    );
    let mut anchor_rows = Vec::with_capacity(sk.anchors.len());
    for (i, (tau, site)) in sk.tau.iter().zip(&sk.anchors).enumerate() {
        println!("  anchor {i}: path index {tau} at ({})", fmt_components(site));
        anchor_rows.push(vec![i.to_string(), tau.to_string(), fmt_components(site)]);
    }
    let extra = format!(
        "m={m};time={};path_len={};bound={}",
        fmt_f64(res.time),
        geodesic.len(),
        fmt_f64(bound)
    );
    let rows = vec![results_row(
        &cfg.experiment,
        d,
        &dist.to_string(),
        &fmt_components(&xi),
        n,
        1,
        sk.q as f64,
        0.0,
        0.0,
        extra,
    )];
    let results = out.write_csv("results.csv", &RESULTS_HEADER, &rows)?;
    let anchors = out.write_csv("skeleton.csv", &SKELETON_HEADER, &anchor_rows)?;
    println!("wrote {}", results.display());
    println!("wrote {}", anchors.display());
    Ok(())
}

// ------------------------------------------------------- oriented-speed

pub fn oriented_speed(
    cfg: &mut RunConfig,
    pool: &rayon::ThreadPool,
    out: &OutDir,
) -> CliResult<()> {
    let q_list: Vec<f64> = cfg.default_list("q", "0.8")?;
    let horizon: u32 = cfg.default_parsed("horizon", 256u32)?;
    let replicas: u64 = cfg.default_parsed("replicas", 400u64)?;
    let master: u64 = cfg.default_parsed("seed", 1u64)?;
    if replicas == 0 {
        return Err(CliError::usage("speed estimation needs at least one replica".to_string()));
    }
    println!("oriented-speed: horizon={horizon} replicas={replicas} seed={master}");
    let mut rows = Vec::with_capacity(q_list.len());
    for &q in &q_list {
        let speeds = run_replicas(pool, &format!("q={q}"), replicas, |r| {
            Ok(oriented_run(q, horizon, derive_seed(master, ORIENTED_TAG, r))?.speed_estimate)
        })?;
        let est = oriented_speed_from_runs(q, horizon, &speeds);
        match (est.speed, est.ci) {
            (Some(speed), Some((lo, hi))) => println!(
                "  q={}: survival={} speed={} 95% CI [{}, {}] ({} of {} survive)",
                fmt_f64(q),
                fmt_f64(est.survival),
                fmt_f64(speed),
                fmt_f64(lo),
                fmt_f64(hi),
                est.survivors,
                est.replicas
            ),
            _ => println!(
                "  q={}: survival={} — no surviving replica, speed undefined",
                fmt_f64(q),
                fmt_f64(est.survival)
            ),
        }
        rows.push(vec![
            fmt_f64(q),
            fmt_f64(est.survival),
            fmt_opt(est.speed),
            fmt_opt(est.ci.map(|c| c.0)),
            fmt_opt(est.ci.map(|c| c.1)),
        ]);
    }
    let path = out.write_csv("oriented.csv", &ORIENTED_HEADER, &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

// --------------------------------------------------------------- vec-pc

pub fn vec_pc(cfg: &mut RunConfig, _pool: &rayon::ThreadPool, out: &OutDir) -> CliResult<()> {
    let horizon: u32 = cfg.default_parsed("horizon", 128u32)?;
    let replicas: u64 = cfg.default_parsed("replicas", 400u64)?;
    let master: u64 = cfg.default_parsed("seed", 1u64)?;
    println!("vec-pc: horizon={horizon} replicas={replicas} seed={master}");
    let est = estimate_vec_pc(horizon, replicas, master)?;
    println!(
        "critical parameter estimate = {} 95% CI [{}, {}] (survival at estimate {})",
        fmt_f64(est.estimate),
        fmt_f64(est.ci.0),
        fmt_f64(est.ci.1),
        fmt_f64(est.survival_at_estimate)
    );
    println!(
        "half-horizon estimate = {} — {}",
        fmt_f64(est.half_horizon_estimate),
        if est.stable { "stable under horizon halving" } else { "NOT stable; raise the horizon" }
    );
    let rows = vec![vec![
        fmt_f64(est.estimate),
        fmt_f64(est.survival_at_estimate),
        String::new(),
        fmt_f64(est.ci.0),
        fmt_f64(est.ci.1),
    ]];
    let path = out.write_csv("vec_pc.csv", &ORIENTED_HEADER, &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

// ------------------------------------------------------------------- pc

pub fn pc(cfg: &mut RunConfig, pool: &rayon::ThreadPool, out: &OutDir) -> CliResult<()> {
    let d: usize = cfg.default_parsed("d", 2usize)?;
    let radius: i64 = cfg.default_parsed("radius", 32i64)?;
    let replicas: u64 = cfg.default_parsed("replicas", 200u64)?;
    let master: u64 = cfg.default_parsed("seed", 1u64)?;
    let p_grid: Vec<f64> = cfg.default_list("p", "0.3,0.35,0.4,0.45,0.5,0.55,0.6,0.65,0.7")?;
    println!("pc: d={d} box radius={radius} replicas={replicas} seed={master}");
    let est = estimate_pc(d, radius, replicas, master)?;
    let mut rows = Vec::with_capacity(p_grid.len() + 1);
    for &p in &p_grid {
        let hits = run_replicas(pool, &format!("p={p}"), replicas, |r| {
            crossing_indicator(d, radius, p, derive_seed(master, CROSSING_TAG, r))
        })?
        .into_iter()
        .filter(|&h| h)
        .count();
        let frac = hits as f64 / replicas as f64;
        let (lo, hi) = wilson_interval(hits, replicas as usize);
        println!("  p={}: crossing probability {}", fmt_f64(p), fmt_f64(frac));
        rows.push(vec![fmt_f64(p), fmt_f64(frac), fmt_f64((hi - lo) / 2.0)]);
    }
    rows.push(vec![
        fmt_f64(est.estimate),
        fmt_f64(est.crossing_at_estimate),
        fmt_f64((est.ci.1 - est.ci.0) / 2.0),
    ]);
    println!(
        "pc estimate = {} 95% CI [{}, {}] (crossing probability there: {})",
        fmt_f64(est.estimate),
        fmt_f64(est.ci.0),
        fmt_f64(est.ci.1),
        fmt_f64(est.crossing_at_estimate)
    );
    if let Some(exact) = exact_pc(d) {
        println!("exact value at d={d}: {}", fmt_f64(exact));
    }
    let path = out.write_csv("pc.csv", &PC_HEADER, &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

// ------------------------------------------------------------- validate

pub fn validate(cfg: &mut RunConfig, _pool: &rayon::ThreadPool, out: &OutDir) -> CliResult<()> {
    let dist = resolve_dist(cfg)?;
    let d: usize = cfg.default_parsed("d", 2usize)?;
    let pc_value = resolve_pc(cfg, d)?;
    let report = validate_assumptions(&dist, d, pc_value)?;
    println!("{report}");
    out.write_text("report.txt", &format!("{report}\n"))?;
    if !report.a1_holds {
        return Err(fpp_core::Error::assumption(format!(
            "zero-weight mass {} is not below pc = {}",
            report.nu_zero, report.pc
        ))
        .into());
    }
    if !report.a2_holds {
        return Err(fpp_core::Error::assumption(format!(
            "moment of order {} diverges",
            report.alpha
        ))
        .into());
    }
    Ok(())
}
