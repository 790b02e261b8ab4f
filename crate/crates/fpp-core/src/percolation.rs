//! Bond percolation inputs: cluster censuses, crossing-probability
//! estimates of p_c, and oriented (directed) percolation on Z² with its
//! edge speed and flat-edge geometry.
//!
//! Randomness is one uniform per bond, derived from a seed and the bond's
//! coordinates.  Because the uniform does not depend on the parameter,
//! configurations at different p (or q) are coupled: the open set only
//! grows with the parameter, which turns distributional monotonicity into
//! an exact pathwise property that the tests assert directly.

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::rng::{derive_seed, unit_f64, KeyHash};
use crate::stats::{mean, sample_variance, t_ci_half, wilson_interval};
use crate::unionfind::UnionFind;

/// Replica-seed tags for the serial drivers; parallel runners must use
/// the same tags for identical output.
pub const CROSSING_TAG: &str = "perc.crossing";
pub const ORIENTED_TAG: &str = "perc.oriented";
pub const VEC_PC_TAG: &str = "perc.vecpc";

/// The critical probability where it is known exactly.
pub fn exact_pc(d: usize) -> Option<f64> {
    (d == 2).then_some(0.5)
}

/// One uniform in [0,1) per bond, independent of the percolation
/// parameter (the coupling device described in the module docs).
fn bond_uniform(seed: u64, site: &[i64], axis: usize) -> f64 {
    let mut h = KeyHash::new(seed);
    for &c in site {
        h.push_i64(c);
    }
    h.push(axis as u64);
    unit_f64(h.finish())
}

/// Open-cluster census of i.i.d. bond percolation on a centered box.
#[derive(Clone, Debug)]
pub struct ClusterCensus {
    pub p: f64,
    pub box_sites: usize,
    /// (cluster size, number of clusters of that size), size ascending.
    /// Isolated sites count as clusters of size 1, so sizes weighted by
    /// counts add up to `box_sites`.
    pub histogram: Vec<(u32, u32)>,
    pub max_size: u32,
}

pub fn bond_cluster_census(d: usize, box_radius: i64, p: f64, seed: u64) -> Result<ClusterCensus> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("bond probability must lie in [0,1], got {p}")));
    }
    let spec = LatticeSpec::cube(d, box_radius, &vec![0; d])?;
    let ix = spec.indexer();
    let mut uf = UnionFind::new(ix.len());
    let mut coords = vec![0i64; d];
    for idx in 0..ix.len() {
        ix.site_into(idx, &mut coords);
        for axis in 0..d {
            if let Some(up) = ix.neighbor(idx, axis, 1) {
                if bond_uniform(seed, &coords, axis) < p {
                    uf.union(idx, up);
                }
            }
        }
    }
    let mut size_of: Vec<u32> = vec![0; ix.len()];
    for idx in 0..ix.len() {
        size_of[uf.find(idx)] += 1;
    }
    let mut counts = std::collections::BTreeMap::new();
    let mut max_size = 0;
    for &s in &size_of {
        if s > 0 {
            *counts.entry(s).or_insert(0u32) += 1;
            max_size = max_size.max(s);
        }
    }
    Ok(ClusterCensus {
        p,
        box_sites: ix.len(),
        histogram: counts.into_iter().collect(),
        max_size,
    })
}

/// Is there an open left-right crossing (along axis 0) of the box?
pub fn crossing_indicator(d: usize, box_radius: i64, p: f64, seed: u64) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("bond probability must lie in [0,1], got {p}")));
    }
    let spec = LatticeSpec::cube(d, box_radius, &vec![0; d])?;
    let ix = spec.indexer();
    let n = ix.len();
    // Two ghost vertices collect the left and right faces.
    let (left, right) = (n, n + 1);
    let mut uf = UnionFind::new(n + 2);
    let mut coords = vec![0i64; d];
    for idx in 0..n {
        ix.site_into(idx, &mut coords);
        if coords[0] == spec.lo()[0] {
            uf.union(idx, left);
        }
        if coords[0] == spec.hi()[0] {
            uf.union(idx, right);
        }
        for axis in 0..d {
            if let Some(up) = ix.neighbor(idx, axis, 1) {
                if bond_uniform(seed, &coords, axis) < p {
                    uf.union(idx, up);
                }
            }
        }
    }
    Ok(uf.find(left) == uf.find(right))
}

/// Crossing-probability bisection estimate of p_c.
#[derive(Clone, Debug)]
pub struct PcEstimate {
    pub estimate: f64,
    /// Binomial uncertainty mapped through the local slope of the
    /// crossing probability.
    pub ci: (f64, f64),
    pub box_radius: i64,
    pub replicas: u64,
    /// Empirical crossing probability at the estimate.
    pub crossing_at_estimate: f64,
}

fn crossing_probability(
    d: usize,
    box_radius: i64,
    p: f64,
    replicas: u64,
    master_seed: u64,
) -> Result<f64> {
    let mut hits = 0u64;
    for r in 0..replicas {
        if crossing_indicator(d, box_radius, p, derive_seed(master_seed, CROSSING_TAG, r))? {
            hits += 1;
        }
    }
    Ok(hits as f64 / replicas as f64)
}

/// Bisect p until the box-crossing probability straddles 1/2.  The
/// endpoints p = 0 and p = 1 bracket the search (crossing probability 0
/// and 1 on boxes wider than one site).
pub fn estimate_pc(d: usize, box_radius: i64, replicas: u64, master_seed: u64) -> Result<PcEstimate> {
    if replicas == 0 {
        return Err(Error::domain("p_c estimate needs at least one replica".to_string()));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..12 {
        let mid = 0.5 * (lo + hi);
        if crossing_probability(d, box_radius, mid, replicas, master_seed)? > 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let estimate = 0.5 * (lo + hi);
    let at_estimate = crossing_probability(d, box_radius, estimate, replicas, master_seed)?;
    let hits = (at_estimate * replicas as f64).round() as u64;
    let (wl, wh) = wilson_interval(hits as usize, replicas as usize);
    // Local slope of p -> crossing probability, for mapping the binomial
    // interval onto the p axis.
    let window = 0.02;
    let p_lo = (estimate - window).max(0.0);
    let p_hi = (estimate + window).min(1.0);
    let slope = ((crossing_probability(d, box_radius, p_hi, replicas, master_seed)?
        - crossing_probability(d, box_radius, p_lo, replicas, master_seed)?)
        / (p_hi - p_lo))
        .max(1e-9);
    Ok(PcEstimate {
        estimate,
        ci: (
            (estimate - (at_estimate - wl) / slope).max(0.0),
            (estimate + (wh - at_estimate) / slope).min(1.0),
        ),
        box_radius,
        replicas,
        crossing_at_estimate: at_estimate,
    })
}

/// One oriented-percolation run on the rotated lattice: generations
/// t = 0, 1, 2, ..., site x at generation t reaches x − 1 and x + 1 at
/// generation t + 1 through bonds that are open independently with
/// probability q; the origin alone is occupied at t = 0.
#[derive(Clone, Debug)]
pub struct OrientedRun {
    pub q: f64,
    pub horizon: u32,
    /// Occupied at the horizon?
    pub survived: bool,
    /// Rightmost occupied coordinate per generation, recorded while the
    /// occupied set is nonempty (so index 0 holds generation 0's value 0).
    pub right_edge: Vec<i64>,
    /// right_edge(horizon) / horizon on survival, else None.
    pub speed_estimate: Option<f64>,
}

pub fn oriented_run(q: f64, horizon: u32, seed: u64) -> Result<OrientedRun> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("bond probability must lie in [0,1], got {q}")));
    }
    if horizon == 0 {
        return Err(Error::domain("horizon must be at least 1".to_string()));
    }
    let width = 2 * horizon as usize + 3;
    let center = horizon as i64 + 1;
    let mut occ = vec![false; width];
    let mut next = vec![false; width];
    occ[center as usize] = true;
    let mut right_edge = vec![0i64];
    let mut survived = true;
    for t in 0..horizon {
        next.fill(false);
        let mut rightmost: Option<i64> = None;
        // Generation t occupies only x with |x| <= t and x ≡ t (mod 2).
        let mut x = -(t as i64);
        while x <= t as i64 {
            if occ[(center + x) as usize] {
                for (dir, bit) in [(-1i64, 0u64), (1, 1)] {
                    let u = {
                        let mut h = KeyHash::new(seed);
                        h.push(u64::from(t));
                        h.push_i64(x);
                        h.push(bit);
                        unit_f64(h.finish())
                    };
                    if u < q {
                        let nx = x + dir;
                        if !next[(center + nx) as usize] {
                            next[(center + nx) as usize] = true;
                        }
                        rightmost = Some(rightmost.map_or(nx, |r: i64| r.max(nx)));
                    }
                }
            }
            x += 2;
        }
        match rightmost {
            Some(r) => right_edge.push(r),
            None => {
                survived = false;
                break;
            }
        }
        std::mem::swap(&mut occ, &mut next);
    }
    let speed_estimate = survived
        .then(|| *right_edge.last().expect("nonempty") as f64 / f64::from(horizon));
    Ok(OrientedRun { q, horizon, survived, right_edge, speed_estimate })
}

/// Aggregated edge-speed estimate over surviving replicas.
#[derive(Clone, Debug)]
pub struct OrientedSpeedEstimate {
    pub q: f64,
    pub horizon: u32,
    pub replicas: u64,
    pub survivors: u64,
    /// Fraction of replicas occupied at the horizon.
    pub survival: f64,
    /// Mean speed over survivors; None reports extinction.
    pub speed: Option<f64>,
    /// Student-t 95% interval for the mean speed, when estimable.
    pub ci: Option<(f64, f64)>,
}

/// Aggregate speeds of individual runs (None entries are extinct runs).
pub fn oriented_speed_from_runs(
    q: f64,
    horizon: u32,
    speeds: &[Option<f64>],
) -> OrientedSpeedEstimate {
    let replicas = speeds.len() as u64;
    let surviving: Vec<f64> = speeds.iter().flatten().copied().collect();
    let survivors = surviving.len() as u64;
    let (speed, ci) = if surviving.is_empty() {
        (None, None)
    } else {
        let m = mean(&surviving);
        let half = t_ci_half(sample_variance(&surviving).sqrt(), surviving.len());
        (Some(m), Some((m - half, m + half)))
    };
    OrientedSpeedEstimate {
        q,
        horizon,
        replicas,
        survivors,
        survival: survivors as f64 / replicas.max(1) as f64,
        speed,
        ci,
    }
}

pub fn oriented_speed(
    q: f64,
    horizon: u32,
    replicas: u64,
    master_seed: u64,
) -> Result<OrientedSpeedEstimate> {
    if replicas == 0 {
        return Err(Error::domain("speed estimate needs at least one replica".to_string()));
    }
    let mut speeds = Vec::with_capacity(replicas as usize);
    for r in 0..replicas {
        let run = oriented_run(q, horizon, derive_seed(master_seed, ORIENTED_TAG, r))?;
        speeds.push(run.speed_estimate);
    }
    Ok(oriented_speed_from_runs(q, horizon, &speeds))
}

/// The outward normal N_q = (1/2 + a/√2, 1/2 − a/√2) of the limit
/// shape's flat segment, and its angle with the x-axis.
#[derive(Clone, Debug)]
pub struct FlatEdgeGeometry {
    pub q: f64,
    pub alpha_q: f64,
    pub n_q: [f64; 2],
    /// atan2(N_q.y, N_q.x); 0 at alpha = 1/√2, π/4 at alpha = 0.
    pub theta_q: f64,
}

pub fn flat_edge_geometry(q: f64, alpha_q: f64) -> Result<FlatEdgeGeometry> {
    if !(0.0..=1.0).contains(&alpha_q) {
        return Err(Error::domain(format!("edge speed must lie in [0,1], got {alpha_q}")));
    }
    let shift = alpha_q / std::f64::consts::SQRT_2;
    let n_q = [0.5 + shift, 0.5 - shift];
    Ok(FlatEdgeGeometry { q, alpha_q, n_q, theta_q: n_q[1].atan2(n_q[0]) })
}

/// Survival-probability bisection estimate of the oriented critical
/// parameter, with a horizon-halving stability check: the estimate comes
/// from the full horizon, and `stable` records whether halving the
/// horizon would have moved it by less than the interval width.
#[derive(Clone, Debug)]
pub struct VecPcEstimate {
    pub estimate: f64,
    pub ci: (f64, f64),
    pub horizon: u32,
    pub replicas: u64,
    /// Bisection point at half the horizon (finite-horizon bias probe).
    pub half_horizon_estimate: f64,
    pub stable: bool,
    /// Empirical survival probability at the estimate.
    pub survival_at_estimate: f64,
}

fn survival_probability(q: f64, horizon: u32, replicas: u64, master_seed: u64) -> Result<f64> {
    let mut hits = 0u64;
    for r in 0..replicas {
        if oriented_run(q, horizon, derive_seed(master_seed, VEC_PC_TAG, r))?.survived {
            hits += 1;
        }
    }
    Ok(hits as f64 / replicas as f64)
}

fn bisect_survival(horizon: u32, replicas: u64, master_seed: u64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..12 {
        let mid = 0.5 * (lo + hi);
        if survival_probability(mid, horizon, replicas, master_seed)? > 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn estimate_vec_pc(horizon: u32, replicas: u64, master_seed: u64) -> Result<VecPcEstimate> {
    if replicas == 0 {
        return Err(Error::domain("critical-parameter estimate needs replicas".to_string()));
    }
    if horizon < 2 {
        return Err(Error::domain("horizon must be at least 2".to_string()));
    }
    let half_horizon_estimate = bisect_survival(horizon / 2, replicas, master_seed)?;
    let estimate = bisect_survival(horizon, replicas, master_seed)?;
    let at_estimate = survival_probability(estimate, horizon, replicas, master_seed)?;
    let hits = (at_estimate * replicas as f64).round() as u64;
    let (wl, wh) = wilson_interval(hits as usize, replicas as usize);
    let window = 0.02;
    let q_lo = (estimate - window).max(0.0);
    let q_hi = (estimate + window).min(1.0);
    let slope = ((survival_probability(q_hi, horizon, replicas, master_seed)?
        - survival_probability(q_lo, horizon, replicas, master_seed)?)
        / (q_hi - q_lo))
        .max(1e-9);
    let ci = (
        (estimate - (at_estimate - wl) / slope).max(0.0),
        (estimate + (wh - at_estimate) / slope).min(1.0),
    );
    Ok(VecPcEstimate {
        estimate,
        ci,
        horizon,
        replicas,
        half_horizon_estimate,
        stable: (estimate - half_horizon_estimate).abs() < (ci.1 - ci.0),
        survival_at_estimate: at_estimate,
    })
}
