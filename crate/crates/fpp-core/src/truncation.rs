//! Weight truncation: taming extreme edge weights without moving passage
//! times by much.
//!
//! Given a threshold `kappa` in (0,1), an edge is *bad* when its weight
//! falls below `kappa` and a site is *unhealthy* when at least one of its
//! incident edges exceeds `1/kappa`.  Bad sites cluster along lattice
//! adjacency; unhealthy sites cluster along star adjacency (all 3^d − 1
//! l-infinity neighbors, diagonals included).  The truncated weight
//! `sigma` keeps the original weight on moderate edges and on extreme
//! edges attached only to small clusters, and resets the weight to 1 on
//! edges attached to a cluster holding at least `n^delta` vertices.
//!
//! The Monte Carlo diagnostics at the bottom compare the plain and
//! truncated set-to-set times between the enlarged endpoint boxes around
//! `0` and `n*xi`: how often they disagree, how concentrated the
//! truncated time is, and how far apart the two means sit.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::field::{EdgeWeights, WeightField};
use crate::lattice::{BoxIndexer, EdgeId, LatticeSpec, Site};
use crate::passage::{check_unit_direction, passage_time_sets, BoxRegion};
use crate::rng::derive_seed;
use crate::stats::{mean, sample_variance, t_ci_half, wilson_interval};
use crate::unionfind::UnionFind;
use crate::weights::WeightDistribution;

/// Replica-seed tags used by the serial drivers below; parallel runners
/// must derive seeds with the same tags to reproduce them.
pub const COUPLING_TAG: &str = "trunc.coupling";
pub const CONCENTRATION_TAG: &str = "trunc.tail";
pub const GAP_TAG: &str = "trunc.gap";

/// A truncation threshold and the tail probabilities it induces.
#[derive(Clone, Debug)]
pub struct KappaChoice {
    pub kappa: f64,
    /// P(w < kappa).
    pub p_low: f64,
    /// P(w > 1/kappa).
    pub p_high: f64,
    /// pc − max(p_low, p_high); positive by construction.
    pub margin: f64,
}

/// Pick the threshold maximizing the subcriticality margin
/// pc − max(P(w < kappa), P(w > 1/kappa)) over a log-spaced grid of 10^4
/// candidates in (0,1).  Ties go to the larger kappa, which shrinks the
/// enlarged endpoint boxes downstream.
pub fn choose_kappa(dist: &WeightDistribution, pc_value: f64) -> Result<KappaChoice> {
    if !(pc_value > 0.0 && pc_value <= 1.0) {
        return Err(Error::domain(format!(
            "critical probability must lie in (0,1], got {pc_value}"
        )));
    }
    const GRID: u32 = 10_000;
    let mut best: Option<KappaChoice> = None;
    for i in 0..GRID {
        // 10^-6 up to just below 1, log-spaced.
        let kappa = 10f64.powf(-6.0 * f64::from(GRID - i) / f64::from(GRID));
        let p_low = dist.prob_lt(kappa);
        let p_high = dist.prob_gt(1.0 / kappa);
        let margin = pc_value - p_low.max(p_high);
        // >= so later (larger) candidates win ties.
        if best.as_ref().is_none_or(|b| margin >= b.margin) {
            best = Some(KappaChoice { kappa, p_low, p_high, margin });
        }
    }
    let best = best.expect("grid is nonempty");
    if best.margin <= 0.0 {
        let side = if best.p_low >= pc_value && best.p_high >= pc_value {
            "both P(w < kappa) and P(w > 1/kappa) stay"
        } else if best.p_low >= pc_value {
            "the low tail P(w < kappa) stays"
        } else {
            "the high tail P(w > 1/kappa) stays"
        };
        return Err(Error::assumption(format!(
            "no kappa in (0,1) gives subcritical extreme-weight probabilities: {side} at or \
             above pc = {pc_value} (best candidate kappa = {:.6e}: P(w < kappa) = {:.6}, \
             P(w > 1/kappa) = {:.6})",
            best.kappa, best.p_low, best.p_high
        )));
    }
    Ok(best)
}

/// Per-edge badness and per-site unhealthiness at a fixed threshold.
#[derive(Clone, Debug)]
pub struct Classification {
    indexer: BoxIndexer,
    /// Slot `site_index * d + axis`, lower endpoint canonical.
    bad_edge: Vec<bool>,
    unhealthy_site: Vec<bool>,
    pub bad_edge_count: usize,
    pub unhealthy_site_count: usize,
}

impl Classification {
    /// Is the edge's weight strictly below kappa?
    pub fn is_bad(&self, edge: &EdgeId) -> bool {
        let d = self.indexer.d();
        match self.indexer.index(&edge.site) {
            Some(idx) if edge.axis < d => self.bad_edge[idx * d + edge.axis],
            _ => false,
        }
    }

    /// Does the site have an incident edge strictly above 1/kappa?
    pub fn is_unhealthy(&self, site: &[i64]) -> bool {
        self.indexer
            .index(site)
            .map(|idx| self.unhealthy_site[idx])
            .unwrap_or(false)
    }
}

/// Classify every edge and site of the field at threshold `kappa`.
pub fn classify<W: EdgeWeights>(field: &W, kappa: f64) -> Result<Classification> {
    if !(0.0 < kappa && kappa < 1.0) {
        return Err(Error::domain(format!("kappa must lie in (0,1), got {kappa}")));
    }
    let kappa_inv = 1.0 / kappa;
    let ix = field.spec().indexer();
    let d = ix.d();
    let mut bad_edge = vec![false; ix.len() * d];
    let mut unhealthy_site = vec![false; ix.len()];
    let mut bad_edge_count = 0;
    let mut unhealthy_site_count = 0;
    let mut coords = vec![0i64; d];
    for idx in 0..ix.len() {
        ix.site_into(idx, &mut coords);
        for axis in 0..d {
            let Some(up) = ix.neighbor(idx, axis, 1) else {
                continue;
            };
            let w = field.weight_at(&coords, axis);
            if w < kappa {
                bad_edge[idx * d + axis] = true;
                bad_edge_count += 1;
            } else if w > kappa_inv {
                for endpoint in [idx, up] {
                    if !unhealthy_site[endpoint] {
                        unhealthy_site[endpoint] = true;
                        unhealthy_site_count += 1;
                    }
                }
            }
        }
    }
    Ok(Classification {
        indexer: ix,
        bad_edge,
        unhealthy_site,
        bad_edge_count,
        unhealthy_site_count,
    })
}

/// Sentinel for "site belongs to no cluster".
pub const NO_CLUSTER: u32 = u32::MAX;

/// Connected components of the bad subgraph (lattice adjacency) and of
/// the unhealthy site set (star adjacency), with dense deterministic ids:
/// clusters are numbered by their lexicographically smallest member.
#[derive(Clone, Debug)]
pub struct ClusterLabeling {
    classification: Classification,
    bad_site_label: Vec<u32>,
    unhealthy_site_label: Vec<u32>,
    /// Vertex count per bad cluster id.
    pub bad_cluster_sizes: Vec<u32>,
    /// Vertex count per unhealthy cluster id.
    pub unhealthy_cluster_sizes: Vec<u32>,
}

impl ClusterLabeling {
    pub fn classification(&self) -> &Classification {
        &self.classification
    }

    pub fn bad_cluster_count(&self) -> usize {
        self.bad_cluster_sizes.len()
    }

    pub fn unhealthy_cluster_count(&self) -> usize {
        self.unhealthy_cluster_sizes.len()
    }

    /// Bad cluster containing the site, if any: sites enter bad clusters
    /// only through an incident bad edge.
    pub fn bad_site_label(&self, site: &[i64]) -> Option<u32> {
        let idx = self.classification.indexer.index(site)?;
        let l = self.bad_site_label[idx];
        (l != NO_CLUSTER).then_some(l)
    }

    /// Bad cluster containing the edge; None when the edge is not bad.
    /// Both endpoints of a bad edge share one cluster (the edge itself
    /// connects them).
    pub fn bad_edge_label(&self, edge: &EdgeId) -> Option<u32> {
        self.classification
            .is_bad(edge)
            .then(|| self.bad_site_label(&edge.site))
            .flatten()
    }

    /// Unhealthy cluster containing the site, if the site is unhealthy.
    pub fn unhealthy_site_label(&self, site: &[i64]) -> Option<u32> {
        let idx = self.classification.indexer.index(site)?;
        let l = self.unhealthy_site_label[idx];
        (l != NO_CLUSTER).then_some(l)
    }
}

/// Label components of `member` sites under star adjacency (all 3^d − 1
/// l-infinity neighbors).  Returns per-site labels and per-id sizes.
fn label_star_components(ix: &BoxIndexer, member: &[bool]) -> (Vec<u32>, Vec<u32>) {
    let d = ix.d();
    // Half of the nonzero offsets in {-1,0,1}^d (first nonzero component
    // +1), so each unordered pair is visited once.
    let mut offsets: Vec<Vec<i64>> = Vec::new();
    let mut off = vec![-1i64; d];
    'enumerate: loop {
        if off.iter().find(|&&c| c != 0).copied().unwrap_or(0) == 1 {
            offsets.push(off.clone());
        }
        for a in (0..d).rev() {
            if off[a] < 1 {
                off[a] += 1;
                continue 'enumerate;
            }
            off[a] = -1;
        }
        break;
    }
    let mut uf = UnionFind::new(ix.len());
    let mut coords = vec![0i64; d];
    let mut nb = vec![0i64; d];
    for idx in 0..ix.len() {
        if !member[idx] {
            continue;
        }
        ix.site_into(idx, &mut coords);
        for off in &offsets {
            for a in 0..d {
                nb[a] = coords[a] + off[a];
            }
            if let Some(j) = ix.index(&nb) {
                if member[j] {
                    uf.union(idx, j);
                }
            }
        }
    }
    assign_labels(ix.len(), member, &mut uf)
}

/// Dense ids in order of first (lexicographically smallest) member.
fn assign_labels(len: usize, member: &[bool], uf: &mut UnionFind) -> (Vec<u32>, Vec<u32>) {
    let mut labels = vec![NO_CLUSTER; len];
    let mut root_label = vec![NO_CLUSTER; len];
    let mut sizes: Vec<u32> = Vec::new();
    for idx in 0..len {
        if !member[idx] {
            continue;
        }
        let root = uf.find(idx);
        if root_label[root] == NO_CLUSTER {
            root_label[root] = sizes.len() as u32;
            sizes.push(0);
        }
        labels[idx] = root_label[root];
        sizes[labels[idx] as usize] += 1;
    }
    (labels, sizes)
}

/// Compute both cluster labelings of the field at threshold `kappa`.
pub fn label_clusters<W: EdgeWeights>(field: &W, kappa: f64) -> Result<ClusterLabeling> {
    let classification = classify(field, kappa)?;
    let ix = &classification.indexer;
    let d = ix.d();
    // Bad clusters: lattice adjacency through bad edges; membership means
    // having at least one incident bad edge.
    let mut uf = UnionFind::new(ix.len());
    let mut bad_member = vec![false; ix.len()];
    for idx in 0..ix.len() {
        for axis in 0..d {
            if classification.bad_edge[idx * d + axis] {
                let up = ix
                    .neighbor(idx, axis, 1)
                    .expect("bad edge endpoints are in the box");
                uf.union(idx, up);
                bad_member[idx] = true;
                bad_member[up] = true;
            }
        }
    }
    let (bad_site_label, bad_cluster_sizes) = assign_labels(ix.len(), &bad_member, &mut uf);
    let (unhealthy_site_label, unhealthy_cluster_sizes) =
        label_star_components(ix, &classification.unhealthy_site);
    Ok(ClusterLabeling {
        classification,
        bad_site_label,
        unhealthy_site_label,
        bad_cluster_sizes,
        unhealthy_cluster_sizes,
    })
}

/// A weight field with truncated weights `sigma`:
///
/// * moderate edges (kappa <= w <= 1/kappa) keep their weight;
/// * a bad edge keeps its weight when its bad cluster holds fewer than
///   `n^delta` vertices, and is reset to 1 otherwise;
/// * a heavy edge keeps its weight when its unhealthy cluster holds fewer
///   than `n^delta` vertices, and is reset to 1 otherwise.
///
/// One endpoint decides: both endpoints of a bad edge share a bad
/// cluster, and both endpoints of a heavy edge are star-adjacent
/// unhealthy sites sharing an unhealthy cluster.
#[derive(Clone)]
pub struct TruncatedField {
    base: WeightField,
    indexer: BoxIndexer,
    kappa: f64,
    kappa_inv: f64,
    n: i64,
    delta: f64,
    threshold: f64,
    /// Per site: member of a bad cluster with >= threshold vertices.
    big_bad: Vec<bool>,
    /// Per site: member of an unhealthy cluster with >= threshold vertices.
    big_unhealthy: Vec<bool>,
    all_small: bool,
}

/// Build the truncated companion of `base` at scale `n`.
pub fn truncate(base: WeightField, kappa: f64, n: i64, delta: f64) -> Result<TruncatedField> {
    let d = base.spec().d();
    if n < 1 {
        return Err(Error::domain(format!("scale must be >= 1, got {n}")));
    }
    if !(0.0 < delta && delta < 1.0 / d as f64) {
        return Err(Error::domain(format!("delta must lie in (0, 1/{d}), got {delta}")));
    }
    let labeling = label_clusters(&base, kappa)?;
    let threshold = (n as f64).powf(delta);
    let big = |labels: &[u32], sizes: &[u32]| -> Vec<bool> {
        labels
            .iter()
            .map(|&l| l != NO_CLUSTER && f64::from(sizes[l as usize]) >= threshold)
            .collect()
    };
    let big_bad = big(&labeling.bad_site_label, &labeling.bad_cluster_sizes);
    let big_unhealthy = big(&labeling.unhealthy_site_label, &labeling.unhealthy_cluster_sizes);
    let all_small = !big_bad.iter().chain(big_unhealthy.iter()).any(|&b| b);
    let indexer = base.spec().indexer();
    Ok(TruncatedField {
        base,
        indexer,
        kappa,
        kappa_inv: 1.0 / kappa,
        n,
        delta,
        threshold,
        big_bad,
        big_unhealthy,
        all_small,
    })
}

impl TruncatedField {
    pub fn base(&self) -> &WeightField {
        &self.base
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The cluster-size cutoff n^delta.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// True when every bad and unhealthy cluster is below the cutoff; the
    /// truncated weights then equal the plain weights identically.
    pub fn all_clusters_small(&self) -> bool {
        self.all_small
    }

    /// Checked truncated weight of an edge.
    pub fn sigma(&self, edge: &EdgeId) -> Result<f64> {
        self.base.weight(edge)?;
        Ok(self.weight_at(&edge.site, edge.axis))
    }
}

impl EdgeWeights for TruncatedField {
    fn spec(&self) -> &LatticeSpec {
        self.base.spec()
    }

    fn weight_at(&self, lower: &[i64], axis: usize) -> f64 {
        let w = self.base.weight_at(lower, axis);
        if self.kappa <= w && w <= self.kappa_inv {
            return w;
        }
        let Some(idx) = self.indexer.index(lower) else {
            debug_assert!(false, "edge outside the box");
            return w;
        };
        let flags = if w < self.kappa { &self.big_bad } else { &self.big_unhealthy };
        #[cfg(debug_assertions)]
        if let Some(up) = self.indexer.neighbor(idx, axis, 1) {
            debug_assert_eq!(
                flags[idx], flags[up],
                "endpoints of an extreme edge must share their cluster"
            );
        }
        if flags[idx] {
            1.0
        } else {
            w
        }
    }
}

/// Do two passage times disagree beyond 1e-9 relative?
pub fn times_differ(a: f64, b: f64) -> bool {
    (a - b).abs() > 1e-9 * a.abs().max(b.abs())
}

/// Plain and truncated set-to-set times for one sampled field.
#[derive(Clone, Copy, Debug)]
pub struct SetTimePair {
    pub plain: f64,
    pub truncated: f64,
}

struct ReplicaSetup {
    field: WeightField,
    a: Vec<Site>,
    b: Vec<Site>,
    /// The two endpoint regions share a site, so both set-to-set times
    /// are zero with no search needed.
    overlap: bool,
}

fn replica_setup(
    dist: &WeightDistribution,
    xi: &[f64],
    n: i64,
    delta: f64,
    kappa: f64,
    seed: u64,
) -> Result<ReplicaSetup> {
    check_unit_direction(xi)?;
    let spec = LatticeSpec::covering_segment(n, xi)?;
    let d = spec.d();
    let near = BoxRegion::new(vec![0.0; d], n, delta, kappa)?;
    let far = BoxRegion::new(xi.iter().map(|&c| c * n as f64).collect(), n, delta, kappa)?;
    let a = near.sites_within(&spec);
    let b = far.sites_within(&spec);
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain(
            "endpoint region does not intersect the sampling box".to_string(),
        ));
    }
    let a_set: HashSet<&Site> = a.iter().collect();
    let overlap = b.iter().any(|s| a_set.contains(s));
    let field = WeightField::sample(spec, dist.clone(), seed);
    Ok(ReplicaSetup { field, a, b, overlap })
}

/// One replica of the coupling/gap experiments: sample a field, compute
/// the set-to-set time between the enlarged endpoint boxes under the
/// plain and the truncated weights.
pub fn set_time_pair_replica(
    dist: &WeightDistribution,
    xi: &[f64],
    n: i64,
    delta: f64,
    kappa: f64,
    seed: u64,
) -> Result<SetTimePair> {
    let setup = replica_setup(dist, xi, n, delta, kappa, seed)?;
    if setup.overlap {
        return Ok(SetTimePair { plain: 0.0, truncated: 0.0 });
    }
    let plain = passage_time_sets(&setup.field, &setup.a, &setup.b)?.time;
    let truncated_field = truncate(setup.field, kappa, n, delta)?;
    let truncated = passage_time_sets(&truncated_field, &setup.a, &setup.b)?.time;
    Ok(SetTimePair { plain, truncated })
}

/// One replica of the concentration experiment: only the truncated time.
pub fn truncated_set_time_replica(
    dist: &WeightDistribution,
    xi: &[f64],
    n: i64,
    delta: f64,
    kappa: f64,
    seed: u64,
) -> Result<f64> {
    let setup = replica_setup(dist, xi, n, delta, kappa, seed)?;
    if setup.overlap {
        return Ok(0.0);
    }
    let truncated_field = truncate(setup.field, kappa, n, delta)?;
    Ok(passage_time_sets(&truncated_field, &setup.a, &setup.b)?.time)
}

/// Monte Carlo estimate of P(plain and truncated set-to-set times differ).
#[derive(Clone, Debug)]
pub struct CouplingEstimate {
    pub choice: KappaChoice,
    pub n: i64,
    pub delta: f64,
    pub replicas: u64,
    pub differing: u64,
    pub p_neq: f64,
    /// Wilson 95% interval.
    pub ci: (f64, f64),
}

/// Aggregate per-replica disagreement flags.
pub fn coupling_from_flags(
    choice: KappaChoice,
    n: i64,
    delta: f64,
    flags: &[bool],
) -> CouplingEstimate {
    let replicas = flags.len() as u64;
    let differing = flags.iter().filter(|&&f| f).count() as u64;
    CouplingEstimate {
        choice,
        n,
        delta,
        replicas,
        differing,
        p_neq: differing as f64 / replicas.max(1) as f64,
        ci: wilson_interval(differing as usize, replicas as usize),
    }
}

/// Estimate P(plain != truncated set-to-set time) at scale `n`, choosing
/// kappa by maximal margin against `pc_value`.
pub fn coupling_probability(
    dist: &WeightDistribution,
    xi: &[f64],
    n: i64,
    delta: f64,
    replicas: u64,
    master_seed: u64,
    pc_value: f64,
) -> Result<CouplingEstimate> {
    if replicas == 0 {
        return Err(Error::domain("coupling estimate needs at least one replica".to_string()));
    }
    let choice = choose_kappa(dist, pc_value)?;
    let mut flags = Vec::with_capacity(replicas as usize);
    for r in 0..replicas {
        let seed = derive_seed(master_seed, COUPLING_TAG, r);
        let pair = set_time_pair_replica(dist, xi, n, delta, choice.kappa, seed)?;
        flags.push(times_differ(pair.plain, pair.truncated));
    }
    Ok(coupling_from_flags(choice, n, delta, &flags))
}

/// Empirical upper tail of the truncated set-to-set time, normalized by
/// n^{1/2 + 3 delta}.
#[derive(Clone, Debug)]
pub struct ConcentrationScan {
    pub choice: KappaChoice,
    pub n: i64,
    pub delta: f64,
    pub replicas: u64,
    /// The deviation scale n^{1/2 + 3 delta}.
    pub scale: f64,
    /// Replica mean of the truncated time.
    pub mean: f64,
    /// Pairs (u, tail): fraction of replicas with value − mean strictly
    /// above u * scale.  At u = 0 this sits near 1/2 for a continuous
    /// statistic (deviations are positive about half the time).
    pub points: Vec<(f64, f64)>,
}

/// Aggregate raw replica values into the tail scan.
pub fn concentration_from_values(
    choice: KappaChoice,
    n: i64,
    delta: f64,
    u_grid: &[f64],
    values: &[f64],
) -> ConcentrationScan {
    let scale = (n as f64).powf(0.5 + 3.0 * delta);
    let m = mean(values);
    let points = u_grid
        .iter()
        .map(|&u| {
            let count = values.iter().filter(|&&v| v - m > u * scale).count();
            (u, count as f64 / values.len().max(1) as f64)
        })
        .collect();
    ConcentrationScan {
        choice,
        n,
        delta,
        replicas: values.len() as u64,
        scale,
        mean: m,
        points,
    }
}

/// Scan the deviation tail of the truncated set-to-set time over `u_grid`.
#[allow(clippy::too_many_arguments)] // experiment entry point: the full parameter set is the interface
pub fn concentration_scan(
    dist: &WeightDistribution,
    xi: &[f64],
    n: i64,
    delta: f64,
    u_grid: &[f64],
    replicas: u64,
    master_seed: u64,
    pc_value: f64,
) -> Result<ConcentrationScan> {
    if replicas == 0 {
        return Err(Error::domain("tail scan needs at least one replica".to_string()));
    }
    if u_grid.is_empty() || u_grid.iter().any(|u| !u.is_finite() || *u < 0.0) {
        return Err(Error::domain("u grid must be nonempty with finite u >= 0".to_string()));
    }
    let choice = choose_kappa(dist, pc_value)?;
    let mut values = Vec::with_capacity(replicas as usize);
    for r in 0..replicas {
        let seed = derive_seed(master_seed, CONCENTRATION_TAG, r);
        values.push(truncated_set_time_replica(dist, xi, n, delta, choice.kappa, seed)?);
    }
    Ok(concentration_from_values(choice, n, delta, u_grid, &values))
}

/// Paired estimate of |E plain − E truncated| for the set-to-set times.
#[derive(Clone, Debug)]
pub struct GapEstimate {
    pub choice: KappaChoice,
    pub n: i64,
    pub delta: f64,
    pub replicas: u64,
    pub mean_plain: f64,
    pub mean_truncated: f64,
    /// |mean of paired differences|.
    pub gap: f64,
    /// Student-t 95% half-width of the paired-difference mean.
    pub ci_half: f64,
    /// Mean of |difference|; an upper bound for the gap.
    pub mean_abs_diff: f64,
}

/// Aggregate paired replica times.
pub fn gap_from_pairs(choice: KappaChoice, n: i64, delta: f64, pairs: &[SetTimePair]) -> GapEstimate {
    let diffs: Vec<f64> = pairs.iter().map(|p| p.plain - p.truncated).collect();
    let sd = sample_variance(&diffs).sqrt();
    GapEstimate {
        choice,
        n,
        delta,
        replicas: pairs.len() as u64,
        mean_plain: mean(&pairs.iter().map(|p| p.plain).collect::<Vec<_>>()),
        mean_truncated: mean(&pairs.iter().map(|p| p.truncated).collect::<Vec<_>>()),
        gap: mean(&diffs).abs(),
        ci_half: t_ci_half(sd, pairs.len()),
        mean_abs_diff: mean(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>()),
    }
}

/// Estimate the expectation gap with a paired design: each replica field
/// supplies both the plain and the truncated time.
pub fn expectation_gap(
    dist: &WeightDistribution,
    xi: &[f64],
    n: i64,
    delta: f64,
    replicas: u64,
    master_seed: u64,
    pc_value: f64,
) -> Result<GapEstimate> {
    if replicas == 0 {
        return Err(Error::domain("gap estimate needs at least one replica".to_string()));
    }
    let choice = choose_kappa(dist, pc_value)?;
    let mut pairs = Vec::with_capacity(replicas as usize);
    for r in 0..replicas {
        let seed = derive_seed(master_seed, GAP_TAG, r);
        pairs.push(set_time_pair_replica(dist, xi, n, delta, choice.kappa, seed)?);
    }
    Ok(gap_from_pairs(choice, n, delta, &pairs))
}
