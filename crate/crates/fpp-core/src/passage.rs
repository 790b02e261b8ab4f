//! First passage times: exact nonnegative-weight shortest paths on a box.
//!
//! The search is a binary-heap Dijkstra with exact floating-point
//! comparisons — no epsilons in relaxation.  Determinism is pinned down
//! twice over: vertices with equal tentative time settle in lexicographic
//! site order, and among equal-time predecessors of a vertex the
//! lexicographically smallest one wins.  Point-to-point searches always
//! run from the lexicographically smaller endpoint, which makes
//! `T(x, y) = T(y, x)` hold bit-for-bit even though float sums depend on
//! accumulation order.
//!
//! Set-to-set times use one multi-source search (virtual super-source)
//! with early exit on the first settled target.

use std::collections::BinaryHeap;
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::field::EdgeWeights;
use crate::lattice::{round_to_lattice, BoxIndexer, LatticeSpec, Site};

/// Result of a passage-time computation.
#[derive(Clone, Debug)]
pub struct PassageResult {
    /// The first passage time.
    pub time: f64,
    /// One optimal geodesic from source to destination, when requested.
    /// Empty for a zero-length query.
    pub geodesic: Option<Vec<Site>>,
    /// Did the geodesic (or the settled set, when no path was requested)
    /// touch the box boundary?  When true, the finite box may have biased
    /// the time upward relative to the full lattice.
    pub touched_boundary: bool,
    /// Number of vertices settled by the search (performance telemetry).
    pub relaxed_vertices: usize,
}

struct HeapItem {
    time: f64,
    idx: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.idx == other.idx
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed, so BinaryHeap pops the smallest time; ties settle the
        // lexicographically smallest site (row-major index order) first.
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

enum TargetSet<'a> {
    Single(usize),
    Any(&'a [bool]),
    /// Stop only after every flagged vertex has settled.
    AllOf(&'a [bool]),
}

struct SearchOutcome {
    time: f64,
    target: usize,
    /// Settled-vertex count.
    settled: usize,
    /// Did any settled vertex lie on the box boundary?
    settled_touched_boundary: bool,
    /// Predecessor indices (sources carry the sentinel).
    pred: Vec<u32>,
    /// Final tentative times; exact for every settled vertex.
    dist: Vec<f64>,
}

const NO_PRED: u32 = u32::MAX;

fn dijkstra<W: EdgeWeights>(
    weights: &W,
    ix: &BoxIndexer,
    sources: &[usize],
    target: TargetSet<'_>,
) -> Result<SearchOutcome> {
    let d = ix.d();
    let n = ix.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NO_PRED; n];
    let mut settled = vec![false; n];
    let mut is_source = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if dist[s] != 0.0 {
            dist[s] = 0.0;
            is_source[s] = true;
            heap.push(HeapItem { time: 0.0, idx: s });
        }
    }
    let mut coords = vec![0i64; d];
    let mut settled_count = 0usize;
    let mut touched = false;
    let mut remaining = match &target {
        TargetSet::AllOf(flags) => flags.iter().filter(|&&b| b).count(),
        _ => usize::MAX,
    };
    while let Some(HeapItem { time, idx }) = heap.pop() {
        if settled[idx] {
            continue;
        }
        settled[idx] = true;
        settled_count += 1;
        if ix.on_boundary(idx) {
            touched = true;
        }
        let done = match &target {
            TargetSet::Single(t) => *t == idx,
            TargetSet::Any(flags) => flags[idx],
            TargetSet::AllOf(flags) => {
                if flags[idx] {
                    remaining -= 1;
                }
                remaining == 0
            }
        };
        if done {
            return Ok(SearchOutcome {
                time,
                target: idx,
                settled: settled_count,
                settled_touched_boundary: touched,
                pred,
                dist,
            });
        }
        ix.site_into(idx, &mut coords);
        for axis in 0..d {
            for dir in [1i64, -1] {
                let Some(nb) = ix.neighbor(idx, axis, dir) else {
                    continue;
                };
                if settled[nb] {
                    continue;
                }
                // Canonical edge id: the endpoint with the smaller
                // coordinate along `axis`.
                let w = if dir == 1 {
                    weights.weight_at(&coords, axis)
                } else {
                    coords[axis] -= 1;
                    let w = weights.weight_at(&coords, axis);
                    coords[axis] += 1;
                    w
                };
                debug_assert!(w >= 0.0 && w.is_finite(), "edge weight {w} invalid");
                let nd = time + w;
                if nd < dist[nb] {
                    dist[nb] = nd;
                    pred[nb] = idx as u32;
                    heap.push(HeapItem { time: nd, idx: nb });
                } else if nd == dist[nb] && !is_source[nb] && (idx as u32) < pred[nb] {
                    // Equal-time relaxation: keep the lexicographically
                    // smallest predecessor.  Only before nb settles, so
                    // predecessor chains follow the settle order and stay
                    // acyclic even across zero-weight edges.
                    pred[nb] = idx as u32;
                }
            }
        }
    }
    // A box is a product of intervals, hence connected: with finite
    // weights every target is reachable.  Reaching this line means the
    // target flags were empty or inconsistent.
    Err(Error::domain("no target vertex reachable in the box".to_string()))
}

fn reconstruct_path(ix: &BoxIndexer, outcome: &SearchOutcome, is_source: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut chain = vec![outcome.target];
    let mut cur = outcome.target;
    while !is_source(cur) {
        let p = outcome.pred[cur];
        debug_assert!(p != NO_PRED, "broken predecessor chain");
        cur = p as usize;
        chain.push(cur);
    }
    chain.reverse();
    debug_assert!(chain.len() <= ix.len());
    chain
}

/// First passage time T(src, dst); with `want_path`, also one optimal
/// geodesic (deterministic lexicographic tie-break).
///
/// The search internally runs from the lexicographically smaller endpoint;
/// since edges are undirected this leaves the time unchanged and makes
/// T(x, y) and T(y, x) identical down to the last bit.
pub fn passage_time<W: EdgeWeights>(
    weights: &W,
    src: &[i64],
    dst: &[i64],
    want_path: bool,
) -> Result<PassageResult> {
    let spec = weights.spec();
    let ix = spec.indexer();
    let s = ix
        .index(src)
        .ok_or_else(|| Error::domain(format!("source {src:?} outside box")))?;
    let t = ix
        .index(dst)
        .ok_or_else(|| Error::domain(format!("destination {dst:?} outside box")))?;
    if s == t {
        return Ok(PassageResult {
            time: 0.0,
            geodesic: want_path.then(Vec::new),
            touched_boundary: false,
            relaxed_vertices: 0,
        });
    }
    // Canonical direction: smaller index first (= lexicographically
    // smaller site).
    let (from, to, swapped) = if s <= t { (s, t, false) } else { (t, s, true) };
    let outcome = dijkstra(weights, &ix, &[from], TargetSet::Single(to))?;
    let (geodesic, touched) = if want_path {
        let chain = reconstruct_path(&ix, &outcome, |v| v == from);
        let touched = chain.iter().any(|&v| ix.on_boundary(v));
        let mut sites: Vec<Site> = chain.iter().map(|&v| ix.site(v)).collect();
        if swapped {
            sites.reverse();
        }
        (Some(sites), touched)
    } else {
        (None, outcome.settled_touched_boundary)
    };
    Ok(PassageResult {
        time: outcome.time,
        geodesic,
        touched_boundary: touched,
        relaxed_vertices: outcome.settled,
    })
}

/// Set-to-set first passage time T(A, B) = min over a in A, b in B of
/// T(a, b), via one multi-source search with early exit on the first
/// settled B vertex.
pub fn passage_time_sets<W: EdgeWeights>(
    weights: &W,
    a: &[Site],
    b: &[Site],
) -> Result<PassageResult> {
    let spec = weights.spec();
    let ix = spec.indexer();
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("set-to-set passage time needs nonempty sets".to_string()));
    }
    let index_all = |sites: &[Site], name: &str| -> Result<Vec<usize>> {
        sites
            .iter()
            .map(|s| {
                ix.index(s)
                    .ok_or_else(|| Error::domain(format!("{name} site {s:?} outside box")))
            })
            .collect()
    };
    let mut sources = index_all(a, "A")?;
    sources.sort_unstable();
    sources.dedup();
    let mut b_flags = vec![false; ix.len()];
    for idx in index_all(b, "B")? {
        b_flags[idx] = true;
    }
    if sources.iter().any(|&s| b_flags[s]) {
        return Ok(PassageResult {
            time: 0.0,
            geodesic: None,
            touched_boundary: false,
            relaxed_vertices: 0,
        });
    }
    let outcome = dijkstra(weights, &ix, &sources, TargetSet::Any(&b_flags))?;
    Ok(PassageResult {
        time: outcome.time,
        geodesic: None,
        touched_boundary: outcome.settled_touched_boundary,
        relaxed_vertices: outcome.settled,
    })
}

/// Passage times from one source to every listed target, computed by a
/// single search that stops once the last target settles.  Much cheaper
/// than one point-to-point search per target when the targets share a
/// neighborhood.  Times come back in input order; duplicates are fine.
pub fn times_from_source<W: EdgeWeights>(
    weights: &W,
    src: &[i64],
    targets: &[Site],
) -> Result<Vec<f64>> {
    let spec = weights.spec();
    let ix = spec.indexer();
    let s = ix
        .index(src)
        .ok_or_else(|| Error::domain(format!("source {src:?} outside box")))?;
    if targets.is_empty() {
        return Err(Error::domain("need at least one target".to_string()));
    }
    let mut flags = vec![false; ix.len()];
    let mut idxs = Vec::with_capacity(targets.len());
    for t in targets {
        let i = ix
            .index(t)
            .ok_or_else(|| Error::domain(format!("target {t:?} outside box")))?;
        flags[i] = true;
        idxs.push(i);
    }
    let outcome = dijkstra(weights, &ix, &[s], TargetSet::AllOf(&flags))?;
    Ok(idxs.into_iter().map(|i| outcome.dist[i]).collect())
}

/// Directional passage time a_{0,n}(xi) = T([0], [n xi]), both endpoints
/// rounded to the lattice.  `xi` must be an l2-unit vector.
pub fn directional_passage<W: EdgeWeights>(
    weights: &W,
    xi: &[f64],
    n: i64,
    want_path: bool,
) -> Result<PassageResult> {
    check_unit_direction(xi)?;
    if n < 0 {
        return Err(Error::domain(format!("scale must be >= 0, got {n}")));
    }
    let src = vec![0i64; xi.len()];
    let dst = round_to_lattice(&xi.iter().map(|&c| c * n as f64).collect::<Vec<_>>());
    passage_time(weights, &src, &dst, want_path)
}

/// Validate that `xi` is an l2-unit vector to within 1e-12.
pub fn check_unit_direction(xi: &[f64]) -> Result<()> {
    let norm = xi.iter().map(|&c| c * c).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!(
            "direction must be an l2-unit vector, |xi| = {norm}"
        )));
    }
    Ok(())
}

/// The enlarged endpoint box around `center`: all lattice sites within
/// l-infinity distance `3^d / kappa * n^delta` of the (real) center.
#[derive(Clone, Debug)]
pub struct BoxRegion {
    pub center: Vec<f64>,
    pub n: i64,
    pub delta: f64,
    pub kappa: f64,
    /// Exact real half-width 3^d kappa^{-1} n^delta.
    pub half_width: f64,
}

impl BoxRegion {
    pub fn new(center: Vec<f64>, n: i64, delta: f64, kappa: f64) -> Result<Self> {
        let d = center.len();
        if d < 2 {
            return Err(Error::domain(format!("dimension must be >= 2, got {d}")));
        }
        if n < 1 {
            return Err(Error::domain(format!("region scale must be >= 1, got {n}")));
        }
        if !(0.0 < kappa && kappa < 1.0) {
            return Err(Error::domain(format!("kappa must lie in (0,1), got {kappa}")));
        }
        if !(0.0 < delta && delta < 1.0 / d as f64) {
            return Err(Error::domain(format!(
                "delta must lie in (0, 1/{d}), got {delta}"
            )));
        }
        let half_width = 3f64.powi(d as i32) / kappa * (n as f64).powf(delta);
        Ok(BoxRegion { center, n, delta, kappa, half_width })
    }

    /// Membership by l-infinity distance from the real center.
    pub fn contains(&self, site: &[i64]) -> bool {
        site.len() == self.center.len()
            && site
                .iter()
                .zip(&self.center)
                .all(|(&x, &c)| (x as f64 - c).abs() <= self.half_width)
    }

    /// All sites of the region that also lie in `spec`'s box.
    pub fn sites_within(&self, spec: &LatticeSpec) -> Vec<Site> {
        let d = self.center.len();
        let mut lo = Vec::with_capacity(d);
        let mut hi = Vec::with_capacity(d);
        for a in 0..d {
            let l = (self.center[a] - self.half_width).ceil() as i64;
            let h = (self.center[a] + self.half_width).floor() as i64;
            lo.push(l.max(spec.lo()[a]));
            hi.push(h.min(spec.hi()[a]));
            if lo[a] > hi[a] {
                return Vec::new();
            }
        }
        let mut out = Vec::new();
        let mut cur = lo.clone();
        loop {
            out.push(cur.clone());
            // Odometer increment.
            let mut a = d;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                if cur[a] < hi[a] {
                    cur[a] += 1;
                    for (b, c) in cur.iter_mut().enumerate().skip(a + 1) {
                        *c = lo[b];
                    }
                    break;
                }
            }
        }
    }
}

/// Outcome of the sandwich comparison between the set-to-set time of the
/// enlarged endpoint boxes and a point-to-point time inside them.
#[derive(Clone, Debug)]
pub struct SandwichReport {
    /// T(D_n(0), D_n(n xi)).
    pub set_time: f64,
    /// T(x, y).
    pub point_time: f64,
    /// Total weight of all edges with both endpoints in the union of the
    /// two regions (clipped to the box).
    pub junction_weight: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

/// Check the sandwich bound: the set-to-set time of the enlarged endpoint
/// regions is below T(x, y), which in turn is at most the set-to-set time
/// plus the total weight inside the regions.
pub fn sandwich_check<W: EdgeWeights>(
    weights: &W,
    xi: &[f64],
    n: i64,
    delta: f64,
    kappa: f64,
    x: &[i64],
    y: &[i64],
) -> Result<SandwichReport> {
    check_unit_direction(xi)?;
    let spec = weights.spec();
    let d = spec.d();
    let near = BoxRegion::new(vec![0.0; d], n, delta, kappa)?;
    let far = BoxRegion::new(xi.iter().map(|&c| c * n as f64).collect(), n, delta, kappa)?;
    if !near.contains(x) {
        return Err(Error::domain(format!("x = {x:?} outside the origin region")));
    }
    if !far.contains(y) {
        return Err(Error::domain(format!("y = {y:?} outside the far region")));
    }
    let a = near.sites_within(spec);
    let b = far.sites_within(spec);
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain(
            "endpoint region does not intersect the field box".to_string(),
        ));
    }
    let set_time = passage_time_sets(weights, &a, &b)?.time;
    let point_time = passage_time(weights, x, y, false)?.time;
    // J_n: weight of every edge contained in the union of the regions.
    let union: HashSet<&Site> = a.iter().chain(b.iter()).collect();
    let mut junction_weight = 0.0;
    let mut nb_buf: Site = vec![0; d];
    for site in union.iter() {
        for axis in 0..d {
            nb_buf.clone_from_slice(site);
            nb_buf[axis] += 1;
            if union.contains(&nb_buf) {
                junction_weight += weights.weight_at(site, axis);
            }
        }
    }
    let tol = 1e-9 * point_time.abs().max(1.0);
    Ok(SandwichReport {
        set_time,
        point_time,
        junction_weight,
        lower_holds: set_time <= point_time + tol,
        upper_holds: point_time <= set_time + junction_weight + tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::WeightField;
    use crate::lattice::LatticeSpec;
    use crate::rng::{hash_words, unit_f64};
    use crate::weights::WeightDistribution;

    fn unit_field(r: i64) -> WeightField {
        WeightField::constant(LatticeSpec::cube(2, r, &[0, 0]).unwrap(), 1.0)
    }

    fn uniform_field(r: i64, seed: u64) -> WeightField {
        WeightField::sample(
            LatticeSpec::cube(2, r, &[0, 0]).unwrap(),
            WeightDistribution::parse("uniform:0:1").unwrap(),
            seed,
        )
    }

    #[test]
    fn zero_length_query() {
        let f = unit_field(2);
        let r = passage_time(&f, &[0, 0], &[0, 0], true).unwrap();
        assert_eq!(r.time, 0.0);
        assert_eq!(r.geodesic, Some(vec![]));
        assert!(!r.touched_boundary);
        assert_eq!(r.relaxed_vertices, 0);
    }

    #[test]
    fn unit_weights_give_l1_distance() {
        let f = unit_field(8);
        let r = passage_time(&f, &[0, 0], &[3, 4], false).unwrap();
        assert_eq!(r.time, 7.0);
        let r = passage_time(&f, &[-2, 3], &[1, -1], false).unwrap();
        assert_eq!(r.time, 7.0);
    }

    #[test]
    fn single_edge_geodesic() {
        let f = unit_field(1);
        let r = passage_time(&f, &[0, 0], &[1, 0], true).unwrap();
        assert_eq!(r.time, 1.0);
        assert_eq!(r.geodesic, Some(vec![vec![0, 0], vec![1, 0]]));
    }

    #[test]
    fn sites_outside_box_are_rejected() {
        let f = unit_field(2);
        assert!(passage_time(&f, &[0, 0], &[3, 0], false).is_err());
        assert!(passage_time(&f, &[-3, 0], &[0, 0], false).is_err());
    }

    #[test]
    fn symmetry_is_exact_on_random_fields() {
        for seed in 0..20 {
            let f = uniform_field(5, seed);
            let pick = |k: u64| {
                vec![
                    (hash_words(seed, &[k, 0]) % 11) as i64 - 5,
                    (hash_words(seed, &[k, 1]) % 11) as i64 - 5,
                ]
            };
            let x = pick(1);
            let y = pick(2);
            let fwd = passage_time(&f, &x, &y, false).unwrap().time;
            let bwd = passage_time(&f, &y, &x, false).unwrap().time;
            assert_eq!(fwd, bwd, "T{x:?}->{y:?} differs from reverse");
        }
    }

    #[test]
    fn subadditivity_on_random_triples() {
        for seed in 0..20 {
            let f = uniform_field(6, seed);
            let pick = |k: u64| {
                vec![
                    (hash_words(seed, &[k, 10]) % 13) as i64 - 6,
                    (hash_words(seed, &[k, 11]) % 13) as i64 - 6,
                ]
            };
            let (a, b, c) = (pick(1), pick(2), pick(3));
            let direct = passage_time(&f, &a, &c, false).unwrap().time;
            let through = passage_time(&f, &a, &b, false).unwrap().time
                + passage_time(&f, &b, &c, false).unwrap().time;
            assert!(
                direct <= through + 1e-9 * through.max(1.0),
                "T{a:?}{c:?} = {direct} exceeds detour through {b:?} = {through}"
            );
        }
    }

    #[test]
    fn raising_one_edge_weight_never_lowers_times() {
        let spec = LatticeSpec::cube(2, 3, &[0, 0]).unwrap();
        let base: Vec<f64> = (0..200).map(|k| unit_f64(hash_words(5, &[k]))).collect();
        let weight_of = |e: &crate::lattice::EdgeId, bump: f64| {
            let k = ((e.site[0] + 10) * 37 + (e.site[1] + 10) * 3 + e.axis as i64) as usize % base.len();
            let mut w = base[k] + 0.05;
            if e.site == vec![0, 0] && e.axis == 0 {
                w += bump;
            }
            w
        };
        let f0 = WeightField::tabulate(spec.clone(), |e| weight_of(e, 0.0));
        let f1 = WeightField::tabulate(spec, |e| weight_of(e, 0.4));
        for (x, y) in [([-3, -3], [3, 3]), ([0, 0], [1, 0]), ([-2, 1], [2, -1])] {
            let t0 = passage_time(&f0, &x, &y, false).unwrap().time;
            let t1 = passage_time(&f1, &x, &y, false).unwrap().time;
            assert!(t1 >= t0, "raising a weight lowered T{x:?}{y:?}: {t0} -> {t1}");
        }
    }

    #[test]
    fn geodesic_weight_sum_matches_time() {
        for seed in 40..55 {
            let f = uniform_field(5, seed);
            let r = passage_time(&f, &[-4, -3], &[4, 3], true).unwrap();
            let path = r.geodesic.unwrap();
            assert_eq!(path.first().unwrap(), &vec![-4, -3]);
            assert_eq!(path.last().unwrap(), &vec![4, 3]);
            let mut total = 0.0;
            for pair in path.windows(2) {
                let (a, b) = (&pair[0], &pair[1]);
                let diff: i64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
                assert_eq!(diff, 1, "geodesic step {a:?} -> {b:?} is not nearest-neighbor");
                let axis = (0..2).find(|&ax| a[ax] != b[ax]).unwrap();
                let lower = if a[axis] < b[axis] { a } else { b };
                total += f.weight_at(lower, axis);
            }
            assert!(
                (total - r.time).abs() <= 1e-9 * r.time.max(1.0),
                "path sum {total} vs time {}",
                r.time
            );
        }
    }

    #[test]
    fn tie_break_is_pinned_on_flat_fields() {
        // All weights equal: many geodesics; the lexicographic rule picks
        // the one hugging the smallest sites first.
        let f = unit_field(2);
        let r = passage_time(&f, &[0, 0], &[2, 2], true).unwrap();
        assert_eq!(r.time, 4.0);
        assert_eq!(
            r.geodesic.unwrap(),
            vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 2], vec![2, 2]]
        );
    }

    #[test]
    fn set_time_is_zero_on_overlap() {
        let f = unit_field(2);
        let a = vec![vec![0, 0], vec![1, 0]];
        let b = vec![vec![1, 0], vec![2, 2]];
        let r = passage_time_sets(&f, &a, &b).unwrap();
        assert_eq!(r.time, 0.0);
        assert_eq!(r.relaxed_vertices, 0);
    }

    #[test]
    fn set_time_of_singletons_matches_point_time() {
        let f = unit_field(3);
        let r = passage_time_sets(&f, &[vec![0, 0]], &[vec![2, 0]]).unwrap();
        assert_eq!(r.time, 2.0);
    }

    #[test]
    fn set_time_rejects_empty_and_outside_sets() {
        let f = unit_field(2);
        assert!(passage_time_sets(&f, &[], &[vec![0, 0]]).is_err());
        assert!(passage_time_sets(&f, &[vec![0, 0]], &[]).is_err());
        assert!(passage_time_sets(&f, &[vec![0, 0]], &[vec![5, 0]]).is_err());
    }

    #[test]
    fn multi_target_times_match_point_queries() {
        let f = uniform_field(6, 99);
        let src = vec![0i64, 0];
        let targets: Vec<Vec<i64>> = vec![
            vec![3, 1],
            vec![-2, 4],
            vec![0, 0],
            vec![3, 1], // duplicate on purpose
            vec![-5, -5],
        ];
        let batch = times_from_source(&f, &src, &targets).unwrap();
        for (t, &got) in targets.iter().zip(&batch) {
            let want = passage_time(&f, &src, t, false).unwrap().time;
            // The point query may run from the other endpoint (canonical
            // direction), so allow for a differing float summation order.
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "target {t:?}: batch {got} vs point {want}"
            );
        }
        assert_eq!(batch[0], batch[3]);
        assert_eq!(batch[2], 0.0);
    }

    #[test]
    fn multi_target_times_reject_bad_input() {
        let f = unit_field(2);
        assert!(times_from_source(&f, &[0, 0], &[]).is_err());
        assert!(times_from_source(&f, &[0, 0], &[vec![9, 0]]).is_err());
        assert!(times_from_source(&f, &[9, 0], &[vec![0, 0]]).is_err());
    }

    #[test]
    fn directional_passage_examples() {
        let f = unit_field(16);
        assert_eq!(directional_passage(&f, &[1.0, 0.0], 10, false).unwrap().time, 10.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // (7.07, 7.07) rounds to (7, 7): l1 distance 14 under unit weights.
        assert_eq!(directional_passage(&f, &[s, s], 10, false).unwrap().time, 14.0);
        assert_eq!(directional_passage(&f, &[s, s], 0, false).unwrap().time, 0.0);
    }

    #[test]
    fn directional_passage_validates_direction() {
        let f = unit_field(4);
        assert!(directional_passage(&f, &[1.0, 1.0], 2, false).is_err());
        assert!(directional_passage(&f, &[1.0, 0.0], -1, false).is_err());
    }

    #[test]
    fn touched_boundary_reflects_geodesic_position() {
        // Corner-to-corner runs along the boundary of its own box.
        let f = unit_field(2);
        let r = passage_time(&f, &[-2, -2], &[2, 2], true).unwrap();
        assert!(r.touched_boundary);
        // An interior hop in a large box stays clear.
        let f = unit_field(6);
        let r = passage_time(&f, &[0, 0], &[1, 1], true).unwrap();
        assert!(!r.touched_boundary);
    }

    #[test]
    fn box_region_half_width_and_membership() {
        let r = BoxRegion::new(vec![0.0, 0.0], 1, 1.0 / 6.0, 0.5).unwrap();
        assert_eq!(r.half_width, 18.0);
        assert!(r.contains(&[18, 0]));
        assert!(!r.contains(&[19, 0]));
        assert!(r.contains(&[-18, 18]));
    }

    #[test]
    fn box_region_rejects_bad_parameters() {
        assert!(BoxRegion::new(vec![0.0, 0.0], 0, 1.0 / 6.0, 0.5).is_err(), "n = 0");
        assert!(BoxRegion::new(vec![0.0, 0.0], 1, 0.6, 0.5).is_err(), "delta >= 1/d");
        assert!(BoxRegion::new(vec![0.0, 0.0], 1, 1.0 / 6.0, 1.0).is_err(), "kappa = 1");
        assert!(BoxRegion::new(vec![0.0, 0.0], 1, 1.0 / 6.0, 0.0).is_err(), "kappa = 0");
    }

    #[test]
    fn box_region_site_enumeration_clips_to_the_box() {
        let region = BoxRegion::new(vec![0.0, 0.0], 1, 1.0 / 6.0, 0.5).unwrap();
        let spec = LatticeSpec::cube(2, 3, &[0, 0]).unwrap();
        let sites = region.sites_within(&spec);
        assert_eq!(sites.len(), 49, "whole 7x7 box lies inside half-width 18");
        let spec = LatticeSpec::cube(2, 30, &[25, 25]).unwrap();
        let sites = region.sites_within(&spec);
        // Clip [-18,18]^2 against [-5,55]^2: 24 x 24 sites.
        assert_eq!(sites.len(), 24 * 24);
        for s in &sites {
            assert!(region.contains(s) && spec.contains(s));
        }
    }

    #[test]
    fn sandwich_holds_on_unit_weights_and_overlapping_regions() {
        let f = unit_field(40);
        // Regions at n = 2 with kappa 0.5 overlap massively: set time 0.
        let report = sandwich_check(&f, &[1.0, 0.0], 2, 1.0 / 6.0, 0.5, &[0, 0], &[2, 0]).unwrap();
        assert_eq!(report.set_time, 0.0);
        assert!(report.lower_holds && report.upper_holds);
        assert_eq!(report.point_time, 2.0);
        assert!(report.junction_weight > 0.0);
    }

    #[test]
    fn sandwich_rejects_points_outside_their_regions() {
        let f = unit_field(40);
        let err = sandwich_check(&f, &[1.0, 0.0], 2, 1.0 / 6.0, 0.5, &[39, 0], &[2, 0]);
        assert!(err.is_err());
    }

    #[test]
    fn sandwich_property_run_on_random_fields() {
        // Larger scale, disjoint-ish regions; no violations tolerated.
        let dist = WeightDistribution::parse("uniform:0:1").unwrap();
        for seed in 0..100 {
            let spec = LatticeSpec::covering_segment(32, &[1.0, 0.0]).unwrap();
            let f = WeightField::sample(spec, dist.clone(), seed);
            let report =
                sandwich_check(&f, &[1.0, 0.0], 32, 1.0 / 6.0, 0.5, &[0, 0], &[32, 0]).unwrap();
            assert!(
                report.lower_holds && report.upper_holds,
                "sandwich violated at seed {seed}: {report:?}"
            );
        }
    }
}
