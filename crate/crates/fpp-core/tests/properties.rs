//! Randomized structural invariants of the public API, driven by proptest:
//! determinism of sampled fields, metric properties of passage times,
//! geodesic witnesses, the reset-weight dichotomy, skeleton decompositions,
//! rounding, threshold selection, and cluster labeling against a naive
//! flood fill.

use proptest::prelude::*;

use fpp_core::field::{EdgeWeights, WeightField};
use fpp_core::lattice::{linf_dist, round_to_lattice, BoxIndexer, LatticeSpec, Site};
use fpp_core::passage::passage_time;
use fpp_core::rng::derive_seed;
use fpp_core::scaling::skeletonize;
use fpp_core::truncation::{choose_kappa, label_clusters, truncate};
use fpp_core::weights::WeightDistribution;

/// A 2-d box with arbitrary offset and side lengths in [2, max_side].
fn small_box(max_side: i64) -> impl Strategy<Value = LatticeSpec> {
    (
        -3i64..=3,
        -3i64..=3,
        2i64..=max_side,
        2i64..=max_side,
    )
        .prop_map(|(x, y, w, h)| {
            LatticeSpec::from_bounds(vec![x, y], vec![x + w - 1, y + h - 1]).unwrap()
        })
}

/// Canonical edge slot for a tabulated field: site index times dimension
/// plus axis.  Out-of-box uppers never query the table, so overallocating
/// one slot per (site, axis) pair is safe.
fn tabulated(spec: &LatticeSpec, values: &[f64]) -> WeightField {
    let ix = spec.indexer();
    let d = ix.d();
    let values = values.to_vec();
    WeightField::tabulate(spec.clone(), move |e| {
        values[ix.index(&e.site).unwrap() * d + e.axis]
    })
}

fn edge_slots(spec: &LatticeSpec) -> usize {
    spec.indexer().len() * spec.d()
}

/// All in-box edges as (lower site, axis).
fn in_box_edges(ix: &BoxIndexer) -> Vec<(Site, usize)> {
    let mut out = Vec::new();
    for idx in 0..ix.len() {
        for axis in 0..ix.d() {
            if ix.neighbor(idx, axis, 1).is_some() {
                out.push((ix.site(idx), axis));
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Same (box, law, seed) gives bit-identical weights in any query
    /// order and across separately constructed fields.
    #[test]
    fn sampled_fields_are_query_order_independent(
        spec in small_box(5),
        seed in any::<u64>(),
    ) {
        let dist = WeightDistribution::uniform(0.0, 1.0).unwrap();
        let first = WeightField::sample(spec.clone(), dist.clone(), seed);
        let mut forward = Vec::new();
        first.for_each_edge(|site, axis, w| forward.push((site.to_vec(), axis, w)));

        // Re-query the same field backwards, then a fresh field forwards.
        let second = WeightField::sample(spec, dist, seed);
        for (site, axis, w) in forward.iter().rev() {
            prop_assert_eq!(first.weight_at(site, *axis).to_bits(), w.to_bits());
            prop_assert_eq!(second.weight_at(site, *axis).to_bits(), w.to_bits());
        }
    }

    /// Point-to-point times form a symmetric metric-like function:
    /// T(x,y) = T(y,x) and T(x,z) <= T(x,y) + T(y,z), up to float slack.
    #[test]
    fn times_are_symmetric_and_triangular(
        spec in small_box(5),
        raw in prop::collection::vec(0.0f64..20.0, 2 * 5 * 8 * 8),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 3),
    ) {
        prop_assume!(raw.len() >= edge_slots(&spec));
        let field = tabulated(&spec, &raw);
        let ix = spec.indexer();
        let site = |i: usize| ix.site(picks[i].index(ix.len()));
        let (x, y, z) = (site(0), site(1), site(2));
        let t = |a: &Site, b: &Site| passage_time(&field, a, b, false).unwrap().time;

        let xy = t(&x, &y);
        let yx = t(&y, &x);
        prop_assert!((xy - yx).abs() <= 1e-9 * xy.abs().max(1.0), "T(x,y)={xy} T(y,x)={yx}");

        let xz = t(&x, &z);
        let yz = t(&y, &z);
        prop_assert!(
            xz <= xy + yz + 1e-9 * (xy + yz).abs().max(1.0),
            "T(x,z)={xz} exceeds T(x,y)+T(y,z)={}",
            xy + yz
        );
    }

    /// A requested geodesic is a genuine witness: an in-box
    /// nearest-neighbor path from source to target whose summed weights
    /// reproduce the reported time.
    #[test]
    fn geodesics_witness_their_time(
        spec in small_box(5),
        raw in prop::collection::vec(0.01f64..20.0, 2 * 5 * 8 * 8),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 2),
    ) {
        prop_assume!(raw.len() >= edge_slots(&spec));
        let field = tabulated(&spec, &raw);
        let ix = spec.indexer();
        let src = ix.site(picks[0].index(ix.len()));
        let dst = ix.site(picks[1].index(ix.len()));
        let res = passage_time(&field, &src, &dst, true).unwrap();
        let path = res.geodesic.expect("path requested");

        // A zero-length query reports time 0 with an empty path.
        if src == dst {
            prop_assert_eq!(res.time, 0.0);
            prop_assert!(path.is_empty());
            return Ok(());
        }
        prop_assert_eq!(path.first().unwrap(), &src);
        prop_assert_eq!(path.last().unwrap(), &dst);
        let mut total = 0.0;
        for pair in path.windows(2) {
            prop_assert!(spec.contains(&pair[0]) && spec.contains(&pair[1]));
            let diff: i64 = pair[0].iter().zip(&pair[1]).map(|(&a, &b)| (a - b).abs()).sum();
            prop_assert_eq!(diff, 1, "non-unit step {:?} -> {:?}", &pair[0], &pair[1]);
            let axis = pair[0].iter().zip(&pair[1]).position(|(a, b)| a != b).unwrap();
            let lower = if pair[0][axis] < pair[1][axis] { &pair[0] } else { &pair[1] };
            total += field.weight_at(lower, axis);
        }
        prop_assert!(
            (total - res.time).abs() <= 1e-9 * res.time.abs().max(1.0),
            "path weight {total} vs reported {}",
            res.time
        );
    }

    /// Every reset weight either equals the original weight or is exactly
    /// the reset value 1; in particular it never exceeds the original
    /// plus one.
    #[test]
    fn reset_weights_keep_the_dichotomy(
        spec in small_box(6),
        levels in prop::collection::vec(0usize..4, 2 * 6 * 9 * 9),
    ) {
        prop_assume!(levels.len() >= edge_slots(&spec));
        const LEVELS: [f64; 4] = [0.001, 0.5, 1.0, 300.0];
        let raw: Vec<f64> = levels.iter().map(|&i| LEVELS[i]).collect();
        let field = tabulated(&spec, &raw);
        let reset = truncate(field.clone(), 0.01, 8, 0.25).unwrap();
        let ix = spec.indexer();
        for (site, axis) in in_box_edges(&ix) {
            let base = field.weight_at(&site, axis);
            let after = reset.weight_at(&site, axis);
            prop_assert!(
                after == base || after == 1.0,
                "reset weight {after} at {site:?} axis {axis} is neither the base {base} nor 1"
            );
            prop_assert!(after <= base + 1.0);
        }
    }
}

proptest! {
    /// Skeleton decompositions of arbitrary nearest-neighbor walks: the
    /// anchor indices start at 0, increase, mark exactly the first
    /// crossings to l-infinity distance m, and the tail stays below m.
    #[test]
    fn skeletons_decompose_any_walk(
        steps in prop::collection::vec((0usize..2, any::<bool>()), 0..60),
        m in 1i64..=5,
    ) {
        let mut path = vec![vec![0i64, 0]];
        for (axis, positive) in steps {
            let mut next = path.last().unwrap().clone();
            next[axis] += if positive { 1 } else { -1 };
            path.push(next);
        }
        let sk = skeletonize(&path, m).unwrap();

        prop_assert_eq!(sk.tau[0], 0);
        prop_assert_eq!(sk.q, sk.anchors.len() - 1);
        prop_assert_eq!(sk.tau.len(), sk.anchors.len());
        for (i, &k) in sk.tau.iter().enumerate() {
            prop_assert_eq!(&sk.anchors[i], &path[k]);
        }
        for pair in sk.tau.windows(2) {
            prop_assert!(pair[0] < pair[1]);
            prop_assert_eq!(linf_dist(&path[pair[1]], &path[pair[0]]), m);
            // First crossing: strictly inside before the anchor index.
            for k in pair[0] + 1..pair[1] {
                prop_assert!(linf_dist(&path[k], &path[pair[0]]) < m);
            }
        }
        let last = *sk.tau.last().unwrap();
        for v in &path[last..] {
            prop_assert!(linf_dist(v, &path[last]) < m);
        }
    }

    /// Rounding a real point to the lattice moves every coordinate by at
    /// most half a step.
    #[test]
    fn rounding_stays_within_half_step(
        x in prop::collection::vec(-1e6f64..1e6, 2..=4),
    ) {
        let r = round_to_lattice(&x);
        for (a, b) in x.iter().zip(&r) {
            prop_assert!((a - *b as f64).abs() <= 0.5, "{a} rounded to {b}");
        }
    }

    /// The automatic threshold always lands strictly below the critical
    /// probability on both sides, with the advertised margin.
    #[test]
    fn chosen_threshold_keeps_its_margin(
        lo in 0.0f64..2.0,
        width in 0.1f64..3.0,
    ) {
        let dist = WeightDistribution::uniform(lo, lo + width).unwrap();
        let choice = choose_kappa(&dist, 0.5).unwrap();
        prop_assert!(choice.kappa > 0.0 && choice.kappa < 1.0);
        let worst = choice.p_low.max(choice.p_high);
        prop_assert!(worst < 0.5, "worst tail {worst} at kappa {}", choice.kappa);
        prop_assert_eq!(choice.margin.to_bits(), (0.5 - worst).to_bits());
    }
}

/// Component sizes of the graph on `nodes` induced by `adjacent`, by
/// breadth-first search.
fn component_sizes(len: usize, nodes: &[bool], adjacent: impl Fn(usize) -> Vec<usize>) -> Vec<u32> {
    let mut seen = vec![false; len];
    let mut sizes = Vec::new();
    for start in 0..len {
        if !nodes[start] || seen[start] {
            continue;
        }
        let mut queue = vec![start];
        seen[start] = true;
        let mut count = 0u32;
        while let Some(at) = queue.pop() {
            count += 1;
            for nb in adjacent(at) {
                if nodes[nb] && !seen[nb] {
                    seen[nb] = true;
                    queue.push(nb);
                }
            }
        }
        sizes.push(count);
    }
    sizes.sort_unstable();
    sizes
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Cluster labeling agrees with a naive flood fill: low-weight edges
    /// joined by shared endpoints, high-weight-adjacent sites joined by
    /// the 3^d - 1 diagonal neighborhood.
    #[test]
    fn cluster_sizes_match_flood_fill(
        spec in small_box(5),
        levels in prop::collection::vec(0usize..4, 2 * 5 * 8 * 8),
    ) {
        prop_assume!(levels.len() >= edge_slots(&spec));
        const LEVELS: [f64; 4] = [0.001, 0.5, 1.0, 300.0];
        let kappa = 0.01;
        let raw: Vec<f64> = levels.iter().map(|&i| LEVELS[i]).collect();
        let field = tabulated(&spec, &raw);
        let labels = label_clusters(&field, kappa).unwrap();
        let ix = spec.indexer();
        let len = ix.len();

        // Low-weight components: sites touching a low edge, connected
        // through low edges only.
        let mut low_adj: Vec<Vec<usize>> = vec![Vec::new(); len];
        let mut touches_low = vec![false; len];
        let mut touches_high = vec![false; len];
        for idx in 0..len {
            let site = ix.site(idx);
            for axis in 0..ix.d() {
                if let Some(nb) = ix.neighbor(idx, axis, 1) {
                    let w = field.weight_at(&site, axis);
                    if w < kappa {
                        low_adj[idx].push(nb);
                        low_adj[nb].push(idx);
                        touches_low[idx] = true;
                        touches_low[nb] = true;
                    }
                    if w > 1.0 / kappa {
                        touches_high[idx] = true;
                        touches_high[nb] = true;
                    }
                }
            }
        }
        let low_sizes = component_sizes(len, &touches_low, |at| low_adj[at].clone());
        let mut got_low = labels.bad_cluster_sizes.clone();
        got_low.sort_unstable();
        prop_assert_eq!(got_low, low_sizes);

        // High-adjacent components under the diagonal neighborhood.
        let star = |at: usize| -> Vec<usize> {
            let site = ix.site(at);
            let mut out = Vec::new();
            let d = ix.d();
            let mut offset = vec![-1i64; d];
            loop {
                if offset.iter().any(|&o| o != 0) {
                    let moved: Site = site.iter().zip(&offset).map(|(&c, &o)| c + o).collect();
                    if let Some(nb) = ix.index(&moved) {
                        out.push(nb);
                    }
                }
                let mut a = 0;
                loop {
                    if a == d {
                        return out;
                    }
                    offset[a] += 1;
                    if offset[a] <= 1 {
                        break;
                    }
                    offset[a] = -1;
                    a += 1;
                }
            }
        };
        let high_sizes = component_sizes(len, &touches_high, star);
        let mut got_high = labels.unhealthy_cluster_sizes.clone();
        got_high.sort_unstable();
        prop_assert_eq!(got_high, high_sizes);
    }

    /// Distinct master seeds give distinct fields (no accidental seed
    /// collapse in the per-edge derivation).
    #[test]
    fn distinct_seeds_vary_the_field(seed in any::<u64>()) {
        let spec = LatticeSpec::from_bounds(vec![0, 0], vec![7, 7]).unwrap();
        let dist = WeightDistribution::uniform(0.0, 1.0).unwrap();
        let a = WeightField::sample(spec.clone(), dist.clone(), seed);
        let b = WeightField::sample(spec, dist, derive_seed(seed, "properties.other", 1));
        let mut differs = false;
        a.for_each_edge(|site, axis, w| {
            if b.weight_at(site, axis) != w {
                differs = true;
            }
        });
        prop_assert!(differs, "two differently seeded fields agree on every edge");
    }
}
