//! Desk-scale statistical checks: sampled weights against their analytic
//! law, the deviation tail at zero, monotone oriented spread, and the two
//! critical-parameter estimators against their known or literature values.
//!
//! Thresholds are chosen so that a correct implementation fails with
//! probability well below 1e-3 per test.

use fpp_core::field::WeightField;
use fpp_core::lattice::LatticeSpec;
use fpp_core::percolation::{estimate_pc, estimate_vec_pc, oriented_speed};
use fpp_core::stats::{ks_critical, ks_statistic};
use fpp_core::truncation::concentration_scan;
use fpp_core::weights::WeightDistribution;

/// Empirical CDF of ~1e5 sampled edge weights against the analytic CDF,
/// for each continuous family.
#[test]
fn sampled_weights_match_their_law() {
    let spec = LatticeSpec::from_bounds(vec![0, 0], vec![299, 169]).unwrap();
    for (label, dist) in [
        ("uniform:0:1", WeightDistribution::uniform(0.0, 1.0).unwrap()),
        ("uniform:0.5:1.5", WeightDistribution::uniform(0.5, 1.5).unwrap()),
        ("exp:1", WeightDistribution::exponential(1.0).unwrap()),
    ] {
        let field = WeightField::sample(spec.clone(), dist.clone(), 0x5eed_0001);
        let mut xs = Vec::new();
        field.for_each_edge(|_, _, w| {
            assert!(w >= 0.0, "{label}: negative weight {w}");
            xs.push(w);
        });
        assert!(xs.len() > 100_000, "{label}: only {} samples", xs.len());
        let n = xs.len();
        let d = ks_statistic(&mut xs, |x| dist.cdf(x), |x| dist.cdf(x));
        let crit = ks_critical(n, 1e-3);
        assert!(
            d < crit,
            "{label}: KS statistic {d:.5} exceeds the 1e-3 critical value {crit:.5} at n={n}"
        );
    }
}

/// The deviation tail at u = 0 counts replicas strictly above the mean,
/// which sits near 1/2 for a continuous statistic.  The scale must be
/// large enough that the two endpoint regions are disjoint (their
/// half-width grows like n^delta); below that the set-to-set time is
/// identically zero and the tail degenerates.
#[test]
fn tail_fraction_at_zero_deviation_is_near_half() {
    let dist = WeightDistribution::uniform(0.5, 1.5).unwrap();
    let scan = concentration_scan(&dist, &[1.0, 0.0], 96, 1.0 / 6.0, &[0.0], 200, 3131, 0.5)
        .unwrap();
    assert!(scan.mean > 0.0, "regions overlap; the scan is degenerate");
    let (u, tail) = scan.points[0];
    assert_eq!(u, 0.0);
    // Binomial(200, ~1/2): +/- 0.15 is a > 5-sigma corridor.
    assert!(
        (0.35..=0.65).contains(&tail),
        "tail at u=0 is {tail}, far from 1/2"
    );
}

/// With a shared seed stream, opening bonds at a higher rate can only
/// help every realization, so survival and speed increase in q.
#[test]
fn oriented_spread_is_monotone_in_q() {
    let at = |q: f64| oriented_speed(q, 128, 200, 4242).unwrap();
    let low = at(0.75);
    let mid = at(0.85);
    let high = at(0.95);
    assert!(low.survival <= mid.survival && mid.survival <= high.survival);
    let speeds = [
        low.speed.expect("supercritical at 0.75"),
        mid.speed.expect("supercritical at 0.85"),
        high.speed.expect("supercritical at 0.95"),
    ];
    assert!(speeds[0] <= speeds[1] && speeds[1] <= speeds[2], "speeds {speeds:?} not monotone");
    assert!(speeds[0] < speeds[2], "speeds {speeds:?} flat across q");
    for s in speeds {
        assert!((0.0..=1.0).contains(&s));
    }
}

/// Plane bond crossing threshold: the bisection at a moderate box lands
/// near the exact value 1/2.
#[test]
fn crossing_threshold_lands_near_one_half() {
    let est = estimate_pc(2, 48, 300, 2718).unwrap();
    assert!(
        (0.44..=0.56).contains(&est.estimate),
        "estimate {} outside [0.44, 0.56]",
        est.estimate
    );
    assert!(est.ci.0 <= est.estimate && est.estimate <= est.ci.1);
}

/// Oriented critical parameter: the bisection lands inside the corridor
/// around the literature value 0.6447.
#[test]
fn oriented_threshold_sits_in_the_literature_corridor() {
    let est = estimate_vec_pc(128, 300, 1618).unwrap();
    assert!(
        (0.60..=0.70).contains(&est.estimate),
        "estimate {} outside [0.60, 0.70]",
        est.estimate
    );
    assert!(est.ci.0 <= est.estimate && est.estimate <= est.ci.1);
}
