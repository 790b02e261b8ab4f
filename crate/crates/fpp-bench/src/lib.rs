//! Shared fixtures for the criterion benchmarks.  The package carries no
//! library code of its own; see `benches/kernels.rs`.

use fpp_core::field::WeightField;
use fpp_core::lattice::LatticeSpec;
use fpp_core::weights::WeightDistribution;

/// Sampled field on the standard search box for scale `n` along the first
/// axis, with weights uniform on [0.5, 1.5].
pub fn axis_field(n: i64, seed: u64) -> WeightField {
    let xi = [1.0, 0.0];
    let spec = LatticeSpec::covering_segment(n, &xi).expect("valid scale");
    let dist = WeightDistribution::uniform(0.5, 1.5).expect("valid law");
    WeightField::sample(spec, dist, seed)
}

/// Field with a deliberate share of extreme weights so that cluster
/// labeling and weight resetting have real work to do: 5% of edges fall
/// below the threshold 0.01, 5% above its reciprocal.
pub fn extreme_field(n: i64, seed: u64) -> WeightField {
    let xi = [1.0, 0.0];
    let spec = LatticeSpec::covering_segment(n, &xi).expect("valid scale");
    let dist = WeightDistribution::parse("mix:0.05*atoms:0.001:1+0.9*uniform:0.5:1.5+0.05*atoms:300:1")
        .expect("valid mixture");
    WeightField::sample(spec, dist, seed)
}
