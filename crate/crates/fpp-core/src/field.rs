//! Random weight fields over a lattice box.
//!
//! A field never stores one number per edge when sampled from a law:
//! the weight of an edge is recomputed on demand by hashing (seed, canonical
//! edge id) into a uniform variate and pushing it through the law's
//! quantile function.  Fields over overlapping boxes therefore agree on
//! shared edges, replicas are cheap at any box size, and results cannot
//! depend on query order.
//!
//! Tables of explicit weights exist for fixtures and oracle tests; the
//! text fixture format is one header line `d R` (dimension and cube
//! radius) followed by one line `x1 .. xd axis weight` per edge.

use crate::error::{Error, Result};
use crate::lattice::{BoxIndexer, EdgeId, LatticeSpec};
use crate::rng::{unit_f64, KeyHash};
use crate::weights::WeightDistribution;

/// Read access to edge weights over a box; implemented by plain fields and
/// by their truncated companions.
pub trait EdgeWeights {
    fn spec(&self) -> &LatticeSpec;

    /// Weight of the edge from `lower` to `lower + e_axis`.  `lower` must
    /// be the canonical (smaller) endpoint and the edge must lie in the
    /// box; this is the unchecked hot path used by the searches.
    fn weight_at(&self, lower: &[i64], axis: usize) -> f64;
}

#[derive(Clone)]
enum Store {
    Sampled { dist: WeightDistribution, seed: u64 },
    Table { weights: Vec<f64> },
}

/// Edge weights on a box: lazily sampled from a law, or an explicit table.
#[derive(Clone)]
pub struct WeightField {
    spec: LatticeSpec,
    indexer: BoxIndexer,
    store: Store,
}

impl WeightField {
    /// I.i.d. weights with law `dist`, determined by `seed`.
    pub fn sample(spec: LatticeSpec, dist: WeightDistribution, seed: u64) -> Self {
        let indexer = spec.indexer();
        WeightField { spec, indexer, store: Store::Sampled { dist, seed } }
    }

    /// Explicit weights computed once per edge from `f`.
    pub fn tabulate(spec: LatticeSpec, f: impl Fn(&EdgeId) -> f64) -> Self {
        let indexer = spec.indexer();
        let d = spec.d();
        let mut weights = vec![f64::NAN; indexer.len() * d];
        for idx in 0..indexer.len() {
            let site = indexer.site(idx);
            for axis in 0..d {
                if indexer.neighbor(idx, axis, 1).is_some() {
                    weights[idx * d + axis] = f(&EdgeId::new(site.clone(), axis));
                }
            }
        }
        WeightField { spec, indexer, store: Store::Table { weights } }
    }

    /// Constant weight on every edge.
    pub fn constant(spec: LatticeSpec, w: f64) -> Self {
        WeightField::sample(spec, WeightDistribution::point_mass(w), 0)
    }

    pub fn seed(&self) -> Option<u64> {
        match self.store {
            Store::Sampled { seed, .. } => Some(seed),
            Store::Table { .. } => None,
        }
    }

    pub fn distribution(&self) -> Option<&WeightDistribution> {
        match self.store {
            Store::Sampled { ref dist, .. } => Some(dist),
            Store::Table { .. } => None,
        }
    }

    /// Checked weight lookup for a canonical edge id; errors when either
    /// endpoint falls outside the box.
    pub fn weight(&self, edge: &EdgeId) -> Result<f64> {
        if edge.axis >= self.spec.d() {
            return Err(Error::domain(format!(
                "axis {} out of range for dimension {}",
                edge.axis,
                self.spec.d()
            )));
        }
        if !self.spec.contains(&edge.site) || !self.spec.contains(&edge.upper()) {
            return Err(Error::domain(format!(
                "edge ({:?}, axis {}) not inside box [{:?}, {:?}]",
                edge.site,
                edge.axis,
                self.spec.lo(),
                self.spec.hi()
            )));
        }
        Ok(self.weight_at(&edge.site, edge.axis))
    }

    /// Iterate over every edge of the box in canonical order.
    pub fn for_each_edge(&self, mut f: impl FnMut(&[i64], usize, f64)) {
        let d = self.spec.d();
        let mut coords = vec![0i64; d];
        for idx in 0..self.indexer.len() {
            self.indexer.site_into(idx, &mut coords);
            for axis in 0..d {
                if self.indexer.neighbor(idx, axis, 1).is_some() {
                    let w = self.weight_at(&coords, axis);
                    f(&coords, axis, w);
                }
            }
        }
    }

    /// Parse the text fixture format.  Every edge of the box must appear
    /// exactly once.
    pub fn from_fixture(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::config("fixture is empty".to_string()))?;
        let mut it = header.split_whitespace();
        let d: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::config("fixture header must be 'd R'".to_string()))?;
        let r: i64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::config("fixture header must be 'd R'".to_string()))?;
        let spec = LatticeSpec::cube(d, r, &vec![0; d])?;
        let indexer = spec.indexer();
        let mut weights = vec![f64::NAN; indexer.len() * d];
        let mut seen = 0usize;
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != d + 2 {
                return Err(Error::config(format!(
                    "fixture edge line needs {} fields, got {:?}",
                    d + 2,
                    line
                )));
            }
            let site: Vec<i64> = toks[..d]
                .iter()
                .map(|t| t.parse::<i64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::config(format!("bad coordinate in {line:?}")))?;
            let axis: usize = toks[d]
                .parse()
                .map_err(|_| Error::config(format!("bad axis in {line:?}")))?;
            let w: f64 = toks[d + 1]
                .parse()
                .map_err(|_| Error::config(format!("bad weight in {line:?}")))?;
            if axis >= d {
                return Err(Error::config(format!("axis {axis} out of range in {line:?}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::config(format!("weight must be finite and >= 0 in {line:?}")));
            }
            let idx = indexer
                .index(&site)
                .filter(|&i| indexer.neighbor(i, axis, 1).is_some())
                .ok_or_else(|| Error::config(format!("edge outside box in {line:?}")))?;
            let slot = idx * d + axis;
            if !weights[slot].is_nan() {
                return Err(Error::config(format!("duplicate edge in {line:?}")));
            }
            weights[slot] = w;
            seen += 1;
        }
        if seen != spec.edge_count() {
            return Err(Error::config(format!(
                "fixture lists {seen} edges, box has {}",
                spec.edge_count()
            )));
        }
        Ok(WeightField { spec, indexer, store: Store::Table { weights } })
    }

    /// Render the fixture format for a cube-shaped field.
    pub fn to_fixture(&self) -> Result<String> {
        let d = self.spec.d();
        let lo = self.spec.lo();
        let hi = self.spec.hi();
        let r = hi[0];
        if lo.iter().any(|&l| l != -r) || hi.iter().any(|&h| h != r) {
            return Err(Error::domain(
                "fixture format only covers origin-centred cubes".to_string(),
            ));
        }
        let mut out = format!("{d} {r}\n");
        self.for_each_edge(|site, axis, w| {
            for c in site {
                out.push_str(&format!("{c} "));
            }
            out.push_str(&format!("{axis} {w}\n"));
        });
        Ok(out)
    }
}

impl EdgeWeights for WeightField {
    fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    #[inline]
    fn weight_at(&self, lower: &[i64], axis: usize) -> f64 {
        match self.store {
            Store::Sampled { ref dist, seed } => {
                let mut h = KeyHash::new(seed);
                for &c in lower {
                    h.push_i64(c);
                }
                h.push(axis as u64);
                dist.quantile(unit_f64(h.finish()))
            }
            Store::Table { ref weights } => {
                let idx = self
                    .indexer
                    .index(lower)
                    .expect("table lookup outside box");
                let w = weights[idx * self.spec.d() + axis];
                debug_assert!(!w.is_nan(), "edge missing from table");
                w
            }
        }
    }
}
