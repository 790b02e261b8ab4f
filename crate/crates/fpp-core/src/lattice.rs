//! Finite boxes of the d-dimensional cubic lattice.
//!
//! Sites are integer vectors; edges join nearest neighbours (two sites at
//! l1-distance one).  Every simulation works inside an axis-aligned box,
//! addressed through a row-major linear index so that search loops never
//! allocate.  Row-major order has a useful side effect: comparing linear
//! indices is exactly lexicographic comparison of site coordinates, which
//! the shortest-path tie-breaking relies on.

use crate::error::{Error, Result};

/// A lattice site, written out as its integer coordinates.
pub type Site = Vec<i64>;

/// Canonical name of a lattice edge: the endpoint with the smaller
/// coordinate along `axis`, plus that axis.  The edge joins `site` and
/// `site + e_axis`.  Keying randomness by this name makes edge weights
/// independent of which box they are viewed through.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgeId {
    pub site: Site,
    pub axis: usize,
}

impl EdgeId {
    pub fn new(site: Site, axis: usize) -> Self {
        EdgeId { site, axis }
    }

    /// The other endpoint, `site + e_axis`.
    pub fn upper(&self) -> Site {
        let mut s = self.site.clone();
        s[self.axis] += 1;
        s
    }
}

/// l-infinity norm of an integer vector.
pub fn linf(x: &[i64]) -> i64 {
    x.iter().map(|v| v.abs()).max().unwrap_or(0)
}

/// l1 norm of an integer vector.
pub fn l1(x: &[i64]) -> i64 {
    x.iter().map(|v| v.abs()).sum()
}

/// l-infinity distance between two integer vectors.
pub fn linf_dist(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or(0)
}

/// Componentwise rounding of a real vector to the nearest lattice site,
/// with exact half-integers rounded toward minus infinity, so e.g.
/// (0.5, 1.5) rounds to (0, 1).  Rounding twice is a no-op.
pub fn round_to_lattice(x: &[f64]) -> Site {
    x.iter().map(|&v| (v - 0.5).ceil() as i64).collect()
}

/// An axis-aligned box of lattice sites with inclusive bounds.
///
/// The primary constructor is [`LatticeSpec::cube`], a cube of radius `R`
/// around an origin offset (sites `origin + [-R, R]^d`).  General bounds
/// exist for tests and fixtures that need non-cubic shapes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeSpec {
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl LatticeSpec {
    /// Cube `origin + [-radius, radius]^d`.
    pub fn cube(d: usize, radius: i64, origin: &[i64]) -> Result<Self> {
        if d < 2 {
            return Err(Error::domain(format!("dimension must be >= 2, got {d}")));
        }
        if radius < 1 {
            return Err(Error::domain(format!("box radius must be >= 1, got {radius}")));
        }
        if origin.len() != d {
            return Err(Error::domain(format!(
                "origin has {} coordinates, expected {d}",
                origin.len()
            )));
        }
        let lo = origin.iter().map(|&o| o - radius).collect();
        let hi = origin.iter().map(|&o| o + radius).collect();
        Ok(LatticeSpec { lo, hi })
    }

    /// Box with explicit inclusive bounds.
    pub fn from_bounds(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::domain("bound vectors of different lengths".to_string()));
        }
        if lo.len() < 2 {
            return Err(Error::domain(format!(
                "dimension must be >= 2, got {}",
                lo.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::domain(format!("empty box: lo {lo:?}, hi {hi:?}")));
        }
        Ok(LatticeSpec { lo, hi })
    }

    /// The standard search box for a passage-time computation at scale `n`
    /// in direction `xi`: a cube centred on the midpoint of the segment
    /// from the origin to `n xi`, wide enough that every point of the
    /// segment keeps an l-infinity margin of at least `ceil(1.5 n)` from
    /// the boundary.  The generous margin makes boundary effects visible
    /// through the `touched_boundary` flag rather than silently biasing
    /// times.
    pub fn covering_segment(n: i64, xi: &[f64]) -> Result<Self> {
        if n < 0 {
            return Err(Error::domain(format!("scale must be >= 0, got {n}")));
        }
        let mid: Vec<f64> = xi.iter().map(|&c| c * n as f64 / 2.0).collect();
        let center = round_to_lattice(&mid);
        // Segment points sit within ceil(n/2) of the midpoint, so this
        // radius leaves the promised ceil(1.5 n) margin around the segment.
        let radius = ((1.5 * n as f64).ceil() as i64 + (0.5 * n as f64).ceil() as i64).max(1);
        LatticeSpec::cube(xi.len(), radius, &center)
    }

    pub fn d(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        site.len() == self.d()
            && site
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&x, (&l, &h))| l <= x && x <= h)
    }

    pub fn site_count(&self) -> usize {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| (h - l + 1) as usize)
            .product()
    }

    /// Number of nearest-neighbour edges with both endpoints in the box.
    pub fn edge_count(&self) -> usize {
        let dims: Vec<usize> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| (h - l + 1) as usize)
            .collect();
        (0..dims.len())
            .map(|a| {
                dims.iter()
                    .enumerate()
                    .map(|(b, &n)| if a == b { n - 1 } else { n })
                    .product::<usize>()
            })
            .sum()
    }

    pub fn indexer(&self) -> BoxIndexer {
        BoxIndexer::new(self)
    }
}

/// Row-major addressing of a box: site coordinates to a dense linear index
/// and back.  Index order equals lexicographic order of coordinates.
#[derive(Clone, Debug)]
pub struct BoxIndexer {
    lo: Vec<i64>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl BoxIndexer {
    fn new(spec: &LatticeSpec) -> Self {
        let lo = spec.lo.clone();
        let dims: Vec<usize> = spec
            .lo
            .iter()
            .zip(&spec.hi)
            .map(|(&l, &h)| (h - l + 1) as usize)
            .collect();
        let mut strides = vec![1usize; dims.len()];
        for a in (0..dims.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        let len = dims.iter().product();
        BoxIndexer { lo, dims, strides, len }
    }

    pub fn d(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn index(&self, site: &[i64]) -> Option<usize> {
        if site.len() != self.lo.len() {
            return None;
        }
        let mut idx = 0usize;
        for (a, &c) in site.iter().enumerate() {
            let off = c - self.lo[a];
            if off < 0 || off as usize >= self.dims[a] {
                return None;
            }
            idx += off as usize * self.strides[a];
        }
        Some(idx)
    }

    pub fn site(&self, mut idx: usize) -> Site {
        debug_assert!(idx < self.len);
        let mut out = Vec::with_capacity(self.lo.len());
        for a in 0..self.lo.len() {
            let pos = idx / self.strides[a];
            idx %= self.strides[a];
            out.push(self.lo[a] + pos as i64);
        }
        out
    }

    /// Write the coordinates of `idx` into `out` without allocating.
    pub fn site_into(&self, mut idx: usize, out: &mut [i64]) {
        debug_assert!(idx < self.len);
        for (a, slot) in out.iter_mut().enumerate() {
            let pos = idx / self.strides[a];
            idx %= self.strides[a];
            *slot = self.lo[a] + pos as i64;
        }
    }

    /// Neighbouring index one step along `axis` (`dir` is +1 or -1),
    /// or None when the step leaves the box.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, dir: i64) -> Option<usize> {
        let pos = (idx / self.strides[axis]) % self.dims[axis];
        if dir > 0 {
            if pos + 1 >= self.dims[axis] {
                None
            } else {
                Some(idx + self.strides[axis])
            }
        } else if pos == 0 {
            None
        } else {
            Some(idx - self.strides[axis])
        }
    }

    /// Does `idx` lie on the boundary of the box (some coordinate at its
    /// extreme value)?
    #[inline]
    pub fn on_boundary(&self, idx: usize) -> bool {
        (0..self.lo.len()).any(|a| {
            let pos = (idx / self.strides[a]) % self.dims[a];
            pos == 0 || pos + 1 == self.dims[a]
        })
    }
}
