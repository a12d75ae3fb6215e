//! Two-user rate regions.
//!
//! Every region handled here is convex, contains the origin and is closed
//! under coordinate-wise decrease within the nonnegative quadrant, so it is
//! fully described by its dominant (upper-right) boundary. [`RateRegion`]
//! stores that boundary as a vertex chain from `(0, max r2)` to `(max r1, 0)`,
//! axis intercepts included. Along the chain `r1` is non-decreasing, `r2`
//! non-increasing, and every interior vertex is a strict clockwise turn.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Collinearity / coincidence threshold in bps/Hz.
pub const HULL_EPS: f64 = 1e-9;

/// Slack of point-in-region tests. Hull construction drops points lying
/// within `HULL_EPS` of the boundary, so membership uses the same resolution.
const INSIDE_EPS: f64 = HULL_EPS;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    pub const ORIGIN: RatePair = RatePair { r1: 0.0, r2: 0.0 };

    pub fn new(r1: f64, r2: f64) -> Self {
        Self { r1, r2 }
    }

    pub fn sum(&self) -> f64 {
        self.r1 + self.r2
    }

    fn sub(self, o: RatePair) -> RatePair {
        RatePair::new(self.r1 - o.r1, self.r2 - o.r2)
    }

    fn norm(self) -> f64 {
        self.r1.hypot(self.r2)
    }

    fn cross(self, o: RatePair) -> f64 {
        self.r1 * o.r2 - self.r2 * o.r1
    }

    fn dot(self, o: RatePair) -> f64 {
        self.r1 * o.r1 + self.r2 * o.r2
    }
}

/// Individual caps and sum-rate cap of a two-user MAC for one channel state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pentagon {
    pub cap1: f64,
    pub cap2: f64,
    pub cap_sum: f64,
}

impl Pentagon {
    pub fn new(cap1: f64, cap2: f64, cap_sum: f64) -> Self {
        Self { cap1, cap2, cap_sum }
    }

    /// Pentagon of a Gaussian MAC with received SNRs `snr1`, `snr2`.
    pub fn from_snrs(snr1: f64, snr2: f64) -> Self {
        Self {
            cap1: (1.0 + snr1).log2(),
            cap2: (1.0 + snr2).log2(),
            cap_sum: (1.0 + snr1 + snr2).log2(),
        }
    }

    /// The two dominant corners `(R1 max, rest)` and `(rest, R2 max)`.
    pub fn corners(&self) -> [RatePair; 2] {
        let c1 = self.cap1.max(0.0);
        let c2 = self.cap2.max(0.0);
        let cs = self.cap_sum.max(0.0).min(c1 + c2);
        let top = c2.min(cs);
        let right = c1.min(cs);
        [
            RatePair::new(right, (cs - right).clamp(0.0, c2)),
            RatePair::new((cs - top).clamp(0.0, c1), top),
        ]
    }

    pub fn region(&self) -> RateRegion {
        pentagon_region(self)
    }

    /// True when `self` is coordinate-wise no larger than `other` within `tol`.
    pub fn dominated_by(&self, other: &Pentagon, tol: f64) -> bool {
        self.cap1 <= other.cap1 + tol
            && self.cap2 <= other.cap2 + tol
            && self.cap_sum.min(self.cap1 + self.cap2) <= other.cap_sum.min(other.cap1 + other.cap2) + tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRegion {
    vertices: Vec<RatePair>,
}

impl RateRegion {
    /// Boundary chain from `(0, max r2)` to `(max r1, 0)`.
    pub fn vertices(&self) -> &[RatePair] {
        &self.vertices
    }

    pub fn max_r1(&self) -> f64 {
        self.vertices.last().map_or(0.0, |v| v.r1)
    }

    pub fn max_r2(&self) -> f64 {
        self.vertices.first().map_or(0.0, |v| v.r2)
    }

    /// Largest `r1 + r2` over the region.
    pub fn max_sum_rate(&self) -> f64 {
        self.vertices.iter().map(RatePair::sum).fold(0.0, f64::max)
    }

    /// Builds a region from arbitrary achievable points (the dominant hull of
    /// the points, their axis projections and the origin).
    pub fn from_points(points: &[RatePair]) -> Result<Self> {
        convex_hull_union(&[], points)
    }

    /// Convex polygon ring, clockwise, closed through the origin.
    fn ring(&self) -> Vec<RatePair> {
        let mut ring = self.vertices.clone();
        if ring.last() != Some(&RatePair::ORIGIN) {
            ring.push(RatePair::ORIGIN);
        }
        ring
    }

    /// Point membership with `tol` slack in each coordinate.
    pub fn contains_point(&self, p: RatePair, tol: f64) -> bool {
        let q = RatePair::new((p.r1 - tol).max(0.0), (p.r2 - tol).max(0.0));
        if p.r1 < -tol - INSIDE_EPS || p.r2 < -tol - INSIDE_EPS {
            return false;
        }
        if q.r1 > self.max_r1() + INSIDE_EPS || q.r2 > self.max_r2() + INSIDE_EPS {
            return false;
        }
        let ring = self.ring();
        let n = ring.len();
        (0..n).all(|i| {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            let edge = b.sub(a);
            let len = edge.norm();
            // clockwise ring: interior lies to the right of every edge
            len == 0.0 || edge.cross(q.sub(a)) <= INSIDE_EPS * len
        })
    }

    /// Euclidean distance from `p` to the region (0 inside).
    pub fn distance_to(&self, p: RatePair) -> f64 {
        if self.contains_point(p, 0.0) {
            return 0.0;
        }
        let ring = self.ring();
        let n = ring.len();
        (0..n)
            .map(|i| segment_distance(p, ring[i], ring[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Boundary rows `(r1, r2)` from `(0, max r2)` to `(max r1, 0)`.
    pub fn to_csv_rows(&self) -> Vec<(f64, f64)> {
        self.vertices.iter().map(|v| (v.r1, v.r2)).collect()
    }
}

fn segment_distance(p: RatePair, a: RatePair, b: RatePair) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.sub(a).norm();
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.sub(RatePair::new(a.r1 + t * ab.r1, a.r2 + t * ab.r2)).norm()
}

/// `{(R1,R2) >= 0 : R1 <= cap1, R2 <= cap2, R1 + R2 <= min(cap_sum, cap1 + cap2)}`.
pub fn pentagon_region(p: &Pentagon) -> RateRegion {
    dominant_chain(p.corners().to_vec())
}

/// Dominant boundary of the convex hull of all `regions` and `extra_points`
/// (with axis projections and the origin).
pub fn convex_hull_union(regions: &[RateRegion], extra_points: &[RatePair]) -> Result<RateRegion> {
    if regions.is_empty() && extra_points.is_empty() {
        return Err(Error::EmptyInput("convex_hull_union needs at least one region or point"));
    }
    let mut points: Vec<RatePair> = regions
        .iter()
        .flat_map(|r| r.vertices.iter().copied())
        .collect();
    for p in extra_points {
        if !(p.r1.is_finite() && p.r2.is_finite()) {
            return Err(Error::Domain(format!("non-finite rate pair {p:?}")));
        }
        points.push(RatePair::new(p.r1.max(0.0), p.r2.max(0.0)));
    }
    Ok(dominant_chain(points))
}

/// Upper monotone chain of `points` plus their axis projections.
fn dominant_chain(mut points: Vec<RatePair>) -> RateRegion {
    let x_max = points.iter().map(|p| p.r1).fold(0.0, f64::max);
    let y_max = points.iter().map(|p| p.r2).fold(0.0, f64::max);
    points.push(RatePair::new(0.0, y_max));
    points.push(RatePair::new(x_max, 0.0));
    // r1 ascending, r2 descending: the chain then starts at (0, y_max) and ends at (x_max, 0).
    points.sort_by(|a, b| a.r1.total_cmp(&b.r1).then(b.r2.total_cmp(&a.r2)));
    points.dedup_by(|b, a| (a.r1 - b.r1).abs() <= HULL_EPS && (a.r2 - b.r2).abs() <= HULL_EPS);

    let mut chain: Vec<RatePair> = Vec::with_capacity(points.len());
    for p in points {
        while chain.len() >= 2 {
            let a = chain[chain.len() - 2];
            let b = chain[chain.len() - 1];
            let ac = p.sub(a);
            let len = ac.norm();
            // height of b above the line a -> p
            let height = if len == 0.0 { 0.0 } else { ac.cross(b.sub(a)) / len };
            if height <= HULL_EPS {
                chain.pop();
            } else {
                break;
            }
        }
        chain.push(p);
    }
    // dedup may have replaced the exact axis end points by a near neighbour
    if let Some(first) = chain.first_mut() {
        first.r1 = 0.0;
    }
    if let Some(last) = chain.last_mut() {
        last.r2 = 0.0;
    }
    RateRegion { vertices: chain }
}

/// True iff every vertex of `inner` lies in `outer` enlarged by `tol` in each coordinate.
pub fn contains(outer: &RateRegion, inner: &RateRegion, tol: f64) -> Result<bool> {
    if tol < 0.0 {
        return Err(Error::NegativeTolerance(tol));
    }
    Ok(inner.vertices.iter().all(|&v| outer.contains_point(v, tol)))
}

/// Shoelace area of the region, axes included.
pub fn region_area(r: &RateRegion) -> f64 {
    let ring = r.ring();
    let n = ring.len();
    let twice: f64 = (0..n).map(|i| ring[i].cross(ring[(i + 1) % n])).sum();
    twice.abs() / 2.0
}

/// Hausdorff distance between two regions. For convex polygons the
/// supremum is attained at a vertex of one of them.
pub fn hausdorff_distance(a: &RateRegion, b: &RateRegion) -> f64 {
    let one_way = |x: &RateRegion, y: &RateRegion| {
        x.ring().iter().map(|&v| y.distance_to(v)).fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Minkowski average `(1/N) sum_i C_i` of regions, computed by merging the
/// boundary edges of all regions in order of decreasing slope angle.
pub fn minkowski_average(regions: &[RateRegion]) -> Result<RateRegion> {
    if regions.is_empty() {
        return Err(Error::EmptyInput("minkowski_average needs at least one region"));
    }
    let n = regions.len() as f64;
    let mut edges: Vec<RatePair> = regions
        .iter()
        .flat_map(|r| r.vertices.windows(2).map(|w| w[1].sub(w[0])))
        .collect();
    // edge directions run from angle 0 (rightwards) down to -pi/2 (downwards)
    edges.sort_by(|a, b| {
        let ta = a.r2.atan2(a.r1);
        let tb = b.r2.atan2(b.r1);
        tb.total_cmp(&ta)
    });
    let start = regions.iter().map(RateRegion::max_r2).sum::<f64>();
    let mut cursor = RatePair::new(0.0, start);
    let mut points = vec![cursor];
    for e in edges {
        cursor = RatePair::new(cursor.r1 + e.r1, cursor.r2 + e.r2);
        points.push(cursor);
    }
    let scaled: Vec<RatePair> = points
        .into_iter()
        .map(|p| RatePair::new((p.r1 / n).max(0.0), (p.r2 / n).max(0.0)))
        .collect();
    Ok(dominant_chain(scaled))
}
