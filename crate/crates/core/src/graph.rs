//! Observations, scanning windows, and spanning graphs.
//!
//! A window of 2n observations is split at an index k into a left block of k
//! points and a right block of 2n-k points. Each block is summarized by the
//! squared-distance spanning weight of a graph built on it:
//!
//! - `Complete` (cg): sum of squared Euclidean distances over all pairs,
//! - `Mst`: weight of the Euclidean minimum spanning tree (Kruskal),
//! - `Nng`: weight of the 1-nearest-neighbor graph, one out-edge per node
//!   (see [`NNG_COUNTS_MUTUAL_PAIRS_TWICE`]).
//!
//! Complete-graph weights admit the identity
//! `sum_{i<j} |y_i - y_j|^2 = m * sum_i |z_i|^2 - |sum_i z_i|^2` for any
//! common shift z_i = y_i - c, which `CgScan` exploits to evaluate every
//! split of a window in O(d) after an O(m d) pass. The shift c is the first
//! observation of the window, which keeps the cancellation bounded by the
//! in-window spread regardless of where the data sits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// ---- observations ----

/// One multivariate observation; construction guarantees finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    values: Vec<f64>,
}

impl Observation {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Degenerate("observation has no coordinates"));
        }
        for (coord, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index: 0, coord });
            }
        }
        Ok(Observation { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Squared Euclidean distance between two observations of equal dimension.
pub fn squared_distance(a: &Observation, b: &Observation) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut acc = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        let diff = x - y;
        acc += diff * diff;
    }
    Ok(acc)
}

/// An even-length run of observations anchored at an integer time.
///
/// The window covers times `anchor .. anchor + 2n - 1`; its center for
/// event reporting is `anchor + n`.
#[derive(Debug, Clone)]
pub struct ObservationWindow {
    observations: Vec<Observation>,
    anchor: i64,
}

impl ObservationWindow {
    pub fn new(observations: Vec<Observation>, anchor: i64) -> Result<Self> {
        check_window(&observations)?;
        Ok(ObservationWindow {
            observations,
            anchor,
        })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Window half-length n (the window holds 2n observations).
    pub fn half_len(&self) -> usize {
        self.observations.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.observations[0].dim()
    }

    pub fn anchor(&self) -> i64 {
        self.anchor
    }

    /// Center time used in detection events: anchor + n.
    pub fn center(&self) -> i64 {
        self.anchor + self.half_len() as i64
    }
}

/// Validates an even-length window of uniform dimension.
pub(crate) fn check_window(points: &[Observation]) -> Result<()> {
    if points.len() < 4 || points.len() % 2 != 0 {
        return Err(Error::BadWindowLength { got: points.len() });
    }
    check_uniform_dim(points)
}

pub(crate) fn check_uniform_dim(points: &[Observation]) -> Result<()> {
    let d = points[0].dim();
    for p in points {
        if p.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.dim(),
            });
        }
    }
    Ok(())
}

/// Valid split indices for a window of 2n points: {2, ..., 2n-2}.
pub fn split_range(half_len: usize) -> std::ops::RangeInclusive<usize> {
    2..=(2 * half_len - 2)
}

fn check_split(points: &[Observation], k: usize) -> Result<()> {
    check_window(points)?;
    let max = points.len() - 2;
    if k < 2 || k > max {
        return Err(Error::SplitOutOfRange { k, max });
    }
    Ok(())
}

// ---- graph kinds and built graphs ----

/// Graph family used to summarize a block of observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphKind {
    #[serde(rename = "cg")]
    Complete,
    #[serde(rename = "mst")]
    Mst,
    #[serde(rename = "nng")]
    Nng,
}

impl GraphKind {
    pub const ALL: [GraphKind; 3] = [GraphKind::Complete, GraphKind::Mst, GraphKind::Nng];

    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Complete => "cg",
            GraphKind::Mst => "mst",
            GraphKind::Nng => "nng",
        }
    }
}

impl std::fmt::Display for GraphKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cg" => Ok(GraphKind::Complete),
            "mst" => Ok(GraphKind::Mst),
            "nng" => Ok(GraphKind::Nng),
            other => Err(Error::domain(format!(
                "unknown graph kind {other:?} (expected cg, mst, or nng)"
            ))),
        }
    }
}

/// Nearest-neighbor graph convention: keep one edge per node (its out-edge),
/// so a mutual pair of nearest neighbors contributes twice to the spanning
/// weight. The per-node sum is what gives the center statistic its defining
/// behavior under a strong change: the pure blocks of a changed window
/// reproduce the full-window sum exactly while resampled blocks, where each
/// point searches fewer same-regime candidates, strictly exceed it. With
/// mutual pairs collapsed to a single edge that ordering breaks and strong
/// changes become invisible to the nearest-neighbor test.
pub const NNG_COUNTS_MUTUAL_PAIRS_TWICE: bool = true;

/// Undirected edge with i < j and squared-distance weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// A built graph together with its spanning weight (sum of edge weights).
#[derive(Debug, Clone)]
pub struct GraphSpanning {
    pub kind: GraphKind,
    pub edges: Vec<Edge>,
    pub weight: f64,
}

/// Builds the requested graph over the given points (at least 2 required).
pub fn build_graph(points: &[Observation], kind: GraphKind) -> Result<GraphSpanning> {
    if points.len() < 2 {
        return Err(Error::TooFewObservations {
            min: 2,
            got: points.len(),
        });
    }
    check_uniform_dim(points)?;
    let dm = DistanceMatrix::new(points)?;
    let edges = match kind {
        GraphKind::Complete => dm.all_edges(0, points.len()),
        GraphKind::Mst => dm.mst_edges(0, points.len()),
        GraphKind::Nng => dm.nng_edges(0, points.len()),
    };
    let weight = edges.iter().map(|e| e.w).sum();
    Ok(GraphSpanning {
        kind,
        edges,
        weight,
    })
}

// ---- pairwise distance matrix with per-block subgraphs ----

/// Upper-triangle matrix of pairwise squared distances for one window.
///
/// Blocks are index ranges [lo, hi); block edges keep window-relative
/// indices. Shared by the per-split sweeps so MST and NNG work is the
/// distance computation once plus cheap combinatorics per split.
pub(crate) struct DistanceMatrix {
    m: usize,
    w: Vec<f64>,
}

impl DistanceMatrix {
    pub(crate) fn new(points: &[Observation]) -> Result<Self> {
        let m = points.len();
        let mut w = Vec::with_capacity(m * (m - 1) / 2);
        for i in 0..m {
            for j in (i + 1)..m {
                let dist = squared_distance(&points[i], &points[j])?;
                if !dist.is_finite() {
                    return Err(Error::NonFinite { index: j, coord: 0 });
                }
                w.push(dist);
            }
        }
        Ok(DistanceMatrix { m, w })
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < j && j < self.m);
        // Row-major upper triangle: offset of row i is i*m - i*(i+1)/2 - i.
        self.w[i * self.m - i * (i + 1) / 2 + j - i - 1]
    }

    fn all_edges(&self, lo: usize, hi: usize) -> Vec<Edge> {
        let mut edges = Vec::with_capacity((hi - lo) * (hi - lo - 1) / 2);
        for i in lo..hi {
            for j in (i + 1)..hi {
                edges.push(Edge {
                    i,
                    j,
                    w: self.get(i, j),
                });
            }
        }
        edges
    }

    /// Kruskal MST of the block; ties broken by (w, i, j) so the tree and
    /// its summation order are deterministic.
    fn mst_edges(&self, lo: usize, hi: usize) -> Vec<Edge> {
        let size = hi - lo;
        if size < 2 {
            return Vec::new();
        }
        let mut edges = self.all_edges(lo, hi);
        edges.sort_by(|a, b| {
            a.w.partial_cmp(&b.w)
                .expect("finite weights")
                .then(a.i.cmp(&b.i))
                .then(a.j.cmp(&b.j))
        });
        let mut ds = DisjointSet::new(size);
        let mut tree = Vec::with_capacity(size - 1);
        for e in edges {
            if ds.union(e.i - lo, e.j - lo) {
                tree.push(e);
                if tree.len() == size - 1 {
                    break;
                }
            }
        }
        tree
    }

    /// 1-nearest-neighbor graph of the block: every node contributes the
    /// edge to its nearest neighbor (ties toward the lowest index), stored
    /// undirected. Mutual pairs appear once per endpoint unless
    /// `NNG_COUNTS_MUTUAL_PAIRS_TWICE` is off.
    fn nng_edges(&self, lo: usize, hi: usize) -> Vec<Edge> {
        let size = hi - lo;
        if size < 2 {
            return Vec::new();
        }
        let mut pairs = Vec::with_capacity(size);
        for i in lo..hi {
            let mut best_j = usize::MAX;
            let mut best_w = f64::INFINITY;
            for j in lo..hi {
                if j == i {
                    continue;
                }
                let w = self.get(i.min(j), i.max(j));
                if w < best_w {
                    best_w = w;
                    best_j = j;
                }
            }
            pairs.push((i.min(best_j), i.max(best_j)));
        }
        pairs.sort_unstable();
        if !NNG_COUNTS_MUTUAL_PAIRS_TWICE {
            pairs.dedup();
        }
        pairs
            .into_iter()
            .map(|(i, j)| Edge {
                i,
                j,
                w: self.get(i, j),
            })
            .collect()
    }

    pub(crate) fn block_weight(&self, kind: GraphKind, lo: usize, hi: usize) -> f64 {
        if hi - lo < 2 {
            return 0.0;
        }
        let edges = match kind {
            GraphKind::Complete => self.all_edges(lo, hi),
            GraphKind::Mst => self.mst_edges(lo, hi),
            GraphKind::Nng => self.nng_edges(lo, hi),
        };
        edges.iter().map(|e| e.w).sum()
    }

    /// Squared distance between the points selected by slots a and b of
    /// `idx`; repeated indices (bootstrap draws) are true zero-distance
    /// pairs.
    #[inline]
    fn slot_dist(&self, idx: &[usize], a: usize, b: usize) -> f64 {
        let (i, j) = (idx[a], idx[b]);
        if i == j {
            0.0
        } else {
            self.get(i.min(j), i.max(j))
        }
    }

    /// Spanning weight of the graph built on an arbitrary index selection,
    /// taken in slot order. An identity selection of a contiguous range
    /// reproduces `block_weight` exactly, tie-breaking and summation order
    /// included, so resampled and observed evaluations stay comparable.
    pub(crate) fn subset_weight(&self, kind: GraphKind, idx: &[usize]) -> f64 {
        let s = idx.len();
        if s < 2 {
            return 0.0;
        }
        match kind {
            GraphKind::Complete => {
                let mut total = 0.0;
                for a in 0..s {
                    for b in (a + 1)..s {
                        total += self.slot_dist(idx, a, b);
                    }
                }
                total
            }
            GraphKind::Mst => {
                let mut edges = Vec::with_capacity(s * (s - 1) / 2);
                for a in 0..s {
                    for b in (a + 1)..s {
                        edges.push(Edge {
                            i: a,
                            j: b,
                            w: self.slot_dist(idx, a, b),
                        });
                    }
                }
                edges.sort_by(|x, y| {
                    x.w.partial_cmp(&y.w)
                        .expect("finite weights")
                        .then(x.i.cmp(&y.i))
                        .then(x.j.cmp(&y.j))
                });
                let mut ds = DisjointSet::new(s);
                let mut total = 0.0;
                let mut picked = 0usize;
                for e in edges {
                    if ds.union(e.i, e.j) {
                        total += e.w;
                        picked += 1;
                        if picked == s - 1 {
                            break;
                        }
                    }
                }
                total
            }
            GraphKind::Nng => {
                let mut pairs = Vec::with_capacity(s);
                for a in 0..s {
                    let mut best_b = usize::MAX;
                    let mut best_w = f64::INFINITY;
                    for b in 0..s {
                        if b == a {
                            continue;
                        }
                        let w = self.slot_dist(idx, a, b);
                        if w < best_w {
                            best_w = w;
                            best_b = b;
                        }
                    }
                    pairs.push((a.min(best_b), a.max(best_b)));
                }
                pairs.sort_unstable();
                if !NNG_COUNTS_MUTUAL_PAIRS_TWICE {
                    pairs.dedup();
                }
                pairs
                    .into_iter()
                    .map(|(a, b)| self.slot_dist(idx, a, b))
                    .sum()
            }
        }
    }
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins the two classes; false if already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

// ---- complete-graph split scan ----

/// Prefix/suffix accumulator giving every complete-graph block weight of a
/// window in O(d) per split.
pub(crate) struct CgScan {
    m: usize,
    d: usize,
    /// prefix_sum[k] = sum of shifted points z_0..z_{k-1}, flattened.
    prefix_sum: Vec<f64>,
    /// prefix_sq[k] = sum of |z_i|^2 over i < k.
    prefix_sq: Vec<f64>,
    /// suffix_sum[k] = sum of shifted points z_k..z_{m-1}, flattened.
    suffix_sum: Vec<f64>,
    /// suffix_sq[k] = sum of |z_i|^2 over i >= k.
    suffix_sq: Vec<f64>,
}

impl CgScan {
    pub(crate) fn new(points: &[Observation]) -> Result<Self> {
        check_uniform_dim(points)?;
        let m = points.len();
        let d = points[0].dim();
        let origin = points[0].values();
        let mut shifted = vec![0.0; m * d];
        for (i, p) in points.iter().enumerate() {
            for (c, (v, o)) in p.values().iter().zip(origin).enumerate() {
                shifted[i * d + c] = v - o;
            }
        }
        let mut prefix_sum = vec![0.0; (m + 1) * d];
        let mut prefix_sq = vec![0.0; m + 1];
        for i in 0..m {
            let (head, tail) = prefix_sum.split_at_mut((i + 1) * d);
            let prev = &head[i * d..];
            let cur = &mut tail[..d];
            let z = &shifted[i * d..(i + 1) * d];
            let mut sq = 0.0;
            for c in 0..d {
                cur[c] = prev[c] + z[c];
                sq += z[c] * z[c];
            }
            prefix_sq[i + 1] = prefix_sq[i] + sq;
        }
        let mut suffix_sum = vec![0.0; (m + 1) * d];
        let mut suffix_sq = vec![0.0; m + 1];
        for i in (0..m).rev() {
            let (head, tail) = suffix_sum.split_at_mut((i + 1) * d);
            let cur = &mut head[i * d..];
            let next = &tail[..d];
            let z = &shifted[i * d..(i + 1) * d];
            let mut sq = 0.0;
            for c in 0..d {
                cur[c] = next[c] + z[c];
                sq += z[c] * z[c];
            }
            suffix_sq[i] = suffix_sq[i + 1] + sq;
        }
        Ok(CgScan {
            m,
            d,
            prefix_sum,
            prefix_sq,
            suffix_sum,
            suffix_sq,
        })
    }

    /// Complete-graph weight of the block of the first k points.
    pub(crate) fn left_weight(&self, k: usize) -> f64 {
        debug_assert!(k <= self.m);
        let p = &self.prefix_sum[k * self.d..(k + 1) * self.d];
        let norm_sq: f64 = p.iter().map(|v| v * v).sum();
        (k as f64 * self.prefix_sq[k] - norm_sq).max(0.0)
    }

    /// Complete-graph weight of the block of points k..m.
    pub(crate) fn right_weight(&self, k: usize) -> f64 {
        debug_assert!(k <= self.m);
        let s = &self.suffix_sum[k * self.d..(k + 1) * self.d];
        let norm_sq: f64 = s.iter().map(|v| v * v).sum();
        ((self.m - k) as f64 * self.suffix_sq[k] - norm_sq).max(0.0)
    }

    pub(crate) fn full_weight(&self) -> f64 {
        self.left_weight(self.m)
    }
}

// ---- window split summaries ----

/// Spanning weights of the left block, right block, and full window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanningTriplet {
    pub left: f64,
    pub right: f64,
    pub full: f64,
}

/// Computes (left, right, full) spanning weights for the split at k.
///
/// The window must have even length 2n >= 4 and k must lie in
/// {2, ..., 2n-2}. Complete-graph weights use the shifted-sum identity;
/// MST and NNG are built per block from pairwise distances.
pub fn spanning_triplet(
    points: &[Observation],
    k: usize,
    kind: GraphKind,
) -> Result<SpanningTriplet> {
    check_split(points, k)?;
    let m = points.len();
    match kind {
        GraphKind::Complete => {
            let scan = CgScan::new(points)?;
            Ok(SpanningTriplet {
                left: scan.left_weight(k),
                right: scan.right_weight(k),
                full: scan.full_weight(),
            })
        }
        GraphKind::Mst | GraphKind::Nng => {
            let dm = DistanceMatrix::new(points)?;
            Ok(SpanningTriplet {
                left: dm.block_weight(kind, 0, k),
                right: dm.block_weight(kind, k, m),
                full: dm.block_weight(kind, 0, m),
            })
        }
    }
}

/// Sum of squared distances over all cross pairs (i < k <= j).
///
/// For the complete graph this equals full - left - right up to rounding.
pub fn gap_spanning(points: &[Observation], k: usize) -> Result<f64> {
    check_split(points, k)?;
    let mut acc = 0.0;
    for i in 0..k {
        for j in k..points.len() {
            acc += squared_distance(&points[i], &points[j])?;
        }
    }
    Ok(acc)
}
