//! Finite metric spaces, point sets, neighborhoods, and measured Lipschitz
//! constants. Everything else in the crate runs on these types.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used for comparisons on spaces whose distances are not all integers.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// Above this many points the triangle check samples triples by default.
pub const EXHAUSTIVE_TRIPLE_LIMIT: usize = 300;

/// Seed used when the default triangle check samples.
pub const DEFAULT_TRIPLE_SEED: u64 = 0x5eed_c0a5;

const DEFAULT_TRIPLE_SAMPLES: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("distance matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("distance d({a},{b}) = {value} is not a finite nonnegative number")]
    InvalidEntry { a: usize, b: usize, value: f64 },
    #[error("nonzero diagonal: d({a},{a}) = {value}")]
    NonZeroDiagonal { a: usize, value: f64 },
    #[error("asymmetric: d({a},{b}) = {ab} but d({b},{a}) = {ba}")]
    Asymmetric { a: usize, b: usize, ab: f64, ba: f64 },
    #[error("distinct points {a} and {b} at distance zero")]
    NotPositive { a: usize, b: usize },
    #[error("triangle inequality fails: d({a},{c}) = {ac} > d({a},{b}) + d({b},{c}) = {via}")]
    Triangle { a: usize, b: usize, c: usize, ac: f64, via: f64 },
    #[error("graph is disconnected: no path from 0 to {unreachable}")]
    Disconnected { unreachable: usize },
    #[error("edge ({a},{b}) has invalid weight {weight}")]
    BadEdge { a: usize, b: usize, weight: f64 },
    #[error("point {point} out of range for a space of {len} points")]
    OutOfRange { point: usize, len: usize },
    #[error("set distance of an empty set")]
    EmptySet,
    #[error("maps have different domains")]
    DomainMismatch,
    #[error("{0}")]
    Invalid(String),
}

/// How a space's distances were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ExplicitMatrix,
    GraphShortestPath,
    WordMetricBall,
    FreeProduct,
    Hyperbolization,
}

/// Triangle-inequality coverage for [`FiniteMetricSpace::verify_axioms`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TripleCheck {
    Exhaustive,
    Sampled { triples: usize, seed: u64 },
}

impl TripleCheck {
    /// Exhaustive up to [`EXHAUSTIVE_TRIPLE_LIMIT`] points, seeded sampling above.
    pub fn default_for(n: usize) -> Self {
        if n <= EXHAUSTIVE_TRIPLE_LIMIT {
            TripleCheck::Exhaustive
        } else {
            TripleCheck::Sampled { triples: DEFAULT_TRIPLE_SAMPLES, seed: DEFAULT_TRIPLE_SEED }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub points: usize,
    pub pairs_checked: usize,
    pub triples_checked: u64,
    pub check: TripleCheck,
    pub tolerance: f64,
}

/// A finite metric space with a dense distance table.
///
/// Immutable after construction. Every constructor verifies the metric
/// axioms, so a value of this type is always a metric space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    labels: Option<Vec<String>>,
    dist: Vec<f64>,
    provenance: Provenance,
    integral: bool,
}

impl FiniteMetricSpace {
    /// Builds a space from an explicit square matrix.
    pub fn from_matrix(matrix: &[Vec<f64>]) -> Result<Self, MetricError> {
        let n = matrix.len();
        let mut dist = Vec::with_capacity(n * n);
        for (row, r) in matrix.iter().enumerate() {
            if r.len() != n {
                return Err(MetricError::NotSquare { row, len: r.len(), expected: n });
            }
            dist.extend_from_slice(r);
        }
        Self::from_distances(n, dist, Provenance::ExplicitMatrix, None)
    }

    /// Shortest-path metric of a connected weighted graph.
    pub fn from_graph(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, MetricError> {
        let dist = shortest_paths(n, edges)?;
        Self::from_distances(n, dist, Provenance::GraphShortestPath, None)
    }

    /// Wraps a row-major distance table and verifies it with the default triple policy.
    pub fn from_distances(
        n: usize,
        dist: Vec<f64>,
        provenance: Provenance,
        labels: Option<Vec<String>>,
    ) -> Result<Self, MetricError> {
        let space = Self::from_distances_unverified(n, dist, provenance, labels)?;
        space.verify_axioms(TripleCheck::default_for(n))?;
        Ok(space)
    }

    pub(crate) fn from_distances_unverified(
        n: usize,
        dist: Vec<f64>,
        provenance: Provenance,
        labels: Option<Vec<String>>,
    ) -> Result<Self, MetricError> {
        if dist.len() != n * n {
            return Err(MetricError::Invalid(format!(
                "distance table has {} entries, expected {}",
                dist.len(),
                n * n
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(MetricError::Invalid(format!("{} labels for {} points", l.len(), n)));
            }
        }
        for a in 0..n {
            for b in 0..n {
                let v = dist[a * n + b];
                if !v.is_finite() || v < 0.0 {
                    return Err(MetricError::InvalidEntry { a, b, value: v });
                }
            }
        }
        let integral = dist.iter().all(|d| d.fract() == 0.0);
        Ok(FiniteMetricSpace { n, labels, dist, provenance, integral })
    }

    /// Path graph `0 - 1 - ... - (n-1)` with unit edges.
    pub fn path(n: usize) -> Result<Self, MetricError> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i, 1.0)).collect();
        Self::from_graph(n, &edges)
    }

    /// Cycle graph with unit edges.
    pub fn cycle(n: usize) -> Result<Self, MetricError> {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i, 1.0)).collect();
        if n > 2 {
            edges.push((n - 1, 0, 1.0));
        }
        Self::from_graph(n, &edges)
    }

    /// `width x height` grid graph; point `(i, j)` has index `i * height + j`.
    pub fn grid(width: usize, height: usize) -> Result<Self, MetricError> {
        let idx = |i: usize, j: usize| i * height + j;
        let mut edges = Vec::new();
        for i in 0..width {
            for j in 0..height {
                if i + 1 < width {
                    edges.push((idx(i, j), idx(i + 1, j), 1.0));
                }
                if j + 1 < height {
                    edges.push((idx(i, j), idx(i, j + 1), 1.0));
                }
            }
        }
        let labels = (0..width)
            .flat_map(|i| (0..height).map(move |j| format!("({i},{j})")))
            .collect();
        Ok(Self::from_graph(width * height, &edges)?.with_labels(labels))
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.n, "label count must match point count");
        self.labels = Some(labels);
        self
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.n + b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.dist[a * self.n..(a + 1) * self.n]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, a: usize) -> String {
        match &self.labels {
            Some(l) => l[a].clone(),
            None => a.to_string(),
        }
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// True when every distance is an integer, so comparisons can be exact.
    pub fn is_integral(&self) -> bool {
        self.integral
    }

    /// Comparison slack: zero for integral spaces.
    pub fn tolerance(&self) -> f64 {
        if self.integral {
            0.0
        } else {
            FLOAT_TOLERANCE
        }
    }

    pub fn all_points(&self) -> PointSet {
        PointSet((0..self.n).collect())
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Minimum distance between distinct points, `None` for fewer than two points.
    pub fn min_positive_distance(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for a in 0..self.n {
            for b in a + 1..self.n {
                let d = self.dist(a, b);
                best = Some(best.map_or(d, |m| m.min(d)));
            }
        }
        best
    }

    /// Copy of the subspace on `set`, with the index map back into `self`.
    pub fn subspace(&self, set: &PointSet) -> (FiniteMetricSpace, Vec<usize>) {
        let idx: Vec<usize> = set.iter().collect();
        let m = idx.len();
        let mut dist = Vec::with_capacity(m * m);
        for &a in &idx {
            for &b in &idx {
                dist.push(self.dist(a, b));
            }
        }
        let labels = self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i].clone()).collect());
        let sub = FiniteMetricSpace {
            n: m,
            labels,
            dist,
            provenance: self.provenance,
            integral: self.integral,
        };
        (sub, idx)
    }

    /// Checks zero diagonal, symmetry, positivity and the triangle inequality.
    ///
    /// Comparisons are exact on integral spaces and use [`FLOAT_TOLERANCE`]
    /// otherwise. The triangle check is exhaustive or seeded-sampled per `check`.
    pub fn verify_axioms(&self, check: TripleCheck) -> Result<AxiomReport, MetricError> {
        let n = self.n;
        let tol = self.tolerance();
        for a in 0..n {
            let v = self.dist(a, a);
            if v != 0.0 {
                return Err(MetricError::NonZeroDiagonal { a, value: v });
            }
            for b in a + 1..n {
                let ab = self.dist(a, b);
                let ba = self.dist(b, a);
                if (ab - ba).abs() > tol {
                    return Err(MetricError::Asymmetric { a, b, ab, ba });
                }
                if ab <= 0.0 {
                    return Err(MetricError::NotPositive { a, b });
                }
            }
        }
        let triples = match check {
            TripleCheck::Exhaustive => {
                let failure = (0..n).into_par_iter().find_map_first(|a| {
                    let ra = self.row(a);
                    for b in 0..n {
                        let ab = ra[b];
                        let rb = self.row(b);
                        for c in 0..n {
                            if ra[c] > ab + rb[c] + tol {
                                return Some((a, b, c));
                            }
                        }
                    }
                    None
                });
                if let Some((a, b, c)) = failure {
                    return Err(self.triangle_error(a, b, c));
                }
                (n as u64).pow(3)
            }
            TripleCheck::Sampled { triples, seed } => {
                if n > 0 {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    for _ in 0..triples {
                        let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                        if self.dist(a, c) > self.dist(a, b) + self.dist(b, c) + tol {
                            return Err(self.triangle_error(a, b, c));
                        }
                    }
                }
                triples as u64
            }
        };
        Ok(AxiomReport {
            points: n,
            pairs_checked: n * n.saturating_sub(1) / 2,
            triples_checked: triples,
            check,
            tolerance: tol,
        })
    }

    fn triangle_error(&self, a: usize, b: usize, c: usize) -> MetricError {
        MetricError::Triangle {
            a,
            b,
            c,
            ac: self.dist(a, c),
            via: self.dist(a, b) + self.dist(b, c),
        }
    }

    /// `Err(OutOfRange)` unless `p` indexes a point.
    pub fn check_point(&self, p: usize) -> Result<(), MetricError> {
        if p < self.n {
            Ok(())
        } else {
            Err(MetricError::OutOfRange { point: p, len: self.n })
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All-pairs shortest paths by Dijkstra from every source.
fn shortest_paths(n: usize, edges: &[(usize, usize, f64)]) -> Result<Vec<f64>, MetricError> {
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(a, b, w) in edges {
        if a >= n || b >= n || !(w > 0.0) || !w.is_finite() {
            return Err(MetricError::BadEdge { a, b, weight: w });
        }
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut d = vec![f64::INFINITY; n];
            d[s] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(HeapItem(0.0, s));
            while let Some(HeapItem(du, u)) = heap.pop() {
                if du > d[u] {
                    continue;
                }
                for &(v, w) in &adj[u] {
                    let nd = du + w;
                    if nd < d[v] {
                        d[v] = nd;
                        heap.push(HeapItem(nd, v));
                    }
                }
            }
            d
        })
        .collect();
    if let Some(row) = rows.first() {
        if let Some(unreachable) = row.iter().position(|d| d.is_infinite()) {
            return Err(MetricError::Disconnected { unreachable });
        }
    }
    Ok(rows.into_iter().flatten().collect())
}

/// A subset of a finite metric space, stored as a strictly increasing index list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointSet(Vec<usize>);

impl PointSet {
    /// Sorts and deduplicates.
    pub fn new(points: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = points.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        PointSet(v)
    }

    /// Accepts only strictly increasing indices below `n`.
    pub fn from_sorted(points: Vec<usize>, n: usize) -> Result<Self, MetricError> {
        for w in points.windows(2) {
            if w[0] >= w[1] {
                return Err(MetricError::Invalid(format!(
                    "point set not strictly increasing at {} >= {}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(&last) = points.last() {
            if last >= n {
                return Err(MetricError::OutOfRange { point: last, len: n });
            }
        }
        Ok(PointSet(points))
    }

    pub fn singleton(p: usize) -> Self {
        PointSet(vec![p])
    }

    pub fn empty() -> Self {
        PointSet(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, p: usize) -> bool {
        self.0.binary_search(&p).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        PointSet::new(self.iter().chain(other.iter()))
    }

    pub fn intersection(&self, other: &PointSet) -> PointSet {
        PointSet(self.iter().filter(|&p| other.contains(p)).collect())
    }

    pub fn difference(&self, other: &PointSet) -> PointSet {
        PointSet(self.iter().filter(|&p| !other.contains(p)).collect())
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.iter().all(|p| other.contains(p))
    }

    pub fn intersects(&self, other: &PointSet) -> bool {
        let (small, big) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.iter().any(|p| big.contains(p))
    }

    pub fn map(&self, f: impl Fn(usize) -> usize) -> PointSet {
        PointSet::new(self.iter().map(f))
    }
}

impl FromIterator<usize> for PointSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        PointSet::new(iter)
    }
}

/// `{x : d(x, center) <= radius}`.
pub fn ball(space: &FiniteMetricSpace, center: usize, radius: f64) -> PointSet {
    let tol = space.tolerance();
    PointSet(
        space
            .row(center)
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= radius + tol)
            .map(|(i, _)| i)
            .collect(),
    )
}

/// Distance from a point to a set; `+inf` for the empty set.
pub fn point_set_distance(space: &FiniteMetricSpace, x: usize, set: &PointSet) -> f64 {
    let row = space.row(x);
    set.iter().map(|p| row[p]).fold(f64::INFINITY, f64::min)
}

/// `min d(a, b)` over `a in A`, `b in B`.
pub fn set_distance(space: &FiniteMetricSpace, a: &PointSet, b: &PointSet) -> Result<f64, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptySet);
    }
    if a.intersects(b) {
        return Ok(0.0);
    }
    Ok(a.iter().map(|x| point_set_distance(space, x, b)).fold(f64::INFINITY, f64::min))
}

/// Closed `r`-neighborhood `{x : d(x, A) <= r}`.
pub fn neighborhood(space: &FiniteMetricSpace, a: &PointSet, r: f64) -> PointSet {
    neighborhood_within(space, a, r, None)
}

/// Closed `r`-neighborhood restricted to `universe` (when given).
pub fn neighborhood_within(
    space: &FiniteMetricSpace,
    a: &PointSet,
    r: f64,
    universe: Option<&PointSet>,
) -> PointSet {
    let tol = space.tolerance();
    let candidates: Box<dyn Iterator<Item = usize>> = match universe {
        Some(u) => Box::new(u.iter()),
        None => Box::new(0..space.len()),
    };
    PointSet(
        candidates
            .filter(|&x| a.contains(x) || point_set_distance(space, x, a) <= r + tol)
            .collect(),
    )
}

/// Diameter of a subset; 0 for empty and singleton sets.
pub fn set_diameter(space: &FiniteMetricSpace, set: &PointSet) -> f64 {
    let pts = set.as_slice();
    let mut d: f64 = 0.0;
    for (i, &a) in pts.iter().enumerate() {
        let row = space.row(a);
        for &b in &pts[i + 1..] {
            d = d.max(row[b]);
        }
    }
    d
}

/// A codomain for [`MetricMap`].
pub trait Target {
    type Point: Clone + std::fmt::Debug;
    fn distance(&self, a: &Self::Point, b: &Self::Point) -> f64;
}

impl Target for FiniteMetricSpace {
    type Point = usize;
    fn distance(&self, a: &usize, b: &usize) -> f64 {
        self.dist(*a, *b)
    }
}

/// The real line with `|a - b|`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RealLine;

impl Target for RealLine {
    type Point = f64;
    fn distance(&self, a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }
}

/// Product of two targets with the metric `sqrt(d_1^2 + d_2^2)`.
#[derive(Debug, Clone)]
pub struct Product<A, B>(pub Arc<A>, pub Arc<B>);

impl<A: Target, B: Target> Target for Product<A, B> {
    type Point = (A::Point, B::Point);
    fn distance(&self, a: &Self::Point, b: &Self::Point) -> f64 {
        let d1 = self.0.distance(&a.0, &b.0);
        let d2 = self.1.distance(&a.1, &b.1);
        (d1 * d1 + d2 * d2).sqrt()
    }
}

/// A total map from a finite metric space into a [`Target`].
#[derive(Debug, Clone)]
pub struct MetricMap<T: Target> {
    domain: Arc<FiniteMetricSpace>,
    codomain: Arc<T>,
    images: Vec<T::Point>,
    declared_lipschitz: Option<f64>,
}

impl<T: Target> MetricMap<T> {
    pub fn new(
        domain: Arc<FiniteMetricSpace>,
        codomain: Arc<T>,
        images: Vec<T::Point>,
    ) -> Result<Self, MetricError> {
        if images.len() != domain.len() {
            return Err(MetricError::Invalid(format!(
                "map assigns {} images on a domain of {} points",
                images.len(),
                domain.len()
            )));
        }
        Ok(MetricMap { domain, codomain, images, declared_lipschitz: None })
    }

    pub fn with_declared_lipschitz(mut self, lambda: f64) -> Self {
        self.declared_lipschitz = Some(lambda);
        self
    }

    pub fn domain(&self) -> &Arc<FiniteMetricSpace> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<T> {
        &self.codomain
    }

    pub fn image(&self, x: usize) -> &T::Point {
        &self.images[x]
    }

    pub fn images(&self) -> &[T::Point] {
        &self.images
    }

    pub fn declared_lipschitz(&self) -> Option<f64> {
        self.declared_lipschitz
    }

    /// Image distance `d(f(x), f(y))`.
    pub fn image_distance(&self, x: usize, y: usize) -> f64 {
        self.codomain.distance(&self.images[x], &self.images[y])
    }

    /// Checks the declared constant (if any) against the exact measured one.
    pub fn check_declared(&self) -> Option<bool> {
        let lambda = self.declared_lipschitz?;
        let measured = measured_lipschitz(self, PairBudget::All).constant;
        Some(measured <= lambda * (1.0 + FLOAT_TOLERANCE) + FLOAT_TOLERANCE)
    }
}

impl MetricMap<FiniteMetricSpace> {
    /// Preimage of a set of codomain points.
    pub fn preimage(&self, set: &PointSet) -> PointSet {
        PointSet((0..self.domain.len()).filter(|&x| set.contains(self.images[x])).collect())
    }

    /// `f(X)` as a point set of the codomain.
    pub fn image_set(&self) -> PointSet {
        PointSet::new(self.images.iter().copied())
    }
}

/// How many domain pairs [`measured_lipschitz`] inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairBudget {
    All,
    Sampled { pairs: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzMeasurement {
    pub constant: f64,
    pub witness: Option<(usize, usize)>,
    pub pairs_checked: usize,
    pub seed: Option<u64>,
}

/// Largest ratio `d(f(x), f(y)) / d(x, y)` over distinct pairs.
///
/// With [`PairBudget::All`] this is the exact Lipschitz constant of the map.
/// Ties keep the lexicographically first witness pair.
pub fn measured_lipschitz<T: Target>(map: &MetricMap<T>, budget: PairBudget) -> LipschitzMeasurement {
    let n = map.domain.len();
    let ratio = |x: usize, y: usize| map.image_distance(x, y) / map.domain.dist(x, y);
    let mut best = 0.0;
    let mut witness = None;
    let consider = |x: usize, y: usize, best: &mut f64, witness: &mut Option<(usize, usize)>| {
        let r = ratio(x, y);
        if r > *best {
            *best = r;
            *witness = Some((x, y));
        }
    };
    match budget {
        PairBudget::All => {
            for x in 0..n {
                for y in x + 1..n {
                    consider(x, y, &mut best, &mut witness);
                }
            }
            LipschitzMeasurement {
                constant: best,
                witness,
                pairs_checked: n * n.saturating_sub(1) / 2,
                seed: None,
            }
        }
        PairBudget::Sampled { pairs, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut checked = 0;
            if n >= 2 {
                for _ in 0..pairs {
                    let x = rng.gen_range(0..n);
                    let y = rng.gen_range(0..n);
                    if x != y {
                        consider(x.min(y), x.max(y), &mut best, &mut witness);
                        checked += 1;
                    }
                }
            }
            LipschitzMeasurement { constant: best, witness, pairs_checked: checked, seed: Some(seed) }
        }
    }
}

/// `x -> (f(x), g(x))` into the product with metric `sqrt(d_Y^2 + d_Z^2)`.
///
/// The declared constant is `sqrt(2) * max(lambda_f, lambda_g)`, using the
/// declared constants where present and exact measurements otherwise.
pub fn product_map<A: Target, B: Target>(
    f: &MetricMap<A>,
    g: &MetricMap<B>,
) -> Result<MetricMap<Product<A, B>>, MetricError> {
    if !Arc::ptr_eq(&f.domain, &g.domain) && *f.domain != *g.domain {
        return Err(MetricError::DomainMismatch);
    }
    let lf = f.declared_lipschitz.unwrap_or_else(|| measured_lipschitz(f, PairBudget::All).constant);
    let lg = g.declared_lipschitz.unwrap_or_else(|| measured_lipschitz(g, PairBudget::All).constant);
    let images = f.images.iter().cloned().zip(g.images.iter().cloned()).collect();
    let codomain = Arc::new(Product(f.codomain.clone(), g.codomain.clone()));
    Ok(MetricMap::new(f.domain.clone(), codomain, images)?
        .with_declared_lipschitz(std::f64::consts::SQRT_2 * lf.max(lg)))
}
