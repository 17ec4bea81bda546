//! Simplicial complexes realized in ℓ², nerves and canonical projections,
//! barycentric subdivision, simplicial maps and mapping cylinders.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::covers::{lebesgue_number, mesh, multiplicity, Cover};

/// Coordinates below this are treated as zero when building supports.
const COORD_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyhedronError {
    #[error("simplex {0:?} is missing its face {1:?}")]
    NotFaceClosed(Vec<usize>, Vec<usize>),
    #[error("simplex {0:?} uses a vertex outside 0..{1}")]
    VertexOutOfRange(Vec<usize>, usize),
    #[error("empty or unsorted simplex {0:?}")]
    BadSimplex(Vec<usize>),
    #[error("coordinates sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("coordinate {value} at vertex {vertex} is outside [0,1]")]
    BadCoordinate { vertex: usize, value: f64 },
    #[error("support {0:?} is not a simplex of the complex")]
    SupportNotSimplex(Vec<usize>),
    #[error("vertex map sends simplex {0:?} to {1:?}, which is not a simplex")]
    NotSimplicial(Vec<usize>, Vec<usize>),
    #[error("vertex map has {found} entries for {expected} vertices")]
    MapLength { expected: usize, found: usize },
    #[error("family does not cover point {0}")]
    NotACover(usize),
    #[error("Lebesgue number {lebesgue} of the coarse cover does not exceed the fine mesh {mesh}")]
    RefinementPrecondition { lebesgue: f64, mesh: f64 },
    #[error("fine set {0} lies in no coarse set")]
    NoContainingSet(usize),
    #[error("part {part} maps two vertices to global vertex {global}")]
    NonInjectiveGluing { part: usize, global: usize },
    #[error("points belong to different complexes")]
    ComplexMismatch,
}

/// A finite abstract simplicial complex on vertices `0..vertex_count`,
/// stored as the full face-closed set of sorted vertex tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialComplex {
    labels: Vec<String>,
    simplices: BTreeSet<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    vertices: Vec<String>,
    simplices: Vec<Vec<usize>>,
}

impl Serialize for SimplicialComplex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ComplexJson { vertices: self.labels.clone(), simplices: self.facets() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SimplicialComplex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = ComplexJson::deserialize(d)?;
        let mut k = SimplicialComplex::from_facets(j.vertices.len(), j.simplices)
            .map_err(serde::de::Error::custom)?;
        k.labels = j.vertices;
        Ok(k)
    }
}

fn check_simplex(s: &[usize], n: usize) -> Result<(), PolyhedronError> {
    if s.is_empty() || s.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PolyhedronError::BadSimplex(s.to_vec()));
    }
    if s[s.len() - 1] >= n {
        return Err(PolyhedronError::VertexOutOfRange(s.to_vec(), n));
    }
    Ok(())
}

/// All nonempty subsets of a sorted tuple.
fn faces_of(s: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (1u64..(1u64 << s.len())).map(move |mask| {
        s.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect()
    })
}

impl SimplicialComplex {
    /// Closes the given simplices under faces. Every vertex is a 0-simplex.
    pub fn from_facets(
        vertex_count: usize,
        facets: impl IntoIterator<Item = Vec<usize>>,
    ) -> Result<Self, PolyhedronError> {
        let mut simplices: BTreeSet<Vec<usize>> = (0..vertex_count).map(|v| vec![v]).collect();
        for mut f in facets {
            f.sort_unstable();
            f.dedup();
            check_simplex(&f, vertex_count)?;
            if simplices.contains(&f) {
                continue;
            }
            simplices.extend(faces_of(&f));
        }
        Ok(SimplicialComplex { labels: (0..vertex_count).map(|v| v.to_string()).collect(), simplices })
    }

    /// Accepts only an already face-closed simplex list.
    pub fn new(vertex_count: usize, simplices: Vec<Vec<usize>>) -> Result<Self, PolyhedronError> {
        let set: BTreeSet<Vec<usize>> = simplices.into_iter().collect();
        for s in &set {
            check_simplex(s, vertex_count)?;
            if s.len() > 1 {
                for i in 0..s.len() {
                    let mut face = s.clone();
                    face.remove(i);
                    if !set.contains(&face) {
                        return Err(PolyhedronError::NotFaceClosed(s.clone(), face));
                    }
                }
            }
        }
        for v in 0..vertex_count {
            if !set.contains(&vec![v]) {
                return Err(PolyhedronError::NotFaceClosed(vec![v], vec![v]));
            }
        }
        Ok(SimplicialComplex { labels: (0..vertex_count).map(|v| v.to_string()).collect(), simplices: set })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.labels.len(), "one label per vertex");
        self.labels = labels;
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Largest simplex size minus one; `-1` for the empty complex.
    pub fn dimension(&self) -> isize {
        self.simplices.iter().map(|s| s.len() as isize - 1).max().unwrap_or(-1)
    }

    pub fn simplices(&self) -> &BTreeSet<Vec<usize>> {
        &self.simplices
    }

    pub fn contains(&self, simplex: &[usize]) -> bool {
        self.simplices.contains(simplex)
    }

    /// Maximal simplices, in sorted order.
    pub fn facets(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut by_size: Vec<&Vec<usize>> = self.simplices.iter().collect();
        by_size.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        for s in by_size {
            if !out.iter().any(|f| f.len() > s.len() && is_sorted_subset(s, f)) {
                out.push(s.clone());
            }
        }
        out.sort();
        out
    }

    /// Alternating count of simplices by dimension.
    pub fn euler_characteristic(&self) -> i64 {
        self.simplices.iter().map(|s| if s.len() % 2 == 1 { 1 } else { -1 }).sum()
    }

    /// Number of connected components of the 1-skeleton.
    pub fn components(&self) -> usize {
        let n = self.vertex_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for s in self.simplices.iter().filter(|s| s.len() == 2) {
            let (a, b) = (find(&mut parent, s[0]), find(&mut parent, s[1]));
            parent[a] = b;
        }
        (0..n).filter(|&v| find(&mut parent, v) == v).count()
    }

    /// Checks that `p` has coordinates in `[0,1]` summing to 1, supported on a simplex.
    pub fn validate_point(&self, p: &EmbeddedPoint) -> Result<(), PolyhedronError> {
        let mut sum = 0.0;
        for (&v, &x) in &p.coords {
            if v >= self.vertex_count() {
                return Err(PolyhedronError::VertexOutOfRange(vec![v], self.vertex_count()));
            }
            if !(-1e-9..=1.0 + 1e-9).contains(&x) {
                return Err(PolyhedronError::BadCoordinate { vertex: v, value: x });
            }
            sum += x;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(PolyhedronError::NotNormalized(sum));
        }
        let support = p.support();
        if !self.contains(&support) {
            return Err(PolyhedronError::SupportNotSimplex(support));
        }
        Ok(())
    }
}

fn is_sorted_subset(small: &[usize], big: &[usize]) -> bool {
    let mut j = 0;
    for &x in small {
        while j < big.len() && big[j] < x {
            j += 1;
        }
        if j == big.len() || big[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

/// A point of a uniform polyhedron: sparse barycentric coordinates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmbeddedPoint {
    pub coords: BTreeMap<usize, f64>,
}

impl EmbeddedPoint {
    /// Drops zero coordinates.
    pub fn new(coords: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut map = BTreeMap::new();
        for (v, x) in coords {
            *map.entry(v).or_insert(0.0) += x;
        }
        map.retain(|_, x| x.abs() > COORD_EPS);
        EmbeddedPoint { coords: map }
    }

    pub fn vertex(v: usize) -> Self {
        EmbeddedPoint { coords: BTreeMap::from([(v, 1.0)]) }
    }

    pub fn coord(&self, v: usize) -> f64 {
        self.coords.get(&v).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> Vec<usize> {
        self.coords.keys().copied().collect()
    }

    pub fn sum(&self) -> f64 {
        self.coords.values().sum()
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &EmbeddedPoint, b: f64) -> EmbeddedPoint {
        EmbeddedPoint::new(
            self.coords.iter().map(|(&v, &x)| (v, a * x)).chain(other.coords.iter().map(|(&v, &x)| (v, b * x))),
        )
    }

    /// Pushes coordinates forward along a vertex map.
    pub fn push(&self, f: impl Fn(usize) -> usize) -> EmbeddedPoint {
        EmbeddedPoint::new(self.coords.iter().map(|(&v, &x)| (f(v), x)))
    }

    pub fn max_abs_diff(&self, other: &EmbeddedPoint) -> f64 {
        let keys: BTreeSet<usize> = self.coords.keys().chain(other.coords.keys()).copied().collect();
        keys.into_iter().map(|v| (self.coord(v) - other.coord(v)).abs()).fold(0.0, f64::max)
    }
}

/// Euclidean distance between coordinate vectors.
pub fn polyhedron_distance(p: &EmbeddedPoint, q: &EmbeddedPoint) -> f64 {
    let mut sum = 0.0;
    let (mut a, mut b) = (p.coords.iter().peekable(), q.coords.iter().peekable());
    loop {
        let diff = match (a.peek(), b.peek()) {
            (Some((va, xa)), Some((vb, xb))) => match va.cmp(vb) {
                std::cmp::Ordering::Less => {
                    let x = **xa;
                    a.next();
                    x
                }
                std::cmp::Ordering::Greater => {
                    let x = **xb;
                    b.next();
                    x
                }
                std::cmp::Ordering::Equal => {
                    let x = **xa - **xb;
                    a.next();
                    b.next();
                    x
                }
            },
            (Some((_, xa)), None) => {
                let x = **xa;
                a.next();
                x
            }
            (None, Some((_, xb))) => {
                let x = **xb;
                b.next();
                x
            }
            (None, None) => break,
        };
        sum += diff * diff;
    }
    sum.sqrt()
}

/// [`polyhedron_distance`] after checking both points lie in `complex`.
pub fn distance_in(
    complex: &SimplicialComplex,
    p: &EmbeddedPoint,
    q: &EmbeddedPoint,
) -> Result<f64, PolyhedronError> {
    complex.validate_point(p).map_err(|_| PolyhedronError::ComplexMismatch)?;
    complex.validate_point(q).map_err(|_| PolyhedronError::ComplexMismatch)?;
    Ok(polyhedron_distance(p, q))
}

/// Vertex map between complexes that sends simplices to simplices.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialMap {
    source: SimplicialComplex,
    target: SimplicialComplex,
    vertex_map: Vec<usize>,
}

impl SimplicialMap {
    pub fn new(
        source: SimplicialComplex,
        target: SimplicialComplex,
        vertex_map: Vec<usize>,
    ) -> Result<Self, PolyhedronError> {
        if vertex_map.len() != source.vertex_count() {
            return Err(PolyhedronError::MapLength {
                expected: source.vertex_count(),
                found: vertex_map.len(),
            });
        }
        for s in source.simplices() {
            let image = image_simplex(s, |v| vertex_map[v]);
            if !target.contains(&image) {
                return Err(PolyhedronError::NotSimplicial(s.clone(), image));
            }
        }
        Ok(SimplicialMap { source, target, vertex_map })
    }

    pub fn source(&self) -> &SimplicialComplex {
        &self.source
    }

    pub fn target(&self) -> &SimplicialComplex {
        &self.target
    }

    pub fn vertex_map(&self) -> &[usize] {
        &self.vertex_map
    }

    pub fn apply(&self, p: &EmbeddedPoint) -> EmbeddedPoint {
        p.push(|v| self.vertex_map[v])
    }
}

fn image_simplex(s: &[usize], f: impl Fn(usize) -> usize) -> Vec<usize> {
    let mut image: Vec<usize> = s.iter().map(|&v| f(v)).collect();
    image.sort_unstable();
    image.dedup();
    image
}

/// Vertices are the sets; a simplex per nonempty common intersection.
pub fn nerve(cover: &Cover) -> SimplicialComplex {
    let facets: BTreeSet<Vec<usize>> = cover
        .universe()
        .iter()
        .map(|x| cover.containing(x))
        .filter(|s| !s.is_empty())
        .collect();
    SimplicialComplex::from_facets(cover.len(), facets).expect("containing sets are valid simplices")
}

/// The partition-of-unity map to the nerve: weight of `U` proportional to
/// `d(x, universe \ U)`. Sets equal to the whole universe have infinite depth
/// and, when present, share the weight equally among themselves.
pub fn canonical_projection(cover: &Cover, x: usize) -> Result<EmbeddedPoint, PolyhedronError> {
    let depths: Vec<(usize, f64)> =
        (0..cover.len()).map(|i| (i, cover.depth(x, i))).filter(|(_, d)| *d > 0.0).collect();
    if depths.is_empty() {
        return Err(PolyhedronError::NotACover(x));
    }
    let infinite: Vec<usize> = depths.iter().filter(|(_, d)| d.is_infinite()).map(|(i, _)| *i).collect();
    if !infinite.is_empty() {
        let w = 1.0 / infinite.len() as f64;
        return Ok(EmbeddedPoint::new(infinite.into_iter().map(|i| (i, w))));
    }
    let total: f64 = depths.iter().map(|(_, d)| d).sum();
    Ok(EmbeddedPoint::new(depths.into_iter().map(|(i, d)| (i, d / total))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub measured: f64,
    pub bound: f64,
    /// Multiplicity minus one.
    pub k: usize,
    pub lebesgue: f64,
    pub witness: Option<(usize, usize)>,
}

impl ProjectionReport {
    pub fn holds(&self) -> bool {
        self.measured <= self.bound
    }
}

/// Exact Lipschitz constant of the canonical projection over all pairs of the
/// universe, next to the bound `(2k+3)^2 / L` (zero when `L` is infinite).
pub fn projection_lipschitz_check(cover: &Cover) -> Result<ProjectionReport, PolyhedronError> {
    let pts: Vec<usize> = cover.universe().iter().collect();
    let images: Vec<EmbeddedPoint> =
        pts.iter().map(|&x| canonical_projection(cover, x)).collect::<Result<_, _>>()?;
    let space = cover.space();
    let (measured, witness) = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut best = (0.0, None);
            for j in i + 1..pts.len() {
                let r = polyhedron_distance(&images[i], &images[j]) / space.dist(pts[i], pts[j]);
                if r > best.0 {
                    best = (r, Some((pts[i], pts[j])));
                }
            }
            best
        })
        .reduce(|| (0.0, None), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1 && b.1.is_some()) { b } else { a });
    let k = multiplicity(cover).saturating_sub(1);
    let lebesgue = lebesgue_number(cover);
    let bound = ((2 * k + 3) as f64).powi(2) / lebesgue;
    Ok(ProjectionReport { measured, bound, k, lebesgue, witness })
}

/// The barycentric subdivision with each new vertex's barycenter in the original complex.
#[derive(Debug, Clone, PartialEq)]
pub struct Subdivision {
    pub complex: SimplicialComplex,
    /// `cells[v]` is the simplex of the original complex that vertex `v` stands for.
    pub cells: Vec<Vec<usize>>,
    pub barycenters: Vec<EmbeddedPoint>,
}

impl Subdivision {
    pub fn vertex_of(&self, cell: &[usize]) -> Option<usize> {
        self.cells.iter().position(|c| c == cell)
    }
}

/// Vertices are the simplices of `k`; simplices are chains under inclusion.
pub fn barycentric_subdivision(k: &SimplicialComplex) -> Subdivision {
    let cells: Vec<Vec<usize>> = k.simplices().iter().cloned().collect();
    let index: BTreeMap<&Vec<usize>, usize> = cells.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let mut chains: Vec<Vec<usize>> = Vec::new();
    // maximal chains: from each facet, remove one vertex at a time
    fn walk(
        cell: &[usize],
        acc: &mut Vec<usize>,
        index: &BTreeMap<&Vec<usize>, usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let key = cell.to_vec();
        acc.push(index[&key]);
        if cell.len() == 1 {
            out.push(acc.clone());
        } else {
            for i in 0..cell.len() {
                let mut face = cell.to_vec();
                face.remove(i);
                walk(&face, acc, index, out);
            }
        }
        acc.pop();
    }
    for f in k.facets() {
        walk(&f, &mut Vec::new(), &index, &mut chains);
    }
    let complex = SimplicialComplex::from_facets(cells.len(), chains).expect("chains are simplices");
    let barycenters = cells
        .iter()
        .map(|c| {
            let w = 1.0 / c.len() as f64;
            EmbeddedPoint::new(c.iter().map(|&v| (v, w)))
        })
        .collect();
    Subdivision { complex, cells, barycenters }
}

/// Sends each fine set to the lowest-index coarse set containing it.
///
/// Requires `L(coarse) > mesh(fine)`, which guarantees such a set exists.
pub fn refinement_map(fine: &Cover, coarse: &Cover) -> Result<SimplicialMap, PolyhedronError> {
    let lebesgue = lebesgue_number(coarse);
    let m = mesh(fine);
    if !(lebesgue > m) {
        return Err(PolyhedronError::RefinementPrecondition { lebesgue, mesh: m });
    }
    let vertex_map = fine
        .sets()
        .iter()
        .enumerate()
        .map(|(i, u)| {
            coarse.sets().iter().position(|v| u.is_subset(v)).ok_or(PolyhedronError::NoContainingSet(i))
        })
        .collect::<Result<Vec<_>, _>>()?;
    SimplicialMap::new(nerve(fine), nerve(coarse), vertex_map)
}

/// Splits a point over a simplex into bottom and top weights at height `t`.
///
/// Top weight is taken from the highest-ordered vertex first, so the bottom
/// part is supported on an initial segment and the top part on a final
/// segment of the ordered support: the standard staircase triangulation of
/// the prism `σ × [0,1]`. Coordinates must be keyed in the cylinder order.
pub fn staircase(p: &EmbeddedPoint, t: f64) -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
    let mut remaining = t.clamp(0.0, 1.0);
    let mut bottom = Vec::new();
    let mut top = Vec::new();
    for (&v, &a) in p.coords.iter().rev() {
        let b = a.min(remaining);
        remaining -= b;
        if b > 0.0 {
            top.push((v, b));
        }
        if a - b > 0.0 {
            bottom.push((v, a - b));
        }
    }
    bottom.reverse();
    top.reverse();
    (bottom, top)
}

/// The cylinder point over `(p, t)`: bottom weights stay on their vertices,
/// top weights move along `g`.
pub fn cylinder_point(p: &EmbeddedPoint, t: f64, g: impl Fn(usize) -> usize) -> EmbeddedPoint {
    let (bottom, top) = staircase(p, t);
    EmbeddedPoint::new(bottom.into_iter().chain(top.into_iter().map(|(v, x)| (g(v), x))))
}

/// Staircase simplices `[v_0..v_i] ∪ g([v_i..v_m])` of the prism over `simplex`.
pub fn cylinder_simplices(simplex: &[usize], g: impl Fn(usize) -> usize) -> Vec<Vec<usize>> {
    (0..simplex.len())
        .map(|i| {
            let mut s: Vec<usize> = simplex[..=i].to_vec();
            s.extend(simplex[i..].iter().map(|&v| g(v)));
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect()
}

/// Mapping cylinder of a simplicial map with the ordered staircase triangulation.
///
/// Source vertex `v` keeps id `v`; target vertex `w` gets id `source_count + w`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingCylinder {
    pub map: SimplicialMap,
    pub complex: SimplicialComplex,
}

impl MappingCylinder {
    pub fn source_count(&self) -> usize {
        self.map.source.vertex_count()
    }

    pub fn target_id(&self, w: usize) -> usize {
        self.source_count() + w
    }

    /// `q(p, t)`; `q(p, 0)` is `p` itself and `q(p, 1)` is `g(p)` in the target copy.
    pub fn q(&self, p: &EmbeddedPoint, t: f64) -> EmbeddedPoint {
        let offset = self.source_count();
        cylinder_point(p, t, |v| offset + self.map.vertex_map[v])
    }
}

pub fn mapping_cylinder(g: &SimplicialMap) -> MappingCylinder {
    let m = g.source.vertex_count();
    let total = m + g.target.vertex_count();
    let facets = g
        .source
        .facets()
        .into_iter()
        .flat_map(|s| cylinder_simplices(&s, |v| m + g.vertex_map[v]))
        .chain(g.target.facets().into_iter().map(|s| s.into_iter().map(|w| m + w).collect()))
        .collect::<Vec<_>>();
    let labels = g
        .source
        .labels
        .iter()
        .map(|l| format!("s{l}"))
        .chain(g.target.labels.iter().map(|l| format!("t{l}")))
        .collect();
    let complex = SimplicialComplex::from_facets(total, facets).expect("cylinder simplices are valid").with_labels(labels);
    MappingCylinder { map: g.clone(), complex }
}

/// Barycentric grid points of the standard `n`-simplex with the given
/// denominator, plus the barycenters of all faces.
pub fn simplex_samples(n: usize, denominator: usize) -> Vec<EmbeddedPoint> {
    let mut out: Vec<EmbeddedPoint> = Vec::new();
    fn rec(n: usize, left: usize, acc: &mut Vec<usize>, den: usize, out: &mut Vec<EmbeddedPoint>) {
        if acc.len() == n {
            acc.push(left);
            out.push(EmbeddedPoint::new(acc.iter().enumerate().map(|(v, &c)| (v, c as f64 / den as f64))));
            acc.pop();
            return;
        }
        for c in 0..=left {
            acc.push(c);
            rec(n, left - c, acc, den, out);
            acc.pop();
        }
    }
    rec(n, denominator, &mut Vec::new(), denominator, &mut out);
    let full: Vec<usize> = (0..=n).collect();
    for face in faces_of(&full) {
        let w = 1.0 / face.len() as f64;
        let p = EmbeddedPoint::new(face.iter().map(|&v| (v, w)));
        if !out.iter().any(|q| q.max_abs_diff(&p) < 1e-12) {
            out.push(p);
        }
    }
    out
}

/// Heights `0, 1/16, ..., 1`.
pub fn height_grid() -> Vec<f64> {
    (0..=16).map(|i| i as f64 / 16.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformizationMeasurement {
    pub n: usize,
    pub constant: f64,
    pub maps: usize,
    pub sample_points: usize,
}

/// Largest measured Lipschitz constant of `q: Δⁿ × [0,1] → M_g` over every
/// vertex map `g: Δⁿ → Δⁿ`, using the sample grid of [`simplex_samples`]
/// (denominator 4 up to dimension 2, else 2) times [`height_grid`].
/// The domain carries `sqrt(|p - p'|^2 + (t - t')^2)`. Never below 1.
pub fn measure_uniformization_constant(n: usize) -> UniformizationMeasurement {
    let den = if n <= 2 { 4 } else { 2 };
    let samples = simplex_samples(n, den);
    let heights = height_grid();
    let domain: Vec<(&EmbeddedPoint, f64)> =
        samples.iter().flat_map(|p| heights.iter().map(move |&t| (p, t))).collect();
    let k = n + 1;
    let maps: Vec<Vec<usize>> = (0..k.pow(k as u32))
        .map(|mut code| {
            (0..k)
                .map(|_| {
                    let v = code % k;
                    code /= k;
                    v
                })
                .collect()
        })
        .collect();
    let constant = maps
        .par_iter()
        .map(|g| {
            let images: Vec<EmbeddedPoint> =
                domain.iter().map(|(p, t)| cylinder_point(p, *t, |v| k + g[v])).collect();
            let mut best: f64 = 0.0;
            for i in 0..domain.len() {
                for j in i + 1..domain.len() {
                    let dp = polyhedron_distance(domain[i].0, domain[j].0);
                    let dt = domain[i].1 - domain[j].1;
                    let d = (dp * dp + dt * dt).sqrt();
                    if d > 0.0 {
                        best = best.max(polyhedron_distance(&images[i], &images[j]) / d);
                    }
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
        .max(1.0);
    UniformizationMeasurement { n, constant, maps: maps.len(), sample_points: domain.len() }
}

/// Measured constants `c_0..=c_max`.
pub fn uniformization_table(max: usize) -> Vec<f64> {
    (0..=max).map(|n| measure_uniformization_constant(n).constant).collect()
}

/// Union of complexes whose vertices are renamed into a shared global id
/// space `0..global_count`. Each part's renaming must be injective so that
/// no simplex collapses; shared global ids are identified.
pub fn glue(
    global_count: usize,
    parts: &[(&SimplicialComplex, &[usize])],
) -> Result<SimplicialComplex, PolyhedronError> {
    let mut facets = Vec::new();
    for (part, (k, ids)) in parts.iter().enumerate() {
        if ids.len() != k.vertex_count() {
            return Err(PolyhedronError::MapLength { expected: k.vertex_count(), found: ids.len() });
        }
        let mut seen = BTreeSet::new();
        for &g in ids.iter() {
            if g >= global_count {
                return Err(PolyhedronError::VertexOutOfRange(vec![g], global_count));
            }
            if !seen.insert(g) {
                return Err(PolyhedronError::NonInjectiveGluing { part, global: g });
            }
        }
        facets.extend(k.facets().into_iter().map(|s| s.into_iter().map(|v| ids[v]).collect::<Vec<_>>()));
    }
    SimplicialComplex::from_facets(global_count, facets)
}
