//! Covers, colored decompositions, and the saturation constructions that
//! combine decompositions of pieces into decompositions of unions.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{
    ball, neighborhood_within, point_set_distance, set_diameter, set_distance, FiniteMetricSpace,
    PointSet,
};

/// Exact coloring is attempted only on clusterings with at most this many clusters.
pub const EXACT_CLUSTER_CAP: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverError {
    #[error("cover contains an empty set at index {0}")]
    EmptySet(usize),
    #[error("set {set} contains point {point} outside the universe")]
    OutsideUniverse { set: usize, point: usize },
    #[error("point {0} is not covered")]
    Uncovered(usize),
    #[error("color {color}: sets {a} and {b} are at distance {distance}, not more than {margin}")]
    NotDisjoint { color: usize, a: usize, b: usize, distance: f64, margin: f64 },
    #[error("color {color}, set {set}: diameter {diameter} exceeds bound {bound}")]
    MeshExceeded { color: usize, set: usize, diameter: f64, bound: f64 },
    #[error("color counts differ: {0} vs {1}")]
    ColorMismatch(usize, usize),
    #[error("carving produced {clusters} clusters; exact coloring is capped at {cap}")]
    ExactCapExceeded { clusters: usize, cap: usize },
    #[error("parameter {name} = {value} must be nonnegative")]
    NegativeParameter { name: &'static str, value: f64 },
    #[error("map {index} is not an isometry: d({a},{b}) = {expected} but images are at {found}")]
    NotIsometry { index: usize, a: usize, b: usize, expected: f64, found: f64 },
    #[error("map {index} is not a bijection onto its space")]
    NotBijective { index: usize },
    #[error("members {a} and {b} are at distance {distance} outside the saturating set, not more than {margin}")]
    MembersTooClose { a: usize, b: usize, distance: f64, margin: f64 },
    #[error("operands live on different spaces")]
    SpaceMismatch,
    #[error("invariant violated: {0}")]
    Invariant(String),
}

fn nonnegative(name: &'static str, value: f64) -> Result<(), CoverError> {
    if value >= 0.0 {
        Ok(())
    } else {
        Err(CoverError::NegativeParameter { name, value })
    }
}

fn same_space(a: &Arc<FiniteMetricSpace>, b: &Arc<FiniteMetricSpace>) -> Result<(), CoverError> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(CoverError::SpaceMismatch)
    }
}

/// A family of nonempty subsets of `universe`. When `relaxed` is false the
/// sets are known to cover the universe.
#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    space: Arc<FiniteMetricSpace>,
    universe: PointSet,
    sets: Vec<PointSet>,
    relaxed: bool,
}

impl Cover {
    /// A cover of the whole space.
    pub fn new(space: Arc<FiniteMetricSpace>, sets: Vec<PointSet>) -> Result<Self, CoverError> {
        let universe = space.all_points();
        Self::on(space, universe, sets)
    }

    /// A cover of a subset of the space; the sets must lie in and cover `universe`.
    pub fn on(
        space: Arc<FiniteMetricSpace>,
        universe: PointSet,
        sets: Vec<PointSet>,
    ) -> Result<Self, CoverError> {
        let c = Self::family(space, universe, sets)?;
        let mut hit = vec![false; c.space.len()];
        for s in &c.sets {
            for p in s.iter() {
                hit[p] = true;
            }
        }
        if let Some(p) = c.universe.iter().find(|&p| !hit[p]) {
            return Err(CoverError::Uncovered(p));
        }
        Ok(Cover { relaxed: false, ..c })
    }

    /// A family that need not cover `universe`; flagged as relaxed.
    pub fn family(
        space: Arc<FiniteMetricSpace>,
        universe: PointSet,
        sets: Vec<PointSet>,
    ) -> Result<Self, CoverError> {
        for (i, s) in sets.iter().enumerate() {
            if s.is_empty() {
                return Err(CoverError::EmptySet(i));
            }
            if let Some(p) = s.iter().find(|&p| !universe.contains(p)) {
                return Err(CoverError::OutsideUniverse { set: i, point: p });
            }
        }
        Ok(Cover { space, universe, sets, relaxed: true })
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn universe(&self) -> &PointSet {
        &self.universe
    }

    pub fn sets(&self) -> &[PointSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn is_relaxed(&self) -> bool {
        self.relaxed
    }

    /// Indices of the sets containing `x`, ascending.
    pub fn containing(&self, x: usize) -> Vec<usize> {
        (0..self.sets.len()).filter(|&i| self.sets[i].contains(x)).collect()
    }

    /// `d(x, universe \ U_i)`, or `+inf` when `U_i` contains the whole universe.
    pub fn depth(&self, x: usize, i: usize) -> f64 {
        if !self.sets[i].contains(x) {
            return 0.0;
        }
        let row = self.space.row(x);
        self.universe
            .iter()
            .filter(|&p| !self.sets[i].contains(p))
            .map(|p| row[p])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Maximum number of sets containing a single point.
pub fn multiplicity(cover: &Cover) -> usize {
    let mut count = vec![0usize; cover.space.len()];
    for s in &cover.sets {
        for p in s.iter() {
            count[p] += 1;
        }
    }
    count.into_iter().max().unwrap_or(0)
}

/// Maximum over `x` of the number of sets meeting the closed ball `B_R(x)`.
pub fn r_multiplicity(cover: &Cover, radius: f64) -> usize {
    cover
        .universe
        .iter()
        .map(|x| {
            let b = ball(&cover.space, x, radius);
            cover.sets.iter().filter(|s| s.intersects(&b)).count()
        })
        .max()
        .unwrap_or(0)
}

/// `inf_x max_U d(x, universe \ U)`; `+inf` when some set is the whole universe.
pub fn lebesgue_number(cover: &Cover) -> f64 {
    if cover.sets.iter().any(|s| cover.universe.is_subset(s)) {
        return f64::INFINITY;
    }
    cover
        .universe
        .iter()
        .map(|x| (0..cover.sets.len()).map(|i| cover.depth(x, i)).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Largest diameter of a set in the cover.
pub fn mesh(cover: &Cover) -> f64 {
    family_mesh(&cover.space, &cover.sets)
}

pub fn family_mesh(space: &FiniteMetricSpace, family: &[PointSet]) -> f64 {
    family.iter().map(|s| set_diameter(space, s)).fold(0.0, f64::max)
}

/// First pair (by index) of sets at distance `<= margin`, with that distance.
pub fn disjointness_witness(
    space: &FiniteMetricSpace,
    family: &[PointSet],
    margin: f64,
) -> Option<(usize, usize, f64)> {
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            let d = set_distance(space, &family[i], &family[j]).unwrap_or(f64::INFINITY);
            if d <= margin {
                return Some((i, j, d));
            }
        }
    }
    None
}

/// Whether the sets are pairwise at distance `> margin`.
pub fn is_d_disjoint(space: &FiniteMetricSpace, family: &[PointSet], margin: f64) -> bool {
    disjointness_witness(space, family, margin).is_none()
}

/// Set-wise closed `d`-neighborhoods inside the universe; cardinality preserved.
pub fn enlarge(cover: &Cover, d: f64) -> Cover {
    let sets = cover
        .sets
        .iter()
        .map(|s| neighborhood_within(&cover.space, s, d, Some(&cover.universe)))
        .collect();
    Cover { sets, ..cover.clone() }
}

/// The `d`-saturated union: each `V` absorbs every `U` within distance `d`;
/// the `U` far from all of `V` are kept as they are.
pub fn saturated_union(
    space: &FiniteMetricSpace,
    v: &[PointSet],
    u: &[PointSet],
    d: f64,
) -> Vec<PointSet> {
    let close = |a: &PointSet, b: &PointSet| set_distance(space, a, b).map_or(false, |x| x <= d);
    let mut out: Vec<PointSet> = v
        .iter()
        .map(|vs| {
            u.iter().filter(|us| close(vs, us)).fold(vs.clone(), |acc, us| acc.union(us))
        })
        .collect();
    out.extend(u.iter().filter(|us| !v.iter().any(|vs| close(vs, us))).cloned());
    out
}

/// `families[c]` is a `D`-disjoint family of sets of diameter at most `B`;
/// together the families cover `universe`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColoredDecomposition {
    space: Arc<FiniteMetricSpace>,
    universe: PointSet,
    families: Vec<Vec<PointSet>>,
    d: f64,
    b: f64,
}

impl ColoredDecomposition {
    /// Validates all three invariants before returning.
    pub fn new(
        space: Arc<FiniteMetricSpace>,
        universe: PointSet,
        families: Vec<Vec<PointSet>>,
        d: f64,
        b: f64,
    ) -> Result<Self, CoverError> {
        nonnegative("D", d)?;
        nonnegative("B", b)?;
        let dec = ColoredDecomposition { space, universe, families, d, b };
        dec.verify()?;
        Ok(dec)
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn universe(&self) -> &PointSet {
        &self.universe
    }

    pub fn families(&self) -> &[Vec<PointSet>] {
        &self.families
    }

    /// Disjointness margin.
    pub fn disjointness(&self) -> f64 {
        self.d
    }

    /// Declared mesh bound.
    pub fn bound(&self) -> f64 {
        self.b
    }

    pub fn colors(&self) -> usize {
        self.families.len()
    }

    /// All sets, color by color.
    pub fn sets(&self) -> impl Iterator<Item = &PointSet> {
        self.families.iter().flatten()
    }

    /// Largest actual diameter, at most [`Self::bound`].
    pub fn mesh(&self) -> f64 {
        self.sets().map(|s| set_diameter(&self.space, s)).fold(0.0, f64::max)
    }

    /// Re-checks disjointness, mesh and coverage, returning the first violation.
    pub fn verify(&self) -> Result<(), CoverError> {
        let tol = self.space.tolerance();
        let mut hit = vec![false; self.space.len()];
        for (color, fam) in self.families.iter().enumerate() {
            for (i, s) in fam.iter().enumerate() {
                if s.is_empty() {
                    return Err(CoverError::EmptySet(i));
                }
                if let Some(p) = s.iter().find(|&p| !self.universe.contains(p)) {
                    return Err(CoverError::OutsideUniverse { set: i, point: p });
                }
                let diameter = set_diameter(&self.space, s);
                if diameter > self.b + tol {
                    return Err(CoverError::MeshExceeded { color, set: i, diameter, bound: self.b });
                }
                for p in s.iter() {
                    hit[p] = true;
                }
            }
            if let Some((a, b, distance)) = disjointness_witness(&self.space, fam, self.d) {
                return Err(CoverError::NotDisjoint { color, a, b, distance, margin: self.d });
            }
        }
        match self.universe.iter().find(|&p| !hit[p]) {
            Some(p) => Err(CoverError::Uncovered(p)),
            None => Ok(()),
        }
    }

    /// Same data with a smaller declared disjointness margin or larger bound.
    pub fn relabel(&self, d: f64, b: f64) -> Result<Self, CoverError> {
        Self::new(self.space.clone(), self.universe.clone(), self.families.clone(), d, b)
    }
}

/// Combines a decomposition `a` (margin `>= d`, mesh `R`) with a decomposition
/// `b` (margin `>= 2d + R`, mesh `r`) by color-wise `d`-saturated union.
///
/// The result covers both universes, is `d`-disjoint and has mesh at most
/// `r + 2(d + R)`. The margin required of `b` keeps any set of `a` from being
/// within `d` of two different sets of `b`.
pub fn finite_union_cover(
    a: &ColoredDecomposition,
    b: &ColoredDecomposition,
    d: f64,
) -> Result<ColoredDecomposition, CoverError> {
    nonnegative("d", d)?;
    same_space(&a.space, &b.space)?;
    if b.universe.is_empty() {
        return a.relabel(a.d.min(d), a.b);
    }
    if a.universe.is_empty() {
        return b.relabel(b.d.min(d), b.b);
    }
    if a.colors() != b.colors() {
        return Err(CoverError::ColorMismatch(a.colors(), b.colors()));
    }
    let space = &a.space;
    if let Some((color, (i, j, dist))) =
        a.families.iter().enumerate().find_map(|(c, f)| disjointness_witness(space, f, d).map(|w| (c, w)))
    {
        return Err(CoverError::NotDisjoint { color, a: i, b: j, distance: dist, margin: d });
    }
    let big_r = a.b;
    let margin_b = 2.0 * d + big_r;
    if let Some((color, (i, j, dist))) = b
        .families
        .iter()
        .enumerate()
        .find_map(|(c, f)| disjointness_witness(space, f, margin_b).map(|w| (c, w)))
    {
        return Err(CoverError::NotDisjoint { color, a: i, b: j, distance: dist, margin: margin_b });
    }
    let families = b
        .families
        .iter()
        .zip(&a.families)
        .map(|(v, u)| saturated_union(space, v, u, d))
        .collect();
    ColoredDecomposition::new(
        space.clone(),
        a.universe.union(&b.universe),
        families,
        d,
        b.b + 2.0 * (d + big_r),
    )
}

/// Enlarges every set by `D/2` inside the universe.
///
/// The result has multiplicity at most the number of colors, Lebesgue number
/// greater than `D/2` and mesh at most `B + D`; all three are checked.
pub fn disjoint_to_cover(dec: &ColoredDecomposition) -> Result<Cover, CoverError> {
    let half = dec.d / 2.0;
    let sets: Vec<PointSet> = dec
        .sets()
        .map(|s| neighborhood_within(&dec.space, s, half, Some(&dec.universe)))
        .collect();
    let cover = Cover::on(dec.space.clone(), dec.universe.clone(), sets)?;
    let m = multiplicity(&cover);
    if m > dec.colors() {
        return Err(CoverError::Invariant(format!(
            "multiplicity {m} exceeds {} colors",
            dec.colors()
        )));
    }
    let l = lebesgue_number(&cover);
    if !(l > half) {
        return Err(CoverError::Invariant(format!("Lebesgue number {l} is not above {half}")));
    }
    let mesh_value = mesh(&cover);
    if mesh_value > dec.b + dec.d + dec.space.tolerance() {
        return Err(CoverError::Invariant(format!(
            "mesh {mesh_value} exceeds {}",
            dec.b + dec.d
        )));
    }
    Ok(cover)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Exact,
    Greedy,
}

/// What a reported color count means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColorCountKind {
    /// Minimal over colorings of carved clusterings.
    ExactOverCarved,
    /// Produced by the greedy solver; only an upper bound.
    UpperBound,
}

impl ColorCountKind {
    pub fn label(self) -> &'static str {
        match self {
            ColorCountKind::ExactOverCarved => "exact over carved clusterings",
            ColorCountKind::UpperBound => "upper bound (greedy/carved)",
        }
    }
}

/// Greedy ball carving of `universe` at mesh `b`, starting the scan at
/// position `offset` of the universe order and wrapping around.
///
/// Each cluster is the ball of radius `b/2` around the first unassigned point,
/// taken among unassigned points, so its diameter is at most `b`.
pub fn carve_clusters(
    space: &FiniteMetricSpace,
    universe: &PointSet,
    b: f64,
    offset: usize,
) -> Vec<PointSet> {
    let pts = universe.as_slice();
    let n = pts.len();
    let radius = b / 2.0;
    let tol = space.tolerance();
    let mut assigned = vec![false; n];
    let mut clusters = Vec::new();
    for step in 0..n {
        let ci = (offset + step) % n;
        if assigned[ci] {
            continue;
        }
        let row = space.row(pts[ci]);
        let mut members = Vec::new();
        for (j, &p) in pts.iter().enumerate() {
            if !assigned[j] && row[p] <= radius + tol {
                assigned[j] = true;
                members.push(p);
            }
        }
        clusters.push(PointSet::new(members));
    }
    clusters
}

/// Adjacency lists of the conflict graph: clusters at distance `<= d` conflict.
pub fn conflict_graph(space: &FiniteMetricSpace, clusters: &[PointSet], d: f64) -> Vec<Vec<usize>> {
    let k = clusters.len();
    let mut adj = vec![Vec::new(); k];
    for i in 0..k {
        for j in i + 1..k {
            let dist = set_distance(space, &clusters[i], &clusters[j]).unwrap_or(f64::INFINITY);
            if dist <= d {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// Lexicographically smallest proper coloring with the fewest colors.
///
/// Tries `k = 1, 2, ...` and runs a depth-first search assigning colors to
/// vertices in index order; the first success at the smallest `k` is the
/// lexicographically smallest optimal coloring.
pub fn exact_coloring(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    if n == 0 {
        return Vec::new();
    }
    fn extend(v: usize, k: usize, adj: &[Vec<usize>], colors: &mut Vec<usize>, used: usize) -> bool {
        if v == adj.len() {
            return true;
        }
        // symmetry: a fresh color beyond `used` is only worth trying once
        let limit = (used + 1).min(k);
        for c in 0..limit {
            if adj[v].iter().any(|&u| u < v && colors[u] == c) {
                continue;
            }
            colors[v] = c;
            if extend(v + 1, k, adj, colors, used.max(c + 1)) {
                return true;
            }
        }
        false
    }
    for k in 1..=n {
        let mut colors = vec![usize::MAX; n];
        if extend(0, k, adj, &mut colors, 0) {
            return colors;
        }
    }
    unreachable!("n colors always suffice")
}

/// First-fit coloring in order of descending cluster size, ties by index.
pub fn greedy_coloring(adj: &[Vec<usize>], sizes: &[usize]) -> Vec<usize> {
    let n = adj.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut colors = vec![usize::MAX; n];
    for &v in &order {
        let mut c = 0;
        while adj[v].iter().any(|&u| colors[u] == c) {
            c += 1;
        }
        colors[v] = c;
    }
    colors
}

fn families_from(clusters: Vec<PointSet>, coloring: &[usize]) -> Vec<Vec<PointSet>> {
    let k = coloring.iter().map(|c| c + 1).max().unwrap_or(0);
    let mut families = vec![Vec::new(); k];
    for (cluster, &c) in clusters.into_iter().zip(coloring) {
        families[c].push(cluster);
    }
    families
}

/// Outcome of [`colored_decomposition`].
#[derive(Debug, Clone, PartialEq)]
pub struct Solved {
    pub decomposition: ColoredDecomposition,
    pub kind: ColorCountKind,
    pub clusters: usize,
    /// Carving start offset that produced the witness.
    pub offset: usize,
}

/// A `D`-disjoint, `B`-bounded colored decomposition of `universe`.
///
/// Exact mode minimizes the color count over the carvings from every start
/// offset whose clustering has at most [`EXACT_CLUSTER_CAP`] clusters; it
/// fails when the canonical (offset 0) carving exceeds the cap. Greedy mode
/// colors the canonical carving first-fit.
pub fn colored_decomposition(
    space: &Arc<FiniteMetricSpace>,
    universe: &PointSet,
    d: f64,
    b: f64,
    mode: SolveMode,
) -> Result<Solved, CoverError> {
    nonnegative("D", d)?;
    nonnegative("B", b)?;
    let canonical = carve_clusters(space, universe, b, 0);
    let (clusters, coloring, kind, offset) = match mode {
        SolveMode::Greedy => {
            let adj = conflict_graph(space, &canonical, d);
            let sizes: Vec<usize> = canonical.iter().map(PointSet::len).collect();
            let coloring = greedy_coloring(&adj, &sizes);
            (canonical, coloring, ColorCountKind::UpperBound, 0)
        }
        SolveMode::Exact => {
            if canonical.len() > EXACT_CLUSTER_CAP {
                return Err(CoverError::ExactCapExceeded {
                    clusters: canonical.len(),
                    cap: EXACT_CLUSTER_CAP,
                });
            }
            let mut best: Option<(Vec<PointSet>, Vec<usize>, usize)> = None;
            let mut seen: Vec<Vec<PointSet>> = Vec::new();
            for offset in 0..universe.len().max(1) {
                let clusters =
                    if offset == 0 { canonical.clone() } else { carve_clusters(space, universe, b, offset) };
                if clusters.len() > EXACT_CLUSTER_CAP {
                    continue;
                }
                let mut key = clusters.clone();
                key.sort();
                if seen.contains(&key) {
                    continue;
                }
                seen.push(key);
                let coloring = exact_coloring(&conflict_graph(space, &clusters, d));
                let colors = coloring.iter().map(|c| c + 1).max().unwrap_or(0);
                let better = best
                    .as_ref()
                    .map_or(true, |(_, bc, _)| colors < bc.iter().map(|c| c + 1).max().unwrap_or(0));
                if better {
                    best = Some((clusters, coloring, offset));
                    if colors <= 1 {
                        break;
                    }
                }
            }
            let (clusters, coloring, offset) = best.expect("offset 0 is always within the cap");
            (clusters, coloring, ColorCountKind::ExactOverCarved, offset)
        }
    };
    let n_clusters = clusters.len();
    let families = families_from(clusters, &coloring);
    let decomposition = ColoredDecomposition::new(space.clone(), universe.clone(), families, d, b)?;
    Ok(Solved { decomposition, kind, clusters: n_clusters, offset })
}

/// Exact when the canonical carving is within the cap, greedy otherwise.
pub fn best_effort_decomposition(
    space: &Arc<FiniteMetricSpace>,
    universe: &PointSet,
    d: f64,
    b: f64,
) -> Result<Solved, CoverError> {
    match colored_decomposition(space, universe, d, b, SolveMode::Exact) {
        Err(CoverError::ExactCapExceeded { .. }) => {
            colored_decomposition(space, universe, d, b, SolveMode::Greedy)
        }
        other => other,
    }
}

/// One decomposition computed on `spaces[0]` and transported to every other
/// space along the supplied isometries `isometries[i]: spaces[0] -> spaces[i + 1]`.
pub fn uniform_decomposition(
    spaces: &[Arc<FiniteMetricSpace>],
    isometries: &[Vec<usize>],
    d: f64,
    b: f64,
    mode: SolveMode,
) -> Result<Vec<ColoredDecomposition>, CoverError> {
    let rep = spaces.first().ok_or_else(|| CoverError::Invariant("no spaces".into()))?;
    if isometries.len() + 1 != spaces.len() {
        return Err(CoverError::Invariant(format!(
            "{} isometries for {} spaces",
            isometries.len(),
            spaces.len()
        )));
    }
    for (i, (target, map)) in spaces[1..].iter().zip(isometries).enumerate() {
        let index = i + 1;
        let n = rep.len();
        if map.len() != n || target.len() != n || PointSet::new(map.iter().copied()).len() != n
            || map.iter().any(|&p| p >= n)
        {
            return Err(CoverError::NotBijective { index });
        }
        for a in 0..n {
            for b2 in a + 1..n {
                let expected = rep.dist(a, b2);
                let found = target.dist(map[a], map[b2]);
                if expected != found {
                    return Err(CoverError::NotIsometry { index, a, b: b2, expected, found });
                }
            }
        }
    }
    let base = colored_decomposition(rep, &rep.all_points(), d, b, mode)?.decomposition;
    let mut out = vec![base.clone()];
    for (target, map) in spaces[1..].iter().zip(isometries) {
        let families = base
            .families
            .iter()
            .map(|f| f.iter().map(|s| s.map(|p| map[p])).collect())
            .collect();
        out.push(ColoredDecomposition::new(target.clone(), target.all_points(), families, d, b)?);
    }
    Ok(out)
}

/// Decomposition of `saturating.universe ∪ members` from uniform member
/// decompositions and a decomposition of the saturating set.
///
/// Members minus the saturating set must be pairwise more than `r` apart,
/// with `r` at least the smallest member margin `d`. Member sets are cut down
/// to the part outside the saturating set, gathered color by color, and
/// merged into the saturating decomposition by [`finite_union_cover`] at `d`.
/// Shorter family lists are padded with empty colors.
pub fn union_cover(
    members: &[ColoredDecomposition],
    saturating: &ColoredDecomposition,
    r: f64,
) -> Result<ColoredDecomposition, CoverError> {
    let space = saturating.space.clone();
    for m in members {
        same_space(&space, &m.space)?;
    }
    let y = &saturating.universe;
    let outside: Vec<PointSet> = members.iter().map(|m| m.universe.difference(y)).collect();
    for i in 0..outside.len() {
        for j in i + 1..outside.len() {
            if outside[i].is_empty() || outside[j].is_empty() {
                continue;
            }
            let distance = set_distance(&space, &outside[i], &outside[j]).unwrap_or(f64::INFINITY);
            if distance <= r {
                return Err(CoverError::MembersTooClose { a: i, b: j, distance, margin: r });
            }
        }
    }
    let d = members.iter().map(|m| m.d).fold(f64::INFINITY, f64::min);
    let d = if d.is_finite() { d } else { saturating.d };
    if r < d {
        return Err(CoverError::Invariant(format!("separation {r} is below the member margin {d}")));
    }
    let colors = members.iter().map(|m| m.colors()).chain([saturating.colors()]).max().unwrap_or(0);
    let big_r = members.iter().map(|m| m.b).fold(0.0, f64::max);
    let mut families = vec![Vec::new(); colors];
    for (m, out) in members.iter().zip(&outside) {
        for (c, fam) in m.families.iter().enumerate() {
            families[c].extend(fam.iter().map(|s| s.intersection(out)).filter(|s| !s.is_empty()));
        }
    }
    let universe = outside.iter().fold(PointSet::empty(), |acc, o| acc.union(o));
    let pieces = ColoredDecomposition::new(space.clone(), universe, families, d, big_r)?;
    let mut sat_families = saturating.families.clone();
    sat_families.resize(colors, Vec::new());
    let sat = ColoredDecomposition::new(space, y.clone(), sat_families, saturating.d, saturating.b)?;
    finite_union_cover(&pieces, &sat, d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub colors: usize,
    pub mode: String,
    pub seconds: f64,
}

/// Color counts across scales with `B = m * D`; exact where the carving is
/// within the cap, greedy elsewhere, each row labeled accordingly.
pub fn scale_dimension_profile(
    space: &Arc<FiniteMetricSpace>,
    d_list: &[f64],
    multiplier: f64,
) -> Result<Vec<ProfileRow>, CoverError> {
    let universe = space.all_points();
    d_list
        .iter()
        .map(|&d| {
            let start = Instant::now();
            let b = multiplier * d;
            let solved = best_effort_decomposition(space, &universe, d, b)?;
            Ok(ProfileRow {
                d,
                b,
                colors: solved.decomposition.colors(),
                mode: solved.kind.label().to_string(),
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// `d(x, A)` for each `x` in `universe`, used by callers needing bulk depths.
pub fn distances_to(space: &FiniteMetricSpace, universe: &PointSet, a: &PointSet) -> Vec<f64> {
    universe.iter().map(|x| point_set_distance(space, x, a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Arc<FiniteMetricSpace> {
        Arc::new(FiniteMetricSpace::path(n).unwrap())
    }

    fn sets(v: &[&[usize]]) -> Vec<PointSet> {
        v.iter().map(|s| PointSet::new(s.iter().copied())).collect()
    }

    #[test]
    fn multiplicity_examples() {
        let p = path(4);
        let c = Cover::new(p.clone(), sets(&[&[0, 1], &[2, 3]])).unwrap();
        assert_eq!(multiplicity(&c), 1);
        let c = Cover::new(p.clone(), sets(&[&[0, 1, 2], &[1, 2, 3]])).unwrap();
        assert_eq!(multiplicity(&c), 2);
        let c = Cover::new(p.clone(), vec![p.all_points(); 3]).unwrap();
        assert_eq!(multiplicity(&c), 3);
    }

    #[test]
    fn r_multiplicity_examples() {
        let p = path(4);
        let c = Cover::new(p.clone(), sets(&[&[0, 1, 2], &[1, 2, 3]])).unwrap();
        assert_eq!(r_multiplicity(&c, 0.0), multiplicity(&c));
        let c = Cover::new(p.clone(), sets(&[&[0, 1], &[2, 3]])).unwrap();
        assert_eq!(r_multiplicity(&c, 1.0), 2);
        assert_eq!(r_multiplicity(&c, 3.0), 2);
    }

    #[test]
    fn lebesgue_examples() {
        let p = path(4);
        let c = Cover::new(p.clone(), vec![p.all_points()]).unwrap();
        assert!(lebesgue_number(&c).is_infinite());
        let c = Cover::new(p.clone(), sets(&[&[0, 1, 2], &[1, 2, 3]])).unwrap();
        assert_eq!(lebesgue_number(&c), 2.0);
        let two = path(2);
        let c = Cover::new(two, sets(&[&[0], &[1]])).unwrap();
        assert_eq!(lebesgue_number(&c), 1.0);
    }

    #[test]
    fn mesh_and_disjointness() {
        let p = path(10);
        let c = Cover::family(p.clone(), p.all_points(), sets(&[&[0], &[5]])).unwrap();
        assert!(c.is_relaxed());
        assert_eq!(mesh(&c), 0.0);
        assert_eq!(family_mesh(&p, &sets(&[&[0, 1, 2]])), 2.0);
        assert_eq!(mesh(&Cover::new(p.clone(), vec![p.all_points()]).unwrap()), 9.0);
        let fam = sets(&[&[0, 1], &[4, 5]]);
        assert!(is_d_disjoint(&p, &fam[..1], 100.0));
        assert!(is_d_disjoint(&p, &fam, 2.0));
        assert_eq!(disjointness_witness(&p, &fam, 3.0), Some((0, 1, 3.0)));
    }

    #[test]
    fn enlarge_examples() {
        let p = path(10);
        let c = Cover::family(p.clone(), p.all_points(), sets(&[&[0], &[9]])).unwrap();
        assert_eq!(enlarge(&c, 0.0), c);
        assert_eq!(enlarge(&c, 2.0).sets(), &sets(&[&[0, 1, 2], &[7, 8, 9]])[..]);
        assert!(enlarge(&c, 9.0).sets().iter().all(|s| *s == p.all_points()));
    }

    #[test]
    fn saturated_union_examples() {
        let p = path(11);
        let v = sets(&[&[0, 1]]);
        let u = sets(&[&[3], &[10]]);
        assert_eq!(saturated_union(&p, &v, &[], 3.0), v);
        assert_eq!(saturated_union(&p, &v, &u, 3.0), sets(&[&[0, 1, 3], &[10]]));
        assert_eq!(saturated_union(&p, &v, &u, 9.0).len(), 1);
    }

    #[test]
    fn decomposition_validation() {
        let p = path(10);
        let ok = ColoredDecomposition::new(
            p.clone(),
            p.all_points(),
            vec![sets(&[&[0, 1, 2], &[6, 7, 8]]), sets(&[&[3, 4, 5], &[9]])],
            2.0,
            2.0,
        );
        assert!(ok.is_ok());
        let err = ColoredDecomposition::new(
            p.clone(),
            p.all_points(),
            vec![sets(&[&[0, 1, 2], &[4, 5, 6, 7, 8, 9]]), sets(&[&[3]])],
            1.0,
            2.0,
        )
        .unwrap_err();
        assert!(matches!(err, CoverError::MeshExceeded { color: 0, set: 1, .. }));
        let err =
            ColoredDecomposition::new(p.clone(), p.all_points(), vec![sets(&[&[0, 1, 2, 3, 4]])], 1.0, 9.0)
                .unwrap_err();
        assert_eq!(err, CoverError::Uncovered(5));
    }

    #[test]
    fn decomposition_solver_examples() {
        let p = path(10);
        let s = colored_decomposition(&p, &p.all_points(), 0.5, 0.0, SolveMode::Exact).unwrap();
        assert_eq!(s.decomposition.colors(), 1);
        assert_eq!(s.decomposition.families()[0].len(), 10);
        let s = colored_decomposition(&p, &p.all_points(), 2.0, 2.0, SolveMode::Exact).unwrap();
        assert_eq!(s.decomposition.colors(), 2);
        assert_eq!(s.kind, ColorCountKind::ExactOverCarved);
        let g = colored_decomposition(&p, &p.all_points(), 2.0, 2.0, SolveMode::Greedy).unwrap();
        assert!(g.decomposition.colors() >= 2);
    }

    #[test]
    fn exact_cap_is_enforced() {
        let p = path(64);
        let err = colored_decomposition(&p, &p.all_points(), 1.0, 0.0, SolveMode::Exact).unwrap_err();
        assert_eq!(err, CoverError::ExactCapExceeded { clusters: 64, cap: EXACT_CLUSTER_CAP });
        assert!(best_effort_decomposition(&p, &p.all_points(), 1.0, 0.0).is_ok());
    }

    #[test]
    fn coloring_is_lexicographically_first() {
        // triangle plus pendant: 0-1, 1-2, 0-2, 2-3
        let adj = vec![vec![1, 2], vec![0, 2], vec![0, 1, 3], vec![2]];
        assert_eq!(exact_coloring(&adj), vec![0, 1, 2, 0]);
        let sizes = [1, 1, 5, 1];
        assert_eq!(greedy_coloring(&adj, &sizes), vec![1, 2, 0, 1]);
    }

    #[test]
    fn disjoint_to_cover_examples() {
        let p = path(10);
        let one = ColoredDecomposition::new(p.clone(), p.all_points(), vec![vec![p.all_points()]], 3.0, 9.0)
            .unwrap();
        assert_eq!(disjoint_to_cover(&one).unwrap().len(), 1);
        let bricks = ColoredDecomposition::new(
            p.clone(),
            p.all_points(),
            vec![sets(&[&[0, 1, 2], &[6, 7, 8]]), sets(&[&[3, 4, 5], &[9]])],
            2.0,
            2.0,
        )
        .unwrap();
        let c = disjoint_to_cover(&bricks).unwrap();
        assert_eq!(multiplicity(&c), 2);
        assert!(lebesgue_number(&c) > 1.0);
        let zero = bricks.relabel(0.0, 2.0).unwrap();
        let c = disjoint_to_cover(&zero).unwrap();
        assert_eq!(c.sets(), &sets(&[&[0, 1, 2], &[6, 7, 8], &[3, 4, 5], &[9]])[..]);
    }

    #[test]
    fn finite_union_examples() {
        let p = path(10);
        let left = PointSet::new(0..5);
        let right = PointSet::new(5..10);
        let a = colored_decomposition(&p, &left, 1.0, 1.0, SolveMode::Exact).unwrap().decomposition;
        let empty = ColoredDecomposition::new(p.clone(), PointSet::empty(), vec![], 0.0, 0.0).unwrap();
        assert_eq!(finite_union_cover(&a, &empty, 1.0).unwrap().families(), a.families());

        let singles_a =
            ColoredDecomposition::new(p.clone(), PointSet::singleton(0), vec![sets(&[&[0]])], 1.0, 0.0).unwrap();
        let singles_b =
            ColoredDecomposition::new(p.clone(), PointSet::singleton(9), vec![sets(&[&[9]])], 1.0, 0.0).unwrap();
        let merged = finite_union_cover(&singles_a, &singles_b, 1.0).unwrap();
        assert_eq!(merged.sets().count(), 2);

        let b = colored_decomposition(&p, &right, 2.0 * 1.0 + a.bound(), 1.0, SolveMode::Exact)
            .unwrap()
            .decomposition;
        let (a, b) = pad(a, b);
        let w = finite_union_cover(&a, &b, 1.0).unwrap();
        assert_eq!(*w.universe(), p.all_points());
        for f in w.families() {
            assert!(is_d_disjoint(&p, f, 1.0));
        }
        assert!(w.mesh() <= b.bound() + 2.0 * (1.0 + a.bound()));
    }

    fn pad(a: ColoredDecomposition, b: ColoredDecomposition) -> (ColoredDecomposition, ColoredDecomposition) {
        let k = a.colors().max(b.colors());
        let grow = |x: ColoredDecomposition| {
            let mut f = x.families().to_vec();
            f.resize(k, Vec::new());
            ColoredDecomposition::new(x.space().clone(), x.universe().clone(), f, x.disjointness(), x.bound())
                .unwrap()
        };
        (grow(a), grow(b))
    }

    #[test]
    fn finite_union_rejects_mismatch() {
        let p = path(10);
        let a = ColoredDecomposition::new(p.clone(), PointSet::new(0..2), vec![sets(&[&[0, 1]])], 1.0, 1.0)
            .unwrap();
        let b = ColoredDecomposition::new(
            p.clone(),
            PointSet::new([5, 9]),
            vec![sets(&[&[5]]), sets(&[&[9]])],
            1.0,
            0.0,
        )
        .unwrap();
        assert_eq!(finite_union_cover(&a, &b, 1.0).unwrap_err(), CoverError::ColorMismatch(1, 2));
    }

    #[test]
    fn uniform_decomposition_transport() {
        let p = path(10);
        let shifted: Vec<Vec<f64>> = (0..10).map(|a| (0..10).map(|b| p.dist(a, b)).collect()).collect();
        let q = Arc::new(FiniteMetricSpace::from_matrix(&shifted).unwrap());
        let out = uniform_decomposition(&[p.clone(), q], &[(0..10).collect()], 2.0, 2.0, SolveMode::Exact)
            .unwrap();
        assert_eq!(out[0].colors(), out[1].colors());

        let c = Arc::new(FiniteMetricSpace::cycle(4).unwrap());
        let rot = vec![1, 2, 3, 0];
        let out =
            uniform_decomposition(&[c.clone(), c.clone()], &[rot], 0.5, 0.0, SolveMode::Exact).unwrap();
        for d in &out {
            d.verify().unwrap();
        }
        let bad = vec![0, 2, 1, 3];
        let err = uniform_decomposition(&[c.clone(), c], &[bad], 0.5, 0.0, SolveMode::Exact).unwrap_err();
        assert!(matches!(err, CoverError::NotIsometry { index: 1, .. }));
    }

    #[test]
    fn union_cover_far_intervals() {
        let p = path(30);
        let a = colored_decomposition(&p, &PointSet::new(0..5), 1.0, 2.0, SolveMode::Exact)
            .unwrap()
            .decomposition;
        let b = colored_decomposition(&p, &PointSet::new(20..25), 1.0, 2.0, SolveMode::Exact)
            .unwrap()
            .decomposition;
        let empty = ColoredDecomposition::new(p.clone(), PointSet::empty(), vec![], 0.0, 0.0).unwrap();
        let u = union_cover(&[a.clone(), b.clone()], &empty, 5.0).unwrap();
        assert_eq!(u.sets().count(), a.sets().count() + b.sets().count());
        assert_eq!(u.colors(), a.colors().max(b.colors()));
        let err = union_cover(&[a.clone(), b], &empty, 20.0).unwrap_err();
        assert!(matches!(err, CoverError::MembersTooClose { .. }));
    }

    #[test]
    fn profile_single_point() {
        let one = Arc::new(FiniteMetricSpace::from_matrix(&[vec![0.0]]).unwrap());
        let rows = scale_dimension_profile(&one, &[1.0, 2.0], 3.0).unwrap();
        assert!(rows.iter().all(|r| r.colors == 1));
    }
}
