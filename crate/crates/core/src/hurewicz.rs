//! The tower of maps behind the Hurewicz-type bound
//! `asdim X ≤ asdim Y + n` for a Lipschitz map `f: X → Y`, built at one scale.
//!
//! A base decomposition 𝒲 of `f(X)` gives weights `s_W(x)`, and through them a
//! point of the barycentric subdivision of the nerve of the `λr`-enlarged
//! base. Each cell σ of that nerve carries a cover of `f⁻¹(N_{λr}(∪σ))`,
//! and the cells of a flag are stacked through mapping cylinders into a
//! polyhedron `K`. The assembled map `Φ: X → K` is measured on all pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::covers::{
    best_effort_decomposition, disjoint_to_cover, enlarge, lebesgue_number, mesh, multiplicity,
    ColoredDecomposition, Cover, CoverError,
};
use crate::metric::{
    measured_lipschitz, point_set_distance, FiniteMetricSpace, MetricMap, PairBudget, PointSet,
    Provenance,
};
use crate::polyhedra::{
    canonical_projection, cylinder_point, cylinder_simplices, polyhedron_distance, EmbeddedPoint,
    PolyhedronError, SimplicialComplex,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HurewiczError {
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("scale r must be positive, got {0}")]
    BadScale(f64),
    #[error("uniformization constant c_{index} = {value} is below 1")]
    ConstantBelowOne { index: usize, value: f64 },
    #[error("no uniformization constant for dimension {0}")]
    MissingConstant(usize),
    #[error("Lebesgue number {value} at level {level} is not positive")]
    BadLebesgue { level: usize, value: f64 },
    #[error("domain is not discrete geodesic: no unit step from {a} toward {b}")]
    NotGeodesic { a: usize, b: usize },
    #[error("stage {stage}: {detail}")]
    Stage { stage: &'static str, detail: String },
    #[error("point {0} lies outside the fiber union of the tower")]
    OutsideFiber(usize),
    #[error("non-isometric action: generator {generator} moves d({a},{b}) = {before} to {after}")]
    NotIsometric { generator: usize, a: usize, b: usize, before: f64, after: f64 },
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Polyhedron(#[from] PolyhedronError),
}

fn stage(stage: &'static str, detail: impl Into<String>) -> HurewiczError {
    HurewiczError::Stage { stage, detail: detail.into() }
}

fn check_table(c_table: &[f64], from: usize, count: usize) -> Result<(), HurewiczError> {
    for index in from..from + count {
        let value = *c_table.get(index).ok_or(HurewiczError::MissingConstant(index))?;
        if !(value >= 1.0) {
            return Err(HurewiczError::ConstantBelowOne { index, value });
        }
    }
    Ok(())
}

/// `(2n+3)² 6^k c_n c_{n+1} ⋯ c_{n+k-1} / ε`, with `c_table[i] = c_i`.
pub fn required_scale(epsilon: f64, n: usize, k: usize, c_table: &[f64]) -> Result<f64, HurewiczError> {
    if !(epsilon > 0.0) {
        return Err(HurewiczError::BadEpsilon(epsilon));
    }
    check_table(c_table, n, k)?;
    let product: f64 = c_table.get(n..n + k).unwrap_or(&[]).iter().product();
    Ok(((2 * n + 3) as f64).powi(2) * 6f64.powi(k as i32) * product / epsilon)
}

/// `λ_0 = (2n+3)²/L_0` and for `p ≥ 1`
/// `λ_p = max{c_{n+p-1}√2·max{λ_{p-1}, 2/(λr)}, 4/(λr) + 2λ_{p-1} + 2(2n+3)²/L_p}`.
pub fn lipschitz_recursion(
    n: usize,
    lambda: f64,
    r: f64,
    c_table: &[f64],
    l_values: &[f64],
) -> Result<Vec<f64>, HurewiczError> {
    for (level, &value) in l_values.iter().enumerate() {
        if !(value > 0.0) {
            return Err(HurewiczError::BadLebesgue { level, value });
        }
    }
    let k = l_values.len().saturating_sub(1);
    check_table(c_table, n, k)?;
    let a = ((2 * n + 3) as f64).powi(2);
    let lr = lambda * r;
    let mut out = Vec::with_capacity(l_values.len());
    for (p, &l) in l_values.iter().enumerate() {
        let value = if p == 0 {
            a / l
        } else {
            let prev = out[p - 1];
            let c = c_table[n + p - 1];
            (c * std::f64::consts::SQRT_2 * f64::max(prev, 2.0 / lr))
                .max(4.0 / lr + 2.0 * prev + 2.0 * a / l)
        };
        out.push(value);
    }
    Ok(out)
}

/// `((2n+3)²/r) · Π_{j<p} max{c_{n+j}√2, 6}`.
pub fn closed_form_bound(n: usize, r: f64, c_table: &[f64], p: usize) -> Result<f64, HurewiczError> {
    check_table(c_table, n, p)?;
    let a = ((2 * n + 3) as f64).powi(2) / r;
    Ok(c_table.get(n..n + p).unwrap_or(&[]).iter().fold(a, |acc, &c| acc * f64::max(c * std::f64::consts::SQRT_2, 6.0)))
}

/// Every pair at distance `d > 1` has a neighbor of the first point one unit closer.
pub fn discrete_geodesic_witness(space: &FiniteMetricSpace) -> Option<(usize, usize)> {
    let n = space.len();
    (0..n).into_par_iter().find_map_first(|a| {
        let row = space.row(a);
        let neighbors: Vec<usize> = (0..n).filter(|&z| row[z] == 1.0).collect();
        (0..n).find_map(|b| {
            let d = row[b];
            if d == 0.0 || d == 1.0 {
                return None;
            }
            let ok = d.fract() == 0.0 && neighbors.iter().any(|&z| space.dist(z, b) == d - 1.0);
            if ok {
                None
            } else {
                Some((a, b))
            }
        })
    })
}

/// Parameters of one assembly.
#[derive(Debug, Clone)]
pub struct HurewiczConfig {
    pub f: MetricMap<FiniteMetricSpace>,
    /// Lipschitz constant of `f`, clamped up to 1.
    pub lambda: f64,
    pub epsilon: f64,
    /// Color bound for fiber decompositions is `n + 1`.
    pub n: usize,
    /// Color bound for the base decomposition is `k + 1`.
    pub k: usize,
    pub r: f64,
    pub required_r: f64,
    /// `c_table[i]` is the uniformization constant for dimension `i`.
    pub c_table: Vec<f64>,
    /// Fiber decompositions at level `i` use `B_i = mesh_multiplier · D_i`.
    pub mesh_multiplier: f64,
}

impl HurewiczConfig {
    /// Uses the declared Lipschitz constant of `f` when present, else the
    /// exact measured one; `r` defaults to [`required_scale`].
    pub fn new(
        f: MetricMap<FiniteMetricSpace>,
        epsilon: f64,
        n: usize,
        k: usize,
        c_table: Vec<f64>,
        r: Option<f64>,
    ) -> Result<Self, HurewiczError> {
        let required_r = required_scale(epsilon, n, k, &c_table)?;
        let r = r.unwrap_or(required_r);
        if !(r > 0.0) {
            return Err(HurewiczError::BadScale(r));
        }
        let lambda = f
            .declared_lipschitz()
            .unwrap_or_else(|| measured_lipschitz(&f, PairBudget::All).constant)
            .max(1.0);
        Ok(HurewiczConfig { f, lambda, epsilon, n, k, r, required_r, c_table, mesh_multiplier: 3.0 })
    }

    pub fn with_mesh_multiplier(mut self, m: f64) -> Self {
        self.mesh_multiplier = m;
        self
    }

    pub fn below_required(&self) -> bool {
        self.r < self.required_r
    }

    /// Disjointness margin and mesh bound of the fiber covers at level `i`.
    pub fn level_scales(&self, i: usize) -> (f64, f64) {
        let mut d = 2.0 * self.r;
        let mut b = self.mesh_multiplier * d;
        for _ in 0..i {
            d = 2.0 * (b + d);
            b = self.mesh_multiplier * d;
        }
        (d, b)
    }
}

/// `max{0, (λr − d(f(x), W))/λr}`.
pub fn t_coordinate(config: &HurewiczConfig, x: usize, w: &PointSet) -> f64 {
    let lr = config.lambda * config.r;
    let d = point_set_distance(config.f.codomain(), *config.f.image(x), w);
    ((lr - d) / lr).max(0.0)
}

/// Base decomposition of `f(X)` with `D = 2λr`, `B = 6λr`.
pub fn base_decomposition(config: &HurewiczConfig) -> Result<ColoredDecomposition, HurewiczError> {
    let lr = config.lambda * config.r;
    let y = config.f.codomain().clone();
    Ok(best_effort_decomposition(&y, &config.f.image_set(), 2.0 * lr, 6.0 * lr)?.decomposition)
}

/// A point's position over the base: the ordered support and the level weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Flag {
    /// Base sets with positive weight, by descending weight then index.
    pub order: Vec<usize>,
    /// Sorted weights `s_(0) = 1 ≥ s_(1) ≥ ...`.
    pub weights: Vec<f64>,
    /// Cells `σ_j` = first `j + 1` entries of `order`, as cell indices.
    pub cells: Vec<usize>,
    /// `θ_j = s_(j) − s_(j+1)`, with `s` past the end taken as 0.
    pub theta: Vec<f64>,
}

impl Flag {
    /// Cells carrying positive weight.
    pub fn active_cells(&self) -> Vec<usize> {
        self.cells.iter().zip(&self.theta).filter(|(_, &t)| t > 0.0).map(|(&c, _)| c).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellLevel {
    pub cell: Vec<usize>,
    pub dim: usize,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub colors: usize,
    pub lebesgue: f64,
    pub mesh: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerReport {
    pub chain: Vec<Vec<usize>>,
    pub lebesgue: Vec<f64>,
    pub lambda: Vec<f64>,
    pub closed_form: f64,
    pub measured: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceAgreement {
    pub pairs: usize,
    pub points_checked: usize,
    pub max_deviation: f64,
    pub witness: Option<(usize, usize, usize)>,
}

impl FaceAgreement {
    pub fn holds(&self, tolerance: f64) -> bool {
        self.max_deviation <= tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurewiczReport {
    pub epsilon: f64,
    pub r: f64,
    pub required_r: f64,
    pub below_required: bool,
    pub lambda: f64,
    pub n: usize,
    pub k: usize,
    pub c_table: Vec<f64>,
    pub base_colors: usize,
    pub base_mesh: f64,
    pub levels: Vec<CellLevel>,
    pub towers: Vec<TowerReport>,
    pub lambda_k_per_simplex: Vec<f64>,
    pub measured_per_simplex: Vec<f64>,
    /// Towers shorter than `k + 1` cells.
    pub short_towers: usize,
    pub measured_lipschitz: f64,
    pub lipschitz_witness: Option<(usize, usize)>,
    pub cobound: f64,
    pub cobound_limit: f64,
    #[serde(rename = "dimK")]
    pub dim_k: isize,
    pub face_agreement: FaceAgreement,
    /// All measurements are exhaustive; no sampling seed is involved.
    pub seed: Option<u64>,
}

impl HurewiczReport {
    pub fn lipschitz_within_epsilon(&self) -> bool {
        self.measured_lipschitz <= self.epsilon * (1.0 + 1e-12)
    }

    pub fn dimension_ok(&self) -> bool {
        self.dim_k <= (self.n + self.k) as isize
    }

    pub fn cobounded(&self) -> bool {
        self.cobound <= self.cobound_limit
    }

    pub fn towers_within_recursion(&self) -> bool {
        self.towers.iter().all(|t| t.measured <= t.lambda[t.lambda.len() - 1] * (1.0 + 1e-9))
    }

    pub fn recursion_within_closed_form(&self) -> bool {
        self.towers.iter().all(|t| t.lambda[t.lambda.len() - 1] <= t.closed_form * (1.0 + 1e-12))
    }
}

/// The assembled map and everything needed to re-evaluate or audit it.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub config: HurewiczConfig,
    pub base: ColoredDecomposition,
    base_sets: Vec<PointSet>,
    /// Simplices of the nerve of the enlarged base, by dimension then lexicographically.
    pub cells: Vec<Vec<usize>>,
    cell_index: HashMap<Vec<usize>, usize>,
    /// Fiber cover attached to each cell.
    pub covers: Vec<Cover>,
    offsets: Vec<usize>,
    vertex_owner: Vec<(usize, usize)>,
    psi: HashMap<(usize, usize), Vec<usize>>,
    /// Maximal flags, as cell-index chains.
    pub chains: Vec<Vec<usize>>,
    pub complex: SimplicialComplex,
    pub flags: Vec<Flag>,
    pub images: Vec<EmbeddedPoint>,
    pub report: HurewiczReport,
}

/// Builds `Φ: X → K` from the default base decomposition.
pub fn assemble(config: HurewiczConfig) -> Result<Assembly, HurewiczError> {
    let base = base_decomposition(&config)?;
    assemble_with_base(config, base)
}

/// Builds `Φ: X → K` over a supplied base decomposition of `f(X)`.
pub fn assemble_with_base(
    config: HurewiczConfig,
    base: ColoredDecomposition,
) -> Result<Assembly, HurewiczError> {
    let x_space = config.f.domain().clone();
    let y_space = config.f.codomain().clone();
    if x_space.provenance() != Provenance::GraphShortestPath
        && x_space.provenance() != Provenance::WordMetricBall
    {
        if let Some((a, b)) = discrete_geodesic_witness(&x_space) {
            return Err(HurewiczError::NotGeodesic { a, b });
        }
    }
    let lr = config.lambda * config.r;

    // base cover
    if base.colors() > config.k + 1 {
        return Err(stage("base", format!("{} colors exceed k + 1 = {}", base.colors(), config.k + 1)));
    }
    if *base.universe() != config.f.image_set() {
        return Err(stage("base", "decomposition does not cover f(X) exactly"));
    }
    let base_sets: Vec<PointSet> = base.sets().cloned().collect();
    let base_cover = Cover::on(y_space.clone(), base.universe().clone(), base_sets.clone())?;
    if multiplicity(&base_cover) > 1 {
        return Err(stage("base", "base sets overlap"));
    }
    let enlarged = enlarge(&base_cover, lr);
    if multiplicity(&enlarged) > config.k + 1 {
        return Err(stage(
            "base",
            format!("λr-enlargement multiplicity {} exceeds k + 1", multiplicity(&enlarged)),
        ));
    }

    // nerve of the enlarged base, as the cells of the subdivision
    let mut cell_set: BTreeSet<Vec<usize>> = BTreeSet::new();
    for y in base.universe().iter() {
        let touching = enlarged.containing(y);
        for mask in 1u64..(1u64 << touching.len()) {
            cell_set.insert(
                touching.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &w)| w).collect(),
            );
        }
    }
    let mut cells: Vec<Vec<usize>> = cell_set.into_iter().collect();
    cells.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    let cell_index: HashMap<Vec<usize>, usize> = cells.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();

    // fiber covers, one per cell, at the scale of the cell's dimension
    let fiber_of = |cell: &[usize]| -> PointSet {
        let target = cell.iter().fold(PointSet::empty(), |acc, &w| acc.union(enlarged.sets().get(w).unwrap()));
        config.f.preimage(&target)
    };
    let built: Vec<Result<(Cover, CellLevel), HurewiczError>> = cells
        .par_iter()
        .map(|cell| {
            let dim = cell.len() - 1;
            let (d, b) = config.level_scales(dim);
            let universe = fiber_of(cell);
            let solved = best_effort_decomposition(&x_space, &universe, d, b)?;
            let colors = solved.decomposition.colors();
            if colors > config.n + 1 {
                return Err(stage(
                    "fiber",
                    format!("cell {cell:?} needs {colors} colors at D = {d}, B = {b}; n + 1 = {}", config.n + 1),
                ));
            }
            let cover = disjoint_to_cover(&solved.decomposition)?;
            let level = CellLevel {
                cell: cell.clone(),
                dim,
                d,
                b,
                colors,
                lebesgue: lebesgue_number(&cover),
                mesh: mesh(&cover),
                points: universe.len(),
            };
            Ok((cover, level))
        })
        .collect();
    let mut covers = Vec::with_capacity(cells.len());
    let mut levels = Vec::with_capacity(cells.len());
    for b in built {
        let (c, l) = b?;
        covers.push(c);
        levels.push(l);
    }

    // Lebesgue chain: each level's Lebesgue number exceeds every lower level's mesh
    for a in &levels {
        for b in &levels {
            if a.dim < b.dim && !(b.lebesgue > a.mesh) {
                return Err(stage(
                    "lebesgue chain",
                    format!("L = {} at {:?} does not exceed mesh {} at {:?}", b.lebesgue, b.cell, a.mesh, a.cell),
                ));
            }
        }
    }

    // global vertex ids: cells in dimension order, so lower levels come first
    let mut offsets = Vec::with_capacity(cells.len());
    let mut vertex_owner = Vec::new();
    for (ci, c) in covers.iter().enumerate() {
        offsets.push(vertex_owner.len());
        vertex_owner.extend((0..c.len()).map(|u| (ci, u)));
    }

    // refinement maps between nested cells: lowest-index containing set
    let mut psi = HashMap::new();
    for (a, ca) in cells.iter().enumerate() {
        for (b, cb) in cells.iter().enumerate() {
            if ca.len() < cb.len() && ca.iter().all(|w| cb.contains(w)) {
                let map = covers[a]
                    .sets()
                    .iter()
                    .enumerate()
                    .map(|(i, u)| {
                        covers[b].sets().iter().position(|v| u.is_subset(v)).ok_or_else(|| {
                            stage("refinement", format!("set {i} of {ca:?} lies in no set of {cb:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                psi.insert((a, b), map);
            }
        }
    }

    // maximal flags: every vertex ordering of every maximal cell
    let maximal: Vec<&Vec<usize>> = cells
        .iter()
        .filter(|c| !cells.iter().any(|d| d.len() > c.len() && c.iter().all(|w| d.contains(w))))
        .collect();
    let mut chains = Vec::new();
    for m in maximal {
        for perm in permutations(m) {
            let chain: Vec<usize> = (1..=perm.len())
                .map(|j| {
                    let mut c = perm[..j].to_vec();
                    c.sort_unstable();
                    cell_index[&c]
                })
                .collect();
            chains.push(chain);
        }
    }
    chains.sort();

    let mut asm = Assembly {
        config,
        base,
        base_sets,
        cells,
        cell_index,
        covers,
        offsets,
        vertex_owner,
        psi,
        chains,
        complex: SimplicialComplex::from_facets(0, vec![])?,
        flags: Vec::new(),
        images: Vec::new(),
        report: placeholder_report(),
    };

    // the complex K: union of the towers' iterated cylinders
    let total = asm.vertex_owner.len();
    let mut facets: BTreeSet<Vec<usize>> = BTreeSet::new();
    for chain in &asm.chains {
        for f in asm.tower_facets(chain)? {
            facets.insert(f);
        }
    }
    asm.complex = SimplicialComplex::from_facets(total, facets)?;

    // Φ on every point
    let n_points = x_space.len();
    asm.flags = (0..n_points).map(|x| asm.flag(x)).collect();
    asm.images = (0..n_points)
        .into_par_iter()
        .map(|x| asm.eval_tower(&asm.flags[x].cells, &asm.flags[x].theta, x))
        .collect::<Result<Vec<_>, _>>()?;
    for (x, p) in asm.images.iter().enumerate() {
        asm.complex
            .validate_point(p)
            .map_err(|e| stage("image", format!("Φ({x}) is not a point of K: {e}")))?;
    }
    asm.report = asm.build_report(levels)?;
    Ok(asm)
}

fn placeholder_report() -> HurewiczReport {
    HurewiczReport {
        epsilon: 0.0,
        r: 0.0,
        required_r: 0.0,
        below_required: false,
        lambda: 0.0,
        n: 0,
        k: 0,
        c_table: Vec::new(),
        base_colors: 0,
        base_mesh: 0.0,
        levels: Vec::new(),
        towers: Vec::new(),
        lambda_k_per_simplex: Vec::new(),
        measured_per_simplex: Vec::new(),
        short_towers: 0,
        measured_lipschitz: 0.0,
        lipschitz_witness: None,
        cobound: 0.0,
        cobound_limit: 0.0,
        dim_k: -1,
        face_agreement: FaceAgreement { pairs: 0, points_checked: 0, max_deviation: 0.0, witness: None },
        seed: None,
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

impl Assembly {
    /// Global vertex id of set `u` of the cover on cell `c`.
    pub fn vertex_id(&self, c: usize, u: usize) -> usize {
        self.offsets[c] + u
    }

    /// `(cell, set)` behind a global vertex id.
    pub fn vertex_owner(&self, v: usize) -> (usize, usize) {
        self.vertex_owner[v]
    }

    pub fn cell_of(&self, cell: &[usize]) -> Option<usize> {
        self.cell_index.get(cell).copied()
    }

    /// The base weights and canonical flag of `x`.
    pub fn flag(&self, x: usize) -> Flag {
        let mut weighted: Vec<(usize, f64)> = self
            .base_sets
            .iter()
            .enumerate()
            .map(|(w, set)| (w, t_coordinate(&self.config, x, set)))
            .filter(|(_, s)| *s > 0.0)
            .collect();
        weighted.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let order: Vec<usize> = weighted.iter().map(|(w, _)| *w).collect();
        let weights: Vec<f64> = weighted.iter().map(|(_, s)| *s).collect();
        let cells = (1..=order.len())
            .map(|j| {
                let mut c = order[..j].to_vec();
                c.sort_unstable();
                self.cell_index[&c]
            })
            .collect();
        let theta = (0..weights.len()).map(|j| weights[j] - weights.get(j + 1).copied().unwrap_or(0.0)).collect();
        Flag { order, weights, cells, theta }
    }

    /// `g_p`: a vertex of a lower level goes to its refinement image in `target`.
    fn g(&self, target: usize, v: usize) -> usize {
        let (c, u) = self.vertex_owner[v];
        if c == target {
            return v;
        }
        self.vertex_id(target, self.psi[&(c, target)][u])
    }

    fn projection(&self, cell: usize, x: usize) -> Result<EmbeddedPoint, HurewiczError> {
        if !self.covers[cell].universe().contains(x) {
            return Err(HurewiczError::OutsideFiber(x));
        }
        Ok(canonical_projection(&self.covers[cell], x)?.push(|u| self.vertex_id(cell, u)))
    }

    /// `φ_k(x)` along `chain` with level weights `theta`:
    /// `φ_0 = p_{𝒰_0}(x)`, then `q_p(φ_{p-1}, 2θ_p)` for `θ_p ≤ ½` and
    /// `2(1−θ_p) g_p(φ_{p-1}) + (2θ_p − 1) p_{𝒰_p}(x)` otherwise.
    pub fn eval_tower(&self, chain: &[usize], theta: &[f64], x: usize) -> Result<EmbeddedPoint, HurewiczError> {
        let mut phi = self.projection(chain[0], x)?;
        for p in 1..chain.len() {
            let th = theta.get(p).copied().unwrap_or(0.0);
            let target = chain[p];
            if th <= 0.5 {
                phi = cylinder_point(&phi, 2.0 * th, |v| self.g(target, v));
            } else {
                let pushed = phi.push(|v| self.g(target, v));
                phi = pushed.combine(2.0 * (1.0 - th), &self.projection(target, x)?, 2.0 * th - 1.0);
            }
        }
        Ok(phi)
    }

    /// Level weights of `x` read along an arbitrary chain containing its active cells.
    pub fn theta_along(&self, chain: &[usize], x: usize) -> Vec<f64> {
        let flag = &self.flags[x];
        chain
            .iter()
            .enumerate()
            .map(|(j, &c)| match (flag.cells.get(j), flag.theta.get(j)) {
                (Some(&fc), Some(&t)) if fc == c => t,
                _ => 0.0,
            })
            .collect()
    }

    /// Points whose active cells all lie in `cells`.
    pub fn points_over(&self, cells: &[usize]) -> Vec<usize> {
        (0..self.flags.len())
            .filter(|&x| self.flags[x].active_cells().iter().all(|c| cells.contains(c)))
            .collect()
    }

    /// Facets of the tower complex `K_τ'` for one chain.
    fn tower_facets(&self, chain: &[usize]) -> Result<Vec<Vec<usize>>, HurewiczError> {
        let nerve_facets = |cell: usize| -> Vec<Vec<usize>> {
            let cover = &self.covers[cell];
            let set: BTreeSet<Vec<usize>> = cover
                .universe()
                .iter()
                .map(|x| cover.containing(x).into_iter().map(|u| self.vertex_id(cell, u)).collect())
                .collect();
            set.into_iter().collect()
        };
        let mut facets = nerve_facets(chain[0]);
        for &target in &chain[1..] {
            let target_nerve = nerve_facets(target);
            let target_set: BTreeSet<Vec<usize>> = target_nerve.iter().cloned().collect();
            let mut next = Vec::new();
            for s in &facets {
                let mut image: Vec<usize> = s.iter().map(|&v| self.g(target, v)).collect();
                image.sort_unstable();
                image.dedup();
                if !target_set.iter().any(|t| image.iter().all(|v| t.contains(v))) {
                    return Err(stage("cylinder", format!("g maps {s:?} to {image:?}, not a simplex")));
                }
                next.extend(cylinder_simplices(s, |v| self.g(target, v)));
            }
            next.extend(target_nerve);
            facets = next;
        }
        Ok(facets)
    }

    /// Compares the towers of every two maximal flags sharing a cell on the
    /// points lying over the shared cells, and both against `Φ`.
    pub fn face_agreement_check(&self) -> Result<FaceAgreement, HurewiczError> {
        let mut pairs = 0;
        let mut points_checked = 0;
        let mut max_deviation: f64 = 0.0;
        let mut witness = None;
        for i in 0..self.chains.len() {
            for j in i..self.chains.len() {
                let (a, b) = (&self.chains[i], &self.chains[j]);
                let shared: Vec<usize> = a.iter().filter(|c| b.contains(c)).copied().collect();
                if shared.is_empty() {
                    continue;
                }
                pairs += 1;
                for x in self.points_over(&shared) {
                    let pa = self.eval_tower(a, &self.theta_along(a, x), x)?;
                    let pb = self.eval_tower(b, &self.theta_along(b, x), x)?;
                    let dev = pa.max_abs_diff(&pb).max(pa.max_abs_diff(&self.images[x]));
                    points_checked += 1;
                    if dev > max_deviation {
                        max_deviation = dev;
                        witness = Some((i, j, x));
                    }
                }
            }
        }
        Ok(FaceAgreement { pairs, points_checked, max_deviation, witness })
    }

    /// Largest `d(x, y)` over pairs whose images lie in a common simplex of `K`.
    pub fn cobound(&self) -> f64 {
        let x_space = self.config.f.domain();
        let n = self.images.len();
        let supports: Vec<Vec<usize>> = self.images.iter().map(EmbeddedPoint::support).collect();
        (0..n)
            .into_par_iter()
            .map(|a| {
                let mut best: f64 = 0.0;
                for b in a + 1..n {
                    let mut joint = supports[a].clone();
                    joint.extend_from_slice(&supports[b]);
                    joint.sort_unstable();
                    joint.dedup();
                    if self.complex.contains(&joint) {
                        best = best.max(x_space.dist(a, b));
                    }
                }
                best
            })
            .reduce(|| 0.0, f64::max)
    }

    fn measure(&self, points: &[usize]) -> (f64, Option<(usize, usize)>) {
        let x_space = self.config.f.domain();
        points
            .par_iter()
            .enumerate()
            .map(|(i, &a)| {
                let mut best = (0.0, None);
                for &b in &points[i + 1..] {
                    let ratio = polyhedron_distance(&self.images[a], &self.images[b]) / x_space.dist(a, b);
                    if ratio > best.0 {
                        best = (ratio, Some((a, b)));
                    }
                }
                best
            })
            .reduce(|| (0.0, None), |p, q| if q.0 > p.0 || (q.0 == p.0 && q.1.is_some() && (p.1.is_none() || q.1 < p.1)) { q } else { p })
    }

    fn build_report(&self, levels: Vec<CellLevel>) -> Result<HurewiczReport, HurewiczError> {
        let cfg = &self.config;
        let all: Vec<usize> = (0..self.images.len()).collect();
        let (measured_lipschitz, lipschitz_witness) = self.measure(&all);
        let mut towers = Vec::new();
        for chain in &self.chains {
            let lebesgue: Vec<f64> = chain.iter().map(|&c| levels[c].lebesgue).collect();
            let lambda = lipschitz_recursion(cfg.n, cfg.lambda, cfg.r, &cfg.c_table, &lebesgue)?;
            let closed_form = closed_form_bound(cfg.n, cfg.r, &cfg.c_table, chain.len() - 1)?;
            let pts = self.points_over(chain);
            let (measured, _) = self.measure(&pts);
            towers.push(TowerReport {
                chain: chain.iter().map(|&c| self.cells[c].clone()).collect(),
                lebesgue,
                lambda,
                closed_form,
                measured,
                points: pts.len(),
            });
        }
        let max_mesh = levels.iter().map(|l| l.mesh).fold(0.0, f64::max);
        let base_mesh = self.base.mesh();
        Ok(HurewiczReport {
            epsilon: cfg.epsilon,
            r: cfg.r,
            required_r: cfg.required_r,
            below_required: cfg.below_required(),
            lambda: cfg.lambda,
            n: cfg.n,
            k: cfg.k,
            c_table: cfg.c_table.clone(),
            base_colors: self.base.colors(),
            base_mesh,
            levels,
            lambda_k_per_simplex: towers.iter().map(|t| t.lambda[t.lambda.len() - 1]).collect(),
            measured_per_simplex: towers.iter().map(|t| t.measured).collect(),
            short_towers: self.chains.iter().filter(|c| c.len() < cfg.k + 1).count(),
            towers,
            measured_lipschitz,
            lipschitz_witness,
            cobound: self.cobound(),
            cobound_limit: f64::max(2.0 * max_mesh, 2.0 * base_mesh),
            dim_k: self.complex.dimension(),
            face_agreement: self.face_agreement_check()?,
            seed: None,
        })
    }

    /// `Φ` as a map into the coordinates of `K`.
    pub fn phi(&self, x: usize) -> &EmbeddedPoint {
        &self.images[x]
    }
}

/// A partial action of group elements on the points of a finite space.
pub trait IsometricAction {
    type Element;
    /// `g · x`, or `None` when it leaves the finite space.
    fn act(&self, g: &Self::Element, x: usize) -> Option<usize>;
}

/// The orbit map `γ ↦ γ·x₀` of a group ball, with `λ = max_s d(s·x₀, x₀)`.
#[derive(Debug, Clone)]
pub struct OrbitReduction {
    pub map: MetricMap<FiniteMetricSpace>,
    pub lambda: f64,
    /// `π⁻¹(B_R(x₀))` for the requested `R`.
    pub w_r: PointSet,
}

/// Checks the generators act isometrically wherever both images are defined,
/// then builds the orbit map on `elements` (the points of `domain`).
pub fn orbit_reduction<A: IsometricAction>(
    action: &A,
    generators: &[A::Element],
    domain: Arc<FiniteMetricSpace>,
    elements: &[A::Element],
    space: Arc<FiniteMetricSpace>,
    x0: usize,
    radius: f64,
) -> Result<OrbitReduction, HurewiczError> {
    for (gi, s) in generators.iter().enumerate() {
        let moved: Vec<Option<usize>> = (0..space.len()).map(|x| action.act(s, x)).collect();
        for a in 0..space.len() {
            for b in a + 1..space.len() {
                if let (Some(sa), Some(sb)) = (moved[a], moved[b]) {
                    let (before, after) = (space.dist(a, b), space.dist(sa, sb));
                    if before != after {
                        return Err(HurewiczError::NotIsometric { generator: gi, a, b, before, after });
                    }
                }
            }
        }
    }
    let images = elements
        .iter()
        .enumerate()
        .map(|(i, g)| {
            action.act(g, x0).ok_or_else(|| stage("orbit", format!("element {i} moves x0 outside the space")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let lambda = generators
        .iter()
        .filter_map(|s| action.act(s, x0).map(|y| space.dist(y, x0)))
        .fold(0.0, f64::max);
    let map = MetricMap::new(domain, space.clone(), images)
        .map_err(|e| stage("orbit", e.to_string()))?
        .with_declared_lipschitz(lambda.max(1.0));
    let target = crate::metric::ball(&space, x0, radius);
    let w_r = map.preimage(&target);
    Ok(OrbitReduction { map, lambda: lambda.max(1.0), w_r })
}

/// Per-point summary used by the CLI.
pub fn image_table(asm: &Assembly) -> BTreeMap<usize, EmbeddedPoint> {
    asm.images.iter().cloned().enumerate().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn projection_config(w: usize, h: usize, n: usize, k: usize, r: Option<f64>) -> HurewiczConfig {
        let x = Arc::new(FiniteMetricSpace::grid(w, h).unwrap());
        let y = Arc::new(FiniteMetricSpace::path(w).unwrap());
        let images = (0..w * h).map(|p| p / h).collect();
        let f = MetricMap::new(x, y, images).unwrap();
        HurewiczConfig::new(f, 1.0, n, k, vec![1.0; 4], r).unwrap()
    }

    #[test]
    fn required_scale_examples() {
        assert_eq!(required_scale(1.0, 1, 1, &[1.0, 1.0]).unwrap(), 150.0);
        assert_eq!(required_scale(0.5, 1, 1, &[1.0, 1.0]).unwrap(), 300.0);
        assert_eq!(required_scale(1.0, 2, 0, &[]).unwrap(), 49.0);
        assert!(matches!(
            required_scale(1.0, 1, 1, &[1.0, 0.5]),
            Err(HurewiczError::ConstantBelowOne { index: 1, .. })
        ));
    }

    #[test]
    fn recursion_examples() {
        let l = lipschitz_recursion(1, 1.0, 150.0, &[1.0, 1.0], &[150.0]).unwrap();
        assert_eq!(l, vec![25.0 / 150.0]);
        let l = lipschitz_recursion(1, 1.0, 150.0, &[1.0, 1.0], &[150.0, 150.0]).unwrap();
        // max{√2·max(1/6, 1/75), 4/150 + 2/6 + 50/150}
        let expected = f64::max(2f64.sqrt() / 6.0, 4.0 / 150.0 + 2.0 / 6.0 + 50.0 / 150.0);
        assert!((l[1] - expected).abs() < 1e-15);
        assert!((l[1] - 0.693_333_333_333_333_3).abs() < 1e-12);
        assert!(l[1] <= closed_form_bound(1, 150.0, &[1.0, 1.0], 1).unwrap());
    }

    #[test]
    fn t_coordinate_examples() {
        let cfg = projection_config(8, 2, 1, 1, Some(4.0));
        let w = PointSet::singleton(0);
        assert_eq!(t_coordinate(&cfg, 0, &w), 1.0);
        assert_eq!(t_coordinate(&cfg, 2 * 2, &w), 0.5);
        assert_eq!(t_coordinate(&cfg, 7 * 2, &w), 0.0);
    }

    #[test]
    fn single_point_base() {
        let x = Arc::new(FiniteMetricSpace::path(12).unwrap());
        let y = Arc::new(FiniteMetricSpace::from_matrix(&[vec![0.0]]).unwrap());
        let f = MetricMap::new(x, y, vec![0; 12]).unwrap();
        let cfg = HurewiczConfig::new(f, 1.0, 1, 0, vec![1.0; 2], Some(1.0)).unwrap();
        let asm = assemble(cfg).unwrap();
        assert_eq!(asm.cells.len(), 1);
        assert!(asm.report.dim_k <= 1);
        for x in 0..12 {
            let direct = canonical_projection(&asm.covers[0], x).unwrap().push(|u| asm.vertex_id(0, u));
            assert_eq!(asm.images[x], direct);
        }
    }

    #[test]
    fn extreme_tower_weights() {
        let cfg = projection_config(30, 3, 1, 1, Some(2.0));
        let asm = assemble(cfg).unwrap();
        let chain = asm.chains.iter().find(|c| c.len() == 2).unwrap().clone();
        let x = asm.points_over(&chain).into_iter().find(|&x| asm.flags[x].cells == chain).unwrap();
        let base = asm.eval_tower(&chain, &[1.0, 0.0], x).unwrap();
        assert_eq!(base, asm.projection(chain[0], x).unwrap());
        let top = asm.eval_tower(&chain, &[0.0, 1.0], x).unwrap();
        assert_eq!(top, asm.projection(chain[1], x).unwrap());
    }

    #[test]
    fn grid_projection_small_scale() {
        let cfg = projection_config(30, 3, 1, 1, Some(2.0));
        let asm = assemble(cfg).unwrap();
        let rep = &asm.report;
        assert!(rep.below_required);
        assert!(rep.dimension_ok());
        assert!(rep.cobounded(), "{} > {}", rep.cobound, rep.cobound_limit);
        assert!(rep.face_agreement.holds(1e-9), "{:?}", rep.face_agreement);
        assert!(rep.recursion_within_closed_form());
        assert!(asm.chains.iter().any(|c| c.len() == 2));
    }

    #[test]
    fn orbit_map_of_a_quotient_action() {
        use crate::groups::cayley::{cayley_ball, AbelianGroup, Element, GroupModel, BALL_CAP};
        use crate::groups::extension::QuotientAction;
        use crate::groups::GroupError;

        let (z2, z) = (AbelianGroup::free(2), AbelianGroup::free(1));
        let g_ball = cayley_ball(&z2, 3, BALL_CAP).unwrap();
        let h_ball = cayley_ball(&z, 6, BALL_CAP).unwrap();
        let phi = |g: &Element| -> Result<Element, GroupError> { Ok(vec![g[0]]) };
        let action = QuotientAction { target: &z, ball: &h_ball, phi: &phi };
        let gens: Vec<Element> = z2.generators().into_iter().map(|(_, g)| g).collect();
        let x0 = h_ball.position(&[0]).unwrap();
        let red = orbit_reduction(&action, &gens, g_ball.space.clone(), &g_ball.elements, h_ball.space.clone(), x0, 1.0)
            .unwrap();
        assert_eq!(red.lambda, 1.0);
        assert_eq!(red.w_r.len(), 17);
        assert!(red.w_r.iter().all(|i| g_ball.elements[i][0].abs() <= 1));
        assert!(measured_lipschitz(&red.map, PairBudget::All).constant <= red.lambda);
    }

    #[test]
    fn geodesic_witness() {
        let m = FiniteMetricSpace::from_matrix(&[
            vec![0.0, 2.0, 2.0],
            vec![2.0, 0.0, 2.0],
            vec![2.0, 2.0, 0.0],
        ])
        .unwrap();
        assert!(discrete_geodesic_witness(&m).is_some());
        assert!(discrete_geodesic_witness(&FiniteMetricSpace::grid(3, 3).unwrap()).is_none());
    }
}
