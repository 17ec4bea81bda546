//! Free products of pointed metric spaces and their coset trees.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GroupError;
use crate::metric::{FiniteMetricSpace, MetricMap, PointSet, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Factor {
    X,
    Y,
}

impl Factor {
    pub fn other(self) -> Factor {
        match self {
            Factor::X => Factor::Y,
            Factor::Y => Factor::X,
        }
    }
}

/// A letter: a non-basepoint of one factor. Serializes as `[factor, index]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Letter(pub Factor, pub usize);

/// Alternating word; the empty word is the basepoint `ẽ`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FreeProductWord(Vec<Letter>);

impl FreeProductWord {
    pub fn empty() -> Self {
        FreeProductWord(Vec::new())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last_factor(&self) -> Option<Factor> {
        self.0.last().map(|l| l.0)
    }

    pub fn prefix(&self, k: usize) -> FreeProductWord {
        FreeProductWord(self.0[..k].to_vec())
    }

    /// Representative of the coset `wF`: `w` without a trailing `F` letter.
    pub fn coset_rep(&self, f: Factor) -> FreeProductWord {
        if self.last_factor() == Some(f) {
            self.prefix(self.len() - 1)
        } else {
            self.clone()
        }
    }

    fn pushed(&self, l: Letter) -> FreeProductWord {
        let mut v = self.0.clone();
        v.push(l);
        FreeProductWord(v)
    }
}

impl fmt::Display for FreeProductWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for Letter(factor, p) in &self.0 {
            match factor {
                Factor::X => write!(f, "x{p}")?,
                Factor::Y => write!(f, "y{p}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PointedSpace {
    pub space: Arc<FiniteMetricSpace>,
    pub base: usize,
}

impl PointedSpace {
    pub fn new(space: Arc<FiniteMetricSpace>, base: usize) -> Result<Self, GroupError> {
        space.check_point(base)?;
        Ok(PointedSpace { space, base })
    }

    /// Smallest `d(p, base)` over non-basepoints; infinite for a one-point space.
    pub fn min_letter_norm(&self) -> f64 {
        (0..self.space.len()).filter(|&p| p != self.base).map(|p| self.space.dist(p, self.base)).fold(f64::INFINITY, f64::min)
    }
}

/// Which distance to put on words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordMetric {
    /// `d(uv, uv') = ‖v‖ + ‖v'‖` with `u` the longest common beginning.
    Literal,
    /// As `Literal`, except that when `v` and `v'` start in the same factor
    /// the two first letters contribute their factor distance.
    Slotwise,
}

/// The free product `X ∗̂ Y` with its norm and metrics.
#[derive(Debug, Clone)]
pub struct FreeProduct {
    pub x: PointedSpace,
    pub y: PointedSpace,
    /// Both factor metrics are multiplied by this before use.
    pub scale: f64,
}

impl FreeProduct {
    /// Rejects factors with a letter of norm below 1 unless `rescale` is set,
    /// in which case both factors are scaled up so the smallest letter has norm 1.
    pub fn new(x: PointedSpace, y: PointedSpace, rescale: bool) -> Result<Self, GroupError> {
        let (mx, my) = (x.min_letter_norm(), y.min_letter_norm());
        let min = mx.min(my);
        let scale = if min >= 1.0 {
            1.0
        } else if rescale {
            1.0 / min
        } else {
            let factor = if mx <= my { 'X' } else { 'Y' };
            return Err(GroupError::LetterNorm { factor, min });
        };
        Ok(FreeProduct { x, y, scale })
    }

    /// Lipschitz constant of the identity from the unscaled product to this one.
    pub fn induced_lipschitz(&self) -> f64 {
        self.scale.max(1.0)
    }

    pub fn factor(&self, f: Factor) -> &PointedSpace {
        match f {
            Factor::X => &self.x,
            Factor::Y => &self.y,
        }
    }

    /// Checks alternation, basepoint-freeness and ranges.
    pub fn word(&self, letters: Vec<Letter>) -> Result<FreeProductWord, GroupError> {
        for (i, l) in letters.iter().enumerate() {
            let f = self.factor(l.0);
            if l.1 >= f.space.len() {
                return Err(GroupError::BadWord(format!("letter {i} indexes past the factor")));
            }
            if l.1 == f.base {
                return Err(GroupError::BadWord(format!("letter {i} is a basepoint")));
            }
            if i > 0 && letters[i - 1].0 == l.0 {
                return Err(GroupError::BadWord(format!("letters {} and {i} share a factor", i - 1)));
            }
        }
        Ok(FreeProductWord(letters))
    }

    pub fn letter_norm(&self, l: &Letter) -> f64 {
        let f = self.factor(l.0);
        self.scale * f.space.dist(l.1, f.base)
    }

    pub fn norm(&self, letters: &[Letter]) -> f64 {
        letters.iter().map(|l| self.letter_norm(l)).sum()
    }

    pub fn distance(&self, a: &FreeProductWord, b: &FreeProductWord, metric: WordMetric) -> f64 {
        let common = a.0.iter().zip(&b.0).take_while(|(p, q)| p == q).count();
        let (v, w) = (&a.0[common..], &b.0[common..]);
        match (metric, v.first(), w.first()) {
            (WordMetric::Slotwise, Some(p), Some(q)) if p.0 == q.0 => {
                self.scale * self.factor(p.0).space.dist(p.1, q.1) + self.norm(&v[1..]) + self.norm(&w[1..])
            }
            _ => self.norm(v) + self.norm(w),
        }
    }

    /// All words of norm at most `max_norm`, ordered by length then letters.
    pub fn enumerate(&self, max_norm: f64, cap: usize) -> Result<Vec<FreeProductWord>, GroupError> {
        let limit = max_norm + 1e-9;
        let mut out = vec![FreeProductWord::empty()];
        let mut frontier = vec![(FreeProductWord::empty(), 0.0)];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for (w, norm) in &frontier {
                let factors: &[Factor] = match w.last_factor() {
                    None => &[Factor::X, Factor::Y],
                    Some(Factor::X) => &[Factor::Y],
                    Some(Factor::Y) => &[Factor::X],
                };
                for &f in factors {
                    let pointed = self.factor(f);
                    for p in (0..pointed.space.len()).filter(|&p| p != pointed.base) {
                        let l = Letter(f, p);
                        let total = norm + self.letter_norm(&l);
                        if total <= limit {
                            next.push((w.pushed(l), total));
                        }
                    }
                }
            }
            next.sort_by(|a, b| a.0.cmp(&b.0));
            out.extend(next.iter().map(|(w, _)| w.clone()));
            if out.len() > cap {
                return Err(GroupError::CapExceeded { size: out.len(), cap });
            }
            frontier = next;
        }
        Ok(out)
    }
}

/// A truncation of `X ∗̂ Y` as a finite metric space.
#[derive(Debug, Clone)]
pub struct WordSpace {
    pub product: FreeProduct,
    pub metric: WordMetric,
    pub max_norm: f64,
    pub words: Vec<FreeProductWord>,
    pub index: HashMap<FreeProductWord, usize>,
    pub space: Arc<FiniteMetricSpace>,
}

pub const WORD_CAP: usize = 20_000;

pub fn free_product_space(
    product: FreeProduct,
    max_norm: f64,
    metric: WordMetric,
    cap: usize,
) -> Result<WordSpace, GroupError> {
    let words = product.enumerate(max_norm, cap)?;
    let n = words.len();
    let dist: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (words, product) = (&words, &product);
            (0..n).map(move |j| product.distance(&words[i], &words[j], metric))
        })
        .collect();
    let labels = words.iter().map(ToString::to_string).collect();
    let space = FiniteMetricSpace::from_distances(n, dist, Provenance::FreeProduct, Some(labels))?;
    Ok(WordSpace {
        index: words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect(),
        product,
        metric,
        max_norm,
        words,
        space: Arc::new(space),
    })
}

/// The coset tree: vertices `uX`, `vY`, with `uX ~ vY` when `v ∈ uX` or `u ∈ vY`.
/// Every edge has length ½.
#[derive(Debug, Clone)]
pub struct CosetTree {
    pub vertices: Vec<(Factor, FreeProductWord)>,
    pub index: HashMap<(Factor, FreeProductWord), usize>,
    pub edges: Vec<(usize, usize)>,
    pub space: Arc<FiniteMetricSpace>,
}

pub const TREE_EDGE_LENGTH: f64 = 0.5;

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

pub fn free_product_tree(ws: &WordSpace) -> Result<CosetTree, GroupError> {
    let mut set: BTreeSet<(usize, FreeProductWord, Factor)> = BTreeSet::new();
    for w in &ws.words {
        for f in [Factor::X, Factor::Y] {
            let rep = w.coset_rep(f);
            set.insert((rep.len(), rep, f));
        }
    }
    let vertices: Vec<(Factor, FreeProductWord)> = set.into_iter().map(|(_, w, f)| (f, w)).collect();
    let index: HashMap<(Factor, FreeProductWord), usize> =
        vertices.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
    let mut edge_set = BTreeSet::new();
    for (i, (f, rep)) in vertices.iter().enumerate() {
        let other = f.other();
        let j = index[&(other, rep.coset_rep(other))];
        edge_set.insert((i.min(j), i.max(j)));
    }
    let edges: Vec<(usize, usize)> = edge_set.into_iter().collect();

    let mut parent: Vec<usize> = (0..vertices.len()).collect();
    for &(a, b) in &edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return Err(GroupError::NotATree(format!("cycle through edge {a}-{b}")));
        }
        parent[ra] = rb;
    }
    let root = find(&mut parent, 0);
    if (0..vertices.len()).any(|v| find(&mut parent, v) != root) {
        return Err(GroupError::NotATree("coset graph is disconnected".into()));
    }

    let weighted: Vec<(usize, usize, f64)> = edges.iter().map(|&(a, b)| (a, b, TREE_EDGE_LENGTH)).collect();
    let labels = vertices
        .iter()
        .map(|(f, w)| format!("{w}{}", if *f == Factor::X { "X" } else { "Y" }))
        .collect();
    let space = FiniteMetricSpace::from_graph(vertices.len(), &weighted)?.with_labels(labels);
    Ok(CosetTree { vertices, index, edges, space: Arc::new(space) })
}

/// `u ↦ uX`.
pub fn tree_projection(ws: &WordSpace, tree: &CosetTree) -> Result<MetricMap<FiniteMetricSpace>, GroupError> {
    let images = ws.words.iter().map(|w| tree.index[&(Factor::X, w.coset_rep(Factor::X))]).collect();
    Ok(MetricMap::new(ws.space.clone(), tree.space.clone(), images)?)
}

/// Words of length `k`, split by the factor of the last letter.
/// For `k = 0` both halves are `{ẽ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub k: usize,
    pub all: PointSet,
    pub ending_x: PointSet,
    pub ending_y: PointSet,
}

pub fn word_stratification(ws: &WordSpace, k: usize) -> Stratum {
    let all: PointSet = (0..ws.words.len()).filter(|&i| ws.words[i].len() == k).collect();
    if k == 0 {
        return Stratum { k, ending_x: all.clone(), ending_y: all.clone(), all };
    }
    let ending = |f: Factor| all.iter().filter(|&i| ws.words[i].last_factor() == Some(f)).collect();
    Stratum { k, ending_x: ending(Factor::X), ending_y: ending(Factor::Y), all }
}

/// Checks `P^X_{k+1} ⊆ P^Y_k · X` and `P^Y_{k+1} ⊆ P^X_k · Y` for every length
/// present; returns the number of words checked, or the first violating word.
pub fn stratification_inclusions(ws: &WordSpace) -> Result<usize, String> {
    let max_len = ws.words.iter().map(FreeProductWord::len).max().unwrap_or(0);
    let mut checked = 0;
    for k in 0..max_len {
        let lower = word_stratification(ws, k);
        let upper = word_stratification(ws, k + 1);
        for (f, top, bottom) in [(Factor::X, &upper.ending_x, &lower.ending_y), (Factor::Y, &upper.ending_y, &lower.ending_x)] {
            for i in top.iter() {
                let w = &ws.words[i];
                let ok = w.last_factor() == Some(f)
                    && ws.index.get(&w.prefix(k)).is_some_and(|&p| bottom.contains(p));
                if !ok {
                    return Err(w.to_string());
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}
