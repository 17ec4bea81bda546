//! The space of balls `ℋ(X)`, its height map, and empirical checks for maps
//! into trees.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GroupError;
use crate::covers::scale_dimension_profile;
use crate::metric::{
    ball, measured_lipschitz, set_distance, FiniteMetricSpace, MetricMap, PairBudget, PointSet, Provenance,
    RealLine,
};

/// The ball `B_t(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    pub center: usize,
    pub radius: f64,
}

/// `ρ(B_t(x), B_s(y)) = 2 ln((d(x,y) + max{t,s}) / √(ts))`.
pub fn rho(d: f64, t: f64, s: f64) -> f64 {
    2.0 * ((d + t.max(s)) / (t * s).sqrt()).ln()
}

/// `t_0, t_0 q, …, t_0 q^{levels-1}`.
pub fn geometric_radii(t0: f64, q: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|i| t0 * q.powi(i as i32)).collect()
}

#[derive(Debug, Clone)]
pub struct Hyperbolization {
    pub base: Arc<FiniteMetricSpace>,
    /// Center-major, radius-minor.
    pub points: Vec<BallPoint>,
    pub space: Arc<FiniteMetricSpace>,
}

pub fn hyperbolization(base: Arc<FiniteMetricSpace>, radii: &[f64]) -> Result<Hyperbolization, GroupError> {
    if let Some(&bad) = radii.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
        return Err(GroupError::BadRadius(bad));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let points: Vec<BallPoint> =
        (0..base.len()).flat_map(|x| radii.iter().map(move |&t| BallPoint { center: x, radius: t })).collect();
    let n = points.len();
    let mut dist = Vec::with_capacity(n * n);
    for p in &points {
        for q in &points {
            dist.push(if p == q { 0.0 } else { rho(base.dist(p.center, q.center), p.radius, q.radius) });
        }
    }
    let labels = points.iter().map(|p| format!("B_{}({})", p.radius, base.label(p.center))).collect();
    let space = FiniteMetricSpace::from_distances(n, dist, Provenance::Hyperbolization, Some(labels))?;
    Ok(Hyperbolization { base, points, space: Arc::new(space) })
}

/// `π(B_t(x)) = ln t`.
pub fn height_projection(h: &Hyperbolization) -> Result<MetricMap<RealLine>, GroupError> {
    let images = h.points.iter().map(|p| p.radius.ln()).collect();
    Ok(MetricMap::new(h.space.clone(), Arc::new(RealLine), images)?.with_declared_lipschitz(1.0))
}

/// Edges of the tree realizing `space`: pairs with no third point between them.
/// Fails unless there are exactly `n − 1` of them and their path metric is `space`.
pub fn tree_edges(space: &FiniteMetricSpace) -> Result<Vec<(usize, usize)>, GroupError> {
    let n = space.len();
    let tol = space.tolerance();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let d = space.dist(a, b);
            let between = (0..n).any(|c| c != a && c != b && (space.dist(a, c) + space.dist(c, b) - d).abs() <= tol);
            if !between {
                edges.push((a, b));
            }
        }
    }
    if edges.len() + 1 != n.max(1) {
        return Err(GroupError::NotATree(format!("{} adjacent pairs on {n} points", edges.len())));
    }
    let weighted: Vec<(usize, usize, f64)> = edges.iter().map(|&(a, b)| (a, b, space.dist(a, b))).collect();
    let path = FiniteMetricSpace::from_graph(n, &weighted)?;
    for a in 0..n {
        for b in a + 1..n {
            if (path.dist(a, b) - space.dist(a, b)).abs() > tol {
                return Err(GroupError::NotATree(format!("path metric differs at ({a}, {b})")));
            }
        }
    }
    Ok(edges)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub w: usize,
    pub w_prime: usize,
    /// `(r, d(f⁻¹(W)∖B_r, f⁻¹(W')∖B_r))`, infinite once a side empties.
    pub values: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberProfile {
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub vertices: Vec<usize>,
    pub colors: Vec<usize>,
    pub max_colors: usize,
}

/// Empirical evidence for the hypotheses of the tree criterion; no verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeTargetReport {
    pub lipschitz: f64,
    pub separations: Vec<Separation>,
    pub fibers: Vec<FiberProfile>,
    pub seed: u64,
}

pub const TREE_REPORT_SEED: u64 = 0x7ee5_0f75;

/// Samples image vertex pairs `W = {v}`, `W' = {v'}`; separations are taken
/// outside balls around domain point 0. Fibers `f⁻¹(B_R(v))` are profiled at
/// margin `profile_d` with mesh `3·profile_d`.
pub fn tree_target_report(
    f: &MetricMap<FiniteMetricSpace>,
    r_list: &[f64],
    big_r_list: &[f64],
    samples: usize,
    profile_d: f64,
    seed: u64,
) -> Result<TreeTargetReport, GroupError> {
    let tree = f.codomain();
    tree_edges(tree)?;
    let domain = f.domain();
    let lipschitz = measured_lipschitz(f, PairBudget::All).constant;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices: Vec<usize> = f.image_set().iter().collect();

    let mut pairs: Vec<(usize, usize)> =
        vertices.iter().flat_map(|&a| vertices.iter().filter(move |&&b| b > a).map(move |&b| (a, b))).collect();
    pairs.shuffle(&mut rng);
    pairs.truncate(samples);
    pairs.sort_unstable();
    let separations = pairs
        .into_iter()
        .map(|(w, w_prime)| {
            let (a, b) = (f.preimage(&PointSet::singleton(w)), f.preimage(&PointSet::singleton(w_prime)));
            let values = r_list
                .iter()
                .map(|&r| {
                    let inner = ball(domain, 0, r);
                    (r, set_distance(domain, &a.difference(&inner), &b.difference(&inner)).unwrap_or(f64::INFINITY))
                })
                .collect();
            Separation { w, w_prime, values }
        })
        .collect();

    let mut sampled = vertices.clone();
    sampled.shuffle(&mut rng);
    sampled.truncate(samples.max(1));
    sampled.sort_unstable();
    let fibers = big_r_list
        .iter()
        .map(|&big_r| {
            let colors = sampled
                .iter()
                .map(|&v| {
                    let fiber = f.preimage(&ball(tree, v, big_r));
                    let (sub, _) = domain.subspace(&fiber);
                    let rows = scale_dimension_profile(&Arc::new(sub), &[profile_d], 3.0)?;
                    Ok(rows[0].colors)
                })
                .collect::<Result<Vec<usize>, GroupError>>()?;
            Ok(FiberProfile {
                r: big_r,
                d: profile_d,
                vertices: sampled.clone(),
                max_colors: colors.iter().copied().max().unwrap_or(0),
                colors,
            })
        })
        .collect::<Result<_, GroupError>>()?;
    Ok(TreeTargetReport { lipschitz, separations, fibers, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::TripleCheck;

    #[test]
    fn rho_examples() {
        assert_eq!(rho(0.0, 3.0, 3.0), 0.0);
        let e2 = std::f64::consts::E.powi(2);
        assert!((rho(0.0, 1.0, e2) - 2.0).abs() < 1e-12);
        assert!((rho(1.0, 1.0, 1.0) - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn small_hyperbolization() {
        let base = Arc::new(FiniteMetricSpace::path(4).unwrap());
        let h = hyperbolization(base, &geometric_radii(1.0, std::f64::consts::E, 3)).unwrap();
        assert_eq!(h.points.len(), 12);
        assert!(h.space.verify_axioms(TripleCheck::Exhaustive).is_ok());
        let pi = height_projection(&h).unwrap();
        assert_eq!(*pi.image(0), 0.0);
        assert!((pi.image(1) - 1.0).abs() < 1e-12);
        assert!(measured_lipschitz(&pi, PairBudget::All).constant <= 1.0 + 1e-12);
        assert!(matches!(
            hyperbolization(Arc::new(FiniteMetricSpace::path(2).unwrap()), &[1.0, 0.0]),
            Err(GroupError::BadRadius(_))
        ));
    }

    #[test]
    fn tree_recognition() {
        assert_eq!(tree_edges(&FiniteMetricSpace::path(5).unwrap()).unwrap().len(), 4);
        assert!(tree_edges(&FiniteMetricSpace::cycle(5).unwrap()).is_err());
        let star = FiniteMetricSpace::from_graph(4, &[(0, 1, 1.0), (0, 2, 2.0), (0, 3, 0.5)]).unwrap();
        assert_eq!(tree_edges(&star).unwrap(), vec![(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn constant_map_has_no_separation() {
        let x = Arc::new(FiniteMetricSpace::path(6).unwrap());
        let t = Arc::new(FiniteMetricSpace::path(3).unwrap());
        let f = MetricMap::new(x, t, vec![1; 6]).unwrap();
        let report = tree_target_report(&f, &[0.0, 2.0], &[1.0], 4, 1.0, TREE_REPORT_SEED).unwrap();
        assert!(report.separations.is_empty());
        assert_eq!(report.lipschitz, 0.0);
        assert_eq!(report.fibers[0].colors.len(), 1);
    }
}
