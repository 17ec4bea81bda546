//! Extensions `K → G → H`: the kernel-neighborhood identity behind the
//! extension bound, and Hirsch length of polycyclic series.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cayley::{enumerate_ball, format_element, CayleyBall, Element, GroupModel, BALL_CAP};
use super::GroupError;
use crate::hurewicz::IsometricAction;

/// A homomorphism `φ: G → H` given as a function on element encodings.
pub type HomFn = dyn Fn(&Element) -> Result<Element, GroupError> + Sync;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCheck {
    #[serde(rename = "R")]
    pub r: usize,
    pub ball_radius: usize,
    pub ball_size: usize,
    /// `|W_R(e)|` within the ball, `W_R(e) = {g : |φ(g)|_{φ(S)} ≤ R}`.
    pub w_size: usize,
    /// `|N_R(K)|` within the ball.
    pub n_size: usize,
    /// First element of the ball in one set but not the other.
    pub witness: Option<String>,
}

impl KernelCheck {
    pub fn equal(&self) -> bool {
        self.witness.is_none()
    }
}

/// Compares `W_R(e)` with `N_R(ker φ)` on every element of `B_M(e)`,
/// `M = ball_radius`. Both sides are decided exactly for each element:
/// the first by BFS in `H` over `φ(S)`, the second by a depth-`R` BFS from
/// the element in `G`.
pub fn kernel_neighborhood_check(
    g: &dyn GroupModel,
    h: &dyn GroupModel,
    phi: &HomFn,
    r: usize,
    ball_radius: usize,
) -> Result<KernelCheck, GroupError> {
    let e_h = h.identity();
    let gens: Vec<Element> = g.generators().into_iter().map(|(_, s)| s).collect();
    let mut images: Vec<Element> = gens.iter().map(phi).collect::<Result<_, _>>()?;
    images.retain(|s| *s != e_h);
    images.sort();
    images.dedup();

    let mut h_ball: HashSet<Element> = HashSet::from([e_h.clone()]);
    let mut frontier = vec![e_h.clone()];
    for _ in 0..r {
        let mut next = Vec::new();
        for x in &frontier {
            for s in &images {
                let y = h.multiply(x, s)?;
                if h_ball.insert(y.clone()) {
                    next.push(y);
                }
            }
        }
        frontier = next;
    }

    let ball = enumerate_ball(g, ball_radius, BALL_CAP)?;
    let near_kernel = |x: &Element| -> Result<bool, GroupError> {
        let mut seen: HashSet<Element> = HashSet::from([x.clone()]);
        let mut queue = VecDeque::from([(x.clone(), 0usize)]);
        while let Some((y, d)) = queue.pop_front() {
            if phi(&y)? == e_h {
                return Ok(true);
            }
            if d < r {
                for s in &gens {
                    let z = g.multiply(&y, s)?;
                    if seen.insert(z.clone()) {
                        queue.push_back((z, d + 1));
                    }
                }
            }
        }
        Ok(false)
    };
    let sides: Vec<(bool, bool)> = ball
        .par_iter()
        .map(|(x, _)| Ok((h_ball.contains(&phi(x)?), near_kernel(x)?)))
        .collect::<Result<_, GroupError>>()?;
    Ok(KernelCheck {
        r,
        ball_radius,
        ball_size: ball.len(),
        w_size: sides.iter().filter(|s| s.0).count(),
        n_size: sides.iter().filter(|s| s.1).count(),
        witness: sides.iter().position(|s| s.0 != s.1).map(|i| format_element(&ball[i].0)),
    })
}

/// `(a, b, c) ↦ (a, b)`: the Heisenberg group modulo its center.
pub fn heisenberg_abelianization(g: &Element) -> Result<Element, GroupError> {
    match g.as_slice() {
        [a, b, _] => Ok(vec![*a, *b]),
        _ => Err(GroupError::Oracle(format!("not a Heisenberg element: {}", format_element(g)))),
    }
}

/// `G` acting on a ball of `H` through `g · h = φ(g) h`.
pub struct QuotientAction<'a> {
    pub target: &'a dyn GroupModel,
    pub ball: &'a CayleyBall,
    pub phi: &'a HomFn,
}

impl IsometricAction for QuotientAction<'_> {
    type Element = Element;
    fn act(&self, g: &Element, x: usize) -> Option<usize> {
        let image = (self.phi)(g).ok()?;
        let gx = self.target.multiply(&image, &self.ball.elements[x]).ok()?;
        self.ball.position(&gx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CyclicFactor {
    InfiniteCyclic,
    FiniteCyclic(u64),
}

impl fmt::Display for CyclicFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CyclicFactor::InfiniteCyclic => write!(f, "Z"),
            CyclicFactor::FiniteCyclic(m) => write!(f, "Z{m}"),
        }
    }
}

/// Successive quotients `G_{i+1}/G_i` of a subnormal series with cyclic factors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CyclicFactor>", into = "Vec<CyclicFactor>")]
pub struct NormalSeries(Vec<CyclicFactor>);

impl NormalSeries {
    pub fn new(factors: Vec<CyclicFactor>) -> Result<Self, GroupError> {
        if factors.is_empty() {
            return Err(GroupError::EmptySeries);
        }
        Ok(NormalSeries(factors))
    }

    pub fn factors(&self) -> &[CyclicFactor] {
        &self.0
    }
}

impl TryFrom<Vec<CyclicFactor>> for NormalSeries {
    type Error = GroupError;
    fn try_from(v: Vec<CyclicFactor>) -> Result<Self, GroupError> {
        NormalSeries::new(v)
    }
}

impl From<NormalSeries> for Vec<CyclicFactor> {
    fn from(s: NormalSeries) -> Self {
        s.0
    }
}

/// `"ZZZ"`, `"Z,2,Z"` or `"Z Z2 Z"`: `Z` is infinite cyclic, `m` or `Zm` finite.
impl FromStr for NormalSeries {
    type Err = GroupError;
    fn from_str(s: &str) -> Result<Self, GroupError> {
        let tokens: Vec<String> = if s.contains([',', ' ']) {
            s.split([',', ' ']).filter(|t| !t.is_empty()).map(str::to_string).collect()
        } else if s.chars().all(|c| c == 'Z') {
            s.chars().map(String::from).collect()
        } else {
            vec![s.to_string()]
        };
        let factors = tokens
            .iter()
            .map(|t| {
                let digits = t.strip_prefix('Z').unwrap_or(t);
                if digits.is_empty() {
                    return Ok(CyclicFactor::InfiniteCyclic);
                }
                match digits.parse::<u64>() {
                    Ok(m) if m >= 1 => Ok(CyclicFactor::FiniteCyclic(m)),
                    _ => Err(GroupError::UnknownLeaf(t.clone())),
                }
            })
            .collect::<Result<_, _>>()?;
        NormalSeries::new(factors)
    }
}

/// Number of infinite cyclic factors.
pub fn hirsch_length(series: &NormalSeries) -> usize {
    series.0.iter().filter(|f| **f == CyclicFactor::InfiniteCyclic).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::cayley::{AbelianGroup, Heisenberg};

    #[test]
    fn hirsch_examples() {
        assert_eq!(hirsch_length(&"ZZZ".parse().unwrap()), 3);
        assert_eq!(hirsch_length(&"2,3".parse().unwrap()), 0);
        assert_eq!(hirsch_length(&"Z Z2 Z".parse().unwrap()), 2);
        assert!(matches!(NormalSeries::new(vec![]), Err(GroupError::EmptySeries)));
        assert!("Zx".parse::<NormalSeries>().is_err());
        let json = serde_json::to_string(&"Z,2".parse::<NormalSeries>().unwrap()).unwrap();
        assert_eq!(json, r#"["infinite-cyclic",{"finite-cyclic":2}]"#);
        assert!(serde_json::from_str::<NormalSeries>("[]").is_err());
    }

    #[test]
    fn z_onto_z2() {
        let z = AbelianGroup::free(1);
        let z2 = AbelianGroup::cyclic(2);
        let phi = |g: &Element| Ok(vec![g[0].rem_euclid(2)]);
        let zero = kernel_neighborhood_check(&z, &z2, &phi, 0, 4).unwrap();
        assert!(zero.equal());
        assert_eq!(zero.w_size, 5);
        let one = kernel_neighborhood_check(&z, &z2, &phi, 1, 4).unwrap();
        assert!(one.equal());
        assert_eq!(one.w_size, one.ball_size);
    }

    #[test]
    fn heisenberg_small() {
        let z2 = AbelianGroup::free(2);
        for r in 0..=2 {
            let check = kernel_neighborhood_check(&Heisenberg, &z2, &heisenberg_abelianization, r, 5).unwrap();
            assert!(check.equal(), "{check:?}");
        }
    }

    #[test]
    fn wrong_kernel_is_caught() {
        let z2 = AbelianGroup::free(2);
        // not a homomorphism: the kernel side and the word side disagree
        let bogus = |g: &Element| Ok(vec![g[0] + g[2], g[1]]);
        let check = kernel_neighborhood_check(&Heisenberg, &z2, &bogus, 1, 4).unwrap();
        assert!(!check.equal());
    }
}
