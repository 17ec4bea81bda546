//! Group models and balls in their Cayley graphs.

use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GroupError;
use crate::hurewicz::IsometricAction;
use crate::metric::{FiniteMetricSpace, Provenance};

/// Group elements are integer vectors; each model fixes its own encoding.
pub type Element = Vec<i64>;

/// Default cap on the number of elements enumerated in `B_{2R}`.
pub const BALL_CAP: usize = 2_000_000;

pub const ASSOCIATIVITY_SEED: u64 = 0xa550_c1a7;

pub trait GroupModel: Send + Sync {
    fn name(&self) -> String;
    fn identity(&self) -> Element;
    /// Labeled generating set, expected to be closed under inverses.
    fn generators(&self) -> Vec<(String, Element)>;
    fn multiply(&self, a: &Element, b: &Element) -> Result<Element, GroupError>;
}

pub fn format_element(e: &[i64]) -> String {
    let parts: Vec<String> = e.iter().map(i64::to_string).collect();
    format!("({})", parts.join(","))
}

/// Free group on `rank` letters; elements are reduced words over `±1..=±rank`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeGroup {
    pub rank: usize,
}

impl GroupModel for FreeGroup {
    fn name(&self) -> String {
        format!("F{}", self.rank)
    }
    fn identity(&self) -> Element {
        Vec::new()
    }
    fn generators(&self) -> Vec<(String, Element)> {
        (1..=self.rank as i64)
            .flat_map(|i| [(format!("a{i}"), vec![i]), (format!("a{i}^-1"), vec![-i])])
            .collect()
    }
    fn multiply(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
        let mut out = a.clone();
        for &letter in b {
            if out.last() == Some(&-letter) {
                out.pop();
            } else {
                out.push(letter);
            }
        }
        Ok(out)
    }
}

/// `Z^n / (m_1 Z ⊕ ⋯ ⊕ m_n Z)`; a modulus of 0 leaves that coordinate infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct AbelianGroup {
    pub moduli: Vec<i64>,
}

impl AbelianGroup {
    pub fn free(rank: usize) -> Self {
        AbelianGroup { moduli: vec![0; rank] }
    }

    pub fn cyclic(order: i64) -> Self {
        AbelianGroup { moduli: vec![order] }
    }

    fn reduce(&self, v: Element) -> Element {
        v.into_iter().zip(&self.moduli).map(|(x, &m)| if m > 0 { x.rem_euclid(m) } else { x }).collect()
    }
}

impl GroupModel for AbelianGroup {
    fn name(&self) -> String {
        let parts: Vec<String> =
            self.moduli.iter().map(|&m| if m == 0 { "Z".to_string() } else { format!("Z{m}") }).collect();
        parts.join("x")
    }
    fn identity(&self) -> Element {
        vec![0; self.moduli.len()]
    }
    fn generators(&self) -> Vec<(String, Element)> {
        let n = self.moduli.len();
        let mut gens = Vec::new();
        for i in 0..n {
            let mut up = vec![0; n];
            up[i] = 1;
            let down = self.reduce(up.iter().map(|x| -x).collect());
            let up = self.reduce(up);
            gens.push((format!("e{}", i + 1), up.clone()));
            if down != up {
                gens.push((format!("e{}^-1", i + 1), down));
            }
        }
        gens
    }
    fn multiply(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
        if a.len() != self.moduli.len() || b.len() != self.moduli.len() {
            return Err(GroupError::Oracle(format!("arity mismatch in {}", self.name())));
        }
        Ok(self.reduce(a.iter().zip(b).map(|(x, y)| x + y).collect()))
    }
}

/// Integer Heisenberg group; `(a,b,c)` is the matrix with `a`, `b` above the
/// diagonal and `c` in the corner, so `(a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Heisenberg;

impl GroupModel for Heisenberg {
    fn name(&self) -> String {
        "H3(Z)".into()
    }
    fn identity(&self) -> Element {
        vec![0, 0, 0]
    }
    fn generators(&self) -> Vec<(String, Element)> {
        vec![
            ("x".into(), vec![1, 0, 0]),
            ("x^-1".into(), vec![-1, 0, 0]),
            ("y".into(), vec![0, 1, 0]),
            ("y^-1".into(), vec![0, -1, 0]),
        ]
    }
    fn multiply(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
        if a.len() != 3 || b.len() != 3 {
            return Err(GroupError::Oracle("Heisenberg elements have three entries".into()));
        }
        Ok(vec![a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1]])
    }
}

/// `G × H`, encoded as `[len(g), g.., h..]`.
pub struct DirectProduct {
    pub left: Arc<dyn GroupModel>,
    pub right: Arc<dyn GroupModel>,
}

impl DirectProduct {
    pub fn pair(g: &[i64], h: &[i64]) -> Element {
        let mut out = Vec::with_capacity(g.len() + h.len() + 1);
        out.push(g.len() as i64);
        out.extend_from_slice(g);
        out.extend_from_slice(h);
        out
    }

    pub fn split(e: &[i64]) -> Result<(&[i64], &[i64]), GroupError> {
        let n = *e.first().ok_or_else(|| GroupError::Oracle("empty product element".into()))?;
        if n < 0 || n as usize + 1 > e.len() {
            return Err(GroupError::Oracle(format!("bad product element {}", format_element(e))));
        }
        Ok((&e[1..=n as usize], &e[n as usize + 1..]))
    }
}

impl GroupModel for DirectProduct {
    fn name(&self) -> String {
        format!("{}x{}", self.left.name(), self.right.name())
    }
    fn identity(&self) -> Element {
        Self::pair(&self.left.identity(), &self.right.identity())
    }
    fn generators(&self) -> Vec<(String, Element)> {
        let (e, f) = (self.left.identity(), self.right.identity());
        let mut gens: Vec<(String, Element)> =
            self.left.generators().into_iter().map(|(l, g)| (format!("({l},1)"), Self::pair(&g, &f))).collect();
        gens.extend(self.right.generators().into_iter().map(|(l, h)| (format!("(1,{l})"), Self::pair(&e, &h))));
        gens
    }
    fn multiply(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
        let (ag, ah) = Self::split(a)?;
        let (bg, bh) = Self::split(b)?;
        Ok(Self::pair(
            &self.left.multiply(&ag.to_vec(), &bg.to_vec())?,
            &self.right.multiply(&ah.to_vec(), &bh.to_vec())?,
        ))
    }
}

/// External multiplication oracle speaking `MUL a b` → `c` over stdin/stdout,
/// with elements written as comma-separated integers.
pub struct ProcessOracle {
    label: String,
    identity: Element,
    generators: Vec<Element>,
    io: Mutex<(Child, ChildStdin, BufReader<ChildStdout>)>,
}

fn encode(e: &[i64]) -> String {
    e.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
}

fn decode(s: &str) -> Result<Element, GroupError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|_| GroupError::Oracle(format!("unparseable reply {s:?}"))))
        .collect()
}

impl ProcessOracle {
    pub fn spawn(command: &[String], identity: Element, generators: Vec<Element>) -> Result<Self, GroupError> {
        let (program, args) =
            command.split_first().ok_or_else(|| GroupError::BadParameters("empty oracle command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| GroupError::Oracle(format!("cannot start {program}: {e}")))?;
        let stdin = child.stdin.take().ok_or_else(|| GroupError::Oracle("no stdin".into()))?;
        let stdout = BufReader::new(child.stdout.take().ok_or_else(|| GroupError::Oracle("no stdout".into()))?);
        Ok(ProcessOracle { label: program.clone(), identity, generators, io: Mutex::new((child, stdin, stdout)) })
    }
}

impl Drop for ProcessOracle {
    fn drop(&mut self) {
        if let Ok(mut io) = self.io.lock() {
            let _ = io.0.kill();
            let _ = io.0.wait();
        }
    }
}

impl GroupModel for ProcessOracle {
    fn name(&self) -> String {
        format!("oracle:{}", self.label)
    }
    fn identity(&self) -> Element {
        self.identity.clone()
    }
    fn generators(&self) -> Vec<(String, Element)> {
        self.generators.iter().enumerate().map(|(i, g)| (format!("s{i}"), g.clone())).collect()
    }
    fn multiply(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
        let mut io = self.io.lock().map_err(|_| GroupError::Oracle("oracle lock poisoned".into()))?;
        let (_, stdin, stdout) = &mut *io;
        writeln!(stdin, "MUL {} {}", encode(a), encode(b)).map_err(|e| GroupError::Oracle(e.to_string()))?;
        stdin.flush().map_err(|e| GroupError::Oracle(e.to_string()))?;
        let mut line = String::new();
        if stdout.read_line(&mut line).map_err(|e| GroupError::Oracle(e.to_string()))? == 0 {
            return Err(GroupError::Oracle("oracle closed its output".into()));
        }
        decode(&line)
    }
}

/// JSON description of a group: `{"builtin": name, "params": {...}}` or
/// `{"custom": {"command": [...], "identity": [...], "generators": [[...]]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupSpec {
    Builtin {
        builtin: String,
        #[serde(default)]
        params: serde_json::Value,
    },
    Custom {
        custom: CustomOracle,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomOracle {
    pub command: Vec<String>,
    pub identity: Element,
    pub generators: Vec<Element>,
}

fn param_i64(params: &serde_json::Value, key: &str, default: Option<i64>) -> Result<i64, GroupError> {
    match params.get(key).and_then(serde_json::Value::as_i64) {
        Some(v) => Ok(v),
        None => default.ok_or_else(|| GroupError::BadParameters(format!("missing integer parameter {key:?}"))),
    }
}

impl GroupSpec {
    pub fn builtin(name: &str, params: serde_json::Value) -> Self {
        GroupSpec::Builtin { builtin: name.into(), params }
    }

    pub fn build(&self) -> Result<Arc<dyn GroupModel>, GroupError> {
        let (name, params) = match self {
            GroupSpec::Custom { custom } => {
                return Ok(Arc::new(ProcessOracle::spawn(
                    &custom.command,
                    custom.identity.clone(),
                    custom.generators.clone(),
                )?))
            }
            GroupSpec::Builtin { builtin, params } => (builtin.as_str(), params),
        };
        let positive = |v: i64, key: &str| {
            if v > 0 {
                Ok(v)
            } else {
                Err(GroupError::BadParameters(format!("{key} must be positive")))
            }
        };
        Ok(match name {
            "free" => Arc::new(FreeGroup { rank: positive(param_i64(params, "rank", Some(2))?, "rank")? as usize }),
            "zn" | "free-abelian" => {
                Arc::new(AbelianGroup::free(positive(param_i64(params, "rank", Some(2))?, "rank")? as usize))
            }
            "cyclic" => Arc::new(AbelianGroup::cyclic(positive(param_i64(params, "order", None)?, "order")?)),
            "quotient" => {
                let moduli: Vec<i64> = serde_json::from_value(params.get("moduli").cloned().unwrap_or_default())
                    .map_err(|e| GroupError::BadParameters(format!("moduli: {e}")))?;
                if moduli.is_empty() || moduli.iter().any(|&m| m < 0) {
                    return Err(GroupError::BadParameters("moduli must be a nonempty list of m >= 0".into()));
                }
                Arc::new(AbelianGroup { moduli })
            }
            "heisenberg" => Arc::new(Heisenberg),
            "product" => {
                let part = |key: &str| -> Result<Arc<dyn GroupModel>, GroupError> {
                    let v = params.get(key).cloned().ok_or_else(|| GroupError::BadParameters(format!("missing {key}")))?;
                    serde_json::from_value::<GroupSpec>(v)
                        .map_err(|e| GroupError::BadParameters(format!("{key}: {e}")))?
                        .build()
                };
                Arc::new(DirectProduct { left: part("left")?, right: part("right")? })
            }
            "amalgam" => Arc::new(super::amalgam::CyclicAmalgam::new(
                param_i64(params, "a", None)?,
                param_i64(params, "p_a", None)?,
                param_i64(params, "b", None)?,
                param_i64(params, "p_b", None)?,
            )?),
            other => return Err(GroupError::BadParameters(format!("unknown builtin {other:?}"))),
        })
    }
}

/// Identity laws on the generators and ball elements, closure of `S` under
/// inverses, and associativity on seeded random triples from the ball.
pub fn validate_model(group: &dyn GroupModel, ball: &CayleyBall, triples: usize) -> Result<(), GroupError> {
    let e = group.identity();
    let gens = group.generators();
    for (label, s) in &gens {
        let has_inverse = gens.iter().try_fold(false, |found, (_, t)| {
            Ok::<_, GroupError>(found || group.multiply(s, t)? == e)
        })?;
        if !has_inverse {
            return Err(GroupError::NotClosedUnderInverse(label.clone()));
        }
    }
    for g in &ball.elements {
        if group.multiply(&e, g)? != *g || group.multiply(g, &e)? != *g {
            return Err(GroupError::IdentityLaw(format_element(g)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ASSOCIATIVITY_SEED);
    let n = ball.elements.len();
    for _ in 0..triples {
        let (a, b, c) = (
            &ball.elements[rng.gen_range(0..n)],
            &ball.elements[rng.gen_range(0..n)],
            &ball.elements[rng.gen_range(0..n)],
        );
        let left = group.multiply(&group.multiply(a, b)?, c)?;
        let right = group.multiply(a, &group.multiply(b, c)?)?;
        if left != right {
            return Err(GroupError::NotAssociative {
                a: format_element(a),
                b: format_element(b),
                c: format_element(c),
            });
        }
    }
    Ok(())
}

/// Elements of `B_R(e)` with their word lengths, in canonical order.
pub fn enumerate_ball(group: &dyn GroupModel, radius: usize, cap: usize) -> Result<Vec<(Element, usize)>, GroupError> {
    let gens: Vec<Element> = group.generators().into_iter().map(|(_, g)| g).collect();
    let e = group.identity();
    let mut seen: HashMap<Element, usize> = HashMap::from([(e.clone(), 0)]);
    let mut frontier = vec![e];
    for depth in 1..=radius {
        let mut next = Vec::new();
        for g in &frontier {
            for s in &gens {
                let h = group.multiply(g, s)?;
                if !seen.contains_key(&h) {
                    seen.insert(h.clone(), depth);
                    next.push(h);
                }
            }
        }
        if seen.len() > cap {
            return Err(GroupError::CapExceeded { size: seen.len(), cap });
        }
        frontier = next;
    }
    let mut out: Vec<(Element, usize)> = seen.into_iter().collect();
    out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

/// `B_R(e)` in the word metric, in canonical order (word length, then element).
#[derive(Debug, Clone)]
pub struct CayleyBall {
    pub group: String,
    pub radius: usize,
    pub elements: Vec<Element>,
    pub index: HashMap<Element, usize>,
    pub word_length: Vec<usize>,
    pub space: Arc<FiniteMetricSpace>,
}

impl CayleyBall {
    pub fn position(&self, g: &[i64]) -> Option<usize> {
        self.index.get(g).copied()
    }
}

/// Enumerates `B_{2R}(e)` by BFS and measures distances between points of
/// `B_R(e)` inside it. Geodesics between points of `B_R` stay in `B_{2R}`,
/// so the restricted distances equal the word metric.
pub fn cayley_ball(group: &dyn GroupModel, radius: usize, cap: usize) -> Result<CayleyBall, GroupError> {
    let gens: Vec<Element> = group.generators().into_iter().map(|(_, g)| g).collect();
    let outer = 2 * radius;
    let e = group.identity();
    let mut index: HashMap<Element, usize> = HashMap::from([(e.clone(), 0)]);
    let mut elements = vec![e];
    let mut depth = vec![0usize];
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for s in &gens {
            let w = group.multiply(&elements[v], s)?;
            let id = match index.get(&w) {
                Some(&id) => id,
                None if depth[v] < outer => {
                    let id = elements.len();
                    if id >= cap {
                        return Err(GroupError::CapExceeded { size: id + 1, cap });
                    }
                    index.insert(w.clone(), id);
                    elements.push(w);
                    depth.push(depth[v] + 1);
                    adjacency.push(Vec::new());
                    queue.push_back(id);
                    id
                }
                None => continue,
            };
            if id != v && !adjacency[v].contains(&id) {
                adjacency[v].push(id);
            }
        }
    }

    let mut inner: Vec<usize> = (0..elements.len()).filter(|&v| depth[v] <= radius).collect();
    inner.sort_by(|&a, &b| depth[a].cmp(&depth[b]).then_with(|| elements[a].cmp(&elements[b])));
    let mut slot = vec![usize::MAX; elements.len()];
    for (i, &v) in inner.iter().enumerate() {
        slot[v] = i;
    }
    let n = inner.len();
    let rows: Vec<Vec<f64>> = inner
        .par_iter()
        .map(|&src| {
            let mut dist = vec![usize::MAX; elements.len()];
            dist[src] = 0;
            let mut q = VecDeque::from([src]);
            let mut row = vec![f64::INFINITY; n];
            let mut found = 0;
            while let Some(v) = q.pop_front() {
                if slot[v] != usize::MAX {
                    row[slot[v]] = dist[v] as f64;
                    found += 1;
                    if found == n {
                        break;
                    }
                }
                for &w in &adjacency[v] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        q.push_back(w);
                    }
                }
            }
            row
        })
        .collect();
    let ball_elements: Vec<Element> = inner.iter().map(|&v| elements[v].clone()).collect();
    let labels = ball_elements.iter().map(|g| format_element(g)).collect();
    let space = FiniteMetricSpace::from_distances(n, rows.concat(), Provenance::WordMetricBall, Some(labels))?;
    Ok(CayleyBall {
        group: group.name(),
        radius,
        index: ball_elements.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect(),
        word_length: inner.iter().map(|&v| depth[v]).collect(),
        elements: ball_elements,
        space: Arc::new(space),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeftInvariance {
    pub triples_checked: usize,
    /// `(g, x, y)` with `d(gx, gy) ≠ d(x, y)`.
    pub witness: Option<(String, String, String)>,
}

impl LeftInvariance {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }
}

/// `d(gx, gy) = d(x, y)` for all `g, x, y` in `B_R` whose products stay in `B_R`.
pub fn left_invariance_check(group: &dyn GroupModel, radius: usize) -> Result<LeftInvariance, GroupError> {
    let ball = cayley_ball(group, radius, BALL_CAP)?;
    let n = ball.elements.len();
    let mut triples_checked = 0;
    for g in &ball.elements {
        let moved: Vec<Option<usize>> = ball
            .elements
            .iter()
            .map(|x| group.multiply(g, x).map(|gx| ball.position(&gx)))
            .collect::<Result<_, _>>()?;
        for x in 0..n {
            for y in x + 1..n {
                if let (Some(gx), Some(gy)) = (moved[x], moved[y]) {
                    triples_checked += 1;
                    if ball.space.dist(gx, gy) != ball.space.dist(x, y) {
                        return Ok(LeftInvariance {
                            triples_checked,
                            witness: Some((
                                format_element(g),
                                format_element(&ball.elements[x]),
                                format_element(&ball.elements[y]),
                            )),
                        });
                    }
                }
            }
        }
    }
    Ok(LeftInvariance { triples_checked, witness: None })
}

/// Left multiplication of group elements on the points of a ball.
pub struct LeftTranslation<'a> {
    pub group: &'a dyn GroupModel,
    pub ball: &'a CayleyBall,
}

impl IsometricAction for LeftTranslation<'_> {
    type Element = Element;
    fn act(&self, g: &Element, x: usize) -> Option<usize> {
        let gx = self.group.multiply(g, &self.ball.elements[x]).ok()?;
        self.ball.position(&gx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_sizes() {
        assert_eq!(cayley_ball(&AbelianGroup::free(2), 0, BALL_CAP).unwrap().elements.len(), 1);
        assert_eq!(cayley_ball(&AbelianGroup::free(2), 2, BALL_CAP).unwrap().elements.len(), 13);
        assert_eq!(cayley_ball(&FreeGroup { rank: 2 }, 2, BALL_CAP).unwrap().elements.len(), 17);
        assert_eq!(cayley_ball(&AbelianGroup::cyclic(5), 3, BALL_CAP).unwrap().elements.len(), 5);
    }

    #[test]
    fn z2_ball_is_l1() {
        let ball = cayley_ball(&AbelianGroup::free(2), 3, BALL_CAP).unwrap();
        for (i, a) in ball.elements.iter().enumerate() {
            for (j, b) in ball.elements.iter().enumerate() {
                let l1 = ((a[0] - b[0]).abs() + (a[1] - b[1]).abs()) as f64;
                assert_eq!(ball.space.dist(i, j), l1);
            }
        }
    }

    #[test]
    fn heisenberg_relations() {
        let h = Heisenberg;
        let (x, y) = (vec![1, 0, 0], vec![0, 1, 0]);
        let xy = h.multiply(&x, &y).unwrap();
        let yx = h.multiply(&y, &x).unwrap();
        assert_eq!(xy, vec![1, 1, 1]);
        assert_eq!(yx, vec![1, 1, 0]);
        let ball = cayley_ball(&h, 4, BALL_CAP).unwrap();
        validate_model(&h, &ball, 500).unwrap();
        // [x, y] = z has word length 4
        assert_eq!(ball.word_length[ball.position(&[0, 0, 1]).unwrap()], 4);
        assert_eq!(ball.space.dist(0, ball.position(&[0, 0, 1]).unwrap()), 4.0);
    }

    #[test]
    fn product_and_spec() {
        let spec: GroupSpec = serde_json::from_str(
            r#"{"builtin":"product","params":{"left":{"builtin":"cyclic","params":{"order":2}},"right":{"builtin":"zn","params":{"rank":1}}}}"#,
        )
        .unwrap();
        let g = spec.build().unwrap();
        let ball = cayley_ball(g.as_ref(), 2, BALL_CAP).unwrap();
        assert_eq!(ball.elements.len(), 8);
        assert!(GroupSpec::builtin("nope", serde_json::Value::Null).build().is_err());
    }

    #[test]
    fn invariance_and_fault_injection() {
        assert!(left_invariance_check(&AbelianGroup::free(2), 3).unwrap().holds());

        struct Broken;
        impl GroupModel for Broken {
            fn name(&self) -> String {
                "broken".into()
            }
            fn identity(&self) -> Element {
                vec![0, 0]
            }
            fn generators(&self) -> Vec<(String, Element)> {
                AbelianGroup::free(2).generators()
            }
            fn multiply(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
                let mut c = vec![a[0] + b[0], a[1] + b[1]];
                if a == &vec![2, 0] && b != &vec![0, 0] && b.len() == 2 && b[0].abs() + b[1].abs() > 1 {
                    c[1] += 1;
                }
                Ok(c)
            }
        }
        assert!(!left_invariance_check(&Broken, 2).unwrap().holds());
    }

    #[test]
    fn generator_order_does_not_matter() {
        struct Reordered;
        impl GroupModel for Reordered {
            fn name(&self) -> String {
                "F2'".into()
            }
            fn identity(&self) -> Element {
                Vec::new()
            }
            fn generators(&self) -> Vec<(String, Element)> {
                let mut g = FreeGroup { rank: 2 }.generators();
                g.reverse();
                g
            }
            fn multiply(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
                FreeGroup { rank: 2 }.multiply(a, b)
            }
        }
        let a = cayley_ball(&FreeGroup { rank: 2 }, 3, BALL_CAP).unwrap();
        let b = cayley_ball(&Reordered, 3, BALL_CAP).unwrap();
        assert_eq!(a.elements, b.elements);
        assert_eq!(a.space.all_points(), b.space.all_points());
        for i in 0..a.elements.len() {
            assert_eq!(a.space.row(i), b.space.row(i));
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            cayley_ball(&FreeGroup { rank: 2 }, 3, 50),
            Err(GroupError::CapExceeded { .. })
        ));
    }
}
