//! Amalgamated free products `A ∗_C B` given by oracles for `C` and coset
//! transversals, their normal forms, and the projection to `C\A ∗̂ C\B`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cayley::{cayley_ball, format_element, Element, GroupModel, BALL_CAP};
use super::free_product::{Factor, FreeProduct, FreeProductWord, Letter, PointedSpace, WordMetric};
use super::GroupError;
use crate::metric::FiniteMetricSpace;

/// Oracle view of `A ∗_C B`: `A` is the `X` factor and `B` the `Y` factor,
/// with elements of `A`, `B` and `C` encoded as integers and 0 the identity.
pub trait AmalgamModel: Send + Sync {
    fn c_mul(&self, a: i64, b: i64) -> i64;
    fn embed(&self, f: Factor, c: i64) -> i64;
    fn mul(&self, f: Factor, a: i64, b: i64) -> i64;
    /// `x = embed(c) · rep` with `rep` the chosen representative of `Cx`;
    /// `rep = 0` exactly when `x ∈ C`.
    fn transversal(&self, f: Factor, x: i64) -> (i64, i64);

    fn in_c(&self, f: Factor, x: i64) -> bool {
        self.transversal(f, x).1 == 0
    }
}

/// `c · x̄_1 ⋯ x̄_k` with alternating nontrivial coset representatives.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormalForm {
    pub c: i64,
    pub letters: Vec<(Factor, i64)>,
}

impl NormalForm {
    pub fn identity() -> Self {
        NormalForm { c: 0, letters: Vec::new() }
    }

    /// The form as a word, with `c` written as an `A` letter.
    pub fn word<M: AmalgamModel + ?Sized>(&self, model: &M) -> Vec<(Factor, i64)> {
        let mut w = vec![(Factor::X, model.embed(Factor::X, self.c))];
        w.extend(self.letters.iter().copied());
        w
    }

    pub fn encode(&self) -> Element {
        let mut e = vec![self.c];
        for &(f, v) in &self.letters {
            e.push(if f == Factor::X { 0 } else { 1 });
            e.push(v);
        }
        e
    }

    pub fn decode(e: &[i64]) -> Result<Self, GroupError> {
        if e.is_empty() || e.len() % 2 == 0 {
            return Err(GroupError::Oracle(format!("bad amalgam element {}", format_element(e))));
        }
        let letters = e[1..]
            .chunks(2)
            .map(|p| match p[0] {
                0 => Ok((Factor::X, p[1])),
                1 => Ok((Factor::Y, p[1])),
                _ => Err(GroupError::Oracle(format!("bad factor tag in {}", format_element(e)))),
            })
            .collect::<Result<_, _>>()?;
        Ok(NormalForm { c: e[0], letters })
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.c)?;
        for (factor, v) in &self.letters {
            match factor {
                Factor::X => write!(f, " Ca{v}")?,
                Factor::Y => write!(f, " Cb{v}")?,
            }
        }
        Ok(())
    }
}

fn checked_transversal<M: AmalgamModel + ?Sized>(model: &M, f: Factor, x: i64) -> Result<(i64, i64), GroupError> {
    let (c, rep) = model.transversal(f, x);
    if model.mul(f, model.embed(f, c), rep) != x {
        return Err(GroupError::Transversal(format!("{x} != embed({c}) * {rep}")));
    }
    if model.transversal(f, rep) != (0, rep) {
        return Err(GroupError::Transversal(format!("representative {rep} is not its own representative")));
    }
    Ok((c, rep))
}

/// Appends one letter to a normal form, pushing `C` parts to the left.
fn append<M: AmalgamModel + ?Sized>(model: &M, nf: &mut NormalForm, f: Factor, g: i64) -> Result<(), GroupError> {
    let h = match nf.letters.last() {
        Some(&(last_f, last)) if last_f == f => {
            nf.letters.pop();
            model.mul(f, last, g)
        }
        _ => g,
    };
    let (mut c, rep) = checked_transversal(model, f, h)?;
    for letter in nf.letters.iter_mut().rev() {
        let (lf, x) = *letter;
        let (c2, rep2) = checked_transversal(model, lf, model.mul(lf, x, model.embed(lf, c)))?;
        if rep2 == 0 {
            return Err(GroupError::Transversal(format!("{x} times a C element fell into C")));
        }
        *letter = (lf, rep2);
        c = c2;
    }
    nf.c = model.c_mul(nf.c, c);
    if rep != 0 {
        nf.letters.push((f, rep));
    }
    Ok(())
}

/// Normal form of the product of `word`'s letters.
pub fn normal_presentation<M: AmalgamModel + ?Sized>(
    model: &M,
    word: &[(Factor, i64)],
) -> Result<NormalForm, GroupError> {
    let mut nf = NormalForm::identity();
    for &(f, g) in word {
        append(model, &mut nf, f, g)?;
    }
    Ok(nf)
}

/// `A ∗_C B` for cyclic `A = Z_{m_a}`, `B = Z_{m_b}` (0 meaning `Z`) with `C`
/// generated by `a^{p_a} = b^{p_b}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicAmalgam {
    pub m_a: i64,
    pub p_a: i64,
    pub m_b: i64,
    pub p_b: i64,
    /// Order of `C`, 0 when infinite.
    pub order_c: i64,
}

impl CyclicAmalgam {
    pub fn new(m_a: i64, p_a: i64, m_b: i64, p_b: i64) -> Result<Self, GroupError> {
        let order = |m: i64, p: i64| -> Result<i64, GroupError> {
            if p < 1 || m < 0 || (m > 0 && m % p != 0) {
                return Err(GroupError::BadParameters(format!("index {p} does not divide order {m}")));
            }
            Ok(if m == 0 { 0 } else { m / p })
        };
        let (oa, ob) = (order(m_a, p_a)?, order(m_b, p_b)?);
        if oa != ob {
            return Err(GroupError::BadParameters(format!("C has order {oa} in A but {ob} in B")));
        }
        Ok(CyclicAmalgam { m_a, p_a, m_b, p_b, order_c: oa })
    }

    /// `Z₂ ∗ Z₃`.
    pub fn z2_z3() -> Self {
        Self::new(2, 2, 3, 3).expect("valid parameters")
    }

    /// `Z ∗_{2Z} Z`, i.e. `⟨a, b | a² = b²⟩`.
    pub fn z_2z_z() -> Self {
        Self::new(0, 2, 0, 2).expect("valid parameters")
    }

    /// `Z₄ ∗_{Z₂} Z₆`.
    pub fn z4_z2_z6() -> Self {
        Self::new(4, 2, 6, 3).expect("valid parameters")
    }

    fn params(&self, f: Factor) -> (i64, i64) {
        match f {
            Factor::X => (self.m_a, self.p_a),
            Factor::Y => (self.m_b, self.p_b),
        }
    }

    fn reduce(m: i64, x: i64) -> i64 {
        if m > 0 {
            x.rem_euclid(m)
        } else {
            x
        }
    }

    /// Number of cosets of `C` in the factor.
    pub fn index(&self, f: Factor) -> i64 {
        self.params(f).1
    }
}

impl AmalgamModel for CyclicAmalgam {
    fn c_mul(&self, a: i64, b: i64) -> i64 {
        Self::reduce(self.order_c, a + b)
    }
    fn embed(&self, f: Factor, c: i64) -> i64 {
        let (m, p) = self.params(f);
        Self::reduce(m, c * p)
    }
    fn mul(&self, f: Factor, a: i64, b: i64) -> i64 {
        Self::reduce(self.params(f).0, a + b)
    }
    fn transversal(&self, f: Factor, x: i64) -> (i64, i64) {
        let p = self.params(f).1;
        (Self::reduce(self.order_c, x.div_euclid(p)), x.rem_euclid(p))
    }
}

impl GroupModel for CyclicAmalgam {
    fn name(&self) -> String {
        let z = |m: i64| if m == 0 { "Z".to_string() } else { format!("Z{m}") };
        format!("{}*_{}{}", z(self.m_a), z(self.order_c), z(self.m_b))
    }
    fn identity(&self) -> Element {
        NormalForm::identity().encode()
    }
    fn generators(&self) -> Vec<(String, Element)> {
        let mut gens: Vec<(String, Element)> = Vec::new();
        for (label, f, v) in [("a", Factor::X, 1), ("a^-1", Factor::X, -1), ("b", Factor::Y, 1), ("b^-1", Factor::Y, -1)] {
            let v = Self::reduce(self.params(f).0, v);
            let e = normal_presentation(self, &[(f, v)]).expect("builtin transversals are consistent").encode();
            if e != self.identity() && !gens.iter().any(|(_, g)| *g == e) {
                gens.push((label.to_string(), e));
            }
        }
        gens
    }
    fn multiply(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
        let mut nf = NormalForm::decode(a)?;
        let rhs = NormalForm::decode(b)?;
        for (f, g) in rhs.word(self) {
            append(self, &mut nf, f, g)?;
        }
        Ok(nf.encode())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmalgamProjectionReport {
    pub group: String,
    pub radius: usize,
    /// Coset representatives of `C\A` and `C\B`, basepoint first.
    pub cosets_a: Vec<i64>,
    pub cosets_b: Vec<i64>,
    pub pairs: usize,
    pub literal_max: f64,
    pub slotwise_max: f64,
    pub literal_witness: Option<(String, String)>,
    pub slotwise_witness: Option<(String, String)>,
}

/// `φ(c x_1 ⋯ x_k) = x̄_1 ⋯ x̄_k`, measured on every pair `(x, xs)` with `x`
/// in the ball of the given radius and `s` a generator. Coset spaces carry
/// `d̄(Cx, Cy) = d(x, Cy)`, minimized over the enclosing ball.
pub fn amalgam_projection(model: &CyclicAmalgam, radius: usize) -> Result<AmalgamProjectionReport, GroupError> {
    let ball = cayley_ball(model, radius + 1, BALL_CAP)?;
    let forms: Vec<NormalForm> = ball.elements.iter().map(|e| NormalForm::decode(e)).collect::<Result<_, _>>()?;

    let coset_space = |f: Factor| -> Result<(Vec<i64>, PointedSpace), GroupError> {
        let mut reps: Vec<i64> = vec![0];
        for nf in &forms {
            for &(lf, v) in &nf.letters {
                if lf == f && !reps.contains(&v) {
                    reps.push(v);
                }
            }
        }
        reps[1..].sort_unstable();
        // a ball element sitting in the coset C·rep, for each rep
        let member = |nf: &NormalForm, rep: i64| match nf.letters.as_slice() {
            [] => rep == 0,
            [(lf, v)] => *lf == f && *v == rep,
            _ => false,
        };
        let position = |rep: i64| -> Result<usize, GroupError> {
            let e = NormalForm { c: 0, letters: if rep == 0 { vec![] } else { vec![(f, rep)] } }.encode();
            ball.position(&e).ok_or_else(|| GroupError::Oracle(format!("coset representative {rep} outside the ball")))
        };
        let k = reps.len();
        let mut matrix = vec![vec![0.0; k]; k];
        for i in 0..k {
            let xi = position(reps[i])?;
            for j in 0..k {
                if i != j {
                    matrix[i][j] = (0..forms.len())
                        .filter(|&g| member(&forms[g], reps[j]))
                        .map(|g| ball.space.dist(xi, g))
                        .fold(f64::INFINITY, f64::min);
                }
            }
        }
        let space = FiniteMetricSpace::from_matrix(&matrix)?;
        Ok((reps, PointedSpace::new(Arc::new(space), 0)?))
    };
    let (cosets_a, xa) = coset_space(Factor::X)?;
    let (cosets_b, xb) = coset_space(Factor::Y)?;
    let slot: BTreeMap<(Factor, i64), usize> = cosets_a
        .iter()
        .enumerate()
        .map(|(i, &r)| ((Factor::X, r), i))
        .chain(cosets_b.iter().enumerate().map(|(i, &r)| ((Factor::Y, r), i)))
        .collect();
    let product = FreeProduct::new(xa, xb, false)?;
    let phi = |nf: &NormalForm| -> Result<FreeProductWord, GroupError> {
        product.word(nf.letters.iter().map(|&(f, v)| Letter(f, slot[&(f, v)])).collect())
    };
    let images: Vec<FreeProductWord> = forms.iter().map(phi).collect::<Result<_, _>>()?;

    let gens = model.generators();
    let mut report = AmalgamProjectionReport {
        group: model.name(),
        radius,
        cosets_a,
        cosets_b,
        pairs: 0,
        literal_max: 0.0,
        slotwise_max: 0.0,
        literal_witness: None,
        slotwise_witness: None,
    };
    for x in (0..ball.elements.len()).filter(|&x| ball.word_length[x] <= radius) {
        for (_, s) in &gens {
            let xs = model.multiply(&ball.elements[x], s)?;
            let y = ball.position(&xs).ok_or_else(|| GroupError::Oracle("x·s left the enclosing ball".into()))?;
            let d = ball.space.dist(x, y);
            if d == 0.0 {
                continue;
            }
            report.pairs += 1;
            let pair = || (forms[x].to_string(), forms[y].to_string());
            let literal = product.distance(&images[x], &images[y], WordMetric::Literal) / d;
            if literal > report.literal_max {
                report.literal_max = literal;
                report.literal_witness = Some(pair());
            }
            let slotwise = product.distance(&images[x], &images[y], WordMetric::Slotwise) / d;
            if slotwise > report.slotwise_max {
                report.slotwise_max = slotwise;
                report.slotwise_witness = Some(pair());
            }
        }
    }
    Ok(report)
}
