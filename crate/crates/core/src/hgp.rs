//! Exact arithmetic in `B_f` and `H(F,P) = B_f ⋊ F` for the Magnus cone `P`.
//!
//! `A` is free abelian on `{a_h : h ∈ P}`, `B` free abelian on `{b_g : g ∈ F}`.
//! The order cocycle `f(b_g, b_h) = a_{g^-1 h}` when `g <_P h` (zero otherwise),
//! extended bilinearly, makes `B_f = A × B` with
//! `(a, b)(a', b') = (a + a' + f(b, b'), b + b')`. `F` acts on `B_f` by left
//! multiplication on `B`-indices and trivially on `A`; `H(F,P)` multiplies as
//! `(u, g)(v, h) = (u · (g⋅v), gh)`.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones::{least_index_sign, Class, ConeOracle, GroupElement};
use crate::json::to_spaced_string;
use crate::magnus::{sign, Sign};
use crate::mutation::{self, Mutation};
use crate::stallings::StallingsGraph;
use crate::words::{Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HgpError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("NotPositive: a-index `{0}` is not in the positive cone")]
    NotPositive(String),
    #[error("JsonError: {0}")]
    Json(String),
}

fn rank_check(left: u32, right: u32) -> Result<(), WordError> {
    if left == right {
        Ok(())
    } else {
        Err(WordError::RankMismatch { left, right })
    }
}

/// Finitely supported integer combination of words with zero-deletion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
struct Terms(BTreeMap<Word, i64>);

impl Terms {
    fn add(&mut self, key: Word, coef: i64) {
        if coef == 0 {
            return;
        }
        match self.0.entry(key) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += coef;
                if *o.get() == 0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(coef);
            }
        }
    }

    fn plus(&self, other: &Terms) -> Terms {
        let mut out = self.clone();
        for (k, &c) in &other.0 {
            out.add(k.clone(), c);
        }
        out
    }

    fn neg(&self) -> Terms {
        Terms(self.0.iter().map(|(k, &c)| (k.clone(), -c)).collect())
    }

    fn reindex(&self, f: impl Fn(&Word) -> Word) -> Terms {
        let mut out = Terms::default();
        for (k, &c) in &self.0 {
            out.add(f(k), c);
        }
        out
    }
}

/// Element `Σ s_i a_{h_i}` of `A`; every index lies in `P`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AVector {
    rank: u32,
    terms: Terms,
}

/// Element `Σ t_j b_{g_j}` of `B`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BVector {
    rank: u32,
    terms: Terms,
}

macro_rules! vector_common {
    ($t:ty) => {
        impl $t {
            pub fn zero(rank: u32) -> Self {
                Self {
                    rank,
                    terms: Terms::default(),
                }
            }

            pub fn rank(&self) -> u32 {
                self.rank
            }

            pub fn is_zero(&self) -> bool {
                self.terms.0.is_empty()
            }

            /// Nonzero terms in shortlex key order.
            pub fn terms(&self) -> impl Iterator<Item = (&Word, i64)> {
                self.terms.0.iter().map(|(k, &c)| (k, c))
            }

            pub fn coefficient(&self, key: &Word) -> i64 {
                self.terms.0.get(key).copied().unwrap_or(0)
            }

            pub fn support_len(&self) -> usize {
                self.terms.0.len()
            }

            pub fn try_add(&self, other: &Self) -> Result<Self, WordError> {
                rank_check(self.rank, other.rank)?;
                Ok(Self {
                    rank: self.rank,
                    terms: self.terms.plus(&other.terms),
                })
            }

            pub fn neg(&self) -> Self {
                Self {
                    rank: self.rank,
                    terms: self.terms.neg(),
                }
            }

            pub fn scale(&self, n: i64) -> Self {
                let mut terms = Terms::default();
                for (k, &c) in &self.terms.0 {
                    terms.add(k.clone(), n * c);
                }
                Self {
                    rank: self.rank,
                    terms,
                }
            }
        }

        impl std::ops::Add<&$t> for &$t {
            type Output = $t;

            fn add(self, rhs: &$t) -> $t {
                self.try_add(rhs).expect("rank mismatch")
            }
        }

        impl std::ops::Neg for &$t {
            type Output = $t;

            fn neg(self) -> $t {
                <$t>::neg(self)
            }
        }

        impl std::ops::Sub<&$t> for &$t {
            type Output = $t;

            fn sub(self, rhs: &$t) -> $t {
                self.try_add(&rhs.neg()).expect("rank mismatch")
            }
        }
    };
}

vector_common!(AVector);
vector_common!(BVector);

impl AVector {
    /// `a_h`; fails unless `h ∈ P`.
    pub fn basis(h: &Word) -> Result<Self, HgpError> {
        Self::from_terms(h.rank(), [(h.clone(), 1)])
    }

    pub fn from_terms(
        rank: u32,
        terms: impl IntoIterator<Item = (Word, i64)>,
    ) -> Result<Self, HgpError> {
        let mut out = Terms::default();
        for (k, c) in terms {
            rank_check(rank, k.rank())?;
            if sign(&k) != Sign::Positive {
                return Err(HgpError::NotPositive(k.to_string()));
            }
            out.add(k, c);
        }
        Ok(AVector { rank, terms: out })
    }

    fn add_term(&mut self, key: Word, coef: i64) {
        debug_assert_eq!(sign(&key), Sign::Positive);
        self.terms.add(key, coef);
    }

    /// Keeps the terms whose index satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(&Word) -> bool) -> AVector {
        AVector {
            rank: self.rank,
            terms: Terms(
                self.terms
                    .0
                    .iter()
                    .filter(|(k, _)| keep(k))
                    .map(|(k, &c)| (k.clone(), c))
                    .collect(),
            ),
        }
    }
}

impl BVector {
    /// `b_g`.
    pub fn basis(g: &Word) -> Self {
        let mut terms = Terms::default();
        terms.add(g.clone(), 1);
        BVector {
            rank: g.rank(),
            terms,
        }
    }

    pub fn from_terms(
        rank: u32,
        terms: impl IntoIterator<Item = (Word, i64)>,
    ) -> Result<Self, HgpError> {
        let mut out = Terms::default();
        for (k, c) in terms {
            rank_check(rank, k.rank())?;
            out.add(k, c);
        }
        Ok(BVector { rank, terms: out })
    }

    /// `g · Σ t_j b_{g_j} = Σ t_j b_{g g_j}`.
    pub fn act(&self, g: &Word) -> BVector {
        if mutation::active(Mutation::TrivialGAction) {
            return self.clone();
        }
        let g = if mutation::active(Mutation::WrongSemidirectSide) {
            g.inverse()
        } else {
            g.clone()
        };
        BVector {
            rank: self.rank,
            terms: self.terms.reindex(|k| &g * k),
        }
    }
}

/// The order cocycle `f: B × B → A`, bilinear.
pub fn cocycle_f(b: &BVector, b2: &BVector) -> Result<AVector, HgpError> {
    rank_check(b.rank, b2.rank)?;
    Ok(cocycle(b, b2))
}

pub(crate) fn cocycle(b: &BVector, b2: &BVector) -> AVector {
    let mut out = AVector::zero(b.rank);
    for (g, t) in b.terms() {
        let g_inv = g.inverse();
        for (h, t2) in b2.terms() {
            let key = &g_inv * h;
            if sign(&key) != Sign::Positive {
                continue;
            }
            let key = if mutation::active(Mutation::CorruptCocycleTerm) {
                h * &g_inv
            } else {
                key
            };
            out.add_term(key, t * t2);
        }
    }
    out
}

/// Element `(a, b)` of the central extension `B_f`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BfElement {
    pub a: AVector,
    pub b: BVector,
}

impl BfElement {
    pub fn identity(rank: u32) -> Self {
        BfElement {
            a: AVector::zero(rank),
            b: BVector::zero(rank),
        }
    }

    pub fn new(a: AVector, b: BVector) -> Result<Self, HgpError> {
        rank_check(a.rank, b.rank)?;
        Ok(BfElement { a, b })
    }

    pub fn rank(&self) -> u32 {
        self.a.rank
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn try_mul(&self, other: &BfElement) -> Result<BfElement, HgpError> {
        rank_check(self.rank(), other.rank())?;
        let f = cocycle(&self.b, &other.b);
        Ok(BfElement {
            a: &(&self.a + &other.a) + &f,
            b: &self.b + &other.b,
        })
    }

    /// `(-a - f(b, -b), -b)`.
    pub fn inverse(&self) -> BfElement {
        let nb = self.b.neg();
        let a = if mutation::active(Mutation::DropInverseCorrection) {
            self.a.neg()
        } else {
            &self.a.neg() - &cocycle(&self.b, &nb)
        };
        BfElement { a, b: nb }
    }

    /// Left action of `g`: re-index `B`, fix `A`.
    pub fn act(&self, g: &Word) -> BfElement {
        BfElement {
            a: self.a.clone(),
            b: self.b.act(g),
        }
    }
}

pub fn bf_mul(x: &BfElement, y: &BfElement) -> Result<BfElement, HgpError> {
    x.try_mul(y)
}

pub fn bf_inv(x: &BfElement) -> BfElement {
    x.inverse()
}

pub fn g_action(g: &Word, x: &BfElement) -> Result<BfElement, HgpError> {
    rank_check(g.rank(), x.rank())?;
    Ok(x.act(g))
}

/// Element `((a, b), g)` of `H(F,P)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HElement {
    pub ab: BfElement,
    pub g: Word,
}

impl HElement {
    pub fn identity(rank: u32) -> Self {
        HElement {
            ab: BfElement::identity(rank),
            g: Word::identity(rank),
        }
    }

    pub fn new(a: AVector, b: BVector, g: Word) -> Result<Self, HgpError> {
        rank_check(a.rank, g.rank())?;
        Ok(HElement {
            ab: BfElement::new(a, b)?,
            g,
        })
    }

    /// `((a, 0), id)`.
    pub fn from_a(a: AVector) -> Self {
        let rank = a.rank;
        HElement {
            ab: BfElement {
                a,
                b: BVector::zero(rank),
            },
            g: Word::identity(rank),
        }
    }

    /// `((0, b), id)`.
    pub fn from_b(b: BVector) -> Self {
        let rank = b.rank;
        HElement {
            ab: BfElement {
                a: AVector::zero(rank),
                b,
            },
            g: Word::identity(rank),
        }
    }

    /// `((0, 0), g)`.
    pub fn from_g(g: Word) -> Self {
        HElement {
            ab: BfElement::identity(g.rank()),
            g,
        }
    }

    pub fn rank(&self) -> u32 {
        self.g.rank()
    }

    pub fn a(&self) -> &AVector {
        &self.ab.a
    }

    pub fn b(&self) -> &BVector {
        &self.ab.b
    }

    pub fn is_identity(&self) -> bool {
        self.ab.is_identity() && self.g.is_identity()
    }

    /// Whether the element lies in `A` (zero `B` part, trivial `F` part).
    pub fn in_a(&self) -> bool {
        self.ab.b.is_zero() && self.g.is_identity()
    }

    pub fn try_mul(&self, other: &HElement) -> Result<HElement, HgpError> {
        rank_check(self.rank(), other.rank())?;
        Ok(HElement {
            ab: self.ab.try_mul(&other.ab.act(&self.g))?,
            g: &self.g * &other.g,
        })
    }

    /// `(g^-1 ⋅ u^-1, g^-1)`.
    pub fn inverse(&self) -> HElement {
        let g_inv = self.g.inverse();
        HElement {
            ab: self.ab.inverse().act(&g_inv),
            g: g_inv,
        }
    }

    pub fn commutator(&self, other: &HElement) -> HElement {
        &(&(self * other) * &self.inverse()) * &other.inverse()
    }

    pub fn to_json(&self) -> String {
        to_spaced_string(&HElementJson::from(self))
    }

    pub fn from_json(text: &str, rank: u32) -> Result<Self, HgpError> {
        let parsed: HElementJson =
            serde_json::from_str(text).map_err(|e| HgpError::Json(e.to_string()))?;
        let a = AVector::from_terms(
            rank,
            parsed
                .a
                .iter()
                .map(|t| Ok((Word::parse(&t.key, rank)?, t.coef)))
                .collect::<Result<Vec<_>, WordError>>()?,
        )?;
        let b = BVector::from_terms(
            rank,
            parsed
                .b
                .iter()
                .map(|t| Ok((Word::parse(&t.key, rank)?, t.coef)))
                .collect::<Result<Vec<_>, WordError>>()?,
        )?;
        HElement::new(a, b, Word::parse(&parsed.g, rank)?)
    }
}

impl std::ops::Mul<&HElement> for &HElement {
    type Output = HElement;

    fn mul(self, rhs: &HElement) -> HElement {
        self.try_mul(rhs).expect("rank mismatch in H(F,P) product")
    }
}

impl fmt::Display for HElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    key: String,
    coef: i64,
}

#[derive(Serialize, Deserialize)]
struct HElementJson {
    a: Vec<TermJson>,
    b: Vec<TermJson>,
    g: String,
}

impl From<&HElement> for HElementJson {
    fn from(x: &HElement) -> Self {
        let terms = |it: &mut dyn Iterator<Item = (&Word, i64)>| {
            it.map(|(k, c)| TermJson {
                key: k.to_string(),
                coef: c,
            })
            .collect()
        };
        HElementJson {
            a: terms(&mut x.ab.a.terms()),
            b: terms(&mut x.ab.b.terms()),
            g: x.g.to_string(),
        }
    }
}

pub fn h_mul(x: &HElement, y: &HElement) -> Result<HElement, HgpError> {
    x.try_mul(y)
}

pub fn h_inv(x: &HElement) -> HElement {
    x.inverse()
}

/// `((0, b_id), id)` followed by `((0, 0), e_i)` for `i = 1..=k`.
pub fn generators(k: u32) -> Vec<HElement> {
    let mut out = vec![HElement::from_b(BVector::basis(&Word::identity(k)))];
    for i in 1..=k {
        out.push(HElement::from_g(Word::generator(i, k).expect("i <= k")));
    }
    out
}

/// `θ: F_∞ → H(F_k, P)`, `x_1 ↦ ((0, b_id), id)`, `x_{i+1} ↦ ((0, 0), e_i)`,
/// and `x_i ↦ id` beyond the window `i > k + 1`.
pub fn theta(w: &Word, k: u32) -> HElement {
    let gens = generators(k);
    let window = k + 1;
    let mut acc = HElement::identity(k);
    for l in w.letters() {
        let mut idx = l.index();
        if idx > window {
            continue;
        }
        if mutation::active(Mutation::ThetaGeneratorSwap) && idx <= 2 {
            idx = 3 - idx;
        }
        let image = &gens[idx as usize - 1];
        acc = if l.is_inverse() {
            &acc * &image.inverse()
        } else {
            &acc * image
        };
    }
    acc
}

/// The index set `S ⊂ P` of the subgroup `A_S`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SIndex {
    /// `S = P ∩ G`.
    ConeIntersection(StallingsGraph),
    /// A finite explicit set of positive words.
    ExplicitFinite(BTreeSet<Word>),
}

impl SIndex {
    pub fn explicit(rank: u32, words: impl IntoIterator<Item = Word>) -> Result<Self, HgpError> {
        let mut set = BTreeSet::new();
        for w in words {
            rank_check(rank, w.rank())?;
            if sign(&w) != Sign::Positive {
                return Err(HgpError::NotPositive(w.to_string()));
            }
            set.insert(w);
        }
        Ok(SIndex::ExplicitFinite(set))
    }

    pub fn rank(&self) -> Option<u32> {
        match self {
            SIndex::ConeIntersection(g) => Some(g.rank()),
            SIndex::ExplicitFinite(set) => set.iter().next().map(|w| w.rank()),
        }
    }

    pub fn contains(&self, w: &Word) -> bool {
        match self {
            SIndex::ConeIntersection(g) => {
                g.contains(w).unwrap_or(false) && sign(w) == Sign::Positive
            }
            SIndex::ExplicitFinite(set) => set.contains(w),
        }
    }

    fn check(&self, rank: u32) -> Result<(), WordError> {
        match self.rank() {
            Some(r) => rank_check(r, rank),
            None => Ok(()),
        }
    }
}

/// Normal form of the coset `x A_S`: drop every `A`-term indexed by `S`.
pub fn as_mod(x: &HElement, s: &SIndex) -> Result<HElement, HgpError> {
    s.check(x.rank())?;
    Ok(as_mod_unchecked(x, s))
}

fn as_mod_unchecked(x: &HElement, s: &SIndex) -> HElement {
    let mut a = x.ab.a.filter(|k| !s.contains(k));
    if mutation::active(Mutation::AsModOffByOne) {
        if let Some((k, c)) = x.ab.a.terms().filter(|(k, _)| s.contains(k)).last() {
            a.terms.add(k.clone(), c);
        }
    }
    HElement {
        ab: BfElement {
            a,
            b: x.ab.b.clone(),
        },
        g: x.g.clone(),
    }
}

/// Sign of the coset `x A_S` in the lexicographic bi-order of `H/A_S`:
/// the `F` component first, then the `B` component under the least-index rule,
/// then the surviving `A` component under the same rule.
pub fn hq_sign(x: &HElement, s: &SIndex) -> Result<Sign, HgpError> {
    let y = as_mod(x, s)?;
    Ok(quotient_sign(&y))
}

fn quotient_sign(y: &HElement) -> Sign {
    if !y.g.is_identity() {
        return sign(&y.g);
    }
    if !y.ab.b.is_zero() {
        return least_index_sign(y.ab.b.terms());
    }
    least_index_sign(y.ab.a.terms())
}

/// The relative cone of `H(F,P)` whose `Sub` class is `A`.
pub fn relative_cone_over_a() -> ConeOracle<HElement> {
    ConeOracle::new("H(F,P) relative to A", |x: &HElement| {
        if !x.g.is_identity() {
            return Class::from(sign(&x.g));
        }
        Class::from(least_index_sign(x.ab.b.terms()))
    })
}

/// The relative cone of `H(F,P)` whose `Sub` class is `A_S`.
pub fn relative_cone_over_as(s: Arc<SIndex>) -> ConeOracle<HElement> {
    ConeOracle::new("H(F,P) relative to A_S", move |x: &HElement| {
        Class::from(quotient_sign(&as_mod_unchecked(x, &s)))
    })
}

/// An element of `H/A_S`, held as its [`as_mod`] normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coset {
    rep: HElement,
    s: Arc<SIndex>,
}

impl Coset {
    pub fn new(x: &HElement, s: Arc<SIndex>) -> Result<Self, HgpError> {
        Ok(Coset {
            rep: as_mod(x, &s)?,
            s,
        })
    }

    pub fn representative(&self) -> &HElement {
        &self.rep
    }

    pub fn sign(&self) -> Sign {
        quotient_sign(&self.rep)
    }
}

impl fmt::Display for Coset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.rep.fmt(f)
    }
}

impl GroupElement for Word {
    fn op(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn inv(&self) -> Self {
        self.inverse()
    }

    fn is_identity(&self) -> bool {
        self.is_empty()
    }
}

impl GroupElement for BVector {
    fn op(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn inv(&self) -> Self {
        self.neg()
    }

    fn is_identity(&self) -> bool {
        self.is_zero()
    }
}

impl fmt::Display for BVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(f, "b", self.terms())
    }
}

impl GroupElement for AVector {
    fn op(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn inv(&self) -> Self {
        self.neg()
    }

    fn is_identity(&self) -> bool {
        self.is_zero()
    }
}

impl fmt::Display for AVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(f, "a", self.terms())
    }
}

fn fmt_terms<'a>(
    f: &mut fmt::Formatter<'_>,
    name: &str,
    terms: impl Iterator<Item = (&'a Word, i64)>,
) -> fmt::Result {
    let mut any = false;
    for (k, c) in terms {
        if any {
            f.write_str(" + ")?;
        }
        write!(f, "{c}*{name}[{k}]")?;
        any = true;
    }
    if !any {
        f.write_str("0")?;
    }
    Ok(())
}

impl GroupElement for HElement {
    fn op(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn inv(&self) -> Self {
        self.inverse()
    }

    fn is_identity(&self) -> bool {
        HElement::is_identity(self)
    }
}

impl GroupElement for Coset {
    fn op(&self, rhs: &Self) -> Self {
        Coset {
            rep: as_mod_unchecked(&(&self.rep * &rhs.rep), &self.s),
            s: Arc::clone(&self.s),
        }
    }

    fn inv(&self) -> Self {
        Coset {
            rep: as_mod_unchecked(&self.rep.inverse(), &self.s),
            s: Arc::clone(&self.s),
        }
    }

    fn is_identity(&self) -> bool {
        self.rep.is_identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnus::positive_ball;
    use crate::sample;
    use crate::words::ball;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        Word::parse(s, 2).unwrap()
    }

    fn a(terms: &[(&str, i64)]) -> AVector {
        AVector::from_terms(2, terms.iter().map(|(k, c)| (w(k), *c))).unwrap()
    }

    fn b(terms: &[(&str, i64)]) -> BVector {
        BVector::from_terms(2, terms.iter().map(|(k, c)| (w(k), *c))).unwrap()
    }

    fn bf(x: &BfElement) -> HElement {
        HElement {
            ab: x.clone(),
            g: Word::identity(x.rank()),
        }
    }

    #[test]
    fn cocycle_basis_rule() {
        for h in positive_ball(2, 3).unwrap() {
            let got = cocycle_f(&BVector::basis(&Word::identity(2)), &BVector::basis(&h)).unwrap();
            assert_eq!(got, AVector::basis(&h).unwrap());
            assert!(cocycle_f(&BVector::basis(&h), &BVector::basis(&h))
                .unwrap()
                .is_zero());
        }
    }

    #[test]
    fn cocycle_is_bilinear_over_support_pairs() {
        // u = x2^-1 and v = x1 x2 give id < v and u < v.
        let (u, v) = (w("x2^-1"), w("x1 x2"));
        assert_eq!(sign(&v), Sign::Positive);
        assert_eq!(sign(&(&u.inverse() * &v)), Sign::Positive);
        let got = cocycle_f(&b(&[("1", 2), ("x2^-1", 1)]), &b(&[("x1 x2", 1)])).unwrap();
        let expect = &a(&[("x1 x2", 2)]) + &AVector::basis(&(&u.inverse() * &v)).unwrap();
        assert_eq!(got, expect);
    }

    #[test]
    fn cocycle_rank_mismatch() {
        let err = cocycle_f(&BVector::zero(2), &BVector::zero(3)).unwrap_err();
        assert!(matches!(
            err,
            HgpError::Word(WordError::RankMismatch { .. })
        ));
    }

    #[test]
    fn a_keys_must_be_positive() {
        let err = AVector::basis(&w("x1^-1")).unwrap_err();
        assert!(err.to_string().starts_with("NotPositive"));
        assert!(SIndex::explicit(2, [w("x2^-1")]).is_err());
    }

    #[test]
    fn normalized_cocycle_laws_on_ball_2_2() {
        let ball = ball(2, 2).unwrap();
        let f = |g: &Word, h: &Word| cocycle(&BVector::basis(g), &BVector::basis(h));
        let zero = BVector::zero(2);
        for g in &ball {
            let bg = BVector::basis(g);
            assert!(cocycle(&zero, &bg).is_zero() && cocycle(&bg, &zero).is_zero());
        }
        // The inverse of b_g in B is -b_g.
        for g in crate::words::ball(2, 3).unwrap() {
            let bg = BVector::basis(&g);
            let (l, r) = (cocycle(&bg.neg(), &bg), cocycle(&bg, &bg.neg()));
            assert!(l.is_zero() && r.is_zero(), "{g}");
            assert!(f(&g, &g).is_zero());
        }
        for g in &ball {
            for h in &ball {
                for k in &ball {
                    let (bg, bh, bk) = (BVector::basis(g), BVector::basis(h), BVector::basis(k));
                    let lhs = &(&(&cocycle(&bh, &bk) - &cocycle(&(&bg + &bh), &bk))
                        + &cocycle(&bg, &(&bh + &bk)))
                        - &cocycle(&bg, &bh);
                    assert!(lhs.is_zero(), "{g} {h} {k}");
                }
            }
        }
    }

    #[test]
    fn bf_examples() {
        let id = BfElement::identity(2);
        assert!(bf_mul(&id, &id).unwrap().is_identity());
        assert!(bf_inv(&id).is_identity());
        let x = BfElement::new(AVector::zero(2), b(&[("x2", 1)])).unwrap();
        assert_eq!(bf_inv(&x).b, b(&[("x2", -1)]));
        assert!(bf_inv(&x).a.is_zero());
        let y = BfElement::new(AVector::zero(2), b(&[("1", 1), ("x1", 1)])).unwrap();
        let yi = bf_inv(&y);
        assert_eq!(yi.a, a(&[("x1", 1)]));
        assert_eq!(yi.b, b(&[("1", -1), ("x1", -1)]));
        assert!(bf_mul(&y, &yi).unwrap().is_identity());
    }

    #[test]
    fn commutator_gives_a_h() {
        let b0 = HElement::from_b(BVector::basis(&Word::identity(2)));
        for h in positive_ball(2, 3).unwrap() {
            let bh = HElement::from_b(BVector::basis(&h));
            assert_eq!(
                b0.commutator(&bh),
                HElement::from_a(AVector::basis(&h).unwrap())
            );
        }
    }

    #[test]
    fn g_action_examples() {
        let mut r = sample::rng(11);
        for _ in 0..200 {
            let x = sample::h_element(&mut r, 2).ab;
            let (g, g2) = (sample::word(&mut r, 2, 3), sample::word(&mut r, 2, 3));
            assert_eq!(g_action(&Word::identity(2), &x).unwrap(), x);
            assert_eq!(
                g_action(&g, &g_action(&g2, &x).unwrap()).unwrap(),
                g_action(&(&g * &g2), &x).unwrap()
            );
        }
        let x = BfElement::new(AVector::zero(2), BVector::basis(&w("x2"))).unwrap();
        assert_eq!(
            g_action(&w("x1"), &x).unwrap().b,
            BVector::basis(&w("x1 x2"))
        );
        assert!(g_action(&Word::identity(3), &x).is_err());
    }

    #[test]
    fn conjugation_identity() {
        for (i, e) in [w("x1"), w("x2")].iter().enumerate() {
            for g in ball(2, 2).unwrap() {
                let ei = &generators(2)[i + 1];
                let x = HElement::from_b(BVector::basis(&g));
                let got = &(ei * &x) * &ei.inverse();
                assert_eq!(got, HElement::from_b(BVector::basis(&(e * &g))));
            }
        }
    }

    #[test]
    fn generators_and_theta() {
        let gens = generators(2);
        assert_eq!(gens.len(), 3);
        assert_eq!(
            gens[0],
            HElement::from_b(BVector::basis(&Word::identity(2)))
        );
        assert_eq!(gens[2], HElement::from_g(w("x2")));
        let w3 = |s: &str| Word::parse(s, 3).unwrap();
        assert_eq!(theta(&w3("x1"), 2), gens[0]);
        assert_eq!(
            theta(&w3("x2 x1 x2^-1"), 2),
            HElement::from_b(BVector::basis(&w("x1")))
        );
        let c = w3("x1").commutator(&w3("x2 x1 x2^-1"));
        assert_eq!(theta(&c, 2), HElement::from_a(a(&[("x1", 1)])));
        let c = w3("x1").commutator(&w3("x2^-1 x1 x2"));
        assert_eq!(theta(&c, 2), HElement::from_a(a(&[("x1", -1)])));
        let far = Word::parse("x4 x1 x4^-1", 4).unwrap();
        assert_eq!(theta(&far, 2), gens[0]);
    }

    #[test]
    fn json_format() {
        let x = HElement::new(a(&[("x1 x2", 2)]), b(&[("1", -1)]), w("x1")).unwrap();
        let text = x.to_json();
        assert_eq!(
            text,
            r#"{"a": [{"key": "x1 x2", "coef": 2}], "b": [{"key": "1", "coef": -1}], "g": "x1"}"#
        );
        assert_eq!(HElement::from_json(&text, 2).unwrap(), x);
        assert!(HElement::from_json(
            r#"{"a": [{"key": "x1^-1", "coef": 1}], "b": [], "g": "1"}"#,
            2
        )
        .is_err());
        assert!(matches!(
            HElement::from_json("{", 2),
            Err(HgpError::Json(_))
        ));
    }

    fn s_of(gens: &[&str]) -> SIndex {
        let gens: Vec<Word> = gens.iter().map(|g| w(g)).collect();
        SIndex::ConeIntersection(StallingsGraph::fold(2, &gens).unwrap())
    }

    #[test]
    fn as_mod_examples() {
        let s = s_of(&["x1"]);
        let x = HElement::new(AVector::zero(2), b(&[("x2", 1)]), w("x1")).unwrap();
        assert_eq!(as_mod(&x, &s).unwrap(), x);
        assert!(as_mod(&HElement::from_a(a(&[("x1 x1", 3)])), &s)
            .unwrap()
            .is_identity());
        let mixed = HElement::from_a(a(&[("x1", 1), ("x2", 4)]));
        assert_eq!(
            as_mod(&mixed, &s).unwrap(),
            HElement::from_a(a(&[("x2", 4)]))
        );
        let explicit = SIndex::explicit(2, [w("x2")]).unwrap();
        assert_eq!(
            as_mod(&mixed, &explicit).unwrap(),
            HElement::from_a(a(&[("x1", 1)]))
        );
        assert!(as_mod(&HElement::identity(3), &s).is_err());
    }

    #[test]
    fn as_mod_is_compatible_with_products() {
        for s in [s_of(&["x1"]), s_of(&["x1 x2"])] {
            let mut r = sample::rng(5);
            for _ in 0..200 {
                let x = sample::h_element(&mut r, 2);
                let y = sample::h_element(&mut r, 2);
                let left = as_mod(&(&x * &y), &s).unwrap();
                let right =
                    as_mod(&(&as_mod(&x, &s).unwrap() * &as_mod(&y, &s).unwrap()), &s).unwrap();
                assert_eq!(left, right);
                assert_eq!(as_mod(&left, &s).unwrap(), left);
            }
        }
    }

    #[test]
    fn hq_sign_examples() {
        let s = s_of(&["x1"]);
        assert_eq!(hq_sign(&HElement::identity(2), &s).unwrap(), Sign::Zero);
        assert_eq!(
            hq_sign(&HElement::from_a(a(&[("x2", 1)])), &s).unwrap(),
            Sign::Positive
        );
        assert_eq!(
            hq_sign(&HElement::from_a(a(&[("x1", -5)])), &s).unwrap(),
            Sign::Zero
        );
        let x = HElement::new(a(&[("x2", -1)]), b(&[("x1", 2)]), w("x2^-1")).unwrap();
        assert_eq!(hq_sign(&x, &s).unwrap(), Sign::Negative);
        let x = HElement::new(a(&[("x2", -1)]), b(&[("x1", 2)]), Word::identity(2)).unwrap();
        assert_eq!(hq_sign(&x, &s).unwrap(), Sign::Positive);
    }

    #[test]
    fn hq_sign_is_conjugation_invariant() {
        for s in [s_of(&["x1"]), s_of(&["x1 x2"])] {
            let mut r = sample::rng(9);
            for _ in 0..300 {
                let x = sample::h_element(&mut r, 2);
                let y = sample::h_element(&mut r, 2);
                let c = &(&y * &x) * &y.inverse();
                assert_eq!(
                    hq_sign(&c, &s).unwrap(),
                    hq_sign(&x, &s).unwrap(),
                    "{x} by {y}"
                );
            }
        }
    }

    #[test]
    fn coset_operations_match_normal_forms() {
        let s = Arc::new(s_of(&["x1"]));
        let mut r = sample::rng(2);
        for _ in 0..100 {
            let x = sample::h_element(&mut r, 2);
            let y = sample::h_element(&mut r, 2);
            let cx = Coset::new(&x, Arc::clone(&s)).unwrap();
            let cy = Coset::new(&y, Arc::clone(&s)).unwrap();
            assert_eq!(
                cx.op(&cy).representative(),
                &as_mod(&(&x * &y), &s).unwrap()
            );
            assert!(cx.op(&cx.inv()).is_identity());
            assert_eq!(cx.sign(), hq_sign(&x, &s).unwrap());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn h_group_axioms(seed in any::<u64>()) {
            let mut r = sample::rng(seed);
            let x = sample::h_element(&mut r, 2);
            let y = sample::h_element(&mut r, 2);
            let z = sample::h_element(&mut r, 2);
            prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
            prop_assert!((&x * &x.inverse()).is_identity());
            prop_assert!((&x.inverse() * &x).is_identity());
            prop_assert_eq!(&x * &HElement::identity(2), x.clone());
        }

        #[test]
        fn a_is_central(seed in any::<u64>()) {
            let mut r = sample::rng(seed);
            let x = sample::h_element(&mut r, 2);
            let alpha = HElement::from_a(sample::a_vector(&mut r, 2, 3, 3));
            prop_assert_eq!(&x * &alpha, &alpha * &x);
        }

        #[test]
        fn bf_inverse_round_trip(seed in any::<u64>()) {
            let mut r = sample::rng(seed);
            let x = sample::h_element(&mut r, 2).ab;
            prop_assert!(bf_mul(&x, &bf_inv(&x)).unwrap().is_identity());
            prop_assert!(bf(&x).try_mul(&bf(&bf_inv(&x))).unwrap().is_identity());
        }
    }
}
