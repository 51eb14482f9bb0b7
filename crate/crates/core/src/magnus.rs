//! A bi-ordering of the free group via the Magnus expansion.
//!
//! `x_i` maps to `1 + X_i` in the ring of noncommutative integer power series.
//! A nontrivial word is positive when the coefficient of its deglex-least
//! nonconstant monomial is positive. Because the expansion is an injective
//! homomorphism into the units `1 + (higher terms)`, this cone is a
//! conjugation-invariant semigroup.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{OnceLock, RwLock};

use serde::Serialize;
use thiserror::Error;

use crate::mutation::{self, Mutation};
use crate::words::{ball, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error(
        "TruncationExhausted: no nonzero nonconstant coefficient of `{word}` up to degree {cap}"
    )]
    TruncationExhausted { word: String, cap: usize },
    #[error(transparent)]
    Word(#[from] WordError),
}

/// Membership in `P`, `P^-1` or `{id}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn negate(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }

    pub fn of(x: i64) -> Sign {
        match x.cmp(&0) {
            Ordering::Less => Sign::Negative,
            Ordering::Equal => Sign::Zero,
            Ordering::Greater => Sign::Positive,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Negative => "Negative",
            Sign::Zero => "Zero",
            Sign::Positive => "Positive",
        })
    }
}

/// A noncommutative monomial `X_{i_1} ... X_{i_m}`. Orders deglex: total degree,
/// then lexicographically with `X1 < X2 < ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn new(indices: Vec<u32>) -> Self {
        Monomial(indices)
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "X{x}")?;
        }
        Ok(())
    }
}

/// Integer noncommutative polynomial with every monomial of degree at most
/// `degree_cap`. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    rank: u32,
    degree_cap: usize,
    coeffs: BTreeMap<Monomial, i64>,
}

impl TruncatedSeries {
    pub fn one(rank: u32, degree_cap: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(Monomial::one(), 1);
        TruncatedSeries {
            rank,
            degree_cap,
            coeffs,
        }
    }

    pub fn from_terms(
        rank: u32,
        degree_cap: usize,
        terms: impl IntoIterator<Item = (Monomial, i64)>,
    ) -> Self {
        let mut s = TruncatedSeries {
            rank,
            degree_cap,
            coeffs: BTreeMap::new(),
        };
        for (m, c) in terms {
            if m.degree() <= degree_cap {
                s.add_term(m, c);
            }
        }
        s
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    pub fn coefficient(&self, m: &Monomial) -> i64 {
        self.coeffs.get(m).copied().unwrap_or(0)
    }

    /// Nonzero terms in deglex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, i64)> {
        self.coeffs.iter().map(|(m, &c)| (m, c))
    }

    fn add_term(&mut self, m: Monomial, c: i64) {
        if c == 0 {
            return;
        }
        match self.coeffs.entry(m) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    /// Truncated product.
    pub fn mul(&self, other: &TruncatedSeries) -> TruncatedSeries {
        let cap = self.degree_cap.min(other.degree_cap);
        let mut acc: BTreeMap<Monomial, i64> = BTreeMap::new();
        for (m1, &c1) in &self.coeffs {
            for (m2, &c2) in &other.coeffs {
                if m1.degree() + m2.degree() > cap {
                    continue;
                }
                let mut idx = m1.0.clone();
                idx.extend_from_slice(&m2.0);
                *acc.entry(Monomial(idx)).or_insert(0) += c1 * c2;
            }
        }
        acc.retain(|_, c| *c != 0);
        TruncatedSeries {
            rank: self.rank,
            degree_cap: cap,
            coeffs: acc,
        }
    }

    /// Right multiplication by the image of a single letter.
    fn mul_letter(&self, index: u32, inverse: bool) -> TruncatedSeries {
        let mut acc: BTreeMap<Monomial, i64> = BTreeMap::new();
        for (m, &c) in &self.coeffs {
            *acc.entry(m.clone()).or_insert(0) += c;
            // x^-1 = 1 - X + X^2 - ...; x = 1 + X
            let mut idx = m.0.clone();
            let mut sign = 1;
            while idx.len() < self.degree_cap {
                idx.push(index);
                if inverse {
                    sign = -sign;
                }
                *acc.entry(Monomial(idx.clone())).or_insert(0) += sign * c;
                if !inverse {
                    break;
                }
            }
        }
        acc.retain(|_, c| *c != 0);
        TruncatedSeries {
            rank: self.rank,
            degree_cap: self.degree_cap,
            coeffs: acc,
        }
    }

    /// Deglex-least nonconstant monomial with nonzero coefficient.
    pub fn leading_nonconstant(&self) -> Option<(&Monomial, i64)> {
        self.terms().find(|(m, _)| m.degree() > 0)
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, &c)) in self.coeffs.iter().enumerate() {
            let negative = c < 0;
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let a = c.unsigned_abs();
            if m.degree() == 0 {
                write!(f, "{a}")?;
            } else if a == 1 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{a}*{m}")?;
            }
        }
        Ok(())
    }
}

/// Image of `w` in the power series ring, truncated beyond `degree_cap`.
pub fn embed(w: &Word, degree_cap: usize) -> TruncatedSeries {
    let mut s = TruncatedSeries::one(w.rank(), degree_cap);
    for l in w.letters() {
        s = s.mul_letter(l.index(), l.is_inverse());
    }
    s
}

/// Default search bound on the monomial degree: `4|w| + 8`.
pub fn default_cap(w: &Word) -> usize {
    4 * w.len() + 8
}

fn memo() -> &'static RwLock<HashMap<Word, Sign>> {
    static MEMO: OnceLock<RwLock<HashMap<Word, Sign>>> = OnceLock::new();
    MEMO.get_or_init(Default::default)
}

/// Sign of `w` with the default degree bound. Results are memoized.
pub fn try_sign(w: &Word) -> Result<Sign, OrderError> {
    let cached = memo().read().unwrap().get(w).copied();
    let s = match cached {
        Some(s) => s,
        None => {
            let s = sign_with_cap(w, default_cap(w))?;
            memo().write().unwrap().insert(w.clone(), s);
            s
        }
    };
    if mutation::active(Mutation::FlipConeClassification) && is_x1x2(w) {
        return Ok(s.negate());
    }
    Ok(s)
}

fn is_x1x2(w: &Word) -> bool {
    w.to_string() == "x1 x2"
}

/// Sign of `w`; panics if the expansion search is exhausted, which cannot
/// happen for reduced nonempty words.
pub fn sign(w: &Word) -> Sign {
    match try_sign(w) {
        Ok(s) => s,
        Err(e) => panic!("{e}"),
    }
}

/// Sign of `w`, searching monomials up to degree `cap`. Not memoized.
///
/// Lower-degree coefficients of a truncated expansion do not depend on the
/// truncation, so the search raises the truncation one degree at a time and
/// stops at the first nonzero nonconstant coefficient.
pub fn sign_with_cap(w: &Word, cap: usize) -> Result<Sign, OrderError> {
    if w.is_empty() {
        return Ok(Sign::Zero);
    }
    // degree one: the coefficient of X_i is the exponent sum of x_i
    for i in 1..=w.rank() {
        let e = w.exponent_sum(i);
        if e != 0 {
            return Ok(Sign::of(e));
        }
    }
    for degree in 2..=cap {
        let s = embed(w, degree);
        if let Some((_, c)) = s.leading_nonconstant() {
            return Ok(Sign::of(c));
        }
    }
    Err(OrderError::TruncationExhausted {
        word: w.to_string(),
        cap,
    })
}

/// Order comparison: `u < v` iff `u^-1 v` is positive.
pub fn compare(u: &Word, v: &Word) -> Result<Ordering, OrderError> {
    if u.rank() != v.rank() {
        return Err(WordError::RankMismatch {
            left: u.rank(),
            right: v.rank(),
        }
        .into());
    }
    if u == v {
        return Ok(Ordering::Equal);
    }
    Ok(match try_sign(&(&u.inverse() * v))? {
        Sign::Positive => Ordering::Less,
        _ => Ordering::Greater,
    })
}

/// Infallible [`compare`] for words already known to share a rank.
pub fn order_cmp(u: &Word, v: &Word) -> Ordering {
    compare(u, v).expect("order comparison")
}

/// The positive words of `ball(rank, radius)`, shortlex.
pub fn positive_ball(rank: u32, radius: usize) -> Result<Vec<Word>, WordError> {
    Ok(ball(rank, radius)?
        .into_iter()
        .filter(|w| sign(w) == Sign::Positive)
        .collect())
}

/// The representative of `{w, w^-1}` lying in `P` (the identity maps to itself).
pub fn positive_form(w: &Word) -> (Word, i64) {
    match sign(w) {
        Sign::Negative => (w.inverse(), -1),
        _ => (w.clone(), 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s, 2).unwrap()
    }

    fn m(idx: &[u32]) -> Monomial {
        Monomial(idx.to_vec())
    }

    /// Brute-force: full factor polynomials, schoolbook products, truncation
    /// only at the end.
    fn brute_embed(word: &Word, cap: usize) -> BTreeMap<Vec<u32>, i64> {
        let mut acc: BTreeMap<Vec<u32>, i64> = BTreeMap::from([(vec![], 1)]);
        for l in word.letters() {
            let mut factor: Vec<(Vec<u32>, i64)> = vec![(vec![], 1)];
            if l.is_inverse() {
                for j in 1..=cap {
                    factor.push((vec![l.index(); j], if j % 2 == 0 { 1 } else { -1 }));
                }
            } else {
                factor.push((vec![l.index()], 1));
            }
            let mut next = BTreeMap::new();
            for (a, ca) in &acc {
                for (b, cb) in &factor {
                    let mut k = a.clone();
                    k.extend(b);
                    *next.entry(k).or_insert(0) += ca * cb;
                }
            }
            acc = next;
        }
        acc.retain(|k, c| k.len() <= cap && *c != 0);
        acc
    }

    #[test]
    fn embed_examples() {
        assert_eq!(embed(&Word::identity(2), 3).to_string(), "1");
        assert_eq!(embed(&w("x1"), 2).to_string(), "1 + X1");
        let c = embed(&w("x1 x2 x1^-1 x2^-1"), 2);
        assert_eq!(c.to_string(), "1 + X1*X2 - X2*X1");
        assert_eq!(c.coefficient(&m(&[1, 2])), 1);
        assert_eq!(c.coefficient(&m(&[2, 1])), -1);
    }

    #[test]
    fn embed_matches_brute_force_expansion() {
        for word in ball(2, 4).unwrap() {
            for cap in 1..=4 {
                let fast: BTreeMap<Vec<u32>, i64> = embed(&word, cap)
                    .terms()
                    .map(|(m, c)| (m.indices().to_vec(), c))
                    .collect();
                assert_eq!(fast, brute_embed(&word, cap), "{word} cap {cap}");
            }
        }
    }

    #[test]
    fn embed_is_multiplicative_up_to_truncation() {
        let b = ball(2, 3).unwrap();
        for u in b.iter().step_by(3) {
            for v in b.iter().step_by(5) {
                let lhs = embed(&(u * v), 4);
                let rhs = embed(u, 4).mul(&embed(v, 4));
                assert_eq!(lhs, rhs, "{u} * {v}");
            }
        }
    }

    #[test]
    fn sign_examples() {
        assert_eq!(sign(&Word::identity(2)), Sign::Zero);
        assert_eq!(sign(&w("x1^-1")), Sign::Negative);
        assert_eq!(sign(&w("x1 x2 x1^-1 x2^-1")), Sign::Positive);
        assert_eq!(sign(&w("x2 x1 x2^-1 x1^-1")), Sign::Negative);
    }

    #[test]
    fn sign_search_agrees_with_a_single_deep_truncation() {
        for word in ball(2, 5).unwrap().into_iter().skip(1) {
            let deep = embed(&word, word.len().max(1));
            let (_, c) = deep.leading_nonconstant().expect("nonzero below |w|");
            assert_eq!(sign(&word), Sign::of(c), "{word}");
        }
    }

    #[test]
    fn tiny_cap_is_reported() {
        let c = w("x1 x2 x1^-1 x2^-1");
        assert!(matches!(
            sign_with_cap(&c, 1),
            Err(OrderError::TruncationExhausted { cap: 1, .. })
        ));
        assert_eq!(sign_with_cap(&c, 2).unwrap(), Sign::Positive);
    }

    #[test]
    fn compare_examples() {
        let u = w("x1 x2");
        assert_eq!(compare(&u, &u).unwrap(), Ordering::Equal);
        assert_eq!(compare(&w("x1"), &u).unwrap(), Ordering::Less);
        assert_eq!(compare(&u, &w("x1")).unwrap(), Ordering::Greater);
        let other = Word::parse("x1", 3).unwrap();
        assert!(compare(&u, &other).is_err());
    }

    #[test]
    fn positive_ball_examples() {
        assert!(positive_ball(2, 0).unwrap().is_empty());
        let p1 = positive_ball(2, 1).unwrap();
        assert_eq!(p1.len(), 2);
        assert_eq!(p1, vec![w("x1"), w("x2")]);
        assert_eq!(positive_ball(2, 2).unwrap().len(), 8);
    }

    #[test]
    fn cone_partitions_ball_and_inverse_negates() {
        let b = ball(2, 4).unwrap();
        for x in &b {
            assert_eq!(sign(&x.inverse()), sign(x).negate());
        }
        let pos = b.iter().filter(|x| sign(x) == Sign::Positive).count();
        let neg = b.iter().filter(|x| sign(x) == Sign::Negative).count();
        assert_eq!(pos, neg);
        assert_eq!(pos + neg + 1, b.len());
    }

    #[test]
    fn order_is_total_and_antisymmetric_on_ball_2_3() {
        let b = ball(2, 3).unwrap();
        for u in &b {
            for v in &b {
                let c = compare(u, v).unwrap();
                assert_eq!(c.reverse(), compare(v, u).unwrap());
                assert_eq!(c == Ordering::Equal, u == v);
            }
        }
    }

    #[test]
    fn series_display_uses_coefficients() {
        let s = TruncatedSeries::from_terms(2, 3, [(m(&[]), 1), (m(&[1]), -2), (m(&[2, 1]), 3)]);
        assert_eq!(s.to_string(), "1 - 2*X1 + 3*X2*X1");
    }
}
