//! Cone oracles over an abstract group and finite-sample validators for the
//! cone axioms, plus the combinators that build new cones from old ones.
//!
//! A cone oracle sorts every element into `Pos`, `Neg` or `Sub`. For a total
//! cone `Sub` is the identity alone; for a relative cone it is the convex
//! subgroup `C`.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::hgp::BVector;
use crate::json::to_spaced_string;
use crate::magnus::{order_cmp, Sign};
use crate::mutation::{self, Mutation};
use crate::words::Word;

/// Witnesses kept per condition before further violations are only counted.
pub const WITNESS_CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Class {
    Pos,
    Neg,
    Sub,
}

impl Class {
    /// `Pos ↔ Neg`, `Sub` fixed.
    pub fn swap(self) -> Class {
        match self {
            Class::Pos => Class::Neg,
            Class::Neg => Class::Pos,
            Class::Sub => Class::Sub,
        }
    }
}

impl From<Sign> for Class {
    fn from(s: Sign) -> Self {
        match s {
            Sign::Positive => Class::Pos,
            Sign::Negative => Class::Neg,
            Sign::Zero => Class::Sub,
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// The group structure a cone oracle needs from its elements.
pub trait GroupElement: Clone + Eq + Hash + fmt::Display + Send + Sync + 'static {
    fn op(&self, rhs: &Self) -> Self;
    fn inv(&self) -> Self;
    fn is_identity(&self) -> bool;

    fn conj(&self, by: &Self) -> Self {
        by.op(self).op(&by.inv())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConeError {
    #[error("NotInverseClosed: {0}")]
    NotInverseClosed(String),
    #[error("DomainMismatch: `{0}` lies outside the subgroup this cone orders")]
    DomainMismatch(String),
    #[error("IllDefined: `{0}` and `{1}` represent one coset but classify differently")]
    IllDefined(String, String),
}

type Classifier<E> = dyn Fn(&E) -> Result<Class, ConeError> + Send + Sync;

pub struct ConeOracle<E> {
    classify: Arc<Classifier<E>>,
    description: String,
}

impl<E> Clone for ConeOracle<E> {
    fn clone(&self) -> Self {
        ConeOracle {
            classify: Arc::clone(&self.classify),
            description: self.description.clone(),
        }
    }
}

impl<E> fmt::Debug for ConeOracle<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConeOracle")
            .field("description", &self.description)
            .finish_non_exhaustive()
    }
}

impl<E: GroupElement> ConeOracle<E> {
    pub fn new(
        description: impl Into<String>,
        f: impl Fn(&E) -> Class + Send + Sync + 'static,
    ) -> Self {
        ConeOracle {
            classify: Arc::new(move |e| Ok(f(e))),
            description: description.into(),
        }
    }

    pub fn fallible(
        description: impl Into<String>,
        f: impl Fn(&E) -> Result<Class, ConeError> + Send + Sync + 'static,
    ) -> Self {
        ConeOracle {
            classify: Arc::new(f),
            description: description.into(),
        }
    }

    pub fn classify(&self, e: &E) -> Result<Class, ConeError> {
        (self.classify)(e)
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// The same cone, refusing elements outside `member` with `DomainMismatch`.
    pub fn restrict(self, member: impl Fn(&E) -> bool + Send + Sync + 'static) -> Self {
        let description = format!("{} (restricted)", self.description);
        ConeOracle::fallible(description, move |e| {
            if member(e) {
                self.classify(e)
            } else {
                Err(ConeError::DomainMismatch(e.to_string()))
            }
        })
    }

    /// The same cone with the class of `target` alone swapped.
    pub fn flipped_at(self, target: E) -> Self {
        let description = format!("{} flipped at {target}", self.description);
        ConeOracle::fallible(description, move |e| {
            let c = self.classify(e)?;
            Ok(if *e == target { c.swap() } else { c })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Condition {
    Semigroup,
    Partition,
    #[serde(rename = "CPC")]
    Cpc,
    Disjoint,
    ConjInv,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Cpc => f.write_str("CPC"),
            other => fmt::Debug::fmt(other, f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    pub witness: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BallReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    /// Total failing instances per condition, including those past the witness cap.
    #[serde(skip)]
    pub counts: Vec<(Condition, usize)>,
}

impl BallReport {
    pub fn to_json(&self) -> String {
        to_spaced_string(self)
    }

    pub fn has(&self, condition: Condition) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }

    pub fn count(&self, condition: Condition) -> usize {
        self.counts
            .iter()
            .find(|(c, _)| *c == condition)
            .map_or(0, |(_, n)| *n)
    }
}

#[derive(Default)]
struct Collector {
    violations: Vec<Violation>,
    counts: Vec<(Condition, usize)>,
}

impl Collector {
    fn push<E: fmt::Display>(&mut self, condition: Condition, witness: &[&E]) {
        let n = match self.counts.iter_mut().find(|(c, _)| *c == condition) {
            Some((_, n)) => n,
            None => {
                self.counts.push((condition, 0));
                &mut self.counts.last_mut().unwrap().1
            }
        };
        *n += 1;
        if *n <= WITNESS_CAP {
            self.violations.push(Violation {
                condition,
                witness: witness.iter().map(|e| e.to_string()).collect(),
            });
        }
    }

    fn finish(self) -> BallReport {
        BallReport {
            ok: self.violations.is_empty(),
            violations: self.violations,
            counts: self.counts,
        }
    }
}

struct Sample<'a, E> {
    elems: &'a [E],
    classes: Vec<Class>,
    index: HashMap<&'a E, usize>,
}

impl<'a, E: GroupElement> Sample<'a, E> {
    fn new(o: &ConeOracle<E>, elems: &'a [E]) -> Result<Self, ConeError> {
        let index: HashMap<&E, usize> = elems.iter().enumerate().map(|(i, e)| (e, i)).collect();
        if !elems.iter().any(|e| e.is_identity()) {
            return Err(ConeError::NotInverseClosed(
                "sample does not contain the identity".into(),
            ));
        }
        for e in elems {
            if !index.contains_key(&e.inv()) {
                return Err(ConeError::NotInverseClosed(format!(
                    "inverse of `{e}` is missing from the sample"
                )));
            }
        }
        let classes = elems
            .iter()
            .map(|e| o.classify(e))
            .collect::<Result<_, _>>()?;
        Ok(Sample {
            elems,
            classes,
            index,
        })
    }

    fn class_of(&self, e: &E) -> Option<Class> {
        self.index.get(e).map(|&i| self.classes[i])
    }

    fn with_class(&self, c: Class) -> Vec<usize> {
        (0..self.elems.len())
            .filter(|&i| self.classes[i] == c)
            .collect()
    }
}

fn relative_checks<E: GroupElement>(s: &Sample<'_, E>, out: &mut Collector) {
    let elems = s.elems;
    for (i, e) in elems.iter().enumerate() {
        let c = s.classes[i];
        if e.is_identity() && c != Class::Sub {
            out.push(Condition::Partition, &[e]);
        }
        let inv = e.inv();
        if s.class_of(&inv) != Some(c.swap()) {
            out.push(Condition::Partition, &[e, &inv]);
        }
    }
    let pos = s.with_class(Class::Pos);
    let sub = s.with_class(Class::Sub);
    for &i in &pos {
        for &j in &pos {
            let prod = elems[i].op(&elems[j]);
            if matches!(s.class_of(&prod), Some(c) if c != Class::Pos) {
                out.push(Condition::Semigroup, &[&elems[i], &elems[j]]);
            }
        }
    }
    for &i in &sub {
        for &j in &sub {
            let prod = elems[i].op(&elems[j]);
            if matches!(s.class_of(&prod), Some(c) if c != Class::Sub) {
                out.push(Condition::Semigroup, &[&elems[i], &elems[j]]);
            }
        }
    }
    for &i in &sub {
        if elems[i].is_identity() {
            continue;
        }
        for &p in &pos {
            let left = elems[i].op(&elems[p]);
            for &j in &sub {
                let prod = left.op(&elems[j]);
                if matches!(s.class_of(&prod), Some(c) if c != Class::Pos) {
                    out.push(Condition::Cpc, &[&elems[i], &elems[p], &elems[j]]);
                }
            }
        }
    }
    // Disjointness holds by construction: each element receives one class.
}

/// Checks the relative-cone axioms on every product that stays in `elems`.
pub fn check_relative_cone<E: GroupElement>(
    o: &ConeOracle<E>,
    elems: &[E],
) -> Result<BallReport, ConeError> {
    let sample = Sample::new(o, elems)?;
    let mut out = Collector::default();
    relative_checks(&sample, &mut out);
    Ok(out.finish())
}

/// [`check_relative_cone`] plus invariance of `Pos` under conjugation.
pub fn check_bicone<E: GroupElement>(
    o: &ConeOracle<E>,
    elems: &[E],
    conjugators: &[E],
) -> Result<BallReport, ConeError> {
    let sample = Sample::new(o, elems)?;
    let mut out = Collector::default();
    relative_checks(&sample, &mut out);
    for &p in &sample.with_class(Class::Pos) {
        let e = &elems[p];
        for g in conjugators {
            let c = e.conj(g);
            let class = match sample.class_of(&c) {
                Some(k) => k,
                None => o.classify(&c)?,
            };
            if class != Class::Pos {
                out.push(Condition::ConjInv, &[e, g, &c]);
            }
        }
    }
    Ok(out.finish())
}

/// The sampled part of the convex subgroup: elements classified `Sub`.
pub fn convex_subgroup<E: GroupElement>(
    o: &ConeOracle<E>,
    elems: &[E],
) -> Result<Vec<E>, ConeError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for e in elems {
        if o.classify(e)? == Class::Sub && seen.insert(e) {
            out.push(e.clone());
        }
    }
    Ok(out)
}

/// `R = P ∪ Q`: defer to `q` exactly where `p` answers `Sub`.
pub fn extend_relative_cone<E: GroupElement>(p: ConeOracle<E>, q: ConeOracle<E>) -> ConeOracle<E> {
    let description = format!("{} extended by {}", p.description, q.description);
    ConeOracle::fallible(description, move |e| match p.classify(e)? {
        Class::Sub => q.classify(e),
        c => Ok(c),
    })
}

/// The cone `q(P)` on a quotient whose elements are held as representatives.
///
/// Every sample is classified both as given and after `project`; a mismatch
/// means the cone does not descend and is reported as `IllDefined`.
pub fn quotient_cone<E: GroupElement>(
    p: ConeOracle<E>,
    project: impl Fn(&E) -> E + Send + Sync + 'static,
    samples: &[E],
) -> Result<ConeOracle<E>, ConeError> {
    let mut by_coset: HashMap<E, (E, Class)> = HashMap::new();
    for x in samples {
        let rep = project(x);
        let c = p.classify(x)?;
        let rc = p.classify(&rep)?;
        if c != rc {
            return Err(ConeError::IllDefined(x.to_string(), rep.to_string()));
        }
        match by_coset.get(&rep) {
            Some((y, yc)) if *yc != c => {
                return Err(ConeError::IllDefined(x.to_string(), y.to_string()));
            }
            Some(_) => {}
            None => {
                by_coset.insert(rep, (x.clone(), c));
            }
        }
    }
    let description = format!("quotient of {}", p.description);
    Ok(ConeOracle::fallible(description, move |e| {
        p.classify(&project(e))
    }))
}

/// Lexicographic cone for `1 → K → E → Q → 1`: quotient class first, then
/// the kernel cone on elements that project to `Sub`.
pub fn lex_ses_cone<E: GroupElement, Q: GroupElement>(
    pk: ConeOracle<E>,
    pg: ConeOracle<Q>,
    q: impl Fn(&E) -> Q + Send + Sync + 'static,
) -> ConeOracle<E> {
    let description = format!("lex({}, {})", pg.description, pk.description);
    ConeOracle::fallible(description, move |e| match pg.classify(&q(e))? {
        Class::Sub => pk.classify(e),
        c => Ok(c),
    })
}

/// Sign of the coefficient at the `<_P`-least index of a finitely supported
/// vector indexed by words; `Zero` for the empty support.
pub fn least_index_sign<'a>(terms: impl Iterator<Item = (&'a Word, i64)>) -> Sign {
    least_index_sign_by(terms, order_cmp)
}

fn least_index_sign_by<'a>(
    terms: impl Iterator<Item = (&'a Word, i64)>,
    order: impl Fn(&Word, &Word) -> Ordering,
) -> Sign {
    let pick = if mutation::active(Mutation::BConeShortlexMin) {
        terms.min_by(|x, y| x.0.cmp(y.0))
    } else {
        terms.min_by(|x, y| order(x.0, y.0))
    };
    pick.map_or(Sign::Zero, |(_, c)| Sign::of(c))
}

/// Cone on `B` (and by reuse on `A`, `A/A_S`): the sign of the coefficient at
/// the least index under `order`.
pub fn semidirect_b_cone(
    order: impl Fn(&Word, &Word) -> Ordering + Send + Sync + 'static,
) -> ConeOracle<BVector> {
    ConeOracle::new("least-index cone on B", move |b: &BVector| {
        Class::from(least_index_sign_by(b.terms(), &order))
    })
}

/// The Magnus bi-order cone on a free group.
pub fn magnus_cone() -> ConeOracle<Word> {
    ConeOracle::new("Magnus cone", |w: &Word| {
        Class::from(crate::magnus::sign(w))
    })
}

/// A left-order cone on `F_2` that is not conjugation-invariant.
///
/// It is pulled back from the Klein bottle group `⟨a, b | a b a^-1 = b^-1⟩`
/// along `x1 ↦ a`, `x2 ↦ b`. Elements are normalised as `a^m b^n` and ordered
/// by `m` first, then `n`.
pub fn klein_cone() -> ConeOracle<Word> {
    ConeOracle::new("Klein bottle left cone", |w: &Word| {
        let (mut m, mut n) = (0i64, 0i64);
        for l in w.letters() {
            match l.index() {
                1 => {
                    m += l.exponent();
                    n = -n;
                }
                _ => n += l.exponent(),
            }
        }
        match (m.cmp(&0), n.cmp(&0)) {
            (Ordering::Greater, _) | (Ordering::Equal, Ordering::Greater) => Class::Pos,
            (Ordering::Less, _) | (Ordering::Equal, Ordering::Less) => Class::Neg,
            _ => Class::Sub,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgp::{relative_cone_over_a, AVector, HElement};
    use crate::magnus::sign;
    use crate::sample;
    use crate::words::ball;

    fn w(s: &str) -> Word {
        Word::parse(s, 2).unwrap()
    }

    fn h_sample(seed: u64, n: usize) -> Vec<HElement> {
        let mut r = sample::rng(seed);
        let mut xs: Vec<HElement> = (0..n).map(|_| sample::h_element(&mut r, 2)).collect();
        for _ in 0..n / 3 {
            xs.push(HElement::from_a(sample::a_vector(&mut r, 2, 3, 3)));
        }
        sample::inverse_closed(HElement::identity(2), xs)
    }

    #[test]
    fn magnus_cone_passes_on_ball_2_3() {
        let elems = ball(2, 3).unwrap();
        let rep = check_relative_cone(&magnus_cone(), &elems).unwrap();
        assert!(rep.ok, "{}", rep.to_json());
        let conj = ball(2, 2).unwrap();
        assert!(check_bicone(&magnus_cone(), &elems, &conj).unwrap().ok);
        assert_eq!(check_bicone(&magnus_cone(), &elems, &[]).unwrap(), rep);
        assert_eq!(
            convex_subgroup(&magnus_cone(), &elems).unwrap(),
            vec![Word::identity(2)]
        );
    }

    #[test]
    fn sample_must_be_inverse_closed() {
        let err = check_relative_cone(&magnus_cone(), &[Word::identity(2), w("x1")]).unwrap_err();
        assert!(matches!(err, ConeError::NotInverseClosed(_)));
        let err = check_relative_cone(&magnus_cone(), &[w("x1^-1"), w("x1")]).unwrap_err();
        assert!(matches!(err, ConeError::NotInverseClosed(_)));
    }

    #[test]
    fn flipping_one_class_is_detected() {
        let elems = ball(2, 3).unwrap();
        for target in elems.iter().filter(|e| !e.is_empty()) {
            let o = magnus_cone().flipped_at(target.clone());
            let rep = check_relative_cone(&o, &elems).unwrap();
            assert!(!rep.ok && rep.has(Condition::Partition), "{target}");
        }
    }

    #[test]
    fn klein_cone_is_left_but_not_bi() {
        let elems = ball(2, 3).unwrap();
        let o = klein_cone();
        assert!(check_relative_cone(&o, &elems).unwrap().ok);
        let rep = check_bicone(&o, &elems, &ball(2, 1).unwrap()).unwrap();
        assert!(
            !rep.ok
                && rep
                    .violations
                    .iter()
                    .all(|v| v.condition == Condition::ConjInv)
        );
        assert!(rep
            .violations
            .iter()
            .any(|v| v.witness == ["x2", "x1", "x1 x2 x1^-1"]));
    }

    #[test]
    fn relative_cone_of_h_over_a() {
        let elems = h_sample(1, 40);
        let o = relative_cone_over_a();
        let rep = check_bicone(&o, &elems, &elems[..15]).unwrap();
        assert!(rep.ok, "{}", rep.to_json());
        let sub = convex_subgroup(&o, &elems).unwrap();
        let in_a: Vec<_> = elems.iter().filter(|x| x.in_a()).cloned().collect();
        assert_eq!(sub, in_a);
    }

    #[test]
    fn extension_by_lex_cone_on_a_is_total() {
        let lex_a = ConeOracle::new("lex on A", |x: &HElement| {
            Class::from(least_index_sign(x.a().terms()))
        })
        .restrict(|x: &HElement| x.in_a());
        let total = extend_relative_cone(relative_cone_over_a(), lex_a.clone());
        let elems = h_sample(4, 40);
        let rep = check_relative_cone(&total, &elems).unwrap();
        assert!(rep.ok, "{}", rep.to_json());
        assert_eq!(
            convex_subgroup(&total, &elems).unwrap(),
            vec![HElement::identity(2)]
        );
        let off = HElement::from_g(w("x1"));
        assert_eq!(total.classify(&off).unwrap(), Class::Pos);
        assert!(matches!(
            lex_a.classify(&off),
            Err(ConeError::DomainMismatch(_))
        ));
    }

    #[test]
    fn combinator_laws_on_samples() {
        let elems = ball(2, 3).unwrap();
        let pass = lex_ses_cone(magnus_cone(), magnus_cone(), |w: &Word| w.clone());
        let all_sub = ConeOracle::new("all Sub", |_: &Word| Class::Sub);
        assert_eq!(convex_subgroup(&all_sub, &elems).unwrap(), elems);
        let ext = extend_relative_cone(all_sub.clone(), magnus_cone());
        let q = quotient_cone(magnus_cone(), |w: &Word| w.clone(), &elems).unwrap();
        for o in [pass, ext, q] {
            assert_eq!(o.classify(&Word::identity(2)).unwrap(), Class::Sub);
            for e in &elems {
                assert_eq!(
                    o.classify(&e.inverse()).unwrap(),
                    o.classify(e).unwrap().swap()
                );
                assert_eq!(o.classify(e).unwrap(), Class::from(sign(e)));
            }
        }
    }

    #[test]
    fn lex_ses_cone_priorities() {
        // Kernel: B; quotient: F through the g-component.
        let pk = ConeOracle::new("B part", |x: &HElement| {
            Class::from(least_index_sign(x.b().terms()))
        });
        let o = lex_ses_cone(pk, magnus_cone(), |x: &HElement| x.g.clone());
        let kernel = HElement::from_b(BVector::basis(&w("x2")));
        assert_eq!(o.classify(&kernel).unwrap(), Class::Pos);
        let neg = &kernel * &HElement::from_g(w("x1^-1"));
        assert_eq!(o.classify(&neg).unwrap(), Class::Neg);
    }

    #[test]
    fn quotient_cone_detects_ill_defined_projection() {
        let elems = ball(2, 4).unwrap();
        let to_abelian = |w: &Word| {
            let (e1, e2) = (w.exponent_sum(1), w.exponent_sum(2));
            &Word::generator(1, 2).unwrap().pow(e1) * &Word::generator(2, 2).unwrap().pow(e2)
        };
        let err = quotient_cone(magnus_cone(), to_abelian, &elems).unwrap_err();
        assert!(matches!(err, ConeError::IllDefined(_, _)));
    }

    #[test]
    fn b_cone_rule() {
        let o = semidirect_b_cone(order_cmp);
        let b =
            |t: &[(&str, i64)]| BVector::from_terms(2, t.iter().map(|(k, c)| (w(k), *c))).unwrap();
        assert_eq!(o.classify(&b(&[("x1", 1)])).unwrap(), Class::Pos);
        let g = w("x2");
        assert_eq!(order_cmp(&Word::identity(2), &g), Ordering::Less);
        assert_eq!(o.classify(&b(&[("1", -2), ("x2", 5)])).unwrap(), Class::Neg);
        assert_eq!(o.classify(&BVector::zero(2)).unwrap(), Class::Sub);
        let mut r = sample::rng(21);
        for _ in 0..500 {
            let v = sample::b_vector(&mut r, 2, 3, 3);
            let g = sample::word(&mut r, 2, 3);
            assert_eq!(o.classify(&v.act(&g)).unwrap(), o.classify(&v).unwrap());
        }
    }

    #[test]
    fn b_cone_is_a_bicone_under_the_action() {
        let mut r = sample::rng(8);
        let vs: Vec<BVector> = (0..25).map(|_| sample::b_vector(&mut r, 2, 3, 2)).collect();
        let mut elems = sample::inverse_closed(BVector::zero(2), vs.clone());
        let orbit: Vec<BVector> = vs
            .iter()
            .map(|v| v.act(&sample::word(&mut r, 2, 2)))
            .collect();
        elems.extend(sample::inverse_closed(BVector::zero(2), orbit.clone()));
        let elems = sample::inverse_closed(BVector::zero(2), elems);
        let rep = check_bicone(&semidirect_b_cone(order_cmp), &elems, &orbit).unwrap();
        assert!(rep.ok, "{}", rep.to_json());
    }

    #[test]
    fn report_json_shape() {
        let elems = ball(2, 1).unwrap();
        let rep = check_relative_cone(&magnus_cone().flipped_at(w("x1")), &elems).unwrap();
        let json = rep.to_json();
        assert!(json.starts_with(
            r#"{"ok": false, "violations": [{"condition": "Partition", "witness": ["#
        ));
        assert_eq!(
            check_relative_cone(&magnus_cone(), &elems)
                .unwrap()
                .to_json(),
            r#"{"ok": true, "violations": []}"#
        );
        let _ = AVector::zero(2);
    }
}
