//! The ten property suites run by `selftest` and the acceptance tests.
//!
//! Every suite is deterministic for a given seed, counts its checks, keeps the
//! first few failure messages, and fails when it overruns its time budget. A
//! panic inside a suite is caught and reported as a failure.

pub mod reference;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::cones::{check_bicone, lex_ses_cone, Class, ConeOracle, GroupElement};
use crate::hgp::{as_mod, cocycle_f, hq_sign, theta, AVector, BVector, Coset, HElement, SIndex};
use crate::lift::{check_aut1, conj_aut, lift};
use crate::magnus::{compare, positive_ball, sign, Sign};
use crate::reduction::{
    convergence_demo, injectivity_witness, iso_witness, perturb, preimage_query, reduce_map,
    separating_word,
};
use crate::sample::{self, SeededRng};
use crate::stallings::StallingsGraph;
use crate::words::{ball, Word};

/// Failure messages kept per suite.
const KEPT_FAILURES: usize = 8;

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    pub failure_count: usize,
    pub failures: Vec<String>,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl SuiteOutcome {
    /// The status line without timing, so output is reproducible.
    pub fn header(&self) -> String {
        format!(
            "{} criterion {:>2} {:<36} {:>6} checks",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.checks
        )
    }
}

/// The header followed by the kept failure messages.
impl fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.header())?;
        for msg in &self.failures {
            write!(f, "\n    {msg}")?;
        }
        if self.failure_count > self.failures.len() {
            write!(f, "\n    ... {} failures in total", self.failure_count)?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Tally {
    checks: usize,
    failure_count: usize,
    failures: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.fail(msg());
        }
    }

    fn fail(&mut self, msg: String) {
        self.failure_count += 1;
        if self.failures.len() < KEPT_FAILURES {
            self.failures.push(msg);
        }
    }
}

fn run(
    id: u32,
    name: &'static str,
    budget_secs: u64,
    body: impl FnOnce(&mut Tally),
) -> SuiteOutcome {
    let start = Instant::now();
    let mut tally = Tally::default();
    if let Err(panic) = catch_unwind(AssertUnwindSafe(|| body(&mut tally))) {
        let msg = panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "non-string panic".into());
        tally.fail(format!("panicked: {msg}"));
    }
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_secs);
    if elapsed > budget {
        tally.fail(format!("over budget: {:.2}s", elapsed.as_secs_f64()));
    }
    SuiteOutcome {
        id,
        name,
        passed: tally.failure_count == 0,
        checks: tally.checks,
        failure_count: tally.failure_count,
        failures: tally.failures,
        elapsed,
        budget,
    }
}

pub type Suite = fn(u64) -> SuiteOutcome;

pub const SUITES: [Suite; 10] = [
    cocycle_identity,
    magnus_order,
    h_group_axioms,
    commutator_identity,
    lift_suite,
    reduction_oracle,
    preimage_cases,
    conjugacy_witnesses,
    quotient_biorder,
    demos,
];

pub fn run_all(seed: u64) -> Vec<SuiteOutcome> {
    SUITES.iter().map(|s| s(seed)).collect()
}

/// Runs the suites in order and stops at the first failure.
pub fn first_failure(seed: u64) -> Option<SuiteOutcome> {
    SUITES.iter().map(|s| s(seed)).find(|o| !o.passed)
}

fn sub_seed(seed: u64, id: u64) -> SeededRng {
    sample::rng(seed ^ id.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn w2(s: &str) -> Word {
    Word::parse(s, 2).expect("valid literal")
}

/// Criterion 1: `f(h,k) - f(g+h,k) + f(g,h+k) - f(g,h) = 0` on basis triples.
pub fn cocycle_identity(_seed: u64) -> SuiteOutcome {
    run(1, "2-cocycle identity", 10, |t| {
        let basis: Vec<BVector> = ball(2, 2).unwrap().iter().map(BVector::basis).collect();
        let f = |x: &BVector, y: &BVector| cocycle_f(x, y).unwrap();
        let zero = BVector::zero(2);
        for g in &basis {
            t.check(f(&zero, g).is_zero() && f(g, &zero).is_zero(), || {
                format!("f is not normalized at {g}")
            });
        }
        for g in &basis {
            for h in &basis {
                let fgh = f(g, h);
                let gh = g + h;
                for k in &basis {
                    let lhs = &(&(&f(h, k) - &f(&gh, k)) + &f(g, &(h + k))) - &fgh;
                    t.check(lhs.is_zero(), || {
                        format!("cocycle identity fails at {g}, {h}, {k}: {lhs}")
                    });
                }
            }
        }
    })
}

/// Criterion 2: the Magnus order is a total, left- and conjugation-invariant
/// order whose positive elements form a semigroup.
pub fn magnus_order(seed: u64) -> SuiteOutcome {
    run(2, "Magnus order", 60, |t| {
        let mut rng = sub_seed(seed, 2);
        let b4 = ball(2, 4).unwrap();
        for w in &b4 {
            let expect = reference::sign(&reference::from_word(w), 2);
            let got = sign(w);
            t.check(got == expect, || {
                format!("sign({w}) = {got}, reference says {expect}")
            });
            t.check(sign(&w.inverse()) == got.negate(), || {
                format!("sign of the inverse of {w}")
            });
        }
        for u in &b4 {
            for v in &b4 {
                let uv = compare(u, v);
                let vu = compare(v, u);
                let ok = match (uv, vu) {
                    (Ok(a), Ok(b)) => {
                        (u == v && a == Ordering::Equal && b == Ordering::Equal)
                            || (u != v && a != Ordering::Equal && a == b.reverse())
                    }
                    _ => false,
                };
                t.check(ok, || format!("compare({u}, {v}) is not antisymmetric"));
            }
        }
        let pos: Vec<Word> = ball(2, 5)
            .unwrap()
            .into_iter()
            .filter(|w| sign(w) == Sign::Positive)
            .collect();
        for _ in 0..1000 {
            let (u, v) = (sample::pick(&mut rng, &pos), sample::pick(&mut rng, &pos));
            t.check(sign(&(u * v)) == Sign::Positive, || {
                format!("{u} and {v} positive, product not")
            });
        }
        for _ in 0..1000 {
            let g = sample::pick(&mut rng, &b4);
            let (u, v) = (sample::pick(&mut rng, &b4), sample::pick(&mut rng, &b4));
            let same = compare(&(g * u), &(g * v)).ok() == compare(u, v).ok();
            t.check(same, || {
                format!("left multiplication by {g} changes compare({u}, {v})")
            });
        }
        for _ in 0..1000 {
            let (h, w) = (sample::pick(&mut rng, &b4), sample::pick(&mut rng, &b4));
            t.check(sign(&w.conjugate_by(h)) == sign(w), || {
                format!("conjugating {w} by {h} changes its sign")
            });
        }
    })
}

/// Criterion 3: group axioms of `H(F,P)` on seeded triples.
pub fn h_group_axioms(seed: u64) -> SuiteOutcome {
    run(3, "H(F,P) group axioms", 30, |t| {
        let mut rng = sub_seed(seed, 3);
        let e = HElement::identity(2);
        for _ in 0..500 {
            let x = sample::h_element(&mut rng, 2);
            let y = sample::h_element(&mut rng, 2);
            let z = sample::h_element(&mut rng, 2);
            t.check(&(&x * &y) * &z == &x * &(&y * &z), || {
                format!("associativity fails at {x}, {y}, {z}")
            });
            t.check(&x * &e == x && &e * &x == x, || {
                format!("identity law fails at {x}")
            });
            let xi = x.inverse();
            t.check((&x * &xi).is_identity() && (&xi * &x).is_identity(), || {
                format!("inverse law fails at {x}")
            });
        }
    })
}

/// Criterion 4: `[(0, b_id), (0, b_h)] = (a_h, 0)` for `h ∈ P ∩ ball(2, 3)`.
pub fn commutator_identity(_seed: u64) -> SuiteOutcome {
    run(4, "commutator identity", 5, |t| {
        let id = Word::identity(2);
        let b0 = HElement::from_b(BVector::basis(&id));
        for h in positive_ball(2, 3).unwrap() {
            let bh = HElement::from_b(BVector::basis(&h));
            let ah = AVector::basis(&h).unwrap();
            let formula = &cocycle_f(&BVector::basis(&id), &BVector::basis(&h)).unwrap()
                - &cocycle_f(&BVector::basis(&h), &BVector::basis(&id)).unwrap();
            t.check(formula == ah, || {
                format!("f(b_id, b_h) - f(b_h, b_id) differs from a_h at {h}")
            });
            let c = b0.commutator(&bh);
            t.check(c == HElement::from_a(ah), || {
                format!("[b_id, b_h] = {c} at h = {h}")
            });
        }
    })
}

/// Criterion 5: lifts of inner automorphisms are homomorphisms and satisfy
/// the cocycle compatibility.
pub fn lift_suite(seed: u64) -> SuiteOutcome {
    run(5, "lift of inner automorphisms", 60, |t| {
        let mut rng = sub_seed(seed, 5);
        let b3 = ball(2, 3).unwrap();
        let mut hs: Vec<Word> = b3.iter().filter(|w| !w.is_empty()).cloned().collect();
        for i in 0..20 {
            let j = rng.gen_range(i..hs.len());
            hs.swap(i, j);
        }
        hs.truncate(20);
        for h in &hs {
            let phi = conj_aut(h);
            let aut1 = check_aut1(&phi).unwrap();
            t.check(aut1.ok && aut1.pairs_checked == 17 * 17, || {
                format!(
                    "aut1 compatibility fails for conjugation by {h}: {:?}",
                    aut1.witnesses
                )
            });
            let psi = lift(&phi).unwrap();
            for _ in 0..200 {
                let x = sample::h_element(&mut rng, 2);
                let y = sample::h_element(&mut rng, 2);
                let left = psi.apply(&(&x * &y)).unwrap();
                let right = &psi.apply(&x).unwrap() * &psi.apply(&y).unwrap();
                t.check(left == right, || {
                    format!("lift by {h} is not multiplicative at {x}, {y}")
                });
            }
        }
    })
}

fn seeded_subgroups(rng: &mut SeededRng, n: usize) -> Vec<StallingsGraph> {
    (0..n).map(|_| sample::subgroup(rng, 2).1).collect()
}

/// Criterion 6: `N_G` membership and `θ` agree with the reference evaluator
/// on all of `ball(3, 4)`.
pub fn reduction_oracle(seed: u64) -> SuiteOutcome {
    run(6, "reduction oracle equivalence", 120, |t| {
        let mut rng = sub_seed(seed, 6);
        let words = ball(3, 4).unwrap();
        let mut eval = reference::Evaluator::new(2);
        for w in &words {
            let expect = eval.theta(w).to_helement(2);
            let got = theta(w, 2);
            t.check(got == expect, || {
                format!("theta({w}) = {got}, reference {expect}")
            });
        }
        for g in seeded_subgroups(&mut rng, 5) {
            let n = reduce_map(&g, 2).unwrap();
            for w in &words {
                let expect = eval.member(w, &g);
                t.check(n.member(w) == expect, || {
                    format!("{}: membership of {w} should be {expect}", n.label())
                });
            }
        }
    })
}

fn query_word(rng: &mut SeededRng) -> Word {
    match rng.gen_range(0..4) {
        0 => sample::word(rng, 3, 6),
        1 => {
            let g = sample::nontrivial_word(rng, 2, 3);
            separating_word(&g)
        }
        2 => {
            let g = separating_word(&sample::nontrivial_word(rng, 2, 3));
            let h = separating_word(&sample::nontrivial_word(rng, 2, 2));
            let c = sample::word(rng, 3, 2);
            &g * &h.conjugate_by(&c)
        }
        _ => {
            let u = sample::word(rng, 3, 3);
            let x2 = Word::generator(2, 3).unwrap();
            u.commutator(&x2.pow(rng.gen_range(-2..=2)).conjugate_by(&u))
        }
    }
}

/// Criterion 7: the three cases of the preimage analysis agree with direct
/// membership.
pub fn preimage_cases(seed: u64) -> SuiteOutcome {
    run(7, "preimage case analysis", 60, |t| {
        let mut rng = sub_seed(seed, 7);
        let queries: Vec<Word> = (0..30).map(|_| query_word(&mut rng)).collect();
        for g in seeded_subgroups(&mut rng, 50) {
            let n = reduce_map(&g, 2).unwrap();
            for q in &queries {
                let pre = preimage_query(q, 2);
                let inside = n.member(q);
                t.check(pre.admits(&g).unwrap() == inside, || {
                    format!("{}: {q} gives {pre} but membership is {inside}", n.label())
                });
            }
        }
    })
}

/// Criterion 8: conjugate subgroups give isomorphic quotients, and distinct
/// subgroups give distinct marked groups.
pub fn conjugacy_witnesses(seed: u64) -> SuiteOutcome {
    run(8, "conjugacy and injectivity witnesses", 60, |t| {
        let mut rng = sub_seed(seed, 8);
        for i in 0..10 {
            let (_, g) = sample::subgroup(&mut rng, 2);
            let h = sample::nontrivial_word(&mut rng, 2, 3);
            let g2 = g.conjugate(&h).unwrap();
            let rep = iso_witness(&g, &g2, &h, seed.wrapping_add(i)).unwrap();
            t.check(rep.ok, || {
                format!("iso witness for conjugation by {h}: {:?}", rep.failures)
            });
        }
        let mut pairs = 0;
        while pairs < 10 {
            let (_, g1) = sample::subgroup(&mut rng, 2);
            let (_, g2) = sample::subgroup(&mut rng, 2);
            if g1.equal(&g2).unwrap() {
                continue;
            }
            pairs += 1;
            let (n1, n2) = (reduce_map(&g1, 2).unwrap(), reduce_map(&g2, 2).unwrap());
            match injectivity_witness(&g1, &g2, 3).unwrap() {
                Some((w, _)) => t.check(n1.member(&w) != n2.member(&w), || {
                    format!("{w} does not separate {} and {}", n1.label(), n2.label())
                }),
                None => t.check(false, || {
                    format!("no separating word for {} and {}", n1.label(), n2.label())
                }),
            }
        }
    })
}

fn coset_cone() -> ConeOracle<Coset> {
    ConeOracle::new("H/A_S", |c: &Coset| Class::from(c.sign()))
}

/// The same order assembled from the two short exact sequences:
/// `A/A_S → H/A_S → H/A` and `B → H/A → F`.
pub fn stacked_quotient_cone(s: Arc<SIndex>) -> ConeOracle<HElement> {
    let on_f = ConeOracle::new("F", |w: &Word| Class::from(sign(w)));
    let on_b = ConeOracle::new("B", |x: &HElement| {
        Class::from(crate::cones::least_index_sign(x.b().terms()))
    });
    let over_a = lex_ses_cone(on_b, on_f, |x: &HElement| x.g.clone());
    let s2 = Arc::clone(&s);
    let on_a = ConeOracle::new("A/A_S", move |x: &HElement| {
        let kept = x.a().filter(|k| !s2.contains(k));
        Class::from(crate::cones::least_index_sign(kept.terms()))
    });
    lex_ses_cone(on_a, over_a, |x: &HElement| x.clone())
}

/// Criterion 9: `hq_sign` is a bi-order cone on `H/A_S`.
pub fn quotient_biorder(seed: u64) -> SuiteOutcome {
    run(9, "quotient bi-order", 30, |t| {
        let mut rng = sub_seed(seed, 9);
        for gens in [vec![w2("x1")], vec![w2("x1 x2")]] {
            let graph = StallingsGraph::fold(2, &gens).unwrap();
            let s = Arc::new(SIndex::ConeIntersection(graph.clone()));
            let coset = |x: &HElement| Coset::new(x, Arc::clone(&s)).unwrap();
            let mut base: Vec<Coset> = Vec::new();
            let mut seen = BTreeSet::new();
            while base.len() < 30 {
                let c = coset(&sample::h_element(&mut rng, 2));
                if !c.is_identity()
                    && seen.insert(c.representative().to_json())
                    && seen.insert(c.inv().representative().to_json())
                {
                    base.push(c);
                }
            }
            let elems = sample::inverse_closed(coset(&HElement::identity(2)), base);
            let conj: Vec<Coset> = (0..20)
                .map(|_| coset(&sample::h_element(&mut rng, 2)))
                .collect();
            let rep = check_bicone(&coset_cone(), &elems, &conj).unwrap();
            t.check(rep.ok, || {
                format!("S = P ∩ <{}>: {}", gens[0], rep.to_json())
            });
            for w in graph.cone_intersection_ball(3).unwrap() {
                let x = HElement::from_a(AVector::basis(&w).unwrap().scale(rng.gen_range(1..=3)));
                let extra = HElement::from_a(sample::a_vector(&mut rng, 2, 2, 3));
                let shifted = &x * &extra;
                t.check(hq_sign(&x, &s).unwrap() == Sign::Zero, || {
                    format!("a[{w}] is not Sub")
                });
                t.check(
                    hq_sign(&shifted, &s).unwrap() == hq_sign(&extra, &s).unwrap(),
                    || format!("multiplying by a[{w}] changes the class of {extra}"),
                );
            }
            let stacked = stacked_quotient_cone(Arc::clone(&s));
            for c in &elems {
                let x = c.representative();
                let got = stacked.classify(x).unwrap();
                t.check(got == Class::from(hq_sign(x, &s).unwrap()), || {
                    format!("stacked cone disagrees with hq_sign at {x}")
                });
                t.check(as_mod(x, &s).unwrap() == *x, || {
                    format!("{x} is not in normal form")
                });
            }
        }
    })
}

/// Criterion 10: convergence to the commutator subgroup and the perturbation
/// step.
pub fn demos(seed: u64) -> SuiteOutcome {
    run(10, "convergence and perturbation demos", 10, |t| {
        let mut rng = sub_seed(seed, 10);
        let table = convergence_demo(4, 3).unwrap();
        t.check(table.stabilizes_at == Some(4), || {
            format!("stabilizes at {:?}", table.stabilizes_at)
        });
        t.check(table.decreasing, || "N_k is not decreasing in k".into());
        let rows_for = |word: &'static str| table.rows.iter().filter(move |r| r.word == word);
        t.check(rows_for("1").all(|r| r.in_nk && r.in_limit), || {
            "identity row".into()
        });
        t.check(
            rows_for("x3").all(|r| r.in_nk == (r.k < 3) && !r.in_limit),
            || "x3 rows".into(),
        );
        for _ in 0..5 {
            let (_, g) = sample::subgroup(&mut rng, 2);
            let n = reduce_map(&g, 2).unwrap();
            let mut constraints: Vec<Word> = g
                .loop_generators()
                .iter()
                .map(|x| separating_word(&crate::magnus::positive_form(x).0))
                .collect();
            let c = sample::word(&mut rng, 3, 3);
            constraints.push(c.commutator(&separating_word(&w2("x1"))).conjugate_by(&c));
            constraints.retain(|c| n.member(c));
            let p = perturb(&n, &constraints).unwrap();
            for c in &constraints {
                let c = c.with_rank(p.ell).unwrap();
                t.check(p.k.member(&c), || {
                    format!("perturbation drops constraint {c}")
                });
            }
            let x = p.x_ell();
            t.check(n.member(&x) && !p.k.member(&x), || {
                format!("perturbation does not differ at {x}")
            });
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stacked_cone_matches_on_random_elements() {
        let s = Arc::new(SIndex::ConeIntersection(
            StallingsGraph::fold(2, &[w2("x1")]).unwrap(),
        ));
        let cone = stacked_quotient_cone(Arc::clone(&s));
        let mut rng = sample::rng(77);
        for _ in 0..300 {
            let x = sample::h_element(&mut rng, 2);
            assert_eq!(
                cone.classify(&x).unwrap(),
                Class::from(hq_sign(&x, &s).unwrap())
            );
        }
    }

    #[test]
    fn fast_suites_pass() {
        for suite in [cocycle_identity, commutator_identity, demos] {
            let out = suite(sample::DEFAULT_SEED);
            assert!(out.passed, "{out}");
        }
    }
}
