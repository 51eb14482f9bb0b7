//! Slow, independent evaluators used as oracles by the suites.
//!
//! Words are plain `Vec<i32>` (`±i` for `x_i^{±1}`) reduced with a stack,
//! Magnus coefficients come from a dynamic program over the monomial, and
//! `θ` is evaluated by right-multiplying a triple `(a, b, g)` by one
//! generator at a time. Nothing here calls the word, series or `H` code of
//! the library.

use std::collections::{BTreeMap, HashMap};

use crate::hgp::{AVector, BVector, HElement};
use crate::magnus::Sign;
use crate::stallings::StallingsGraph;
use crate::words::Word;

pub type RWord = Vec<i32>;

pub fn reduce(letters: &[i32]) -> RWord {
    let mut out: RWord = Vec::with_capacity(letters.len());
    for &l in letters {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

pub fn mul(u: &[i32], v: &[i32]) -> RWord {
    let mut all = u.to_vec();
    all.extend_from_slice(v);
    reduce(&all)
}

pub fn inv(u: &[i32]) -> RWord {
    u.iter().rev().map(|l| -l).collect()
}

pub fn from_word(w: &Word) -> RWord {
    w.letters()
        .iter()
        .map(|l| l.index() as i32 * l.exponent() as i32)
        .collect()
}

pub fn to_word(w: &[i32], rank: u32) -> Word {
    Word::from_ints(w, rank).expect("letters within rank")
}

/// Coefficient of `X_{m_1} ⋯ X_{m_d}` in the Magnus expansion of `w`.
pub fn magnus_coefficient(w: &[i32], monomial: &[u32]) -> i64 {
    let d = monomial.len();
    let mut dp = vec![0i64; d + 1];
    dp[0] = 1;
    for &l in w {
        let i = l.unsigned_abs();
        let mut next = dp.clone();
        for p in 1..=d {
            if l > 0 {
                if monomial[p - 1] == i {
                    next[p] += dp[p - 1];
                }
            } else {
                let mut n = 1;
                while n <= p && monomial[p - n] == i {
                    let term = dp[p - n];
                    next[p] += if n % 2 == 1 { -term } else { term };
                    n += 1;
                }
            }
        }
        dp = next;
    }
    dp[d]
}

/// Sign of the first nonzero nonconstant coefficient in degree-then-lex
/// order, searching degrees up to `|w|`.
pub fn sign(w: &[i32], rank: u32) -> Sign {
    let w = reduce(w);
    if w.is_empty() {
        return Sign::Zero;
    }
    for d in 1..=w.len() {
        let mut mono = vec![1u32; d];
        loop {
            let c = magnus_coefficient(&w, &mono);
            if c != 0 {
                return Sign::of(c);
            }
            // Next index sequence in lexicographic order.
            let mut pos = d;
            while pos > 0 && mono[pos - 1] == rank {
                mono[pos - 1] = 1;
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            mono[pos - 1] += 1;
        }
    }
    panic!("no nonzero coefficient up to degree {} for {w:?}", w.len());
}

/// A triple `(a, b, g)` of `H(F_k, P)` held as raw maps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefH {
    pub a: BTreeMap<RWord, i64>,
    pub b: BTreeMap<RWord, i64>,
    pub g: RWord,
}

fn bump(map: &mut BTreeMap<RWord, i64>, key: RWord, c: i64) {
    let v = map.entry(key.clone()).or_insert(0);
    *v += c;
    if *v == 0 {
        map.remove(&key);
    }
}

impl RefH {
    pub fn is_identity(&self) -> bool {
        self.a.is_empty() && self.b.is_empty() && self.g.is_empty()
    }

    pub fn to_helement(&self, rank: u32) -> HElement {
        let a = AVector::from_terms(rank, self.a.iter().map(|(k, &c)| (to_word(k, rank), c)))
            .expect("reference a-keys are positive");
        let b = BVector::from_terms(rank, self.b.iter().map(|(k, &c)| (to_word(k, rank), c)))
            .expect("ranks agree");
        HElement::new(a, b, to_word(&self.g, rank)).expect("ranks agree")
    }
}

/// Evaluates `θ` with a private sign cache.
pub struct Evaluator {
    rank: u32,
    signs: HashMap<RWord, Sign>,
}

impl Evaluator {
    pub fn new(rank: u32) -> Self {
        Evaluator {
            rank,
            signs: HashMap::new(),
        }
    }

    pub fn sign(&mut self, w: &[i32]) -> Sign {
        if let Some(&s) = self.signs.get(w) {
            return s;
        }
        let s = sign(w, self.rank);
        self.signs.insert(w.to_vec(), s);
        s
    }

    /// `(a, b, g) · ((0, ±b_id), id) = (a ± f(b, b_g), b ± b_g, g)`.
    fn times_b0(&mut self, x: &mut RefH, eps: i64) {
        let target = x.g.clone();
        let terms: Vec<(RWord, i64)> = x.b.iter().map(|(k, &c)| (k.clone(), c)).collect();
        for (h, t) in terms {
            let key = mul(&inv(&h), &target);
            if self.sign(&key) == Sign::Positive {
                bump(&mut x.a, key, eps * t);
            }
        }
        bump(&mut x.b, target, eps);
    }

    /// `θ(w)` for the window `x_1 ↦ b_id`, `x_{i+1} ↦ e_i`.
    pub fn theta(&mut self, w: &Word) -> RefH {
        let k = self.rank as i32;
        let mut x = RefH::default();
        for l in from_word(w) {
            let i = l.abs();
            if i == 1 {
                self.times_b0(&mut x, l.signum() as i64);
            } else if i <= k + 1 {
                x.g = mul(&x.g, &[l.signum() * (i - 1)]);
            }
        }
        x
    }

    /// `θ(w) ∈ A_{P∩G}`, with membership in `G` traced on the graph.
    pub fn member(&mut self, w: &Word, g: &StallingsGraph) -> bool {
        let x = self.theta(w);
        if !x.b.is_empty() || !x.g.is_empty() {
            return false;
        }
        x.a.keys().all(|key| {
            self.sign(key) == Sign::Positive
                && g.contains(&to_word(key, self.rank)).expect("ranks agree")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dp_matches_hand_expansions() {
        // (1+X1)(1+X2)(1-X1+X1^2)(1-X2+X2^2)
        let c = [1, 2, -1, -2];
        assert_eq!(magnus_coefficient(&c, &[1]), 0);
        assert_eq!(magnus_coefficient(&c, &[1, 2]), 1);
        assert_eq!(magnus_coefficient(&c, &[2, 1]), -1);
        assert_eq!(magnus_coefficient(&[-1], &[1, 1, 1]), -1);
        assert_eq!(magnus_coefficient(&[1, 1], &[1, 1]), 1);
        assert_eq!(sign(&c, 2), Sign::Positive);
        assert_eq!(sign(&[-1], 2), Sign::Negative);
        assert_eq!(sign(&[1, -1], 2), Sign::Zero);
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(reduce(&[1, 2, -2, -1, 3]), vec![3]);
        assert_eq!(mul(&[1, 2], &inv(&[1, 2])), Vec::<i32>::new());
    }
}
