//! Seeded samplers shared by the test suites and the CLI.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cones::GroupElement;
use crate::hgp::{AVector, BVector, HElement};
use crate::magnus::positive_form;
use crate::stallings::StallingsGraph;
use crate::words::{Letter, Word};

pub const DEFAULT_SEED: u64 = 0xC0C0;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A reduced word of exactly `len` letters over `rank` generators.
pub fn word_of_len(rng: &mut SeededRng, rank: u32, len: usize) -> Word {
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let l = Letter::from_order_key(rng.gen_range(0..2 * rank));
        if letters.last().is_some_and(|p| *p == l.inverse()) {
            continue;
        }
        letters.push(l);
    }
    Word::from_letters(&letters, rank).expect("letters within rank")
}

/// A reduced word whose length is uniform in `0..=max_len`.
pub fn word(rng: &mut SeededRng, rank: u32, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    word_of_len(rng, rank, len)
}

/// A nonidentity word of length `1..=max_len`.
pub fn nontrivial_word(rng: &mut SeededRng, rank: u32, max_len: usize) -> Word {
    let len = rng.gen_range(1..=max_len.max(1));
    word_of_len(rng, rank, len)
}

pub fn pick<'a, T>(rng: &mut SeededRng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("nonempty slice")
}

fn coefficient(rng: &mut SeededRng) -> i64 {
    let c = rng.gen_range(1..=3);
    if rng.gen_bool(0.5) {
        c
    } else {
        -c
    }
}

/// An `A`-vector with at most `support` terms, keys of length `1..=key_len`.
pub fn a_vector(rng: &mut SeededRng, rank: u32, support: usize, key_len: usize) -> AVector {
    let n = rng.gen_range(0..=support);
    let terms: Vec<_> = (0..n)
        .map(|_| {
            let (key, _) = positive_form(&nontrivial_word(rng, rank, key_len));
            (key, coefficient(rng))
        })
        .collect();
    AVector::from_terms(rank, terms).expect("positive keys")
}

/// A `B`-vector with at most `support` terms, keys of length `0..=key_len`.
pub fn b_vector(rng: &mut SeededRng, rank: u32, support: usize, key_len: usize) -> BVector {
    let n = rng.gen_range(0..=support);
    let terms: Vec<_> = (0..n)
        .map(|_| (word(rng, rank, key_len), coefficient(rng)))
        .collect();
    BVector::from_terms(rank, terms).expect("ranks agree")
}

/// An element of `H(F_rank, P)` with supports of size ≤ 3 and key lengths ≤ 3.
pub fn h_element(rng: &mut SeededRng, rank: u32) -> HElement {
    let a = a_vector(rng, rank, 3, 3);
    let b = b_vector(rng, rank, 3, 3);
    let g = word(rng, rank, 3);
    HElement::new(a, b, g).expect("ranks agree")
}

/// A subgroup on one or two generators of length `1..=3`.
pub fn subgroup(rng: &mut SeededRng, rank: u32) -> (Vec<Word>, StallingsGraph) {
    let n = rng.gen_range(1..=2);
    let gens: Vec<Word> = (0..n).map(|_| nontrivial_word(rng, rank, 3)).collect();
    let graph = StallingsGraph::fold(rank, &gens).expect("ranks agree");
    (gens, graph)
}

/// `items` together with their inverses and the identity, deduplicated in
/// first-seen order.
pub fn inverse_closed<E: GroupElement>(identity: E, items: impl IntoIterator<Item = E>) -> Vec<E> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let mut push = |e: E| {
        if seen.insert(e.clone()) {
            out.push(e);
        }
    };
    push(identity);
    for e in items {
        let inv = e.inv();
        push(e);
        push(inv);
    }
    out
}
