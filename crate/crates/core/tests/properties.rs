use std::collections::HashSet;
use std::thread;

use biorder::magnus::sign;
use biorder::sample;
use biorder::stallings::StallingsGraph;
use biorder::words::{ball, Word};
use proptest::prelude::*;

fn products(gens: &[Word], max_factors: usize) -> HashSet<Word> {
    let rank = gens[0].rank();
    let mut letters: Vec<Word> = gens.to_vec();
    letters.extend(gens.iter().map(Word::inverse));
    let mut layer = vec![Word::identity(rank)];
    let mut all: HashSet<Word> = layer.iter().cloned().collect();
    for _ in 0..max_factors {
        let mut next = Vec::new();
        for p in &layer {
            for l in &letters {
                let q = p * l;
                if all.insert(q.clone()) {
                    next.push(q);
                }
            }
        }
        layer = next;
    }
    all
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn fold_contains_its_generators(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let n = 1 + (seed % 3) as usize;
        let gens: Vec<Word> = (0..n).map(|_| sample::word(&mut rng, 2, 4)).collect();
        let g = StallingsGraph::fold(2, &gens).unwrap();
        for w in &gens {
            prop_assert!(g.contains(w).unwrap());
        }
    }

    #[test]
    fn conjugation_is_an_action(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let (_, g) = sample::subgroup(&mut rng, 2);
        let h = sample::word(&mut rng, 2, 3);
        let h2 = sample::word(&mut rng, 2, 3);
        let twice = g.conjugate(&h).unwrap().conjugate(&h2).unwrap();
        prop_assert_eq!(twice, g.conjugate(&(&h2 * &h)).unwrap());
        prop_assert_eq!(g.conjugate(&h).unwrap().conjugate(&h.inverse()).unwrap(), g);
    }
}

#[test]
fn contains_agrees_with_products_of_generators() {
    let mut rng = sample::rng(sample::DEFAULT_SEED);
    let b4 = ball(2, 4).unwrap();
    for _ in 0..50 {
        let (gens, g) = sample::subgroup(&mut rng, 2);
        let found = products(&gens, 3);
        for p in &found {
            assert!(g.contains(p).unwrap(), "{p} is a product of generators");
        }
        if gens.len() == 1 {
            // Every power g^n with |n| <= 4 is listed, and |g^n| >= |n|.
            let found = products(&gens, 4);
            for w in &b4 {
                assert_eq!(
                    g.contains(w).unwrap(),
                    found.contains(w),
                    "{w} in <{}>",
                    gens[0]
                );
            }
        }
    }
}

#[test]
fn sign_memo_is_consistent_across_threads() {
    let words = ball(2, 5).unwrap();
    let expected: Vec<_> = words.iter().map(sign).collect();
    thread::scope(|s| {
        let handles: Vec<_> = (0..4)
            .map(|t| {
                let words = &words;
                s.spawn(move || {
                    let mut order: Vec<usize> = (0..words.len()).collect();
                    if t % 2 == 1 {
                        order.reverse();
                    }
                    order
                        .into_iter()
                        .map(|i| (i, sign(&words[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, s) in h.join().unwrap() {
                assert_eq!(s, expected[i]);
            }
        }
    });
}
