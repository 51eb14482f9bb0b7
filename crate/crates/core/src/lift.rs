//! Order-preserving automorphisms of `F_k` and their lifts to `H(F,P)`.
//!
//! An automorphism `φ` preserving `<_P` satisfies `φ(f(b, b')) = f(φb, φb')`,
//! so re-indexing `A`, `B` and `F` by `φ` is an automorphism of `H(F,P)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hgp::{as_mod, generators, AVector, BVector, BfElement, HElement, SIndex};
use crate::json::to_spaced_string;
use crate::magnus::{order_cmp, sign, Sign};
use crate::mutation::{self, Mutation};
use crate::stallings::StallingsError;
use crate::words::{ball, Word, WordError};

/// Radius of the ball on which order preservation is sampled.
pub const ORDER_SAMPLE_RADIUS: usize = 3;
/// Radius searched for inverse images when only forward images are given.
pub const INVERSE_SEARCH_RADIUS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LiftError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Stallings(#[from] StallingsError),
    #[error("NotOrderPreserving: sign of `{word}` changes under the automorphism")]
    NotOrderPreserving { word: String },
    #[error("NotInvertible: {0}")]
    NotInvertible(String),
    #[error("NotConeIntersection: map_as needs S = P ∩ G")]
    NotConeIntersection,
    #[error("JsonError: {0}")]
    Json(String),
}

/// An automorphism of `F_rank` given by generator images and inverse images.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderAutomorphism {
    rank: u32,
    images: Vec<Word>,
    inverse_images: Vec<Word>,
}

impl OrderAutomorphism {
    /// Checks that both substitutions compose to the identity on generators.
    /// Order preservation is checked separately, see [`Self::check_order`].
    pub fn new(images: Vec<Word>, inverse_images: Vec<Word>) -> Result<Self, LiftError> {
        let rank = images.len() as u32;
        if rank == 0 {
            return Err(WordError::ZeroRank.into());
        }
        if inverse_images.len() != images.len() {
            return Err(LiftError::NotInvertible(format!(
                "{} images but {} inverse images",
                images.len(),
                inverse_images.len()
            )));
        }
        for w in images.iter().chain(&inverse_images) {
            if w.rank() != rank {
                return Err(WordError::RankMismatch {
                    left: rank,
                    right: w.rank(),
                }
                .into());
            }
        }
        for i in 1..=rank {
            let x = Word::generator(i, rank)?;
            let there = x.substitute(&inverse_images)?.substitute(&images)?;
            let back = x.substitute(&images)?.substitute(&inverse_images)?;
            if there != x || back != x {
                return Err(LiftError::NotInvertible(format!(
                    "substitutions do not invert each other at {x}"
                )));
            }
        }
        Ok(OrderAutomorphism {
            rank,
            images,
            inverse_images,
        })
    }

    /// Finds inverse images by searching a ball of radius
    /// [`INVERSE_SEARCH_RADIUS`].
    pub fn from_images(images: Vec<Word>) -> Result<Self, LiftError> {
        let rank = images.len() as u32;
        if rank == 0 {
            return Err(WordError::ZeroRank.into());
        }
        let candidates = ball(rank, INVERSE_SEARCH_RADIUS)?;
        let mut inverse_images = Vec::with_capacity(images.len());
        for i in 1..=rank {
            let x = Word::generator(i, rank)?;
            let mut found = None;
            for u in &candidates {
                if u.substitute(&images)? == x {
                    found = Some(u.clone());
                    break;
                }
            }
            match found {
                Some(u) => inverse_images.push(u),
                None => {
                    return Err(LiftError::NotInvertible(format!(
                        "no preimage of {x} within radius {INVERSE_SEARCH_RADIUS}"
                    )))
                }
            }
        }
        Self::new(images, inverse_images)
    }

    pub fn identity(rank: u32) -> Self {
        let gens: Vec<Word> = (1..=rank)
            .map(|i| Word::generator(i, rank).expect("i <= rank"))
            .collect();
        OrderAutomorphism {
            rank,
            images: gens.clone(),
            inverse_images: gens,
        }
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn inverse_images(&self) -> &[Word] {
        &self.inverse_images
    }

    pub fn apply(&self, w: &Word) -> Result<Word, WordError> {
        w.substitute(&self.images)
    }

    pub fn apply_inverse(&self, w: &Word) -> Result<Word, WordError> {
        w.substitute(&self.inverse_images)
    }

    pub fn inverse(&self) -> Self {
        OrderAutomorphism {
            rank: self.rank,
            images: self.inverse_images.clone(),
            inverse_images: self.images.clone(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self, LiftError> {
        let images = other
            .images
            .iter()
            .map(|w| self.apply(w))
            .collect::<Result<_, _>>()?;
        let inverse_images = self
            .inverse_images
            .iter()
            .map(|w| other.apply_inverse(w))
            .collect::<Result<_, _>>()?;
        Self::new(images, inverse_images)
    }

    /// Checks `sign(φ(w)) = sign(w)` on every `w` in `ball(rank, 3)`.
    pub fn check_order(&self) -> Result<(), LiftError> {
        for w in ball(self.rank, ORDER_SAMPLE_RADIUS)? {
            if sign(&self.apply(&w)?) != sign(&w) {
                return Err(LiftError::NotOrderPreserving {
                    word: w.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Whether `self` is conjugation by some `h` with `|h| ≤ radius`.
    pub fn inner_witness(&self, radius: usize) -> Result<Option<Word>, LiftError> {
        for h in ball(self.rank, radius)? {
            if conj_aut(&h).images == self.images {
                return Ok(Some(h));
            }
        }
        Ok(None)
    }

    pub fn to_json(&self) -> String {
        to_spaced_string(&AutomorphismJson {
            rank: self.rank,
            images: self.images.iter().map(|w| w.to_string()).collect(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, LiftError> {
        let parsed: AutomorphismJson =
            serde_json::from_str(text).map_err(|e| LiftError::Json(e.to_string()))?;
        if parsed.images.len() != parsed.rank as usize {
            return Err(LiftError::Json(format!(
                "rank {} but {} images",
                parsed.rank,
                parsed.images.len()
            )));
        }
        let images = parsed
            .images
            .iter()
            .map(|s| Word::parse(s, parsed.rank))
            .collect::<Result<_, _>>()?;
        Self::from_images(images)
    }
}

#[derive(Serialize, Deserialize)]
struct AutomorphismJson {
    rank: u32,
    images: Vec<String>,
}

/// The inner automorphism `g ↦ h g h^-1`.
pub fn conj_aut(h: &Word) -> OrderAutomorphism {
    let rank = h.rank();
    let h_inv = h.inverse();
    let conj = |by: &Word| {
        (1..=rank)
            .map(|i| {
                Word::generator(i, rank)
                    .expect("i <= rank")
                    .conjugate_by(by)
            })
            .collect::<Vec<_>>()
    };
    OrderAutomorphism {
        rank,
        images: conj(h),
        inverse_images: conj(&h_inv),
    }
}

pub fn apply(phi: &OrderAutomorphism, w: &Word) -> Result<Word, WordError> {
    phi.apply(w)
}

/// The automorphism of `H(F,P)` induced by an order-preserving `φ`.
#[derive(Debug, Clone)]
pub struct LiftedAutomorphism {
    phi: OrderAutomorphism,
    sampled_only: bool,
}

impl LiftedAutomorphism {
    pub fn phi(&self) -> &OrderAutomorphism {
        &self.phi
    }

    /// True when `φ` is not a short inner automorphism, so order preservation
    /// rests on the finite sample alone.
    pub fn sampled_only(&self) -> bool {
        self.sampled_only
    }

    pub fn apply(&self, x: &HElement) -> Result<HElement, LiftError> {
        let phi = &self.phi;
        let a = if mutation::active(Mutation::LiftSkipsAKeys) {
            x.a().clone()
        } else {
            let mut terms = Vec::with_capacity(x.a().support_len());
            for (k, c) in x.a().terms() {
                let image = phi.apply(k)?;
                if sign(&image) != Sign::Positive {
                    return Err(LiftError::NotOrderPreserving {
                        word: k.to_string(),
                    });
                }
                terms.push((image, c));
            }
            AVector::from_terms(x.rank(), terms).map_err(|_| LiftError::NotOrderPreserving {
                word: x.a().to_string(),
            })?
        };
        let b = BVector::from_terms(
            x.rank(),
            x.b()
                .terms()
                .map(|(k, c)| Ok((phi.apply(k)?, c)))
                .collect::<Result<Vec<_>, WordError>>()?,
        )
        .expect("ranks agree");
        Ok(HElement {
            ab: BfElement { a, b },
            g: phi.apply(&x.g)?,
        })
    }
}

/// Lifts `φ` after the sampled order check.
pub fn lift(phi: &OrderAutomorphism) -> Result<LiftedAutomorphism, LiftError> {
    phi.check_order()?;
    let sampled_only = phi.inner_witness(2)?.is_none();
    Ok(LiftedAutomorphism {
        phi: phi.clone(),
        sampled_only,
    })
}

/// A generator of `H(F,P)` on which two lifts differ, if any.
pub fn separating_generator(
    phi: &LiftedAutomorphism,
    psi: &LiftedAutomorphism,
) -> Result<Option<HElement>, LiftError> {
    for x in generators(phi.phi.rank) {
        if phi.apply(&x)? != psi.apply(&x)? {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Aut1Report {
    pub ok: bool,
    pub pairs_checked: usize,
    /// Basis pairs `(u, v)` with `φ(f(b_u, b_v)) ≠ f(b_φu, b_φv)`.
    pub witnesses: Vec<[String; 2]>,
}

/// Checks `φ(f(b_u, b_v)) = f(b_φ(u), b_φ(v))` on all `u, v ∈ ball(rank, 2)`.
///
/// Both sides are compared as raw index maps so that a substitution which
/// breaks the order still yields a witness instead of an invalid `A`-key.
pub fn check_aut1(phi: &OrderAutomorphism) -> Result<Aut1Report, LiftError> {
    let basis = ball(phi.rank, 2)?;
    let images = basis
        .iter()
        .map(|u| phi.apply(u))
        .collect::<Result<Vec<_>, _>>()?;
    let raw_f = |u: &Word, v: &Word| -> Option<Word> {
        (order_cmp(u, v) == std::cmp::Ordering::Less).then(|| &u.inverse() * v)
    };
    let mut witnesses = Vec::new();
    let mut pairs = 0;
    for (u, pu) in basis.iter().zip(&images) {
        for (v, pv) in basis.iter().zip(&images) {
            pairs += 1;
            let left = raw_f(u, v).map(|k| phi.apply(&k)).transpose()?;
            let right = raw_f(pu, pv);
            if left != right {
                witnesses.push([u.to_string(), v.to_string()]);
            }
        }
    }
    Ok(Aut1Report {
        ok: witnesses.is_empty(),
        pairs_checked: pairs,
        witnesses,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MapReport {
    pub ok: bool,
    pub generators_checked: usize,
    pub elements_checked: usize,
    pub failures: Vec<String>,
}

/// `S' = h S h^-1` together with evidence that the lift of conjugation by `h`
/// carries `A_S` into `A_{S'}`.
pub fn map_as(h: &Word, s: &SIndex) -> Result<(SIndex, MapReport), LiftError> {
    let SIndex::ConeIntersection(graph) = s else {
        return Err(LiftError::NotConeIntersection);
    };
    if graph.rank() != h.rank() {
        return Err(WordError::RankMismatch {
            left: graph.rank(),
            right: h.rank(),
        }
        .into());
    }
    let s_new = SIndex::ConeIntersection(graph.conjugate(h)?);
    let lifted = lift(&conj_aut(h))?;
    let mut failures = Vec::new();
    let gens = graph.cone_intersection_ball(ORDER_SAMPLE_RADIUS)?;
    for w in &gens {
        let image = lifted.apply(&HElement::from_a(AVector::basis(w).expect("w in P")))?;
        if !as_mod(&image, &s_new).expect("ranks agree").is_identity() {
            failures.push(format!("a[{w}] is not sent into A_S'"));
        }
    }
    let h_inv = h.inverse();
    let elems = ball(h.rank(), ORDER_SAMPLE_RADIUS)?;
    for w in &elems {
        if s_new.contains(w) != s.contains(&w.conjugate_by(&h_inv)) {
            failures.push(format!("membership of {w} in S' disagrees with h S h^-1"));
        }
    }
    let report = MapReport {
        ok: failures.is_empty(),
        generators_checked: gens.len(),
        elements_checked: elems.len(),
        failures,
    };
    Ok((s_new, report))
}
