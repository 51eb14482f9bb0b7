//! Subgroups of `F_k` as marked groups: `G ↦ N_G = θ^-1(A_{P∩G})`.
//!
//! `θ` sends `x_1` to the `b_id` generator of `H(F_k, P)`, `x_{i+1}` to `e_i`
//! and every later letter to the identity, so each `N_G` is a normal subgroup
//! of `F_∞` with bi-orderable quotient `H/A_{P∩G}`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::hgp::{as_mod, generators, hq_sign, theta, HgpError, SIndex};
use crate::lift::{conj_aut, lift, LiftError};
use crate::magnus::positive_form;
use crate::sample;
use crate::stallings::{StallingsError, StallingsGraph};
use crate::words::{ball, Letter, Word, WordError};

/// Seeded `H`-elements checked by [`iso_witness`] besides the generators.
pub const ISO_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Stallings(#[from] StallingsError),
    #[error(transparent)]
    Hgp(#[from] HgpError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error("NotConjugate: conjugating the first subgroup by `{0}` does not give the second")]
    NotConjugate(String),
    #[error("SameSubgroup: the two subgroups are equal")]
    SameSubgroup,
    #[error("ConstraintViolated: `{0}` is not in the marked group")]
    ConstraintViolated(String),
}

type Member = dyn Fn(&Word) -> bool + Send + Sync;

/// A normal subgroup of `F_∞` presented by a membership oracle. Letters past
/// `window` never affect membership.
#[derive(Clone)]
pub struct MarkedGroup {
    window: u32,
    member: Arc<Member>,
    label: String,
}

impl MarkedGroup {
    pub fn new(
        window: u32,
        label: impl Into<String>,
        member: impl Fn(&Word) -> bool + Send + Sync + 'static,
    ) -> Self {
        MarkedGroup {
            window,
            member: Arc::new(member),
            label: label.into(),
        }
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn member(&self, w: &Word) -> bool {
        (self.member)(w)
    }

    /// Failures of the subgroup and normality laws among `elems`, conjugating
    /// by `conjugators`.
    pub fn sampled_violations(&self, elems: &[Word], conjugators: &[Word]) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(w) = elems.first() {
            if !self.member(&Word::identity(w.rank())) {
                out.push("identity is not a member".to_string());
            }
        }
        let inside: Vec<&Word> = elems.iter().filter(|w| self.member(w)).collect();
        for u in &inside {
            if !self.member(&u.inverse()) {
                out.push(format!("{u} is a member but its inverse is not"));
            }
            for v in &inside {
                if !self.member(&(*u * *v)) {
                    out.push(format!("{u} and {v} are members but their product is not"));
                }
            }
            for h in conjugators {
                if !self.member(&u.conjugate_by(h)) {
                    out.push(format!("{u} is a member but its conjugate by {h} is not"));
                }
            }
        }
        out
    }
}

impl fmt::Debug for MarkedGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MarkedGroup")
            .field("window", &self.window)
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

/// `N_G`: the words `w` with `θ(w) ∈ A_{P∩G}`.
pub fn reduce_map(g: &StallingsGraph, k: u32) -> Result<MarkedGroup, ReductionError> {
    if g.rank() != k {
        return Err(WordError::RankMismatch {
            left: g.rank(),
            right: k,
        }
        .into());
    }
    let s = SIndex::ConeIntersection(g.clone());
    let label = format!("N_G for G = <{}>", join(&g.loop_generators()));
    Ok(MarkedGroup::new(k + 1, label, move |w| {
        let t = theta(w, k);
        t.in_a() && t.a().terms().all(|(key, _)| s.contains(key))
    }))
}

fn join(words: &[Word]) -> String {
    words
        .iter()
        .map(|w| w.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Polarity {
    In,
    Out,
}

/// The subbasic open set `{N : w ∈ N}` (`In`) or its complement (`Out`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubbasisQuery {
    pub word: Word,
    pub polarity: Polarity,
}

impl SubbasisQuery {
    pub fn holds(&self, n: &MarkedGroup) -> bool {
        n.member(&self.word) == (self.polarity == Polarity::In)
    }
}

/// `{G : w ∈ N_G}` as a set of subgroups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PreimageResult {
    Empty,
    Full,
    /// All subgroups containing every listed (positive) word.
    Cylinder(Vec<Word>),
}

impl PreimageResult {
    /// Whether `G` lies in the preimage.
    pub fn admits(&self, g: &StallingsGraph) -> Result<bool, ReductionError> {
        Ok(match self {
            PreimageResult::Empty => false,
            PreimageResult::Full => true,
            PreimageResult::Cylinder(words) => {
                for w in words {
                    if !g.contains(w)? {
                        return Ok(false);
                    }
                }
                true
            }
        })
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            kind: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            words: Option<Vec<String>>,
        }
        let out = match self {
            PreimageResult::Empty => Out {
                kind: "empty",
                words: None,
            },
            PreimageResult::Full => Out {
                kind: "full",
                words: None,
            },
            PreimageResult::Cylinder(ws) => Out {
                kind: "cylinder",
                words: Some(ws.iter().map(|w| w.to_string()).collect()),
            },
        };
        serde_json::to_string(&out).expect("plain struct serializes")
    }
}

impl fmt::Display for PreimageResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreimageResult::Empty => f.write_str("Empty"),
            PreimageResult::Full => f.write_str("Full"),
            PreimageResult::Cylinder(ws) => write!(f, "Cylinder({})", join(ws)),
        }
    }
}

/// The set of subgroups `G ≤ F_k` with `w ∈ N_G`.
pub fn preimage_query(w: &Word, k: u32) -> PreimageResult {
    let t = theta(w, k);
    if t.is_identity() {
        PreimageResult::Full
    } else if t.in_a() {
        PreimageResult::Cylinder(t.a().terms().map(|(key, _)| key.clone()).collect())
    } else {
        PreimageResult::Empty
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IsoReport {
    pub ok: bool,
    pub checked: usize,
    pub failures: Vec<String>,
}

/// Evidence that conjugation by `h` induces `H/A_S ≅ H/A_{S'}`, where
/// `S = P ∩ G1` and `S' = P ∩ G2`.
pub fn iso_witness(
    g1: &StallingsGraph,
    g2: &StallingsGraph,
    h: &Word,
    seed: u64,
) -> Result<IsoReport, ReductionError> {
    if !g1.conjugate(h)?.equal(g2)? {
        return Err(ReductionError::NotConjugate(h.to_string()));
    }
    iso_witness_for(
        &SIndex::ConeIntersection(g1.clone()),
        &SIndex::ConeIntersection(g2.clone()),
        h,
        seed,
    )
}

/// [`iso_witness`] against explicit index sets, without the conjugacy check.
///
/// For every generator of `H` and [`ISO_SAMPLES`] seeded elements `x`, checks
/// `as_mod(ψ(x), S') = ψ(as_mod(x, S))` and equality of the quotient signs,
/// where `ψ` lifts conjugation by `h`.
pub fn iso_witness_for(
    s: &SIndex,
    s_new: &SIndex,
    h: &Word,
    seed: u64,
) -> Result<IsoReport, ReductionError> {
    let k = h.rank();
    let psi = lift(&conj_aut(h))?;
    let mut rng = sample::rng(seed);
    let mut xs = generators(k);
    xs.extend((0..ISO_SAMPLES).map(|_| sample::h_element(&mut rng, k)));
    let mut failures = Vec::new();
    for x in &xs {
        let left = as_mod(&psi.apply(x)?, s_new)?;
        let right = psi.apply(&as_mod(x, s)?)?;
        if left != right {
            failures.push(format!("normal forms differ at {x}"));
        }
        let (sl, sr) = (hq_sign(&left, s_new)?, hq_sign(x, s)?);
        if sl != sr {
            failures.push(format!("sign {sr} becomes {sl} at {x}"));
        }
    }
    Ok(IsoReport {
        ok: failures.is_empty(),
        checked: xs.len(),
        failures,
    })
}

/// A word on which `N_{G1}` and `N_{G2}` disagree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InjectivityWitness {
    /// Shortlex-least element of `F_k` in exactly one subgroup.
    pub separator: String,
    /// `[x1, ĝ x1 ĝ^-1]` with `ĝ` the positive form of the separator shifted
    /// onto `x2..x_{k+1}`.
    pub word: String,
    pub in_first: bool,
    pub in_second: bool,
}

/// `ĝ`: the letter-by-letter image of `g ∈ F_k` under `e_i ↦ x_{i+1}`.
pub fn window_embed(g: &Word) -> Word {
    let letters: Vec<Letter> = g
        .letters()
        .iter()
        .map(|l| {
            let shifted = Letter::pos(l.index() + 1);
            if l.is_inverse() {
                shifted.inverse()
            } else {
                shifted
            }
        })
        .collect();
    Word::from_letters(&letters, g.rank() + 1).expect("shift stays in the window")
}

/// `[x1, ĝ x1 ĝ^-1]`, whose `θ`-image is `a_g` for positive `g`.
pub fn separating_word(g: &Word) -> Word {
    let x1 = Word::generator(1, g.rank() + 1).expect("rank >= 1");
    x1.commutator(&x1.conjugate_by(&window_embed(g)))
}

pub fn injectivity_witness(
    g1: &StallingsGraph,
    g2: &StallingsGraph,
    radius: usize,
) -> Result<Option<(Word, InjectivityWitness)>, ReductionError> {
    if g1.equal(g2)? {
        return Err(ReductionError::SameSubgroup);
    }
    let k = g1.rank();
    for g in ball(k, radius)? {
        if g1.contains(&g)? == g2.contains(&g)? {
            continue;
        }
        let (p, _) = positive_form(&g);
        let w = separating_word(&p);
        let (n1, n2) = (reduce_map(g1, k)?, reduce_map(g2, k)?);
        let witness = InjectivityWitness {
            separator: g.to_string(),
            word: w.to_string(),
            in_first: n1.member(&w),
            in_second: n2.member(&w),
        };
        return Ok(Some((w, witness)));
    }
    Ok(None)
}

/// `N_k = ker(F_∞ → Z^k)`, the words whose exponent sums of `x_1..x_k` vanish.
pub fn exponent_kernel(k: u32) -> MarkedGroup {
    MarkedGroup::new(k, format!("N_{k}"), move |w| {
        (1..=k).all(|i| w.exponent_sum(i) == 0)
    })
}

/// Membership in `[F_∞, F_∞]`: every exponent sum vanishes.
pub fn in_commutator_subgroup(w: &Word) -> bool {
    (1..=w.max_index()).all(|i| w.exponent_sum(i) == 0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConvergenceRow {
    pub word: String,
    pub k: u32,
    pub in_nk: bool,
    pub in_limit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least `k` from which `N_k` agrees with the limit on every sampled word.
    pub stabilizes_at: Option<u32>,
    /// Whether `N_{k+1} ⊆ N_k` held on the sample for every `k`.
    pub decreasing: bool,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("word,k,in_Nk,in_limit\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.word, r.k, r.in_nk, r.in_limit));
        }
        out
    }
}

/// Tabulates `w ∈ N_k` against `w ∈ [F_∞, F_∞]` for `k ≤ k_max` and every
/// word of `ball(k_max, radius)`.
pub fn convergence_demo(k_max: u32, radius: usize) -> Result<ConvergenceTable, ReductionError> {
    Ok(convergence_table(&ball(k_max, radius)?, k_max))
}

/// The convergence table over explicit words.
pub fn convergence_table(words: &[Word], k_max: u32) -> ConvergenceTable {
    let kernels: Vec<MarkedGroup> = (1..=k_max).map(exponent_kernel).collect();
    let mut rows = Vec::with_capacity(words.len() * k_max as usize);
    let mut agree_from = vec![true; k_max as usize + 1];
    let mut decreasing = true;
    for w in words {
        let limit = in_commutator_subgroup(w);
        let mut prev = true;
        for (i, n) in kernels.iter().enumerate() {
            let inside = n.member(w);
            if inside && !prev {
                decreasing = false;
            }
            prev = inside;
            if inside != limit {
                agree_from[i + 1] = false;
            }
            rows.push(ConvergenceRow {
                word: w.to_string(),
                k: i as u32 + 1,
                in_nk: inside,
                in_limit: limit,
            });
        }
    }
    let mut stabilizes_at = None;
    for k in (1..=k_max).rev() {
        if agree_from[k as usize] {
            stabilizes_at = Some(k);
        } else {
            break;
        }
    }
    ConvergenceTable {
        rows,
        stabilizes_at,
        decreasing,
    }
}

/// A marked group close to `N` that still differs from it.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub k: MarkedGroup,
    /// The letter index `ℓ` sent to the new `Z` factor.
    pub ell: u32,
}

impl Perturbation {
    pub fn x_ell(&self) -> Word {
        Word::generator(self.ell, self.ell).expect("ell >= 1")
    }
}

/// `K = ker(F_∞ → F_∞/N × Z)`, `x_i ↦ (x_i N, 0)` for `i < ℓ`, `x_ℓ ↦ (1, 1)`
/// and `x_i ↦ (1, 0)` beyond, with `ℓ` past the window and every constraint
/// letter. `K` contains every constraint word yet omits `x_ℓ ∈ N`.
pub fn perturb(n: &MarkedGroup, constraints: &[Word]) -> Result<Perturbation, ReductionError> {
    for c in constraints {
        if !n.member(c) {
            return Err(ReductionError::ConstraintViolated(c.to_string()));
        }
    }
    let top = constraints.iter().map(Word::max_index).max().unwrap_or(0);
    let ell = n.window().max(top) + 1;
    let inner = n.clone();
    let member = move |w: &Word| {
        if w.exponent_sum(ell) != 0 {
            return false;
        }
        let kept: Vec<Letter> = w
            .letters()
            .iter()
            .copied()
            .filter(|l| l.index() < ell)
            .collect();
        inner.member(&Word::from_letters(&kept, w.rank()).expect("subset of letters"))
    };
    let label = format!("perturbation of {} at x{ell}", n.label());
    Ok(Perturbation {
        k: MarkedGroup::new(ell, label, member),
        ell,
    })
}
