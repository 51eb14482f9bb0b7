//! Reduced words in free groups of finite rank.
//!
//! A [`Word`] is always stored freely reduced, so structural equality is group
//! equality. The ambient rank travels with the value and is checked whenever
//! two words meet.

use std::cmp::Ordering;
use std::fmt;
use std::num::NonZeroU32;

use thiserror::Error;

use crate::mutation::{self, Mutation};

/// Largest radius accepted by [`ball`].
pub const BALL_RADIUS_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("IndexOutOfRank: generator x{index} exceeds rank {rank}")]
    IndexOutOfRank { index: u32, rank: u32 },
    #[error("RankMismatch: rank {left} vs rank {right}")]
    RankMismatch { left: u32, right: u32 },
    #[error("RadiusTooLarge: radius {radius} exceeds cap {cap}")]
    RadiusTooLarge { radius: usize, cap: usize },
    #[error("ParseError: {0}")]
    Parse(String),
    #[error("ZeroRank: free group rank must be positive")]
    ZeroRank,
}

/// A free generator `x_i`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Generator(NonZeroU32);

impl Generator {
    pub fn new(index: u32) -> Option<Self> {
        NonZeroU32::new(index).map(Generator)
    }

    pub fn index(self) -> u32 {
        self.0.get()
    }
}

/// A generator or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter {
    gen: Generator,
    inverse: bool,
}

impl Letter {
    pub fn new(gen: Generator, inverse: bool) -> Self {
        Letter { gen, inverse }
    }

    /// `x_index`. Panics if `index == 0`.
    pub fn pos(index: u32) -> Self {
        Letter::new(
            Generator::new(index).expect("generator index is 1-based"),
            false,
        )
    }

    /// `x_index^-1`. Panics if `index == 0`.
    pub fn neg(index: u32) -> Self {
        Letter::new(
            Generator::new(index).expect("generator index is 1-based"),
            true,
        )
    }

    pub fn generator(self) -> Generator {
        self.gen
    }

    pub fn index(self) -> u32 {
        self.gen.index()
    }

    pub fn is_inverse(self) -> bool {
        self.inverse
    }

    /// +1 or -1.
    pub fn exponent(self) -> i64 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    pub fn inverse(self) -> Self {
        Letter {
            gen: self.gen,
            inverse: !self.inverse,
        }
    }

    /// Position in the fixed letter order `x1 < x1^-1 < x2 < x2^-1 < ...`.
    pub fn order_key(self) -> u32 {
        2 * (self.index() - 1) + u32::from(self.inverse)
    }

    /// Inverse of [`Letter::order_key`].
    pub fn from_order_key(key: u32) -> Self {
        Letter::new(Generator::new(key / 2 + 1).unwrap(), key % 2 == 1)
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order_key().cmp(&other.order_key())
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "x{}^-1", self.index())
        } else {
            write!(f, "x{}", self.index())
        }
    }
}

/// A freely reduced word in the free group of rank `rank`.
///
/// Ordering is shortlex within a rank (length first, then letters compared by
/// [`Letter::order_key`]); words of different rank order by rank.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<Letter>,
    rank: u32,
}

/// Freely reduces `letters` in the free group of rank `rank`.
pub fn reduce(letters: &[Letter], rank: u32) -> Result<Word, WordError> {
    check_rank(rank)?;
    let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
    for &l in letters {
        if l.index() > rank {
            return Err(WordError::IndexOutOfRank {
                index: l.index(),
                rank,
            });
        }
        push_reduced(&mut out, l);
    }
    Ok(Word { letters: out, rank })
}

fn push_reduced(out: &mut Vec<Letter>, l: Letter) {
    if out.last() == Some(&l.inverse()) {
        out.pop();
    } else {
        out.push(l);
    }
}

fn check_rank(rank: u32) -> Result<(), WordError> {
    if rank == 0 {
        Err(WordError::ZeroRank)
    } else {
        Ok(())
    }
}

impl Word {
    /// The empty word. Panics on rank 0.
    pub fn identity(rank: u32) -> Self {
        assert!(rank > 0, "free group rank must be positive");
        Word {
            letters: Vec::new(),
            rank,
        }
    }

    pub fn generator(index: u32, rank: u32) -> Result<Self, WordError> {
        reduce(&[Letter::pos(index)], rank)
    }

    pub fn from_letters(letters: &[Letter], rank: u32) -> Result<Self, WordError> {
        reduce(letters, rank)
    }

    /// Builds a word from signed generator indices (`-2` is `x2^-1`).
    pub fn from_ints(ints: &[i32], rank: u32) -> Result<Self, WordError> {
        let mut letters = Vec::with_capacity(ints.len());
        for &i in ints {
            let gen = Generator::new(i.unsigned_abs())
                .ok_or_else(|| WordError::Parse("generator index 0".into()))?;
            letters.push(Letter::new(gen, i < 0));
        }
        reduce(&letters, rank)
    }

    /// Parses the text grammar `1 | token (" " token)*`, `token := xN | xN^-1`.
    pub fn parse(s: &str, rank: u32) -> Result<Self, WordError> {
        let letters = parse_letters(s)?;
        reduce(&letters, rank)
    }

    /// Parses a word whose rank is the largest index mentioned (at least
    /// `min_rank`). Used for words over a finite window of `F_inf`.
    pub fn parse_unbounded(s: &str, min_rank: u32) -> Result<Self, WordError> {
        let letters = parse_letters(s)?;
        let rank = letters
            .iter()
            .map(|l| l.index())
            .max()
            .unwrap_or(0)
            .max(min_rank);
        reduce(&letters, rank)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// The same word viewed in a free group of another rank.
    pub fn with_rank(&self, rank: u32) -> Result<Self, WordError> {
        check_rank(rank)?;
        if let Some(l) = self.letters.iter().find(|l| l.index() > rank) {
            return Err(WordError::IndexOutOfRank {
                index: l.index(),
                rank,
            });
        }
        Ok(Word {
            letters: self.letters.clone(),
            rank,
        })
    }

    fn same_rank(&self, other: &Word) -> Result<(), WordError> {
        if self.rank == other.rank {
            Ok(())
        } else {
            Err(WordError::RankMismatch {
                left: self.rank,
                right: other.rank,
            })
        }
    }

    pub fn try_mul(&self, other: &Word) -> Result<Word, WordError> {
        self.same_rank(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Word) -> Word {
        if mutation::active(Mutation::SkipReduceInMultiply) {
            let mut letters = self.letters.clone();
            letters.extend_from_slice(&other.letters);
            return Word {
                letters,
                rank: self.rank,
            };
        }
        let mut letters = self.letters.clone();
        for &l in &other.letters {
            push_reduced(&mut letters, l);
        }
        Word {
            letters,
            rank: self.rank,
        }
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
            rank: self.rank,
        }
    }

    /// `h w h^-1` where `self` is `w`.
    pub fn try_conjugate_by(&self, h: &Word) -> Result<Word, WordError> {
        self.same_rank(h)?;
        Ok(h.mul_unchecked(self).mul_unchecked(&h.inverse()))
    }

    pub fn conjugate_by(&self, h: &Word) -> Word {
        self.try_conjugate_by(h)
            .expect("rank mismatch in conjugation")
    }

    /// Group commutator `[self, other] = self other self^-1 other^-1`.
    pub fn commutator(&self, other: &Word) -> Word {
        self * other * self.inverse() * other.inverse()
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut acc = Word::identity(self.rank);
        for _ in 0..n.unsigned_abs() {
            acc = &acc * &base;
        }
        acc
    }

    /// Sum of the exponents of `x_index` in the word.
    pub fn exponent_sum(&self, index: u32) -> i64 {
        self.letters
            .iter()
            .filter(|l| l.index() == index)
            .map(|l| l.exponent())
            .sum()
    }

    /// Substitutes `images[i-1]` for `x_i` and reduces.
    pub fn substitute(&self, images: &[Word]) -> Result<Word, WordError> {
        let rank = images.first().map(|w| w.rank).unwrap_or(self.rank);
        let mut acc = Word::identity(rank);
        for l in &self.letters {
            let image = images
                .get(l.index() as usize - 1)
                .ok_or(WordError::IndexOutOfRank {
                    index: l.index(),
                    rank: images.len() as u32,
                })?;
            acc.same_rank(image)?;
            acc = if l.is_inverse() {
                acc.mul_unchecked(&image.inverse())
            } else {
                acc.mul_unchecked(image)
            };
        }
        Ok(acc)
    }

    /// Largest generator index used, 0 for the identity.
    pub fn max_index(&self) -> u32 {
        self.letters.iter().map(|l| l.index()).max().unwrap_or(0)
    }
}

fn parse_letters(s: &str) -> Result<Vec<Letter>, WordError> {
    let s = s.trim();
    if s == "1" {
        return Ok(Vec::new());
    }
    if s.is_empty() {
        return Err(WordError::Parse(
            "empty word text; the identity is written `1`".into(),
        ));
    }
    s.split_whitespace().map(parse_token).collect()
}

fn parse_token(tok: &str) -> Result<Letter, WordError> {
    let bad = || WordError::Parse(format!("bad token {tok:?}"));
    let body = tok.strip_prefix('x').ok_or_else(bad)?;
    let (digits, inverse) = match body.strip_suffix("^-1") {
        Some(d) => (d, true),
        None => (body, false),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let index: u32 = digits.parse().map_err(|_| bad())?;
    let gen = Generator::new(index).ok_or_else(bad)?;
    Ok(Letter::new(gen, inverse))
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank
            .cmp(&other.rank)
            .then(self.letters.len().cmp(&other.letters.len()))
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Group product. Panics on rank mismatch; use [`Word::try_mul`] at API
/// boundaries.
impl std::ops::Mul<&Word> for &Word {
    type Output = Word;

    fn mul(self, rhs: &Word) -> Word {
        self.try_mul(rhs).expect("rank mismatch in word product")
    }
}

impl std::ops::Mul<&Word> for Word {
    type Output = Word;

    fn mul(self, rhs: &Word) -> Word {
        &self * rhs
    }
}

impl std::ops::Mul<Word> for Word {
    type Output = Word;

    fn mul(self, rhs: Word) -> Word {
        &self * &rhs
    }
}

pub fn multiply(u: &Word, v: &Word) -> Result<Word, WordError> {
    u.try_mul(v)
}

pub fn invert(w: &Word) -> Word {
    w.inverse()
}

/// `h w h^-1`.
pub fn conjugate(h: &Word, w: &Word) -> Result<Word, WordError> {
    w.try_conjugate_by(h)
}

/// All reduced words of length at most `radius`, in shortlex order.
pub fn ball(rank: u32, radius: usize) -> Result<Vec<Word>, WordError> {
    check_rank(rank)?;
    if radius > BALL_RADIUS_CAP {
        return Err(WordError::RadiusTooLarge {
            radius,
            cap: BALL_RADIUS_CAP,
        });
    }
    let alphabet: Vec<Letter> = (0..2 * rank).map(Letter::from_order_key).collect();
    let mut out = vec![Word::identity(rank)];
    let mut sphere_start = 0;
    for _ in 0..radius {
        let sphere_end = out.len();
        for i in sphere_start..sphere_end {
            for &l in &alphabet {
                let prev = &out[i];
                if prev.letters.last() == Some(&l.inverse()) {
                    continue;
                }
                let mut letters = prev.letters.clone();
                letters.push(l);
                out.push(Word { letters, rank });
            }
        }
        sphere_start = sphere_end;
    }
    Ok(out)
}
