//! Single-point fault injection for the mutation-sensitivity suite.
//!
//! With the `mutation` feature disabled every query is a constant `false`.
//! With it enabled, a mutation is armed per thread, so concurrently running
//! tests do not interfere.

/// The prescribed single-point faults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mutation {
    /// Flip the Magnus sign of the single word `x1 x2`.
    FlipConeClassification,
    /// Index the cocycle value by `h g^-1` instead of `g^-1 h`.
    CorruptCocycleTerm,
    /// Act by `g^-1` instead of `g` in the semidirect product.
    WrongSemidirectSide,
    /// Concatenate words without free reduction.
    SkipReduceInMultiply,
    /// `as_mod` keeps the last key it should delete.
    AsModOffByOne,
    /// Drop the `f(b, -b)` correction from the `B_f` inverse.
    DropInverseCorrection,
    /// Make the `G`-action on `B_f` trivial.
    TrivialGAction,
    /// Let the `B` cone read the shortlex-least index instead of the `<_P`-least.
    BConeShortlexMin,
    /// Swap the images of `x1` and `x2` under theta.
    ThetaGeneratorSwap,
    /// Lift automorphisms without re-indexing the `A` component.
    LiftSkipsAKeys,
}

impl Mutation {
    pub const ALL: [Mutation; 10] = [
        Mutation::FlipConeClassification,
        Mutation::CorruptCocycleTerm,
        Mutation::WrongSemidirectSide,
        Mutation::SkipReduceInMultiply,
        Mutation::AsModOffByOne,
        Mutation::DropInverseCorrection,
        Mutation::TrivialGAction,
        Mutation::BConeShortlexMin,
        Mutation::ThetaGeneratorSwap,
        Mutation::LiftSkipsAKeys,
    ];
}

#[cfg(feature = "mutation")]
mod imp {
    use super::Mutation;
    use std::cell::Cell;

    thread_local! {
        static ARMED: Cell<Option<Mutation>> = const { Cell::new(None) };
    }

    #[inline]
    pub fn active(m: Mutation) -> bool {
        ARMED.with(|a| a.get() == Some(m))
    }

    pub fn arm(m: Option<Mutation>) {
        ARMED.with(|a| a.set(m));
    }
}

#[cfg(not(feature = "mutation"))]
mod imp {
    use super::Mutation;

    #[inline(always)]
    pub fn active(_: Mutation) -> bool {
        false
    }
}

pub(crate) use imp::active;

/// Runs `f` with `m` armed on the current thread. Only available with the
/// `mutation` feature.
#[cfg(feature = "mutation")]
pub fn with_mutation<R>(m: Mutation, f: impl FnOnce() -> R) -> R {
    struct Disarm;
    impl Drop for Disarm {
        fn drop(&mut self) {
            imp::arm(None);
        }
    }
    imp::arm(Some(m));
    let _guard = Disarm;
    f()
}
