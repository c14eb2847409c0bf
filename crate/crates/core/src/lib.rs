//! Exact symbolic engine for the value-group fragment of motivic
//! constructible functions.
//!
//! The crate decides nullity, equality and integrability of functions of the
//! form `Σ c · g^a · L^(b·g)` over Presburger-definable subsets of `Z^R`,
//! computes fiberwise sums in closed form inside the coefficient ring
//! `A = Z[L, L^-1, 1/(1-L^-i)]`, and cross-validates every symbolic result
//! against a certified numeric oracle obtained by specializing `L` to a
//! rational `q > 1`.
//!
//! Module layout:
//! - [`coeffring`]: exact arithmetic in the coefficient ring `A`, optionally
//!   extended by free commutative class symbols.
//! - [`presburger`]: Presburger sets over `Z^R`, Cooper quantifier
//!   elimination, emptiness/finiteness decisions, and rectilinearization
//!   into affine images of orthants.
//! - [`confun`]: constructible Presburger functions, canonical forms, and
//!   the nullity decision.
//! - [`integrate`]: the integrability criterion and closed-form fiberwise
//!   summation.
//! - [`specialize`]: specialization `L -> q` and the certified brute-force
//!   oracle.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the companion CLI
//! crate carries IO, the formula DSL and file formats.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod coeffring;
pub mod confun;
pub mod integrate;
pub mod presburger;
pub mod specialize;

/// Serialize maps with structured keys as sequences of pairs, since JSON
/// object keys must be strings.
#[cfg(feature = "serde")]
pub mod serde_pairs {
    use alloc::collections::BTreeMap;
    use alloc::vec::Vec;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<K, V, S>(map: &BTreeMap<K, V>, s: S) -> Result<S::Ok, S::Error>
    where
        K: Serialize,
        V: Serialize,
        S: Serializer,
    {
        map.iter().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, K, V, D>(d: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        Ok(Vec::<(K, V)>::deserialize(d)?.into_iter().collect())
    }
}

pub use coeffring::{ClassSymbol, MotConst, Unit};
pub use confun::{CanonicalForm, CfError, ConFun, Term};
pub use integrate::{IntError, NonIntegrable, Projection};
pub use specialize::{BruteSum, SpecError, SpecReport, Verdict};
pub use presburger::{AffineForm, Congruence, PieceBase, PresCell, PresError, PresSet, RectPiece, SetSize};



