//! Quantum reference frames on finite Abelian groups.
//!
//! `qrflab` models `N` distinguishable particles whose classical configuration
//! space is a finite Abelian group `G`, with Hilbert space `ℓ²(G)^⊗N`. It
//! provides:
//!
//! * exact group arithmetic and characters ([`group`]),
//! * dense states and operators with tensor products and partial traces
//!   ([`hilbert`]),
//! * the relation-sector decomposition and the relational subspace
//!   ([`sectors`]),
//! * relation-conditional global translations and QRF transformations
//!   ([`symmetry`]),
//! * the nested invariant operator algebras and their projections
//!   ([`invariants`]),
//! * alignable states and observables ([`alignment`]),
//! * invariant embeddings, invariant traces and the relational trace
//!   ([`traces`]),
//! * the three-particle phase paradox end to end ([`paradox`]),
//! * a property verification suite ([`verify`]).
//!
//! Basis ordering is fixed everywhere: group elements and characters are
//! enumerated in mixed-radix order with the last cyclic factor fastest, and
//! product basis states `|g_1,…,g_N⟩` are indexed with particle 1 most
//! significant.
//!
//! Heavy loops run on rayon when the `parallel` feature (on by default) is
//! enabled; see [`exec::Execution`].

pub mod alignment;
pub mod error;
pub mod exec;
pub mod group;
pub mod hilbert;
pub mod invariants;
pub mod paradox;
pub mod random;
pub mod sectors;
pub mod symmetry;
pub mod traces;
pub mod verify;

pub use error::{Error, Result};
pub use group::{Character, GroupElement, GroupSpec};
pub use hilbert::{Operator, SpaceLabel, StateVector, C64, DEFAULT_EPS};
