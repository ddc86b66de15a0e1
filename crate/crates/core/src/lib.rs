//! Parameter tuning and robustness analysis for discrete belief networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the network representation, the canonical JSON document
//!   format and parameter changes under the complement/proportional
//!   co-variation schemes.
//! * [`inference`] computes the probability of evidence together with every
//!   family marginal `Pr(i, x, u)` in a single join-tree propagation, and a
//!   brute-force enumerator used as a test oracle.
//! * [`sensitivity`] derives the exact slopes of `Pr(e)`, `Pr(y, e)` and
//!   `Pr(z, e)` in every meta parameter, solves DIFFERENCE / RATIO / VALUE
//!   constraints for all parameters at once and builds sensitivity functions.
//! * [`bounds`] is the closed-form log-odds machinery: derivative bounds,
//!   query intervals after a change, exact root-prior changes and permissible
//!   change envelopes.
//! * [`text`] parses the textual parameter, event, evidence and constraint
//!   grammars shared by the CLI and the HTTP service.

pub mod bounds;
pub mod error;
pub mod inference;
pub mod model;
pub mod random;
pub mod sensitivity;
pub mod text;

pub use error::{Error, Result};
pub use model::{BeliefNetwork, CoVariation, Event, Evidence, MetaParameter, VarId, Variable};
