//! Exact-arithmetic verification toolkit for finite prepare-transform-measure
//! (PTM) experiments and their ontic extensions.
//!
//! Everything here runs on exact rational probabilities: condition checks,
//! no-signalling tests, time-reverse constructions, Bell-type inequality
//! evaluation and the step-by-step audit of the independence derivation are
//! all exact equality checks, never tolerance judgments.
//!
//! The crate is organised around a small set of layers:
//!
//! - [`prob`] — rational arithmetic, finite conditional probability tables,
//!   marginalization, conditioning, Bayes inversion and exact conditional
//!   independence testing;
//! - [`model`] — operational models `P(a,b|x,y)`, ontic extensions
//!   `p(a,b,λ|x,y)`, transformation channels, validation, no-signalling
//!   checks and seeded run sampling;
//! - [`conditions`] — checkers for the five causal conditions (free choice,
//!   realism, λ-mediation, no retrocausality, time symmetry), Bell locality
//!   factorization and causal-graph acyclicity;
//! - [`timereverse`] — operational and ontological time reverses, exhaustive
//!   bijection search and the canonical identity-map construction;
//! - [`inequalities`] — agreement/disagreement summaries, the Wigner and CHSH
//!   inequalities, and a brute-force deterministic-local bound oracle;
//! - [`audit`] — the proof-chain audit that evaluates each step of the
//!   independence derivation against a concrete reverse pair and locates the
//!   invalid inference;
//! - [`fixtures`] — built-in models, including the timelike counterexample
//!   that satisfies all five conditions while violating Bell inequalities.

pub mod audit;
pub mod conditions;
pub mod fixtures;
pub mod inequalities;
pub mod model;
pub mod prob;
pub mod testkit;
pub mod timereverse;

pub use prob::{ProbError, ProbTable, Rational, Variable};
