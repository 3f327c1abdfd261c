//! Exact finite probability machinery.
//!
//! Probabilities are exact rationals, never floats: every check downstream is
//! an exact equality, so a float representation would silently turn theorems
//! into tolerance judgments. Tables are immutable after construction and all
//! operations are pure functions, so shared read access across threads is
//! safe.

mod independence;
mod rational;
mod table;

pub use independence::{check_independence, DependenceWitness, IndependenceVerdict};
pub use rational::Rational;
pub use table::{bayes_invert, Assignment, IrrelevanceWitness, ProbTable, Variable};

use thiserror::Error;

/// Errors raised by table construction and the exact table operations.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProbError {
    #[error("invalid rational literal {literal:?}: {reason}")]
    BadRational { literal: String, reason: String },

    #[error("unknown variable {name:?}")]
    UnknownVariable { name: String },

    #[error("unknown label {label:?} for variable {variable:?}")]
    UnknownLabel { variable: String, label: String },

    #[error("duplicate variable name {name:?}")]
    DuplicateVariable { name: String },

    #[error("variable {name:?} has an empty label alphabet")]
    EmptyAlphabet { name: String },

    #[error("duplicate entry for assignment {assignment}")]
    DuplicateEntry { assignment: Assignment },

    #[error("dense table is missing an entry for assignment {assignment}")]
    MissingEntry { assignment: Assignment },

    #[error("assignment does not cover variable {name:?}")]
    IncompleteAssignment { name: String },

    #[error("variable {name:?} is a conditioning variable, not an outcome variable")]
    NotAnOutcomeVariable { name: String },

    #[error("variable sets overlap on {name:?}")]
    OverlappingSets { name: String },

    #[error("conditioning on a zero-probability event: {assignment}")]
    ZeroConditioning { assignment: Assignment },

    #[error("incompatible tables: {0}")]
    IncompatibleTables(String),
}
