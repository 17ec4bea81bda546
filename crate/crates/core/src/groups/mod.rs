//! Finitely generated groups and the metric spaces built from them.

use thiserror::Error;

use crate::covers::CoverError;
use crate::metric::MetricError;

pub mod amalgam;
pub mod bounds;
pub mod cayley;
pub mod extension;
pub mod free_product;
pub mod hyperbolic;

pub use cayley::{cayley_ball, CayleyBall, Element, GroupModel, GroupSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("enumeration reached {size} elements, above the cap {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("generator {0} has no inverse among the generators")]
    NotClosedUnderInverse(String),
    #[error("identity law fails at {0}")]
    IdentityLaw(String),
    #[error("multiplication is not associative on {a}, {b}, {c}")]
    NotAssociative { a: String, b: String, c: String },
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("bad group parameters: {0}")]
    BadParameters(String),
    #[error("factor {factor} has a nontrivial letter of norm {min} below 1")]
    LetterNorm { factor: char, min: f64 },
    #[error("malformed word: {0}")]
    BadWord(String),
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("codomain is not a tree: {0}")]
    NotATree(String),
    #[error("transversal inconsistency: {0}")]
    Transversal(String),
    #[error("normal series must be nonempty")]
    EmptySeries,
    #[error("unknown leaf {0:?}")]
    UnknownLeaf(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Cover(#[from] CoverError),
}
