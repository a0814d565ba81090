use thiserror::Error;

use crate::formula::ParseError;
use crate::poly::Operation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("arity {arity} exceeds the supported maximum of {cap}")]
    ArityCap { arity: usize, cap: usize },
    #[error("rank array {0:?} is not a canonical weak order")]
    NotCanonical(Vec<u8>),
    #[error("orbit of arity {found} does not fit a relation of arity {expected}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("coordinate map is not a surjection onto {0} coordinates")]
    NotSurjective(usize),
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
    #[error("relation `{0}` is not declared")]
    UndeclaredRelation(String),
    #[error("relation `{name}` has arity {expected} but is applied to {found} arguments")]
    WrongArgumentCount {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("relation `{0}` is declared twice")]
    DuplicateRelation(String),
    #[error("variable `{0}` is quantified twice")]
    DuplicatePrefixVariable(String),
    #[error("variable `{0}` is not quantified")]
    UnquantifiedVariable(String),
    #[error("boolean relation is not near-affine")]
    NotNearAffine,
    #[error("bit tuple width {found} does not match expected width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("the constraint language is preserved by neither min nor mx")]
    LanguageNotSupported,
    #[error("instance has {found} variables; the brute-force oracle accepts at most {cap}")]
    SizeCap { found: usize, cap: usize },
    #[error("relation is not {0}-closed")]
    NotClosed(Operation),
    #[error("{0}")]
    Invalid(String),
}
