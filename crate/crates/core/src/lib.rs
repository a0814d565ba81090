//! Constraint satisfaction and quantified constraint satisfaction over
//! temporal relations on the rationals.

pub mod csp;
pub mod error;
pub mod formula;
pub mod generate;
pub mod gf2;
pub mod harness;
pub mod instance;
pub mod normal_forms;
pub mod oracle;
pub mod order;
pub mod poly;
pub mod qcsp;
pub mod rational;
pub mod relation;

pub use error::{Error, Result};
pub use formula::{Cmp, Expr, Formula, ParseError, ParseErrorKind};
pub use order::{WeakOrder, MAX_ARITY};
pub use poly::{Operation, PreservationReport};
pub use rational::Rational;
pub use relation::TemporalRelation;
