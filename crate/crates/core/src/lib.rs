//! Random And/Or Boolean formulas in four tree models.
//!
//! The models are binary plane trees ([`ModelId::Catalan`]), plane trees with
//! arity at least two and alternating labels ([`ModelId::Assoc`]), binary
//! non-plane trees ([`ModelId::Comm`]) and non-plane trees with arity at least
//! two and alternating labels ([`ModelId::AssocComm`]).

pub mod boolfun;
pub mod complexity;
pub mod enumerate;
pub mod error;
pub mod patterns;
pub mod real;
pub mod series;
pub mod singular;
pub mod trees;

pub use boolfun::{BoolFunc, Literal};
pub use error::{Error, Result};
pub use trees::{Conn, ModelId, RawTree, Tree};
