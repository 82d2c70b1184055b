//! Driven-dissipative vibronic dynamics of a single fluorescent molecule.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod error;
pub mod fock;
pub mod liouville;
pub mod model;
pub mod observables;
pub mod ode;
pub mod semiclassical;
pub mod trajectory;

pub use error::{Error, Result};
