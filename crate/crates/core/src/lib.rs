#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod abs_law;
pub mod airy;
pub mod dist;
pub mod error;
pub mod ext;
pub mod functionals;
pub mod phi;
pub mod quad;
pub mod rate;
pub mod roots;
pub mod series;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
