//! Differentiable weighted Datalog.
//!
//! A [`Template`](logic::Template) of weighted rules is grounded against each
//! [`Example`](logic::Example), turned into a computation graph and trained
//! with reverse-mode gradients.

pub mod autodiff;
pub mod error;
pub mod functions;
pub mod graph;
pub mod ground;
pub mod layered;
pub mod logic;
pub mod manifest;
pub mod parser;
pub mod synth;
pub mod tensor;
pub mod train;
pub mod zoo;

pub use error::{Error, Result};
