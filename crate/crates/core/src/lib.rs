pub mod autodiff;
pub mod cli;
pub mod encoder;
mod error;
pub mod graph;
pub mod model;
pub mod train;
pub mod transition;
pub mod treebank;

pub use error::{Error, Result};
