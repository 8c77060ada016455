use std::path::PathBuf;

use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::treebank::TreebankError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Treebank(#[from] TreebankError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Embeddings {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("illegal transition {transition}: {reason}")]
    IllegalTransition { transition: String, reason: String },
    #[error("{0}")]
    Oracle(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
