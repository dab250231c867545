//! Corpus files and the CoNLL-2012 coreference column format.

pub mod conll;
pub mod corpus;
pub mod export;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("corpus is not valid JSON at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{location}: {message}")]
    Integrity { location: String, message: String },
    #[error("unsupported corpus version {0:?}")]
    Version(String),
    #[error("mention {mention} of cluster {cluster} does not align with token boundaries")]
    Misaligned { cluster: usize, mention: String },
    #[error("mention {mention} lies outside the document")]
    OutOfDocument { mention: String },
    #[error("mentions {first} and {second} cross without nesting")]
    Crossing { first: String, second: String },
    #[error("line {line}: {message}")]
    Conll { line: usize, message: String },
}
