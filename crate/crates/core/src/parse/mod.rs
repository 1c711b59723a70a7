//! Transition-based dependency parsing.

mod model;
mod transition;

pub use model::{
    config_features, parse_document, parse_sentence, train_parser, ParserModel, TrainOptions, TrainReport,
    FEATURE_TEMPLATES, HEADER, UNKNOWN_TREEBANK,
};
pub use transition::{is_projective, oracle_transitions, replay, ParserState, Transition, ROOT_LABEL};

use crate::conllu::Document;

#[derive(Debug, thiserror::Error)]
pub enum ParserError {
    #[error("word {word} has no HEAD or DEPREL")]
    MissingTree { word: usize },
    #[error("heads do not form a single-rooted tree")]
    NotATree,
    #[error("tree is not projective")]
    NonProjective,
    #[error("step {step}: {transition} is not legal here")]
    IllegalTransition { step: usize, transition: String },
    #[error("transition sequence ends before the terminal state")]
    Unfinished,
    #[error("no projective training sentences")]
    NoTrainingData,
    #[error("treebank id must not be empty")]
    EmptyTreebankId,
    #[error("parser model line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("cannot read parser model: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitRole {
    Train,
    Dev,
    Test,
}

/// A treebank portion tagged with the id used to condition the parser.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalSplit {
    pub treebank_id: String,
    pub role: SplitRole,
    pub document: Document,
}

impl EvalSplit {
    pub fn new(treebank_id: impl Into<String>, role: SplitRole, document: Document) -> Self {
        EvalSplit {
            treebank_id: treebank_id.into(),
            role,
            document,
        }
    }

    pub fn train(treebank_id: impl Into<String>, document: Document) -> Self {
        EvalSplit::new(treebank_id, SplitRole::Train, document)
    }
}
