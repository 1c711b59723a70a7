//! Tagset harmonization and part-of-speech tagging.

mod mapping;
mod tagger;

pub use mapping::{parse_tagged_corpus, MappingError, TagMapping};
pub use tagger::{viterbi, word_features, TaggerError, TaggerModel, TrainOptions, HEADER};
