pub mod conllu;
pub mod eval;
pub mod lemma;
pub mod morph;
pub mod mwt;
pub mod normalize;
pub mod parse;
mod perceptron;
pub mod pipeline;
pub mod pos;
pub mod tokenize;
pub mod upos;

pub use upos::Upos;
