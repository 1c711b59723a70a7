//! Source tagset to UPOS harmonization.

use std::collections::BTreeMap;
use std::path::Path;

use crate::conllu::{Document, Sentence, Token};
use crate::upos::Upos;

const AMRITA: &str = include_str!("../../data/amrita_upos.tsv");

#[derive(Debug, thiserror::Error)]
pub enum MappingError {
    #[error("unknown source tag `{0}`")]
    UnknownTag(String),
    #[error("sentence {sentence}: unknown source tag `{tag}`")]
    UnmappableInCorpus { sentence: usize, tag: String },
    #[error("mapping file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("tagged corpus line {line}: expected `token<TAB>tag`")]
    Corpus { line: usize },
    #[error("cannot read mapping: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagMapping {
    entries: BTreeMap<String, Upos>,
}

impl TagMapping {
    /// The Amrita tagset table as shipped.
    pub fn amrita() -> Self {
        TagMapping::parse(AMRITA).expect("shipped mapping is valid")
    }

    /// Parse `source<TAB>upos` lines; `#` lines are comments.
    pub fn parse(text: &str) -> Result<Self, MappingError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| MappingError::Format { line: i + 1, message };
            let (source, target) = line
                .split_once('\t')
                .ok_or_else(|| err("expected `source<TAB>upos`".to_owned()))?;
            let upos: Upos = target
                .trim()
                .parse()
                .map_err(|e: crate::upos::UnknownUpos| err(e.to_string()))?;
            if entries.insert(source.trim().to_owned(), upos).is_some() {
                return Err(err(format!("source tag `{}` listed twice", source)));
            }
        }
        Ok(TagMapping { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MappingError> {
        TagMapping::parse(&std::fs::read_to_string(path)?)
    }

    pub fn map_tag(&self, source: &str) -> Result<Upos, MappingError> {
        self.entries
            .get(source)
            .copied()
            .ok_or_else(|| MappingError::UnknownTag(source.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Upos)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// CoNLL-U document with UPOS from the mapping and XPOS keeping the source tag.
    pub fn convert_corpus(&self, corpus: &[Vec<(String, String)>]) -> Result<Document, MappingError> {
        let mut sentences = Vec::with_capacity(corpus.len());
        for (si, words) in corpus.iter().enumerate() {
            let mut s = Sentence::new();
            for (wi, (form, tag)) in words.iter().enumerate() {
                let upos = self.map_tag(tag).map_err(|_| MappingError::UnmappableInCorpus {
                    sentence: si + 1,
                    tag: tag.clone(),
                })?;
                let mut t = Token::new(wi + 1, form.clone());
                t.upos = Some(upos.to_string());
                t.xpos = Some(tag.clone());
                s.tokens.push(t);
            }
            sentences.push(s);
        }
        Ok(Document::new(sentences))
    }
}

/// Read a `token<TAB>tag` corpus; blank lines separate sentences.
pub fn parse_tagged_corpus(text: &str) -> Result<Vec<Vec<(String, String)>>, MappingError> {
    let mut corpus = Vec::new();
    let mut current = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                corpus.push(std::mem::take(&mut current));
            }
            continue;
        }
        match line.split_once('\t') {
            Some((form, tag)) if !form.is_empty() && !tag.trim().is_empty() && !tag.contains('\t') => {
                current.push((form.to_owned(), tag.trim().to_owned()))
            }
            _ => return Err(MappingError::Corpus { line: i + 1 }),
        }
    }
    if !current.is_empty() {
        corpus.push(current);
    }
    Ok(corpus)
}
