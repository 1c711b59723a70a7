//! Rule-based sentence splitting and word tokenization.
//!
//! Offsets are char indices. Sentence offsets index the text passed to
//! [`Tokenizer::split_sentences`]; token offsets index the sentence passed to
//! [`Tokenizer::tokenize`].

use std::collections::HashSet;
use std::path::Path;

use serde::Deserialize;

use crate::conllu::{Document, Sentence, Token};

const DEFAULT_CONFIG: &str = include_str!("../data/tokenizer.toml");
const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '’', '”', '»'];

#[derive(Debug, thiserror::Error)]
pub enum TokenizeError {
    #[error("tokenizer config: {0}")]
    Config(String),
    #[error("cannot read tokenizer config: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    terminators: Vec<String>,
    punctuation: Vec<String>,
    #[serde(default)]
    numeric_separators: Vec<String>,
    #[serde(default)]
    abbreviations: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Tokenizer {
    terminators: HashSet<char>,
    punctuation: HashSet<char>,
    numeric_separators: HashSet<char>,
    abbreviations: HashSet<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawToken {
    pub form: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentenceSpan {
    pub text: String,
    pub start: usize,
}

fn single_chars(field: &str, items: Vec<String>) -> Result<HashSet<char>, TokenizeError> {
    items
        .into_iter()
        .map(|s| {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if !c.is_whitespace() => Ok(c),
                _ => Err(TokenizeError::Config(format!(
                    "{} entry `{}` must be a single non-space character",
                    field, s
                ))),
            }
        })
        .collect()
}

/// Whitespace-delimited chunks as (start, end) char offsets.
fn chunks(chars: &[char]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        out.push((start, i));
    }
    out
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::from_toml(DEFAULT_CONFIG).expect("shipped tokenizer config is valid")
    }
}

impl Tokenizer {
    pub fn from_toml(text: &str) -> Result<Self, TokenizeError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| TokenizeError::Config(e.to_string()))?;
        Ok(Tokenizer {
            terminators: single_chars("terminators", raw.terminators)?,
            punctuation: single_chars("punctuation", raw.punctuation)?,
            numeric_separators: single_chars("numeric_separators", raw.numeric_separators)?,
            abbreviations: raw.abbreviations.into_iter().collect(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TokenizeError> {
        Tokenizer::from_toml(&std::fs::read_to_string(path)?)
    }

    fn ends_sentence(&self, chunk: &[char]) -> bool {
        let word: String = chunk.iter().collect();
        if self.abbreviations.contains(&word) {
            return false;
        }
        let trimmed = word.trim_end_matches(CLOSERS);
        trimmed.chars().last().is_some_and(|c| self.terminators.contains(&c))
    }

    /// Split text into sentences, trimming surrounding whitespace.
    pub fn split_sentences(&self, input: &str) -> Vec<SentenceSpan> {
        let chars: Vec<char> = input.chars().collect();
        let mut out = Vec::new();
        let mut open: Option<usize> = None;
        let mut last_end = 0;
        for (start, end) in chunks(&chars) {
            let sent_start = *open.get_or_insert(start);
            last_end = end;
            if self.ends_sentence(&chars[start..end]) {
                out.push(SentenceSpan {
                    text: chars[sent_start..end].iter().collect(),
                    start: sent_start,
                });
                open = None;
            }
        }
        if let Some(sent_start) = open {
            out.push(SentenceSpan {
                text: chars[sent_start..last_end].iter().collect(),
                start: sent_start,
            });
        }
        out
    }

    fn is_split_point(&self, chunk: &[char], i: usize) -> bool {
        let c = chunk[i];
        if !self.punctuation.contains(&c) {
            return false;
        }
        let between_digits = i > 0 && i + 1 < chunk.len() && chunk[i - 1].is_numeric() && chunk[i + 1].is_numeric();
        !(between_digits && self.numeric_separators.contains(&c))
    }

    /// Split a sentence into tokens; punctuation characters stand alone.
    pub fn tokenize(&self, sentence: &str) -> Vec<RawToken> {
        let chars: Vec<char> = sentence.chars().collect();
        let mut out = Vec::new();
        let mut emit = |from: usize, to: usize| {
            if from < to {
                out.push(RawToken {
                    form: chars[from..to].iter().collect(),
                    start: from,
                    end: to,
                });
            }
        };
        for (start, end) in chunks(&chars) {
            let chunk = &chars[start..end];
            if self.abbreviations.contains(&chunk.iter().collect::<String>()) {
                emit(start, end);
                continue;
            }
            let mut word_start = start;
            for i in 0..chunk.len() {
                if self.is_split_point(chunk, i) {
                    emit(word_start, start + i);
                    emit(start + i, start + i + 1);
                    word_start = start + i + 1;
                }
            }
            emit(word_start, end);
        }
        out
    }

    /// Split and tokenize text into a document. Each sentence carries
    /// `sent_id` and `text` comments; adjacent tokens get `SpaceAfter=No`.
    pub fn tokenize_document(&self, text: &str) -> Document {
        let sentences = self
            .split_sentences(text)
            .into_iter()
            .enumerate()
            .map(|(i, span)| {
                let raw = self.tokenize(&span.text);
                let mut s = Sentence::new();
                s.set_metadata("sent_id", &(i + 1).to_string());
                s.set_metadata("text", &span.text);
                for (k, t) in raw.iter().enumerate() {
                    let mut tok = Token::new(k + 1, t.form.clone());
                    if raw.get(k + 1).is_some_and(|next| next.start == t.end) {
                        tok.set_misc("SpaceAfter", "No");
                    }
                    s.tokens.push(tok);
                }
                s
            })
            .collect();
        Document::new(sentences)
    }
}
