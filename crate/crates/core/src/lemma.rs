//! Suffix-replacement lemmatizer learned from treebank triples.
//!
//! Each training word yields a rule `(upos, form suffix -> lemma suffix)`
//! after stripping the longest common prefix of form and lemma. Rules are
//! also pooled under the wildcard tag `*`, which is what untagged words use.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::conllu::{Document, Sentence, EMPTY};

pub const HEADER: &str = "lemma-model v1";
pub const WILDCARD: &str = "*";

#[derive(Debug, thiserror::Error)]
pub enum LemmaError {
    #[error("sentence {sentence}, word {word} (`{form}`) has no lemma")]
    MissingLemma {
        sentence: String,
        word: usize,
        form: String,
    },
    #[error("lemma model line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("cannot read lemma model: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuffixRule {
    pub upos: String,
    pub form_suffix: String,
    pub lemma_suffix: String,
    pub frequency: u32,
}

impl SuffixRule {
    pub fn is_identity(&self) -> bool {
        self.form_suffix.is_empty() && self.lemma_suffix.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LemmaModel {
    /// (form, upos) -> lemma; upos may be the wildcard.
    exceptions: BTreeMap<(String, String), String>,
    /// (upos, form suffix) -> winning rule.
    rules: BTreeMap<(String, String), SuffixRule>,
}

/// Split `form`/`lemma` after their longest common prefix.
pub fn suffix_pair<'a>(form: &'a str, lemma: &'a str) -> (&'a str, &'a str) {
    let common: usize = form
        .chars()
        .zip(lemma.chars())
        .take_while(|(a, b)| a == b)
        .map(|(a, _)| a.len_utf8())
        .sum();
    (&form[common..], &lemma[common..])
}

/// Most frequent key, ties to the lexicographically smallest.
fn best<K: Ord + Clone>(counts: &BTreeMap<K, u32>) -> (K, u32) {
    let mut winner: Option<(&K, u32)> = None;
    for (k, &c) in counts {
        if winner.is_none_or(|(_, wc)| c > wc) {
            winner = Some((k, c));
        }
    }
    let (k, c) = winner.expect("counts are never empty");
    (k.clone(), c)
}

fn upos_key(upos: Option<&str>) -> &str {
    upos.unwrap_or(EMPTY)
}

fn sentence_name(index: usize, s: &Sentence) -> String {
    s.sent_id()
        .map(str::to_owned)
        .unwrap_or_else(|| (index + 1).to_string())
}

impl LemmaModel {
    pub fn train(treebank: &Document) -> Result<Self, LemmaError> {
        let mut exception_counts: BTreeMap<(String, String), BTreeMap<String, u32>> = BTreeMap::new();
        let mut rule_counts: BTreeMap<(String, String), BTreeMap<String, u32>> = BTreeMap::new();

        for (si, sentence) in treebank.sentences.iter().enumerate() {
            for t in &sentence.tokens {
                let lemma = t.lemma.as_deref().ok_or_else(|| LemmaError::MissingLemma {
                    sentence: sentence_name(si, sentence),
                    word: t.id,
                    form: t.form.clone(),
                })?;
                let upos = upos_key(t.upos.as_deref());
                let (form_suffix, lemma_suffix) = suffix_pair(&t.form, lemma);
                for tag in [upos, WILDCARD] {
                    *exception_counts
                        .entry((t.form.clone(), tag.to_owned()))
                        .or_default()
                        .entry(lemma.to_owned())
                        .or_default() += 1;
                    *rule_counts
                        .entry((tag.to_owned(), form_suffix.to_owned()))
                        .or_default()
                        .entry(lemma_suffix.to_owned())
                        .or_default() += 1;
                }
            }
        }

        let exceptions = exception_counts
            .into_iter()
            .map(|(k, counts)| (k, best(&counts).0))
            .collect();
        let rules = rule_counts
            .into_iter()
            .map(|((upos, form_suffix), counts)| {
                let (lemma_suffix, frequency) = best(&counts);
                let rule = SuffixRule {
                    upos: upos.clone(),
                    form_suffix: form_suffix.clone(),
                    lemma_suffix,
                    frequency,
                };
                ((upos, form_suffix), rule)
            })
            .collect();
        Ok(LemmaModel { exceptions, rules })
    }

    pub fn rules(&self) -> impl Iterator<Item = &SuffixRule> {
        self.rules.values()
    }

    pub fn rule(&self, upos: &str, form_suffix: &str) -> Option<&SuffixRule> {
        self.rules.get(&(upos.to_owned(), form_suffix.to_owned()))
    }

    /// Add or replace a rule by hand.
    pub fn insert_rule(&mut self, rule: SuffixRule) {
        self.rules.insert((rule.upos.clone(), rule.form_suffix.clone()), rule);
    }

    /// Longest-suffix rule for `upos` that leaves a non-empty stem.
    fn apply_rules(&self, form: &str, upos: &str) -> Option<String> {
        let boundaries: Vec<usize> = form.char_indices().map(|(i, _)| i).skip(1).collect();
        // candidate suffixes longest first; the empty suffix last
        let candidates = boundaries.iter().copied().chain(std::iter::once(form.len()));
        for cut in candidates {
            let (stem, suffix) = form.split_at(cut);
            if let Some(rule) = self.rules.get(&(upos.to_owned(), suffix.to_owned())) {
                return Some(format!("{}{}", stem, rule.lemma_suffix));
            }
        }
        None
    }

    pub fn lemmatize(&self, form: &str, upos: Option<&str>) -> String {
        let upos = upos_key(upos);
        for tag in [upos, WILDCARD] {
            if let Some(lemma) = self.exceptions.get(&(form.to_owned(), tag.to_owned())) {
                return lemma.clone();
            }
        }
        self.apply_rules(form, upos)
            .or_else(|| self.apply_rules(form, WILDCARD))
            .unwrap_or_else(|| form.to_owned())
    }

    /// Fill LEMMA for every word, using its UPOS when present.
    pub fn lemmatize_sentence(&self, sentence: &mut Sentence) {
        for t in &mut sentence.tokens {
            t.lemma = Some(self.lemmatize(&t.form, t.upos.as_deref()));
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", HEADER).unwrap();
        for ((form, upos), lemma) in &self.exceptions {
            writeln!(out, "exception\t{}\t{}\t{}", form, upos, lemma).unwrap();
        }
        for rule in self.rules.values() {
            writeln!(
                out,
                "rule\t{}\t{}\t{}\t{}",
                rule.upos, rule.form_suffix, rule.lemma_suffix, rule.frequency
            )
            .unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LemmaError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, HEADER)) => {}
            _ => {
                return Err(LemmaError::Format {
                    line: 1,
                    message: format!("expected header `{}`", HEADER),
                })
            }
        }
        let mut model = LemmaModel::default();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let err = |message: String| LemmaError::Format { line: i + 1, message };
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[..] {
                ["exception", form, upos, lemma] => {
                    model
                        .exceptions
                        .insert((form.to_owned(), upos.to_owned()), lemma.to_owned());
                }
                ["rule", upos, form_suffix, lemma_suffix, freq] => {
                    let frequency = freq
                        .parse::<u32>()
                        .ok()
                        .filter(|&f| f >= 1)
                        .ok_or_else(|| err(format!("bad frequency `{}`", freq)))?;
                    model.insert_rule(SuffixRule {
                        upos: upos.to_owned(),
                        form_suffix: form_suffix.to_owned(),
                        lemma_suffix: lemma_suffix.to_owned(),
                        frequency,
                    });
                }
                _ => return Err(err(format!("unrecognized record `{}`", line))),
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LemmaError> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LemmaError> {
        LemmaModel::from_text(&std::fs::read_to_string(path)?)
    }
}
