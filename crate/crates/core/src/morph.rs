//! Paradigm-table morphological analyzer, generator, guesser and
//! disambiguator.
//!
//! A paradigm class name starts with its UPOS label, optionally followed by
//! `-` and a variant (`NOUN-a`, `VERB-ku`, `PRON`). A rule turns a lemma into a
//! surface form by stripping `strip` from the lemma, appending `append`, then
//! appending the rule's suffix.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use crate::conllu::{Features, Sentence, EMPTY};
use crate::upos::Upos;

/// Shortest stem the guesser will hypothesize, in chars.
pub const MIN_GUESS_STEM: usize = 2;

#[derive(Debug, thiserror::Error)]
pub enum MorphError {
    #[error("no paradigm rule for class `{pos_class}` with features `{feats}`")]
    NoRule { pos_class: String, feats: String },
    #[error("lemma `{lemma}` does not end with `{strip}` required by class `{pos_class}`")]
    StemMismatch {
        lemma: String,
        pos_class: String,
        strip: String,
    },
    #[error("{file} line {line}: {message}")]
    Format {
        file: &'static str,
        line: usize,
        message: String,
    },
    #[error("cannot read morphology resources: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexEntry {
    pub lemma: String,
    pub pos_class: String,
    pub inherent_feats: Features,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParadigmRule {
    pub pos_class: String,
    pub suffix: String,
    pub feats: Features,
    pub strip: String,
    pub append: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnalysisSource {
    Lexicon,
    Guesser,
}

impl AnalysisSource {
    pub fn as_str(self) -> &'static str {
        match self {
            AnalysisSource::Lexicon => "lexicon",
            AnalysisSource::Guesser => "guesser",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MorphAnalysis {
    pub lemma: String,
    pub upos: Upos,
    pub feats: Features,
    pub source: AnalysisSource,
}

impl fmt::Display for MorphAnalysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.lemma,
            self.upos,
            self.feats,
            self.source.as_str()
        )
    }
}

/// UPOS encoded in a paradigm class name.
pub fn class_upos(pos_class: &str) -> Option<Upos> {
    let label = pos_class.split_once('-').map_or(pos_class, |(u, _)| u);
    label.parse().ok()
}

fn field(s: &str) -> String {
    if s == EMPTY {
        String::new()
    } else {
        s.to_owned()
    }
}

impl ParadigmRule {
    /// Stem the suffix attaches to, or `None` if `lemma` lacks `strip`.
    fn stem(&self, lemma: &str) -> Option<String> {
        lemma
            .strip_suffix(self.strip.as_str())
            .map(|base| format!("{}{}", base, self.append))
    }

    /// Lemma that would produce `form` under this rule, if any.
    fn invert(&self, form: &str) -> Option<String> {
        let stem = form.strip_suffix(self.suffix.as_str())?;
        let base = stem.strip_suffix(self.append.as_str())?;
        Some(format!("{}{}", base, self.strip))
    }
}

#[derive(Clone, Debug)]
pub struct Analyzer {
    lexicon: Vec<LexEntry>,
    paradigms: Vec<ParadigmRule>,
    /// (lemma, class) -> lexicon indices
    entries: HashMap<(String, String), Vec<usize>>,
}

impl Analyzer {
    pub fn new(lexicon: Vec<LexEntry>, paradigms: Vec<ParadigmRule>) -> Result<Self, MorphError> {
        let err = |file, line, message: String| MorphError::Format { file, line, message };
        let mut seen = HashSet::new();
        let mut classes = HashSet::new();
        for (i, r) in paradigms.iter().enumerate() {
            if class_upos(&r.pos_class).is_none() {
                return Err(err(
                    "paradigms",
                    i + 1,
                    format!("class `{}` does not start with a UPOS label", r.pos_class),
                ));
            }
            // (class, feats) must pick one rule so that generation is a function
            if !seen.insert((r.pos_class.clone(), r.feats.canonical())) {
                return Err(err(
                    "paradigms",
                    i + 1,
                    format!("class `{}` has two rules for `{}`", r.pos_class, r.feats),
                ));
            }
            classes.insert(r.pos_class.as_str());
        }
        let mut entries: HashMap<(String, String), Vec<usize>> = HashMap::new();
        for (i, e) in lexicon.iter().enumerate() {
            if e.lemma.is_empty() {
                return Err(err("lexicon", i + 1, "empty lemma".to_owned()));
            }
            if !classes.contains(e.pos_class.as_str()) {
                return Err(err(
                    "lexicon",
                    i + 1,
                    format!("class `{}` has no paradigm rules", e.pos_class),
                ));
            }
            entries
                .entry((e.lemma.clone(), e.pos_class.clone()))
                .or_default()
                .push(i);
        }
        Ok(Analyzer {
            lexicon,
            paradigms,
            entries,
        })
    }

    /// Lexicon lines `lemma<TAB>pos_class<TAB>feats`; paradigm lines
    /// `pos_class<TAB>suffix<TAB>feats<TAB>strip<TAB>append` with `_` for empty.
    pub fn parse(lexicon: &str, paradigms: &str) -> Result<Self, MorphError> {
        let rows = |text: &str, file: &'static str, width: usize| -> Result<Vec<(usize, Vec<String>)>, MorphError> {
            let mut out = Vec::new();
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() || line.starts_with('#') {
                    continue;
                }
                let fields: Vec<String> = line.split('\t').map(str::to_owned).collect();
                if fields.len() != width {
                    return Err(MorphError::Format {
                        file,
                        line: i + 1,
                        message: format!("expected {} tab-separated fields, found {}", width, fields.len()),
                    });
                }
                out.push((i + 1, fields));
            }
            Ok(out)
        };
        let feats = |s: &str, file: &'static str, line: usize| {
            Features::parse(s)
                .map(|f| f.canonical())
                .map_err(|message| MorphError::Format { file, line, message })
        };
        let lex = rows(lexicon, "lexicon", 3)?
            .into_iter()
            .map(|(line, f)| {
                Ok(LexEntry {
                    lemma: f[0].clone(),
                    pos_class: f[1].clone(),
                    inherent_feats: feats(&f[2], "lexicon", line)?,
                })
            })
            .collect::<Result<Vec<_>, MorphError>>()?;
        let par = rows(paradigms, "paradigms", 5)?
            .into_iter()
            .map(|(line, f)| {
                Ok(ParadigmRule {
                    pos_class: f[0].clone(),
                    suffix: field(&f[1]),
                    feats: feats(&f[2], "paradigms", line)?,
                    strip: field(&f[3]),
                    append: field(&f[4]),
                })
            })
            .collect::<Result<Vec<_>, MorphError>>()?;
        Analyzer::new(lex, par)
    }

    pub fn load(lexicon: impl AsRef<Path>, paradigms: impl AsRef<Path>) -> Result<Self, MorphError> {
        Analyzer::parse(&std::fs::read_to_string(lexicon)?, &std::fs::read_to_string(paradigms)?)
    }

    pub fn lexicon(&self) -> &[LexEntry] {
        &self.lexicon
    }

    pub fn paradigms(&self) -> &[ParadigmRule] {
        &self.paradigms
    }

    /// Surface form of `lemma` in class `pos_class` carrying exactly `feats`.
    pub fn generate(&self, lemma: &str, pos_class: &str, feats: &Features) -> Result<String, MorphError> {
        let wanted = feats.canonical();
        let rule = self
            .paradigms
            .iter()
            .find(|r| r.pos_class == pos_class && r.feats == wanted)
            .ok_or_else(|| MorphError::NoRule {
                pos_class: pos_class.to_owned(),
                feats: feats.to_string(),
            })?;
        let stem = rule.stem(lemma).ok_or_else(|| MorphError::StemMismatch {
            lemma: lemma.to_owned(),
            pos_class: pos_class.to_owned(),
            strip: rule.strip.clone(),
        })?;
        Ok(format!("{}{}", stem, rule.suffix))
    }

    /// Every lexicon analysis of `form`.
    pub fn analyze(&self, form: &str) -> BTreeSet<MorphAnalysis> {
        let mut out = BTreeSet::new();
        for rule in &self.paradigms {
            let Some(lemma) = rule.invert(form) else { continue };
            let Some(indices) = self.entries.get(&(lemma.clone(), rule.pos_class.clone())) else {
                continue;
            };
            let upos = class_upos(&rule.pos_class).expect("classes validated on load");
            for &i in indices {
                out.insert(MorphAnalysis {
                    lemma: lemma.clone(),
                    upos,
                    feats: self.lexicon[i].inherent_feats.merged(&rule.feats),
                    source: AnalysisSource::Lexicon,
                });
            }
        }
        out
    }

    /// Analyses hypothesized from suffixes alone. Bare-form rules (empty
    /// suffix) are not used, since they would match any word.
    pub fn guess(&self, form: &str) -> BTreeSet<MorphAnalysis> {
        let mut out = BTreeSet::new();
        for rule in self.paradigms.iter().filter(|r| !r.suffix.is_empty()) {
            let Some(residual) = form.strip_suffix(rule.suffix.as_str()) else {
                continue;
            };
            if residual.chars().count() < MIN_GUESS_STEM {
                continue;
            }
            let Some(lemma) = rule.invert(form) else { continue };
            out.insert(MorphAnalysis {
                lemma,
                upos: class_upos(&rule.pos_class).expect("classes validated on load"),
                feats: rule.feats.clone(),
                source: AnalysisSource::Guesser,
            });
        }
        out
    }

    /// Lexicon analyses, or guesses when the lexicon has none.
    pub fn analyses(&self, form: &str) -> BTreeSet<MorphAnalysis> {
        let found = self.analyze(form);
        if found.is_empty() {
            self.guess(form)
        } else {
            found
        }
    }

    /// Fill FEATS from the disambiguated analysis of each word. LEMMA and
    /// UPOS are only filled when missing. MISC records `MorphSource`.
    pub fn annotate_sentence(&self, sentence: &mut Sentence) {
        for t in &mut sentence.tokens {
            let analyses = self.analyses(&t.form);
            let Some(choice) = disambiguate(&analyses, t.upos_label()) else {
                continue;
            };
            t.feats = choice.feats.clone();
            if t.lemma.is_none() {
                t.lemma = Some(choice.lemma.clone());
            }
            if t.upos.is_none() {
                t.upos = Some(choice.upos.to_string());
            }
            t.set_misc("MorphSource", choice.source.as_str());
        }
    }
}

/// Pick one analysis: prefer those matching `context`, then lexicon over
/// guesser, then fewer features, then the smallest (lemma, feats) rendering.
pub fn disambiguate<'a, I>(analyses: I, context: Option<Upos>) -> Option<MorphAnalysis>
where
    I: IntoIterator<Item = &'a MorphAnalysis>,
{
    let all: Vec<&MorphAnalysis> = analyses.into_iter().collect();
    let matching: Vec<&MorphAnalysis> = all.iter().copied().filter(|a| Some(a.upos) == context).collect();
    let pool = if matching.is_empty() { all } else { matching };
    pool.into_iter()
        .min_by(|a, b| {
            (a.source, a.feats.len(), &a.lemma, a.feats.to_string()).cmp(&(
                b.source,
                b.feats.len(),
                &b.lemma,
                b.feats.to_string(),
            ))
        })
        .cloned()
}
