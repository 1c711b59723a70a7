//! Averaged-perceptron sequence tagger with first-order Viterbi decoding.
//!
//! Each word contributes emission features (form, lowercased form, affixes up
//! to four characters, a digit flag and the neighbouring forms). The previous
//! tag enters through a bigram transition matrix. Forms that always carried
//! one tag in training are restricted to that tag when decoding.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::conllu::{Document, Sentence};
use crate::perceptron::Perceptron;
use crate::upos::Upos;

pub const HEADER: &str = "pos-model v1";
const START: &str = "<s>";
const END: &str = "</s>";
const MAX_AFFIX: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum TaggerError {
    #[error("training data has no words")]
    EmptyTreebank,
    #[error("sentence {sentence}, word {word}: UPOS `{upos}` is missing or not a UPOS label")]
    BadUpos { sentence: usize, word: usize, upos: String },
    #[error("tagger model line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("cannot read tagger model: {0}")]
    Io(#[from] std::io::Error),
}

/// Emission features of every word in a sentence.
pub fn word_features<S: AsRef<str>>(forms: &[S]) -> Vec<Vec<String>> {
    (0..forms.len())
        .map(|i| {
            let form = forms[i].as_ref();
            let chars: Vec<char> = form.chars().collect();
            let mut f = Vec::with_capacity(16);
            f.push("bias".to_owned());
            f.push(format!("w={}", form));
            f.push(format!("lw={}", form.to_lowercase()));
            for k in 1..=MAX_AFFIX.min(chars.len()) {
                f.push(format!("p{}={}", k, chars[..k].iter().collect::<String>()));
                f.push(format!(
                    "s{}={}",
                    k,
                    chars[chars.len() - k..].iter().collect::<String>()
                ));
            }
            if chars.iter().any(|c| c.is_numeric()) {
                f.push("digit".to_owned());
            }
            let prev = if i == 0 { START } else { forms[i - 1].as_ref() };
            let next = forms.get(i + 1).map_or(END, |f| f.as_ref());
            f.push(format!("pw={}", prev));
            f.push(format!("nw={}", next));
            f
        })
        .collect()
}

/// Best tag path and its score. `transitions` has one row per previous tag
/// plus a final row for the sentence start. `allowed[i]`, when given,
/// restricts position `i` to one tag.
pub fn viterbi(emissions: &[Vec<f64>], transitions: &[Vec<f64>], allowed: &[Option<usize>]) -> (Vec<usize>, f64) {
    let n = emissions.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let t = emissions[0].len();
    let start = t;
    let permitted = |i: usize, j: usize| allowed.get(i).copied().flatten().is_none_or(|a| a == j);
    let mut score: Vec<f64> = (0..t)
        .map(|j| {
            if permitted(0, j) {
                transitions[start][j] + emissions[0][j]
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let mut back = vec![vec![0usize; t]; n];
    for i in 1..n {
        let mut next = vec![f64::NEG_INFINITY; t];
        for j in (0..t).filter(|&j| permitted(i, j)) {
            for (p, &sp) in score.iter().enumerate() {
                let s = sp + transitions[p][j];
                if s > next[j] {
                    next[j] = s;
                    back[i][j] = p;
                }
            }
            next[j] += emissions[i][j];
        }
        score = next;
    }
    let (mut best, mut best_score) = (0, f64::NEG_INFINITY);
    for (j, &s) in score.iter().enumerate() {
        if s > best_score {
            best = j;
            best_score = s;
        }
    }
    let mut path = vec![best; n];
    for i in (1..n).rev() {
        path[i - 1] = back[i][path[i]];
    }
    (path, best_score)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub seed: u64,
    /// Minimum count for a single-tag form to enter the tag dictionary; 0 disables it.
    pub dictionary_min_count: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 10,
            seed: 1,
            dictionary_min_count: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaggerModel {
    tags: Vec<Upos>,
    /// feature -> per-tag weight
    emission: HashMap<String, Vec<f64>>,
    /// (tags + 1) x tags; the last row is the sentence start
    transitions: Vec<Vec<f64>>,
    /// forms seen with exactly one tag -> tag index
    dictionary: HashMap<String, usize>,
}

fn transition_feature(prev: Option<usize>, tags: &[Upos]) -> String {
    match prev {
        Some(p) => format!("t={}", tags[p]),
        None => format!("t={}", START),
    }
}

fn build_dictionary(
    treebank: &Document,
    sequences: &[Vec<Upos>],
    index: &HashMap<Upos, usize>,
    min_count: usize,
) -> HashMap<String, usize> {
    if min_count == 0 {
        return HashMap::new();
    }
    let mut seen: HashMap<&str, (BTreeSet<usize>, usize)> = HashMap::new();
    for (s, seq) in treebank.sentences.iter().zip(sequences) {
        for (t, u) in s.tokens.iter().zip(seq) {
            let e = seen.entry(t.form.as_str()).or_default();
            e.0.insert(index[u]);
            e.1 += 1;
        }
    }
    seen.into_iter()
        .filter(|(_, (tags, count))| tags.len() == 1 && *count >= min_count)
        .map(|(form, (tags, _))| (form.to_owned(), *tags.iter().next().unwrap()))
        .collect()
}

fn gold_tags(treebank: &Document) -> Result<(Vec<Upos>, Vec<Vec<Upos>>), TaggerError> {
    let mut inventory = BTreeSet::new();
    let mut sequences = Vec::new();
    for (si, s) in treebank.sentences.iter().enumerate() {
        let mut seq = Vec::with_capacity(s.len());
        for t in &s.tokens {
            let upos = t.upos_label().ok_or_else(|| TaggerError::BadUpos {
                sentence: si + 1,
                word: t.id,
                upos: t.upos.clone().unwrap_or_else(|| "_".into()),
            })?;
            inventory.insert(upos);
            seq.push(upos);
        }
        sequences.push(seq);
    }
    if inventory.is_empty() {
        return Err(TaggerError::EmptyTreebank);
    }
    Ok((inventory.into_iter().collect(), sequences))
}

struct Decoder<'a> {
    weights: &'a Perceptron,
    tags: &'a [Upos],
}

impl Decoder<'_> {
    fn transitions(&self) -> Vec<Vec<f64>> {
        let t = self.tags.len();
        (0..=t)
            .map(|p| {
                let prev = (p < t).then_some(p);
                self.weights
                    .weights(&transition_feature(prev, self.tags))
                    .map_or_else(|| vec![0.0; t], <[f64]>::to_vec)
            })
            .collect()
    }

    fn decode(&self, features: &[Vec<String>], transitions: &[Vec<f64>]) -> Vec<usize> {
        let emissions: Vec<Vec<f64>> = features
            .iter()
            .map(|f| {
                let mut s = vec![0.0; self.tags.len()];
                self.weights.accumulate(f, &mut s);
                s
            })
            .collect();
        viterbi(&emissions, transitions, &[]).0
    }
}

impl TaggerModel {
    pub fn train(treebank: &Document, options: TrainOptions) -> Result<Self, TaggerError> {
        let (tags, sequences) = gold_tags(treebank)?;
        let index: HashMap<Upos, usize> = tags.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let examples: Vec<(Vec<Vec<String>>, Vec<usize>)> = treebank
            .sentences
            .iter()
            .zip(&sequences)
            .filter(|(s, _)| !s.is_empty())
            .map(|(s, seq)| (word_features(&s.forms()), seq.iter().map(|u| index[u]).collect()))
            .collect();

        let mut weights = Perceptron::new(tags.len());
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let mut order: Vec<usize> = (0..examples.len()).collect();
        for _ in 0..options.epochs {
            order.shuffle(&mut rng);
            for &k in &order {
                let (features, gold) = &examples[k];
                let decoder = Decoder {
                    weights: &weights,
                    tags: &tags,
                };
                let predicted = decoder.decode(features, &decoder.transitions());
                if &predicted != gold {
                    for i in 0..gold.len() {
                        let (g, p) = (gold[i], predicted[i]);
                        if g != p {
                            for f in &features[i] {
                                weights.update(f, g, 1.0);
                                weights.update(f, p, -1.0);
                            }
                        }
                        let gprev = i.checked_sub(1).map(|j| gold[j]);
                        let pprev = i.checked_sub(1).map(|j| predicted[j]);
                        if g != p || gprev != pprev {
                            weights.update(&transition_feature(gprev, &tags), g, 1.0);
                            weights.update(&transition_feature(pprev, &tags), p, -1.0);
                        }
                    }
                }
                weights.tick();
            }
        }

        let mut averaged = weights.averaged();
        let t = tags.len();
        let transitions = (0..=t)
            .map(|p| {
                let prev = (p < t).then_some(p);
                averaged
                    .remove(&transition_feature(prev, &tags))
                    .unwrap_or_else(|| vec![0.0; t])
            })
            .collect();
        let dictionary = build_dictionary(treebank, &sequences, &index, options.dictionary_min_count);
        Ok(TaggerModel {
            tags,
            emission: averaged,
            transitions,
            dictionary,
        })
    }

    pub fn tags(&self) -> &[Upos] {
        &self.tags
    }

    fn emissions<S: AsRef<str>>(&self, forms: &[S]) -> Vec<Vec<f64>> {
        word_features(forms)
            .iter()
            .map(|features| {
                let mut s = vec![0.0; self.tags.len()];
                for f in features {
                    if let Some(w) = self.emission.get(f) {
                        for (s, w) in s.iter_mut().zip(w) {
                            *s += w;
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// Per-position tag restriction from the tag dictionary.
    pub fn allowed<S: AsRef<str>>(&self, forms: &[S]) -> Vec<Option<Upos>> {
        forms
            .iter()
            .map(|f| self.dictionary.get(f.as_ref()).map(|&j| self.tags[j]))
            .collect()
    }

    /// Model score of a tag sequence for the given forms.
    pub fn sequence_score<S: AsRef<str>>(&self, forms: &[S], tags: &[Upos]) -> f64 {
        let emissions = self.emissions(forms);
        let start = self.tags.len();
        let mut prev = start;
        let mut total = 0.0;
        for (e, tag) in emissions.iter().zip(tags) {
            let j = self.tags.iter().position(|t| t == tag).expect("tag in inventory");
            total += self.transitions[prev][j] + e[j];
            prev = j;
        }
        total
    }

    /// Highest-scoring tag sequence.
    pub fn predict<S: AsRef<str>>(&self, forms: &[S]) -> Vec<Upos> {
        let allowed: Vec<Option<usize>> = forms.iter().map(|f| self.dictionary.get(f.as_ref()).copied()).collect();
        let (path, _) = viterbi(&self.emissions(forms), &self.transitions, &allowed);
        path.into_iter().map(|j| self.tags[j]).collect()
    }

    /// Set UPOS on every word; other columns are left as they are.
    pub fn tag(&self, sentence: &mut Sentence) {
        let tags = self.predict(&sentence.forms());
        for (t, u) in sentence.tokens.iter_mut().zip(tags) {
            t.upos = Some(u.to_string());
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", HEADER).unwrap();
        let tags: Vec<&str> = self.tags.iter().map(|t| t.as_str()).collect();
        writeln!(out, "tags\t{}", tags.join("\t")).unwrap();
        for (p, row) in self.transitions.iter().enumerate() {
            let prev = tags.get(p).copied().unwrap_or(START);
            for (j, w) in row.iter().enumerate() {
                if *w != 0.0 {
                    writeln!(out, "trans\t{}\t{}\t{:?}", prev, tags[j], w).unwrap();
                }
            }
        }
        let mut dictionary: Vec<(&String, &usize)> = self.dictionary.iter().collect();
        dictionary.sort();
        for (form, &j) in dictionary {
            writeln!(out, "dict\t{}\t{}", form, tags[j]).unwrap();
        }
        let mut features: Vec<&String> = self.emission.keys().collect();
        features.sort();
        for f in features {
            for (j, w) in self.emission[f].iter().enumerate() {
                if *w != 0.0 {
                    writeln!(out, "feat\t{}\t{}\t{:?}", f, tags[j], w).unwrap();
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TaggerError> {
        let mut lines = text.lines().enumerate();
        let err = |line: usize, message: String| TaggerError::Format { line, message };
        if lines.next().map(|(_, l)| l) != Some(HEADER) {
            return Err(err(1, format!("expected header `{}`", HEADER)));
        }
        let tags: Vec<Upos> = match lines.next() {
            Some((_, l)) if l.starts_with("tags\t") => l
                .split('\t')
                .skip(1)
                .map(|t| t.parse::<Upos>().map_err(|e| err(2, e.to_string())))
                .collect::<Result<_, _>>()?,
            _ => return Err(err(2, "expected tag inventory".to_owned())),
        };
        if tags.is_empty() {
            return Err(err(2, "empty tag inventory".to_owned()));
        }
        let t = tags.len();
        let tag_index = |s: &str, line: usize| {
            tags.iter()
                .position(|u| u.as_str() == s)
                .ok_or_else(|| err(line, format!("tag `{}` not in inventory", s)))
        };
        let weight = |s: &str, line: usize| {
            s.parse::<f64>()
                .ok()
                .filter(|w| w.is_finite())
                .ok_or_else(|| err(line, format!("bad weight `{}`", s)))
        };
        let mut transitions = vec![vec![0.0; t]; t + 1];
        let mut emission: HashMap<String, Vec<f64>> = HashMap::new();
        let mut dictionary = HashMap::new();
        for (i, line) in lines {
            let line_no = i + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[..] {
                ["trans", prev, cur, w] => {
                    let p = if prev == START { t } else { tag_index(prev, line_no)? };
                    transitions[p][tag_index(cur, line_no)?] = weight(w, line_no)?;
                }
                ["dict", form, tag] => {
                    dictionary.insert(form.to_owned(), tag_index(tag, line_no)?);
                }
                ["feat", f, tag, w] => {
                    let j = tag_index(tag, line_no)?;
                    emission.entry(f.to_owned()).or_insert_with(|| vec![0.0; t])[j] = weight(w, line_no)?;
                }
                _ => return Err(err(line_no, format!("unrecognized record `{}`", line))),
            }
        }
        Ok(TaggerModel {
            tags,
            emission,
            transitions,
            dictionary,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TaggerError> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TaggerError> {
        TaggerModel::from_text(&std::fs::read_to_string(path)?)
    }
}
