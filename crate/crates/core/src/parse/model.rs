//! Averaged-perceptron transition scorer with treebank-conditioned features.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::conllu::{Document, Sentence, Token};
use crate::perceptron::Perceptron;

use super::transition::{oracle_transitions, ParserState, Transition, ROOT_LABEL};
use super::{EvalSplit, ParserError, SplitRole};

pub const HEADER: &str = "parser-model v1";
/// Treebank id used when parsing without one, or with one unseen in training.
pub const UNKNOWN_TREEBANK: &str = "<unk>";
const NONE: &str = "<none>";
const ROOT_WORD: &str = "<root>";
const SELECTED_FEATS: [&str; 3] = ["Case", "Number", "VerbForm"];

/// Feature templates, each also conjoined with `tb=<id>`.
pub const FEATURE_TEMPLATES: &[&str] = &[
    "bias",
    "s0.w",
    "s0.p",
    "s0.wp",
    "s1.w",
    "s1.p",
    "b0.w",
    "b0.p",
    "b0.wp",
    "b1.w",
    "b1.p",
    "s0.p+b0.p",
    "s1.p+s0.p",
    "s0.w+b0.w",
    "s0.p+b0.p+b1.p",
    "s1.p+s0.p+b0.p",
    "s0.<feat>",
    "b0.<feat>",
    "s0.Case+b0.Case",
    "dist",
    "s0.p+b0.p+dist",
    "s0.lc",
    "s0.rc",
    "b0.lc",
    "s0.p+s0.rc",
    "b0.p+b0.lc",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub seed: u64,
    /// Take at most this many sentences from the start of each training
    /// treebank.
    pub max_sentences_per_treebank: Option<usize>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 10,
            seed: 1,
            max_sentences_per_treebank: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrainReport {
    /// Sentences used per treebank id.
    pub used: BTreeMap<String, usize>,
    pub skipped_nonprojective: usize,
    /// Sentences with missing or non-tree annotation.
    pub skipped_invalid: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParserModel {
    labels: Vec<String>,
    treebanks: Vec<String>,
    weights: HashMap<String, Vec<f64>>,
    epochs: usize,
    seed: u64,
}

/// Word attribute view used by feature extraction; index 0 is the root.
struct Words<'a> {
    tokens: &'a [Token],
}

impl Words<'_> {
    fn form(&self, i: Option<usize>) -> &str {
        match i {
            None => NONE,
            Some(0) => ROOT_WORD,
            Some(i) => &self.tokens[i - 1].form,
        }
    }

    fn upos(&self, i: Option<usize>) -> &str {
        match i {
            None => NONE,
            Some(0) => ROOT_WORD,
            Some(i) => self.tokens[i - 1].upos.as_deref().unwrap_or("_"),
        }
    }

    fn feat(&self, i: Option<usize>, name: &str) -> &str {
        match i {
            Some(i) if i > 0 => self.tokens[i - 1].feats.get(name).unwrap_or("_"),
            _ => NONE,
        }
    }
}

fn distance_bucket(a: Option<usize>, b: Option<usize>) -> String {
    match (a, b) {
        (Some(a), Some(b)) => {
            let d = a.abs_diff(b);
            match d {
                0..=4 => d.to_string(),
                5..=9 => "5-9".to_owned(),
                _ => "10+".to_owned(),
            }
        }
        _ => NONE.to_owned(),
    }
}

/// Feature strings for a configuration under treebank `treebank`.
pub fn config_features(state: &ParserState, tokens: &[Token], treebank: &str) -> Vec<String> {
    let w = Words { tokens };
    let (s0, s1, b0, b1) = (state.s0(), state.s1(), state.b(0), state.b(1));
    let label = |i: Option<usize>| i.and_then(|i| state.labels[i].as_deref()).unwrap_or(NONE);
    let (s0_lc, s0_rc) = s0.map_or((None, None), |s| state.outer_children(s));
    let b0_lc = b0.and_then(|b| state.outer_children(b).0);
    let dist = distance_bucket(s0, b0);

    let mut base = vec![
        "bias".to_owned(),
        format!("s0.w={}", w.form(s0)),
        format!("s0.p={}", w.upos(s0)),
        format!("s0.wp={}/{}", w.form(s0), w.upos(s0)),
        format!("s1.w={}", w.form(s1)),
        format!("s1.p={}", w.upos(s1)),
        format!("b0.w={}", w.form(b0)),
        format!("b0.p={}", w.upos(b0)),
        format!("b0.wp={}/{}", w.form(b0), w.upos(b0)),
        format!("b1.w={}", w.form(b1)),
        format!("b1.p={}", w.upos(b1)),
        format!("s0.p+b0.p={}/{}", w.upos(s0), w.upos(b0)),
        format!("s1.p+s0.p={}/{}", w.upos(s1), w.upos(s0)),
        format!("s0.w+b0.w={}/{}", w.form(s0), w.form(b0)),
        format!("s0.p+b0.p+b1.p={}/{}/{}", w.upos(s0), w.upos(b0), w.upos(b1)),
        format!("s1.p+s0.p+b0.p={}/{}/{}", w.upos(s1), w.upos(s0), w.upos(b0)),
    ];
    for name in SELECTED_FEATS {
        base.push(format!("s0.{}={}", name, w.feat(s0, name)));
        base.push(format!("b0.{}={}", name, w.feat(b0, name)));
    }
    base.push(format!("s0.Case+b0.Case={}/{}", w.feat(s0, "Case"), w.feat(b0, "Case")));
    base.push(format!("dist={}", dist));
    base.push(format!("s0.p+b0.p+dist={}/{}/{}", w.upos(s0), w.upos(b0), dist));
    base.push(format!("s0.lc={}", label(s0_lc)));
    base.push(format!("s0.rc={}", label(s0_rc)));
    base.push(format!("b0.lc={}", label(b0_lc)));
    base.push(format!("s0.p+s0.rc={}/{}", w.upos(s0), label(s0_rc)));
    base.push(format!("b0.p+b0.lc={}/{}", w.upos(b0), label(b0_lc)));

    let conjoined: Vec<String> = base.iter().map(|f| format!("tb={}|{}", treebank, f)).collect();
    base.extend(conjoined);
    base
}

/// Class layout: 0 = SHIFT, then LEFT-ARC per label, then RIGHT-ARC per label.
fn transition_of(labels: &[String], class: usize) -> Transition {
    let l = labels.len();
    match class {
        0 => Transition::Shift,
        c if c <= l => Transition::LeftArc(labels[c - 1].clone()),
        c => Transition::RightArc(labels[c - 1 - l].clone()),
    }
}

fn class_of(labels: &[String], t: &Transition) -> usize {
    let idx = |label: &str| {
        labels
            .binary_search_by(|x| x.as_str().cmp(label))
            .expect("label in inventory")
    };
    match t {
        Transition::Shift => 0,
        Transition::LeftArc(label) => 1 + idx(label),
        Transition::RightArc(label) => 1 + labels.len() + idx(label),
    }
}

/// Legal classes in `state`. When the inventory has a `root` label it is
/// reserved for the root attachment.
fn legal_classes(state: &ParserState, labels: &[String]) -> Vec<bool> {
    let l = labels.len();
    let has_root = labels.iter().any(|x| x == ROOT_LABEL);
    let root_attach = state.s1() == Some(0);
    let mut legal = vec![false; 1 + 2 * l];
    legal[0] = state.can_shift();
    for (i, label) in labels.iter().enumerate() {
        let is_root = label == ROOT_LABEL;
        legal[1 + i] = state.can_left() && !(has_root && is_root);
        legal[1 + l + i] = state.can_right() && (!has_root || is_root == root_attach);
    }
    legal
}

/// First highest-scoring legal class.
fn best_legal(scores: &[f64], legal: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (c, (&s, &ok)) in scores.iter().zip(legal).enumerate() {
        if ok && best.is_none_or(|b| s > scores[b]) {
            best = Some(c);
        }
    }
    best
}

/// Train on the concatenation of all `Train` splits.
pub fn train_parser(splits: &[EvalSplit], options: TrainOptions) -> Result<(ParserModel, TrainReport), ParserError> {
    let mut report = TrainReport::default();
    let mut examples: Vec<(&Sentence, &str, Vec<Transition>)> = Vec::new();
    for split in splits.iter().filter(|s| s.role == SplitRole::Train) {
        if split.treebank_id.is_empty() {
            return Err(ParserError::EmptyTreebankId);
        }
        let cap = options.max_sentences_per_treebank.unwrap_or(usize::MAX);
        let mut used = 0;
        for sentence in split.document.sentences.iter().filter(|s| !s.is_empty()) {
            if used == cap {
                break;
            }
            match oracle_transitions(sentence) {
                Ok(ts) => {
                    examples.push((sentence, split.treebank_id.as_str(), ts));
                    used += 1;
                }
                Err(ParserError::NonProjective) => report.skipped_nonprojective += 1,
                Err(_) => report.skipped_invalid += 1,
            }
        }
        *report.used.entry(split.treebank_id.clone()).or_default() += used;
    }
    if report.skipped_nonprojective > 0 {
        log::warn!(
            "skipped {} non-projective training sentences",
            report.skipped_nonprojective
        );
    }
    if report.skipped_invalid > 0 {
        log::warn!(
            "skipped {} training sentences without a complete tree",
            report.skipped_invalid
        );
    }
    if examples.is_empty() {
        return Err(ParserError::NoTrainingData);
    }

    let labels: Vec<String> = examples
        .iter()
        .flat_map(|(s, _, _)| s.tokens.iter().filter_map(|t| t.deprel.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let treebanks: Vec<String> = report.used.keys().cloned().collect();
    let classes = 1 + 2 * labels.len();

    let mut perceptron = Perceptron::new(classes);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut scores = vec![0.0; classes];
    for epoch in 0..options.epochs {
        order.shuffle(&mut rng);
        let mut errors = 0usize;
        let mut decisions = 0usize;
        for &e in &order {
            let (sentence, treebank, gold) = &examples[e];
            let mut state = ParserState::new(sentence.len());
            for t in gold {
                let features = config_features(&state, &sentence.tokens, treebank);
                scores.iter_mut().for_each(|s| *s = 0.0);
                perceptron.accumulate(&features, &mut scores);
                let legal = legal_classes(&state, &labels);
                let predicted = best_legal(&scores, &legal).expect("non-terminal state has a legal move");
                let wanted = class_of(&labels, t);
                if predicted != wanted {
                    errors += 1;
                    for f in &features {
                        perceptron.update(f, wanted, 1.0);
                        perceptron.update(f, predicted, -1.0);
                    }
                }
                perceptron.tick();
                decisions += 1;
                state.apply(t);
            }
        }
        log::info!(
            "parser epoch {}: {} / {} transition errors",
            epoch + 1,
            errors,
            decisions
        );
    }

    let model = ParserModel {
        labels,
        treebanks,
        weights: perceptron.averaged(),
        epochs: options.epochs,
        seed: options.seed,
    };
    Ok((model, report))
}

/// Parse every sentence in place. Sentences carrying a `treebank_id` comment
/// use it; others use `treebank`.
pub fn parse_document(doc: &mut Document, model: &ParserModel, treebank: Option<&str>) {
    for s in &mut doc.sentences {
        let id = s.treebank_id().map(str::to_owned);
        *s = parse_sentence(s, model, id.as_deref().or(treebank));
    }
}

/// Copy of `sentence` with HEAD and DEPREL predicted.
pub fn parse_sentence(sentence: &Sentence, model: &ParserModel, treebank: Option<&str>) -> Sentence {
    let mut out = sentence.clone();
    if out.is_empty() {
        return out;
    }
    let (heads, labels) = model.predict(&sentence.tokens, treebank);
    for (t, (h, l)) in out.tokens.iter_mut().zip(heads.into_iter().zip(labels)) {
        t.head = Some(h);
        t.deprel = Some(l);
    }
    out
}

impl ParserModel {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn treebanks(&self) -> &[String] {
        &self.treebanks
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Treebank id actually used for features.
    pub fn resolve_treebank<'a>(&'a self, treebank: Option<&'a str>) -> &'a str {
        match treebank {
            Some(t) if self.treebanks.iter().any(|x| x == t) => t,
            _ => UNKNOWN_TREEBANK,
        }
    }

    /// Averaged-weight scores for each class.
    pub fn scores(&self, state: &ParserState, tokens: &[Token], treebank: &str) -> Vec<f64> {
        let mut scores = vec![0.0; 1 + 2 * self.labels.len()];
        for f in config_features(state, tokens, treebank) {
            if let Some(w) = self.weights.get(&f) {
                for (s, w) in scores.iter_mut().zip(w) {
                    *s += w;
                }
            }
        }
        scores
    }

    /// Greedy decoding: heads (0 = root) and labels for each word.
    pub fn predict(&self, tokens: &[Token], treebank: Option<&str>) -> (Vec<usize>, Vec<String>) {
        let treebank = self.resolve_treebank(treebank);
        let mut state = ParserState::new(tokens.len());
        while !state.is_terminal() {
            let scores = self.scores(&state, tokens, treebank);
            let legal = legal_classes(&state, &self.labels);
            let c = best_legal(&scores, &legal).expect("non-terminal state has a legal move");
            state.apply(&transition_of(&self.labels, c));
        }
        let heads = (1..=tokens.len()).map(|d| state.heads[d].expect("attached")).collect();
        let labels = (1..=tokens.len())
            .map(|d| state.labels[d].clone().expect("labelled"))
            .collect();
        (heads, labels)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", HEADER).unwrap();
        writeln!(out, "epochs\t{}", self.epochs).unwrap();
        writeln!(out, "seed\t{}", self.seed).unwrap();
        writeln!(out, "labels\t{}", self.labels.join("\t")).unwrap();
        writeln!(out, "treebanks\t{}", self.treebanks.join("\t")).unwrap();
        writeln!(out, "templates\t{}", FEATURE_TEMPLATES.join("\t")).unwrap();
        let mut names: Vec<&String> = self.weights.keys().collect();
        names.sort();
        for name in names {
            let cells: Vec<String> = self.weights[name]
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(c, w)| format!("{}:{:?}", c, w))
                .collect();
            writeln!(out, "feat\t{}\t{}", name, cells.join(" ")).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ParserError> {
        let err = |line: usize, message: String| ParserError::Format { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        if lines.next().map(|(_, l)| l) != Some(HEADER) {
            return Err(err(1, format!("expected header `{}`", HEADER)));
        }
        let mut field = |name: &str| -> Result<(usize, Vec<String>), ParserError> {
            match lines.next() {
                Some((n, l)) => {
                    let mut parts = l.split('\t');
                    if parts.next() != Some(name) {
                        return Err(err(n, format!("expected `{}` line", name)));
                    }
                    Ok((n, parts.filter(|p| !p.is_empty()).map(str::to_owned).collect()))
                }
                None => Err(err(0, format!("missing `{}` line", name))),
            }
        };
        let single = |(n, v): (usize, Vec<String>)| -> Result<(usize, String), ParserError> {
            match v.as_slice() {
                [x] => Ok((n, x.clone())),
                _ => Err(err(n, "expected one value".to_owned())),
            }
        };
        let (n, epochs) = single(field("epochs")?)?;
        let epochs = epochs.parse().map_err(|_| err(n, "bad epoch count".to_owned()))?;
        let (n, seed) = single(field("seed")?)?;
        let seed = seed.parse().map_err(|_| err(n, "bad seed".to_owned()))?;
        let (n, labels) = field("labels")?;
        if labels.is_empty() || labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(err(n, "labels must be non-empty, sorted and distinct".to_owned()));
        }
        let (_, treebanks) = field("treebanks")?;
        field("templates")?;

        let classes = 1 + 2 * labels.len();
        let mut weights = HashMap::new();
        for (n, line) in text.lines().enumerate().skip(6).map(|(i, l)| (i + 1, l)) {
            let rest = line
                .strip_prefix("feat\t")
                .ok_or_else(|| err(n, "expected `feat` line".to_owned()))?;
            let (name, cells) = rest
                .rsplit_once('\t')
                .ok_or_else(|| err(n, "expected `feat<TAB>name<TAB>weights`".to_owned()))?;
            let mut row = vec![0.0; classes];
            for cell in cells.split(' ').filter(|c| !c.is_empty()) {
                let (c, w) = cell
                    .split_once(':')
                    .ok_or_else(|| err(n, format!("bad weight `{}`", cell)))?;
                let c: usize = c.parse().map_err(|_| err(n, format!("bad class `{}`", c)))?;
                let w: f64 = w.parse().map_err(|_| err(n, format!("bad weight `{}`", w)))?;
                if c >= classes || !w.is_finite() {
                    return Err(err(n, format!("bad weight `{}`", cell)));
                }
                row[c] = w;
            }
            if weights.insert(name.to_owned(), row).is_some() {
                return Err(err(n, format!("feature `{}` listed twice", name)));
            }
        }
        Ok(ParserModel {
            labels,
            treebanks,
            weights,
            epochs,
            seed,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ParserError> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ParserError> {
        ParserModel::from_text(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::{validate, Document};

    fn sentence(words: &[(&str, &str, usize, &str)]) -> Sentence {
        let forms: Vec<&str> = words.iter().map(|w| w.0).collect();
        let mut s = Sentence::from_forms(&forms);
        for (t, &(_, upos, head, rel)) in s.tokens.iter_mut().zip(words) {
            t.upos = Some(upos.to_owned());
            t.head = Some(head);
            t.deprel = Some(rel.to_owned());
        }
        s
    }

    fn toy() -> Document {
        Document::new(vec![
            sentence(&[
                ("avan", "PRON", 3, "nsubj"),
                ("veettukku", "NOUN", 3, "obl"),
                ("ponaan", "VERB", 0, "root"),
            ]),
            sentence(&[
                ("aval", "PRON", 3, "nsubj"),
                ("paadam", "NOUN", 3, "obj"),
                ("padiththaal", "VERB", 0, "root"),
            ]),
            sentence(&[
                ("naan", "PRON", 2, "nsubj"),
                ("vanthen", "VERB", 0, "root"),
                (".", "PUNCT", 2, "punct"),
            ]),
        ])
    }

    fn las(gold: &Document, model: &ParserModel, tb: Option<&str>) -> (usize, usize) {
        let mut correct = 0;
        let mut total = 0;
        for s in &gold.sentences {
            let p = parse_sentence(s, model, tb);
            for (g, t) in s.tokens.iter().zip(&p.tokens) {
                total += 1;
                correct += usize::from(g.head == t.head && g.deprel == t.deprel);
            }
        }
        (correct, total)
    }

    #[test]
    fn memorizes_toy_treebank() {
        let doc = toy();
        let (model, report) = train_parser(&[EvalSplit::train("ta", doc.clone())], TrainOptions::default()).unwrap();
        assert_eq!(report.used["ta"], 3);
        let (c, t) = las(&doc, &model, Some("ta"));
        assert_eq!(c, t);
    }

    #[test]
    fn untrained_model_gives_valid_trees() {
        let doc = toy();
        let opts = TrainOptions {
            epochs: 0,
            ..TrainOptions::default()
        };
        let (model, _) = train_parser(&[EvalSplit::train("ta", doc.clone())], opts).unwrap();
        let mut parsed = doc.clone();
        parsed.sentences.iter_mut().for_each(|s| s.clear_dependencies());
        parse_document(&mut parsed, &model, None);
        assert!(validate(&parsed).is_empty());
        // all scores tie: SHIFT everything, then attach right to left
        let heads: Vec<usize> = parsed.sentences[0].tokens.iter().map(|t| t.head.unwrap()).collect();
        assert_eq!(heads, vec![0, 1, 2]);
        assert_eq!(parsed.sentences[0].tokens[0].deprel.as_deref(), Some("root"));
    }

    #[test]
    fn skips_nonprojective_and_invalid() {
        let bad = sentence(&[("a", "X", 3, "x"), ("b", "X", 0, "root"), ("c", "X", 2, "x")]);
        let mut incomplete = sentence(&[("a", "X", 0, "root")]);
        incomplete.tokens[0].head = None;
        let doc = Document::new(vec![bad, incomplete, toy().sentences[0].clone()]);
        let (_, report) = train_parser(&[EvalSplit::train("x", doc)], TrainOptions::default()).unwrap();
        assert_eq!(report.skipped_nonprojective, 1);
        assert_eq!(report.skipped_invalid, 1);
        assert_eq!(report.used["x"], 1);

        let only_bad = Document::new(vec![sentence(&[
            ("a", "X", 3, "x"),
            ("b", "X", 0, "root"),
            ("c", "X", 2, "x"),
        ])]);
        assert!(matches!(
            train_parser(&[EvalSplit::train("x", only_bad)], TrainOptions::default()),
            Err(ParserError::NoTrainingData)
        ));
    }

    #[test]
    fn sentence_cap() {
        let opts = TrainOptions {
            max_sentences_per_treebank: Some(2),
            ..TrainOptions::default()
        };
        let (_, report) = train_parser(&[EvalSplit::train("a", toy()), EvalSplit::train("b", toy())], opts).unwrap();
        assert_eq!(report.used.values().copied().collect::<Vec<_>>(), vec![2, 2]);
    }

    #[test]
    fn model_text_round_trip() {
        let (model, _) = train_parser(&[EvalSplit::train("ta", toy())], TrainOptions::default()).unwrap();
        let text = model.to_text();
        let back = ParserModel::from_text(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_text(), text);
        let (again, _) = train_parser(&[EvalSplit::train("ta", toy())], TrainOptions::default()).unwrap();
        assert_eq!(again.to_text(), text);
        assert!(ParserModel::from_text("parser-model v2\n").is_err());
        let broken = text.replacen("feat\t", "feat\tx\t0:NaN\nfeat\t", 1);
        assert!(ParserModel::from_text(&broken).is_err());
    }

    #[test]
    fn unknown_treebank_falls_back() {
        let (model, _) = train_parser(&[EvalSplit::train("ta", toy())], TrainOptions::default()).unwrap();
        assert_eq!(model.resolve_treebank(Some("zz")), UNKNOWN_TREEBANK);
        assert_eq!(model.resolve_treebank(Some("ta")), "ta");
        assert_eq!(parse_sentence(&Sentence::new(), &model, None), Sentence::new());
    }
}
