//! Attachment, POS and tokenization scoring.
//!
//! Percentages over an empty denominator are reported as 100.00.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use crate::conllu::{Document, Sentence};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold has {gold} sentences but system has {system}; use aligned mode for predicted tokenization")]
    SentenceCount { gold: usize, system: usize },
    #[error("sentence {sentence}: word segmentation differs from gold; use aligned mode for predicted tokenization")]
    Segmentation { sentence: usize },
    #[error("gold and system texts differ at character {offset}")]
    TextMismatch { offset: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    GoldTokenization,
    Aligned,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::GoldTokenization => "gold-tokenization",
            EvalMode::Aligned => "aligned",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Compare full labels including subtypes after `:`.
    pub strict_labels: bool,
}

pub fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        100.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AttachmentCounts {
    /// Gold words.
    pub words: usize,
    pub correct_heads: usize,
    pub correct_labeled: usize,
}

impl AttachmentCounts {
    pub fn uas(&self) -> f64 {
        percent(self.correct_heads, self.words)
    }

    pub fn las(&self) -> f64 {
        percent(self.correct_labeled, self.words)
    }

    fn add(&mut self, head_ok: bool, label_ok: bool) {
        self.words += 1;
        self.correct_heads += usize::from(head_ok);
        self.correct_labeled += usize::from(head_ok && label_ok);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TokenCounts {
    pub gold: usize,
    pub system: usize,
    pub matched: usize,
}

impl TokenCounts {
    pub fn precision(&self) -> f64 {
        percent(self.matched, self.system)
    }

    pub fn recall(&self) -> f64 {
        percent(self.matched, self.gold)
    }

    pub fn f1(&self) -> f64 {
        if self.gold == 0 && self.system == 0 {
            return 100.0;
        }
        f1(self.precision(), self.recall())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PosCounts {
    pub words: usize,
    pub correct: usize,
    /// System words carrying a UPOS.
    pub predicted: usize,
}

impl PosCounts {
    pub fn accuracy(&self) -> f64 {
        percent(self.correct, self.words)
    }

    /// Micro-averaged F1 over tags; unannotated system words count as misses.
    pub fn micro_f1(&self) -> f64 {
        if self.words == 0 && self.predicted == 0 {
            return 100.0;
        }
        f1(percent(self.correct, self.predicted), percent(self.correct, self.words))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub mode: EvalMode,
    /// Where the system UPOS came from, as stated by the caller.
    pub pos_source: String,
    pub strict_labels: bool,
    pub attachments: AttachmentCounts,
    pub tokens: Option<TokenCounts>,
    pub pos: Option<PosCounts>,
    pub per_treebank: BTreeMap<String, AttachmentCounts>,
}

impl EvalReport {
    fn new(mode: EvalMode, options: EvalOptions) -> Self {
        EvalReport {
            mode,
            pos_source: "unspecified".to_owned(),
            strict_labels: options.strict_labels,
            attachments: AttachmentCounts::default(),
            tokens: None,
            pos: None,
            per_treebank: BTreeMap::new(),
        }
    }

    pub fn las(&self) -> f64 {
        self.attachments.las()
    }

    pub fn uas(&self) -> f64 {
        self.attachments.uas()
    }

    /// `key=value` lines, one metric per line.
    pub fn key_values(&self) -> String {
        let mut out = String::new();
        let a = &self.attachments;
        let mut kv = |k: &str, v: String| writeln!(out, "{}={}", k, v).unwrap();
        kv("mode", self.mode.as_str().to_owned());
        kv("pos_source", self.pos_source.clone());
        kv("strict_labels", self.strict_labels.to_string());
        kv("words", a.words.to_string());
        kv("uas", format!("{:.2}", a.uas()));
        kv("las", format!("{:.2}", a.las()));
        kv("correct_heads", a.correct_heads.to_string());
        kv("correct_labeled", a.correct_labeled.to_string());
        if let Some(p) = &self.pos {
            kv("pos_accuracy", format!("{:.2}", p.accuracy()));
            kv("pos_micro_f1", format!("{:.2}", p.micro_f1()));
            kv("pos_correct", p.correct.to_string());
        }
        if let Some(t) = &self.tokens {
            kv("token_precision", format!("{:.2}", t.precision()));
            kv("token_recall", format!("{:.2}", t.recall()));
            kv("token_f1", format!("{:.2}", t.f1()));
            kv("gold_tokens", t.gold.to_string());
            kv("system_tokens", t.system.to_string());
            kv("matched_tokens", t.matched.to_string());
        }
        for (tb, c) in &self.per_treebank {
            kv(&format!("treebank.{}.words", tb), c.words.to_string());
            kv(&format!("treebank.{}.uas", tb), format!("{:.2}", c.uas()));
            kv(&format!("treebank.{}.las", tb), format!("{:.2}", c.las()));
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = &self.attachments;
        writeln!(f, "{:<16}{}", "mode", self.mode.as_str())?;
        writeln!(f, "{:<16}{}", "POS source", self.pos_source)?;
        writeln!(
            f,
            "{:<16}{}",
            "labels",
            if self.strict_labels {
                "strict"
            } else {
                "subtypes ignored"
            }
        )?;
        writeln!(f, "{:<16}{:>7.2}  ({}/{})", "UAS", a.uas(), a.correct_heads, a.words)?;
        writeln!(f, "{:<16}{:>7.2}  ({}/{})", "LAS", a.las(), a.correct_labeled, a.words)?;
        if let Some(p) = &self.pos {
            writeln!(
                f,
                "{:<16}{:>7.2}  ({}/{})",
                "UPOS accuracy",
                p.accuracy(),
                p.correct,
                p.words
            )?;
            writeln!(f, "{:<16}{:>7.2}", "UPOS micro-F1", p.micro_f1())?;
        }
        if let Some(t) = &self.tokens {
            writeln!(
                f,
                "{:<16}{:>7.2}  ({}/{})",
                "token P",
                t.precision(),
                t.matched,
                t.system
            )?;
            writeln!(f, "{:<16}{:>7.2}  ({}/{})", "token R", t.recall(), t.matched, t.gold)?;
            writeln!(f, "{:<16}{:>7.2}", "token F1", t.f1())?;
        }
        for (tb, c) in &self.per_treebank {
            writeln!(
                f,
                "{:<16}UAS {:>7.2}  LAS {:>7.2}  ({} words)",
                tb,
                c.uas(),
                c.las(),
                c.words
            )?;
        }
        writeln!(f, "---")?;
        f.write_str(&self.key_values())
    }
}

fn labels_match(gold: Option<&str>, system: Option<&str>, strict: bool) -> bool {
    fn base(l: &str, strict: bool) -> &str {
        if strict {
            l
        } else {
            l.split(':').next().unwrap_or(l)
        }
    }
    match (gold, system) {
        (Some(g), Some(s)) => base(g, strict) == base(s, strict),
        _ => false,
    }
}

fn check_segmentation(gold: &Document, system: &Document) -> Result<(), EvalError> {
    if gold.sentences.len() != system.sentences.len() {
        return Err(EvalError::SentenceCount {
            gold: gold.sentences.len(),
            system: system.sentences.len(),
        });
    }
    for (i, (g, s)) in gold.sentences.iter().zip(&system.sentences).enumerate() {
        if g.forms() != s.forms() {
            return Err(EvalError::Segmentation { sentence: i + 1 });
        }
    }
    Ok(())
}

/// UAS/LAS under identical segmentation.
pub fn score_attachments(gold: &Document, system: &Document, options: EvalOptions) -> Result<EvalReport, EvalError> {
    check_segmentation(gold, system)?;
    let mut report = EvalReport::new(EvalMode::GoldTokenization, options);
    for (g, s) in gold.sentences.iter().zip(&system.sentences) {
        for (gt, st) in g.tokens.iter().zip(&s.tokens) {
            let head_ok = gt.head.is_some() && gt.head == st.head;
            let label_ok = labels_match(gt.deprel.as_deref(), st.deprel.as_deref(), options.strict_labels);
            report.attachments.add(head_ok, label_ok);
            if let Some(tb) = g.treebank_id() {
                report
                    .per_treebank
                    .entry(tb.to_owned())
                    .or_default()
                    .add(head_ok, label_ok);
            }
        }
    }
    if report.per_treebank.len() < 2 {
        report.per_treebank.clear();
    }
    Ok(report)
}

/// UPOS accuracy and micro-F1 under identical segmentation.
pub fn score_pos(gold: &Document, system: &Document) -> Result<PosCounts, EvalError> {
    check_segmentation(gold, system)?;
    let mut c = PosCounts::default();
    for (g, s) in gold.sentences.iter().zip(&system.sentences) {
        for (gt, st) in g.tokens.iter().zip(&s.tokens) {
            pos_add(&mut c, gt.upos.as_deref(), st.upos.as_deref());
        }
    }
    Ok(c)
}

fn pos_add(c: &mut PosCounts, gold: Option<&str>, system: Option<&str>) {
    c.words += 1;
    c.predicted += usize::from(system.is_some());
    c.correct += usize::from(system.is_some() && gold == system);
}

/// Attachments plus UPOS under identical segmentation.
pub fn evaluate(gold: &Document, system: &Document, options: EvalOptions) -> Result<EvalReport, EvalError> {
    let mut report = score_attachments(gold, system, options)?;
    report.pos = Some(score_pos(gold, system)?);
    Ok(report)
}

/// Alignment key of a word: character span of its surface token, position
/// inside a multiword token and that token's word count.
type WordKey = (usize, usize, usize, usize);

struct Flat<'a> {
    chars: Vec<char>,
    /// Character spans of surface tokens.
    tokens: Vec<(usize, usize)>,
    /// Per word: key, the word's sentence, and its head's key (`None` for
    /// root attachment or a missing head).
    words: Vec<FlatWord<'a>>,
}

struct FlatWord<'a> {
    key: WordKey,
    sentence: &'a Sentence,
    index: usize,
    head: Option<Option<WordKey>>,
}

fn flatten(doc: &Document) -> Flat<'_> {
    let mut flat = Flat {
        chars: Vec::new(),
        tokens: Vec::new(),
        words: Vec::new(),
    };
    for s in &doc.sentences {
        let mut keys: Vec<WordKey> = Vec::with_capacity(s.len());
        let mut id = 1;
        while id <= s.len() {
            let start = flat.chars.len();
            if let Some(span) = s.span_starting_at(id).next() {
                flat.chars
                    .extend(span.surface_form.chars().filter(|c| !c.is_whitespace()));
                let end = flat.chars.len();
                let len = span.end - span.start + 1;
                for k in 0..len {
                    keys.push((start, end, k + 1, len));
                }
                flat.tokens.push((start, end));
                id = span.end + 1;
            } else {
                flat.chars
                    .extend(s.tokens[id - 1].form.chars().filter(|c| !c.is_whitespace()));
                keys.push((start, flat.chars.len(), 0, 0));
                flat.tokens.push((start, flat.chars.len()));
                id += 1;
            }
        }
        for (i, t) in s.tokens.iter().enumerate() {
            let head = t.head.map(|h| (h > 0).then(|| keys.get(h - 1).copied()).flatten());
            flat.words.push(FlatWord {
                key: keys[i],
                sentence: s,
                index: i,
                head,
            });
        }
    }
    flat
}

/// Scores for predicted tokenization: words are aligned by character spans
/// over the non-whitespace text.
pub fn score_aligned(gold: &Document, system: &Document, options: EvalOptions) -> Result<EvalReport, EvalError> {
    let g = flatten(gold);
    let s = flatten(system);
    if g.chars != s.chars {
        let offset = g
            .chars
            .iter()
            .zip(&s.chars)
            .position(|(a, b)| a != b)
            .unwrap_or_else(|| g.chars.len().min(s.chars.len()));
        return Err(EvalError::TextMismatch { offset });
    }
    let mut report = EvalReport::new(EvalMode::Aligned, options);

    let system_tokens: std::collections::HashSet<(usize, usize)> = s.tokens.iter().copied().collect();
    report.tokens = Some(TokenCounts {
        gold: g.tokens.len(),
        system: s.tokens.len(),
        matched: g.tokens.iter().filter(|t| system_tokens.contains(t)).count(),
    });

    let system_words: HashMap<WordKey, &FlatWord> = s.words.iter().map(|w| (w.key, w)).collect();
    let mut pos = PosCounts::default();
    for gw in &g.words {
        let gt = &gw.sentence.tokens[gw.index];
        let sw = system_words.get(&gw.key);
        let (head_ok, label_ok) = match sw {
            Some(sw) => {
                let st = &sw.sentence.tokens[sw.index];
                (
                    gw.head.is_some() && gw.head == sw.head,
                    labels_match(gt.deprel.as_deref(), st.deprel.as_deref(), options.strict_labels),
                )
            }
            None => (false, false),
        };
        report.attachments.add(head_ok, label_ok);
        if let Some(tb) = gw.sentence.treebank_id() {
            report
                .per_treebank
                .entry(tb.to_owned())
                .or_default()
                .add(head_ok, label_ok);
        }
        let system_upos = sw.and_then(|sw| sw.sentence.tokens[sw.index].upos.as_deref());
        pos_add(&mut pos, gt.upos.as_deref(), system_upos);
    }
    pos.predicted = s
        .words
        .iter()
        .filter(|w| w.sentence.tokens[w.index].upos.is_some())
        .count();
    report.pos = Some(pos);
    if report.per_treebank.len() < 2 {
        report.per_treebank.clear();
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::{MwtSpan, Sentence};

    fn sent(words: &[(&str, usize, &str)]) -> Sentence {
        let forms: Vec<&str> = words.iter().map(|w| w.0).collect();
        let mut s = Sentence::from_forms(&forms);
        for (t, &(_, h, l)) in s.tokens.iter_mut().zip(words) {
            t.head = Some(h);
            t.deprel = Some(l.to_owned());
            t.upos = Some("X".to_owned());
        }
        s
    }

    fn four_word() -> (Document, Document) {
        let gold = sent(&[("a", 2, "nsubj"), ("b", 0, "root"), ("c", 2, "obj"), ("d", 3, "amod")]);
        // heads: 1 ok, 2 ok, 3 ok (wrong label), 4 wrong
        let system = sent(&[("a", 2, "nsubj"), ("b", 0, "root"), ("c", 2, "obl"), ("d", 2, "amod")]);
        (Document::new(vec![gold]), Document::new(vec![system]))
    }

    #[test]
    fn hand_counted_example() {
        let (g, s) = four_word();
        let r = score_attachments(&g, &s, EvalOptions::default()).unwrap();
        assert_eq!(format!("{:.2}", r.uas()), "75.00");
        assert_eq!(format!("{:.2}", r.las()), "50.00");
        assert_eq!(r.attachments.correct_heads, 3);
        let aligned = score_aligned(&g, &s, EvalOptions::default()).unwrap();
        assert_eq!(aligned.attachments, r.attachments);
        assert_eq!(aligned.tokens.unwrap().f1(), 100.0);
    }

    #[test]
    fn identical_is_perfect() {
        let (g, _) = four_word();
        let r = evaluate(&g, &g, EvalOptions::default()).unwrap();
        assert_eq!((r.las(), r.uas()), (100.0, 100.0));
        assert_eq!(r.pos.unwrap().accuracy(), 100.0);
    }

    #[test]
    fn subtypes() {
        let g = Document::new(vec![sent(&[("a", 0, "root"), ("b", 1, "obl:tmod")])]);
        let s = Document::new(vec![sent(&[("a", 0, "root"), ("b", 1, "obl")])]);
        assert_eq!(score_attachments(&g, &s, EvalOptions::default()).unwrap().las(), 100.0);
        let strict = EvalOptions { strict_labels: true };
        assert_eq!(score_attachments(&g, &s, strict).unwrap().las(), 50.0);
    }

    #[test]
    fn segmentation_errors() {
        let g = Document::new(vec![sent(&[("ab", 0, "root")])]);
        let s = Document::new(vec![sent(&[("a", 0, "root"), ("b", 1, "dep")])]);
        assert_eq!(
            score_attachments(&g, &s, EvalOptions::default()).unwrap_err(),
            EvalError::Segmentation { sentence: 1 }
        );
        assert!(matches!(
            score_pos(&g, &Document::new(vec![])),
            Err(EvalError::SentenceCount { gold: 1, system: 0 })
        ));
        let other = Document::new(vec![sent(&[("ax", 0, "root")])]);
        assert_eq!(
            score_aligned(&g, &other, EvalOptions::default()).unwrap_err(),
            EvalError::TextMismatch { offset: 1 }
        );
    }

    #[test]
    fn split_word_is_unaligned() {
        // five gold words; the system splits the third into two
        let g = Document::new(vec![sent(&[
            ("w1", 2, "nsubj"),
            ("w2", 0, "root"),
            ("w3x", 2, "obj"),
            ("w4", 2, "obl"),
            ("w5", 2, "punct"),
        ])]);
        let s = Document::new(vec![sent(&[
            ("w1", 2, "nsubj"),
            ("w2", 0, "root"),
            ("w3", 2, "obj"),
            ("x", 3, "dep"),
            ("w4", 2, "obl"),
            ("w5", 2, "punct"),
        ])]);
        let r = score_aligned(&g, &s, EvalOptions::default()).unwrap();
        let t = r.tokens.unwrap();
        assert_eq!((t.gold, t.system, t.matched), (5, 6, 4));
        assert_eq!(format!("{:.2}", t.recall()), "80.00");
        assert_eq!(format!("{:.2}", t.precision()), "66.67");
        // 2 * (4/6) * (4/5) / (4/6 + 4/5) = 8/11
        assert_eq!(format!("{:.2}", t.f1()), "72.73");
        assert_eq!(r.attachments.words, 5);
        assert_eq!(r.attachments.correct_labeled, 4);
    }

    #[test]
    fn multiword_tokens_align_by_position() {
        let mut g = sent(&[("naan", 0, "root"), ("um", 1, "cc")]);
        g.mwt_spans.push(MwtSpan::new(1, 2, "naanum"));
        let s = sent(&[("naanum", 0, "root")]);
        let r = score_aligned(
            &Document::new(vec![g.clone()]),
            &Document::new(vec![s]),
            EvalOptions::default(),
        )
        .unwrap();
        assert_eq!(r.tokens.unwrap().matched, 1);
        assert_eq!(r.attachments.correct_heads, 0);
        let same = score_aligned(
            &Document::new(vec![g.clone()]),
            &Document::new(vec![g]),
            EvalOptions::default(),
        )
        .unwrap();
        assert_eq!(same.las(), 100.0);
    }

    #[test]
    fn empty_documents() {
        let e = Document::new(vec![]);
        let r = score_aligned(&e, &e, EvalOptions::default()).unwrap();
        assert_eq!((r.las(), r.uas(), r.tokens.unwrap().f1()), (100.0, 100.0, 100.0));
        assert_eq!(r.attachments.words, 0);
        assert_eq!(score_pos(&e, &e).unwrap().accuracy(), 100.0);
    }

    #[test]
    fn pos_counts() {
        let words: Vec<(&str, usize, &str)> = (0..10).map(|_| ("w", 0, "root")).collect();
        let g = Document::new(vec![sent(&words)]);
        let mut s = g.clone();
        s.sentences[0].tokens[3].upos = Some("NOUN".into());
        let p = score_pos(&g, &s).unwrap();
        assert_eq!(p.accuracy(), 90.0);
        assert!((p.micro_f1() - 90.0).abs() < 1e-9);
        s.sentences[0].tokens[4].upos = None;
        let p = score_pos(&g, &s).unwrap();
        assert_eq!(p.accuracy(), 80.0);
        assert!(p.micro_f1() > p.accuracy());
    }

    #[test]
    fn per_treebank_breakdown_and_report() {
        let (g, s) = four_word();
        let mut g2 = g.clone();
        g2.sentences[0].set_metadata("treebank_id", "ta_ttb");
        let mut other = g.sentences[0].clone();
        other.set_metadata("treebank_id", "hi_hdtb");
        g2.sentences.push(other.clone());
        let mut s2 = s.clone();
        s2.sentences.push(other);
        let r = evaluate(&g2, &s2, EvalOptions::default()).unwrap();
        assert_eq!(r.per_treebank["ta_ttb"].las(), 50.0);
        assert_eq!(r.per_treebank["hi_hdtb"].las(), 100.0);
        let text = r.to_string();
        assert!(text.contains("las=75.00\n"));
        assert!(text.contains("mode=gold-tokenization\n"));
        assert!(text.contains("treebank.ta_ttb.uas=75.00\n"));
    }
}
