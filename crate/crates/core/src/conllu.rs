//! CoNLL-U data model, reader, writer and structural validator.
//!
//! Parsing keeps every column the way it was read (including unsorted or
//! duplicated features) so that [`validate`] can report problems. Writing is
//! canonical: features are sorted case-insensitively, unset columns become
//! `_`, lines end with LF and every sentence is followed by one blank line.

use std::collections::HashSet;
use std::fmt;

use crate::upos::Upos;

/// Marker for an unset column.
pub const EMPTY: &str = "_";

/// An ordered bundle of `Name=Value` morphological features.
///
/// The bundle keeps insertion order; [`Features::insert`] keeps it sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Features(Vec<(String, String)>);

fn feature_key(name: &str) -> (String, &str) {
    (name.to_lowercase(), name)
}

impl Features {
    pub fn new() -> Self {
        Features(Vec::new())
    }

    /// Build a canonical bundle from pairs. Later pairs override earlier ones.
    pub fn from_pairs<I, N, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (N, V)>,
        N: Into<String>,
        V: Into<String>,
    {
        let mut feats = Features::new();
        for (n, v) in pairs {
            feats.insert(n, v);
        }
        feats
    }

    /// Parse a FEATS column. Order and duplicates are preserved as written.
    pub fn parse(column: &str) -> Result<Self, String> {
        if column == EMPTY {
            return Ok(Features::new());
        }
        let mut pairs = Vec::new();
        for part in column.split('|') {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| format!("feature `{}` has no `=`", part))?;
            if name.is_empty() || value.is_empty() {
                return Err(format!("feature `{}` has an empty name or value", part));
            }
            pairs.push((name.to_owned(), value.to_owned()));
        }
        Ok(Features(pairs))
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_str())
    }

    /// Insert or replace a feature, keeping the bundle canonically sorted.
    pub fn insert(&mut self, name: impl Into<String>, value: impl Into<String>) {
        let name = name.into();
        let value = value.into();
        if let Some(slot) = self.0.iter_mut().find(|(n, _)| *n == name) {
            slot.1 = value;
        } else {
            self.0.push((name, value));
        }
        self.0.sort_by(|a, b| feature_key(&a.0).cmp(&feature_key(&b.0)));
    }

    /// Union of two bundles; values from `other` win on name clashes.
    pub fn merged(&self, other: &Features) -> Features {
        let mut out = self.canonical();
        for (n, v) in other.iter() {
            out.insert(n, v);
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(n, v)| (n.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when names are in case-insensitive order.
    pub fn is_sorted(&self) -> bool {
        self.0.windows(2).all(|w| feature_key(&w[0].0) <= feature_key(&w[1].0))
    }

    pub fn has_duplicates(&self) -> bool {
        let mut seen = HashSet::new();
        self.0.iter().any(|(n, _)| !seen.insert(n.as_str()))
    }

    /// Stable-sorted copy; duplicates are kept.
    pub fn canonical(&self) -> Features {
        let mut pairs = self.0.clone();
        pairs.sort_by(|a, b| feature_key(&a.0).cmp(&feature_key(&b.0)));
        Features(pairs)
    }
}

impl fmt::Display for Features {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str(EMPTY);
        }
        for (i, (n, v)) in self.canonical().0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{}={}", n, v)?;
        }
        Ok(())
    }
}

/// One syntactic word line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub id: usize,
    pub form: String,
    pub lemma: Option<String>,
    pub upos: Option<String>,
    pub xpos: Option<String>,
    pub feats: Features,
    pub head: Option<usize>,
    pub deprel: Option<String>,
    pub deps: Option<String>,
    pub misc: Option<String>,
}

impl Token {
    pub fn new(id: usize, form: impl Into<String>) -> Self {
        Token {
            id,
            form: form.into(),
            lemma: None,
            upos: None,
            xpos: None,
            feats: Features::new(),
            head: None,
            deprel: None,
            deps: None,
            misc: None,
        }
    }

    /// The UPOS column parsed into the closed inventory, if valid.
    pub fn upos_label(&self) -> Option<Upos> {
        self.upos.as_deref().and_then(|u| u.parse().ok())
    }

    pub fn misc_get(&self, key: &str) -> Option<&str> {
        misc_get(self.misc.as_deref(), key)
    }

    /// Set a `Key=Value` entry in MISC, replacing an existing entry for `key`.
    pub fn set_misc(&mut self, key: &str, value: &str) {
        self.misc = Some(misc_set(self.misc.as_deref(), key, value));
    }
}

fn misc_get<'a>(misc: Option<&'a str>, key: &str) -> Option<&'a str> {
    misc?
        .split('|')
        .filter_map(|p| p.split_once('='))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
}

fn misc_set(misc: Option<&str>, key: &str, value: &str) -> String {
    let mut parts: Vec<String> = misc
        .unwrap_or("")
        .split('|')
        .filter(|p| !p.is_empty() && p.split('=').next() != Some(key))
        .map(str::to_owned)
        .collect();
    parts.push(format!("{}={}", key, value));
    parts.join("|")
}

/// A multi-word token range line `start-end`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MwtSpan {
    pub start: usize,
    pub end: usize,
    pub surface_form: String,
    pub misc: Option<String>,
}

impl MwtSpan {
    pub fn new(start: usize, end: usize, surface_form: impl Into<String>) -> Self {
        MwtSpan {
            start,
            end,
            surface_form: surface_form.into(),
            misc: None,
        }
    }

    pub fn contains(&self, id: usize) -> bool {
        self.start <= id && id <= self.end
    }
}

/// An empty-node line (`a.b`), kept verbatim and re-emitted after word `after`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmptyNode {
    pub after: usize,
    pub line: String,
}

#[derive(Clone, Debug, Default, Eq)]
pub struct Sentence {
    pub comments: Vec<String>,
    pub tokens: Vec<Token>,
    pub mwt_spans: Vec<MwtSpan>,
    pub empty_nodes: Vec<EmptyNode>,
    /// 1-based line of the first line of this sentence in its source file.
    pub source_line: Option<usize>,
}

impl PartialEq for Sentence {
    fn eq(&self, other: &Self) -> bool {
        self.comments == other.comments
            && self.tokens == other.tokens
            && self.mwt_spans == other.mwt_spans
            && self.empty_nodes == other.empty_nodes
    }
}

impl Sentence {
    pub fn new() -> Self {
        Sentence::default()
    }

    /// Sentence of bare word forms with ids 1..n.
    pub fn from_forms<S: AsRef<str>>(forms: &[S]) -> Self {
        Sentence {
            tokens: forms
                .iter()
                .enumerate()
                .map(|(i, f)| Token::new(i + 1, f.as_ref()))
                .collect(),
            ..Sentence::default()
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Value of a `# key = value` comment.
    pub fn metadata(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let body = c.strip_prefix('#')?.trim_start();
            let (k, v) = body.split_once('=')?;
            (k.trim() == key).then(|| v.trim())
        })
    }

    /// Replace or append a `# key = value` comment.
    pub fn set_metadata(&mut self, key: &str, value: &str) {
        let line = format!("# {} = {}", key, value);
        let existing = self.comments.iter().position(|c| {
            c.strip_prefix('#')
                .and_then(|b| b.trim_start().split_once('='))
                .is_some_and(|(k, _)| k.trim() == key)
        });
        match existing {
            Some(i) => self.comments[i] = line,
            None => self.comments.push(line),
        }
    }

    pub fn sent_id(&self) -> Option<&str> {
        self.metadata("sent_id")
    }

    pub fn text(&self) -> Option<&str> {
        self.metadata("text")
    }

    pub fn treebank_id(&self) -> Option<&str> {
        self.metadata("treebank_id")
    }

    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }

    pub fn span_starting_at(&self, id: usize) -> impl Iterator<Item = &MwtSpan> {
        self.mwt_spans.iter().filter(move |s| s.start == id)
    }

    pub fn span_containing(&self, id: usize) -> Option<&MwtSpan> {
        self.mwt_spans.iter().find(|s| s.contains(id))
    }

    /// Surface tokens: MWT surface forms in place of their words.
    pub fn surface_forms(&self) -> Vec<&str> {
        let mut out = Vec::new();
        let mut id = 1;
        while id <= self.tokens.len() {
            match self.span_starting_at(id).next() {
                Some(span) if span.end >= id => {
                    out.push(span.surface_form.as_str());
                    id = span.end + 1;
                }
                _ => {
                    out.push(self.tokens[id - 1].form.as_str());
                    id += 1;
                }
            }
        }
        out
    }

    /// Clear HEAD and DEPREL on every word.
    pub fn clear_dependencies(&mut self) {
        for t in &mut self.tokens {
            t.head = None;
            t.deprel = None;
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Document {
    pub sentences: Vec<Sentence>,
    pub source_name: String,
}

impl Document {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        Document {
            sentences,
            source_name: String::new(),
        }
    }

    pub fn word_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("expected 10 tab-separated fields, found {0}")]
    FieldCount(usize),
    #[error("invalid ID `{0}`")]
    BadId(String),
    #[error("expected word ID {expected}, found {found}")]
    IdGap { expected: usize, found: usize },
    #[error("invalid HEAD `{0}`")]
    BadHead(String),
    #[error("invalid FEATS: {0}")]
    BadFeatures(String),
    #[error("invalid multi-word range: {0}")]
    BadRange(String),
    #[error("empty FORM")]
    EmptyForm,
    #[error("comment line after word lines")]
    CommentAfterWords,
    #[error("sentence has no word lines")]
    NoWords,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("sentence {sentence}: {message}")]
pub struct SerializeError {
    pub sentence: usize,
    pub message: String,
}

fn optional(field: &str) -> Option<String> {
    (field != EMPTY).then(|| field.to_owned())
}

struct SentenceBuilder {
    sentence: Sentence,
    first_line: usize,
    /// Source lines of range lines, checked once the sentence is complete.
    pending_spans: Vec<usize>,
}

impl SentenceBuilder {
    fn new(line: usize) -> Self {
        SentenceBuilder {
            sentence: Sentence {
                source_line: Some(line),
                ..Sentence::default()
            },
            first_line: line,
            pending_spans: Vec::new(),
        }
    }

    fn finish(self) -> Result<Sentence, ParseError> {
        let n = self.sentence.tokens.len();
        if n == 0 {
            return Err(ParseError {
                line: self.first_line,
                kind: ParseErrorKind::NoWords,
            });
        }
        for (span, line) in self.sentence.mwt_spans.iter().zip(&self.pending_spans) {
            if span.end > n {
                return Err(ParseError {
                    line: *line,
                    kind: ParseErrorKind::BadRange(format!(
                        "{}-{} exceeds sentence length {}",
                        span.start, span.end, n
                    )),
                });
            }
        }
        Ok(self.sentence)
    }
}

/// Parse CoNLL-U text. CRLF line endings are accepted.
pub fn parse_document(text: &str) -> Result<Document, ParseError> {
    let mut sentences = Vec::new();
    let mut current: Option<SentenceBuilder> = None;

    for (idx, raw) in text.split('\n').enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if let Some(b) = current.take() {
                sentences.push(b.finish()?);
            }
            continue;
        }
        let builder = current.get_or_insert_with(|| SentenceBuilder::new(lineno));
        let err = |kind| ParseError { line: lineno, kind };

        if line.starts_with('#') {
            let s = &builder.sentence;
            if !s.tokens.is_empty() || !s.mwt_spans.is_empty() || !s.empty_nodes.is_empty() {
                return Err(err(ParseErrorKind::CommentAfterWords));
            }
            builder.sentence.comments.push(line.to_owned());
            continue;
        }

        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 10 {
            return Err(err(ParseErrorKind::FieldCount(fields.len())));
        }
        let id = fields[0];

        if let Some((a, b)) = id.split_once('-') {
            let (start, end) = match (a.parse::<usize>(), b.parse::<usize>()) {
                (Ok(s), Ok(e)) => (s, e),
                _ => return Err(err(ParseErrorKind::BadId(id.to_owned()))),
            };
            let next = builder.sentence.tokens.len() + 1;
            if start == 0 || start > end || start != next {
                return Err(err(ParseErrorKind::BadRange(format!(
                    "{} must start at the next word {} and not be reversed",
                    id, next
                ))));
            }
            if fields[1].is_empty() {
                return Err(err(ParseErrorKind::EmptyForm));
            }
            if fields[2..9].iter().any(|f| *f != EMPTY) {
                return Err(err(ParseErrorKind::BadRange(format!(
                    "{} carries annotation outside FORM and MISC",
                    id
                ))));
            }
            builder.sentence.mwt_spans.push(MwtSpan {
                start,
                end,
                surface_form: fields[1].to_owned(),
                misc: optional(fields[9]),
            });
            builder.pending_spans.push(lineno);
            continue;
        }

        if let Some((a, b)) = id.split_once('.') {
            let after = a
                .parse::<usize>()
                .map_err(|_| err(ParseErrorKind::BadId(id.to_owned())))?;
            if b.parse::<usize>().is_err() {
                return Err(err(ParseErrorKind::BadId(id.to_owned())));
            }
            builder.sentence.empty_nodes.push(EmptyNode {
                after,
                line: line.to_owned(),
            });
            continue;
        }

        let word_id = id
            .parse::<usize>()
            .map_err(|_| err(ParseErrorKind::BadId(id.to_owned())))?;
        let expected = builder.sentence.tokens.len() + 1;
        if word_id != expected {
            return Err(err(ParseErrorKind::IdGap {
                expected,
                found: word_id,
            }));
        }
        if fields[1].is_empty() {
            return Err(err(ParseErrorKind::EmptyForm));
        }
        let head = match fields[6] {
            EMPTY => None,
            h => Some(
                h.parse::<usize>()
                    .map_err(|_| err(ParseErrorKind::BadHead(h.to_owned())))?,
            ),
        };
        let feats = Features::parse(fields[5]).map_err(|m| err(ParseErrorKind::BadFeatures(m)))?;
        builder.sentence.tokens.push(Token {
            id: word_id,
            form: fields[1].to_owned(),
            lemma: optional(fields[2]),
            upos: optional(fields[3]),
            xpos: optional(fields[4]),
            feats,
            head,
            deprel: optional(fields[7]),
            deps: optional(fields[8]),
            misc: optional(fields[9]),
        });
    }
    if let Some(b) = current.take() {
        sentences.push(b.finish()?);
    }
    Ok(Document::new(sentences))
}

fn check_field(sentence: usize, what: &str, value: &str) -> Result<(), SerializeError> {
    if value.is_empty() || value.contains(['\t', '\n', '\r']) {
        return Err(SerializeError {
            sentence,
            message: format!("{} `{}` is empty or contains a tab or line break", what, value),
        });
    }
    Ok(())
}

fn write_sentence(index: usize, s: &Sentence, out: &mut String) -> Result<(), SerializeError> {
    let n = s.tokens.len();
    if n == 0 {
        return Err(SerializeError {
            sentence: index,
            message: "sentence has no words".to_owned(),
        });
    }
    for c in &s.comments {
        if !c.starts_with('#') || c.contains('\n') {
            return Err(SerializeError {
                sentence: index,
                message: format!("comment `{}` must be one line starting with #", c),
            });
        }
    }
    for span in &s.mwt_spans {
        if span.start == 0 || span.start > span.end || span.end > n {
            return Err(SerializeError {
                sentence: index,
                message: format!("multi-word range {}-{} is invalid", span.start, span.end),
            });
        }
        check_field(index, "multi-word surface form", &span.surface_form)?;
    }
    for (i, t) in s.tokens.iter().enumerate() {
        if t.id != i + 1 {
            return Err(SerializeError {
                sentence: index,
                message: format!("word ids must be 1..n; found {} at position {}", t.id, i + 1),
            });
        }
        check_field(index, "FORM", &t.form)?;
        for (what, v) in [
            ("LEMMA", &t.lemma),
            ("UPOS", &t.upos),
            ("XPOS", &t.xpos),
            ("DEPREL", &t.deprel),
            ("DEPS", &t.deps),
            ("MISC", &t.misc),
        ] {
            if let Some(v) = v {
                check_field(index, what, v)?;
            }
        }
        for (name, value) in t.feats.iter() {
            if name.is_empty()
                || value.is_empty()
                || name.contains(['=', '|', '\t', '\n'])
                || value.contains(['|', '\t', '\n'])
            {
                return Err(SerializeError {
                    sentence: index,
                    message: format!("feature `{}={}` cannot be written", name, value),
                });
            }
        }
    }

    let opt = |v: &Option<String>| v.clone().unwrap_or_else(|| EMPTY.to_owned());
    let write_empty = |after: usize, out: &mut String| {
        for e in s.empty_nodes.iter().filter(|e| e.after == after) {
            out.push_str(&e.line);
            out.push('\n');
        }
    };

    for c in &s.comments {
        out.push_str(c);
        out.push('\n');
    }
    write_empty(0, out);
    for t in &s.tokens {
        for span in s.span_starting_at(t.id) {
            out.push_str(&format!(
                "{}-{}\t{}\t_\t_\t_\t_\t_\t_\t_\t{}\n",
                span.start,
                span.end,
                span.surface_form,
                opt(&span.misc)
            ));
        }
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            t.id,
            t.form,
            opt(&t.lemma),
            opt(&t.upos),
            opt(&t.xpos),
            t.feats,
            t.head.map_or_else(|| EMPTY.to_owned(), |h| h.to_string()),
            opt(&t.deprel),
            opt(&t.deps),
            opt(&t.misc),
        ));
        write_empty(t.id, out);
    }
    // Empty nodes that claim to follow a word past the end still get written.
    for e in s.empty_nodes.iter().filter(|e| e.after > n) {
        out.push_str(&e.line);
        out.push('\n');
    }
    out.push('\n');
    Ok(())
}

pub fn serialize_sentence(s: &Sentence) -> Result<String, SerializeError> {
    let mut out = String::new();
    write_sentence(0, s, &mut out)?;
    Ok(out)
}

/// Canonical CoNLL-U text for a document.
pub fn serialize_document(doc: &Document) -> Result<String, SerializeError> {
    let mut out = String::new();
    for (i, s) in doc.sentences.iter().enumerate() {
        write_sentence(i, s, &mut out)?;
    }
    Ok(out)
}

/// Stable identifiers for validator findings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationCode {
    IdSequence,
    EmptyForm,
    HeadRange,
    SelfHead,
    NoRoot,
    MultipleRoots,
    Cycle,
    MwtRange,
    MwtOverlap,
    FeatsUnsorted,
    FeatsDuplicate,
    UposInvalid,
}

impl ViolationCode {
    pub const ALL: [ViolationCode; 12] = [
        ViolationCode::IdSequence,
        ViolationCode::EmptyForm,
        ViolationCode::HeadRange,
        ViolationCode::SelfHead,
        ViolationCode::NoRoot,
        ViolationCode::MultipleRoots,
        ViolationCode::Cycle,
        ViolationCode::MwtRange,
        ViolationCode::MwtOverlap,
        ViolationCode::FeatsUnsorted,
        ViolationCode::FeatsDuplicate,
        ViolationCode::UposInvalid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::IdSequence => "ID_SEQUENCE",
            ViolationCode::EmptyForm => "EMPTY_FORM",
            ViolationCode::HeadRange => "HEAD_RANGE",
            ViolationCode::SelfHead => "SELF_HEAD",
            ViolationCode::NoRoot => "NO_ROOT",
            ViolationCode::MultipleRoots => "MULTIPLE_ROOTS",
            ViolationCode::Cycle => "CYCLE",
            ViolationCode::MwtRange => "MWT_RANGE",
            ViolationCode::MwtOverlap => "MWT_OVERLAP",
            ViolationCode::FeatsUnsorted => "FEATS_UNSORTED",
            ViolationCode::FeatsDuplicate => "FEATS_DUPLICATE",
            ViolationCode::UposInvalid => "UPOS_INVALID",
        }
    }

    /// Codes that mean the head graph is not a single rooted tree.
    pub fn is_tree_violation(self) -> bool {
        matches!(
            self,
            ViolationCode::HeadRange
                | ViolationCode::SelfHead
                | ViolationCode::NoRoot
                | ViolationCode::MultipleRoots
                | ViolationCode::Cycle
        )
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub sentence_index: usize,
    pub line_hint: Option<usize>,
    pub code: ViolationCode,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sentence {}", self.sentence_index + 1)?;
        if let Some(line) = self.line_hint {
            write!(f, " (line {})", line)?;
        }
        write!(f, ": {}: {}", self.code, self.message)
    }
}

/// All structural problems in a document; empty means valid.
pub fn validate(doc: &Document) -> Vec<Violation> {
    doc.sentences
        .iter()
        .enumerate()
        .flat_map(|(i, s)| validate_sentence(i, s))
        .collect()
}

/// Line of word `id` in the canonical layout of `s`, if the source line is known.
fn word_line(s: &Sentence, id: usize) -> Option<usize> {
    let start = s.source_line?;
    let ranges = s.mwt_spans.iter().filter(|sp| sp.start <= id).count();
    let empties = s.empty_nodes.iter().filter(|e| e.after < id).count();
    Some(start + s.comments.len() + ranges + empties + id - 1)
}

pub fn validate_sentence(index: usize, s: &Sentence) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |id: Option<usize>, code, message: String| {
        out.push(Violation {
            sentence_index: index,
            line_hint: id.and_then(|id| word_line(s, id)).or(s.source_line),
            code,
            message,
        })
    };
    let n = s.tokens.len();

    for (i, t) in s.tokens.iter().enumerate() {
        if t.id != i + 1 {
            push(
                Some(i + 1),
                ViolationCode::IdSequence,
                format!("word at position {} has id {}", i + 1, t.id),
            );
        }
        if t.form.is_empty() {
            push(
                Some(i + 1),
                ViolationCode::EmptyForm,
                format!("word {} has an empty form", i + 1),
            );
        }
        if let Some(h) = t.head {
            if h > n {
                push(
                    Some(i + 1),
                    ViolationCode::HeadRange,
                    format!("word {} has head {} outside 0..={}", i + 1, h, n),
                );
            } else if h == i + 1 {
                push(
                    Some(i + 1),
                    ViolationCode::SelfHead,
                    format!("word {} heads itself", i + 1),
                );
            }
        }
        if t.feats.has_duplicates() {
            push(
                Some(i + 1),
                ViolationCode::FeatsDuplicate,
                format!("word {} repeats a feature name in `{}`", i + 1, t.feats),
            );
        }
        if !t.feats.is_sorted() {
            push(
                Some(i + 1),
                ViolationCode::FeatsUnsorted,
                format!("word {} has features out of order", i + 1),
            );
        }
        if let Some(u) = &t.upos {
            if u.parse::<Upos>().is_err() {
                push(
                    Some(i + 1),
                    ViolationCode::UposInvalid,
                    format!("word {} has UPOS `{}` outside the inventory", i + 1, u),
                );
            }
        }
    }

    for (a, span) in s.mwt_spans.iter().enumerate() {
        if span.start == 0 || span.start > span.end || span.end > n {
            push(
                None,
                ViolationCode::MwtRange,
                format!("range {}-{} does not cover valid words", span.start, span.end),
            );
        }
        for other in &s.mwt_spans[a + 1..] {
            if span.start <= other.end && other.start <= span.end {
                push(
                    Some(other.start),
                    ViolationCode::MwtOverlap,
                    format!(
                        "ranges {}-{} and {}-{} overlap",
                        span.start, span.end, other.start, other.end
                    ),
                );
            }
        }
    }

    let all_heads_set = n > 0 && s.tokens.iter().all(|t| t.head.is_some());
    if all_heads_set {
        let heads: Vec<usize> = s.tokens.iter().map(|t| t.head.unwrap_or(0)).collect();
        let roots = heads.iter().filter(|&&h| h == 0).count();
        if roots == 0 {
            push(
                None,
                ViolationCode::NoRoot,
                "no word is attached to the root".to_owned(),
            );
        } else if roots > 1 {
            push(
                None,
                ViolationCode::MultipleRoots,
                format!("{} words are attached to the root", roots),
            );
        }
        for cycle in find_cycles(&heads) {
            let ids: Vec<String> = cycle.iter().map(usize::to_string).collect();
            push(
                Some(cycle[0]),
                ViolationCode::Cycle,
                format!("head cycle through words {}", ids.join(" -> ")),
            );
        }
    }
    out
}

/// Cycles of length ≥ 2 in a head array (1-based ids, 0 = root, out-of-range
/// heads end a chain). Each cycle is reported once, starting at its smallest id.
pub(crate) fn find_cycles(heads: &[usize]) -> Vec<Vec<usize>> {
    let n = heads.len();
    // 0 = unvisited, 1 = on the current chain, 2 = done
    let mut state = vec![0u8; n + 1];
    let mut cycles = Vec::new();
    for start in 1..=n {
        if state[start] != 0 {
            continue;
        }
        let mut chain = Vec::new();
        let mut cur = start;
        while cur >= 1 && cur <= n && state[cur] == 0 {
            state[cur] = 1;
            chain.push(cur);
            cur = heads[cur - 1];
        }
        if cur >= 1 && cur <= n && state[cur] == 1 {
            let pos = chain.iter().position(|&c| c == cur).unwrap_or(0);
            let mut cycle = chain[pos..].to_vec();
            if cycle.len() > 1 {
                let min_at = cycle.iter().enumerate().min_by_key(|(_, &c)| c).map_or(0, |(i, _)| i);
                cycle.rotate_left(min_at);
                cycles.push(cycle);
            }
        }
        for c in chain {
            state[c] = 2;
        }
    }
    cycles
}

/// True when `heads` (1-based, 0 = root) form a single tree rooted at 0.
pub fn is_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    n > 0
        && heads.iter().filter(|&&h| h == 0).count() == 1
        && heads.iter().enumerate().all(|(i, &h)| h <= n && h != i + 1)
        && find_cycles(heads).is_empty()
}
