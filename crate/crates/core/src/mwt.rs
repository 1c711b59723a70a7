//! Multi-word token expansion driven by a clitic suffix table.

use std::collections::HashSet;
use std::path::Path;

use crate::conllu::{EmptyNode, MwtSpan, Sentence, Token};
use crate::upos::Upos;

const DEFAULT_RULES: &str = include_str!("../data/clitics.tsv");

#[derive(Debug, thiserror::Error)]
pub enum MwtError {
    #[error("clitic table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("cannot read clitic table: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliticRule {
    pub suffix: String,
    pub min_stem_length: usize,
    pub upos_hint: Option<Upos>,
    pub priority: i32,
}

/// Extra condition a stem must meet before a split is made.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum StemCheck {
    #[default]
    Any,
    /// The stem must be one of these forms.
    Known(HashSet<String>),
}

impl StemCheck {
    fn accepts(&self, stem: &str) -> bool {
        match self {
            StemCheck::Any => true,
            StemCheck::Known(stems) => stems.contains(stem),
        }
    }
}

/// Rules ordered by descending priority.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliticTable {
    rules: Vec<CliticRule>,
    pub stem_check: StemCheck,
}

impl Default for CliticTable {
    fn default() -> Self {
        CliticTable::parse(DEFAULT_RULES).expect("shipped clitic table is valid")
    }
}

impl CliticTable {
    pub fn new(mut rules: Vec<CliticRule>) -> Result<Self, MwtError> {
        let mut priorities = HashSet::new();
        for r in &rules {
            if r.suffix.is_empty() || r.min_stem_length == 0 {
                return Err(MwtError::Table {
                    line: 0,
                    message: format!("rule `{}` needs a suffix and a stem length ≥ 1", r.suffix),
                });
            }
            if !priorities.insert(r.priority) {
                return Err(MwtError::Table {
                    line: 0,
                    message: format!("priority {} is used twice", r.priority),
                });
            }
        }
        rules.sort_by_key(|r| std::cmp::Reverse(r.priority));
        Ok(CliticTable {
            rules,
            stem_check: StemCheck::Any,
        })
    }

    /// Parse `suffix<TAB>min_stem_length<TAB>upos_hint<TAB>priority` lines.
    /// `_` means no UPOS hint; `#` lines are comments.
    pub fn parse(text: &str) -> Result<Self, MwtError> {
        let mut rules = Vec::new();
        let mut priorities = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| MwtError::Table { line: i + 1, message };
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [suffix, min_stem, hint, priority] = fields[..] else {
                return Err(err(format!("expected 4 tab-separated fields, found {}", fields.len())));
            };
            let min_stem_length: usize = min_stem
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| err(format!("min_stem_length `{}` must be a positive integer", min_stem)))?;
            let upos_hint = match hint {
                "_" => None,
                h => Some(h.parse::<Upos>().map_err(|e| err(e.to_string()))?),
            };
            let priority: i32 = priority
                .parse()
                .map_err(|_| err(format!("priority `{}` is not an integer", priority)))?;
            if suffix.is_empty() {
                return Err(err("empty suffix".to_owned()));
            }
            if !priorities.insert(priority) {
                return Err(err(format!("priority {} is used twice", priority)));
            }
            rules.push(CliticRule {
                suffix: suffix.to_owned(),
                min_stem_length,
                upos_hint,
                priority,
            });
        }
        CliticTable::new(rules)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MwtError> {
        CliticTable::parse(&std::fs::read_to_string(path)?)
    }

    pub fn with_stem_check(mut self, check: StemCheck) -> Self {
        self.stem_check = check;
        self
    }

    pub fn rules(&self) -> &[CliticRule] {
        &self.rules
    }

    /// Highest-priority rule that splits `form`, with the resulting stem.
    pub fn matching_rule<'a>(&'a self, form: &'a str) -> Option<(&'a CliticRule, &'a str)> {
        self.rules.iter().find_map(|rule| {
            let stem = form.strip_suffix(rule.suffix.as_str())?;
            (stem.chars().count() >= rule.min_stem_length && self.stem_check.accepts(stem)).then_some((rule, stem))
        })
    }

    /// `[stem, clitic]` when a rule applies, otherwise `None`. Never splits twice.
    pub fn expand_token(&self, form: &str) -> Option<Vec<String>> {
        self.matching_rule(form)
            .map(|(rule, stem)| vec![stem.to_owned(), rule.suffix.clone()])
    }

    /// Expand every eligible word of a sentence into stem and clitic words.
    ///
    /// Words already inside a multi-word span are left alone. Ids are
    /// renumbered; heads pointing at an expanded word point at its stem, and
    /// the clitic attaches to the stem when the original word had a head.
    pub fn expand_sentence(&self, sentence: &Sentence) -> Sentence {
        let n = sentence.tokens.len();
        // new id of each old word (its stem word when expanded), and of its last word
        let mut first_id = vec![0usize; n + 1];
        let mut last_id = vec![0usize; n + 1];
        let mut plan: Vec<Option<(&CliticRule, &str)>> = Vec::with_capacity(n);
        let mut next = 1;
        for t in &sentence.tokens {
            let split = if sentence.span_containing(t.id).is_some() {
                None
            } else {
                self.matching_rule(&t.form)
            };
            first_id[t.id.min(n)] = next;
            next += if split.is_some() { 2 } else { 1 };
            last_id[t.id.min(n)] = next - 1;
            plan.push(split);
        }
        if plan.iter().all(Option::is_none) {
            return sentence.clone();
        }
        let added = next - 1 - n;
        let remap = |h: usize| match h {
            0 => 0,
            h if h <= n => first_id[h],
            h => h + added,
        };

        let mut out = Sentence {
            comments: sentence.comments.clone(),
            source_line: sentence.source_line,
            ..Sentence::default()
        };
        for (t, split) in sentence.tokens.iter().zip(plan) {
            let id = first_id[t.id.min(n)];
            let mut stem = t.clone();
            stem.id = id;
            stem.head = t.head.map(remap);
            match split {
                None => out.tokens.push(stem),
                Some((rule, stem_form)) => {
                    stem.form = stem_form.to_owned();
                    stem.misc = None;
                    let mut clitic = Token::new(id + 1, rule.suffix.clone());
                    clitic.upos = rule.upos_hint.map(|u| u.to_string());
                    if t.head.is_some() {
                        clitic.head = Some(id);
                        clitic.deprel = Some(
                            if rule.upos_hint == Some(Upos::Cconj) {
                                "cc"
                            } else {
                                "dep"
                            }
                            .to_owned(),
                        );
                    }
                    out.mwt_spans.push(MwtSpan {
                        start: id,
                        end: id + 1,
                        surface_form: t.form.clone(),
                        misc: t.misc.clone(),
                    });
                    out.tokens.push(stem);
                    out.tokens.push(clitic);
                }
            }
        }
        for span in &sentence.mwt_spans {
            let start = if span.start <= n {
                first_id[span.start]
            } else {
                span.start + added
            };
            let end = if span.end <= n {
                last_id[span.end]
            } else {
                span.end + added
            };
            out.mwt_spans.push(MwtSpan {
                start,
                end,
                ..span.clone()
            });
        }
        out.mwt_spans.sort_by_key(|s| (s.start, s.end));
        for e in &sentence.empty_nodes {
            let after = if e.after == 0 {
                0
            } else if e.after <= n {
                last_id[e.after]
            } else {
                e.after + added
            };
            let line = match e.line.split_once('.') {
                Some((_, rest)) => format!("{}.{}", after, rest),
                None => e.line.clone(),
            };
            out.empty_nodes.push(EmptyNode { after, line });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::{is_tree, parse_document};

    fn um_table() -> CliticTable {
        CliticTable::parse("um\t2\tCCONJ\t1\n").unwrap()
    }

    #[test]
    fn expands_um() {
        let t = um_table();
        assert_eq!(t.expand_token("naanum"), Some(vec!["naan".into(), "um".into()]));
        assert_eq!(t.expand_token("avanum"), Some(vec!["avan".into(), "um".into()]));
        assert_eq!(t.expand_token("naan"), None);
        // stem too short
        assert_eq!(t.expand_token("aum"), None);
        assert_eq!(t.expand_token("um"), None);
    }

    #[test]
    fn priority_decides() {
        let t = CliticTable::parse("um\t2\t_\t1\nmum\t2\tPART\t9\n").unwrap();
        assert_eq!(t.expand_token("avanmum"), Some(vec!["avan".into(), "mum".into()]));
        assert!(CliticTable::parse("um\t2\t_\t1\naa\t2\t_\t1\n").is_err());
        assert!(CliticTable::parse("um\t0\t_\t1\n").is_err());
        assert!(CliticTable::parse("um\t2\tVAUX\t1\n").is_err());
        assert!(CliticTable::parse("um\t2\t1\n").is_err());
    }

    #[test]
    fn stem_check_blocks_unknown_stems() {
        let known: HashSet<String> = ["naan".to_owned()].into_iter().collect();
        let t = um_table().with_stem_check(StemCheck::Known(known));
        assert!(t.expand_token("naanum").is_some());
        assert!(t.expand_token("varum").is_none());
    }

    #[test]
    fn single_token_sentence() {
        let s = Sentence::from_forms(&["naanum"]);
        let out = um_table().expand_sentence(&s);
        assert_eq!(out.forms(), vec!["naan", "um"]);
        assert_eq!(out.mwt_spans, vec![MwtSpan::new(1, 2, "naanum")]);
        assert_eq!(out.tokens[1].upos.as_deref(), Some("CCONJ"));
        assert_eq!(out.tokens[1].head, None);
    }

    #[test]
    fn nothing_to_expand() {
        let s = Sentence::from_forms(&["avan", "vantaan", "."]);
        assert_eq!(um_table().expand_sentence(&s), s);
    }

    #[test]
    fn heads_are_remapped() {
        let text = "1\tnaanum\t_\t_\t_\t_\t3\tnsubj\t_\tSpaceAfter=No\n\
2\tavanum\t_\t_\t_\t_\t3\tnsubj\t_\t_\n\
3\tvantoom\t_\t_\t_\t_\t0\troot\t_\t_\n\
3.1\tx\t_\t_\t_\t_\t_\t_\t3:dep\t_\n\n";
        let s = &parse_document(text).unwrap().sentences[0];
        let out = um_table().expand_sentence(s);
        assert_eq!(out.forms(), vec!["naan", "um", "avan", "um", "vantoom"]);
        let heads: Vec<usize> = out.tokens.iter().map(|t| t.head.unwrap()).collect();
        assert_eq!(heads, vec![5, 1, 5, 3, 0]);
        assert!(is_tree(&heads));
        assert_eq!(out.mwt_spans[0].misc.as_deref(), Some("SpaceAfter=No"));
        assert_eq!(out.mwt_spans[1], MwtSpan::new(3, 4, "avanum"));
        assert_eq!(out.empty_nodes[0].after, 5);
        assert!(out.empty_nodes[0].line.starts_with("5.1\t"));
        assert_eq!(out.tokens[1].deprel.as_deref(), Some("cc"));
        // words already inside spans are not split again
        assert_eq!(um_table().expand_sentence(&out), out);
    }
}
