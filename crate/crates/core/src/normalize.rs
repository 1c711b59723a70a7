//! Unicode canonicalization and script checks.
//!
//! Text is brought to NFC, then a rewrite table of visually equivalent
//! sequences is applied, repeating until nothing changes. All offsets in this
//! module count Unicode scalar values (chars), not bytes.

use std::fmt;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

const DEFAULT_TABLE: &str = include_str!("../data/tamil_rewrite.txt");
const MAX_PASSES: usize = 16;
/// Above this many DP cells a changed word is reported as one replacement.
const MAX_DIFF_CELLS: usize = 1 << 20;

#[derive(Debug, thiserror::Error)]
pub enum NormalizeError {
    #[error("invalid UTF-8 at byte offset {0}")]
    Encoding(usize),
    #[error("rewrite table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("cannot read rewrite table: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteRule {
    pub from: Vec<char>,
    pub to: Vec<char>,
}

/// Rules are kept longest-`from` first so matching is leftmost-longest.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RewriteTable {
    rules: Vec<RewriteRule>,
}

fn parse_sequence(s: &str) -> Result<Vec<char>, String> {
    s.split(',')
        .map(|cp| {
            let cp = cp.trim();
            let hex = cp
                .strip_prefix("U+")
                .ok_or_else(|| format!("`{}` is not of the form U+XXXX", cp))?;
            u32::from_str_radix(hex, 16)
                .ok()
                .and_then(char::from_u32)
                .ok_or_else(|| format!("`{}` is not a Unicode scalar value", cp))
        })
        .collect()
}

fn nfc(chars: &[char]) -> Vec<char> {
    chars.iter().copied().nfc().collect()
}

impl RewriteTable {
    pub fn empty() -> Self {
        RewriteTable::default()
    }

    /// The shipped table for Tamil script.
    pub fn tamil() -> Self {
        RewriteTable::parse(DEFAULT_TABLE).expect("shipped rewrite table is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NormalizeError> {
        RewriteTable::parse(&std::fs::read_to_string(path)?)
    }

    /// Parse `U+XXXX[,U+XXXX...] -> U+XXXX[,...]` lines; `#` starts a comment.
    ///
    /// Both sides are stored in NFC. Rules that NFC already covers become
    /// no-ops and are dropped.
    pub fn parse(text: &str) -> Result<Self, NormalizeError> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| NormalizeError::Table { line: i + 1, message };
            let (from, to) = line
                .split_once("->")
                .ok_or_else(|| err("expected `from -> to`".to_owned()))?;
            let from = parse_sequence(from).map_err(err)?;
            let to = parse_sequence(to).map_err(err)?;
            if from.iter().chain(&to).any(|c| c.is_ascii_whitespace()) {
                return Err(err("rules may not contain ASCII whitespace".to_owned()));
            }
            let (from, to) = (nfc(&from), nfc(&to));
            if from != to {
                rules.push(RewriteRule { from, to });
            }
        }
        rules.sort_by_key(|r| std::cmp::Reverse(r.from.len()));
        Ok(RewriteTable { rules })
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    fn rewrite(&self, input: &[char]) -> Vec<char> {
        let mut out = Vec::with_capacity(input.len());
        let mut i = 0;
        'outer: while i < input.len() {
            for rule in &self.rules {
                if input[i..].starts_with(&rule.from) {
                    out.extend_from_slice(&rule.to);
                    i += rule.from.len();
                    continue 'outer;
                }
            }
            out.push(input[i]);
            i += 1;
        }
        out
    }
}

/// An inclusive block of code points considered "in script".
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScriptRange {
    pub first: char,
    pub last: char,
}

impl ScriptRange {
    pub const TAMIL: ScriptRange = ScriptRange {
        first: '\u{0B80}',
        last: '\u{0BFF}',
    };
    pub const BASIC_LATIN_LETTERS: ScriptRange = ScriptRange { first: 'A', last: 'z' };

    pub fn contains(&self, c: char) -> bool {
        self.first <= c && c <= self.last
    }
}

/// One edit: `from` at char offset `offset` of the input became `to`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replacement {
    pub offset: usize,
    pub from: String,
    pub to: String,
}

/// A run of characters outside the configured script (char offset, char length).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScriptRun {
    pub offset: usize,
    pub length: usize,
}

impl fmt::Display for ScriptRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.offset, self.length)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizationReport {
    pub output: String,
    pub replacements: Vec<Replacement>,
    /// Out-of-script runs in `output`.
    pub non_script_runs: Vec<ScriptRun>,
}

#[derive(Clone, Debug)]
pub struct Normalizer {
    pub table: RewriteTable,
    pub script: ScriptRange,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer {
            table: RewriteTable::tamil(),
            script: ScriptRange::TAMIL,
        }
    }
}

impl Normalizer {
    pub fn new(table: RewriteTable, script: ScriptRange) -> Self {
        Normalizer { table, script }
    }

    /// Normalized form of one whitespace-free chunk.
    fn normalize_chunk(&self, chunk: &[char]) -> Vec<char> {
        let mut current = nfc(chunk);
        for _ in 0..MAX_PASSES {
            let next = nfc(&self.table.rewrite(&current));
            if next == current {
                break;
            }
            current = next;
        }
        current
    }

    pub fn normalize_text(&self, input: &str) -> NormalizationReport {
        let chars: Vec<char> = input.chars().collect();
        let mut output = String::with_capacity(input.len());
        let mut replacements = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if chars[i].is_ascii_whitespace() {
                output.push(chars[i]);
                i += 1;
                continue;
            }
            let start = i;
            while i < chars.len() && !chars[i].is_ascii_whitespace() {
                i += 1;
            }
            let chunk = &chars[start..i];
            let normalized = self.normalize_chunk(chunk);
            if normalized != chunk {
                diff_chunk(chunk, &normalized, start, &mut replacements);
            }
            output.extend(normalized);
        }
        let non_script_runs = check_script(&output, self.script);
        NormalizationReport {
            output,
            replacements,
            non_script_runs,
        }
    }

    /// Like [`Normalizer::normalize_text`] for raw bytes.
    pub fn normalize_bytes(&self, input: &[u8]) -> Result<NormalizationReport, NormalizeError> {
        let text = std::str::from_utf8(input).map_err(|e| NormalizeError::Encoding(e.valid_up_to()))?;
        Ok(self.normalize_text(text))
    }
}

/// Append the replacements turning `a` into `b`; `base` is the char offset of `a`.
fn diff_chunk(a: &[char], b: &[char], base: usize, out: &mut Vec<Replacement>) {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let suffix = a[prefix..]
        .iter()
        .rev()
        .zip(b[prefix..].iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let a = &a[prefix..a.len() - suffix];
    let b = &b[prefix..b.len() - suffix];
    let base = base + prefix;

    if (a.len() + 1) * (b.len() + 1) > MAX_DIFF_CELLS {
        out.push(Replacement {
            offset: base,
            from: a.iter().collect(),
            to: b.iter().collect(),
        });
        return;
    }

    // lcs[i][j] = LCS length of a[i..] and b[j..]
    let (n, m) = (a.len(), b.len());
    let mut lcs = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] = if a[i] == b[j] {
                lcs[i + 1][j + 1] + 1
            } else {
                lcs[i + 1][j].max(lcs[i][j + 1])
            };
        }
    }

    let (mut i, mut j) = (0, 0);
    let mut pending: Option<Replacement> = None;
    let flush = |pending: &mut Option<Replacement>, out: &mut Vec<Replacement>| {
        if let Some(r) = pending.take() {
            out.push(r);
        }
    };
    while i < n || j < m {
        if i < n && j < m && a[i] == b[j] {
            flush(&mut pending, out);
            i += 1;
            j += 1;
            continue;
        }
        let r = pending.get_or_insert_with(|| Replacement {
            offset: base + i,
            from: String::new(),
            to: String::new(),
        });
        if j < m && (i == n || lcs[i][j + 1] >= lcs[i + 1][j]) {
            r.to.push(b[j]);
            j += 1;
        } else {
            r.from.push(a[i]);
            i += 1;
        }
    }
    flush(&mut pending, out);
}

/// Apply replacements (sorted by offset) to `input`.
pub fn apply_replacements(input: &str, replacements: &[Replacement]) -> String {
    let chars: Vec<char> = input.chars().collect();
    let mut out = String::with_capacity(input.len());
    let mut pos = 0;
    for r in replacements {
        out.extend(&chars[pos..r.offset]);
        out.push_str(&r.to);
        pos = r.offset + r.from.chars().count();
    }
    out.extend(&chars[pos.min(chars.len())..]);
    out
}

/// Runs of characters that are neither in `script`, ASCII digits or
/// punctuation, nor whitespace.
pub fn check_script(input: &str, script: ScriptRange) -> Vec<ScriptRun> {
    let allowed = |c: char| script.contains(c) || c.is_ascii_punctuation() || c.is_ascii_digit() || c.is_whitespace();
    let mut runs: Vec<ScriptRun> = Vec::new();
    for (offset, c) in input.chars().enumerate() {
        if allowed(c) {
            continue;
        }
        match runs.last_mut() {
            Some(run) if run.offset + run.length == offset => run.length += 1,
            _ => runs.push(ScriptRun { offset, length: 1 }),
        }
    }
    runs
}

/// NFC plus the shipped Tamil table.
pub fn normalize_text(input: &str) -> NormalizationReport {
    Normalizer::default().normalize_text(input)
}
