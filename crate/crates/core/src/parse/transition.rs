//! Arc-hybrid transition system, projectivity check and static oracle.
//!
//! Words are numbered from 1, with 0 as the artificial root. The stack starts
//! as `[0]` and the buffer holds every word. SHIFT moves the buffer front onto
//! the stack, LEFT-ARC makes the buffer front the head of the stack top and
//! pops it, RIGHT-ARC makes the second stack item the head of the stack top and
//! pops it. The root may only take its dependent once the buffer is empty,
//! which keeps every derivation single-rooted.

use std::fmt;

use crate::conllu::{is_tree, Sentence};

use super::ParserError;

pub const ROOT_LABEL: &str = "root";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Transition {
    Shift,
    LeftArc(String),
    RightArc(String),
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transition::Shift => f.write_str("SHIFT"),
            Transition::LeftArc(l) => write!(f, "LEFT-ARC({})", l),
            Transition::RightArc(l) => write!(f, "RIGHT-ARC({})", l),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParserState {
    pub stack: Vec<usize>,
    /// Front of the buffer is `buffer[front]`; the buffer is always a suffix
    /// of `1..=n`.
    front: usize,
    n: usize,
    pub heads: Vec<Option<usize>>,
    pub labels: Vec<Option<String>>,
}

impl ParserState {
    pub fn new(n: usize) -> Self {
        ParserState {
            stack: vec![0],
            front: 1,
            n,
            heads: vec![None; n + 1],
            labels: vec![None; n + 1],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn s0(&self) -> Option<usize> {
        self.stack.last().copied()
    }

    pub fn s1(&self) -> Option<usize> {
        self.stack.len().checked_sub(2).map(|i| self.stack[i])
    }

    /// Buffer item `k` places from the front.
    pub fn b(&self, k: usize) -> Option<usize> {
        let i = self.front + k;
        (i <= self.n).then_some(i)
    }

    pub fn buffer(&self) -> impl Iterator<Item = usize> {
        self.front..=self.n
    }

    pub fn is_terminal(&self) -> bool {
        self.b(0).is_none() && self.stack == [0]
    }

    pub fn can_shift(&self) -> bool {
        self.b(0).is_some()
    }

    pub fn can_left(&self) -> bool {
        self.b(0).is_some() && matches!(self.s0(), Some(s) if s != 0)
    }

    pub fn can_right(&self) -> bool {
        match self.s1() {
            Some(0) => self.b(0).is_none(),
            Some(_) => true,
            None => false,
        }
    }

    pub fn is_legal(&self, t: &Transition) -> bool {
        match t {
            Transition::Shift => self.can_shift(),
            Transition::LeftArc(_) => self.can_left(),
            Transition::RightArc(_) => self.can_right(),
        }
    }

    /// Apply `t`, which must be legal.
    pub fn apply(&mut self, t: &Transition) {
        debug_assert!(self.is_legal(t), "illegal {} in {:?}", t, self);
        match t {
            Transition::Shift => {
                self.stack.push(self.front);
                self.front += 1;
            }
            Transition::LeftArc(label) => {
                let d = self.stack.pop().expect("legal left arc");
                self.heads[d] = Some(self.front);
                self.labels[d] = Some(label.clone());
            }
            Transition::RightArc(label) => {
                let d = self.stack.pop().expect("legal right arc");
                self.heads[d] = Some(*self.stack.last().expect("legal right arc"));
                self.labels[d] = Some(label.clone());
            }
        }
    }

    /// Leftmost and rightmost attached dependents of `h`.
    pub fn outer_children(&self, h: usize) -> (Option<usize>, Option<usize>) {
        let mut it = (1..=self.n).filter(|&d| self.heads[d] == Some(h));
        let first = it.next();
        let last = it.next_back().or(first);
        (first, last)
    }
}

/// Gold heads (index 0 unused) and labels of a fully annotated sentence.
pub(crate) fn gold_tree(sentence: &Sentence) -> Result<(Vec<usize>, Vec<String>), ParserError> {
    let mut heads = Vec::with_capacity(sentence.len());
    let mut labels = Vec::with_capacity(sentence.len());
    for t in &sentence.tokens {
        match (t.head, t.deprel.as_deref()) {
            (Some(h), Some(l)) => {
                heads.push(h);
                labels.push(l.to_owned());
            }
            _ => return Err(ParserError::MissingTree { word: t.id }),
        }
    }
    if !is_tree(&heads) {
        return Err(ParserError::NotATree);
    }
    Ok((heads, labels))
}

/// True when no two arcs cross, the root arc included.
pub fn is_projective(sentence: &Sentence) -> Result<bool, ParserError> {
    let (heads, _) = gold_tree(sentence)?;
    Ok(heads_projective(&heads))
}

/// `heads[i]` is the head of word `i + 1`; must already be a tree.
pub(crate) fn heads_projective(heads: &[usize]) -> bool {
    // every word strictly between a head and its dependent must be dominated
    // by that head
    let dominated_by = |mut w: usize, h: usize| {
        while w != 0 {
            if w == h {
                return true;
            }
            w = heads[w - 1];
        }
        h == 0
    };
    heads.iter().enumerate().all(|(i, &h)| {
        let d = i + 1;
        let (lo, hi) = if h < d { (h, d) } else { (d, h) };
        (lo + 1..hi).all(|w| dominated_by(w, h))
    })
}

/// Transition sequence that rebuilds the gold tree of a projective sentence.
pub fn oracle_transitions(sentence: &Sentence) -> Result<Vec<Transition>, ParserError> {
    let (heads, labels) = gold_tree(sentence)?;
    if !heads_projective(&heads) {
        return Err(ParserError::NonProjective);
    }
    let n = heads.len();
    let head = |w: usize| heads[w - 1];
    let mut pending = vec![0usize; n + 1];
    for &h in &heads {
        pending[h] += 1;
    }
    let mut state = ParserState::new(n);
    let mut out = Vec::with_capacity(2 * n);
    while !state.is_terminal() {
        let s0 = state.s0();
        let b0 = state.b(0);
        let t = match (s0, b0) {
            (Some(s), Some(b)) if s != 0 && head(s) == b && pending[s] == 0 => {
                Transition::LeftArc(labels[s - 1].clone())
            }
            (Some(s), _) if s != 0 && state.can_right() && Some(head(s)) == state.s1() && pending[s] == 0 => {
                Transition::RightArc(labels[s - 1].clone())
            }
            (_, Some(_)) => Transition::Shift,
            _ => return Err(ParserError::NonProjective),
        };
        if let Transition::LeftArc(_) | Transition::RightArc(_) = t {
            let s = s0.expect("arc needs a stack top");
            pending[head(s)] -= 1;
        }
        state.apply(&t);
        out.push(t);
    }
    Ok(out)
}

/// Run `transitions` from the initial state of an `n`-word sentence and
/// return `(head, label)` for words `1..=n`.
pub fn replay(n: usize, transitions: &[Transition]) -> Result<Vec<(usize, String)>, ParserError> {
    let mut state = ParserState::new(n);
    for (step, t) in transitions.iter().enumerate() {
        if !state.is_legal(t) {
            return Err(ParserError::IllegalTransition {
                step,
                transition: t.to_string(),
            });
        }
        state.apply(t);
    }
    if !state.is_terminal() {
        return Err(ParserError::Unfinished);
    }
    Ok((1..=n)
        .map(|d| {
            (
                state.heads[d].expect("terminal state attaches every word"),
                state.labels[d].clone().expect("terminal state labels every word"),
            )
        })
        .collect())
}
