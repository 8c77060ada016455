use std::fmt;

use crate::error::{Error, Result};

/// Index of the artificial root token.
pub const ROOT: usize = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransitionKind {
    Shift,
    Left,
    Right,
}

impl TransitionKind {
    pub const ALL: [TransitionKind; 3] = [TransitionKind::Shift, TransitionKind::Left, TransitionKind::Right];
}

/// An arc-hybrid transition; `Left` and `Right` carry a label id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transition {
    Shift,
    Left(usize),
    Right(usize),
}

impl Transition {
    pub fn kind(self) -> TransitionKind {
        match self {
            Transition::Shift => TransitionKind::Shift,
            Transition::Left(_) => TransitionKind::Left,
            Transition::Right(_) => TransitionKind::Right,
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transition::Shift => write!(f, "Shift"),
            Transition::Left(l) => write!(f, "Left[{}]", l),
            Transition::Right(l) => write!(f, "Right[{}]", l),
        }
    }
}

/// Which transition kinds are allowed in a configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KindSet {
    pub shift: bool,
    pub left: bool,
    pub right: bool,
}

impl KindSet {
    pub fn contains(&self, kind: TransitionKind) -> bool {
        match kind {
            TransitionKind::Shift => self.shift,
            TransitionKind::Left => self.left,
            TransitionKind::Right => self.right,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = TransitionKind> + '_ {
        TransitionKind::ALL.into_iter().filter(|&k| self.contains(k))
    }
}

/// Arc-hybrid configuration `(σ, β, T)`.
///
/// The buffer is always `next..=n` followed by [`ROOT`], so it is stored as
/// the index of its first real token.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    n: usize,
    stack: Vec<usize>,
    next: usize,
    heads: Vec<Option<usize>>,
    labels: Vec<Option<usize>>,
}

impl Configuration {
    /// Empty stack, empty arc set, buffer `1, …, n, ROOT`.
    pub fn initial(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("cannot parse an empty sentence".into()));
        }
        Ok(Configuration {
            n,
            stack: Vec::with_capacity(n),
            next: 1,
            heads: vec![None; n + 1],
            labels: vec![None; n + 1],
        })
    }

    pub fn sentence_len(&self) -> usize {
        self.n
    }

    /// Stack from bottom to top.
    pub fn stack(&self) -> &[usize] {
        &self.stack
    }

    /// `k`-th item from the top of the stack (`s0` is the top).
    pub fn s(&self, k: usize) -> Option<usize> {
        self.stack.len().checked_sub(k + 1).map(|i| self.stack[i])
    }

    /// First buffer item; [`ROOT`] once all tokens were shifted.
    pub fn b0(&self) -> usize {
        if self.next <= self.n {
            self.next
        } else {
            ROOT
        }
    }

    pub fn buffer(&self) -> Vec<usize> {
        (self.next..=self.n).chain(std::iter::once(ROOT)).collect()
    }

    pub fn in_buffer(&self, i: usize) -> bool {
        i == ROOT || (i >= self.next && i <= self.n)
    }

    pub fn is_terminal(&self) -> bool {
        self.stack.is_empty() && self.b0() == ROOT
    }

    pub fn head(&self, m: usize) -> Option<usize> {
        self.heads[m]
    }

    pub fn label(&self, m: usize) -> Option<usize> {
        self.labels[m]
    }

    /// Arcs `(head, modifier, label)` built so far.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (1..=self.n).filter_map(move |m| match (self.heads[m], self.labels[m]) {
            (Some(h), Some(l)) => Some((h, m, l)),
            _ => None,
        })
    }

    pub fn leftmost_modifier(&self, h: usize) -> Option<usize> {
        (1..=self.n).find(|&m| self.heads[m] == Some(h))
    }

    pub fn rightmost_modifier(&self, h: usize) -> Option<usize> {
        (1..=self.n).rev().find(|&m| self.heads[m] == Some(h))
    }

    pub fn legal(&self) -> Result<KindSet> {
        if self.is_terminal() {
            return Err(Error::IllegalTransition {
                transition: "any".into(),
                reason: "configuration is terminal".into(),
            });
        }
        Ok(KindSet {
            shift: self.b0() != ROOT,
            left: !self.stack.is_empty(),
            right: self.stack.len() >= 2,
        })
    }

    /// Applies `t` in place.
    pub fn apply(&mut self, t: Transition) -> Result<()> {
        let illegal = |reason: &str| Error::IllegalTransition {
            transition: t.to_string(),
            reason: reason.into(),
        };
        match t {
            Transition::Shift => {
                if self.b0() == ROOT {
                    return Err(illegal("buffer holds only ROOT"));
                }
                self.stack.push(self.next);
                self.next += 1;
            }
            Transition::Left(label) => {
                let s0 = self.stack.pop().ok_or_else(|| illegal("stack is empty"))?;
                self.heads[s0] = Some(self.b0());
                self.labels[s0] = Some(label);
            }
            Transition::Right(label) => {
                if self.stack.len() < 2 {
                    return Err(illegal("stack holds fewer than two items"));
                }
                let s0 = self.stack.pop().expect("non-empty stack");
                let s1 = *self.stack.last().expect("second stack item");
                self.heads[s0] = Some(s1);
                self.labels[s0] = Some(label);
            }
        }
        Ok(())
    }

    pub fn applied(&self, t: Transition) -> Result<Self> {
        let mut next = self.clone();
        next.apply(t)?;
        Ok(next)
    }

    /// Heads of tokens `1..=n`; unattached tokens get `None`.
    pub fn heads(&self) -> &[Option<usize>] {
        &self.heads[1..]
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels[1..]
    }
}
