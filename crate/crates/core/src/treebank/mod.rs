//! Treebank data: sentences, dependency trees, CoNLL I/O, vocabularies and
//! attachment-score evaluation.

mod conll;
mod eval;
mod vocab;

use std::path::PathBuf;

use thiserror::Error;

pub use conll::{read_conll, read_conll_from, write_conll, write_conll_to};
pub use eval::{evaluate, is_punctuation, Evaluation, PUNCTUATION_TAGS};
pub use vocab::{Vocabulary, ROOT_ID, ROOT_SYMBOL, UNKNOWN_ID, UNKNOWN_SYMBOL};

#[derive(Debug, Error)]
pub enum TreebankError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: sentence rejected: {message}")]
    InvalidSentence {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    /// `index` is 0-based; messages count sentences from 1.
    #[error("sentence {}: {message}", index + 1)]
    Mismatch { index: usize, message: String },
}

/// One token of a CoNLL sentence. Columns that the parsers do not use are
/// kept verbatim so they can be written back out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    pub head: Option<usize>,
    pub label: Option<String>,
    pub deps: String,
    pub misc: String,
}

impl Token {
    pub fn new(form: impl Into<String>, pos: impl Into<String>) -> Self {
        Token {
            form: form.into(),
            lemma: "_".into(),
            upos: pos.into(),
            xpos: "_".into(),
            feats: "_".into(),
            head: None,
            label: None,
            deps: "_".into(),
            misc: "_".into(),
        }
    }

    pub fn with_head(mut self, head: usize, label: impl Into<String>) -> Self {
        self.head = Some(head);
        self.label = Some(label.into());
        self
    }

    /// Part-of-speech tag: column 4, or column 5 when column 4 is empty.
    pub fn pos(&self) -> &str {
        if self.upos == "_" {
            &self.xpos
        } else {
            &self.upos
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Token `i` using 1-based indexing.
    pub fn token(&self, i: usize) -> &Token {
        &self.tokens[i - 1]
    }

    /// The annotated tree, when every token carries a head.
    pub fn gold_tree(&self) -> Option<ParseTree> {
        let heads: Option<Vec<usize>> = self.tokens.iter().map(|t| t.head).collect();
        let labels = self.tokens.iter().map(|t| t.label.clone()).collect();
        ParseTree::new(heads?, labels).ok()
    }
}

/// A dependency tree over tokens `1..=n`; head `0` is the artificial root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseTree {
    heads: Vec<usize>,
    labels: Vec<Option<String>>,
}

impl ParseTree {
    /// Validates that `heads` forms a tree rooted at 0. Several tokens may
    /// attach to the root.
    pub fn new(heads: Vec<usize>, labels: Vec<Option<String>>) -> Result<Self, TreebankError> {
        if heads.len() != labels.len() {
            return Err(TreebankError::InvalidTree(format!(
                "{} heads but {} labels",
                heads.len(),
                labels.len()
            )));
        }
        check_tree(&heads)?;
        Ok(ParseTree { heads, labels })
    }

    pub fn unlabeled(heads: Vec<usize>) -> Result<Self, TreebankError> {
        let labels = vec![None; heads.len()];
        ParseTree::new(heads, labels)
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// Head of token `m` (1-based).
    pub fn head(&self, m: usize) -> usize {
        self.heads[m - 1]
    }

    pub fn label(&self, m: usize) -> Option<&str> {
        self.labels[m - 1].as_deref()
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    pub fn set_label(&mut self, m: usize, label: Option<String>) {
        self.labels[m - 1] = label;
    }

    /// Arcs as `(head, modifier)` pairs, ordered by modifier.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.heads.iter().enumerate().map(|(i, &h)| (h, i + 1))
    }

    /// True iff for every arc `(h, m)` each token strictly between `h` and
    /// `m` is a descendant of `h`.
    pub fn is_projective(&self) -> bool {
        self.arcs().all(|(h, m)| {
            let (lo, hi) = if h < m { (h, m) } else { (m, h) };
            (lo + 1..hi).all(|k| self.dominates(h, k))
        })
    }

    /// Whether `ancestor` lies on the head path of `node` (inclusive).
    pub fn dominates(&self, ancestor: usize, mut node: usize) -> bool {
        loop {
            if node == ancestor {
                return true;
            }
            if node == 0 {
                return false;
            }
            node = self.heads[node - 1];
        }
    }
}

fn check_tree(heads: &[usize]) -> Result<(), TreebankError> {
    let n = heads.len();
    for (i, &h) in heads.iter().enumerate() {
        if h > n {
            return Err(TreebankError::InvalidTree(format!(
                "head {} of token {} out of range",
                h,
                i + 1
            )));
        }
        if h == i + 1 {
            return Err(TreebankError::InvalidTree(format!("token {} heads itself", h)));
        }
    }
    // 0 = unvisited, 1 = on current path, 2 = reaches root
    let mut state = vec![0u8; n + 1];
    state[0] = 2;
    for start in 1..=n {
        let mut path = Vec::new();
        let mut node = start;
        while state[node] == 0 {
            state[node] = 1;
            path.push(node);
            node = heads[node - 1];
        }
        if state[node] == 1 {
            return Err(TreebankError::InvalidTree(format!("cycle through token {}", node)));
        }
        for p in path {
            state[p] = 2;
        }
    }
    Ok(())
}
