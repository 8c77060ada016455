use std::collections::HashMap;

use super::Sentence;

pub const UNKNOWN_SYMBOL: &str = "*UNK*";
pub const ROOT_SYMBOL: &str = "*ROOT*";
/// Reserved id of the unknown symbol in the word and POS tables.
pub const UNKNOWN_ID: usize = 0;
/// Reserved id of the root symbol in the word and POS tables.
pub const ROOT_ID: usize = 1;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Interner {
    symbols: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> usize {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.symbols.len();
        self.symbols.push(s.to_string());
        self.ids.insert(s.to_string(), id);
        id
    }

    fn get(&self, s: &str) -> Option<usize> {
        self.ids.get(s).copied()
    }
}

/// Symbol tables for words, POS tags and dependency labels.
///
/// Words and tags reserve [`UNKNOWN_ID`] and [`ROOT_ID`]; ids of ordinary
/// symbols follow in order of first appearance in the training corpus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Interner,
    word_counts: Vec<usize>,
    pos: Interner,
    labels: Interner,
}

impl Vocabulary {
    fn empty() -> Self {
        let mut words = Interner::default();
        let mut pos = Interner::default();
        for table in [&mut words, &mut pos] {
            table.intern(UNKNOWN_SYMBOL);
            table.intern(ROOT_SYMBOL);
        }
        Vocabulary {
            words,
            word_counts: vec![0, 0],
            pos,
            labels: Interner::default(),
        }
    }

    pub fn build(train: &[Sentence]) -> Self {
        let mut vocab = Vocabulary::empty();
        for token in train.iter().flat_map(|s| s.tokens()) {
            let id = vocab.words.intern(&token.form);
            if id == vocab.word_counts.len() {
                vocab.word_counts.push(0);
            }
            vocab.word_counts[id] += 1;
            vocab.pos.intern(token.pos());
            if let Some(label) = &token.label {
                vocab.labels.intern(label);
            }
        }
        vocab
    }

    /// Rebuilds a vocabulary from its serialized parts. `words` excludes the
    /// two reserved symbols, as do `pos`.
    pub fn from_parts(words: Vec<(String, usize)>, pos: Vec<String>, labels: Vec<String>) -> Self {
        let mut vocab = Vocabulary::empty();
        for (w, count) in words {
            vocab.words.intern(&w);
            vocab.word_counts.push(count);
        }
        for p in pos {
            vocab.pos.intern(&p);
        }
        for l in labels {
            vocab.labels.intern(&l);
        }
        vocab
    }

    /// Ordinary words with their training counts, in id order.
    pub fn words_with_counts(&self) -> impl Iterator<Item = (&str, usize)> {
        self.words.symbols[2..]
            .iter()
            .zip(&self.word_counts[2..])
            .map(|(w, &c)| (w.as_str(), c))
    }

    /// Ordinary POS tags in id order.
    pub fn pos_tags(&self) -> &[String] {
        &self.pos.symbols[2..]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels.symbols
    }

    /// Word id; unseen words map to [`UNKNOWN_ID`].
    pub fn word_id(&self, form: &str) -> usize {
        self.words.get(form).unwrap_or(UNKNOWN_ID)
    }

    pub fn pos_id(&self, pos: &str) -> usize {
        self.pos.get(pos).unwrap_or(UNKNOWN_ID)
    }

    pub fn label_id(&self, label: &str) -> Option<usize> {
        self.labels.get(label)
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels.symbols[id]
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words.symbols[id]
    }

    /// Training frequency `#(w)` of a word id.
    pub fn word_count(&self, id: usize) -> usize {
        self.word_counts[id]
    }

    /// Table sizes including reserved symbols.
    pub fn num_words(&self) -> usize {
        self.words.symbols.len()
    }

    pub fn num_pos(&self) -> usize {
        self.pos.symbols.len()
    }

    pub fn num_labels(&self) -> usize {
        self.labels.symbols.len()
    }
}
