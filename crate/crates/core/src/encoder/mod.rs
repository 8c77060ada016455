//! Token embeddings, word dropout and the stacked BiLSTM that turns a
//! sentence into one context vector per token.

mod lstm;
mod mlp;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, RngCore};

pub use lstm::{BiLstm, BiLstmLayer, LstmCell, LstmState};
pub use mlp::Mlp;

use crate::autodiff::{AutodiffError, Graph, Init, NodeId, ParamId, ParameterStore, Shape, Tensor};
use crate::error::{Error, Result};
use crate::treebank::{Sentence, Vocabulary, ROOT_ID, UNKNOWN_ID};

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderConfig {
    pub word_dim: usize,
    pub pos_dim: usize,
    pub lstm_layers: usize,
    pub lstm_hidden: usize,
    pub lstm_output: usize,
    pub word_dropout_alpha: f64,
    /// Width of pre-trained word vectors; 0 when none are used.
    pub external_dim: usize,
    pub use_pos: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            word_dim: 100,
            pos_dim: 25,
            lstm_layers: 2,
            lstm_hidden: 125,
            lstm_output: 125,
            word_dropout_alpha: 0.25,
            external_dim: 0,
            use_pos: true,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("word_dim", self.word_dim),
            ("pos_dim", self.pos_dim),
            ("lstm_layers", self.lstm_layers),
            ("lstm_hidden", self.lstm_hidden),
            ("lstm_output", self.lstm_output),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, d)| *d == 0) {
            return Err(Error::Config(format!("{} must be positive", name)));
        }
        // The LSTM output is its hidden state, so both widths coincide.
        if self.lstm_hidden != self.lstm_output {
            return Err(Error::Config(format!(
                "lstm_hidden ({}) must equal lstm_output ({})",
                self.lstm_hidden, self.lstm_output
            )));
        }
        if !(self.word_dropout_alpha >= 0.0 && self.word_dropout_alpha.is_finite()) {
            return Err(Error::Config("word dropout alpha must be non-negative".into()));
        }
        Ok(())
    }

    /// Width of each input vector `x_i`.
    pub fn input_dim(&self) -> usize {
        self.word_dim + if self.use_pos { self.pos_dim } else { 0 } + self.external_dim
    }

    /// Width of each context vector `v_i`.
    pub fn output_dim(&self) -> usize {
        2 * self.lstm_output
    }
}

/// Probability `α / (#(w) + α)` of replacing a word by the unknown symbol.
pub fn dropout_probability(count: usize, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    alpha / (count as f64 + alpha)
}

/// One word-dropout draw for a word seen `count` times in training.
pub fn drop_word<R: Rng + ?Sized>(rng: &mut R, count: usize, alpha: f64) -> bool {
    rng.gen::<f64>() < dropout_probability(count, alpha)
}

/// Pre-trained word vectors read from a text file with lines `word v1 ... vd`.
#[derive(Clone, Debug, Default)]
pub struct ExternalEmbeddings {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl ExternalEmbeddings {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let reader = BufReader::new(File::open(path).map_err(io)?);
        let mut emb = ExternalEmbeddings::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(io)?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            // word2vec-style "count dim" header
            if idx == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
                continue;
            }
            let bad = |message: String| Error::Embeddings {
                path: path.to_path_buf(),
                line: idx + 1,
                message,
            };
            let values = fields[1..]
                .iter()
                .map(|v| v.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| bad("non-numeric vector component".into()))?;
            if values.is_empty() {
                return Err(bad("missing vector".into()));
            }
            if emb.dim == 0 {
                emb.dim = values.len();
            } else if values.len() != emb.dim {
                return Err(bad(format!("expected {} components, found {}", emb.dim, values.len())));
            }
            emb.vectors.insert(fields[0].to_string(), values);
        }
        if emb.dim == 0 {
            return Err(Error::Embeddings {
                path: path.to_path_buf(),
                line: 0,
                message: "no vectors".into(),
            });
        }
        Ok(emb)
    }

    pub fn from_map(dim: usize, vectors: HashMap<String, Vec<f64>>) -> Self {
        ExternalEmbeddings { dim, vectors }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }
}

/// Context vectors of one sentence: index 0 is ROOT, `1..=n` the tokens.
#[derive(Clone, Debug)]
pub struct ContextVectors {
    vectors: Vec<NodeId>,
    pad: NodeId,
    width: usize,
}

impl ContextVectors {
    pub fn new(vectors: Vec<NodeId>, pad: NodeId, width: usize) -> Self {
        ContextVectors { vectors, pad, width }
    }

    /// Number of tokens, excluding ROOT.
    pub fn len(&self) -> usize {
        self.vectors.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> NodeId {
        self.vectors[i]
    }

    /// Vector of position `i`, or the shared pad vector when absent.
    pub fn get_or_pad(&self, i: Option<usize>) -> NodeId {
        i.map_or(self.pad, |i| self.vectors[i])
    }

    pub fn pad(&self) -> NodeId {
        self.pad
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

/// Word, POS and optional external embeddings feeding a stacked BiLSTM.
#[derive(Clone, Debug)]
pub struct Encoder {
    config: EncoderConfig,
    word_emb: ParamId,
    pos_emb: Option<ParamId>,
    ext_emb: Option<ParamId>,
    bilstm: BiLstm,
    pad: ParamId,
}

impl Encoder {
    /// Registers all encoder parameters. External vectors, when given, seed
    /// the rows of known words; other rows start at zero.
    pub fn declare<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        rng: &mut R,
        config: &EncoderConfig,
        vocab: &Vocabulary,
        external: Option<&ExternalEmbeddings>,
    ) -> Result<Self> {
        config.validate()?;
        let emb_init = Init::Uniform(0.1);
        let word_emb = store.add(
            "emb.word",
            emb_init.sample(Shape::Matrix(vocab.num_words(), config.word_dim), rng),
        )?;
        let pos_emb = if config.use_pos {
            Some(store.add(
                "emb.pos",
                emb_init.sample(Shape::Matrix(vocab.num_pos(), config.pos_dim), rng),
            )?)
        } else {
            None
        };
        let ext_emb = if config.external_dim > 0 {
            let mut table = Tensor::zeros(Shape::Matrix(vocab.num_words(), config.external_dim));
            if let Some(ext) = external {
                if ext.dim() != config.external_dim {
                    return Err(Error::Config(format!(
                        "external vectors have {} components, configuration expects {}",
                        ext.dim(),
                        config.external_dim
                    )));
                }
                for (id, (word, _)) in vocab.words_with_counts().enumerate() {
                    if let Some(v) = ext.get(word) {
                        table.row_mut(id + 2).copy_from_slice(v);
                    }
                }
            }
            Some(store.add("emb.ext", table)?)
        } else {
            None
        };
        let bilstm = BiLstm::declare(store, rng, config.input_dim(), config.lstm_hidden, config.lstm_layers)?;
        let pad = store.add("pad", emb_init.sample(Shape::Vector(config.output_dim()), rng))?;
        Ok(Encoder {
            config: config.clone(),
            word_emb,
            pos_emb,
            ext_emb,
            bilstm,
            pad,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn bilstm(&self) -> &BiLstm {
        &self.bilstm
    }

    pub fn output_dim(&self) -> usize {
        self.config.output_dim()
    }

    /// Input vectors `x_1..x_n` followed by the ROOT input at position `n + 1`.
    ///
    /// With a dropout RNG, each word is replaced by the unknown symbol with
    /// probability `α / (#(w) + α)`; a replaced word also loses its external
    /// vector with probability 0.5.
    pub fn embed(
        &self,
        g: &mut Graph,
        vocab: &Vocabulary,
        sentence: &Sentence,
        mut dropout: Option<&mut dyn RngCore>,
    ) -> Result<Vec<NodeId>, AutodiffError> {
        let mut xs = Vec::with_capacity(sentence.len() + 1);
        for token in sentence.tokens() {
            let word = vocab.word_id(&token.form);
            let mut shown = word;
            let mut ext_word = (word != UNKNOWN_ID).then_some(word);
            if let Some(rng) = dropout.as_deref_mut() {
                if word != UNKNOWN_ID && drop_word(rng, vocab.word_count(word), self.config.word_dropout_alpha) {
                    shown = UNKNOWN_ID;
                    if rng.gen_bool(0.5) {
                        ext_word = None;
                    }
                }
            }
            xs.push(self.input_vector(g, shown, vocab.pos_id(token.pos()), ext_word)?);
        }
        xs.push(self.input_vector(g, ROOT_ID, ROOT_ID, Some(ROOT_ID))?);
        Ok(xs)
    }

    fn input_vector(
        &self,
        g: &mut Graph,
        word: usize,
        pos: usize,
        ext_word: Option<usize>,
    ) -> Result<NodeId, AutodiffError> {
        let mut parts = vec![g.lookup(self.word_emb, word)?];
        if let Some(pos_emb) = self.pos_emb {
            parts.push(g.lookup(pos_emb, pos)?);
        }
        if let Some(ext_emb) = self.ext_emb {
            parts.push(match ext_word {
                Some(w) => g.lookup(ext_emb, w)?,
                None => g.constant(Tensor::zeros(Shape::Vector(self.config.external_dim))),
            });
        }
        if parts.len() == 1 {
            return Ok(parts[0]);
        }
        g.concat(&parts)
    }

    /// Runs the BiLSTM over `x_1..x_n, x_ROOT` and maps the ROOT output to index 0.
    pub fn encode(&self, g: &mut Graph, xs: &[NodeId]) -> Result<ContextVectors, AutodiffError> {
        if xs.len() < 2 {
            return Err(AutodiffError::Empty("encode"));
        }
        let mut outputs = self.bilstm.run(g, xs)?;
        let root = outputs.pop().expect("ROOT output");
        let mut vectors = Vec::with_capacity(outputs.len() + 1);
        vectors.push(root);
        vectors.extend(outputs);
        let pad = g.param(self.pad);
        Ok(ContextVectors::new(vectors, pad, self.output_dim()))
    }

    /// `embed` followed by `encode`.
    pub fn run(
        &self,
        g: &mut Graph,
        vocab: &Vocabulary,
        sentence: &Sentence,
        dropout: Option<&mut dyn RngCore>,
    ) -> Result<ContextVectors, AutodiffError> {
        let xs = self.embed(g, vocab, sentence, dropout)?;
        self.encode(g, &xs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::Token;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sentence(words: &[&str]) -> Sentence {
        Sentence::new(words.iter().map(|w| Token::new(*w, "NN")).collect())
    }

    fn small_config() -> EncoderConfig {
        EncoderConfig {
            word_dim: 3,
            pos_dim: 2,
            lstm_layers: 2,
            lstm_hidden: 4,
            lstm_output: 4,
            ..EncoderConfig::default()
        }
    }

    #[test]
    fn default_dimensions() {
        let c = EncoderConfig::default();
        assert_eq!(c.input_dim(), 125);
        assert_eq!(c.output_dim(), 250);
    }

    #[test]
    fn dropout_probability_formula() {
        assert!((dropout_probability(3, 0.25) - 1.0 / 13.0).abs() < 1e-15);
        assert_eq!(dropout_probability(3, 0.0), 0.0);
    }

    #[test]
    fn widths_with_table_dims() {
        let vocab = Vocabulary::build(&[sentence(&["a", "b"])]);
        let mut store = ParameterStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let enc = Encoder::declare(&mut store, &mut rng, &EncoderConfig::default(), &vocab, None).unwrap();
        let mut g = Graph::new(&store);
        let s = sentence(&["a", "b", "zzz"]);
        let xs = enc.embed(&mut g, &vocab, &s, None).unwrap();
        assert_eq!(xs.len(), 4);
        assert!(xs.iter().all(|&x| g.shape(x) == Shape::Vector(125)));
        let v = enc.encode(&mut g, &xs).unwrap();
        assert_eq!(v.len(), 3);
        for i in 0..=3 {
            assert_eq!(g.shape(v.get(i)), Shape::Vector(250));
        }
        assert_eq!(g.shape(v.pad()), Shape::Vector(250));
    }

    #[test]
    fn no_replacement_outside_training() {
        let vocab = Vocabulary::build(&[sentence(&["a"])]);
        let mut store = ParameterStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let enc = Encoder::declare(&mut store, &mut rng, &small_config(), &vocab, None).unwrap();
        let s = sentence(&["a"]);
        let mut g = Graph::new(&store);
        let a = enc.embed(&mut g, &vocab, &s, None).unwrap();
        let word_row = store
            .value(store.id("emb.word").unwrap())
            .row(vocab.word_id("a"))
            .to_vec();
        assert_eq!(&g.value(a[0]).data()[..3], word_row.as_slice());
    }

    #[test]
    fn external_vectors_seed_known_rows() {
        let vocab = Vocabulary::build(&[sentence(&["a", "b"])]);
        let ext = ExternalEmbeddings::from_map(2, [("b".to_string(), vec![0.5, -0.5])].into());
        let config = EncoderConfig {
            external_dim: 2,
            ..small_config()
        };
        let mut store = ParameterStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let enc = Encoder::declare(&mut store, &mut rng, &config, &vocab, Some(&ext)).unwrap();
        let mut g = Graph::new(&store);
        let xs = enc.embed(&mut g, &vocab, &sentence(&["b", "a", "oov"]), None).unwrap();
        assert_eq!(&g.value(xs[0]).data()[5..], &[0.5, -0.5]);
        assert_eq!(&g.value(xs[1]).data()[5..], &[0.0, 0.0]);
        assert_eq!(&g.value(xs[2]).data()[5..], &[0.0, 0.0]);
    }

    #[test]
    fn every_context_vector_sees_every_input() {
        let vocab = Vocabulary::build(&[sentence(&["a", "b", "c", "d"])]);
        let mut store = ParameterStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let enc = Encoder::declare(&mut store, &mut rng, &small_config(), &vocab, None).unwrap();
        let s = sentence(&["a", "b", "c", "d"]);
        let base = {
            let mut g = Graph::new(&store);
            let v = enc.run(&mut g, &vocab, &s, None).unwrap();
            (0..=4).map(|i| g.value(v.get(i)).clone()).collect::<Vec<_>>()
        };
        for j in 0..4 {
            let mut g = Graph::new(&store);
            let mut xs = enc.embed(&mut g, &vocab, &s, None).unwrap();
            let mut bumped = g.value(xs[j]).clone();
            bumped.data_mut()[0] += 0.1;
            xs[j] = g.constant(bumped);
            let v = enc.encode(&mut g, &xs).unwrap();
            for (i, before) in base.iter().enumerate() {
                assert_ne!(g.value(v.get(i)), before, "v_{} ignores x_{}", i, j + 1);
            }
        }
    }
}
