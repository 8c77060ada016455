//! Parser models and their on-disk format.
//!
//! A model file is a UTF-8 header of `key value` lines, the vocabulary and an
//! `end` line, followed by a binary payload holding every parameter tensor in
//! declaration order: name length (`u32`), name bytes, rank (`u8`), dims
//! (`u64` each) and values (`f64`), all little-endian.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::autodiff::{Graph, ParameterStore, Shape};
use crate::encoder::{Encoder, EncoderConfig, ExternalEmbeddings};
use crate::error::{Error, Result};
use crate::graph::GraphScorer;
use crate::transition::{FeatureMode, TransitionScorer};
use crate::treebank::{ParseTree, Sentence, Vocabulary};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "bistparse-model";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ParserKind {
    #[default]
    Transition,
    Graph,
}

impl ParserKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParserKind::Transition => "transition",
            ParserKind::Graph => "graph",
        }
    }
}

impl fmt::Display for ParserKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParserKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "transition" => Ok(ParserKind::Transition),
            "graph" => Ok(ParserKind::Graph),
            other => Err(format!("unknown parser kind '{}'", other)),
        }
    }
}

/// Architecture and training hyperparameters of a model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub parser: ParserKind,
    pub encoder: EncoderConfig,
    /// Transition parser only.
    pub features: FeatureMode,
    pub mlp_hidden: usize,
    /// Graph parser only; hidden width of the arc labeler.
    pub label_hidden: usize,
    pub use_labeler: bool,
    pub loss_augmented: bool,
    pub dynamic_oracle: bool,
    pub p_agg: f64,
    pub keep_nonprojective: bool,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            parser: ParserKind::Transition,
            encoder: EncoderConfig::default(),
            features: FeatureMode::Simple,
            mlp_hidden: 100,
            label_hidden: 100,
            use_labeler: true,
            loss_augmented: true,
            dynamic_oracle: true,
            p_agg: 0.1,
            keep_nonprojective: false,
            epochs: 30,
            seed: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        if self.mlp_hidden == 0 || self.label_hidden == 0 {
            return Err(Error::Config("MLP hidden widths must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.p_agg) {
            return Err(Error::Config(format!("p_agg {} is not a probability", self.p_agg)));
        }
        Ok(())
    }

    fn header_fields(&self) -> Vec<(&'static str, String)> {
        let e = &self.encoder;
        vec![
            ("parser", self.parser.to_string()),
            ("features", self.features.to_string()),
            ("word_dim", e.word_dim.to_string()),
            ("pos_dim", e.pos_dim.to_string()),
            ("lstm_layers", e.lstm_layers.to_string()),
            ("lstm_hidden", e.lstm_hidden.to_string()),
            ("lstm_output", e.lstm_output.to_string()),
            ("word_dropout_alpha", e.word_dropout_alpha.to_string()),
            ("external_dim", e.external_dim.to_string()),
            ("use_pos", e.use_pos.to_string()),
            ("mlp_hidden", self.mlp_hidden.to_string()),
            ("label_hidden", self.label_hidden.to_string()),
            ("use_labeler", self.use_labeler.to_string()),
            ("loss_augmented", self.loss_augmented.to_string()),
            ("dynamic_oracle", self.dynamic_oracle.to_string()),
            ("p_agg", self.p_agg.to_string()),
            ("keep_nonprojective", self.keep_nonprojective.to_string()),
            ("epochs", self.epochs.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    fn set_field(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::ModelFormat(format!("bad value '{}' for '{}'", value, key)))
        }
        let e = &mut self.encoder;
        match key {
            "parser" => self.parser = value.parse().map_err(Error::ModelFormat)?,
            "features" => self.features = value.parse().map_err(Error::ModelFormat)?,
            "word_dim" => e.word_dim = parse(key, value)?,
            "pos_dim" => e.pos_dim = parse(key, value)?,
            "lstm_layers" => e.lstm_layers = parse(key, value)?,
            "lstm_hidden" => e.lstm_hidden = parse(key, value)?,
            "lstm_output" => e.lstm_output = parse(key, value)?,
            "word_dropout_alpha" => e.word_dropout_alpha = parse(key, value)?,
            "external_dim" => e.external_dim = parse(key, value)?,
            "use_pos" => e.use_pos = parse(key, value)?,
            "mlp_hidden" => self.mlp_hidden = parse(key, value)?,
            "label_hidden" => self.label_hidden = parse(key, value)?,
            "use_labeler" => self.use_labeler = parse(key, value)?,
            "loss_augmented" => self.loss_augmented = parse(key, value)?,
            "dynamic_oracle" => self.dynamic_oracle = parse(key, value)?,
            "p_agg" => self.p_agg = parse(key, value)?,
            "keep_nonprojective" => self.keep_nonprojective = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            other => return Err(Error::ModelFormat(format!("unknown header key '{}'", other))),
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub enum Scorer {
    Transition(TransitionScorer),
    Graph(GraphScorer),
}

/// Encoder plus parser-specific scoring network over one parameter store.
#[derive(Clone, Debug)]
pub struct Model {
    config: ModelConfig,
    vocab: Vocabulary,
    store: ParameterStore,
    encoder: Encoder,
    scorer: Scorer,
}

impl Model {
    /// Declares all parameters, initialized from `config.seed`.
    pub fn new(config: ModelConfig, vocab: Vocabulary, external: Option<&ExternalEmbeddings>) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParameterStore::new();
        let encoder = Encoder::declare(&mut store, &mut rng, &config.encoder, &vocab, external)?;
        let width = encoder.output_dim();
        let scorer = match config.parser {
            ParserKind::Transition => Scorer::Transition(TransitionScorer::declare(
                &mut store,
                &mut rng,
                config.features,
                width,
                config.mlp_hidden,
                vocab.num_labels().max(1),
            )?),
            ParserKind::Graph => Scorer::Graph(GraphScorer::declare(
                &mut store,
                &mut rng,
                width,
                config.mlp_hidden,
                config.use_labeler.then_some(config.label_hidden),
                vocab.num_labels(),
            )?),
        };
        Ok(Model {
            config,
            vocab,
            store,
            encoder,
            scorer,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn store(&self) -> &ParameterStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParameterStore {
        &mut self.store
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn scorer(&self) -> &Scorer {
        &self.scorer
    }

    fn label_name(&self, id: Option<usize>) -> Option<String> {
        id.filter(|&l| l < self.vocab.num_labels())
            .map(|l| self.vocab.label(l).to_string())
    }

    /// Predicts a labeled tree; POS tags are read from the sentence.
    pub fn parse(&self, sentence: &Sentence) -> Result<ParseTree> {
        if sentence.is_empty() {
            return Err(Error::Config("cannot parse an empty sentence".into()));
        }
        let mut g = Graph::new(&self.store);
        let vectors = self.encoder.run(&mut g, &self.vocab, sentence, None)?;
        let (heads, labels): (Vec<usize>, Vec<Option<usize>>) = match &self.scorer {
            Scorer::Transition(t) => {
                let c = t.parse(&mut g, &vectors)?;
                let heads = c
                    .heads()
                    .iter()
                    .map(|h| h.expect("terminal configuration attaches every token"));
                (heads.collect(), c.labels().to_vec())
            }
            Scorer::Graph(s) => {
                let (heads, labels) = s.parse(&mut g, &vectors)?;
                let labels = match labels {
                    Some(ls) => ls.into_iter().map(Some).collect(),
                    None => vec![None; heads.len()],
                };
                (heads, labels)
            }
        };
        let labels = labels.into_iter().map(|l| self.label_name(l)).collect();
        Ok(ParseTree::new(heads, labels)?)
    }

    /// Parses sentences in parallel; output order follows the input.
    pub fn parse_all(&self, sentences: &[Sentence]) -> Result<Vec<ParseTree>> {
        sentences.par_iter().map(|s| self.parse(s)).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{}", MAGIC)?;
        writeln!(w, "version {}", FORMAT_VERSION)?;
        for (key, value) in self.config.header_fields() {
            writeln!(w, "{} {}", key, value)?;
        }
        let words: Vec<_> = self.vocab.words_with_counts().collect();
        writeln!(w, "words {}", words.len())?;
        for (word, count) in words {
            writeln!(w, "{}\t{}", count, word)?;
        }
        writeln!(w, "pos {}", self.vocab.pos_tags().len())?;
        for tag in self.vocab.pos_tags() {
            writeln!(w, "{}", tag)?;
        }
        writeln!(w, "labels {}", self.vocab.num_labels())?;
        for label in self.vocab.labels() {
            writeln!(w, "{}", label)?;
        }
        writeln!(w, "tensors {}", self.store.len())?;
        writeln!(w, "end")?;
        for (_, name, tensor) in self.store.iter() {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            let dims = tensor.shape().dims();
            w.write_all(&[dims.len() as u8])?;
            for d in dims {
                w.write_all(&(d as u64).to_le_bytes())?;
            }
            for v in tensor.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_from(&mut BufReader::new(file))
    }

    pub fn read_from<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut header = HeaderReader { r, line: String::new() };
        if header.next()? != MAGIC {
            return Err(Error::ModelFormat("not a model file".into()));
        }
        let version: u32 = header.field("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format version {} (expected {})",
                version, FORMAT_VERSION
            )));
        }
        let mut config = ModelConfig::default();
        let num_words = loop {
            let line = header.next()?.to_string();
            let (key, value) = line
                .split_once(' ')
                .ok_or_else(|| Error::ModelFormat(format!("malformed header line '{}'", line)))?;
            if key == "words" {
                break parse_count(key, value)?;
            }
            config.set_field(key, value)?;
        };
        let mut words = Vec::with_capacity(num_words);
        for _ in 0..num_words {
            let line = header.next()?;
            let (count, word) = line
                .split_once('\t')
                .ok_or_else(|| Error::ModelFormat(format!("malformed word entry '{}'", line)))?;
            let count = parse_count("word count", count)?;
            words.push((word.to_string(), count));
        }
        let num_pos: usize = header.field("pos")?;
        let pos = (0..num_pos)
            .map(|_| header.next().map(str::to_string))
            .collect::<Result<Vec<_>>>()?;
        let num_labels: usize = header.field("labels")?;
        let labels = (0..num_labels)
            .map(|_| header.next().map(str::to_string))
            .collect::<Result<Vec<_>>>()?;
        let num_tensors: usize = header.field("tensors")?;
        if header.next()? != "end" {
            return Err(Error::ModelFormat("header is not terminated by 'end'".into()));
        }

        let vocab = Vocabulary::from_parts(words, pos, labels);
        let mut model = Model::new(config, vocab, None)?;
        if num_tensors != model.store.len() {
            return Err(Error::ModelFormat(format!(
                "header lists {} tensors, configuration declares {}",
                num_tensors,
                model.store.len()
            )));
        }
        let ids: Vec<_> = model.store.ids().collect();
        for id in ids {
            let expected = model.store.name(id).to_string();
            let missing = |_| Error::ModelFormat(format!("missing or truncated tensor '{}'", expected));
            let name_len = read_u32(r).map_err(missing)? as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name).map_err(missing)?;
            if name != expected.as_bytes() {
                return Err(Error::ModelFormat(format!(
                    "expected tensor '{}', found '{}'",
                    expected,
                    String::from_utf8_lossy(&name)
                )));
            }
            let mut rank = [0u8; 1];
            r.read_exact(&mut rank).map_err(missing)?;
            let dims = (0..rank[0])
                .map(|_| read_u64(r).map(|d| d as usize))
                .collect::<io::Result<Vec<_>>>()
                .map_err(missing)?;
            let shape = model.store.value(id).shape();
            if Shape::from_dims(&dims) != Some(shape) {
                return Err(Error::ModelFormat(format!(
                    "tensor '{}' has dims {:?}, expected {}",
                    expected, dims, shape
                )));
            }
            let data = model.store.value_mut(id).data_mut();
            let mut buf = [0u8; 8];
            for v in data.iter_mut() {
                r.read_exact(&mut buf).map_err(missing)?;
                *v = f64::from_le_bytes(buf);
            }
            if !model.store.value(id).is_finite() {
                return Err(Error::ModelFormat(format!(
                    "tensor '{}' holds non-finite values",
                    expected
                )));
            }
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest).map_err(|e| Error::ModelFormat(e.to_string()))? != 0 {
            return Err(Error::ModelFormat("trailing bytes after the last tensor".into()));
        }
        Ok(model)
    }
}

struct HeaderReader<'a, R> {
    r: &'a mut R,
    line: String,
}

impl<R: BufRead> HeaderReader<'_, R> {
    fn next(&mut self) -> Result<&str> {
        self.line.clear();
        let read = self
            .r
            .read_line(&mut self.line)
            .map_err(|e| Error::ModelFormat(format!("unreadable header: {}", e)))?;
        if read == 0 || !self.line.ends_with('\n') {
            return Err(Error::ModelFormat("header ends prematurely".into()));
        }
        Ok(self.line.trim_end_matches('\n'))
    }

    fn field<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let line = self.next()?.to_string();
        match line.split_once(' ') {
            Some((k, v)) if k == key => v
                .parse()
                .map_err(|_| Error::ModelFormat(format!("bad value '{}' for '{}'", v, key))),
            _ => Err(Error::ModelFormat(format!("expected '{}', found '{}'", key, line))),
        }
    }
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::ModelFormat(format!("bad value '{}' for '{}'", value, key)))
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}
