//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::collections::HashMap;

use bistparse::autodiff::{Graph, NodeId};
use bistparse::model::{Model, ModelConfig, ParserKind};
use bistparse::transition::{Configuration, Transition, TransitionKind};
use bistparse::treebank::{is_punctuation, ParseTree, Sentence, Token, Vocabulary};

/// Every head vector over `n` tokens that forms a projective tree rooted at 0
/// (ROOT may have several children), by exhaustive enumeration.
pub fn projective_trees(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut heads = vec![0usize; n];
    loop {
        let valid = heads.iter().enumerate().all(|(i, &h)| h != i + 1);
        if valid {
            if let Ok(tree) = ParseTree::unlabeled(heads.clone()) {
                if tree.is_projective() {
                    out.push(heads.clone());
                }
            }
        }
        // odometer over {0..n}^n
        let mut k = 0;
        loop {
            if k == n {
                return out;
            }
            heads[k] += 1;
            if heads[k] <= n {
                break;
            }
            heads[k] = 0;
            k += 1;
        }
    }
}

/// Arc-crossing test written independently of the library: arcs (a, b) and
/// (c, d) with a < b, c < d cross iff a < c < b < d or c < a < d < b.
pub fn crosses_free(heads: &[usize]) -> bool {
    let arcs: Vec<(usize, usize)> = heads
        .iter()
        .enumerate()
        .map(|(i, &h)| (h.min(i + 1), h.max(i + 1)))
        .collect();
    for &(a, b) in &arcs {
        for &(c, d) in &arcs {
            if a < c && c < b && b < d {
                return false;
            }
        }
    }
    true
}

/// All configurations reachable from the initial one over `n` tokens, in
/// breadth-first order, with their successors. Every transition adds one
/// step, so successors always come later in the list.
pub struct ConfigSpace {
    pub configs: Vec<Configuration>,
    pub successors: Vec<Vec<(TransitionKind, usize)>>,
}

impl ConfigSpace {
    pub fn build(n: usize) -> Self {
        let start = Configuration::initial(n).unwrap();
        let mut index: HashMap<Configuration, usize> = HashMap::new();
        let mut configs = vec![start.clone()];
        index.insert(start, 0);
        let mut successors = Vec::new();
        let mut i = 0;
        while i < configs.len() {
            let c = configs[i].clone();
            let mut succ = Vec::new();
            if !c.is_terminal() {
                let legal = c.legal().unwrap();
                for kind in legal.iter() {
                    let t = match kind {
                        TransitionKind::Shift => Transition::Shift,
                        TransitionKind::Left => Transition::Left(0),
                        TransitionKind::Right => Transition::Right(0),
                    };
                    let next = c.applied(t).unwrap();
                    let j = match index.get(&next) {
                        Some(&j) => j,
                        None => {
                            configs.push(next.clone());
                            index.insert(next, configs.len() - 1);
                            configs.len() - 1
                        }
                    };
                    succ.push((kind, j));
                }
            }
            successors.push(succ);
            i += 1;
        }
        ConfigSpace { configs, successors }
    }

    /// Minimal number of gold arcs missed by any completion, per configuration.
    pub fn min_loss(&self, gold: &[usize]) -> Vec<usize> {
        let mut best = vec![usize::MAX; self.configs.len()];
        for i in (0..self.configs.len()).rev() {
            best[i] = if self.successors[i].is_empty() {
                let c = &self.configs[i];
                (1..=gold.len()).filter(|&m| c.head(m) != Some(gold[m - 1])).count()
            } else {
                self.successors[i].iter().map(|&(_, j)| best[j]).min().unwrap()
            };
        }
        best
    }
}

/// Plain `f64` LSTM cell with gates stacked as input, forget, output, candidate.
pub struct PlainLstm<'a> {
    pub w: &'a [f64],
    pub b: &'a [f64],
    pub input: usize,
    pub hidden: usize,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl PlainLstm<'_> {
    /// Final hidden state after reading `xs` from a zero state.
    pub fn last_hidden(&self, xs: &[&[f64]]) -> Vec<f64> {
        let hd = self.hidden;
        let cols = self.input + hd;
        let mut h = vec![0.0; hd];
        let mut c = vec![0.0; hd];
        for x in xs {
            let xh: Vec<f64> = x.iter().chain(h.iter()).copied().collect();
            let z: Vec<f64> = (0..4 * hd)
                .map(|r| self.b[r] + (0..cols).map(|k| self.w[r * cols + k] * xh[k]).sum::<f64>())
                .collect();
            for j in 0..hd {
                let i = sigmoid(z[j]);
                let f = sigmoid(z[hd + j]);
                let o = sigmoid(z[2 * hd + j]);
                let g = z[3 * hd + j].tanh();
                c[j] = f * c[j] + i * g;
                h[j] = o * c[j].tanh();
            }
        }
        h
    }
}

/// Quadratic-time BiLSTM: every position re-runs both directions from scratch.
pub fn naive_bilstm(model: &Model, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let store = model.store();
    let mut layer_in: Vec<Vec<f64>> = inputs.to_vec();
    for layer in model.encoder().bilstm().layers() {
        let cell = |c: &bistparse::encoder::LstmCell| PlainLstm {
            w: store.value(c.weights()).data(),
            b: store.value(c.bias()).data(),
            input: c.input_dim(),
            hidden: c.hidden_dim(),
        };
        let fwd = cell(&layer.forward);
        let bwd = cell(&layer.backward);
        let mut out = Vec::with_capacity(layer_in.len());
        for i in 0..layer_in.len() {
            let prefix: Vec<&[f64]> = layer_in[..=i].iter().map(|v| v.as_slice()).collect();
            let suffix: Vec<&[f64]> = layer_in[i..].iter().rev().map(|v| v.as_slice()).collect();
            let mut v = fwd.last_hidden(&prefix);
            v.extend(bwd.last_hidden(&suffix));
            out.push(v);
        }
        layer_in = out;
    }
    layer_in
}

pub fn tiny_config(parser: ParserKind) -> ModelConfig {
    let mut config = ModelConfig {
        parser,
        mlp_hidden: 5,
        label_hidden: 4,
        ..ModelConfig::default()
    };
    config.encoder.word_dim = 4;
    config.encoder.pos_dim = 3;
    config.encoder.lstm_hidden = 3;
    config.encoder.lstm_output = 3;
    config
}

pub fn sentence(tokens: &[(&str, &str, usize, &str)]) -> Sentence {
    Sentence::new(
        tokens
            .iter()
            .map(|&(form, pos, head, label)| Token::new(form, pos).with_head(head, label))
            .collect(),
    )
}

/// A handful of small projective sentences with three labels.
pub fn toy_corpus() -> Vec<Sentence> {
    vec![
        sentence(&[
            ("the", "DT", 2, "det"),
            ("dog", "NN", 3, "nsubj"),
            ("barked", "VBD", 0, "root"),
            (".", ".", 3, "punct"),
        ]),
        sentence(&[
            ("a", "DT", 2, "det"),
            ("cat", "NN", 3, "nsubj"),
            ("saw", "VBD", 0, "root"),
            ("the", "DT", 5, "det"),
            ("dog", "NN", 3, "dobj"),
        ]),
        sentence(&[("run", "VB", 0, "root")]),
        sentence(&[("birds", "NNS", 2, "nsubj"), ("sing", "VBP", 0, "root")]),
    ]
}

pub fn tiny_model(parser: ParserKind) -> Model {
    Model::new(tiny_config(parser), Vocabulary::build(&toy_corpus()), None).unwrap()
}

/// Worst relative error between analytic and central-difference gradients
/// over every parameter entry, with the number of entries checked.
pub fn gradient_check<F>(model: &mut Model, loss: F) -> (f64, usize)
where
    F: Fn(&Model, &mut Graph) -> NodeId,
{
    let analytic = {
        let mut g = Graph::new(model.store());
        let l = loss(model, &mut g);
        g.backward(l).unwrap()
    };
    let eval = |model: &Model| {
        let mut g = Graph::new(model.store());
        let l = loss(model, &mut g);
        g.scalar(l)
    };
    let eps = 1e-6;
    let ids: Vec<_> = model.store().ids().collect();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for id in ids {
        for k in 0..model.store().value(id).data().len() {
            let orig = model.store().value(id).data()[k];
            model.store_mut().value_mut(id).data_mut()[k] = orig + eps;
            let plus = eval(model);
            model.store_mut().value_mut(id).data_mut()[k] = orig - eps;
            let minus = eval(model);
            model.store_mut().value_mut(id).data_mut()[k] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let exact = analytic.get(id).map_or(0.0, |g| g[k]);
            let err = (numeric - exact).abs() / numeric.abs().max(exact.abs()).max(1e-3);
            worst = worst.max(err);
            checked += 1;
        }
    }
    (worst, checked)
}

/// UAS of attaching every token to its predecessor (token 1 to ROOT),
/// punctuation excluded.
pub fn previous_token_uas(sentences: &[Sentence]) -> f64 {
    let mut scored = 0usize;
    let mut correct = 0usize;
    for s in sentences {
        for (i, t) in s.tokens().iter().enumerate() {
            if is_punctuation(t.pos()) {
                continue;
            }
            scored += 1;
            correct += usize::from(t.head == Some(i));
        }
    }
    correct as f64 / scored as f64
}

/// Cost-following decode: scores are negated oracle costs.
pub fn follow_oracle(gold: &[usize]) -> (Configuration, Vec<Transition>) {
    use bistparse::transition::{greedy_decode, Layout, Oracle};
    let oracle = Oracle::from_heads(gold).unwrap();
    let layout = Layout { num_labels: 1 };
    greedy_decode(gold.len(), layout, |c| {
        let costs = oracle.costs(c)?;
        let score = |k: Option<usize>| k.map_or(f64::NEG_INFINITY, |v| -(v as f64));
        Ok(vec![score(costs.shift), score(costs.left), score(costs.right)])
    })
    .unwrap()
}

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}
