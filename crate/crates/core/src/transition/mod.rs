//! Greedy arc-hybrid parser over BiLSTM features.

mod features;
mod oracle;
mod system;

use rand::Rng;

pub use features::{feature_positions, features, FeatureMode};
pub use oracle::{Costs, Oracle};
pub use system::{Configuration, KindSet, Transition, TransitionKind, ROOT};

use crate::autodiff::{Gradients, Graph, NodeId, ParameterStore};
use crate::encoder::{ContextVectors, Mlp};
use crate::error::{Error, Result};

/// Score vector layout: `Shift`, then `Left` per label, then `Right` per label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub num_labels: usize,
}

impl Layout {
    pub fn width(self) -> usize {
        1 + 2 * self.num_labels
    }

    pub fn index(self, t: Transition) -> usize {
        match t {
            Transition::Shift => 0,
            Transition::Left(l) => 1 + l,
            Transition::Right(l) => 1 + self.num_labels + l,
        }
    }

    pub fn transition(self, index: usize) -> Transition {
        let l = self.num_labels;
        match index {
            0 => Transition::Shift,
            i if i <= l => Transition::Left(i - 1),
            i => Transition::Right(i - 1 - l),
        }
    }

    /// Every labeled transition whose kind is in `kinds`, in index order.
    pub fn expand(self, kinds: KindSet) -> Vec<Transition> {
        let mut out = Vec::with_capacity(self.width());
        if kinds.shift {
            out.push(Transition::Shift);
        }
        if kinds.left {
            out.extend((0..self.num_labels).map(Transition::Left));
        }
        if kinds.right {
            out.extend((0..self.num_labels).map(Transition::Right));
        }
        out
    }
}

/// Highest-scoring transition among `candidates`; ties go to the lowest index.
pub fn best_of(layout: Layout, scores: &[f64], candidates: &[Transition]) -> Option<Transition> {
    let mut best: Option<(Transition, f64)> = None;
    for &t in candidates {
        let s = scores[layout.index(t)];
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((t, s));
        }
    }
    best.map(|(t, _)| t)
}

/// Runs greedy decoding with an arbitrary scorer until the terminal
/// configuration, returning it with the transitions taken.
pub fn greedy_decode<F>(n: usize, layout: Layout, mut score: F) -> Result<(Configuration, Vec<Transition>)>
where
    F: FnMut(&Configuration) -> Result<Vec<f64>>,
{
    let mut c = Configuration::initial(n)?;
    let mut taken = Vec::with_capacity(2 * n);
    while !c.is_terminal() {
        let scores = score(&c)?;
        let legal = layout.expand(c.legal()?);
        let t = best_of(layout, &scores, &legal).expect("a non-terminal configuration has a legal transition");
        c.apply(t)?;
        taken.push(t);
    }
    Ok((c, taken))
}

/// MLP mapping configuration features to one score per labeled transition.
#[derive(Clone, Debug)]
pub struct TransitionScorer {
    mlp: Mlp,
    mode: FeatureMode,
    layout: Layout,
}

impl TransitionScorer {
    pub fn declare<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        rng: &mut R,
        mode: FeatureMode,
        vector_width: usize,
        hidden: usize,
        num_labels: usize,
    ) -> Result<Self> {
        let layout = Layout { num_labels };
        let mlp = Mlp::declare(
            store,
            rng,
            "mlp.transition",
            mode.num_vectors() * vector_width,
            hidden,
            layout.width(),
        )?;
        Ok(TransitionScorer { mlp, mode, layout })
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn score(&self, g: &mut Graph, c: &Configuration, vectors: &ContextVectors) -> Result<NodeId> {
        let x = features(g, c, vectors, self.mode)?;
        Ok(self.mlp.forward(g, x)?)
    }

    /// Greedy parse; returns the terminal configuration.
    pub fn parse(&self, g: &mut Graph, vectors: &ContextVectors) -> Result<Configuration> {
        let n = vectors.len();
        let (c, _) = greedy_decode(n, self.layout, |c| {
            let s = self.score(g, c, vectors)?;
            Ok(g.value(s).data().to_vec())
        })?;
        Ok(c)
    }
}

/// Exploration settings for training.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exploration {
    /// Follow the model's own prediction when it is wrong.
    pub dynamic_oracle: bool,
    /// Probability of following the best incorrect transition when it is
    /// within `margin` of the best correct one.
    pub p_agg: f64,
    pub margin: f64,
}

impl Default for Exploration {
    fn default() -> Self {
        Exploration {
            dynamic_oracle: true,
            p_agg: 0.1,
            margin: 1.0,
        }
    }
}

/// Loss terms collected over one sentence.
#[derive(Debug)]
pub struct SentenceLoss {
    /// Sum of the nonzero hinge terms, `None` when all were zero.
    pub loss: Option<NodeId>,
    pub value: f64,
    pub nonzero: usize,
    pub transitions: usize,
}

/// Hinge loss at one configuration; returns the loss node and the transition
/// to follow.
#[allow(clippy::too_many_arguments)]
pub fn configuration_loss<R: Rng + ?Sized>(
    g: &mut Graph,
    scorer: &TransitionScorer,
    vectors: &ContextVectors,
    oracle: &Oracle,
    c: &Configuration,
    exploration: &Exploration,
    rng: &mut R,
) -> Result<(Option<NodeId>, Transition)> {
    let layout = scorer.layout;
    let scores = scorer.score(g, c, vectors)?;
    let values = g.value(scores).data().to_vec();
    let costs = oracle.costs(c)?;
    let legal = layout.expand(c.legal()?);
    let (correct, wrong): (Vec<Transition>, Vec<Transition>) =
        legal.iter().partition(|&&t| oracle.is_correct(c, &costs, t));
    if correct.is_empty() {
        return Err(Error::Oracle("no zero-cost transition available".into()));
    }
    let best_good = best_of(layout, &values, &correct).expect("non-empty");
    let Some(best_bad) = best_of(layout, &values, &wrong) else {
        return Ok((None, best_good));
    };
    let good_idx: Vec<usize> = correct.iter().map(|&t| layout.index(t)).collect();
    let bad_idx: Vec<usize> = wrong.iter().map(|&t| layout.index(t)).collect();
    let good = g.max_over(scores, &good_idx)?;
    let bad = g.max_over(scores, &bad_idx)?;
    let diff = g.sub(bad, good)?;
    let shifted = g.scalar_add(diff, 1.0);
    let hinge = g.hinge(shifted)?;
    let loss = (g.scalar(hinge) > 0.0).then_some(hinge);

    let good_score = values[layout.index(best_good)];
    let bad_score = values[layout.index(best_bad)];
    let follow = if !exploration.dynamic_oracle {
        best_good
    } else if best_of(layout, &values, &legal) == Some(best_bad)
        || (good_score - bad_score < exploration.margin && rng.gen::<f64>() < exploration.p_agg)
    {
        best_bad
    } else {
        best_good
    };
    Ok((loss, follow))
}

/// Runs one training pass over a sentence and sums its hinge losses.
pub fn sentence_loss<R: Rng + ?Sized>(
    g: &mut Graph,
    scorer: &TransitionScorer,
    vectors: &ContextVectors,
    oracle: &Oracle,
    exploration: &Exploration,
    rng: &mut R,
) -> Result<SentenceLoss> {
    let mut c = Configuration::initial(oracle.len())?;
    let mut terms = Vec::new();
    let mut transitions = 0;
    while !c.is_terminal() {
        let (loss, t) = configuration_loss(g, scorer, vectors, oracle, &c, exploration, rng)?;
        terms.extend(loss);
        c.apply(t)?;
        transitions += 1;
    }
    let loss = if terms.is_empty() {
        None
    } else {
        Some(g.add_all(&terms)?)
    };
    Ok(SentenceLoss {
        value: loss.map_or(0.0, |l| g.scalar(l)),
        loss,
        nonzero: terms.len(),
        transitions,
    })
}

/// Accumulates gradients across sentences until enough nonzero loss terms
/// were seen to trigger an update.
#[derive(Debug)]
pub struct Batch {
    threshold: usize,
    pending: usize,
    gradients: Gradients,
}

impl Batch {
    pub const DEFAULT_THRESHOLD: usize = 50;

    pub fn new(threshold: usize) -> Self {
        Batch {
            threshold,
            pending: 0,
            gradients: Gradients::default(),
        }
    }

    pub fn pending(&self) -> usize {
        self.pending
    }

    /// Adds a sentence's gradients; returns whether an update is due.
    pub fn push(&mut self, gradients: &Gradients, nonzero: usize) -> bool {
        self.gradients.accumulate(gradients);
        self.pending += nonzero;
        self.pending >= self.threshold
    }

    /// Hands out the accumulated gradients and resets the count.
    pub fn take(&mut self) -> Gradients {
        self.pending = 0;
        std::mem::take(&mut self.gradients)
    }
}

impl Default for Batch {
    fn default() -> Self {
        Batch::new(Self::DEFAULT_THRESHOLD)
    }
}
