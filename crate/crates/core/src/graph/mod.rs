//! First-order graph parser: arc scores from BiLSTM vector pairs, Eisner
//! decoding and a separate arc labeler.

mod eisner;

use rand::Rng;

pub use eisner::{eisner, ArcScores};

use crate::autodiff::{Graph, NodeId, ParameterStore, Tensor};
use crate::encoder::{ContextVectors, Mlp};
use crate::error::Result;

/// Arc score nodes `[head][modifier]`; entries with `m = 0` or `h = m` are absent.
#[derive(Clone, Debug)]
pub struct ArcScoreMatrix {
    n: usize,
    nodes: Vec<Option<NodeId>>,
}

impl ArcScoreMatrix {
    pub fn sentence_len(&self) -> usize {
        self.n
    }

    pub fn get(&self, head: usize, modifier: usize) -> NodeId {
        self.nodes[head * (self.n + 1) + modifier].expect("arc score defined for h != m, m > 0")
    }

    pub fn values(&self, g: &Graph) -> ArcScores {
        ArcScores::from_fn(self.n, |h, m| g.scalar(self.get(h, m)))
    }

    fn tree_nodes(&self, heads: &[usize]) -> Vec<NodeId> {
        heads.iter().enumerate().map(|(i, &h)| self.get(h, i + 1)).collect()
    }
}

/// Outcome of the structured hinge on one sentence.
#[derive(Clone, Debug)]
pub struct StructureLoss {
    pub loss: NodeId,
    /// Argmax of the (possibly loss-augmented) decoding problem.
    pub predicted: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct GraphScorer {
    arc: Mlp,
    labeler: Option<Mlp>,
    num_labels: usize,
}

impl GraphScorer {
    pub fn declare<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        rng: &mut R,
        vector_width: usize,
        hidden: usize,
        label_hidden: Option<usize>,
        num_labels: usize,
    ) -> Result<Self> {
        let arc = Mlp::declare(store, rng, "mlp.arc", 2 * vector_width, hidden, 1)?;
        let labeler = match label_hidden {
            Some(h) if num_labels > 0 => Some(Mlp::declare(store, rng, "mlp.label", 2 * vector_width, h, num_labels)?),
            _ => None,
        };
        Ok(GraphScorer {
            arc,
            labeler,
            num_labels,
        })
    }

    pub fn arc_mlp(&self) -> &Mlp {
        &self.arc
    }

    pub fn labeler(&self) -> Option<&Mlp> {
        self.labeler.as_ref()
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// Scores every arc with `2(n + 1)` first-layer products: each token's
    /// head-half and modifier-half projections are computed once and summed
    /// per pair.
    pub fn score_arcs(&self, g: &mut Graph, vectors: &ContextVectors) -> Result<ArcScoreMatrix> {
        let n = vectors.len();
        let w = vectors.width();
        let mut as_head = Vec::with_capacity(n + 1);
        let mut as_mod = Vec::with_capacity(n + 1);
        for i in 0..=n {
            as_head.push(self.arc.first_layer_block(g, vectors.get(i), 0)?);
            as_mod.push(self.arc.first_layer_block(g, vectors.get(i), w)?);
        }
        let mut nodes = vec![None; (n + 1) * (n + 1)];
        for h in 0..=n {
            for m in 1..=n {
                if h == m {
                    continue;
                }
                let pre = g.add(as_head[h], as_mod[m])?;
                nodes[h * (n + 1) + m] = Some(self.arc.finish(g, pre)?);
            }
        }
        Ok(ArcScoreMatrix { n, nodes })
    }

    /// Reference scoring that runs the full MLP on every concatenated pair.
    pub fn score_arcs_naive(&self, g: &mut Graph, vectors: &ContextVectors) -> Result<ArcScoreMatrix> {
        let n = vectors.len();
        let mut nodes = vec![None; (n + 1) * (n + 1)];
        for h in 0..=n {
            for m in 1..=n {
                if h == m {
                    continue;
                }
                let x = g.concat(&[vectors.get(h), vectors.get(m)])?;
                nodes[h * (n + 1) + m] = Some(self.arc.forward(g, x)?);
            }
        }
        Ok(ArcScoreMatrix { n, nodes })
    }

    /// `max(0, 1 + score(y') + Δ(y') - score(gold))`, where `y'` is the argmax
    /// of the augmented problem and `Δ` counts its non-gold arcs. Exactly
    /// zero when `y'` is the gold tree.
    pub fn structure_loss(
        &self,
        g: &mut Graph,
        scores: &ArcScoreMatrix,
        gold: &[usize],
        augment: bool,
    ) -> Result<StructureLoss> {
        let plain = scores.values(g);
        let cost = if augment { 1.0 } else { 0.0 };
        let (predicted, _) = eisner(&plain.augmented(gold, cost));
        if predicted == gold {
            let loss = g.constant(Tensor::scalar(0.0));
            return Ok(StructureLoss { loss, predicted });
        }
        let wrong = predicted.iter().zip(gold).filter(|(p, q)| p != q).count();
        let pred_nodes = scores.tree_nodes(&predicted);
        let gold_nodes = scores.tree_nodes(gold);
        let pred_total = g.add_all(&pred_nodes)?;
        let gold_total = g.add_all(&gold_nodes)?;
        let diff = g.sub(pred_total, gold_total)?;
        let margin = g.scalar_add(diff, 1.0 + cost * wrong as f64);
        let loss = g.hinge(margin)?;
        Ok(StructureLoss { loss, predicted })
    }

    fn label_scores(
        &self,
        g: &mut Graph,
        vectors: &ContextVectors,
        head: usize,
        modifier: usize,
    ) -> Result<Option<NodeId>> {
        let Some(labeler) = &self.labeler else {
            return Ok(None);
        };
        let x = g.concat(&[vectors.get(head), vectors.get(modifier)])?;
        Ok(Some(labeler.forward(g, x)?))
    }

    /// Labels each arc of `heads` independently; `None` without a labeler.
    pub fn label_arcs(&self, g: &mut Graph, vectors: &ContextVectors, heads: &[usize]) -> Result<Option<Vec<usize>>> {
        if self.labeler.is_none() {
            return Ok(None);
        }
        let mut labels = Vec::with_capacity(heads.len());
        for (i, &h) in heads.iter().enumerate() {
            let out = self.label_scores(g, vectors, h, i + 1)?.expect("labeler present");
            let values = g.value(out).data();
            let mut best = 0;
            for (l, &v) in values.iter().enumerate() {
                if v > values[best] {
                    best = l;
                }
            }
            labels.push(best);
        }
        Ok(Some(labels))
    }

    /// Sum over gold arcs of `max(0, 1 - score[gold] + max_{other} score)`.
    /// Arcs with unknown gold label are skipped; `None` when nothing is scored.
    pub fn label_loss(
        &self,
        g: &mut Graph,
        vectors: &ContextVectors,
        gold: &[usize],
        gold_labels: &[Option<usize>],
    ) -> Result<Option<NodeId>> {
        if self.labeler.is_none() || self.num_labels < 2 {
            return Ok(None);
        }
        let mut terms = Vec::with_capacity(gold.len());
        for (i, (&h, &label)) in gold.iter().zip(gold_labels).enumerate() {
            let Some(label) = label else { continue };
            let out = self.label_scores(g, vectors, h, i + 1)?.expect("labeler present");
            let others: Vec<usize> = (0..self.num_labels).filter(|&l| l != label).collect();
            let good = g.pick(out, label)?;
            let bad = g.max_over(out, &others)?;
            let diff = g.sub(bad, good)?;
            let margin = g.scalar_add(diff, 1.0);
            terms.push(g.hinge(margin)?);
        }
        if terms.is_empty() {
            return Ok(None);
        }
        Ok(Some(g.add_all(&terms)?))
    }

    /// Unlabeled decoding followed by labeling.
    pub fn parse(&self, g: &mut Graph, vectors: &ContextVectors) -> Result<(Vec<usize>, Option<Vec<usize>>)> {
        let scores = self.score_arcs(g, vectors)?;
        let (heads, _) = eisner(&scores.values(g));
        let labels = self.label_arcs(g, vectors, &heads)?;
        Ok((heads, labels))
    }
}
