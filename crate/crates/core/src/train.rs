//! Epoch loop shared by both parsers.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{AdamConfig, Gradients, Graph, ParameterStore};
use crate::error::Result;
use crate::model::{Model, Scorer};
use crate::transition::{self, Batch, Exploration, Oracle};
use crate::treebank::{evaluate, Evaluation, ParseTree, Sentence};

/// Separates the training stream from the initialization stream.
const TRAIN_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Debug)]
pub struct EpochReport {
    pub epoch: usize,
    pub loss: f64,
    pub updates: usize,
    pub dev: Option<Evaluation>,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub epochs: Vec<EpochReport>,
    /// Epoch whose parameters were kept; `None` without dev data, in which
    /// case the last epoch is kept.
    pub best_epoch: Option<usize>,
    /// Training sentences left out for lacking a usable gold tree.
    pub skipped: usize,
}

/// A training sentence with its gold tree.
struct Example<'a> {
    sentence: &'a Sentence,
    tree: ParseTree,
}

fn examples<'a>(model: &Model, train: &'a [Sentence]) -> (Vec<Example<'a>>, usize) {
    let allow_nonprojective = matches!(model.scorer(), Scorer::Graph(_)) && model.config().keep_nonprojective;
    let mut kept = Vec::with_capacity(train.len());
    for sentence in train {
        match sentence.gold_tree() {
            Some(tree) if !sentence.is_empty() && (allow_nonprojective || tree.is_projective()) => {
                kept.push(Example { sentence, tree })
            }
            _ => {}
        }
    }
    let skipped = train.len() - kept.len();
    (kept, skipped)
}

/// Trains `model` in place for `config().epochs` epochs and keeps the
/// parameters of the epoch with the best dev UAS. Equal UAS is decided by
/// LAS, then by the earlier epoch.
pub fn train<F>(model: &mut Model, train: &[Sentence], dev: &[Sentence], mut on_epoch: F) -> Result<TrainSummary>
where
    F: FnMut(&EpochReport),
{
    let (examples, skipped) = examples(model, train);
    let mut rng = ChaCha8Rng::seed_from_u64(model.config().seed ^ TRAIN_STREAM);
    let adam = AdamConfig::default();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut batch = Batch::default();
    let mut best: Option<((f64, f64), usize, ParameterStore)> = None;
    let mut reports = Vec::with_capacity(model.config().epochs);

    for epoch in 1..=model.config().epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        let mut updates = 0;
        for &i in &order {
            let ex = &examples[i];
            let step = sentence_step(model, ex, &mut rng)?;
            loss += step.value;
            let Some((grads, nonzero)) = step.gradients else {
                continue;
            };
            match model.scorer() {
                Scorer::Transition(_) => {
                    if batch.push(&grads, nonzero) {
                        model.store_mut().adam_step(&batch.take(), &adam)?;
                        updates += 1;
                    }
                }
                Scorer::Graph(_) => {
                    model.store_mut().adam_step(&grads, &adam)?;
                    updates += 1;
                }
            }
        }
        if batch.pending() > 0 {
            model.store_mut().adam_step(&batch.take(), &adam)?;
            updates += 1;
        }

        let dev_eval = if dev.is_empty() {
            None
        } else {
            let predicted = model.parse_all(dev)?;
            Some(evaluate(dev, &predicted, true)?)
        };
        if let Some(eval) = &dev_eval {
            let key = (eval.uas(), eval.las());
            if best.as_ref().is_none_or(|(b, _, _)| key > *b) {
                best = Some((key, epoch, model.store().clone()));
            }
        }
        let report = EpochReport {
            epoch,
            loss,
            updates,
            dev: dev_eval,
            seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&report);
        reports.push(report);
    }

    let best_epoch = best.map(|(_, epoch, store)| {
        *model.store_mut() = store;
        epoch
    });
    Ok(TrainSummary {
        epochs: reports,
        best_epoch,
        skipped,
    })
}

struct Step {
    value: f64,
    gradients: Option<(Gradients, usize)>,
}

fn sentence_step(model: &Model, ex: &Example, rng: &mut ChaCha8Rng) -> Result<Step> {
    let mut g = Graph::new(model.store());
    let vectors = model
        .encoder()
        .run(&mut g, model.vocab(), ex.sentence, Some(rng as &mut dyn RngCore))?;
    let config = model.config();
    let (loss, nonzero) = match model.scorer() {
        Scorer::Transition(scorer) => {
            let oracle = Oracle::new(&ex.tree, model.vocab())?;
            let exploration = Exploration {
                dynamic_oracle: config.dynamic_oracle,
                p_agg: if config.dynamic_oracle { config.p_agg } else { 0.0 },
                ..Exploration::default()
            };
            let out = transition::sentence_loss(&mut g, scorer, &vectors, &oracle, &exploration, rng)?;
            (out.loss, out.nonzero)
        }
        Scorer::Graph(scorer) => {
            let gold = ex.tree.heads();
            let scores = scorer.score_arcs(&mut g, &vectors)?;
            let structure = scorer.structure_loss(&mut g, &scores, gold, config.loss_augmented)?;
            let labels: Vec<Option<usize>> = ex
                .tree
                .labels()
                .iter()
                .map(|l| l.as_deref().and_then(|l| model.vocab().label_id(l)))
                .collect();
            let label = scorer.label_loss(&mut g, &vectors, gold, &labels)?;
            let total = match label {
                Some(l) => g.add(structure.loss, l)?,
                None => structure.loss,
            };
            let terms = usize::from(g.scalar(total) > 0.0);
            ((terms > 0).then_some(total), terms)
        }
    };
    let Some(loss) = loss else {
        return Ok(Step {
            value: 0.0,
            gradients: None,
        });
    };
    Ok(Step {
        value: g.scalar(loss),
        gradients: Some((g.backward(loss)?, nonzero)),
    })
}
