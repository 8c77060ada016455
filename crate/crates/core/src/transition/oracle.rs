use crate::error::{Error, Result};
use crate::treebank::{ParseTree, Vocabulary};

use super::system::{Configuration, KindSet, Transition, TransitionKind};

/// Cost of each transition kind; `None` marks an illegal kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Costs {
    pub shift: Option<usize>,
    pub left: Option<usize>,
    pub right: Option<usize>,
}

impl Costs {
    pub fn get(&self, kind: TransitionKind) -> Option<usize> {
        match kind {
            TransitionKind::Shift => self.shift,
            TransitionKind::Left => self.left,
            TransitionKind::Right => self.right,
        }
    }
}

/// Arc-hybrid dynamic oracle for a projective gold tree.
///
/// The cost of a transition is the number of gold arcs it makes unreachable.
#[derive(Clone, Debug)]
pub struct Oracle {
    /// Gold head per token, index 0 unused.
    heads: Vec<usize>,
    labels: Vec<Option<usize>>,
}

impl Oracle {
    /// Unlabeled oracle over gold heads of tokens `1..=n`.
    pub fn from_heads(heads: &[usize]) -> Result<Self> {
        let tree = ParseTree::unlabeled(heads.to_vec())?;
        Self::check_projective(&tree)?;
        let mut all = Vec::with_capacity(heads.len() + 1);
        all.push(0);
        all.extend_from_slice(heads);
        Ok(Oracle {
            heads: all,
            labels: vec![None; heads.len() + 1],
        })
    }

    /// Labeled oracle; gold labels unknown to `vocab` constrain nothing.
    pub fn new(tree: &ParseTree, vocab: &Vocabulary) -> Result<Self> {
        let mut oracle = Self::from_heads(tree.heads())?;
        for m in 1..=tree.len() {
            oracle.labels[m] = tree.label(m).and_then(|l| vocab.label_id(l));
        }
        Ok(oracle)
    }

    fn check_projective(tree: &ParseTree) -> Result<()> {
        if tree.is_projective() {
            Ok(())
        } else {
            Err(Error::Oracle("gold tree is not projective".into()))
        }
    }

    pub fn len(&self) -> usize {
        self.heads.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gold_head(&self, m: usize) -> usize {
        self.heads[m]
    }

    pub fn gold_label(&self, m: usize) -> Option<usize> {
        self.labels[m]
    }

    fn count_buffer_dependents(&self, c: &Configuration, h: usize) -> usize {
        (1..=self.len())
            .filter(|&d| self.heads[d] == h && c.in_buffer(d))
            .count()
    }

    pub fn costs(&self, c: &Configuration) -> Result<Costs> {
        if c.sentence_len() != self.len() {
            return Err(Error::Oracle(format!(
                "configuration covers {} tokens, gold tree {}",
                c.sentence_len(),
                self.len()
            )));
        }
        let legal = c.legal()?;
        let mut costs = Costs::default();
        if let Some(s0) = c.s(0) {
            let lost_deps = self.count_buffer_dependents(c, s0);
            let gh = self.heads[s0];
            if legal.left {
                let b0 = c.b0();
                let to_s1 = usize::from(c.s(1) == Some(gh));
                let to_buffer_rest = usize::from(gh != b0 && c.in_buffer(gh));
                costs.left = Some(lost_deps + to_s1 + to_buffer_rest);
            }
            if legal.right {
                costs.right = Some(lost_deps + usize::from(c.in_buffer(gh)));
            }
        }
        if legal.shift {
            let b0 = c.b0();
            let stack = c.stack();
            let below_top = &stack[..stack.len().saturating_sub(1)];
            let head_in_stack = usize::from(below_top.contains(&self.heads[b0]));
            let deps_in_stack = stack.iter().filter(|&&d| self.heads[d] == b0).count();
            costs.shift = Some(head_in_stack + deps_in_stack);
        }
        Ok(costs)
    }

    /// Whether `t` has zero cost and, when it creates a gold arc, carries the
    /// gold label. Labels of non-gold arcs are unconstrained.
    pub fn is_correct(&self, c: &Configuration, costs: &Costs, t: Transition) -> bool {
        if costs.get(t.kind()) != Some(0) {
            return false;
        }
        let (head, label) = match t {
            Transition::Shift => return true,
            Transition::Left(l) => (c.b0(), l),
            Transition::Right(l) => match c.s(1) {
                Some(s1) => (s1, l),
                None => return false,
            },
        };
        let Some(s0) = c.s(0) else { return false };
        if self.heads[s0] != head {
            return true;
        }
        self.labels[s0].is_none_or(|gold| gold == label)
    }

    /// Legal kinds with zero cost.
    pub fn zero_cost(&self, c: &Configuration) -> Result<KindSet> {
        let costs = self.costs(c)?;
        Ok(KindSet {
            shift: costs.shift == Some(0),
            left: costs.left == Some(0),
            right: costs.right == Some(0),
        })
    }
}
