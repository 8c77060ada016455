use super::{ParseTree, Sentence, TreebankError};

/// Gold POS tags that are not scored when punctuation is excluded.
pub const PUNCTUATION_TAGS: [&str; 5] = ["``", "''", ":", ",", "."];

pub fn is_punctuation(pos: &str) -> bool {
    PUNCTUATION_TAGS.contains(&pos)
}

/// Attachment-score counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Evaluation {
    pub scored: usize,
    pub correct_heads: usize,
    pub correct_labeled: usize,
}

impl Evaluation {
    /// Unlabeled attachment score in `[0, 1]`; 1 when nothing was scored.
    pub fn uas(&self) -> f64 {
        ratio(self.correct_heads, self.scored)
    }

    pub fn las(&self) -> f64 {
        ratio(self.correct_labeled, self.scored)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Compares predicted trees with the gold annotation. Tokens without a gold
/// head are not scored.
pub fn evaluate(gold: &[Sentence], predicted: &[ParseTree], exclude_punct: bool) -> Result<Evaluation, TreebankError> {
    if gold.len() != predicted.len() {
        return Err(TreebankError::Mismatch {
            index: gold.len().min(predicted.len()),
            message: format!("{} gold sentences but {} predicted", gold.len(), predicted.len()),
        });
    }
    let mut eval = Evaluation::default();
    for (index, (sentence, tree)) in gold.iter().zip(predicted).enumerate() {
        if sentence.len() != tree.len() {
            return Err(TreebankError::Mismatch {
                index,
                message: format!("{} gold tokens but {} predicted", sentence.len(), tree.len()),
            });
        }
        for (k, token) in sentence.tokens().iter().enumerate() {
            let Some(gold_head) = token.head else {
                continue;
            };
            if exclude_punct && is_punctuation(token.pos()) {
                continue;
            }
            eval.scored += 1;
            if tree.head(k + 1) == gold_head {
                eval.correct_heads += 1;
                if tree.label(k + 1) == token.label.as_deref() {
                    eval.correct_labeled += 1;
                }
            }
        }
    }
    Ok(eval)
}
