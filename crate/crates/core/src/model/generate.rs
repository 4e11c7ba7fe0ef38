use super::{media_patches, Media, ModelError, Result, ToyVlm};
use crate::prompt::{MultimodalSequence, TokenId};
use crate::tensor::{Tape, Tensor};

/// Greedy continuation; `truncated` is set when the context filled up first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generation {
    pub ids: Vec<TokenId>,
    pub truncated: bool,
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

impl ToyVlm {
    /// Greedy decoding after `prefix` until `stop` (not included) or `max_new` tokens.
    pub fn generate(
        &self,
        prefix: &MultimodalSequence,
        media: &[Media],
        max_new: usize,
        stop: TokenId,
    ) -> Result<Generation> {
        let patches = media_patches(media, &prefix.media_refs(), self.config())?;
        self.generate_ids(&prefix.ids(), &prefix.placeholder_positions(), &patches, max_new, stop)
    }

    pub fn generate_ids(
        &self,
        prefix: &[TokenId],
        placeholders: &[usize],
        patches: &[Tensor],
        max_new: usize,
        stop: TokenId,
    ) -> Result<Generation> {
        let limit = self.config().context_limit;
        if prefix.len() > limit {
            return Err(ModelError::ContextOverflow {
                len: prefix.len(),
                limit,
            });
        }
        if max_new == 0 {
            return Ok(Generation {
                ids: Vec::new(),
                truncated: false,
            });
        }
        // visual tokens do not depend on the text, so encode them once
        let visual = {
            let mut tape = Tape::new();
            let b = self.bind(&mut tape, false);
            match self.visual_tokens_on(&mut tape, &b, patches)? {
                Some(v) => Some(tape.value(v)?.clone()),
                None => None,
            }
        };
        let mut ids = prefix.to_vec();
        let mut out = Vec::new();
        while out.len() < max_new {
            if ids.len() >= limit {
                return Ok(Generation {
                    ids: out,
                    truncated: true,
                });
            }
            let mut tape = Tape::new();
            let b = self.bind(&mut tape, false);
            let v = visual.as_ref().map(|t| tape.constant(t.clone()));
            let logits = self.logits_on(&mut tape, &b, &ids, placeholders, v)?;
            let logits = tape.value(logits)?;
            let vocab = logits.shape()[1];
            let next = argmax(&logits.data()[(ids.len() - 1) * vocab..]);
            if next == stop {
                break;
            }
            out.push(next);
            ids.push(next);
        }
        Ok(Generation {
            ids: out,
            truncated: false,
        })
    }
}
