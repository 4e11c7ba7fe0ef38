use std::fmt;
use std::str::FromStr;

use super::template::ChatTemplate;
use super::vocab::{positional_name, Special, TokenId, Vocab};
use super::{PromptError, Result};
use crate::vision::GridLayout;

/// How a tile's grid coordinate is spelled in the token stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PositionMode {
    /// One dedicated vocabulary entry per `(row, col)`.
    #[default]
    Learned,
    /// The marker text, byte by byte.
    String,
}

impl FromStr for PositionMode {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "learned" => Ok(Self::Learned),
            "string" => Ok(Self::String),
            other => Err(PromptError::UnknownMode(other.to_string())),
        }
    }
}

impl fmt::Display for PositionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Learned => "learned",
            Self::String => "string",
        })
    }
}

/// Rendered ids plus the offsets of every `<image>` placeholder, in the
/// order visual tokens are injected.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RenderedBlock {
    pub ids: Vec<TokenId>,
    pub placeholders: Vec<usize>,
}

impl RenderedBlock {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn push_text(&mut self, ids: impl IntoIterator<Item = TokenId>) {
        self.ids.extend(ids);
    }

    fn push_placeholders(&mut self, image: TokenId, n: usize) {
        for _ in 0..n {
            self.placeholders.push(self.ids.len());
            self.ids.push(image);
        }
    }
}

/// Tiles in raster order, each a position marker then `tokens_per_tile`
/// placeholders, followed by `<global-img>` and the global view's placeholders.
pub fn render_image_block(
    layout: GridLayout,
    mode: PositionMode,
    vocab: &Vocab,
    tokens_per_tile: usize,
) -> Result<RenderedBlock> {
    if tokens_per_tile == 0 {
        return Err(PromptError::InvalidArgument(
            "tokens per tile must be at least 1".into(),
        ));
    }
    let (max_rows, max_cols) = vocab.max_grid();
    if layout.rows > max_rows || layout.cols > max_cols {
        return Err(PromptError::GridTooLarge {
            rows: layout.rows,
            cols: layout.cols,
            max_rows,
            max_cols,
        });
    }
    let image = vocab.special(Special::Image)?;
    let mut block = RenderedBlock::default();
    for row in 0..layout.rows {
        for col in 0..layout.cols {
            match mode {
                PositionMode::Learned => block.push_text([vocab.positional(row, col)?]),
                PositionMode::String => block.push_text(vocab.encode_bytes(&positional_name(row + 1, col + 1))),
            }
            block.push_placeholders(image, tokens_per_tile);
        }
    }
    block.push_text([vocab.special(Special::GlobalImage)?]);
    block.push_placeholders(image, tokens_per_tile);
    Ok(block)
}

/// Intro sentence with the frame count, `Frame i:` plus placeholders per
/// frame, then the video outro.
pub fn render_video_block(
    frames: usize,
    vocab: &Vocab,
    template: &ChatTemplate,
    tokens_per_frame: usize,
) -> Result<RenderedBlock> {
    if frames == 0 || tokens_per_frame == 0 {
        return Err(PromptError::InvalidArgument(
            "video block needs at least one frame and one token per frame".into(),
        ));
    }
    let image = vocab.special(Special::Image)?;
    let mut block = RenderedBlock::default();
    block.push_text(vocab.encode(&template.video_intro(frames)));
    for i in 1..=frames {
        block.push_text(vocab.encode(&format!("\nFrame {i}:")));
        block.push_placeholders(image, tokens_per_frame);
    }
    block.push_text(vocab.encode(&format!("\n{}", template.video_outro())));
    Ok(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::extend_vocab;

    fn vocab() -> Vocab {
        extend_vocab(&Vocab::byte_level(), 8, 8).unwrap()
    }

    fn grid(rows: usize, cols: usize) -> GridLayout {
        GridLayout { rows, cols }
    }

    #[test]
    fn block_lengths() {
        let v = vocab();
        assert_eq!(
            render_image_block(grid(0, 0), PositionMode::Learned, &v, 64)
                .unwrap()
                .len(),
            65
        );
        let learned = render_image_block(grid(2, 2), PositionMode::Learned, &v, 64).unwrap();
        assert_eq!(learned.len(), 325);
        let string = render_image_block(grid(2, 2), PositionMode::String, &v, 64).unwrap();
        assert!(string.len() > learned.len());
        assert_eq!(string.placeholders.len(), learned.placeholders.len());
    }

    #[test]
    fn placeholders_point_at_image_tokens() {
        let v = vocab();
        let img = v.special(Special::Image).unwrap();
        let b = render_image_block(grid(1, 3), PositionMode::String, &v, 4).unwrap();
        assert_eq!(b.placeholders.len(), 16);
        assert!(b.placeholders.iter().all(|&p| b.ids[p] == img));
        assert_eq!(b.ids.iter().filter(|&&i| i == img).count(), 16);
    }

    #[test]
    fn oversize_grid_is_rejected() {
        let small = extend_vocab(&Vocab::byte_level(), 2, 2).unwrap();
        let err = render_image_block(grid(3, 1), PositionMode::Learned, &small, 4).unwrap_err();
        assert!(matches!(err, PromptError::GridTooLarge { .. }));
    }

    #[test]
    fn video_block_text() {
        let v = vocab();
        let t = ChatTemplate::default();
        let b = render_video_block(8, &v, &t, 3).unwrap();
        assert_eq!(b.placeholders.len(), 24);
        let text = v.decode(&b.ids).unwrap();
        assert!(text.starts_with("Here are 8 frames sampled from a video"));
        assert!(text.contains("\nFrame 8:<image>"));
        assert!(text.ends_with(&t.video_outro()));
        assert!(render_video_block(0, &v, &t, 3).is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("string".parse::<PositionMode>().unwrap(), PositionMode::String);
        assert_eq!(PositionMode::Learned.to_string(), "learned");
        assert!("both".parse::<PositionMode>().is_err());
    }
}
