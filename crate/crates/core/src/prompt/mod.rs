//! Vocabulary, media block rendering, chat templating and completion masks.

mod chat;
mod render;
mod template;
mod vocab;

pub use chat::{
    build_chat, truncate_to_context, ChatConfig, Content, MultimodalSequence, Role, Segment, SegmentKind, Turn,
};
pub use render::{render_image_block, render_video_block, PositionMode, RenderedBlock};
pub use template::ChatTemplate;
pub use vocab::{extend_vocab, positional_name, Special, TokenId, Vocab};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("special token {0:?} is already in the vocabulary")]
    DuplicateSpecial(String),
    #[error("vocabulary has no {0} token; call extend_vocab first")]
    MissingSpecial(&'static str),
    #[error("positional grid {max_rows}x{max_cols} must be between 1x1 and 8x8")]
    InvalidGrid { max_rows: usize, max_cols: usize },
    #[error("{rows}x{cols} tile grid exceeds the vocabulary's {max_rows}x{max_cols} positional tokens")]
    GridTooLarge {
        rows: usize,
        cols: usize,
        max_rows: usize,
        max_cols: usize,
    },
    #[error("token id {0} is outside the vocabulary")]
    UnknownToken(TokenId),
    #[error("unknown position mode {0:?}; expected learned or string")]
    UnknownMode(String),
    #[error("template: {0}")]
    Template(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("conversation must start with a user turn")]
    AssistantFirst,
    #[error("turn {index} should be {expected:?}")]
    NotAlternating { index: usize, expected: Role },
    #[error("assistant turn {0} contains media")]
    MediaInAssistantTurn(usize),
    #[error("last exchange needs {needed} tokens but the context limit is {limit}")]
    ContextOverflow { needed: usize, limit: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = PromptError> = std::result::Result<T, E>;
