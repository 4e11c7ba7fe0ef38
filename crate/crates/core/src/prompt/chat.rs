use std::fmt;
use std::str::FromStr;

use super::render::{render_image_block, render_video_block, PositionMode};
use super::template::ChatTemplate;
use super::vocab::{Special, TokenId, Vocab};
use super::{PromptError, Result};
use crate::vision::GridLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    fn marker(self) -> Special {
        match self {
            Role::System => Special::System,
            Role::User => Special::User,
            Role::Assistant => Special::Assistant,
        }
    }
}

impl FromStr for Role {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "system" => Ok(Role::System),
            "user" => Ok(Role::User),
            "assistant" => Ok(Role::Assistant),
            other => Err(PromptError::InvalidArgument(format!("unknown role {other:?}"))),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

/// One piece of a turn. Media carry only their geometry; pixels travel
/// separately and are matched up by order of appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Content {
    Text(String),
    Image(GridLayout),
    Video { frames: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    pub role: Role,
    pub content: Vec<Content>,
}

impl Turn {
    pub fn new(role: Role, content: Vec<Content>) -> Self {
        Self { role, content }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self::new(Role::User, vec![Content::Text(text.into())])
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self::new(Role::Assistant, vec![Content::Text(text.into())])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Text,
    ImageTiles,
    VideoFrames,
}

/// A contiguous run of rendered ids sharing one role and one mask value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub role: Role,
    pub ids: Vec<TokenId>,
    pub supervised: bool,
    /// User/assistant pair this segment belongs to; `None` for the system prompt.
    pub exchange: Option<usize>,
    /// Position of the media item among all media in the original conversation.
    pub media: Option<usize>,
    /// Offsets of `<image>` placeholders within `ids`.
    pub placeholders: Vec<usize>,
}

impl Segment {
    fn text(role: Role, ids: Vec<TokenId>, supervised: bool, exchange: Option<usize>) -> Self {
        Self {
            kind: SegmentKind::Text,
            role,
            ids,
            supervised,
            exchange,
            media: None,
            placeholders: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChatConfig {
    pub mode: PositionMode,
    pub tokens_per_tile: usize,
    pub tokens_per_frame: usize,
    pub template: ChatTemplate,
}

impl Default for ChatConfig {
    fn default() -> Self {
        Self {
            mode: PositionMode::Learned,
            tokens_per_tile: 64,
            tokens_per_frame: 64,
            template: ChatTemplate::default(),
        }
    }
}

/// Rendered conversation: ordered segments whose concatenation is the token
/// stream fed to the model.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultimodalSequence {
    segments: Vec<Segment>,
}

impl MultimodalSequence {
    pub fn from_segments(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.ids.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> Vec<TokenId> {
        self.segments.iter().flat_map(|s| s.ids.iter().copied()).collect()
    }

    /// True exactly on tokens that contribute to the training loss.
    pub fn loss_mask(&self) -> Vec<bool> {
        self.segments
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.supervised, s.ids.len()))
            .collect()
    }

    /// Absolute stream offsets of every placeholder, in injection order.
    pub fn placeholder_positions(&self) -> Vec<usize> {
        let mut offset = 0;
        let mut out = Vec::new();
        for s in &self.segments {
            out.extend(s.placeholders.iter().map(|p| offset + p));
            offset += s.ids.len();
        }
        out
    }

    /// Original media indices still present, in stream order.
    pub fn media_refs(&self) -> Vec<usize> {
        self.segments.iter().filter_map(|s| s.media).collect()
    }

    pub fn exchange_count(&self) -> usize {
        let mut ex: Vec<_> = self.segments.iter().filter_map(|s| s.exchange).collect();
        ex.dedup();
        ex.len()
    }

    /// Appends the assistant role marker so that decoding continues as the reply.
    pub fn with_generation_prompt(mut self, vocab: &Vocab) -> Result<Self> {
        let exchange = self.segments.iter().rev().find_map(|s| s.exchange);
        let marker = vocab.special(Special::Assistant)?;
        self.segments
            .push(Segment::text(Role::Assistant, vec![marker], false, exchange));
        Ok(self)
    }
}

/// Renders an optional system prompt and alternating user/assistant turns.
///
/// Every turn is `role marker, content, <end_of_utterance>`. Images expand to
/// the intro sentence, the tile block wrapped in `<fake_token_around_image>`,
/// and the outro; videos expand to the full video block. Only assistant
/// content and its end-of-utterance token are supervised.
pub fn build_chat(
    system: Option<&str>,
    turns: &[Turn],
    vocab: &Vocab,
    config: &ChatConfig,
) -> Result<MultimodalSequence> {
    let eou = vocab.special(Special::EndOfUtterance)?;
    let fake = vocab.special(Special::FakeAroundImage)?;
    let mut segments = Vec::new();
    if let Some(text) = system {
        let mut ids = vec![vocab.special(Special::System)?];
        ids.extend(vocab.encode(text));
        ids.push(eou);
        segments.push(Segment::text(Role::System, ids, false, None));
    }
    let mut media_index = 0;
    for (i, turn) in turns.iter().enumerate() {
        let expected = if i % 2 == 0 { Role::User } else { Role::Assistant };
        if turn.role != expected {
            return Err(match (i, turn.role) {
                (0, Role::Assistant) => PromptError::AssistantFirst,
                _ => PromptError::NotAlternating { index: i, expected },
            });
        }
        let supervised = turn.role == Role::Assistant;
        let exchange = Some(i / 2);
        segments.push(Segment::text(
            turn.role,
            vec![vocab.special(turn.role.marker())?],
            false,
            exchange,
        ));
        for content in &turn.content {
            if supervised && !matches!(content, Content::Text(_)) {
                return Err(PromptError::MediaInAssistantTurn(i));
            }
            match content {
                Content::Text(text) => {
                    segments.push(Segment::text(turn.role, vocab.encode(text), supervised, exchange));
                }
                Content::Image(layout) => {
                    let block = render_image_block(*layout, config.mode, vocab, config.tokens_per_tile)?;
                    let intro = vocab.encode(&config.template.img_intro);
                    segments.push(Segment::text(turn.role, intro, false, exchange));
                    let mut ids = Vec::with_capacity(block.len() + 2);
                    ids.push(fake);
                    ids.extend(&block.ids);
                    ids.push(fake);
                    segments.push(Segment {
                        kind: SegmentKind::ImageTiles,
                        role: turn.role,
                        ids,
                        supervised: false,
                        exchange,
                        media: Some(media_index),
                        placeholders: block.placeholders.iter().map(|p| p + 1).collect(),
                    });
                    let outro = vocab.encode(&format!("\n{}", config.template.image_outro()));
                    segments.push(Segment::text(turn.role, outro, false, exchange));
                    media_index += 1;
                }
                Content::Video { frames } => {
                    let block = render_video_block(*frames, vocab, &config.template, config.tokens_per_frame)?;
                    segments.push(Segment {
                        kind: SegmentKind::VideoFrames,
                        role: turn.role,
                        ids: block.ids,
                        supervised: false,
                        exchange,
                        media: Some(media_index),
                        placeholders: block.placeholders,
                    });
                    media_index += 1;
                }
            }
        }
        segments.push(Segment::text(turn.role, vec![eou], supervised, exchange));
    }
    Ok(MultimodalSequence { segments })
}

/// Drops whole exchanges, oldest first, until the stream fits in `limit`.
///
/// The system prompt is always kept. If the newest exchange alone (plus the
/// system prompt) is still too long the result is
/// [`PromptError::ContextOverflow`].
pub fn truncate_to_context(seq: &MultimodalSequence, limit: usize) -> Result<MultimodalSequence> {
    if limit == 0 {
        return Err(PromptError::InvalidArgument("context limit must be at least 1".into()));
    }
    let mut exchanges: Vec<usize> = seq.segments.iter().filter_map(|s| s.exchange).collect();
    exchanges.dedup();
    let mut len = seq.len();
    let mut dropped = 0;
    while len > limit && dropped + 1 < exchanges.len() {
        let victim = exchanges[dropped];
        len -= seq
            .segments
            .iter()
            .filter(|s| s.exchange == Some(victim))
            .map(|s| s.ids.len())
            .sum::<usize>();
        dropped += 1;
    }
    if len > limit {
        return Err(PromptError::ContextOverflow { needed: len, limit });
    }
    let dropped = &exchanges[..dropped];
    let segments = seq
        .segments
        .iter()
        .filter(|s| s.exchange.is_none_or(|e| !dropped.contains(&e)))
        .cloned()
        .collect();
    Ok(MultimodalSequence { segments })
}
