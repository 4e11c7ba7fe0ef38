//! Turns task samples into rendered conversations, train examples and
//! generation prompts for a given model geometry.

use smolpipe_core::model::{Media, ModelConfig, TrainExample};
use smolpipe_core::prompt::{
    build_chat, extend_vocab, ChatConfig, Content, MultimodalSequence, PositionMode, Role, Special, Turn, Vocab,
};
use smolpipe_core::vision::{average_frames, preprocess_image, sample_frames, FrameSource};

use crate::tasks::{Sample, SampleMedia, TaskSet};
use crate::Result;

/// Everything needed to render a sample for one model.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub vocab: Vocab,
    pub chat: ChatConfig,
    pub model: ModelConfig,
    /// Frames sampled from each clip.
    pub frames: usize,
    /// Consecutive frames merged by averaging.
    pub average: usize,
    pub longest_edge_cap: usize,
}

impl Pipeline {
    /// Vocabulary from the task's texts plus the bundled template, with a
    /// positional grid big enough for `max_grid`, and the toy model geometry.
    pub fn for_tasks<'a>(sets: impl IntoIterator<Item = &'a TaskSet>, max_grid: usize) -> Result<Self> {
        let chat = ChatConfig::default();
        let t = &chat.template;
        let template_texts = [
            t.system_conv.clone(),
            t.system_visual.clone(),
            t.img_intro.clone(),
            t.video_intro(8),
            t.image_outro(),
            t.video_outro(),
        ];
        let frame_words: Vec<String> = (0..8).map(|i| format!("Frame {i}:")).collect();
        let mut texts: Vec<String> = sets.into_iter().flat_map(TaskSet::texts).map(str::to_string).collect();
        texts.extend(template_texts);
        texts.extend(frame_words);
        let vocab = extend_vocab(
            &Vocab::from_corpus(texts.iter().map(String::as_str)),
            max_grid,
            max_grid,
        )?;
        let model = ModelConfig::toy(vocab.len());
        Ok(Self {
            chat: ChatConfig {
                tokens_per_tile: model.tokens_per_tile(),
                tokens_per_frame: model.tokens_per_tile(),
                ..chat
            },
            vocab,
            model,
            frames: 8,
            average: 1,
            longest_edge_cap: 64,
        })
    }

    pub fn with_mode(mut self, mode: PositionMode) -> Self {
        self.chat.mode = mode;
        self
    }

    pub fn with_average(mut self, k: usize) -> Self {
        self.average = k;
        self
    }

    /// Changes the shuffle factor and the per-tile token counts with it.
    pub fn with_shuffle(mut self, r: usize) -> Self {
        self.model.shuffle_r = r;
        self.chat.tokens_per_tile = self.model.tokens_per_tile();
        self.chat.tokens_per_frame = self.model.tokens_per_tile();
        self
    }

    pub fn with_rope_base(mut self, base: f64) -> Self {
        self.model.rope_base = base;
        self
    }

    fn media(&self, sample: &Sample) -> Result<(Content, Media)> {
        Ok(match &sample.media {
            SampleMedia::Image(img) => {
                let grid = preprocess_image(img, self.longest_edge_cap, self.model.tile_size)?;
                (Content::Image(grid.layout()), Media::Image(grid))
            }
            SampleMedia::Video(frames) => {
                let source = FrameSource::new(frames.clone(), frames.len() as f64)?;
                let sampled = sample_frames(&source, self.frames, self.model.tile_size)?;
                let set = average_frames(&sampled, self.average)?;
                (Content::Video { frames: set.len() }, Media::Video(set))
            }
        })
    }

    fn user_turn(&self, sample: &Sample, content: Content) -> Turn {
        Turn::new(Role::User, vec![content, Content::Text(format!("\n{}", sample.prompt))])
    }

    /// The full exchange with the answer supervised.
    pub fn conversation(&self, sample: &Sample) -> Result<(MultimodalSequence, Vec<Media>)> {
        let (content, media) = self.media(sample)?;
        let turns = [self.user_turn(sample, content), Turn::assistant(sample.answer.clone())];
        Ok((build_chat(None, &turns, &self.vocab, &self.chat)?, vec![media]))
    }

    pub fn train_example(&self, sample: &Sample) -> Result<TrainExample> {
        let (seq, media) = self.conversation(sample)?;
        Ok(TrainExample::from_sequence(&seq, &media, &self.model)?)
    }

    pub fn train_examples(&self, samples: &[Sample]) -> Result<Vec<TrainExample>> {
        samples.iter().map(|s| self.train_example(s)).collect()
    }

    /// The user turn followed by an open assistant marker.
    pub fn prompt(&self, sample: &Sample) -> Result<(MultimodalSequence, Vec<Media>)> {
        let (content, media) = self.media(sample)?;
        let seq = build_chat(None, &[self.user_turn(sample, content)], &self.vocab, &self.chat)?;
        Ok((seq.with_generation_prompt(&self.vocab)?, vec![media]))
    }

    pub fn stop_token(&self) -> Result<usize> {
        Ok(self.vocab.special(Special::EndOfUtterance)?)
    }
}
