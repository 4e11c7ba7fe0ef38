//! Procedurally generated tasks small enough to train on in seconds.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smolpipe_core::vision::RawImage;

use crate::{LabError, Result};

pub const COLORS: [(&str, [u8; 3]); 4] = [
    ("red", [230, 40, 40]),
    ("green", [40, 200, 60]),
    ("blue", [50, 80, 240]),
    ("yellow", [240, 220, 40]),
];

pub const SHAPES: [&str; 4] = ["square", "circle", "triangle", "cross"];

const BACKGROUND: [u8; 3] = [24, 24, 24];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    /// Colored shape on one side of a 32-pixel image, answered with a caption.
    Caption,
    /// Dot sliding across eight frames, answered with its direction.
    TemporalOrder,
    /// 2×2 grid of tiles with one marked, answered with its row and column.
    OcrGrid,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Caption, TaskKind::TemporalOrder, TaskKind::OcrGrid];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Caption => "caption",
            TaskKind::TemporalOrder => "temporal",
            TaskKind::OcrGrid => "ocr-grid",
        }
    }

    /// Samples in one generated split.
    pub fn default_count(self) -> usize {
        match self {
            TaskKind::Caption => 32,
            TaskKind::TemporalOrder => 48,
            TaskKind::OcrGrid => 48,
        }
    }

    pub fn generate(self, count: usize, seed: u64) -> TaskSet {
        let samples = match self {
            TaskKind::Caption => caption_samples(count, seed),
            TaskKind::TemporalOrder => temporal_samples(count, seed),
            TaskKind::OcrGrid => ocr_grid_samples(count, seed),
        };
        TaskSet { kind: self, samples }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| LabError::Invalid(format!("unknown task {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleMedia {
    Image(RawImage),
    /// Frames in temporal order.
    Video(Vec<RawImage>),
}

/// One question/answer pair about an image or clip.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub prompt: String,
    pub answer: String,
    pub media: SampleMedia,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSet {
    pub kind: TaskKind,
    pub samples: Vec<Sample>,
}

impl TaskSet {
    /// Every prompt and answer, for building a word vocabulary.
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.samples.iter().flat_map(|s| [s.prompt.as_str(), s.answer.as_str()])
    }
}

fn inside(shape: &str, dx: i64, dy: i64, r: i64) -> bool {
    match shape {
        "square" => dx.abs() <= r && dy.abs() <= r,
        "circle" => dx * dx + dy * dy <= r * r,
        // apex up, base at dy = r
        "triangle" => dy >= -r && dy <= r && 2 * dx.abs() <= dy + r,
        "cross" => (dx.abs() <= r / 3 && dy.abs() <= r) || (dy.abs() <= r / 3 && dx.abs() <= r),
        _ => false,
    }
}

/// Draws `shape` centred at `(cx, cy)` with half-extent `r`.
pub fn draw_shape(img: &mut RawImage, shape: &str, color: [u8; 3], cx: i64, cy: i64, r: i64) {
    for y in 0..img.height() {
        for x in 0..img.width() {
            if inside(shape, x as i64 - cx, y as i64 - cy, r) {
                img.set_pixel(x, y, color);
            }
        }
    }
}

/// Caption set cycling through every color × shape × side combination; the
/// seed jitters shape placement.
pub fn caption_samples(count: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let combo = i % 32;
            let (color_name, color) = COLORS[combo / 8];
            let shape = SHAPES[(combo / 2) % 4];
            let side = if combo % 2 == 0 { "left" } else { "right" };
            let cx = if side == "left" { 8 } else { 24 } + rng.random_range(-1..=1);
            let cy = 16 + rng.random_range(-3..=3);
            let mut img = RawImage::filled(32, 32, BACKGROUND).expect("nonzero size");
            draw_shape(&mut img, shape, color, cx, cy, 6);
            Sample {
                id: format!("caption-{i:04}"),
                prompt: "What is in the image?".into(),
                answer: format!("a {color_name} {shape} on the {side}"),
                media: SampleMedia::Image(img),
            }
        })
        .collect()
}

/// Eight 32-pixel frames of a dot entering from one edge and crossing the
/// frame; directions alternate.
pub fn temporal_samples(count: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let rightward = i % 2 == 0;
            let start = rng.random_range(0..=3i64);
            let y = rng.random_range(4..=27i64);
            let color = COLORS[rng.random_range(0..COLORS.len())].1;
            let frames = (0..8)
                .map(|t| {
                    let offset = start + 3 * t;
                    let x = if rightward { 2 + offset } else { 29 - offset };
                    let mut f = RawImage::filled(32, 32, BACKGROUND).expect("nonzero size");
                    draw_shape(&mut f, "square", color, x, y, 2);
                    f
                })
                .collect();
            Sample {
                id: format!("temporal-{i:04}"),
                prompt: "Which way does the dot move?".into(),
                answer: if rightward { "right" } else { "left" }.into(),
                media: SampleMedia::Video(frames),
            }
        })
        .collect()
}

/// 64-pixel images split into a 2×2 grid of 32-pixel tiles, one holding a
/// bright mark; cells cycle through the grid.
pub fn ocr_grid_samples(count: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let (row, col) = ((i / 2) % 2, i % 2);
            let mut img = RawImage::filled(64, 64, BACKGROUND).expect("nonzero size");
            let cx = (col * 32) as i64 + rng.random_range(10..=21);
            let cy = (row * 32) as i64 + rng.random_range(10..=21);
            let shape = SHAPES[rng.random_range(0..SHAPES.len())];
            draw_shape(&mut img, shape, [250, 250, 250], cx, cy, 6);
            Sample {
                id: format!("ocr-{i:04}"),
                prompt: "Which cell is marked?".into(),
                answer: format!("row {} col {}", row + 1, col + 1),
                media: SampleMedia::Image(img),
            }
        })
        .collect()
}
