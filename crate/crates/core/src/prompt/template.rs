use std::path::Path;

use super::{PromptError, Result};

const DEFAULT: &str = include_str!("chat_template.txt");
const SECTIONS: [&str; 5] = ["SYSTEM_CONV", "SYSTEM_VISUAL", "IMG_INTRO", "VID_INTRO", "OUTRO"];

/// Fixed prompt sentences, loaded from a sectioned text file.
///
/// The file holds `[NAME]` headers followed by the section text; `#` lines
/// before the first header are comments. Blank lines around a body are
/// dropped. `{N}` in `VID_INTRO` and `{MEDIA}` in `OUTRO` are substituted at
/// render time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatTemplate {
    pub system_conv: String,
    pub system_visual: String,
    pub img_intro: String,
    pub vid_intro: String,
    pub outro: String,
}

impl Default for ChatTemplate {
    fn default() -> Self {
        Self::parse(DEFAULT).expect("bundled template is valid")
    }
}

impl ChatTemplate {
    pub fn parse(text: &str) -> Result<Self> {
        let mut bodies: [Option<Vec<&str>>; 5] = Default::default();
        let mut current: Option<usize> = None;
        for (n, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let idx = SECTIONS
                    .iter()
                    .position(|s| *s == name)
                    .ok_or_else(|| PromptError::Template(format!("line {}: unknown section {name:?}", n + 1)))?;
                if bodies[idx].is_some() {
                    return Err(PromptError::Template(format!(
                        "line {}: section {name} repeated",
                        n + 1
                    )));
                }
                bodies[idx] = Some(Vec::new());
                current = Some(idx);
                continue;
            }
            match current {
                Some(idx) => bodies[idx].as_mut().expect("opened above").push(line),
                None if trimmed.is_empty() || trimmed.starts_with('#') => {}
                None => {
                    return Err(PromptError::Template(format!(
                        "line {}: text before the first section",
                        n + 1
                    )))
                }
            }
        }
        let mut out = Vec::with_capacity(5);
        for (name, body) in SECTIONS.iter().zip(bodies) {
            let body = body.ok_or_else(|| PromptError::Template(format!("missing section {name}")))?;
            out.push(body.join("\n").trim_matches('\n').trim().to_string());
        }
        let [system_conv, system_visual, img_intro, vid_intro, outro]: [String; 5] =
            out.try_into().expect("five sections");
        Ok(Self {
            system_conv,
            system_visual,
            img_intro,
            vid_intro,
            outro,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn video_intro(&self, frames: usize) -> String {
        self.vid_intro.replace("{N}", &frames.to_string())
    }

    pub fn image_outro(&self) -> String {
        self.outro.replace("{MEDIA}", "image")
    }

    pub fn video_outro(&self) -> String {
        self.outro.replace("{MEDIA}", "video")
    }
}
