use std::collections::HashMap;

use super::{PromptError, Result};

pub type TokenId = usize;

/// Named special tokens added by [`extend_vocab`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Special {
    Image,
    GlobalImage,
    FakeAroundImage,
    System,
    User,
    Assistant,
    EndOfUtterance,
}

impl Special {
    pub const ALL: [Special; 7] = [
        Special::Image,
        Special::GlobalImage,
        Special::FakeAroundImage,
        Special::System,
        Special::User,
        Special::Assistant,
        Special::EndOfUtterance,
    ];

    pub fn text(self) -> &'static str {
        match self {
            Special::Image => "<image>",
            Special::GlobalImage => "<global-img>",
            Special::FakeAroundImage => "<fake_token_around_image>",
            Special::System => "<|system|>",
            Special::User => "<|user|>",
            Special::Assistant => "<|assistant|>",
            Special::EndOfUtterance => "<end_of_utterance>",
        }
    }
}

/// Name of the positional token for the 1-based grid cell `(row, col)`.
pub fn positional_name(row: usize, col: usize) -> String {
    format!("<row_{row}_col_{col}>")
}

/// Byte-fallback vocabulary with optional whole-word tokens and special tokens.
///
/// Ids are dense: 256 byte tokens, then words, then specials, then the
/// positional grid sorted by `(row, col)`.
#[derive(Debug, Clone)]
pub struct Vocab {
    tokens: Vec<Vec<u8>>,
    base_index: HashMap<Vec<u8>, TokenId>,
    base_len: usize,
    max_base_len: usize,
    specials: HashMap<Special, TokenId>,
    special_index: HashMap<Vec<u8>, TokenId>,
    max_special_len: usize,
    grid: (usize, usize),
}

impl Vocab {
    /// The 256 single-byte tokens.
    pub fn byte_level() -> Self {
        let tokens: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        let base_index = tokens.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        Self {
            tokens,
            base_index,
            base_len: 256,
            max_base_len: 1,
            specials: HashMap::new(),
            special_index: HashMap::new(),
            max_special_len: 0,
            grid: (0, 0),
        }
    }

    /// Byte tokens plus the given multi-byte words, in order, skipping duplicates.
    pub fn with_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Self::byte_level();
        for w in words {
            let bytes = w.as_ref().as_bytes().to_vec();
            if bytes.is_empty() || v.base_index.contains_key(&bytes) {
                continue;
            }
            v.max_base_len = v.max_base_len.max(bytes.len());
            v.base_index.insert(bytes.clone(), v.tokens.len());
            v.tokens.push(bytes);
        }
        v.base_len = v.tokens.len();
        v
    }

    /// Word tokens for every whitespace-separated word in `texts`, with and
    /// without a leading space, in sorted order.
    pub fn from_corpus<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut words = std::collections::BTreeSet::new();
        for t in texts {
            for w in t.split_whitespace() {
                words.insert(w.to_string());
                words.insert(format!(" {w}"));
            }
        }
        Self::with_words(words)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Multi-byte word tokens (everything in the base vocabulary past the bytes).
    pub fn words(&self) -> impl Iterator<Item = String> + '_ {
        self.tokens[256..self.base_len]
            .iter()
            .map(|t| String::from_utf8_lossy(t).into_owned())
    }

    pub fn is_extended(&self) -> bool {
        !self.specials.is_empty()
    }

    /// Largest positional grid `(rows, cols)` this vocabulary can mark.
    pub fn max_grid(&self) -> (usize, usize) {
        self.grid
    }

    pub fn special(&self, s: Special) -> Result<TokenId> {
        self.specials
            .get(&s)
            .copied()
            .ok_or(PromptError::MissingSpecial(s.text()))
    }

    /// Learned positional token for the 0-based tile `(row, col)`.
    pub fn positional(&self, row: usize, col: usize) -> Result<TokenId> {
        let (rows, cols) = self.grid;
        if row >= rows || col >= cols {
            return Err(PromptError::GridTooLarge {
                rows: row + 1,
                cols: col + 1,
                max_rows: rows,
                max_cols: cols,
            });
        }
        Ok(self.special_index[positional_name(row + 1, col + 1).as_bytes()])
    }

    pub fn is_special(&self, id: TokenId) -> bool {
        id >= self.base_len && id < self.tokens.len()
    }

    pub fn token_bytes(&self, id: TokenId) -> Option<&[u8]> {
        self.tokens.get(id).map(|t| t.as_slice())
    }

    pub fn token_str(&self, id: TokenId) -> Option<String> {
        self.token_bytes(id).map(|b| String::from_utf8_lossy(b).into_owned())
    }

    /// Id of an exact token string, searching specials first.
    pub fn lookup(&self, token: &str) -> Option<TokenId> {
        let b = token.as_bytes();
        self.special_index.get(b).or_else(|| self.base_index.get(b)).copied()
    }

    /// Plain-text encoding: greedy longest match over base tokens, never
    /// producing a special token.
    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        let bytes = text.as_bytes();
        let mut ids = Vec::new();
        let mut at = 0;
        while at < bytes.len() {
            let (id, len) = self.longest_base(&bytes[at..]);
            ids.push(id);
            at += len;
        }
        ids
    }

    /// Raw byte tokens, one per byte, ignoring words and specials.
    pub fn encode_bytes(&self, text: &str) -> Vec<TokenId> {
        text.bytes().map(|b| b as TokenId).collect()
    }

    /// Like [`Vocab::encode`] but recognizes special token strings.
    pub fn encode_with_specials(&self, text: &str) -> Vec<TokenId> {
        let bytes = text.as_bytes();
        let mut ids = Vec::new();
        let mut at = 0;
        while at < bytes.len() {
            if let Some((id, len)) = self.longest_special(&bytes[at..]) {
                ids.push(id);
                at += len;
                continue;
            }
            // stop plain matching at the next special so words cannot swallow it
            let next = (at + 1..bytes.len())
                .find(|&i| self.longest_special(&bytes[i..]).is_some())
                .unwrap_or(bytes.len());
            while at < next {
                let (id, len) = self.longest_base(&bytes[at..next]);
                ids.push(id);
                at += len;
            }
        }
        ids
    }

    pub fn decode(&self, ids: &[TokenId]) -> Result<String> {
        let mut out = Vec::new();
        for &id in ids {
            let t = self.tokens.get(id).ok_or(PromptError::UnknownToken(id))?;
            out.extend_from_slice(t);
        }
        Ok(String::from_utf8_lossy(&out).into_owned())
    }

    /// Text form: a `grid R C` line (0 0 when not extended) then one word per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("grid {} {}\n", self.grid.0, self.grid.1);
        for w in self.words() {
            out.push_str(&w);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.split('\n');
        let header = lines.next().unwrap_or_default();
        let dims: Vec<usize> = header
            .strip_prefix("grid ")
            .map(|r| r.split(' ').filter_map(|x| x.parse().ok()).collect())
            .unwrap_or_default();
        let [rows, cols] = dims[..] else {
            return Err(PromptError::InvalidArgument(format!(
                "bad vocabulary header {header:?}"
            )));
        };
        let words: Vec<&str> = lines.filter(|l| !l.is_empty()).collect();
        let base = Self::with_words(words);
        if rows == 0 && cols == 0 {
            Ok(base)
        } else {
            extend_vocab(&base, rows, cols)
        }
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    fn longest_base(&self, bytes: &[u8]) -> (TokenId, usize) {
        for len in (2..=self.max_base_len.min(bytes.len())).rev() {
            if let Some(&id) = self.base_index.get(&bytes[..len]) {
                return (id, len);
            }
        }
        (bytes[0] as TokenId, 1)
    }

    fn longest_special(&self, bytes: &[u8]) -> Option<(TokenId, usize)> {
        if bytes.first() != Some(&b'<') {
            return None;
        }
        (1..=self.max_special_len.min(bytes.len()))
            .rev()
            .find_map(|len| self.special_index.get(&bytes[..len]).map(|&id| (id, len)))
    }

    fn push_special(&mut self, name: &[u8]) -> Result<TokenId> {
        if self.special_index.contains_key(name) || self.base_index.contains_key(name) {
            return Err(PromptError::DuplicateSpecial(
                String::from_utf8_lossy(name).into_owned(),
            ));
        }
        let id = self.tokens.len();
        self.tokens.push(name.to_vec());
        self.special_index.insert(name.to_vec(), id);
        self.max_special_len = self.max_special_len.max(name.len());
        Ok(id)
    }
}

/// Adds the media/role specials and a `max_rows × max_cols` grid of learned
/// positional tokens (`<row_R_col_C>`, 1-based, sorted by `(R, C)`).
pub fn extend_vocab(base: &Vocab, max_rows: usize, max_cols: usize) -> Result<Vocab> {
    let limit = crate::vision::MAX_GRID;
    if max_rows == 0 || max_cols == 0 || max_rows > limit || max_cols > limit {
        return Err(PromptError::InvalidGrid { max_rows, max_cols });
    }
    let mut v = base.clone();
    for s in Special::ALL {
        let id = v.push_special(s.text().as_bytes())?;
        v.specials.insert(s, id);
    }
    for r in 1..=max_rows {
        for c in 1..=max_cols {
            v.push_special(positional_name(r, c).as_bytes())?;
        }
    }
    v.grid = (max_rows, max_cols);
    Ok(v)
}
