//! Word-level tokenizer and corpus-built vocabulary.
//!
//! Text is split on whitespace; runs of alphanumeric characters become word
//! tokens and every other non-whitespace character becomes a single-character
//! token. Four ids are reserved: PAD, UNK, CLS and SEP. Regular tokens are
//! assigned dense ids starting at [`RESERVED_IDS`], ordered by descending
//! corpus frequency (ties broken lexicographically) so a vocabulary built
//! from the same corpus is always identical.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const SEP_ID: u32 = 3;
/// Number of reserved ids; the first regular token gets this id.
pub const RESERVED_IDS: u32 = 4;

/// Split raw text into surface tokens (no vocabulary involved).
pub fn split_tokens(text: &str, lowercase: bool) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            if lowercase {
                word.extend(ch.to_lowercase());
            } else {
                word.push(ch);
            }
        } else {
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            if !ch.is_whitespace() {
                tokens.push(ch.to_string());
            }
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

/// Token string → dense id map with four reserved ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    /// Regular tokens in id order; `tokens[i]` has id `RESERVED_IDS + i`.
    tokens: Vec<String>,
}

impl Vocabulary {
    /// Build a vocabulary over the given texts. Ids are assigned by
    /// descending frequency, ties broken lexicographically.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, lowercase: bool) -> Self {
        let mut freq: HashMap<String, u64> = HashMap::new();
        for text in texts {
            for token in split_tokens(text, lowercase) {
                *freq.entry(token).or_insert(0) += 1;
            }
        }
        let mut pairs: Vec<(String, u64)> = freq.into_iter().collect();
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_tokens(pairs.into_iter().map(|(t, _)| t))
    }

    /// Build from an explicit token list (the on-disk order).
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let tokens: Vec<String> = tokens.into_iter().collect();
        let mut token_to_id = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            token_to_id.insert(t.clone(), RESERVED_IDS + i as u32);
        }
        Vocabulary {
            token_to_id,
            tokens,
        }
    }

    /// Total id count, reserved ids included.
    pub fn size(&self) -> usize {
        self.tokens.len() + RESERVED_IDS as usize
    }

    pub fn id(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        if id < RESERVED_IDS {
            return Some(match id {
                PAD_ID => "[PAD]",
                UNK_ID => "[UNK]",
                CLS_ID => "[CLS]",
                _ => "[SEP]",
            });
        }
        self.tokens.get((id - RESERVED_IDS) as usize).map(|s| s.as_str())
    }

    /// One token per line; line number = id after the reserved ids.
    pub fn save(&self, path: &Path) -> Result<()> {
        crate::binio::atomic_write_text(path, |w| {
            for t in &self.tokens {
                writeln!(w, "{t}")?;
            }
            Ok(())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut tokens = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                return Err(Error::parse(path, i + 1, "empty vocabulary line"));
            }
            tokens.push(line);
        }
        Ok(Self::from_tokens(tokens))
    }
}

/// Convert text into token ids under a fixed vocabulary; unknown tokens map
/// to [`UNK_ID`]. Empty text yields an empty sequence.
pub fn tokenize(text: &str, vocab: &Vocabulary, lowercase: bool) -> Vec<u32> {
    split_tokens(text, lowercase)
        .into_iter()
        .map(|t| vocab.id(&t))
        .collect()
}
