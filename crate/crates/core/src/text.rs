//! Raw post → fixed-length index sequence.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Index of the padding token.
pub const PAD: usize = 0;
/// Index of the out-of-vocabulary token.
pub const UNK: usize = 1;
/// Reserved token strings. Both contain punctuation, so no preprocessed token can
/// ever collide with them.
pub const PAD_TOKEN: &str = "[PAD]";
pub const UNK_TOKEN: &str = "[UNK]";

const SHIPPED_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

static PUNCTUATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\p{P}").expect("valid regex"));

static DEFAULT_PREPROCESSOR: LazyLock<Preprocessor> =
    LazyLock::new(|| Preprocessor::from_list(SHIPPED_STOPWORDS));

/// Lowercases, strips Unicode punctuation, splits on whitespace and drops stop words.
#[derive(Clone, Debug)]
pub struct Preprocessor {
    stopwords: HashSet<String>,
}

impl Default for Preprocessor {
    fn default() -> Self {
        DEFAULT_PREPROCESSOR.clone()
    }
}

impl Preprocessor {
    /// Stop words one per line; blank lines ignored.
    pub fn from_list(list: &str) -> Self {
        let stopwords = list
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect();
        Self { stopwords }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let list = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_list(&list))
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn preprocess(&self, raw: &str) -> Vec<String> {
        let lowered = raw.to_lowercase();
        let stripped = PUNCTUATION.replace_all(&lowered, "");
        stripped
            .split_whitespace()
            .filter(|t| !self.stopwords.contains(*t))
            .map(str::to_owned)
            .collect()
    }
}

/// [`Preprocessor::preprocess`] with the shipped English stop-word list.
pub fn preprocess(raw: &str) -> Vec<String> {
    DEFAULT_PREPROCESSOR.preprocess(raw)
}

/// The shipped stop-word list, one token per line.
pub fn shipped_stopwords() -> &'static str {
    SHIPPED_STOPWORDS
}

/// Token ↔ index map. Index 0 is padding, index 1 unknown, real tokens follow in
/// descending frequency with lexicographic tie-break.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    frequencies: Vec<u64>,
}

impl Vocabulary {
    /// Builds from pre-tokenised posts. `max_size` caps the total size including the
    /// two reserved entries.
    pub fn build<S: AsRef<str>>(posts: &[Vec<S>], max_size: Option<usize>) -> Self {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for post in posts {
            for t in post {
                *counts.entry(t.as_ref()).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        if let Some(cap) = max_size {
            ranked.truncate(cap.saturating_sub(2));
        }
        let mut tokens = vec![PAD_TOKEN.to_owned(), UNK_TOKEN.to_owned()];
        let mut frequencies = vec![0, 0];
        for (t, c) in ranked {
            tokens.push(t.to_owned());
            frequencies.push(c);
        }
        Self::from_parts(tokens, frequencies).expect("built vocabulary is well formed")
    }

    fn from_parts(tokens: Vec<String>, frequencies: Vec<u64>) -> Result<Self> {
        if tokens.len() < 2 || tokens[PAD] != PAD_TOKEN || tokens[UNK] != UNK_TOKEN {
            return Err(Error::Bundle("vocabulary must start with [PAD], [UNK]".into()));
        }
        if frequencies.len() != tokens.len() {
            return Err(Error::Bundle("vocabulary frequency table length mismatch".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Bundle(format!("duplicate vocabulary token `{t}`")));
            }
        }
        Ok(Self {
            tokens,
            index,
            frequencies,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn index_or_unk(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn frequency(&self, index: usize) -> Option<u64> {
        self.frequencies.get(index).copied()
    }

    /// Hex SHA-256 over the ordered token list.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    /// `token<TAB>frequency` per line, in index order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (t, f) in self.tokens.iter().zip(&self.frequencies) {
            out.push_str(t);
            out.push('\t');
            out.push_str(&f.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = Vec::new();
        let mut freqs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let (tok, freq) = line
                .split_once('\t')
                .ok_or_else(|| Error::Bundle(format!("vocabulary line {} lacks a frequency", n + 1)))?;
            let freq = freq
                .parse()
                .map_err(|_| Error::Bundle(format!("vocabulary line {}: bad frequency", n + 1)))?;
            tokens.push(tok.to_owned());
            freqs.push(freq);
        }
        Self::from_parts(tokens, freqs)
    }
}

/// Nearest-rank 95th percentile of token counts (at least 1).
pub fn compute_max_len(token_counts: &[usize]) -> Result<usize> {
    percentile_nearest_rank(token_counts, 0.95)
}

pub fn percentile_nearest_rank(values: &[usize], q: f64) -> Result<usize> {
    if values.is_empty() {
        return Err(Error::Config("cannot take a percentile of an empty list".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let rank = (q * sorted.len() as f64).ceil() as usize;
    let idx = rank.clamp(1, sorted.len()) - 1;
    Ok(sorted[idx].max(1))
}

/// A post as a fixed-length index sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedPost {
    pub indices: Vec<usize>,
    /// Token count before truncation or padding.
    pub token_count: usize,
}

/// Maps tokens to indices, keeps the first `max_len` tokens and left-pads with
/// [`PAD`] so content sits at the end of the sequence.
pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, max_len: usize) -> EncodedPost {
    let kept = tokens.len().min(max_len);
    let mut indices = vec![PAD; max_len - kept];
    indices.extend(tokens[..kept].iter().map(|t| vocab.index_or_unk(t.as_ref())));
    EncodedPost {
        indices,
        token_count: tokens.len(),
    }
}

/// Token frequency table, handy for diagnostics.
pub fn token_counts<S: AsRef<str>>(posts: &[Vec<S>]) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for p in posts {
        for t in p {
            *counts.entry(t.as_ref().to_owned()).or_default() += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn preprocess_examples() {
        assert_eq!(preprocess("You ARE a Fool!!"), vec!["fool"]);
        assert!(preprocess("").is_empty());
        assert!(preprocess("the of and").is_empty());
        assert_eq!(preprocess("¡Hola, señor! «quoi?»"), vec!["hola", "señor", "quoi"]);
    }

    #[test]
    fn reserved_tokens_cannot_be_produced() {
        assert!(preprocess(PAD_TOKEN).iter().all(|t| t != PAD_TOKEN));
        assert!(preprocess(UNK_TOKEN).iter().all(|t| t != UNK_TOKEN));
    }

    #[test]
    fn vocab_frequency_order() {
        let posts = vec![toks(&["a", "b", "a"]), toks(&["a"])];
        let v = Vocabulary::build(&posts, None);
        assert_eq!(v.get("a"), Some(2));
        assert_eq!(v.get("b"), Some(3));
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn vocab_empty_and_capped() {
        let v = Vocabulary::build::<String>(&[], None);
        assert_eq!(v.len(), 2);
        let posts = vec![toks(&["a", "a", "a", "b", "b", "c"])];
        let v = Vocabulary::build(&posts, Some(3));
        assert_eq!(v.len(), 3);
        assert_eq!(v.get("a"), Some(2));
        assert_eq!(v.get("b"), None);
    }

    #[test]
    fn vocab_tie_break_is_lexicographic() {
        let posts = vec![toks(&["zeta", "alpha", "mid"])];
        let v = Vocabulary::build(&posts, None);
        assert_eq!(&v.tokens()[2..], &["alpha", "mid", "zeta"]);
    }

    #[test]
    fn vocab_text_round_trip() {
        let posts = vec![toks(&["x", "y", "x"])];
        let v = Vocabulary::build(&posts, None);
        let back = Vocabulary::from_text(&v.to_text()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.checksum(), v.checksum());
    }

    #[test]
    fn max_len_examples() {
        let counts: Vec<usize> = (1..=100).collect();
        assert_eq!(compute_max_len(&counts).unwrap(), 95);
        assert_eq!(compute_max_len(&[7, 7, 7]).unwrap(), 7);
        assert_eq!(compute_max_len(&[5]).unwrap(), 5);
        assert_eq!(compute_max_len(&[0, 0]).unwrap(), 1);
        assert!(compute_max_len(&[]).is_err());
    }

    #[test]
    fn encode_examples() {
        let v = Vocabulary::build(&[toks(&["x", "y", "z"])], None);
        assert_eq!(encode::<String>(&[], &v, 4).indices, vec![PAD; 4]);
        let e = encode(&toks(&["x", "y", "z"]), &v, 2);
        assert_eq!(e.indices, vec![v.get("x").unwrap(), v.get("y").unwrap()]);
        assert_eq!(e.token_count, 3);
        let e = encode(&toks(&["x", "nope"]), &v, 3);
        assert_eq!(e.indices, vec![PAD, v.get("x").unwrap(), UNK]);
    }
}
