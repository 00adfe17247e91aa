//! Planted-signal corpora: the label is a deterministic function of one token.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datasets::{LabeledCorpus, Post};
use crate::error::Result;

pub const SIGNAL: &str = "zorg";
/// Second signal token that only the target of [`transfer_pair`] uses.
pub const TARGET_SIGNAL: &str = "blik";

/// Filler vocabulary; none of these are stop words.
pub const FILLER: [&str; 40] = [
    "apple", "river", "stone", "cloud", "garden", "window", "pencil", "candle", "forest", "bridge",
    "silver", "orange", "violin", "harbor", "meadow", "rocket", "tunnel", "marble", "pepper", "ladder",
    "yellow", "castle", "bottle", "jacket", "mirror", "button", "carpet", "basket", "dragon", "island",
    "camera", "saddle", "tomato", "wallet", "helmet", "anchor", "coffee", "guitar", "planet", "rabbit",
];

#[derive(Clone, Debug)]
pub struct SyntheticSpec {
    pub posts: usize,
    /// Fraction of posts labelled `bully`.
    pub positive_rate: f64,
    pub min_len: usize,
    pub max_len: usize,
    /// Tokens that make a post positive; each positive post carries one of them.
    pub signals: Vec<String>,
    pub platform: String,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            posts: 200,
            positive_rate: 0.5,
            min_len: 5,
            max_len: 12,
            signals: vec![SIGNAL.into()],
            platform: "synthetic".into(),
        }
    }
}

/// Classes `[none, bully]`; exactly `round(posts · positive_rate)` positives, at
/// least one. The signal sits within the first five tokens so truncation never
/// removes it, and negatives never contain any signal token.
pub fn planted_corpus(spec: &SyntheticSpec, seed: u64) -> Result<LabeledCorpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positives = ((spec.posts as f64 * spec.positive_rate).round() as usize).clamp(1, spec.posts);
    let mut labels: Vec<usize> = (0..spec.posts).map(|i| usize::from(i < positives)).collect();
    labels.shuffle(&mut rng);
    let posts = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let len = rng.random_range(spec.min_len..=spec.max_len.max(spec.min_len));
            let mut words: Vec<&str> = (0..len).map(|_| *FILLER.choose(&mut rng).expect("filler")).collect();
            if label == 1 {
                let signal = spec.signals.choose(&mut rng).map_or(SIGNAL, String::as_str);
                let at = rng.random_range(0..len.min(5));
                words[at] = signal;
            }
            let id = format!("{}-{i:04}", spec.platform);
            Post {
                parent: id.clone(),
                id,
                text: words.join(" "),
                label,
                extra: BTreeMap::new(),
            }
        })
        .collect();
    LabeledCorpus::new(posts, vec!["none".into(), "bully".into()], spec.platform.clone())
}

/// Source and target corpora for transfer checks. Both share the filler
/// vocabulary and [`SIGNAL`]; half of the target's positives carry
/// [`TARGET_SIGNAL`] instead, which the source never sees.
pub fn transfer_pair(posts: usize, seed: u64) -> Result<(LabeledCorpus, LabeledCorpus)> {
    let source = planted_corpus(
        &SyntheticSpec {
            posts,
            platform: "source".into(),
            ..SyntheticSpec::default()
        },
        seed,
    )?;
    let target = planted_corpus(
        &SyntheticSpec {
            posts,
            signals: vec![SIGNAL.into(), TARGET_SIGNAL.into()],
            platform: "target".into(),
            ..SyntheticSpec::default()
        },
        seed.wrapping_add(1),
    )?;
    Ok((source, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::preprocess;

    #[test]
    fn label_is_a_function_of_the_signal() {
        let c = planted_corpus(&SyntheticSpec::default(), 4).unwrap();
        assert_eq!(c.len(), 200);
        assert_eq!(c.class_counts(), vec![100, 100]);
        for p in &c.posts {
            let toks = preprocess(&p.text);
            assert_eq!(toks.iter().any(|t| t == SIGNAL), p.label == 1, "{}", p.text);
            if p.label == 1 {
                assert!(toks[..5.min(toks.len())].iter().any(|t| t == SIGNAL));
            }
        }
    }

    #[test]
    fn skewed_variant_and_determinism() {
        let spec = SyntheticSpec { positive_rate: 0.05, ..Default::default() };
        let a = planted_corpus(&spec, 9).unwrap();
        assert_eq!(a.class_counts(), vec![190, 10]);
        assert_eq!(a, planted_corpus(&spec, 9).unwrap());
        assert_ne!(a, planted_corpus(&spec, 10).unwrap());
    }

    #[test]
    fn filler_survives_preprocessing() {
        for w in FILLER {
            assert_eq!(preprocess(w), vec![w.to_string()]);
        }
        assert_eq!(preprocess(SIGNAL), vec![SIGNAL]);
        assert_eq!(preprocess(TARGET_SIGNAL), vec![TARGET_SIGNAL]);
    }

    #[test]
    fn target_uses_both_signals() {
        let (s, t) = transfer_pair(200, 1).unwrap();
        assert!(!s.posts.iter().any(|p| p.text.contains(TARGET_SIGNAL)));
        assert!(t.posts.iter().any(|p| p.text.contains(TARGET_SIGNAL)));
        assert!(t.posts.iter().any(|p| p.text.contains(SIGNAL)));
    }
}
