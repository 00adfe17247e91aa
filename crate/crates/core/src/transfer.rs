//! Reusing a source-trained model on a target corpus: complete, feature-level
//! and model-level transfer.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datasets::{CvProtocol, LabeledCorpus, SplitMode};
use crate::error::{Error, Result};
use crate::evaluation::metrics::{confusion_counts, ConfusionMatrix};
use crate::models::bundle::{argmax, ModelBundle};
use crate::pipeline::{cross_validate, prepare, CvOutcome, FitSpec};
use crate::text::Preprocessor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    Complete,
    Feature,
    Model,
}

impl Approach {
    pub const ALL: [Approach; 3] = [Approach::Complete, Approach::Feature, Approach::Model];

    pub fn as_str(self) -> &'static str {
        match self {
            Approach::Complete => "complete",
            Approach::Feature => "feature",
            Approach::Model => "model",
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Approach::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown transfer approach `{s}`")))
    }
}

/// Overlap between source and target vocabularies, reserved entries excluded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabMerge {
    pub shared: usize,
    pub target_only: usize,
    pub source_only: usize,
}

/// Maps each source class to a target class. Same-named classes map to each
/// other. Any other non-negative source class maps to the target's single
/// non-negative class, so several abusive source classes collapse onto one.
pub fn class_map(source: &[String], target: &[String], negative: &str) -> Result<Vec<usize>> {
    let positives: Vec<usize> = (0..target.len()).filter(|&i| target[i] != negative).collect();
    source
        .iter()
        .map(|c| {
            if let Some(i) = target.iter().position(|t| t == c) {
                Ok(i)
            } else if c != negative && positives.len() == 1 {
                Ok(positives[0])
            } else {
                Err(Error::Config(format!(
                    "source class `{c}` has no counterpart among target classes {target:?}"
                )))
            }
        })
        .collect()
}

/// Predictions of the frozen source model on `corpus`, with probabilities summed
/// per target class before the argmax. Unknown target tokens map to UNK.
pub fn predict_mapped(
    source: &ModelBundle,
    corpus: &LabeledCorpus,
    preprocessor: &Preprocessor,
    map: &[usize],
) -> Result<ConfusionMatrix> {
    let data = source.encode(corpus, preprocessor);
    let probs = source.predict(&data)?;
    let classes = corpus.classes.len();
    let predicted: Vec<usize> = probs
        .iter()
        .map(|p| {
            let mut merged = vec![0.0f32; classes];
            for (s, &t) in map.iter().enumerate() {
                merged[t] += p[s];
            }
            argmax(&merged)
        })
        .collect();
    confusion_counts(&predicted, &data.labels, classes)
}

/// Complete transfer: the source model, untouched, evaluated on every target test
/// fold of `protocol`. No training and no randomness beyond the fold plan.
pub fn transfer_complete(
    source: &ModelBundle,
    target: &LabeledCorpus,
    protocol: &CvProtocol,
    preprocessor: &Preprocessor,
    negative: &str,
) -> Result<Vec<ConfusionMatrix>> {
    let map = class_map(&source.classes, &target.classes, negative)?;
    let plan = protocol.plan(target)?;
    (0..plan.k)
        .map(|fold| {
            let (_, test) = protocol.fold_data(target, &plan, fold)?;
            predict_mapped(source, &test, preprocessor, &map)
        })
        .collect()
}

/// Copies the source row of every real token both vocabularies contain,
/// looked up by token string.
pub fn copy_shared_embeddings(source: &ModelBundle, target: &mut ModelBundle) -> Result<VocabMerge> {
    let src = &source.network.embedding.table.value;
    let d = src.cols();
    if target.network.embedding.dim() != d {
        return Err(Error::Config(format!(
            "source embedding dimension {d} != target {}",
            target.network.embedding.dim()
        )));
    }
    let mut merge = VocabMerge::default();
    let dst = &mut target.network.embedding.table.value;
    for (i, token) in target.vocab.tokens().iter().enumerate().skip(2) {
        match source.vocab.get(token) {
            Some(j) => {
                dst.row_mut(i).copy_from_slice(src.row(j));
                merge.shared += 1;
            }
            None => merge.target_only += 1,
        }
    }
    merge.source_only = source.vocab.len() - 2 - merge.shared;
    Ok(merge)
}

/// Copies every non-embedding tensor from `source`. The output layer is copied
/// (rows reordered to the target classes) only when [`class_map`] is a bijection;
/// otherwise it keeps its fresh initialisation. Returns whether it was copied.
pub fn copy_layers(source: &ModelBundle, target: &mut ModelBundle, negative: &str) -> Result<bool> {
    if source.architecture() != target.architecture() {
        return Err(Error::Config(format!(
            "model-level transfer needs matching architectures, got {} and {}",
            source.architecture(),
            target.architecture()
        )));
    }
    let (sg, tg) = (&source.hyper.geometry, &target.hyper.geometry);
    if sg.hidden != tg.hidden || sg.filters != tg.filters || sg.kernel_width != tg.kernel_width {
        return Err(Error::Config("model-level transfer needs identical layer sizes".into()));
    }
    let dense_map = class_map(&source.classes, &target.classes, negative)
        .ok()
        .filter(|m| {
            let mut seen = vec![false; target.classes.len()];
            m.len() == seen.len() && m.iter().all(|&t| !std::mem::replace(&mut seen[t], true))
        });
    let src: HashMap<&str, _> = source
        .network
        .params()
        .into_iter()
        .map(|p| (p.name.as_str(), &p.value))
        .collect();
    for p in target.network.params_mut() {
        if p.name == "embedding" {
            continue;
        }
        let value = src[p.name.as_str()];
        if p.name.starts_with("dense.") {
            let Some(map) = &dense_map else { continue };
            let width = p.value.len() / p.value.shape()[0];
            for (s, &t) in map.iter().enumerate() {
                p.value.data_mut()[t * width..(t + 1) * width]
                    .copy_from_slice(&value.data()[s * width..(s + 1) * width]);
            }
        } else {
            if p.value.shape() != value.shape() {
                return Err(Error::Config(format!("tensor `{}` differs in shape", p.name)));
            }
            p.value = value.clone();
        }
    }
    Ok(dense_map.is_some())
}

/// A fresh target model with shared embedding rows copied from `source`.
pub fn prepare_feature(
    source: &ModelBundle,
    vocab_corpus: &LabeledCorpus,
    spec: &FitSpec,
    seed: u64,
) -> Result<(ModelBundle, VocabMerge)> {
    let mut bundle = prepare(vocab_corpus, spec, seed)?;
    let merge = copy_shared_embeddings(source, &mut bundle)?;
    Ok((bundle, merge))
}

/// [`prepare_feature`] plus every layer weight from `source`.
pub fn prepare_model(
    source: &ModelBundle,
    vocab_corpus: &LabeledCorpus,
    spec: &FitSpec,
    seed: u64,
    negative: &str,
) -> Result<(ModelBundle, VocabMerge)> {
    let (mut bundle, merge) = prepare_feature(source, vocab_corpus, spec, seed)?;
    copy_layers(source, &mut bundle, negative)?;
    Ok((bundle, merge))
}

/// Feature- or model-level transfer, cross-validated on the target.
pub fn transfer_trained(
    approach: Approach,
    source: &ModelBundle,
    target: &LabeledCorpus,
    protocol: &CvProtocol,
    spec: &FitSpec,
    seed: u64,
    negative: &str,
) -> Result<CvOutcome> {
    if spec.hyper.embedding_dim != source.network.embedding.dim() {
        return Err(Error::Config(format!(
            "source embedding dimension {} != target {}",
            source.network.embedding.dim(),
            spec.hyper.embedding_dim
        )));
    }
    if approach == Approach::Model && spec.architecture != source.architecture() {
        return Err(Error::Config(format!(
            "model-level transfer from {} into {}",
            source.architecture(),
            spec.architecture
        )));
    }
    let adapt = |bundle: &mut ModelBundle| -> Result<()> {
        copy_shared_embeddings(source, bundle)?;
        if approach == Approach::Model {
            copy_layers(source, bundle, negative)?;
        }
        Ok(())
    };
    match approach {
        Approach::Complete => Err(Error::Config("complete transfer does not train".into())),
        _ => cross_validate(target, protocol, spec, seed, Some(&adapt)),
    }
}

/// Vocabulary overlap as seen by the first fold's model (strict) or the whole
/// target (fidelity).
pub fn merge_report(source: &ModelBundle, target: &LabeledCorpus, protocol: &CvProtocol, spec: &FitSpec) -> Result<VocabMerge> {
    let plan = protocol.plan(target)?;
    let (train, _) = protocol.fold_data(target, &plan, 0)?;
    let corpus = match protocol.mode {
        SplitMode::Strict => &train,
        SplitMode::Fidelity => target,
    };
    let mut probe = spec.clone();
    probe.hyper.embedding_dim = source.network.embedding.dim();
    Ok(prepare_feature(source, corpus, &probe, 0)?.1)
}
