//! Fitting and evaluating one model configuration under cross-validation.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::datasets::{CvProtocol, FoldPlan, LabeledCorpus, SplitMode};
use crate::embeddings::{apply_vectors, init_random, WordVectors};
use crate::error::Result;
use crate::evaluation::metrics::{confusion_counts, ConfusionMatrix};
use crate::models::bundle::{build_model, encode_corpus, Hyperparams, ModelBundle, TrainHistory};
use crate::models::network::Architecture;
use crate::text::{compute_max_len, Preprocessor, Vocabulary};

/// Expands a seed into an independent one for a named purpose.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Clone, Debug)]
pub enum EmbeddingInit {
    Random,
    Pretrained {
        name: String,
        vectors: Arc<WordVectors>,
        file_checksum: String,
    },
}

impl EmbeddingInit {
    pub fn label(&self) -> &str {
        match self {
            EmbeddingInit::Random => "random",
            EmbeddingInit::Pretrained { name, .. } => name,
        }
    }
}

/// Everything that defines a model apart from its data and seed.
#[derive(Clone, Debug)]
pub struct FitSpec {
    pub architecture: Architecture,
    pub hyper: Hyperparams,
    pub embedding: EmbeddingInit,
    pub vocab_cap: Option<usize>,
    pub preprocessor: Arc<Preprocessor>,
}

impl FitSpec {
    pub fn new(architecture: Architecture, hyper: Hyperparams) -> Self {
        Self {
            architecture,
            hyper,
            embedding: EmbeddingInit::Random,
            vocab_cap: None,
            preprocessor: Arc::new(Preprocessor::default()),
        }
    }
}

/// Vocabulary, sequence length and an untrained model built from `vocab_corpus`.
/// Non-embedding parameters depend on `seed` alone.
pub fn prepare(vocab_corpus: &LabeledCorpus, spec: &FitSpec, seed: u64) -> Result<ModelBundle> {
    let tokens: Vec<Vec<String>> = vocab_corpus
        .posts
        .iter()
        .map(|p| spec.preprocessor.preprocess(&p.text))
        .collect();
    let vocab = Vocabulary::build(&tokens, spec.vocab_cap);
    let counts: Vec<usize> = tokens.iter().map(Vec::len).collect();
    let mut max_len = compute_max_len(&counts)?;
    if spec.architecture == Architecture::Cnn {
        max_len = max_len.max(spec.hyper.geometry.kernel_width);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "embedding"));
    let dim = spec.hyper.embedding_dim;
    let (matrix, checksum) = match &spec.embedding {
        EmbeddingInit::Random => (init_random(&vocab, dim, &mut rng)?, None),
        EmbeddingInit::Pretrained { vectors, file_checksum, .. } => {
            (apply_vectors(vectors, &vocab, dim, &mut rng)?.0, Some(file_checksum.clone()))
        }
    };
    let mut bundle = build_model(
        spec.architecture,
        &vocab,
        matrix,
        &vocab_corpus.classes,
        max_len,
        &spec.hyper,
        seed,
    )?;
    bundle.provenance.dataset = vocab_corpus.platform.clone();
    bundle.provenance.embedding = spec.embedding.label().to_owned();
    bundle.provenance.embedding_file_checksum = checksum;
    Ok(bundle)
}

pub fn train(bundle: &mut ModelBundle, train: &LabeledCorpus, preprocessor: &Preprocessor, seed: u64) -> Result<TrainHistory> {
    let data = encode_corpus(train, &bundle.vocab, bundle.max_len, preprocessor);
    bundle.train(&data, derive_seed(seed, "train"))
}

pub fn evaluate(bundle: &ModelBundle, test: &LabeledCorpus, preprocessor: &Preprocessor) -> Result<ConfusionMatrix> {
    let data = bundle.encode(test, preprocessor);
    let predicted = bundle.predict_labels(&data)?;
    confusion_counts(&predicted, &data.labels, bundle.classes.len())
}

/// Prepares and trains on the whole of `corpus`.
pub fn fit(corpus: &LabeledCorpus, spec: &FitSpec, seed: u64) -> Result<(ModelBundle, TrainHistory)> {
    let mut bundle = prepare(corpus, spec, seed)?;
    let history = train(&mut bundle, corpus, &spec.preprocessor, seed)?;
    Ok((bundle, history))
}

#[derive(Clone, Debug)]
pub struct CvOutcome {
    pub plan: FoldPlan,
    pub folds: Vec<ConfusionMatrix>,
    pub histories: Vec<TrainHistory>,
}

/// Hook applied to each freshly prepared model before training.
pub type Adapt<'a> = &'a (dyn Fn(&mut ModelBundle) -> Result<()> + Sync);

/// k-fold train/evaluate. Fold `i` trains with `derive_seed(seed, "fold{i}")`.
/// The vocabulary and sequence length come from the training part in strict
/// mode and from the whole corpus in fidelity mode.
pub fn cross_validate(
    corpus: &LabeledCorpus,
    protocol: &CvProtocol,
    spec: &FitSpec,
    seed: u64,
    adapt: Option<Adapt<'_>>,
) -> Result<CvOutcome> {
    let plan = protocol.plan(corpus)?;
    let mut folds = Vec::with_capacity(plan.k);
    let mut histories = Vec::with_capacity(plan.k);
    for fold in 0..plan.k {
        let (train_part, test_part) = protocol.fold_data(corpus, &plan, fold)?;
        let fold_seed = fold_seed(seed, fold);
        let vocab_corpus = match protocol.mode {
            SplitMode::Strict => &train_part,
            SplitMode::Fidelity => corpus,
        };
        let mut bundle = prepare(vocab_corpus, spec, fold_seed)?;
        if let Some(adapt) = adapt {
            adapt(&mut bundle)?;
        }
        histories.push(train(&mut bundle, &train_part, &spec.preprocessor, fold_seed)?);
        folds.push(evaluate(&bundle, &test_part, &spec.preprocessor)?);
    }
    Ok(CvOutcome { plan, folds, histories })
}

pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    derive_seed(seed, &format!("fold{fold}"))
}
