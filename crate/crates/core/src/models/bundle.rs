use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{LabeledCorpus, SplitMode};
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::models::network::{Architecture, LayerGeometry, Network};
use crate::nn::adam::{AdamConfig, AdamState};
use crate::nn::param::Param;
use crate::text::{encode, EncodedPost, Preprocessor, Vocabulary, PAD};

/// Training hyperparameters recorded with every bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub embedding_dim: usize,
    pub geometry: LayerGeometry,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            embedding_dim: 50,
            geometry: LayerGeometry::default(),
            epochs: 10,
            batch_size: 128,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset: String,
    pub seed: u64,
    pub mode: SplitMode,
    /// `random`, or the name of the pretrained vector set.
    pub embedding: String,
    pub embedding_file_checksum: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrainHistory {
    pub epoch_loss: Vec<f64>,
    pub seconds: f64,
}

/// Encoded posts plus the vocabulary they were encoded against.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedSet {
    pub vocab_checksum: String,
    pub max_len: usize,
    pub posts: Vec<EncodedPost>,
    pub labels: Vec<usize>,
}

impl EncodedSet {
    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }
}

/// Preprocesses and encodes every post of a corpus.
pub fn encode_corpus(
    corpus: &LabeledCorpus,
    vocab: &Vocabulary,
    max_len: usize,
    preprocessor: &Preprocessor,
) -> EncodedSet {
    let posts = corpus
        .posts
        .iter()
        .map(|p| encode(&preprocessor.preprocess(&p.text), vocab, max_len))
        .collect();
    EncodedSet {
        vocab_checksum: vocab.checksum(),
        max_len,
        posts,
        labels: corpus.labels(),
    }
}

/// Architecture, vocabulary, trained parameters and everything needed to
/// reproduce or reuse them.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle {
    pub network: Network<f32>,
    pub vocab: Vocabulary,
    pub classes: Vec<String>,
    pub max_len: usize,
    pub hyper: Hyperparams,
    pub provenance: Provenance,
}

/// Assembles a trainable model around `embedding`. Every non-embedding parameter
/// comes from `seed`.
pub fn build_model(
    architecture: Architecture,
    vocab: &Vocabulary,
    embedding: EmbeddingMatrix,
    classes: &[String],
    max_len: usize,
    hyper: &Hyperparams,
    seed: u64,
) -> Result<ModelBundle> {
    if embedding.vocab_checksum != vocab.checksum() || embedding.rows() != vocab.len() {
        return Err(Error::Config("embedding matrix is not bound to this vocabulary".into()));
    }
    if embedding.dim() != hyper.embedding_dim {
        return Err(Error::Config(format!(
            "embedding dimension {} != configured {}",
            embedding.dim(),
            hyper.embedding_dim
        )));
    }
    if max_len == 0 {
        return Err(Error::Config("sequence length must be at least 1".into()));
    }
    if architecture == Architecture::Cnn && max_len < hyper.geometry.kernel_width {
        return Err(Error::Config(format!(
            "sequence length {max_len} shorter than CNN kernel width {}",
            hyper.geometry.kernel_width
        )));
    }
    let network = Network::new(architecture, embedding.table, classes.len(), hyper.geometry, seed)?;
    Ok(ModelBundle {
        network,
        vocab: vocab.clone(),
        classes: classes.to_vec(),
        max_len,
        hyper: hyper.clone(),
        provenance: Provenance {
            seed,
            ..Provenance::default()
        },
    })
}

impl ModelBundle {
    pub fn architecture(&self) -> Architecture {
        self.network.architecture
    }

    pub fn encode(&self, corpus: &LabeledCorpus, preprocessor: &Preprocessor) -> EncodedSet {
        encode_corpus(corpus, &self.vocab, self.max_len, preprocessor)
    }

    fn check_encoding(&self, data: &EncodedSet) -> Result<()> {
        if data.vocab_checksum != self.vocab.checksum() {
            return Err(Error::Config(
                "encoded posts use a different vocabulary than the model".into(),
            ));
        }
        if data.max_len != self.max_len || data.posts.iter().any(|p| p.indices.len() != self.max_len) {
            return Err(Error::Config(format!(
                "encoded sequence length differs from model length {}",
                self.max_len
            )));
        }
        Ok(())
    }

    /// Mini-batch training with Adam and categorical cross-entropy. Each epoch
    /// visits the examples in a freshly shuffled order; dropout is active and the
    /// padding row of the embedding never moves.
    pub fn train(&mut self, data: &EncodedSet, seed: u64) -> Result<TrainHistory> {
        self.check_encoding(data)?;
        if let Some(&bad) = data.labels.iter().find(|&&l| l >= self.classes.len()) {
            return Err(Error::Config(format!("label {bad} outside the model's classes")));
        }
        if self.hyper.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut adam = AdamState::<f32>::new(self.hyper.adam);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut history = TrainHistory::default();
        for epoch in 0..self.hyper.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0f64;
            for (batch, chunk) in order.chunks(self.hyper.batch_size).enumerate() {
                self.network.zero_grads();
                let mut batch_loss = 0.0f64;
                for &i in chunk {
                    let loss = self.network.accumulate_gradients(
                        &data.posts[i].indices,
                        data.labels[i],
                        Some(&mut rng),
                    )?;
                    batch_loss += f64::from(loss);
                }
                if !batch_loss.is_finite() {
                    return Err(Error::Diverged {
                        epoch,
                        batch,
                        loss: batch_loss,
                    });
                }
                epoch_loss += batch_loss;
                let scale = 1.0 / chunk.len() as f32;
                for p in self.network.params_mut() {
                    p.grad.data_mut().iter_mut().for_each(|g| *g *= scale);
                }
                self.network.embedding.freeze_row_grad(PAD);
                let mut params: Vec<&mut Param<f32>> = self.network.params_mut();
                adam.step(&mut params)?;
            }
            history.epoch_loss.push(epoch_loss / data.len().max(1) as f64);
        }
        history.seconds = start.elapsed().as_secs_f64();
        Ok(history)
    }

    /// Class probabilities per post, dropout off.
    pub fn predict(&self, data: &EncodedSet) -> Result<Vec<Vec<f32>>> {
        self.check_encoding(data)?;
        data.posts
            .iter()
            .map(|p| self.network.predict(&p.indices))
            .collect()
    }

    pub fn predict_labels(&self, data: &EncodedSet) -> Result<Vec<usize>> {
        Ok(self.predict(data)?.iter().map(|p| argmax(p)).collect())
    }
}

/// Index of the largest value; the first one on ties.
pub fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
