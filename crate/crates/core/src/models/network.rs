use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::attention::{Attention, AttentionCache};
use crate::nn::conv::{Conv1dMaxPool, ConvCache};
use crate::nn::dense::{cross_entropy, softmax, Dense};
use crate::nn::dropout::{apply_mask, check_rate, dropout, Mode};
use crate::nn::embedding::Embedding;
use crate::nn::lstm::{Blstm, BlstmCache, Direction, Lstm, LstmCache};
use crate::nn::param::Param;
use crate::nn::tensor::{Real, Tensor};

/// The four classifier architectures. They share the embedding, dropout, dense
/// and softmax layers and differ only in the layer between the two dropouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Architecture {
    #[serde(rename = "CNN")]
    Cnn,
    #[serde(rename = "LSTM")]
    Lstm,
    #[serde(rename = "BLSTM")]
    Blstm,
    #[serde(rename = "BLSTM_ATTN")]
    BlstmAttn,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [
        Architecture::Cnn,
        Architecture::Lstm,
        Architecture::Blstm,
        Architecture::BlstmAttn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Cnn => "CNN",
            Architecture::Lstm => "LSTM",
            Architecture::Blstm => "BLSTM",
            Architecture::BlstmAttn => "BLSTM_ATTN",
        }
    }

    /// Parameter names a network of this architecture owns, in canonical order.
    pub fn param_names(self) -> Vec<&'static str> {
        let mut names = vec!["embedding"];
        names.extend_from_slice(match self {
            Architecture::Cnn => &["conv.weight", "conv.bias"][..],
            Architecture::Lstm => &["lstm.w_input", "lstm.w_recurrent", "lstm.bias"][..],
            Architecture::Blstm => &[
                "lstm_fwd.w_input",
                "lstm_fwd.w_recurrent",
                "lstm_fwd.bias",
                "lstm_bwd.w_input",
                "lstm_bwd.w_recurrent",
                "lstm_bwd.bias",
            ][..],
            Architecture::BlstmAttn => &[
                "lstm_fwd.w_input",
                "lstm_fwd.w_recurrent",
                "lstm_fwd.bias",
                "lstm_bwd.w_input",
                "lstm_bwd.w_recurrent",
                "lstm_bwd.bias",
                "attention.w",
            ][..],
        });
        names.extend_from_slice(&["dense.weight", "dense.bias"]);
        names
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace(['-', ' '], "_").as_str() {
            "CNN" => Ok(Architecture::Cnn),
            "LSTM" => Ok(Architecture::Lstm),
            "BLSTM" => Ok(Architecture::Blstm),
            "BLSTM_ATTN" | "BLSTM_ATTENTION" => Ok(Architecture::BlstmAttn),
            _ => Err(Error::Config(format!("unknown architecture `{s}`"))),
        }
    }
}

/// Sizes of the layers around the embedding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerGeometry {
    pub hidden: usize,
    pub filters: usize,
    pub kernel_width: usize,
    pub dropout_embedding: f64,
    pub dropout_hidden: f64,
}

impl Default for LayerGeometry {
    fn default() -> Self {
        Self {
            hidden: 64,
            filters: 128,
            kernel_width: 3,
            dropout_embedding: 0.25,
            dropout_hidden: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Core<F> {
    Cnn(Conv1dMaxPool<F>),
    Lstm(Lstm<F>),
    Blstm(Blstm<F>),
    BlstmAttn(Blstm<F>, Attention<F>),
}

/// Embedding → dropout → core layer → dropout → dense → softmax.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<F> {
    pub architecture: Architecture,
    pub embedding: Embedding<F>,
    pub core: Core<F>,
    pub dense: Dense<F>,
    pub geometry: LayerGeometry,
}

enum CoreTrace<F> {
    Cnn(ConvCache),
    Lstm(Tensor<F>, LstmCache<F>),
    Blstm(BlstmCache<F>),
    BlstmAttn(Tensor<F>, BlstmCache<F>, AttentionCache<F>),
}

struct Trace<F> {
    x: Tensor<F>,
    embedding_mask: Option<Vec<F>>,
    core: CoreTrace<F>,
    hidden_mask: Option<Vec<F>>,
    features: Vec<F>,
    probs: Vec<F>,
}

impl<F: Real> Network<F> {
    /// Builds a network around an existing embedding table. All other parameters
    /// are drawn from a generator seeded with `seed`, so two networks with the same
    /// seed and geometry share every non-embedding parameter regardless of the
    /// embedding contents.
    pub fn new(
        architecture: Architecture,
        embedding: Tensor<F>,
        classes: usize,
        geometry: LayerGeometry,
        seed: u64,
    ) -> Result<Self> {
        check_rate(geometry.dropout_embedding)?;
        check_rate(geometry.dropout_hidden)?;
        if classes < 2 {
            return Err(Error::Config("a classifier needs at least two classes".into()));
        }
        if geometry.hidden == 0 || geometry.filters == 0 || geometry.kernel_width == 0 {
            return Err(Error::Config("hidden size, filter count and kernel width must be positive".into()));
        }
        let embedding = Embedding::new(embedding)?;
        let d = embedding.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = geometry.hidden;
        let (core, features) = match architecture {
            Architecture::Cnn => (
                Core::Cnn(Conv1dMaxPool::new(geometry.filters, geometry.kernel_width, d, &mut rng)),
                geometry.filters,
            ),
            Architecture::Lstm => (
                Core::Lstm(Lstm::new("lstm", d, h, Direction::Forward, &mut rng)),
                h,
            ),
            Architecture::Blstm => (Core::Blstm(Blstm::new(d, h, &mut rng)), 2 * h),
            Architecture::BlstmAttn => {
                let blstm = Blstm::new(d, h, &mut rng);
                let attention = Attention::new(2 * h, &mut rng);
                (Core::BlstmAttn(blstm, attention), 2 * h)
            }
        };
        let dense = Dense::new(features, classes, &mut rng);
        Ok(Self {
            architecture,
            embedding,
            core,
            dense,
            geometry,
        })
    }

    /// Reassembles a network from named tensors; the name set must be exactly
    /// the architecture's.
    pub fn from_tensors(
        architecture: Architecture,
        mut tensors: BTreeMap<String, Tensor<F>>,
        geometry: LayerGeometry,
    ) -> Result<Self> {
        let expected: Vec<&str> = architecture.param_names();
        let extra: Vec<&String> = tensors
            .keys()
            .filter(|k| !expected.contains(&k.as_str()))
            .collect();
        if !extra.is_empty() {
            return Err(Error::Bundle(format!(
                "tensors {extra:?} do not belong to architecture {architecture}"
            )));
        }
        let mut take = |name: &str| {
            tensors
                .remove(name)
                .ok_or_else(|| Error::Bundle(format!("missing tensor `{name}` for {architecture}")))
        };
        let embedding = Embedding::new(take("embedding")?)?;
        let lstm = |take: &mut dyn FnMut(&str) -> Result<Tensor<F>>, prefix: &str, dir| {
            Lstm::from_parts(
                prefix,
                take(&format!("{prefix}.w_input"))?,
                take(&format!("{prefix}.w_recurrent"))?,
                take(&format!("{prefix}.bias"))?,
                dir,
            )
        };
        let core = match architecture {
            Architecture::Cnn => Core::Cnn(Conv1dMaxPool::from_parts(
                take("conv.weight")?,
                take("conv.bias")?,
                geometry.kernel_width,
            )?),
            Architecture::Lstm => Core::Lstm(lstm(&mut take, "lstm", Direction::Forward)?),
            Architecture::Blstm | Architecture::BlstmAttn => {
                let blstm = Blstm {
                    forward: lstm(&mut take, "lstm_fwd", Direction::Forward)?,
                    backward: lstm(&mut take, "lstm_bwd", Direction::Backward)?,
                };
                if architecture == Architecture::Blstm {
                    Core::Blstm(blstm)
                } else {
                    Core::BlstmAttn(blstm, Attention::from_vector(take("attention.w")?))
                }
            }
        };
        let dense = Dense::from_parts(take("dense.weight")?, take("dense.bias")?)?;
        let net = Self {
            architecture,
            embedding,
            core,
            dense,
            geometry,
        };
        net.check_consistency()?;
        Ok(net)
    }

    fn check_consistency(&self) -> Result<()> {
        let d = self.embedding.dim();
        let (in_dim, width) = match &self.core {
            Core::Cnn(c) => (c.input_dim, c.filters()),
            Core::Lstm(l) => (l.input_dim(), l.hidden()),
            Core::Blstm(b) => (b.forward.input_dim(), 2 * b.hidden()),
            Core::BlstmAttn(b, a) => {
                if a.w.value.len() != 2 * b.hidden() {
                    return Err(Error::shape("network", "attention width != 2·hidden"));
                }
                (b.forward.input_dim(), 2 * b.hidden())
            }
        };
        if let Core::Blstm(b) | Core::BlstmAttn(b, _) = &self.core {
            if b.backward.input_dim() != d || b.backward.hidden() != b.hidden() {
                return Err(Error::shape("network", "forward and backward LSTMs disagree"));
            }
        }
        if in_dim != d {
            return Err(Error::shape("network", format!("core expects {in_dim} inputs, embedding has {d}")));
        }
        if self.dense.inputs() != width {
            return Err(Error::shape(
                "network",
                format!("dense expects {} features, core yields {width}", self.dense.inputs()),
            ));
        }
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.dense.classes()
    }

    pub fn params(&self) -> Vec<&Param<F>> {
        let mut p = vec![&self.embedding.table];
        match &self.core {
            Core::Cnn(c) => p.extend(c.params()),
            Core::Lstm(l) => p.extend(l.params()),
            Core::Blstm(b) => p.extend(b.params()),
            Core::BlstmAttn(b, a) => {
                p.extend(b.params());
                p.extend(a.params());
            }
        }
        p.extend(self.dense.params());
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        let mut p = vec![&mut self.embedding.table];
        match &mut self.core {
            Core::Cnn(c) => p.extend(c.params_mut()),
            Core::Lstm(l) => p.extend(l.params_mut()),
            Core::Blstm(b) => p.extend(b.params_mut()),
            Core::BlstmAttn(b, a) => {
                p.extend(b.params_mut());
                p.extend(a.params_mut());
            }
        }
        p.extend(self.dense.params_mut());
        p
    }

    pub fn zero_grads(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }

    /// Same network with every tensor converted to another precision.
    pub fn cast<G: Real>(&self) -> Network<G> {
        let tensors = self
            .params()
            .into_iter()
            .map(|p| (p.name.clone(), p.value.cast::<G>()))
            .collect();
        Network::from_tensors(self.architecture, tensors, self.geometry)
            .expect("casting preserves the parameter schema")
    }

    fn forward<R: Rng + ?Sized>(&self, indices: &[usize], mut rng: Option<&mut R>) -> Result<Trace<F>> {
        let emb = self.embedding.forward(indices)?;
        let mode = if rng.is_some() { Mode::Train } else { Mode::Eval };
        let (x, embedding_mask) = match rng.as_deref_mut() {
            Some(r) => dropout(&emb, self.geometry.dropout_embedding, mode, r)?,
            None => (emb, None),
        };
        let steps = x.rows();
        let (core, features) = match &self.core {
            Core::Cnn(conv) => {
                let (out, cache) = conv.forward(&x)?;
                (CoreTrace::Cnn(cache), out.into_data())
            }
            Core::Lstm(lstm) => {
                let (out, cache) = lstm.forward(&x)?;
                let last = out.row(steps - 1).to_vec();
                (CoreTrace::Lstm(out, cache), last)
            }
            Core::Blstm(blstm) => {
                let (out, cache) = blstm.forward(&x)?;
                let h = blstm.hidden();
                let mut feat = out.row(steps - 1)[..h].to_vec();
                feat.extend_from_slice(&out.row(0)[h..]);
                (CoreTrace::Blstm(cache), feat)
            }
            Core::BlstmAttn(blstm, attention) => {
                let (states, cache) = blstm.forward(&x)?;
                let (out, att) = attention.forward(&states)?;
                (CoreTrace::BlstmAttn(states, cache, att), out.into_data())
            }
        };
        let (dropped, hidden_mask) = match rng {
            Some(r) => {
                let t = Tensor::from_vec(&[features.len()], features.clone())?;
                let (out, mask) = dropout(&t, self.geometry.dropout_hidden, mode, r)?;
                (out.into_data(), mask)
            }
            None => (features.clone(), None),
        };
        let probs = softmax(&self.dense.logits(&dropped)?);
        Ok(Trace {
            x,
            embedding_mask,
            core,
            hidden_mask,
            features: dropped,
            probs,
        })
    }

    /// Class probabilities with dropout disabled.
    pub fn predict(&self, indices: &[usize]) -> Result<Vec<F>> {
        Ok(self.forward::<ChaCha8Rng>(indices, None)?.probs)
    }

    /// Forward and backward pass for one example, accumulating gradients into
    /// every parameter. Dropout is active iff `rng` is given. Returns the loss.
    pub fn accumulate_gradients<R: Rng + ?Sized>(
        &mut self,
        indices: &[usize],
        target: usize,
        rng: Option<&mut R>,
    ) -> Result<F> {
        let trace = self.forward(indices, rng)?;
        let (loss, dlogits) = cross_entropy(&trace.probs, target)?;
        let mut dfeat = self.dense.backward(&trace.features, &dlogits);
        apply_mask(&mut dfeat, trace.hidden_mask.as_deref());
        let x = &trace.x;
        let steps = x.rows();
        let mut gx = match (&mut self.core, &trace.core) {
            (Core::Cnn(conv), CoreTrace::Cnn(cache)) => conv.backward(x, cache, &dfeat),
            (Core::Lstm(lstm), CoreTrace::Lstm(out, cache)) => {
                let mut g = Tensor::zeros(out.shape());
                g.row_mut(steps - 1).copy_from_slice(&dfeat);
                lstm.backward(x, out, cache, &g)
            }
            (Core::Blstm(blstm), CoreTrace::Blstm(cache)) => {
                let h = blstm.hidden();
                let mut g = Tensor::zeros(&[steps, 2 * h]);
                g.row_mut(steps - 1)[..h].copy_from_slice(&dfeat[..h]);
                g.row_mut(0)[h..].copy_from_slice(&dfeat[h..]);
                blstm.backward(x, cache, &g)
            }
            (Core::BlstmAttn(blstm, attention), CoreTrace::BlstmAttn(states, cache, att)) => {
                let dh = attention.backward(states, att, &dfeat);
                blstm.backward(x, cache, &dh)
            }
            _ => unreachable!("trace variant always matches the core"),
        };
        apply_mask(gx.data_mut(), trace.embedding_mask.as_deref());
        self.embedding.backward(indices, &gx);
        Ok(loss)
    }

    /// Loss for one example with dropout disabled, without touching gradients.
    pub fn loss(&self, indices: &[usize], target: usize) -> Result<F> {
        let probs = self.predict(indices)?;
        Ok(cross_entropy(&probs, target)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init::uniform;

    fn toy(arch: Architecture, seed: u64) -> Network<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let table = uniform(&[10, 4], 0.5, &mut rng);
        let geometry = LayerGeometry {
            hidden: 3,
            filters: 5,
            kernel_width: 3,
            ..LayerGeometry::default()
        };
        Network::new(arch, table, 3, geometry, seed).unwrap()
    }

    #[test]
    fn parameter_schema_per_architecture() {
        for arch in Architecture::ALL {
            let net = toy(arch, 1);
            let names: Vec<&str> = net.params().iter().map(|p| p.name.as_str()).collect();
            assert_eq!(names, arch.param_names());
        }
    }

    #[test]
    fn same_seed_same_parameters() {
        for arch in Architecture::ALL {
            assert_eq!(toy(arch, 9), toy(arch, 9));
        }
    }

    #[test]
    fn architecture_names_round_trip() {
        for arch in Architecture::ALL {
            assert_eq!(arch.as_str().parse::<Architecture>().unwrap(), arch);
        }
        assert!("RNNX".parse::<Architecture>().is_err());
    }

    #[test]
    fn from_tensors_rejects_foreign_tensor() {
        let net = toy(Architecture::BlstmAttn, 2);
        let tensors: BTreeMap<String, Tensor<f64>> = net
            .params()
            .into_iter()
            .map(|p| (p.name.clone(), p.value.clone()))
            .collect();
        assert!(Network::from_tensors(Architecture::Blstm, tensors.clone(), net.geometry).is_err());
        let rebuilt = Network::from_tensors(Architecture::BlstmAttn, tensors, net.geometry).unwrap();
        assert_eq!(rebuilt, net);
    }

    #[test]
    fn probabilities_sum_to_one() {
        for arch in Architecture::ALL {
            let net = toy(arch, 4);
            let p = net.predict(&[0, 3, 5, 9, 1, 2]).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
