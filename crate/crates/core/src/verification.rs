//! The gradient verification suite: every layer and every architecture against
//! central finite differences in 64-bit with dropout off.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::models::network::{Architecture, LayerGeometry, Network};
use crate::nn::gradcheck::{
    grad_check, AttentionProbe, BlstmProbe, ConvProbe, EmbeddingProbe, GradCheckReport, LinearProbe, LstmProbe,
    Objective, SoftmaxCrossEntropyProbe,
};
use crate::nn::init::uniform;
use crate::nn::lstm::Direction;
use crate::nn::param::Param;

pub const TOLERANCE: f64 = 1e-3;
/// Finite-difference step for the suite. The LSTM truncation error at 1e-3 sits
/// right at the tolerance, and the CNN max-pool kinks get crossed.
pub const SUITE_STEP: f64 = 1e-4;

/// Toy shape for whole-network checks.
pub const TOY_STEPS: usize = 6;
pub const TOY_DIM: usize = 4;
pub const TOY_HIDDEN: usize = 3;
pub const TOY_CLASSES: usize = 2;
const TOY_VOCAB: usize = 10;

/// Summed cross-entropy of a network over a few fixed sequences.
pub struct NetworkObjective {
    pub network: Network<f64>,
    pub examples: Vec<(Vec<usize>, usize)>,
}

impl NetworkObjective {
    pub fn toy(architecture: Architecture, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = uniform(&[TOY_VOCAB, TOY_DIM], 0.5, &mut rng);
        let geometry = LayerGeometry {
            hidden: TOY_HIDDEN,
            filters: 5,
            kernel_width: 3,
            dropout_embedding: 0.0,
            dropout_hidden: 0.0,
        };
        let network = Network::new(architecture, table, TOY_CLASSES, geometry, rng.random())?;
        let examples = (0..TOY_CLASSES)
            .map(|target| {
                let mut seq: Vec<usize> = (0..TOY_STEPS).map(|_| rng.random_range(1..TOY_VOCAB)).collect();
                seq[0] = 0;
                (seq, target)
            })
            .collect();
        Ok(Self { network, examples })
    }
}

impl Objective for NetworkObjective {
    fn params_mut(&mut self) -> Vec<&mut Param<f64>> {
        self.network.params_mut()
    }

    fn loss(&mut self) -> Result<f64> {
        self.examples
            .iter()
            .map(|(seq, target)| self.network.loss(seq, *target))
            .sum()
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.network.zero_grads();
        let mut total = 0.0;
        for (seq, target) in &self.examples {
            total += self.network.accumulate_gradients::<ChaCha8Rng>(seq, *target, None)?;
        }
        Ok(total)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub seed: u64,
    pub report: GradCheckReport,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.report.max_rel_error < TOLERANCE
    }
}

fn check(name: &str, seed: u64, objective: &mut dyn Objective) -> Result<CheckOutcome> {
    Ok(CheckOutcome {
        name: name.to_owned(),
        seed,
        report: grad_check(objective, SUITE_STEP)?,
    })
}

/// One check per layer at the shapes used in the layer documentation.
pub fn layer_checks(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check("embedding", seed, &mut EmbeddingProbe::new(7, 3, 5, seed))?,
        check("conv1d+maxpool", seed, &mut ConvProbe::new(5, 8, 4, 3, seed))?,
        check("lstm", seed, &mut LstmProbe::new(4, 3, 2, Direction::Forward, seed))?,
        check("lstm (reverse)", seed, &mut LstmProbe::new(4, 3, 2, Direction::Backward, seed))?,
        check("blstm", seed, &mut BlstmProbe::new(4, 3, 2, seed))?,
        check("attention", seed, &mut AttentionProbe::new(5, 4, seed))?,
        check("dense", seed, &mut LinearProbe::new(4, 3, seed))?,
        check("softmax+cross-entropy", seed, &mut SoftmaxCrossEntropyProbe::new(4, 3, seed))?,
    ])
}

/// One check per architecture at the toy shape.
pub fn architecture_checks(seed: u64) -> Result<Vec<CheckOutcome>> {
    Architecture::ALL
        .into_iter()
        .map(|arch| check(arch.as_str(), seed, &mut NetworkObjective::toy(arch, seed)?))
        .collect()
}

/// Layer and architecture checks for seeds `0..seeds`.
pub fn run_suite(seeds: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for seed in 0..seeds {
        out.extend(layer_checks(seed)?);
        out.extend(architecture_checks(seed)?);
    }
    Ok(out)
}
