//! Deep-learning cyberbullying detection.
//!
//! Four neural text classifiers (CNN, LSTM, BLSTM and BLSTM with attention) built on
//! from-scratch layers, three embedding initialisations, minority-class
//! oversampling, stratified cross-validation and three transfer-learning modes.
//! Everything is deterministic given a seed.

pub mod datasets;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod models;
pub mod nn;
pub mod pipeline;
pub mod synthetic;
pub mod text;
pub mod transfer;
pub mod verification;

pub use error::{Error, Result};
