//! Differentiable building blocks: tensors, layers, loss, optimizer and
//! gradient verification.

pub mod adam;
pub mod attention;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod embedding;
pub mod gradcheck;
pub mod init;
pub mod lstm;
pub mod param;
pub mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use dropout::Mode;
pub use param::Param;
pub use tensor::{Real, Tensor};
